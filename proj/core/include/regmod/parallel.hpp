#pragma once

#include <cstddef>
#include <functional>

namespace regmod {

// Process-wide worker count. Affects speed only; every parallel loop writes
// into index-addressed slots and reduces in index order.
void set_thread_count(int n);
int thread_count();

// Calls body(i) for i in [0, n). Nested calls run serially on the caller's
// thread. The first exception (lowest index) is rethrown after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace regmod
