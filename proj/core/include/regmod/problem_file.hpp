#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "regmod/system.hpp"

namespace regmod {

/// Contents of a problem file.
///
///   [problem] name=<str> dp=<int> dx=<int>
///   [ineq]    h<k> = <expr>      (k = 1..m in order)
///   [eq]      e<k> = <expr>      (optional)
///   [upper]   G = <expr>         (bilevel only)
///   [lower]   f = <expr>         (bilevel only)
///   [pcons]   g<j> = <expr in p> (bilevel only)
///
/// Blank lines and lines starting with '#' are ignored.
struct ProblemFile {
  ParametricSystem system;
  std::optional<Expr> upper;
  std::optional<Expr> lower;
  std::vector<Expr> pcons;
  std::vector<std::string> warnings;

  bool is_bilevel() const { return upper.has_value() && lower.has_value(); }
};

ProblemFile parse_problem(std::string_view text);
ProblemFile load_problem(const std::string& path);
std::string read_text_file(const std::string& path);

// Trimmed lines, inner whitespace runs collapsed, blank lines dropped.
std::string normalize_problem_text(std::string_view text);

}  // namespace regmod
