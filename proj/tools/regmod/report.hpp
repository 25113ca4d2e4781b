#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "regmod/bilevel.hpp"
#include "regmod/cq.hpp"
#include "regmod/projection.hpp"
#include "regmod/regularity.hpp"

namespace regmod::cli {

using Json = nlohmann::ordered_json;

inline constexpr const char* kSchemaVersion = "1";

// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view data);
std::string problem_hash(std::string_view problem_text);

Json to_json(const Vec& v);
Json to_json(const std::optional<double>& v);
Json to_json(const std::vector<Vec>& vs);

Json to_json(const ProjectionResult& r);
Json to_json(const RcrcqReport& r);
Json to_json(const ShrinkSchedule& s);
Json to_json(const RatioSample& s);
Json to_json(const RegularityReport& r);
Json to_json(const MultiplierSample& s);
Json to_json(const MultiplierBoundReport& r);
Json to_json(const LscReport& r);
Json to_json(const ConeReport& r);
Json to_json(const LowerSolution& r);
Json to_json(const PhiLipschitzReport& r);
Json to_json(const PenaltyReport& r);

struct Report {
  std::string command;
  std::optional<std::string> problem_hash;
  Json params = Json::object();
  Json result = Json::object();
  Json witnesses = Json::array();
  std::vector<std::string> warnings;
  long long wall_time_ms = 0;

  Json json() const;
};

// Two-space indented, trailing newline.
std::string dump(const Json& j);

}  // namespace regmod::cli
