#pragma once

#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

namespace lacelab {

struct CriterionResult {
  int id = 0;
  std::string title;
  bool pass = false;
  double seconds = 0;
  double budget_seconds = 0;
  std::string detail;
  nlohmann::json data;
};

/// Runs the listed acceptance criteria (all of 1..11 when empty). Each result
/// is handed to `on_result` as soon as it is available.
std::vector<CriterionResult> run_acceptance(const std::vector<int>& ids = {},
                                            const std::function<void(const CriterionResult&)>& on_result = {});

/// "CRITERION <n> PASS|FAIL <title> (<seconds>s) <detail>"
std::string format_line(const CriterionResult& r);

nlohmann::json to_json(const std::vector<CriterionResult>& rs);

}  // namespace lacelab
