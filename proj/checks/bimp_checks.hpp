// Oracle-backed check suites shared by `plan check` and the acceptance
// binary.
#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace bimp::checks {

struct CheckOptions {
  std::string scenario_dir = BIMP_SOURCE_DIR "/scenarios";
};

struct CheckResult {
  std::string suite;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

/// A named check; `criterion` is the acceptance criterion it decides, if any.
struct Check {
  std::string suite;
  std::string name;
  std::optional<int> criterion;
  std::function<CheckResult(const CheckOptions&)> run;
};

const std::vector<Check>& registry();
std::vector<std::string> suite_names();

/// Runs one check, timing it and turning exceptions into failures.
CheckResult run_check(const Check& check, const CheckOptions& options);
std::vector<CheckResult> run_suite(const std::string& suite, const CheckOptions& options);

}  // namespace bimp::checks
