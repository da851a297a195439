// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.
#include <fmt/format.h>

#include <map>

#include "bimp_checks.hpp"

int main(int argc, char** argv) {
  bimp::checks::CheckOptions options;
  if (argc > 1) options.scenario_dir = argv[1];

  std::map<int, std::vector<const bimp::checks::Check*>> by_criterion;
  for (const auto& c : bimp::checks::registry()) {
    if (c.criterion) by_criterion[*c.criterion].push_back(&c);
  }

  bool all = true;
  for (const auto& [criterion, checks] : by_criterion) {
    bool ok = true;
    std::string detail;
    double seconds = 0.0;
    for (const auto* check : checks) {
      const auto r = bimp::checks::run_check(*check, options);
      ok = ok && r.passed;
      seconds += r.seconds;
      detail += fmt::format("{}/{}: {}", r.suite, r.name, r.detail);
    }
    all = all && ok;
    fmt::print("criterion {} {} ({:.2f} s) {}\n", criterion, ok ? "PASS" : "FAIL", seconds, detail);
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
