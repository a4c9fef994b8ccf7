#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace nsieve {

enum class AcceptanceProfile { Smoke, Desk, Deep };

AcceptanceProfile acceptance_profile_from_string(const std::string& s);

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

struct AcceptanceOptions {
  AcceptanceProfile profile = AcceptanceProfile::Desk;
  std::uint64_t seed = 20250809;
  unsigned threads = 0;
  std::vector<int> only;  // run just these criterion ids when nonempty
};

// Runs the statistical acceptance suite and streams one pass/fail line per
// criterion to `out`. Desk is the reference profile (spec-grade replica
// counts and tolerances); smoke shrinks replica counts for quick sanity with
// correspondingly widened noise bands; deep scales replicas up.
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opts,
                                            std::ostream& out);

bool all_passed(const std::vector<CriterionResult>& results);

}  // namespace nsieve
