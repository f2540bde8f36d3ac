#pragma once

#include <ostream>
#include <string>
#include <vector>

// Acceptance suite: end-to-end checks of the solver stack against dense
// oracles and pinned experiment targets. "quick" runs desk-scale variants of
// the expensive experiments; "full" runs them at reference scale.

namespace pgkb::verify {

enum class Level { Quick, Full };

struct CriterionResult {
  std::string id;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

std::vector<CriterionResult> run_acceptance(Level level);

bool all_passed(const std::vector<CriterionResult>& results);

// One "[PASS]/[FAIL] id name: detail [Xs]" line per criterion plus a
// summary line.
void print_report(const std::vector<CriterionResult>& results,
                  std::ostream& os);

}  // namespace pgkb::verify
