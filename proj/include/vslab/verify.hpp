#pragma once

#include <string>
#include <vector>

namespace vslab {

struct CriterionResult {
    int id{0};
    std::string name;
    bool pass{false};
    std::string detail;
    double seconds{0};
};

// Acceptance criteria as an executable suite. Suites:
//   fast         oracles and geometry (1-5)
//   reference    sweep, kick and reference invariants (6-8)
//   smoke        the desk-scale controllability run (9-10)
//   two-phase    composed steering (11)
//   determinism  byte-identical reruns (12)
//   all          everything in order
std::vector<CriterionResult> run_acceptance_suite(const std::string& suite, const std::string& outdir);

// the pinned desk-scale configuration (criterion 10)
std::string smoke_config_text();

}  // namespace vslab
