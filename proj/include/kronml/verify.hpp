#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace kronml {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct VerifyOptions {
  // fast: exhaustive checks up to n = 8 plus fixed examples.
  // full: orthogonality/symmetry sweeps up to n = 14.
  bool full = false;
  int max_n = 0;  // 0 = level default (8 fast, 14 full)
  std::uint64_t seed = 12345;
  int threads = 1;
};

// Runs the invariant suites of the partition, character, Kronecker and
// dataset layers; one result per invariant.
std::vector<CheckResult> run_invariant_suite(const VerifyOptions& opt);

bool all_passed(const std::vector<CheckResult>& results);

}  // namespace kronml
