#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "s3/numerics.hpp"

namespace s3 {

struct SuiteResult {
  std::string name;
  GradCheckReport report;
};

/// Finite-difference suites over a small model (d_model 8, two heads,
/// policy hidden width 16) on one synthetic document: the GAT alone, the
/// GAT with dropout, the full encoder, fusion, decoder cross-entropy, the
/// policy log-density and the end-to-end loss.
std::vector<SuiteResult> run_gradcheck_suites(std::uint64_t seed, double epsilon = 1e-3);

}  // namespace s3
