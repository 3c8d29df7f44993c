#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "solvflow/flow.hpp"
#include "solvflow/io.hpp"
#include "solvflow/matcore.hpp"

namespace solvflow {

struct ValidateOptions {
  std::uint64_t seed = 20240611;
  /// Multiplies every trial count (at least one trial is always run).
  double scale = 1.0;
  /// Worker threads for independent checks; 0 means hardware concurrency.
  unsigned threads = 0;
  /// The gradient field under test; replaceable so a negative control can
  /// inject a faulty implementation.
  std::function<Mat(const Mat&)> gradient_field = gradient_rhs;
};

struct CheckResult {
  std::string name;
  bool passed = false;
  /// Worst residual seen, or the number of mismatches for equivalence checks.
  double worst = 0;
  double tolerance = 0;
  std::size_t trials = 0;
  std::string detail;
};

struct ValidateReport {
  std::uint64_t seed = 0;
  std::vector<CheckResult> checks;

  bool all_passed() const;
};

/// Names of every check, in report order.
std::vector<std::string> validation_check_names();

/// Runs every invariant check. Each check draws from its own generator seeded
/// by (seed, check index), so the report is identical for any thread count.
ValidateReport run_validation(const ValidateOptions& opts = {});

io::Json to_json(const ValidateReport& r);

// Shared random constructions (also used by the acceptance tests).
namespace sample {

using Rng = std::mt19937_64;

Mat gaussian(Rng& rng, std::size_t n);
/// Haar orthogonal matrix (QR of a Gaussian matrix with sign fix).
Mat orthogonal(Rng& rng, std::size_t n);
Mat skew(Rng& rng, std::size_t n);
/// Q diag-blocks Q^t with real eigenvalues and 2x2 rotation-scaling blocks.
Mat normal(Rng& rng, std::size_t n);
/// Q (direct sum of sl2 nilpositive blocks) Q^t: [A,[A,A^t]] = -2A.
Mat nilpotent_soliton(Rng& rng, std::size_t n);
/// Gaussian with the trace removed.
Mat traceless(Rng& rng, std::size_t n);

}  // namespace sample

}  // namespace solvflow
