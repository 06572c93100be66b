#pragma once

#include <string>
#include <vector>

#include "scpt/forward.hpp"

namespace scpt {

// The tiny profile used for gradient checking and the behavioral runs:
// L=2, D=8, N=4 (32x32 frames, patch 16), T=2.
ModelConfig tiny_model_config();

struct GradCheckEntry {
  std::string tensor;
  double max_rel_err = 0.0;
};

struct GradCheckResult {
  double max_rel_err = 0.0;
  std::vector<GradCheckEntry> per_tensor;
  bool pass = false;
};

// Central finite differences against the analytic tape gradients for
// every trainable tensor of a randomized tiny model, full four-term loss.
// The per-frame SVD subspace is captured at the base point and held fixed
// during probing, matching its treatment as a constant during training.
GradCheckResult run_gradcheck(uint64_t seed, double tolerance = 1e-4, int probes_per_tensor = 6,
                              double step = 2e-5);

}  // namespace scpt
