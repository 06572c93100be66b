#include "scpt/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace scpt {

ModelConfig tiny_model_config() {
  ModelConfig cfg;
  cfg.layers = 2;
  cfg.dim = 8;
  cfg.heads = 2;
  cfg.patch = 16;
  cfg.frame_size = 32;  // N = 4
  cfg.frame_channels = 3;
  cfg.frames_per_clip = 2;
  cfg.tfr_size = 32;
  cfg.physio_stem = 4;
  cfg.mcp = true;
  cfg.dssa = true;
  cfg.pos_every_layer = true;
  cfg.mcp_latent = 0;   // D/2 = 4
  cfg.dssa_rank = 2;    // R < D/2
  cfg.dssa_scale = 0.1;
  cfg.svd_rank = 4;     // min(N, D)
  return cfg;
}

namespace {

struct CheckSetup {
  ModelState model;
  Tensor frames;
  Tensor tfr;
  int label = 1;
  int sub_label = 1;
  LossWeights weights;  // Table defaults (0.1, 0.1, 0.6)
  LossNorm norm = LossNorm::kMean;
};

CheckSetup make_setup(uint64_t seed) {
  CheckSetup s{ModelState::init(tiny_model_config(), seed, 3), Tensor(), Tensor()};
  // random restart away from the zero initializations: |.| and relu kinks
  // sit exactly on zero otherwise
  s.model.randomize_all(seed);
  const ModelConfig& cfg = s.model.cfg;
  Rng rng(mix_seed(seed, 0x6dc4u));
  s.frames = Tensor({cfg.frames_per_clip, cfg.frame_channels, cfg.frame_size, cfg.frame_size});
  for (double& v : s.frames.data) v = rng.uniform();
  s.tfr = Tensor({cfg.tfr_size, cfg.tfr_size});
  for (double& v : s.tfr.data) v = rng.uniform();
  return s;
}

double loss_value(CheckSetup& s, const std::vector<Tensor>& fixed_vs) {
  Graph g;
  ModelBinding mb(g, s.model);
  ForwardOptions opt;
  opt.fixed_subspace = &fixed_vs;
  ForwardResult fwd = scpt_forward(mb, s.frames, s.tfr, opt);
  LossVars lv = build_loss(mb, fwd, s.label, s.sub_label, s.weights, s.norm);
  return g.val(lv.total).data[0];
}

}  // namespace

GradCheckResult run_gradcheck(uint64_t seed, double tolerance, int probes_per_tensor, double step) {
  CheckSetup s = make_setup(seed);

  // base pass: analytic gradients and the frozen per-frame subspaces
  std::vector<Tensor> base_vs;
  s.model.zero_grads();
  {
    Graph g;
    ModelBinding mb(g, s.model);
    ForwardOptions opt;
    opt.captured_subspace = &base_vs;
    ForwardResult fwd = scpt_forward(mb, s.frames, s.tfr, opt);
    LossVars lv = build_loss(mb, fwd, s.label, s.sub_label, s.weights, s.norm);
    g.backward(lv.total);
  }

  // The objective contains relu and |.| terms, so a central difference is
  // only valid when no kink sits inside the probe interval. On a smooth
  // stretch, estimates at adjacent step scales agree to O(h^2); across a
  // kink they drift at the 1e-3..1e-1 level. Each probe walks a ladder of
  // shrinking steps and takes the first self-consistent pair, falling
  // back to a neighboring index when the whole ladder is contaminated.
  auto central_diff = [&](Tensor& value, int64_t idx, double h) {
    const double saved = value.data[idx];
    value.data[idx] = saved + h;
    const double up = loss_value(s, base_vs);
    value.data[idx] = saved - h;
    const double down = loss_value(s, base_vs);
    value.data[idx] = saved;
    return (up - down) / (2.0 * h);
  };

  auto probe_entry = [&](Tensor& value, int64_t idx, double* out) {
    double d_prev = central_diff(value, idx, step);
    for (int level = 1; level < 4; ++level) {
      const double d_next = central_diff(value, idx, step / static_cast<double>(1 << level));
      const double agree =
          std::fabs(d_prev - d_next) / std::max({std::fabs(d_prev), std::fabs(d_next), 1e-9});
      if (agree < 1e-3) {
        *out = d_next;
        return true;
      }
      d_prev = d_next;
    }
    *out = d_prev;
    return false;
  };

  GradCheckResult res;
  for (auto& e : s.model.params.entries()) {
    if (e.frozen) continue;
    GradCheckEntry entry;
    entry.tensor = e.name;
    const int64_t numel = e.value.numel();
    const int probes = static_cast<int>(std::min<int64_t>(numel, probes_per_tensor));
    for (int pi = 0; pi < probes; ++pi) {
      double err = -1.0;
      for (int attempt = 0; attempt < 4; ++attempt) {
        const int64_t idx = (numel * pi / probes + attempt) % numel;
        double numeric = 0.0;
        const bool clean = probe_entry(e.value, idx, &numeric);
        const double analytic = e.grad.data[idx];
        const double denom = std::max({std::fabs(numeric), std::fabs(analytic), 1e-5});
        const double this_err = std::fabs(numeric - analytic) / denom;
        if (clean) {
          err = this_err;
          break;
        }
        // every ladder level kink-contaminated: keep the best candidate
        if (err < 0.0 || this_err < err) err = this_err;
      }
      entry.max_rel_err = std::max(entry.max_rel_err, err);
    }
    res.max_rel_err = std::max(res.max_rel_err, entry.max_rel_err);
    res.per_tensor.push_back(std::move(entry));
  }
  res.pass = res.max_rel_err < tolerance;
  return res;
}

}  // namespace scpt
