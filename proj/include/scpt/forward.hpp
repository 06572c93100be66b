#pragma once

#include <vector>

#include "scpt/losses.hpp"
#include "scpt/model.hpp"
#include "scpt/svd.hpp"

namespace scpt {

// One full-model pass over a clip. The specific branch runs in the
// training path; invariant inference drops it entirely, so its output is
// a pure function of the frozen backbone, MCP and the shared branch.
struct ForwardOptions {
  bool specific_active = true;                 // false = invariant inference
  const std::vector<Tensor>* fixed_subspace = nullptr;  // per-frame V_s override
  std::vector<Tensor>* captured_subspace = nullptr;     // out: per-frame V_s
  std::vector<VarId>* attention_probs = nullptr;        // out: softmax rows
};

struct FrameTrace {
  std::vector<VarId> shared_corr;    // per layer, N x D (empty without DSSA)
  std::vector<VarId> specific_corr;  // per layer, N x D (train path only)
  VarId layer_l_input = -1;          // X^L patch rows
  VarId cls_into_last = -1;          // class row entering the last layer
  VarId cls_out = -1;                // class row of H^L
  VarId patch_out = -1;              // patch rows of H^L
  VarId projected = -1;              // CLS * V_s (or raw CLS without DSSA)
  VarId specific_cls = -1;           // specific branch on the class row
  VarId shared_cls = -1;             // shared branch on the class row
};

struct ForwardResult {
  VarId logits = -1;           // 1 x num_classes
  VarId sub_logits = -1;       // 1 x num_subjects (train path with DSSA)
  VarId shared_cls_mean = -1;  // 1 x D analysis feature (with DSSA)
  std::vector<FrameTrace> frames;
};

// frames: T x C x H x W in [0,1]; tfr: normalized tfr_size x tfr_size grid.
ForwardResult scpt_forward(ModelBinding& mb, const Tensor& frames, const Tensor& tfr,
                           const ForwardOptions& opt);

// Frozen-backbone-only reference: patch embed + class token + positional
// encoding + encoder stack, no prompts, no adapters.
struct BackboneResult {
  VarId cls_out = -1;
  VarId patch_out = -1;  // N x D after the last layer
};
BackboneResult backbone_forward(ModelBinding& mb, const Tensor& frame_chw);

// Builds the four-term objective on the tape. Per-frame penalties are
// averaged over the T frames. sub_label < 0 skips subject supervision.
struct LossVars {
  VarId task = -1;
  VarId specific = -1;  // -1 when the specific branch is off
  VarId orth = -1;
  VarId sub = -1;
  VarId total = -1;
};
LossVars build_loss(ModelBinding& mb, const ForwardResult& fwd, int label, int sub_label,
                    const LossWeights& w, LossNorm norm);

// Report with plain values pulled off the tape (total re-derived to hold
// the total == task + sum lambda_i * term_i invariant exactly).
LossReport read_loss_report(const Graph& g, const LossVars& lv, const ForwardResult& fwd,
                            const LossWeights& w, LossNorm norm);

}  // namespace scpt
