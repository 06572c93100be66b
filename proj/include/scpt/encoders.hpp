#pragma once

#include <vector>

#include "scpt/model.hpp"

namespace scpt {

enum class SampleMode { kTrain, kEval };

// Frame indices for a clip of `available` frames split into T equal
// segments: eval takes each segment's center floor((2i+1)*len/(2T)),
// train draws one index per segment from rng. Fewer than T frames pads
// by repeating the last index.
std::vector<int> sample_frame_indices(int available, int t, SampleMode mode, Rng* rng);

// Gathers the sampled frames into a T x C x H x W clip tensor.
Tensor sample_frames(const std::vector<Tensor>& video_frames, int t, SampleMode mode, Rng* rng);

// Frame f of a T x C x H x W stack as C x H x W.
Tensor frame_of(const Tensor& clip, int f);

// Raster-order patch matrix: N x (C*patch*patch), rows ordered over the
// (H/patch) x (W/patch) grid, patch entries channel-major.
Tensor im2patches(const Tensor& image, int patch);

// --- graph builders ---

// Three residual conv blocks over a C x H x W map (stem + blocks stride 2
// each: total downsampling 16), 1x1 head to cfg.dim channels.
VarId physio_encoder_forward(ModelBinding& mb, VarId tfr_chw);

// Feature map (D x h x w) -> token matrix (h*w x D), raster order.
VarId feature_map_to_tokens(Graph& g, VarId fmap);

// Linear patch embedding: tokens = patches * W + b.
VarId patch_embed_forward(ModelBinding& mb, VarId patches, const std::string& prefix);

// One pre-norm transformer encoder layer (layer index 1-based). Input and
// output are (N+1) x D with the class token in row 0. When
// attention_probs is non-null the per-head softmax outputs are appended.
VarId vit_layer_forward(ModelBinding& mb, int layer, VarId seq,
                        std::vector<VarId>* attention_probs = nullptr);

}  // namespace scpt
