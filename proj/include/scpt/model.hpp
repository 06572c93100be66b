#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "scpt/config.hpp"
#include "scpt/graph.hpp"
#include "scpt/tensor.hpp"
#include "scpt/tensor_file.hpp"

namespace scpt {

// Resolved model hyperparameters. Token grid: N = (frame_size/patch)^2
// facial tokens per frame; the physio encoder downsamples its TFR input
// by 16x so tfr_size/16 must match frame_size/patch.
struct ModelConfig {
  int layers = 4;
  int dim = 64;
  int heads = 4;
  int patch = 16;
  int frame_size = 32;
  int frame_channels = 3;
  int frames_per_clip = 4;
  int tfr_size = 32;
  int physio_stem = 16;
  bool mcp = true;
  bool dssa = true;
  bool pos_every_layer = true;
  int mcp_latent = 0;  // 0 -> dim/2
  int dssa_rank = 8;
  double dssa_scale = 0.1;
  int svd_rank = 16;
  int num_classes = 2;

  static ModelConfig from_config(const Config& cfg);
  void validate() const;

  int patch_grid() const { return frame_size / patch; }
  int num_tokens() const { return patch_grid() * patch_grid(); }
  int mcp_latent_eff() const { return mcp_latent > 0 ? mcp_latent : dim / 2; }
  int mlp_hidden() const { return dim * 4; }
  int dssa_hidden() const { return dim >= 4 ? dim / 4 : 1; }
  // configured subspace rank clamped to what an N x D matrix can support
  int svd_rank_eff() const {
    int k = std::min(num_tokens(), dim);
    return std::min(svd_rank, k);
  }
};

// Named parameter tensors with their gradient buffers. Entry order is the
// canonical iteration order for initialization, the optimizer, and
// checkpoints. Names carry the freeze partition as a prefix ("frozen." /
// "train.").
class ParamStore {
 public:
  struct Entry {
    std::string name;
    Tensor value;
    Tensor grad;
    bool frozen = false;
  };

  Tensor& add(const std::string& name, Tensor value);
  Entry& entry(const std::string& name);
  const Entry& entry(const std::string& name) const;
  int index_of(const std::string& name) const;  // -1 when absent
  bool has(const std::string& name) const { return index_of(name) >= 0; }

  std::vector<Entry>& entries() { return entries_; }
  const std::vector<Entry>& entries() const { return entries_; }
  size_t size() const { return entries_.size(); }

  void zero_grads();

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, int> index_;
};

// Full model: frozen backbone (+class token, positional encoding) and the
// trainable set (physio encoder, both patch embeddings, MCP, DSSA,
// classifiers). num_subjects > 0 adds the subject head C_sub.
struct ModelState {
  ModelConfig cfg;
  int num_subjects = 0;
  ParamStore params;

  static ModelState init(const ModelConfig& cfg, uint64_t seed, int num_subjects);

  // Re-initializes every tensor (including the normally zero-initialized
  // ones) from a nonzero random draw. Gradient checking only: keeps the
  // loss away from the kinks that zero initialization sits on.
  void randomize_all(uint64_t seed);

  void zero_grads() { params.zero_grads(); }

  NamedTensors to_named() const;
  void load_named(const NamedTensors& ts);  // strict: exact name/shape match

  // Overrides frozen.* tensors from a tensor file (backbone checkpoint).
  void load_backbone(const std::string& path);
};

void save_checkpoint(const ModelState& m, const std::string& path);
// Model geometry comes from cfg; num_subjects is inferred from the stored
// subject head (0 when absent).
ModelState load_checkpoint(const std::string& path, const ModelConfig& cfg);

// Per-graph binding: hands out one node per parameter, frozen tensors as
// constants (values flow, no gradient), trainable ones as params wired to
// their gradient buffers.
class ModelBinding {
 public:
  ModelBinding(Graph& g, ModelState& m) : g_(g), m_(m), cache_(m.params.size(), -1) {}

  VarId operator()(const std::string& name);
  Graph& graph() { return g_; }
  ModelState& model() { return m_; }

 private:
  Graph& g_;
  ModelState& m_;
  std::vector<VarId> cache_;
};

}  // namespace scpt
