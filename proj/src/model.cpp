#include "scpt/model.hpp"

#include <algorithm>
#include <cmath>

namespace scpt {

ModelConfig ModelConfig::from_config(const Config& c) {
  ModelConfig m;
  m.layers = c.get_int("model.layers");
  m.dim = c.get_int("model.dim");
  m.heads = c.get_int("model.heads");
  m.patch = c.get_int("model.patch");
  m.frame_size = c.get_int("model.frame_size");
  m.frame_channels = c.get_int("model.frame_channels");
  m.frames_per_clip = c.get_int("model.frames_per_clip");
  m.tfr_size = c.get_int("model.tfr_size");
  m.physio_stem = c.get_int("model.physio_stem");
  m.mcp = c.get_bool("model.mcp");
  m.dssa = c.get_bool("model.dssa");
  m.pos_every_layer = c.get_bool("model.pos_every_layer");
  m.mcp_latent = c.get_int("model.mcp_latent");
  m.dssa_rank = c.get_int("model.dssa_rank");
  m.dssa_scale = c.get_real("model.dssa_scale");
  m.svd_rank = c.get_int("model.svd_rank");
  m.validate();
  return m;
}

void ModelConfig::validate() const {
  if (layers < 1) throw ConfigError("model.layers must be >= 1");
  if (dim < 2) throw ConfigError("model.dim must be >= 2");
  if (heads < 1 || dim % heads != 0) throw ConfigError("model.heads must divide model.dim");
  if (frame_size % patch != 0) throw ConfigError("frame_size must be divisible by patch");
  if (frames_per_clip < 1) throw ConfigError("frames_per_clip must be >= 1");
  if (tfr_size % 16 != 0 || tfr_size / 16 != frame_size / patch)
    throw ConfigError("tfr_size/16 must equal frame_size/patch (physio grid feeds the token grid)");
  if (physio_stem < 1) throw ConfigError("physio_stem must be >= 1");
  if (mcp_latent < 0) throw ConfigError("mcp_latent must be >= 0");
  if (dssa) {
    if (dssa_rank < 1 || dssa_rank >= dim / 2)
      throw ConfigError("dssa_rank must satisfy 1 <= R < dim/2");
    if (svd_rank < 1) throw ConfigError("svd_rank must be >= 1");
  }
}

Tensor& ParamStore::add(const std::string& name, Tensor value) {
  if (index_.count(name)) throw Error("duplicate parameter name: " + name);
  Entry e;
  e.name = name;
  e.grad = Tensor(value.shape);
  e.value = std::move(value);
  e.frozen = name.rfind("frozen.", 0) == 0;
  index_[name] = static_cast<int>(entries_.size());
  entries_.push_back(std::move(e));
  return entries_.back().value;
}

ParamStore::Entry& ParamStore::entry(const std::string& name) {
  int i = index_of(name);
  if (i < 0) throw Error("unknown parameter: " + name);
  return entries_[static_cast<size_t>(i)];
}

const ParamStore::Entry& ParamStore::entry(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw Error("unknown parameter: " + name);
  return entries_[static_cast<size_t>(it->second)];
}

int ParamStore::index_of(const std::string& name) const {
  auto it = index_.find(name);
  return it == index_.end() ? -1 : it->second;
}

void ParamStore::zero_grads() {
  for (auto& e : entries_)
    std::fill(e.grad.data.begin(), e.grad.data.end(), 0.0);
}

namespace {

Tensor normal_tensor(std::vector<int> shape, Rng& rng, double std) {
  Tensor t(std::move(shape));
  for (double& v : t.data) v = rng.normal() * std;
  quantize_f32(t);
  return t;
}

Tensor xavier_tensor(std::vector<int> shape, Rng& rng, int fan_in, int fan_out) {
  return normal_tensor(std::move(shape), rng, std::sqrt(2.0 / (fan_in + fan_out)));
}

Tensor const_tensor(std::vector<int> shape, double v) {
  Tensor t(std::move(shape));
  std::fill(t.data.begin(), t.data.end(), v);
  return t;
}

// physio channel plan: stem, 2*stem, 4*stem, then dim
struct PhysioPlan {
  int c0, c1, c2, c3;
  explicit PhysioPlan(const ModelConfig& cfg)
      : c0(cfg.physio_stem), c1(2 * cfg.physio_stem), c2(4 * cfg.physio_stem), c3(cfg.dim) {}
  int block_in(int i) const { return i == 0 ? c0 : (i == 1 ? c1 : c2); }
  int block_out(int i) const { return i == 0 ? c1 : (i == 1 ? c2 : c3); }
};

void build_params(ModelState& m, Rng& rng) {
  const ModelConfig& cfg = m.cfg;
  const int d = cfg.dim;
  const int n = cfg.num_tokens();
  const int dp = cfg.mcp_latent_eff();
  const int dh = cfg.mlp_hidden();
  auto& p = m.params;

  // frozen backbone
  p.add("frozen.x_class", normal_tensor({1, d}, rng, 1.0 / std::sqrt(d)));
  p.add("frozen.x_pos", normal_tensor({n + 1, d}, rng, 1.0 / std::sqrt(d)));
  for (int l = 1; l <= cfg.layers; ++l) {
    const std::string base = "frozen.backbone.l" + std::to_string(l) + ".";
    p.add(base + "ln1.g", const_tensor({1, d}, 1.0));
    p.add(base + "ln1.b", const_tensor({1, d}, 0.0));
    for (const char* w : {"wq", "wk", "wv", "wo"}) p.add(base + w, xavier_tensor({d, d}, rng, d, d));
    for (const char* b : {"bq", "bk", "bv", "bo"}) p.add(base + b, const_tensor({1, d}, 0.0));
    p.add(base + "ln2.g", const_tensor({1, d}, 1.0));
    p.add(base + "ln2.b", const_tensor({1, d}, 0.0));
    p.add(base + "mlp.w1", xavier_tensor({d, dh}, rng, d, dh));
    p.add(base + "mlp.b1", const_tensor({1, dh}, 0.0));
    p.add(base + "mlp.w2", xavier_tensor({dh, d}, rng, dh, d));
    p.add(base + "mlp.b2", const_tensor({1, d}, 0.0));
  }

  // facial patch embedding
  const int patch_in = cfg.frame_channels * cfg.patch * cfg.patch;
  p.add("train.face_embed.w", xavier_tensor({patch_in, d}, rng, patch_in, d));
  p.add("train.face_embed.b", const_tensor({1, d}, 0.0));

  // physio encoder: stem conv + three residual blocks + 1x1 head
  PhysioPlan plan(cfg);
  p.add("train.physio.stem.w",
        xavier_tensor({plan.c0, cfg.frame_channels, 3, 3}, rng, cfg.frame_channels * 9, plan.c0 * 9));
  p.add("train.physio.stem.b", const_tensor({plan.c0}, 0.0));
  p.add("train.physio.stem_norm.g", const_tensor({plan.c0}, 1.0));
  p.add("train.physio.stem_norm.b", const_tensor({plan.c0}, 0.0));
  for (int i = 0; i < 3; ++i) {
    const int ci = plan.block_in(i), co = plan.block_out(i);
    const std::string base = "train.physio.block" + std::to_string(i + 1) + ".";
    p.add(base + "conv1.w", xavier_tensor({co, ci, 3, 3}, rng, ci * 9, co * 9));
    p.add(base + "conv1.b", const_tensor({co}, 0.0));
    p.add(base + "n1.g", const_tensor({co}, 1.0));
    p.add(base + "n1.b", const_tensor({co}, 0.0));
    p.add(base + "conv2.w", xavier_tensor({co, co, 3, 3}, rng, co * 9, co * 9));
    p.add(base + "conv2.b", const_tensor({co}, 0.0));
    // zero-initialized final block scale: the residual path starts silent
    p.add(base + "n2.g", const_tensor({co}, 0.0));
    p.add(base + "n2.b", const_tensor({co}, 0.0));
    p.add(base + "proj.w", xavier_tensor({co, ci, 1, 1}, rng, ci, co));
    p.add(base + "proj.b", const_tensor({co}, 0.0));
  }
  p.add("train.physio.head.w", xavier_tensor({d, plan.c3, 1, 1}, rng, plan.c3, d));
  p.add("train.physio.head.b", const_tensor({d}, 0.0));

  // rPPG patch embedding (per-cell linear on the physio feature grid)
  p.add("train.rppg_embed.w", xavier_tensor({d, d}, rng, d, d));
  p.add("train.rppg_embed.b", const_tensor({1, d}, 0.0));

  if (cfg.mcp) {
    for (int l = 1; l <= cfg.layers; ++l) {
      const std::string base = "train.mcp.l" + std::to_string(l) + ".";
      p.add(base + "lnf.g", const_tensor({1, d}, 1.0));
      p.add(base + "lnf.b", const_tensor({1, d}, 0.0));
      p.add(base + "lnp.g", const_tensor({1, d}, 1.0));
      p.add(base + "lnp.b", const_tensor({1, d}, 0.0));
      p.add(base + "wf", xavier_tensor({d, dp}, rng, d, dp));
      p.add(base + "wp", xavier_tensor({d, dp}, rng, d, dp));
      // zero output projection: prompts start as a pure pass-through
      p.add(base + "wout", const_tensor({dp, d}, 0.0));
      p.add(base + "bout", const_tensor({1, d}, 0.0));
    }
  }

  if (cfg.dssa) {
    const int r = cfg.dssa_rank;
    const int mh = cfg.dssa_hidden();
    for (int l = 1; l <= cfg.layers; ++l) {
      const std::string base = "train.dssa.l" + std::to_string(l) + ".";
      p.add(base + "a", xavier_tensor({d, r}, rng, d, r));
      p.add(base + "b", const_tensor({d, r}, 0.0));  // zero-init: shared branch silent
      p.add(base + "mlp.w1", xavier_tensor({d, mh}, rng, d, mh));
      p.add(base + "mlp.b1", const_tensor({1, mh}, 0.0));
      p.add(base + "mlp.w2", const_tensor({mh, d}, 0.0));  // zero-init: specific branch silent
      p.add(base + "mlp.b2", const_tensor({1, d}, 0.0));
    }
  }

  const int cls_in = cfg.dssa ? cfg.svd_rank_eff() : d;
  p.add("train.cls_emo.w", xavier_tensor({cls_in, cfg.num_classes}, rng, cls_in, cfg.num_classes));
  p.add("train.cls_emo.b", const_tensor({1, cfg.num_classes}, 0.0));
  if (m.num_subjects > 0) {
    p.add("train.cls_sub.w", xavier_tensor({d, m.num_subjects}, rng, d, m.num_subjects));
    p.add("train.cls_sub.b", const_tensor({1, m.num_subjects}, 0.0));
  }
}

}  // namespace

ModelState ModelState::init(const ModelConfig& cfg, uint64_t seed, int num_subjects) {
  cfg.validate();
  ModelState m;
  m.cfg = cfg;
  m.num_subjects = num_subjects;
  Rng rng(mix_seed(seed, 0x5c97u));
  build_params(m, rng);
  return m;
}

void ModelState::randomize_all(uint64_t seed) {
  Rng rng(mix_seed(seed, 0xa11fu));
  for (auto& e : params.entries()) {
    for (double& v : e.value.data) v = rng.normal() * 0.05;
    quantize_f32(e.value);
  }
}

NamedTensors ModelState::to_named() const {
  NamedTensors out;
  out.reserve(params.size());
  for (const auto& e : params.entries()) out.emplace_back(e.name, e.value);
  return out;
}

void ModelState::load_named(const NamedTensors& ts) {
  if (ts.size() != params.size())
    throw CorruptFile("checkpoint tensor count " + std::to_string(ts.size()) + " != model " +
                      std::to_string(params.size()));
  for (const auto& [name, t] : ts) {
    auto& e = params.entry(name);
    if (e.value.shape != t.shape)
      throw CorruptFile("checkpoint tensor " + name + " has shape " + t.shape_str() + ", expected " +
                        e.value.shape_str());
    e.value = t;
  }
}

void ModelState::load_backbone(const std::string& path) {
  NamedTensors ts = read_tensor_file(path);
  for (auto& e : params.entries()) {
    if (!e.frozen) continue;
    const Tensor* t = find_tensor(ts, e.name);
    if (!t) throw CorruptFile("backbone checkpoint missing tensor " + e.name + ": " + path);
    if (t->shape != e.value.shape)
      throw CorruptFile("backbone tensor " + e.name + " shape " + t->shape_str() + " != " +
                        e.value.shape_str());
    e.value = *t;
  }
}

void save_checkpoint(const ModelState& m, const std::string& path) {
  write_tensor_file(path, m.to_named());
}

ModelState load_checkpoint(const std::string& path, const ModelConfig& cfg) {
  NamedTensors ts = read_tensor_file(path);
  int nsub = 0;
  if (const Tensor* w = find_tensor(ts, "train.cls_sub.w")) nsub = w->cols();
  ModelState m = ModelState::init(cfg, 0, nsub);
  m.load_named(ts);
  return m;
}

VarId ModelBinding::operator()(const std::string& name) {
  int idx = m_.params.index_of(name);
  if (idx < 0) throw Error("unknown parameter: " + name);
  VarId& slot = cache_[static_cast<size_t>(idx)];
  if (slot >= 0) return slot;
  auto& e = m_.params.entries()[static_cast<size_t>(idx)];
  slot = e.frozen ? g_.constant(e.value) : g_.param(e.value, &e.grad);
  return slot;
}

}  // namespace scpt
