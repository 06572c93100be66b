#include "scpt/encoders.hpp"

#include <cmath>

namespace scpt {

std::vector<int> sample_frame_indices(int available, int t, SampleMode mode, Rng* rng) {
  if (available < 1) throw EmptyClip("sample_frames: empty clip");
  if (t < 1) throw Error("sample_frames: T must be >= 1");
  std::vector<int> idx;
  idx.reserve(static_cast<size_t>(t));
  if (available < t) {
    for (int i = 0; i < available; ++i) idx.push_back(i);
    while (static_cast<int>(idx.size()) < t) idx.push_back(available - 1);
    return idx;
  }
  if (mode == SampleMode::kEval) {
    for (int i = 0; i < t; ++i)
      idx.push_back(static_cast<int>((2LL * i + 1) * available / (2LL * t)));
  } else {
    if (!rng) throw Error("sample_frames: train mode needs an rng");
    for (int i = 0; i < t; ++i) {
      const int lo = static_cast<int>(static_cast<int64_t>(i) * available / t);
      const int hi = static_cast<int>(static_cast<int64_t>(i + 1) * available / t);
      idx.push_back(lo + static_cast<int>(rng->uniform_int(hi - lo)));
    }
  }
  return idx;
}

Tensor sample_frames(const std::vector<Tensor>& video_frames, int t, SampleMode mode, Rng* rng) {
  if (video_frames.empty()) throw EmptyClip("sample_frames: empty clip");
  const Tensor& f0 = video_frames[0];
  if (f0.rank() != 3) throw ShapeMismatch("sample_frames: frames must be CxHxW");
  std::vector<int> idx = sample_frame_indices(static_cast<int>(video_frames.size()), t, mode, rng);
  Tensor clip({t, f0.shape[0], f0.shape[1], f0.shape[2]});
  const int64_t stride = f0.numel();
  for (int i = 0; i < t; ++i) {
    const Tensor& src = video_frames[static_cast<size_t>(idx[static_cast<size_t>(i)])];
    if (src.shape != f0.shape) throw ShapeMismatch("sample_frames: inconsistent frame shapes");
    std::copy(src.data.begin(), src.data.end(), clip.data.begin() + i * stride);
  }
  return clip;
}

Tensor frame_of(const Tensor& clip, int f) {
  if (clip.rank() != 4) throw ShapeMismatch("frame_of: need TxCxHxW");
  Tensor out({clip.shape[1], clip.shape[2], clip.shape[3]});
  const int64_t stride = out.numel();
  std::copy(clip.data.begin() + f * stride, clip.data.begin() + (f + 1) * stride, out.data.begin());
  return out;
}

Tensor im2patches(const Tensor& image, int patch) {
  if (image.rank() != 3) throw ShapeMismatch("im2patches: need CxHxW");
  const int c = image.shape[0], h = image.shape[1], w = image.shape[2];
  if (h % patch != 0 || w % patch != 0) throw ShapeMismatch("im2patches: size not divisible by patch");
  const int gy = h / patch, gx = w / patch;
  Tensor out({gy * gx, c * patch * patch});
  for (int py = 0; py < gy; ++py)
    for (int px = 0; px < gx; ++px) {
      const int row = py * gx + px;
      int col = 0;
      for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < patch; ++y)
          for (int x = 0; x < patch; ++x)
            out.at(row, col++) = image.at3(ch, py * patch + y, px * patch + x);
    }
  return out;
}

namespace {

VarId residual_block(ModelBinding& mb, VarId x, const std::string& base) {
  Graph& g = mb.graph();
  VarId h = g.conv2d(x, mb(base + "conv1.w"), mb(base + "conv1.b"), 2, 1);
  h = g.instance_norm2d(h, mb(base + "n1.g"), mb(base + "n1.b"));
  h = g.relu(h);
  h = g.conv2d(h, mb(base + "conv2.w"), mb(base + "conv2.b"), 1, 1);
  h = g.instance_norm2d(h, mb(base + "n2.g"), mb(base + "n2.b"));
  VarId skip = g.conv2d(x, mb(base + "proj.w"), mb(base + "proj.b"), 2, 0);
  return g.relu(g.add(h, skip));
}

}  // namespace

VarId physio_encoder_forward(ModelBinding& mb, VarId tfr_chw) {
  Graph& g = mb.graph();
  VarId h = g.conv2d(tfr_chw, mb("train.physio.stem.w"), mb("train.physio.stem.b"), 2, 1);
  h = g.instance_norm2d(h, mb("train.physio.stem_norm.g"), mb("train.physio.stem_norm.b"));
  h = g.relu(h);
  h = residual_block(mb, h, "train.physio.block1.");
  h = residual_block(mb, h, "train.physio.block2.");
  h = residual_block(mb, h, "train.physio.block3.");
  return g.conv2d(h, mb("train.physio.head.w"), mb("train.physio.head.b"), 1, 0);
}

VarId feature_map_to_tokens(Graph& g, VarId fmap) {
  const Tensor& v = g.val(fmap);
  if (v.rank() != 3) throw ShapeMismatch("feature_map_to_tokens: need CxHxW");
  const int c = v.shape[0], hw = v.shape[1] * v.shape[2];
  return g.transpose(g.reshape(fmap, {c, hw}));  // (h*w) x C, raster order
}

VarId patch_embed_forward(ModelBinding& mb, VarId patches, const std::string& prefix) {
  Graph& g = mb.graph();
  return g.add_rowvec(g.matmul(patches, mb(prefix + ".w")), mb(prefix + ".b"));
}

VarId vit_layer_forward(ModelBinding& mb, int layer, VarId seq, std::vector<VarId>* attention_probs) {
  Graph& g = mb.graph();
  const ModelConfig& cfg = mb.model().cfg;
  const std::string base = "frozen.backbone.l" + std::to_string(layer) + ".";
  const int d = cfg.dim, heads = cfg.heads, hd = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(hd));

  VarId n1 = g.layernorm_rows(seq, mb(base + "ln1.g"), mb(base + "ln1.b"));
  VarId q = g.add_rowvec(g.matmul(n1, mb(base + "wq")), mb(base + "bq"));
  VarId k = g.add_rowvec(g.matmul(n1, mb(base + "wk")), mb(base + "bk"));
  VarId v = g.add_rowvec(g.matmul(n1, mb(base + "wv")), mb(base + "bv"));

  std::vector<VarId> ctx;
  ctx.reserve(static_cast<size_t>(heads));
  for (int h = 0; h < heads; ++h) {
    VarId qh = g.slice_cols(q, h * hd, (h + 1) * hd);
    VarId kh = g.slice_cols(k, h * hd, (h + 1) * hd);
    VarId vh = g.slice_cols(v, h * hd, (h + 1) * hd);
    VarId probs = g.softmax_rows(g.scale(g.matmul(qh, g.transpose(kh)), scale));
    if (attention_probs) attention_probs->push_back(probs);
    ctx.push_back(g.matmul(probs, vh));
  }
  VarId merged = heads == 1 ? ctx[0] : g.concat_cols(ctx);
  VarId attn_out = g.add_rowvec(g.matmul(merged, mb(base + "wo")), mb(base + "bo"));
  VarId x1 = g.add(seq, attn_out);

  VarId n2 = g.layernorm_rows(x1, mb(base + "ln2.g"), mb(base + "ln2.b"));
  VarId hmid = g.gelu(g.add_rowvec(g.matmul(n2, mb(base + "mlp.w1")), mb(base + "mlp.b1")));
  VarId mlp_out = g.add_rowvec(g.matmul(hmid, mb(base + "mlp.w2")), mb(base + "mlp.b2"));
  return g.add(x1, mlp_out);
}

}  // namespace scpt
