#include "scpt/forward.hpp"

#include "scpt/dssa.hpp"
#include "scpt/encoders.hpp"
#include "scpt/mcp.hpp"

namespace scpt {

namespace {

// TFR grid replicated across the frame channels, as a C x h x w constant.
VarId tfr_input(Graph& g, const Tensor& tfr, int channels) {
  if (tfr.rank() != 2) throw ShapeMismatch("tfr input must be 2-D");
  Tensor t({channels, tfr.rows(), tfr.cols()});
  for (int c = 0; c < channels; ++c)
    std::copy(tfr.data.begin(), tfr.data.end(),
              t.data.begin() + static_cast<int64_t>(c) * tfr.numel());
  return g.constant(std::move(t));
}

VarId mean_rows_of(Graph& g, const std::vector<VarId>& rows) {
  VarId acc = rows[0];
  for (size_t i = 1; i < rows.size(); ++i) acc = g.add(acc, rows[i]);
  return rows.size() == 1 ? acc : g.scale(acc, 1.0 / static_cast<double>(rows.size()));
}

}  // namespace

ForwardResult scpt_forward(ModelBinding& mb, const Tensor& frames, const Tensor& tfr,
                           const ForwardOptions& opt) {
  Graph& g = mb.graph();
  ModelState& m = mb.model();
  const ModelConfig& cfg = m.cfg;
  const int n = cfg.num_tokens();
  const int t = frames.shape.at(0);
  if (frames.rank() != 4 || frames.shape[1] != cfg.frame_channels ||
      frames.shape[2] != cfg.frame_size || frames.shape[3] != cfg.frame_size)
    throw ShapeMismatch("scpt_forward: frames " + frames.shape_str());

  // rPPG branch: one TFR per clip -> physio features -> token embedding
  VarId rppg_tokens = -1;
  if (cfg.mcp) {
    VarId fmap = physio_encoder_forward(mb, tfr_input(g, tfr, cfg.frame_channels));
    VarId cells = feature_map_to_tokens(g, fmap);
    VarId embedded = patch_embed_forward(mb, cells, "train.rppg_embed");
    rppg_tokens = mcp_init(g, embedded, n, cfg.dim);
  }

  ForwardResult res;
  res.frames.resize(static_cast<size_t>(t));
  std::vector<VarId> projected, specific_cls, shared_cls;

  for (int f = 0; f < t; ++f) {
    FrameTrace& tr = res.frames[static_cast<size_t>(f)];
    VarId patches = g.constant(im2patches(frame_of(frames, f), cfg.patch));
    VarId h = patch_embed_forward(mb, patches, "train.face_embed");  // H_F^0, N x D
    VarId cls_row = mb("frozen.x_class");
    VarId prompts = rppg_tokens;  // P^0 = H_R^0

    for (int l = 1; l <= cfg.layers; ++l) {
      if (cfg.mcp) prompts = mcp_generate(mb, l, h, prompts);
      VarId x = cfg.mcp ? mcp_inject(g, h, prompts) : h;  // (H^{l-1})'

      VarId shared = -1, specific = -1;
      if (cfg.dssa) {
        shared = dssa_shared_correction(mb, l, x);
        tr.shared_corr.push_back(shared);
        if (opt.specific_active) {
          specific = dssa_specific_correction(mb, l, x);
          tr.specific_corr.push_back(specific);
        }
      }

      if (l == cfg.layers) {
        tr.layer_l_input = x;
        tr.cls_into_last = cls_row;
      }

      VarId seq = g.concat_rows(cls_row, x);
      if (cfg.pos_every_layer || l == 1) seq = g.add(seq, mb("frozen.x_pos"));
      VarId out = vit_layer_forward(mb, l, seq, opt.attention_probs);
      cls_row = g.slice_rows(out, 0, 1);
      VarId patch_rows = g.slice_rows(out, 1, n + 1);

      if (cfg.dssa) {
        VarId corr = (specific >= 0) ? g.add(shared, specific) : shared;
        h = g.add(patch_rows, g.scale(corr, cfg.dssa_scale));
      } else {
        h = patch_rows;
      }
    }
    tr.cls_out = cls_row;
    tr.patch_out = h;

    if (cfg.dssa) {
      const int s_eff = cfg.svd_rank_eff();
      Tensor vs;
      if (opt.fixed_subspace) {
        vs = (*opt.fixed_subspace)[static_cast<size_t>(f)];
      } else {
        // per-sample emotion subspace; the factors are treated as
        // constants (no gradient through the SVD)
        SubspaceFactors fac = truncated_svd(g.val(tr.shared_corr.back()), s_eff);
        vs = fac.v;
      }
      if (opt.captured_subspace) opt.captured_subspace->push_back(vs);

      const std::string last = "train.dssa.l" + std::to_string(cfg.layers) + ".";
      tr.shared_cls = g.matmul(g.matmul(tr.cls_into_last, mb(last + "a")), g.transpose(mb(last + "b")));
      shared_cls.push_back(tr.shared_cls);
      // the class row picks up the last layer's shared correction before
      // projection, mirroring the specific branch's class-row evaluation
      // for the subject head; without this term the last-layer B factor
      // would sit behind the constant V_s with no gradient path at all
      VarId cls_used = g.add(cls_row, g.scale(tr.shared_cls, cfg.dssa_scale));
      tr.projected = g.matmul(cls_used, g.constant(vs));

      if (opt.specific_active) {
        tr.specific_cls = dssa_specific_correction(mb, cfg.layers, tr.cls_into_last);
        specific_cls.push_back(tr.specific_cls);
      }
    } else {
      tr.projected = cls_row;
    }
    projected.push_back(tr.projected);
  }

  VarId z = mean_rows_of(g, projected);
  res.logits = g.add_rowvec(g.matmul(z, mb("train.cls_emo.w")), mb("train.cls_emo.b"));

  if (!specific_cls.empty() && m.num_subjects > 0) {
    VarId sc = mean_rows_of(g, specific_cls);
    res.sub_logits = g.add_rowvec(g.matmul(sc, mb("train.cls_sub.w")), mb("train.cls_sub.b"));
  }
  if (!shared_cls.empty()) res.shared_cls_mean = mean_rows_of(g, shared_cls);
  return res;
}

BackboneResult backbone_forward(ModelBinding& mb, const Tensor& frame_chw) {
  Graph& g = mb.graph();
  const ModelConfig& cfg = mb.model().cfg;
  const int n = cfg.num_tokens();
  VarId patches = g.constant(im2patches(frame_chw, cfg.patch));
  VarId h = patch_embed_forward(mb, patches, "train.face_embed");
  VarId cls_row = mb("frozen.x_class");
  for (int l = 1; l <= cfg.layers; ++l) {
    VarId seq = g.concat_rows(cls_row, h);
    if (cfg.pos_every_layer || l == 1) seq = g.add(seq, mb("frozen.x_pos"));
    VarId out = vit_layer_forward(mb, l, seq);
    cls_row = g.slice_rows(out, 0, 1);
    h = g.slice_rows(out, 1, n + 1);
  }
  return {cls_row, h};
}

LossVars build_loss(ModelBinding& mb, const ForwardResult& fwd, int label, int sub_label,
                    const LossWeights& w, LossNorm norm) {
  Graph& g = mb.graph();
  w.validate();
  LossVars lv;
  lv.task = g.cross_entropy_logits(fwd.logits, label);
  lv.total = lv.task;

  const bool have_specific = !fwd.frames.empty() && !fwd.frames[0].specific_corr.empty();
  if (have_specific) {
    VarId spec_acc = -1, orth_acc = -1;
    for (const FrameTrace& tr : fwd.frames) {
      VarId s = graph_specific_sparsity(g, tr.specific_corr, norm);
      VarId o = graph_orthogonality(g, tr.shared_corr, tr.specific_corr, norm);
      spec_acc = spec_acc < 0 ? s : g.add(spec_acc, s);
      orth_acc = orth_acc < 0 ? o : g.add(orth_acc, o);
    }
    const double inv_t = 1.0 / static_cast<double>(fwd.frames.size());
    lv.specific = g.scale(spec_acc, inv_t);
    lv.orth = g.scale(orth_acc, inv_t);
    lv.total = g.add(lv.total, g.scale(lv.specific, w.lambda1));
    lv.total = g.add(lv.total, g.scale(lv.orth, w.lambda2));
  }
  if (fwd.sub_logits >= 0 && sub_label >= 0) {
    lv.sub = g.cross_entropy_logits(fwd.sub_logits, sub_label);
    lv.total = g.add(lv.total, g.scale(lv.sub, w.lambda3));
  }
  return lv;
}

LossReport read_loss_report(const Graph& g, const LossVars& lv, const ForwardResult& fwd,
                            const LossWeights& w, LossNorm norm) {
  const double task = g.val(lv.task).data[0];
  const double specific = lv.specific >= 0 ? g.val(lv.specific).data[0] : 0.0;
  const double orth = lv.orth >= 0 ? g.val(lv.orth).data[0] : 0.0;
  const double sub = lv.sub >= 0 ? g.val(lv.sub).data[0] : 0.0;
  LossReport r = total_loss(task, specific, orth, sub, w);

  // per-layer means over frames, for the training log
  if (!fwd.frames.empty() && !fwd.frames[0].specific_corr.empty()) {
    const size_t layers = fwd.frames[0].specific_corr.size();
    r.specific_per_layer.assign(layers, 0.0);
    r.orth_per_layer.assign(layers, 0.0);
    for (const FrameTrace& tr : fwd.frames) {
      std::vector<Tensor> sh, sp;
      for (size_t l = 0; l < layers; ++l) {
        sh.push_back(g.val(tr.shared_corr[l]));
        sp.push_back(g.val(tr.specific_corr[l]));
      }
      std::vector<double> s_layer, o_layer;
      specific_sparsity_loss(sp, norm, &s_layer);
      orthogonality_loss(sh, sp, norm, &o_layer);
      for (size_t l = 0; l < layers; ++l) {
        r.specific_per_layer[l] += s_layer[l] / fwd.frames.size();
        r.orth_per_layer[l] += o_layer[l] / fwd.frames.size();
      }
    }
  }
  return r;
}

}  // namespace scpt
