#include "scpt/mcp.hpp"

#include <cmath>

namespace scpt {

VarId mcp_init(Graph& g, VarId rppg_tokens, int expected_tokens, int dim) {
  const Tensor& v = g.val(rppg_tokens);
  if (v.rank() != 2 || v.rows() != expected_tokens || v.cols() != dim)
    throw ShapeMismatch("mcp_init: rPPG tokens " + v.shape_str() + ", expected (" +
                        std::to_string(expected_tokens) + "x" + std::to_string(dim) + ")");
  return rppg_tokens;
}

VarId mcp_generate(ModelBinding& mb, int layer, VarId facial_tokens, VarId prev_prompts) {
  Graph& g = mb.graph();
  const Tensor& fv = g.val(facial_tokens);
  const Tensor& pv = g.val(prev_prompts);
  require_same_shape(fv, pv, "mcp_generate");
  if (!fv.all_finite() || !pv.all_finite()) throw NonFinite("mcp_generate: non-finite tokens");

  const std::string base = "train.mcp.l" + std::to_string(layer) + ".";
  const int dp = mb.model().cfg.mcp_latent_eff();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dp));

  VarId q = g.matmul(g.layernorm_rows(facial_tokens, mb(base + "lnf.g"), mb(base + "lnf.b")),
                     mb(base + "wf"));
  VarId kv = g.matmul(g.layernorm_rows(prev_prompts, mb(base + "lnp.g"), mb(base + "lnp.b")),
                      mb(base + "wp"));
  VarId probs = g.softmax_rows(g.scale(g.matmul(q, g.transpose(kv)), scale));
  VarId ctx = g.matmul(probs, kv);
  VarId update = g.add_rowvec(g.matmul(ctx, mb(base + "wout")), mb(base + "bout"));
  return g.add(prev_prompts, update);
}

VarId mcp_inject(Graph& g, VarId tokens, VarId prompts) {
  require_same_shape(g.val(tokens), g.val(prompts), "mcp_inject");
  return g.add(tokens, prompts);
}

}  // namespace scpt
