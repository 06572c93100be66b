#pragma once

#include "scpt/model.hpp"

namespace scpt {

// Modality-complementary prompter. Prompt state P^0 starts as the rPPG
// token matrix; each layer refines it with a single-head cross-attention
// in the shared latent space (facial tokens as queries, previous prompts
// as keys/values) behind a zero-initialized output projection, so
// P^l == P^{l-1} at initialization.

// P^0 = rppg_tokens (shape checked against N x D).
VarId mcp_init(Graph& g, VarId rppg_tokens, int expected_tokens, int dim);

// P^l = P^{l-1} + OutProj(Attn(Q=Proj_f(LN(H^{l-1})), K=V=Proj_p(LN(P^{l-1})))).
VarId mcp_generate(ModelBinding& mb, int layer, VarId facial_tokens, VarId prev_prompts);

// (H^{l-1})' = H^{l-1} + P^l on patch rows.
VarId mcp_inject(Graph& g, VarId tokens, VarId prompts);

}  // namespace scpt
