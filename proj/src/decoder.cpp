#include "kg2text/decoder.hpp"

#include <cmath>

namespace kg2text {

DecoderParams DecoderParams::init(int d, int heads, int vocab_size,
                                  std::mt19937_64& rng) {
  DecoderParams p;
  p.init_w = Tensor::xavier_param(d, 2 * d, rng);
  p.init_b = Tensor::zeros({2 * d});
  p.init_b.set_requires_grad(true);
  p.lstm = LstmParams::init(3 * d, d, rng);
  for (int n = 0; n < heads; ++n) {
    p.graph_attn.push_back(AttentionHeadParams::init(d, rng));
    p.title_attn.push_back(AttentionHeadParams::init(d, rng));
  }
  p.copy_w_query = Tensor::xavier_param(3 * d, d, rng);
  p.copy_w_key = Tensor::xavier_param(d, d, rng);
  p.copy_gate_w = Tensor::xavier_param(3 * d, 1, rng);
  p.copy_gate_b = Tensor::zeros({1});
  p.copy_gate_b.set_requires_grad(true);
  p.vocab_w = Tensor::xavier_param(3 * d, vocab_size, rng);
  p.vocab_b = Tensor::zeros({vocab_size});
  p.vocab_b.set_requires_grad(true);
  return p;
}

void DecoderParams::collect(const std::string& prefix, ParamList& out) const {
  out.push_back({prefix + ".init_w", init_w});
  out.push_back({prefix + ".init_b", init_b});
  lstm.collect(prefix + ".lstm", out);
  for (size_t n = 0; n < graph_attn.size(); ++n)
    graph_attn[n].collect(prefix + ".graph_attn" + std::to_string(n), out);
  for (size_t n = 0; n < title_attn.size(); ++n)
    title_attn[n].collect(prefix + ".title_attn" + std::to_string(n), out);
  out.push_back({prefix + ".copy_w_query", copy_w_query});
  out.push_back({prefix + ".copy_w_key", copy_w_key});
  out.push_back({prefix + ".copy_gate_w", copy_gate_w});
  out.push_back({prefix + ".copy_gate_b", copy_gate_b});
  out.push_back({prefix + ".vocab_w", vocab_w});
  out.push_back({prefix + ".vocab_b", vocab_b});
}

namespace {

// Shared multi-head attended context: weights per head over all key rows,
// sliced value rows combined, residual added to the query.
Tensor attended_context(const Tensor& h, const std::vector<Tensor>& keys,
                        const std::vector<Tensor>& vals) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(h.cols()));
  std::vector<Tensor> ctx;
  ctx.reserve(keys.size());
  for (size_t n = 0; n < keys.size(); ++n) {
    Tensor logits = affine(matmul(h, transpose(keys[n])), scale, 0.0);
    Tensor alpha = softmax(logits);
    ctx.push_back(matmul(alpha, vals[n]));
  }
  return add(h, concat_cols(ctx));
}

void project_heads(const Tensor& enc,
                   const std::vector<AttentionHeadParams>& heads,
                   std::vector<Tensor>& keys, std::vector<Tensor>& vals) {
  const int slice = enc.dim(1) / static_cast<int>(heads.size());
  for (const auto& head : heads) {
    keys.push_back(matmul(enc, head.w_key));
    vals.push_back(slice_cols(matmul(enc, head.w_value), 0, slice));
  }
}

Tensor projected_context(const Tensor& h, const Tensor& enc,
                         const std::vector<AttentionHeadParams>& heads) {
  std::vector<Tensor> keys, vals;
  project_heads(enc, heads, keys, vals);
  return attended_context(h, keys, vals);
}

}  // namespace

DecodeInputs make_decode_inputs(const DecoderParams& p,
                                const Tensor& vertex_enc,
                                const Tensor& title_enc,
                                const PreparedGraph& pg,
                                const std::vector<std::string>& title_tokens) {
  DecodeInputs in;
  in.vertex_enc = vertex_enc;
  in.title_enc = title_enc;
  project_heads(vertex_enc, p.graph_attn, in.graph_keys, in.graph_vals);
  project_heads(title_enc, p.title_attn, in.title_keys, in.title_vals);

  // Copy candidates: entity vertices then title tokens; relation and global
  // vertices are never copyable.
  std::vector<Tensor> key_rows;
  for (int i = 0; i < pg.n_entities; ++i) {
    in.candidates.push_back({CopyCandidate::Source::Entity, i,
                             Entity{pg.vertices[static_cast<size_t>(i)].phrase,
                                    {}}.joined()});
    key_rows.push_back(row(vertex_enc, i));
  }
  for (size_t t = 0; t < title_tokens.size(); ++t) {
    in.candidates.push_back(
        {CopyCandidate::Source::Title, static_cast<int>(t), title_tokens[t]});
    key_rows.push_back(row(title_enc, static_cast<int>(t)));
  }
  in.copy_keys = matmul(concat_rows(key_rows), p.copy_w_key);
  return in;
}

DecoderState decoder_initial_state(const DecoderParams& p,
                                   const Tensor& vertex_enc,
                                   int global_index) {
  const int d = vertex_enc.dim(1);
  Tensor mapped = add(matmul(row(vertex_enc, global_index), p.init_w), p.init_b);
  DecoderState s;
  s.h = slice_cols(mapped, 0, d);
  s.cell = slice_cols(mapped, d, d);
  s.ctx = Tensor::zeros({1, 2 * d});
  return s;
}

Tensor graph_context(const Tensor& h, const Tensor& vertex_enc,
                     const std::vector<AttentionHeadParams>& heads) {
  return projected_context(h, vertex_enc, heads);
}

Tensor title_context(const Tensor& h, const Tensor& title_enc,
                     const std::vector<AttentionHeadParams>& heads) {
  return projected_context(h, title_enc, heads);
}

Tensor copy_gate(const Tensor& h, const Tensor& ctx, const DecoderParams& p) {
  Tensor joined = concat_cols({h, ctx});
  return sigmoid(add(matmul(joined, p.copy_gate_w), p.copy_gate_b));
}

StepOutput decode_step(const DecoderParams& p, const DecodeInputs& inputs,
                       const DecoderState& state, int prev_token_id,
                       const Tensor& word_emb) {
  Tensor prev_emb = gather_rows(word_emb, {prev_token_id});
  Tensor x = concat_cols({prev_emb, state.ctx});
  LstmState next = lstm_step(p.lstm, x, {state.h, state.cell});

  Tensor c_graph = attended_context(next.h, inputs.graph_keys, inputs.graph_vals);
  Tensor c_title = attended_context(next.h, inputs.title_keys, inputs.title_vals);
  Tensor ctx = concat_cols({c_graph, c_title});
  Tensor joined = concat_cols({next.h, ctx});  // 1 x 3d

  StepOutput out;
  out.p = sigmoid(add(matmul(joined, p.copy_gate_w), p.copy_gate_b));

  const double scale = 1.0 / std::sqrt(static_cast<double>(next.h.cols()));
  Tensor copy_q = matmul(joined, p.copy_w_query);
  Tensor copy_logits =
      affine(matmul(copy_q, transpose(inputs.copy_keys)), scale, 0.0);
  out.alpha_copy = softmax(copy_logits);

  out.alpha_vocab = softmax(add(matmul(joined, p.vocab_w), p.vocab_b));
  out.state = {next.h, next.c, ctx};
  return out;
}

Tensor mixture_probability(const StepOutput& step, int target_vocab_id,
                           const std::vector<size_t>& aligned) {
  Tensor vocab_mass = pick(step.alpha_vocab, static_cast<size_t>(target_vocab_id));
  Tensor miss = scalar_mul(affine(step.p, -1.0, 1.0), vocab_mass);
  if (aligned.empty()) return miss;
  Tensor copy_mass = pick_sum(step.alpha_copy, aligned);
  return add(scalar_mul(step.p, copy_mass), miss);
}

std::vector<size_t> aligned_candidates(const std::vector<CopyCandidate>& cands,
                                       const std::string& surface) {
  std::vector<size_t> out;
  for (size_t i = 0; i < cands.size(); ++i) {
    if (cands[i].surface == surface) out.push_back(i);
  }
  return out;
}

}  // namespace kg2text
