#include "kg2text/encoder.hpp"

#include <cmath>
#include <stdexcept>

namespace kg2text {

LstmParams LstmParams::init(int in, int hidden, std::mt19937_64& rng) {
  LstmParams p;
  p.w_x = Tensor::xavier_param(in, 4 * hidden, rng);
  p.w_h = Tensor::xavier_param(hidden, 4 * hidden, rng);
  p.b = Tensor::zeros({4 * hidden});
  p.b.set_requires_grad(true);
  p.hidden = hidden;
  return p;
}

void LstmParams::collect(const std::string& prefix, ParamList& out) const {
  out.push_back({prefix + ".w_x", w_x});
  out.push_back({prefix + ".w_h", w_h});
  out.push_back({prefix + ".b", b});
}

LstmState lstm_initial(const LstmParams& p) {
  return {Tensor::zeros({1, p.hidden}), Tensor::zeros({1, p.hidden})};
}

LstmState lstm_step(const LstmParams& p, const Tensor& x, const LstmState& s) {
  const int h = p.hidden;
  Tensor gates = add(add(matmul(x, p.w_x), matmul(s.h, p.w_h)), p.b);
  Tensor in_gate = sigmoid(slice_cols(gates, 0, h));
  Tensor forget_gate = sigmoid(slice_cols(gates, h, h));
  Tensor cell_cand = tanh(slice_cols(gates, 2 * h, h));
  Tensor out_gate = sigmoid(slice_cols(gates, 3 * h, h));
  Tensor cell = add(mul(forget_gate, s.c), mul(in_gate, cell_cand));
  Tensor hidden = mul(out_gate, tanh(cell));
  return {hidden, cell};
}

BiLstmParams BiLstmParams::init(int in, int hidden_per_dir,
                                std::mt19937_64& rng) {
  BiLstmParams p;
  p.fwd = LstmParams::init(in, hidden_per_dir, rng);
  p.bwd = LstmParams::init(in, hidden_per_dir, rng);
  return p;
}

void BiLstmParams::collect(const std::string& prefix, ParamList& out) const {
  fwd.collect(prefix + ".fwd", out);
  bwd.collect(prefix + ".bwd", out);
}

BiLstmOut bilstm_run(const BiLstmParams& p, const Tensor& inputs) {
  const int m = inputs.dim(0);
  std::vector<Tensor> fwd_states(static_cast<size_t>(m));
  std::vector<Tensor> bwd_states(static_cast<size_t>(m));
  LstmState f = lstm_initial(p.fwd);
  for (int t = 0; t < m; ++t) {
    f = lstm_step(p.fwd, row(inputs, t), f);
    fwd_states[static_cast<size_t>(t)] = f.h;
  }
  LstmState b = lstm_initial(p.bwd);
  for (int t = m - 1; t >= 0; --t) {
    b = lstm_step(p.bwd, row(inputs, t), b);
    bwd_states[static_cast<size_t>(t)] = b.h;
  }
  std::vector<Tensor> rows;
  rows.reserve(static_cast<size_t>(m));
  for (int t = 0; t < m; ++t) {
    rows.push_back(concat_cols({fwd_states[static_cast<size_t>(t)],
                                bwd_states[static_cast<size_t>(t)]}));
  }
  BiLstmOut out;
  out.per_position = concat_rows(rows);
  out.final = concat_cols({fwd_states.back(), bwd_states.front()});
  return out;
}

AttentionHeadParams AttentionHeadParams::init(int d, std::mt19937_64& rng) {
  AttentionHeadParams p;
  p.w_query = Tensor::xavier_param(d, d, rng);
  p.w_key = Tensor::xavier_param(d, d, rng);
  p.w_value = Tensor::xavier_param(d, d, rng);
  return p;
}

void AttentionHeadParams::collect(const std::string& prefix,
                                  ParamList& out) const {
  out.push_back({prefix + ".w_query", w_query});
  out.push_back({prefix + ".w_key", w_key});
  out.push_back({prefix + ".w_value", w_value});
}

TransformerLayerParams TransformerLayerParams::init(int d, int heads, int ffn,
                                                    std::mt19937_64& rng) {
  TransformerLayerParams p;
  for (int n = 0; n < heads; ++n)
    p.heads.push_back(AttentionHeadParams::init(d, rng));
  auto ones = [](int n) {
    Tensor t = Tensor::full({n}, 1.0);
    t.set_requires_grad(true);
    return t;
  };
  auto zeros = [](int n) {
    Tensor t = Tensor::zeros({n});
    t.set_requires_grad(true);
    return t;
  };
  p.ln1_gain = ones(d);
  p.ln1_bias = zeros(d);
  p.ln2_gain = ones(d);
  p.ln2_bias = zeros(d);
  p.ffn_w1 = Tensor::xavier_param(d, ffn, rng);
  p.ffn_b1 = zeros(ffn);
  p.ffn_w2 = Tensor::xavier_param(ffn, d, rng);
  p.ffn_b2 = zeros(d);
  p.prelu_slope = Tensor::scalar(0.25);
  p.prelu_slope.set_requires_grad(true);
  return p;
}

void TransformerLayerParams::collect(const std::string& prefix,
                                     ParamList& out) const {
  for (size_t n = 0; n < heads.size(); ++n)
    heads[n].collect(prefix + ".head" + std::to_string(n), out);
  out.push_back({prefix + ".ln1_gain", ln1_gain});
  out.push_back({prefix + ".ln1_bias", ln1_bias});
  out.push_back({prefix + ".ln2_gain", ln2_gain});
  out.push_back({prefix + ".ln2_bias", ln2_bias});
  out.push_back({prefix + ".ffn_w1", ffn_w1});
  out.push_back({prefix + ".ffn_b1", ffn_b1});
  out.push_back({prefix + ".ffn_w2", ffn_w2});
  out.push_back({prefix + ".ffn_b2", ffn_b2});
  out.push_back({prefix + ".prelu_slope", prelu_slope});
}

GatLayerParams GatLayerParams::init(int d, int heads, std::mt19937_64& rng) {
  GatLayerParams p;
  for (int n = 0; n < heads; ++n)
    p.heads.push_back(AttentionHeadParams::init(d, rng));
  p.prelu_slope = Tensor::scalar(0.25);
  p.prelu_slope.set_requires_grad(true);
  return p;
}

void GatLayerParams::collect(const std::string& prefix, ParamList& out) const {
  for (size_t n = 0; n < heads.size(); ++n)
    heads[n].collect(prefix + ".head" + std::to_string(n), out);
  out.push_back({prefix + ".prelu_slope", prelu_slope});
}

EncoderParams EncoderParams::init(int d, int heads, int layers, int ffn,
                                  int n_labels, EncoderKind kind,
                                  std::mt19937_64& rng) {
  if (d % heads != 0) {
    throw std::invalid_argument("model width must be divisible by head count");
  }
  if (d % 2 != 0) {
    throw std::invalid_argument("model width must be even for the BiLSTMs");
  }
  EncoderParams p;
  p.phrase_rnn = BiLstmParams::init(d, d / 2, rng);
  p.title_rnn = BiLstmParams::init(d, d / 2, rng);
  p.relation_fwd_emb = Tensor::uniform_param({n_labels, d}, 0.1, rng);
  p.relation_rev_emb = Tensor::uniform_param({n_labels, d}, 0.1, rng);
  p.global_emb = Tensor::uniform_param({1, d}, 0.1, rng);
  for (int l = 0; l < layers; ++l) {
    if (kind == EncoderKind::Gat) {
      p.gat_layers.push_back(GatLayerParams::init(d, heads, rng));
    } else {
      p.layers.push_back(TransformerLayerParams::init(d, heads, ffn, rng));
    }
  }
  return p;
}

void EncoderParams::collect(const std::string& prefix, ParamList& out) const {
  phrase_rnn.collect(prefix + ".phrase_rnn", out);
  title_rnn.collect(prefix + ".title_rnn", out);
  out.push_back({prefix + ".relation_fwd_emb", relation_fwd_emb});
  out.push_back({prefix + ".relation_rev_emb", relation_rev_emb});
  out.push_back({prefix + ".global_emb", global_emb});
  for (size_t l = 0; l < layers.size(); ++l)
    layers[l].collect(prefix + ".layer" + std::to_string(l), out);
  for (size_t l = 0; l < gat_layers.size(); ++l)
    gat_layers[l].collect(prefix + ".gat_layer" + std::to_string(l), out);
}

std::vector<uint8_t> neighborhood_mask(const PreparedGraph& pg) {
  const size_t n = static_cast<size_t>(pg.size());
  std::vector<uint8_t> mask(n * n, 0);
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < n; ++j) {
      if (i != j) mask[i * n + j] = pg.adjacency[j * n + i];
    }
  }
  return mask;
}

Tensor attention_head(const Tensor& q, const Tensor& keys,
                      const std::vector<uint8_t>& mask, const Tensor& w_query,
                      const Tensor& w_key) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(q.cols()));
  Tensor projected_q = matmul(q, w_query);                     // 1 x d
  Tensor projected_k = matmul(keys, w_key);                    // n x d
  Tensor logits = affine(matmul(projected_q, transpose(projected_k)), scale, 0.0);
  return masked_softmax(logits, mask);
}

namespace {

std::vector<int> phrase_ids(const std::vector<std::string>& words,
                            const Vocabulary& vocab) {
  std::vector<int> ids;
  ids.reserve(words.size());
  for (const auto& w : words) ids.push_back(vocab.id(w));
  return ids;
}

// Multi-head neighborhood attention of Eq. 1-3: each head's value projection
// is sliced to d/N columns so the concatenation is d-wide, then the residual
// is applied.
Tensor attention_residual(const Tensor& v_in, const std::vector<uint8_t>& mask,
                          const std::vector<AttentionHeadParams>& heads,
                          double dropout_rate, bool training,
                          std::mt19937_64& rng) {
  const int d = v_in.dim(1);
  const int slice = d / static_cast<int>(heads.size());
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  std::vector<Tensor> head_ctx;
  head_ctx.reserve(heads.size());
  for (const auto& head : heads) {
    Tensor q = matmul(v_in, head.w_query);
    Tensor k = matmul(v_in, head.w_key);
    Tensor logits = affine(matmul(q, transpose(k)), scale, 0.0);
    Tensor alpha = masked_softmax_rows(logits, mask);
    alpha = dropout(alpha, dropout_rate, training, rng);
    Tensor values = slice_cols(matmul(v_in, head.w_value), 0, slice);
    head_ctx.push_back(matmul(alpha, values));
  }
  return add(v_in, concat_cols(head_ctx));
}

}  // namespace

Tensor embed_vertices(const PreparedGraph& pg, const EncoderParams& enc,
                      const Tensor& word_emb, const Vocabulary& vocab,
                      const LabelVocab& labels) {
  std::vector<Tensor> rows;
  rows.reserve(pg.vertices.size());
  for (const auto& v : pg.vertices) {
    switch (v.kind) {
      case VertexKind::Entity: {
        Tensor words = gather_rows(word_emb, phrase_ids(v.phrase, vocab));
        rows.push_back(bilstm_run(enc.phrase_rnn, words).final);
        break;
      }
      case VertexKind::RelationFwd:
        rows.push_back(row(enc.relation_fwd_emb, labels.id(v.label)));
        break;
      case VertexKind::RelationRev:
        rows.push_back(row(enc.relation_rev_emb, labels.id(v.label)));
        break;
      case VertexKind::Global:
        rows.push_back(enc.global_emb);
        break;
    }
  }
  return concat_rows(rows);
}

Tensor graph_transformer_layer(const Tensor& v_in,
                               const std::vector<uint8_t>& mask,
                               const TransformerLayerParams& p,
                               double dropout_rate, bool training,
                               std::mt19937_64& rng) {
  Tensor attended =
      attention_residual(v_in, mask, p.heads, dropout_rate, training, rng);
  Tensor normed = layer_norm(attended, p.ln1_gain, p.ln1_bias);
  Tensor ffn_mid = prelu(add(matmul(normed, p.ffn_w1), p.ffn_b1), p.prelu_slope);
  Tensor block_out = add(matmul(ffn_mid, p.ffn_w2), p.ffn_b2);
  return layer_norm(add(block_out, normed), p.ln2_gain, p.ln2_bias);
}

Tensor gat_encoder_layer(const Tensor& v_in, const std::vector<uint8_t>& mask,
                         const GatLayerParams& p, double dropout_rate,
                         bool training, std::mt19937_64& rng) {
  Tensor attended =
      attention_residual(v_in, mask, p.heads, dropout_rate, training, rng);
  return prelu(attended, p.prelu_slope);
}

Tensor encode_graph(const PreparedGraph& pg, const EncoderParams& enc,
                    const Tensor& word_emb, const Vocabulary& vocab,
                    const LabelVocab& labels, EncoderKind kind,
                    double dropout_rate, bool training, std::mt19937_64& rng) {
  Tensor v = embed_vertices(pg, enc, word_emb, vocab, labels);
  const std::vector<uint8_t> mask = neighborhood_mask(pg);
  if (kind == EncoderKind::Gat) {
    for (const auto& layer : enc.gat_layers)
      v = gat_encoder_layer(v, mask, layer, dropout_rate, training, rng);
  } else {
    for (const auto& layer : enc.layers)
      v = graph_transformer_layer(v, mask, layer, dropout_rate, training, rng);
  }
  return v;
}

Tensor encode_title(const std::vector<std::string>& tokens,
                    const EncoderParams& enc, const Tensor& word_emb,
                    const Vocabulary& vocab) {
  if (tokens.empty()) {
    throw std::invalid_argument("cannot encode an empty title");
  }
  Tensor words = gather_rows(word_emb, phrase_ids(tokens, vocab));
  return bilstm_run(enc.title_rnn, words).per_position;
}

}  // namespace kg2text
