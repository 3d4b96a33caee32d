// Vertex and title encoders. Entity phrases are embedded with a BiLSTM over
// word embeddings, relation vertices with learned per-label forward/reverse
// embeddings, the global vertex with its own embedding. Vertices are then
// contextualized either by stacked graph-transformer blocks (neighborhood
// multi-head attention + LayerNorm/FFN block networks) or by the thinner
// GAT-style stack (attention + PReLU only).

#pragma once

#include <random>
#include <vector>

#include "kg2text/graph.hpp"
#include "kg2text/params.hpp"
#include "kg2text/tensor.hpp"
#include "kg2text/vocab.hpp"

namespace kg2text {

struct LstmParams {
  Tensor w_x;  // in x 4H, gate order [input, forget, cell, output]
  Tensor w_h;  // H x 4H
  Tensor b;    // 4H
  int hidden = 0;

  static LstmParams init(int in, int hidden, std::mt19937_64& rng);
  void collect(const std::string& prefix, ParamList& out) const;
};

struct LstmState {
  Tensor h, c;  // 1 x H each
};

LstmState lstm_initial(const LstmParams& p);
LstmState lstm_step(const LstmParams& p, const Tensor& x, const LstmState& s);

struct BiLstmParams {
  LstmParams fwd, bwd;

  static BiLstmParams init(int in, int hidden_per_dir, std::mt19937_64& rng);
  void collect(const std::string& prefix, ParamList& out) const;
};

struct BiLstmOut {
  Tensor per_position;  // m x 2H, row t = [fwd state at t || bwd state at t]
  Tensor final;         // 1 x 2H, [last fwd state || last bwd state]
};

/// Runs both directions over the rows of an m x in matrix.
BiLstmOut bilstm_run(const BiLstmParams& p, const Tensor& inputs);

struct AttentionHeadParams {
  Tensor w_query, w_key, w_value;  // d x d each

  static AttentionHeadParams init(int d, std::mt19937_64& rng);
  void collect(const std::string& prefix, ParamList& out) const;
};

struct TransformerLayerParams {
  std::vector<AttentionHeadParams> heads;
  Tensor ln1_gain, ln1_bias;  // applied to the attention residual
  Tensor ln2_gain, ln2_bias;  // applied around the block output
  Tensor ffn_w1, ffn_b1, ffn_w2, ffn_b2;
  Tensor prelu_slope;

  static TransformerLayerParams init(int d, int heads, int ffn,
                                     std::mt19937_64& rng);
  void collect(const std::string& prefix, ParamList& out) const;
};

struct GatLayerParams {
  std::vector<AttentionHeadParams> heads;
  Tensor prelu_slope;

  static GatLayerParams init(int d, int heads, std::mt19937_64& rng);
  void collect(const std::string& prefix, ParamList& out) const;
};

enum class EncoderKind { GraphTransformer, Gat, EntityOnly };

struct EncoderParams {
  BiLstmParams phrase_rnn;  // hidden d/2 per direction
  BiLstmParams title_rnn;
  Tensor relation_fwd_emb;  // n_labels x d, row 0 = unseen label
  Tensor relation_rev_emb;
  Tensor global_emb;        // 1 x d
  std::vector<TransformerLayerParams> layers;
  std::vector<GatLayerParams> gat_layers;  // populated for the GAT variant

  static EncoderParams init(int d, int heads, int layers, int ffn,
                            int n_labels, EncoderKind kind,
                            std::mt19937_64& rng);
  void collect(const std::string& prefix, ParamList& out) const;
};

/// Attention mask over in-neighbors: mask[i*n+j] = adjacency[j*n+i], with the
/// diagonal forced off (the Eq. 1 residual carries self-information).
std::vector<uint8_t> neighborhood_mask(const PreparedGraph& pg);

/// Single-head neighborhood attention weights for query row q against all
/// key rows: masked softmax of (k_j W_K)^T (q W_Q) / sqrt(d) over the mask.
Tensor attention_head(const Tensor& q, const Tensor& keys,
                      const std::vector<uint8_t>& mask, const Tensor& w_query,
                      const Tensor& w_key);

Tensor embed_vertices(const PreparedGraph& pg, const EncoderParams& enc,
                      const Tensor& word_emb, const Vocabulary& vocab,
                      const LabelVocab& labels);

Tensor graph_transformer_layer(const Tensor& v_in,
                               const std::vector<uint8_t>& mask,
                               const TransformerLayerParams& p,
                               double dropout_rate, bool training,
                               std::mt19937_64& rng);

Tensor gat_encoder_layer(const Tensor& v_in, const std::vector<uint8_t>& mask,
                         const GatLayerParams& p, double dropout_rate,
                         bool training, std::mt19937_64& rng);

/// embed_vertices followed by the stacked layers of the configured variant.
Tensor encode_graph(const PreparedGraph& pg, const EncoderParams& enc,
                    const Tensor& word_emb, const Vocabulary& vocab,
                    const LabelVocab& labels, EncoderKind kind,
                    double dropout_rate, bool training, std::mt19937_64& rng);

/// Per-token BiLSTM states over the title; rejects empty titles.
Tensor encode_title(const std::vector<std::string>& tokens,
                    const EncoderParams& enc, const Tensor& word_emb,
                    const Vocabulary& vocab);

}  // namespace kg2text
