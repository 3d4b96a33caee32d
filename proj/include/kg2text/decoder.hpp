// Input-feeding LSTM decoder with multi-head attention over the graph and
// title encodings and a gated copy/vocabulary mixture over next tokens.

#pragma once

#include <random>
#include <string>
#include <vector>

#include "kg2text/encoder.hpp"
#include "kg2text/graph.hpp"
#include "kg2text/params.hpp"
#include "kg2text/tensor.hpp"
#include "kg2text/vocab.hpp"

namespace kg2text {

struct DecoderParams {
  Tensor init_w, init_b;  // global-vertex encoding -> [h0 || cell0]
  LstmParams lstm;        // input [word emb || c_{t-1}] of width 3d, hidden d
  std::vector<AttentionHeadParams> graph_attn;
  std::vector<AttentionHeadParams> title_attn;
  Tensor copy_w_query;    // 3d x d
  Tensor copy_w_key;      // d x d
  Tensor copy_gate_w;     // 3d x 1
  Tensor copy_gate_b;     // 1
  Tensor vocab_w;         // 3d x |vocab|
  Tensor vocab_b;         // |vocab|

  static DecoderParams init(int d, int heads, int vocab_size,
                            std::mt19937_64& rng);
  void collect(const std::string& prefix, ParamList& out) const;
};

struct DecoderState {
  Tensor h, cell;  // 1 x d
  Tensor ctx;      // 1 x 2d, [c_g || c_s] from the previous step
};

struct CopyCandidate {
  enum class Source { Entity, Title } source;
  int index;            // entity index or title position
  std::string surface;  // canonical phrase or title token
};

/// Per-sequence cache: encodings plus the attention key/value projections
/// that do not change across decoding steps.
struct DecodeInputs {
  Tensor vertex_enc;  // |V| x d
  Tensor title_enc;   // m x d
  std::vector<CopyCandidate> candidates;
  std::vector<Tensor> graph_keys, graph_vals;  // per head; vals pre-sliced
  std::vector<Tensor> title_keys, title_vals;
  Tensor copy_keys;  // n_cand x d

  int n_candidates() const { return static_cast<int>(candidates.size()); }
};

DecodeInputs make_decode_inputs(const DecoderParams& p,
                                const Tensor& vertex_enc,
                                const Tensor& title_enc,
                                const PreparedGraph& pg,
                                const std::vector<std::string>& title_tokens);

/// Learned affine map of the global-vertex encoding to (h0, cell0); the
/// initial context vector is zero.
DecoderState decoder_initial_state(const DecoderParams& p,
                                   const Tensor& vertex_enc,
                                   int global_index);

/// Multi-head attention context per Eqs. 6-7: query h, one weight vector per
/// head over all rows, value projections sliced to d/N and concatenated,
/// residual added.
Tensor graph_context(const Tensor& h, const Tensor& vertex_enc,
                     const std::vector<AttentionHeadParams>& heads);
Tensor title_context(const Tensor& h, const Tensor& title_enc,
                     const std::vector<AttentionHeadParams>& heads);

/// p = sigmoid(w_copy [h || c] + b_copy).
Tensor copy_gate(const Tensor& h, const Tensor& ctx, const DecoderParams& p);

struct StepOutput {
  Tensor p;            // copy probability, scalar
  Tensor alpha_copy;   // 1 x n_candidates
  Tensor alpha_vocab;  // 1 x |vocab|
  DecoderState state;
};

/// One decoder step: LSTM over [embed(prev) || c_{t-1}], fresh contexts,
/// copy gate, copy attention over candidates, vocabulary softmax.
/// Unknown previous tokens map to <unk>.
StepOutput decode_step(const DecoderParams& p, const DecodeInputs& inputs,
                       const DecoderState& state, int prev_token_id,
                       const Tensor& word_emb);

/// P(target) = p * sum of aligned copy mass + (1-p) * vocab mass.
Tensor mixture_probability(const StepOutput& step, int target_vocab_id,
                           const std::vector<size_t>& aligned_candidates);

/// Candidate indices whose surface equals the unit surface (entity canonical
/// phrase or title token).
std::vector<size_t> aligned_candidates(const std::vector<CopyCandidate>& cands,
                                       const std::string& surface);

}  // namespace kg2text
