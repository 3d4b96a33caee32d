// The full graph-to-text model: shared word embeddings, graph and title
// encoders, and the copy decoder, plus the teacher-forced loss and a
// forward-only session for search-based generation.

#pragma once

#include <random>
#include <string>
#include <vector>

#include "kg2text/decoder.hpp"
#include "kg2text/encoder.hpp"
#include "kg2text/preprocess.hpp"

namespace kg2text {

struct ModelConfig {
  int d = 500;
  int heads = 4;
  int layers = 6;
  int ffn = 2000;
  double dropout = 0.3;
  EncoderKind encoder = EncoderKind::GraphTransformer;
  bool copy_enabled = true;
};

/// Per-step probability target: vocabulary id plus the copy candidates whose
/// surface realizes the target unit.
struct ScoredTarget {
  int vocab_id;
  std::vector<size_t> aligned;
};

struct GraphToTextModel {
  ModelConfig cfg;
  Vocabulary vocab;
  LabelVocab labels;
  Tensor word_emb;  // |vocab| x d, shared by encoders and decoder
  EncoderParams encoder;
  DecoderParams decoder;

  static GraphToTextModel init(const ModelConfig& cfg, Vocabulary vocab,
                               LabelVocab labels, std::mt19937_64& rng);

  ParamList named_params() const;

  /// Relation-free graph for the entity-only variant, full graph otherwise.
  PreparedGraph variant_graph(const KnowledgeGraph& kg) const;

  struct Forward {
    PreparedGraph pg;
    Tensor vertex_enc;
    Tensor title_enc;
    DecodeInputs inputs;
    DecoderState state0;
  };
  Forward encode_instance(const std::vector<std::string>& title_tokens,
                          const KnowledgeGraph& kg, bool training,
                          std::mt19937_64& rng) const;

  struct LossInfo {
    Tensor loss;        // mean per-timestep negative log likelihood
    size_t clamped = 0; // timesteps whose probability hit the 1e-12 floor
    size_t steps = 0;
  };
  LossInfo instance_loss(const PreparedInstance& inst, bool training,
                         std::mt19937_64& rng) const;
};

/// Mean over timesteps of -log P(target_t), with P from the copy/vocabulary
/// mixture (or the vocabulary alone when the copy path is disabled).
/// Probabilities below 1e-12 are clamped before the log and counted.
GraphToTextModel::LossInfo sequence_loss(const std::vector<StepOutput>& steps,
                                         const std::vector<ScoredTarget>& targets,
                                         bool copy_enabled);

/// Forward-only decoding interface over the event space
/// [0, |vocab|) = vocabulary tokens, [|vocab|, |vocab|+n_cand) = copies.
class InferenceSession {
 public:
  InferenceSession(const GraphToTextModel& model,
                   const std::vector<std::string>& title_tokens,
                   const KnowledgeGraph& kg);

  struct State {
    DecoderState dec;
  };
  struct StepResult {
    std::vector<double> logprobs;  // over events
    State state;
  };

  State init_state() const;
  StepResult step(const State& s, int prev_event) const;

  int n_events() const;
  int eos_event() const { return Vocabulary::kEos; }
  int bos_event() const { return Vocabulary::kBos; }
  /// Surface tokens an event emits (canonical phrases may be several).
  std::vector<std::string> expand(int event) const;

 private:
  const GraphToTextModel& model_;
  GraphToTextModel::Forward fwd_;
  int vocab_size_;
};

}  // namespace kg2text
