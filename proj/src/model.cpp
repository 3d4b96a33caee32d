#include "kg2text/model.hpp"

#include <cmath>

#include "kg2text/dataset.hpp"

namespace kg2text {

namespace {
constexpr double kProbFloor = 1e-12;
}

GraphToTextModel GraphToTextModel::init(const ModelConfig& cfg,
                                        Vocabulary vocab, LabelVocab labels,
                                        std::mt19937_64& rng) {
  GraphToTextModel m;
  m.cfg = cfg;
  m.vocab = std::move(vocab);
  m.labels = std::move(labels);
  m.word_emb =
      Tensor::uniform_param({m.vocab.size(), cfg.d}, 0.1, rng);
  m.encoder = EncoderParams::init(cfg.d, cfg.heads, cfg.layers, cfg.ffn,
                                  m.labels.size(), cfg.encoder, rng);
  m.decoder = DecoderParams::init(cfg.d, cfg.heads, m.vocab.size(), rng);
  return m;
}

ParamList GraphToTextModel::named_params() const {
  ParamList out;
  out.push_back({"word_emb", word_emb});
  encoder.collect("encoder", out);
  decoder.collect("decoder", out);
  return out;
}

PreparedGraph GraphToTextModel::variant_graph(const KnowledgeGraph& kg) const {
  return cfg.encoder == EncoderKind::EntityOnly ? prepare_entity_graph(kg)
                                                : prepare_graph(kg);
}

GraphToTextModel::Forward GraphToTextModel::encode_instance(
    const std::vector<std::string>& title_tokens, const KnowledgeGraph& kg,
    bool training, std::mt19937_64& rng) const {
  Forward f;
  f.pg = variant_graph(kg);
  f.vertex_enc = encode_graph(f.pg, encoder, word_emb, vocab, labels,
                              cfg.encoder, cfg.dropout, training, rng);
  f.title_enc = encode_title(title_tokens, encoder, word_emb, vocab);
  f.inputs = make_decode_inputs(decoder, f.vertex_enc, f.title_enc, f.pg,
                                 title_tokens);
  f.state0 = decoder_initial_state(decoder, f.vertex_enc, f.pg.global_index());
  return f;
}

GraphToTextModel::LossInfo sequence_loss(
    const std::vector<StepOutput>& steps,
    const std::vector<ScoredTarget>& targets, bool copy_enabled) {
  if (steps.size() != targets.size() || steps.empty()) {
    throw std::invalid_argument("sequence_loss needs one step per target");
  }
  GraphToTextModel::LossInfo info;
  info.steps = steps.size();
  Tensor total;
  for (size_t t = 0; t < steps.size(); ++t) {
    Tensor prob =
        copy_enabled
            ? mixture_probability(steps[t], targets[t].vocab_id,
                                  targets[t].aligned)
            : pick(steps[t].alpha_vocab,
                   static_cast<size_t>(targets[t].vocab_id));
    if (prob.value() < kProbFloor) ++info.clamped;
    Tensor nll = neg(log(clamp_min(prob, kProbFloor)));
    total = total.defined() ? add(total, nll) : nll;
  }
  info.loss = affine(total, 1.0 / static_cast<double>(steps.size()), 0.0);
  return info;
}

GraphToTextModel::LossInfo GraphToTextModel::instance_loss(
    const PreparedInstance& inst, bool training, std::mt19937_64& rng) const {
  Forward f = encode_instance(inst.title_tokens, inst.kg, training, rng);

  std::vector<StepOutput> steps;
  std::vector<ScoredTarget> targets;
  steps.reserve(inst.target_units.size() + 1);
  int prev = Vocabulary::kBos;
  DecoderState state = f.state0;
  for (const auto& unit : inst.target_units) {
    StepOutput step = decode_step(decoder, f.inputs, state, prev, word_emb);
    state = step.state;
    ScoredTarget target{vocab.id(unit.surface), {}};
    if (cfg.copy_enabled)
      target.aligned = aligned_candidates(f.inputs.candidates, unit.surface);
    steps.push_back(std::move(step));
    targets.push_back(std::move(target));
    prev = vocab.id(unit.surface);
  }
  StepOutput last = decode_step(decoder, f.inputs, state, prev, word_emb);
  steps.push_back(std::move(last));
  targets.push_back({Vocabulary::kEos, {}});

  return sequence_loss(steps, targets, cfg.copy_enabled);
}

InferenceSession::InferenceSession(const GraphToTextModel& model,
                                   const std::vector<std::string>& title_tokens,
                                   const KnowledgeGraph& kg)
    : model_(model), vocab_size_(model.vocab.size()) {
  std::mt19937_64 rng(0);  // inference runs with dropout off; rng unused
  fwd_ = model.encode_instance(title_tokens, kg, /*training=*/false, rng);
}

InferenceSession::State InferenceSession::init_state() const {
  return {fwd_.state0};
}

int InferenceSession::n_events() const {
  return model_.cfg.copy_enabled
             ? vocab_size_ + fwd_.inputs.n_candidates()
             : vocab_size_;
}

InferenceSession::StepResult InferenceSession::step(const State& s,
                                                    int prev_event) const {
  int prev_token = prev_event;
  if (prev_event >= vocab_size_) {
    const auto& cand =
        fwd_.inputs.candidates[static_cast<size_t>(prev_event - vocab_size_)];
    prev_token = model_.vocab.id(cand.surface);
  }
  StepOutput out =
      decode_step(model_.decoder, fwd_.inputs, s.dec, prev_token,
                  model_.word_emb);
  StepResult res;
  res.state = {out.state};
  res.logprobs.resize(static_cast<size_t>(n_events()));
  const double p = model_.cfg.copy_enabled ? out.p.value() : 0.0;
  for (int i = 0; i < vocab_size_; ++i) {
    res.logprobs[static_cast<size_t>(i)] =
        std::log((1.0 - p) * out.alpha_vocab.at(static_cast<size_t>(i)));
  }
  if (model_.cfg.copy_enabled) {
    for (int j = 0; j < fwd_.inputs.n_candidates(); ++j) {
      res.logprobs[static_cast<size_t>(vocab_size_ + j)] =
          std::log(p * out.alpha_copy.at(static_cast<size_t>(j)));
    }
  }
  return res;
}

std::vector<std::string> InferenceSession::expand(int event) const {
  if (event < vocab_size_) return {model_.vocab.token(event)};
  const auto& cand =
      fwd_.inputs.candidates[static_cast<size_t>(event - vocab_size_)];
  return tokenize(cand.surface);
}

}  // namespace kg2text
