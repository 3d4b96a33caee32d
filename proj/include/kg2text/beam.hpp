// Beam search over a step model. The model exposes an event space (vocabulary
// tokens plus copy candidates); hypotheses accumulate summed log-probability
// with no length normalization. Hypotheses that emit eos are frozen and
// compete by final score.

#pragma once

#include <algorithm>
#include <stdexcept>
#include <string>
#include <vector>

namespace kg2text {

struct GenResult {
  std::vector<int> events;          // chosen events, eos excluded
  std::vector<std::string> tokens;  // expanded surface tokens
  double score = 0.0;               // sum of event log-probabilities
  bool finished = false;            // true iff eos was reached within max_len
};

// Model requirements:
//   State init_state() const-ish;
//   StepResult step(const State&, int prev_event);   // .logprobs, .state
//   int n_events(); int eos_event(); int bos_event();
//   std::vector<std::string> expand(int event);
template <class Model>
GenResult beam_search(const Model& model, int beam_size, int max_len) {
  if (beam_size < 1) throw std::invalid_argument("beam size must be >= 1");
  if (max_len < 1) throw std::invalid_argument("max_len must be >= 1");

  struct Hyp {
    typename Model::State state;
    std::vector<int> events;
    std::vector<double> next_logprobs;
    double score = 0.0;
    int emitted = 0;
  };

  auto first = model.step(model.init_state(), model.bos_event());
  std::vector<Hyp> beams;
  beams.push_back({first.state, {}, first.logprobs, 0.0, 0});

  GenResult best_finished;
  bool have_finished = false;
  GenResult best_capped;
  bool have_capped = false;

  auto consider_finished = [&](GenResult r, bool finished) {
    auto& slot = finished ? best_finished : best_capped;
    bool& have = finished ? have_finished : have_capped;
    if (!have || r.score > slot.score) {
      slot = std::move(r);
      have = true;
    }
  };

  const int n_events = model.n_events();
  while (!beams.empty()) {
    // Expand: score every (hypothesis, event) pair, keep the top beam_size.
    struct Cand {
      double score;
      size_t hyp;
      int event;
    };
    std::vector<Cand> cands;
    cands.reserve(beams.size() * static_cast<size_t>(n_events));
    for (size_t h = 0; h < beams.size(); ++h) {
      for (int e = 0; e < n_events; ++e) {
        cands.push_back(
            {beams[h].score + beams[h].next_logprobs[static_cast<size_t>(e)],
             h, e});
      }
    }
    const size_t keep = std::min(cands.size(), static_cast<size_t>(beam_size));
    std::partial_sort(cands.begin(), cands.begin() + static_cast<long>(keep),
                      cands.end(), [](const Cand& a, const Cand& b) {
                        if (a.score != b.score) return a.score > b.score;
                        if (a.event != b.event) return a.event < b.event;
                        return a.hyp < b.hyp;
                      });

    std::vector<Hyp> next;
    for (size_t k = 0; k < keep; ++k) {
      const Cand& c = cands[k];
      const Hyp& parent = beams[c.hyp];
      if (c.event == model.eos_event()) {
        GenResult r;
        r.events = parent.events;
        r.score = c.score;
        r.finished = true;
        for (int ev : r.events) {
          auto words = model.expand(ev);
          r.tokens.insert(r.tokens.end(), words.begin(), words.end());
        }
        consider_finished(std::move(r), true);
        continue;
      }
      const auto words = model.expand(c.event);
      Hyp child;
      child.events = parent.events;
      child.events.push_back(c.event);
      child.score = c.score;
      child.emitted = parent.emitted + static_cast<int>(words.size());
      if (child.emitted >= max_len) {
        GenResult r;
        r.events = child.events;
        r.score = child.score;
        r.finished = false;
        for (int ev : r.events) {
          auto w = model.expand(ev);
          r.tokens.insert(r.tokens.end(), w.begin(), w.end());
        }
        consider_finished(std::move(r), false);
        continue;
      }
      auto stepped = model.step(parent.state, c.event);
      child.state = stepped.state;
      child.next_logprobs = std::move(stepped.logprobs);
      next.push_back(std::move(child));
    }
    beams = std::move(next);
    // Frozen finished hypotheses compete by final score: once the best live
    // beam cannot beat the best finished score, stop.
    if (have_finished) {
      bool can_improve = false;
      for (const auto& hyp : beams) {
        if (hyp.score > best_finished.score) can_improve = true;
      }
      if (!can_improve) break;
    }
  }

  if (have_finished) return best_finished;
  if (have_capped) return best_capped;  // flagged: finished == false
  return {};
}

template <class Model>
GenResult greedy_decode(const Model& model, int max_len) {
  return beam_search(model, 1, max_len);
}

}  // namespace kg2text
