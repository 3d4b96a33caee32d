#include "kg2text/preprocess.hpp"

#include <algorithm>

#include "kg2text/dataset.hpp"

namespace kg2text {

std::vector<std::string> PreparedInstance::reference_tokens() const {
  std::vector<std::string> out;
  for (const auto& unit : target_units) {
    const auto words = tokenize(unit.surface);
    out.insert(out.end(), words.begin(), words.end());
  }
  return out;
}

PreparedInstance canonicalize(const SciAnnotation& a) {
  PreparedInstance inst;
  inst.title_tokens = a.title;
  std::vector<int> entity_of_mention;
  inst.kg = collapse_coref(a, &entity_of_mention);
  inst.pg = prepare_graph(inst.kg);

  // Longest-first mention matching, earlier mention index breaking ties.
  std::vector<int> order(a.mentions.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int x, int y) {
    const auto& px = a.mentions[static_cast<size_t>(x)].phrase;
    const auto& py = a.mentions[static_cast<size_t>(y)].phrase;
    return px.size() != py.size() ? px.size() > py.size() : x < y;
  });

  size_t pos = 0;
  while (pos < a.abstract.size()) {
    int matched = -1;
    for (int mi : order) {
      const auto& phrase = a.mentions[static_cast<size_t>(mi)].phrase;
      if (phrase.empty() || pos + phrase.size() > a.abstract.size()) continue;
      if (std::equal(phrase.begin(), phrase.end(), a.abstract.begin() + static_cast<long>(pos))) {
        matched = mi;
        break;
      }
    }
    if (matched >= 0) {
      const int ent = entity_of_mention[static_cast<size_t>(matched)];
      inst.target_units.push_back(
          {inst.kg.entities[static_cast<size_t>(ent)].joined(), ent});
      pos += a.mentions[static_cast<size_t>(matched)].phrase.size();
    } else {
      inst.target_units.push_back({a.abstract[pos], -1});
      ++pos;
    }
  }
  return inst;
}

std::vector<PreparedInstance> canonicalize_all(
    const std::vector<SciAnnotation>& dataset) {
  std::vector<PreparedInstance> out;
  out.reserve(dataset.size());
  for (const auto& a : dataset) out.push_back(canonicalize(a));
  return out;
}

std::unordered_map<std::string, size_t> count_tokens(
    const std::vector<PreparedInstance>& instances) {
  std::unordered_map<std::string, size_t> counts;
  for (const auto& inst : instances) {
    for (const auto& tok : inst.title_tokens) ++counts[tok];
    for (const auto& unit : inst.target_units) ++counts[unit.surface];
    for (const auto& ent : inst.kg.entities) {
      for (const auto& word : ent.phrase) ++counts[word];
    }
  }
  return counts;
}

Vocabulary build_vocab(const std::vector<PreparedInstance>& train,
                       size_t threshold) {
  return Vocabulary::build(count_tokens(train), threshold);
}

LabelVocab build_label_vocab(const std::vector<PreparedInstance>& train) {
  std::vector<std::string> labels;
  for (const auto& inst : train) {
    for (const auto& edge : inst.kg.edges) labels.push_back(edge.label);
  }
  return LabelVocab::build(labels);
}

}  // namespace kg2text
