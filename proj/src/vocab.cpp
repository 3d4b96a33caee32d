#include "kg2text/vocab.hpp"

#include <algorithm>
#include <stdexcept>

namespace kg2text {

namespace {
const char* kReserved[] = {"<pad>", "<unk>", "<bos>", "<eos>"};
}

Vocabulary::Vocabulary() {
  for (const char* t : kReserved) {
    ids_.emplace(t, static_cast<int>(tokens_.size()));
    tokens_.emplace_back(t);
  }
}

Vocabulary Vocabulary::build(
    const std::unordered_map<std::string, size_t>& counts, size_t min_freq) {
  std::vector<std::pair<std::string, size_t>> kept;
  for (const auto& [token, count] : counts) {
    if (count >= min_freq) kept.emplace_back(token, count);
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  Vocabulary v;
  for (auto& [token, count] : kept) {
    (void)count;
    if (v.ids_.count(token)) continue;  // reserved literal in the corpus
    v.ids_.emplace(token, static_cast<int>(v.tokens_.size()));
    v.tokens_.push_back(token);
  }
  return v;
}

Vocabulary Vocabulary::from_tokens(const std::vector<std::string>& tokens) {
  Vocabulary v;
  if (tokens.size() < 4) throw std::invalid_argument("vocab list too short");
  for (int i = 0; i < 4; ++i) {
    if (tokens[static_cast<size_t>(i)] != kReserved[i]) {
      throw std::invalid_argument("vocab list missing reserved tokens");
    }
  }
  for (size_t i = 4; i < tokens.size(); ++i) {
    v.ids_.emplace(tokens[i], static_cast<int>(v.tokens_.size()));
    v.tokens_.push_back(tokens[i]);
  }
  return v;
}

int Vocabulary::id(const std::string& token) const {
  auto it = ids_.find(token);
  return it == ids_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(const std::string& token) const {
  return ids_.count(token) != 0;
}

const std::string& Vocabulary::token(int id) const {
  return tokens_.at(static_cast<size_t>(id));
}

LabelVocab::LabelVocab() {
  labels_.emplace_back("<unk-label>");
  ids_.emplace(labels_.back(), 0);
}

LabelVocab LabelVocab::build(const std::vector<std::string>& labels) {
  std::vector<std::string> sorted = labels;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  LabelVocab v;
  for (const auto& label : sorted) {
    if (v.ids_.count(label)) continue;
    v.ids_.emplace(label, static_cast<int>(v.labels_.size()));
    v.labels_.push_back(label);
  }
  return v;
}

LabelVocab LabelVocab::from_labels(const std::vector<std::string>& stored) {
  if (stored.empty() || stored[0] != "<unk-label>") {
    throw std::invalid_argument("label list missing reserved slot");
  }
  LabelVocab v;
  for (size_t i = 1; i < stored.size(); ++i) {
    v.ids_.emplace(stored[i], static_cast<int>(v.labels_.size()));
    v.labels_.push_back(stored[i]);
  }
  return v;
}

int LabelVocab::id(const std::string& label) const {
  auto it = ids_.find(label);
  return it == ids_.end() ? 0 : it->second;
}

}  // namespace kg2text
