// Frequency-thresholded token vocabulary with reserved control ids.

#pragma once

#include <string>
#include <unordered_map>
#include <vector>

namespace kg2text {

class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kBos = 2;
  static constexpr int kEos = 3;

  Vocabulary();

  /// Keeps tokens whose total count is >= min_freq, ids ordered by
  /// (count desc, token asc) after the four reserved ids.
  static Vocabulary build(const std::unordered_map<std::string, size_t>& counts,
                          size_t min_freq);
  /// Rebuild from a saved id-ordered token list (including the reserved ids).
  static Vocabulary from_tokens(const std::vector<std::string>& tokens);

  int id(const std::string& token) const;  // kUnk when absent
  bool contains(const std::string& token) const;
  const std::string& token(int id) const;
  int size() const { return static_cast<int>(tokens_.size()); }
  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

/// Relation-label lookup; id 0 is reserved for labels unseen at build time.
class LabelVocab {
 public:
  LabelVocab();
  static LabelVocab build(const std::vector<std::string>& labels);
  static LabelVocab from_labels(const std::vector<std::string>& stored);

  int id(const std::string& label) const;  // 0 when unseen
  int size() const { return static_cast<int>(labels_.size()); }
  const std::vector<std::string>& labels() const { return labels_; }

 private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string, int> ids_;
};

}  // namespace kg2text
