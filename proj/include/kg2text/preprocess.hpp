// Corpus preprocessing: coreference canonicalization of abstracts into
// atomic target units, graph preparation, and vocabulary construction.

#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "kg2text/graph.hpp"
#include "kg2text/vocab.hpp"

namespace kg2text {

/// One target-side unit: a plain token, or a whole canonical entity mention
/// treated as a single unit (entity >= 0 indexes into the instance graph).
struct TargetUnit {
  std::string surface;
  int entity = -1;
};

struct PreparedInstance {
  std::vector<std::string> title_tokens;
  KnowledgeGraph kg;
  PreparedGraph pg;
  std::vector<TargetUnit> target_units;

  /// Canonicalized abstract with multi-word units expanded back to tokens.
  std::vector<std::string> reference_tokens() const;
};

/// Rewrites every coreference-chain mention in the abstract with the
/// cluster's canonical mention and marks entity occurrences as atomic units.
PreparedInstance canonicalize(const SciAnnotation& a);

std::vector<PreparedInstance> canonicalize_all(
    const std::vector<SciAnnotation>& dataset);

/// Token counts over title tokens, abstract units, and entity phrase words.
std::unordered_map<std::string, size_t> count_tokens(
    const std::vector<PreparedInstance>& instances);

/// Vocabulary from the training split only; tokens occurring fewer than
/// `threshold` times map to <unk>.
Vocabulary build_vocab(const std::vector<PreparedInstance>& train,
                       size_t threshold);

/// Relation-label vocabulary from the training split.
LabelVocab build_label_vocab(const std::vector<PreparedInstance>& train);

}  // namespace kg2text
