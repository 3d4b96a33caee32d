// Entity retrieval from titles: a shared title/entity embedding space trained
// with a cosine embedding loss plus negative sampling, and Jaccard retrieval
// over training-title entity sets with a cosine-ranked entity pool.

#pragma once

#include <random>
#include <set>
#include <string>
#include <vector>

#include "kg2text/encoder.hpp"
#include "kg2text/preprocess.hpp"
#include "kg2text/tensor.hpp"
#include "kg2text/vocab.hpp"

namespace kg2text {

/// Shared text encoder: word embeddings + BiLSTM, final states pooled to one
/// fixed-width vector for titles and entity phrases alike.
struct EntityEmbedder {
  Tensor word_emb;
  BiLstmParams rnn;
  int dim = 0;

  static EntityEmbedder init(int d, int vocab_size, std::mt19937_64& rng);
  ParamList named_params() const;
  Tensor embed(const std::vector<std::string>& tokens,
               const Vocabulary& vocab) const;
};

/// Positive pairs score 1 - cos; negatives max(0, cos - margin).
/// Zero-norm inputs are treated as cosine 0.
Tensor cosine_embedding_loss(const Tensor& a, const Tensor& b, bool positive,
                             double margin);

double cosine_similarity(const std::vector<double>& a,
                         const std::vector<double>& b);

std::string normalize_phrase(const std::string& phrase);

/// |a ∩ b| / |a ∪ b|; 0 when both sets are empty.
double jaccard(const std::set<std::string>& a, const std::set<std::string>& b);

struct TitleIndexEntry {
  std::vector<std::string> title_tokens;
  std::set<std::string> title_entities;     // normalized phrases in the title
  std::set<std::string> abstract_entities;  // normalized phrases
};

struct TitleIndex {
  std::vector<TitleIndexEntry> entries;
  std::set<std::string> known_phrases;  // union over all entries
};

TitleIndex build_title_index(const std::vector<PreparedInstance>& train);

void save_title_index(const std::string& path, const TitleIndex& index);
TitleIndex load_title_index(const std::string& path);

struct EmbedderTrainConfig {
  int negatives_per_positive = 5;
  double margin = 0.0;
  int epochs = 10;
  double lr = 0.05;
  double momentum = 0.9;
  uint64_t seed = 1;
};

/// Positives pair each title with each of its abstract entities; negatives
/// are drawn uniformly from other instances' entities. Instances without
/// entities are skipped. Returns the mean loss of the final epoch.
double train_embedder(EntityEmbedder& embedder,
                      const std::vector<PreparedInstance>& train,
                      const Vocabulary& vocab, const EmbedderTrainConfig& cfg);

/// Entities found in the title (or all token subspans of length 1-4 when
/// none), Jaccard retrieval over training titles above the threshold, pooled
/// abstract entities ranked by cosine similarity to the title embedding,
/// deduplicated, capped at K.
std::vector<std::string> infer_entities(
    const std::vector<std::string>& title_tokens, const TitleIndex& index,
    const EntityEmbedder& embedder, const Vocabulary& vocab, int k = 12,
    double threshold = 0.7);

}  // namespace kg2text
