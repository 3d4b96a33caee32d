// Random fixtures shared by unit and acceptance tests.

#pragma once

#include <random>
#include <string>
#include <vector>

#include "kg2text/graph.hpp"

namespace kg2text::testing {

inline const std::vector<std::string>& relation_labels() {
  static const std::vector<std::string> kLabels{
      "Compare",      "Used-for",     "Feature-of",
      "Hyponym-of",   "Evaluate-for", "Conjunction"};
  return kLabels;
}

inline const std::vector<std::string>& entity_types() {
  static const std::vector<std::string> kTypes{
      "Task", "Method", "Metric", "Material", "OtherScientificTerm"};
  return kTypes;
}

// Random knowledge graph with up to max_entities entities and max_edges
// distinct non-self-loop labeled edges.
inline KnowledgeGraph random_kg(std::mt19937_64& rng, int max_entities = 10,
                                int max_edges = 8) {
  KnowledgeGraph kg;
  std::uniform_int_distribution<int> n_ent(0, max_entities);
  const int e = n_ent(rng);
  for (int i = 0; i < e; ++i) {
    std::uniform_int_distribution<int> n_words(1, 3);
    std::vector<std::string> phrase;
    const int words = n_words(rng);
    for (int w = 0; w < words; ++w)
      phrase.push_back("term" + std::to_string(i) + "_" + std::to_string(w));
    std::uniform_int_distribution<size_t> ty(0, entity_types().size() - 1);
    kg.entities.push_back({phrase, entity_types()[ty(rng)]});
  }
  if (e >= 2) {
    std::uniform_int_distribution<int> n_rel(0, max_edges);
    std::uniform_int_distribution<int> pick_ent(0, e - 1);
    std::uniform_int_distribution<size_t> pick_label(
        0, relation_labels().size() - 1);
    const int r = n_rel(rng);
    for (int k = 0; k < r; ++k) {
      const int h = pick_ent(rng);
      int t = pick_ent(rng);
      if (h == t) continue;
      KnowledgeGraph::Edge edge{h, relation_labels()[pick_label(rng)], t};
      bool dup = false;
      for (const auto& ex : kg.edges)
        dup = dup || (ex.head == edge.head && ex.tail == edge.tail &&
                      ex.label == edge.label);
      if (!dup) kg.edges.push_back(edge);
    }
  }
  return kg;
}

}  // namespace kg2text::testing
