// Knowledge-graph construction from IE annotations: coreference collapse,
// conversion to the unlabeled connected directed graph consumed by the
// encoder, the inverse transform, and corpus statistics.

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace kg2text {

struct SchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct StructureError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EntityMention {
  std::vector<std::string> phrase;  // tokenized surface form
  std::string type;
};

/// One annotated title/abstract pair as produced by an IE system.
struct SciAnnotation {
  std::vector<std::string> title;
  std::vector<std::string> abstract;
  std::vector<EntityMention> mentions;
  std::vector<std::vector<int>> coref_clusters;  // mention-index sets
  struct Relation {
    int head;
    std::string label;
    int tail;
  };
  std::vector<Relation> relations;
};

struct Entity {
  std::vector<std::string> phrase;  // canonical (longest) mention
  std::string type;
  std::string joined() const;
};

/// Canonical entities plus typed directed edges, after coreference collapse.
struct KnowledgeGraph {
  std::vector<Entity> entities;
  struct Edge {
    int head;
    std::string label;
    int tail;
  };
  std::vector<Edge> edges;
};

enum class VertexKind : uint8_t { Entity, RelationFwd, RelationRev, Global };

struct Vertex {
  VertexKind kind;
  std::vector<std::string> phrase;  // Entity vertices
  std::string type;                 // Entity vertices
  std::string label;                // RelationFwd / RelationRev vertices
};

/// Unlabeled connected directed graph: entity vertices first, then a
/// forward/reverse vertex pair per labeled edge, then one global vertex.
struct PreparedGraph {
  std::vector<Vertex> vertices;
  std::vector<uint8_t> adjacency;  // row-major |V| x |V|, a[i][j] = edge i->j
  int n_entities = 0;

  int size() const { return static_cast<int>(vertices.size()); }
  bool edge(int i, int j) const {
    return adjacency[static_cast<size_t>(i) * vertices.size() + j] != 0;
  }
  int global_index() const { return size() - 1; }
  int directed_edge_count() const;
  bool weakly_connected() const;
};

/// Collapses coreference clusters to canonical entities (longest mention in
/// tokens, then characters, earliest first on ties), merges duplicate
/// surface forms, remaps relations, drops self-loops and duplicate edges.
/// When entity_of_mention is given it receives, per mention index, the
/// collapsed entity index.
KnowledgeGraph collapse_coref(const SciAnnotation& a,
                              std::vector<int>* entity_of_mention = nullptr);

/// Replaces each labeled edge with a forward and a reverse relation vertex
/// and adds a global vertex linked in both directions to every entity.
PreparedGraph prepare_graph(const KnowledgeGraph& kg);

/// Entity-only variant: entities plus the global vertex, no relation
/// vertices (used when generating from an unstructured entity collection).
PreparedGraph prepare_entity_graph(const KnowledgeGraph& kg);

/// Inverse of prepare_graph; throws StructureError on malformed relation
/// vertex degrees or a missing reverse twin.
KnowledgeGraph unprepare_graph(const PreparedGraph& pg);

bool same_graph(const KnowledgeGraph& a, const KnowledgeGraph& b);

/// Per-instance averages and corpus totals for a parsed dataset.
struct StatsReport {
  size_t instances = 0;
  size_t title_vocab = 0;
  size_t abstract_vocab = 0;
  size_t kg_vocab = 0;
  size_t title_tokens = 0;
  size_t abstract_tokens = 0;
  size_t entities = 0;
  double avg_title_len = 0.0;
  double avg_abstract_len = 0.0;
  double avg_vertices = 0.0;        // entities + relations, pre-preparation
  double avg_edges_labeled = 0.0;   // labeled relations per instance
  double avg_edges_prepared = 0.0;  // directed edges after preparation
};

StatsReport corpus_stats(const std::vector<SciAnnotation>& dataset);

}  // namespace kg2text
