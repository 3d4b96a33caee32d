#include "kg2text/graph.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <tuple>

namespace kg2text {

namespace {

size_t phrase_chars(const std::vector<std::string>& phrase) {
  size_t n = 0;
  for (const auto& w : phrase) n += w.size();
  return n;
}

void validate_annotation(const SciAnnotation& a) {
  const int m = static_cast<int>(a.mentions.size());
  std::vector<uint8_t> clustered(a.mentions.size(), 0);
  for (const auto& cluster : a.coref_clusters) {
    for (int idx : cluster) {
      if (idx < 0 || idx >= m) {
        throw SchemaError("coref mention index " + std::to_string(idx) +
                          " out of range (have " + std::to_string(m) +
                          " mentions)");
      }
      if (clustered[static_cast<size_t>(idx)]) {
        throw SchemaError("mention " + std::to_string(idx) +
                          " appears in more than one coref cluster");
      }
      clustered[static_cast<size_t>(idx)] = 1;
    }
  }
  for (const auto& r : a.relations) {
    if (r.head < 0 || r.head >= m || r.tail < 0 || r.tail >= m) {
      throw SchemaError("relation endpoint out of range: (" +
                        std::to_string(r.head) + "," + r.label + "," +
                        std::to_string(r.tail) + ")");
    }
  }
}

}  // namespace

std::string Entity::joined() const {
  std::string s;
  for (size_t i = 0; i < phrase.size(); ++i) {
    if (i) s += ' ';
    s += phrase[i];
  }
  return s;
}

KnowledgeGraph collapse_coref(const SciAnnotation& a,
                              std::vector<int>* entity_of_mention) {
  validate_annotation(a);
  const size_t m = a.mentions.size();

  // Group mentions: each cluster is one group, every unclustered mention its
  // own group, ordered by earliest mention index.
  std::vector<int> group_of(m, -1);
  std::vector<std::vector<int>> groups;
  std::vector<uint8_t> clustered(m, 0);
  for (const auto& cluster : a.coref_clusters) {
    if (cluster.empty()) continue;
    std::vector<int> sorted = cluster;
    std::sort(sorted.begin(), sorted.end());
    for (int idx : sorted) clustered[static_cast<size_t>(idx)] = 1;
    groups.push_back(std::move(sorted));
  }
  for (size_t i = 0; i < m; ++i) {
    if (!clustered[i]) groups.push_back({static_cast<int>(i)});
  }
  std::sort(groups.begin(), groups.end(),
            [](const auto& x, const auto& y) { return x.front() < y.front(); });

  KnowledgeGraph kg;
  std::map<std::string, int> by_phrase;  // merged surface forms
  for (const auto& group : groups) {
    // Canonical mention: longest in tokens, then characters, earliest wins.
    int canon = group.front();
    for (int idx : group) {
      const auto& cand = a.mentions[static_cast<size_t>(idx)].phrase;
      const auto& best = a.mentions[static_cast<size_t>(canon)].phrase;
      if (cand.size() > best.size() ||
          (cand.size() == best.size() &&
           phrase_chars(cand) > phrase_chars(best))) {
        canon = idx;
      }
    }
    Entity e{a.mentions[static_cast<size_t>(canon)].phrase,
             a.mentions[static_cast<size_t>(canon)].type};
    int id;
    auto it = by_phrase.find(e.joined());
    if (it == by_phrase.end()) {
      id = static_cast<int>(kg.entities.size());
      by_phrase.emplace(e.joined(), id);
      kg.entities.push_back(std::move(e));
    } else {
      id = it->second;
    }
    for (int idx : group) group_of[static_cast<size_t>(idx)] = id;
  }
  if (entity_of_mention) *entity_of_mention = group_of;

  std::set<std::tuple<int, std::string, int>> seen;
  for (const auto& r : a.relations) {
    const int h = group_of[static_cast<size_t>(r.head)];
    const int t = group_of[static_cast<size_t>(r.tail)];
    if (h == t) continue;  // self-loop after collapse
    if (seen.emplace(h, r.label, t).second) {
      kg.edges.push_back({h, r.label, t});
    }
  }
  return kg;
}

namespace {

PreparedGraph prepare_impl(const KnowledgeGraph& kg, bool with_relations) {
  PreparedGraph pg;
  const int e = static_cast<int>(kg.entities.size());
  const int r = with_relations ? static_cast<int>(kg.edges.size()) : 0;
  const int n = e + 2 * r + 1;
  pg.n_entities = e;
  pg.vertices.reserve(static_cast<size_t>(n));
  for (int i = 0; i < e; ++i) {
    const auto& ent = kg.entities[static_cast<size_t>(i)];
    pg.vertices.push_back({VertexKind::Entity, ent.phrase, ent.type, {}});
  }
  for (int k = 0; k < r; ++k) {
    const auto& label = kg.edges[static_cast<size_t>(k)].label;
    pg.vertices.push_back({VertexKind::RelationFwd, {}, {}, label});
    pg.vertices.push_back({VertexKind::RelationRev, {}, {}, label});
  }
  pg.vertices.push_back({VertexKind::Global, {}, {}, {}});
  pg.adjacency.assign(static_cast<size_t>(n) * n, 0);
  auto link = [&](int i, int j) {
    pg.adjacency[static_cast<size_t>(i) * n + j] = 1;
  };
  for (int k = 0; k < r; ++k) {
    const auto& edge = kg.edges[static_cast<size_t>(k)];
    const int fwd = e + 2 * k, rev = fwd + 1;
    link(edge.head, fwd);
    link(fwd, edge.tail);
    link(edge.tail, rev);
    link(rev, edge.head);
  }
  const int global = n - 1;
  for (int i = 0; i < e; ++i) {
    link(global, i);
    link(i, global);
  }
  return pg;
}

}  // namespace

PreparedGraph prepare_graph(const KnowledgeGraph& kg) {
  return prepare_impl(kg, true);
}

PreparedGraph prepare_entity_graph(const KnowledgeGraph& kg) {
  return prepare_impl(kg, false);
}

int PreparedGraph::directed_edge_count() const {
  return static_cast<int>(
      std::accumulate(adjacency.begin(), adjacency.end(), size_t{0}));
}

bool PreparedGraph::weakly_connected() const {
  const int n = size();
  if (n <= 1) return true;
  std::vector<uint8_t> seen(static_cast<size_t>(n), 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int reached = 1;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (int u = 0; u < n; ++u) {
      if (!seen[static_cast<size_t>(u)] && (edge(v, u) || edge(u, v))) {
        seen[static_cast<size_t>(u)] = 1;
        ++reached;
        stack.push_back(u);
      }
    }
  }
  return reached == n;
}

KnowledgeGraph unprepare_graph(const PreparedGraph& pg) {
  KnowledgeGraph kg;
  const int n = pg.size();
  std::vector<int> entity_at(static_cast<size_t>(n), -1);
  for (int i = 0; i < n; ++i) {
    const auto& v = pg.vertices[static_cast<size_t>(i)];
    if (v.kind == VertexKind::Entity) {
      entity_at[static_cast<size_t>(i)] = static_cast<int>(kg.entities.size());
      kg.entities.push_back({v.phrase, v.type});
    }
  }

  auto sole_entity_neighbor = [&](int vtx, bool incoming) {
    int found = -1;
    for (int u = 0; u < n; ++u) {
      const bool hit = incoming ? pg.edge(u, vtx) : pg.edge(vtx, u);
      if (!hit) continue;
      if (found != -1) {
        throw StructureError("relation vertex " + std::to_string(vtx) +
                             " has degree > 1");
      }
      found = u;
    }
    if (found == -1) {
      throw StructureError("relation vertex " + std::to_string(vtx) +
                           " has degree 0");
    }
    if (entity_at[static_cast<size_t>(found)] == -1) {
      throw StructureError("relation vertex " + std::to_string(vtx) +
                           " is linked to a non-entity vertex");
    }
    return entity_at[static_cast<size_t>(found)];
  };

  // Forward vertices carry the edges; each must have a reverse twin with
  // swapped endpoints and the same label.
  std::multiset<std::tuple<int, std::string, int>> rev_seen;
  for (int i = 0; i < n; ++i) {
    const auto& v = pg.vertices[static_cast<size_t>(i)];
    if (v.kind == VertexKind::RelationFwd) {
      kg.edges.push_back(
          {sole_entity_neighbor(i, true), v.label, sole_entity_neighbor(i, false)});
    } else if (v.kind == VertexKind::RelationRev) {
      rev_seen.emplace(sole_entity_neighbor(i, true), v.label,
                       sole_entity_neighbor(i, false));
    }
  }
  for (const auto& edge : kg.edges) {
    auto it = rev_seen.find({edge.tail, edge.label, edge.head});
    if (it == rev_seen.end()) {
      throw StructureError("missing reverse vertex for edge (" +
                           std::to_string(edge.head) + "," + edge.label + "," +
                           std::to_string(edge.tail) + ")");
    }
    rev_seen.erase(it);
  }
  if (!rev_seen.empty()) {
    throw StructureError("unmatched reverse relation vertex");
  }
  return kg;
}

bool same_graph(const KnowledgeGraph& a, const KnowledgeGraph& b) {
  if (a.entities.size() != b.entities.size() ||
      a.edges.size() != b.edges.size())
    return false;
  // Entity-order-insensitive: match on (phrase, type), then compare edge
  // multisets under the induced index mapping.
  std::map<std::pair<std::string, std::string>, int> where;
  for (size_t i = 0; i < b.entities.size(); ++i) {
    where[{b.entities[i].joined(), b.entities[i].type}] = static_cast<int>(i);
  }
  if (where.size() != b.entities.size()) return false;
  std::vector<int> remap(a.entities.size());
  for (size_t i = 0; i < a.entities.size(); ++i) {
    auto it = where.find({a.entities[i].joined(), a.entities[i].type});
    if (it == where.end()) return false;
    remap[i] = it->second;
  }
  std::multiset<std::tuple<int, std::string, int>> ea, eb;
  for (const auto& e : a.edges)
    ea.emplace(remap[static_cast<size_t>(e.head)], e.label,
               remap[static_cast<size_t>(e.tail)]);
  for (const auto& e : b.edges) eb.emplace(e.head, e.label, e.tail);
  return ea == eb;
}

StatsReport corpus_stats(const std::vector<SciAnnotation>& dataset) {
  StatsReport rep;
  rep.instances = dataset.size();
  if (dataset.empty()) return rep;
  std::set<std::string> tvocab, avocab, kvocab;
  size_t vert = 0, labeled = 0, prepared = 0;
  for (const auto& a : dataset) {
    rep.title_tokens += a.title.size();
    rep.abstract_tokens += a.abstract.size();
    for (const auto& w : a.title) tvocab.insert(w);
    for (const auto& w : a.abstract) avocab.insert(w);
    const KnowledgeGraph kg = collapse_coref(a);
    rep.entities += kg.entities.size();
    for (const auto& e : kg.entities)
      for (const auto& w : e.phrase) kvocab.insert(w);
    for (const auto& edge : kg.edges) kvocab.insert(edge.label);
    vert += kg.entities.size() + kg.edges.size();
    labeled += kg.edges.size();
    prepared += 4 * kg.edges.size() + 2 * kg.entities.size();
  }
  const double n = static_cast<double>(dataset.size());
  rep.title_vocab = tvocab.size();
  rep.abstract_vocab = avocab.size();
  rep.kg_vocab = kvocab.size();
  rep.avg_title_len = static_cast<double>(rep.title_tokens) / n;
  rep.avg_abstract_len = static_cast<double>(rep.abstract_tokens) / n;
  rep.avg_vertices = static_cast<double>(vert) / n;
  rep.avg_edges_labeled = static_cast<double>(labeled) / n;
  rep.avg_edges_prepared = static_cast<double>(prepared) / n;
  return rep;
}

}  // namespace kg2text
