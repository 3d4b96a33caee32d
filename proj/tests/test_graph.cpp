#include <random>

#include "doctest.h"
#include "kg2text/graph.hpp"
#include "support/synthetic.hpp"

using namespace kg2text;

namespace {

SciAnnotation three_mention_annotation() {
  SciAnnotation a;
  a.title = {"a", "study"};
  a.abstract = {"we", "study", "things"};
  a.mentions = {{{"parsing"}, "Task"},
                {{"neural", "models"}, "Method"},
                {{"accuracy"}, "Metric"}};
  a.relations = {{1, "Used-for", 0}};
  return a;
}

}  // namespace

TEST_CASE("collapse_coref identity when no clusters") {
  const KnowledgeGraph kg = collapse_coref(three_mention_annotation());
  CHECK(kg.entities.size() == 3);
  REQUIRE(kg.edges.size() == 1);
  CHECK(kg.entities[static_cast<size_t>(kg.edges[0].head)].joined() ==
        "neural models");
  CHECK(kg.entities[static_cast<size_t>(kg.edges[0].tail)].joined() ==
        "parsing");
}

TEST_CASE("collapse_coref picks the longest mention as canonical") {
  SciAnnotation a;
  a.mentions = {{{"HMM"}, "Method"}, {{"hidden", "Markov", "models"}, "Method"}};
  a.coref_clusters = {{0, 1}};
  const KnowledgeGraph kg = collapse_coref(a);
  REQUIRE(kg.entities.size() == 1);
  CHECK(kg.entities[0].joined() == "hidden Markov models");
}

TEST_CASE("collapse_coref tie-break prefers more characters then earliest") {
  SciAnnotation a;
  a.mentions = {{{"ab", "c"}, "Task"}, {{"abcd", "ef"}, "Task"}};
  a.coref_clusters = {{0, 1}};
  CHECK(collapse_coref(a).entities[0].joined() == "abcd ef");

  SciAnnotation b;
  b.mentions = {{{"one", "two"}, "Task"}, {{"six", "ten"}, "Task"}};
  b.coref_clusters = {{0, 1}};
  CHECK(collapse_coref(b).entities[0].joined() == "one two");
}

TEST_CASE("collapse_coref drops relations collapsed into self-loops") {
  SciAnnotation a = three_mention_annotation();
  a.coref_clusters = {{0, 1}};  // head and tail of the only relation
  const KnowledgeGraph kg = collapse_coref(a);
  CHECK(kg.entities.size() == 2);
  CHECK(kg.edges.empty());
}

TEST_CASE("collapse_coref merges duplicate surface forms and dedups edges") {
  SciAnnotation a;
  a.mentions = {{{"svm"}, "Method"},
                {{"svm"}, "Method"},
                {{"text"}, "Material"}};
  a.relations = {{0, "Used-for", 2}, {1, "Used-for", 2}};
  const KnowledgeGraph kg = collapse_coref(a);
  CHECK(kg.entities.size() == 2);
  CHECK(kg.edges.size() == 1);
}

TEST_CASE("collapse_coref rejects dangling indices") {
  SciAnnotation a = three_mention_annotation();
  a.coref_clusters = {{0, 7}};
  CHECK_THROWS_AS(collapse_coref(a), SchemaError);

  SciAnnotation b = three_mention_annotation();
  b.relations.push_back({0, "Compare", 9});
  CHECK_THROWS_AS(collapse_coref(b), SchemaError);
}

TEST_CASE("prepare_graph on the empty graph") {
  const PreparedGraph pg = prepare_graph(KnowledgeGraph{});
  CHECK(pg.size() == 1);
  CHECK(pg.vertices[0].kind == VertexKind::Global);
  CHECK(pg.directed_edge_count() == 0);
  CHECK(pg.weakly_connected());
}

TEST_CASE("prepare_graph hand enumeration for 2 entities, 1 edge") {
  KnowledgeGraph kg;
  kg.entities = {{{"a"}, "Task"}, {{"b"}, "Method"}};
  kg.edges = {{0, "Used-for", 1}};
  const PreparedGraph pg = prepare_graph(kg);
  REQUIRE(pg.size() == 5);
  CHECK(pg.directed_edge_count() == 8);
  CHECK(pg.n_entities == 2);
  // h -> fwd -> t and t -> rev -> h.
  CHECK(pg.edge(0, 2));
  CHECK(pg.edge(2, 1));
  CHECK(pg.edge(1, 3));
  CHECK(pg.edge(3, 0));
  // Global vertex last, linked both ways to every entity, no self loops.
  const int g = pg.global_index();
  CHECK(pg.vertices[static_cast<size_t>(g)].kind == VertexKind::Global);
  CHECK(pg.edge(g, 0));
  CHECK(pg.edge(0, g));
  CHECK(pg.edge(g, 1));
  CHECK(pg.edge(1, g));
  for (int i = 0; i < pg.size(); ++i) CHECK_FALSE(pg.edge(i, i));
  CHECK_FALSE(pg.edge(g, 2));  // global does not touch relation vertices
}

TEST_CASE("prepare_entity_graph keeps only entities and global") {
  KnowledgeGraph kg;
  kg.entities = {{{"a"}, "Task"}, {{"b"}, "Method"}, {{"c"}, "Metric"}};
  kg.edges = {{0, "Used-for", 1}};
  const PreparedGraph pg = prepare_entity_graph(kg);
  CHECK(pg.size() == 4);
  CHECK(pg.directed_edge_count() == 6);
}

TEST_CASE("unprepare round-trips hand graphs") {
  KnowledgeGraph kg;
  kg.entities = {{{"a"}, "Task"}, {{"b"}, "Method"}};
  kg.edges = {{0, "Used-for", 1}};
  CHECK(same_graph(unprepare_graph(prepare_graph(kg)), kg));

  // Figure-2-style shape: several entities sharing relations.
  KnowledgeGraph fig;
  fig.entities = {{{"v1"}, "Task"}, {{"v2"}, "Method"}, {{"v3"}, "Metric"}};
  fig.edges = {{0, "Used-for", 1}, {2, "Evaluate-for", 0}};
  CHECK(same_graph(unprepare_graph(prepare_graph(fig)), fig));
}

TEST_CASE("prepare/unprepare laws over random graphs") {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 300; ++trial) {
    const KnowledgeGraph kg = kg2text::testing::random_kg(rng);
    const auto e = static_cast<int>(kg.entities.size());
    const auto r = static_cast<int>(kg.edges.size());
    const PreparedGraph pg = prepare_graph(kg);
    CHECK(pg.size() == e + 2 * r + 1);
    CHECK(pg.directed_edge_count() == 4 * r + 2 * e);
    if (e >= 1) CHECK(pg.weakly_connected());
    CHECK(same_graph(unprepare_graph(pg), kg));
  }
}

TEST_CASE("unprepare rejects malformed relation degrees") {
  KnowledgeGraph kg;
  kg.entities = {{{"a"}, "Task"}, {{"b"}, "Method"}};
  kg.edges = {{0, "Used-for", 1}};
  PreparedGraph pg = prepare_graph(kg);
  // Disconnect the forward vertex from its tail.
  pg.adjacency[2 * static_cast<size_t>(pg.size()) + 1] = 0;
  CHECK_THROWS_AS(unprepare_graph(pg), StructureError);

  PreparedGraph doubled = prepare_graph(kg);
  // Give the reverse vertex a second outgoing edge.
  doubled.adjacency[3 * static_cast<size_t>(doubled.size()) + 1] = 1;
  CHECK_THROWS_AS(unprepare_graph(doubled), StructureError);
}

TEST_CASE("corpus_stats hand count and empty dataset") {
  CHECK(corpus_stats({}).instances == 0);
  CHECK(corpus_stats({}).avg_vertices == 0.0);

  SciAnnotation a;
  a.title = {"short", "title"};
  a.abstract = {"one", "two", "three", "four"};
  a.mentions = {{{"x"}, "Task"}, {{"y"}, "Method"}, {{"z"}, "Metric"}};
  a.relations = {{0, "Compare", 1}};
  const StatsReport rep = corpus_stats({a});
  CHECK(rep.instances == 1);
  CHECK(rep.avg_vertices == doctest::Approx(4.0));
  CHECK(rep.avg_edges_labeled == doctest::Approx(1.0));
  CHECK(rep.avg_edges_prepared == doctest::Approx(4.0 + 6.0));
  CHECK(rep.avg_title_len == doctest::Approx(2.0));
  CHECK(rep.avg_abstract_len == doctest::Approx(4.0));
  CHECK(rep.entities == 3);
}
