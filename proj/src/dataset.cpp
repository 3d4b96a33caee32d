#include "kg2text/dataset.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

#include "json.hpp"

namespace kg2text {

using nlohmann::json;

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  std::istringstream in(text);
  std::string tok;
  while (in >> tok) tokens.push_back(tok);
  return tokens;
}

std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

SciAnnotation annotation_from_json(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw SchemaError(std::string("invalid JSON: ") + e.what());
  }
  SciAnnotation a;
  try {
    a.title = tokenize(j.at("title").get<std::string>());
    a.abstract = tokenize(j.at("abstract").get<std::string>());
    for (const auto& ent : j.at("entities")) {
      EntityMention m;
      m.phrase = tokenize(ent.at("mention").get<std::string>());
      m.type = ent.at("type").get<std::string>();
      if (m.phrase.empty()) throw SchemaError("empty entity mention");
      a.mentions.push_back(std::move(m));
    }
    if (j.contains("coref")) {
      for (const auto& cluster : j.at("coref")) {
        a.coref_clusters.push_back(cluster.get<std::vector<int>>());
      }
    }
    if (j.contains("relations")) {
      for (const auto& rel : j.at("relations")) {
        if (!rel.is_array() || rel.size() != 3) {
          throw SchemaError("relation must be [head, label, tail]");
        }
        a.relations.push_back({rel.at(0).get<int>(),
                               rel.at(1).get<std::string>(),
                               rel.at(2).get<int>()});
      }
    }
  } catch (const json::exception& e) {
    throw SchemaError(std::string("schema violation: ") + e.what());
  }
  // Index-range validation happens here so parse errors carry line numbers.
  const int m = static_cast<int>(a.mentions.size());
  for (const auto& cluster : a.coref_clusters) {
    for (int idx : cluster) {
      if (idx < 0 || idx >= m) {
        throw SchemaError("coref index " + std::to_string(idx) +
                          " out of range");
      }
    }
  }
  for (const auto& r : a.relations) {
    if (r.head < 0 || r.head >= m || r.tail < 0 || r.tail >= m) {
      throw SchemaError("relation index out of range");
    }
  }
  return a;
}

std::string annotation_to_json(const SciAnnotation& a) {
  json j;
  j["title"] = join_tokens(a.title);
  j["abstract"] = join_tokens(a.abstract);
  j["entities"] = json::array();
  for (const auto& m : a.mentions) {
    j["entities"].push_back({{"mention", join_tokens(m.phrase)},
                             {"type", m.type}});
  }
  j["coref"] = a.coref_clusters;
  j["relations"] = json::array();
  for (const auto& r : a.relations) {
    j["relations"].push_back(json::array({r.head, r.label, r.tail}));
  }
  return j.dump();
}

std::vector<SciAnnotation> parse_dataset(const std::string& path, bool strict,
                                         size_t* skipped) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset file: " + path);
  std::vector<SciAnnotation> out;
  std::string line;
  size_t lineno = 0, bad = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(annotation_from_json(line));
    } catch (const SchemaError& e) {
      if (strict) {
        throw SchemaError(path + ":" + std::to_string(lineno) + ": " +
                          e.what());
      }
      ++bad;
      std::cerr << "warning: " << path << ":" << lineno << ": " << e.what()
                << " (skipped)\n";
    }
  }
  if (skipped) *skipped = bad;
  return out;
}

void write_dataset(const std::string& path,
                   const std::vector<SciAnnotation>& dataset) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write dataset file: " + path);
  for (const auto& a : dataset) out << annotation_to_json(a) << "\n";
}

}  // namespace kg2text
