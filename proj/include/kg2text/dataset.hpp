// Line-delimited JSON dataset records: title, abstract, entity mentions,
// coreference clusters, and labeled relations.

#pragma once

#include <string>
#include <vector>

#include "kg2text/graph.hpp"

namespace kg2text {

std::vector<std::string> tokenize(const std::string& text);
std::string join_tokens(const std::vector<std::string>& tokens);

/// Parses one dataset file. In strict mode any malformed line aborts with a
/// SchemaError naming the line; otherwise malformed lines are skipped and
/// counted into *skipped when provided.
std::vector<SciAnnotation> parse_dataset(const std::string& path,
                                         bool strict = true,
                                         size_t* skipped = nullptr);

std::string annotation_to_json(const SciAnnotation& a);
SciAnnotation annotation_from_json(const std::string& line);

void write_dataset(const std::string& path,
                   const std::vector<SciAnnotation>& dataset);

}  // namespace kg2text
