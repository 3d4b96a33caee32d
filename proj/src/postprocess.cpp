#include "kg2text/postprocess.hpp"

#include <algorithm>
#include <cctype>
#include <set>

namespace kg2text {

namespace {

bool is_sentence_end(const std::string& tok) {
  return tok == "." || tok == "!" || tok == "?";
}

bool is_clause_marker(const std::string& tok) {
  return tok == "," || tok == "and" || tok == ";";
}

bool is_punct_token(const std::string& tok) {
  return std::all_of(tok.begin(), tok.end(),
                     [](unsigned char c) { return std::ispunct(c); });
}

std::string normalized(const std::vector<std::string>& tokens) {
  std::string out;
  for (const auto& tok : tokens) {
    if (is_punct_token(tok)) continue;
    if (!out.empty()) out += ' ';
    for (char c : tok)
      out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

// Drops repeated clauses within one sentence (terminator excluded);
// unchanged when nothing repeats.
std::vector<std::string> prune_clauses(const std::vector<std::string>& sent) {
  std::vector<std::vector<std::string>> clauses;
  std::string first_marker;
  std::vector<std::string> current;
  for (const auto& tok : sent) {
    if (is_clause_marker(tok)) {
      if (first_marker.empty()) first_marker = tok;
      if (!current.empty()) clauses.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(tok);
    }
  }
  if (!current.empty()) clauses.push_back(std::move(current));

  std::set<std::string> seen;
  std::vector<std::vector<std::string>> kept;
  bool dropped = false;
  for (auto& clause : clauses) {
    if (seen.insert(normalized(clause)).second) {
      kept.push_back(std::move(clause));
    } else {
      dropped = true;
    }
  }
  if (!dropped) return sent;

  std::vector<std::string> out;
  for (size_t i = 0; i < kept.size(); ++i) {
    if (i && !first_marker.empty()) out.push_back(first_marker);
    out.insert(out.end(), kept[i].begin(), kept[i].end());
  }
  return out;
}

}  // namespace

std::vector<std::string> postprocess(const std::vector<std::string>& tokens) {
  std::vector<std::string> out;
  std::set<std::string> seen_sentences;
  std::vector<std::string> sentence;
  auto flush = [&](const std::string& terminator) {
    if (sentence.empty() && terminator.empty()) return;
    if (seen_sentences.insert(normalized(sentence)).second) {
      const auto pruned = prune_clauses(sentence);
      out.insert(out.end(), pruned.begin(), pruned.end());
      if (!terminator.empty()) out.push_back(terminator);
    }
    sentence.clear();
  };
  for (const auto& tok : tokens) {
    if (is_sentence_end(tok)) {
      flush(tok);
    } else {
      sentence.push_back(tok);
    }
  }
  flush("");
  return out;
}

}  // namespace kg2text
