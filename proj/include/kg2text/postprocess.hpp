// Repetition pruning over generated token streams: drops repeated sentences
// and repeated coordinated clauses.

#pragma once

#include <string>
#include <vector>

namespace kg2text {

/// Sentences end at "." "!" "?" tokens. A sentence repeating an earlier
/// sentence (lowercased, punctuation stripped) is dropped; within a sentence,
/// clauses split on "," / "and" / ";" that repeat an earlier clause are
/// dropped and the survivors are rejoined with the sentence's first marker.
std::vector<std::string> postprocess(const std::vector<std::string>& tokens);

}  // namespace kg2text
