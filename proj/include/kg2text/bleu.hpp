// Corpus-level BLEU: geometric mean of clipped n-gram precisions times a
// brevity penalty, scaled to [0, 100].

#pragma once

#include <string>
#include <vector>

namespace kg2text {

/// One reference per candidate. Orders whose candidate n-gram total is zero
/// corpus-wide are excluded from the geometric mean; orders with zero matches
/// score an epsilon (1e-9) precision so short outputs stay finite.
double bleu(const std::vector<std::vector<std::string>>& candidates,
            const std::vector<std::vector<std::string>>& references,
            int max_n = 4);

}  // namespace kg2text
