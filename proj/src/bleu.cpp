#include "kg2text/bleu.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace kg2text {

namespace {

constexpr double kEps = 1e-9;

std::map<std::vector<std::string>, size_t> ngram_counts(
    const std::vector<std::string>& tokens, int n) {
  std::map<std::vector<std::string>, size_t> counts;
  if (static_cast<int>(tokens.size()) < n) return counts;
  for (size_t i = 0; i + static_cast<size_t>(n) <= tokens.size(); ++i) {
    ++counts[{tokens.begin() + static_cast<long>(i),
              tokens.begin() + static_cast<long>(i) + n}];
  }
  return counts;
}

}  // namespace

double bleu(const std::vector<std::vector<std::string>>& candidates,
            const std::vector<std::vector<std::string>>& references,
            int max_n) {
  if (candidates.empty() || candidates.size() != references.size()) {
    throw std::invalid_argument(
        "bleu needs equally many candidates and references, at least one");
  }
  std::vector<size_t> matched(static_cast<size_t>(max_n), 0);
  std::vector<size_t> total(static_cast<size_t>(max_n), 0);
  size_t cand_len = 0, ref_len = 0;
  for (size_t i = 0; i < candidates.size(); ++i) {
    cand_len += candidates[i].size();
    ref_len += references[i].size();
    for (int n = 1; n <= max_n; ++n) {
      const auto cand = ngram_counts(candidates[i], n);
      const auto ref = ngram_counts(references[i], n);
      for (const auto& [gram, count] : cand) {
        total[static_cast<size_t>(n - 1)] += count;
        auto it = ref.find(gram);
        if (it != ref.end()) {
          matched[static_cast<size_t>(n - 1)] += std::min(count, it->second);
        }
      }
    }
  }
  if (cand_len == 0 || total[0] == 0) return 0.0;

  double log_precision = 0.0;
  int orders = 0;
  for (int n = 1; n <= max_n; ++n) {
    const size_t t = total[static_cast<size_t>(n - 1)];
    if (t == 0) continue;  // no candidate n-grams of this order anywhere
    const size_t m = matched[static_cast<size_t>(n - 1)];
    const double p = m > 0 ? static_cast<double>(m) / static_cast<double>(t)
                           : kEps;
    log_precision += std::log(p);
    ++orders;
  }
  if (orders == 0) return 0.0;

  const double brevity =
      cand_len >= ref_len
          ? 1.0
          : std::exp(1.0 - static_cast<double>(ref_len) /
                               static_cast<double>(cand_len));
  return 100.0 * brevity * std::exp(log_precision / orders);
}

}  // namespace kg2text
