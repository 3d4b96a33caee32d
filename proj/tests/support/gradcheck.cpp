#include "support/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace kg2text::testing {

GradCheckResult check_gradients(const ParamList& params,
                                const std::function<double()>& loss_fn,
                                double h, size_t max_elements_per_param) {
  GradCheckResult res;
  for (const auto& np : params) {
    Tensor p = np.tensor;
    const size_t n = p.size();
    const size_t stride =
        max_elements_per_param == 0 || n <= max_elements_per_param
            ? 1
            : (n + max_elements_per_param - 1) / max_elements_per_param;
    for (size_t i = 0; i < n; i += stride) {
      const double orig = p.data()[i];
      p.data()[i] = orig + h;
      const double lp = loss_fn();
      p.data()[i] = orig - h;
      const double lm = loss_fn();
      p.data()[i] = orig;
      const double fd = (lp - lm) / (2.0 * h);
      const double an = p.has_grad() ? p.grad()[i] : 0.0;
      const double denom = std::max({std::fabs(fd), std::fabs(an), 1e-6});
      const double rel = std::fabs(fd - an) / denom;
      ++res.checked;
      if (rel > res.max_rel_err) {
        res.max_rel_err = rel;
        res.worst = np.name + "[" + std::to_string(i) + "]";
      }
    }
  }
  return res;
}

}  // namespace kg2text::testing
