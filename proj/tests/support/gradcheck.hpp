// Central finite-difference gradient checking against tape gradients.

#pragma once

#include <functional>
#include <string>

#include "kg2text/params.hpp"

namespace kg2text::testing {

struct GradCheckResult {
  double max_rel_err = 0.0;
  std::string worst;   // "name[i]" of the worst element
  size_t checked = 0;
};

// Expects analytic gradients already accumulated on the params (one forward
// and backward pass); loss_fn must recompute the loss value from scratch
// without touching any tape. Checks every element when
// max_elements_per_param == 0, otherwise an evenly strided subsample.
GradCheckResult check_gradients(const ParamList& params,
                                const std::function<double()>& loss_fn,
                                double h = 1e-5,
                                size_t max_elements_per_param = 0);

}  // namespace kg2text::testing
