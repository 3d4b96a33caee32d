#include <cmath>
#include <random>

#include "doctest.h"
#include "kg2text/optim.hpp"
#include "kg2text/tensor.hpp"
#include "support/gradcheck.hpp"

using namespace kg2text;

namespace {

// Independent triple-loop product used as the matmul oracle.
std::vector<double> naive_matmul(const std::vector<double>& a,
                                 const std::vector<double>& b, int m, int k,
                                 int n) {
  std::vector<double> out(static_cast<size_t>(m) * n, 0.0);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      for (int p = 0; p < k; ++p)
        out[i * n + j] += a[i * k + p] * b[p * n + j];
  return out;
}

Tensor random_tensor(std::vector<int> shape, std::mt19937_64& rng,
                     bool requires_grad = true) {
  Tensor t = Tensor::zeros(std::move(shape));
  std::uniform_real_distribution<double> dist(-1.5, 1.5);
  for (double& v : t.data()) v = dist(rng);
  t.set_requires_grad(requires_grad);
  return t;
}

// Finite-difference check of a scalar-valued expression of its inputs.
void check_op_gradients(const std::vector<Tensor>& inputs,
                        const std::function<Tensor()>& expr,
                        double tol = 1e-4) {
  {
    Tape tape;
    Tensor loss = expr();
    tape.backward(loss);
  }
  ParamList params;
  for (size_t i = 0; i < inputs.size(); ++i)
    params.push_back({"in" + std::to_string(i), inputs[i]});
  auto res = kg2text::testing::check_gradients(
      params, [&] { return expr().value(); });
  CAPTURE(res.worst);
  CHECK(res.max_rel_err < tol);
}

}  // namespace

TEST_CASE("matmul identity and oracle") {
  Tensor eye = Tensor::from({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  Tensor m = Tensor::from({3, 2}, {1, 2, 3, 4, 5, 6});
  Tensor prod = matmul(eye, m);
  CHECK(prod.data() == m.data());

  Tensor a = Tensor::from({2, 2}, {1, 2, 3, 4});
  Tensor b = Tensor::from({2, 1}, {5, 6});
  Tensor c = matmul(a, b);
  CHECK(c.data() == std::vector<double>{17, 39});
  CHECK(c.data() == naive_matmul(a.data(), b.data(), 2, 2, 1));
}

TEST_CASE("matmul random against naive oracle") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    std::uniform_int_distribution<int> dim(1, 6);
    const int m = dim(rng), k = dim(rng), n = dim(rng);
    Tensor a = random_tensor({m, k}, rng, false);
    Tensor b = random_tensor({k, n}, rng, false);
    Tensor c = matmul(a, b);
    const auto expect = naive_matmul(a.data(), b.data(), m, k, n);
    for (size_t i = 0; i < expect.size(); ++i)
      CHECK(c.data()[i] == doctest::Approx(expect[i]).epsilon(1e-12));
  }
}

TEST_CASE("matmul shape mismatch names both shapes") {
  Tensor a = Tensor::zeros({2, 3});
  Tensor b = Tensor::zeros({2, 3});
  CHECK_THROWS_WITH_AS(matmul(a, b), doctest::Contains("(2x3)"), ShapeError);
}

TEST_CASE("masked_softmax basics") {
  Tensor logits = Tensor::from({3}, {0, 0, 0});
  Tensor out = masked_softmax(logits, {1, 1, 1});
  for (double v : out.data()) CHECK(v == doctest::Approx(1.0 / 3));

  Tensor two = Tensor::from({2}, {5, -100});
  Tensor picked = masked_softmax(two, {1, 0});
  CHECK(picked.data()[0] == doctest::Approx(1.0));
  CHECK(picked.data()[1] == 0.0);

  // Hand oracle: softmax over the first two of [1,2,3] with the third masked.
  Tensor three = Tensor::from({3}, {1, 2, 3});
  Tensor part = masked_softmax(three, {1, 1, 0});
  const double z = std::exp(1.0) + std::exp(2.0);
  CHECK(part.data()[0] == doctest::Approx(std::exp(1.0) / z).epsilon(1e-12));
  CHECK(part.data()[1] == doctest::Approx(std::exp(2.0) / z).epsilon(1e-12));
  CHECK(part.data()[2] == 0.0);
}

TEST_CASE("masked_softmax all-false mask returns zeros") {
  Tensor logits = Tensor::from({4}, {3, 1, -2, 9});
  Tensor out = masked_softmax(logits, {0, 0, 0, 0});
  for (double v : out.data()) CHECK(v == 0.0);
}

TEST_CASE("masked_softmax sums to one over unmasked entries") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    std::uniform_int_distribution<int> len(1, 12);
    const int n = len(rng);
    Tensor logits = random_tensor({n}, rng, false);
    std::vector<uint8_t> mask(static_cast<size_t>(n));
    std::bernoulli_distribution coin(0.6);
    bool any = false;
    for (auto& b : mask) {
      b = coin(rng);
      any = any || b;
    }
    Tensor out = masked_softmax(logits, mask);
    double total = 0.0;
    for (size_t i = 0; i < mask.size(); ++i) {
      if (!mask[i]) CHECK(out.data()[i] == 0.0);
      total += out.data()[i];
    }
    if (any)
      CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    else
      CHECK(total == 0.0);
  }
}

TEST_CASE("layer_norm examples and statistics") {
  Tensor gain = Tensor::full({4}, 1.0);
  Tensor bias = Tensor::zeros({4});

  Tensor constant = Tensor::full({4}, 3.5);
  Tensor zeroed = layer_norm(constant, gain, bias);
  for (double v : zeroed.data()) CHECK(v == doctest::Approx(0.0));

  Tensor pm = Tensor::from({2}, {1, -1});
  Tensor g2 = Tensor::full({2}, 1.0), b2 = Tensor::zeros({2});
  Tensor kept = layer_norm(pm, g2, b2);
  CHECK(kept.data()[0] == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(kept.data()[1] == doctest::Approx(-1.0).epsilon(1e-5));

  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    Tensor x = random_tensor({16}, rng, false);
    Tensor g = Tensor::full({16}, 1.0), b = Tensor::zeros({16});
    Tensor out = layer_norm(x, g, b);
    double mean = 0.0;
    for (double v : out.data()) mean += v;
    mean /= 16.0;
    double var = 0.0;
    for (double v : out.data()) var += (v - mean) * (v - mean);
    var /= 16.0;
    CHECK(std::fabs(mean) <= 1e-9);
    CHECK(var == doctest::Approx(1.0).epsilon(1e-4));
  }
}

TEST_CASE("activation spot values") {
  CHECK(sigmoid(Tensor::scalar(0.0)).value() == doctest::Approx(0.5));
  CHECK(prelu(Tensor::scalar(-2.0), Tensor::scalar(0.25)).value() ==
        doctest::Approx(-0.5));
  CHECK(prelu(Tensor::scalar(2.0), Tensor::scalar(0.25)).value() ==
        doctest::Approx(2.0));

  // tanh'(0) = 1 via the tape, checked against finite differences.
  Tensor x = Tensor::scalar(0.0);
  x.set_requires_grad(true);
  {
    Tape tape;
    Tensor y = tanh(x);
    tape.backward(y);
  }
  CHECK(x.grad()[0] == doctest::Approx(1.0));
  const double h = 1e-5;
  const double fd = (std::tanh(h) - std::tanh(-h)) / (2 * h);
  CHECK(x.grad()[0] == doctest::Approx(fd).epsilon(1e-6));
}

TEST_CASE("dropout identity cases and zero fraction") {
  std::mt19937_64 rng(123);
  Tensor x = random_tensor({50, 40}, rng, false);

  Tensor same_rate0 = dropout(x, 0.0, true, rng);
  CHECK(same_rate0.data() == x.data());
  Tensor same_eval = dropout(x, 0.3, false, rng);
  CHECK(same_eval.data() == x.data());
  CHECK_THROWS_AS(dropout(x, 1.0, true, rng), std::invalid_argument);

  Tensor big = Tensor::full({100, 100}, 1.0);
  Tensor dropped = dropout(big, 0.3, true, rng);
  size_t zeros = 0;
  for (double v : dropped.data()) {
    if (v == 0.0)
      ++zeros;
    else
      CHECK(v == doctest::Approx(1.0 / 0.7));
  }
  const double frac = static_cast<double>(zeros) / 10000.0;
  CHECK(frac > 0.28);
  CHECK(frac < 0.32);
}

TEST_CASE("backward on sum and product") {
  Tensor x = Tensor::from({4}, {1, 2, 3, 4});
  x.set_requires_grad(true);
  {
    Tape tape;
    Tensor loss = sum(x);
    tape.backward(loss);
  }
  for (double g : x.grad()) CHECK(g == doctest::Approx(1.0));

  Tensor a = Tensor::scalar(3.0), b = Tensor::scalar(-2.0);
  a.set_requires_grad(true);
  b.set_requires_grad(true);
  {
    Tape tape;
    Tensor loss = mul(a, b);
    tape.backward(loss);
  }
  CHECK(a.grad()[0] == doctest::Approx(-2.0));
  CHECK(b.grad()[0] == doctest::Approx(3.0));
}

TEST_CASE("backward rejects non-scalar loss") {
  Tensor x = Tensor::from({2}, {1, 2});
  x.set_requires_grad(true);
  Tape tape;
  Tensor y = affine(x, 2.0, 0.0);
  CHECK_THROWS_AS(tape.backward(y), std::invalid_argument);
}

TEST_CASE("gradients accumulate additively across uses") {
  Tensor x = Tensor::scalar(2.0);
  x.set_requires_grad(true);
  {
    Tape tape;
    Tensor y = mul(x, x);  // d/dx x^2 = 2x = 4
    tape.backward(y);
  }
  CHECK(x.grad()[0] == doctest::Approx(4.0));
}

TEST_CASE("each op matches finite differences") {
  std::mt19937_64 rng(2024);

  SUBCASE("matmul") {
    Tensor a = random_tensor({3, 4}, rng), b = random_tensor({4, 2}, rng);
    check_op_gradients({a, b}, [&] { return sum(matmul(a, b)); });
  }
  SUBCASE("transpose") {
    Tensor a = random_tensor({3, 4}, rng);
    Tensor w = random_tensor({3, 4}, rng, false);
    check_op_gradients({a}, [&] { return sum(mul(transpose(a), transpose(w))); });
  }
  SUBCASE("add broadcast row") {
    Tensor a = random_tensor({3, 4}, rng), b = random_tensor({4}, rng);
    Tensor w = random_tensor({3, 4}, rng, false);
    check_op_gradients({a, b}, [&] { return sum(mul(add(a, b), w)); });
  }
  SUBCASE("sub mul div") {
    Tensor a = random_tensor({2, 3}, rng), b = random_tensor({2, 3}, rng);
    for (double& v : b.data()) v += v >= 0 ? 2.0 : -2.0;  // keep away from 0
    check_op_gradients({a, b}, [&] { return sum(div(mul(a, sub(a, b)), b)); });
  }
  SUBCASE("scalar_mul affine neg") {
    Tensor s = random_tensor({1}, rng);
    Tensor t = random_tensor({2, 3}, rng);
    check_op_gradients(
        {s, t}, [&] { return sum(neg(affine(scalar_mul(s, t), 0.7, 0.1))); });
  }
  SUBCASE("sigmoid tanh prelu") {
    Tensor x = random_tensor({2, 5}, rng);
    Tensor slope = Tensor::scalar(0.3);
    slope.set_requires_grad(true);
    check_op_gradients({x, slope}, [&] {
      return sum(prelu(mul(sigmoid(x), tanh(x)), slope));
    });
  }
  SUBCASE("log sqrt clamp_min") {
    Tensor x = random_tensor({6}, rng);
    for (double& v : x.data()) v = std::fabs(v) + 0.5;
    check_op_gradients({x}, [&] {
      return sum(log(sqrt(clamp_min(x, 0.75))));
    });
  }
  SUBCASE("masked_softmax") {
    Tensor x = random_tensor({6}, rng);
    Tensor w = random_tensor({6}, rng, false);
    std::vector<uint8_t> mask{1, 0, 1, 1, 0, 1};
    check_op_gradients({x}, [&] {
      return sum(mul(masked_softmax(x, mask), w));
    });
  }
  SUBCASE("masked_softmax_rows") {
    Tensor x = random_tensor({3, 4}, rng);
    Tensor w = random_tensor({3, 4}, rng, false);
    std::vector<uint8_t> mask{1, 0, 1, 1, 0, 0, 0, 0, 1, 1, 1, 1};
    check_op_gradients({x}, [&] {
      return sum(mul(masked_softmax_rows(x, mask), w));
    });
  }
  SUBCASE("layer_norm") {
    Tensor x = random_tensor({3, 5}, rng);
    Tensor g = random_tensor({5}, rng), b = random_tensor({5}, rng);
    Tensor w = random_tensor({3, 5}, rng, false);
    check_op_gradients({x, g, b}, [&] {
      return sum(mul(layer_norm(x, g, b), w));
    });
  }
  SUBCASE("gather pick slice concat") {
    Tensor table = random_tensor({5, 3}, rng);
    Tensor other = random_tensor({2, 3}, rng);
    check_op_gradients({table, other}, [&] {
      Tensor rows = gather_rows(table, {4, 0, 2, 0});
      Tensor joined = concat_rows({rows, other});
      Tensor wide = concat_cols({joined, joined});
      Tensor part = slice_cols(slice_rows(wide, 1, 4), 1, 4);
      return pick_sum(part, {0, 3, 7});
    });
  }
  SUBCASE("softmax row") {
    Tensor x = random_tensor({1, 5}, rng);
    check_op_gradients({x}, [&] { return pick(softmax(x), 2); });
  }
}

TEST_CASE("sgd momentum step") {
  SUBCASE("zero gradient leaves params unchanged") {
    Tensor p = Tensor::from({3}, {1, 2, 3});
    std::vector<double> g(3, 0.0), v(3, 0.0);
    sgd_momentum_step(p, g, v, 0.1, 0.9);
    CHECK(p.data() == std::vector<double>{1, 2, 3});
  }
  SUBCASE("momentum zero is plain sgd") {
    Tensor p = Tensor::from({2}, {1.0, -1.0});
    std::vector<double> g{0.5, 0.25}, v(2, 0.0);
    sgd_momentum_step(p, g, v, 0.2, 0.0);
    CHECK(p.data()[0] == doctest::Approx(1.0 - 0.2 * 0.5));
    CHECK(p.data()[1] == doctest::Approx(-1.0 - 0.2 * 0.25));
  }
  SUBCASE("two steps follow the hand recurrence") {
    // v1 = -0.1, p += -0.1; v2 = 0.9*(-0.1) - 0.1 = -0.19, p += -0.19.
    Tensor p = Tensor::from({1}, {0.0});
    std::vector<double> g{1.0}, v{0.0};
    sgd_momentum_step(p, g, v, 0.1, 0.9);
    sgd_momentum_step(p, g, v, 0.1, 0.9);
    CHECK(p.data()[0] == doctest::Approx(-0.29));
  }
  SUBCASE("rejects bad momentum and shapes") {
    Tensor p = Tensor::from({2}, {0, 0});
    std::vector<double> g{1, 1}, v{0, 0}, bad{0};
    CHECK_THROWS_AS(sgd_momentum_step(p, g, v, 0.1, 1.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(sgd_momentum_step(p, g, bad, 0.1, 0.5), ShapeError);
  }
}

TEST_CASE("deterministic forward and backward under a fixed seed") {
  auto run = [] {
    std::mt19937_64 rng(99);
    Tensor x = random_tensor({4, 4}, rng);
    Tensor w = random_tensor({4, 4}, rng);
    Tape tape;
    Tensor h = dropout(tanh(matmul(x, w)), 0.3, true, rng);
    Tensor loss = sum(h);
    tape.backward(loss);
    std::vector<double> out = loss.data();
    out.insert(out.end(), x.grad().begin(), x.grad().end());
    out.insert(out.end(), w.grad().begin(), w.grad().end());
    return out;
  };
  CHECK(run() == run());
}
