#include "kg2text/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace kg2text {

namespace {

thread_local Tape* g_active_tape = nullptr;

constexpr double kLayerNormEps = 1e-5;

size_t numel(const std::vector<int>& shape) {
  size_t n = 1;
  for (int d : shape) {
    if (d <= 0) throw ShapeError("non-positive dimension in shape");
    n *= static_cast<size_t>(d);
  }
  return n;
}

std::string shape_to_str(const std::vector<int>& shape) {
  std::ostringstream os;
  os << "(";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << "x";
    os << shape[i];
  }
  os << ")";
  return os.str();
}

void ensure_grad(detail::TensorNode* n) {
  if (n->grad.empty()) n->grad.assign(n->data.size(), 0.0);
}

bool grad_wanted(std::initializer_list<const Tensor*> inputs) {
  if (!Tape::active()) return false;
  for (const Tensor* t : inputs) {
    if (t->requires_grad()) return true;
  }
  return false;
}

using Node = std::shared_ptr<detail::TensorNode>;

}  // namespace

// ---- Tensor -----------------------------------------------------------------

Tensor Tensor::zeros(std::vector<int> shape) {
  auto n = std::make_shared<detail::TensorNode>();
  n->data.assign(numel(shape), 0.0);
  n->shape = std::move(shape);
  return Tensor(std::move(n));
}

Tensor Tensor::full(std::vector<int> shape, double value) {
  Tensor t = zeros(std::move(shape));
  std::fill(t.data().begin(), t.data().end(), value);
  return t;
}

Tensor Tensor::from(std::vector<int> shape, std::vector<double> data) {
  if (numel(shape) != data.size()) {
    throw ShapeError("data length " + std::to_string(data.size()) +
                     " does not match shape " + shape_to_str(shape));
  }
  auto n = std::make_shared<detail::TensorNode>();
  n->shape = std::move(shape);
  n->data = std::move(data);
  return Tensor(std::move(n));
}

Tensor Tensor::scalar(double value) { return from({1}, {value}); }

Tensor Tensor::uniform_param(std::vector<int> shape, double range,
                             std::mt19937_64& rng) {
  Tensor t = zeros(std::move(shape));
  std::uniform_real_distribution<double> dist(-range, range);
  for (double& v : t.data()) v = dist(rng);
  t.set_requires_grad(true);
  return t;
}

Tensor Tensor::xavier_param(int rows, int cols, std::mt19937_64& rng) {
  const double range = std::sqrt(6.0 / (rows + cols));
  return uniform_param({rows, cols}, range, rng);
}

int Tensor::rows() const {
  if (rank() == 1) return 1;
  if (rank() == 2) return dim(0);
  throw ShapeError("rows() needs rank 1 or 2, got " + shape_str());
}

int Tensor::cols() const {
  if (rank() == 1) return dim(0);
  if (rank() == 2) return dim(1);
  throw ShapeError("cols() needs rank 1 or 2, got " + shape_str());
}

double Tensor::value() const {
  if (size() != 1) {
    throw std::invalid_argument("value() requires a scalar tensor, got " +
                                shape_str());
  }
  return node_->data[0];
}

std::vector<double>& Tensor::grad() {
  ensure_grad(node_.get());
  return node_->grad;
}

void Tensor::zero_grad() { node_->grad.clear(); }

std::string Tensor::shape_str() const { return shape_to_str(node_->shape); }

// ---- Tape -------------------------------------------------------------------

Tape::Tape() : prev_(g_active_tape) { g_active_tape = this; }

Tape::~Tape() { g_active_tape = prev_; }

Tape* Tape::active() { return g_active_tape; }

void Tape::record(std::function<void()> backward_step) {
  steps_.push_back(std::move(backward_step));
}

void Tape::backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1) {
    throw std::invalid_argument("backward() requires a scalar loss");
  }
  ensure_grad(loss.node().get());
  loss.node()->grad[0] += 1.0;
  for (auto it = steps_.rbegin(); it != steps_.rend(); ++it) (*it)();
}

// ---- ops --------------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw ShapeError("matmul dimension mismatch: " + a.shape_str() + " x " +
                     b.shape_str());
  }
  const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor out = Tensor::zeros({m, n});
  const double* ad = a.data().data();
  const double* bd = b.data().data();
  double* od = out.data().data();
  for (int i = 0; i < m; ++i) {
    for (int p = 0; p < k; ++p) {
      const double av = ad[i * k + p];
      if (av == 0.0) continue;
      const double* brow = bd + p * n;
      double* orow = od + i * n;
      for (int j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
  if (grad_wanted({&a, &b})) {
    out.set_requires_grad(true);
    Node an = a.node(), bn = b.node(), on = out.node();
    bool ga = a.requires_grad(), gb = b.requires_grad();
    Tape::active()->record([an, bn, on, m, k, n, ga, gb] {
      if (on->grad.empty()) return;
      const double* g = on->grad.data();
      if (ga) {
        ensure_grad(an.get());
        double* da = an->grad.data();
        const double* bd2 = bn->data.data();
        for (int i = 0; i < m; ++i)
          for (int p = 0; p < k; ++p) {
            double acc = 0.0;
            const double* grow = g + i * n;
            const double* brow = bd2 + p * n;
            for (int j = 0; j < n; ++j) acc += grow[j] * brow[j];
            da[i * k + p] += acc;
          }
      }
      if (gb) {
        ensure_grad(bn.get());
        double* db = bn->grad.data();
        const double* ad2 = an->data.data();
        for (int p = 0; p < k; ++p)
          for (int i = 0; i < m; ++i) {
            const double av = ad2[i * k + p];
            if (av == 0.0) continue;
            const double* grow = g + i * n;
            double* drow = db + p * n;
            for (int j = 0; j < n; ++j) drow[j] += av * grow[j];
          }
      }
    });
  }
  return out;
}

Tensor transpose(const Tensor& a) {
  if (a.rank() != 2) throw ShapeError("transpose needs rank 2, got " + a.shape_str());
  const int m = a.dim(0), n = a.dim(1);
  Tensor out = Tensor::zeros({n, m});
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) out.data()[j * m + i] = a.data()[i * n + j];
  if (grad_wanted({&a})) {
    out.set_requires_grad(true);
    Node an = a.node(), on = out.node();
    Tape::active()->record([an, on, m, n] {
      if (on->grad.empty()) return;
      ensure_grad(an.get());
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) an->grad[i * n + j] += on->grad[j * m + i];
    });
  }
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  const bool same = a.shape() == b.shape();
  const bool rowcast = !same && b.rows() == 1 && b.cols() == a.cols();
  if (!same && !rowcast) {
    throw ShapeError("add shape mismatch: " + a.shape_str() + " + " +
                     b.shape_str());
  }
  Tensor out = Tensor::zeros(a.shape());
  const size_t n = a.size(), w = static_cast<size_t>(a.cols());
  for (size_t i = 0; i < n; ++i)
    out.data()[i] = a.data()[i] + (same ? b.data()[i] : b.data()[i % w]);
  if (grad_wanted({&a, &b})) {
    out.set_requires_grad(true);
    Node an = a.node(), bn = b.node(), on = out.node();
    bool ga = a.requires_grad(), gb = b.requires_grad();
    Tape::active()->record([an, bn, on, same, n, w, ga, gb] {
      if (on->grad.empty()) return;
      if (ga) {
        ensure_grad(an.get());
        for (size_t i = 0; i < n; ++i) an->grad[i] += on->grad[i];
      }
      if (gb) {
        ensure_grad(bn.get());
        for (size_t i = 0; i < n; ++i)
          bn->grad[same ? i : i % w] += on->grad[i];
      }
    });
  }
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError("sub shape mismatch: " + a.shape_str() + " - " +
                     b.shape_str());
  }
  Tensor out = Tensor::zeros(a.shape());
  for (size_t i = 0; i < a.size(); ++i)
    out.data()[i] = a.data()[i] - b.data()[i];
  if (grad_wanted({&a, &b})) {
    out.set_requires_grad(true);
    Node an = a.node(), bn = b.node(), on = out.node();
    bool ga = a.requires_grad(), gb = b.requires_grad();
    Tape::active()->record([an, bn, on, ga, gb] {
      if (on->grad.empty()) return;
      if (ga) {
        ensure_grad(an.get());
        for (size_t i = 0; i < on->grad.size(); ++i) an->grad[i] += on->grad[i];
      }
      if (gb) {
        ensure_grad(bn.get());
        for (size_t i = 0; i < on->grad.size(); ++i) bn->grad[i] -= on->grad[i];
      }
    });
  }
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError("mul shape mismatch: " + a.shape_str() + " * " +
                     b.shape_str());
  }
  Tensor out = Tensor::zeros(a.shape());
  for (size_t i = 0; i < a.size(); ++i)
    out.data()[i] = a.data()[i] * b.data()[i];
  if (grad_wanted({&a, &b})) {
    out.set_requires_grad(true);
    Node an = a.node(), bn = b.node(), on = out.node();
    bool ga = a.requires_grad(), gb = b.requires_grad();
    Tape::active()->record([an, bn, on, ga, gb] {
      if (on->grad.empty()) return;
      if (ga) {
        ensure_grad(an.get());
        for (size_t i = 0; i < on->grad.size(); ++i)
          an->grad[i] += on->grad[i] * bn->data[i];
      }
      if (gb) {
        ensure_grad(bn.get());
        for (size_t i = 0; i < on->grad.size(); ++i)
          bn->grad[i] += on->grad[i] * an->data[i];
      }
    });
  }
  return out;
}

Tensor scalar_mul(const Tensor& s, const Tensor& t) {
  if (s.size() != 1) {
    throw ShapeError("scalar_mul needs a scalar first operand, got " +
                     s.shape_str());
  }
  const double sv = s.at(0);
  Tensor out = Tensor::zeros(t.shape());
  for (size_t i = 0; i < t.size(); ++i) out.data()[i] = sv * t.data()[i];
  if (grad_wanted({&s, &t})) {
    out.set_requires_grad(true);
    Node sn = s.node(), tn = t.node(), on = out.node();
    bool gs = s.requires_grad(), gt = t.requires_grad();
    Tape::active()->record([sn, tn, on, sv, gs, gt] {
      if (on->grad.empty()) return;
      if (gs) {
        ensure_grad(sn.get());
        double acc = 0.0;
        for (size_t i = 0; i < on->grad.size(); ++i)
          acc += on->grad[i] * tn->data[i];
        sn->grad[0] += acc;
      }
      if (gt) {
        ensure_grad(tn.get());
        for (size_t i = 0; i < on->grad.size(); ++i)
          tn->grad[i] += sv * on->grad[i];
      }
    });
  }
  return out;
}

Tensor affine(const Tensor& t, double k, double c) {
  Tensor out = Tensor::zeros(t.shape());
  for (size_t i = 0; i < t.size(); ++i) out.data()[i] = k * t.data()[i] + c;
  if (grad_wanted({&t})) {
    out.set_requires_grad(true);
    Node tn = t.node(), on = out.node();
    Tape::active()->record([tn, on, k] {
      if (on->grad.empty()) return;
      ensure_grad(tn.get());
      for (size_t i = 0; i < on->grad.size(); ++i)
        tn->grad[i] += k * on->grad[i];
    });
  }
  return out;
}

Tensor neg(const Tensor& t) { return affine(t, -1.0, 0.0); }

Tensor div(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError("div shape mismatch: " + a.shape_str() + " / " +
                     b.shape_str());
  }
  Tensor out = Tensor::zeros(a.shape());
  for (size_t i = 0; i < a.size(); ++i)
    out.data()[i] = a.data()[i] / b.data()[i];
  if (grad_wanted({&a, &b})) {
    out.set_requires_grad(true);
    Node an = a.node(), bn = b.node(), on = out.node();
    bool ga = a.requires_grad(), gb = b.requires_grad();
    Tape::active()->record([an, bn, on, ga, gb] {
      if (on->grad.empty()) return;
      for (size_t i = 0; i < on->grad.size(); ++i) {
        const double bi = bn->data[i];
        if (ga) {
          ensure_grad(an.get());
          an->grad[i] += on->grad[i] / bi;
        }
        if (gb) {
          ensure_grad(bn.get());
          bn->grad[i] -= on->grad[i] * an->data[i] / (bi * bi);
        }
      }
    });
  }
  return out;
}

Tensor sum(const Tensor& t) {
  double acc = 0.0;
  for (double v : t.data()) acc += v;
  Tensor out = Tensor::scalar(acc);
  if (grad_wanted({&t})) {
    out.set_requires_grad(true);
    Node tn = t.node(), on = out.node();
    Tape::active()->record([tn, on] {
      if (on->grad.empty()) return;
      ensure_grad(tn.get());
      for (double& g : tn->grad) g += on->grad[0];
    });
  }
  return out;
}

Tensor pick(const Tensor& t, size_t flat_index) {
  return pick_sum(t, {flat_index});
}

Tensor pick_sum(const Tensor& t, const std::vector<size_t>& flat_indices) {
  double acc = 0.0;
  for (size_t i : flat_indices) {
    if (i >= t.size()) {
      throw ShapeError("pick index " + std::to_string(i) +
                       " out of range for " + t.shape_str());
    }
    acc += t.data()[i];
  }
  Tensor out = Tensor::scalar(acc);
  if (grad_wanted({&t})) {
    out.set_requires_grad(true);
    Node tn = t.node(), on = out.node();
    auto idx = flat_indices;
    Tape::active()->record([tn, on, idx] {
      if (on->grad.empty()) return;
      ensure_grad(tn.get());
      for (size_t i : idx) tn->grad[i] += on->grad[0];
    });
  }
  return out;
}

Tensor gather_rows(const Tensor& table, const std::vector<int>& ids) {
  if (table.rank() != 2) {
    throw ShapeError("gather_rows needs a rank-2 table, got " +
                     table.shape_str());
  }
  const int v = table.dim(0), d = table.dim(1);
  const int m = static_cast<int>(ids.size());
  Tensor out = Tensor::zeros({m, d});
  for (int r = 0; r < m; ++r) {
    if (ids[static_cast<size_t>(r)] < 0 || ids[static_cast<size_t>(r)] >= v) {
      throw ShapeError("gather_rows id out of range: " +
                       std::to_string(ids[static_cast<size_t>(r)]));
    }
    const double* src = table.data().data() + static_cast<size_t>(ids[static_cast<size_t>(r)]) * d;
    std::copy(src, src + d, out.data().begin() + static_cast<size_t>(r) * d);
  }
  if (grad_wanted({&table})) {
    out.set_requires_grad(true);
    Node tn = table.node(), on = out.node();
    auto idx = ids;
    Tape::active()->record([tn, on, idx, d] {
      if (on->grad.empty()) return;
      ensure_grad(tn.get());
      for (size_t r = 0; r < idx.size(); ++r)
        for (int j = 0; j < d; ++j)
          tn->grad[static_cast<size_t>(idx[r]) * d + j] += on->grad[r * static_cast<size_t>(d) + j];
    });
  }
  return out;
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols of zero parts");
  const int r = parts[0].rows();
  int total = 0;
  bool any2 = false, need_grad = false;
  for (const Tensor& p : parts) {
    if (p.rows() != r) {
      throw ShapeError("concat_cols row mismatch: " + p.shape_str());
    }
    total += p.cols();
    any2 = any2 || p.rank() == 2;
    need_grad = need_grad || p.requires_grad();
  }
  Tensor out = any2 || r > 1 ? Tensor::zeros({r, total}) : Tensor::zeros({total});
  int off = 0;
  for (const Tensor& p : parts) {
    const int w = p.cols();
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < w; ++j)
        out.data()[static_cast<size_t>(i) * total + off + j] =
            p.data()[static_cast<size_t>(i) * w + j];
    off += w;
  }
  if (Tape::active() && need_grad) {
    out.set_requires_grad(true);
    std::vector<Node> ns;
    std::vector<int> widths;
    for (const Tensor& p : parts) {
      ns.push_back(p.node());
      widths.push_back(p.cols());
    }
    Node on = out.node();
    Tape::active()->record([ns, widths, on, r, total] {
      if (on->grad.empty()) return;
      int off2 = 0;
      for (size_t k = 0; k < ns.size(); ++k) {
        if (ns[k]->requires_grad) {
          ensure_grad(ns[k].get());
          for (int i = 0; i < r; ++i)
            for (int j = 0; j < widths[k]; ++j)
              ns[k]->grad[static_cast<size_t>(i) * widths[k] + j] +=
                  on->grad[static_cast<size_t>(i) * total + off2 + j];
        }
        off2 += widths[k];
      }
    });
  }
  return out;
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeError("concat_rows of zero parts");
  const int c = parts[0].cols();
  int total = 0;
  bool need_grad = false;
  for (const Tensor& p : parts) {
    if (p.cols() != c) {
      throw ShapeError("concat_rows col mismatch: " + p.shape_str());
    }
    total += p.rows();
    need_grad = need_grad || p.requires_grad();
  }
  Tensor out = Tensor::zeros({total, c});
  int off = 0;
  for (const Tensor& p : parts) {
    std::copy(p.data().begin(), p.data().end(),
              out.data().begin() + static_cast<size_t>(off) * c);
    off += p.rows();
  }
  if (Tape::active() && need_grad) {
    out.set_requires_grad(true);
    std::vector<Node> ns;
    std::vector<int> heights;
    for (const Tensor& p : parts) {
      ns.push_back(p.node());
      heights.push_back(p.rows());
    }
    Node on = out.node();
    Tape::active()->record([ns, heights, on, c] {
      if (on->grad.empty()) return;
      size_t off2 = 0;
      for (size_t k = 0; k < ns.size(); ++k) {
        const size_t n = static_cast<size_t>(heights[k]) * c;
        if (ns[k]->requires_grad) {
          ensure_grad(ns[k].get());
          for (size_t i = 0; i < n; ++i) ns[k]->grad[i] += on->grad[off2 + i];
        }
        off2 += n;
      }
    });
  }
  return out;
}

Tensor slice_cols(const Tensor& t, int start, int len) {
  if (t.rank() != 2 || start < 0 || len <= 0 || start + len > t.dim(1)) {
    throw ShapeError("slice_cols [" + std::to_string(start) + "," +
                     std::to_string(start + len) + ") out of " + t.shape_str());
  }
  const int r = t.dim(0), c = t.dim(1);
  Tensor out = Tensor::zeros({r, len});
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < len; ++j)
      out.data()[static_cast<size_t>(i) * len + j] =
          t.data()[static_cast<size_t>(i) * c + start + j];
  if (grad_wanted({&t})) {
    out.set_requires_grad(true);
    Node tn = t.node(), on = out.node();
    Tape::active()->record([tn, on, start, len, r, c] {
      if (on->grad.empty()) return;
      ensure_grad(tn.get());
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < len; ++j)
          tn->grad[static_cast<size_t>(i) * c + start + j] +=
              on->grad[static_cast<size_t>(i) * len + j];
    });
  }
  return out;
}

Tensor slice_rows(const Tensor& t, int start, int len) {
  if (t.rank() != 2 || start < 0 || len <= 0 || start + len > t.dim(0)) {
    throw ShapeError("slice_rows [" + std::to_string(start) + "," +
                     std::to_string(start + len) + ") out of " + t.shape_str());
  }
  const int c = t.dim(1);
  Tensor out = Tensor::zeros({len, c});
  std::copy(t.data().begin() + static_cast<size_t>(start) * c,
            t.data().begin() + static_cast<size_t>(start + len) * c,
            out.data().begin());
  if (grad_wanted({&t})) {
    out.set_requires_grad(true);
    Node tn = t.node(), on = out.node();
    Tape::active()->record([tn, on, start, len, c] {
      if (on->grad.empty()) return;
      ensure_grad(tn.get());
      const size_t n = static_cast<size_t>(len) * c;
      for (size_t i = 0; i < n; ++i)
        tn->grad[static_cast<size_t>(start) * c + i] += on->grad[i];
    });
  }
  return out;
}

Tensor row(const Tensor& t, int r) { return slice_rows(t, r, 1); }

namespace {

// Shared skeleton for elementwise unary ops: forward map plus a backward
// local-derivative that may read input x and output y.
template <class Fwd, class Bwd>
Tensor unary_op(const Tensor& t, Fwd fwd, Bwd dydx) {
  Tensor out = Tensor::zeros(t.shape());
  for (size_t i = 0; i < t.size(); ++i) out.data()[i] = fwd(t.data()[i]);
  if (grad_wanted({&t})) {
    out.set_requires_grad(true);
    Node tn = t.node(), on = out.node();
    Tape::active()->record([tn, on, dydx] {
      if (on->grad.empty()) return;
      ensure_grad(tn.get());
      for (size_t i = 0; i < on->grad.size(); ++i)
        tn->grad[i] += on->grad[i] * dydx(tn->data[i], on->data[i]);
    });
  }
  return out;
}

}  // namespace

Tensor sigmoid(const Tensor& t) {
  return unary_op(
      t, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor tanh(const Tensor& t) {
  return unary_op(
      t, [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

Tensor log(const Tensor& t) {
  return unary_op(
      t, [](double x) { return std::log(x); },
      [](double x, double) { return 1.0 / x; });
}

Tensor clamp_min(const Tensor& t, double floor) {
  return unary_op(
      t, [floor](double x) { return x < floor ? floor : x; },
      [floor](double x, double) { return x > floor ? 1.0 : 0.0; });
}

Tensor sqrt(const Tensor& t) {
  return unary_op(
      t, [](double x) { return std::sqrt(x); },
      [](double, double y) { return 0.5 / y; });
}

Tensor prelu(const Tensor& t, const Tensor& slope) {
  if (slope.size() != 1) {
    throw ShapeError("prelu slope must be a 1-element tensor, got " +
                     slope.shape_str());
  }
  const double s = slope.at(0);
  Tensor out = Tensor::zeros(t.shape());
  for (size_t i = 0; i < t.size(); ++i) {
    const double x = t.data()[i];
    out.data()[i] = x >= 0.0 ? x : s * x;
  }
  if (grad_wanted({&t, &slope})) {
    out.set_requires_grad(true);
    Node tn = t.node(), sn = slope.node(), on = out.node();
    bool gt = t.requires_grad(), gs = slope.requires_grad();
    Tape::active()->record([tn, sn, on, s, gt, gs] {
      if (on->grad.empty()) return;
      double sacc = 0.0;
      for (size_t i = 0; i < on->grad.size(); ++i) {
        const double x = tn->data[i];
        if (gt) {
          ensure_grad(tn.get());
          tn->grad[i] += on->grad[i] * (x >= 0.0 ? 1.0 : s);
        }
        if (x < 0.0) sacc += on->grad[i] * x;
      }
      if (gs) {
        ensure_grad(sn.get());
        sn->grad[0] += sacc;
      }
    });
  }
  return out;
}

Tensor dropout(const Tensor& t, double rate, bool training,
               std::mt19937_64& rng) {
  if (rate < 0.0 || rate >= 1.0) {
    throw std::invalid_argument("dropout rate must be in [0,1), got " +
                                std::to_string(rate));
  }
  if (!training || rate == 0.0) return t;
  const double scale = 1.0 / (1.0 - rate);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  std::vector<uint8_t> keep(t.size());
  Tensor out = Tensor::zeros(t.shape());
  for (size_t i = 0; i < t.size(); ++i) {
    keep[i] = dist(rng) >= rate ? 1 : 0;
    out.data()[i] = keep[i] ? t.data()[i] * scale : 0.0;
  }
  if (grad_wanted({&t})) {
    out.set_requires_grad(true);
    Node tn = t.node(), on = out.node();
    Tape::active()->record([tn, on, keep, scale] {
      if (on->grad.empty()) return;
      ensure_grad(tn.get());
      for (size_t i = 0; i < on->grad.size(); ++i)
        if (keep[i]) tn->grad[i] += on->grad[i] * scale;
    });
  }
  return out;
}

namespace {

// Masked softmax over [begin, begin+n) of data written into out; returns
// whether any entry was unmasked. All-masked segments stay all-zero.
bool softmax_segment(const double* x, const uint8_t* mask, double* y, size_t n) {
  double mx = -HUGE_VAL;
  bool any = false;
  for (size_t i = 0; i < n; ++i) {
    if (mask[i]) {
      any = true;
      mx = std::max(mx, x[i]);
    }
  }
  if (!any) {
    std::fill(y, y + n, 0.0);
    return false;
  }
  double z = 0.0;
  for (size_t i = 0; i < n; ++i) {
    y[i] = mask[i] ? std::exp(x[i] - mx) : 0.0;
    z += y[i];
  }
  for (size_t i = 0; i < n; ++i) y[i] /= z;
  return true;
}

void softmax_segment_backward(const double* y, const uint8_t* mask,
                              const double* gy, double* gx, size_t n) {
  double dot = 0.0;
  for (size_t i = 0; i < n; ++i) dot += gy[i] * y[i];
  for (size_t i = 0; i < n; ++i)
    if (mask[i]) gx[i] += y[i] * (gy[i] - dot);
}

Tensor masked_softmax_impl(const Tensor& logits,
                           const std::vector<uint8_t>& mask, size_t seg) {
  Tensor out = Tensor::zeros(logits.shape());
  const size_t n = logits.size();
  for (size_t off = 0; off < n; off += seg)
    softmax_segment(logits.data().data() + off, mask.data() + off,
                    out.data().data() + off, seg);
  if (grad_wanted({&logits})) {
    out.set_requires_grad(true);
    Node ln = logits.node(), on = out.node();
    auto m = mask;
    Tape::active()->record([ln, on, m, seg, n] {
      if (on->grad.empty()) return;
      ensure_grad(ln.get());
      for (size_t off = 0; off < n; off += seg)
        softmax_segment_backward(on->data.data() + off, m.data() + off,
                                 on->grad.data() + off, ln->grad.data() + off,
                                 seg);
    });
  }
  return out;
}

}  // namespace

Tensor masked_softmax(const Tensor& logits, const std::vector<uint8_t>& mask) {
  if (mask.size() != logits.size()) {
    throw ShapeError("masked_softmax mask length " +
                     std::to_string(mask.size()) + " vs logits " +
                     logits.shape_str());
  }
  return masked_softmax_impl(logits, mask, logits.size());
}

Tensor masked_softmax_rows(const Tensor& logits,
                           const std::vector<uint8_t>& mask) {
  if (logits.rank() != 2 || mask.size() != logits.size()) {
    throw ShapeError("masked_softmax_rows needs a rank-2 tensor with a full "
                     "mask, got " + logits.shape_str());
  }
  return masked_softmax_impl(logits, mask, static_cast<size_t>(logits.dim(1)));
}

Tensor softmax(const Tensor& logits) {
  return masked_softmax_impl(logits, std::vector<uint8_t>(logits.size(), 1),
                             logits.size());
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias) {
  const size_t d = static_cast<size_t>(x.cols());
  const size_t r = static_cast<size_t>(x.rows());
  if (gain.size() != d || bias.size() != d) {
    throw ShapeError("layer_norm gain/bias width mismatch: x " + x.shape_str() +
                     ", gain " + gain.shape_str() + ", bias " + bias.shape_str());
  }
  Tensor out = Tensor::zeros(x.shape());
  std::vector<double> xhat(x.size());
  std::vector<double> inv_sd(r);
  for (size_t i = 0; i < r; ++i) {
    const double* xr = x.data().data() + i * d;
    double mean = 0.0;
    for (size_t j = 0; j < d; ++j) mean += xr[j];
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (size_t j = 0; j < d; ++j) var += (xr[j] - mean) * (xr[j] - mean);
    var /= static_cast<double>(d);
    inv_sd[i] = 1.0 / std::sqrt(var + kLayerNormEps);
    for (size_t j = 0; j < d; ++j) {
      xhat[i * d + j] = (xr[j] - mean) * inv_sd[i];
      out.data()[i * d + j] = gain.data()[j] * xhat[i * d + j] + bias.data()[j];
    }
  }
  if (grad_wanted({&x, &gain, &bias})) {
    out.set_requires_grad(true);
    Node xn = x.node(), gn = gain.node(), bn = bias.node(), on = out.node();
    bool gx = x.requires_grad(), gg = gain.requires_grad(),
         gb = bias.requires_grad();
    Tape::active()->record([xn, gn, bn, on, xhat, inv_sd, r, d, gx, gg, gb] {
      if (on->grad.empty()) return;
      for (size_t i = 0; i < r; ++i) {
        const double* gy = on->grad.data() + i * d;
        const double* xh = xhat.data() + i * d;
        if (gg) {
          ensure_grad(gn.get());
          for (size_t j = 0; j < d; ++j) gn->grad[j] += gy[j] * xh[j];
        }
        if (gb) {
          ensure_grad(bn.get());
          for (size_t j = 0; j < d; ++j) bn->grad[j] += gy[j];
        }
        if (gx) {
          ensure_grad(xn.get());
          double mean_dxh = 0.0, mean_dxh_xh = 0.0;
          std::vector<double> dxh(d);
          for (size_t j = 0; j < d; ++j) {
            dxh[j] = gy[j] * gn->data[j];
            mean_dxh += dxh[j];
            mean_dxh_xh += dxh[j] * xh[j];
          }
          mean_dxh /= static_cast<double>(d);
          mean_dxh_xh /= static_cast<double>(d);
          for (size_t j = 0; j < d; ++j)
            xn->grad[i * d + j] +=
                inv_sd[i] * (dxh[j] - mean_dxh - xh[j] * mean_dxh_xh);
        }
      }
    });
  }
  return out;
}

}  // namespace kg2text
