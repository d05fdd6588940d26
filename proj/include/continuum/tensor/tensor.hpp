#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

// Reverse-mode autodiff on dense row-major tensors. Every op's backward is
// itself written in terms of ops, so gradients can be differentiated again
// (needed for the R1 penalty, which backpropagates through a gradient).
namespace continuum::ad {

using Shape = std::vector<int>;

inline int64_t numel(const Shape& s) {
  int64_t n = 1;
  for (int d : s) n *= d;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::string out = "(";
  for (size_t i = 0; i < s.size(); ++i) out += std::to_string(s[i]) + (i + 1 < s.size() ? "," : "");
  return out + ")";
}

template <typename S>
class Tensor;

template <typename S>
struct Node {
  Shape shape;
  std::shared_ptr<std::vector<S>> value;
  bool requires_grad = false;
  std::vector<Tensor<S>> parents;
  // maps upstream grad to per-parent grad contributions (empty tensor = none)
  std::function<std::vector<Tensor<S>>(const Tensor<S>&)> vjp;
};

template <typename S>
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false) {
    return from(std::move(shape), {}, requires_grad);
  }

  static Tensor from(Shape shape, std::vector<S> data, bool requires_grad = false) {
    auto n = std::make_shared<Node<S>>();
    int64_t count = numel(shape);
    n->shape = std::move(shape);
    if (data.empty()) data.assign(count, S(0));
    if (static_cast<int64_t>(data.size()) != count)
      throw std::invalid_argument("tensor data size mismatch");
    n->value = std::make_shared<std::vector<S>>(std::move(data));
    n->requires_grad = requires_grad;
    return Tensor(std::move(n));
  }

  static Tensor scalar(S v) { return from({1}, {v}); }

  static Tensor full(Shape shape, S v) {
    return from(std::move(shape), std::vector<S>(numel(shape), v));
  }

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  int dim(int i) const { return node_->shape[i]; }
  int64_t size() const { return numel(node_->shape); }
  bool requires_grad() const { return node_ && node_->requires_grad; }

  std::vector<S>& data() { return *node_->value; }
  const std::vector<S>& data() const { return *node_->value; }

  S item() const {
    if (size() != 1) throw std::logic_error("item() on non-scalar " + shape_str(shape()));
    return (*node_->value)[0];
  }

  // Same storage, cut off from the graph.
  Tensor detach() const {
    auto n = std::make_shared<Node<S>>();
    n->shape = node_->shape;
    n->value = node_->value;
    n->requires_grad = false;
    return Tensor(std::move(n));
  }

  Node<S>* node() const { return node_.get(); }

  explicit Tensor(std::shared_ptr<Node<S>> n) : node_(std::move(n)) {}

 private:
  std::shared_ptr<Node<S>> node_;
};

namespace detail {

template <typename S>
Tensor<S> make_op(Shape shape, std::vector<S> data, std::vector<Tensor<S>> parents,
                  std::function<std::vector<Tensor<S>>(const Tensor<S>&)> vjp) {
  auto n = std::make_shared<Node<S>>();
  n->shape = std::move(shape);
  n->value = std::make_shared<std::vector<S>>(std::move(data));
  n->requires_grad = false;
  for (const auto& p : parents) n->requires_grad |= p.requires_grad();
  if (n->requires_grad) {
    n->parents = std::move(parents);
    n->vjp = std::move(vjp);
  }
  return Tensor<S>(std::move(n));
}

// numpy-style broadcast of two shapes
inline Shape broadcast_shape(const Shape& a, const Shape& b) {
  Shape out(std::max(a.size(), b.size()));
  for (size_t i = 0; i < out.size(); ++i) {
    int da = i < out.size() - a.size() ? 1 : a[i - (out.size() - a.size())];
    int db = i < out.size() - b.size() ? 1 : b[i - (out.size() - b.size())];
    if (da != db && da != 1 && db != 1)
      throw std::invalid_argument("cannot broadcast " + shape_str(a) + " and " + shape_str(b));
    out[i] = std::max(da, db);
  }
  return out;
}

inline std::vector<int64_t> strides_for(const Shape& s) {
  std::vector<int64_t> st(s.size());
  int64_t acc = 1;
  for (int i = static_cast<int>(s.size()) - 1; i >= 0; --i) {
    st[i] = acc;
    acc *= s[i];
  }
  return st;
}

// strides of `s` expanded to broadcast shape `out` (0 where broadcast)
inline std::vector<int64_t> broadcast_strides(const Shape& s, const Shape& out) {
  std::vector<int64_t> st = strides_for(s);
  std::vector<int64_t> res(out.size(), 0);
  size_t off = out.size() - s.size();
  for (size_t i = 0; i < s.size(); ++i) res[off + i] = (s[i] == 1 && out[off + i] != 1) ? 0 : st[i];
  return res;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// elementwise binary ops with broadcasting

template <typename S, typename F>
Tensor<S> binary_elementwise(const Tensor<S>& a, const Tensor<S>& b, F f,
                             std::function<std::vector<Tensor<S>>(const Tensor<S>&)> vjp) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa == sb) {
    const auto& da = a.data();
    const auto& db = b.data();
    std::vector<S> out(da.size());
    for (size_t i = 0; i < da.size(); ++i) out[i] = f(da[i], db[i]);
    return detail::make_op<S>(sa, std::move(out), {a, b}, std::move(vjp));
  }
  Shape so = detail::broadcast_shape(sa, sb);
  auto stA = detail::broadcast_strides(sa, so);
  auto stB = detail::broadcast_strides(sb, so);
  int64_t n = numel(so);
  std::vector<S> out(n);
  const auto& da = a.data();
  const auto& db = b.data();
  std::vector<int64_t> idx(so.size(), 0);
  int64_t offA = 0, offB = 0;
  for (int64_t i = 0; i < n; ++i) {
    out[i] = f(da[offA], db[offB]);
    for (int d = static_cast<int>(so.size()) - 1; d >= 0; --d) {
      offA += stA[d];
      offB += stB[d];
      if (++idx[d] < so[d]) break;
      idx[d] = 0;
      offA -= stA[d] * so[d];
      offB -= stB[d] * so[d];
    }
  }
  return detail::make_op<S>(so, std::move(out), {a, b}, std::move(vjp));
}

// sum `t` down to `target` shape (inverse of broadcasting)
template <typename S>
Tensor<S> reduce_to(const Tensor<S>& t, const Shape& target) {
  if (t.shape() == target) return t;
  Shape so = t.shape();
  auto stT = detail::broadcast_strides(target, so);
  int64_t nT = numel(target);
  std::vector<S> out(nT, S(0));
  const auto& dt = t.data();
  std::vector<int64_t> idx(so.size(), 0);
  int64_t off = 0;
  for (int64_t i = 0; i < static_cast<int64_t>(dt.size()); ++i) {
    out[off] += dt[i];
    for (int d = static_cast<int>(so.size()) - 1; d >= 0; --d) {
      off += stT[d];
      if (++idx[d] < so[d]) break;
      idx[d] = 0;
      off -= stT[d] * so[d];
    }
  }
  return detail::make_op<S>(
      target, std::move(out), {t},
      [src = t.shape()](const Tensor<S>& g) -> std::vector<Tensor<S>> {
        return {broadcast_to(g, src)};
      });
}

template <typename S>
Tensor<S> broadcast_to(const Tensor<S>& t, const Shape& target) {
  if (t.shape() == target) return t;
  auto st = detail::broadcast_strides(t.shape(), target);
  int64_t n = numel(target);
  std::vector<S> out(n);
  const auto& dt = t.data();
  std::vector<int64_t> idx(target.size(), 0);
  int64_t off = 0;
  for (int64_t i = 0; i < n; ++i) {
    out[i] = dt[off];
    for (int d = static_cast<int>(target.size()) - 1; d >= 0; --d) {
      off += st[d];
      if (++idx[d] < target[d]) break;
      idx[d] = 0;
      off -= st[d] * target[d];
    }
  }
  Shape src = t.shape();
  return detail::make_op<S>(
      target, std::move(out), {t},
      [src](const Tensor<S>& g) -> std::vector<Tensor<S>> { return {reduce_to(g, src)}; });
}

template <typename S>
Tensor<S> add(const Tensor<S>& a, const Tensor<S>& b) {
  return binary_elementwise<S>(
      a, b, [](S x, S y) { return x + y; },
      [sa = a.shape(), sb = b.shape()](const Tensor<S>& g) -> std::vector<Tensor<S>> {
        return {reduce_to(g, sa), reduce_to(g, sb)};
      });
}

template <typename S>
Tensor<S> sub(const Tensor<S>& a, const Tensor<S>& b) {
  return binary_elementwise<S>(
      a, b, [](S x, S y) { return x - y; },
      [sa = a.shape(), sb = b.shape()](const Tensor<S>& g) -> std::vector<Tensor<S>> {
        return {reduce_to(g, sa), neg(reduce_to(g, sb))};
      });
}

template <typename S>
Tensor<S> mul(const Tensor<S>& a, const Tensor<S>& b) {
  return binary_elementwise<S>(
      a, b, [](S x, S y) { return x * y; },
      [a, b](const Tensor<S>& g) -> std::vector<Tensor<S>> {
        return {reduce_to(mul(g, b), a.shape()), reduce_to(mul(g, a), b.shape())};
      });
}

template <typename S>
Tensor<S> div(const Tensor<S>& a, const Tensor<S>& b) {
  return binary_elementwise<S>(
      a, b, [](S x, S y) { return x / y; },
      [a, b](const Tensor<S>& g) -> std::vector<Tensor<S>> {
        Tensor<S> ga = reduce_to(div(g, b), a.shape());
        Tensor<S> gb = reduce_to(neg(div(mul(g, a), mul(b, b))), b.shape());
        return {ga, gb};
      });
}

template <typename S>
Tensor<S> operator+(const Tensor<S>& a, const Tensor<S>& b) { return add(a, b); }
template <typename S>
Tensor<S> operator-(const Tensor<S>& a, const Tensor<S>& b) { return sub(a, b); }
template <typename S>
Tensor<S> operator*(const Tensor<S>& a, const Tensor<S>& b) { return mul(a, b); }
template <typename S>
Tensor<S> operator/(const Tensor<S>& a, const Tensor<S>& b) { return div(a, b); }

// ---------------------------------------------------------------------------
// unary ops

template <typename S, typename F>
Tensor<S> unary_elementwise(const Tensor<S>& a, F f,
                            std::function<std::vector<Tensor<S>>(const Tensor<S>&)> vjp) {
  const auto& da = a.data();
  std::vector<S> out(da.size());
  for (size_t i = 0; i < da.size(); ++i) out[i] = f(da[i]);
  return detail::make_op<S>(a.shape(), std::move(out), {a}, std::move(vjp));
}

template <typename S>
Tensor<S> neg(const Tensor<S>& a) {
  return unary_elementwise<S>(
      a, [](S x) { return -x; },
      [](const Tensor<S>& g) -> std::vector<Tensor<S>> { return {neg(g)}; });
}

template <typename S>
Tensor<S> scale(const Tensor<S>& a, S k) {
  return unary_elementwise<S>(
      a, [k](S x) { return x * k; },
      [k](const Tensor<S>& g) -> std::vector<Tensor<S>> { return {scale(g, k)}; });
}

template <typename S>
Tensor<S> add_const(const Tensor<S>& a, S k) {
  return unary_elementwise<S>(
      a, [k](S x) { return x + k; },
      [](const Tensor<S>& g) -> std::vector<Tensor<S>> { return {g}; });
}

template <typename S>
Tensor<S> exp(const Tensor<S>& a) {
  return unary_elementwise<S>(
      a, [](S x) { return std::exp(x); },
      [a](const Tensor<S>& g) -> std::vector<Tensor<S>> { return {mul(g, exp(a))}; });
}

template <typename S>
Tensor<S> log(const Tensor<S>& a) {
  return unary_elementwise<S>(
      a, [](S x) { return std::log(x); },
      [a](const Tensor<S>& g) -> std::vector<Tensor<S>> { return {div(g, a)}; });
}

template <typename S>
Tensor<S> sqrt(const Tensor<S>& a) {
  return unary_elementwise<S>(
      a, [](S x) { return std::sqrt(x); },
      [a](const Tensor<S>& g) -> std::vector<Tensor<S>> {
        return {div(g, scale(sqrt(a), S(2)))};
      });
}

template <typename S>
Tensor<S> square(const Tensor<S>& a) {
  return unary_elementwise<S>(
      a, [](S x) { return x * x; },
      [a](const Tensor<S>& g) -> std::vector<Tensor<S>> { return {mul(g, scale(a, S(2)))}; });
}

template <typename S>
Tensor<S> sin(const Tensor<S>& a) {
  return unary_elementwise<S>(
      a, [](S x) { return std::sin(x); },
      [a](const Tensor<S>& g) -> std::vector<Tensor<S>> { return {mul(g, cos(a))}; });
}

template <typename S>
Tensor<S> cos(const Tensor<S>& a) {
  return unary_elementwise<S>(
      a, [](S x) { return std::cos(x); },
      [a](const Tensor<S>& g) -> std::vector<Tensor<S>> { return {neg(mul(g, sin(a)))}; });
}

template <typename S>
Tensor<S> asin(const Tensor<S>& a) {
  return unary_elementwise<S>(
      a, [](S x) { return std::asin(x); },
      [a](const Tensor<S>& g) -> std::vector<Tensor<S>> {
        // 1/sqrt(1-x^2)
        Tensor<S> d = sqrt(add_const(neg(square(a)), S(1)));
        return {div(g, d)};
      });
}

template <typename S>
Tensor<S> sigmoid(const Tensor<S>& a) {
  return unary_elementwise<S>(
      a, [](S x) { return S(1) / (S(1) + std::exp(-x)); },
      [a](const Tensor<S>& g) -> std::vector<Tensor<S>> {
        Tensor<S> s = sigmoid(a);
        return {mul(g, mul(s, add_const(neg(s), S(1))))};
      });
}

template <typename S>
Tensor<S> softplus(const Tensor<S>& a) {
  return unary_elementwise<S>(
      a,
      [](S x) {  // numerically stable log(1+e^x)
        return x > S(0) ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
      },
      [a](const Tensor<S>& g) -> std::vector<Tensor<S>> { return {mul(g, sigmoid(a))}; });
}

template <typename S>
Tensor<S> tanh(const Tensor<S>& a) {
  return unary_elementwise<S>(
      a, [](S x) { return std::tanh(x); },
      [a](const Tensor<S>& g) -> std::vector<Tensor<S>> {
        return {mul(g, add_const(neg(square(tanh(a))), S(1)))};
      });
}

// Piecewise-linear ops carry their local slope as a constant mask; the second
// derivative is zero almost everywhere, which is what double backprop needs.
template <typename S>
Tensor<S> leaky_relu(const Tensor<S>& a, S slope = S(0.2)) {
  const auto& da = a.data();
  std::vector<S> out(da.size());
  for (size_t i = 0; i < da.size(); ++i) out[i] = da[i] > S(0) ? da[i] : slope * da[i];
  Shape sh = a.shape();
  return detail::make_op<S>(
      sh, std::move(out), {a},
      [a, slope](const Tensor<S>& g) -> std::vector<Tensor<S>> {
        const auto& x = a.data();
        std::vector<S> m(x.size());
        for (size_t i = 0; i < x.size(); ++i) m[i] = x[i] > S(0) ? S(1) : slope;
        return {mul(g, Tensor<S>::from(a.shape(), std::move(m)))};
      });
}

template <typename S>
Tensor<S> abs(const Tensor<S>& a) {
  const auto& da = a.data();
  std::vector<S> out(da.size());
  for (size_t i = 0; i < da.size(); ++i) out[i] = std::abs(da[i]);
  return detail::make_op<S>(
      a.shape(), std::move(out), {a},
      [a](const Tensor<S>& g) -> std::vector<Tensor<S>> {
        const auto& x = a.data();
        std::vector<S> m(x.size());
        for (size_t i = 0; i < x.size(); ++i) m[i] = x[i] >= S(0) ? S(1) : S(-1);
        return {mul(g, Tensor<S>::from(a.shape(), std::move(m)))};
      });
}

// ---------------------------------------------------------------------------
// reductions and shape ops

template <typename S>
Tensor<S> sum(const Tensor<S>& a) {
  S acc = S(0);
  for (S v : a.data()) acc += v;
  return detail::make_op<S>(
      {1}, {acc}, {a},
      [sh = a.shape()](const Tensor<S>& g) -> std::vector<Tensor<S>> {
        return {broadcast_to(g, sh)};
      });
}

template <typename S>
Tensor<S> mean(const Tensor<S>& a) {
  return scale(sum(a), S(1) / S(a.size()));
}

template <typename S>
Tensor<S> reshape(const Tensor<S>& a, Shape shape) {
  // -1 wildcard in one position
  int64_t known = 1;
  int wild = -1;
  for (size_t i = 0; i < shape.size(); ++i) {
    if (shape[i] == -1) wild = static_cast<int>(i);
    else known *= shape[i];
  }
  if (wild >= 0) shape[wild] = static_cast<int>(a.size() / known);
  if (numel(shape) != a.size()) throw std::invalid_argument("reshape size mismatch");
  std::vector<S> data = a.data();
  return detail::make_op<S>(
      shape, std::move(data), {a},
      [src = a.shape()](const Tensor<S>& g) -> std::vector<Tensor<S>> {
        return {reshape(g, src)};
      });
}

// contiguous slice along one axis
template <typename S>
Tensor<S> narrow(const Tensor<S>& a, int axis, int start, int len) {
  const Shape& sh = a.shape();
  Shape out_shape = sh;
  out_shape[axis] = len;
  int64_t outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= sh[i];
  for (size_t i = axis + 1; i < sh.size(); ++i) inner *= sh[i];
  const auto& da = a.data();
  std::vector<S> out(outer * len * inner);
  for (int64_t o = 0; o < outer; ++o)
    std::copy(da.begin() + (o * sh[axis] + start) * inner,
              da.begin() + (o * sh[axis] + start + len) * inner,
              out.begin() + o * len * inner);
  return detail::make_op<S>(
      out_shape, std::move(out), {a},
      [sh, axis, start, len](const Tensor<S>& g) -> std::vector<Tensor<S>> {
        return {pad_axis(g, axis, start, sh[axis])};
      });
}

// place `a` into a zero tensor whose `axis` has length `full`, at offset `start`
template <typename S>
Tensor<S> pad_axis(const Tensor<S>& a, int axis, int start, int full) {
  const Shape& sh = a.shape();
  Shape out_shape = sh;
  out_shape[axis] = full;
  int64_t outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= sh[i];
  for (size_t i = axis + 1; i < sh.size(); ++i) inner *= sh[i];
  const auto& da = a.data();
  std::vector<S> out(outer * full * inner, S(0));
  int len = sh[axis];
  for (int64_t o = 0; o < outer; ++o)
    std::copy(da.begin() + o * len * inner, da.begin() + (o + 1) * len * inner,
              out.begin() + (o * full + start) * inner);
  return detail::make_op<S>(
      out_shape, std::move(out), {a},
      [axis, start, len](const Tensor<S>& g) -> std::vector<Tensor<S>> {
        return {narrow(g, axis, start, len)};
      });
}

template <typename S>
Tensor<S> concat(const std::vector<Tensor<S>>& parts, int axis) {
  if (parts.empty()) throw std::invalid_argument("concat of nothing");
  Shape sh = parts[0].shape();
  int total = 0;
  for (const auto& p : parts) total += p.shape()[axis];
  Shape out_shape = sh;
  out_shape[axis] = total;
  int64_t outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= sh[i];
  for (size_t i = axis + 1; i < sh.size(); ++i) inner *= sh[i];
  std::vector<S> out(numel(out_shape));
  int off = 0;
  for (const auto& p : parts) {
    int len = p.shape()[axis];
    const auto& dp = p.data();
    for (int64_t o = 0; o < outer; ++o)
      std::copy(dp.begin() + o * len * inner, dp.begin() + (o + 1) * len * inner,
                out.begin() + (o * total + off) * inner);
    off += len;
  }
  std::vector<int> lens;
  for (const auto& p : parts) lens.push_back(p.shape()[axis]);
  return detail::make_op<S>(
      out_shape, std::move(out), parts,
      [axis, lens](const Tensor<S>& g) -> std::vector<Tensor<S>> {
        std::vector<Tensor<S>> grads;
        int off = 0;
        for (int len : lens) {
          grads.push_back(narrow(g, axis, off, len));
          off += len;
        }
        return grads;
      });
}

// ---------------------------------------------------------------------------
// matmul: (..., M, K) x (..., K, N); leading dims equal or absent on one side

template <typename S>
Tensor<S> matmul(const Tensor<S>& a, const Tensor<S>& b) {
  using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa.size() < 2 || sb.size() < 2) throw std::invalid_argument("matmul needs rank >= 2");
  int M = sa[sa.size() - 2], K = sa[sa.size() - 1];
  int Kb = sb[sb.size() - 2], N = sb[sb.size() - 1];
  if (K != Kb) throw std::invalid_argument("matmul inner dim mismatch");
  Shape la(sa.begin(), sa.end() - 2), lb(sb.begin(), sb.end() - 2);
  if (!la.empty() && !lb.empty() && la != lb)
    throw std::invalid_argument("matmul leading dims mismatch");
  Shape lead = la.empty() ? lb : la;
  int64_t batches = numel(lead);
  Shape out_shape = lead;
  out_shape.push_back(M);
  out_shape.push_back(N);
  std::vector<S> out(batches * M * N);
  const auto& da = a.data();
  const auto& db = b.data();
  int64_t strideA = la.empty() ? 0 : int64_t(M) * K;
  int64_t strideB = lb.empty() ? 0 : int64_t(K) * N;
  for (int64_t i = 0; i < batches; ++i) {
    Eigen::Map<const Mat> ma(da.data() + i * strideA, M, K);
    Eigen::Map<const Mat> mb(db.data() + i * strideB, K, N);
    Eigen::Map<Mat> mo(out.data() + i * M * N, M, N);
    mo.noalias() = ma * mb;
  }
  return detail::make_op<S>(
      out_shape, std::move(out), {a, b},
      [a, b](const Tensor<S>& g) -> std::vector<Tensor<S>> {
        Tensor<S> ga = reduce_lead(matmul(g, transpose2(b)), a.shape());
        Tensor<S> gb = reduce_lead(matmul(transpose2(a), g), b.shape());
        return {ga, gb};
      });
}

// transpose last two dims
template <typename S>
Tensor<S> transpose2(const Tensor<S>& a) {
  const Shape& sh = a.shape();
  int M = sh[sh.size() - 2], N = sh[sh.size() - 1];
  Shape out_shape = sh;
  std::swap(out_shape[out_shape.size() - 2], out_shape[out_shape.size() - 1]);
  int64_t batches = a.size() / (int64_t(M) * N);
  const auto& da = a.data();
  std::vector<S> out(da.size());
  for (int64_t i = 0; i < batches; ++i) {
    const S* src = da.data() + i * M * N;
    S* dst = out.data() + i * M * N;
    for (int m = 0; m < M; ++m)
      for (int n = 0; n < N; ++n) dst[n * M + m] = src[m * N + n];
  }
  return detail::make_op<S>(
      out_shape, std::move(out), {a},
      [](const Tensor<S>& g) -> std::vector<Tensor<S>> { return {transpose2(g)}; });
}

// sum leading batch dims away if `target` lacks them (weight shared across batch)
template <typename S>
Tensor<S> reduce_lead(const Tensor<S>& t, const Shape& target) {
  if (t.shape() == target) return t;
  int64_t lead = t.size() / numel(target);
  Tensor<S> flat = reshape(t, {static_cast<int>(lead), -1});
  // sum over axis 0 via ones-vector matmul
  Tensor<S> ones = Tensor<S>::full({1, static_cast<int>(lead)}, S(1));
  Tensor<S> summed = matmul(ones, flat);
  return reshape(summed, target);
}

// ---------------------------------------------------------------------------
// autodiff driver

template <typename S>
std::vector<Tensor<S>> grad(const Tensor<S>& output, const std::vector<Tensor<S>>& inputs,
                            bool create_graph = false) {
  if (output.size() != 1) throw std::invalid_argument("grad() expects a scalar output");
  // iterative topo sort over the requires_grad subgraph
  std::vector<Node<S>*> order;
  std::unordered_map<Node<S>*, int> state;  // 0 new, 1 open, 2 done
  std::vector<Node<S>*> stack{output.node()};
  while (!stack.empty()) {
    Node<S>* n = stack.back();
    int st = state[n];
    if (st == 0) {
      state[n] = 1;
      for (const auto& p : n->parents)
        if (p.requires_grad() && state[p.node()] != 2) stack.push_back(p.node());
    } else {
      stack.pop_back();
      if (st == 1) {
        state[n] = 2;
        order.push_back(n);
      }
    }
  }
  std::unordered_map<Node<S>*, Tensor<S>> grads;
  grads[output.node()] = Tensor<S>::full(output.shape(), S(1));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<S>* n = *it;
    auto gi = grads.find(n);
    if (gi == grads.end() || !n->vjp) continue;
    Tensor<S> g = gi->second;
    if (!create_graph) g = g.detach();
    std::vector<Tensor<S>> parent_grads = n->vjp(g);
    for (size_t i = 0; i < n->parents.size(); ++i) {
      const Tensor<S>& p = n->parents[i];
      if (!p.requires_grad() || i >= parent_grads.size() || !parent_grads[i].defined()) continue;
      auto it2 = grads.find(p.node());
      if (it2 == grads.end()) grads[p.node()] = parent_grads[i];
      else it2->second = add(it2->second, parent_grads[i]);
    }
  }
  std::vector<Tensor<S>> result;
  result.reserve(inputs.size());
  for (const auto& in : inputs) {
    auto it = grads.find(in.node());
    if (it == grads.end()) result.push_back(Tensor<S>::zeros(in.shape()));
    else result.push_back(create_graph ? it->second : it->second.detach());
  }
  return result;
}

}  // namespace continuum::ad
