#pragma once

#include <continuum/tensor/tensor.hpp>

// Convolution and fixed-kernel resampling ops for NCHW tensors, stride 1.
// Backward passes are expressed with the same op set (conv2d / rotflip /
// conv2d_weight_grad pairs, down2x / up2x adjoint pair) so that second-order
// gradients, e.g. for the R1 penalty, come out exact.
namespace continuum::ad {

namespace detail {

template <typename S>
void im2col(const S* x, int C, int H, int W, int kh, int kw, int pad, S* col) {
  int Ho = H + 2 * pad - kh + 1;
  int Wo = W + 2 * pad - kw + 1;
  for (int c = 0; c < C; ++c) {
    const S* xc = x + static_cast<int64_t>(c) * H * W;
    for (int i = 0; i < kh; ++i) {
      for (int j = 0; j < kw; ++j) {
        S* row = col + (static_cast<int64_t>(c) * kh * kw + i * kw + j) * Ho * Wo;
        for (int ho = 0; ho < Ho; ++ho) {
          int hi = ho + i - pad;
          S* dst = row + static_cast<int64_t>(ho) * Wo;
          if (hi < 0 || hi >= H) {
            std::fill(dst, dst + Wo, S(0));
            continue;
          }
          const S* src = xc + static_cast<int64_t>(hi) * W;
          int wi0 = j - pad;  // wi = wo + j - pad
          int lo = std::max(0, -wi0);
          int hi_w = std::min(Wo, W - wi0);
          if (lo > 0) std::fill(dst, dst + std::min(lo, Wo), S(0));
          if (hi_w > lo) std::copy(src + wi0 + lo, src + wi0 + hi_w, dst + lo);
          if (hi_w < Wo) std::fill(dst + std::max(hi_w, 0), dst + Wo, S(0));
        }
      }
    }
  }
}

}  // namespace detail

template <typename S>
Tensor<S> conv2d_weight_grad(const Tensor<S>& g, const Tensor<S>& x, int kh, int kw, int pad);

// swap in/out channel axes and rotate the spatial kernel by 180 degrees;
// conv2d(g, rotflip(w), k-1-pad) is the input gradient of conv2d(x, w, pad)
template <typename S>
Tensor<S> rotflip(const Tensor<S>& w) {
  const Shape& sh = w.shape();
  int Co = sh[0], Ci = sh[1], kh = sh[2], kw = sh[3];
  const auto& dw = w.data();
  std::vector<S> out(dw.size());
  for (int co = 0; co < Co; ++co)
    for (int ci = 0; ci < Ci; ++ci)
      for (int i = 0; i < kh; ++i)
        for (int j = 0; j < kw; ++j)
          out[((static_cast<int64_t>(ci) * Co + co) * kh + (kh - 1 - i)) * kw + (kw - 1 - j)] =
              dw[((static_cast<int64_t>(co) * Ci + ci) * kh + i) * kw + j];
  return detail::make_op<S>(
      {Ci, Co, kh, kw}, std::move(out), {w},
      [](const Tensor<S>& g) -> std::vector<Tensor<S>> { return {rotflip(g)}; });
}

template <typename S>
Tensor<S> conv2d(const Tensor<S>& x, const Tensor<S>& w, int pad) {
  using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Shape& sx = x.shape();
  const Shape& sw = w.shape();
  if (sx.size() != 4 || sw.size() != 4) throw std::invalid_argument("conv2d wants NCHW / OIHW");
  int N = sx[0], Ci = sx[1], H = sx[2], W = sx[3];
  int Co = sw[0], kh = sw[2], kw = sw[3];
  if (sw[1] != Ci) throw std::invalid_argument("conv2d channel mismatch");
  int Ho = H + 2 * pad - kh + 1;
  int Wo = W + 2 * pad - kw + 1;
  std::vector<S> out(static_cast<int64_t>(N) * Co * Ho * Wo);
  std::vector<S> col(static_cast<int64_t>(Ci) * kh * kw * Ho * Wo);
  const auto& dx = x.data();
  const auto& dw = w.data();
  Eigen::Map<const Mat> mw(dw.data(), Co, Ci * kh * kw);
  for (int n = 0; n < N; ++n) {
    detail::im2col(dx.data() + static_cast<int64_t>(n) * Ci * H * W, Ci, H, W, kh, kw, pad, col.data());
    Eigen::Map<const Mat> mcol(col.data(), Ci * kh * kw, Ho * Wo);
    Eigen::Map<Mat> mo(out.data() + static_cast<int64_t>(n) * Co * Ho * Wo, Co, Ho * Wo);
    mo.noalias() = mw * mcol;
  }
  return detail::make_op<S>(
      {N, Co, Ho, Wo}, std::move(out), {x, w},
      [x, w, pad, kh, kw](const Tensor<S>& g) -> std::vector<Tensor<S>> {
        Tensor<S> gx = conv2d(g, rotflip(w), kh - 1 - pad);
        Tensor<S> gw = conv2d_weight_grad(g, x, kh, kw, pad);
        return {gx, gw};
      });
}

template <typename S>
Tensor<S> conv2d_weight_grad(const Tensor<S>& g, const Tensor<S>& x, int kh, int kw, int pad) {
  using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Shape& sg = g.shape();
  const Shape& sx = x.shape();
  int N = sx[0], Ci = sx[1], H = sx[2], W = sx[3];
  int Co = sg[1], Ho = sg[2], Wo = sg[3];
  std::vector<S> out(static_cast<int64_t>(Co) * Ci * kh * kw, S(0));
  std::vector<S> col(static_cast<int64_t>(Ci) * kh * kw * Ho * Wo);
  const auto& dg = g.data();
  const auto& dx = x.data();
  Eigen::Map<Mat> mo(out.data(), Co, Ci * kh * kw);
  for (int n = 0; n < N; ++n) {
    detail::im2col(dx.data() + static_cast<int64_t>(n) * Ci * H * W, Ci, H, W, kh, kw, pad, col.data());
    Eigen::Map<const Mat> mcol(col.data(), Ci * kh * kw, Ho * Wo);
    Eigen::Map<const Mat> mg(dg.data() + static_cast<int64_t>(n) * Co * Ho * Wo, Co, Ho * Wo);
    mo.noalias() += mg * mcol.transpose();
  }
  return detail::make_op<S>(
      {Co, Ci, kh, kw}, std::move(out), {g, x},
      [g, x, pad, kh, kw](const Tensor<S>& u) -> std::vector<Tensor<S>> {
        Tensor<S> gg = conv2d(x, u, pad);
        Tensor<S> gx = conv2d(g, rotflip(u), kh - 1 - pad);
        return {gg, gx};
      });
}

namespace detail {

// separable [1,3,3,1] resampling; horizontal pass on rows of length W
template <typename S>
void down_pass(const S* in, S* out, int n_rows, int W) {
  static constexpr S k[4] = {S(1) / 8, S(3) / 8, S(3) / 8, S(1) / 8};
  int Wo = W / 2;
  for (int r = 0; r < n_rows; ++r) {
    const S* src = in + static_cast<int64_t>(r) * W;
    S* dst = out + static_cast<int64_t>(r) * Wo;
    for (int o = 0; o < Wo; ++o) {
      S acc = S(0);
      for (int t = 0; t < 4; ++t) {
        int i = 2 * o + t - 1;
        if (i >= 0 && i < W) acc += k[t] * src[i];
      }
      dst[o] = acc;
    }
  }
}

template <typename S>
void up_pass(const S* in, S* out, int n_rows, int W) {
  static constexpr S k1 = S(1) / 4, k3 = S(3) / 4;
  int Wo = W * 2;
  for (int r = 0; r < n_rows; ++r) {
    const S* src = in + static_cast<int64_t>(r) * W;
    S* dst = out + static_cast<int64_t>(r) * Wo;
    for (int t = 0; t < W; ++t) {
      S prev = t > 0 ? src[t - 1] : S(0);
      S next = t + 1 < W ? src[t + 1] : S(0);
      dst[2 * t] = k1 * prev + k3 * src[t];
      dst[2 * t + 1] = k3 * src[t] + k1 * next;
    }
  }
}

// transpose HxW planes within a (P, H, W) buffer
template <typename S>
void plane_transpose(const S* in, S* out, int planes, int H, int W) {
  for (int p = 0; p < planes; ++p) {
    const S* a = in + static_cast<int64_t>(p) * H * W;
    S* b = out + static_cast<int64_t>(p) * H * W;
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x) b[static_cast<int64_t>(x) * H + y] = a[static_cast<int64_t>(y) * W + x];
  }
}

}  // namespace detail

template <typename S>
Tensor<S> up2x(const Tensor<S>& x);

// 2x blur-downsample, kernel [1,3,3,1]/8 per axis, zero padding
template <typename S>
Tensor<S> down2x(const Tensor<S>& x) {
  const Shape& sh = x.shape();
  int N = sh[0], C = sh[1], H = sh[2], W = sh[3];
  int planes = N * C;
  std::vector<S> tmp(static_cast<int64_t>(planes) * H * (W / 2));
  detail::down_pass(x.data().data(), tmp.data(), planes * H, W);
  std::vector<S> tmp_t(tmp.size());
  detail::plane_transpose(tmp.data(), tmp_t.data(), planes, H, W / 2);
  std::vector<S> out_t(static_cast<int64_t>(planes) * (W / 2) * (H / 2));
  detail::down_pass(tmp_t.data(), out_t.data(), planes * (W / 2), H);
  std::vector<S> out(out_t.size());
  detail::plane_transpose(out_t.data(), out.data(), planes, W / 2, H / 2);
  return detail::make_op<S>(
      {N, C, H / 2, W / 2}, std::move(out), {x},
      // the [1,3,3,1]/4 up kernel is 2x the /8 down kernel per axis, so the
      // 2D adjoint picks up a factor 1/4
      [](const Tensor<S>& g) -> std::vector<Tensor<S>> { return {scale(up2x(g), S(0.25))}; });
}

// 2x bilinear upsample, kernel [1,3,3,1]/4 per axis, zero padding
template <typename S>
Tensor<S> up2x(const Tensor<S>& x) {
  const Shape& sh = x.shape();
  int N = sh[0], C = sh[1], H = sh[2], W = sh[3];
  int planes = N * C;
  std::vector<S> tmp(static_cast<int64_t>(planes) * H * W * 2);
  detail::up_pass(x.data().data(), tmp.data(), planes * H, W);
  std::vector<S> tmp_t(tmp.size());
  detail::plane_transpose(tmp.data(), tmp_t.data(), planes, H, W * 2);
  std::vector<S> out_t(static_cast<int64_t>(planes) * W * 2 * H * 2);
  detail::up_pass(tmp_t.data(), out_t.data(), planes * W * 2, H);
  std::vector<S> out(out_t.size());
  detail::plane_transpose(out_t.data(), out.data(), planes, W * 2, H * 2);
  return detail::make_op<S>(
      {N, C, H * 2, W * 2}, std::move(out), {x},
      [](const Tensor<S>& g) -> std::vector<Tensor<S>> { return {scale(down2x(g), S(4))}; });
}

// crop the center (or offset) window of the spatial dims
template <typename S>
Tensor<S> crop2d(const Tensor<S>& x, int y0, int x0, int h, int w) {
  return narrow(narrow(x, 2, y0, h), 3, x0, w);
}

// fully-connected layer: x (N,K) * w (K,M) + b (M)
template <typename S>
Tensor<S> linear(const Tensor<S>& x, const Tensor<S>& w, const Tensor<S>& b) {
  return add(matmul(x, w), b);
}

}  // namespace continuum::ad
