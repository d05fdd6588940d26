#pragma once

#include <continuum/core/image.hpp>

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace continuum {

// Continuous image-space conventions used everywhere:
//  - frame coordinates live in [0,1]^2, origin top-left, y down, pixel
//    centers at (i+0.5)/r;
//  - sampling transforms (make_transform) act on *centered* coordinates
//    (frame center at the origin), which is what makes the identity case
//    come out as the identity matrix;
//  - to_unit_frame converts a centered-coordinates transform into the
//    equivalent map on [0,1]^2 frame coordinates for warping.

struct Vec2 {
  double x = 0.0, y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double k, Vec2 a) { return {k * a.x, k * a.y}; }
inline double norm(Vec2 a) { return std::sqrt(a.x * a.x + a.y * a.y); }

// One patch request in continuous image space: center v, scale s, resolution r.
struct SamplingParams {
  Vec2 v{0.5, 0.5};
  double s = 1.0;
  int r = 64;

  // window half-width in frame units
  double half_width() const { return 0.5 / s; }

  void validate() const {
    if (s < 1.0) throw std::invalid_argument("sampling scale must satisfy s >= 1 (Nyquist guard)");
    if (r <= 0) throw std::invalid_argument("patch resolution must be positive");
    if (v.x < 0.0 || v.x > 1.0 || v.y < 0.0 || v.y > 1.0)
      throw std::invalid_argument("patch center must lie in [0,1]^2");
    double hw = half_width();
    if (v.x - hw < -0.25 || v.x + hw > 1.25 || v.y - hw < -0.25 || v.y + hw > 1.25)
      throw std::invalid_argument("patch window exceeds the [-0.25,1.25]^2 bound");
  }
};

// 3x3 homogeneous matrix with last row (0,0,1) acting on continuous
// coordinates. Row-major storage; serializes as 9 floats.
struct TransformMatrix {
  std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

  static TransformMatrix identity() { return {}; }

  static TransformMatrix from_rows(std::array<double, 9> rows) {
    TransformMatrix t;
    t.m = rows;
    return t;
  }

  double operator()(int r, int c) const { return m[r * 3 + c]; }
  double& operator()(int r, int c) { return m[r * 3 + c]; }

  Vec2 apply(Vec2 p) const {
    return {m[0] * p.x + m[1] * p.y + m[2], m[3] * p.x + m[4] * p.y + m[5]};
  }

  TransformMatrix mul(const TransformMatrix& o) const {
    TransformMatrix out;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) {
        double acc = 0;
        for (int k = 0; k < 3; ++k) acc += (*this)(r, k) * o(k, c);
        out(r, c) = acc;
      }
    return out;
  }

  double det2() const { return m[0] * m[4] - m[1] * m[3]; }

  TransformMatrix inverse() const {
    double d = det2();
    if (std::abs(d) < 1e-14) throw std::invalid_argument("transform is not invertible");
    TransformMatrix out;
    out.m = {m[4] / d, -m[1] / d, (m[1] * m[5] - m[2] * m[4]) / d,
             -m[3] / d, m[0] / d, (m[2] * m[3] - m[0] * m[5]) / d,
             0, 0, 1};
    return out;
  }

  bool near(const TransformMatrix& o, double tol) const {
    for (int i = 0; i < 9; ++i)
      if (std::abs(m[i] - o.m[i]) > tol) return false;
    return true;
  }
};

// Weak-perspective camera: image point = sigma * (x, y) + t, depth dropped.
// t is expressed in [0,1]^2 frame coordinates.
struct WeakPerspectiveCamera {
  double sigma = 1.0;
  Vec2 t{0.5, 0.5};

  void validate() const {
    if (sigma <= 0.0) throw std::invalid_argument("camera sigma must be positive");
  }
};

// Eq.-4 sampling transform on centered coordinates:
//   [[1/s, 0, v_x-0.5], [0, 1/s, v_y-0.5], [0, 0, 1]]
// Identity when v=(0.5,0.5), s=1 (samples the whole frame).
inline TransformMatrix make_transform(const SamplingParams& p) {
  p.validate();
  return TransformMatrix::from_rows(
      {1.0 / p.s, 0, p.v.x - 0.5, 0, 1.0 / p.s, p.v.y - 0.5, 0, 0, 1});
}

// Conjugate a centered-coordinates transform into [0,1]^2 frame coordinates.
inline TransformMatrix to_unit_frame(const TransformMatrix& t) {
  TransformMatrix shift = TransformMatrix::from_rows({1, 0, 0.5, 0, 1, 0.5, 0, 0, 1});
  TransformMatrix unshift = TransformMatrix::from_rows({1, 0, -0.5, 0, 1, -0.5, 0, 0, 1});
  return shift.mul(t).mul(unshift);
}

// Homography taking points in camera `alpha`'s image frame to points in
// camera `alpha_bar`'s frame (both in [0,1]^2 coordinates). Composition reads
// in application order: H(b,c) * H(a,b) = H(a,c).
inline TransformMatrix homography_from_cameras(const WeakPerspectiveCamera& alpha,
                                               const WeakPerspectiveCamera& alpha_bar) {
  alpha.validate();
  alpha_bar.validate();
  double k = alpha_bar.sigma / alpha.sigma;
  return TransformMatrix::from_rows({k, 0, alpha_bar.t.x - k * alpha.t.x,
                                     0, k, alpha_bar.t.y - k * alpha.t.y,
                                     0, 0, 1});
}

inline std::vector<Vec2> apply_to_coords(const TransformMatrix& t, const std::vector<Vec2>& coords) {
  if (std::abs(t.m[6]) > 1e-12 || std::abs(t.m[7]) > 1e-12 || std::abs(t.m[8] - 1.0) > 1e-12)
    throw std::invalid_argument("transform last row must be (0,0,1)");
  std::vector<Vec2> out;
  out.reserve(coords.size());
  for (Vec2 p : coords) out.push_back(t.apply(p));
  return out;
}

// Resample `src` under homography H (source frame -> output frame, both in
// [0,1]^2 coordinates). Output pixels with no source data are transparent;
// the alpha channel is the valid-region mask used by CutMix.
inline Image warp_image(const Image& src, const TransformMatrix& h, int out_resolution) {
  TransformMatrix inv = h.inverse();
  Image out(out_resolution, out_resolution);
  for (int y = 0; y < out_resolution; ++y) {
    for (int x = 0; x < out_resolution; ++x) {
      Vec2 u{(x + 0.5) / out_resolution, (y + 0.5) / out_resolution};
      Vec2 s = inv.apply(u);
      float px[4];
      src.sample_bilinear(static_cast<float>(s.x * src.width()),
                          static_cast<float>(s.y * src.height()), px);
      float* q = out.pixel(x, y);
      for (int c = 0; c < 4; ++c) q[c] = px[c];
    }
  }
  return out;
}

}  // namespace continuum
