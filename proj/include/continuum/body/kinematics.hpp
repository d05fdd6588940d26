#pragma once

#include <continuum/body/skeleton.hpp>
#include <continuum/tensor/tensor.hpp>

#include <array>
#include <cmath>

namespace continuum {

using Mat3 = std::array<double, 9>;

inline Mat3 mat3_identity() { return {1, 0, 0, 0, 1, 0, 0, 0, 1}; }

inline Mat3 mat3_mul(const Mat3& a, const Mat3& b) {
  Mat3 out{};
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) {
      double acc = 0;
      for (int k = 0; k < 3; ++k) acc += a[r * 3 + k] * b[k * 3 + c];
      out[r * 3 + c] = acc;
    }
  return out;
}

inline Vec3 mat3_apply(const Mat3& m, Vec3 v) {
  return {m[0] * v.x + m[1] * v.y + m[2] * v.z,
          m[3] * v.x + m[4] * v.y + m[5] * v.z,
          m[6] * v.x + m[7] * v.y + m[8] * v.z};
}

// Rodrigues formula with a Taylor branch near zero.
inline Mat3 axis_angle_to_matrix(Vec3 aa) {
  double n2 = aa.x * aa.x + aa.y * aa.y + aa.z * aa.z;
  double a = std::sqrt(n2);
  double s, c;  // sin(a)/a and (1-cos a)/a^2
  if (a < 1e-4) {
    s = 1.0 - n2 / 6.0;
    c = 0.5 - n2 / 24.0;
  } else {
    s = std::sin(a) / a;
    c = (1.0 - std::cos(a)) / n2;
  }
  Mat3 k{0, -aa.z, aa.y, aa.z, 0, -aa.x, -aa.y, aa.x, 0};
  Mat3 k2 = mat3_mul(k, k);
  Mat3 r = mat3_identity();
  for (int i = 0; i < 9; ++i) r[i] += s * k[i] + c * k2[i];
  return r;
}

// Inverse of Rodrigues; output magnitude in [0, pi].
inline Vec3 matrix_to_axis_angle(const Mat3& r) {
  double tr = r[0] + r[4] + r[8];
  double cos_a = std::min(1.0, std::max(-1.0, (tr - 1.0) / 2.0));
  double a = std::acos(cos_a);
  if (a < 1e-7) return {0, 0, 0};
  if (a > 3.14159265358979323846 - 1e-4) {
    // near pi the skew part vanishes; recover the axis from the symmetric part
    double xx = std::sqrt(std::max(0.0, (r[0] + 1.0) / 2.0));
    double yy = std::sqrt(std::max(0.0, (r[4] + 1.0) / 2.0));
    double zz = std::sqrt(std::max(0.0, (r[8] + 1.0) / 2.0));
    // fix signs against the off-diagonal sums
    if (r[1] + r[3] < 0) yy = -yy;
    if (r[2] + r[6] < 0) zz = -zz;
    if (xx < std::max(std::abs(yy), std::abs(zz)) * 1e-6 && r[5] + r[7] < 0 && yy > 0) zz = -std::abs(zz);
    return a * Vec3{xx, yy, zz};
  }
  double k = a / (2.0 * std::sin(a));
  return {k * (r[7] - r[5]), k * (r[2] - r[6]), k * (r[3] - r[1])};
}

using Joints3D = std::array<Vec3, kJointCount>;

// Root-to-leaf composition of per-joint rotations over beta-scaled rest
// offsets, then the global orientation applied to all joints.
inline Joints3D forward_kinematics(const BodyState& state, const Skeleton& skel) {
  Joints3D pos;
  std::array<Mat3, kJointCount> acc;
  for (int j = 0; j < kJointCount; ++j) {
    Mat3 local = axis_angle_to_matrix(state.theta[j]);
    int p = skel.parent[j];
    if (p < 0) {
      pos[j] = {0, 0, 0};
      acc[j] = local;
    } else {
      double beta = state.beta[j - 1];
      pos[j] = pos[p] + mat3_apply(acc[p], beta * skel.offset[j]);
      acc[j] = mat3_mul(acc[p], local);
    }
  }
  Mat3 global = axis_angle_to_matrix(state.o);
  for (auto& p : pos) p = mat3_apply(global, p);
  return pos;
}

// Weak-perspective projection: image point = sigma*(x,y) + t, depth dropped.
// A joint is marked visible when it lands inside the unit frame.
inline Keypoints2D project(const Joints3D& joints, const WeakPerspectiveCamera& cam) {
  cam.validate();
  Keypoints2D kp;
  for (int j = 0; j < kJointCount; ++j) {
    kp.points[j] = {cam.sigma * joints[j].x + cam.t.x, cam.sigma * joints[j].y + cam.t.y};
    kp.visible[j] = kp.points[j].x >= 0.0 && kp.points[j].x <= 1.0 && kp.points[j].y >= 0.0 &&
                    kp.points[j].y <= 1.0;
  }
  return kp;
}

// Pitch of the global orientation: how far the body's up axis tips out of
// the image plane. Upright (and any pure yaw or roll) has pitch zero.
inline double pitch_of(Vec3 o) {
  Mat3 r = axis_angle_to_matrix(o);
  Vec3 up = mat3_apply(r, {0, -1, 0});
  double n = std::sqrt(up.x * up.x + up.y * up.y + up.z * up.z);
  double z = std::min(1.0, std::max(-1.0, up.z / n));
  return std::asin(z);
}

// ---------------------------------------------------------------------------
// Differentiable batched kinematics on the autodiff engine. Rotations enter
// either as axis-angle (N,J,3) via rodrigues_batch or directly as rotation
// matrices (N,J,3,3), which is what the pose prior's decoder produces.

namespace adk {

using ad::Tensor;

// (N,J,3) axis-angle -> (N,J,3,3) rotation matrices
template <typename S>
Tensor<S> rodrigues_batch(const Tensor<S>& aa) {
  int N = aa.shape()[0], J = aa.shape()[1];
  Tensor<S> x = ad::narrow(aa, 2, 0, 1);
  Tensor<S> y = ad::narrow(aa, 2, 1, 1);
  Tensor<S> z = ad::narrow(aa, 2, 2, 1);
  Tensor<S> n2 = ad::add(ad::add(ad::square(x), ad::square(y)), ad::square(z));
  // piecewise-constant branch mask; both branches agree to O(a^4) at the seam
  const auto& n2v = n2.data();
  std::vector<S> mv(n2v.size());
  for (size_t i = 0; i < n2v.size(); ++i) mv[i] = n2v[i] < S(1e-8) ? S(1) : S(0);
  Tensor<S> m = Tensor<S>::from(n2.shape(), std::move(mv));
  Tensor<S> one_minus_m = ad::add_const(ad::neg(m), S(1));
  // keep the exact branch's denominator away from zero where it is unused
  Tensor<S> n2_safe = ad::add(ad::mul(n2, one_minus_m), m);
  Tensor<S> a = ad::sqrt(n2_safe);
  Tensor<S> sin_term = ad::add(ad::mul(ad::div(ad::sin(a), a), one_minus_m),
                               ad::mul(ad::add_const(ad::scale(n2, S(-1.0 / 6.0)), S(1)), m));
  Tensor<S> cos_term = ad::add(ad::mul(ad::div(ad::add_const(ad::neg(ad::cos(a)), S(1)), n2_safe), one_minus_m),
                               ad::mul(ad::add_const(ad::scale(n2, S(-1.0 / 24.0)), S(0.5)), m));
  Tensor<S> zero = ad::scale(x, S(0));
  // K = [[0,-z,y],[z,0,-x],[-y,x,0]]
  Tensor<S> k = ad::concat<S>({zero, ad::neg(z), y, z, zero, ad::neg(x), ad::neg(y), x, zero}, 2);
  k = ad::reshape(k, {N, J, 3, 3});
  Tensor<S> k2 = ad::matmul(k, k);
  std::vector<S> eye(static_cast<size_t>(N) * J * 9, S(0));
  for (int i = 0; i < N * J; ++i) eye[i * 9] = eye[i * 9 + 4] = eye[i * 9 + 8] = S(1);
  Tensor<S> identity = Tensor<S>::from({N, J, 3, 3}, std::move(eye));
  Tensor<S> s4 = ad::reshape(sin_term, {N, J, 1, 1});
  Tensor<S> c4 = ad::reshape(cos_term, {N, J, 1, 1});
  return ad::add(identity, ad::add(ad::mul(s4, k), ad::mul(c4, k2)));
}

// rotmats (N,J,3,3), beta (N,B), global (N,3,3) -> joint positions (N,J,3)
template <typename S>
Tensor<S> fk_positions(const Tensor<S>& rotmats, const Tensor<S>& beta, const Tensor<S>& global,
                       const Skeleton& skel) {
  int N = rotmats.shape()[0];
  std::vector<Tensor<S>> pos(kJointCount), acc(kJointCount);
  for (int j = 0; j < kJointCount; ++j) {
    Tensor<S> local = ad::reshape(ad::narrow(rotmats, 1, j, 1), {N, 3, 3});
    int p = skel.parent[j];
    if (p < 0) {
      pos[j] = Tensor<S>::zeros({N, 3, 1});
      acc[j] = local;
    } else {
      Tensor<S> off = Tensor<S>::from(
          {3, 1}, {S(skel.offset[j].x), S(skel.offset[j].y), S(skel.offset[j].z)});
      Tensor<S> b = ad::reshape(ad::narrow(beta, 1, j - 1, 1), {N, 1, 1});
      Tensor<S> scaled = ad::mul(b, off);  // (N,3,1)
      pos[j] = ad::add(pos[p], ad::matmul(acc[p], scaled));
      acc[j] = ad::matmul(acc[p], local);
    }
  }
  std::vector<Tensor<S>> rotated(kJointCount);
  for (int j = 0; j < kJointCount; ++j)
    rotated[j] = ad::reshape(ad::matmul(global, pos[j]), {N, 1, 3});
  return ad::concat<S>(rotated, 1);  // (N,J,3)
}

// joints (N,J,3) projected by sigma (1) and t (2) -> (N,J,2)
template <typename S>
Tensor<S> project_batch(const Tensor<S>& joints, const Tensor<S>& sigma, const Tensor<S>& t) {
  Tensor<S> xy = ad::narrow(joints, 2, 0, 2);
  Tensor<S> scaled = ad::mul(xy, ad::reshape(sigma, {1, 1, 1}));
  return ad::add(scaled, ad::reshape(t, {1, 1, 2}));
}

}  // namespace adk

}  // namespace continuum
