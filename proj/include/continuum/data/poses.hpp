#pragma once

#include <continuum/body/skeleton.hpp>
#include <continuum/core/rng.hpp>

#include <algorithm>
#include <cmath>

namespace continuum {

// Toy pose distribution: a handful of correlated factors (arm swings, elbow
// bends, stride, lean, head tilt) mapped to joint rotations, plus small
// per-joint noise. The low intrinsic dimension is what makes an 8-dim latent
// pose prior adequate.
inline BodyState sample_pose(Rng& rng) {
  BodyState st;
  auto clipped = [&](double s) { return std::clamp(rng.normal() * s, -2.5 * s, 2.5 * s); };

  double arm_l = clipped(0.35);
  double arm_r = clipped(0.35);
  double spread = clipped(0.18);
  double elbow_l = std::abs(clipped(0.45));
  double elbow_r = std::abs(clipped(0.45));
  double stride = clipped(0.25);
  double knee_l = std::abs(clipped(0.3));
  double knee_r = std::abs(clipped(0.3));
  double lean = clipped(0.08);
  double twist = clipped(0.12);
  double head = clipped(0.15);

  st.theta[kLShoulder] = {arm_l, 0, -spread};
  st.theta[kRShoulder] = {arm_r, 0, spread};
  // elbows bend inward only
  st.theta[kLElbow] = {-elbow_l, 0, 0};
  st.theta[kRElbow] = {-elbow_r, 0, 0};
  st.theta[kLHip] = {stride, 0, 0};
  st.theta[kRHip] = {-stride, 0, 0};
  st.theta[kLKnee] = {-knee_l, 0, 0};
  st.theta[kRKnee] = {-knee_r, 0, 0};
  st.theta[kSpine] = {lean, twist, 0};
  st.theta[kNeck] = {head * 0.5, head, 0};
  st.theta[kHead] = {0, head * 0.5, 0};

  // small unstructured residue on every joint
  for (int j = 0; j < kJointCount; ++j) {
    st.theta[j].x += rng.normal() * 0.03;
    st.theta[j].y += rng.normal() * 0.03;
    st.theta[j].z += rng.normal() * 0.03;
  }
  return st;
}

inline void sample_shape(Rng& rng, BodyState& st) {
  double overall = rng.uniform(0.9, 1.12);
  for (auto& b : st.beta) b = std::clamp(overall * rng.uniform(0.94, 1.06), 0.5, 2.0);
}

inline void sample_orientation(Rng& rng, BodyState& st) {
  // mostly upright figures with a little yaw and roll
  st.o = {rng.normal() * 0.03, rng.normal() * 0.15, rng.normal() * 0.03};
}

}  // namespace continuum
