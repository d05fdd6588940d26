#pragma once

#include <continuum/body/kinematics.hpp>
#include <continuum/core/image.hpp>
#include <continuum/core/rng.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace continuum {

// Capsule-per-bone CPU rasterizer. Edges use an analytic 1px coverage ramp
// and all texture terms are functions of body-local coordinates, so renders
// of the same figure at different resolutions agree after box downsampling.

namespace render_detail {

struct Rgb {
  float r, g, b;
};

inline Rgb mix(Rgb a, Rgb b, float t) {
  return {a.r + (b.r - a.r) * t, a.g + (b.g - a.g) * t, a.b + (b.b - a.b) * t};
}

inline Rgb scale(Rgb a, float k) { return {a.r * k, a.g * k, a.b * k}; }

// smooth 0..1 ramp, zero width guarded
inline float ramp(float x, float x0, float x1) {
  return std::clamp((x - x0) / (x1 - x0), 0.0f, 1.0f);
}

struct FigureStyle {
  Rgb skin, hair, top_a, top_b, bottom_a, bottom_b, shoe, bg_a, bg_b;
  float stripe_freq;   // stripes along the torso/arms, cycles per body unit
  float stripe_phase;
  float check_freq;    // lower-body pattern
  float tick_freq;     // finger ticks across the hand capsule
  float bg_angle;
};

inline FigureStyle figure_style(uint64_t texture_seed) {
  Rng rng(Rng::mix(texture_seed, 0x5479))
      ;
  FigureStyle st;
  auto color = [&](float base_r, float base_g, float base_b, float var) {
    return Rgb{std::clamp(base_r + float(rng.uniform(-var, var)), 0.05f, 0.95f),
               std::clamp(base_g + float(rng.uniform(-var, var)), 0.05f, 0.95f),
               std::clamp(base_b + float(rng.uniform(-var, var)), 0.05f, 0.95f)};
  };
  st.skin = color(0.85f, 0.68f, 0.55f, 0.12f);
  st.hair = color(0.20f, 0.14f, 0.10f, 0.10f);
  st.top_a = color(0.45f, 0.45f, 0.55f, 0.35f);
  st.top_b = color(0.60f, 0.50f, 0.40f, 0.30f);
  st.bottom_a = color(0.30f, 0.32f, 0.45f, 0.25f);
  st.bottom_b = color(0.22f, 0.24f, 0.30f, 0.15f);
  st.shoe = color(0.15f, 0.13f, 0.12f, 0.08f);
  st.bg_a = color(0.82f, 0.84f, 0.88f, 0.10f);
  st.bg_b = color(0.65f, 0.68f, 0.75f, 0.10f);
  st.stripe_freq = float(rng.uniform(14.0, 30.0));
  st.stripe_phase = float(rng.uniform(0.0, 6.28318));
  st.check_freq = float(rng.uniform(10.0, 22.0));
  st.tick_freq = float(rng.uniform(9.0, 13.0));
  st.bg_angle = float(rng.uniform(0.0, 6.28318));
  return st;
}

inline double bone_radius(int joint) {
  switch (joint) {
    case kSpine: return 0.080;
    case kNeck: return 0.034;
    case kHead: return 0.075;
    case kLShoulder: case kRShoulder: return 0.034;
    case kLElbow: case kRElbow: return 0.030;
    case kLHand: case kRHand: return 0.026;
    case kLHip: case kRHip: return 0.055;
    case kLKnee: case kRKnee: return 0.044;
    case kLAnkle: case kRAnkle: return 0.034;
    default: return 0.05;
  }
}

// bone color as a function of body-local coordinates: u along the bone,
// v lateral offset in radius units [-1,1]
inline Rgb bone_color(int joint, float u, float v, const FigureStyle& st) {
  float shade = 0.78f + 0.22f * std::sqrt(std::max(0.0f, 1.0f - v * v));
  Rgb c;
  switch (joint) {
    case kSpine:
    case kLShoulder:
    case kRShoulder:
    case kLElbow:
    case kRElbow: {
      float s = std::sin(6.28318f * (st.stripe_freq * u * 0.35f + 0.18f * v) + st.stripe_phase);
      c = mix(st.top_a, st.top_b, ramp(s, -0.25f, 0.25f));
      break;
    }
    case kLHip:
    case kRHip:
    case kLKnee:
    case kRKnee: {
      float s = std::sin(6.28318f * st.check_freq * u * 0.3f) *
                std::sin(6.28318f * (1.7f * v + 0.25f));
      c = mix(st.bottom_a, st.bottom_b, ramp(s, -0.2f, 0.2f));
      break;
    }
    case kLAnkle:
    case kRAnkle: {
      c = u > 0.72f ? st.shoe : mix(st.bottom_a, st.bottom_b, 0.5f);
      break;
    }
    case kLHand:
    case kRHand: {
      c = st.skin;
      if (u > 0.55f) {  // finger ticks on the distal half
        float t = std::sin(6.28318f * st.tick_freq * (0.5f * u + 0.22f * v));
        float dark = ramp(t, 0.55f, 0.8f);
        c = mix(c, scale(c, 0.55f), dark);
      }
      break;
    }
    case kHead: {
      c = st.skin;
      // eyes
      for (float side : {-0.34f, 0.34f}) {
        float du = (u - 0.58f) * 2.6f;
        float dv = (v - side) * 1.1f;
        float d = std::sqrt(du * du + dv * dv);
        c = mix(c, Rgb{0.08f, 0.07f, 0.09f}, 1.0f - ramp(d, 0.10f, 0.17f));
      }
      // mouth
      {
        float du = (u - 0.28f) * 3.2f;
        float dv = v * 1.4f;
        float d = std::sqrt(du * du + dv * dv);
        c = mix(c, Rgb{0.45f, 0.18f, 0.18f}, 1.0f - ramp(d, 0.28f, 0.40f));
      }
      // hair cap
      c = mix(c, st.hair, ramp(u, 0.78f, 0.86f));
      break;
    }
    default:
      c = st.skin;
  }
  return scale(c, shade);
}

}  // namespace render_detail

struct RenderResult {
  Image image;
  Keypoints2D keypoints;
  Image figure_mask;  // alpha = capsule coverage, for calibration checks
};

inline RenderResult render_figure(const BodyState& state, const WeakPerspectiveCamera& cam,
                                  uint64_t texture_seed, int resolution) {
  using namespace render_detail;
  if (resolution != 64 && resolution != 128 && resolution != 256 && resolution != 512)
    throw std::invalid_argument("render resolution must be one of 64/128/256/512");
  state.validate();
  cam.validate();

  const Skeleton& skel = Skeleton::standard();
  Joints3D joints = forward_kinematics(state, skel);
  Keypoints2D kp = project(joints, cam);

  struct BoneDraw {
    int joint;
    double ax, ay, bx, by;  // endpoints in pixel coords
    double r_px;
    double len_body;
    double zkey;
  };
  std::vector<BoneDraw> bones;
  bool any_on_frame = false;
  for (int j = 1; j < kJointCount; ++j) {
    int p = skel.parent[j];
    BoneDraw bd;
    bd.joint = j;
    bd.ax = (cam.sigma * joints[p].x + cam.t.x) * resolution;
    bd.ay = (cam.sigma * joints[p].y + cam.t.y) * resolution;
    bd.bx = (cam.sigma * joints[j].x + cam.t.x) * resolution;
    bd.by = (cam.sigma * joints[j].y + cam.t.y) * resolution;
    bd.r_px = bone_radius(j) * cam.sigma * resolution;
    Vec3 d = joints[j] - joints[p];
    bd.len_body = std::sqrt(d.x * d.x + d.y * d.y + d.z * d.z);
    bd.zkey = 0.5 * (joints[p].z + joints[j].z);
    bones.push_back(bd);
    double margin = bd.r_px + 2;
    if (std::max(bd.ax, bd.bx) > -margin && std::min(bd.ax, bd.bx) < resolution + margin &&
        std::max(bd.ay, bd.by) > -margin && std::min(bd.ay, bd.by) < resolution + margin)
      any_on_frame = true;
  }
  if (!any_on_frame) throw std::invalid_argument("camera places the body fully off-frame");

  // painter's order: z grows toward the viewer
  std::stable_sort(bones.begin(), bones.end(),
                   [](const BoneDraw& a, const BoneDraw& b) { return a.zkey < b.zkey; });

  FigureStyle st = figure_style(texture_seed);
  Image img(resolution, resolution);
  Image mask(resolution, resolution);

  // background gradient
  double ca = std::cos(st.bg_angle), sa = std::sin(st.bg_angle);
  for (int y = 0; y < resolution; ++y)
    for (int x = 0; x < resolution; ++x) {
      float t = float(0.5 + 0.5 * ((x + 0.5) / resolution - 0.5) * ca +
                      0.5 * ((y + 0.5) / resolution - 0.5) * sa);
      Rgb c = mix(st.bg_a, st.bg_b, t);
      float* px = img.pixel(x, y);
      px[0] = c.r;
      px[1] = c.g;
      px[2] = c.b;
      px[3] = 1.0f;
    }

  for (const BoneDraw& bd : bones) {
    double dx = bd.bx - bd.ax, dy = bd.by - bd.ay;
    double len2 = dx * dx + dy * dy;
    double pad = bd.r_px + 1.5;
    int x0 = std::max(0, int(std::floor(std::min(bd.ax, bd.bx) - pad)));
    int x1 = std::min(resolution - 1, int(std::ceil(std::max(bd.ax, bd.bx) + pad)));
    int y0 = std::max(0, int(std::floor(std::min(bd.ay, bd.by) - pad)));
    int y1 = std::min(resolution - 1, int(std::ceil(std::max(bd.ay, bd.by) + pad)));
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) {
        double px = x + 0.5, py = y + 0.5;
        double u = len2 > 1e-12 ? ((px - bd.ax) * dx + (py - bd.ay) * dy) / len2 : 0.0;
        double uc = std::clamp(u, 0.0, 1.0);
        double cx = bd.ax + uc * dx, cy = bd.ay + uc * dy;
        double dist = std::sqrt((px - cx) * (px - cx) + (py - cy) * (py - cy));
        float cov = ramp(float(bd.r_px - dist), -0.5f, 0.5f);
        if (cov <= 0.0f) continue;
        // signed lateral offset in radius units
        double cross = len2 > 1e-12 ? ((px - bd.ax) * dy - (py - bd.ay) * dx) / std::sqrt(len2) : dist;
        float v = float(std::clamp(cross / bd.r_px, -1.0, 1.0));
        Rgb c = bone_color(bd.joint, float(u), v, st);
        float* q = img.pixel(x, y);
        q[0] += (c.r - q[0]) * cov;
        q[1] += (c.g - q[1]) * cov;
        q[2] += (c.b - q[2]) * cov;
        float* m = mask.pixel(x, y);
        m[3] = std::max(m[3], cov);
      }
  }

  return {std::move(img), kp, std::move(mask)};
}

// Canonical full-body framing: the rest-pose figure spans 90% of the frame
// height. Computed from the skeleton once and frozen into data manifests.
inline WeakPerspectiveCamera canonical_camera() {
  const Skeleton& skel = Skeleton::standard();
  BodyState rest;
  Joints3D joints = forward_kinematics(rest, skel);
  double top = 1e9, bottom = -1e9;
  for (int j = 1; j < kJointCount; ++j) {
    double r = render_detail::bone_radius(j);
    top = std::min({top, joints[j].y - r, joints[skel.parent[j]].y - r});
    bottom = std::max({bottom, joints[j].y + r, joints[skel.parent[j]].y + r});
  }
  WeakPerspectiveCamera cam;
  cam.sigma = 0.9 / (bottom - top);
  cam.t = {0.5, 0.5 - cam.sigma * (top + bottom) / 2.0};
  return cam;
}

}  // namespace continuum
