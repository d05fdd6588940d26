#pragma once

#include <continuum/geometry/geometry.hpp>

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace continuum {

struct Vec3 {
  double x = 0, y = 0, z = 0;
};

inline Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
inline Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
inline Vec3 operator*(double k, Vec3 a) { return {k * a.x, k * a.y, k * a.z}; }

// Joint indices of the 16-joint stand-in skeleton. Every kFID site (face,
// neck, shoulder, elbow, hand, hip, knee) maps onto a named joint.
enum Joint : int {
  kPelvis = 0,
  kSpine,
  kNeck,
  kHead,
  kLShoulder,
  kRShoulder,
  kLElbow,
  kRElbow,
  kLHand,
  kRHand,
  kLHip,
  kRHip,
  kLKnee,
  kRKnee,
  kLAnkle,
  kRAnkle,
  kJointCount  // 16
};

constexpr int kBoneCount = kJointCount - 1;  // one bone per non-root joint

// Kinematic tree with rest-pose bone offsets. 3D body coordinates use x
// right, y down (matching image convention), z toward the viewer; the rest
// pose stands upright with total height about one unit.
struct Skeleton {
  std::array<int, kJointCount> parent;
  std::array<Vec3, kJointCount> offset;  // from parent, in rest pose
  std::array<const char*, kJointCount> name;

  static const Skeleton& standard() {
    static const Skeleton s = make();
    return s;
  }

  static Skeleton make() {
    Skeleton s;
    auto set = [&](int j, int par, Vec3 off, const char* n) {
      s.parent[j] = par;
      s.offset[j] = off;
      s.name[j] = n;
    };
    set(kPelvis, -1, {0, 0, 0}, "pelvis");
    set(kSpine, kPelvis, {0, -0.15, 0}, "spine");
    set(kNeck, kSpine, {0, -0.22, 0}, "neck");
    set(kHead, kNeck, {0, -0.10, 0}, "head");
    set(kLShoulder, kSpine, {-0.11, -0.18, 0}, "l_shoulder");
    set(kRShoulder, kSpine, {0.11, -0.18, 0}, "r_shoulder");
    set(kLElbow, kLShoulder, {-0.05, 0.17, 0}, "l_elbow");
    set(kRElbow, kRShoulder, {0.05, 0.17, 0}, "r_elbow");
    set(kLHand, kLElbow, {-0.03, 0.17, 0}, "l_hand");
    set(kRHand, kRElbow, {0.03, 0.17, 0}, "r_hand");
    set(kLHip, kPelvis, {-0.06, 0.03, 0}, "l_hip");
    set(kRHip, kPelvis, {0.06, 0.03, 0}, "r_hip");
    set(kLKnee, kLHip, {0, 0.23, 0}, "l_knee");
    set(kRKnee, kRHip, {0, 0.23, 0}, "r_knee");
    set(kLAnkle, kLKnee, {0, 0.22, 0}, "l_ankle");
    set(kRAnkle, kRKnee, {0, 0.22, 0}, "r_ankle");
    return s;
  }

  int joint_index(const std::string& n) const {
    for (int j = 0; j < kJointCount; ++j)
      if (n == name[j]) return j;
    throw std::invalid_argument("unknown joint name: " + n);
  }
};

// Parametric-body configuration: per-joint axis-angle pose, per-bone length
// scales, and a global orientation.
struct BodyState {
  std::array<Vec3, kJointCount> theta{};  // axis-angle per joint
  std::array<double, kBoneCount> beta;    // scale of bone ending at joint j (index j-1)
  Vec3 o{};                               // global orientation, axis-angle

  BodyState() { beta.fill(1.0); }

  void validate() const {
    for (double b : beta)
      if (b < 0.5 || b > 2.0) throw std::invalid_argument("beta out of [0.5, 2.0]");
    auto mag = [](Vec3 v) { return std::sqrt(v.x * v.x + v.y * v.y + v.z * v.z); };
    for (const auto& t : theta)
      if (mag(t) > 3.14159265358979323846 + 1e-9)
        throw std::invalid_argument("axis-angle magnitude exceeds pi");
    if (mag(o) > 3.14159265358979323846 + 1e-9)
      throw std::invalid_argument("global orientation magnitude exceeds pi");
  }
};

struct Keypoints2D {
  std::array<Vec2, kJointCount> points;
  std::array<bool, kJointCount> visible;

  int visible_count() const {
    int n = 0;
    for (bool v : visible) n += v;
    return n;
  }
};

// Body keypoint classes scored by kFID (Table-1 style columns).
inline const std::vector<std::pair<std::string, std::vector<int>>>& kfid_sites() {
  static const std::vector<std::pair<std::string, std::vector<int>>> sites = {
      {"face", {kHead}},
      {"neck", {kNeck}},
      {"shoulder", {kLShoulder, kRShoulder}},
      {"elbow", {kLElbow, kRElbow}},
      {"hand", {kLHand, kRHand}},
      {"hip", {kLHip, kRHip}},
      {"knee", {kLKnee, kRKnee}},
  };
  return sites;
}

}  // namespace continuum
