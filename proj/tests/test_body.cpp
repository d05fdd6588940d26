#include <continuum/body/render.hpp>
#include <continuum/core/rng.hpp>

#include <gtest/gtest.h>

#include <cmath>

#include "support/gradcheck.hpp"

using namespace continuum;

namespace {

BodyState random_state(Rng& rng, double pose_scale = 0.4) {
  BodyState st;
  for (int j = 0; j < kJointCount; ++j)
    st.theta[j] = {rng.normal() * pose_scale, rng.normal() * pose_scale, rng.normal() * pose_scale};
  for (auto& b : st.beta) b = rng.uniform(0.8, 1.25);
  st.o = {rng.normal() * 0.1, rng.normal() * 0.3, rng.normal() * 0.1};
  return st;
}

// Independent FK oracle built on 4x4 homogeneous transforms, composed in a
// different way than the implementation (full local matrix per joint).
Joints3D fk_oracle(const BodyState& state, const Skeleton& skel) {
  std::array<std::array<double, 16>, kJointCount> world;
  auto mul4 = [](const std::array<double, 16>& a, const std::array<double, 16>& b) {
    std::array<double, 16> out{};
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c)
        for (int k = 0; k < 4; ++k) out[r * 4 + c] += a[r * 4 + k] * b[k * 4 + c];
    return out;
  };
  auto local4 = [&](int j) {
    Mat3 r = axis_angle_to_matrix(state.theta[j]);
    Vec3 off = j == 0 ? Vec3{0, 0, 0} : state.beta[j - 1] * skel.offset[j];
    // translation first (to the joint), then this joint's rotation
    return std::array<double, 16>{r[0], r[1], r[2], off.x,
                                  r[3], r[4], r[5], off.y,
                                  r[6], r[7], r[8], off.z,
                                  0, 0, 0, 1};
  };
  Joints3D out;
  for (int j = 0; j < kJointCount; ++j) {
    std::array<double, 16> l = local4(j);
    if (skel.parent[j] < 0) {
      world[j] = l;
    } else {
      world[j] = mul4(world[skel.parent[j]], l);
    }
    out[j] = {world[j][3], world[j][7], world[j][11]};
  }
  Mat3 g = axis_angle_to_matrix(state.o);
  for (auto& p : out) p = mat3_apply(g, p);
  return out;
}

}  // namespace

TEST(Kinematics, RestPoseIsOffsets) {
  const Skeleton& skel = Skeleton::standard();
  BodyState rest;
  Joints3D j = forward_kinematics(rest, skel);
  // spot-check cumulative offsets
  EXPECT_DOUBLE_EQ(j[kPelvis].y, 0.0);
  EXPECT_DOUBLE_EQ(j[kSpine].y, -0.15);
  EXPECT_DOUBLE_EQ(j[kHead].y, -0.47);
  EXPECT_DOUBLE_EQ(j[kLAnkle].y, 0.03 + 0.23 + 0.22);
  EXPECT_DOUBLE_EQ(j[kLShoulder].x, -0.11);
}

TEST(Kinematics, HalfTurnMirrorsX) {
  const Skeleton& skel = Skeleton::standard();
  Rng rng(21);
  BodyState st = random_state(rng);
  BodyState turned = st;
  turned.o = {0, 3.14159265358979323846, 0};  // half turn about the vertical axis
  st.o = {0, 0, 0};
  Joints3D a = forward_kinematics(st, skel);
  Joints3D b = forward_kinematics(turned, skel);
  for (int j = 0; j < kJointCount; ++j) {
    EXPECT_NEAR(b[j].x, -a[j].x, 1e-9);
    EXPECT_NEAR(b[j].y, a[j].y, 1e-9);
    EXPECT_NEAR(b[j].z, -a[j].z, 1e-9);
  }
}

TEST(Kinematics, MatchesMatrixChainOracle) {
  const Skeleton& skel = Skeleton::standard();
  Rng rng(22);
  for (int it = 0; it < 20; ++it) {
    BodyState st = random_state(rng);
    Joints3D a = forward_kinematics(st, skel);
    Joints3D b = fk_oracle(st, skel);
    for (int j = 0; j < kJointCount; ++j) {
      EXPECT_NEAR(a[j].x, b[j].x, 1e-9);
      EXPECT_NEAR(a[j].y, b[j].y, 1e-9);
      EXPECT_NEAR(a[j].z, b[j].z, 1e-9);
    }
  }
}

TEST(Kinematics, AxisAngleRoundTrip) {
  Rng rng(23);
  for (int it = 0; it < 200; ++it) {
    Vec3 aa{rng.normal(), rng.normal(), rng.normal()};
    double n = std::sqrt(aa.x * aa.x + aa.y * aa.y + aa.z * aa.z);
    double want = rng.uniform(0.0, 3.1);
    aa = (want / n) * aa;
    Vec3 back = matrix_to_axis_angle(axis_angle_to_matrix(aa));
    EXPECT_NEAR(back.x, aa.x, 1e-7);
    EXPECT_NEAR(back.y, aa.y, 1e-7);
    EXPECT_NEAR(back.z, aa.z, 1e-7);
  }
}

TEST(Project, OrthographicDrop) {
  Joints3D j{};
  j[0] = {0.2, -0.3, 7.0};
  WeakPerspectiveCamera cam{1.0, {0.0, 0.0}};
  Keypoints2D kp = project(j, cam);
  EXPECT_DOUBLE_EQ(kp.points[0].x, 0.2);
  EXPECT_DOUBLE_EQ(kp.points[0].y, -0.3);
}

TEST(Project, SigmaLinearity) {
  const Skeleton& skel = Skeleton::standard();
  Rng rng(24);
  BodyState st = random_state(rng);
  Joints3D j = forward_kinematics(st, skel);
  WeakPerspectiveCamera c1{0.7, {0.5, 0.5}};
  WeakPerspectiveCamera c2{1.4, {0.5, 0.5}};
  Keypoints2D k1 = project(j, c1);
  Keypoints2D k2 = project(j, c2);
  for (int i = 0; i < kJointCount; ++i) {
    EXPECT_NEAR(k2.points[i].x - 0.5, 2 * (k1.points[i].x - 0.5), 1e-12);
    EXPECT_NEAR(k2.points[i].y - 0.5, 2 * (k1.points[i].y - 0.5), 1e-12);
  }
}

TEST(Pitch, UprightAndYawAreZero) {
  EXPECT_NEAR(pitch_of({0, 0, 0}), 0.0, 1e-12);
  EXPECT_NEAR(pitch_of({0, 1.2, 0}), 0.0, 1e-12);  // yaw
  EXPECT_NEAR(pitch_of({0, 0, 0.8}), 0.0, 1e-9);   // roll
  double p = pitch_of({0.4, 0, 0});
  EXPECT_NEAR(std::abs(p), 0.4, 1e-9);
}

TEST(Render, Deterministic) {
  Rng rng(25);
  BodyState st = random_state(rng, 0.25);
  RenderResult a = render_figure(st, canonical_camera(), 99, 64);
  RenderResult b = render_figure(st, canonical_camera(), 99, 64);
  EXPECT_EQ(a.image.data(), b.image.data());
}

TEST(Render, AnnotationsEqualProjectedFk) {
  Rng rng(26);
  BodyState st = random_state(rng, 0.25);
  WeakPerspectiveCamera cam = canonical_camera();
  RenderResult r = render_figure(st, cam, 4, 128);
  Keypoints2D direct = project(forward_kinematics(st, Skeleton::standard()), cam);
  for (int j = 0; j < kJointCount; ++j) {
    EXPECT_DOUBLE_EQ(r.keypoints.points[j].x, direct.points[j].x);
    EXPECT_DOUBLE_EQ(r.keypoints.points[j].y, direct.points[j].y);
  }
}

TEST(Render, ScaleConsistency) {
  Rng rng(27);
  double worst = 0;
  for (int it = 0; it < 3; ++it) {
    BodyState st = random_state(rng, 0.25);
    RenderResult hi = render_figure(st, canonical_camera(), 31 + it, 128);
    RenderResult lo = render_figure(st, canonical_camera(), 31 + it, 64);
    double diff = Image::mean_abs_diff(hi.image.downsample(2), lo.image);
    worst = std::max(worst, diff);
  }
  EXPECT_LE(worst, 4.0 / 255.0);
}

TEST(Render, CanonicalCameraExtent) {
  // figure occupies about 90% of the frame height under the canonical camera
  BodyState rest;
  RenderResult r = render_figure(rest, canonical_camera(), 7, 256);
  int first = -1, last = -1;
  for (int y = 0; y < 256; ++y) {
    bool row = false;
    for (int x = 0; x < 256; ++x) row |= r.figure_mask.pixel(x, y)[3] > 0.5f;
    if (row) {
      if (first < 0) first = y;
      last = y;
    }
  }
  double extent = double(last - first + 1) / 256.0;
  EXPECT_NEAR(extent, 0.90, 0.02);
}

TEST(Render, RejectsOffFrameCamera) {
  BodyState rest;
  WeakPerspectiveCamera cam{0.5, {8.0, 8.0}};
  EXPECT_THROW(render_figure(rest, cam, 1, 64), std::invalid_argument);
  EXPECT_THROW(render_figure(rest, canonical_camera(), 1, 100), std::invalid_argument);
}

TEST(KinematicsAd, MatchesPlainFk) {
  const Skeleton& skel = Skeleton::standard();
  Rng rng(28);
  BodyState st = random_state(rng);
  std::vector<double> theta, beta, o;
  for (auto& t : st.theta) { theta.push_back(t.x); theta.push_back(t.y); theta.push_back(t.z); }
  for (double b : st.beta) beta.push_back(b);
  o = {st.o.x, st.o.y, st.o.z};
  auto tt = ad::Tensor<double>::from({1, kJointCount, 3}, theta);
  auto tb = ad::Tensor<double>::from({1, kBoneCount}, beta);
  auto to = ad::Tensor<double>::from({1, 1, 3}, o);
  auto rot = adk::rodrigues_batch(tt);
  auto g = ad::reshape(adk::rodrigues_batch(to), {1, 3, 3});
  auto pos = adk::fk_positions(rot, tb, g, skel);
  Joints3D plain = forward_kinematics(st, skel);
  for (int j = 0; j < kJointCount; ++j) {
    EXPECT_NEAR(pos.data()[j * 3 + 0], plain[j].x, 1e-12);
    EXPECT_NEAR(pos.data()[j * 3 + 1], plain[j].y, 1e-12);
    EXPECT_NEAR(pos.data()[j * 3 + 2], plain[j].z, 1e-12);
  }
}

TEST(KinematicsAd, GradientsMatchFiniteDifferences) {
  const Skeleton& skel = Skeleton::standard();
  Rng rng(29);
  BodyState st = random_state(rng);
  std::vector<double> theta, beta, o;
  for (auto& t : st.theta) { theta.push_back(t.x); theta.push_back(t.y); theta.push_back(t.z); }
  for (double b : st.beta) beta.push_back(b);
  o = {st.o.x, st.o.y, st.o.z};
  auto tt = ad::Tensor<double>::from({1, kJointCount, 3}, theta, true);
  auto tb = ad::Tensor<double>::from({1, kBoneCount}, beta, true);
  auto to = ad::Tensor<double>::from({1, 1, 3}, o, true);
  // weighted squared positions keep every joint in play
  std::vector<double> wdata(kJointCount * 3);
  for (size_t i = 0; i < wdata.size(); ++i) wdata[i] = 0.3 + 0.07 * double(i % 11);
  auto w = ad::Tensor<double>::from({1, kJointCount, 3}, wdata);
  auto eval = [&]() {
    auto rot = adk::rodrigues_batch(tt);
    auto g = ad::reshape(adk::rodrigues_batch(to), {1, 3, 3});
    auto pos = adk::fk_positions(rot, tb, g, skel);
    return ad::sum(ad::mul(w, ad::square(pos)));
  };
  auto grads = ad::grad(eval(), {tt, tb, to});
  auto nt = testsupport::numeric_grad(tt, [&]() { return eval().item(); });
  auto nb = testsupport::numeric_grad(tb, [&]() { return eval().item(); });
  auto no = testsupport::numeric_grad(to, [&]() { return eval().item(); });
  EXPECT_LT(testsupport::max_rel_err(grads[0].data(), nt), 1e-3);
  EXPECT_LT(testsupport::max_rel_err(grads[1].data(), nb), 1e-3);
  EXPECT_LT(testsupport::max_rel_err(grads[2].data(), no), 1e-3);
}

TEST(KinematicsAd, ProjectBatchMatchesPlain) {
  const Skeleton& skel = Skeleton::standard();
  Rng rng(30);
  BodyState st = random_state(rng);
  Joints3D plain = forward_kinematics(st, skel);
  WeakPerspectiveCamera cam{1.3, {0.45, 0.55}};
  Keypoints2D kp = project(plain, cam);
  std::vector<double> jd;
  for (auto& p : plain) { jd.push_back(p.x); jd.push_back(p.y); jd.push_back(p.z); }
  auto tj = ad::Tensor<double>::from({1, kJointCount, 3}, jd);
  auto ts = ad::Tensor<double>::scalar(cam.sigma);
  auto tt = ad::Tensor<double>::from({2}, {cam.t.x, cam.t.y});
  auto proj = adk::project_batch(tj, ts, tt);
  for (int j = 0; j < kJointCount; ++j) {
    EXPECT_NEAR(proj.data()[j * 2 + 0], kp.points[j].x, 1e-12);
    EXPECT_NEAR(proj.data()[j * 2 + 1], kp.points[j].y, 1e-12);
  }
}
