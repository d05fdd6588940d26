#include <continuum/data/poses.hpp>
#include <continuum/prior/vae.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

using namespace continuum;

namespace {

std::vector<BodyState> toy_poses(int n, uint64_t seed) {
  Rng rng(seed);
  std::vector<BodyState> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) out.push_back(sample_pose(rng));
  return out;
}

}  // namespace

TEST(Prior, RejectsTinyDataset) {
  PriorConfig cfg;
  EXPECT_THROW(train_prior<float>(toy_poses(100, 1), cfg), std::invalid_argument);
}

TEST(Prior, ConstantPoseDatasetCollapses) {
  Rng rng(2);
  BodyState pose = sample_pose(rng);
  std::vector<BodyState> data(600, pose);
  PriorConfig cfg;
  cfg.epochs = 200;
  cfg.seed = 11;
  PriorModel<float> m = train_prior<float>(data, cfg);
  double rms = prior_joint_rms(m, {pose});
  EXPECT_LE(rms, 1e-2);
}

TEST(Prior, HeldOutReconstruction) {
  auto train = toy_poses(1000, 3);
  auto held = toy_poses(200, 4);
  PriorConfig cfg;
  cfg.seed = 5;
  PriorModel<float> m = train_prior<float>(train, cfg);
  double held_rms = prior_joint_rms(m, held);
  EXPECT_LE(held_rms, 0.05);
  // train side of the generalization gap
  std::vector<BodyState> train_subset(train.begin(), train.begin() + 200);
  double train_rms = prior_joint_rms(m, train_subset);
  EXPECT_LT(train_rms, held_rms);

  // rest pose is in-distribution; its reconstruction stays close in angle
  BodyState rest;
  auto theta_hat = reconstruct(m, rest.theta);
  for (int j = 0; j < kJointCount; ++j) {
    Vec3 d = theta_hat[j] - rest.theta[j];
    EXPECT_LE(std::sqrt(d.x * d.x + d.y * d.y + d.z * d.z), 0.1);
  }

  // save / load round trip preserves reconstructions
  std::string path = ::testing::TempDir() + "/prior_roundtrip.cwa";
  m.save(path);
  PriorModel<float> loaded = PriorModel<float>::load(path);
  Rng rng(6);
  BodyState probe = sample_pose(rng);
  auto a = reconstruct(m, probe.theta);
  auto b = reconstruct(loaded, probe.theta);
  for (int j = 0; j < kJointCount; ++j) EXPECT_NEAR(a[j].x, b[j].x, 1e-6);
}

TEST(Prior, KlMedianCurveDecreasesOverWarmup) {
  auto train = toy_poses(800, 7);
  std::array<std::vector<PriorEpochLog>, 3> logs;
  for (int s = 0; s < 3; ++s) {
    PriorConfig cfg;
    cfg.epochs = 10;
    cfg.seed = 100 + s;
    std::vector<PriorEpochLog> log;
    train_prior<float>(train, cfg, &log);
    logs[s] = log;
  }
  for (int e = 1; e < 10; ++e) {
    std::array<double, 3> prev, cur;
    for (int s = 0; s < 3; ++s) {
      prev[s] = logs[s][e - 1].kl;
      cur[s] = logs[s][e].kl;
    }
    std::sort(prev.begin(), prev.end());
    std::sort(cur.begin(), cur.end());
    EXPECT_LT(cur[1], prev[1]) << "median KL failed to decrease at epoch " << e;
  }
}

TEST(Prior, ReconstructDeterministic) {
  auto train = toy_poses(600, 8);
  PriorConfig cfg;
  cfg.epochs = 30;
  cfg.seed = 9;
  PriorModel<float> m = train_prior<float>(train, cfg);
  Rng rng(10);
  BodyState p = sample_pose(rng);
  auto a = reconstruct(m, p.theta);
  auto b = reconstruct(m, p.theta);
  for (int j = 0; j < kJointCount; ++j) {
    EXPECT_EQ(a[j].x, b[j].x);
    EXPECT_EQ(a[j].y, b[j].y);
    EXPECT_EQ(a[j].z, b[j].z);
  }
  // decoded magnitudes stay within the axis-angle bound
  for (int j = 0; j < kJointCount; ++j)
    EXPECT_LE(std::sqrt(a[j].x * a[j].x + a[j].y * a[j].y + a[j].z * a[j].z),
              3.14159265358979323846 + 1e-6);
}

TEST(Prior, UntrainedModelRefusesReconstruct) {
  PriorConfig cfg;
  PriorModel<float> m = PriorModel<float>::init(cfg);
  BodyState rest;
  EXPECT_THROW(reconstruct(m, rest.theta), std::logic_error);
}

TEST(Prior, DecoderRotationsAreOrthonormal) {
  auto train = toy_poses(600, 12);
  PriorConfig cfg;
  cfg.epochs = 20;
  cfg.seed = 13;
  PriorModel<float> m = train_prior<float>(train, cfg);
  // push random latents through the decoder and check R^T R = I
  Rng rng(14);
  std::vector<double> z(8);
  for (auto& v : z) v = rng.normal();
  using T = ad::Tensor<float>;
  std::vector<float> zf(z.begin(), z.end());
  T raw = m.decode_raw(T::from({1, 8}, zf));
  T rot = prior_detail::rot6d_to_matrix<float>(raw, 1, kJointCount);
  for (int j = 0; j < kJointCount; ++j) {
    Mat3 r;
    for (int k = 0; k < 9; ++k) r[k] = rot.data()[j * 9 + k];
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        double dot = 0;
        for (int k = 0; k < 3; ++k) dot += r[k * 3 + a] * r[k * 3 + b];
        EXPECT_NEAR(dot, a == b ? 1.0 : 0.0, 1e-5);
      }
  }
}
