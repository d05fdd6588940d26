#include <continuum/core/rng.hpp>
#include <continuum/geometry/geometry.hpp>

#include <gtest/gtest.h>

#include <cmath>

using namespace continuum;

namespace {

WeakPerspectiveCamera random_camera(Rng& rng) {
  WeakPerspectiveCamera c;
  c.sigma = rng.uniform(0.3, 3.0);
  c.t = {rng.uniform(0.2, 0.8), rng.uniform(0.2, 0.8)};
  return c;
}

Image test_pattern(int res) {
  Image img(res, res);
  for (int y = 0; y < res; ++y)
    for (int x = 0; x < res; ++x) {
      float* p = img.pixel(x, y);
      p[0] = float(x) / res;
      p[1] = float(y) / res;
      p[2] = 0.5f + 0.5f * std::sin(0.3f * x) * std::cos(0.2f * y);
      p[3] = 1.0f;
    }
  return img;
}

// quantize to 8 bits, as stored image files would be
Image quantize8(const Image& img) {
  Image out = img;
  for (auto& v : out.data()) v = std::round(v * 255.0f) / 255.0f;
  return out;
}

}  // namespace

TEST(MakeTransform, IdentityCase) {
  TransformMatrix t = make_transform({{0.5, 0.5}, 1.0, 64});
  EXPECT_TRUE(t.near(TransformMatrix::identity(), 0.0));
}

TEST(MakeTransform, DirectSubstitution) {
  TransformMatrix t = make_transform({{0.25, 0.25}, 2.0, 64});
  TransformMatrix expect = TransformMatrix::from_rows({0.5, 0, -0.25, 0, 0.5, -0.25, 0, 0, 1});
  EXPECT_TRUE(t.near(expect, 1e-15));
}

TEST(MakeTransform, NyquistGuardRejectsSmallScale) {
  EXPECT_THROW(make_transform({{0.5, 0.5}, 0.5, 64}), std::invalid_argument);
}

TEST(MakeTransform, RejectsOutOfRangeCenter) {
  EXPECT_THROW(make_transform({{1.5, 0.5}, 2.0, 64}), std::invalid_argument);
  // window would poke past the slack bound
  EXPECT_THROW(make_transform({{0.0, 0.5}, 1.0, 64}), std::invalid_argument);
}

TEST(MakeTransform, WindowProperty) {
  Rng rng(100);
  for (int it = 0; it < 50; ++it) {
    double s = rng.uniform(1.0, 8.0);
    double hw = 0.5 / s;
    SamplingParams p{{rng.uniform(hw, 1 - hw), rng.uniform(hw, 1 - hw)}, s, 64};
    TransformMatrix t = make_transform(p);
    // corners of the patch's own (centered) unit square map onto the window
    std::vector<Vec2> corners{{-0.5, -0.5}, {0.5, -0.5}, {-0.5, 0.5}, {0.5, 0.5}};
    auto mapped = apply_to_coords(t, corners);
    for (int i = 0; i < 4; ++i) {
      double ex = p.v.x + (corners[i].x < 0 ? -hw : hw);
      double ey = p.v.y + (corners[i].y < 0 ? -hw : hw);
      EXPECT_NEAR(mapped[i].x + 0.5, ex, 1e-12);
      EXPECT_NEAR(mapped[i].y + 0.5, ey, 1e-12);
    }
  }
}

TEST(Homography, SameFrameIsIdentity) {
  WeakPerspectiveCamera a{1.7, {0.4, 0.6}};
  EXPECT_TRUE(homography_from_cameras(a, a).near(TransformMatrix::identity(), 1e-15));
}

TEST(Homography, ScaleOnlyCase) {
  WeakPerspectiveCamera bar{1.0, {0.5, 0.5}};
  WeakPerspectiveCamera a{2.0, {0.5, 0.5}};
  TransformMatrix h = homography_from_cameras(a, bar);
  // pure 1/2 scaling about the projection center t
  Vec2 fixed = h.apply({0.5, 0.5});
  EXPECT_NEAR(fixed.x, 0.5, 1e-15);
  EXPECT_NEAR(fixed.y, 0.5, 1e-15);
  Vec2 p = h.apply({0.9, 0.5});
  EXPECT_NEAR(p.x - 0.5, 0.2, 1e-15);
}

TEST(Homography, GroupLaws) {
  Rng rng(7);
  for (int it = 0; it < 100; ++it) {
    auto a = random_camera(rng), b = random_camera(rng), g = random_camera(rng);
    TransformMatrix hab = homography_from_cameras(a, b);
    TransformMatrix hbg = homography_from_cameras(b, g);
    TransformMatrix hag = homography_from_cameras(a, g);
    // composition in application order
    EXPECT_TRUE(hbg.mul(hab).near(hag, 1e-9));
    EXPECT_TRUE(hab.inverse().near(homography_from_cameras(b, a), 1e-9));
    EXPECT_TRUE(homography_from_cameras(a, a).near(TransformMatrix::identity(), 1e-9));
  }
}

TEST(ApplyToCoords, MatrixOracle) {
  Rng rng(8);
  for (int it = 0; it < 20; ++it) {
    TransformMatrix t = TransformMatrix::from_rows({rng.normal(), rng.normal(), rng.normal(),
                                                    rng.normal(), rng.normal(), rng.normal(), 0, 0, 1});
    std::vector<Vec2> pts;
    for (int i = 0; i < 10; ++i) pts.push_back({rng.normal(), rng.normal()});
    auto mapped = apply_to_coords(t, pts);
    for (size_t i = 0; i < pts.size(); ++i) {
      // straight 3x3 multiply oracle
      double x = t.m[0] * pts[i].x + t.m[1] * pts[i].y + t.m[2];
      double y = t.m[3] * pts[i].x + t.m[4] * pts[i].y + t.m[5];
      EXPECT_NEAR(mapped[i].x, x, 1e-12);
      EXPECT_NEAR(mapped[i].y, y, 1e-12);
    }
  }
}

TEST(ApplyToCoords, RejectsNonHomogeneousLastRow) {
  TransformMatrix t;
  t.m[6] = 0.1;
  EXPECT_THROW(apply_to_coords(t, {{0, 0}}), std::invalid_argument);
}

TEST(Warp, IdentityIsExactCopy) {
  Image img = test_pattern(32);
  Image out = warp_image(img, TransformMatrix::identity(), 32);
  for (size_t i = 0; i < img.data().size(); ++i) EXPECT_NEAR(out.data()[i], img.data()[i], 1e-6);
}

TEST(Warp, MatchesPerPixelOracle) {
  Image img = test_pattern(24);
  // uniform 2x zoom-out about the origin
  TransformMatrix h = TransformMatrix::from_rows({2, 0, 0, 0, 2, 0, 0, 0, 1});
  Image out = warp_image(img, h, 32);
  TransformMatrix inv = h.inverse();
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x) {
      Vec2 u{(x + 0.5) / 32.0, (y + 0.5) / 32.0};
      Vec2 s = inv.apply(u);
      float px[4];
      img.sample_bilinear(float(s.x * img.width()), float(s.y * img.height()), px);
      for (int c = 0; c < 4; ++c)
        EXPECT_NEAR(out.pixel(x, y)[c], px[c], 1e-5);
    }
}

TEST(Warp, FullyOffFrameIsTransparent) {
  Image img = test_pattern(16);
  TransformMatrix h = TransformMatrix::from_rows({1, 0, 5.0, 0, 1, 5.0, 0, 0, 1});
  Image out = warp_image(img, h, 16);
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x) EXPECT_EQ(out.pixel(x, y)[3], 0.0f);
}

TEST(Warp, RoundTripWithinTolerance) {
  Image img = quantize8(test_pattern(64));
  TransformMatrix h =
      TransformMatrix::from_rows({1.3, 0, -0.1, 0, 1.3, 0.05, 0, 0, 1});
  Image once = warp_image(img, h, 64);
  Image back = warp_image(once, h.inverse(), 64);
  double acc = 0;
  int n = 0;
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x) {
      if (back.pixel(x, y)[3] < 0.999f) continue;  // doubly-valid region only
      for (int c = 0; c < 3; ++c) {
        acc += std::abs(back.pixel(x, y)[c] - img.pixel(x, y)[c]);
        ++n;
      }
    }
  ASSERT_GT(n, 0);
  EXPECT_LE(acc / n, 2.0 / 255.0);
}

TEST(Warp, NonInvertibleRejected) {
  Image img = test_pattern(8);
  TransformMatrix h = TransformMatrix::from_rows({0, 0, 0, 0, 0, 0, 0, 0, 1});
  EXPECT_THROW(warp_image(img, h, 8), std::invalid_argument);
}

TEST(UnitFrame, MatchesCenteredConjugation) {
  SamplingParams p{{0.3, 0.7}, 2.0, 64};
  TransformMatrix tu = to_unit_frame(make_transform(p));
  // [0,1]-frame window map: u -> u/s + (v - 1/(2s))
  Vec2 a = tu.apply({0.0, 0.0});
  EXPECT_NEAR(a.x, 0.3 - 0.25, 1e-12);
  EXPECT_NEAR(a.y, 0.7 - 0.25, 1e-12);
  Vec2 b = tu.apply({1.0, 1.0});
  EXPECT_NEAR(b.x, 0.3 + 0.25, 1e-12);
  EXPECT_NEAR(b.y, 0.7 + 0.25, 1e-12);
}

TEST(Png, RoundTrip) {
  Image img = quantize8(test_pattern(20));
  std::string path = ::testing::TempDir() + "/continuum_png_roundtrip.png";
  img.save_png(path);
  Image back = Image::load_png(path);
  ASSERT_EQ(back.width(), 20);
  for (size_t i = 0; i < img.data().size(); ++i)
    EXPECT_NEAR(back.data()[i], img.data()[i], 0.5 / 255.0);
}
