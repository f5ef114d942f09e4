#include "pas/data/dataset.hpp"
#include "pas/render/renderer.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace pas;

namespace {

JointStates restStates(const Vector3d& translation = Vector3d::Zero()) {
  return forwardKinematics(Skeleton::canonical(), Pose::rest(), translation);
}

JointStates randomStates(uint64_t seed) {
  return forwardKinematics(Skeleton::canonical(), generateRecords(1, seed)[0].pose);
}

Raster alphaOnly(const Raster& r) {
  Raster a(r.width(), r.height());
  a.setChannel(3, r.channel(3));
  return a;
}

} // namespace

TEST(Camera, ProjectsOriginToImageCenter) {
  const Camera cam;
  const Eigen::Vector2d uv = cam.project(Vector3d::Zero());
  EXPECT_DOUBLE_EQ(uv.x(), 32.0);
  EXPECT_DOUBLE_EQ(uv.y(), 32.0);
  Camera bad;
  bad.scale = 0.0;
  EXPECT_THROW(bad.validate(), InputError);
}

TEST(Render, RootDiscIsCenteredOnImageCenter) {
  // A skeleton consisting of only the root joint leaves a single disc.
  Skeleton single;
  single.names = {"pelvis"};
  single.parents = {-1};
  single.offsets = {Vector3d::Zero()};
  JointStates states;
  states.positions = {Vector3d::Zero()};
  states.orientations = {Matrix3d::Identity()};
  AvatarStyle style;
  style.colors.resize(1);
  style.jointRadius = 5.0;
  const Raster r = renderGrayBody(single, states, Camera{}, style);
  // Symmetric about the continuous coordinate (32, 32): pixel i mirrors pixel 63 − i.
  for (int y = 0; y < 64; ++y) {
    for (int x = 0; x < 64; ++x) {
      EXPECT_EQ(r.at(x, y, 3), r.at(63 - x, y, 3));
      EXPECT_EQ(r.at(x, y, 3), r.at(x, 63 - y, 3));
    }
  }
  EXPECT_EQ(r.at(31, 31, 3), 1.0);
  EXPECT_EQ(r.at(32, 32, 3), 1.0);
  EXPECT_EQ(r.at(0, 0, 3), 0.0);
  // The linear ramp from r − 0.5 to r + 0.5 integrates to the area of the radius-r disc.
  double mass = 0.0;
  for (double v : r.channel(3).reshaped()) {
    mass += v;
  }
  EXPECT_NEAR(mass, 3.14159 * 5.0 * 5.0, 1.0);
}

TEST(Render, GrayBodyIsDeterministicAndGray) {
  const JointStates s = randomStates(4);
  const Raster a = renderGrayBody(Skeleton::canonical(), s);
  const Raster b = renderGrayBody(Skeleton::canonical(), s);
  EXPECT_EQ(a, b);
  int inside = 0;
  for (int y = 0; y < 64; ++y) {
    for (int x = 0; x < 64; ++x) {
      if (a.at(x, y, 3) > 0.0) {
        ++inside;
        for (int c = 0; c < 3; ++c) {
          EXPECT_EQ(a.at(x, y, c), 0.5);
        }
      } else {
        for (int c = 0; c < 3; ++c) {
          EXPECT_EQ(a.at(x, y, c), 0.0);
        }
      }
    }
  }
  EXPECT_GT(inside, 100);
}

TEST(Render, RestPoseIsMirrorSymmetric) {
  const Raster r = renderGrayBody(Skeleton::canonical(), restStates());
  for (int y = 0; y < 64; ++y) {
    for (int x = 0; x < 64; ++x) {
      EXPECT_NEAR(r.at(x, y, 3), r.at(63 - x, y, 3), 1e-9) << x << "," << y;
    }
  }
}

TEST(Render, GrayStyleEqualsGrayBody) {
  const JointStates s = randomStates(9);
  AvatarStyle style = AvatarStyle::random(3);
  const Raster gray = renderGrayBody(Skeleton::canonical(), s, Camera{}, style);
  EXPECT_EQ(renderAvatar(Skeleton::canonical(), s, style.gray()), gray);
  const Raster colored = renderAvatar(Skeleton::canonical(), s, style);
  EXPECT_EQ(colored.channel(3), gray.channel(3));
}

TEST(Render, DistinctStylesShareAlphaOnly) {
  const JointStates s = randomStates(12);
  const AvatarStyle first = AvatarStyle::random(1);
  AvatarStyle second = AvatarStyle::random(2);
  second.boneThickness = first.boneThickness;
  second.jointRadius = first.jointRadius;
  const Raster a = renderAvatar(Skeleton::canonical(), s, first);
  const Raster b = renderAvatar(Skeleton::canonical(), s, second);
  EXPECT_EQ(a.channel(3), b.channel(3));
  EXPECT_NE(a.channel(0), b.channel(0));
}

TEST(Render, TranslationShiftsRaster) {
  const Camera cam;
  for (const int k : {1, 3, -2}) {
    const Raster base = renderGrayBody(Skeleton::canonical(), restStates());
    const Raster moved =
        renderGrayBody(Skeleton::canonical(), restStates(Vector3d(k * cam.scale, -2 * cam.scale, 0.0)));
    for (int y = 8; y < 56; ++y) {
      for (int x = 8; x < 56; ++x) {
        EXPECT_NEAR(moved.at(x + k, y + 2, 3), base.at(x, y, 3), 1e-9);
      }
    }
  }
}

TEST(Render, OffscreenGeometryIsClipped) {
  const Raster r = renderGrayBody(Skeleton::canonical(), restStates(Vector3d(100.0, 0.0, 0.0)));
  for (double v : r.data()) {
    EXPECT_EQ(v, 0.0);
  }
}

TEST(Render, ValuesInRangeAndEdgesThin) {
  for (uint64_t seed = 0; seed < 10; ++seed) {
    const Raster r = renderAvatar(Skeleton::canonical(), randomStates(seed), AvatarStyle::random(seed));
    for (double v : r.data()) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
    // A fractional-alpha pixel always touches a zero-alpha pixel or a full-alpha pixel within
    // one step; a wide blur band would break this.
    for (int y = 1; y < 63; ++y) {
      for (int x = 1; x < 63; ++x) {
        const double a = r.at(x, y, 3);
        if (a > 0.0 && a < 1.0) {
          bool touchesEdge = false;
          for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
              const double n = r.at(x + dx, y + dy, 3);
              touchesEdge = touchesEdge || n == 0.0 || n == 1.0;
            }
          }
          EXPECT_TRUE(touchesEdge);
        }
      }
    }
  }
}

TEST(Style, ParseAndRoundTrip) {
  const Skeleton& skel = Skeleton::canonical();
  std::istringstream in("# avatar\nbone_thickness = 5\njoint_radius = 3\ncolor.default = 0.1 0.2 0.3\ncolor.head = 1 0.5 0\n");
  const AvatarStyle s = parseStyle(in, skel);
  EXPECT_EQ(s.boneThickness, 5.0);
  EXPECT_EQ(s.jointRadius, 3.0);
  EXPECT_EQ(s.colors[static_cast<size_t>(skel.find("head"))], (Color{1.0, 0.5, 0.0}));
  EXPECT_EQ(s.colors[0], (Color{0.1, 0.2, 0.3}));
  std::ostringstream out;
  writeStyle(out, s, skel);
  std::istringstream back(out.str());
  const AvatarStyle t = parseStyle(back, skel);
  EXPECT_EQ(t.colors, s.colors);
  EXPECT_EQ(t.boneThickness, s.boneThickness);
}

TEST(Style, RejectsBadInput) {
  const Skeleton& skel = Skeleton::canonical();
  for (const char* text : {"color.head = 2 0 0\n", "color.nose = 0 0 0\n", "weight = 3\n", "bone_thickness\n",
                           "bone_thickness = -1\n", "color.head = 0.1 0.2\n"}) {
    std::istringstream in(text);
    EXPECT_THROW(parseStyle(in, skel), InputError) << text;
  }
}

TEST(RasterFile, RoundTripIsLosslessOnByteGrid) {
  const Raster r = quantized(renderAvatar(Skeleton::canonical(), randomStates(5), AvatarStyle::random(5)));
  std::stringstream buf;
  writeRgba(buf, r);
  const std::string bytes = buf.str();
  ASSERT_EQ(bytes.size(), 16u + 64u * 64u * 4u);
  EXPECT_EQ(bytes.substr(0, 8), "PASRGBA1");
  EXPECT_EQ(static_cast<unsigned char>(bytes[8]), 64);
  EXPECT_EQ(bytes[9], 0);
  std::istringstream in(bytes);
  EXPECT_EQ(readRgba(in), r);
}

TEST(RasterFile, RejectsCorruptInput) {
  std::istringstream wrong("PASRGBA2xxxxxxxx");
  EXPECT_THROW(readRgba(wrong), InputError);
  std::stringstream buf;
  writeRgba(buf, Raster(4, 4));
  std::istringstream cut(buf.str().substr(0, 30));
  EXPECT_THROW(readRgba(cut), InputError);
}

TEST(Raster, AlphaOnlyHelperKeepsMask) {
  const Raster r = renderGrayBody(Skeleton::canonical(), restStates());
  EXPECT_EQ(alphaOnly(r).channel(3), r.channel(3));
}
