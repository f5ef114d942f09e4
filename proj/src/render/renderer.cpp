#include "pas/render/renderer.hpp"

#include "pas/core/errors.hpp"
#include "pas/core/random.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>

namespace pas {

void Camera::validate() const {
  if (width < 1 || height < 1) {
    throwInput("camera image size must be positive");
  }
  if (!(scale > 0.0)) {
    throwInput("camera scale must be positive");
  }
}

Eigen::Vector2d Camera::project(const Vector3d& p) const {
  const Vector3d q = p - center;
  return {width / 2.0 + q.x() / scale, height / 2.0 - q.y() / scale};
}

void AvatarStyle::validate(int jointCount) const {
  if (static_cast<int>(colors.size()) != jointCount) {
    throwInput("avatar style needs one color per joint");
  }
  for (const auto& c : colors) {
    for (double v : c) {
      if (!(v >= 0.0 && v <= 1.0)) {
        throwInput("avatar style colors must lie in [0, 1]");
      }
    }
  }
  if (!(boneThickness > 0.0) || !(jointRadius >= 0.0)) {
    throwInput("avatar style thickness must be positive");
  }
}

AvatarStyle AvatarStyle::gray() const {
  AvatarStyle g = *this;
  std::fill(g.colors.begin(), g.colors.end(), Color{0.5, 0.5, 0.5});
  return g;
}

AvatarStyle AvatarStyle::random(uint64_t seed) {
  Rng rng(mixSeed(seed, 0x5717e));
  auto pick = [&](double lo, double hi) {
    return Color{rng.uniform(lo, hi), rng.uniform(lo, hi), rng.uniform(lo, hi)};
  };
  const Color shirt = pick(0.1, 0.95);
  const Color trousers = pick(0.05, 0.7);
  const double tone = rng.uniform(0.35, 0.95);
  const Color skin{tone, tone * 0.8, tone * 0.65};
  AvatarStyle s;
  const Skeleton& skel = Skeleton::canonical();
  for (int j = 0; j < skel.jointCount(); ++j) {
    const std::string& n = skel.names[static_cast<size_t>(j)];
    Color c = shirt;
    if (n.find("hip") != std::string::npos || n.find("knee") != std::string::npos ||
        n.find("ankle") != std::string::npos || n.find("foot") != std::string::npos || n == "pelvis") {
      c = trousers;
    } else if (n == "head" || n.find("wrist") != std::string::npos) {
      c = skin;
    }
    s.colors[static_cast<size_t>(j)] = c;
  }
  s.boneThickness = rng.uniform(3.5, 5.0);
  s.jointRadius = s.boneThickness * 0.6;
  return s;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) {
    return "";
  }
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

Color parseColor(const std::string& text, int line) {
  std::istringstream in(text);
  Color c{};
  std::string extra;
  if (!(in >> c[0] >> c[1] >> c[2]) || (in >> extra)) {
    throwInput("style line " + std::to_string(line) + ": expected three color values");
  }
  return c;
}

double parseNumber(const std::string& text, int line) {
  std::istringstream in(text);
  double v = 0.0;
  std::string extra;
  if (!(in >> v) || (in >> extra)) {
    throwInput("style line " + std::to_string(line) + ": expected a number");
  }
  return v;
}

} // namespace

AvatarStyle parseStyle(std::istream& in, const Skeleton& skeleton) {
  AvatarStyle style;
  style.colors.assign(static_cast<size_t>(skeleton.jointCount()), Color{0.5, 0.5, 0.5});
  std::vector<bool> explicitColor(style.colors.size(), false);
  std::string raw;
  int line = 0;
  std::optional<Color> fallback;
  while (std::getline(in, raw)) {
    ++line;
    const std::string text = trim(raw.substr(0, raw.find('#')));
    if (text.empty()) {
      continue;
    }
    const auto eq = text.find('=');
    if (eq == std::string::npos) {
      throwInput("style line " + std::to_string(line) + ": expected key = value");
    }
    const std::string key = trim(text.substr(0, eq));
    const std::string value = trim(text.substr(eq + 1));
    if (key == "bone_thickness") {
      style.boneThickness = parseNumber(value, line);
    } else if (key == "joint_radius") {
      style.jointRadius = parseNumber(value, line);
    } else if (key == "color.default") {
      fallback = parseColor(value, line);
    } else if (key.rfind("color.", 0) == 0) {
      const int j = skeleton.find(key.substr(6));
      if (j < 0) {
        throwInput("style line " + std::to_string(line) + ": unknown joint '" + key.substr(6) + "'");
      }
      style.colors[static_cast<size_t>(j)] = parseColor(value, line);
      explicitColor[static_cast<size_t>(j)] = true;
    } else {
      throwInput("style line " + std::to_string(line) + ": unknown key '" + key + "'");
    }
  }
  if (fallback) {
    for (size_t j = 0; j < style.colors.size(); ++j) {
      if (!explicitColor[j]) {
        style.colors[j] = *fallback;
      }
    }
  }
  style.validate(skeleton.jointCount());
  return style;
}

AvatarStyle loadStyle(const std::filesystem::path& path, const Skeleton& skeleton) {
  std::ifstream in(path);
  if (!in) {
    throwInput("cannot open style file: " + path.string());
  }
  return parseStyle(in, skeleton);
}

void writeStyle(std::ostream& out, const AvatarStyle& style, const Skeleton& skeleton) {
  out << std::setprecision(17);
  out << "bone_thickness = " << style.boneThickness << '\n';
  out << "joint_radius = " << style.jointRadius << '\n';
  for (int j = 0; j < skeleton.jointCount(); ++j) {
    const auto& c = style.colors[static_cast<size_t>(j)];
    out << "color." << skeleton.names[static_cast<size_t>(j)] << " = " << c[0] << ' ' << c[1] << ' ' << c[2] << '\n';
  }
}

Raster renderAvatar(const Skeleton& skeleton, const JointStates& states, const AvatarStyle& style, const Camera& camera) {
  camera.validate();
  const int n = skeleton.jointCount();
  if (static_cast<int>(states.positions.size()) != n) {
    throwInput("render: joint states do not match the skeleton");
  }
  style.validate(n);
  struct Primitive {
    Eigen::Vector2d a;
    Eigen::Vector2d b;
    double radius;
    int color;
  };
  std::vector<Primitive> prims;
  std::vector<Eigen::Vector2d> uv(static_cast<size_t>(n));
  for (int j = 0; j < n; ++j) {
    uv[static_cast<size_t>(j)] = camera.project(states.positions[static_cast<size_t>(j)]);
  }
  for (int j = 0; j < n; ++j) {
    const int p = skeleton.parents[static_cast<size_t>(j)];
    if (p >= 0) {
      prims.push_back({uv[static_cast<size_t>(p)], uv[static_cast<size_t>(j)], style.boneThickness / 2.0, j});
    }
  }
  for (int j = 0; j < n; ++j) {
    prims.push_back({uv[static_cast<size_t>(j)], uv[static_cast<size_t>(j)], style.jointRadius, j});
  }
  Raster out(camera.width, camera.height);
  for (int y = 0; y < camera.height; ++y) {
    for (int x = 0; x < camera.width; ++x) {
      const Eigen::Vector2d c(x + 0.5, y + 0.5);
      double best = 0.0;
      int bestColor = -1;
      for (const auto& pr : prims) {
        const Eigen::Vector2d ab = pr.b - pr.a;
        const double len2 = ab.squaredNorm();
        const double t = len2 > 0.0 ? std::clamp((c - pr.a).dot(ab) / len2, 0.0, 1.0) : 0.0;
        const double dist = (c - (pr.a + t * ab)).norm();
        const double cov = std::clamp(pr.radius + 0.5 - dist, 0.0, 1.0);
        if (cov > best) {
          best = cov;
          bestColor = pr.color;
        }
      }
      if (bestColor >= 0) {
        const auto& col = style.colors[static_cast<size_t>(bestColor)];
        out.at(x, y, 0) = col[0];
        out.at(x, y, 1) = col[1];
        out.at(x, y, 2) = col[2];
        out.at(x, y, 3) = best;
      }
    }
  }
  return out;
}

Raster renderGrayBody(const Skeleton& skeleton, const JointStates& states, const Camera& camera, const AvatarStyle& geometry) {
  AvatarStyle g = geometry;
  g.colors.assign(static_cast<size_t>(skeleton.jointCount()), Color{0.5, 0.5, 0.5});
  return renderAvatar(skeleton, states, g, camera);
}

} // namespace pas
