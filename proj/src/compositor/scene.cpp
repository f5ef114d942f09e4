#include "pas/compositor/scene.hpp"

#include "pas/core/errors.hpp"
#include "pas/core/random.hpp"
#include "pas/data/archetypes.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

namespace pas {

namespace {

enum class Shape { Disc, Box, Triangle, Dots };

struct Palette {
  Color top;
  Color bottom;
  Shape shape;
  Color ink;
  int minShapes;
  int maxShapes;
};

const std::map<std::string, Palette>& palettes() {
  static const std::map<std::string, Palette> p = {
      {"on a beach", {{0.45, 0.75, 0.95}, {0.93, 0.85, 0.6}, Shape::Disc, {1.0, 0.9, 0.3}, 1, 1}},
      {"in a forest", {{0.55, 0.75, 0.55}, {0.2, 0.4, 0.15}, Shape::Triangle, {0.05, 0.3, 0.1}, 2, 4}},
      {"in the snow", {{0.8, 0.85, 0.9}, {0.97, 0.97, 1.0}, Shape::Triangle, {0.6, 0.65, 0.7}, 1, 3}},
      {"at night", {{0.03, 0.04, 0.15}, {0.08, 0.08, 0.12}, Shape::Dots, {0.95, 0.95, 0.8}, 6, 12}},
      {"in a desert", {{0.95, 0.7, 0.4}, {0.85, 0.65, 0.35}, Shape::Box, {0.3, 0.55, 0.25}, 1, 3}},
      {"in a city", {{0.65, 0.68, 0.72}, {0.35, 0.35, 0.38}, Shape::Box, {0.2, 0.2, 0.25}, 2, 5}},
  };
  return p;
}

Color jitter(const Color& c, Rng& rng, double amount) {
  return {std::clamp(c[0] + rng.uniform(-amount, amount), 0.0, 1.0),
          std::clamp(c[1] + rng.uniform(-amount, amount), 0.0, 1.0),
          std::clamp(c[2] + rng.uniform(-amount, amount), 0.0, 1.0)};
}

void setPixel(RgbImage& img, int x, int y, const Color& c) {
  if (x < 0 || y < 0 || x >= kSceneSize || y >= kSceneSize) {
    return;
  }
  for (int k = 0; k < 3; ++k) {
    img.pixels(y * kSceneSize + x, k) = c[static_cast<size_t>(k)];
  }
}

std::string corpusName(size_t index, const char* suffix) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "scene_%06zu%s", index, suffix);
  return buf;
}

} // namespace

RgbImage sceneBackground(const std::string& phrase, Rng& rng) {
  const auto it = palettes().find(phrase);
  if (it == palettes().end()) {
    throwInput("unknown scene phrase '" + phrase + "'");
  }
  const Palette& pal = it->second;
  const Color top = jitter(pal.top, rng, 0.05);
  const Color bottom = jitter(pal.bottom, rng, 0.05);
  const int horizon = rng.uniformInt(26, 40);
  RgbImage img;
  for (int y = 0; y < kSceneSize; ++y) {
    const bool sky = y < horizon;
    const double f = sky ? 0.15 * y / horizon : 0.15 * (y - horizon) / (kSceneSize - horizon);
    const Color& base = sky ? top : bottom;
    for (int x = 0; x < kSceneSize; ++x) {
      setPixel(img, x, y, {base[0] * (1.0 - f), base[1] * (1.0 - f), base[2] * (1.0 - f)});
    }
  }
  const int count = rng.uniformInt(pal.minShapes, pal.maxShapes);
  for (int s = 0; s < count; ++s) {
    const Color ink = jitter(pal.ink, rng, 0.05);
    switch (pal.shape) {
      case Shape::Disc: {
        const double cx = rng.uniform(6.0, 58.0);
        const double cy = rng.uniform(4.0, horizon - 6.0);
        const double r = rng.uniform(3.0, 6.0);
        for (int y = 0; y < kSceneSize; ++y) {
          for (int x = 0; x < kSceneSize; ++x) {
            if (std::hypot(x + 0.5 - cx, y + 0.5 - cy) <= r) {
              setPixel(img, x, y, ink);
            }
          }
        }
        break;
      }
      case Shape::Box: {
        const int w = rng.uniformInt(4, 12);
        const int h = rng.uniformInt(6, 24);
        const int x0 = rng.uniformInt(0, kSceneSize - w);
        for (int y = horizon - h; y < horizon + 2; ++y) {
          for (int x = x0; x < x0 + w; ++x) {
            setPixel(img, x, y, ink);
          }
        }
        break;
      }
      case Shape::Triangle: {
        const int cx = rng.uniformInt(4, 60);
        const int h = rng.uniformInt(10, 22);
        const int base = horizon + rng.uniformInt(0, 4);
        for (int y = base - h; y <= base; ++y) {
          const int half = (y - (base - h)) / 2;
          for (int x = cx - half; x <= cx + half; ++x) {
            setPixel(img, x, y, ink);
          }
        }
        break;
      }
      case Shape::Dots: {
        const int x = rng.uniformInt(0, kSceneSize - 1);
        const int y = rng.uniformInt(0, std::max(0, horizon - 2));
        setPixel(img, x, y, ink);
        break;
      }
    }
  }
  return img;
}

RgbImage compositeOver(const RgbImage& background, const Raster& avatar) {
  if (avatar.width() != kSceneSize || avatar.height() != kSceneSize) {
    throwInput("avatar sprite must be 64x64");
  }
  RgbImage out = background;
  for (int y = 0; y < kSceneSize; ++y) {
    for (int x = 0; x < kSceneSize; ++x) {
      const double a = avatar.at(x, y, 3);
      for (int c = 0; c < 3; ++c) {
        double& v = out.pixels(y * kSceneSize + x, c);
        v = a * avatar.at(x, y, c) + (1.0 - a) * v;
      }
    }
  }
  return out;
}

SyntheticScene makeScene(const DatasetRecord& record, uint64_t seed, const Skeleton& skeleton) {
  Rng rng(mixSeed(seed, 0x5ce7e));
  const auto& phrases = scenePhrases();
  const std::string& phrase = phrases[static_cast<size_t>(rng.uniformInt(0, static_cast<int>(phrases.size()) - 1))];
  const AvatarStyle style = AvatarStyle::random(rng.engine()());
  const Vector3d offset(rng.uniform(-0.25, 0.25), rng.uniform(-0.05, 0.05), 0.0);
  const JointStates states = forwardKinematics(skeleton, record.pose, offset);
  SyntheticScene scene;
  scene.avatar = renderAvatar(skeleton, states, style);
  scene.gray = renderGrayBody(skeleton, states, Camera{}, style);
  scene.image = compositeOver(sceneBackground(phrase, rng), scene.avatar);
  scene.caption = record.caption + " " + phrase;
  return scene;
}

std::vector<SyntheticScene> generateScenes(int n, uint64_t seed) {
  const auto records = generateRecords(n, seed);
  std::vector<SyntheticScene> scenes;
  scenes.reserve(records.size());
  for (const auto& r : records) {
    scenes.push_back(makeScene(r, mixSeed(seed, static_cast<uint64_t>(r.id))));
  }
  return scenes;
}

void writeSceneCorpus(const std::filesystem::path& dir, const std::vector<SyntheticScene>& scenes) {
  std::filesystem::create_directories(dir);
  for (size_t i = 0; i < scenes.size(); ++i) {
    writeRgba(dir / corpusName(i, ".rgba"), quantized(scenes[i].image.toRaster()));
    writeRgba(dir / corpusName(i, ".avatar.rgba"), scenes[i].avatar);
    writeRgba(dir / corpusName(i, ".gray.rgba"), scenes[i].gray);
    std::ofstream out(dir / corpusName(i, ".txt"));
    if (!out) {
      throwInput("cannot write scene caption in " + dir.string());
    }
    out << scenes[i].caption << '\n';
  }
}

std::vector<SyntheticScene> readSceneCorpus(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throwInput("scene corpus directory not found: " + dir.string());
  }
  std::vector<SyntheticScene> scenes;
  for (size_t i = 0;; ++i) {
    const auto image = dir / corpusName(i, ".rgba");
    if (!std::filesystem::exists(image)) {
      break;
    }
    SyntheticScene s;
    s.image = RgbImage::fromRaster(readRgba(image));
    s.avatar = readRgba(dir / corpusName(i, ".avatar.rgba"));
    s.gray = readRgba(dir / corpusName(i, ".gray.rgba"));
    std::ifstream in(dir / corpusName(i, ".txt"));
    if (!in || !std::getline(in, s.caption)) {
      throwInput("missing caption for " + image.string());
    }
    scenes.push_back(std::move(s));
  }
  if (scenes.empty()) {
    throwInput("scene corpus is empty: " + dir.string());
  }
  return scenes;
}

} // namespace pas
