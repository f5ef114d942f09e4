#pragma once

#include "pas/compositor/autoencoder.hpp"
#include "pas/data/dataset.hpp"
#include "pas/render/renderer.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace pas {

class Rng;

/// Background plus an alpha-composited avatar whose sprite and gray render are known exactly.
struct SyntheticScene {
  RgbImage image;
  Raster avatar;
  Raster gray;
  std::string caption;
};

/// Procedural background for one of the built-in scene phrases: a two-color gradient split
/// at a random horizon plus a few phrase-specific shapes.
RgbImage sceneBackground(const std::string& phrase, Rng& rng);

/// Composites `record`'s pose, rendered with a random avatar style and a small random
/// root offset, over a random scene background. The caption is the pose caption plus the phrase.
SyntheticScene makeScene(const DatasetRecord& record, uint64_t seed, const Skeleton& skeleton = Skeleton::canonical());
/// Scenes over generateRecords(n, seed).
std::vector<SyntheticScene> generateScenes(int n, uint64_t seed);

/// α·avatar + (1 − α)·background per pixel.
RgbImage compositeOver(const RgbImage& background, const Raster& avatar);

/// Directory layout: scene_%06d.rgba (the composite), scene_%06d.txt (caption), plus
/// scene_%06d.avatar.rgba and scene_%06d.gray.rgba holding the conditioning renders.
void writeSceneCorpus(const std::filesystem::path& dir, const std::vector<SyntheticScene>& scenes);
std::vector<SyntheticScene> readSceneCorpus(const std::filesystem::path& dir);

} // namespace pas
