#pragma once

#include <filesystem>
#include <string>

namespace pas {

/// Fixed file names inside an artifacts directory. Training commands write here and the
/// sampling, evaluation and end-to-end commands read from here.
struct Artifacts {
  std::filesystem::path dir;

  [[nodiscard]] std::filesystem::path prior() const {
    return dir / "prior.ckpt";
  }
  [[nodiscard]] std::filesystem::path poseDiffusion() const {
    return dir / "posediff.ckpt";
  }
  [[nodiscard]] std::filesystem::path aligner() const {
    return dir / "aligner.ckpt";
  }
  [[nodiscard]] std::filesystem::path autoencoder() const {
    return dir / "autoencoder.ckpt";
  }
  [[nodiscard]] std::filesystem::path compositor() const {
    return dir / "compositor.ckpt";
  }
  /// "step\tloss" lines of one training stage.
  [[nodiscard]] std::filesystem::path log(const std::string& stage) const {
    return dir / (stage + ".log");
  }
  /// Periodic checkpoint written during training, e.g. prior.step1000.ckpt.
  [[nodiscard]] std::filesystem::path intermediate(const std::string& stage, int step) const;

  /// Creates the directory; InputError if that fails.
  void create() const;
  /// ModelStateError naming the stage when `file` does not exist.
  static void require(const std::filesystem::path& file, const std::string& stage);
};

} // namespace pas
