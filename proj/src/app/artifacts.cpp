#include "pas/app/artifacts.hpp"

#include "pas/core/errors.hpp"

#include <system_error>

namespace pas {

std::filesystem::path Artifacts::intermediate(const std::string& stage, int step) const {
  return dir / (stage + ".step" + std::to_string(step) + ".ckpt");
}

void Artifacts::create() const {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throwInput("cannot create artifacts directory " + dir.string());
  }
}

void Artifacts::require(const std::filesystem::path& file, const std::string& stage) {
  if (!std::filesystem::is_regular_file(file)) {
    throw ModelStateError("missing " + stage + " checkpoint " + file.string() + " (run train-" + stage + " first)");
  }
}

} // namespace pas
