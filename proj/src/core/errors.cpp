#include "pas/core/errors.hpp"

namespace pas {

void throwInput(const std::string& message) {
  throw InputError(message);
}

void throwConfig(const std::string& message) {
  throw ConfigError(message);
}

} // namespace pas
