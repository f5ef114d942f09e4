#pragma once

#include "pas/kinematics/skeleton.hpp"

#include <string>
#include <vector>

namespace pas {

class Rng;

/// A family of poses: a base pose, per-joint jitter and caption templates.
/// Templates use `{a|b|c}` synonym slots.
struct Archetype {
  std::string name;
  Pose base;
  /// Standard deviation (radians, per axis-angle component) for each of the 21 body joints.
  std::vector<double> jitterStd;
  std::vector<std::string> templates;
};

/// The eight built-in archetypes, sorted by name.
const std::vector<Archetype>& defaultArchetypes();
const Archetype& findArchetype(const std::string& name);
/// Index into defaultArchetypes(), or -1.
int archetypeIndex(const std::string& name);

/// Expands one template by picking each synonym slot uniformly.
std::string expandTemplate(const std::string& pattern, Rng& rng);
/// Every surface form a template can produce.
std::vector<std::string> allExpansions(const std::string& pattern);

/// Scene phrases appended to captions in the compositor corpus.
const std::vector<std::string>& scenePhrases();

/// Every word that the default caption generators can emit, sorted and unique.
std::vector<std::string> captionWords();

} // namespace pas
