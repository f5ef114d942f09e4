#include "pas/data/archetypes.hpp"

#include "pas/core/errors.hpp"
#include "pas/core/random.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

namespace pas {

namespace {

constexpr double kDefaultJitter = 0.06;

struct JointRotation {
  const char* joint;
  Matrix3d rotation;
};

Archetype makeArchetype(std::string name, std::vector<JointRotation> rotations, std::vector<std::string> templates) {
  const Skeleton& skel = Skeleton::canonical();
  Archetype a;
  a.name = std::move(name);
  a.jitterStd.assign(kBodyJointCount, kDefaultJitter);
  for (const auto& jr : rotations) {
    const int j = skel.find(jr.joint);
    if (j <= 0) {
      throw std::logic_error(std::string("unknown archetype joint ") + jr.joint);
    }
    a.base.body[static_cast<size_t>(j - 1)] = matrixToAxisAngle(jr.rotation);
  }
  a.templates = std::move(templates);
  return a;
}

std::vector<Archetype> buildArchetypes() {
  const Matrix3d leftArmDown = rotationZ(-1.3);
  const Matrix3d rightArmDown = rotationZ(1.3);
  std::vector<Archetype> all;
  all.push_back(makeArchetype(
      "arms-up",
      {{"left_shoulder", rotationZ(1.35)}, {"right_shoulder", rotationZ(-1.35)}},
      {"a person {cheers|celebrates} with both arms overhead",
       "someone raises both hands overhead",
       "a person {cheers|shouts} hooray with arms up",
       "a person celebrates a victory with hands overhead"}));
  all.push_back(makeArchetype(
      "crouch",
      {{"left_hip", rotationX(-2.0)},
       {"right_hip", rotationX(-2.0)},
       {"left_knee", rotationX(2.3)},
       {"right_knee", rotationX(2.3)},
       {"spine1", rotationX(0.4)},
       {"left_shoulder", rotationZ(-1.0)},
       {"right_shoulder", rotationZ(1.0)}},
      {"a person crouches {down|low}",
       "someone squats close to the ground",
       "a person is crouching {down|low} to hide",
       "a person is squatting near the ground"}));
  all.push_back(makeArchetype(
      "kick-right",
      {{"right_hip", rotationX(-1.3)},
       {"right_knee", rotationX(0.2)},
       {"left_shoulder", rotationZ(-0.6)},
       {"right_shoulder", rotationZ(0.6)}},
      {"a person kicks with the right leg",
       "someone is kicking a ball",
       "a person kicks a {ball|football}",
       "a person is kicking {forward|high}"}));
  all.push_back(makeArchetype(
      "lean-left",
      {{"spine1", rotationZ(-0.3)},
       {"spine2", rotationZ(-0.3)},
       {"spine3", rotationZ(-0.3)},
       {"left_shoulder", leftArmDown},
       {"right_shoulder", rightArmDown}},
      {"a person leans to the left",
       "someone is leaning to the left side",
       "a person tilts the body to the left",
       "a person is tilting {left|over}"}));
  all.push_back(makeArchetype(
      "point-up",
      {{"left_shoulder", leftArmDown}, {"right_shoulder", rotationZ(-1.45)}},
      {"a person points at the sky",
       "someone is pointing up with the right hand",
       "a person points {up|upward} at the ceiling",
       "a person is pointing at the {sky|ceiling}"}));
  all.push_back(makeArchetype(
      "sit",
      {{"left_hip", rotationX(-1.5)},
       {"right_hip", rotationX(-1.5)},
       {"left_knee", rotationX(1.5)},
       {"right_knee", rotationX(1.5)},
       {"left_shoulder", leftArmDown},
       {"right_shoulder", rightArmDown}},
      {"a person sits on a chair",
       "someone is sitting {down|quietly}",
       "a person is seated on a {chair|bench}",
       "a person sits down to rest"}));
  all.push_back(makeArchetype(
      "t-pose",
      {},
      {"a person stands in a tpose",
       "a person holds both arms {outstretched|straight} sideways",
       "someone {stands|poses} like an airplane with arms {outstretched|wide}",
       "a person spreads the arms sideways in a tpose"}));
  all.push_back(makeArchetype(
      "wave-right",
      {{"left_shoulder", leftArmDown}, {"right_shoulder", rotationZ(-0.3)}, {"right_elbow", rotationZ(-1.6)}},
      {"a person waves with the right hand",
       "someone is waving hello",
       "a person greets a friend and waves",
       "a person {says|waves} hello with the right arm"}));
  return all;
}

struct Segment {
  std::string literal;
  std::vector<std::string> options;
};

std::vector<Segment> parseTemplate(const std::string& pattern) {
  std::vector<Segment> out;
  size_t i = 0;
  while (i < pattern.size()) {
    const size_t open = pattern.find('{', i);
    if (open == std::string::npos) {
      out.push_back({pattern.substr(i), {}});
      break;
    }
    const size_t close = pattern.find('}', open);
    if (close == std::string::npos) {
      throwInput("caption template has an unterminated slot: " + pattern);
    }
    Segment seg;
    seg.literal = pattern.substr(i, open - i);
    std::stringstream body(pattern.substr(open + 1, close - open - 1));
    std::string option;
    while (std::getline(body, option, '|')) {
      seg.options.push_back(option);
    }
    out.push_back(std::move(seg));
    i = close + 1;
  }
  return out;
}

} // namespace

const std::vector<Archetype>& defaultArchetypes() {
  static const std::vector<Archetype> all = buildArchetypes();
  return all;
}

int archetypeIndex(const std::string& name) {
  const auto& all = defaultArchetypes();
  for (size_t i = 0; i < all.size(); ++i) {
    if (all[i].name == name) {
      return static_cast<int>(i);
    }
  }
  return -1;
}

const Archetype& findArchetype(const std::string& name) {
  const int i = archetypeIndex(name);
  if (i < 0) {
    throwInput("unknown archetype: " + name);
  }
  return defaultArchetypes()[static_cast<size_t>(i)];
}

std::string expandTemplate(const std::string& pattern, Rng& rng) {
  std::string out;
  for (const auto& seg : parseTemplate(pattern)) {
    out += seg.literal;
    if (!seg.options.empty()) {
      out += seg.options[static_cast<size_t>(rng.uniformInt(0, static_cast<int>(seg.options.size()) - 1))];
    }
  }
  return out;
}

std::vector<std::string> allExpansions(const std::string& pattern) {
  std::vector<std::string> results = {""};
  for (const auto& seg : parseTemplate(pattern)) {
    std::vector<std::string> next;
    for (const auto& prefix : results) {
      if (seg.options.empty()) {
        next.push_back(prefix + seg.literal);
      } else {
        for (const auto& opt : seg.options) {
          next.push_back(prefix + seg.literal + opt);
        }
      }
    }
    results = std::move(next);
  }
  return results;
}

const std::vector<std::string>& scenePhrases() {
  static const std::vector<std::string> phrases = {
      "on a beach", "in a forest", "in the snow", "at night", "in a desert", "in a city"};
  return phrases;
}

std::vector<std::string> captionWords() {
  std::set<std::string> words;
  auto addWords = [&](const std::string& text) {
    std::string word;
    for (char c : text + " ") {
      if (std::isalnum(static_cast<unsigned char>(c)) != 0) {
        word += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      } else if (!word.empty()) {
        words.insert(word);
        word.clear();
      }
    }
  };
  for (const auto& a : defaultArchetypes()) {
    for (const auto& t : a.templates) {
      for (const auto& e : allExpansions(t)) {
        addWords(e);
      }
    }
  }
  for (const auto& s : scenePhrases()) {
    addWords(s);
  }
  return {words.begin(), words.end()};
}

} // namespace pas
