#include "pas/app/config.hpp"

#include "pas/core/errors.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

namespace pas {

namespace {

using K = ConfigKind;

const ConfigKey* findKey(const std::string& name) {
  for (const auto& k : Config::schema()) {
    if (k.name == name) {
      return &k;
    }
  }
  return nullptr;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) {
    return "";
  }
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool parseInt(const std::string& v, int& out) {
  const auto* end = v.data() + v.size();
  const auto r = std::from_chars(v.data(), end, out);
  return r.ec == std::errc() && r.ptr == end;
}

bool parseDouble(const std::string& v, double& out) {
  const auto* end = v.data() + v.size();
  const auto r = std::from_chars(v.data(), end, out);
  return r.ec == std::errc() && r.ptr == end && std::isfinite(out);
}

void checkValue(const ConfigKey& key, const std::string& value) {
  int i = 0;
  double d = 0.0;
  bool ok = true;
  switch (key.kind) {
    case K::Int:
      ok = parseInt(value, i);
      break;
    case K::Double:
      ok = parseDouble(value, d);
      break;
    case K::Bool:
      ok = value == "true" || value == "false";
      break;
    case K::String:
      ok = !value.empty();
      break;
  }
  if (!ok) {
    throwConfig("config key " + key.name + ": invalid value '" + value + "'");
  }
}

} // namespace

const std::vector<ConfigKey>& Config::schema() {
  static const std::vector<ConfigKey> keys = {
      {"data.n", K::Int, "8000", "records produced by gen-data when --n is absent"},
      {"data.train_fraction", K::Double, "0.8", "share of records used for training"},
      {"data.validation_fraction", K::Double, "0.1", "share of records held out for validation"},
      {"data.test_fraction", K::Double, "0.1", "share of records held out for testing"},

      {"prior.hidden", K::Int, "256", "pose prior hidden width"},
      {"prior.beta_kl", K::Double, "0.005", "weight of the KL term"},
      {"prior.lambda_rot", K::Double, "1", "weight of the rotation-validity term"},
      {"prior.steps", K::Int, "2500", "pose prior training steps"},
      {"prior.batch", K::Int, "128", "pose prior batch size"},
      {"prior.lr", K::Double, "0.001", "pose prior Adam learning rate"},

      {"posediff.mode", K::String, "latent", "pose representation: latent or 6d"},
      {"posediff.layers", K::Int, "2", "transformer blocks"},
      {"posediff.width", K::Int, "64", "transformer width"},
      {"posediff.heads", K::Int, "4", "attention heads"},
      {"posediff.mlp_ratio", K::Int, "4", "MLP expansion ratio"},
      {"posediff.timesteps", K::Int, "1000", "diffusion steps T"},
      {"posediff.schedule", K::String, "cosine", "noise schedule: cosine or linear"},
      {"posediff.drop_prob", K::Double, "0.1", "probability of dropping the caption during training"},
      {"posediff.steps", K::Int, "4000", "training steps"},
      {"posediff.batch", K::Int, "64", "batch size"},
      {"posediff.lr", K::Double, "0.001", "Adam learning rate"},
      {"posediff.grad_clip", K::Double, "1", "global gradient-norm clip (0 disables)"},

      {"sample.n", K::Int, "5", "candidates drawn per caption"},
      {"sample.guidance", K::Double, "3", "classifier-free guidance scale"},
      {"sample.steps", K::Int, "50", "respaced sampling steps (0 = all T)"},
      {"sample.rerank", K::Bool, "true", "pick the best candidate with the aligner"},

      {"aligner.hidden", K::Int, "128", "aligner tower width"},
      {"aligner.temperature", K::Double, "0.07", "contrastive temperature"},
      {"aligner.steps", K::Int, "1500", "training steps"},
      {"aligner.batch", K::Int, "64", "batch size"},
      {"aligner.lr", K::Double, "0.001", "Adam learning rate"},

      {"retarget.w_pos", K::Double, "1", "position term weight"},
      {"retarget.w_rot", K::Double, "0.5", "orientation term weight"},
      {"retarget.max_iterations", K::Int, "1000", "solver iteration cap"},
      {"retarget.tolerance", K::Double, "1e-06", "gradient-norm stopping tolerance"},

      {"render.width", K::Int, "64", "image width in pixels"},
      {"render.height", K::Int, "64", "image height in pixels"},
      {"render.scale", K::Double, "0.032", "meters per pixel"},

      {"compositor.scenes", K::Int, "600", "synthetic scenes generated when --data is absent"},
      {"compositor.channels", K::Int, "4", "latent channels C"},
      {"compositor.ae_hidden", K::Int, "128", "autoencoder hidden width"},
      {"compositor.ae_steps", K::Int, "1000", "autoencoder training steps"},
      {"compositor.base", K::Int, "32", "denoiser width at 16x16"},
      {"compositor.bottleneck", K::Int, "64", "denoiser width at 8x8"},
      {"compositor.heads", K::Int, "4", "cross-attention heads"},
      {"compositor.timesteps", K::Int, "1000", "diffusion steps T"},
      {"compositor.steps", K::Int, "1500", "denoiser training steps"},
      {"compositor.batch", K::Int, "16", "denoiser batch size"},
      {"compositor.lr", K::Double, "0.001", "Adam learning rate"},
      {"compositor.sample_steps", K::Int, "50", "respaced sampling steps"},
      {"compositor.conditioned", K::Bool, "true", "false trains the unconditioned ablation"},

      {"train.log_every", K::Int, "100", "steps between loss log lines"},
      {"train.checkpoint_every", K::Int, "1000", "steps between intermediate checkpoints (0 disables)"},

      {"eval.samples_per_archetype", K::Int, "200", "guided samples per archetype for consistency"},
      {"eval.fpd_samples", K::Int, "2000", "generated samples for FPD (capped by the test set size)"},
  };
  return keys;
}

Config::Config() {
  for (const auto& k : schema()) {
    values_[k.name] = k.defaultValue;
  }
}

Config Config::parse(std::istream& in) {
  Config c;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string text = trim(raw.substr(0, raw.find('#')));
    if (text.empty()) {
      continue;
    }
    const auto eq = text.find('=');
    if (eq == std::string::npos) {
      throwConfig("config line " + std::to_string(line) + ": expected key = value");
    }
    c.set(trim(text.substr(0, eq)), trim(text.substr(eq + 1)));
  }
  return c;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throwConfig("cannot open config file: " + path.string());
  }
  return parse(in);
}

void Config::write(std::ostream& out) const {
  for (const auto& k : schema()) {
    out << "# " << k.doc << '\n' << k.name << " = " << values_.at(k.name) << '\n';
  }
}

void Config::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) {
    throwInput("cannot write config file: " + path.string());
  }
  write(out);
}

void Config::set(const std::string& key, const std::string& value) {
  const ConfigKey* k = findKey(key);
  if (k == nullptr) {
    throwConfig("unknown config key '" + key + "'");
  }
  checkValue(*k, value);
  values_[key] = value;
}

const std::string& Config::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) {
    throwConfig("unknown config key '" + key + "'");
  }
  return it->second;
}

int Config::getInt(const std::string& key) const {
  const ConfigKey* k = findKey(key);
  if (k == nullptr || k->kind != K::Int) {
    throwConfig("config key " + key + " is not an integer");
  }
  int v = 0;
  parseInt(get(key), v);
  return v;
}

double Config::getDouble(const std::string& key) const {
  const ConfigKey* k = findKey(key);
  if (k == nullptr || k->kind != K::Double) {
    throwConfig("config key " + key + " is not a number");
  }
  double v = 0.0;
  parseDouble(get(key), v);
  return v;
}

bool Config::getBool(const std::string& key) const {
  const ConfigKey* k = findKey(key);
  if (k == nullptr || k->kind != K::Bool) {
    throwConfig("config key " + key + " is not a boolean");
  }
  return get(key) == "true";
}

} // namespace pas
