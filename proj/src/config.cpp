#include "scpt/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace scpt {

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

const std::vector<Config::KeySpec>& Config::known_keys() {
  static const std::vector<KeySpec> keys = {
      // model
      {"model.layers", "4", "transformer depth L"},
      {"model.dim", "64", "token width D"},
      {"model.heads", "4", "attention heads"},
      {"model.patch", "16", "patch size for the facial embedding"},
      {"model.frame_size", "32", "square frame side in pixels"},
      {"model.frame_channels", "3", "frame channels"},
      {"model.frames_per_clip", "4", "frames T sampled per clip"},
      {"model.tfr_size", "32", "square TFR input side fed to the physio encoder"},
      {"model.physio_stem", "16", "stem channels; blocks use stem, 2*stem, 4*stem, then dim"},
      {"model.mcp", "true", "enable the modality-complementary prompter"},
      {"model.dssa", "true", "enable the shared/specific adapters"},
      {"model.pos_every_layer", "true", "re-add positional encoding at every layer"},
      {"model.mcp_latent", "0", "MCP shared latent width d' (0 = dim/2)"},
      {"model.dssa_rank", "8", "shared branch rank R (must stay < dim/2)"},
      {"model.dssa_scale", "0.1", "residual scaling factor s"},
      {"model.svd_rank", "16", "emotion subspace rank S (clamped to min(N, dim))"},
      {"model.backbone_checkpoint", "", "optional tensor file with frozen.* weights"},
      // tfr
      {"tfr.gamma", "3", "Morse gamma"},
      {"tfr.beta", "20", "Morse beta"},
      {"tfr.voices_per_octave", "16", "log-grid voices per octave"},
      {"tfr.f_lo", "0.05", "band crop lower edge in Hz"},
      {"tfr.f_hi", "5", "band crop upper edge in Hz"},
      // train
      {"train.lr", "1e-4", "base learning rate"},
      {"train.weight_decay", "0.01", "decoupled weight decay"},
      {"train.epochs", "100", "cosine schedule length"},
      {"train.batch_size", "32", "clips per optimizer step"},
      {"train.seed", "1", "base seed; fold f re-initializes from seed+f"},
      {"train.target", "arousal", "classification target: valence or arousal"},
      {"train.schedule", "cosine", "learning-rate schedule"},
      // loss
      {"loss.lambda1", "0.1", "weight of the specific-branch L1 penalty"},
      {"loss.lambda2", "0.1", "weight of the shared/specific orthogonality penalty"},
      {"loss.lambda3", "0.6", "weight of the subject supervision"},
      {"loss.normalization", "mean", "mean (per-element) or sum (literal) penalty scaling"},
      // data
      {"data.subjects", "12", "synthetic subjects"},
      {"data.trials", "20", "trials per subject"},
      {"data.confound", "0.8", "subject confound strength"},
      {"data.seed", "7", "synthetic generator seed"},
      {"data.clip_seconds", "5", "clip length for trial segmentation"},
      {"data.trial_seconds", "30", "trial length"},
      {"data.sample_rate", "128", "waveform sample rate in Hz"},
      {"data.fps", "2", "synthetic video frame rate"},
  };
  return keys;
}

Config::Config() {
  for (const auto& k : known_keys()) values_[k.key] = k.def;
}

Config Config::parse_string(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw ConfigError("line " + std::to_string(lineno) + ": malformed section header '" + t + "'");
      section = trim(t.substr(1, t.size() - 2));
      if (section.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty section name");
      continue;
    }
    size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value, got '" + t + "'");
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    if (section.empty()) throw ConfigError("line " + std::to_string(lineno) + ": key outside any section");
    cfg.set(section + "." + key, value);
  }
  return cfg;
}

Config Config::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_string(ss.str());
}

void Config::set(const std::string& key, const std::string& value) {
  if (values_.find(key) == values_.end()) throw ConfigError("unknown config key: " + key);
  values_[key] = value;
}

std::string Config::serialize() const {
  std::string out;
  std::string section;
  for (const auto& k : known_keys()) {
    std::string key = k.key;
    size_t dot = key.find('.');
    std::string sec = key.substr(0, dot);
    if (sec != section) {
      if (!out.empty()) out += "\n";
      out += "[" + sec + "]\n";
      section = sec;
    }
    out += key.substr(dot + 1) + " = " + values_.at(key) + "\n";
  }
  return out;
}

void Config::write_file(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write config file: " + path);
  out << serialize();
}

const std::string& Config::get_str(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key: " + key);
  return it->second;
}

double Config::get_real(const std::string& key) const {
  const std::string& s = get_str(key);
  try {
    size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + ": '" + s + "' is not a number");
  }
}

int Config::get_int(const std::string& key) const {
  double v = get_real(key);
  int i = static_cast<int>(v);
  if (static_cast<double>(i) != v) throw ConfigError("config key " + key + ": expected integer");
  return i;
}

bool Config::get_bool(const std::string& key) const {
  std::string s = get_str(key);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError("config key " + key + ": expected boolean, got '" + s + "'");
}

}  // namespace scpt
