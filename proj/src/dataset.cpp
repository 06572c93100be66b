#include "scpt/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace scpt {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

struct SubjectProfile {
  double tint[3];
  double tint_bias[3];  // valence-conditional tint response, random per subject
  double drift_freq, drift_amp, drift_phase;
  double noise_gain;
};

// Subject confounds: a static color tint, a tint response whose coupling
// to the valence class is consistent within a subject but random across
// subjects (so it misleads on unseen subjects), waveform baseline drift,
// and a per-subject noise level.
SubjectProfile subject_profile(uint64_t seed, int subject) {
  Rng rng(mix_seed(seed, 0x51u, static_cast<uint64_t>(subject)));
  SubjectProfile p;
  for (double& c : p.tint) c = rng.uniform(-0.35, 0.35);
  for (double& c : p.tint_bias) c = rng.uniform(-0.25, 0.25);
  p.drift_freq = rng.uniform(0.05, 0.3);
  p.drift_amp = rng.uniform(1.0, 3.0);
  p.drift_phase = rng.uniform(0.0, kTwoPi);
  p.noise_gain = rng.uniform(0.5, 1.5);
  return p;
}

}  // namespace

std::vector<Sample> synth_dataset(const SynthSpec& spec) {
  if (spec.num_subjects < 3) throw TooFewSubjects("synth_dataset: need at least 3 subjects");
  const int samples_per_trial = static_cast<int>(std::lround(spec.trial_seconds * spec.sample_rate));
  const int frames_per_trial = static_cast<int>(std::lround(spec.trial_seconds * spec.fps));
  const int fsz = spec.frame_size;
  const double conf = spec.confound_strength;

  std::vector<Sample> trials;
  trials.reserve(static_cast<size_t>(spec.num_subjects) * spec.trials_per_subject);

  for (int s = 0; s < spec.num_subjects; ++s) {
    const SubjectProfile prof = subject_profile(spec.seed, s);
    for (int t = 0; t < spec.trials_per_subject; ++t) {
      Rng rng(mix_seed(spec.seed, 0x7200u, static_cast<uint64_t>(s), static_cast<uint64_t>(t)));
      Sample trial;
      trial.subject_id = s;
      trial.trial_id = t;

      const int arousal_class = rng.uniform() < 0.5 ? 0 : 1;
      const int valence_class = rng.uniform() < 0.5 ? 0 : 1;
      trial.arousal_score = arousal_class ? 5.0 + 4.0 * rng.uniform() : 1.0 + 4.0 * rng.uniform();
      trial.valence_score = valence_class ? 5.0 + 4.0 * rng.uniform() : 1.0 + 4.0 * rng.uniform();
      if (arousal_class && trial.arousal_score <= 5.0) trial.arousal_score = 5.0 + 1e-6;
      if (valence_class && trial.valence_score <= 5.0) trial.valence_score = 5.0 + 1e-6;
      // scores live on the f32 grid so the on-disk form is bit-exact
      trial.arousal_score = static_cast<double>(static_cast<float>(trial.arousal_score));
      trial.valence_score = static_cast<double>(static_cast<float>(trial.valence_score));

      // waveform: class-banded heart rate plus subject drift and noise
      const double f_hr = arousal_class ? rng.uniform(1.3, 1.8) : rng.uniform(0.9, 1.2);
      const double phase = rng.uniform(0.0, kTwoPi);
      const double noise_sigma = 0.05 + conf * 0.45 * prof.noise_gain;
      trial.waveform.sample_rate_hz = spec.sample_rate;
      trial.waveform.samples.resize(static_cast<size_t>(samples_per_trial));
      for (int i = 0; i < samples_per_trial; ++i) {
        const double tm = static_cast<double>(i) / spec.sample_rate;
        double v = std::sin(kTwoPi * f_hr * tm + phase);
        v += conf * prof.drift_amp * std::sin(kTwoPi * prof.drift_freq * tm + prof.drift_phase);
        v += noise_sigma * rng.normal();
        trial.waveform.samples[static_cast<size_t>(i)] =
            static_cast<double>(static_cast<float>(v));
      }

      // frames: quadrant motifs (valence top-left, arousal bottom-right)
      // plus the subject tint and temporal noise
      const double motif = 0.10;
      const double v_sign = valence_class ? 1.0 : -1.0;
      const double a_sign = arousal_class ? 1.0 : -1.0;
      trial.frames.reserve(static_cast<size_t>(frames_per_trial));
      const int half = fsz / 2;
      for (int f = 0; f < frames_per_trial; ++f) {
        Tensor img({3, fsz, fsz});
        for (int c = 0; c < 3; ++c) {
          const double base = 0.5 + conf * (prof.tint[c] + v_sign * prof.tint_bias[c]);
          for (int y = 0; y < fsz; ++y)
            for (int x = 0; x < fsz; ++x) {
              double v = base;
              if (y < half && x < half) v += v_sign * motif;
              if (y >= half && x >= half) v += a_sign * motif;
              v += 0.05 * rng.normal();
              img.at3(c, y, x) = std::clamp(v, 0.0, 1.0);
            }
        }
        quantize_f32(img);
        trial.frames.push_back(std::move(img));
      }
      trials.push_back(std::move(trial));
    }
  }
  return trials;
}

std::vector<Sample> segment_trial(const Sample& trial, double clip_seconds) {
  trial.waveform.validate();
  const double sr = trial.waveform.sample_rate_hz;
  const double duration = static_cast<double>(trial.waveform.samples.size()) / sr;
  if (clip_seconds > duration)
    throw ClipTooLong("segment_trial: clip " + std::to_string(clip_seconds) + " s > trial " +
                      std::to_string(duration) + " s");
  const int num_clips = static_cast<int>(std::floor(duration / clip_seconds + 1e-9));
  const int wave_per_clip = static_cast<int>(std::lround(clip_seconds * sr));
  const int total_frames = static_cast<int>(trial.frames.size());
  // frames split proportionally over the same clip boundaries
  std::vector<Sample> clips;
  clips.reserve(static_cast<size_t>(num_clips));
  for (int k = 0; k < num_clips; ++k) {
    Sample clip;
    clip.subject_id = trial.subject_id;
    clip.trial_id = trial.trial_id;
    clip.clip_index = k;
    clip.valence_score = trial.valence_score;
    clip.arousal_score = trial.arousal_score;
    clip.waveform.sample_rate_hz = sr;
    clip.waveform.samples.assign(
        trial.waveform.samples.begin() + static_cast<int64_t>(k) * wave_per_clip,
        trial.waveform.samples.begin() + static_cast<int64_t>(k + 1) * wave_per_clip);
    const int f0 = static_cast<int>(static_cast<int64_t>(k) * wave_per_clip * total_frames /
                                    trial.waveform.samples.size());
    const int f1 = static_cast<int>(static_cast<int64_t>(k + 1) * wave_per_clip * total_frames /
                                    trial.waveform.samples.size());
    for (int f = f0; f < std::max(f0 + 1, f1) && f < total_frames; ++f)
      clip.frames.push_back(trial.frames[static_cast<size_t>(f)]);
    if (clip.frames.empty()) throw EmptyClip("segment_trial: clip without frames");
    clips.push_back(std::move(clip));
  }
  return clips;
}

int binarize_label(double score, double threshold) { return score > threshold ? 1 : 0; }

TfrSettings TfrSettings::from_config(const Config& cfg) {
  TfrSettings ts;
  ts.morse.gamma = cfg.get_real("tfr.gamma");
  ts.morse.beta = cfg.get_real("tfr.beta");
  ts.morse.voices_per_octave = cfg.get_int("tfr.voices_per_octave");
  ts.f_lo = cfg.get_real("tfr.f_lo");
  ts.f_hi = cfg.get_real("tfr.f_hi");
  // the log grid floor stays at 0.05 Hz; 0 Hz is unreachable, so a
  // "0-5 Hz" crop request keeps everything from the grid floor up
  return ts;
}

Tensor preprocess_tfr(const Waveform& w, const TfrSettings& ts, int out_rows, int out_cols) {
  TFRImage tfr = morse_cwt(w, ts.morse);
  tfr = band_crop(tfr, ts.f_lo, ts.f_hi);
  tfr = resize_bilinear(tfr, out_rows, out_cols);
  tfr = normalize_tfr(tfr);
  return tfr.values;
}

std::vector<ClipData> preprocess_clips(const std::vector<Sample>& clips, const ModelConfig& mcfg,
                                       const TfrSettings& ts) {
  std::vector<ClipData> out;
  out.reserve(clips.size());
  for (const Sample& s : clips) {
    ClipData c;
    c.subject_id = s.subject_id;
    c.trial_id = s.trial_id;
    c.clip_index = std::max(0, s.clip_index);
    c.label_valence = binarize_label(s.valence_score);
    c.label_arousal = binarize_label(s.arousal_score);
    c.tfr = preprocess_tfr(s.waveform, ts, mcfg.tfr_size, mcfg.tfr_size);
    const int f = static_cast<int>(s.frames.size());
    if (f < 1) throw EmptyClip("preprocess_clips: clip without frames");
    c.frames = Tensor({f, s.frames[0].shape[0], s.frames[0].shape[1], s.frames[0].shape[2]});
    const int64_t stride = s.frames[0].numel();
    for (int i = 0; i < f; ++i)
      std::copy(s.frames[static_cast<size_t>(i)].data.begin(),
                s.frames[static_cast<size_t>(i)].data.end(), c.frames.data.begin() + i * stride);
    out.push_back(std::move(c));
  }
  return out;
}

// --- directory formats ---

void write_dataset_dir(const std::vector<Sample>& trials, const SynthSpec& spec,
                       const std::string& dir) {
  fs::create_directories(dir);
  {
    std::ofstream meta(fs::path(dir) / "dataset.txt");
    if (!meta) throw IoError("cannot write dataset.txt in " + dir);
    meta << "subjects=" << spec.num_subjects << "\n"
         << "trials=" << spec.trials_per_subject << "\n"
         << "confound=" << spec.confound_strength << "\n"
         << "seed=" << spec.seed << "\n"
         << "trial_seconds=" << spec.trial_seconds << "\n"
         << "sample_rate=" << spec.sample_rate << "\n"
         << "fps=" << spec.fps << "\n"
         << "frame_size=" << spec.frame_size << "\n";
  }
  for (const Sample& t : trials) {
    const int f = static_cast<int>(t.frames.size());
    Tensor frames({f, t.frames[0].shape[0], t.frames[0].shape[1], t.frames[0].shape[2]});
    const int64_t stride = t.frames[0].numel();
    for (int i = 0; i < f; ++i)
      std::copy(t.frames[static_cast<size_t>(i)].data.begin(),
                t.frames[static_cast<size_t>(i)].data.end(), frames.data.begin() + i * stride);
    NamedTensors ts;
    ts.emplace_back("frames", std::move(frames));
    ts.emplace_back("waveform",
                    Tensor({static_cast<int>(t.waveform.samples.size())}, t.waveform.samples));
    ts.emplace_back("sample_rate", Tensor({1}, {t.waveform.sample_rate_hz}));
    ts.emplace_back("valence", Tensor({1}, {t.valence_score}));
    ts.emplace_back("arousal", Tensor({1}, {t.arousal_score}));
    ts.emplace_back("subject", Tensor({1}, {static_cast<double>(t.subject_id)}));
    ts.emplace_back("trial", Tensor({1}, {static_cast<double>(t.trial_id)}));
    std::ostringstream name;
    name << "trial_s" << t.subject_id << "_t" << t.trial_id << ".tensor";
    write_tensor_file((fs::path(dir) / name.str()).string(), ts);
  }
}

namespace {

Sample trial_from_tensors(const NamedTensors& ts, const std::string& origin) {
  auto need = [&](const char* name) -> const Tensor& {
    const Tensor* t = find_tensor(ts, name);
    if (!t) throw CorruptFile("missing tensor '" + std::string(name) + "' in " + origin);
    return *t;
  };
  Sample s;
  const Tensor& frames = need("frames");
  if (frames.rank() != 4) throw CorruptFile("frames must be FxCxHxW in " + origin);
  const Tensor& wave = need("waveform");
  s.waveform.samples = wave.data;
  s.waveform.sample_rate_hz = need("sample_rate").data.at(0);
  s.valence_score = need("valence").data.at(0);
  s.arousal_score = need("arousal").data.at(0);
  s.subject_id = static_cast<int>(need("subject").data.at(0));
  s.trial_id = static_cast<int>(need("trial").data.at(0));
  const int64_t stride = static_cast<int64_t>(frames.shape[1]) * frames.shape[2] * frames.shape[3];
  for (int f = 0; f < frames.shape[0]; ++f) {
    Tensor img({frames.shape[1], frames.shape[2], frames.shape[3]});
    std::copy(frames.data.begin() + f * stride, frames.data.begin() + (f + 1) * stride,
              img.data.begin());
    s.frames.push_back(std::move(img));
  }
  s.waveform.validate();
  return s;
}

}  // namespace

std::vector<Sample> read_dataset_dir(const std::string& dir) {
  if (!fs::is_directory(dir)) throw IoError("dataset directory not found: " + dir);
  std::vector<std::string> tensor_files;
  std::vector<std::string> trial_dirs;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (e.is_regular_file() && name.rfind("trial_", 0) == 0 && e.path().extension() == ".tensor")
      tensor_files.push_back(e.path().string());
    else if (e.is_directory() && name.rfind("trial_", 0) == 0)
      trial_dirs.push_back(e.path().string());
  }
  std::sort(tensor_files.begin(), tensor_files.end());
  std::sort(trial_dirs.begin(), trial_dirs.end());
  std::vector<Sample> trials;
  for (const std::string& f : tensor_files) trials.push_back(trial_from_tensors(read_tensor_file(f), f));
  for (const std::string& d : trial_dirs) trials.push_back(read_trial_dir(d));
  if (trials.empty()) throw IoError("no trial_* files in dataset directory: " + dir);
  return trials;
}

Sample read_trial_dir(const std::string& dir) {
  Sample s;
  // labels.txt: key=value lines (subject, trial, valence, arousal)
  {
    std::ifstream in(fs::path(dir) / "labels.txt");
    if (!in) throw IoError("missing labels.txt in " + dir);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      size_t eq = line.find('=');
      if (eq == std::string::npos) throw CorruptFile("bad labels.txt line in " + dir + ": " + line);
      std::string key = line.substr(0, eq);
      double value = std::stod(line.substr(eq + 1));
      if (key == "subject")
        s.subject_id = static_cast<int>(value);
      else if (key == "trial")
        s.trial_id = static_cast<int>(value);
      else if (key == "valence")
        s.valence_score = value;
      else if (key == "arousal")
        s.arousal_score = value;
      else
        throw CorruptFile("unknown labels.txt key '" + key + "' in " + dir);
    }
  }
  s.waveform = read_waveform_text((fs::path(dir) / "wave.txt").string());
  const fs::path frames_dir = fs::path(dir) / "frames";
  if (!fs::is_directory(frames_dir)) throw IoError("missing frames/ in " + dir);
  std::vector<std::string> frame_files;
  for (const auto& e : fs::directory_iterator(frames_dir))
    if (e.is_regular_file()) frame_files.push_back(e.path().string());
  std::sort(frame_files.begin(), frame_files.end());
  for (const std::string& f : frame_files) s.frames.push_back(read_ppm(f));
  if (s.frames.empty()) throw EmptyClip("no frames in " + dir);
  return s;
}

void write_ppm(const Tensor& frame_chw, const std::string& path) {
  if (frame_chw.rank() != 3 || frame_chw.shape[0] != 3) throw ShapeMismatch("write_ppm: need 3xHxW");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  const int h = frame_chw.shape[1], w = frame_chw.shape[2];
  out << "P6\n" << w << " " << h << "\n255\n";
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) {
        double v = std::clamp(frame_chw.at3(c, y, x), 0.0, 1.0);
        out.put(static_cast<char>(std::lround(v * 255.0)));
      }
}

Tensor read_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::string magic;
  in >> magic;
  const bool color = magic == "P6";
  if (!color && magic != "P5") throw CorruptFile("expected P5/P6 in " + path);
  int w = 0, h = 0, maxval = 0;
  in >> w >> h >> maxval;
  if (w < 1 || h < 1 || maxval != 255) throw CorruptFile("bad PNM header in " + path);
  in.get();  // single whitespace after header
  const int ch = color ? 3 : 1;
  std::vector<char> raw(static_cast<size_t>(w) * h * ch);
  if (!in.read(raw.data(), static_cast<std::streamsize>(raw.size())))
    throw CorruptFile("truncated image data in " + path);
  Tensor img({3, h, w});
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) {
        const size_t src = (static_cast<size_t>(y) * w + x) * ch + (color ? c : 0);
        img.at3(c, y, x) = static_cast<double>(static_cast<unsigned char>(raw[src])) / 255.0;
      }
  return img;
}

}  // namespace scpt
