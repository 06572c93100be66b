#pragma once

#include <string>
#include <vector>

#include "scpt/model.hpp"
#include "scpt/signal_tfr.hpp"
#include "scpt/tensor.hpp"

namespace scpt {

// One trial or clip: frames + pulse waveform + affect scores. Trials come
// out of the generator at full length; segment_trial cuts them into
// non-overlapping clips that inherit every label.
struct Sample {
  int subject_id = 0;
  int trial_id = 0;
  int clip_index = -1;  // -1 for an unsegmented trial
  double valence_score = 5.0;
  double arousal_score = 5.0;
  std::vector<Tensor> frames;  // C x H x W each
  Waveform waveform;
};

struct SynthSpec {
  int num_subjects = 12;
  int trials_per_subject = 20;
  double confound_strength = 0.8;
  uint64_t seed = 7;
  double trial_seconds = 30.0;
  double sample_rate = 128.0;
  int fps = 2;
  int frame_size = 32;
};

// Synthetic trials with controllable subject confounds: the arousal class
// picks the heart-rate band (high 1.3-1.8 Hz, low 0.9-1.2 Hz), quadrant
// motifs encode valence/arousal in the frames, and subjects contribute a
// color tint plus waveform baseline drift and extra noise, all scaled by
// confound_strength. Deterministic in the seed.
std::vector<Sample> synth_dataset(const SynthSpec& spec);

// Non-overlapping clips of clip_seconds; a trailing remainder shorter
// than one clip is dropped.
std::vector<Sample> segment_trial(const Sample& trial, double clip_seconds);

// 1 if score > threshold else 0 (the boundary maps to the low class).
int binarize_label(double score, double threshold = 5.0);

// --- preprocessed form consumed by the trainer ---
struct ClipData {
  Tensor frames;  // F x C x H x W, all frames of the clip
  Tensor tfr;     // normalized tfr_size x tfr_size grid
  int subject_id = 0;
  int trial_id = 0;
  int clip_index = 0;
  int label_valence = 0;
  int label_arousal = 0;
};

struct TfrSettings {
  MorseParams morse;
  double f_lo = 0.05;
  double f_hi = 5.0;
  static TfrSettings from_config(const Config& cfg);
};

// waveform -> CWT -> band crop -> resize -> min-max normalize
Tensor preprocess_tfr(const Waveform& w, const TfrSettings& ts, int out_rows, int out_cols);

std::vector<ClipData> preprocess_clips(const std::vector<Sample>& clips, const ModelConfig& mcfg,
                                       const TfrSettings& ts);

// --- on-disk dataset: dataset.txt + one tensor file per trial ---
void write_dataset_dir(const std::vector<Sample>& trials, const SynthSpec& spec,
                       const std::string& dir);
std::vector<Sample> read_dataset_dir(const std::string& dir);

// Directory-of-images adapter: a trial directory with labels.txt,
// wave.txt and frames/*.ppm (or *.pgm).
Sample read_trial_dir(const std::string& dir);
void write_ppm(const Tensor& frame_chw, const std::string& path);
Tensor read_ppm(const std::string& path);

}  // namespace scpt
