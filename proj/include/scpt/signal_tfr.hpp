#pragma once

#include <string>
#include <vector>

#include "scpt/tensor.hpp"

namespace scpt {

// Uniformly sampled 1-D pulse signal.
struct Waveform {
  std::vector<double> samples;
  double sample_rate_hz = 0.0;

  void validate() const;  // throws TooShort / NonFiniteInput
};

// 2-D magnitude scalogram. Row i corresponds to freq_axis_hz[i] (strictly
// ascending), column j to time_axis_s[j]. All values finite and >= 0.
struct TFRImage {
  Tensor values;                    // rows x cols
  std::vector<double> freq_axis_hz; // per-row center frequency
  std::vector<double> time_axis_s;  // per-column timestamp

  int rows() const { return values.rows(); }
  int cols() const { return values.cols(); }
  void validate() const;
};

struct MorseParams {
  double gamma = 3.0;   // symmetric Morse default
  double beta = 20.0;   // time-bandwidth P^2 = gamma*beta = 60
  int voices_per_octave = 16;
  double f_min_hz = 0.05;  // lowest center frequency on the log grid
};

// Magnitude scalogram via frequency-domain multiplication with the
// analytic Morse window a*w^beta*exp(-w^gamma) (zero for w <= 0, peak 1).
// The signal is zero-padded to the next power of two; the log frequency
// grid runs from f_min up to (exclusive) Nyquist.
TFRImage morse_cwt(const Waveform& w, const MorseParams& p);
TFRImage morse_cwt(const Waveform& w, double gamma, double beta, int voices_per_octave);

// Keep rows with f_lo <= center frequency <= f_hi (order preserved).
TFRImage band_crop(const TFRImage& t, double f_lo_hz, double f_hi_hz);

// Bilinear resize, align-corners-false convention; axes are resampled
// with the same mapping.
TFRImage resize_bilinear(const TFRImage& t, int out_rows, int out_cols);

// Per-image min-max scaling to [0,1]; a constant grid maps to all zeros.
TFRImage normalize_tfr(const TFRImage& t);

// One voice step on the log grid, as a frequency ratio (2^(1/voices)).
double voice_step_ratio(int voices_per_octave);

// --- plain-text waveform format: header "sample_rate_hz=<float>", then
// one sample per line. ---
Waveform read_waveform_text(const std::string& path);
void write_waveform_text(const Waveform& w, const std::string& path);

// 8-bit binary PGM dump of a (typically normalized) TFR, low frequencies
// at the bottom row.
void write_tfr_pgm(const TFRImage& t, const std::string& path);

}  // namespace scpt
