#include "scpt/signal_tfr.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>

#include "scpt/fft.hpp"

namespace scpt {

void Waveform::validate() const {
  if (samples.size() < 2) throw TooShort("waveform needs at least 2 samples");
  if (!(sample_rate_hz > 0.0)) throw NonFiniteInput("sample_rate_hz must be positive");
  for (double v : samples)
    if (!std::isfinite(v)) throw NonFiniteInput("waveform contains NaN/Inf");
}

void TFRImage::validate() const {
  if (values.rank() != 2) throw ShapeMismatch("TFR values must be 2-D");
  if (static_cast<int>(freq_axis_hz.size()) != values.rows())
    throw ShapeMismatch("TFR freq axis length != rows");
  if (static_cast<int>(time_axis_s.size()) != values.cols())
    throw ShapeMismatch("TFR time axis length != cols");
  for (size_t i = 1; i < freq_axis_hz.size(); ++i)
    if (!(freq_axis_hz[i] > freq_axis_hz[i - 1]))
      throw ShapeMismatch("TFR freq axis must be strictly ascending");
  for (double v : values.data)
    if (!std::isfinite(v) || v < 0.0) throw NonFiniteInput("TFR values must be finite and >= 0");
}

double voice_step_ratio(int voices_per_octave) {
  return std::pow(2.0, 1.0 / static_cast<double>(voices_per_octave));
}

TFRImage morse_cwt(const Waveform& w, const MorseParams& p) {
  if (!(p.gamma > 0.0) || !(p.beta > 0.0)) throw Error("morse_cwt: gamma and beta must be positive");
  if (p.voices_per_octave < 1) throw Error("morse_cwt: voices_per_octave must be >= 1");
  w.validate();

  const size_t n = w.samples.size();
  const double sr = w.sample_rate_hz;
  const double nyquist = sr / 2.0;

  // log frequency grid: f_min * 2^(j/v), ascending, strictly below Nyquist
  std::vector<double> freqs;
  const double step = voice_step_ratio(p.voices_per_octave);
  for (double f = p.f_min_hz; f < nyquist; f *= step) freqs.push_back(f);
  if (freqs.empty()) throw Error("morse_cwt: empty frequency grid (sample rate too low)");

  std::vector<cplx> spectrum = fft_real_padded(w.samples);
  const size_t np = spectrum.size();

  // Morse window evaluated in log space; peak frequency w_p = (beta/gamma)^(1/gamma).
  const double wp = std::pow(p.beta / p.gamma, 1.0 / p.gamma);
  const double log_peak = p.beta * std::log(wp) - std::pow(wp, p.gamma);
  auto morse = [&](double omega) -> double {
    if (omega <= 0.0) return 0.0;
    return std::exp(p.beta * std::log(omega) - std::pow(omega, p.gamma) - log_peak);
  };

  TFRImage out;
  out.freq_axis_hz = freqs;
  out.time_axis_s.resize(n);
  for (size_t i = 0; i < n; ++i) out.time_axis_s[i] = static_cast<double>(i) / sr;
  out.values = Tensor({static_cast<int>(freqs.size()), static_cast<int>(n)});

  std::vector<cplx> row(np);
  for (size_t r = 0; r < freqs.size(); ++r) {
    const double fc = freqs[r];
    // analytic filter: positive-frequency bins only (k = 1 .. np/2)
    row.assign(np, cplx(0.0, 0.0));
    for (size_t k = 1; k <= np / 2; ++k) {
      const double fk = static_cast<double>(k) * sr / static_cast<double>(np);
      const double g = morse(wp * fk / fc);
      if (g > 0.0) row[k] = spectrum[k] * g;
    }
    fft_radix2(row, true);
    for (size_t i = 0; i < n; ++i) out.values.at(static_cast<int>(r), static_cast<int>(i)) = std::abs(row[i]);
  }
  return out;
}

TFRImage morse_cwt(const Waveform& w, double gamma, double beta, int voices_per_octave) {
  MorseParams p;
  p.gamma = gamma;
  p.beta = beta;
  p.voices_per_octave = voices_per_octave;
  return morse_cwt(w, p);
}

TFRImage band_crop(const TFRImage& t, double f_lo_hz, double f_hi_hz) {
  if (!(f_lo_hz < f_hi_hz)) throw Error("band_crop: f_lo must be < f_hi");
  std::vector<int> keep;
  for (int r = 0; r < t.rows(); ++r)
    if (t.freq_axis_hz[r] >= f_lo_hz && t.freq_axis_hz[r] <= f_hi_hz) keep.push_back(r);
  if (keep.empty()) throw EmptyBand("band_crop: no rows in [" + std::to_string(f_lo_hz) + ", " +
                                    std::to_string(f_hi_hz) + "] Hz");

  TFRImage out;
  out.time_axis_s = t.time_axis_s;
  out.freq_axis_hz.reserve(keep.size());
  out.values = Tensor({static_cast<int>(keep.size()), t.cols()});
  for (size_t i = 0; i < keep.size(); ++i) {
    out.freq_axis_hz.push_back(t.freq_axis_hz[keep[i]]);
    for (int c = 0; c < t.cols(); ++c) out.values.at(static_cast<int>(i), c) = t.values.at(keep[i], c);
  }
  return out;
}

namespace {

// align-corners-false source coordinate, clamped to the valid range
inline double src_coord(int dst, int dst_size, int src_size) {
  double s = (static_cast<double>(dst) + 0.5) * static_cast<double>(src_size) /
                 static_cast<double>(dst_size) -
             0.5;
  if (s < 0.0) s = 0.0;
  double max_s = static_cast<double>(src_size - 1);
  if (s > max_s) s = max_s;
  return s;
}

inline double lerp_axis(const std::vector<double>& axis, double s) {
  int i0 = static_cast<int>(std::floor(s));
  int i1 = std::min(i0 + 1, static_cast<int>(axis.size()) - 1);
  double f = s - i0;
  return axis[i0] * (1.0 - f) + axis[i1] * f;
}

}  // namespace

TFRImage resize_bilinear(const TFRImage& t, int out_rows, int out_cols) {
  if (out_rows < 1 || out_cols < 1) throw Error("resize_bilinear: output size must be >= 1");
  if (out_rows == t.rows() && out_cols == t.cols()) return t;

  TFRImage out;
  out.values = Tensor({out_rows, out_cols});
  out.freq_axis_hz.resize(out_rows);
  out.time_axis_s.resize(out_cols);
  for (int r = 0; r < out_rows; ++r) out.freq_axis_hz[r] = lerp_axis(t.freq_axis_hz, src_coord(r, out_rows, t.rows()));
  for (int c = 0; c < out_cols; ++c) out.time_axis_s[c] = lerp_axis(t.time_axis_s, src_coord(c, out_cols, t.cols()));

  for (int r = 0; r < out_rows; ++r) {
    const double sy = src_coord(r, out_rows, t.rows());
    const int y0 = static_cast<int>(std::floor(sy));
    const int y1 = std::min(y0 + 1, t.rows() - 1);
    const double fy = sy - y0;
    for (int c = 0; c < out_cols; ++c) {
      const double sx = src_coord(c, out_cols, t.cols());
      const int x0 = static_cast<int>(std::floor(sx));
      const int x1 = std::min(x0 + 1, t.cols() - 1);
      const double fx = sx - x0;
      const double v = t.values.at(y0, x0) * (1.0 - fy) * (1.0 - fx) +
                       t.values.at(y0, x1) * (1.0 - fy) * fx +
                       t.values.at(y1, x0) * fy * (1.0 - fx) +
                       t.values.at(y1, x1) * fy * fx;
      out.values.at(r, c) = v;
    }
  }
  return out;
}

TFRImage normalize_tfr(const TFRImage& t) {
  if (!t.values.all_finite()) throw NonFiniteInput("normalize_tfr: non-finite values");
  TFRImage out = t;
  double lo = t.values.data.empty() ? 0.0 : t.values.data[0];
  double hi = lo;
  for (double v : t.values.data) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (hi == lo) {
    std::fill(out.values.data.begin(), out.values.data.end(), 0.0);
    return out;
  }
  const double inv = 1.0 / (hi - lo);
  for (double& v : out.values.data) v = (v - lo) * inv;
  return out;
}

Waveform read_waveform_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open waveform file: " + path);
  std::string line;
  Waveform w;
  bool have_rate = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!have_rate) {
      const std::string key = "sample_rate_hz=";
      if (line.rfind(key, 0) != 0)
        throw CorruptFile("waveform file must start with 'sample_rate_hz=<float>': " + path);
      w.sample_rate_hz = std::stod(line.substr(key.size()));
      have_rate = true;
      continue;
    }
    try {
      w.samples.push_back(std::stod(line));
    } catch (const std::exception&) {
      throw CorruptFile("bad sample line in " + path + ": '" + line + "'");
    }
  }
  if (!have_rate) throw CorruptFile("missing sample_rate_hz header in " + path);
  w.validate();
  return w;
}

void write_waveform_text(const Waveform& w, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write waveform file: " + path);
  out << "sample_rate_hz=" << w.sample_rate_hz << "\n";
  out.precision(17);
  for (double v : w.samples) out << v << "\n";
}

void write_tfr_pgm(const TFRImage& t, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write PGM file: " + path);
  double lo = t.values.data.empty() ? 0.0 : t.values.data[0];
  double hi = lo;
  for (double v : t.values.data) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double scale = (hi > lo) ? 255.0 / (hi - lo) : 0.0;
  out << "P5\n" << t.cols() << " " << t.rows() << "\n255\n";
  // flip vertically: low frequencies on the bottom row of the image
  for (int r = t.rows() - 1; r >= 0; --r)
    for (int c = 0; c < t.cols(); ++c) {
      const auto byte =
          static_cast<uint8_t>(std::lround((t.values.at(r, c) - lo) * scale));
      out.put(static_cast<char>(byte));
    }
}

}  // namespace scpt
