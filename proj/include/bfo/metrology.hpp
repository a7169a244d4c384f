// -*- mode: c++; coding: utf-8-unix; -*-
//
// Measurement toolkit: Welch power spectrum, THD+N, SINAD against a reference,
// PDM decoding and the standard waveform presets.
#ifndef BFO_METROLOGY_HPP
#define BFO_METROLOGY_HPP

#include <fftw3.h>

#include <algorithm>
#include <array>
#include <optional>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <memory>
#include <numbers>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bfo/engine.hpp"
#include "bfo/fxp.hpp"

namespace bfo::metrology {

/// Level reported for bins (or ratios) that are exactly zero.
inline constexpr double floor_db = -400.0;

inline double to_db (double power_ratio) noexcept {
  return power_ratio > 0.0 ? std::max (10.0 * std::log10 (power_ratio), floor_db) : floor_db;
}

enum class Window { hann };

struct WelchConfig {
  Window window = Window::hann;
  std::size_t fft_size = std::size_t{1} << 14;
  double overlap = 0.5;
  bool normalize_peak = true;
};

struct SpectrumEstimate {
  double sample_rate = 0.0;
  double bin_width = 0.0;
  std::size_t segments = 0;
  std::size_t peak_bin = 0;
  std::vector<double> frequency_hz;
  /// One-sided power per bin, not normalized: sums to the mean square of the
  /// windowed segments.
  std::vector<double> power;
  /// 10 log10(power / peak power) when normalize_peak, else 10 log10(power).
  std::vector<double> power_db;
};

namespace detail {

/// Owns an FFTW real-to-complex plan and its buffers.
class RealFft {
public:
  explicit RealFft (std::size_t n) : n_{n} {
    in_ = fftw_alloc_real (n);
    out_ = fftw_alloc_complex (n / 2 + 1);
    plan_ = fftw_plan_dft_r2c_1d (static_cast<int> (n), in_, out_, FFTW_ESTIMATE);
  }
  RealFft (RealFft const&) = delete;
  RealFft& operator= (RealFft const&) = delete;
  ~RealFft () {
    fftw_destroy_plan (plan_);
    fftw_free (in_);
    fftw_free (out_);
  }

  std::span<double> input () noexcept { return {in_, n_}; }
  void execute () noexcept { fftw_execute (plan_); }
  double norm (std::size_t k) const noexcept { return out_[k][0] * out_[k][0] + out_[k][1] * out_[k][1]; }

private:
  std::size_t n_;
  double* in_ = nullptr;
  fftw_complex* out_ = nullptr;
  fftw_plan plan_ = nullptr;
};

inline std::vector<double> window (Window, std::size_t n) {
  // Periodic Hann: exact-bin tones leak only into the two neighbouring bins.
  std::vector<double> w (n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos (2.0 * std::numbers::pi * static_cast<double> (i) / static_cast<double> (n));
  }
  return w;
}

} // namespace detail

inline SpectrumEstimate welch_psd (std::span<double const> buffer, WelchConfig const& cfg, double sample_rate) {
  std::size_t const n = cfg.fft_size;
  if (n < 4 || (n & (n - 1)) != 0) {
    throw usage_error ("welch_psd: fft size must be a power of two >= 4");
  }
  if (!(cfg.overlap >= 0.0 && cfg.overlap < 1.0)) {
    throw usage_error ("welch_psd: overlap must lie in [0, 1)");
  }
  if (buffer.size () < n) {
    throw usage_error ("welch_psd: buffer shorter than fft size (" + std::to_string (buffer.size ()) + " < " +
                       std::to_string (n) + ")");
  }
  std::size_t const hop =
      std::max<std::size_t> (1, static_cast<std::size_t> (std::llround (static_cast<double> (n) * (1.0 - cfg.overlap))));
  std::vector<double> const w = detail::window (cfg.window, n);
  std::size_t const bins = n / 2 + 1;

  SpectrumEstimate est;
  est.sample_rate = sample_rate;
  est.bin_width = sample_rate / static_cast<double> (n);
  est.power.assign (bins, 0.0);

  detail::RealFft fft (n);
  for (std::size_t start = 0; start + n <= buffer.size (); start += hop) {
    auto in = fft.input ();
    for (std::size_t i = 0; i < n; ++i) {
      in[i] = buffer[start + i] * w[i];
    }
    fft.execute ();
    for (std::size_t k = 0; k < bins; ++k) {
      double const scale = (k == 0 || k == n / 2) ? 1.0 : 2.0;
      est.power[k] += scale * fft.norm (k);
    }
    ++est.segments;
  }
  double const denom = static_cast<double> (est.segments) * static_cast<double> (n) * static_cast<double> (n);
  for (double& p : est.power) {
    p /= denom;
  }

  est.frequency_hz.resize (bins);
  for (std::size_t k = 0; k < bins; ++k) {
    est.frequency_hz[k] = static_cast<double> (k) * est.bin_width;
  }
  est.peak_bin = static_cast<std::size_t> (std::max_element (est.power.begin (), est.power.end ()) - est.power.begin ());
  double const ref = cfg.normalize_peak ? est.power[est.peak_bin] : 1.0;
  est.power_db.resize (bins);
  for (std::size_t k = 0; k < bins; ++k) {
    est.power_db[k] = ref > 0.0 ? to_db (est.power[k] / ref) : floor_db;
  }
  return est;
}

/// Two columns, header line, fixed formatting independent of locale.
inline void write_csv (std::ostream& os, SpectrumEstimate const& est) {
  os << "frequency_hz,power_db\n";
  char line[64];
  for (std::size_t k = 0; k < est.power.size (); ++k) {
    std::snprintf (line, sizeof line, "%.6f,%.6f\n", est.frequency_hz[k], est.power_db[k]);
    os << line;
  }
}

enum class MetricKind { thdn, sinad };

struct QualityReport {
  MetricKind kind = MetricKind::thdn;
  double value_db = 0.0;
  bool exact = false;           ///< SINAD only: test and reference identical
  double fundamental_hz = 0.0;  ///< THD+N only
  double bandwidth_hz = 0.0;
  std::size_t sample_count = 0;
  int capture_half_width = 0;   ///< THD+N: bins on each side of the fundamental

  std::string value_text () const {
    if (exact) {
      return "exact";
    }
    char buf[32];
    std::snprintf (buf, sizeof buf, "%.1f dB", value_db);
    return buf;
  }
};

struct ThdnConfig {
  WelchConfig welch{};
  int capture_half_width = 2;
};

struct SineFit {
  long double frequency = 0.0L;  ///< cycles per sample; extended so phase stays exact over long buffers
  double cos_amplitude = 0.0;
  double sin_amplitude = 0.0;
  double offset = 0.0;

  double power () const noexcept { return 0.5 * (cos_amplitude * cos_amplitude + sin_amplitude * sin_amplitude); }
  double at (std::size_t n) const noexcept {
    double const phase = 2.0 * std::numbers::pi * static_cast<double> (std::fmod (frequency * n, 1.0L));
    return cos_amplitude * std::cos (phase) + sin_amplitude * std::sin (phase);
  }
};

namespace detail {

/// Solves the 4x4 system m x = v by Gaussian elimination with partial pivoting.
inline std::array<double, 4> solve4 (std::array<std::array<double, 5>, 4> m) {
  for (std::size_t c = 0; c < 4; ++c) {
    std::size_t pivot = c;
    for (std::size_t r = c + 1; r < 4; ++r) {
      if (std::abs (m[r][c]) > std::abs (m[pivot][c])) {
        pivot = r;
      }
    }
    std::swap (m[c], m[pivot]);
    if (m[c][c] == 0.0) {
      throw usage_error ("sine fit: singular system");
    }
    for (std::size_t r = 0; r < 4; ++r) {
      if (r != c) {
        double const f = m[r][c] / m[c][c];
        for (std::size_t k = c; k < 5; ++k) {
          m[r][k] -= f * m[c][k];
        }
      }
    }
  }
  return {m[0][4] / m[0][0], m[1][4] / m[1][1], m[2][4] / m[2][2], m[3][4] / m[3][3]};
}

/// Gauss-Newton steps on x[n] ~ A cos(w n) + B sin(w n) + C over the first len samples.
inline void refine (std::span<double const> x, std::size_t len, SineFit& fit, int iterations) {
  for (int it = 0; it < iterations; ++it) {
    std::array<std::array<double, 5>, 4> m{};
    for (std::size_t n = 0; n < len; ++n) {
      double const phase = 2.0 * std::numbers::pi * static_cast<double> (std::fmod (fit.frequency * n, 1.0L));
      double const c = std::cos (phase);
      double const s = std::sin (phase);
      double const t = 2.0 * std::numbers::pi * static_cast<double> (n);
      std::array<double, 4> const j{c, s, 1.0, t * (fit.sin_amplitude * c - fit.cos_amplitude * s)};
      double const r = x[n] - (fit.cos_amplitude * c + fit.sin_amplitude * s + fit.offset);
      for (std::size_t a = 0; a < 4; ++a) {
        for (std::size_t b = 0; b < 4; ++b) {
          m[a][b] += j[a] * j[b];
        }
        m[a][4] += j[a] * r;
      }
    }
    if (fit.cos_amplitude == 0.0 && fit.sin_amplitude == 0.0) {
      // No amplitude yet: the frequency column vanishes, so hold it fixed.
      for (std::size_t a = 0; a < 4; ++a) {
        m[a][3] = 0.0;
        m[3][a] = 0.0;
      }
      m[3][3] = 1.0;
      m[3][4] = 0.0;
    }
    auto const d = solve4 (m);
    fit.cos_amplitude += d[0];
    fit.sin_amplitude += d[1];
    fit.offset += d[2];
    fit.frequency += d[3];
  }
}

} // namespace detail

/// Least-squares sinusoid (with offset) near f0, refined over successively
/// longer prefixes of the buffer so the frequency estimate keeps phase lock.
inline SineFit fit_sine (std::span<double const> x, double f0, double sample_rate) {
  SineFit fit;
  fit.frequency = static_cast<long double> (f0) / sample_rate;
  std::size_t len = std::min<std::size_t> (x.size (), 4096);
  detail::refine (x, len, fit, 4);
  while (len < x.size ()) {
    len = std::min (x.size (), len * 8);
    detail::refine (x, len, fit, 3);
  }
  return fit;
}

/// THD+N over the full Nyquist band. The fitted fundamental is removed in the
/// time domain (a notch with no leakage); the residual's Welch spectrum,
/// outside +/- capture_half_width bins of f0 and corrected for the window's
/// power, is the distortion-plus-noise power. DC counts as noise.
inline QualityReport thdn (std::span<double const> buffer, double f0, double sample_rate, ThdnConfig const& cfg = {}) {
  double const bin_width = sample_rate / static_cast<double> (cfg.welch.fft_size);
  auto const last = static_cast<long long> (cfg.welch.fft_size / 2);
  long long const bin = std::llround (f0 / bin_width);
  if (!(f0 > 0.0) || bin < 3 || bin > last - 3) {
    throw usage_error ("thdn: fundamental not resolvable (needs >= 3 bins from DC and Nyquist)");
  }
  if (buffer.size () < cfg.welch.fft_size) {
    throw usage_error ("thdn: buffer shorter than fft size");
  }
  SineFit const fit = fit_sine (buffer, f0, sample_rate);
  std::vector<double> residual (buffer.size ());
  for (std::size_t n = 0; n < buffer.size (); ++n) {
    residual[n] = buffer[n] - fit.at (n);
  }
  WelchConfig wcfg = cfg.welch;
  wcfg.normalize_peak = false;
  SpectrumEstimate const est = welch_psd (residual, wcfg, sample_rate);

  std::vector<double> const w = detail::window (wcfg.window, wcfg.fft_size);
  double window_power = 0.0;
  for (double v : w) {
    window_power += v * v;
  }
  window_power /= static_cast<double> (w.size ());

  long long const fit_bin = std::llround (static_cast<double> (fit.frequency) * sample_rate / bin_width);
  double rest = 0.0;
  for (long long k = 0; k <= last; ++k) {
    if (std::abs (k - fit_bin) > cfg.capture_half_width) {
      rest += est.power[static_cast<std::size_t> (k)];
    }
  }
  rest /= window_power;

  QualityReport r;
  r.kind = MetricKind::thdn;
  r.value_db = fit.power () > 0.0 ? to_db (rest / fit.power ()) : 0.0;
  r.fundamental_hz = static_cast<double> (fit.frequency) * sample_rate;
  r.bandwidth_hz = sample_rate / 2.0;
  r.sample_count = buffer.size ();
  r.capture_half_width = cfg.capture_half_width;
  return r;
}

/// 10 log10(sum ref^2 / sum (test - ref)^2). Both buffers must already share a
/// scale: engine output maps to +/-1 full scale, as does the reference.
inline QualityReport sinad_vs_reference (std::span<double const> test, std::span<double const> reference) {
  if (test.size () != reference.size ()) {
    throw usage_error ("sinad: length mismatch (" + std::to_string (test.size ()) + " vs " +
                       std::to_string (reference.size ()) + ")");
  }
  if (test.empty ()) {
    throw usage_error ("sinad: empty buffers");
  }
  double signal = 0.0;
  double error = 0.0;
  for (std::size_t i = 0; i < test.size (); ++i) {
    double const e = test[i] - reference[i];
    signal += reference[i] * reference[i];
    error += e * e;
  }
  QualityReport r;
  r.kind = MetricKind::sinad;
  r.sample_count = test.size ();
  if (error == 0.0) {
    r.exact = true;
    r.value_db = std::numeric_limits<double>::infinity ();
  } else {
    r.value_db = 10.0 * std::log10 (signal / error);
  }
  return r;
}

/// 24-bit output words as fractions of full scale.
inline std::vector<double> to_real (std::span<std::int32_t const> words) {
  std::vector<double> out;
  out.reserve (words.size ());
  for (std::int32_t w : words) {
    out.push_back (std::ldexp (static_cast<double> (w), 1 - engine::output_bits));
  }
  return out;
}

inline std::vector<double> channel (std::span<engine::StereoSample const> frames, bool right) {
  std::vector<std::int32_t> words;
  words.reserve (frames.size ());
  for (auto const& f : frames) {
    words.push_back (right ? f.right : f.left);
  }
  return to_real (words);
}

// ---------------------------------------------------------------------------
// PDM decoding: the +/-1 bitstream through a second-order Butterworth
// low-pass, then averaged over each 1024-bit frame back to the sample rate.

struct PdmDecodeConfig {
  double bit_rate = 96000.0 * 1024.0;
  double cutoff_hz = 31000.0;
  std::size_t decimation = 1024;
};

inline std::vector<double> pdm_decode (std::span<std::uint8_t const> bits, std::size_t nbits,
                                       PdmDecodeConfig const& cfg = {}) {
  if (nbits > bits.size () * 8 || cfg.decimation == 0) {
    throw usage_error ("pdm_decode: bad stream length");
  }
  // Bilinear transform with prewarping.
  double const k = std::tan (std::numbers::pi * cfg.cutoff_hz / cfg.bit_rate);
  double const q = std::numbers::sqrt2 / 2.0;
  double const norm = 1.0 / (1.0 + k / q + k * k);
  double const b0 = k * k * norm;
  double const b1 = 2.0 * b0;
  double const b2 = b0;
  double const a1 = 2.0 * (k * k - 1.0) * norm;
  double const a2 = (1.0 - k / q + k * k) * norm;

  std::vector<double> out;
  out.reserve (nbits / cfg.decimation);
  double z1 = 0.0;
  double z2 = 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < nbits; ++i) {
    double const x = ((bits[i / 8] >> (7 - i % 8)) & 1U) != 0 ? 1.0 : -1.0;
    double const y = b0 * x + z1;
    z1 = b1 * x - a1 * y + z2;
    z2 = b2 * x - a2 * y;
    acc += y;
    if ((i + 1) % cfg.decimation == 0) {
      out.push_back (acc / static_cast<double> (cfg.decimation));
      acc = 0.0;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Presets.
//
// Coefficients are scaled so the fundamental sits at 0.5 (-6 dBFS), or lower
// when that would push the waveform peak above 1 - 2^-8.

enum class Waveform { sine, triangle, sawtooth, pulse, super_saw, rect_saw };

inline constexpr std::array<Waveform, 6> all_waveforms{Waveform::sine,  Waveform::triangle,  Waveform::sawtooth,
                                                       Waveform::pulse, Waveform::super_saw, Waveform::rect_saw};

inline std::string_view name (Waveform w) {
  switch (w) {
  case Waveform::sine: return "sine";
  case Waveform::triangle: return "triangle";
  case Waveform::sawtooth: return "sawtooth";
  case Waveform::pulse: return "pulse";
  case Waveform::super_saw: return "super-saw";
  case Waveform::rect_saw: return "rect-saw";
  }
  return "?";
}

inline std::optional<Waveform> parse_waveform (std::string_view s) {
  for (Waveform w : all_waveforms) {
    if (name (w) == s) {
      return w;
    }
  }
  return std::nullopt;
}

inline constexpr double preset_fundamental = 0.5;
inline constexpr double preset_peak_limit = 1.0 - 1.0 / 256.0;

// Super-saw: seven sawtooth stacks detuned by these factors, 146 harmonics each.
inline constexpr std::array<double, 7> super_saw_detune{-0.03, -0.02, -0.01, 0.0, 0.01, 0.02, 0.03};

struct RealPartial {
  double a = 0.0;
  double b = 0.0;
  double n = 0.0;
};

/// Peak magnitude of sum_k a_k cos(2 pi k t) + b_k sin(2 pi k t) for integer
/// multipliers, sampled on a 2^20-point grid of one period.
inline double harmonic_peak (std::span<RealPartial const> partials) {
  constexpr std::size_t grid = std::size_t{1} << 20;
  double* time = fftw_alloc_real (grid);
  fftw_complex* freq = fftw_alloc_complex (grid / 2 + 1);
  std::fill (freq[0], freq[0] + 2 * (grid / 2 + 1), 0.0);
  for (RealPartial const& p : partials) {
    auto const k = static_cast<std::size_t> (std::llround (p.n));
    if (k >= grid / 2 || std::abs (p.n - static_cast<double> (k)) > 0.0) {
      fftw_free (time);
      fftw_free (freq);
      throw usage_error ("harmonic_peak: multipliers must be small integers");
    }
    // Re((a - i b) e^{i phi}) = a cos(phi) + b sin(phi); c2r doubles bins 1..N/2-1.
    double const scale = k == 0 ? 1.0 : 0.5;
    freq[k][0] += scale * p.a;
    freq[k][1] -= scale * p.b;
  }
  fftw_plan plan = fftw_plan_dft_c2r_1d (static_cast<int> (grid), freq, time, FFTW_ESTIMATE);
  fftw_execute (plan);
  double peak = 0.0;
  for (std::size_t i = 0; i < grid; ++i) {
    peak = std::max (peak, std::abs (time[i]));
  }
  fftw_destroy_plan (plan);
  fftw_free (time);
  fftw_free (freq);
  return peak;
}

namespace detail {

inline std::vector<RealPartial> sawtooth_stack (std::size_t harmonics, double stretch) {
  std::vector<RealPartial> out;
  for (std::size_t h = 1; h <= harmonics; ++h) {
    auto const k = static_cast<double> (h);
    out.push_back ({0.0, 1.0 / k, k * stretch});
  }
  return out;
}

} // namespace detail

/// Unscaled recipe for a waveform plus an upper bound on its peak.
struct Recipe {
  std::vector<RealPartial> partials;
  double fundamental = 0.0;  ///< amplitude of the n = 1 partial
  double peak = 0.0;
};

inline Recipe recipe (Waveform w, std::size_t max_partials) {
  Recipe r;
  std::size_t const count = std::min (max_partials, engine::partials_per_oscillator);
  switch (w) {
  case Waveform::sine: r.partials.push_back ({1.0, 0.0, 1.0}); break;
  case Waveform::sawtooth: r.partials = detail::sawtooth_stack (count, 1.0); break;
  case Waveform::triangle:
    for (std::size_t k = 1; k <= count; k += 2) {
      double const sign = ((k - 1) / 2) % 2 == 0 ? 1.0 : -1.0;
      auto const kk = static_cast<double> (k);
      r.partials.push_back ({0.0, sign / (kk * kk), kk});
    }
    break;
  case Waveform::pulse:
    for (std::size_t k = 1; k <= count; ++k) {
      r.partials.push_back ({1.0, 0.0, static_cast<double> (k)});
    }
    break;
  case Waveform::rect_saw:
    // Equal mix of a 50% rectangle (odd harmonics, 4/(pi k)) and a sawtooth (2/(pi k)).
    for (std::size_t k = 1; k <= count; ++k) {
      auto const kk = static_cast<double> (k);
      double const rect = k % 2 == 1 ? 4.0 / (std::numbers::pi * kk) : 0.0;
      double const saw = 2.0 / (std::numbers::pi * kk);
      r.partials.push_back ({0.0, 0.5 * (rect + saw), kk});
    }
    break;
  case Waveform::super_saw: {
    std::size_t const per_stack = count / super_saw_detune.size ();
    for (double d : super_saw_detune) {
      auto stack = detail::sawtooth_stack (per_stack, 1.0 + d);
      r.partials.insert (r.partials.end (), stack.begin (), stack.end ());
    }
    // Each detuned stack is a time-scaled sawtooth, so its peak equals the
    // harmonic one; the sum is bounded by the triangle inequality.
    auto const single = detail::sawtooth_stack (per_stack, 1.0);
    r.peak = static_cast<double> (super_saw_detune.size ()) * harmonic_peak (single);
    r.fundamental = 1.0;
    return r;
  }
  }
  r.fundamental = std::hypot (r.partials.front ().a, r.partials.front ().b);
  r.peak = harmonic_peak (r.partials);
  return r;
}

inline double preset_scale (Recipe const& r) {
  return std::min (preset_fundamental / r.fundamental, preset_peak_limit / r.peak);
}

/// Quantized table; unused entries are silent with harmonic multipliers.
inline engine::PartialTable preset (Waveform w, std::size_t max_partials = engine::partials_per_oscillator) {
  Recipe const r = recipe (w, max_partials);
  double const scale = preset_scale (r);
  engine::PartialTable table;
  for (std::size_t k = 0; k < table.size (); ++k) {
    table.set (k, {{}, {}, engine::Multiplier::from_real (static_cast<double> (k + 1))});
  }
  for (std::size_t i = 0; i < r.partials.size (); ++i) {
    RealPartial const& p = r.partials[i];
    table.set (i, {engine::Coefficient::from_real (scale * p.a), engine::Coefficient::from_real (scale * p.b),
                   engine::Multiplier::from_real (p.n)});
  }
  return table;
}

} // namespace bfo::metrology

#endif // BFO_METROLOGY_HPP
