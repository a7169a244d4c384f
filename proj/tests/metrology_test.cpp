#include <gtest/gtest.h>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "bfo/baselines.hpp"
#include "bfo/engine.hpp"
#include "bfo/metrology.hpp"
#include "bfo/reproduce.hpp"
#include "goldens.hpp"

using namespace bfo;
using namespace bfo::metrology;

namespace {

constexpr double fs = 96000.0;

/// amplitude * cos(2 pi k n / m) with the argument reduced exactly.
std::vector<double> exact_tone (std::size_t count, std::uint64_t k, std::uint64_t m, double amplitude) {
  std::vector<double> x (count);
  for (std::size_t n = 0; n < count; ++n) {
    x[n] = amplitude * std::cos (2.0 * std::numbers::pi * static_cast<double> ((n * k) % m) / static_cast<double> (m));
  }
  return x;
}

} // namespace

TEST (Welch, DefaultsAndShape) {
  WelchConfig const cfg;
  EXPECT_EQ (cfg.fft_size, 16384U);
  EXPECT_DOUBLE_EQ (cfg.overlap, 0.5);
  EXPECT_TRUE (cfg.normalize_peak);
  SpectrumEstimate const est = welch_psd (exact_tone (960000, 1, 96, 0.5), cfg, fs);
  EXPECT_EQ (est.power.size (), 8193U);
  EXPECT_EQ (est.power_db.size (), 8193U);
  EXPECT_EQ (est.segments, 116U);
  EXPECT_DOUBLE_EQ (est.power_db[est.peak_bin], 0.0);
  EXPECT_DOUBLE_EQ (est.frequency_hz[8192], 48000.0);
}

TEST (Welch, PeakAtOneKilohertz) {
  SpectrumEstimate const est = welch_psd (exact_tone (960000, 1, 96, 0.5), {}, fs);
  EXPECT_LE (std::abs (est.frequency_hz[est.peak_bin] - 1000.0), est.bin_width);
}

TEST (Welch, DcStaysInFirstBins) {
  std::vector<double> const dc (40000, 0.3);
  SpectrumEstimate const est = welch_psd (dc, {}, fs);
  EXPECT_EQ (est.peak_bin, 0U);
  EXPECT_NEAR (est.power_db[1], -10.0 * std::log10 (2.0), 1e-9);  // Hann main lobe
  for (std::size_t k = 2; k < est.power.size (); ++k) {
    ASSERT_LT (est.power_db[k], -250.0) << k;
  }
}

TEST (Welch, WhiteNoiseIsFlat) {
  std::mt19937_64 rng{31};
  std::normal_distribution<double> g;
  std::vector<double> x (960000);
  for (double& v : x) {
    v = g (rng);
  }
  WelchConfig cfg;
  cfg.normalize_peak = false;
  SpectrumEstimate const est = welch_psd (x, cfg, fs);
  double mean = 0.0;
  for (std::size_t k = 10; k <= 8000; ++k) {
    mean += est.power[k];
  }
  mean /= 7991.0;
  for (std::size_t k = 10; k <= 8000; ++k) {
    ASSERT_LE (std::abs (10.0 * std::log10 (est.power[k] / mean)), 3.0) << k;
  }
}

TEST (Welch, TooShortIsUsageError) {
  std::vector<double> const x (16383, 1.0);
  EXPECT_THROW (welch_psd (x, {}, fs), usage_error);
  WelchConfig bad;
  bad.fft_size = 1000;
  EXPECT_THROW (welch_psd (std::vector<double> (5000), bad, fs), usage_error);
}

TEST (Welch, ScaleCovariance) {
  std::mt19937_64 rng{32};
  std::uniform_real_distribution<double> u (-1.0, 1.0);
  std::vector<double> x (50000);
  for (double& v : x) {
    v = u (rng);
  }
  WelchConfig raw;
  raw.normalize_peak = false;
  SpectrumEstimate const a = welch_psd (x, raw, fs);
  SpectrumEstimate const an = welch_psd (x, {}, fs);
  for (double c : {0.001, 0.37, 8.0}) {
    std::vector<double> y (x);
    for (double& v : y) {
      v *= c;
    }
    SpectrumEstimate const b = welch_psd (y, raw, fs);
    SpectrumEstimate const bn = welch_psd (y, {}, fs);
    for (std::size_t k = 0; k < a.power.size (); ++k) {
      ASSERT_NEAR (b.power_db[k] - a.power_db[k], 20.0 * std::log10 (c), 1e-9);
      ASSERT_NEAR (bn.power_db[k], an.power_db[k], 1e-9);
    }
  }
}

TEST (Welch, Parseval) {
  std::mt19937_64 rng{33};
  std::uniform_real_distribution<double> u (-1.0, 1.0);
  std::vector<double> x (70000);
  for (double& v : x) {
    v = u (rng) + 0.2;
  }
  WelchConfig cfg;
  cfg.normalize_peak = false;
  SpectrumEstimate const est = welch_psd (x, cfg, fs);
  std::vector<double> const w = detail::window (cfg.window, cfg.fft_size);
  double mean_square = 0.0;
  std::size_t segments = 0;
  for (std::size_t start = 0; start + cfg.fft_size <= x.size (); start += cfg.fft_size / 2, ++segments) {
    for (std::size_t i = 0; i < cfg.fft_size; ++i) {
      double const v = x[start + i] * w[i];
      mean_square += v * v;
    }
  }
  mean_square /= static_cast<double> (segments * cfg.fft_size);
  double total = 0.0;
  for (double p : est.power) {
    total += p;
  }
  EXPECT_EQ (segments, est.segments);
  EXPECT_NEAR (total / mean_square, 1.0, 1e-9);
}

TEST (Welch, CsvFormat) {
  SpectrumEstimate const est = welch_psd (exact_tone (20000, 1, 96, 0.5), {}, fs);
  std::ostringstream os;
  write_csv (os, est);
  std::istringstream in (os.str ());
  std::string line;
  std::getline (in, line);
  EXPECT_EQ (line, "frequency_hz,power_db");
  std::getline (in, line);
  EXPECT_EQ (line.substr (0, 9), "0.000000,");
  std::getline (in, line);
  EXPECT_EQ (line.substr (0, 9), "5.859375,");
  std::size_t rows = 2;
  while (std::getline (in, line)) {
    ++rows;
  }
  EXPECT_EQ (rows, 8193U);
}

TEST (Thdn, ExactSineHitsNumericalFloor) {
  QualityReport const r = thdn (exact_tone (960000, 1, 96, 0.5), 1000.0, fs);
  EXPECT_LE (r.value_db, -250.0);
  EXPECT_EQ (r.kind, MetricKind::thdn);
  EXPECT_NEAR (r.fundamental_hz, 1000.0, 1e-9);
  EXPECT_DOUBLE_EQ (r.bandwidth_hz, 48000.0);
  EXPECT_EQ (r.sample_count, 960000U);
  EXPECT_EQ (r.capture_half_width, 2);
}

TEST (Thdn, SecondHarmonicAtMinus40) {
  std::vector<double> x = exact_tone (960000, 1, 96, 0.5);
  std::vector<double> const h = exact_tone (960000, 2, 96, 0.005);
  for (std::size_t i = 0; i < x.size (); ++i) {
    x[i] += h[i];
  }
  EXPECT_NEAR (thdn (x, 1000.0, fs).value_db, -40.0, 0.1);
}

TEST (Thdn, OffBinToneAndInitialGuess) {
  // 1000.37 Hz is far from a bin centre; the analyzer is told 1000 Hz.
  std::vector<double> x (480000);
  std::vector<double> const h = exact_tone (480000, 3, 96, 0.0005);
  for (std::size_t n = 0; n < x.size (); ++n) {
    long double const cycles = std::fmod (1000.37L / 96000.0L * n, 1.0L);
    x[n] = 0.5 * std::cos (2.0 * std::numbers::pi * static_cast<double> (cycles) + 0.4) + h[n];
  }
  QualityReport const r = thdn (x, 1000.0, fs);
  EXPECT_NEAR (r.value_db, -60.0, 0.1);
  EXPECT_NEAR (r.fundamental_hz, 1000.37, 1e-6);
}

TEST (Thdn, ScaleInvariant) {
  engine::ChipState chip = reproduce::single_oscillator (Waveform::sine, 1000.0);
  std::vector<double> const x = channel (engine::render (chip, 100000), false);
  double const base = thdn (x, 1000.0, fs).value_db;
  std::mt19937_64 rng{34};
  std::uniform_real_distribution<double> expo (-6.0, 6.0);
  for (int i = 0; i < 5; ++i) {
    double const c = std::pow (10.0, expo (rng));
    std::vector<double> y (x);
    for (double& v : y) {
      v *= c;
    }
    EXPECT_NEAR (thdn (y, 1000.0, fs).value_db, base, 1e-6) << c;
  }
}

TEST (Thdn, UnresolvableFundamental) {
  std::vector<double> const x = exact_tone (40000, 1, 96, 0.5);
  EXPECT_THROW (thdn (x, 10.0, fs), usage_error);     // under 3 bins from DC
  EXPECT_THROW (thdn (x, 47990.0, fs), usage_error);  // under 3 bins from Nyquist
  EXPECT_THROW (thdn (x, -5.0, fs), usage_error);
  EXPECT_THROW (thdn (std::vector<double> (1000), 1000.0, fs), usage_error);
}

TEST (Thdn, EngineSineDigitalOutput) {
  QualityReport const r = reproduce::bfo_thdn ();
  std::printf ("engine 1 kHz sine: THD+N %.2f dB\n", r.value_db);
  EXPECT_NEAR (r.value_db, -137.0, 5.0);
}

TEST (Sinad, IdenticalIsExact) {
  std::vector<double> const x = exact_tone (1000, 1, 7, 0.5);
  QualityReport const r = sinad_vs_reference (x, x);
  EXPECT_TRUE (r.exact);
  EXPECT_EQ (r.value_text (), "exact");
  EXPECT_TRUE (std::isinf (r.value_db));
}

TEST (Sinad, TwentyFourBitQuantization) {
  std::vector<double> ref (96000);
  std::vector<double> test (ref.size ());
  for (std::size_t n = 0; n < ref.size (); ++n) {
    long double const cycles = std::fmod (997.0L / 96000.0L * n, 1.0L);
    ref[n] = (1.0 - 0x1p-23) * std::sin (2.0 * std::numbers::pi * static_cast<double> (cycles));
    test[n] = std::nearbyint (ref[n] * 0x1p23) * 0x1p-23;
  }
  double const v = sinad_vs_reference (test, ref).value_db;
  EXPECT_NEAR (v, 6.02 * 24 + 1.76, 2.0);
  char text[32];
  std::snprintf (text, sizeof text, "%.1f dB", v);
  EXPECT_EQ (sinad_vs_reference (test, ref).value_text (), text);
}

TEST (Sinad, LengthMismatch) {
  EXPECT_THROW (sinad_vs_reference (std::vector<double> (10), std::vector<double> (11)), usage_error);
  EXPECT_THROW (sinad_vs_reference (std::vector<double> (), std::vector<double> ()), usage_error);
}

TEST (Sinad, EngineSineAtTwentyHertz) {
  double const v = reproduce::sinad (Waveform::sine, 96000).report.value_db;
  std::printf ("engine sine 20 Hz: SINAD %.2f dB\n", v);
  EXPECT_NEAR (v, 134.0, 3.0);
}

TEST (Presets, SineHasOnePair) {
  engine::PartialTable const t = preset (Waveform::sine);
  ASSERT_EQ (t.active ().size (), 1U);
  EXPECT_EQ (t.active ()[0], 0U);
  EXPECT_DOUBLE_EQ (t[0].a.to_real (), 0.5);
  EXPECT_EQ (t[0].b.raw (), 0);
}

TEST (Presets, SawtoothHighestGatedHarmonic) {
  engine::PartialTable const t = preset (Waveform::sawtooth);
  engine::Turns const delta = engine::Turns::from_real (20.0 / fs);
  double highest = 0.0;
  for (std::uint16_t k : t.active ()) {
    if (engine::partial_gate (delta, t[k].n, {})) {
      highest = std::max (highest, t[k].n.to_real ());
    }
  }
  EXPECT_EQ (highest, 1024.0);
  EXPECT_DOUBLE_EQ (highest * 20.0, 20480.0);
}

TEST (Presets, Shapes) {
  engine::PartialTable const tri = preset (Waveform::triangle);
  EXPECT_EQ (tri.active ().size (), 512U);
  EXPECT_GT (tri[0].b.raw (), 0);
  EXPECT_LT (tri[1].b.raw (), 0);
  EXPECT_GT (tri[2].b.raw (), 0);
  EXPECT_NEAR (tri[1].b.to_real (), -tri[0].b.to_real () / 9.0, 0x1p-31);
  EXPECT_DOUBLE_EQ (tri[1].n.to_real (), 3.0);
  engine::PartialTable const pulse = preset (Waveform::pulse);
  EXPECT_EQ (pulse.active ().size (), 1024U);
  for (std::uint16_t k : pulse.active ()) {
    ASSERT_EQ (pulse[k].a, pulse[0].a);
  }
  engine::PartialTable const saw = preset (Waveform::sawtooth, 10);
  EXPECT_EQ (saw.active ().size (), 10U);
  EXPECT_NEAR (saw[3].b.to_real (), saw[0].b.to_real () / 4.0, 0x1p-31);
  engine::PartialTable const super = preset (Waveform::super_saw);
  EXPECT_EQ (super.active ().size (), 7U * 146U);
  EXPECT_DOUBLE_EQ (super[0].n.to_real (), engine::Multiplier::from_real (0.97).to_real ());
  EXPECT_EQ (name (Waveform::rect_saw), "rect-saw");
  EXPECT_EQ (parse_waveform ("super-saw"), Waveform::super_saw);
  EXPECT_FALSE (parse_waveform ("square"));
}

TEST (Presets, NoClippingOverOnePeriod) {
  for (Waveform w : all_waveforms) {
    engine::ChipState chip = reproduce::single_oscillator (w, 20.0);
    auto const frames = engine::render (chip, 4800);
    EXPECT_EQ (chip.clip_flags, 0U) << name (w);
    std::int32_t peak = 0;
    for (auto const& f : frames) {
      peak = std::max (peak, std::abs (f.left));
    }
    EXPECT_LE (peak, static_cast<std::int32_t> ((1.0 - 1.0 / 256.0) * 0x1p23) + 1) << name (w);
  }
}

TEST (Presets, PulseSinad) {
  double const v = reproduce::sinad (Waveform::pulse, 9600).report.value_db;
  std::printf ("pulse 20 Hz: SINAD %.2f dB\n", v);
  EXPECT_NEAR (v, 109.4, 3.0);
}

TEST (Presets, InventedRecipesGolden) {
  for (goldens::Golden const& g : goldens::short_runs) {
    reproduce::SinadRun const run = reproduce::sinad (g.waveform, g.samples);
    std::uint64_t const hash = goldens::fnv1a (run.frames);
    std::printf ("%s: hash 0x%016llx, SINAD %.4f dB\n", std::string{name (g.waveform)}.c_str (),
                 static_cast<unsigned long long> (hash), run.report.value_db);
    EXPECT_EQ (hash, g.hash) << name (g.waveform);
    EXPECT_NEAR (run.report.value_db, g.sinad_db, 1e-3) << name (g.waveform);
  }
}

TEST (Pdm, DecodedSineThdn) {
  QualityReport const r = reproduce::pdm_thdn (48000);
  std::printf ("pdm decoded 1 kHz: THD+N %.2f dB\n", r.value_db);
  EXPECT_LE (r.value_db, -70.0);
}
