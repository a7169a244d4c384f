// -*- mode: c++; coding: utf-8-unix; -*-
//
// End-to-end measurement pipelines (preset -> render -> measure) shared by
// the command-line tool and the acceptance suite.
#ifndef BFO_REPRODUCE_HPP
#define BFO_REPRODUCE_HPP

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "bfo/baselines.hpp"
#include "bfo/engine.hpp"
#include "bfo/metrology.hpp"

namespace bfo::reproduce {

inline constexpr double sample_rate = 96000.0;
inline constexpr double thdn_frequency = 1000.0;
inline constexpr std::size_t thdn_samples = 960000;
inline constexpr double sinad_frequency = 20.0;
inline constexpr std::size_t sinad_samples = 96000;

/// Chip with a single preset oscillator on L0 and everything else silent.
inline engine::ChipState single_oscillator (metrology::Waveform w, double frequency_hz) {
  engine::ChipState chip;
  engine::OscillatorState& osc = chip.oscillator (0, 0);
  osc.partials = metrology::preset (w);
  osc.delta = engine::Turns::from_real (frequency_hz / sample_rate);
  return chip;
}

inline metrology::QualityReport bfo_thdn (std::size_t samples = thdn_samples) {
  engine::ChipState chip = single_oscillator (metrology::Waveform::sine, thdn_frequency);
  std::vector<engine::StereoSample> const out = engine::render (chip, samples);
  return metrology::thdn (metrology::channel (out, false), thdn_frequency, sample_rate);
}

inline metrology::QualityReport iir_thdn (std::size_t samples = thdn_samples) {
  baselines::IirOscConfig cfg;
  cfg.normalized_frequency = thdn_frequency / sample_rate;
  std::vector<double> const x = baselines::iir_generate (cfg, metrology::preset_fundamental, samples).to_real ();
  return metrology::thdn (x, thdn_frequency, sample_rate);
}

/// PDM render of the 1 kHz sine decoded back to 96 kHz; the filter's start-up
/// transient (first `settle` samples) is discarded.
inline metrology::QualityReport pdm_thdn (std::size_t samples = 96000, std::size_t settle = 1000) {
  engine::ChipState chip = single_oscillator (metrology::Waveform::sine, thdn_frequency);
  engine::PdmStreams const s = engine::pdm_stream (chip, samples + settle);
  std::vector<double> const decoded = metrology::pdm_decode (s.left, s.bits);
  std::vector<double> const tail (decoded.begin () + static_cast<std::ptrdiff_t> (settle), decoded.end ());
  return metrology::thdn (tail, thdn_frequency, sample_rate);
}

struct SinadRun {
  metrology::QualityReport report;
  std::vector<engine::StereoSample> frames;
};

/// Engine output (24-bit words read as fractions of full scale) against the
/// double-precision partial sum of the same quantized table.
inline SinadRun sinad (metrology::Waveform w, std::size_t samples = sinad_samples,
                       double frequency_hz = sinad_frequency) {
  engine::ChipState chip = single_oscillator (w, frequency_hz);
  engine::OscillatorState const osc = chip.oscillator (0, 0);
  SinadRun run;
  run.frames = engine::render (chip, samples);
  std::vector<double> const test = metrology::channel (run.frames, false);
  std::vector<double> const ref = baselines::float_reference (osc.partials, osc.delta, osc.band, samples);
  run.report = metrology::sinad_vs_reference (test, ref);
  return run;
}

struct Row {
  std::string label;
  double measured_db = 0.0;
  std::optional<double> published_db;  ///< empty for rows without a published value
  double tolerance_db = 0.0;
  std::string note;

  bool pass () const { return !published_db || std::abs (measured_db - *published_db) <= tolerance_db; }
};

struct PublishedSinad {
  metrology::Waveform waveform;
  double value_db;
};

inline constexpr PublishedSinad published_sinad[] = {{metrology::Waveform::sine, 134.0},
                                             {metrology::Waveform::triangle, 133.3},
                                             {metrology::Waveform::sawtooth, 135.3},
                                             {metrology::Waveform::pulse, 109.4}};
inline constexpr double sinad_tolerance_db = 3.0;

inline constexpr double published_bfo_thdn_db = -137.0;
inline constexpr double bfo_thdn_tolerance_db = 5.0;
inline constexpr double published_iir_thdn_db = -94.27;
inline constexpr double iir_thdn_tolerance_db = 2.0;
inline constexpr double min_bfo_advantage_db = 38.0;

inline std::vector<Row> table1_digital () {
  metrology::QualityReport const bfo = bfo_thdn ();
  metrology::QualityReport const iir = iir_thdn ();
  return {{"BFO output (digital)", bfo.value_db, published_bfo_thdn_db, bfo_thdn_tolerance_db, "THD+N, 1 kHz, -6 dBFS"},
          {"IIR baseline", iir.value_db, published_iir_thdn_db, iir_thdn_tolerance_db, "THD+N, 1 kHz, restart 128"}};
}

inline std::vector<Row> table2 (std::size_t samples = sinad_samples) {
  std::vector<Row> rows;
  for (metrology::Waveform w : metrology::all_waveforms) {
    Row row;
    row.label = std::string{metrology::name (w)};
    row.measured_db = sinad (w, samples).report.value_db;
    row.tolerance_db = sinad_tolerance_db;
    row.note = "SINAD, 20 Hz";
    for (PublishedSinad const& p : published_sinad) {
      if (p.waveform == w) {
        row.published_db = p.value_db;
      }
    }
    if (!row.published_db) {
      row.note += ", no published value";
    }
    rows.push_back (row);
  }
  return rows;
}

} // namespace bfo::reproduce

#endif // BFO_REPRODUCE_HPP
