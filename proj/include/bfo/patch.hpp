// -*- mode: c++; coding: utf-8-unix; -*-
//
// Patch files: line-oriented "key value..." text with explicit units.
//
//   # comment
//   sample_rate 96000 Hz
//   mix 1 0 0 1                  # mix[L][L] mix[L][R] mix[R][L] mix[R][R]
//
//   [L0]                         # oscillators L0..L3, R0..R3
//   preset sawtooth              # sine triangle sawtooth pulse super-saw rect-saw
//   partials 256                 # cap on preset partials (default 1024)
//   frequency 20 Hz
//   band 0 Hz 48000 Hz           # pass band [hp, lp)
//   partial 3 0.1 0 3            # k a b n, overrides the preset entry
//   subwave 1 1 512 0.5          # i first last weight; enables subwave mixing
//   bitmask 0x000000FF           # output bits forced to zero
//   rate 12000 Hz                # rate-crusher hold rate; period = round(fs / rate)
//   gain 1
//
// Every value is checked against its register format when the file is read.
#ifndef BFO_PATCH_HPP
#define BFO_PATCH_HPP

#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "bfo/engine.hpp"
#include "bfo/fxp.hpp"
#include "bfo/metrology.hpp"

namespace bfo::patch {

class patch_error : public std::runtime_error {
public:
  patch_error (std::size_t line, std::string const& field, std::string const& what)
      : std::runtime_error ("line " + std::to_string (line) + ", " + field + ": " + what), line{line}, field{field} {}
  std::size_t line;
  std::string field;
};

struct PartialOverride {
  std::size_t number = 0;  ///< 1-based
  engine::Partial value;
};

struct OscillatorPatch {
  std::optional<metrology::Waveform> preset;
  std::size_t preset_partials = engine::partials_per_oscillator;
  double frequency_hz = 0.0;
  std::optional<double> hp_hz;
  std::optional<double> lp_hz;
  std::vector<PartialOverride> partials;
  std::array<engine::Subwave, engine::max_subwaves> subwaves{};
  bool subwave_mode = false;
  std::uint32_t bitmask = 0;
  std::optional<double> rate_hz;
  engine::Gain gain = engine::unity_gain;
};

struct Patch {
  double sample_rate = 96000.0;
  engine::MixMatrix mix = engine::identity_mix ();
  /// Index v * 4 + j for oscillator j of voice v (L = 0, R = 1).
  std::map<std::size_t, OscillatorPatch> oscillators;
};

namespace detail {

inline std::vector<std::string_view> split (std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size ()) {
    while (i < line.size () && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) {
      ++i;
    }
    std::size_t const start = i;
    while (i < line.size () && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') {
      ++i;
    }
    if (i > start) {
      out.push_back (line.substr (start, i - start));
    }
  }
  return out;
}

class Line {
public:
  Line (std::size_t number, std::vector<std::string_view> tokens) : number_{number}, tokens_{std::move (tokens)} {}

  std::string_view key () const { return tokens_.front (); }
  std::size_t number () const { return number_; }

  [[noreturn]] void fail (std::string const& what) const { throw patch_error (number_, std::string{key ()}, what); }

  void expect (std::size_t values) const {
    if (tokens_.size () != values + 1) {
      fail ("expected " + std::to_string (values) + " value token(s), got " + std::to_string (tokens_.size () - 1));
    }
  }

  std::string_view token (std::size_t i) const { return tokens_.at (i + 1); }

  double real (std::size_t i) const {
    std::string_view const t = token (i);
    double v = 0.0;
    auto const [end, ec] = std::from_chars (t.data (), t.data () + t.size (), v);
    if (ec != std::errc{} || end != t.data () + t.size () || !std::isfinite (v)) {
      fail ("'" + std::string{t} + "' is not a number");
    }
    return v;
  }

  std::uint64_t integer (std::size_t i, int base = 10) const {
    std::string_view t = token (i);
    if (base == 16) {
      if (t.size () < 3 || t[0] != '0' || (t[1] != 'x' && t[1] != 'X')) {
        fail ("'" + std::string{t} + "' must be written as 0x<hex>");
      }
      t.remove_prefix (2);
    }
    std::uint64_t v = 0;
    auto const [end, ec] = std::from_chars (t.data (), t.data () + t.size (), v, base);
    if (ec != std::errc{} || end != t.data () + t.size ()) {
      fail ("'" + std::string{token (i)} + "' is not an unsigned integer");
    }
    return v;
  }

  /// A value followed by the unit token "Hz".
  double hertz (std::size_t i) const {
    if (i + 2 >= tokens_.size () || token (i + 1) != "Hz") {
      fail ("frequency values need the unit Hz");
    }
    return real (i);
  }

  template <fxp::QFormat F>
  fxp::Fixed<F> fixed (double x, std::string_view what) const {
    auto const q = fxp::quantize (x, F);
    if (q.saturated) {
      fail (std::string{what} + " " + std::to_string (x) + " outside the range of " + fxp::to_string (F));
    }
    return fxp::Fixed<F>::from (q.word);
  }

private:
  std::size_t number_;
  std::vector<std::string_view> tokens_;
};

inline std::optional<std::size_t> section_index (std::string_view name) {
  if (name.size () != 2 || (name[0] != 'L' && name[0] != 'R') || name[1] < '0' || name[1] > '3') {
    return std::nullopt;
  }
  return (name[0] == 'L' ? 0U : 1U) * engine::oscillators_per_voice + static_cast<std::size_t> (name[1] - '0');
}

inline void oscillator_key (Line const& l, OscillatorPatch& osc, std::map<std::string, std::size_t>& seen,
                            double fs) {
  std::string const key{l.key ()};
  bool const repeatable = key == "partial" || key == "subwave";
  if (!repeatable && !seen.emplace (key, l.number ()).second) {
    l.fail ("duplicate key (first on line " + std::to_string (seen[key]) + ")");
  }
  if (key == "preset") {
    l.expect (1);
    osc.preset = metrology::parse_waveform (l.token (0));
    if (!osc.preset) {
      l.fail ("unknown preset '" + std::string{l.token (0)} + "'");
    }
  } else if (key == "partials") {
    l.expect (1);
    osc.preset_partials = l.integer (0);
    if (osc.preset_partials < 1 || osc.preset_partials > engine::partials_per_oscillator) {
      l.fail ("must lie in 1..1024");
    }
  } else if (key == "frequency") {
    l.expect (2);
    osc.frequency_hz = l.hertz (0);
    l.fixed<fxp::turns> (osc.frequency_hz / fs, "f/fs");
  } else if (key == "band") {
    l.expect (4);
    osc.hp_hz = l.hertz (0);
    osc.lp_hz = l.hertz (2);
    l.fixed<fxp::turns> (*osc.hp_hz / fs, "hp/fs");
    l.fixed<fxp::turns> (*osc.lp_hz / fs, "lp/fs");
  } else if (key == "partial") {
    l.expect (4);
    std::uint64_t const k = l.integer (0);
    if (k < 1 || k > engine::partials_per_oscillator) {
      l.fail ("partial number must lie in 1..1024");
    }
    for (PartialOverride const& p : osc.partials) {
      if (p.number == k) {
        l.fail ("partial " + std::to_string (k) + " given twice");
      }
    }
    osc.partials.push_back ({k, {l.fixed<fxp::coefficient> (l.real (1), "a"), l.fixed<fxp::coefficient> (l.real (2), "b"),
                                 l.fixed<fxp::multiplier> (l.real (3), "n")}});
  } else if (key == "subwave") {
    l.expect (4);
    std::uint64_t const i = l.integer (0);
    if (i < 1 || i > engine::max_subwaves) {
      l.fail ("subwave index must lie in 1..4");
    }
    engine::Subwave& s = osc.subwaves[i - 1];
    if (s.used ()) {
      l.fail ("subwave " + std::to_string (i) + " given twice");
    }
    std::uint64_t const first = l.integer (1);
    std::uint64_t const last = l.integer (2);
    if (first < 1 || last > engine::partials_per_oscillator || first > last) {
      l.fail ("range must satisfy 1 <= first <= last <= 1024");
    }
    s.first = static_cast<std::uint16_t> (first);
    s.last = static_cast<std::uint16_t> (last);
    s.weight = l.fixed<fxp::gain> (l.real (3), "weight");
    if (auto problem = engine::check_subwaves (osc.subwaves)) {
      l.fail (*problem);
    }
    osc.subwave_mode = true;
  } else if (key == "bitmask") {
    l.expect (1);
    std::uint64_t const m = l.integer (0, 16);
    if (m > 0xFFFF'FFFFULL) {
      l.fail ("mask wider than 32 bits");
    }
    osc.bitmask = static_cast<std::uint32_t> (m);
  } else if (key == "rate") {
    l.expect (2);
    osc.rate_hz = l.hertz (0);
    if (!(*osc.rate_hz > 0.0) || std::round (fs / *osc.rate_hz) < 1.0 || std::round (fs / *osc.rate_hz) > 4294967295.0) {
      l.fail ("hold period round(fs / rate) must lie in 1..2^32-1");
    }
  } else if (key == "gain") {
    l.expect (1);
    osc.gain = l.fixed<fxp::gain> (l.real (0), "gain");
  } else {
    l.fail ("unknown key");
  }
}

} // namespace detail

inline Patch parse (std::string_view text) {
  Patch patch;
  std::optional<std::size_t> current;
  std::map<std::size_t, std::map<std::string, std::size_t>> seen;
  std::map<std::string, std::size_t> global_seen;
  std::size_t number = 0;
  std::size_t pos = 0;
  while (pos <= text.size ()) {
    std::size_t const eol = std::min (text.find ('\n', pos), text.size ());
    std::string_view raw = text.substr (pos, eol - pos);
    pos = eol + 1;
    ++number;
    if (auto const hash = raw.find ('#'); hash != std::string_view::npos) {
      raw = raw.substr (0, hash);
    }
    auto tokens = detail::split (raw);
    if (tokens.empty ()) {
      continue;
    }
    if (tokens.front ().front () == '[') {
      std::string_view const t = tokens.front ();
      auto const index = t.back () == ']' && tokens.size () == 1 ? detail::section_index (t.substr (1, t.size () - 2))
                                                                 : std::nullopt;
      if (!index) {
        throw patch_error (number, std::string{t}, "section must be one of [L0]..[L3], [R0]..[R3]");
      }
      if (patch.oscillators.count (*index) != 0) {
        throw patch_error (number, std::string{t}, "section given twice");
      }
      patch.oscillators[*index] = {};
      current = index;
      continue;
    }
    detail::Line const l{number, std::move (tokens)};
    if (current) {
      detail::oscillator_key (l, patch.oscillators[*current], seen[*current], patch.sample_rate);
      continue;
    }
    std::string const key{l.key ()};
    if (!global_seen.emplace (key, number).second) {
      l.fail ("duplicate key");
    }
    if (key == "sample_rate") {
      l.expect (2);
      patch.sample_rate = l.hertz (0);
      if (!(patch.sample_rate > 0.0)) {
        l.fail ("must be positive");
      }
    } else if (key == "mix") {
      l.expect (4);
      for (std::size_t i = 0; i < 4; ++i) {
        patch.mix[i / 2][i % 2] = l.fixed<fxp::gain> (l.real (i), "mix weight");
      }
    } else {
      l.fail ("unknown key (global keys: sample_rate, mix)");
    }
  }
  return patch;
}

inline Patch load (std::string const& path) {
  std::ifstream in (path);
  if (!in) {
    throw std::runtime_error ("cannot open patch '" + path + "'");
  }
  std::ostringstream ss;
  ss << in.rdbuf ();
  return parse (ss.str ());
}

inline engine::Turns to_turns (double hz, double fs) { return engine::Turns::from_real (hz / fs); }

/// Chip state at power-up with the patch applied.
inline engine::ChipState build (Patch const& patch) {
  engine::ChipState chip;
  chip.mix = patch.mix;
  double const fs = patch.sample_rate;
  for (auto const& [index, p] : patch.oscillators) {
    engine::OscillatorState& osc =
        chip.oscillator (index / engine::oscillators_per_voice, index % engine::oscillators_per_voice);
    if (p.preset) {
      osc.partials = metrology::preset (*p.preset, p.preset_partials);
    }
    for (PartialOverride const& o : p.partials) {
      osc.partials.set (o.number - 1, o.value);
    }
    osc.delta = to_turns (p.frequency_hz, fs);
    if (p.hp_hz) {
      osc.band.hp = to_turns (*p.hp_hz, fs);
    }
    if (p.lp_hz) {
      osc.band.lp = to_turns (*p.lp_hz, fs);
    }
    osc.subwave_mode = p.subwave_mode;
    osc.subwaves = p.subwaves;
    osc.bitmask = p.bitmask;
    if (p.rate_hz) {
      osc.rate_period = static_cast<std::uint32_t> (std::llround (fs / *p.rate_hz));
    }
    osc.gain = p.gain;
  }
  return chip;
}

} // namespace bfo::patch

#endif // BFO_PATCH_HPP
