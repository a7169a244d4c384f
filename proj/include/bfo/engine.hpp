// -*- mode: c++; coding: utf-8-unix; -*-
//
// Sample-level model of one oscillator chip: two voices of four additive
// oscillators, each summing up to 1024 partials per output sample.
//
// Per sample and oscillator the schedule is 1024 partial cycles. In cycle k
// the partial argument theta_k = frac(theta * n_k) is formed from the single
// base-frequency argument theta and fed, with (a_k, -b_k), through one CORDIC
// rotation. Partials outside the band [f_HP, f_LP) still use their cycle but
// are not accumulated. Terms are summed at the full CORDIC datapath width
// and truncated once to {s,0,31}. After the last cycle theta advances by delta modulo
// 2^16, which keeps theta * n_k mod 1 exact for multipliers with 16
// fractional bits.
#ifndef BFO_ENGINE_HPP
#define BFO_ENGINE_HPP

#include <algorithm>
#include <array>
#include <bitset>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bfo/cordic.hpp"
#include "bfo/fxp.hpp"

namespace bfo::engine {

inline constexpr std::size_t partials_per_oscillator = 1024;
inline constexpr std::size_t oscillators_per_voice = 4;
inline constexpr std::size_t voice_count = 2;
inline constexpr std::size_t max_subwaves = 4;
inline constexpr std::uint64_t cycles_per_sample = partials_per_oscillator;
inline constexpr int output_bits = 24;
inline constexpr std::size_t pdm_oversampling = 1024;

using Coefficient = fxp::Fixed<fxp::coefficient>;
using Multiplier = fxp::Fixed<fxp::multiplier>;
using Turns = fxp::Fixed<fxp::turns>;
using Phase = fxp::Fixed<fxp::phase>;
using Gain = fxp::Fixed<fxp::gain>;

inline constexpr Gain unity_gain = Gain::from_raw (fxp::wide_int{1} << fxp::gain.qf);
inline constexpr Turns nyquist = Turns::from_raw (fxp::wide_int{1} << 31);

/// One 96-bit register-file word.
struct Partial {
  Coefficient a;
  Coefficient b;
  Multiplier n;

  constexpr bool silent () const noexcept { return a.raw () == 0 && b.raw () == 0; }
  friend constexpr bool operator== (Partial const&, Partial const&) = default;
};

/// 1024 partials, indexed from 0 (partial number k = index + 1). Keeps a
/// sorted list of entries with nonzero coefficients; rotating a zero vector
/// yields exactly zero, so only those entries reach the CORDIC.
class PartialTable {
public:
  PartialTable () : entries_ (partials_per_oscillator) {}

  static constexpr std::size_t size () noexcept { return partials_per_oscillator; }

  Partial const& operator[] (std::size_t index) const { return entries_.at (index); }

  void set (std::size_t index, Partial const& p) {
    entries_.at (index) = p;
    bool const audible = !p.silent ();
    if (nonzero_[index] != audible) {
      nonzero_[index] = audible;
      active_.clear ();
      for (std::size_t k = 0; k < partials_per_oscillator; ++k) {
        if (nonzero_[k]) {
          active_.push_back (static_cast<std::uint16_t> (k));
        }
      }
    }
  }

  void clear () { *this = PartialTable{}; }

  std::vector<std::uint16_t> const& active () const noexcept { return active_; }
  auto begin () const noexcept { return entries_.begin (); }
  auto end () const noexcept { return entries_.end (); }

  friend bool operator== (PartialTable const& x, PartialTable const& y) { return x.entries_ == y.entries_; }

private:
  std::vector<Partial> entries_;
  std::bitset<partials_per_oscillator> nonzero_;
  std::vector<std::uint16_t> active_;
};

struct Band {
  Turns hp{};
  Turns lp = nyquist;
  friend constexpr bool operator== (Band const&, Band const&) = default;
};

/// Inclusive range of partial numbers (1-based); first == 0 marks an unused slot.
struct Subwave {
  std::uint16_t first = 0;
  std::uint16_t last = 0;
  Gain weight = unity_gain;

  constexpr bool used () const noexcept { return first != 0; }
  constexpr bool contains (std::size_t number) const noexcept {
    return used () && number >= first && number <= last;
  }
  friend constexpr bool operator== (Subwave const&, Subwave const&) = default;
};

/// Empty optional on success, otherwise a description of the violation.
inline std::optional<std::string> check_subwaves (std::array<Subwave, max_subwaves> const& subwaves) {
  for (std::size_t i = 0; i < max_subwaves; ++i) {
    Subwave const& s = subwaves[i];
    if (!s.used ()) {
      if (s.last != 0) {
        return "subwave " + std::to_string (i + 1) + ": last set without first";
      }
      continue;
    }
    if (s.last < s.first || s.last > partials_per_oscillator) {
      return "subwave " + std::to_string (i + 1) + ": bad range";
    }
    for (std::size_t j = 0; j < i; ++j) {
      Subwave const& t = subwaves[j];
      if (t.used () && s.first <= t.last && t.first <= s.last) {
        return "subwaves " + std::to_string (j + 1) + " and " + std::to_string (i + 1) + " overlap";
      }
    }
  }
  return std::nullopt;
}

struct OscillatorState {
  PartialTable partials;
  Turns delta{};   ///< f / fs
  Phase theta{};   ///< base-frequency argument, wraps mod 2^16
  Band band{};
  bool subwave_mode = false;
  std::array<Subwave, max_subwaves> subwaves{};
  std::uint32_t bitmask = 0;      ///< bits cleared in the output word
  std::uint32_t rate_period = 1;  ///< sample-and-hold period in samples
  std::uint32_t rate_counter = 0;
  Coefficient held{};
  Gain gain = unity_gain;
  std::uint64_t partial_cycles = 0;  ///< schedule bookkeeping

  bool operator== (OscillatorState const&) const = default;
};

namespace detail {

// Raw-integer forms of the two per-cycle operations; partial_argument and
// partial_gate below spell the same arithmetic out with fxp words.
inline std::uint32_t argument_raw (std::uint64_t theta, std::uint64_t n) noexcept {
  fxp::wide_uint const product = fxp::wide_uint{theta} * n;  // {u,32,48}
  return static_cast<std::uint32_t> (product >> fxp::multiplier.qf);
}

inline bool gate_raw (std::uint64_t delta, std::uint64_t n, Band const& band) noexcept {
  std::uint64_t const product = delta * n;  // {u,16,48}, at most 64 bits
  std::uint64_t const lo = band.hp.raw () << fxp::multiplier.qf;
  std::uint64_t const hi = band.lp.raw () << fxp::multiplier.qf;
  return lo <= product && product < hi;
}

} // namespace detail

/// theta_k = frac(theta * n), exact product truncated to 32 fractional bits.
inline Turns partial_argument (Phase theta, Multiplier n) {
  return Turns::from (fxp::frac_mod1 (fxp::mul_full (theta.word (), n.word ()), fxp::turns.qf));
}

/// f_HP <= delta * n < f_LP evaluated on the exact product.
inline bool partial_gate (Turns delta, Multiplier n, Band const& band) {
  fxp::FixedWord const product = fxp::mul_full (delta.word (), n.word ());  // {u,16,48}
  int const align = product.format ().qf - fxp::turns.qf;
  return fxp::shift (band.hp.raw (), align) <= product.raw () && product.raw () < fxp::shift (band.lp.raw (), align);
}

struct OscOutput {
  Coefficient y;
  bool clipped = false;
};

namespace detail {

inline std::int32_t apply_bitmask (std::int64_t raw, std::uint32_t mask) noexcept {
  auto const bits = static_cast<std::uint32_t> (raw) & ~mask;
  return static_cast<std::int32_t> (bits);
}

} // namespace detail

/// One output sample of one oscillator; advances theta and the crusher state.
inline OscOutput osc_sample (OscillatorState& osc, cordic::CordicParams const& params = {}) {
  std::array<std::int64_t, max_subwaves> sub{};
  std::int64_t acc = 0;

  for (std::uint16_t const index : osc.partials.active ()) {
    Partial const& p = osc.partials[index];
    if (!detail::gate_raw (osc.delta.raw (), p.n.raw (), osc.band)) {
      continue;
    }
    std::optional<std::size_t> group;
    if (osc.subwave_mode) {
      for (std::size_t i = 0; i < max_subwaves; ++i) {
        if (osc.subwaves[i].contains (index + 1U)) {
          group = i;
          break;
        }
      }
      if (!group) {
        continue;
      }
    }
    cordic::RotationPair const r = cordic::rotate_raw (
        detail::argument_raw (osc.theta.raw (), p.n.raw ()),
        {cordic::to_datapath (p.a, params), -cordic::to_datapath (p.b, params)}, params);
    std::int64_t const term = r.p1;
    if (group) {
      sub[*group] += term;
    } else {
      acc += term;
    }
  }
  osc.partial_cycles += cycles_per_sample;

  fxp::wide_int sum = acc;
  if (osc.subwave_mode) {
    fxp::wide_int weighted = 0;
    for (std::size_t i = 0; i < max_subwaves; ++i) {
      weighted += fxp::wide_int{sub[i]} * osc.subwaves[i].weight.raw ();
    }
    sum = weighted >> fxp::gain.qf;
  }
  auto const narrowed =
      fxp::saturate_narrow (fxp::FixedWord{sum, fxp::s (fxp::max_width - 1 - params.datapath_qf, params.datapath_qf)},
                            fxp::coefficient);

  Coefficient const crushed =
      Coefficient::from_raw (detail::apply_bitmask (static_cast<std::int64_t> (narrowed.word.raw ()), osc.bitmask));
  if (osc.rate_counter == 0) {
    osc.held = crushed;
  }
  osc.rate_counter = osc.rate_period <= 1 ? 0 : (osc.rate_counter + 1) % osc.rate_period;

  fxp::FixedWord const step{osc.delta.raw (), fxp::phase};
  osc.theta = Phase::from (fxp::add_wrap (osc.theta.word (), step));
  return {osc.held, narrowed.clipped};
}

// Clip-flag register bits.
namespace clip {
constexpr std::uint32_t oscillator (std::size_t voice, std::size_t osc) noexcept {
  return 1U << (voice * oscillators_per_voice + osc);
}
constexpr std::uint32_t voice (std::size_t v) noexcept { return 1U << (8 + v); }
constexpr std::uint32_t output (std::size_t channel) noexcept { return 1U << (10 + channel); }
inline constexpr std::uint32_t all = 0xFFFU;
} // namespace clip

/// First-order sigma-delta modulator with +/-(1 - 2^-31) feedback and a
/// {s,3,31} integrator.
struct PdmModulator {
  std::int64_t integrator = 0;
  std::int64_t feedback = 0;

  static constexpr std::int64_t full_scale = (std::int64_t{1} << 31) - 1;

  bool step (std::int64_t input_raw) {
    integrator = static_cast<std::int64_t> (
        fxp::wrap (fxp::wide_int{integrator} + input_raw - feedback, fxp::s (3, 31)));
    bool const bit = integrator >= 0;
    feedback = bit ? full_scale : -full_scale;
    return bit;
  }
  bool operator== (PdmModulator const&) const = default;
};

using Voice = std::array<OscillatorState, oscillators_per_voice>;
using MixMatrix = std::array<std::array<Gain, voice_count>, voice_count>;

constexpr MixMatrix identity_mix () {
  MixMatrix m{};
  m[0][0] = unity_gain;
  m[1][1] = unity_gain;
  return m;
}

struct ChipState {
  std::array<Voice, voice_count> voices{};
  MixMatrix mix = identity_mix ();  ///< out[c] = sum_v mix[c][v] * voice[v]
  std::array<PdmModulator, voice_count> pdm{};
  std::uint32_t clip_flags = 0;  ///< sticky; cleared by reading the register
  std::uint64_t sample_index = 0;

  OscillatorState& oscillator (std::size_t voice, std::size_t osc) { return voices.at (voice).at (osc); }
  OscillatorState const& oscillator (std::size_t voice, std::size_t osc) const {
    return voices.at (voice).at (osc);
  }
  bool operator== (ChipState const&) const = default;
};

/// Mixed output words before reduction to the DAC width.
struct MixedSample {
  Coefficient left;
  Coefficient right;
};

struct StereoSample {
  std::int32_t left = 0;  ///< 24-bit signed
  std::int32_t right = 0;
  friend constexpr bool operator== (StereoSample const&, StereoSample const&) = default;
};

constexpr std::int32_t to_output_word (Coefficient v) noexcept {
  return static_cast<std::int32_t> (v.raw () >> (fxp::coefficient.qf + 1 - output_bits));
}

inline MixedSample chip_sample_mixed (ChipState& chip, cordic::CordicParams const& params = {}) {
  std::array<fxp::wide_int, voice_count> voice_words{};
  for (std::size_t v = 0; v < voice_count; ++v) {
    fxp::wide_int sum = 0;
    for (std::size_t j = 0; j < oscillators_per_voice; ++j) {
      OscillatorState& osc = chip.voices[v][j];
      OscOutput const out = osc_sample (osc, params);
      if (out.clipped) {
        chip.clip_flags |= clip::oscillator (v, j);
      }
      sum += fxp::wide_int{out.y.raw ()} * osc.gain.raw ();
    }
    auto const n = fxp::saturate_narrow (fxp::FixedWord{sum, fxp::s (34, 61)}, fxp::coefficient);
    if (n.clipped) {
      chip.clip_flags |= clip::voice (v);
    }
    voice_words[v] = n.word.raw ();
  }
  std::array<Coefficient, voice_count> outs{};
  for (std::size_t c = 0; c < voice_count; ++c) {
    fxp::wide_int sum = 0;
    for (std::size_t v = 0; v < voice_count; ++v) {
      sum += voice_words[v] * chip.mix[c][v].raw ();
    }
    auto const n = fxp::saturate_narrow (fxp::FixedWord{sum, fxp::s (34, 61)}, fxp::coefficient);
    if (n.clipped) {
      chip.clip_flags |= clip::output (c);
    }
    outs[c] = Coefficient::from (n.word);
  }
  ++chip.sample_index;
  return {outs[0], outs[1]};
}

/// One I2S frame: mixed words truncated to 24 bits.
inline StereoSample chip_sample (ChipState& chip, cordic::CordicParams const& params = {}) {
  MixedSample const m = chip_sample_mixed (chip, params);
  return {to_output_word (m.left), to_output_word (m.right)};
}

inline std::vector<StereoSample> render (ChipState& chip, std::size_t count,
                                         cordic::CordicParams const& params = {}) {
  std::vector<StereoSample> out;
  out.reserve (count);
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back (chip_sample (chip, params));
  }
  return out;
}

/// Packed MSB-first bitstreams, 1024 bits per output sample and channel.
struct PdmStreams {
  std::vector<std::uint8_t> left;
  std::vector<std::uint8_t> right;
  std::size_t bits = 0;  ///< per channel

  static bool bit (std::vector<std::uint8_t> const& s, std::size_t i) { return (s[i / 8] >> (7 - i % 8)) & 1U; }
};

/// Each mixed sample is held for 1024 modulator steps.
inline PdmStreams pdm_stream (ChipState& chip, std::size_t count, cordic::CordicParams const& params = {}) {
  PdmStreams out;
  out.bits = count * pdm_oversampling;
  out.left.assign (out.bits / 8, 0);
  out.right.assign (out.bits / 8, 0);
  std::size_t pos = 0;
  for (std::size_t i = 0; i < count; ++i) {
    MixedSample const m = chip_sample_mixed (chip, params);
    std::array<std::int64_t, voice_count> const in{m.left.raw (), m.right.raw ()};
    for (std::size_t s = 0; s < pdm_oversampling; ++s, ++pos) {
      auto const mask = static_cast<std::uint8_t> (0x80U >> (pos % 8));
      if (chip.pdm[0].step (in[0])) {
        out.left[pos / 8] |= mask;
      }
      if (chip.pdm[1].step (in[1])) {
        out.right[pos / 8] |= mask;
      }
    }
  }
  return out;
}

} // namespace bfo::engine

#endif // BFO_ENGINE_HPP
