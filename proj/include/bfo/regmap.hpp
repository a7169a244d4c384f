// -*- mode: c++; coding: utf-8-unix; -*-
//
// Memory-mapped configuration interface. Every command is 48 bits on the wire:
// a 16-bit address followed by a 32-bit data word, both big-endian.
//
// Address layout (see docs/register_map.md; not the silicon's map):
//
//   0xV000 + 3k + {0,1,2}  oscillator V (0..7), partial k (0..1023): a, b, n
//   0xVC00                 DELTA        f/fs            {u,0,32}
//   0xVC01                 BAND_HP      lower band edge {u,0,32}
//   0xVC02                 BAND_LP      upper band edge {u,0,32}
//   0xVC03                 SUBWAVE_CTRL bit 0 enables subwave mixing
//   0xVC04 + i             SUBWAVE_RANGE_i  first << 16 | last (1-based; 0 = unused)
//   0xVC08 + i             SUBWAVE_WEIGHT_i {s,1,30}
//   0xVC0C                 CRUSH_MASK   output bits forced to zero
//   0xVC0D                 RATE_PERIOD  sample-and-hold period, >= 1
//   0xVC0E                 GAIN         voice-sum weight {s,1,30}
//   0x8000 + 2c + v        MIX[c][v]    {s,1,30}
//   0x8004                 CLIP_FLAGS   read-only, cleared on read
//
// Oscillators 0..3 belong to voice L, 4..7 to voice R.
#ifndef BFO_REGMAP_HPP
#define BFO_REGMAP_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bfo/engine.hpp"

namespace bfo::regmap {

class address_error : public std::runtime_error {
public:
  explicit address_error (std::uint16_t addr)
      : std::runtime_error ("unmapped address 0x" + hex (addr)), address{addr} {}
  std::uint16_t address;

  static std::string hex (std::uint16_t a) {
    static constexpr char digits[] = "0123456789ABCDEF";
    std::string s (4, '0');
    for (int i = 3; i >= 0; --i, a >>= 4) {
      s[static_cast<std::size_t> (i)] = digits[a & 0xF];
    }
    return s;
  }
};

class access_error : public std::runtime_error {
public:
  explicit access_error (std::uint16_t addr)
      : std::runtime_error ("register 0x" + address_error::hex (addr) + " is read-only"), address{addr} {}
  std::uint16_t address;
};

/// Data word rejected by a register (e.g. overlapping subwave ranges).
class value_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class framing_error : public std::runtime_error {
public:
  explicit framing_error (std::size_t off)
      : std::runtime_error ("truncated command at byte offset " + std::to_string (off)), offset{off} {}
  std::size_t offset;
};

struct RegisterCommand {
  std::uint16_t address = 0;
  std::uint32_t data = 0;
  friend constexpr bool operator== (RegisterCommand const&, RegisterCommand const&) = default;
};

inline constexpr std::size_t command_bytes = 6;
inline constexpr std::size_t command_bits = 48;

inline constexpr std::uint16_t oscillator_stride = 0x1000;
inline constexpr std::uint16_t config_base = 0x0C00;
inline constexpr std::size_t words_per_partial = 3;

namespace reg {
inline constexpr std::uint16_t delta = 0x0;
inline constexpr std::uint16_t band_hp = 0x1;
inline constexpr std::uint16_t band_lp = 0x2;
inline constexpr std::uint16_t subwave_ctrl = 0x3;
inline constexpr std::uint16_t subwave_range = 0x4;   // + i
inline constexpr std::uint16_t subwave_weight = 0x8;  // + i
inline constexpr std::uint16_t crush_mask = 0xC;
inline constexpr std::uint16_t rate_period = 0xD;
inline constexpr std::uint16_t gain = 0xE;
inline constexpr std::uint16_t config_count = 0xF;

inline constexpr std::uint16_t mix = 0x8000;  // + 2c + v
inline constexpr std::uint16_t clip_flags = 0x8004;
} // namespace reg

constexpr std::uint16_t partial_address (std::size_t osc, std::size_t index, std::size_t word) {
  return static_cast<std::uint16_t> (osc * oscillator_stride + index * words_per_partial + word);
}
constexpr std::uint16_t config_address (std::size_t osc, std::uint16_t r) {
  return static_cast<std::uint16_t> (osc * oscillator_stride + config_base + r);
}
constexpr std::uint16_t mix_address (std::size_t channel, std::size_t voice) {
  return static_cast<std::uint16_t> (reg::mix + 2 * channel + voice);
}

namespace detail {

constexpr std::size_t oscillator_count = engine::voice_count * engine::oscillators_per_voice;

inline engine::OscillatorState* oscillator_at (engine::ChipState& chip, std::uint16_t addr) {
  std::size_t const osc = addr / oscillator_stride;
  if (osc >= oscillator_count) {
    return nullptr;
  }
  return &chip.oscillator (osc / engine::oscillators_per_voice, osc % engine::oscillators_per_voice);
}

inline std::int64_t as_signed (std::uint32_t data) noexcept { return static_cast<std::int32_t> (data); }

} // namespace detail

/// Apply one write. Throws address_error/access_error/value_error and leaves
/// the chip unchanged on failure.
inline void write (engine::ChipState& chip, std::uint16_t addr, std::uint32_t data) {
  using namespace engine;
  if (addr == reg::clip_flags) {
    throw access_error (addr);
  }
  if (addr >= reg::mix && addr < reg::mix + 4) {
    std::size_t const i = addr - reg::mix;
    chip.mix[i / 2][i % 2] = Gain::from_raw (detail::as_signed (data));
    return;
  }
  OscillatorState* osc = detail::oscillator_at (chip, addr);
  if (osc == nullptr) {
    throw address_error (addr);
  }
  std::uint16_t const local = addr % oscillator_stride;
  if (local < config_base) {
    std::size_t const index = local / words_per_partial;
    Partial p = osc->partials[index];
    switch (local % words_per_partial) {
    case 0: p.a = Coefficient::from_raw (detail::as_signed (data)); break;
    case 1: p.b = Coefficient::from_raw (detail::as_signed (data)); break;
    default: p.n = Multiplier::from_raw (data); break;
    }
    osc->partials.set (index, p);
    return;
  }
  std::uint16_t const r = local - config_base;
  if (r >= reg::config_count) {
    throw address_error (addr);
  }
  switch (r) {
  case reg::delta: osc->delta = Turns::from_raw (data); break;
  case reg::band_hp: osc->band.hp = Turns::from_raw (data); break;
  case reg::band_lp: osc->band.lp = Turns::from_raw (data); break;
  case reg::subwave_ctrl: osc->subwave_mode = (data & 1U) != 0; break;
  case reg::crush_mask: osc->bitmask = data; break;
  case reg::rate_period:
    if (data == 0) {
      throw value_error ("rate period must be at least 1");
    }
    osc->rate_period = data;
    osc->rate_counter = 0;
    break;
  case reg::gain: osc->gain = Gain::from_raw (detail::as_signed (data)); break;
  default:
    if (r < reg::subwave_weight) {
      auto subwaves = osc->subwaves;
      Subwave& s = subwaves[r - reg::subwave_range];
      s.first = static_cast<std::uint16_t> (data >> 16);
      s.last = static_cast<std::uint16_t> (data & 0xFFFFU);
      if (auto problem = check_subwaves (subwaves)) {
        throw value_error (*problem);
      }
      osc->subwaves = subwaves;
    } else {
      osc->subwaves[r - reg::subwave_weight].weight = Gain::from_raw (detail::as_signed (data));
    }
    break;
  }
}

/// Read a register. Reading CLIP_FLAGS returns and clears the sticky flags.
inline std::uint32_t read (engine::ChipState& chip, std::uint16_t addr) {
  using namespace engine;
  auto const bits = [] (auto fixed) { return static_cast<std::uint32_t> (fixed.raw ()); };
  if (addr == reg::clip_flags) {
    std::uint32_t const flags = chip.clip_flags;
    chip.clip_flags = 0;
    return flags;
  }
  if (addr >= reg::mix && addr < reg::mix + 4) {
    std::size_t const i = addr - reg::mix;
    return bits (chip.mix[i / 2][i % 2]);
  }
  OscillatorState* osc = detail::oscillator_at (chip, addr);
  if (osc == nullptr) {
    throw address_error (addr);
  }
  std::uint16_t const local = addr % oscillator_stride;
  if (local < config_base) {
    Partial const& p = osc->partials[local / words_per_partial];
    switch (local % words_per_partial) {
    case 0: return bits (p.a);
    case 1: return bits (p.b);
    default: return bits (p.n);
    }
  }
  std::uint16_t const r = local - config_base;
  switch (r) {
  case reg::delta: return bits (osc->delta);
  case reg::band_hp: return bits (osc->band.hp);
  case reg::band_lp: return bits (osc->band.lp);
  case reg::subwave_ctrl: return osc->subwave_mode ? 1U : 0U;
  case reg::crush_mask: return osc->bitmask;
  case reg::rate_period: return osc->rate_period;
  case reg::gain: return bits (osc->gain);
  default:
    if (r >= reg::config_count) {
      throw address_error (addr);
    }
    if (r < reg::subwave_weight) {
      Subwave const& s = osc->subwaves[r - reg::subwave_range];
      return (std::uint32_t{s.first} << 16) | s.last;
    }
    return bits (osc->subwaves[r - reg::subwave_weight].weight);
  }
}

inline void apply (engine::ChipState& chip, RegisterCommand const& cmd) { write (chip, cmd.address, cmd.data); }

inline void apply (engine::ChipState& chip, std::span<RegisterCommand const> cmds) {
  for (RegisterCommand const& c : cmds) {
    apply (chip, c);
  }
}

inline std::vector<RegisterCommand> parse_stream (std::span<std::uint8_t const> bytes) {
  std::size_t const whole = bytes.size () / command_bytes * command_bytes;
  if (whole != bytes.size ()) {
    throw framing_error (whole);
  }
  std::vector<RegisterCommand> out;
  out.reserve (bytes.size () / command_bytes);
  for (std::size_t off = 0; off < bytes.size (); off += command_bytes) {
    auto const* b = bytes.data () + off;
    out.push_back ({static_cast<std::uint16_t> ((b[0] << 8) | b[1]),
                    (std::uint32_t{b[2]} << 24) | (std::uint32_t{b[3]} << 16) | (std::uint32_t{b[4]} << 8) |
                        std::uint32_t{b[5]}});
  }
  return out;
}

inline std::vector<std::uint8_t> serialize (std::span<RegisterCommand const> cmds) {
  std::vector<std::uint8_t> out;
  out.reserve (cmds.size () * command_bytes);
  for (RegisterCommand const& c : cmds) {
    out.push_back (static_cast<std::uint8_t> (c.address >> 8));
    out.push_back (static_cast<std::uint8_t> (c.address));
    for (int s = 24; s >= 0; s -= 8) {
      out.push_back (static_cast<std::uint8_t> (c.data >> s));
    }
  }
  return out;
}

/// Seconds needed to shift num_commands 48-bit commands at the given baud rate.
inline double reprogram_time (std::size_t num_commands, double baud) {
  if (!(baud > 0.0)) {
    throw usage_error ("baud rate must be positive");
  }
  return static_cast<double> (num_commands) * static_cast<double> (command_bits) / baud;
}

/// Commands writing every word of one oscillator's register file.
inline std::vector<RegisterCommand> wavetable_commands (std::size_t osc, engine::PartialTable const& table) {
  std::vector<RegisterCommand> out;
  out.reserve (table.size () * words_per_partial);
  for (std::size_t k = 0; k < table.size (); ++k) {
    engine::Partial const& p = table[k];
    out.push_back ({partial_address (osc, k, 0), static_cast<std::uint32_t> (p.a.raw ())});
    out.push_back ({partial_address (osc, k, 1), static_cast<std::uint32_t> (p.b.raw ())});
    out.push_back ({partial_address (osc, k, 2), static_cast<std::uint32_t> (p.n.raw ())});
  }
  return out;
}

} // namespace bfo::regmap

#endif // BFO_REGMAP_HPP
