// Frozen regression values for the two waveforms without a published recipe.
#ifndef BFO_TESTS_GOLDENS_HPP
#define BFO_TESTS_GOLDENS_HPP

#include <cstdint>
#include <span>

#include "bfo/engine.hpp"
#include "bfo/metrology.hpp"

namespace goldens {

/// FNV-1a over the little-endian bytes of each frame's left then right word.
inline std::uint64_t fnv1a (std::span<bfo::engine::StereoSample const> frames) {
  std::uint64_t h = 1469598103934665603ULL;
  auto const eat = [&h] (std::int32_t v) {
    for (int i = 0; i < 4; ++i) {
      h ^= static_cast<std::uint8_t> (static_cast<std::uint32_t> (v) >> (8 * i));
      h *= 1099511628211ULL;
    }
  };
  for (auto const& f : frames) {
    eat (f.left);
    eat (f.right);
  }
  return h;
}

struct Golden {
  bfo::metrology::Waveform waveform;
  std::size_t samples;
  std::uint64_t hash;
  double sinad_db;
};

// 20 Hz, one oscillator on L0, full partial count.
inline constexpr Golden short_runs[] = {
    {bfo::metrology::Waveform::super_saw, 4800, 0x4b3c995075981703ULL, 136.0062},
    {bfo::metrology::Waveform::rect_saw, 4800, 0x44400660d1297a0aULL, 134.3638},
};

inline constexpr Golden full_runs[] = {
    {bfo::metrology::Waveform::super_saw, 96000, 0x0419ac26f7f3e3b1ULL, 130.4135},
    {bfo::metrology::Waveform::rect_saw, 96000, 0x8ca601dd0a2cfa85ULL, 134.4244},
};

// Crushed 20 Hz sawtooth, 20000 samples, mask 0xFF, hold period 3.
inline constexpr std::uint64_t crushed_sawtooth = 0x93954fb55f906d6dULL;

} // namespace goldens

#endif // BFO_TESTS_GOLDENS_HPP
