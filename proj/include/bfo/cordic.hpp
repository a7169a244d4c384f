// -*- mode: c++; coding: utf-8-unix; -*-
//
// Rotation-mode CORDIC parameterized in turns (1 turn = 2*pi radians).
//
// A rotation by theta is split into an exact quarter-turn correction (sign
// swaps only) followed by M shift-add micro-rotations with angles
// atan(2^-m) / (2*pi). The gain kappa = prod_m (1 + 2^-2m)^(-1/2) is applied
// once at the end.
#ifndef BFO_CORDIC_HPP
#define BFO_CORDIC_HPP

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>

#include "bfo/fxp.hpp"

namespace bfo::cordic {

inline constexpr int max_micro_rotations = 32;
inline constexpr int angle_qf = 47;  // angle table format {u,0,47}
inline constexpr int kappa_qf = 31;  // gain format {u,0,31}

// round(atan(2^-m) / (2*pi) * 2^47), m = 0..31. Generated offline with 60
// significant digits.
inline constexpr std::array<std::int64_t, max_micro_rotations> angle_table{
    17592186044416, 10385273835258, 5487293476722, 2785435848431, 1398123104044,
    699743120514,   349956943380,   174989150442,  87495910248,   43748122008,
    21874081865,    10937043540,    5468522096,    2734261089,    1367130549,
    683565275,      341782638,      170891319,     85445659,      42722830,
    21361415,       10680707,       5340354,       2670177,       1335088,
    667544,         333772,         166886,        83443,         41722,
    20861,          10430};

// round(kappa_M * 2^31) for M = 1..32 micro-rotations.
inline constexpr std::array<std::int64_t, max_micro_rotations> kappa_table{
    1518500250, 1358187913, 1317635818, 1307460871, 1304914694, 1304277995, 1304118810,
    1304079014, 1304069065, 1304066577, 1304065955, 1304065800, 1304065761, 1304065751,
    1304065749, 1304065748, 1304065748, 1304065748, 1304065748, 1304065748, 1304065748,
    1304065748, 1304065748, 1304065748, 1304065748, 1304065748, 1304065748, 1304065748,
    1304065748, 1304065748, 1304065748, 1304065748};

struct CordicParams {
  int micro_rotations = 26;
  /// Fractional bits of the internal datapath; two integer guard bits and a
  /// sign bit sit above them.
  int datapath_qf = 36;

  constexpr bool valid () const noexcept {
    return micro_rotations >= 1 && micro_rotations <= max_micro_rotations &&
           datapath_qf >= 24 && datapath_qf <= 40;
  }
  constexpr std::int64_t kappa_raw () const { return kappa_table.at (micro_rotations - 1); }
  fxp::FixedWord kappa () const { return fxp::FixedWord{kappa_raw (), fxp::u (0, kappa_qf)}; }
  fxp::FixedWord angle (int m) const { return fxp::FixedWord{angle_table.at (m), fxp::u (0, angle_qf)}; }

  friend constexpr bool operator== (CordicParams const&, CordicParams const&) = default;
};

/// Raw components in the datapath format {s,2,datapath_qf}.
struct RotationPair {
  std::int64_t p1 = 0;
  std::int64_t p2 = 0;

  friend constexpr bool operator== (RotationPair const&, RotationPair const&) = default;
};

inline double to_real (std::int64_t raw, CordicParams const& params) noexcept {
  return std::ldexp (static_cast<double> (raw), -params.datapath_qf);
}

struct QuadrantResult {
  std::uint32_t residual;  // turns {u,0,32}, always < 2^30 (a quarter turn)
  RotationPair p;
};

/// Rotate by floor(4*theta) quarter turns; exact.
constexpr QuadrantResult quadrant_correct (std::uint32_t theta, RotationPair p) noexcept {
  std::uint32_t const quadrant = theta >> 30;
  std::uint32_t const residual = theta & 0x3FFF'FFFFU;
  switch (quadrant) {
  case 1: return {residual, {-p.p2, p.p1}};
  case 2: return {residual, {-p.p1, -p.p2}};
  case 3: return {residual, {p.p2, -p.p1}};
  default: return {residual, p};
  }
}

/// Computes G(2*pi*theta) * (p1, p2) for datapath-format inputs.
inline RotationPair rotate_raw (std::uint32_t theta, RotationPair p, CordicParams const& params) {
  if (!params.valid ()) {
    throw usage_error ("invalid CORDIC parameters");
  }
  auto [residual, q] = quadrant_correct (theta, p);
  std::int64_t x = q.p1;
  std::int64_t y = q.p2;
  std::int64_t z = static_cast<std::int64_t> (residual) << (angle_qf - 32);
  for (int m = 0; m < params.micro_rotations; ++m) {
    // d_m = +1 while the residual angle is non-negative. `flip` is 0 or -1;
    // (v ^ flip) - flip negates v when flip is -1.
    std::int64_t const flip = z >> 63;
    std::int64_t const dx = y >> m;
    std::int64_t const dy = x >> m;
    x -= (dx ^ flip) - flip;
    y += (dy ^ flip) - flip;
    z -= (angle_table[static_cast<std::size_t> (m)] ^ flip) - flip;
  }
  fxp::wide_int const k = params.kappa_raw ();
  return {static_cast<std::int64_t> ((x * k) >> kappa_qf),
          static_cast<std::int64_t> ((y * k) >> kappa_qf)};
}

inline std::int64_t to_datapath (fxp::Fixed<fxp::coefficient> v, CordicParams const& params) noexcept {
  return static_cast<std::int64_t> (fxp::shift (v.raw (), params.datapath_qf - fxp::coefficient.qf));
}

/// Rotation of a coefficient pair; outputs stay in the datapath format.
inline RotationPair rotate (fxp::Fixed<fxp::turns> theta, fxp::Fixed<fxp::coefficient> p1,
                            fxp::Fixed<fxp::coefficient> p2, CordicParams const& params = {}) {
  return rotate_raw (static_cast<std::uint32_t> (theta.raw ()),
                     {to_datapath (p1, params), to_datapath (p2, params)}, params);
}

/// (cos(2*pi*theta), sin(2*pi*theta)) as (p1, p2) by rotating (1 - 2^-31, 0).
inline RotationPair cosi (fxp::Fixed<fxp::turns> theta, CordicParams const& params = {}) {
  return rotate (theta, fxp::Fixed<fxp::coefficient>::max (), {}, params);
}

} // namespace bfo::cordic

#endif // BFO_CORDIC_HPP
