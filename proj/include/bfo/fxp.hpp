// -*- mode: c++; coding: utf-8-unix; -*-
//
// Fixed-point kernel. A value is a raw two's-complement (or unsigned) bit
// pattern paired with its Q-format {s|u, qi, qf}; real value = raw * 2^-qf.
// Words up to 96 bits wide are supported so the widest intermediate product
// of the oscillator datapath ({u,16,32} x {u,16,16} -> {u,32,48}) stays exact.
#ifndef BFO_FXP_HPP
#define BFO_FXP_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace bfo {

/// Raised on contract violations (format mismatch, width overflow, bad input).
class usage_error : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

namespace fxp {

__extension__ using wide_int = __int128;
__extension__ using wide_uint = unsigned __int128;

inline constexpr int max_width = 96;

struct QFormat {
  bool is_signed = false;
  int qi = 0;
  int qf = 0;

  constexpr int width () const noexcept { return qi + qf + (is_signed ? 1 : 0); }
  constexpr bool valid () const noexcept {
    return qi >= 0 && qf >= 0 && width () >= 1 && width () <= max_width;
  }
  friend constexpr bool operator== (QFormat const&, QFormat const&) = default;
};

constexpr QFormat s (int qi, int qf) noexcept { return {true, qi, qf}; }
constexpr QFormat u (int qi, int qf) noexcept { return {false, qi, qf}; }

std::string to_string (QFormat f);

// Formats used across the emulator.
inline constexpr QFormat coefficient = s (0, 31);  // a_k, b_k, oscillator output
inline constexpr QFormat multiplier = u (16, 16);  // n_k
inline constexpr QFormat turns = u (0, 32);        // f/fs, band edges, theta_k
inline constexpr QFormat phase = u (16, 32);       // base-frequency argument
inline constexpr QFormat gain = s (1, 30);         // mix weights; 1.0 exact
inline constexpr QFormat accumulator = s (11, 36); // per-oscillator sample sum (CORDIC width)

constexpr wide_int raw_max (QFormat f) noexcept {
  int const magnitude_bits = f.qi + f.qf;
  return (wide_int{1} << magnitude_bits) - 1;
}
constexpr wide_int raw_min (QFormat f) noexcept {
  return f.is_signed ? -(wide_int{1} << (f.qi + f.qf)) : wide_int{0};
}

/// Reduce an arbitrary integer modulo 2^width, reinterpreted in the format's
/// signedness. This is what dropping the high-order bits does in hardware.
constexpr wide_int wrap (wide_int raw, QFormat f) noexcept {
  int const w = f.width ();
  wide_uint const mask = (wide_uint{1} << w) - 1;
  wide_uint bits = static_cast<wide_uint> (raw) & mask;
  if (f.is_signed && (bits >> (w - 1)) != 0) {
    bits |= ~mask;
  }
  return static_cast<wide_int> (bits);
}

/// Arithmetic shift that truncates toward minus infinity when dropping bits.
constexpr wide_int shift (wide_int raw, int left) noexcept {
  return left >= 0 ? raw * (wide_int{1} << left) : raw >> (-left);
}

class FixedWord {
public:
  constexpr FixedWord () = default;
  /// Raw must already fit in the format; use wrap()/saturate_narrow() otherwise.
  constexpr FixedWord (wide_int raw, QFormat format) : raw_{raw}, format_{format} {
    if (!format.valid ()) {
      throw usage_error ("invalid Q-format " + to_string (format));
    }
    if (raw < raw_min (format) || raw > raw_max (format)) {
      throw usage_error ("raw value does not fit " + to_string (format));
    }
  }

  constexpr wide_int raw () const noexcept { return raw_; }
  constexpr QFormat format () const noexcept { return format_; }

  double to_real () const noexcept {
    return std::ldexp (static_cast<double> (raw_), -format_.qf);
  }

  friend constexpr bool operator== (FixedWord const&, FixedWord const&) = default;

private:
  wide_int raw_ = 0;
  QFormat format_ = u (0, 1);
};

enum class Rounding { nearest_even, truncate };

struct Quantized {
  FixedWord word;
  bool saturated = false;
};

/// Nearest representable value (ties to even) or truncation toward minus
/// infinity. Out-of-range inputs saturate and set the flag. NaN maps to zero
/// with the flag set.
inline Quantized quantize (double x, QFormat fmt, Rounding mode = Rounding::nearest_even) {
  if (!fmt.valid ()) {
    throw usage_error ("invalid Q-format " + to_string (fmt));
  }
  if (std::isnan (x)) {
    return {FixedWord{0, fmt}, true};
  }
  // Exponent scaling is exact in binary floating point.
  long double const scaled = std::ldexp (static_cast<long double> (x), fmt.qf);
  long double const integral =
      mode == Rounding::nearest_even ? std::nearbyint (scaled) : std::floor (scaled);
  long double const hi = static_cast<long double> (raw_max (fmt));
  long double const lo = static_cast<long double> (raw_min (fmt));
  if (integral > hi) {
    return {FixedWord{raw_max (fmt), fmt}, true};
  }
  if (integral < lo) {
    return {FixedWord{raw_min (fmt), fmt}, true};
  }
  return {FixedWord{static_cast<wide_int> (integral), fmt}, false};
}

/// Modular addition: overflow bits beyond the declared width are discarded.
constexpr FixedWord add_wrap (FixedWord a, FixedWord b) {
  if (a.format () != b.format ()) {
    throw usage_error ("add_wrap: format mismatch " + to_string (a.format ()) + " vs " +
                       to_string (b.format ()));
  }
  return FixedWord{wrap (a.raw () + b.raw (), a.format ()), a.format ()};
}

/// Exact product; integer and fractional widths add.
constexpr FixedWord mul_full (FixedWord a, FixedWord b) {
  QFormat const fa = a.format ();
  QFormat const fb = b.format ();
  QFormat const out{fa.is_signed || fb.is_signed, fa.qi + fb.qi, fa.qf + fb.qf};
  if (!out.valid ()) {
    throw usage_error ("mul_full: product width " + std::to_string (out.width ()) +
                       " exceeds " + std::to_string (max_width) + " bits");
  }
  return FixedWord{a.raw () * b.raw (), out};
}

/// Keep the fractional part (mod 1), truncated or zero-extended to out_qf bits.
constexpr FixedWord frac_mod1 (FixedWord a, int out_qf) {
  if (a.format ().is_signed) {
    throw usage_error ("frac_mod1: operand must be unsigned");
  }
  QFormat const out = u (0, out_qf);
  if (!out.valid ()) {
    throw usage_error ("frac_mod1: invalid output width");
  }
  int const qf = a.format ().qf;
  wide_int const frac = a.raw () & ((wide_int{1} << qf) - 1);
  return FixedWord{shift (frac, out_qf - qf), out};
}

struct Narrowed {
  FixedWord word;
  bool clipped = false;
};

/// Truncate excess fractional bits, then clamp to the target range.
constexpr Narrowed saturate_narrow (FixedWord a, QFormat fmt) {
  if (!fmt.valid ()) {
    throw usage_error ("invalid Q-format " + to_string (fmt));
  }
  wide_int const v = shift (a.raw (), fmt.qf - a.format ().qf);
  if (v > raw_max (fmt)) {
    return {FixedWord{raw_max (fmt), fmt}, true};
  }
  if (v < raw_min (fmt)) {
    return {FixedWord{raw_min (fmt), fmt}, true};
  }
  return {FixedWord{v, fmt}, false};
}

inline std::string to_string (QFormat f) {
  return std::string{"{"} + (f.is_signed ? "s" : "u") + "," + std::to_string (f.qi) + "," +
         std::to_string (f.qf) + "}";
}

// Compact storage for a value whose format is fixed at compile time.
template <QFormat F>
  requires (F.valid () && F.width () <= 64)
class Fixed {
public:
  using raw_type = std::conditional_t<F.is_signed, std::int64_t, std::uint64_t>;
  static constexpr QFormat format = F;

  constexpr Fixed () = default;

  static constexpr Fixed from_raw (wide_int raw) {
    if (raw < raw_min (F) || raw > raw_max (F)) {
      throw usage_error ("raw value does not fit " + to_string (F));
    }
    Fixed f;
    f.raw_ = static_cast<raw_type> (raw);
    return f;
  }
  static constexpr Fixed from (FixedWord w) {
    if (w.format () != F) {
      throw usage_error ("expected " + to_string (F) + ", got " + to_string (w.format ()));
    }
    return from_raw (w.raw ());
  }
  /// Round-to-nearest-even, saturating.
  static Fixed from_real (double x, Rounding mode = Rounding::nearest_even) {
    return from (quantize (x, F, mode).word);
  }

  constexpr raw_type raw () const noexcept { return raw_; }
  constexpr FixedWord word () const { return FixedWord{static_cast<wide_int> (raw_), F}; }
  double to_real () const noexcept { return std::ldexp (static_cast<double> (raw_), -F.qf); }

  static constexpr Fixed max () { return from_raw (raw_max (F)); }
  static constexpr Fixed min () { return from_raw (raw_min (F)); }

  friend constexpr bool operator== (Fixed const&, Fixed const&) = default;

private:
  raw_type raw_ = 0;
};

} // namespace fxp
} // namespace bfo

#endif // BFO_FXP_HPP
