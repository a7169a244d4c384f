// -*- mode: c++; coding: utf-8-unix; -*-
//
// Byte-exact output containers. All multi-byte fields are little-endian
// regardless of host.
//
//   wav24     RIFF/WAVE, PCM, 2 channels, 24 bits, interleaved L R
//   raw-pcm   the same sample bytes without a header (s24le, L R)
//   pdm-bits  per output sample: 128 bytes of left bits, then 128 bytes of
//             right bits, each MSB-first
#ifndef BFO_WAV_HPP
#define BFO_WAV_HPP

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "bfo/engine.hpp"
#include "bfo/fxp.hpp"

namespace bfo::wav {

class format_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class io_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

enum class OutputFormat { wav24, raw_pcm, pdm_bits };

inline std::string_view name (OutputFormat f) noexcept {
  switch (f) {
  case OutputFormat::wav24: return "wav24";
  case OutputFormat::raw_pcm: return "raw-pcm";
  default: return "pdm-bits";
  }
}

inline OutputFormat parse_format (std::string_view s) {
  for (OutputFormat f : {OutputFormat::wav24, OutputFormat::raw_pcm, OutputFormat::pdm_bits}) {
    if (name (f) == s) {
      return f;
    }
  }
  throw usage_error ("unknown output format '" + std::string{s} + "' (wav24, raw-pcm, pdm-bits)");
}

inline constexpr std::size_t channels = 2;
inline constexpr std::size_t bytes_per_sample = 3;
inline constexpr std::size_t header_bytes = 44;

namespace detail {

inline void put_le (std::vector<std::uint8_t>& out, std::uint32_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) {
    out.push_back (static_cast<std::uint8_t> (v >> (8 * i)));
  }
}

inline std::uint32_t get_le (std::span<std::uint8_t const> in, std::size_t off, int bytes) {
  std::uint32_t v = 0;
  for (int i = 0; i < bytes; ++i) {
    v |= std::uint32_t{in[off + static_cast<std::size_t> (i)]} << (8 * i);
  }
  return v;
}

inline std::int32_t sign_extend24 (std::uint32_t v) noexcept {
  return static_cast<std::int32_t> (v << 8) >> 8;
}

} // namespace detail

inline std::vector<std::uint8_t> encode_pcm (std::span<engine::StereoSample const> frames) {
  std::vector<std::uint8_t> out;
  out.reserve (frames.size () * channels * bytes_per_sample);
  for (engine::StereoSample const& f : frames) {
    detail::put_le (out, static_cast<std::uint32_t> (f.left), 3);
    detail::put_le (out, static_cast<std::uint32_t> (f.right), 3);
  }
  return out;
}

inline std::vector<std::uint8_t> encode_wav (std::span<engine::StereoSample const> frames, std::uint32_t sample_rate) {
  std::size_t const data_bytes = frames.size () * channels * bytes_per_sample;
  if (data_bytes > 0xFFFF'FFFFULL - header_bytes) {
    throw usage_error ("wav24: too many frames for a RIFF container");
  }
  std::vector<std::uint8_t> out;
  out.reserve (header_bytes + data_bytes);
  auto const tag = [&out] (char const* t) { out.insert (out.end (), t, t + 4); };
  tag ("RIFF");
  detail::put_le (out, static_cast<std::uint32_t> (36 + data_bytes), 4);
  tag ("WAVE");
  tag ("fmt ");
  detail::put_le (out, 16, 4);
  detail::put_le (out, 1, 2);  // PCM
  detail::put_le (out, channels, 2);
  detail::put_le (out, sample_rate, 4);
  detail::put_le (out, static_cast<std::uint32_t> (sample_rate * channels * bytes_per_sample), 4);
  detail::put_le (out, channels * bytes_per_sample, 2);
  detail::put_le (out, 24, 2);
  tag ("data");
  detail::put_le (out, static_cast<std::uint32_t> (data_bytes), 4);
  std::vector<std::uint8_t> const pcm = encode_pcm (frames);
  out.insert (out.end (), pcm.begin (), pcm.end ());
  return out;
}

/// Interleaves the two channel streams in blocks of one output sample.
inline std::vector<std::uint8_t> encode_pdm (engine::PdmStreams const& s) {
  constexpr std::size_t block = engine::pdm_oversampling / 8;
  std::vector<std::uint8_t> out;
  out.reserve (s.left.size () + s.right.size ());
  for (std::size_t off = 0; off < s.left.size (); off += block) {
    out.insert (out.end (), s.left.begin () + static_cast<std::ptrdiff_t> (off),
                s.left.begin () + static_cast<std::ptrdiff_t> (off + block));
    out.insert (out.end (), s.right.begin () + static_cast<std::ptrdiff_t> (off),
                s.right.begin () + static_cast<std::ptrdiff_t> (off + block));
  }
  return out;
}

inline engine::PdmStreams decode_pdm (std::span<std::uint8_t const> bytes) {
  constexpr std::size_t block = engine::pdm_oversampling / 8;
  if (bytes.size () % (2 * block) != 0) {
    throw format_error ("pdm-bits: length is not a whole number of sample blocks");
  }
  engine::PdmStreams s;
  for (std::size_t off = 0; off < bytes.size (); off += 2 * block) {
    s.left.insert (s.left.end (), bytes.begin () + static_cast<std::ptrdiff_t> (off),
                   bytes.begin () + static_cast<std::ptrdiff_t> (off + block));
    s.right.insert (s.right.end (), bytes.begin () + static_cast<std::ptrdiff_t> (off + block),
                    bytes.begin () + static_cast<std::ptrdiff_t> (off + 2 * block));
  }
  s.bits = s.left.size () * 8;
  return s;
}

inline std::vector<engine::StereoSample> decode_pcm (std::span<std::uint8_t const> bytes) {
  constexpr std::size_t frame = channels * bytes_per_sample;
  if (bytes.size () % frame != 0) {
    throw format_error ("raw-pcm: length is not a whole number of 6-byte frames");
  }
  std::vector<engine::StereoSample> out;
  out.reserve (bytes.size () / frame);
  for (std::size_t off = 0; off < bytes.size (); off += frame) {
    out.push_back ({detail::sign_extend24 (detail::get_le (bytes, off, 3)),
                    detail::sign_extend24 (detail::get_le (bytes, off + 3, 3))});
  }
  return out;
}

struct Audio {
  std::uint32_t sample_rate = 0;  ///< 0 when read from headerless PCM
  std::vector<engine::StereoSample> frames;
};

/// Accepts only what encode_wav writes: PCM, stereo, 24-bit.
inline Audio decode_wav (std::span<std::uint8_t const> bytes) {
  auto const is = [&bytes] (std::size_t off, std::string_view t) {
    return off + 4 <= bytes.size () && std::string_view{reinterpret_cast<char const*> (bytes.data () + off), 4} == t;
  };
  if (!is (0, "RIFF") || !is (8, "WAVE")) {
    throw format_error ("not a RIFF/WAVE file");
  }
  Audio audio;
  bool have_fmt = false;
  std::size_t off = 12;
  while (off + 8 <= bytes.size ()) {
    std::uint32_t const size = detail::get_le (bytes, off + 4, 4);
    std::size_t const body = off + 8;
    if (body + size > bytes.size ()) {
      throw format_error ("wav: chunk runs past end of file");
    }
    if (is (off, "fmt ")) {
      if (size < 16 || detail::get_le (bytes, body, 2) != 1 || detail::get_le (bytes, body + 2, 2) != channels ||
          detail::get_le (bytes, body + 14, 2) != 24) {
        throw format_error ("wav: expected 24-bit stereo PCM");
      }
      audio.sample_rate = detail::get_le (bytes, body + 4, 4);
      have_fmt = true;
    } else if (is (off, "data")) {
      if (!have_fmt) {
        throw format_error ("wav: data chunk before fmt chunk");
      }
      audio.frames = decode_pcm (bytes.subspan (body, size));
      return audio;
    }
    off = body + size + (size & 1U);
  }
  throw format_error ("wav: no data chunk");
}

inline std::vector<std::uint8_t> read_file (std::string const& path) {
  std::ifstream in (path, std::ios::binary);
  if (!in) {
    throw io_error ("cannot open '" + path + "' for reading");
  }
  return {std::istreambuf_iterator<char> (in), std::istreambuf_iterator<char> ()};
}

inline void write_file (std::string const& path, std::span<std::uint8_t const> bytes) {
  std::ofstream out (path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw io_error ("cannot open '" + path + "' for writing");
  }
  out.write (reinterpret_cast<char const*> (bytes.data ()), static_cast<std::streamsize> (bytes.size ()));
  if (!out) {
    throw io_error ("write to '" + path + "' failed");
  }
}

/// WAV when the file starts with a RIFF header, headerless s24le otherwise.
inline Audio read_audio (std::string const& path) {
  std::vector<std::uint8_t> const bytes = read_file (path);
  if (bytes.size () >= 4 && std::string_view{reinterpret_cast<char const*> (bytes.data ()), 4} == "RIFF") {
    return decode_wav (bytes);
  }
  return {0, decode_pcm (bytes)};
}

} // namespace bfo::wav

#endif // BFO_WAV_HPP
