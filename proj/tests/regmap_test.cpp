#include <gtest/gtest.h>

#include <cstdint>
#include <random>
#include <vector>

#include "bfo/engine.hpp"
#include "bfo/metrology.hpp"
#include "bfo/regmap.hpp"

using namespace bfo;
using namespace bfo::regmap;

TEST (Apply, DeltaRegisterSetsBaseFrequency) {
  engine::ChipState chip;
  apply (chip, {config_address (0, reg::delta), 44739243U});
  EXPECT_NEAR (chip.oscillator (0, 0).delta.to_real () * 96000.0, 1000.0, 1e-4);
  apply (chip, {config_address (5, reg::delta), 7U});
  EXPECT_EQ (chip.oscillator (1, 1).delta.raw (), 7U);
}

TEST (Apply, CoefficientWordsReadBack) {
  engine::ChipState chip;
  std::mt19937 rng{21};
  for (int i = 0; i < 5000; ++i) {
    std::size_t const osc = rng () % 8;
    std::size_t const k = rng () % 1024;
    std::size_t const word = rng () % 3;
    std::uint32_t const data = rng ();
    std::uint16_t const addr = partial_address (osc, k, word);
    write (chip, addr, data);
    ASSERT_EQ (read (chip, addr), data);
  }
}

TEST (Apply, ConfigRegistersReadBack) {
  engine::ChipState chip;
  std::vector<std::pair<std::uint16_t, std::uint32_t>> const writes{
      {config_address (3, reg::delta), 0x1234'5678U},
      {config_address (3, reg::band_hp), 0x0100'0000U},
      {config_address (3, reg::band_lp), 0x7000'0000U},
      {config_address (3, reg::subwave_ctrl), 1U},
      {config_address (3, reg::subwave_range + 0), (1U << 16) | 10U},
      {config_address (3, reg::subwave_range + 1), (11U << 16) | 1024U},
      {config_address (3, reg::subwave_weight + 1), 0xC000'0000U},
      {config_address (3, reg::crush_mask), 0xFFU},
      {config_address (3, reg::rate_period), 5U},
      {config_address (3, reg::gain), 0x2000'0000U},
      {mix_address (1, 0), 0x4000'0000U},
  };
  for (auto const& [a, d] : writes) {
    write (chip, a, d);
  }
  for (auto const& [a, d] : writes) {
    EXPECT_EQ (read (chip, a), d) << std::hex << a;
  }
  engine::OscillatorState const& osc = chip.oscillator (0, 3);
  EXPECT_TRUE (osc.subwave_mode);
  EXPECT_DOUBLE_EQ (osc.subwaves[1].weight.to_real (), -1.0);
  EXPECT_DOUBLE_EQ (osc.gain.to_real (), 0.5);
  EXPECT_DOUBLE_EQ (chip.mix[1][0].to_real (), 1.0);
  EXPECT_EQ (osc.rate_period, 5U);
}

TEST (Apply, UnmappedAddressLeavesChipUnchanged) {
  engine::ChipState chip;
  chip.oscillator (0, 0).partials = metrology::preset (metrology::Waveform::sine);
  engine::ChipState const before = chip;
  for (std::uint16_t addr : {std::uint16_t{0xFFFF}, std::uint16_t{0x0C0F}, std::uint16_t{0x7FFF}, std::uint16_t{0x8005},
                             std::uint16_t{0x9000}}) {
    EXPECT_THROW (apply (chip, {addr, 1U}), address_error) << std::hex << addr;
    EXPECT_THROW (read (chip, addr), address_error);
  }
  EXPECT_EQ (chip, before);
  try {
    write (chip, 0xFFFF, 0);
  } catch (address_error const& e) {
    EXPECT_EQ (e.address, 0xFFFF);
    EXPECT_STREQ (e.what (), "unmapped address 0xFFFF");
  }
}

TEST (Apply, ClipFlagsAreReadOnlyAndClearOnRead) {
  engine::ChipState chip;
  EXPECT_THROW (write (chip, reg::clip_flags, 0), access_error);
  chip.oscillator (0, 0).partials.set (0, {engine::Coefficient::from_real (0.6), {}, engine::Multiplier::from_real (1)});
  chip.oscillator (0, 1).partials.set (0, {engine::Coefficient::from_real (0.6), {}, engine::Multiplier::from_real (1)});
  engine::chip_sample (chip);
  EXPECT_EQ (read (chip, reg::clip_flags), engine::clip::voice (0));
  EXPECT_EQ (read (chip, reg::clip_flags), 0U);
}

TEST (Apply, RejectedValuesLeaveChipUnchanged) {
  engine::ChipState chip;
  write (chip, config_address (0, reg::subwave_range), (1U << 16) | 10U);
  engine::ChipState const before = chip;
  EXPECT_THROW (write (chip, config_address (0, reg::subwave_range + 1), (5U << 16) | 20U), value_error);
  EXPECT_THROW (write (chip, config_address (0, reg::rate_period), 0U), value_error);
  EXPECT_EQ (chip, before);
}

TEST (Apply, RatePeriodWriteResetsCounter) {
  engine::ChipState chip;
  write (chip, config_address (0, reg::rate_period), 3U);
  engine::chip_sample (chip);
  EXPECT_EQ (chip.oscillator (0, 0).rate_counter, 1U);
  write (chip, config_address (0, reg::rate_period), 3U);
  EXPECT_EQ (chip.oscillator (0, 0).rate_counter, 0U);
}

TEST (ParseStream, Examples) {
  std::vector<std::uint8_t> const zeros (6, 0);
  EXPECT_EQ (parse_stream (zeros), (std::vector<RegisterCommand>{{0, 0}}));
  std::vector<std::uint8_t> const one{0x00, 0x01, 0x00, 0x00, 0x00, 0x2A};
  EXPECT_EQ (parse_stream (one), (std::vector<RegisterCommand>{{1, 42}}));
  std::vector<std::uint8_t> const seven (7, 0);
  try {
    parse_stream (seven);
    FAIL () << "expected framing_error";
  } catch (framing_error const& e) {
    EXPECT_EQ (e.offset, 6U);
  }
  EXPECT_TRUE (parse_stream ({}).empty ());
}

TEST (ParseStream, BigEndian) {
  std::vector<RegisterCommand> const cmds{{0xABCD, 0x0123'4567U}};
  EXPECT_EQ (serialize (cmds), (std::vector<std::uint8_t>{0xAB, 0xCD, 0x01, 0x23, 0x45, 0x67}));
}

TEST (ParseStream, RoundTrip) {
  std::mt19937 rng{22};
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<RegisterCommand> cmds (rng () % 300);
    for (auto& c : cmds) {
      c = {static_cast<std::uint16_t> (rng ()), static_cast<std::uint32_t> (rng ())};
    }
    std::vector<std::uint8_t> const bytes = serialize (cmds);
    ASSERT_EQ (bytes.size (), cmds.size () * command_bytes);
    ASSERT_EQ (parse_stream (bytes), cmds);
  }
}

TEST (ReprogramTime, Examples) {
  EXPECT_NEAR (reprogram_time (3072, 13e6), 0.011342, 1e-6);
  EXPECT_LT (reprogram_time (3072, 13e6), 0.012);
  EXPECT_EQ (reprogram_time (0, 13e6), 0.0);
  EXPECT_DOUBLE_EQ (reprogram_time (1, 48.0), 1.0);
  EXPECT_THROW (reprogram_time (1, 0.0), usage_error);
  EXPECT_EQ (wavetable_commands (0, engine::PartialTable{}).size (), 3072U);
}

TEST (Stream, WavetableEqualsDirectConfiguration) {
  for (metrology::Waveform w : {metrology::Waveform::sawtooth, metrology::Waveform::super_saw}) {
    engine::PartialTable const table = metrology::preset (w, 200);
    engine::ChipState direct;
    direct.oscillator (1, 2).partials = table;
    direct.oscillator (1, 2).delta = engine::Turns::from_real (0.004);

    std::vector<RegisterCommand> cmds = wavetable_commands (6, table);
    cmds.push_back ({config_address (6, reg::delta), static_cast<std::uint32_t> (direct.oscillator (1, 2).delta.raw ())});
    engine::ChipState streamed;
    regmap::apply (streamed, parse_stream (serialize (cmds)));

    EXPECT_EQ (streamed, direct);
    EXPECT_EQ (engine::render (streamed, 300), engine::render (direct, 300));
  }
}
