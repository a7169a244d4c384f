// bfo: render patches, measure audio, and reproduce the published tables.
//
//   bfo render  --patch p.txt --duration 1 --out out.wav [--format wav24|raw-pcm|pdm-bits] [--commands regs.bin]
//   bfo measure --kind thdn --input out.wav --f0 1000
//   bfo measure --kind sinad --input test.wav --reference ref.wav
//   bfo measure --kind psd --input out.wav --csv spectrum.csv
//   bfo table   --kind table2

#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "bfo/engine.hpp"
#include "bfo/metrology.hpp"
#include "bfo/patch.hpp"
#include "bfo/regmap.hpp"
#include "bfo/reproduce.hpp"
#include "bfo/wav.hpp"

namespace {

using namespace bfo;

struct RenderArgs {
  std::string patch;
  std::size_t samples = 0;
  double duration = 0.0;
  std::string out;
  std::string format = "wav24";
  std::string commands;
};

struct MeasureArgs {
  std::string kind;
  std::string input;
  std::string reference;
  double f0 = 0.0;
  std::string csv;
  std::string channel = "left";
  double sample_rate = 0.0;
  bool pdm = false;
  std::size_t skip = 0;
};

int run_render (RenderArgs const& a) {
  patch::Patch const p = patch::load (a.patch);
  engine::ChipState chip = patch::build (p);
  if (!a.commands.empty ()) {
    std::vector<std::uint8_t> const bytes = wav::read_file (a.commands);
    std::vector<regmap::RegisterCommand> const cmds = regmap::parse_stream (bytes);
    regmap::apply (chip, cmds);
  }
  std::size_t const count =
      a.samples != 0 ? a.samples : static_cast<std::size_t> (std::llround (a.duration * p.sample_rate));
  if (count == 0) {
    throw usage_error ("nothing to render: give --samples or --duration");
  }
  switch (wav::parse_format (a.format)) {
  case wav::OutputFormat::wav24: {
    auto const frames = engine::render (chip, count);
    wav::write_file (a.out, wav::encode_wav (frames, static_cast<std::uint32_t> (std::llround (p.sample_rate))));
    break;
  }
  case wav::OutputFormat::raw_pcm: {
    auto const frames = engine::render (chip, count);
    wav::write_file (a.out, wav::encode_pcm (frames));
    break;
  }
  case wav::OutputFormat::pdm_bits: {
    engine::PdmStreams const s = engine::pdm_stream (chip, count);
    wav::write_file (a.out, wav::encode_pdm (s));
    std::printf ("bits per channel: %zu\n", s.bits);
    break;
  }
  }
  std::printf ("rendered %zu samples to %s (%s)\n", count, a.out.c_str (), a.format.c_str ());
  if (chip.clip_flags != 0) {
    std::printf ("clip flags: 0x%03X\n", chip.clip_flags);
  }
  return 0;
}

struct Signal {
  std::vector<double> samples;
  double sample_rate = 0.0;
};

Signal load_signal (MeasureArgs const& a, std::string const& path) {
  bool const right = a.channel == "right";
  if (!right && a.channel != "left") {
    throw usage_error ("--channel must be left or right");
  }
  Signal s;
  if (a.pdm) {
    engine::PdmStreams const streams = wav::decode_pdm (wav::read_file (path));
    s.sample_rate = a.sample_rate > 0.0 ? a.sample_rate : reproduce::sample_rate;
    metrology::PdmDecodeConfig cfg;
    cfg.bit_rate = s.sample_rate * static_cast<double> (engine::pdm_oversampling);
    s.samples = metrology::pdm_decode (right ? streams.right : streams.left, streams.bits, cfg);
  } else {
    wav::Audio const audio = wav::read_audio (path);
    s.sample_rate = a.sample_rate > 0.0 ? a.sample_rate
                    : audio.sample_rate != 0 ? static_cast<double> (audio.sample_rate)
                                             : reproduce::sample_rate;
    s.samples = metrology::channel (audio.frames, right);
  }
  if (a.skip >= s.samples.size ()) {
    throw usage_error ("--skip leaves no samples");
  }
  s.samples.erase (s.samples.begin (), s.samples.begin () + static_cast<std::ptrdiff_t> (a.skip));
  return s;
}

void print_report (metrology::QualityReport const& r) {
  bool const thdn = r.kind == metrology::MetricKind::thdn;
  std::printf ("%-8s %12s %14s %14s %10s %8s\n", "metric", "value", "f0_hz", "bandwidth_hz", "samples", "capture");
  char f0[32] = "-";
  char capture[16] = "-";
  if (thdn) {
    std::snprintf (f0, sizeof f0, "%.3f", r.fundamental_hz);
    std::snprintf (capture, sizeof capture, "+/-%d", r.capture_half_width);
  }
  char bandwidth[32] = "-";
  if (r.bandwidth_hz > 0.0) {
    std::snprintf (bandwidth, sizeof bandwidth, "%.1f", r.bandwidth_hz);
  }
  std::printf ("%-8s %12s %14s %14s %10zu %8s\n", thdn ? "THD+N" : "SINAD", r.value_text ().c_str (), f0, bandwidth,
               r.sample_count, capture);
}

int run_measure (MeasureArgs const& a) {
  Signal const in = load_signal (a, a.input);
  if (a.kind == "thdn") {
    if (!(a.f0 > 0.0)) {
      throw usage_error ("thdn needs --f0");
    }
    print_report (metrology::thdn (in.samples, a.f0, in.sample_rate));
  } else if (a.kind == "sinad") {
    if (a.reference.empty ()) {
      throw usage_error ("sinad needs --reference");
    }
    Signal const ref = load_signal (a, a.reference);
    metrology::QualityReport r = metrology::sinad_vs_reference (in.samples, ref.samples);
    r.bandwidth_hz = in.sample_rate / 2.0;
    print_report (r);
  } else if (a.kind == "psd") {
    metrology::SpectrumEstimate const est = metrology::welch_psd (in.samples, {}, in.sample_rate);
    if (a.csv.empty ()) {
      metrology::write_csv (std::cout, est);
    } else {
      std::ofstream out (a.csv, std::ios::binary | std::ios::trunc);
      if (!out) {
        throw wav::io_error ("cannot open '" + a.csv + "' for writing");
      }
      metrology::write_csv (out, est);
      std::printf ("%zu bins, %zu segments, peak %.3f Hz -> %s\n", est.power.size (), est.segments,
                   est.frequency_hz[est.peak_bin], a.csv.c_str ());
    }
  } else {
    throw usage_error ("--kind must be thdn, sinad or psd");
  }
  return 0;
}

int run_table (std::string const& kind) {
  std::vector<reproduce::Row> rows;
  bool extra_ok = true;
  if (kind == "table1-digital") {
    rows = reproduce::table1_digital ();
  } else if (kind == "table2") {
    rows = reproduce::table2 ();
  } else {
    throw usage_error ("--kind must be table1-digital or table2");
  }
  std::printf ("%-22s %12s %12s %10s  %-6s %s\n", "row", "measured_db", "published_db", "tol_db", "result", "note");
  bool all = true;
  for (reproduce::Row const& r : rows) {
    char published[32] = "-";
    char tol[32] = "-";
    if (r.published_db) {
      std::snprintf (published, sizeof published, "%.2f", *r.published_db);
      std::snprintf (tol, sizeof tol, "%.1f", r.tolerance_db);
    }
    std::printf ("%-22s %12.2f %12s %10s  %-6s %s\n", r.label.c_str (), r.measured_db, published, tol,
                 r.published_db ? (r.pass () ? "pass" : "FAIL") : "-", r.note.c_str ());
    all = all && r.pass ();
  }
  if (kind == "table1-digital") {
    double const gap = rows[1].measured_db - rows[0].measured_db;
    extra_ok = gap >= reproduce::min_bfo_advantage_db;
    std::printf ("%-22s %12.2f %12s %10s  %-6s %s\n", "BFO advantage", gap, ">= 38.00", "-", extra_ok ? "pass" : "FAIL",
                 "IIR minus BFO");
  }
  return all && extra_ok ? 0 : 1;
}

} // namespace

int main (int argc, char** argv) {
  CLI::App app{"Big Fourier Oscillator emulator"};
  app.require_subcommand (1);

  RenderArgs ra;
  CLI::App* render = app.add_subcommand ("render", "Render a patch to WAV, raw PCM or a PDM bitstream");
  render->add_option ("--patch", ra.patch, "Patch file")->required ()->check (CLI::ExistingFile);
  auto* samples = render->add_option ("--samples", ra.samples, "Number of output samples");
  auto* duration = render->add_option ("--duration", ra.duration, "Duration in seconds");
  samples->excludes (duration);
  render->add_option ("--out", ra.out, "Output path")->required ();
  render->add_option ("--format", ra.format, "wav24, raw-pcm or pdm-bits")
      ->check (CLI::IsMember ({"wav24", "raw-pcm", "pdm-bits"}));
  render->add_option ("--commands", ra.commands, "Register-command stream applied after the patch")
      ->check (CLI::ExistingFile);

  MeasureArgs ma;
  CLI::App* measure = app.add_subcommand ("measure", "THD+N, SINAD or PSD of a rendered file");
  measure->add_option ("--kind", ma.kind, "thdn, sinad or psd")->required ()->check (CLI::IsMember ({"thdn", "sinad", "psd"}));
  measure->add_option ("--input", ma.input, "WAV or raw s24le stereo file")->required ()->check (CLI::ExistingFile);
  measure->add_option ("--reference", ma.reference, "Reference file for sinad")->check (CLI::ExistingFile);
  measure->add_option ("--f0", ma.f0, "Fundamental in Hz for thdn");
  measure->add_option ("--csv", ma.csv, "PSD output path (default: standard output)");
  measure->add_option ("--channel", ma.channel, "left or right")->check (CLI::IsMember ({"left", "right"}));
  measure->add_option ("--sample-rate", ma.sample_rate, "Override the sample rate (Hz)");
  measure->add_flag ("--pdm", ma.pdm, "Inputs are pdm-bits files; decode before measuring");
  measure->add_option ("--skip", ma.skip, "Discard this many leading samples");

  std::string table_kind;
  CLI::App* table = app.add_subcommand ("table", "Reproduce the published digital measurements");
  table->add_option ("--kind", table_kind, "table1-digital or table2")
      ->required ()
      ->check (CLI::IsMember ({"table1-digital", "table2"}));

  CLI11_PARSE (app, argc, argv);

  try {
    if (*render) {
      if (ra.samples == 0 && !(ra.duration > 0.0)) {
        throw usage_error ("render needs --samples or --duration");
      }
      return run_render (ra);
    }
    if (*measure) {
      return run_measure (ma);
    }
    return run_table (table_kind);
  } catch (patch::patch_error const& e) {
    std::fprintf (stderr, "bfo: patch %s: %s\n", ra.patch.c_str (), e.what ());
  } catch (std::exception const& e) {
    std::fprintf (stderr, "bfo: %s\n", e.what ());
  }
  return 2;
}
