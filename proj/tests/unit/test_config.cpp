#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "spdc/config.hpp"
#include "spdc/errors.hpp"

using namespace spdc;
using namespace spdc::config;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("spdc_config_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

int error_line(const std::string& text) {
  try {
    build(parse_string(text, "t.conf"));
  } catch (const ConfigError& e) {
    CHECK(e.source() == "t.conf");
    return e.line();
  }
  return -1;
}

}  // namespace

TEST_CASE("parse errors carry file and line") {
  CHECK(error_line("[device]\ng_pe = 1\nbogus = 3\n") == 3);
  CHECK(error_line("\n[nosuch]\n") == 2);
  CHECK(error_line("g_pe = 1\n") == 1);
  CHECK(error_line("[device]\ng_pe\n") == 2);
  CHECK(error_line("[device]\ng_pe = 1\n# note\ng_pe = 2\n") == 4);
  CHECK(error_line("[pulse]\nn_a_peak = lots\n") == 2);
  CHECK(error_line("[pulse]\n\nt_p_fwhm = -1\n") == 3);
  CHECK(error_line("[simulation]\nfock_dim = 2.5\n") == 2);
  CHECK(error_line("[simulation]\nnoise_clicks = maybe\n") == 2);
  CHECK(error_line("[device\n") == 1);

  try {
    parse_string("[device]\nwrong = 1\n", "x.conf");
    FAIL("no throw");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("x.conf:2") == 0);
    CHECK(std::string(e.what()).find("wrong") != std::string::npos);
  }
}

TEST_CASE("comments and values") {
  const auto t = parse_string("; head\n[pulse]   # trailing\nn_a_peak = 2.5 # peak\nt_center=1e-7\n", "t.conf");
  const auto cfg = build(t);
  CHECK(cfg.pulse.n_a_peak == 2.5);
  CHECK(cfg.pulse.t_center == 1e-7);
  CHECK(t.find("pulse.n_a_peak")->line == 3);
  // Defaults survive for absent keys.
  CHECK(cfg.pulse.t_p_fwhm == 160e-9);
  CHECK(cfg.tomo.bootstrap == 2000);
}

TEST_CASE("includes resolve relative to the including file") {
  const auto d = scratch_dir("include");
  fs::create_directories(d / "sub");
  write(d / "sub" / "base.conf", "[pulse]\nn_a_peak = 3\n[fit]\ndetuned_trace = traces.csv\nresonant_trace = ../res.csv\n");
  write(d / "top.conf", "include = sub/base.conf\n[pulse]\nn_a_peak = 5\n");
  const auto cfg = build(parse_file((d / "top.conf").string()));
  CHECK(cfg.pulse.n_a_peak == 5.0);
  CHECK(fs::path(cfg.fit.detuned_trace) == (d / "sub" / "traces.csv").lexically_normal());
  CHECK(fs::path(cfg.fit.resonant_trace) == (d / "res.csv").lexically_normal());

  write(d / "a.conf", "include = b.conf\n");
  write(d / "b.conf", "[pulse]\ninclude = a.conf\n");
  try {
    parse_file((d / "a.conf").string());
    FAIL("no throw");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("cycle") != std::string::npos);
    CHECK(e.line() == 2);
  }
  CHECK_THROWS_AS(parse_file((d / "nothere.conf").string()), ConfigError);
  write(d / "missing.conf", "include = gone.conf\n");
  CHECK_THROWS_AS(parse_file((d / "missing.conf").string()), ConfigError);
  fs::remove_all(d);
}

TEST_CASE("overrides and cross-field checks") {
  auto t = parse_string("[tomo]\nchunks = 2\nchunk_gains = 1, 2\n", "t.conf");
  t.set("tomo.bootstrap", "300");
  t.set("run.seed", "9");
  const auto cfg = build(t);
  CHECK(cfg.tomo.bootstrap == 300);
  CHECK(cfg.tomo.chunk_gains == std::vector<double>{1.0, 2.0});
  REQUIRE(cfg.seed);
  CHECK(*cfg.seed == 9);
  CHECK_THROWS_AS(t.set("tomo.nothing", "1"), ConfigError);

  CHECK(error_line("[tomo]\nchunks = 3\nchunk_gains = 1, 2\n") == 3);
  CHECK_THROWS_AS(build(parse_string("[baths]\nmode = schedule\n", "t.conf")), ConfigError);
  CHECK_THROWS_AS(build(parse_string("[tomo]\nsource = files\n", "t.conf")), ConfigError);
  CHECK_THROWS_AS(build(parse_string("[tomo]\nsource = tape\n", "t.conf")), ConfigError);
}

TEST_CASE("hash is stable under formatting and ignores seed and output") {
  const auto a = build(parse_string("[pulse]\nn_a_peak = 0.8\n[sweep]\npowers = 1,2\n", "a.conf"));
  const auto b = build(parse_string(
      "# other layout\n[sweep]\npowers = 1.0, 2e0\n[pulse]\nn_a_peak=8e-1\n[run]\nseed = 4\nout = elsewhere\n",
      "b.conf"));
  const auto c = build(parse_string("[pulse]\nn_a_peak = 0.81\n[sweep]\npowers = 1,2\n", "c.conf"));
  CHECK(a.hash.size() == 16);
  CHECK(a.hash == b.hash);
  CHECK(a.hash != c.hash);
  CHECK(canonical(parse_string("[pulse]\nn_a_peak = 8e-1\n", "x")) ==
        canonical(parse_string("[pulse]\nn_a_peak = 0.80\n", "y")));
  CHECK(canonical(parse_string("[run]\nseed = 1\n", "x")).empty());
  // FNV-1a reference values.
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
}

TEST_CASE("shipped defaults") {
  const auto cfg = build(parse_file(SPDC_TEST_DEFAULT_CONFIG));
  CHECK(cfg.device.g_pe == 800e3);
  CHECK(cfg.pulse.n_a_peak == 0.8);
  CHECK(cfg.tomo.conditional == 91000);
  CHECK(cfg.sweep.exponent == 0.58);
  CHECK(cfg.simulation.delays().size() == 81);
  const auto budget = tomo::herald_budget(cfg.budget);
  CHECK(budget.p_click == doctest::Approx(2.7e-6).epsilon(0.01));
  const auto opt = cfg.simulation_options(budget);
  CHECK(opt.dcr_fraction == doctest::Approx(budget.dcr));
  CHECK(opt.dims.total() == 100);
}
