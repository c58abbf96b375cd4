#pragma once

// Run configuration: a flat "[section] key = value" text format with
// `include = path` directives, a fixed schema (unknown keys are rejected
// with file:line) and a content hash recorded in every output.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "spdc/engine.hpp"
#include "spdc/temporal.hpp"
#include "spdc/tomography.hpp"

namespace spdc::config {

struct Entry {
  std::string value;
  std::string source;  // file name, or "command line"
  int line = 0;
};

/// Raw key/value table keyed by "section.key", after includes are expanded.
class ConfigTable {
 public:
  /// Later assignments win; a key repeated within one file is an error.
  void assign(const std::string& section, const std::string& key, Entry entry);
  /// Override from outside any file (command-line flags).
  void set(const std::string& dotted_key, const std::string& value);

  const Entry* find(const std::string& dotted_key) const;
  const std::map<std::string, Entry>& entries() const noexcept { return entries_; }

 private:
  std::map<std::string, Entry> entries_;
};

/// Parses a config file, expanding includes relative to the including file.
ConfigTable parse_file(const std::string& path);
/// Parses text; `name` labels errors and `base_dir` resolves includes.
ConfigTable parse_string(const std::string& text, const std::string& name, const std::string& base_dir = ".");

enum class BathMode { constant, schedule };
enum class TomoSource { simulation, thermal, files };

struct SimulationSpec {
  int fock_dim = 10;
  std::size_t jump_samples = 21;
  std::size_t grid_t = 200;
  std::size_t grid_tau = 200;
  double delay_start = -0.4e-6;
  double delay_stop = 1.6e-6;
  double delay_step = 25e-9;
  bool noise_clicks = true;  // apply the budget's dcr and leak fractions

  std::vector<double> delays() const;
};

struct TomoSpec {
  TomoSource source = TomoSource::simulation;
  double n_thermal = 0.3;
  std::size_t conditional = 91000;
  std::size_t unconditional = 1400000;
  std::size_t noise = 1400000;
  std::size_t chunks = 1;
  double n_add = 2.5;
  double gain = 1.0;
  std::vector<double> chunk_gains;
  std::size_t bootstrap = 2000;
  bool write_samples = false;
  std::vector<std::string> conditional_files;
  std::vector<std::string> unconditional_files;
  std::vector<std::string> noise_files;
};

struct CalibrationSpec {
  double r = 0.0;
  double r_o = 0.0;
  double p_in = 0.0;
  double p_det = 0.0;
  double kappa_e_b = 0.0;
};

struct SweepSpec {
  std::vector<double> powers{0.8, 2.0, 5.0, 12.0};
  double exponent = 0.58;
};

struct FitSpec {
  std::string detuned_trace;  // empty: synthesize from the configured baths
  std::string resonant_trace;
  std::size_t knots = 8;
  double first_offset = 200e-9;
  double horizon = 2.0e-6;
  double trace_noise = 0.0;  // relative Gaussian noise on synthesized traces
  std::size_t max_sweeps = 400;
};

struct RunConfig {
  model::SystemParams device;
  model::PulseProfile pulse;
  BathMode bath_mode = BathMode::constant;
  double n_th_b = 0.0;
  double n_th_c = 0.0;
  std::string schedule_file;
  double t_g = 230e-9;
  double alpha = 2.0;
  double phi_o = 0.0;
  double window = 5.0;
  tomo::HeraldInputs budget;
  SimulationSpec simulation;
  TomoSpec tomo;
  CalibrationSpec calibration;
  SweepSpec sweep;
  FitSpec fit;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  std::string hash;  // 16 hex digits

  engine::BathSchedule baths() const;
  temporal::TemporalEnvelope envelope() const;
  temporal::SimulationOptions simulation_options(const tomo::HeraldBudget& budget) const;
};

struct SweepPoint {
  double n_a = 0.0;
  double bath_scale = 0.0;  // (n_a / pulse.n_a_peak)^exponent
  double noise_fraction = 0.0;
  double tau_o = 0.0;
  double g2_ac = 0.0;
};

/// g2_AC(tau_o) at each peak pump occupation, baths scaled by the sweep power
/// law relative to pulse.n_a_peak. Pair, thermal and leakage click rates
/// follow the pump; dark counts do not.
std::vector<SweepPoint> power_sweep(const RunConfig& cfg, const std::vector<double>& powers);

/// Validates types and ranges and fills a RunConfig. ConfigError carries the
/// source and line of the offending entry.
RunConfig build(const ConfigTable& table);

/// Canonical "section.key = value" listing used for the hash (run.seed and
/// run.out excluded).
std::string canonical(const ConfigTable& table);
/// 64-bit FNV-1a of `text` as 16 lowercase hex digits.
std::string fnv1a_hex(const std::string& text);

}  // namespace spdc::config
