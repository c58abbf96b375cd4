#include "spdc/config.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "spdc/bathfit.hpp"
#include "spdc/io.hpp"

namespace spdc::config {

namespace fs = std::filesystem;

namespace {

enum class Kind { number, integer, boolean, text, path, number_list, path_list };

struct Key {
  const char* section;
  const char* name;
  Kind kind;
};

// Schema order is also the canonical (hash) order.
const std::vector<Key>& schema() {
  static const std::vector<Key> keys = {
      {"device", "g_om", Kind::number},
      {"device", "g_pe", Kind::number},
      {"device", "kappa_e_a", Kind::number},
      {"device", "kappa_i_a", Kind::number},
      {"device", "kappa_i_b", Kind::number},
      {"device", "kappa_e_c", Kind::number},
      {"device", "kappa_i_c", Kind::number},
      {"device", "omega_b", Kind::number},
      {"device", "omega_c", Kind::number},
      {"device", "delta_a", Kind::number},
      {"device", "n_th_w", Kind::number},
      {"pulse", "t_p_fwhm", Kind::number},
      {"pulse", "n_a_peak", Kind::number},
      {"pulse", "t_center", Kind::number},
      {"pulse", "rep_period", Kind::number},
      {"baths", "mode", Kind::text},
      {"baths", "n_th_b", Kind::number},
      {"baths", "n_th_c", Kind::number},
      {"baths", "schedule", Kind::path},
      {"envelope", "t_g", Kind::number},
      {"envelope", "alpha", Kind::number},
      {"envelope", "phi_o", Kind::number},
      {"envelope", "window", Kind::number},
      {"budget", "signal_rate", Kind::number},
      {"budget", "thermal_rate", Kind::number},
      {"budget", "dcr", Kind::number},
      {"budget", "leak_rate", Kind::number},
      {"budget", "gate", Kind::number},
      {"budget", "rep_rate", Kind::number},
      {"simulation", "fock_dim", Kind::integer},
      {"simulation", "jump_samples", Kind::integer},
      {"simulation", "grid_t", Kind::integer},
      {"simulation", "grid_tau", Kind::integer},
      {"simulation", "delay_start", Kind::number},
      {"simulation", "delay_stop", Kind::number},
      {"simulation", "delay_step", Kind::number},
      {"simulation", "noise_clicks", Kind::boolean},
      {"tomo", "source", Kind::text},
      {"tomo", "n_thermal", Kind::number},
      {"tomo", "conditional", Kind::integer},
      {"tomo", "unconditional", Kind::integer},
      {"tomo", "noise", Kind::integer},
      {"tomo", "chunks", Kind::integer},
      {"tomo", "n_add", Kind::number},
      {"tomo", "gain", Kind::number},
      {"tomo", "chunk_gains", Kind::number_list},
      {"tomo", "bootstrap", Kind::integer},
      {"tomo", "write_samples", Kind::boolean},
      {"tomo", "conditional_files", Kind::path_list},
      {"tomo", "unconditional_files", Kind::path_list},
      {"tomo", "noise_files", Kind::path_list},
      {"calibration", "r", Kind::number},
      {"calibration", "r_o", Kind::number},
      {"calibration", "p_in", Kind::number},
      {"calibration", "p_det", Kind::number},
      {"calibration", "kappa_e_b", Kind::number},
      {"sweep", "powers", Kind::number_list},
      {"sweep", "exponent", Kind::number},
      {"fit", "detuned_trace", Kind::path},
      {"fit", "resonant_trace", Kind::path},
      {"fit", "knots", Kind::integer},
      {"fit", "first_offset", Kind::number},
      {"fit", "horizon", Kind::number},
      {"fit", "trace_noise", Kind::number},
      {"fit", "max_sweeps", Kind::integer},
      {"run", "seed", Kind::integer},
      {"run", "out", Kind::path},
  };
  return keys;
}

const Key* lookup(const std::string& section, const std::string& name) {
  for (const auto& k : schema()) {
    if (section == k.section && name == k.name) return &k;
  }
  return nullptr;
}

bool known_section(const std::string& section) {
  return std::any_of(schema().begin(), schema().end(), [&](const Key& k) { return section == k.section; });
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string strip_comment(const std::string& line) {
  const std::string t = trim(line);
  if (t.empty() || t[0] == '#' || t[0] == ';') return {};
  // Trailing comments need a blank before the '#'.
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (t[i] == '#' && (t[i - 1] == ' ' || t[i - 1] == '\t')) return trim(t.substr(0, i));
  }
  return t;
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

struct Parser {
  ConfigTable table;
  std::vector<std::string> stack;  // canonical paths being parsed

  void parse(std::istream& in, const std::string& name, const fs::path& base_dir) {
    std::string section;
    std::set<std::string> seen;
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
      ++line_no;
      const std::string line = strip_comment(raw);
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']') throw ConfigError("malformed section header", name, line_no);
        section = trim(line.substr(1, line.size() - 2));
        if (!known_section(section)) throw ConfigError("unknown section [" + section + "]", name, line_no);
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw ConfigError("expected 'key = value'", name, line_no);
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (key.empty()) throw ConfigError("empty key", name, line_no);
      if (key == "include") {
        if (value.empty()) throw ConfigError("include needs a path", name, line_no);
        include(base_dir / value, name, line_no);
        continue;
      }
      if (section.empty()) throw ConfigError("key '" + key + "' outside any section", name, line_no);
      const Key* k = lookup(section, key);
      if (!k) throw ConfigError("unknown key '" + key + "' in [" + section + "]", name, line_no);
      const std::string dotted = section + "." + key;
      if (!seen.insert(dotted).second) throw ConfigError("duplicate key '" + dotted + "'", name, line_no);
      std::string v = value;
      if (k->kind == Kind::path && !v.empty()) v = resolve(base_dir, v);
      if (k->kind == Kind::path_list) {
        std::string joined;
        for (const auto& p : split_list(v)) joined += (joined.empty() ? "" : ",") + resolve(base_dir, p);
        v = joined;
      }
      table.assign(section, key, {v, name, line_no});
    }
  }

  static std::string resolve(const fs::path& base, const std::string& p) {
    const fs::path path(p);
    return path.is_absolute() ? p : (base / path).lexically_normal().string();
  }

  void include(const fs::path& path, const std::string& from, int line) {
    std::error_code ec;
    const auto canon = fs::weakly_canonical(path, ec).string();
    if (std::find(stack.begin(), stack.end(), canon) != stack.end()) {
      throw ConfigError("include cycle through " + path.string(), from, line);
    }
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open included file " + path.string(), from, line);
    stack.push_back(canon);
    parse(in, path.string(), path.parent_path());
    stack.pop_back();
  }
};

double to_number(const Entry& e, const std::string& key) {
  try {
    return io::parse_number(e.value, key);
  } catch (const DataError&) {
    throw ConfigError("'" + key + "' expects a number, got '" + e.value + "'", e.source, e.line);
  }
}

long to_integer(const Entry& e, const std::string& key) {
  try {
    return io::parse_integer(e.value, key);
  } catch (const DataError&) {
    throw ConfigError("'" + key + "' expects an integer, got '" + e.value + "'", e.source, e.line);
  }
}

bool to_bool(const Entry& e, const std::string& key) {
  if (e.value == "true" || e.value == "yes" || e.value == "1") return true;
  if (e.value == "false" || e.value == "no" || e.value == "0") return false;
  throw ConfigError("'" + key + "' expects true or false, got '" + e.value + "'", e.source, e.line);
}

std::string normalized(const Entry& e, const Key& k, const std::string& key) {
  switch (k.kind) {
    case Kind::number:
      return io::format_number(to_number(e, key));
    case Kind::integer:
      return std::to_string(to_integer(e, key));
    case Kind::boolean:
      return to_bool(e, key) ? "true" : "false";
    case Kind::number_list: {
      std::string out;
      for (const auto& item : split_list(e.value)) {
        out += (out.empty() ? "" : ",") + io::format_number(to_number({item, e.source, e.line}, key));
      }
      return out;
    }
    default:
      return e.value;
  }
}

// Typed readers that leave the default in place when the key is absent.
class Reader {
 public:
  explicit Reader(const ConfigTable& t) : t_(t) {}

  void number(const std::string& key, double& out, bool positive = false, bool non_negative = false) {
    if (const Entry* e = t_.find(key)) {
      const double v = to_number(*e, key);
      if (!std::isfinite(v)) throw ConfigError("'" + key + "' must be finite", e->source, e->line);
      if (positive && !(v > 0.0)) throw ConfigError("'" + key + "' must be positive", e->source, e->line);
      if (non_negative && v < 0.0) throw ConfigError("'" + key + "' must be >= 0", e->source, e->line);
      out = v;
    }
  }

  template <class T>
  void integer(const std::string& key, T& out, long min_value) {
    if (const Entry* e = t_.find(key)) {
      const long v = to_integer(*e, key);
      if (v < min_value) {
        throw ConfigError("'" + key + "' must be >= " + std::to_string(min_value), e->source, e->line);
      }
      out = static_cast<T>(v);
    }
  }

  void boolean(const std::string& key, bool& out) {
    if (const Entry* e = t_.find(key)) out = to_bool(*e, key);
  }

  void text(const std::string& key, std::string& out) {
    if (const Entry* e = t_.find(key)) out = e->value;
  }

  void numbers(const std::string& key, std::vector<double>& out) {
    if (const Entry* e = t_.find(key)) {
      out.clear();
      for (const auto& item : split_list(e->value)) out.push_back(to_number({item, e->source, e->line}, key));
    }
  }

  void paths(const std::string& key, std::vector<std::string>& out) {
    if (const Entry* e = t_.find(key)) out = split_list(e->value);
  }

  [[noreturn]] void fail(const std::string& key, const std::string& what) {
    const Entry* e = t_.find(key);
    if (e) throw ConfigError(what, e->source, e->line);
    throw ConfigError(what);
  }

 private:
  const ConfigTable& t_;
};

}  // namespace

void ConfigTable::assign(const std::string& section, const std::string& key, Entry entry) {
  entries_[section + "." + key] = std::move(entry);
}

void ConfigTable::set(const std::string& dotted_key, const std::string& value) {
  const auto dot = dotted_key.find('.');
  if (dot == std::string::npos || !lookup(dotted_key.substr(0, dot), dotted_key.substr(dot + 1))) {
    throw ConfigError("unknown key '" + dotted_key + "'", "command line", 0);
  }
  entries_[dotted_key] = {value, "command line", 0};
}

const Entry* ConfigTable::find(const std::string& dotted_key) const {
  const auto it = entries_.find(dotted_key);
  return it == entries_.end() ? nullptr : &it->second;
}

ConfigTable parse_file(const std::string& path) {
  Parser p;
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::error_code ec;
  p.stack.push_back(fs::weakly_canonical(path, ec).string());
  p.parse(in, path, fs::path(path).parent_path());
  return p.table;
}

ConfigTable parse_string(const std::string& text, const std::string& name, const std::string& base_dir) {
  Parser p;
  std::istringstream in(text);
  p.parse(in, name, base_dir);
  return p.table;
}

std::vector<double> SimulationSpec::delays() const {
  std::vector<double> d;
  const auto n = static_cast<std::size_t>(std::floor((delay_stop - delay_start) / delay_step + 1e-9)) + 1;
  for (std::size_t i = 0; i < n; ++i) d.push_back(delay_start + static_cast<double>(i) * delay_step);
  return d;
}

engine::BathSchedule RunConfig::baths() const {
  if (bath_mode == BathMode::schedule) {
    const auto s = bathfit::read_schedule_csv(schedule_file);
    return engine::BathSchedule(s.knots_b(), s.knots_c(), device.n_th_w);
  }
  return engine::BathSchedule::constant(n_th_b, n_th_c, device.n_th_w);
}

temporal::TemporalEnvelope RunConfig::envelope() const {
  auto env = temporal::make_envelope(device, t_g, alpha, phi_o);
  if (window != env.window) {
    env.window = window;
    env = temporal::normalized(env);
  }
  return env;
}

temporal::SimulationOptions RunConfig::simulation_options(const tomo::HeraldBudget& b) const {
  temporal::SimulationOptions o;
  o.dims = fock::ModeDims{simulation.fock_dim, simulation.fock_dim};
  o.jump_samples = simulation.jump_samples;
  o.grid_t = simulation.grid_t;
  o.grid_tau = simulation.grid_tau;
  if (simulation.noise_clicks) {
    o.dcr_fraction = b.dcr;
    o.leak_fraction = b.leak;
  }
  return o;
}

std::vector<SweepPoint> power_sweep(const RunConfig& cfg, const std::vector<double>& powers) {
  if (cfg.pulse.n_a_peak <= 0.0) {
    throw ParameterError("power sweep: pulse.n_a_peak is the bath reference power and must be positive");
  }
  const auto base = cfg.baths();
  const auto env = cfg.envelope();
  const auto delays = cfg.simulation.delays();
  std::vector<SweepPoint> rows(powers.size());
  // One simulation per worker; each writes only its own row.
  rng::parallel_for(powers.size(), [&](std::size_t i) {
    const double ratio = powers[i] / cfg.pulse.n_a_peak;
    auto pulse = cfg.pulse;
    pulse.n_a_peak = powers[i];
    const double scale = std::pow(ratio, cfg.sweep.exponent);
    auto in = cfg.budget;
    in.signal_rate *= ratio;
    in.thermal_rate *= ratio;
    in.leak_rate *= ratio;
    const auto budget = tomo::herald_budget(in);
    const auto sim = temporal::simulate_heralded(cfg.device, pulse, base.scaled(scale), env, temporal::default_gate(pulse),
                                                 delays, cfg.simulation_options(budget));
    rows[i] = {powers[i], scale, budget.noise_fraction(), sim.tau_o, sim.g2_ac_peak};
  });
  return rows;
}

RunConfig build(const ConfigTable& table) {
  RunConfig c;
  Reader r(table);
  auto& d = c.device;
  r.number("device.g_om", d.g_om, false, true);
  r.number("device.g_pe", d.g_pe, false, true);
  r.number("device.kappa_e_a", d.kappa_e_a, false, true);
  r.number("device.kappa_i_a", d.kappa_i_a, false, true);
  r.number("device.kappa_i_b", d.kappa_i_b, false, true);
  r.number("device.kappa_e_c", d.kappa_e_c, false, true);
  r.number("device.kappa_i_c", d.kappa_i_c, false, true);
  r.number("device.omega_b", d.omega_b);
  r.number("device.omega_c", d.omega_c);
  r.number("device.delta_a", d.delta_a);
  r.number("device.n_th_w", d.n_th_w, false, true);
  if (!(d.kappa_a() > 0.0)) r.fail("device.kappa_e_a", "optical linewidth kappa_e_a + kappa_i_a must be positive");

  r.number("pulse.t_p_fwhm", c.pulse.t_p_fwhm, true);
  r.number("pulse.n_a_peak", c.pulse.n_a_peak, false, true);
  r.number("pulse.t_center", c.pulse.t_center);
  r.number("pulse.rep_period", c.pulse.rep_period, true);

  std::string mode;
  r.text("baths.mode", mode);
  if (mode == "schedule") {
    c.bath_mode = BathMode::schedule;
  } else if (!mode.empty() && mode != "constant") {
    r.fail("baths.mode", "baths.mode must be 'constant' or 'schedule', got '" + mode + "'");
  }
  r.number("baths.n_th_b", c.n_th_b, false, true);
  r.number("baths.n_th_c", c.n_th_c, false, true);
  r.text("baths.schedule", c.schedule_file);
  if (c.bath_mode == BathMode::schedule && c.schedule_file.empty()) {
    r.fail("baths.mode", "baths.mode = schedule needs baths.schedule");
  }

  r.number("envelope.t_g", c.t_g, true);
  r.number("envelope.alpha", c.alpha);
  r.number("envelope.phi_o", c.phi_o);
  r.number("envelope.window", c.window, true);

  auto& b = c.budget;
  r.number("budget.signal_rate", b.signal_rate, false, true);
  r.number("budget.thermal_rate", b.thermal_rate, false, true);
  r.number("budget.dcr", b.dcr, false, true);
  r.number("budget.leak_rate", b.leak_rate, false, true);
  r.number("budget.gate", b.gate, true);
  r.number("budget.rep_rate", b.rep_rate, true);

  auto& s = c.simulation;
  r.integer("simulation.fock_dim", s.fock_dim, 2);
  r.integer("simulation.jump_samples", s.jump_samples, 1);
  r.integer("simulation.grid_t", s.grid_t, 2);
  r.integer("simulation.grid_tau", s.grid_tau, 2);
  r.number("simulation.delay_start", s.delay_start);
  r.number("simulation.delay_stop", s.delay_stop);
  r.number("simulation.delay_step", s.delay_step, true);
  r.boolean("simulation.noise_clicks", s.noise_clicks);
  if (s.delay_stop < s.delay_start) r.fail("simulation.delay_stop", "simulation.delay_stop precedes delay_start");

  auto& t = c.tomo;
  std::string source;
  r.text("tomo.source", source);
  if (source == "thermal") {
    t.source = TomoSource::thermal;
  } else if (source == "files") {
    t.source = TomoSource::files;
  } else if (!source.empty() && source != "simulation") {
    r.fail("tomo.source", "tomo.source must be 'simulation', 'thermal' or 'files', got '" + source + "'");
  }
  r.number("tomo.n_thermal", t.n_thermal, false, true);
  r.integer("tomo.conditional", t.conditional, 1);
  r.integer("tomo.unconditional", t.unconditional, 1);
  r.integer("tomo.noise", t.noise, 1);
  r.integer("tomo.chunks", t.chunks, 1);
  r.number("tomo.n_add", t.n_add, false, true);
  r.number("tomo.gain", t.gain, true);
  r.numbers("tomo.chunk_gains", t.chunk_gains);
  r.integer("tomo.bootstrap", t.bootstrap, 100);
  r.boolean("tomo.write_samples", t.write_samples);
  r.paths("tomo.conditional_files", t.conditional_files);
  r.paths("tomo.unconditional_files", t.unconditional_files);
  r.paths("tomo.noise_files", t.noise_files);
  if (!t.chunk_gains.empty() && t.chunk_gains.size() != t.chunks) {
    r.fail("tomo.chunk_gains", "tomo.chunk_gains needs one gain per chunk");
  }
  for (double g : t.chunk_gains) {
    if (!(g > 0.0)) r.fail("tomo.chunk_gains", "tomo.chunk_gains must be positive");
  }
  if (t.source == TomoSource::files && t.conditional_files.empty()) {
    r.fail("tomo.source", "tomo.source = files needs tomo.conditional_files");
  }

  auto& cal = c.calibration;
  r.number("calibration.r", cal.r);
  r.number("calibration.r_o", cal.r_o);
  r.number("calibration.p_in", cal.p_in);
  r.number("calibration.p_det", cal.p_det);
  r.number("calibration.kappa_e_b", cal.kappa_e_b);

  r.numbers("sweep.powers", c.sweep.powers);
  r.number("sweep.exponent", c.sweep.exponent);
  for (double p : c.sweep.powers) {
    if (!(p > 0.0)) r.fail("sweep.powers", "sweep.powers must be positive");
  }

  auto& f = c.fit;
  r.text("fit.detuned_trace", f.detuned_trace);
  r.text("fit.resonant_trace", f.resonant_trace);
  r.integer("fit.knots", f.knots, 2);
  r.number("fit.first_offset", f.first_offset, true);
  r.number("fit.horizon", f.horizon, true);
  r.number("fit.trace_noise", f.trace_noise, false, true);
  r.integer("fit.max_sweeps", f.max_sweeps, 1);
  if (f.detuned_trace.empty() != f.resonant_trace.empty()) {
    r.fail(f.detuned_trace.empty() ? "fit.resonant_trace" : "fit.detuned_trace",
           "fit needs both detuned_trace and resonant_trace, or neither");
  }

  if (const Entry* e = table.find("run.seed")) {
    const long v = to_integer(*e, "run.seed");
    if (v < 0) throw ConfigError("'run.seed' must be >= 0", e->source, e->line);
    c.seed = static_cast<std::uint64_t>(v);
  }
  r.text("run.out", c.out);
  c.hash = fnv1a_hex(canonical(table));
  return c;
}

std::string canonical(const ConfigTable& table) {
  std::string out;
  for (const auto& k : schema()) {
    const std::string key = std::string(k.section) + "." + k.name;
    if (key == "run.seed" || key == "run.out") continue;
    if (const Entry* e = table.find(key)) out += key + " = " + normalized(*e, k, key) + "\n";
  }
  return out;
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) s[i] = digits[h & 0xf];
  return s;
}

}  // namespace spdc::config
