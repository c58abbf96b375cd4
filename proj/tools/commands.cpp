#include "commands.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <random>

#include <json.hpp>

#include "spdc/bathfit.hpp"
#include "spdc/io.hpp"
#include "spdc/temporal.hpp"
#include "spdc/tomography.hpp"

namespace spdc::cli {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

Json header(const Context& ctx, const std::string& command) {
  Json j;
  j["command"] = command;
  j["config_hash"] = ctx.cfg.hash;
  j["seed"] = ctx.seed;
  return j;
}

std::string provenance(const Context& ctx) {
  return "config_hash=" + ctx.cfg.hash + " seed=" + std::to_string(ctx.seed);
}

std::string path_in(const Context& ctx, const std::string& name) { return (ctx.out / name).string(); }

void write_json(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  out << j.dump(2) << '\n';
  if (!out) throw DataError("write failed for '" + path + "'");
}

void stamp(const Context& ctx, const std::string& path) { io::prepend_comment(path, provenance(ctx)); }

void warn(const Context& ctx, Json& warnings, const std::string& msg) {
  warnings.push_back(msg);
  if (!ctx.quiet) std::cerr << "warning: " << msg << '\n';
}

Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json moments_json(const tomo::MomentsMatrix& m) {
  Json re = Json::array(), im = Json::array(), se = Json::array();
  for (int i = 0; i <= m.order(); ++i) {
    Json r = Json::array(), c = Json::array(), s = Json::array();
    for (int k = 0; k <= m.order(); ++k) {
      r.push_back(m.m(i, k).real());
      c.push_back(m.m(i, k).imag());
      s.push_back(m.std_error(i, k));
    }
    re.push_back(r);
    im.push_back(c);
    se.push_back(s);
  }
  Json j;
  j["count"] = m.count;
  j["re"] = re;
  j["im"] = im;
  j["std_error"] = se;
  j["unphysical"] = m.unphysical;
  return j;
}

Json bootstrap_json(const tomo::BootstrapResult& b) {
  Json j;
  j["value"] = b.result.value;
  j["ci_low"] = b.result.ci_low;
  j["ci_high"] = b.result.ci_high;
  j["err_low"] = b.result.value - b.result.ci_low;
  j["err_high"] = b.result.ci_high - b.result.value;
  j["n_bootstrap"] = b.result.n_bootstrap;
  j["bootstrap_mean"] = b.mean;
  j["bootstrap_stddev"] = b.stddev;
  j["dropped"] = b.dropped;
  return j;
}

tomo::HeraldBudget budget_of(const config::RunConfig& cfg) { return tomo::herald_budget(cfg.budget); }

temporal::HeraldedSimulation run_simulation(const config::RunConfig& cfg, const model::PulseProfile& pulse,
                                            const engine::BathSchedule& baths,
                                            const temporal::SimulationOptions& options) {
  const auto env = cfg.envelope();
  return temporal::simulate_heralded(cfg.device, pulse, baths, env, temporal::default_gate(pulse),
                                     cfg.simulation.delays(), options);
}

int write_sweep(Context& ctx, const std::vector<double>& powers) {
  const auto rows = config::power_sweep(ctx.cfg, powers);
  const std::string csv = path_in(ctx, "sweep.csv");
  io::CsvWriter w(csv, {"n_a_peak", "bath_scale", "noise_fraction", "tau_o_s", "g2_ac"});
  Json points = Json::array();
  bool decreasing = true, above_two = true;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    w.row({io::format_number(r.n_a), io::format_number(r.bath_scale), io::format_number(r.noise_fraction),
           io::format_number(r.tau_o), io::format_number(r.g2_ac)});
    points.push_back({{"n_a_peak", r.n_a},
                      {"bath_scale", r.bath_scale},
                      {"noise_fraction", r.noise_fraction},
                      {"tau_o_s", r.tau_o},
                      {"g2_ac", r.g2_ac}});
    if (i > 0 && !(r.g2_ac < rows[i - 1].g2_ac)) decreasing = false;
    if (!(r.g2_ac > 2.0)) above_two = false;
  }
  w.close();
  stamp(ctx, csv);
  Json j = header(ctx, "sweep");
  j["bath_exponent"] = ctx.cfg.sweep.exponent;
  j["reference_n_a_peak"] = ctx.cfg.pulse.n_a_peak;
  j["points"] = points;
  j["strictly_decreasing"] = decreasing;
  j["above_classical_bound"] = above_two;
  write_json(path_in(ctx, "sweep.json"), j);
  if (!ctx.quiet) {
    for (const auto& r : rows) std::cout << "n_a = " << r.n_a << "  g2_AC(tau_o) = " << r.g2_ac << '\n';
  }
  return 0;
}

// Phase-insensitive chunk of a thermal temporal mode, used for pipeline checks.
tomo::Chunk thermal_chunk(const config::TomoSpec& t, std::size_t k, double gain, std::uint64_t seed) {
  tomo::Chunk c;
  c.id = std::to_string(k);
  const auto state = tomo::PhaseSymmetricState::thermal(t.n_thermal);
  c.conditional = tomo::sample_heterodyne(state, t.n_add, gain, t.conditional, rng::substream_seed(seed, 3 * k),
                                          tomo::SampleKind::conditional);
  c.unconditional = tomo::sample_heterodyne(state, t.n_add, gain, t.unconditional,
                                            rng::substream_seed(seed, 3 * k + 1), tomo::SampleKind::unconditional);
  c.noise = tomo::sample_heterodyne(tomo::PhaseSymmetricState::thermal(0.0), t.n_add, gain, t.noise,
                                    rng::substream_seed(seed, 3 * k + 2), tomo::SampleKind::noise_only);
  for (auto* s : {&c.conditional, &c.unconditional, &*c.noise}) s->chunk_id = c.id;
  return c;
}

std::vector<tomo::Chunk> chunks_from_files(const config::TomoSpec& t) {
  std::map<std::string, tomo::Chunk> by_id;
  std::vector<std::string> order;
  const auto add = [&](const std::string& path, tomo::SampleKind expected) {
    auto set = tomo::read_sample_set(path);
    if (set.kind != expected) {
      throw DataError("'" + path + "' holds " + tomo::to_string(set.kind) + " samples, expected " +
                      tomo::to_string(expected));
    }
    auto [it, fresh] = by_id.try_emplace(set.chunk_id);
    if (fresh) order.push_back(set.chunk_id);
    auto& c = it->second;
    c.id = set.chunk_id;
    auto& slot = expected == tomo::SampleKind::conditional     ? c.conditional
                 : expected == tomo::SampleKind::unconditional ? c.unconditional
                                                               : c.noise.emplace();
    if (!slot.samples.empty()) throw DataError("chunk '" + c.id + "' has two " + tomo::to_string(expected) + " files");
    slot = std::move(set);
  };
  for (const auto& p : t.conditional_files) add(p, tomo::SampleKind::conditional);
  for (const auto& p : t.unconditional_files) add(p, tomo::SampleKind::unconditional);
  for (const auto& p : t.noise_files) add(p, tomo::SampleKind::noise_only);
  std::vector<tomo::Chunk> out;
  for (const auto& id : order) {
    auto& c = by_id.at(id);
    if (c.conditional.samples.empty()) throw DataError("chunk '" + id + "' has no conditional samples");
    if (c.unconditional.samples.empty()) throw DataError("chunk '" + id + "' has no unconditional samples");
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace

int cmd_simulate(Context& ctx) {
  if (!ctx.power_sweep.empty()) return write_sweep(ctx, ctx.power_sweep);
  const auto& cfg = ctx.cfg;
  const auto budget = budget_of(cfg);
  const auto options = cfg.simulation_options(budget);
  const auto baths = cfg.baths();
  Json warnings = Json::array();

  const bool pump_off = model::integrated_jump_probability(cfg.device, cfg.pulse) == 0.0;
  temporal::HeraldedSimulation sim;
  bool dark = false;
  try {
    sim = run_simulation(cfg, cfg.pulse, baths, options);
  } catch (const DegenerateError&) {
    if (!pump_off) throw;
    // No pump and no bath: every trace is identically zero.
    dark = true;
  }

  std::vector<temporal::ConditionalIntensityTrace> traces;
  const auto delays = cfg.simulation.delays();
  traces.push_back({delays, dark ? std::vector<double>(delays.size(), 0.0) : sim.unconditional,
                    temporal::TraceKind::unconditional});
  if (pump_off) {
    warn(ctx, warnings, "pump is off (n_a_peak = 0): no heralding clicks, conditional trace left empty");
  } else {
    traces.push_back({sim.delays, sim.conditional, temporal::TraceKind::conditional});
  }
  const std::string trace_csv = path_in(ctx, "traces.csv");
  temporal::write_traces_csv(trace_csv, traces);
  stamp(ctx, trace_csv);

  const std::string occ_csv = path_in(ctx, "occupancy.csv");
  {
    io::CsvWriter w(occ_csv, {"t_s", "n_b", "n_c", "re_bc", "im_bc"});
    for (std::size_t i = 0; i < sim.moments.times.size(); ++i) {
      const auto& n = sim.moments.moments[i];
      w.row({io::format_number(sim.moments.times[i]), io::format_number(n(0, 0).real()),
             io::format_number(n(1, 1).real()), io::format_number(n(0, 1).real()), io::format_number(n(0, 1).imag())});
    }
    w.close();
  }
  stamp(ctx, occ_csv);

  Json j = header(ctx, "simulate");
  j["delays"] = {{"start_s", cfg.simulation.delay_start},
                 {"stop_s", cfg.simulation.delay_stop},
                 {"step_s", cfg.simulation.delay_step},
                 {"count", delays.size()}};
  j["click_weight"] = pump_off ? 0.0 : sim.jump_probability;
  j["noise_click_fraction"] = options.dcr_fraction + options.leak_fraction;
  if (pump_off) {
    j["tau_o_s"] = nullptr;
    j["g2_ac_tau_o"] = nullptr;
  } else {
    j["tau_o_s"] = sim.tau_o;
    j["g2_ac_tau_o"] = sim.g2_ac_peak;
    j["unconditional_at_tau_o"] = sim.unconditional[sim.peak_index];
    j["conditional_at_tau_o"] = sim.conditional[sim.peak_index];
    const auto bracket = temporal::conditional_g2_bracket(cfg.device, cfg.pulse, baths, sim, options);
    j["g2_bb_click_0"] = bracket.g2_bb_click;
    j["g2_cc_click_internal"] = bracket.g2_cc_click;
    try {
      const auto states = temporal::export_temporal_states(sim);
      j["temporal_mode"] = {{"heralded_mean", states.heralded.mean()},
                            {"heralded_g2", number_or_null(states.heralded.g2())},
                            {"unconditional_mean", states.unconditional.mean()}};
    } catch (const DomainError& e) {
      warn(ctx, warnings, e.what());
    }
  }
  j["warnings"] = warnings;
  write_json(path_in(ctx, "summary.json"), j);
  if (!ctx.quiet) {
    if (pump_off) {
      std::cout << "pump off: unconditional trace only\n";
    } else {
      std::cout << "tau_o = " << sim.tau_o * 1e9 << " ns  g2_AC(tau_o) = " << sim.g2_ac_peak << '\n';
    }
  }
  return 0;
}

int cmd_sweep(Context& ctx) {
  return write_sweep(ctx, ctx.power_sweep.empty() ? ctx.cfg.sweep.powers : ctx.power_sweep);
}

int cmd_tomo(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto& t = cfg.tomo;
  Json warnings = Json::array();
  std::vector<tomo::Chunk> chunks;
  Json clicks = nullptr;
  const auto gain_of = [&](std::size_t k) { return t.chunk_gains.empty() ? t.gain : t.chunk_gains[k]; };

  switch (t.source) {
    case config::TomoSource::thermal:
      for (std::size_t k = 0; k < t.chunks; ++k) chunks.push_back(thermal_chunk(t, k, gain_of(k), ctx.seed));
      break;
    case config::TomoSource::files:
      chunks = chunks_from_files(t);
      break;
    case config::TomoSource::simulation: {
      const auto budget = budget_of(cfg);
      tomo::ExperimentOptions eo;
      eo.conditional = t.conditional;
      eo.unconditional = t.unconditional;
      eo.noise = t.noise;
      eo.chunks = t.chunks;
      eo.n_add = t.n_add;
      eo.gain = t.gain;
      eo.chunk_gains = t.chunk_gains;
      auto ex = tomo::simulate_experiment(cfg.device, cfg.pulse, cfg.baths(), cfg.envelope(), budget, eo, ctx.seed,
                                          cfg.simulation_options(budget));
      chunks = std::move(ex.chunks);
      clicks = {{"signal", ex.clicks.counts[0]},
                {"thermal", ex.clicks.counts[1]},
                {"dcr", ex.clicks.counts[2]},
                {"leak", ex.clicks.counts[3]},
                {"pump_trials", ex.clicks.pump_trials}};
      break;
    }
  }

  if (t.write_samples && t.source != config::TomoSource::files) {
    for (const auto& c : chunks) {
      for (const auto* s : {&c.conditional, &c.unconditional}) {
        const auto p = path_in(ctx, "samples_" + tomo::to_string(s->kind) + "_" + c.id + ".csv");
        tomo::write_sample_set(p, *s, cfg.hash);
      }
      if (c.noise) tomo::write_sample_set(path_in(ctx, "samples_noise_only_" + c.id + ".csv"), *c.noise, cfg.hash);
    }
  }

  tomo::BootstrapOptions bo;
  bo.n_boot = t.bootstrap;
  bo.seed = rng::substream_seed(ctx.seed, 0xb007);
  const auto rep = tomo::analyze_chunks(chunks, bo);
  for (const auto& w : rep.warnings) warn(ctx, warnings, w);

  const std::pair<const char*, const tomo::BootstrapResult*> stats[] = {
      {"g2_cc", &rep.g2_cc}, {"g2_cc_click", &rep.g2_cc_click}, {"g2_ac", &rep.g2_ac}};
  Json corr;
  for (const auto& [name, b] : stats) {
    corr[name] = bootstrap_json(*b);
    const auto hist = path_in(ctx, std::string("histogram_") + name + ".csv");
    tomo::write_histogram_csv(hist, b->histogram);
    stamp(ctx, hist);
    const auto conv = path_in(ctx, std::string("convergence_") + name + ".csv");
    tomo::write_convergence_csv(conv, b->trace);
    stamp(ctx, conv);
  }

  Json j = header(ctx, "tomo");
  j["source"] = t.source == config::TomoSource::thermal ? "thermal"
                : t.source == config::TomoSource::files ? "files"
                                                        : "simulation";
  Json cj = Json::array();
  for (std::size_t k = 0; k < chunks.size(); ++k) {
    const auto& c = chunks[k];
    cj.push_back({{"id", c.id},
                  {"conditional", c.conditional.samples.size()},
                  {"unconditional", c.unconditional.samples.size()},
                  {"noise", c.noise ? c.noise->samples.size() : 0},
                  {"gain_conditional", c.conditional.gain},
                  {"gain_unconditional", c.unconditional.gain},
                  {"n_th_h", tomo::estimate_noise_occupation(*c.noise)},
                  {"weight_conditional", rep.moments.weights_conditional[k]},
                  {"weight_unconditional", rep.moments.weights_unconditional[k]}});
  }
  j["chunks"] = cj;
  j["clicks"] = clicks;
  j["moments"] = {{"conditional", moments_json(rep.moments.conditional)},
                  {"unconditional", moments_json(rep.moments.unconditional)}};
  j["correlations"] = corr;
  j["below_classical_bound"] = rep.g2_cc_click.result.value < 1.0;
  j["warnings"] = warnings;
  write_json(path_in(ctx, "tomo_report.json"), j);
  if (!ctx.quiet) {
    for (const auto& [name, b] : stats) {
      std::cout << name << " = " << b->result.value << "  +" << b->result.ci_high - b->result.value << " -"
                << b->result.value - b->result.ci_low << '\n';
    }
  }
  return 0;
}

int cmd_fit_baths(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto& f = cfg.fit;
  const auto env = cfg.envelope();
  bathfit::EmissionTrace detuned, resonant;
  bool synthesized = false;
  if (!f.detuned_trace.empty()) {
    const auto pick = [&](const std::string& path, model::Coupling cond) {
      for (auto& tr : bathfit::read_traces_csv(path, cfg.pulse)) {
        if (tr.condition == cond) return tr;
      }
      throw DataError("'" + path + "' has no " + bathfit::to_string(cond) + " trace");
    };
    detuned = pick(f.detuned_trace, model::Coupling::detuned);
    resonant = pick(f.resonant_trace, model::Coupling::resonant);
  } else {
    synthesized = true;
    const auto truth = cfg.baths();
    const auto delays = cfg.simulation.delays();
    detuned = bathfit::forward_emission(truth, cfg.device, cfg.pulse, env, model::Coupling::detuned, delays);
    resonant = bathfit::forward_emission(truth, cfg.device, cfg.pulse, env, model::Coupling::resonant, delays);
    if (f.trace_noise > 0.0) {
      std::size_t stream = 0;
      for (auto* tr : {&detuned, &resonant}) {
        auto gen = rng::substream(ctx.seed, stream++);
        std::normal_distribution<double> z(0.0, 1.0);
        for (double& q : tr->quanta) q = std::max(0.0, q * (1.0 + f.trace_noise * z(gen)));
      }
    }
  }
  const std::string traces_csv = path_in(ctx, "fit_traces.csv");
  bathfit::write_traces_csv(traces_csv, {detuned, resonant});
  stamp(ctx, traces_csv);

  const auto knots = bathfit::default_knot_times(cfg.pulse, f.horizon, f.knots, f.first_offset);
  bathfit::FitOptions fo;
  fo.max_sweeps = f.max_sweeps;
  fo.n_th_w = cfg.device.n_th_w;
  fo.grid_t = cfg.simulation.grid_t;
  fo.grid_tau = cfg.simulation.grid_tau;
  bathfit::FitReport report;
  int code = 0;
  try {
    report = bathfit::fit_baths(detuned, resonant, knots, cfg.device, cfg.pulse, env, fo);
  } catch (const bathfit::FitConvergenceError& e) {
    report = e.best();
    code = 3;
    if (!ctx.quiet) std::cerr << "error: " << e.what() << '\n';
  }

  const std::string sched_csv = path_in(ctx, "fitted_schedule.csv");
  bathfit::write_schedule_csv(sched_csv, report.baths);
  stamp(ctx, sched_csv);
  Json j = header(ctx, "fit-baths");
  j["synthesized_traces"] = synthesized;
  j["trace_noise"] = synthesized ? f.trace_noise : 0.0;
  j["report"] = Json::parse(bathfit::fit_report_json(report));
  write_json(path_in(ctx, "fit_report.json"), j);
  if (!ctx.quiet) {
    std::cout << (report.converged ? "converged" : "not converged") << " after " << report.iterations
              << " sweeps, residual " << report.residual << " quanta\n";
    for (std::size_t i = 0; i < report.baths.knots_b().size(); ++i) {
      std::cout << "  t = " << report.baths.knots_b()[i].t * 1e9 << " ns  n_b = " << report.baths.knots_b()[i].n
                << "  n_c = " << report.baths.knots_c()[i].n << '\n';
    }
  }
  return code;
}

int cmd_budget(Context& ctx) {
  const auto b = budget_of(ctx.cfg);
  Json j = header(ctx, "budget");
  j["inputs"] = {{"signal_rate_hz", ctx.cfg.budget.signal_rate},
                 {"thermal_rate_hz", ctx.cfg.budget.thermal_rate},
                 {"dcr_hz", ctx.cfg.budget.dcr},
                 {"leak_rate_hz", ctx.cfg.budget.leak_rate},
                 {"gate_s", ctx.cfg.budget.gate},
                 {"rep_rate_hz", ctx.cfg.budget.rep_rate}};
  j["fractions"] = {{"signal", b.signal}, {"thermal", b.thermal}, {"dcr", b.dcr}, {"leak", b.leak}};
  j["true_pair_fraction"] = b.true_pair_fraction();
  j["noise_fraction"] = b.noise_fraction();
  j["p_click"] = b.p_click;
  j["r_click_hz"] = b.r_click;
  write_json(path_in(ctx, "budget.json"), j);
  if (!ctx.quiet) {
    std::printf("source    fraction\n");
    std::printf("signal    %.3f\nthermal   %.3f\ndcr       %.3f\nleak      %.3f\n", b.signal, b.thermal, b.dcr, b.leak);
    std::printf("p_click = %.2g per trial, r_click = %.3g Hz\n", b.p_click, b.r_click);
  }
  return 0;
}

int cmd_calibrate_gain(Context& ctx) {
  const auto& c = ctx.cfg.calibration;
  const auto g =
      tomo::calibrate_gain(c.r, c.r_o, c.p_in, c.p_det, c.kappa_e_b, ctx.cfg.device.kappa_i_b, ctx.cfg.device.omega_b);
  Json j = header(ctx, "calibrate-gain");
  j["inputs"] = {{"r_hz", c.r},
                 {"r_o_hz", c.r_o},
                 {"p_in_w", c.p_in},
                 {"p_det_w", c.p_det},
                 {"kappa_e_b_hz", c.kappa_e_b},
                 {"kappa_i_b_hz", ctx.cfg.device.kappa_i_b},
                 {"omega_b_hz", ctx.cfg.device.omega_b}};
  j["gain"] = g.gain;
  j["gain_db"] = g.gain_db;
  j["n_b_sig"] = g.n_b_sig;
  j["p_in_device_w"] = g.p_in_device;
  j["input_ratio"] = g.input_ratio;
  write_json(path_in(ctx, "gain.json"), j);
  if (!ctx.quiet) std::printf("G = %.2f dB (n_b,sig = %.4g, P_in ratio %.4f)\n", g.gain_db, g.n_b_sig, g.input_ratio);
  return 0;
}

}  // namespace spdc::cli
