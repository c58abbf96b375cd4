#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "spdc/bathfit.hpp"
#include "spdc/config.hpp"
#include "spdc/tomography.hpp"

namespace py = pybind11;
using namespace spdc;

namespace {

config::RunConfig load(const std::string& path, const std::map<std::string, std::string>& overrides) {
  auto table = config::parse_file(path);
  for (const auto& [k, v] : overrides) table.set(k, v);
  return config::build(table);
}

tomo::MomentsMatrix as_moments(const Eigen::MatrixXcd& m) {
  if (m.rows() != m.cols() || m.rows() < 2) throw DimensionError("moment matrix must be square with order >= 1");
  tomo::MomentsMatrix out;
  out.m = m;
  out.std_error = Eigen::MatrixXd::Zero(m.rows(), m.cols());
  return out;
}

tomo::SampleSet as_set(const Eigen::VectorXcd& v, double gain,
                       tomo::SampleKind kind = tomo::SampleKind::unconditional) {
  tomo::SampleSet s;
  s.kind = kind;
  s.samples.assign(v.data(), v.data() + v.size());
  s.gain = gain;
  return s;
}

py::dict bootstrap_dict(const tomo::BootstrapResult& b) {
  py::dict d;
  d["value"] = b.result.value;
  d["ci_low"] = b.result.ci_low;
  d["ci_high"] = b.result.ci_high;
  d["n_bootstrap"] = b.result.n_bootstrap;
  d["mean"] = b.mean;
  d["stddev"] = b.stddev;
  d["dropped"] = b.dropped;
  return d;
}

tomo::PhaseSymmetricState state_of(const std::string& kind, double value) {
  if (kind == "thermal") return tomo::PhaseSymmetricState::thermal(value);
  if (kind == "fock") return tomo::PhaseSymmetricState::fock(static_cast<int>(value));
  if (kind == "poisson") return tomo::PhaseSymmetricState::poisson(value);
  throw ParameterError("state kind must be thermal, fock or poisson, got '" + kind + "'");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Simulation and heterodyne analysis of a microwave-optical SPDC transducer";
  m.attr("compiled_default_config") = SPDC_DEFAULT_CONFIG;

  // Library errors surface as ValueError (bad input) or RuntimeError.
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ParameterError>(m, "ParameterError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
  py::register_exception<RangeError>(m, "RangeError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<CalibrationError>(m, "CalibrationError", PyExc_ValueError);
  py::register_exception<DegenerateError>(m, "DegenerateError", PyExc_ArithmeticError);
  py::register_exception<ConvergenceError>(m, "ConvergenceError", PyExc_RuntimeError);

  m.def(
      "config_hash",
      [](const std::string& path, const std::map<std::string, std::string>& overrides) {
        return load(path, overrides).hash;
      },
      py::arg("config"), py::arg("overrides") = std::map<std::string, std::string>{});

  m.def(
      "simulate",
      [](const std::string& path, const std::map<std::string, std::string>& overrides) {
        const auto cfg = load(path, overrides);
        const auto budget = tomo::herald_budget(cfg.budget);
        const auto options = cfg.simulation_options(budget);
        const auto baths = cfg.baths();
        temporal::HeraldedSimulation sim;
        temporal::G2Bracket bracket;
        temporal::ExportedStates states;
        {
          py::gil_scoped_release release;
          sim = temporal::simulate_heralded(cfg.device, cfg.pulse, baths, cfg.envelope(),
                                            temporal::default_gate(cfg.pulse), cfg.simulation.delays(), options);
          bracket = temporal::conditional_g2_bracket(cfg.device, cfg.pulse, baths, sim, options);
          states = temporal::export_temporal_states(sim);
        }
        py::dict d;
        d["delays"] = sim.delays;
        d["unconditional"] = sim.unconditional;
        d["conditional"] = sim.conditional;
        d["tau_o"] = sim.tau_o;
        d["g2_ac"] = sim.g2_ac_peak;
        d["g2_bb_click_0"] = bracket.g2_bb_click;
        d["g2_cc_click_internal"] = bracket.g2_cc_click;
        d["g2_cc_click_mode"] = states.heralded.g2();
        d["noise_fraction"] = sim.noise_fraction;
        d["config_hash"] = cfg.hash;
        return d;
      },
      py::arg("config"), py::arg("overrides") = std::map<std::string, std::string>{},
      "Unconditional and heralded traces with g2_AC(tau_o) and the conditional-g2 bracket.");

  m.def(
      "power_sweep",
      [](const std::string& path, const std::vector<double>& powers,
         const std::map<std::string, std::string>& overrides) {
        const auto cfg = load(path, overrides);
        std::vector<config::SweepPoint> pts;
        {
          py::gil_scoped_release release;
          pts = config::power_sweep(cfg, powers);
        }
        py::list out;
        for (const auto& p : pts) {
          py::dict d;
          d["n_a_peak"] = p.n_a;
          d["bath_scale"] = p.bath_scale;
          d["noise_fraction"] = p.noise_fraction;
          d["tau_o"] = p.tau_o;
          d["g2_ac"] = p.g2_ac;
          out.append(d);
        }
        return out;
      },
      py::arg("config"), py::arg("powers"), py::arg("overrides") = std::map<std::string, std::string>{});

  m.def(
      "herald_budget",
      [](double signal, double thermal, double dcr, double leak, double gate, double rep_rate) {
        const auto b = tomo::herald_budget(signal, thermal, dcr, leak, gate, rep_rate);
        py::dict d;
        d["signal"] = b.signal;
        d["thermal"] = b.thermal;
        d["dcr"] = b.dcr;
        d["leak"] = b.leak;
        d["p_click"] = b.p_click;
        d["r_click"] = b.r_click;
        return d;
      },
      py::arg("signal_rate"), py::arg("thermal_rate"), py::arg("dcr"), py::arg("leak_rate"), py::arg("gate") = 320e-9,
      py::arg("rep_rate") = 50e3, "Click fractions by source; rates in Hz inside the gate.");

  m.def(
      "sample_heterodyne",
      [](const std::string& kind, double value, double n_add, double gain, std::size_t n, std::uint64_t seed) {
        const auto s = tomo::sample_heterodyne(state_of(kind, value), n_add, gain, n, seed);
        return Eigen::VectorXcd(Eigen::Map<const Eigen::VectorXcd>(s.samples.data(), s.samples.size()));
      },
      py::arg("kind"), py::arg("value"), py::arg("n_add"), py::arg("gain"), py::arg("n"), py::arg("seed"),
      "Heterodyne samples of a thermal (mean), fock (n) or poisson (mean) state.");

  m.def(
      "raw_moments",
      [](const Eigen::VectorXcd& samples, int max_order) {
        return tomo::raw_moments(std::vector<fock::Complex>(samples.data(), samples.data() + samples.size()),
                                 max_order)
            .m;
      },
      py::arg("samples"), py::arg("max_order") = 2);
  m.def("noise_moments", [](double n_th_h, int max_order) { return tomo::noise_moments(n_th_h, max_order).m; },
        py::arg("n_th_h"), py::arg("max_order") = 2);
  m.def(
      "compose_moments",
      [](const Eigen::MatrixXcd& c, double gain, const Eigen::MatrixXcd& h) {
        return tomo::compose_moments(as_moments(c), gain, as_moments(h)).m;
      },
      py::arg("c"), py::arg("gain"), py::arg("h"));
  m.def(
      "invert_moments",
      [](const Eigen::MatrixXcd& s, double gain, const Eigen::MatrixXcd& h) {
        return tomo::invert_moments(as_moments(s), gain, as_moments(h)).m;
      },
      py::arg("s"), py::arg("gain"), py::arg("h"));
  m.def(
      "estimate_noise_occupation",
      [](const Eigen::VectorXcd& noise, double gain) {
        return tomo::estimate_noise_occupation(as_set(noise, gain, tomo::SampleKind::noise_only));
      },
      py::arg("noise"), py::arg("gain"));
  m.def("g2_cc", [](const Eigen::MatrixXcd& c) { return tomo::g2_cc(as_moments(c)).value; }, py::arg("c"));
  m.def(
      "g2_ac",
      [](const Eigen::MatrixXcd& click, const Eigen::MatrixXcd& uncond) {
        return tomo::g2_ac(as_moments(click), as_moments(uncond)).value;
      },
      py::arg("c_click"), py::arg("c_uncond"));

  m.def(
      "bootstrap_g2",
      [](const Eigen::VectorXcd& samples, double gain, double n_th_h, std::size_t n_boot, std::uint64_t seed) {
        const auto set = as_set(samples, gain);
        tomo::BootstrapResult b;
        {
          py::gil_scoped_release release;
          b = tomo::bootstrap(set, tomo::g2_statistic(gain, tomo::noise_moments(n_th_h)), {n_boot, seed});
        }
        return bootstrap_dict(b);
      },
      py::arg("samples"), py::arg("gain"), py::arg("n_th_h"), py::arg("n_boot") = 2000, py::arg("seed") = 0,
      "Percentile bootstrap of g2 of the inverted moments, noise reference fixed.");

  m.def(
      "photon_added_thermal",
      [](double nbar, int dim) {
        const auto rho = fock::tensor(fock::thermal_state(dim, nbar), fock::fock_state(fock::ModeDims{2}, {0}));
        return fock::number_distribution(engine::jump_condition(rho), 0);
      },
      py::arg("nbar"), py::arg("dim") = 40, "Number distribution of b^dag rho_th b, normalized.");

  m.def(
      "calibrate_gain",
      [](double r, double r_o, double p_in, double p_det, double kappa_e_b, double kappa_i_b, double omega_b) {
        const auto g = tomo::calibrate_gain(r, r_o, p_in, p_det, kappa_e_b, kappa_i_b, omega_b);
        py::dict d;
        d["gain"] = g.gain;
        d["gain_db"] = g.gain_db;
        d["n_b_sig"] = g.n_b_sig;
        d["input_ratio"] = g.input_ratio;
        return d;
      },
      py::arg("r"), py::arg("r_o"), py::arg("p_in"), py::arg("p_det"), py::arg("kappa_e_b"), py::arg("kappa_i_b"),
      py::arg("omega_b"));
}
