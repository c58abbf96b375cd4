#include "spdc/tomography.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "spdc/io.hpp"

namespace spdc::tomo {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kHbar = 1.054571817e-34;
constexpr std::size_t kBlock = 8192;  // samples per RNG substream

double binom(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

double factorial(int n) {
  double r = 1.0;
  for (int i = 2; i <= n; ++i) r *= i;
  return r;
}

Complex unit_gaussian(rng::Engine& gen) {
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  const double re = normal(gen);
  return {re, normal(gen)};
}

MomentsMatrix empty_moments(int order) {
  if (order < 1) throw ParameterError("moments: max_order must be >= 1");
  MomentsMatrix out;
  out.m = Eigen::MatrixXcd::Zero(order + 1, order + 1);
  out.std_error = Eigen::MatrixXd::Zero(order + 1, order + 1);
  return out;
}

void check_same_order(const MomentsMatrix& a, const MomentsMatrix& b, const char* what) {
  if (a.m.rows() != b.m.rows() || a.m.cols() != b.m.cols() || a.m.rows() != a.m.cols()) {
    throw ParameterError(std::string(what) + ": moment matrices must be square and of equal order");
  }
}

}  // namespace

std::string to_string(SampleKind kind) {
  switch (kind) {
    case SampleKind::noise_only: return "noise_only";
    case SampleKind::unconditional: return "unconditional";
    case SampleKind::conditional: return "conditional";
  }
  return "unknown";
}

SampleKind sample_kind_from_string(const std::string& s) {
  if (s == "noise_only") return SampleKind::noise_only;
  if (s == "unconditional") return SampleKind::unconditional;
  if (s == "conditional") return SampleKind::conditional;
  throw DataError("unknown sample kind '" + s + "'");
}

void validate(const SampleSet& set) {
  if (set.samples.empty()) throw DataError("sample set '" + set.chunk_id + "' is empty");
  if (!(set.gain > 0.0) || !std::isfinite(set.gain)) throw DataError("sample set gain must be positive");
  for (std::size_t i = 0; i < set.samples.size(); ++i) {
    if (!std::isfinite(set.samples[i].real()) || !std::isfinite(set.samples[i].imag())) {
      throw DataError("sample set '" + set.chunk_id + "': non-finite sample at index " + std::to_string(i));
    }
  }
}

PhaseSymmetricState PhaseSymmetricState::thermal(double mean) {
  if (!(mean >= 0.0) || !std::isfinite(mean)) throw ParameterError("thermal state: mean must be >= 0");
  PhaseSymmetricState s;
  s.thermal_excess = mean;
  return s;
}

PhaseSymmetricState PhaseSymmetricState::fock(int n) {
  if (n < 0) throw ParameterError("fock state: n must be >= 0");
  PhaseSymmetricState s;
  s.number.p.assign(static_cast<std::size_t>(n) + 1, 0.0);
  s.number.p.back() = 1.0;
  return s;
}

PhaseSymmetricState PhaseSymmetricState::poisson(double mean) {
  if (!(mean >= 0.0) || !std::isfinite(mean)) throw ParameterError("poisson state: mean must be >= 0");
  PhaseSymmetricState s;
  s.number.p.clear();
  double pn = std::exp(-mean), remaining = 1.0;
  for (std::size_t n = 0; remaining > 1e-15 || static_cast<double>(n) < mean; ++n) {
    s.number.p.push_back(pn);
    remaining -= pn;
    pn *= mean / static_cast<double>(n + 1);
    if (n > 100000) break;
  }
  return s;
}

PhaseSymmetricState PhaseSymmetricState::from(NumberDistribution d) {
  PhaseSymmetricState s;
  s.number = std::move(d);
  validate(s);
  return s;
}

double PhaseSymmetricState::mean() const { return number.mean() + thermal_excess; }

void validate(const PhaseSymmetricState& state) {
  if (state.number.p.empty()) throw DataError("state: empty number distribution");
  double sum = 0.0;
  for (double p : state.number.p) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw DataError("state: number probabilities must be finite and >= 0");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-8) throw DataError("state: number distribution sums to " + std::to_string(sum));
  if (!(state.thermal_excess >= 0.0) || !std::isfinite(state.thermal_excess)) {
    throw DataError("state: thermal excess must be >= 0");
  }
}

void validate(const ClassicalGaussianState& state) {
  if (state.components.empty()) throw DomainError("classical state: no components");
  double wsum = 0.0;
  for (const auto& c : state.components) {
    if (!(c.weight >= 0.0) || !(c.n_a >= 0.0) || !(c.n_c >= 0.0) || !std::isfinite(c.n_a + c.n_c + c.weight)) {
      throw DomainError("classical state: weights and occupations must be finite and >= 0");
    }
    if (std::norm(c.correlation) > c.n_a * c.n_c * (1.0 + 1e-12) + 1e-300) {
      throw DomainError("classical state: |<alpha* gamma>|^2 exceeds n_a n_c, the P-function is not positive");
    }
    wsum += c.weight;
  }
  if (std::abs(wsum - 1.0) > 1e-9) throw DomainError("classical state: weights must sum to 1");
}

ClassicalGaussianState random_classical_state(rng::Engine& gen) {
  std::uniform_int_distribution<int> count(1, 3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::exponential_distribution<double> expo(1.0);
  ClassicalGaussianState s;
  const int k = count(gen);
  double wsum = 0.0;
  for (int i = 0; i < k; ++i) {
    GaussianComponent c;
    c.weight = expo(gen);
    c.n_a = std::exp(std::log(0.3) + u(gen) * std::log(10.0));
    c.n_c = std::exp(std::log(0.3) + u(gen) * std::log(10.0));
    c.correlation = std::polar(u(gen) * std::sqrt(c.n_a * c.n_c), kTwoPi * u(gen));
    wsum += c.weight;
    s.components.push_back(c);
  }
  for (auto& c : s.components) c.weight /= wsum;
  return s;
}

SampleSet sample_heterodyne(const PhaseSymmetricState& state, double n_add, double gain, std::size_t n,
                            std::uint64_t seed, SampleKind kind) {
  validate(state);
  if (!(n_add >= 0.0) || !std::isfinite(n_add)) throw ParameterError("sample_heterodyne: n_add must be >= 0");
  if (!(gain > 0.0) || !std::isfinite(gain)) throw ParameterError("sample_heterodyne: gain must be positive");
  if (n == 0) throw ParameterError("sample_heterodyne: n must be >= 1");
  SampleSet out;
  out.kind = kind;
  out.gain = gain;
  out.seed = seed;
  out.samples.resize(n);
  const std::discrete_distribution<int> number(state.number.p.begin(), state.number.p.end());
  const double noise = std::sqrt(state.thermal_excess + n_add);
  const double amp = std::sqrt(gain);
  const std::size_t blocks = (n + kBlock - 1) / kBlock;
  rng::parallel_for(blocks, [&](std::size_t b) {
    rng::Engine gen = rng::substream(seed, b);
    auto pick = number;
    std::gamma_distribution<double> radial;
    std::uniform_real_distribution<double> phase(0.0, kTwoPi);
    const std::size_t end = std::min(n, (b + 1) * kBlock);
    for (std::size_t i = b * kBlock; i < end; ++i) {
      // Husimi of |k><k|: |beta|^2 ~ Gamma(k + 1, 1), uniform phase.
      const int k = pick(gen);
      const double r2 = radial(gen, std::gamma_distribution<double>::param_type(k + 1.0, 1.0));
      const Complex beta = std::polar(std::sqrt(r2), phase(gen));
      out.samples[i] = amp * (beta + noise * unit_gaussian(gen));
    }
  });
  return out;
}

JointSamples sample_joint(const ClassicalGaussianState& state, double n_add, double gain, std::size_t n,
                          std::uint64_t seed) {
  validate(state);
  if (!(n_add >= 0.0) || !(gain > 0.0)) throw ParameterError("sample_joint: need n_add >= 0 and gain > 0");
  if (n == 0) throw ParameterError("sample_joint: n must be >= 1");
  JointSamples out;
  out.optical_intensity.resize(n);
  out.microwave.samples.resize(n);
  out.microwave.gain = gain;
  out.microwave.seed = seed;
  out.microwave.kind = SampleKind::unconditional;
  std::vector<double> weights;
  for (const auto& c : state.components) weights.push_back(c.weight);
  const std::discrete_distribution<int> component(weights.begin(), weights.end());
  const double vacuum = std::sqrt(1.0 + n_add);
  const double amp = std::sqrt(gain);
  const std::size_t blocks = (n + kBlock - 1) / kBlock;
  rng::parallel_for(blocks, [&](std::size_t b) {
    rng::Engine gen = rng::substream(seed, b);
    auto pick = component;
    const std::size_t end = std::min(n, (b + 1) * kBlock);
    for (std::size_t i = b * kBlock; i < end; ++i) {
      const auto& c = state.components[static_cast<std::size_t>(pick(gen))];
      const Complex alpha = std::sqrt(c.n_a) * unit_gaussian(gen);
      Complex gamma = 0.0;
      double rest = c.n_c;
      if (c.n_a > 0.0) {
        gamma = c.correlation / c.n_a * alpha;
        rest = std::max(0.0, c.n_c - std::norm(c.correlation) / c.n_a);
      }
      gamma += std::sqrt(rest) * unit_gaussian(gen);
      out.optical_intensity[i] = std::norm(alpha);
      // Husimi of the microwave P-sample plus chain noise.
      out.microwave.samples[i] = amp * (gamma + vacuum * unit_gaussian(gen));
    }
  });
  return out;
}

MomentsMatrix raw_moments(const std::vector<Complex>& samples, int max_order) {
  if (samples.empty()) throw DataError("raw_moments: empty sample set");
  MomentsMatrix out = empty_moments(max_order);
  const int k = max_order;
  Eigen::MatrixXcd sum = Eigen::MatrixXcd::Zero(k + 1, k + 1);
  Eigen::MatrixXd sum2 = Eigen::MatrixXd::Zero(k + 1, k + 1);
  std::vector<Complex> pw(k + 1), cpw(k + 1);
  for (const Complex& z : samples) {
    pw[0] = cpw[0] = 1.0;
    for (int i = 1; i <= k; ++i) {
      pw[i] = pw[i - 1] * z;
      cpw[i] = cpw[i - 1] * std::conj(z);
    }
    for (int i = 0; i <= k; ++i) {
      for (int j = i; j <= k; ++j) {
        const Complex x = cpw[i] * pw[j];
        sum(i, j) += x;
        sum2(i, j) += std::norm(x);
      }
    }
  }
  const double n = static_cast<double>(samples.size());
  for (int i = 0; i <= k; ++i) {
    for (int j = i; j <= k; ++j) {
      const Complex mean = sum(i, j) / n;
      const double var = std::max(0.0, sum2(i, j) / n - std::norm(mean));
      out.m(i, j) = mean;
      out.m(j, i) = std::conj(mean);
      out.std_error(i, j) = out.std_error(j, i) = std::sqrt(var / n);
    }
    out.m(i, i) = out.m(i, i).real();
  }
  out.count = samples.size();
  return out;
}

MomentsMatrix raw_moments(const SampleSet& set, int max_order) {
  validate(set);
  return raw_moments(set.samples, max_order);
}

MomentsMatrix weighted_moments(const std::vector<Complex>& samples, const std::vector<double>& weights,
                               int max_order) {
  if (samples.empty()) throw DataError("weighted_moments: empty sample set");
  if (weights.size() != samples.size()) throw DataError("weighted_moments: one weight per sample is required");
  const double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(wsum > 0.0)) throw DegenerateError("weighted_moments: weights sum to zero");
  MomentsMatrix out = empty_moments(max_order);
  const int k = max_order;
  std::vector<Complex> pw(k + 1), cpw(k + 1);
  for (std::size_t s = 0; s < samples.size(); ++s) {
    const Complex z = samples[s];
    pw[0] = cpw[0] = 1.0;
    for (int i = 1; i <= k; ++i) {
      pw[i] = pw[i - 1] * z;
      cpw[i] = cpw[i - 1] * std::conj(z);
    }
    for (int i = 0; i <= k; ++i)
      for (int j = i; j <= k; ++j) out.m(i, j) += weights[s] * cpw[i] * pw[j];
  }
  for (int i = 0; i <= k; ++i) {
    for (int j = i; j <= k; ++j) {
      out.m(i, j) /= wsum;
      out.m(j, i) = std::conj(out.m(i, j));
    }
    out.m(i, i) = out.m(i, i).real();
  }
  // Ratio-estimator standard errors.
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(k + 1, k + 1);
  for (std::size_t s = 0; s < samples.size(); ++s) {
    const Complex z = samples[s];
    for (int i = 0; i <= k; ++i)
      for (int j = i; j <= k; ++j)
        acc(i, j) += weights[s] * weights[s] * std::norm(std::pow(std::conj(z), i) * std::pow(z, j) - out.m(i, j));
  }
  for (int i = 0; i <= k; ++i)
    for (int j = i; j <= k; ++j) out.std_error(i, j) = out.std_error(j, i) = std::sqrt(acc(i, j)) / wsum;
  out.count = samples.size();
  return out;
}

MomentsMatrix noise_moments(double n_th_h, int max_order) {
  // Estimated occupations may dip slightly below zero from sampling noise.
  if (!(n_th_h > -1.0) || !std::isfinite(n_th_h)) throw ParameterError("noise_moments: n_th_H must exceed -1");
  MomentsMatrix out = empty_moments(max_order);
  for (int k = 0; k <= max_order; ++k) out.m(k, k) = factorial(k) * std::pow(n_th_h + 1.0, k);
  return out;
}

double estimate_noise_occupation(const SampleSet& noise) {
  validate(noise);
  if (noise.kind != SampleKind::noise_only) {
    throw DataError("estimate_noise_occupation: set '" + noise.chunk_id + "' is not a noise-only reference");
  }
  return raw_moments(noise.samples, 1).real(1, 1) / noise.gain - 1.0;
}

MomentsMatrix state_moments(const PhaseSymmetricState& state, int max_order) {
  validate(state);
  MomentsMatrix out = empty_moments(max_order);
  const double t = state.thermal_excess;
  // P-convolution of the number part with a Gaussian of mean t.
  for (int k = 0; k <= max_order; ++k) {
    double c = 0.0;
    for (int j = 0; j <= k; ++j) c += binom(k, j) * binom(k, j) * state.number.factorial_moment(j) *
                                      factorial(k - j) * std::pow(t, k - j);
    out.m(k, k) = c;
  }
  return out;
}

MomentsMatrix compose_moments(const MomentsMatrix& c, double gain, const MomentsMatrix& h) {
  check_same_order(c, h, "compose_moments");
  if (!(gain > 0.0)) throw ParameterError("compose_moments: gain must be positive");
  const int k = c.order();
  MomentsMatrix s = empty_moments(k);
  for (int i = 0; i <= k; ++i) {
    for (int j = 0; j <= k; ++j) {
      Complex acc = 0.0;
      for (int m = 0; m <= i; ++m)
        for (int n = 0; n <= j; ++n) acc += binom(i, m) * binom(j, n) * h.m(i - m, j - n) * c.m(m, n);
      s.m(i, j) = std::pow(gain, 0.5 * (i + j)) * acc;
      s.std_error(i, j) = std::pow(gain, 0.5 * (i + j)) * c.std_error(i, j);
    }
  }
  s.count = c.count;
  return s;
}

MomentsMatrix invert_moments(const MomentsMatrix& s, double gain, const MomentsMatrix& h) {
  check_same_order(s, h, "invert_moments");
  if (!(gain > 0.0) || !std::isfinite(gain)) throw ParameterError("invert_moments: gain must be positive");
  if (std::abs(h.m(0, 0)) == 0.0) throw ParameterError("invert_moments: H_00 must be nonzero");
  const int k = s.order();
  MomentsMatrix c = empty_moments(k);
  for (int total = 0; total <= 2 * k; ++total) {
    for (int i = std::max(0, total - k); i <= std::min(k, total); ++i) {
      const int j = total - i;
      const double scale = std::pow(gain, 0.5 * (i + j));
      Complex acc = s.m(i, j) / scale;
      for (int m = 0; m <= i; ++m) {
        for (int n = 0; n <= j; ++n) {
          if (m == i && n == j) continue;
          acc -= binom(i, m) * binom(j, n) * h.m(i - m, j - n) * c.m(m, n);
        }
      }
      c.m(i, j) = acc / h.m(0, 0);
      // Leading term only: the noise reference is treated as exact.
      c.std_error(i, j) = s.std_error(i, j) / scale;
    }
  }
  c.m(0, 0) = 1.0;
  for (int i = 0; i <= k; ++i) {
    c.m(i, i) = c.m(i, i).real();
    for (int j = i + 1; j <= k; ++j) c.m(j, i) = std::conj(c.m(i, j));
  }
  c.count = s.count;
  const double c11 = c.real(1, 1), se = c.std_error(1, 1);
  if ((se > 0.0 && c11 < -5.0 * se) || (se == 0.0 && c11 < -1e-12)) {
    c.unphysical = true;
    c.warnings.push_back("C_11 = " + io::format_number(c11) + " is negative beyond 5 standard errors");
  }
  return c;
}

CorrelationResult g2_cc(const MomentsMatrix& c) {
  if (c.order() < 2) throw ParameterError("g2_cc: second-order moments are required");
  const double c11 = c.real(1, 1);
  if (!(c11 > 0.0)) throw DegenerateError("g2_cc: C_11 is not positive");
  const double v = c.real(2, 2) / (c11 * c11);
  return {v, v, v, 0};
}

CorrelationResult g2_cc_click(const MomentsMatrix& c_click) { return g2_cc(c_click); }

CorrelationResult g2_ac(const MomentsMatrix& c_click, const MomentsMatrix& c_uncond) {
  const double den = c_uncond.real(1, 1);
  if (!(den > 0.0)) throw DegenerateError("g2_ac: unconditional C_11 is not positive");
  const double v = c_click.real(1, 1) / den;
  return {v, v, v, 0};
}

namespace {

// Sufficient statistics of one jackknife block of joint samples.
struct JointSums {
  double count = 0.0, a1 = 0.0, a2 = 0.0;
  Eigen::Matrix3cd s = Eigen::Matrix3cd::Zero();
  Eigen::Matrix3cd ws = Eigen::Matrix3cd::Zero();

  JointSums& operator+=(const JointSums& o) {
    count += o.count;
    a1 += o.a1;
    a2 += o.a2;
    s += o.s;
    ws += o.ws;
    return *this;
  }
  JointSums& operator-=(const JointSums& o) {
    count -= o.count;
    a1 -= o.a1;
    a2 -= o.a2;
    s -= o.s;
    ws -= o.ws;
    return *this;
  }
};

struct BoundValues {
  double g2_ac, g2_aa, g2_cc, g2_cc_click, cs, click;
};

BoundValues bound_values(const JointSums& sums, double gain, const MomentsMatrix& h) {
  MomentsMatrix s = empty_moments(2), sw = empty_moments(2);
  s.m = sums.s / sums.count;
  sw.m = sums.ws / sums.a1;
  const auto c = invert_moments(s, gain, h);
  const auto cw = invert_moments(sw, gain, h);
  BoundValues v{};
  v.g2_ac = cw.real(1, 1) / c.real(1, 1);
  v.g2_aa = sums.a2 * sums.count / (sums.a1 * sums.a1);
  v.g2_cc = c.real(2, 2) / (c.real(1, 1) * c.real(1, 1));
  v.g2_cc_click = cw.real(2, 2) / (cw.real(1, 1) * cw.real(1, 1));
  v.cs = std::sqrt(std::max(0.0, v.g2_aa * v.g2_cc)) - v.g2_ac;
  v.click = v.g2_cc_click - 1.0;
  return v;
}

}  // namespace

BoundReport classical_bound_check(const ClassicalGaussianState& state, std::size_t n, std::uint64_t seed,
                                  const BoundCheckOptions& options) {
  validate(state);
  const std::size_t batches = options.batches;
  if (batches < 2 || n < 10 * batches) throw ParameterError("classical_bound_check: too few samples for the blocks");
  const auto joint = sample_joint(state, options.n_add, options.gain, n, seed);
  const auto h = noise_moments(options.n_add, 2);

  std::vector<JointSums> block(batches);
  for (std::size_t b = 0; b < batches; ++b) {
    const std::size_t lo = b * n / batches, hi = (b + 1) * n / batches;
    auto& acc = block[b];
    for (std::size_t i = lo; i < hi; ++i) {
      const Complex z = joint.microwave.samples[i];
      const double w = joint.optical_intensity[i];
      const Complex pw[3] = {1.0, z, z * z};
      const Complex cpw[3] = {1.0, std::conj(z), std::conj(z * z)};
      acc.count += 1.0;
      acc.a1 += w;
      acc.a2 += w * w;
      for (int r = 0; r < 3; ++r) {
        for (int q = 0; q < 3; ++q) {
          acc.s(r, q) += cpw[r] * pw[q];
          acc.ws(r, q) += w * cpw[r] * pw[q];
        }
      }
    }
  }
  JointSums total;
  for (const auto& b : block) total += b;
  const BoundValues full = bound_values(total, options.gain, h);

  // Delete-one-block jackknife.
  std::vector<BoundValues> jack;
  jack.reserve(batches);
  for (const auto& b : block) {
    JointSums rest = total;
    rest -= b;
    jack.push_back(bound_values(rest, options.gain, h));
  }
  auto estimate = [&](double full_value, double BoundValues::*field) {
    double mean = 0.0;
    for (const auto& j : jack) mean += j.*field;
    mean /= static_cast<double>(batches);
    double ss = 0.0;
    for (const auto& j : jack) ss += (j.*field - mean) * (j.*field - mean);
    const double bs = static_cast<double>(batches);
    return Estimate{full_value, std::sqrt((bs - 1.0) / bs * ss)};
  };
  BoundReport r;
  r.g2_ac = estimate(full.g2_ac, &BoundValues::g2_ac);
  r.g2_aa = estimate(full.g2_aa, &BoundValues::g2_aa);
  r.g2_cc = estimate(full.g2_cc, &BoundValues::g2_cc);
  r.g2_cc_click = estimate(full.g2_cc_click, &BoundValues::g2_cc_click);
  r.cauchy_schwarz_margin = estimate(full.cs, &BoundValues::cs);
  r.click_margin = estimate(full.click, &BoundValues::click);
  if (!std::isfinite(r.cauchy_schwarz_margin.value) || !std::isfinite(r.click_margin.value)) {
    throw DegenerateError("classical_bound_check: degenerate normalization");
  }
  r.cauchy_schwarz_ok = r.cauchy_schwarz_margin.value >= -options.sigmas * r.cauchy_schwarz_margin.sigma;
  r.click_ok = r.click_margin.value >= -options.sigmas * r.click_margin.sigma;
  return r;
}

MomentsMatrix invert_set(const SampleSet& set, const SampleSet& noise, int max_order) {
  const double n_h = estimate_noise_occupation(noise);
  return invert_moments(raw_moments(set, max_order), set.gain, noise_moments(n_h, max_order));
}

namespace {

MomentsMatrix weighted_average(const std::vector<MomentsMatrix>& parts, const std::vector<double>& w,
                               const std::vector<std::string>& ids) {
  MomentsMatrix out = empty_moments(parts.front().order());
  Eigen::MatrixXd var = Eigen::MatrixXd::Zero(out.m.rows(), out.m.cols());
  for (std::size_t k = 0; k < parts.size(); ++k) {
    out.m += w[k] * parts[k].m;
    var += (w[k] * w[k]) * parts[k].std_error.cwiseAbs2();
    out.count += parts[k].count;
    if (parts[k].unphysical) out.unphysical = true;
    for (const auto& msg : parts[k].warnings) out.warnings.push_back("chunk '" + ids[k] + "': " + msg);
  }
  out.std_error = var.cwiseSqrt();
  return out;
}

std::vector<double> count_weights(const std::vector<std::size_t>& counts) {
  const double total = static_cast<double>(std::accumulate(counts.begin(), counts.end(), std::size_t{0}));
  std::vector<double> w;
  for (auto c : counts) w.push_back(static_cast<double>(c) / total);
  return w;
}

void require_noise(const std::vector<Chunk>& chunks) {
  if (chunks.empty()) throw DataError("inversion: no chunks");
  for (const auto& c : chunks) {
    if (!c.noise) throw DataError("chunk '" + c.id + "' has no noise reference");
  }
}

}  // namespace

ChunkedMoments chunked_inversion(const std::vector<Chunk>& chunks, int max_order) {
  require_noise(chunks);
  std::vector<MomentsMatrix> cond, unc;
  std::vector<std::size_t> n_cond, n_unc;
  std::vector<std::string> ids;
  for (const auto& c : chunks) {
    cond.push_back(invert_set(c.conditional, *c.noise, max_order));
    unc.push_back(invert_set(c.unconditional, *c.noise, max_order));
    n_cond.push_back(c.conditional.samples.size());
    n_unc.push_back(c.unconditional.samples.size());
    ids.push_back(c.id);
  }
  ChunkedMoments out;
  out.weights_conditional = count_weights(n_cond);
  out.weights_unconditional = count_weights(n_unc);
  out.conditional = weighted_average(cond, out.weights_conditional, ids);
  out.unconditional = weighted_average(unc, out.weights_unconditional, ids);
  return out;
}

ChunkedMoments pooled_inversion(const std::vector<Chunk>& chunks, double gain, int max_order) {
  require_noise(chunks);
  SampleSet cond, unc, noise;
  noise.kind = SampleKind::noise_only;
  cond.gain = unc.gain = noise.gain = gain;
  for (const auto& c : chunks) {
    cond.samples.insert(cond.samples.end(), c.conditional.samples.begin(), c.conditional.samples.end());
    unc.samples.insert(unc.samples.end(), c.unconditional.samples.begin(), c.unconditional.samples.end());
    noise.samples.insert(noise.samples.end(), c.noise->samples.begin(), c.noise->samples.end());
  }
  ChunkedMoments out;
  out.conditional = invert_set(cond, noise, max_order);
  out.unconditional = invert_set(unc, noise, max_order);
  out.weights_conditional = {1.0};
  out.weights_unconditional = {1.0};
  return out;
}

HeraldInputs reference_herald_inputs() {
  // Published budget: p_click over a 320 ns gate split by the SI table.
  constexpr double p_click = 2.7e-6, gate = 320e-9;
  const double total = p_click / gate;
  HeraldInputs in;
  in.signal_rate = 0.727 * total;
  in.thermal_rate = 0.069 * total;
  in.dcr = 0.171 * total;
  in.leak_rate = 0.033 * total;
  in.gate = gate;
  in.rep_rate = 50e3;
  return in;
}

HeraldBudget herald_budget(double signal_rate, double thermal_rate, double dcr, double leak_rate, double gate,
                           double rep_rate) {
  for (double r : {signal_rate, thermal_rate, dcr, leak_rate}) {
    if (!(r >= 0.0) || !std::isfinite(r)) throw ParameterError("herald_budget: rates must be finite and >= 0");
  }
  if (!(gate > 0.0) || !(rep_rate > 0.0)) throw ParameterError("herald_budget: gate and rep_rate must be positive");
  const double ps = signal_rate * gate, pt = thermal_rate * gate, pd = dcr * gate, pl = leak_rate * gate;
  const double p = ps + pt + pd + pl;
  if (!(p > 0.0)) throw DegenerateError("herald_budget: no click sources");
  HeraldBudget b;
  b.signal = ps / p;
  b.thermal = pt / p;
  b.dcr = pd / p;
  b.leak = pl / p;
  b.p_click = p;
  b.r_click = p * rep_rate;
  return b;
}

HeraldBudget herald_budget(const HeraldInputs& in) {
  return herald_budget(in.signal_rate, in.thermal_rate, in.dcr, in.leak_rate, in.gate, in.rep_rate);
}

GainCalibration calibrate_gain(double r, double r_o, double p_in, double p_det, double kappa_e_b,
                               double kappa_i_b, double omega_b) {
  for (double v : {r, r_o, p_in, p_det, kappa_e_b, kappa_i_b, omega_b}) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ParameterError("calibrate_gain: inputs must be finite and positive");
  }
  if (std::abs(kappa_e_b - kappa_i_b) <= 1e-12 * (kappa_e_b + kappa_i_b)) {
    throw CalibrationError("calibrate_gain: kappa_e,b = kappa_i,b leaves no reflected carrier");
  }
  const double ke = kTwoPi * kappa_e_b, ki = kTwoPi * kappa_i_b, w = kTwoPi * omega_b;
  GainCalibration g;
  g.n_b_sig = r / r_o;
  g.p_in_device = g.n_b_sig * kHbar * w * ki * ki / (4.0 * ke);
  const double refl = std::pow((ke - ki) / (ke + ki), 2);
  g.gain = p_det / (refl * g.p_in_device);
  g.gain_db = 10.0 * std::log10(g.gain);
  g.input_ratio = g.p_in_device / p_in;
  return g;
}

ExperimentStates experiment_states(const temporal::HeraldedSimulation& sim) {
  if (sim.noise_fraction > 0.0) {
    throw ParameterError("experiment_states: the simulation must exclude noise clicks (budget adds them)");
  }
  const auto ex = temporal::export_temporal_states(sim);
  auto p = ex.heralded.p;
  const double sum = std::accumulate(p.begin(), p.end(), 0.0);
  if (std::abs(sum - 1.0) > 1e-6) throw DataError("experiment_states: exported distribution is not normalized");
  for (auto& x : p) x /= sum;
  ExperimentStates st;
  st.heralded = PhaseSymmetricState::from({p});
  st.unconditional = PhaseSymmetricState::thermal(sim.unconditional[sim.peak_index]);
  return st;
}

std::string to_string(ClickSource s) {
  switch (s) {
    case ClickSource::signal: return "signal";
    case ClickSource::thermal: return "thermal";
    case ClickSource::dcr: return "dcr";
    case ClickSource::leak: return "leak";
  }
  return "unknown";
}

Experiment synthesize_experiment(const ExperimentStates& states, const HeraldBudget& budget,
                                 const ExperimentOptions& options, std::uint64_t seed) {
  const double fsum = budget.signal + budget.thermal + budget.dcr + budget.leak;
  if (std::abs(fsum - 1.0) > 1e-9 || budget.signal < 0 || budget.thermal < 0 || budget.dcr < 0 || budget.leak < 0) {
    throw ParameterError("synthesize_experiment: budget fractions must be >= 0 and sum to 1");
  }
  if (options.chunks == 0 || options.conditional < options.chunks || options.unconditional < options.chunks ||
      options.noise < options.chunks) {
    throw ParameterError("synthesize_experiment: every chunk needs at least one record of each kind");
  }
  if (!options.chunk_gains.empty() && options.chunk_gains.size() != options.chunks) {
    throw ParameterError("synthesize_experiment: chunk_gains must list one gain per chunk");
  }
  const PhaseSymmetricState vacuum;
  Experiment ex;
  const std::discrete_distribution<int> source({budget.signal, budget.thermal, budget.dcr, budget.leak});
  auto share = [&](std::size_t total, std::size_t k) {
    return total / options.chunks + (k < total % options.chunks ? 1 : 0);
  };
  for (std::size_t k = 0; k < options.chunks; ++k) {
    const double g = options.chunk_gains.empty() ? options.gain : options.chunk_gains[k];
    const std::string id = std::to_string(k);
    const std::size_t n_cond = share(options.conditional, k);

    rng::Engine gen = rng::substream(seed, (std::uint64_t{1} << 32) + k);
    auto pick = source;
    std::vector<ClickSource> src(n_cond);
    std::size_t n_pair = 0;
    for (auto& s : src) {
      s = static_cast<ClickSource>(pick(gen));
      ex.clicks.counts[static_cast<int>(s)]++;
      if (s == ClickSource::signal || s == ClickSource::thermal) ++n_pair;
    }
    Chunk chunk;
    chunk.id = id;
    chunk.conditional.kind = SampleKind::conditional;
    chunk.conditional.gain = g;
    chunk.conditional.chunk_id = id;
    chunk.conditional.seed = rng::substream_seed(seed, 4 * k);
    SampleSet pair, noise_click;
    if (n_pair > 0) pair = sample_heterodyne(states.heralded, options.n_add, g, n_pair, rng::substream_seed(seed, 4 * k));
    if (n_cond > n_pair) {
      noise_click = sample_heterodyne(states.unconditional, options.n_add, g, n_cond - n_pair,
                                      rng::substream_seed(seed, 4 * k + 1));
    }
    std::size_t ip = 0, in = 0;
    chunk.conditional.samples.reserve(n_cond);
    for (auto s : src) {
      const bool is_pair = s == ClickSource::signal || s == ClickSource::thermal;
      chunk.conditional.samples.push_back(is_pair ? pair.samples[ip++] : noise_click.samples[in++]);
    }
    chunk.unconditional = sample_heterodyne(states.unconditional, options.n_add, g, share(options.unconditional, k),
                                            rng::substream_seed(seed, 4 * k + 2), SampleKind::unconditional);
    chunk.unconditional.chunk_id = id;
    chunk.noise = sample_heterodyne(vacuum, options.n_add, g, share(options.noise, k),
                                    rng::substream_seed(seed, 4 * k + 3), SampleKind::noise_only);
    chunk.noise->chunk_id = id;
    ex.clicks.sources.insert(ex.clicks.sources.end(), src.begin(), src.end());
    ex.chunks.push_back(std::move(chunk));
  }
  ex.clicks.pump_trials = budget.p_click > 0.0 ? static_cast<double>(options.conditional) / budget.p_click : 0.0;
  return ex;
}

Experiment simulate_experiment(const model::SystemParams& params, const model::PulseProfile& pulse,
                               const engine::BathSchedule& baths, const temporal::TemporalEnvelope& env,
                               const HeraldBudget& budget, const ExperimentOptions& options, std::uint64_t seed,
                               temporal::SimulationOptions sim_options) {
  sim_options.dcr_fraction = 0.0;
  sim_options.leak_fraction = 0.0;
  std::vector<double> delays;
  for (int i = 0; i <= 80; ++i) delays.push_back(-0.4e-6 + 25e-9 * i);
  const auto sim =
      temporal::simulate_heralded(params, pulse, baths, env, temporal::default_gate(pulse), delays, sim_options);
  return synthesize_experiment(experiment_states(sim), budget, options, seed);
}

std::string sidecar_path(const std::string& csv_path) {
  const std::string ext = ".csv";
  if (csv_path.size() > ext.size() && csv_path.compare(csv_path.size() - ext.size(), ext.size(), ext) == 0) {
    return csv_path.substr(0, csv_path.size() - ext.size()) + ".json";
  }
  return csv_path + ".json";
}

void write_sample_set(const std::string& csv_path, const SampleSet& set, const std::string& config_hash) {
  validate(set);
  io::CsvWriter w(csv_path, {"re_v", "im_v", "kind", "chunk_id"});
  const std::string kind = to_string(set.kind);
  for (const auto& z : set.samples) w.row({io::format_number(z.real()), io::format_number(z.imag()), kind, set.chunk_id});
  w.close();
  nlohmann::json j;
  j["kind"] = kind;
  j["gain"] = set.gain;
  j["seed"] = set.seed;
  j["chunk_id"] = set.chunk_id;
  j["count"] = set.samples.size();
  j["config_hash"] = config_hash;
  std::ofstream out(sidecar_path(csv_path));
  if (!out) throw DataError("cannot write " + sidecar_path(csv_path));
  out << j.dump(2) << '\n';
}

SampleSet read_sample_set(const std::string& csv_path) {
  const auto table = io::read_csv(csv_path);
  const std::size_t re = table.column("re_v"), im = table.column("im_v"), kind = table.column("kind"),
                    chunk = table.column("chunk_id");
  std::ifstream side(sidecar_path(csv_path));
  if (!side) throw DataError(csv_path + ": missing sidecar " + sidecar_path(csv_path));
  nlohmann::json j;
  try {
    side >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(sidecar_path(csv_path) + ": " + e.what());
  }
  SampleSet set;
  try {
    set.kind = sample_kind_from_string(j.at("kind").get<std::string>());
    set.gain = j.at("gain").get<double>();
    set.seed = j.at("seed").get<std::uint64_t>();
    set.chunk_id = j.at("chunk_id").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(sidecar_path(csv_path) + ": " + e.what());
  }
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::string where = csv_path + ":" + std::to_string(table.line_numbers[r]);
    if (sample_kind_from_string(row[kind]) != set.kind || row[chunk] != set.chunk_id) {
      throw DataError(where + ": kind or chunk_id disagrees with the sidecar");
    }
    set.samples.emplace_back(io::parse_number(row[re], where), io::parse_number(row[im], where));
  }
  if (j.contains("count") && j["count"].get<std::size_t>() != set.samples.size()) {
    throw DataError(csv_path + ": sample count disagrees with the sidecar");
  }
  validate(set);
  return set;
}

void write_histogram_csv(const std::string& path, const Histogram& h) {
  io::CsvWriter w(path, {"bin_low", "bin_high", "count"});
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    w.row({io::format_number(h.edges[i]), io::format_number(h.edges[i + 1]), std::to_string(h.counts[i])});
  }
  w.close();
}

void write_convergence_csv(const std::string& path, const std::vector<ConvergencePoint>& trace) {
  io::CsvWriter w(path, {"n_boot", "err_low", "err_high"});
  for (const auto& p : trace) {
    w.row({std::to_string(p.n_boot), io::format_number(p.err_low), io::format_number(p.err_high)});
  }
  w.close();
}

}  // namespace spdc::tomo
