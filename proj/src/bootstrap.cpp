#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include "spdc/tomography.hpp"

namespace spdc::tomo {

namespace {

constexpr std::size_t kReplicateBlock = 16;

// Multinomial resample as per-sample counts, then one sequential pass. Byte
// counts keep the table cache-resident; the rare wrap past 255 is logged in
// `overflow` so the counts stay exact.
struct Counts {
  std::vector<std::uint8_t> c;
  std::vector<std::uint32_t> overflow;

  double at(std::size_t s) const { return static_cast<double>(c[s]); }
};

void draw_counts(Counts& counts, std::size_t n, rng::Engine& gen) {
  counts.c.assign(n, 0);
  counts.overflow.clear();
  const std::uint64_t m = n;
  for (std::uint64_t s = 0; s < m; ++s) {
    // Multiply-shift index; the bias is below n / 2^64.
    const auto idx = static_cast<std::uint64_t>((static_cast<unsigned __int128>(gen()) * m) >> 64);
    if (++counts.c[idx] == 0) counts.overflow.push_back(static_cast<std::uint32_t>(idx));
  }
}

MomentsMatrix finish(const double re[8][8], const double im[8][8], int k, std::size_t n) {
  MomentsMatrix out;
  out.m.resize(k + 1, k + 1);
  const double inv = 1.0 / static_cast<double>(n);
  for (int i = 0; i <= k; ++i) {
    out.m(i, i) = re[i][i] * inv;
    for (int j = i + 1; j <= k; ++j) {
      out.m(i, j) = Complex(re[i][j], im[i][j]) * inv;
      out.m(j, i) = std::conj(out.m(i, j));
    }
  }
  out.std_error = Eigen::MatrixXd::Zero(k + 1, k + 1);
  out.count = n;
  return out;
}

// conj(z)^i z^j for one sample, accumulated with weight c.
void accumulate(double re[8][8], double im[8][8], int k, Complex z, double c) {
  double pr[8], pi[8];
  pr[0] = 1.0;
  pi[0] = 0.0;
  for (int i = 1; i <= k; ++i) {
    pr[i] = pr[i - 1] * z.real() - pi[i - 1] * z.imag();
    pi[i] = pr[i - 1] * z.imag() + pi[i - 1] * z.real();
  }
  for (int i = 0; i <= k; ++i) {
    for (int j = i; j <= k; ++j) {
      re[i][j] += c * (pr[i] * pr[j] + pi[i] * pi[j]);
      im[i][j] += c * (pr[i] * pi[j] - pi[i] * pr[j]);
    }
  }
}

MomentsMatrix resampled_moments(const std::vector<Complex>& x, int k, Counts& counts, rng::Engine& gen) {
  draw_counts(counts, x.size(), gen);
  double re[8][8] = {}, im[8][8] = {};
  if (k == 2) {
    // Unrolled: z, z^2, |z|^2, |z|^2 z, |z|^4.
    double s0 = 0, s1r = 0, s1i = 0, s2r = 0, s2i = 0, s11 = 0, s12r = 0, s12i = 0, s22 = 0;
    for (std::size_t s = 0; s < x.size(); ++s) {
      const double c = counts.at(s);
      const double a = x[s].real(), b = x[s].imag();
      const double q = a * a + b * b, cq = c * q;
      s0 += c;
      s1r += c * a;
      s1i += c * b;
      s2r += c * (a * a - b * b);
      s2i += c * (2.0 * a * b);
      s11 += cq;
      s12r += cq * a;
      s12i += cq * b;
      s22 += cq * q;
    }
    re[0][0] = s0;
    re[0][1] = s1r, im[0][1] = s1i;
    re[0][2] = s2r, im[0][2] = s2i;
    re[1][1] = s11;
    re[1][2] = s12r, im[1][2] = s12i;
    re[2][2] = s22;
  } else {
    for (std::size_t s = 0; s < x.size(); ++s) {
      if (counts.c[s] != 0) accumulate(re, im, k, x[s], counts.at(s));
    }
  }
  for (auto idx : counts.overflow) accumulate(re, im, k, x[idx], 256.0);
  return finish(re, im, k, x.size());
}

double quantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

std::pair<double, double> error_band(std::vector<double> v, double mean) {
  std::sort(v.begin(), v.end());
  const double f = static_cast<double>(std::upper_bound(v.begin(), v.end(), mean) - v.begin()) /
                   static_cast<double>(v.size());
  const double lo = quantile(v, std::max(0.0, f - 0.341));
  const double hi = quantile(v, std::min(1.0, f + 0.341));
  return {std::max(0.0, mean - lo), std::max(0.0, hi - mean)};
}

BootstrapResult bootstrap(const std::vector<const SampleSet*>& sets, const MomentStatistic& statistic,
                          const BootstrapOptions& options) {
  if (sets.empty()) throw DataError("bootstrap: no sample sets");
  if (options.n_boot < 100) throw ParameterError("bootstrap: n_boot must be >= 100");
  if (options.max_order < 1 || options.max_order > 7) throw ParameterError("bootstrap: max_order must be in [1, 7]");
  std::vector<MomentsMatrix> full;
  for (const auto* s : sets) {
    validate(*s);
    full.push_back(raw_moments(*s, options.max_order));
  }
  BootstrapResult out;
  out.result.value = statistic(full);
  out.result.n_bootstrap = options.n_boot;

  std::vector<double> rep(options.n_boot, std::numeric_limits<double>::quiet_NaN());
  const std::size_t blocks = (options.n_boot + kReplicateBlock - 1) / kReplicateBlock;
  rng::parallel_for(blocks, [&](std::size_t b) {
    const std::size_t end = std::min(options.n_boot, (b + 1) * kReplicateBlock);
    std::vector<MomentsMatrix> raw(sets.size());
    Counts counts;
    for (std::size_t r = b * kReplicateBlock; r < end; ++r) {
      rng::Engine gen = rng::substream(options.seed, r);
      for (std::size_t s = 0; s < sets.size(); ++s) {
        raw[s] = resampled_moments(sets[s]->samples, options.max_order, counts, gen);
      }
      try {
        rep[r] = statistic(raw);
      } catch (const DegenerateError&) {
        // dropped below
      }
    }
  });

  std::vector<double> valid;
  valid.reserve(rep.size());
  std::vector<std::size_t> valid_before(rep.size() + 1, 0);
  for (std::size_t r = 0; r < rep.size(); ++r) {
    if (std::isfinite(rep[r])) valid.push_back(rep[r]);
    valid_before[r + 1] = valid.size();
  }
  out.dropped = rep.size() - valid.size();
  if (static_cast<double>(out.dropped) > options.max_drop_fraction * static_cast<double>(rep.size()) ||
      valid.size() < 2) {
    throw DegenerateError("bootstrap: statistic undefined on " + std::to_string(out.dropped) + " of " +
                          std::to_string(rep.size()) + " resamples");
  }

  out.mean = mean_of(valid);
  double ss = 0.0;
  for (double x : valid) ss += (x - out.mean) * (x - out.mean);
  out.stddev = std::sqrt(ss / static_cast<double>(valid.size() - 1));
  const auto [lo, hi] = error_band(valid, out.mean);
  out.result.ci_low = out.result.value - lo;
  out.result.ci_high = out.result.value + hi;

  const std::size_t bins = std::max<std::size_t>(1, options.bins);
  const auto [mn, mx] = std::minmax_element(valid.begin(), valid.end());
  const double width = (*mx - *mn) / static_cast<double>(bins);
  out.histogram.edges.resize(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) out.histogram.edges[i] = *mn + width * static_cast<double>(i);
  out.histogram.counts.assign(bins, 0);
  for (double x : valid) {
    std::size_t i = width > 0.0 ? static_cast<std::size_t>((x - *mn) / width) : 0;
    out.histogram.counts[std::min(i, bins - 1)]++;
  }

  std::vector<std::size_t> points = options.trace_points;
  if (points.empty()) {
    for (std::size_t decade = 100; decade <= options.n_boot; decade *= 10) {
      for (std::size_t m : {1, 2, 5}) {
        if (m * decade <= options.n_boot) points.push_back(m * decade);
      }
    }
    if (points.empty() || points.back() != options.n_boot) points.push_back(options.n_boot);
  }
  for (std::size_t n : points) {
    if (n < 2 || n > options.n_boot) throw ParameterError("bootstrap: trace points must lie in [2, n_boot]");
    std::vector<double> head(valid.begin(), valid.begin() + static_cast<std::ptrdiff_t>(valid_before[n]));
    if (head.size() < 2) continue;
    const auto [el, eh] = error_band(head, mean_of(head));
    out.trace.push_back({n, el, eh});
  }
  out.replicates = std::move(rep);
  return out;
}

BootstrapResult bootstrap(const SampleSet& set, const MomentStatistic& statistic, const BootstrapOptions& options) {
  return bootstrap(std::vector<const SampleSet*>{&set}, statistic, options);
}

MomentStatistic g2_statistic(double gain, const MomentsMatrix& h) {
  return [gain, h](const std::vector<MomentsMatrix>& raw) { return g2_cc(invert_moments(raw.at(0), gain, h)).value; };
}

MomentStatistic g2_ac_statistic(double gain_click, const MomentsMatrix& h_click, double gain_uncond,
                                const MomentsMatrix& h_uncond) {
  return [=](const std::vector<MomentsMatrix>& raw) {
    return g2_ac(invert_moments(raw.at(0), gain_click, h_click), invert_moments(raw.at(1), gain_uncond, h_uncond))
        .value;
  };
}

namespace {

struct ChunkInversion {
  std::vector<double> gain_cond, gain_unc;
  std::vector<MomentsMatrix> h;
  std::vector<double> w_cond, w_unc;
};

// Count-weighted average of the inverted moments of sets [first, first + k).
MomentsMatrix averaged(const std::vector<MomentsMatrix>& raw, std::size_t first, const std::vector<double>& gains,
                       const std::vector<MomentsMatrix>& h, const std::vector<double>& w) {
  MomentsMatrix out = invert_moments(raw[first], gains[0], h[0]);
  out.m *= w[0];
  for (std::size_t k = 1; k < gains.size(); ++k) out.m += w[k] * invert_moments(raw[first + k], gains[k], h[k]).m;
  return out;
}

}  // namespace

TomographyReport analyze_chunks(const std::vector<Chunk>& chunks, const BootstrapOptions& options) {
  TomographyReport rep;
  rep.moments = chunked_inversion(chunks, options.max_order);
  rep.warnings = rep.moments.conditional.warnings;
  for (const auto& w : rep.moments.unconditional.warnings) rep.warnings.push_back(w);

  ChunkInversion inv;
  std::vector<const SampleSet*> cond, unc, both;
  for (const auto& c : chunks) {
    inv.gain_cond.push_back(c.conditional.gain);
    inv.gain_unc.push_back(c.unconditional.gain);
    inv.h.push_back(noise_moments(estimate_noise_occupation(*c.noise), options.max_order));
    cond.push_back(&c.conditional);
    unc.push_back(&c.unconditional);
  }
  inv.w_cond = rep.moments.weights_conditional;
  inv.w_unc = rep.moments.weights_unconditional;
  both = cond;
  both.insert(both.end(), unc.begin(), unc.end());
  const std::size_t k = chunks.size();

  const auto cond_stat = [&](const std::vector<MomentsMatrix>& raw) {
    return g2_cc(averaged(raw, 0, inv.gain_cond, inv.h, inv.w_cond)).value;
  };
  const auto unc_stat = [&](const std::vector<MomentsMatrix>& raw) {
    return g2_cc(averaged(raw, 0, inv.gain_unc, inv.h, inv.w_unc)).value;
  };
  const auto ac_stat = [&](const std::vector<MomentsMatrix>& raw) {
    return g2_ac(averaged(raw, 0, inv.gain_cond, inv.h, inv.w_cond), averaged(raw, k, inv.gain_unc, inv.h, inv.w_unc))
        .value;
  };
  BootstrapOptions o = options;
  rep.g2_cc_click = bootstrap(cond, cond_stat, o);
  o.seed = rng::substream_seed(options.seed, 1);
  rep.g2_cc = bootstrap(unc, unc_stat, o);
  o.seed = rng::substream_seed(options.seed, 2);
  rep.g2_ac = bootstrap(both, ac_stat, o);
  return rep;
}

}  // namespace spdc::tomo
