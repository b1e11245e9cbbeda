#pragma once

// Pilot-signal generation and characterisation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "whid/dft.hpp"
#include "whid/error.hpp"
#include "whid/signal.hpp"

namespace whid {

/// Sum of equal-amplitude cosines at harmonics first_harmonic .. first_harmonic+M-1
/// of the fundamental f1 (normalised to f_s = 1).
struct MultisineSpec {
  int num_harmonics = 1;
  double fundamental = 0.25;
  std::vector<double> phases;  // one per harmonic
  std::size_t length = 1;
  int first_harmonic = 1;

  int last_harmonic() const { return first_harmonic + num_harmonics - 1; }

  void validate() const {
    if (num_harmonics < 1) throw ParameterError("multisine: num_harmonics must be >= 1");
    if (first_harmonic < 1) throw ParameterError("multisine: first_harmonic must be >= 1");
    if (!(fundamental > 0.0 && fundamental < 0.5))
      throw ParameterError("multisine: fundamental must lie in (0, 1/2)");
    if (last_harmonic() * fundamental > 0.5 + 1e-12)
      throw ParameterError("multisine: highest harmonic exceeds Nyquist (M*f1 > 1/2)");
    if (phases.size() != static_cast<std::size_t>(num_harmonics))
      throw ParameterError("multisine: phases vector length must equal num_harmonics");
    if (length < 1) throw ParameterError("multisine: length must be >= 1");
  }
};

/// x(n) = sum_k cos(2 pi f1 k n + theta_k); unit amplitude per harmonic.
inline Signal multisine(const MultisineSpec& spec) {
  spec.validate();
  std::vector<double> x(spec.length, 0.0);
  for (int j = 0; j < spec.num_harmonics; ++j) {
    const double k = spec.first_harmonic + j;
    const double theta = spec.phases[static_cast<std::size_t>(j)];
    for (std::size_t n = 0; n < spec.length; ++n) {
      // argument taken modulo one period
      const double cycles = std::fmod(spec.fundamental * k * static_cast<double>(n), 1.0);
      x[n] += std::cos(2.0 * std::numbers::pi * cycles + theta);
    }
  }
  return Signal(std::move(x));
}

/// theta_k = pi * floor(k^2 / 2M) mod 2 pi, k = 1..M. Values are exactly 0 or pi.
inline std::vector<double> schroeder_phases(int num_harmonics) {
  if (num_harmonics < 1) throw ParameterError("schroeder_phases: M must be >= 1");
  const auto m = static_cast<std::int64_t>(num_harmonics);
  std::vector<double> theta(static_cast<std::size_t>(num_harmonics));
  for (std::int64_t k = 1; k <= m; ++k)
    theta[static_cast<std::size_t>(k - 1)] = ((k * k) / (2 * m)) % 2 == 0 ? 0.0 : std::numbers::pi;
  return theta;
}

struct ParValue {
  double linear;
  double db;
};

/// Peak-to-average power ratio over the whole record.
inline ParValue par(const Signal& x) {
  const double mean = x.mean_power();
  if (mean == 0.0) throw DegenerateError("PAR of an all-zero signal is undefined");
  const double peak = x.peak();
  const double ratio = peak * peak / mean;
  return {ratio, to_db(ratio)};
}

namespace detail {

// Evaluates max_{j in [m0, M]} PAR of the truncated multisines sharing one phase vector.
// cos(a + theta) = cos a cos theta - sin a sin theta, with cos a / sin a tabulated.
class TruncatedParObjective {
 public:
  TruncatedParObjective(int num_harmonics, int min_harmonics, double fundamental,
                        std::size_t length, int first_harmonic)
      : m_(num_harmonics), m0_(min_harmonics), n_(length),
        cos_(static_cast<std::size_t>(num_harmonics) * length),
        sin_(static_cast<std::size_t>(num_harmonics) * length) {
    for (int j = 0; j < m_; ++j) {
      const double k = first_harmonic + j;
      for (std::size_t n = 0; n < n_; ++n) {
        const double a = 2.0 * std::numbers::pi *
                         std::fmod(fundamental * k * static_cast<double>(n), 1.0);
        cos_[idx(j, n)] = std::cos(a);
        sin_[idx(j, n)] = std::sin(a);
      }
    }
  }

  double operator()(const std::vector<double>& theta) const {
    std::vector<double> x(n_, 0.0);
    double worst = 0.0;
    for (int j = 0; j < m_; ++j) {
      const double c = std::cos(theta[static_cast<std::size_t>(j)]);
      const double s = std::sin(theta[static_cast<std::size_t>(j)]);
      double peak = 0.0, energy = 0.0;
      for (std::size_t n = 0; n < n_; ++n) {
        x[n] += cos_[idx(j, n)] * c - sin_[idx(j, n)] * s;
        peak = std::max(peak, x[n] * x[n]);
        energy += x[n] * x[n];
      }
      if (j + 1 >= m0_) {
        if (energy == 0.0) return std::numeric_limits<double>::infinity();
        worst = std::max(worst, peak * static_cast<double>(n_) / energy);
      }
    }
    return worst;
  }

 private:
  std::size_t idx(int j, std::size_t n) const { return static_cast<std::size_t>(j) * n_ + n; }

  int m_, m0_;
  std::size_t n_;
  std::vector<double> cos_, sin_;
};

inline double wrap_phase(double theta) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  theta = std::fmod(theta, two_pi);
  return theta < 0.0 ? theta + two_pi : theta;
}

}  // namespace detail

struct PhaseSearchOptions {
  std::size_t budget = 10000;  // objective evaluations after the seed
  std::uint64_t seed = 1;
  int population = 32;
  double mutation_sigma = 0.3;  // rad
  int elitism = 2;
  int tournament = 3;
  int first_harmonic = 1;
};

struct PhaseSearchResult {
  std::vector<double> phases;
  double objective;       // worst-case linear PAR of the returned phases
  double seed_objective;  // same, for the Schroeder seed
  std::size_t evaluations;
  std::vector<double> trace;  // best objective after each generation
};

/// Evolutionary search for phases minimising max_{j in [m0, M]} PAR(x^j),
/// seeded with Schroeder phases. Never returns something worse than the seed.
inline PhaseSearchResult minmax_phase_search(int num_harmonics, int min_harmonics,
                                             double fundamental, std::size_t length,
                                             const PhaseSearchOptions& opt = {}) {
  if (min_harmonics < 1 || min_harmonics > num_harmonics)
    throw ParameterError("minmax_phase_search: need 1 <= M0 <= M");
  if (opt.population < 2 || opt.elitism < 0 || opt.elitism >= opt.population || opt.tournament < 1)
    throw ParameterError("minmax_phase_search: bad population settings");
  MultisineSpec probe{num_harmonics, fundamental, std::vector<double>(num_harmonics, 0.0), length,
                      opt.first_harmonic};
  probe.validate();

  const detail::TruncatedParObjective objective(num_harmonics, min_harmonics, fundamental, length,
                                                opt.first_harmonic);
  PhaseSearchResult result;
  result.phases = schroeder_phases(num_harmonics);
  result.seed_objective = objective(result.phases);
  result.objective = result.seed_objective;
  result.evaluations = 0;
  if (opt.budget == 0) return result;

  struct Candidate {
    std::vector<double> theta;
    double score;
  };
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> step(0.0, opt.mutation_sigma);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto m = static_cast<std::size_t>(num_harmonics);
  const double gene_rate = std::max(1.0 / static_cast<double>(m), 0.1);

  auto mutate = [&](std::vector<double>& theta) {
    bool changed = false;
    for (auto& t : theta)
      if (unit(rng) < gene_rate) {
        t = detail::wrap_phase(t + step(rng));
        changed = true;
      }
    if (!changed) {
      auto& t = theta[static_cast<std::size_t>(unit(rng) * static_cast<double>(m)) % m];
      t = detail::wrap_phase(t + step(rng));
    }
  };
  auto evaluate = [&](std::vector<double> theta) -> Candidate {
    ++result.evaluations;
    const double s = objective(theta);
    return {std::move(theta), s};
  };

  std::vector<Candidate> pop;
  pop.push_back({result.phases, result.seed_objective});
  while (pop.size() < static_cast<std::size_t>(opt.population) && result.evaluations < opt.budget) {
    auto theta = result.phases;
    mutate(theta);
    pop.push_back(evaluate(std::move(theta)));
  }

  auto by_score = [](const Candidate& a, const Candidate& b) { return a.score < b.score; };
  auto pick = [&]() -> const Candidate& {
    std::size_t best = static_cast<std::size_t>(unit(rng) * static_cast<double>(pop.size())) % pop.size();
    for (int t = 1; t < opt.tournament; ++t) {
      const std::size_t c =
          static_cast<std::size_t>(unit(rng) * static_cast<double>(pop.size())) % pop.size();
      if (pop[c].score < pop[best].score) best = c;
    }
    return pop[best];
  };

  std::sort(pop.begin(), pop.end(), by_score);
  result.trace.push_back(pop.front().score);
  while (result.evaluations < opt.budget) {
    std::vector<Candidate> next(pop.begin(),
                                pop.begin() + std::min<std::ptrdiff_t>(opt.elitism, std::ssize(pop)));
    while (next.size() < static_cast<std::size_t>(opt.population) && result.evaluations < opt.budget) {
      const auto& a = pick();
      const auto& b = pick();
      std::vector<double> child(m);
      for (std::size_t i = 0; i < m; ++i) child[i] = unit(rng) < 0.5 ? a.theta[i] : b.theta[i];
      mutate(child);
      next.push_back(evaluate(std::move(child)));
    }
    pop = std::move(next);
    std::sort(pop.begin(), pop.end(), by_score);
    result.trace.push_back(pop.front().score);
  }

  if (pop.front().score < result.objective) {
    result.phases = pop.front().theta;
    result.objective = pop.front().score;
  }
  return result;
}

/// I.i.d. Gaussian samples with the same mean power as `reference`.
inline Signal matched_white_noise(const Signal& reference, std::size_t length, std::uint64_t seed) {
  if (length < 1) throw ParameterError("matched_white_noise: length must be >= 1");
  const double sigma = std::sqrt(reference.mean_power());
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> out(length);
  for (auto& v : out) v = sigma * normal(rng);
  return Signal(std::move(out), reference.sample_rate());
}

/// Extent of periodogram bins in [0, 1/2] lying within `threshold_db` (negative)
/// of the peak bin, as a normalised frequency width: (k_hi - k_lo + 1) / N.
inline double occupied_bandwidth(const Signal& x, double threshold_db = -20.0) {
  const auto p = dft::periodogram(x.samples());
  const double peak = *std::max_element(p.begin(), p.end());
  if (peak == 0.0) return 0.0;
  const double floor = peak * from_db(-std::abs(threshold_db));
  std::size_t lo = p.size(), hi = 0;
  for (std::size_t k = 0; k < p.size(); ++k)
    if (p[k] >= floor) {
      lo = std::min(lo, k);
      hi = k;
    }
  return static_cast<double>(hi - lo + 1) / static_cast<double>(x.size());
}

/// Schroeder multisine with harmonics 1..M at fundamental 1/period, one or more periods long.
inline MultisineSpec schroeder_multisine(int num_harmonics, double fundamental, std::size_t length,
                                         int first_harmonic = 1) {
  return MultisineSpec{num_harmonics, fundamental, schroeder_phases(num_harmonics), length,
                       first_harmonic};
}

}  // namespace whid
