#include "heatlaw/stats.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "heatlaw/errors.hpp"

namespace heatlaw {

std::vector<MomentEstimate> empirical_moments(const std::vector<double>& x, const std::vector<int>& orders) {
  if (x.size() < 100) throw PreconditionViolation("empirical moments need at least 100 samples");
  const double n = double(x.size());
  std::vector<MomentEstimate> out;
  for (int k : orders) {
    if (k < 0) throw PreconditionViolation("moment order must be >= 0");
    double m = 0.0;
    for (double v : x) m += std::pow(v, k);
    m /= n;
    double var = 0.0;
    for (double v : x) {
      const double d = std::pow(v, k) - m;
      var += d * d;
    }
    var /= n - 1.0;
    out.push_back({k, m, std::sqrt(var / n)});
  }
  return out;
}

namespace {

double hill_mean_log(const std::vector<double>& desc, int k) {
  const double ref = std::log(desc[std::size_t(k)]);
  double h = 0.0;
  for (int i = 0; i < k; ++i) h += std::log(desc[std::size_t(i)]) - ref;
  return h / k;
}

}  // namespace

HillEstimate hill_estimate(const std::vector<double>& y, int k) {
  if (k < 10) throw PreconditionViolation("Hill estimator needs k >= 10");
  std::vector<double> pos;
  for (double v : y)
    if (v > 0.0 && std::isfinite(v)) pos.push_back(v);
  if (pos.size() < std::size_t(k) + 1)
    throw InsufficientTail("only " + std::to_string(pos.size()) + " positive values for k = " + std::to_string(k));
  std::partial_sort(pos.begin(), pos.begin() + k + 1, pos.end(), std::greater<>());
  const double h = hill_mean_log(pos, k);
  if (!(h > 0.0)) throw InsufficientTail("upper order statistics have no spread");
  HillEstimate r;
  r.k_used = k;
  r.index = 1.0 / h;
  r.std_error = r.index / std::sqrt(double(k));
  const int m = k / 4;
  if (m >= 10) {
    const double hm = hill_mean_log(pos, m);
    if (hm > 0.0) {
      // nested means of iid Exp(alpha) spacings: Var = alpha^2 (1/m - 1/k)
      const double sd = r.index * std::sqrt(1.0 / m - 1.0 / k);
      r.drift_z = (1.0 / hm - r.index) / sd;
      r.light_tailed = r.drift_z > 3.0;
    }
  }
  return r;
}

double hill_tail_index(const std::vector<double>& samples, int k) {
  std::vector<double> a(samples.size());
  std::transform(samples.begin(), samples.end(), a.begin(), [](double v) { return std::abs(v); });
  return hill_estimate(a, k).index;
}

MarkovCurve markov_curve(const std::vector<double>& samples, const MarkovMode& mode, const std::vector<double>& E_grid) {
  if (samples.empty()) throw PreconditionViolation("no samples");
  std::vector<double> a(samples.size());
  std::transform(samples.begin(), samples.end(), a.begin(), [](double v) { return std::abs(v); });
  std::sort(a.begin(), a.end());
  const double n = double(a.size());
  MarkovCurve c;
  if (mode.C) {
    c.C = *mode.C;
  } else {
    double s = 0.0;
    if (mode.kind == MarkovMode::Power) {
      if (mode.n < 0) throw PreconditionViolation("n must be >= 0");
      for (double v : a) s += std::pow(v, 2 * mode.n + 2);
    } else {
      for (double v : a) s += std::exp(mode.gamma * v);
    }
    c.C = s / n;
  }
  if (!std::isfinite(c.C)) throw PreconditionViolation("moment for the Markov bound is not finite");
  for (double E : E_grid) {
    if (!(E > 0.0)) throw PreconditionViolation("E grid must be positive");
    const double above = double(a.end() - std::upper_bound(a.begin(), a.end(), E));
    MarkovPoint p;
    p.E = E;
    p.empirical = above / n;
    p.bound = mode.kind == MarkovMode::Power ? c.C * std::pow(E, -(2 * mode.n + 2)) : c.C * std::exp(-mode.gamma * E);
    p.binom_se = std::sqrt(p.empirical * (1.0 - p.empirical) / n);
    c.dominated &= p.empirical <= p.bound + 3.0 * p.binom_se;
    c.points.push_back(p);
  }
  return c;
}

TailReport tail_report(const std::vector<double>& samples, const std::vector<int>& orders, int k,
                       const MarkovMode& mode, const std::vector<double>& E_grid) {
  TailReport r;
  std::vector<double> abs_x, up, down;
  for (double v : samples) {
    abs_x.push_back(std::abs(v));
    up.push_back(v);
    down.push_back(-v);
  }
  r.hill = hill_estimate(abs_x, k);
  try {
    r.hill_upper = hill_estimate(up, k);
  } catch (const InsufficientTail&) {
  }
  try {
    r.hill_lower = hill_estimate(down, k);
  } catch (const InsufficientTail&) {
  }
  r.moment_table = empirical_moments(samples, orders);
  r.markov = markov_curve(samples, mode, E_grid);
  return r;
}

}  // namespace heatlaw
