#pragma once

#include <optional>
#include <vector>

namespace heatlaw {

struct MomentEstimate {
  int order = 0;
  double estimate = 0.0;
  double std_error = 0.0;
};

// raw moments E[X^k] with CLT standard errors; needs >= 100 samples
std::vector<MomentEstimate> empirical_moments(const std::vector<double>& x, const std::vector<int>& orders);

struct HillEstimate {
  double index = 0.0;      // tail exponent alpha
  double std_error = 0.0;  // alpha / sqrt(k)
  int k_used = 0;
  // (alpha(k/4) - alpha(k)) in units of its standard deviation under a
  // Pareto tail; large positive values mean the index keeps growing deeper
  // in the tail
  double drift_z = 0.0;
  bool light_tailed = false;  // drift_z > 3
};

// Hill estimator on the k largest positive values of y (k >= 10).
// Throws InsufficientTail.
HillEstimate hill_estimate(const std::vector<double>& y, int k);
// on |x|
double hill_tail_index(const std::vector<double>& samples, int k);

struct MarkovPoint {
  double E = 0.0;
  double empirical = 0.0;  // P(|X| > E)
  double bound = 0.0;
  double binom_se = 0.0;
};

struct MarkovMode {
  enum Kind { Power, Exponential } kind = Power;
  int n = 0;           // power mode: bound C E^{-(2n+2)}, C = E|X|^{2n+2}
  double gamma = 0.0;  // exponential mode: bound C e^{-gamma E}
  std::optional<double> C;  // defaults to the empirical moment
};

struct MarkovCurve {
  std::vector<MarkovPoint> points;
  double C = 0.0;
  bool dominated = true;  // empirical <= bound + 3 binom_se everywhere
};

MarkovCurve markov_curve(const std::vector<double>& samples, const MarkovMode& mode, const std::vector<double>& E_grid);

struct TailReport {
  HillEstimate hill, hill_upper, hill_lower;  // |x|, positive side, negative side
  std::vector<MomentEstimate> moment_table;
  MarkovCurve markov;
};

// per-side indices are left at k_used = 0 when a side has too few values
TailReport tail_report(const std::vector<double>& samples, const std::vector<int>& orders, int k,
                       const MarkovMode& mode, const std::vector<double>& E_grid);

}  // namespace heatlaw
