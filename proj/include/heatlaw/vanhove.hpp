#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "heatlaw/formfactor.hpp"
#include "heatlaw/numerics.hpp"

namespace heatlaw {

// Time weight of the intensity: (1 - cos(e t))/e^2 at a single time, or its
// integral over [t1, t2] for window statistics.
class TimeKernel {
 public:
  static TimeKernel at(double t);
  static TimeKernel window(double t1, double t2);

  double operator()(double e) const;
  double log_value(double e) const;
  // oscillation period in e, 0 when the kernel does not oscillate
  double period() const;
  bool vanishes() const { return t1_ == t2_ && t2_ == 0.0; }
  bool is_window() const { return window_; }

 private:
  bool window_ = false;
  double t1_ = 0.0, t2_ = 0.0;
};

class IntensityMeasure {
 public:
  // Checks the IR condition and that the total mass is finite unless check is false.
  IntensityMeasure(FormFactor f, double beta, double t, QuadratureRule rule = {}, bool check = true);

  const FormFactor& form() const { return f_; }
  double beta() const { return beta_; }
  double t() const { return t_; }
  const QuadratureRule& rule() const { return rule_; }

  // dnu_t/de, two-sided
  double density(double e) const;
  // |f(u)|^2 / |1 - exp(-beta e)| at e = +u or e = -u, u > 0, in log form
  double log_static(double u, int sign) const;

  // int_0^inf exp(logw(u)) K(u) |f(u)|^2 / |1 - exp(-beta sign u)| du, logw = nullptr means w = 1
  IntegralVerdict side_integral(const std::function<double(double)>& logw, int sign,
                                const TimeKernel& k) const;
  IntegralVerdict side_integral(const std::function<double(double)>& logw, int sign) const {
    return side_integral(logw, sign, TimeKernel::at(t_));
  }

  IntegralVerdict total_mass() const;
  // f outside Dom(e): the Poisson law is evaluated beyond the range where it is proven
  bool extrapolated() const;

 private:
  FormFactor f_;
  double beta_, t_;
  QuadratureRule rule_;
};

double intensity_density(const IntensityMeasure& nu, double e);

class PoissonLKLaw {
 public:
  explicit PoissonLKLaw(IntensityMeasure nu) : nu_(std::move(nu)) {}
  PoissonLKLaw(FormFactor f, double beta, double t, QuadratureRule rule = {})
      : nu_(std::move(f), beta, t, std::move(rule)) {}
  const IntensityMeasure& intensity() const { return nu_; }

 private:
  IntensityMeasure nu_;
};

// int (exp(i alpha e) - 1) dnu_t; throws InconclusiveVerdict when unsettled
cplx log_char_fn(const PoissonLKLaw& law, double alpha);
cplx char_fn(const PoissonLKLaw& law, double alpha);

IntegralVerdict cumulant(const PoissonLKLaw& law, int m);
IntegralVerdict cumulant(const IntensityMeasure& nu, int m, const TimeKernel& k);
// raw moments 1..up_to; a moment inherits the worst status among the cumulants it uses
std::vector<IntegralVerdict> moments(const PoissonLKLaw& law, int up_to);

// int (exp(gamma |e|) - 1) dnu_t
IntegralVerdict exp_moment_bound(const PoissonLKLaw& law, double gamma);
// log E exp(s dQ) = int (exp(s e) - 1) dnu_t
IntegralVerdict log_mgf(const PoissonLKLaw& law, double s);
// int (exp(-beta e) - 1) dnu_t, positive and negative halves integrated separately
double detailed_balance_defect(const PoissonLKLaw& law);

// Poisson random measure sampler on an adaptive cell grid.
class PoissonSampler {
 public:
  explicit PoissonSampler(const PoissonLKLaw& law);
  std::vector<double> draw(std::size_t n, std::uint64_t seed) const;
  double total_mass() const { return mass_; }
  std::size_t cells() const { return cell_mass_.size(); }

 private:
  static constexpr int kSub = 16;
  double mass_ = 0.0;
  std::vector<double> cell_mass_;
  std::vector<double> cell_lo_, cell_hi_;
  std::vector<std::array<double, kSub + 1>> cell_cdf_;  // normalized
  double sample_cell(std::size_t c, double v) const;
};

std::vector<double> sample(const PoissonLKLaw& law, std::size_t n_samples, std::uint64_t rng_seed);

struct TimePoint {
  double t;
  IntegralVerdict verdict;
};

struct EquivalenceReport {
  std::string kind;  // "moments" or "exp"
  double order = 0;  // n or gamma
  std::vector<TimePoint> per_time;
  IntegralVerdict sup_over_grid;  // (i)
  IntegralVerdict window;         // (ii)
  IntegralVerdict uv;             // (iii)
  bool consistent = false;
  bool extrapolated = false;
  std::string note;
};

EquivalenceReport equivalence_scan_moments(const FormFactor& f, double beta, int n,
                                           const std::vector<double>& t_grid,
                                           std::pair<double, double> window,
                                           const QuadratureRule& rule = {}, int time_nodes = 8);
EquivalenceReport equivalence_scan_exp(const FormFactor& f, double beta, double gamma,
                                       const std::vector<double>& t_grid,
                                       std::pair<double, double> window,
                                       const QuadratureRule& rule = {}, int time_nodes = 8);

}  // namespace heatlaw
