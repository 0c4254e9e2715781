#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <string>
#include <type_traits>
#include <vector>

#include "heatlaw/errors.hpp"

namespace heatlaw {

using cplx = std::complex<double>;

struct QuadratureRule {
  double abs_tol = 1e-10;
  double rel_tol = 1e-8;
  int max_subdivisions = 2000;
  std::vector<double> tail_cutoffs{1e1, 1e2, 1e3, 1e4};
  // fitted increment exponents within this distance of 0 count as logarithmic growth
  double exponent_resolution = 0.1;

  void validate() const;
  double tolerance(double magnitude) const;
};

enum class Status { Convergent, Divergent, Inconclusive };

const char* to_string(Status s);

struct IntegralVerdict {
  Status status = Status::Inconclusive;
  cplx value{0.0, 0.0};
  double err_estimate = 0.0;
  double growth_exponent = 0.0;
  std::string note;

  bool convergent() const { return status == Status::Convergent; }
  bool divergent() const { return status == Status::Divergent; }
  bool inconclusive() const { return status == Status::Inconclusive; }
  double real() const { return value.real(); }

  static IntegralVerdict converged(cplx v, double err, std::string note = {});
  static IntegralVerdict diverged(double exponent, std::string note = {});
  static IntegralVerdict unsettled(cplx v, double err, std::string note);
};

// Integration domain [lo, hi]; hi may be +inf.
// breaks: interior kinks. period > 0: initial panels no longer than one period.
struct Domain {
  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();
  std::vector<double> breaks;
  double period = 0.0;

  bool semi_infinite() const { return std::isinf(hi); }
};

using RealDensity = std::function<double(double)>;
using ComplexDensity = std::function<cplx(double)>;

IntegralVerdict integrate(const RealDensity& f, const Domain& dom, const QuadratureRule& rule = {});
IntegralVerdict integrate(const ComplexDensity& f, const Domain& dom,
                          const QuadratureRule& rule = {});

// plain callables dispatch on their return type
template <class F>
  requires(!std::is_same_v<std::decay_t<F>, RealDensity> &&
           !std::is_same_v<std::decay_t<F>, ComplexDensity> && std::is_invocable_v<F, double>)
IntegralVerdict integrate(F&& f, const Domain& dom, const QuadratureRule& rule = {}) {
  if constexpr (std::is_same_v<std::decay_t<std::invoke_result_t<F, double>>, cplx>)
    return integrate(ComplexDensity(std::forward<F>(f)), dom, rule);
  else
    return integrate(RealDensity(std::forward<F>(f)), dom, rule);
}

// Partial integrals over rule.tail_cutoffs; f must be nonnegative.
IntegralVerdict detect_divergence(const RealDensity& f, const Domain& dom,
                                  const QuadratureRule& rule = {});

// kappa[0] is the first cumulant; result[0] is the first raw moment.
std::vector<double> cumulants_to_moments(const std::vector<double>& kappa);
std::vector<double> moments_to_cumulants(const std::vector<double>& mu);

struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// n-point Gauss-Legendre on [a, b] (Golub-Welsch)
GaussRule gauss_legendre(int n, double a, double b);

}  // namespace heatlaw
