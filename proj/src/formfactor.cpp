#include "heatlaw/formfactor.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace heatlaw {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double safe_log(double v) { return v > 0.0 ? std::log(v) : -kInf; }

// index i with energy[i] <= e < energy[i+1]
std::size_t bracket(const std::vector<double>& x, double e) {
  auto it = std::upper_bound(x.begin(), x.end(), e);
  return std::size_t(it - x.begin()) - 1;
}

cplx counterexample_value(int n, double e) {
  if (e < 1.0) return cplx(0.0, e);
  const double c = std::ceil(e);
  return std::pow(c, -(n + 1)) / cplx(c - e, -1.0 / c);
}

double counterexample_abs2(int n, double e) {
  if (e < 1.0) return e * e;
  const double c = std::ceil(e);
  const double d = c - e;
  return std::pow(c, -2.0 * (n + 1)) / (d * d + 1.0 / (c * c));
}

}  // namespace

FormFactor::FormFactor(Family fam) : fam_(std::move(fam)) {
  std::visit(overloaded{
                 [](const SharpCutoff& s) {
                   if (!(s.lambda > 0.0)) throw std::invalid_argument("SharpCutoff needs lambda > 0");
                   if (!(s.ir_exponent > -1.0))
                     throw std::invalid_argument("SharpCutoff ir_exponent must exceed -1");
                 },
                 [](const PowerTail& p) {
                   if (!(p.p > 0.5)) throw std::invalid_argument("PowerTail needs p > 1/2 for a finite norm");
                   if (!(p.knee > 0.0)) throw std::invalid_argument("PowerTail needs knee > 0");
                 },
                 [](const ExpTail& x) {
                   if (!(x.rate > 0.0)) throw std::invalid_argument("ExpTail needs rate > 0");
                   if (!(x.ir_exponent > -1.0))
                     throw std::invalid_argument("ExpTail ir_exponent must exceed -1");
                 },
                 [](const CounterexampleFn& c) {
                   if (c.n < 1) throw std::invalid_argument("CounterexampleFn needs n >= 1");
                 },
                 [](const Tabulated& t) {
                   if (t.energy.size() != t.value.size() || t.energy.size() < 2)
                     throw std::invalid_argument("Tabulated needs >= 2 nodes with matching values");
                   if (t.energy.front() < 0.0) throw std::invalid_argument("Tabulated energies must be >= 0");
                   for (std::size_t i = 1; i < t.energy.size(); ++i)
                     if (!(t.energy[i] > t.energy[i - 1]))
                       throw std::invalid_argument("Tabulated energies must be strictly increasing");
                   for (const auto& v : t.value)
                     if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
                       throw std::invalid_argument("Tabulated values must be finite");
                 },
                 [](const CustomForm& c) {
                   if (!c.f) throw std::invalid_argument("custom form factor needs a callable");
                 },
             },
             fam_);
}

FormFactor FormFactor::sharp_cutoff(double lambda, double ir_exponent) {
  return FormFactor(SharpCutoff{lambda, ir_exponent});
}
FormFactor FormFactor::power_tail(double p, double knee) { return FormFactor(PowerTail{p, knee}); }
FormFactor FormFactor::exp_tail(double rate, double ir_exponent) {
  return FormFactor(ExpTail{rate, ir_exponent});
}
FormFactor FormFactor::counterexample(int n) { return FormFactor(CounterexampleFn{n}); }
FormFactor FormFactor::tabulated(std::vector<double> energy, std::vector<cplx> value) {
  return FormFactor(Tabulated{std::move(energy), std::move(value)});
}
FormFactor FormFactor::custom(std::string name, std::function<cplx(double)> f, double support_end,
                              std::vector<double> breaks) {
  return FormFactor(CustomForm{std::move(name), std::move(f), support_end, std::move(breaks)});
}

FormFactor FormFactor::from_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open form factor table " + path);
  std::vector<double> e;
  std::vector<cplx> v;
  std::string line;
  int lineno = 0;
  bool header_allowed = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    double a, b, c = 0.0;
    if (!(ss >> a >> b)) {
      if (header_allowed) {
        header_allowed = false;
        continue;
      }
      throw std::invalid_argument(path + ":" + std::to_string(lineno) + ": expected energy,re_f,im_f");
    }
    ss >> c;
    header_allowed = false;
    e.push_back(a);
    v.emplace_back(b, c);
  }
  return tabulated(std::move(e), std::move(v));
}

cplx FormFactor::value(double e) const {
  return std::visit(
      overloaded{
          [&](const SharpCutoff& s) -> cplx {
            if (e < 0.0 || e > s.lambda) return 0.0;
            return s.ir_exponent == 0.0 ? 1.0 : std::pow(e, 0.5 * s.ir_exponent);
          },
          [&](const PowerTail& p) -> cplx {
            const double x = e / p.knee;
            return x < 1.0 ? x : std::pow(x, -p.p);
          },
          [&](const ExpTail& x) -> cplx {
            return std::exp(0.5 * x.ir_exponent * safe_log(e) - x.rate * e);
          },
          [&](const CounterexampleFn& c) -> cplx { return counterexample_value(c.n, e); },
          [&](const Tabulated& t) -> cplx {
            if (e > t.energy.back()) return 0.0;
            if (e <= t.energy.front()) return t.value.front();
            const std::size_t i = std::min(bracket(t.energy, e), t.energy.size() - 2);
            const double w = (e - t.energy[i]) / (t.energy[i + 1] - t.energy[i]);
            return (1.0 - w) * t.value[i] + w * t.value[i + 1];
          },
          [&](const CustomForm& c) -> cplx { return e > c.support_end ? cplx(0.0) : c.f(e); },
      },
      fam_);
}

double FormFactor::abs2(double e) const {
  return std::visit(overloaded{
                        [&](const SharpCutoff& s) -> double {
                          if (e < 0.0 || e > s.lambda) return 0.0;
                          return s.ir_exponent == 0.0 ? 1.0 : std::pow(e, s.ir_exponent);
                        },
                        [&](const PowerTail&) -> double { return std::norm(value(e)); },
                        [&](const ExpTail&) -> double { return std::exp(log_abs2(e)); },
                        [&](const CounterexampleFn& c) -> double { return counterexample_abs2(c.n, e); },
                        [&](const Tabulated& t) -> double {
                          if (e > t.energy.back()) return 0.0;
                          if (e <= t.energy.front()) return std::norm(t.value.front());
                          const std::size_t i = std::min(bracket(t.energy, e), t.energy.size() - 2);
                          const double w = (e - t.energy[i]) / (t.energy[i + 1] - t.energy[i]);
                          return (1.0 - w) * std::norm(t.value[i]) + w * std::norm(t.value[i + 1]);
                        },
                        [&](const CustomForm&) -> double { return std::norm(value(e)); },
                    },
                    fam_);
}

double FormFactor::log_abs2(double e) const {
  return std::visit(overloaded{
                        [&](const SharpCutoff& s) -> double {
                          if (e < 0.0 || e > s.lambda) return -kInf;
                          return s.ir_exponent * safe_log(e);
                        },
                        [&](const PowerTail& p) -> double {
                          const double x = e / p.knee;
                          return x < 1.0 ? 2.0 * safe_log(x) : -2.0 * p.p * std::log(x);
                        },
                        [&](const ExpTail& x) -> double {
                          return (x.ir_exponent == 0.0 ? 0.0 : x.ir_exponent * safe_log(e)) -
                                 2.0 * x.rate * e;
                        },
                        [&](const auto&) -> double { return safe_log(abs2(e)); },
                    },
                    fam_);
}

double FormFactor::support_end() const {
  return std::visit(overloaded{
                        [](const SharpCutoff& s) { return s.lambda; },
                        [](const Tabulated& t) { return t.energy.back(); },
                        [](const CustomForm& c) { return c.support_end; },
                        [](const auto&) { return kInf; },
                    },
                    fam_);
}

std::vector<double> FormFactor::breakpoints(double up_to) const {
  std::vector<double> b;
  std::visit(overloaded{
                 [&](const SharpCutoff& s) { b.push_back(s.lambda); },
                 [&](const PowerTail& p) { b.push_back(p.knee); },
                 [&](const ExpTail&) {},
                 [&](const CounterexampleFn&) {
                   const double top = std::min(up_to, 1e7);
                   for (double N = 1.0; N <= top; N += 1.0) {
                     for (double k : {1.0, 10.0, 100.0})
                       if (k < N) b.push_back(N - k / N);
                     b.push_back(N);
                   }
                 },
                 [&](const Tabulated& t) { b = t.energy; },
                 [&](const CustomForm& c) {
                   b = c.breaks;
                   if (std::isfinite(c.support_end)) b.push_back(c.support_end);
                 },
             },
             fam_);
  std::vector<double> out;
  for (double x : b)
    if (x > 0.0 && x <= up_to) out.push_back(x);
  std::sort(out.begin(), out.end());
  return out;
}

std::string FormFactor::family_name() const {
  return std::visit(overloaded{
                        [](const SharpCutoff&) { return std::string("sharp_cutoff"); },
                        [](const PowerTail&) { return std::string("power_tail"); },
                        [](const ExpTail&) { return std::string("exp_tail"); },
                        [](const CounterexampleFn&) { return std::string("counterexample"); },
                        [](const Tabulated&) { return std::string("tabulated"); },
                        [](const CustomForm& c) { return "custom:" + c.name; },
                    },
                    fam_);
}

std::vector<std::pair<std::string, double>> FormFactor::params() const {
  using P = std::vector<std::pair<std::string, double>>;
  return std::visit(overloaded{
                        [](const SharpCutoff& s) { return P{{"lambda", s.lambda}, {"ir_exponent", s.ir_exponent}}; },
                        [](const PowerTail& p) { return P{{"p", p.p}, {"knee", p.knee}}; },
                        [](const ExpTail& x) { return P{{"rate", x.rate}, {"ir_exponent", x.ir_exponent}}; },
                        [](const CounterexampleFn& c) { return P{{"n", double(c.n)}}; },
                        [](const Tabulated& t) {
                          return P{{"nodes", double(t.energy.size())}, {"last_energy", t.energy.back()}};
                        },
                        [](const CustomForm& c) { return P{{"support_end", c.support_end}}; },
                    },
                    fam_);
}

namespace {

// positive-half-line integral of a nonnegative density built from f
IntegralVerdict half_line(const FormFactor& f, const std::function<double(double)>& dens,
                          double lo, const QuadratureRule& rule) {
  const double end = f.support_end();
  if (std::isfinite(end)) {
    if (end <= lo) return IntegralVerdict::converged(0.0, 0.0);
    Domain d{lo, end, f.breakpoints(end)};
    return integrate(dens, d, rule);
  }
  Domain d{lo, kInf, f.breakpoints(rule.tail_cutoffs.back() + lo)};
  return detect_divergence(dens, d, rule);
}

IntegralVerdict combine(const IntegralVerdict& a, const IntegralVerdict& b) {
  if (a.divergent() || b.divergent()) {
    const double g = std::max(a.divergent() ? a.growth_exponent : 0.0, b.divergent() ? b.growth_exponent : 0.0);
    return IntegralVerdict::diverged(g, a.divergent() ? a.note : b.note);
  }
  if (a.inconclusive() || b.inconclusive())
    return IntegralVerdict::unsettled(a.value + b.value, a.err_estimate + b.err_estimate,
                                      a.inconclusive() ? a.note : b.note);
  return IntegralVerdict::converged(a.value + b.value, a.err_estimate + b.err_estimate);
}

}  // namespace

IntegralVerdict uv_power_integral(const FormFactor& f, int n, const QuadratureRule& rule) {
  if (n < 0) throw std::invalid_argument("uv_power_integral needs n >= 0");
  auto dens = [&f, n](double e) -> double {
    if (n == 0) return f.abs2(e);
    const double la = f.log_abs2(e);
    if (!(e > 0.0) || std::isinf(la)) return 0.0;
    return std::exp(2.0 * n * std::log(e) + la);
  };
  return half_line(f, dens, 0.0, rule);
}

IntegralVerdict uv_exp_integral(const FormFactor& f, double gamma, const QuadratureRule& rule) {
  if (!(gamma >= 0.0)) throw std::invalid_argument("uv_exp_integral needs gamma >= 0");
  auto dens = [&f, gamma](double e) -> double {
    const double la = f.log_abs2(e);
    if (std::isinf(la)) return 0.0;
    return std::exp(gamma * e + la);
  };
  return half_line(f, dens, 0.0, rule);
}

IntegralVerdict ir_integral(const FormFactor& f, const QuadratureRule& rule) {
  // (0, m] through u = 1/e: int |f(1/u)|^2 / u du on [1/m, inf)
  const double m = std::min(1.0, f.support_end());
  std::vector<double> ub;
  for (double b : f.breakpoints(m))
    if (b > 0.0 && b < m) ub.push_back(1.0 / b);
  auto low = [&f](double u) { return f.abs2(1.0 / u) / u; };
  IntegralVerdict a = detect_divergence(low, Domain{1.0 / m, kInf, ub}, rule);
  IntegralVerdict b = IntegralVerdict::converged(0.0, 0.0);
  if (f.support_end() > 1.0) {
    auto high = [&f](double e) { return f.abs2(e) / e; };
    b = half_line(f, high, 1.0, rule);
  }
  return combine(a, b);
}

void require_ir(const FormFactor& f, const QuadratureRule& rule) {
  auto v = ir_integral(f, rule);
  if (v.inconclusive())
    throw InconclusiveVerdict("IR condition for " + f.family_name() + " could not be settled: " + v.note);
  if (!v.convergent())
    throw PreconditionViolation("form factor " + f.family_name() + " fails the IR condition (" +
                                to_string(v.status) + ")");
}

RegularityReport classify(const FormFactor& f, const std::vector<int>& n_list,
                          const std::vector<double>& gamma_list, const QuadratureRule& rule) {
  if (n_list.empty() || gamma_list.empty()) throw std::invalid_argument("classify needs nonempty lists");
  RegularityReport r;
  r.ir = ir_integral(f, rule);
  r.ir_ok = r.ir.convergent();
  for (int n : n_list) r.power_verdicts[n] = uv_power_integral(f, n, rule);
  for (double g : gamma_list) r.exp_verdicts[g] = uv_exp_integral(f, g, rule);

  // monotonicity in n and gamma: a divergence below forbids convergence above
  auto check_monotone = [&r](auto& verdicts, const char* what) {
    bool seen_div = false;
    for (auto& [k, v] : verdicts) {
      if (v.divergent()) seen_div = true;
      else if (v.convergent() && seen_div) {
        r.consistent = false;
        r.note += std::string("non-monotone ") + what + " verdicts; ";
        v = IntegralVerdict::unsettled(v.value, v.err_estimate, "contradicts a smaller index");
      }
    }
  };
  check_monotone(r.power_verdicts, "power");
  check_monotone(r.exp_verdicts, "exponential");

  bool any_exp = false;
  for (auto& [g, v] : r.exp_verdicts)
    if (g > 0.0 && v.convergent()) any_exp = true;
  if (any_exp)
    for (auto& [n, v] : r.power_verdicts)
      if (v.divergent()) {
        r.consistent = false;
        r.note += "exponential class without polynomial class; ";
      }

  // leading run of conclusive convergent verdicts
  r.n_max_power.value = -1.0;
  for (auto& [n, v] : r.power_verdicts) {
    if (!v.convergent()) break;
    r.n_max_power.value = n;
  }
  r.gamma_max.value = -1.0;
  for (auto& [g, v] : r.exp_verdicts) {
    if (!v.convergent()) break;
    r.gamma_max.value = g;
  }
  const bool all_power = r.n_max_power.value == double(r.power_verdicts.rbegin()->first);
  if (f.compact()) {
    r.n_max_power.infinite = true;
    r.gamma_max.infinite = true;
  } else if (any_exp && all_power) {
    r.n_max_power.infinite = true;
  }
  return r;
}

}  // namespace heatlaw
