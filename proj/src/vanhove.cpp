#include "heatlaw/vanhove.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "heatlaw/errors.hpp"
#include "heatlaw/parallel.hpp"

namespace heatlaw {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kExcision = 1e-8;

// log(exp(x) - 1) for x > 0
double log_expm1(double x) { return x > 40.0 ? x + std::log1p(-std::exp(-x)) : std::log(std::expm1(x)); }

// a + sign * b for two verdicts over nonnegative densities
IntegralVerdict merge(const IntegralVerdict& a, const IntegralVerdict& b, double sign) {
  if (a.divergent() && b.divergent() && sign < 0)
    return IntegralVerdict::unsettled(0.0, kInf, "both halves diverge");
  if (a.divergent() || b.divergent()) {
    const auto& d = a.divergent() ? a : b;
    auto v = IntegralVerdict::diverged(d.growth_exponent, d.note);
    if (!a.divergent() && sign < 0) v.value = -kInf;
    return v;
  }
  const cplx v = a.value + sign * b.value;
  const double err = a.err_estimate + b.err_estimate;
  if (a.inconclusive() || b.inconclusive())
    return IntegralVerdict::unsettled(v, err, a.inconclusive() ? a.note : b.note);
  return IntegralVerdict::converged(v, err);
}

}  // namespace

// ---- TimeKernel ----

TimeKernel TimeKernel::at(double t) {
  if (!std::isfinite(t)) throw PreconditionViolation("time must be finite");
  TimeKernel k;
  k.t1_ = k.t2_ = t;
  return k;
}

TimeKernel TimeKernel::window(double t1, double t2) {
  if (!std::isfinite(t1) || !std::isfinite(t2) || !(t1 < t2))
    throw PreconditionViolation("window needs finite t1 < t2");
  TimeKernel k;
  k.window_ = true;
  k.t1_ = t1;
  k.t2_ = t2;
  return k;
}

double TimeKernel::operator()(double e) const {
  e = std::abs(e);
  if (!window_) {
    if (e < kExcision) return 0.5 * t2_ * t2_;
    const double s = std::sin(0.5 * e * t2_);
    return 2.0 * s * s / (e * e);
  }
  // int_{t1}^{t2} (1 - cos(e t)) dt / e^2
  const double tm = std::max(std::abs(t1_), std::abs(t2_));
  if (e * tm < 0.1) {
    double sum = 0.0, e2k = 1.0, fact = 6.0;  // (2k+3)!
    for (int k = 0; k < 6; ++k) {
      const int p = 2 * k + 3;
      const double term = e2k * (std::pow(t2_, p) - std::pow(t1_, p)) / fact;
      sum += (k % 2 == 0) ? term : -term;
      e2k *= e * e;
      fact *= double(p + 1) * double(p + 2);
    }
    return sum;
  }
  const double w = (t2_ - t1_) - (std::sin(e * t2_) - std::sin(e * t1_)) / e;
  return std::max(w, 0.0) / (e * e);
}

double TimeKernel::log_value(double e) const {
  const double v = (*this)(e);
  return v > 0.0 ? std::log(v) : -kInf;
}

double TimeKernel::period() const {
  const double tm = std::max(std::abs(t1_), std::abs(t2_));
  return tm > 0.0 ? 2.0 * std::numbers::pi / tm : 0.0;
}

// ---- IntensityMeasure ----

IntensityMeasure::IntensityMeasure(FormFactor f, double beta, double t, QuadratureRule rule, bool check)
    : f_(std::move(f)), beta_(beta), t_(t), rule_(std::move(rule)) {
  if (!(beta > 0.0) || !std::isfinite(beta)) throw PreconditionViolation("beta must be positive and finite");
  if (!std::isfinite(t)) throw PreconditionViolation("time must be finite");
  rule_.validate();
  if (!check) return;
  require_ir(f_, rule_);
  auto m = total_mass();
  if (m.inconclusive()) throw InconclusiveVerdict("intensity mass could not be settled: " + m.note);
  if (!m.convergent())
    throw PreconditionViolation(std::string("intensity mass is not finite (") + to_string(m.status) + ")");
}

double IntensityMeasure::log_static(double u, int sign) const {
  const double la = f_.log_abs2(u);
  if (std::isinf(la) && la < 0) return -kInf;
  const double bu = beta_ * u;
  double lo;
  if (u < kExcision)
    lo = -std::log(bu);
  else if (sign > 0)
    lo = -std::log(-std::expm1(-bu));
  else
    lo = -log_expm1(bu);
  return la + lo;
}

double IntensityMeasure::density(double e) const {
  if (t_ == 0.0) return 0.0;
  const TimeKernel k = TimeKernel::at(t_);
  if (e == 0.0) {
    // removable point: (t^2/2) lim |f(u)|^2 / (beta u)
    const double u = std::numeric_limits<double>::min();
    return k(0.0) * std::exp(log_static(u, 1));
  }
  const double u = std::abs(e);
  const double ls = log_static(u, e > 0 ? 1 : -1);
  return k(u) * std::exp(ls);
}

IntegralVerdict IntensityMeasure::side_integral(const std::function<double(double)>& logw, int sign,
                                                const TimeKernel& k) const {
  if (k.vanishes()) return IntegralVerdict::converged(0.0, 0.0);
  auto dens = [&](double u) -> double {
    const double lk = k.log_value(u);
    if (std::isinf(lk)) return 0.0;
    const double ls = log_static(u, sign);
    if (std::isinf(ls) && ls < 0) return 0.0;
    const double lw = logw ? logw(u) : 0.0;
    if (std::isinf(lw) && lw < 0) return 0.0;
    return std::exp(lw + lk + ls);
  };
  const double end = f_.support_end();
  if (std::isfinite(end)) {
    Domain d{0.0, end, f_.breakpoints(end), k.period()};
    try {
      return integrate(dens, d, rule_);
    } catch (const NonEvaluable& ex) {
      if (!std::isinf(ex.value)) throw;
      return IntegralVerdict::diverged(0.0, "density overflows near e=" + std::to_string(ex.at));
    }
  }
  Domain d{0.0, kInf, f_.breakpoints(rule_.tail_cutoffs.back()), k.period()};
  return detect_divergence(dens, d, rule_);
}

IntegralVerdict IntensityMeasure::total_mass() const {
  return merge(side_integral(nullptr, 1), side_integral(nullptr, -1), 1.0);
}

bool IntensityMeasure::extrapolated() const { return !uv_power_integral(f_, 1, rule_).convergent(); }

double intensity_density(const IntensityMeasure& nu, double e) { return nu.density(e); }

// ---- law functionals ----

cplx log_char_fn(const PoissonLKLaw& law, double alpha) {
  const auto& nu = law.intensity();
  if (alpha == 0.0 || nu.t() == 0.0) return 0.0;
  const TimeKernel k = TimeKernel::at(nu.t());
  auto dens = [&](double u) -> cplx {
    const double kv = k(u);
    if (kv == 0.0) return 0.0;
    const double lp = nu.log_static(u, 1), lm = nu.log_static(u, -1);
    const double np = std::isinf(lp) ? 0.0 : kv * std::exp(lp);
    const double nm = std::isinf(lm) ? 0.0 : kv * std::exp(lm);
    const double s = std::sin(0.5 * alpha * u);
    const double re = -2.0 * s * s;  // cos(alpha u) - 1
    const double im = std::sin(alpha * u);
    return {re * (np + nm), im * (np - nm)};
  };
  const auto& f = nu.form();
  const double end = f.support_end();
  const double period = 2.0 * std::numbers::pi / (std::abs(nu.t()) + std::abs(alpha));
  const auto& rule = nu.rule();
  Domain d{0.0, end, f.breakpoints(std::isfinite(end) ? end : rule.tail_cutoffs.back()), period};
  auto v = integrate(dens, d, rule);
  if (!v.convergent())
    throw InconclusiveVerdict("characteristic exponent unsettled at alpha=" + std::to_string(alpha) + ": " +
                              v.note);
  // the real part integrand is nonpositive
  return {std::min(v.value.real(), 0.0), v.value.imag()};
}

cplx char_fn(const PoissonLKLaw& law, double alpha) { return std::exp(log_char_fn(law, alpha)); }

IntegralVerdict cumulant(const IntensityMeasure& nu, int m, const TimeKernel& k) {
  if (m < 1) throw PreconditionViolation("cumulant order must be >= 1");
  auto lw = [m](double u) { return m * std::log(u); };
  auto pos = nu.side_integral(lw, 1, k);
  auto neg = nu.side_integral(lw, -1, k);
  return merge(pos, neg, m % 2 == 0 ? 1.0 : -1.0);
}

IntegralVerdict cumulant(const PoissonLKLaw& law, int m) {
  return cumulant(law.intensity(), m, TimeKernel::at(law.intensity().t()));
}

std::vector<IntegralVerdict> moments(const PoissonLKLaw& law, int up_to) {
  if (up_to < 1) throw PreconditionViolation("moments needs up_to >= 1");
  std::vector<IntegralVerdict> kap;
  for (int m = 1; m <= up_to; ++m) kap.push_back(cumulant(law, m));

  std::vector<IntegralVerdict> out(up_to);
  std::vector<double> kv, ke;
  Status worst = Status::Convergent;
  std::string note;
  for (int m = 0; m < up_to; ++m) {
    const auto& c = kap[m];
    if (c.divergent())
      worst = Status::Divergent;
    else if (c.inconclusive() && worst == Status::Convergent)
      worst = Status::Inconclusive;
    if (!c.convergent() && note.empty()) note = "cumulant " + std::to_string(m + 1) + ": " + c.note;
    if (worst == Status::Divergent) {
      out[m] = IntegralVerdict::diverged(c.divergent() ? c.growth_exponent : 0.0, note);
      continue;
    }
    kv.push_back(c.real());
    ke.push_back(c.err_estimate);
    const auto mu = cumulants_to_moments(kv);
    // first-order propagation of the cumulant errors
    double err = 0.0;
    for (std::size_t i = 0; i < kv.size(); ++i) {
      if (ke[i] == 0.0) continue;
      auto bumped = kv;
      bumped[i] += ke[i];
      err += std::abs(cumulants_to_moments(bumped).back() - mu.back());
    }
    out[m] = worst == Status::Convergent ? IntegralVerdict::converged(mu.back(), err)
                                         : IntegralVerdict::unsettled(mu.back(), err, note);
  }
  return out;
}

IntegralVerdict exp_moment_bound(const PoissonLKLaw& law, double gamma) {
  if (!(gamma > 0.0)) throw PreconditionViolation("exp_moment_bound needs gamma > 0");
  const auto& nu = law.intensity();
  auto lw = [gamma](double u) { return log_expm1(gamma * u); };
  return merge(nu.side_integral(lw, 1), nu.side_integral(lw, -1), 1.0);
}

namespace {

IntegralVerdict log_mgf_kernel(const IntensityMeasure& nu, double s, const TimeKernel& k) {
  if (s == 0.0) return IntegralVerdict::converged(0.0, 0.0);
  const double g = std::abs(s);
  auto grow = [g](double u) { return log_expm1(g * u); };
  auto shrink = [g](double u) { return std::log(-std::expm1(-g * u)); };
  // s > 0: growth on the positive side; s < 0: on the negative side
  const int up = s > 0 ? 1 : -1;
  return merge(nu.side_integral(grow, up, k), nu.side_integral(shrink, -up, k), -1.0);
}

}  // namespace

IntegralVerdict log_mgf(const PoissonLKLaw& law, double s) {
  const auto& nu = law.intensity();
  return log_mgf_kernel(nu, s, TimeKernel::at(nu.t()));
}

double detailed_balance_defect(const PoissonLKLaw& law) {
  const auto& nu = law.intensity();
  const double b = nu.beta();
  auto a = nu.side_integral([b](double u) { return std::log(-std::expm1(-b * u)); }, 1);
  auto c = nu.side_integral([b](double u) { return log_expm1(b * u); }, -1);
  if (!a.convergent() || !c.convergent())
    throw InconclusiveVerdict("detailed-balance integrals unsettled: " + (a.convergent() ? c.note : a.note));
  return c.real() - a.real();
}

// ---- sampler ----

PoissonSampler::PoissonSampler(const PoissonLKLaw& law) {
  const auto& nu = law.intensity();
  if (nu.t() == 0.0) return;
  const auto& f = nu.form();
  const TimeKernel k = TimeKernel::at(nu.t());
  const double period = k.period();
  const auto& rule = nu.rule();
  const auto gl = gauss_legendre(5, 0.0, 1.0);

  for (int sign : {1, -1}) {
    auto dens = [&](double u) -> double {
      const double ls = nu.log_static(u, sign);
      return std::isinf(ls) ? 0.0 : k(u) * std::exp(ls);
    };
    const auto side = nu.side_integral(nullptr, sign);
    if (!side.convergent()) throw PreconditionViolation("sampler needs a finite intensity mass");
    const double side_mass = side.real();
    if (side_mass <= 0.0) continue;

    // truncation point: remaining mass negligible next to the sampling noise
    double U = f.support_end();
    if (!std::isfinite(U)) {
      U = 8.0;
      for (;; U *= 2.0) {
        auto tail = integrate(dens, Domain{U, kInf, std::vector<double>{}, period}, rule);
        if (tail.convergent() && tail.real() <= 1e-10 * side_mass) break;
        if (U > 1e7) throw PreconditionViolation("intensity tail too heavy to truncate for sampling");
      }
    }

    std::vector<double> edges{0.0};
    const double h = std::min(period / 8.0, U / 8.0);
    for (int j = 40; j >= 1; --j) edges.push_back(h * std::ldexp(1.0, -j));
    for (double b : f.breakpoints(U)) edges.push_back(b);
    const long nh = long(std::ceil(U / h));
    for (long j = 1; j <= nh; ++j) edges.push_back(std::min(U, j * h));
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

    auto cell_integral = [&](double a, double b) {
      auto v = integrate(dens, Domain{a, b, {}, 0.0}, rule);
      return v.real();
    };
    std::vector<std::pair<double, double>> stack;
    for (std::size_t i = edges.size() - 1; i > 0; --i) stack.push_back({edges[i - 1], edges[i]});
    while (!stack.empty()) {
      auto [a, b] = stack.back();
      stack.pop_back();
      const double m = cell_integral(a, b);
      if (m > 0.1 && b - a > 1e-12 * std::max(1.0, b)) {
        const double c = 0.5 * (a + b);
        stack.push_back({c, b});
        stack.push_back({a, c});
        continue;
      }
      if (!(m > 0.0)) continue;
      std::array<double, kSub + 1> cdf{};
      const double w = (b - a) / kSub;
      for (int j = 0; j < kSub; ++j) {
        double s = 0.0;
        for (std::size_t q = 0; q < gl.nodes.size(); ++q) s += gl.weights[q] * dens(a + w * (j + gl.nodes[q]));
        cdf[j + 1] = cdf[j] + s * w;
      }
      if (!(cdf[kSub] > 0.0)) continue;
      for (auto& x : cdf) x /= cdf[kSub];
      cell_mass_.push_back(m);
      cell_lo_.push_back(sign * a);
      cell_hi_.push_back(sign * b);
      cell_cdf_.push_back(cdf);
    }
  }
  for (double m : cell_mass_) mass_ += m;
}

double PoissonSampler::sample_cell(std::size_t c, double v) const {
  const auto& cdf = cell_cdf_[c];
  auto it = std::upper_bound(cdf.begin(), cdf.end(), v);
  int j = int(it - cdf.begin()) - 1;
  j = std::clamp(j, 0, kSub - 1);
  const double span = cdf[j + 1] - cdf[j];
  const double frac = span > 0.0 ? std::clamp((v - cdf[j]) / span, 0.0, 1.0) : 0.5;
  const double lo = cell_lo_[c], hi = cell_hi_[c];
  return lo + (hi - lo) * (j + frac) / kSub;
}

std::vector<double> PoissonSampler::draw(std::size_t n, std::uint64_t seed) const {
  std::vector<double> out(n, 0.0);
  if (mass_ <= 0.0 || n == 0) return out;
  constexpr std::size_t chunk = 4096;
  const std::size_t chunks = (n + chunk - 1) / chunk;
  const std::discrete_distribution<std::size_t> pick_proto(cell_mass_.begin(), cell_mass_.end());
  parallel_for(chunks, [&](std::size_t c) {
    std::seed_seq ss{std::uint32_t(seed), std::uint32_t(seed >> 32), std::uint32_t(c), std::uint32_t(c >> 32)};
    std::mt19937_64 rng(ss);
    std::poisson_distribution<long> count(mass_);
    auto pick = pick_proto;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const std::size_t end = std::min(n, (c + 1) * chunk);
    for (std::size_t i = c * chunk; i < end; ++i) {
      const long k = count(rng);
      double s = 0.0;
      for (long a = 0; a < k; ++a) {
        const std::size_t cell = pick(rng);
        s += sample_cell(cell, unit(rng));
      }
      out[i] = s;
    }
  });
  return out;
}

std::vector<double> sample(const PoissonLKLaw& law, std::size_t n_samples, std::uint64_t rng_seed) {
  if (law.intensity().t() == 0.0) return std::vector<double>(n_samples, 0.0);
  return PoissonSampler(law).draw(n_samples, rng_seed);
}

// ---- equivalence scans ----

namespace {

void check_scan_inputs(const std::vector<double>& t_grid, std::pair<double, double> window) {
  if (t_grid.empty()) throw PreconditionViolation("t_grid is empty");
  if (!(window.first < window.second)) throw PreconditionViolation("window needs t1 < t2");
}

IntegralVerdict sup_verdict(const std::vector<TimePoint>& pts) {
  double best = -kInf, err = 0.0;
  for (const auto& p : pts)
    if (p.verdict.divergent())
      return IntegralVerdict::diverged(p.verdict.growth_exponent, "t=" + std::to_string(p.t) + ": " + p.verdict.note);
  for (const auto& p : pts)
    if (p.verdict.inconclusive())
      return IntegralVerdict::unsettled(p.verdict.value, p.verdict.err_estimate,
                                        "t=" + std::to_string(p.t) + ": " + p.verdict.note);
  for (const auto& p : pts)
    if (p.verdict.real() > best) {
      best = p.verdict.real();
      err = p.verdict.err_estimate;
    }
  return IntegralVerdict::converged(best, err);
}

bool all_same(const EquivalenceReport& r) {
  const Status s = r.sup_over_grid.status;
  return s != Status::Inconclusive && r.window.status == s && r.uv.status == s;
}

}  // namespace

EquivalenceReport equivalence_scan_moments(const FormFactor& f, double beta, int n,
                                           const std::vector<double>& t_grid,
                                           std::pair<double, double> window, const QuadratureRule& rule,
                                           int time_nodes) {
  check_scan_inputs(t_grid, window);
  if (n < 0) throw PreconditionViolation("moment index n must be >= 0");
  require_ir(f, rule);
  const int m = 2 * n + 2;

  EquivalenceReport r;
  r.kind = "moments";
  r.order = n;
  r.per_time.resize(t_grid.size());
  parallel_for(t_grid.size(), [&](std::size_t i) {
    PoissonLKLaw law(IntensityMeasure(f, beta, t_grid[i], rule, false));
    r.per_time[i] = {t_grid[i], moments(law, m).back()};
  });
  r.sup_over_grid = sup_verdict(r.per_time);

  // top cumulant integrated in time by Fubini, lower-order terms by Gauss-Legendre in t
  IntensityMeasure nu(f, beta, window.second, rule, false);
  auto top = cumulant(nu, m, TimeKernel::window(window.first, window.second));
  if (!top.convergent()) {
    r.window = top;
  } else {
    const auto g = gauss_legendre(time_nodes, window.first, window.second);
    std::vector<IntegralVerdict> rest(g.nodes.size());
    parallel_for(g.nodes.size(), [&](std::size_t i) {
      PoissonLKLaw law(IntensityMeasure(f, beta, g.nodes[i], rule, false));
      auto mo = moments(law, m).back();
      auto kt = cumulant(law, m);
      if (mo.convergent() && kt.convergent())
        rest[i] = IntegralVerdict::converged(mo.real() - kt.real(), mo.err_estimate + kt.err_estimate);
      else
        rest[i] = IntegralVerdict::unsettled(0.0, kInf, "moment unsettled at t=" + std::to_string(g.nodes[i]));
    });
    double val = top.real(), err = top.err_estimate;
    r.window = IntegralVerdict::converged(0.0, 0.0);
    for (std::size_t i = 0; i < rest.size(); ++i) {
      if (!rest[i].convergent()) {
        r.window = rest[i];
        break;
      }
      val += g.weights[i] * rest[i].real();
      err += g.weights[i] * rest[i].err_estimate;
    }
    if (r.window.convergent()) r.window = IntegralVerdict::converged(val, err);
  }

  r.uv = uv_power_integral(f, n, rule);
  r.extrapolated = n == 1 ? !r.uv.convergent() : !uv_power_integral(f, 1, rule).convergent();
  r.consistent = all_same(r);
  if (!r.consistent) r.note = "verdicts disagree";
  return r;
}

EquivalenceReport equivalence_scan_exp(const FormFactor& f, double beta, double gamma,
                                       const std::vector<double>& t_grid,
                                       std::pair<double, double> window, const QuadratureRule& rule,
                                       int time_nodes) {
  check_scan_inputs(t_grid, window);
  if (!(gamma > 0.0)) throw PreconditionViolation("gamma must be positive");
  require_ir(f, rule);

  // E exp(gamma |dQ|) <= E exp(gamma dQ) + E exp(-gamma dQ)
  auto bound_at = [&](const IntensityMeasure& nu, const TimeKernel& k) {
    auto lp = log_mgf_kernel(nu, gamma, k);
    auto lm = log_mgf_kernel(nu, -gamma, k);
    if (lp.divergent() || lm.divergent()) return merge(lp, lm, 1.0);
    if (!lp.convergent() || !lm.convergent())
      return IntegralVerdict::unsettled(0.0, kInf, lp.convergent() ? lm.note : lp.note);
    const double a = std::exp(lp.real()), b = std::exp(lm.real());
    return IntegralVerdict::converged(a + b, a * lp.err_estimate + b * lm.err_estimate);
  };

  EquivalenceReport r;
  r.kind = "exp";
  r.order = gamma;
  r.per_time.resize(t_grid.size());
  parallel_for(t_grid.size(), [&](std::size_t i) {
    IntensityMeasure nu(f, beta, t_grid[i], rule, false);
    r.per_time[i] = {t_grid[i], bound_at(nu, TimeKernel::at(t_grid[i]))};
  });
  r.sup_over_grid = sup_verdict(r.per_time);

  // time-integrated exponents decide finiteness; exp(L) >= 1 + L keeps divergence
  IntensityMeasure nu(f, beta, window.second, rule, false);
  const TimeKernel wk = TimeKernel::window(window.first, window.second);
  auto lw = [gamma](double u) { return log_expm1(gamma * u); };
  auto top = merge(nu.side_integral(lw, 1, wk), nu.side_integral(lw, -1, wk), 1.0);
  if (!top.convergent()) {
    r.window = top;
  } else {
    const auto g = gauss_legendre(time_nodes, window.first, window.second);
    std::vector<IntegralVerdict> vals(g.nodes.size());
    parallel_for(g.nodes.size(), [&](std::size_t i) {
      IntensityMeasure nt(f, beta, g.nodes[i], rule, false);
      vals[i] = bound_at(nt, TimeKernel::at(g.nodes[i]));
    });
    double val = 0.0, err = 0.0;
    r.window = IntegralVerdict::converged(0.0, 0.0);
    for (std::size_t i = 0; i < vals.size(); ++i) {
      if (!vals[i].convergent()) {
        r.window = vals[i];
        break;
      }
      val += g.weights[i] * vals[i].real();
      err += g.weights[i] * vals[i].err_estimate;
    }
    if (r.window.convergent()) r.window = IntegralVerdict::converged(val, err);
  }

  r.uv = uv_exp_integral(f, gamma, rule);
  r.extrapolated = !uv_power_integral(f, 1, rule).convergent();
  r.consistent = all_same(r);
  if (!r.consistent) r.note = "verdicts disagree";
  return r;
}

}  // namespace heatlaw
