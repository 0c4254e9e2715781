#include "heatlaw/numerics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <queue>
#include <stdexcept>

namespace heatlaw {

void QuadratureRule::validate() const {
  if (!(abs_tol > 0.0)) throw std::invalid_argument("abs_tol must be > 0");
  if (!(rel_tol > 0.0)) throw std::invalid_argument("rel_tol must be > 0");
  if (max_subdivisions < 1) throw std::invalid_argument("max_subdivisions must be >= 1");
  if (tail_cutoffs.size() < 4) throw std::invalid_argument("need at least 4 tail_cutoffs");
  for (std::size_t i = 1; i < tail_cutoffs.size(); ++i)
    if (!(tail_cutoffs[i] > tail_cutoffs[i - 1]))
      throw std::invalid_argument("tail_cutoffs must be strictly increasing");
  if (!(tail_cutoffs.front() > 0.0)) throw std::invalid_argument("tail_cutoffs must be positive");
  if (!(exponent_resolution > 0.0)) throw std::invalid_argument("exponent_resolution must be > 0");
}

double QuadratureRule::tolerance(double magnitude) const {
  return std::max(abs_tol, rel_tol * magnitude);
}

const char* to_string(Status s) {
  switch (s) {
    case Status::Convergent: return "Convergent";
    case Status::Divergent: return "Divergent";
    case Status::Inconclusive: return "Inconclusive";
  }
  return "?";
}

IntegralVerdict IntegralVerdict::converged(cplx v, double err, std::string note) {
  IntegralVerdict r;
  r.status = Status::Convergent;
  r.value = v;
  r.err_estimate = err;
  r.note = std::move(note);
  return r;
}

IntegralVerdict IntegralVerdict::diverged(double exponent, std::string note) {
  IntegralVerdict r;
  r.status = Status::Divergent;
  r.value = cplx(std::numeric_limits<double>::infinity(), 0.0);
  r.err_estimate = 0.0;
  r.growth_exponent = exponent;
  r.note = std::move(note);
  return r;
}

IntegralVerdict IntegralVerdict::unsettled(cplx v, double err, std::string note) {
  IntegralVerdict r;
  r.status = Status::Inconclusive;
  r.value = v;
  r.err_estimate = err;
  r.note = std::move(note);
  return r;
}

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kTiny = std::numeric_limits<double>::min();
// hard ceiling on initial panels generated from period hints
constexpr std::size_t kMaxPanels = std::size_t(1) << 20;

inline double mag(double v) { return std::abs(v); }
inline double mag(cplx v) { return std::abs(v); }
inline bool finite(double v) { return std::isfinite(v); }
inline bool finite(cplx v) { return std::isfinite(v.real()) && std::isfinite(v.imag()); }
inline cplx as_cplx(double v) { return {v, 0.0}; }
inline cplx as_cplx(cplx v) { return v; }

template <class T>
struct Seg {
  double a, b;
  T val;
  double err;
};

template <class T>
struct SegLess {
  bool operator()(const Seg<T>& x, const Seg<T>& y) const { return x.err < y.err; }
};

template <class T, class F>
T eval(const F& f, double x) {
  T v = f(x);
  if (!finite(v)) throw NonEvaluable(x, mag(v));
  return v;
}

// 21-point Kronrod extension of 10-point Gauss, QUADPACK error heuristic
template <class T, class F>
Seg<T> gk21(const F& f, double a, double b) {
  using GK = boost::math::quadrature::gauss_kronrod<double, 21>;
  using G = boost::math::quadrature::gauss<double, 10>;
  const auto& xk = GK::abscissa();
  const auto& wk = GK::weights();
  const auto& wg = G::weights();
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);

  T fv1[11], fv2[11];
  const T fc = eval<T>(f, c);
  T resk = fc * wk[0];
  T resg = T(0);
  double resabs = mag(fc) * wk[0];
  for (int j = 1; j < 11; ++j) {
    const double dx = h * xk[j];
    const T f1 = eval<T>(f, c - dx);
    const T f2 = eval<T>(f, c + dx);
    fv1[j] = f1;
    fv2[j] = f2;
    resk += wk[j] * (f1 + f2);
    resabs += wk[j] * (mag(f1) + mag(f2));
    if (j % 2 == 1) resg += wg[(j - 1) / 2] * (f1 + f2);
  }
  const T mean = resk * 0.5;
  double resasc = wk[0] * mag(fc - mean);
  for (int j = 1; j < 11; ++j) resasc += wk[j] * (mag(fv1[j] - mean) + mag(fv2[j] - mean));

  const double ah = std::abs(h);
  resabs *= ah;
  resasc *= ah;
  double err = mag((resk - resg) * h);
  if (resasc != 0.0 && err != 0.0) err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
  if (resabs > kTiny / (50.0 * kEps)) err = std::max(50.0 * kEps * resabs, err);
  return {a, b, resk * h, err};
}

template <class T>
struct Adaptive {
  T value = T(0);
  double err = 0.0;
  bool ok = false;
  std::size_t segments = 0;
};

// Global-error adaptive bisection over the given panel edges.
template <class T, class F>
Adaptive<T> adaptive(const F& f, const std::vector<double>& edges, double abs_tol, double rel_tol,
                     int max_bisections) {
  std::vector<Seg<T>> heap;  // max-heap on err
  std::vector<Seg<T>> frozen;
  heap.reserve(edges.size() + 64);
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    if (!(edges[i + 1] > edges[i])) continue;
    heap.push_back(gk21<T>(f, edges[i], edges[i + 1]));
  }
  std::make_heap(heap.begin(), heap.end(), SegLess<T>{});
  auto resum = [&](T& total, double& err) {
    total = T(0);
    err = 0.0;
    for (const auto& z : heap) {
      total += z.val;
      err += z.err;
    }
    for (const auto& z : frozen) {
      total += z.val;
      err += z.err;
    }
  };
  T total;
  double err;
  resum(total, err);
  // the cap is per adaptive run; panel-rich runs get proportionally more room
  max_bisections += 16 * int(std::min<std::size_t>(heap.size(), std::size_t(1) << 24));
  int done = 0;
  long next_resum = 256;
  while (!heap.empty()) {
    if (err <= std::max(abs_tol, rel_tol * mag(total))) break;
    if (done >= max_bisections) break;
    std::pop_heap(heap.begin(), heap.end(), SegLess<T>{});
    Seg<T> s = heap.back();
    heap.pop_back();
    const double m = 0.5 * (s.a + s.b);
    if (!(m > s.a && m < s.b) || (s.b - s.a) < 100.0 * kEps * std::max(std::abs(s.a), std::abs(s.b))) {
      frozen.push_back(s);
      continue;
    }
    Seg<T> l = gk21<T>(f, s.a, m);
    Seg<T> r = gk21<T>(f, m, s.b);
    total += l.val + r.val - s.val;
    err += l.err + r.err - s.err;
    heap.push_back(l);
    std::push_heap(heap.begin(), heap.end(), SegLess<T>{});
    heap.push_back(r);
    std::push_heap(heap.begin(), heap.end(), SegLess<T>{});
    ++done;
    if (done >= next_resum) {
      // shed drift; spacing grows with the segment count to keep this linear overall
      resum(total, err);
      next_resum = done + std::max<long>(256, long(heap.size()));
    }
  }
  Adaptive<T> out;
  resum(out.value, out.err);
  out.segments = heap.size() + frozen.size();
  out.ok = out.err <= std::max(abs_tol, rel_tol * mag(out.value));
  return out;
}

std::vector<double> make_edges(double a, double b, const std::vector<double>& breaks,
                               double period) {
  std::vector<double> e{a};
  for (double x : breaks)
    if (x > a && x < b) e.push_back(x);
  e.push_back(b);
  std::sort(e.begin(), e.end());
  e.erase(std::unique(e.begin(), e.end()), e.end());
  if (period > 0.0) {
    std::size_t total = 0;
    for (std::size_t i = 0; i + 1 < e.size(); ++i)
      total += static_cast<std::size_t>(std::ceil((e[i + 1] - e[i]) / period));
    const double stretch = total > kMaxPanels ? double(total) / double(kMaxPanels) : 1.0;
    std::vector<double> out{e.front()};
    for (std::size_t i = 0; i + 1 < e.size(); ++i) {
      const double len = e[i + 1] - e[i];
      const auto n = std::max<std::size_t>(1, std::size_t(std::ceil(len / (period * stretch))));
      for (std::size_t k = 1; k < n; ++k) out.push_back(e[i] + len * double(k) / double(n));
      out.push_back(e[i + 1]);
    }
    return out;
  }
  return e;
}

double align_up(double lo, double x, double period) {
  if (period <= 0.0) return x;
  return lo + period * std::ceil((x - lo) / period - 1e-12);
}

// first tail cutoff usable for a domain starting at lo
std::vector<double> cutoffs_for(const Domain& dom, const QuadratureRule& rule) {
  std::vector<double> c;
  const bool shift = rule.tail_cutoffs.front() <= dom.lo;
  for (double x : rule.tail_cutoffs) c.push_back(align_up(dom.lo, shift ? dom.lo + x : x, dom.period));
  return c;
}

// Wynn epsilon extrapolation of a partial-sum sequence; returns the last two estimates
template <class T>
std::pair<T, T> wynn(const std::vector<T>& s) {
  const std::size_t n = s.size();
  if (n < 3) return {s.back(), n > 1 ? s[n - 2] : s.back()};
  // eps[k][j]; only even columns are estimates
  std::vector<std::vector<T>> eps(n + 1);
  eps[0].assign(n + 1, T(0));
  eps[1] = std::vector<T>(s.begin(), s.end());
  std::vector<T> estimates{s.back()};
  for (std::size_t k = 2; k <= n; ++k) {
    const auto& p2 = eps[k - 2];
    const auto& p1 = eps[k - 1];
    const std::size_t len = p1.size() - 1;
    if (len == 0) break;
    eps[k].resize(len);
    bool broke = false;
    for (std::size_t j = 0; j < len; ++j) {
      const T d = p1[j + 1] - p1[j];
      if (mag(d) <= 1e-14 * std::max(mag(p1[j]), mag(p1[j + 1])) + 1e-300) {
        broke = true;
        break;
      }
      eps[k][j] = p2[j + 1] + T(1) / d;
    }
    if (broke) {
      eps[k].clear();
      break;
    }
    if (k % 2 == 1) estimates.push_back(eps[k].back());
  }
  if (estimates.size() == 1) return {s.back(), s[n - 2]};
  return {estimates.back(), estimates[estimates.size() - 2]};
}

template <class T, class F>
IntegralVerdict integrate_impl(const F& f, const Domain& dom, const QuadratureRule& rule);

// int_L^inf through e = L + s x/(1-x); false if it does not settle within a small budget
template <class F>
bool mapped_tail(const F& f, double L, double lo, const QuadratureRule& rule, double& value, double& err) {
  const double s = std::max(L - lo, 1.0);
  auto g = [&](double x) -> double {
    if (x >= 1.0) return 0.0;
    const double e = L + s * x / (1.0 - x);
    return f(e) * s / ((1.0 - x) * (1.0 - x));
  };
  try {
    auto a = adaptive<double>(g, {0.0, 0.5, 0.9, 0.99, 1.0}, rule.abs_tol, rule.rel_tol, 200);
    value = a.value;
    err = a.err;
    return a.ok;
  } catch (const NonEvaluable&) {
    return false;
  }
}

// nonnegative-density probe; shared by detect_divergence and the fallback of integrate
template <class F>
IntegralVerdict probe(const F& f, const Domain& dom, const QuadratureRule& rule) {
  const std::vector<double> c = cutoffs_for(dom, rule);
  const std::size_t K = c.size();
  std::vector<double> parts;  // head, then increments
  double err = 0.0;
  double lo = dom.lo;
  for (std::size_t k = 0; k < K; ++k) {
    Adaptive<double> a;
    try {
      a = adaptive<double>(f, make_edges(lo, c[k], dom.breaks, dom.period), rule.abs_tol,
                           rule.rel_tol, rule.max_subdivisions);
    } catch (const NonEvaluable& ne) {
      if (k > 0 && (std::isinf(ne.value)))
        return IntegralVerdict::diverged(std::numeric_limits<double>::infinity(),
                                         "density overflows in the tail");
      throw;
    }
    if (!a.ok && k == 0)
      return IntegralVerdict::unsettled(a.value, a.err, "head integral did not settle");
    if (!a.ok && a.err > 1e-3 * std::abs(a.value) + rule.abs_tol)
      return IntegralVerdict::unsettled(a.value, a.err, "tail increment did not settle");
    if (!std::isfinite(a.value))
      return IntegralVerdict::diverged(std::numeric_limits<double>::infinity(),
                                       "partial integral overflows");
    parts.push_back(a.value);
    err += a.err;
    lo = c[k];
  }
  double total = 0.0;
  for (double p : parts) total += p;
  for (std::size_t k = 1; k < parts.size(); ++k)
    if (parts[k] < -rule.tolerance(std::abs(total)))
      return IntegralVerdict::unsettled(total, err, "partial integrals not monotone");

  const double last = parts[K - 1];
  const double prev = parts[K - 2];
  if (last <= rule.tolerance(std::abs(total))) {
    // Cauchy within tolerance: mop up whatever lies beyond the last cutoff
    double tail = 0.0, tail_err = 0.0;
    if (!mapped_tail(f, c.back(), dom.lo, rule, tail, tail_err)) tail = tail_err = 0.0;
    return IntegralVerdict::converged(total + tail, err + tail_err, "partial integrals Cauchy");
  }
  const double ratio = (c[K - 1] - c[K - 2]) / (c[K - 2] - c[K - 3]);
  double q;
  if (prev <= 0.0)
    q = std::numeric_limits<double>::infinity();
  else
    q = std::log(last / prev) / std::log(ratio);
  if (q >= -rule.exponent_resolution) {
    const double expo = q < rule.exponent_resolution ? 0.0 : q;
    return IntegralVerdict::diverged(expo, q < rule.exponent_resolution ? "logarithmic growth"
                                                                         : "power-law growth");
  }
  // decaying increments: direct mapped tail if it settles, else geometric continuation
  double tail = 0.0, tail_err = 0.0;
  if (mapped_tail(f, c.back(), dom.lo, rule, tail, tail_err))
    return IntegralVerdict::converged(total + tail, err + tail_err, "tail integrated beyond last cutoff");
  const double r = last / prev;
  tail = last * r / (1.0 - r);
  return IntegralVerdict::converged(total + tail, err + std::abs(tail),
                                    "tail extrapolated from increment ratio");
}

template <class T, class F>
IntegralVerdict integrate_impl(const F& f, const Domain& dom, const QuadratureRule& rule) {
  rule.validate();
  if (!(dom.hi > dom.lo) && !dom.semi_infinite()) {
    if (dom.hi == dom.lo) return IntegralVerdict::converged(0.0, 0.0);
    throw std::invalid_argument("integration domain must have lo < hi");
  }
  if (!dom.semi_infinite()) {
    auto a = adaptive<T>(f, make_edges(dom.lo, dom.hi, dom.breaks, dom.period), rule.abs_tol,
                         rule.rel_tol, rule.max_subdivisions);
    if (a.ok) return IntegralVerdict::converged(as_cplx(a.value), a.err);
    return IntegralVerdict::unsettled(as_cplx(a.value), a.err, "subdivision limit reached");
  }

  // semi-infinite: [lo, H] directly, (H, inf) through e = H + s x/(1-x) stacked on [H, H+1]
  const double H = cutoffs_for(dom, rule).front();
  const double s = std::max(H - dom.lo, 1.0);
  auto g = [&](double u) -> T {
    if (u <= H) return f(u);
    const double x = u - H;
    if (x >= 1.0) return T(0);
    const double e = H + s * x / (1.0 - x);
    return f(e) * (s / ((1.0 - x) * (1.0 - x)));
  };
  std::vector<double> edges = make_edges(dom.lo, H, dom.breaks, dom.period);
  {
    std::vector<double> tail_pts;
    for (double b : dom.breaks)
      if (b > H) tail_pts.push_back(b);
    if (dom.period > 0.0)
      for (int k = 1; k <= 64; ++k) tail_pts.push_back(H + k * dom.period);
    for (double m : {1.0, 3.0, 10.0, 30.0, 100.0}) tail_pts.push_back(H + m * s);
    std::sort(tail_pts.begin(), tail_pts.end());
    for (double e : tail_pts) {
      const double x = (e - H) / (s + e - H);
      edges.push_back(H + x);
    }
    edges.push_back(H + 1.0);
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  }
  bool tail_blew_up = false;
  try {
    auto a = adaptive<T>(g, edges, rule.abs_tol, rule.rel_tol, rule.max_subdivisions);
    if (a.ok) return IntegralVerdict::converged(as_cplx(a.value), a.err);
  } catch (const NonEvaluable& ne) {
    if (ne.at <= H) throw;
    tail_blew_up = true;
  }

  // decide integrability of |f| from the cutoff probe
  auto absf = [&](double e) { return mag(f(e)); };
  IntegralVerdict pv = probe(absf, dom, rule);
  if (pv.divergent()) return pv;
  if (pv.inconclusive()) return pv;
  if (tail_blew_up)
    return IntegralVerdict::unsettled(pv.value, pv.err_estimate, "density overflow in the tail");

  // doubling blocks [L, 2L-lo] aligned to the period, accelerated by Wynn's epsilon
  auto head = adaptive<T>(f, make_edges(dom.lo, H, dom.breaks, dom.period), rule.abs_tol,
                          rule.rel_tol, rule.max_subdivisions);
  std::vector<T> sums{head.value};
  double err = head.err;
  double L = H;
  std::size_t panels = 0;
  T best = head.value;
  double spread = std::numeric_limits<double>::infinity();
  for (int j = 0; j < 60; ++j) {
    const double L2 = dom.lo + 2.0 * (L - dom.lo);
    auto edges_b = make_edges(L, L2, dom.breaks, dom.period);
    panels += edges_b.size();
    auto b = adaptive<T>(f, edges_b, rule.abs_tol * 1e-2, rule.rel_tol, rule.max_subdivisions);
    err += b.err;
    sums.push_back(sums.back() + b.value);
    L = L2;
    if (sums.size() >= 5) {
      const T e1 = wynn(sums).first;
      spread = std::max(mag(e1 - best), mag(e1 - wynn(std::vector<T>(sums.begin(), sums.end() - 1)).first));
      best = e1;
      if (spread <= 0.1 * rule.tolerance(mag(e1)) || panels > (std::size_t(1) << 17)) break;
    }
  }
  const double total_err = err + spread;
  if (total_err <= rule.tolerance(mag(best)))
    return IntegralVerdict::converged(as_cplx(best), total_err, "tail accelerated");
  return IntegralVerdict::unsettled(as_cplx(best), total_err, "tail acceleration did not settle");
}

}  // namespace

IntegralVerdict integrate(const RealDensity& f, const Domain& dom, const QuadratureRule& rule) {
  return integrate_impl<double>(f, dom, rule);
}

IntegralVerdict integrate(const ComplexDensity& f, const Domain& dom, const QuadratureRule& rule) {
  return integrate_impl<cplx>(f, dom, rule);
}

IntegralVerdict detect_divergence(const RealDensity& f, const Domain& dom,
                                  const QuadratureRule& rule) {
  rule.validate();
  if (!dom.semi_infinite()) throw std::invalid_argument("detect_divergence needs a semi-infinite domain");
  return probe(f, dom, rule);
}

std::vector<double> cumulants_to_moments(const std::vector<double>& kappa) {
  const std::size_t m = kappa.size();
  std::vector<long double> mu(m + 1, 0.0L);
  mu[0] = 1.0L;
  for (std::size_t n = 1; n <= m; ++n) {
    long double acc = 0.0L;
    long double binom = 1.0L;  // C(n-1, k-1)
    for (std::size_t k = 1; k <= n; ++k) {
      acc += binom * kappa[k - 1] * mu[n - k];
      binom = binom * (long double)(n - k) / (long double)k;
    }
    mu[n] = acc;
  }
  return {mu.begin() + 1, mu.end()};
}

std::vector<double> moments_to_cumulants(const std::vector<double>& mu_in) {
  const std::size_t m = mu_in.size();
  std::vector<long double> mu(m + 1);
  mu[0] = 1.0L;
  std::copy(mu_in.begin(), mu_in.end(), mu.begin() + 1);
  std::vector<long double> kappa(m, 0.0L);
  for (std::size_t n = 1; n <= m; ++n) {
    long double acc = mu[n];
    long double binom = 1.0L;
    for (std::size_t k = 1; k < n; ++k) {
      acc -= binom * kappa[k - 1] * mu[n - k];
      binom = binom * (long double)(n - k) / (long double)k;
    }
    kappa[n - 1] = acc;
  }
  return {kappa.begin(), kappa.end()};
}

GaussRule gauss_legendre(int n, double a, double b) {
  if (n < 1) throw std::invalid_argument("gauss_legendre needs n >= 1");
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd off(std::max(n - 1, 0));
  for (int k = 1; k < n; ++k) off(k - 1) = k / std::sqrt(4.0 * k * k - 1.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, off, Eigen::ComputeEigenvectors);
  GaussRule g;
  g.nodes.resize(n);
  g.weights.resize(n);
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  for (int i = 0; i < n; ++i) {
    const double v0 = es.eigenvectors()(0, i);
    g.nodes[i] = c + h * es.eigenvalues()(i);
    g.weights[i] = 2.0 * v0 * v0 * h;
  }
  return g;
}

}  // namespace heatlaw
