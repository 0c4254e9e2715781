#include "heatlaw/fockttm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "heatlaw/errors.hpp"
#include "heatlaw/linalg.hpp"
#include "heatlaw/parallel.hpp"
#include "heatlaw/vanhove.hpp"

namespace heatlaw {

namespace {

double max_abs(const MatrixC& a) { return a.size() ? a.cwiseAbs().maxCoeff() : 0.0; }

bool is_diagonal(const MatrixC& a) {
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      if (i != j && a(i, j) != cplx(0.0)) return false;
  return true;
}

bool is_real(const MatrixC& a) {
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      if (a(i, j).imag() != 0.0) return false;
  return true;
}

void require_hermitian(const MatrixC& a, const char* name) {
  if (!a.allFinite()) throw PreconditionViolation(std::string(name) + " has non-finite entries");
  if (max_abs(a - a.adjoint()) > 1e-12 * std::max(1.0, max_abs(a)))
    throw PreconditionViolation(std::string(name) + " is not Hermitian");
}

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), std::size_t(0)); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void join(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
};

// chain clustering of sorted atoms within tol, p-weighted positions
DiscreteAtomicLaw merge_atoms(std::vector<Atom> raw, double tol) {
  std::sort(raw.begin(), raw.end(), [](const Atom& a, const Atom& b) { return a.dq < b.dq; });
  DiscreteAtomicLaw law;
  std::size_t i = 0;
  while (i < raw.size()) {
    std::size_t j = i + 1;
    while (j < raw.size() && raw[j].dq - raw[j - 1].dq <= tol) ++j;
    double p = 0.0, m = 0.0;
    for (std::size_t k = i; k < j; ++k) p += raw[k].p, m += raw[k].p * raw[k].dq;
    law.atoms.push_back({p > 0.0 ? m / p : raw[i].dq, p});
    i = j;
  }
  return law;
}

}  // namespace

// ---- FiniteModel ----

double FiniteModel::effective_tol() const {
  if (cluster_tol > 0.0) return cluster_tol;
  const double scale = H0.size() ? H0.cwiseAbs().rowwise().sum().maxCoeff() : 0.0;
  return 1e-9 * std::max(scale, 1e-300);
}

void FiniteModel::validate() const {
  const Eigen::Index n = H0.rows();
  if (n == 0 || H0.cols() != n || V.rows() != n || V.cols() != n || omega.rows() != n || omega.cols() != n)
    throw PreconditionViolation("H0, V and omega must be square of equal size");
  require_hermitian(H0, "H0");
  require_hermitian(V, "V");
  require_hermitian(omega, "omega");
  const double tr = omega.trace().real();
  if (std::abs(tr - 1.0) > 1e-12) throw PreconditionViolation("tr omega = " + std::to_string(tr));
  double comm;
  if (is_diagonal(H0)) {
    comm = 0.0;
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = 0; i < n; ++i) comm += std::norm((H0(i, i) - H0(j, j)) * omega(i, j));
    comm = std::sqrt(comm);
  } else {
    comm = (H0 * omega - omega * H0).norm();
  }
  const double h = H0.norm();
  if (comm > 1e-10 * std::max(h, 1e-300) && comm > 1e-14)
    throw StateNotCommuting("||[H0, omega]|| = " + std::to_string(comm));
}

// ---- laws ----

double DiscreteAtomicLaw::total() const {
  double s = 0.0;
  for (const auto& a : atoms) s += a.p;
  return s;
}

std::vector<double> law_moments(const DiscreteAtomicLaw& law, const std::vector<int>& orders) {
  std::vector<double> out;
  for (int k : orders) {
    if (k < 0) throw PreconditionViolation("moment order must be >= 0");
    double s = 0.0;
    for (const auto& a : law.atoms) s += a.p * std::pow(a.dq, k);
    out.push_back(s);
  }
  return out;
}

cplx law_char_fn(const DiscreteAtomicLaw& law, double alpha) {
  cplx s = 0.0;
  for (const auto& a : law.atoms) s += a.p * std::exp(cplx(0.0, alpha * a.dq));
  return s;
}

// ---- engine ----

TTMEngine::TTMEngine(const FiniteModel& model) {
  model.validate();
  dim_ = std::size_t(model.H0.rows());
  tol_ = model.effective_tol();
  const Eigen::Index n = model.H0.rows();

  UnionFind uf(dim_);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < j; ++i)
      if (model.H0(i, j) != cplx(0.0) || model.V(i, j) != cplx(0.0) || model.omega(i, j) != cplx(0.0))
        uf.join(std::size_t(i), std::size_t(j));
  std::map<std::size_t, std::size_t> root_to_block;
  for (std::size_t i = 0; i < dim_; ++i) {
    const auto [it, fresh] = root_to_block.try_emplace(uf.find(i), blocks_.size());
    if (fresh) blocks_.emplace_back();
    blocks_[it->second].idx.push_back(Eigen::Index(i));
  }

  struct Raw {
    MatrixC e, omega, h;
    Eigen::VectorXd eps;
    bool diag = false;
  };
  std::vector<Raw> raw(blocks_.size());
  parallel_for(blocks_.size(), [&](std::size_t k) {
    auto& b = blocks_[k];
    Raw& r = raw[k];
    const MatrixC h0 = model.H0(b.idx, b.idx);
    r.omega = model.omega(b.idx, b.idx);
    r.h = h0 + model.V(b.idx, b.idx);
    b.real = is_real(h0) && is_real(r.h) && is_real(r.omega);
    if (is_diagonal(h0)) {
      r.eps = h0.diagonal().real();
      r.e = MatrixC::Identity(h0.rows(), h0.cols());
      r.diag = true;
    } else {
      auto es = eigh(h0);
      r.eps = es.values;
      r.e = es.vectors;
    }
  });

  // global clustering of H0 eigenvalues
  struct Level {
    double e;
    std::size_t block;
    Eigen::Index local;
  };
  std::vector<Level> levels;
  for (std::size_t k = 0; k < blocks_.size(); ++k)
    for (Eigen::Index i = 0; i < raw[k].eps.size(); ++i) levels.push_back({raw[k].eps(i), k, i});
  std::sort(levels.begin(), levels.end(), [](const Level& a, const Level& b) { return a.e < b.e; });
  for (auto& b : blocks_) b.cluster.assign(b.idx.size(), 0), b.eps.resize(Eigen::Index(b.idx.size()));
  for (std::size_t i = 0; i < levels.size();) {
    std::size_t j = i + 1;
    while (j < levels.size() && levels[j].e - levels[j - 1].e <= tol_) ++j;
    double mean = 0.0;
    for (std::size_t k = i; k < j; ++k) mean += levels[k].e;
    mean /= double(j - i);
    const int id = int(cluster_energy_.size());
    cluster_energy_.push_back(mean);
    for (std::size_t k = i; k < j; ++k) {
      auto& b = blocks_[levels[k].block];
      b.cluster[std::size_t(levels[k].local)] = id;
      b.eps(levels[k].local) = mean;
    }
    i = j;
  }

  parallel_for(blocks_.size(), [&](std::size_t k) {
    auto& b = blocks_[k];
    Raw& r = raw[k];
    const Eigen::Index m = Eigen::Index(b.idx.size());
    // diagonalize omega inside each degenerate H0 eigenspace
    b.w.resize(m);
    const MatrixC ot = r.diag ? r.omega : MatrixC(r.e.adjoint() * r.omega * r.e);
    std::map<int, std::vector<Eigen::Index>> members;
    for (Eigen::Index i = 0; i < m; ++i) members[b.cluster[std::size_t(i)]].push_back(i);
    for (const auto& [id, cols] : members) {
      if (cols.size() > 1) r.diag = false;
      if (cols.size() == 1) {
        b.w(cols[0]) = ot(cols[0], cols[0]).real();
        continue;
      }
      const MatrixC oc = ot(cols, cols);
      auto es = eigh(MatrixC(0.5 * (oc + oc.adjoint())));
      const MatrixC rot = r.e(Eigen::all, cols) * es.vectors;
      for (std::size_t c = 0; c < cols.size(); ++c) {
        r.e.col(cols[c]) = rot.col(Eigen::Index(c));
        b.w(cols[c]) = es.values(Eigen::Index(c));
      }
    }
    if (b.w.size() && b.w.minCoeff() < -1e-10) throw PreconditionViolation("omega is not positive semidefinite");
    b.w = b.w.cwiseMax(0.0);
    if (b.real) {
      auto es = eigh(Eigen::MatrixXd(r.h.real()));
      b.lam = es.values;
      b.xr = r.diag ? es.vectors : Eigen::MatrixXd(r.e.real().transpose() * es.vectors);
    } else {
      auto es = eigh(r.h);
      b.lam = es.values;
      b.xc = r.diag ? es.vectors : MatrixC(r.e.adjoint() * es.vectors);
    }
  });
}

Eigen::MatrixXd TTMEngine::transitions(const Block& b, double t) const {
  Eigen::MatrixXd mod2;
  if (b.real) {
    const Eigen::ArrayXd lt = b.lam.array() * t;
    const Eigen::MatrixXd re = (b.xr * lt.cos().matrix().asDiagonal()) * b.xr.transpose();
    const Eigen::MatrixXd im = (b.xr * lt.sin().matrix().asDiagonal()) * b.xr.transpose();
    mod2 = re.array().square() + im.array().square();
  } else {
    Eigen::VectorXcd ph(b.lam.size());
    for (Eigen::Index i = 0; i < ph.size(); ++i) ph(i) = std::exp(cplx(0.0, -b.lam(i) * t));
    const MatrixC u = (b.xc * ph.asDiagonal()) * b.xc.adjoint();
    mod2 = u.cwiseAbs2();
  }
  return mod2 * b.w.asDiagonal();
}

DiscreteAtomicLaw TTMEngine::law(double t) const {
  if (t == 0.0) {
    double p = 0.0;
    for (const auto& b : blocks_) p += b.w.sum();
    return {{{0.0, p}}};
  }
  std::vector<std::vector<Atom>> parts(blocks_.size());
  parallel_for(blocks_.size(), [&](std::size_t k) {
    const auto& b = blocks_[k];
    const Eigen::MatrixXd T = transitions(b, t);
    auto& out = parts[k];
    for (Eigen::Index a = 0; a < T.cols(); ++a)
      for (Eigen::Index j = 0; j < T.rows(); ++j)
        if (T(j, a) > 0.0) out.push_back({b.eps(j) - b.eps(a), T(j, a)});
  });
  std::vector<Atom> raw;
  for (auto& p : parts) raw.insert(raw.end(), p.begin(), p.end());
  return merge_atoms(std::move(raw), tol_);
}

std::vector<double> TTMEngine::moments(double t, const std::vector<int>& orders) const {
  for (int k : orders)
    if (k < 0) throw PreconditionViolation("moment order must be >= 0");
  std::vector<std::vector<double>> parts(blocks_.size(), std::vector<double>(orders.size(), 0.0));
  parallel_for(blocks_.size(), [&](std::size_t k) {
    const auto& b = blocks_[k];
    const Eigen::MatrixXd T = transitions(b, t);
    for (Eigen::Index a = 0; a < T.cols(); ++a)
      for (Eigen::Index j = 0; j < T.rows(); ++j) {
        const double d = b.eps(j) - b.eps(a);
        for (std::size_t o = 0; o < orders.size(); ++o) parts[k][o] += T(j, a) * std::pow(d, orders[o]);
      }
  });
  std::vector<double> out(orders.size(), 0.0);
  for (const auto& p : parts)
    for (std::size_t o = 0; o < orders.size(); ++o) out[o] += p[o];
  return out;
}

std::vector<cplx> TTMEngine::char_fn(double t, const std::vector<double>& alphas) const {
  const Eigen::Index na = Eigen::Index(alphas.size());
  std::vector<Eigen::VectorXcd> parts(blocks_.size(), Eigen::VectorXcd::Zero(na));
  parallel_for(blocks_.size(), [&](std::size_t k) {
    const auto& b = blocks_[k];
    const Eigen::MatrixXd T = transitions(b, t);
    const Eigen::Index m = b.eps.size();
    Eigen::MatrixXd yr(m, na), yi(m, na);
    for (Eigen::Index q = 0; q < na; ++q)
      for (Eigen::Index a = 0; a < m; ++a) {
        yr(a, q) = std::cos(alphas[std::size_t(q)] * b.eps(a));
        yi(a, q) = -std::sin(alphas[std::size_t(q)] * b.eps(a));
      }
    const Eigen::MatrixXd zr = T * yr, zi = T * yi;
    for (Eigen::Index q = 0; q < na; ++q) {
      cplx s = 0.0;
      for (Eigen::Index j = 0; j < m; ++j) {
        // e^{i alpha eps_j} conj(y) is the same trig pair
        s += cplx(yr(j, q), -yi(j, q)) * cplx(zr(j, q), zi(j, q));
      }
      parts[k](q) = s;
    }
  });
  std::vector<cplx> out(alphas.size(), 0.0);
  for (const auto& p : parts)
    for (Eigen::Index q = 0; q < na; ++q) out[std::size_t(q)] += p(q);
  return out;
}

DiscreteAtomicLaw ttm_distribution(const FiniteModel& model, double t) { return TTMEngine(model).law(t); }

// ---- Fock space ----

void FockSpec::validate() const {
  if (modes < 0) throw PreconditionViolation("modes must be >= 0");
  if (statistics == Statistics::Fermion) {
    if (modes > kFermionModeCap)
      throw CapExceeded("fermion Fock dimension 2^" + std::to_string(modes) + " exceeds 2^" +
                        std::to_string(kFermionModeCap));
  } else {
    if (boson_total_cap < 0) throw PreconditionViolation("boson_total_cap must be >= 0");
    if (dimension() > kBosonDimCap)
      throw CapExceeded("boson Fock dimension C(" + std::to_string(boson_total_cap + modes) + ", " +
                        std::to_string(modes) + ") exceeds " + std::to_string(kBosonDimCap));
  }
  if (!(ir_floor >= 0.0)) throw PreconditionViolation("ir_floor must be >= 0");
}

std::size_t FockSpec::dimension() const {
  if (statistics == Statistics::Fermion) return modes > 62 ? std::size_t(-1) : std::size_t(1) << modes;
  // C(N + m, m) with saturation
  double c = 1.0;
  for (int k = 1; k <= modes; ++k) c = c * double(boson_total_cap + k) / double(k);
  return c > 1e18 ? std::size_t(-1) : std::size_t(std::llround(c));
}

FockBasis::FockBasis(const FockSpec& spec) : spec_(spec) {
  spec.validate();
  const int m = spec.modes;
  if (spec.statistics == Statistics::Fermion) {
    const std::size_t dim = std::size_t(1) << m;
    for (std::size_t mask = 0; mask < dim; ++mask) {
      std::vector<std::uint8_t> n(std::size_t(m), 0);
      for (int k = 0; k < m; ++k) n[std::size_t(k)] = std::uint8_t((mask >> k) & 1u);
      states_.push_back(std::move(n));
    }
  } else {
    // graded by total number, lexicographic with the first mode most significant
    for (int total = 0; total <= spec.boson_total_cap; ++total) {
      std::vector<std::uint8_t> n(std::size_t(m), 0);
      auto rec = [&](auto&& self, int k, int left) -> void {
        if (k == m - 1 || m == 0) {
          if (m > 0) n[std::size_t(k)] = std::uint8_t(left);
          if (m > 0 || left == 0) states_.push_back(n);
          return;
        }
        for (int c = left; c >= 0; --c) {
          n[std::size_t(k)] = std::uint8_t(c);
          self(self, k + 1, left - c);
        }
      };
      rec(rec, 0, total);
    }
  }
  for (std::size_t i = 0; i < states_.size(); ++i) index_[states_[i]] = i;
}

std::optional<std::size_t> FockBasis::find(const std::vector<std::uint8_t>& n) const {
  auto it = index_.find(n);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

MatrixC second_quantize(const MatrixC& b, const FockSpec& spec) {
  if (b.rows() != spec.modes || b.cols() != spec.modes)
    throw PreconditionViolation("one-particle matrix dimension differs from modes");
  const FockBasis basis(spec);
  const std::size_t dim = basis.size();
  MatrixC out = MatrixC::Zero(Eigen::Index(dim), Eigen::Index(dim));
  const int m = spec.modes;
  const bool fermion = spec.statistics == Statistics::Fermion;
  for (std::size_t s = 0; s < dim; ++s) {
    const auto& n = basis.state(s);
    for (int j = 0; j < m; ++j) {
      if (n[std::size_t(j)] == 0) continue;
      for (int i = 0; i < m; ++i) {
        const cplx bij = b(i, j);
        if (bij == cplx(0.0)) continue;
        if (i == j) {
          out(Eigen::Index(s), Eigen::Index(s)) += bij * double(n[std::size_t(j)]);
          continue;
        }
        auto nn = n;
        double amp;
        if (fermion) {
          if (n[std::size_t(i)]) continue;
          int sgn = 0;
          for (int k = 0; k < j; ++k) sgn += n[std::size_t(k)];
          nn[std::size_t(j)] = 0;
          for (int k = 0; k < i; ++k) sgn += nn[std::size_t(k)];
          nn[std::size_t(i)] = 1;
          amp = (sgn % 2) ? -1.0 : 1.0;
        } else {
          amp = std::sqrt(double(n[std::size_t(j)]) * double(n[std::size_t(i)] + 1));
          nn[std::size_t(j)]--;
          nn[std::size_t(i)]++;
        }
        const auto target = basis.find(nn);
        if (!target) continue;
        out(Eigen::Index(*target), Eigen::Index(s)) += bij * amp;
      }
    }
  }
  return out;
}

MatrixC build_quadratic_V(const OneParticleTriple& triple, const FockSpec& spec) {
  return second_quantize(triple.v, spec);
}

MatrixC build_linear_V(const VectorC& g, const FockSpec& spec) {
  if (spec.statistics != Statistics::Boson) throw PreconditionViolation("linear V needs boson statistics");
  if (g.size() != spec.modes) throw PreconditionViolation("coupling length differs from modes");
  if (!g.allFinite()) throw PreconditionViolation("coupling must be finite");
  const FockBasis basis(spec);
  const std::size_t dim = basis.size();
  MatrixC out = MatrixC::Zero(Eigen::Index(dim), Eigen::Index(dim));
  const double r = 1.0 / std::sqrt(2.0);
  for (std::size_t s = 0; s < dim; ++s) {
    const auto& n = basis.state(s);
    for (int k = 0; k < spec.modes; ++k) {
      auto up = n;
      up[std::size_t(k)]++;
      if (auto t = basis.find(up)) {
        const cplx a = r * g(k) * std::sqrt(double(n[std::size_t(k)] + 1));
        out(Eigen::Index(*t), Eigen::Index(s)) += a;
        out(Eigen::Index(s), Eigen::Index(*t)) += std::conj(a);
      }
    }
  }
  return out;
}

MatrixC gibbs_state(const MatrixC& h_one, double beta, const FockSpec& spec) {
  if (!(beta > 0.0) || !std::isfinite(beta)) throw PreconditionViolation("beta must be positive and finite");
  require_hermitian(h_one, "h_one");
  if (h_one.rows() != spec.modes) throw PreconditionViolation("one-particle matrix dimension differs from modes");
  MatrixC hd = h_one;
  const double d = spec.ir_floor;
  if (d > 0.0 && is_diagonal(h_one)) {
    for (Eigen::Index i = 0; i < hd.rows(); ++i) hd(i, i) = std::max(d, h_one(i, i).real());
  } else if (d > 0.0) {
    hd = HermitianFunctions(h_one).apply([d](double e) { return cplx(std::max(d, e)); });
  }
  if (spec.statistics == Statistics::Boson) {
    HermitianFunctions fh(hd);
    if (fh.values().size() && fh.values().minCoeff() <= 0.0 && spec.modes > 0)
      throw PreconditionViolation("boson Gibbs state needs a positive one-particle Hamiltonian or ir_floor > 0");
  }
  const MatrixC H = second_quantize(hd, spec);
  if (is_diagonal(H)) {
    Eigen::VectorXd e = H.diagonal().real();
    const double lo = e.minCoeff();
    Eigen::VectorXd w = (-beta * (e.array() - lo)).exp();
    w /= w.sum();
    return MatrixC(w.cast<cplx>().asDiagonal());
  }
  auto es = eigh(H);
  const double lo = es.values.minCoeff();
  Eigen::VectorXd w = (-beta * (es.values.array() - lo)).exp();
  w /= w.sum();
  MatrixC rho = es.vectors * w.cast<cplx>().asDiagonal() * es.vectors.adjoint();
  rho = 0.5 * (rho + rho.adjoint());
  rho /= rho.trace().real();
  return rho;
}

// ---- families ----

DiscretizedImpurity ImpurityFamily::discretize(int D) const {
  if (D < 0) throw PreconditionViolation("D must be >= 0");
  // modes outside a compact support are decoupled and carry no heat
  const double range = lambda_per_mode * std::max(D, 1);
  return DiscretizedImpurity::gauss(f, D, f.compact() ? std::min(range, f.support_end()) : range, eps_o);
}

FiniteModel ImpurityFamily::model(int D, double beta) const {
  const auto triple = build_one_particle(discretize(D));
  const FockSpec spec{statistics, D + 1, boson_total_cap, ir_floor};
  spec.validate();
  return {second_quantize(triple.h0, spec), build_quadratic_V(triple, spec), gibbs_state(triple.h0, beta, spec), 0.0};
}

DiscretizedImpurity VanHoveFamily::discretize(int D) const { return DiscretizedImpurity::gauss(f, D, lambda_bath); }

FiniteModel VanHoveFamily::model(int D, int n_max, double beta) const {
  const auto imp = discretize(D);
  const FockSpec spec{Statistics::Boson, D, n_max, ir_floor};
  spec.validate();
  MatrixC h = MatrixC::Zero(D, D);
  for (int k = 0; k < D; ++k) h(k, k) = imp.bath_energies[std::size_t(k)];
  return {second_quantize(h, spec), build_linear_V(imp.coupling(), spec), gibbs_state(h, beta, spec), 0.0};
}

// ---- scans ----

double running_max_slope(const std::vector<double>& t, const std::vector<double>& y, double t_lo, double t_hi) {
  if (t.size() != y.size()) throw PreconditionViolation("t and y differ in length");
  double scale = 0.0;
  for (double v : y) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) return 0.0;
  double run = -std::numeric_limits<double>::infinity();
  double n = 0, st = 0, sy = 0, stt = 0, sty = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    run = std::max(run, y[i]);
    if (t[i] < t_lo || t[i] > t_hi) continue;
    n += 1, st += t[i], sy += run, stt += t[i] * t[i], sty += t[i] * run;
  }
  const double den = n * stt - st * st;
  if (n < 2 || den <= 0.0) return 0.0;
  return (n * sty - st * sy) / den / scale;
}

GrowthScan moment_growth_scan(const ImpurityFamily& fam, int n, const std::vector<int>& D_list, double beta,
                              const std::vector<double>& t_grid) {
  if (n < 0) throw PreconditionViolation("n must be >= 0");
  if (D_list.empty() || t_grid.empty()) throw PreconditionViolation("D_list and t_grid must be non-empty");
  GrowthScan scan;
  scan.order = 2 * n + 2;
  for (int D : D_list) {
    const TTMEngine eng(fam.model(D, beta));
    GrowthRow row;
    row.D = D;
    row.moments.assign(t_grid.size(), 0.0);
    parallel_for(t_grid.size(), [&](std::size_t i) { row.moments[i] = eng.moments(t_grid[i], {scan.order})[0]; });
    const auto it = std::max_element(row.moments.begin(), row.moments.end());
    row.max_moment = *it;
    row.argmax_t = t_grid[std::size_t(it - row.moments.begin())];
    scan.rows.push_back(std::move(row));
  }
  const auto& r = scan.rows;
  scan.increasing = true;
  for (std::size_t i = 1; i < r.size(); ++i) scan.increasing &= r[i].max_moment > r[i - 1].max_moment;
  if (r.size() >= 2) {
    const double a = r[r.size() - 2].max_moment, b = r.back().max_moment;
    scan.last_change = a > 0.0 ? std::abs(b - a) / a : (b == 0.0 ? 0.0 : 1.0);
  }
  scan.stabilizes = r.size() >= 2 && scan.last_change <= 0.2;
  const double t_end = *std::max_element(t_grid.begin(), t_grid.end());
  scan.trend_slope = running_max_slope(t_grid, r.back().moments, 0.5 * t_end, t_end);
  return scan;
}

bool non_increasing_with_slack(const std::vector<double>& e, double slack) {
  for (std::size_t i = 1; i < e.size(); ++i)
    if (e[i] > e[i - 1] * (1.0 + slack)) return false;
  return true;
}

namespace {

double sup_diff(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s = std::max(s, std::abs(a[i] - b[i]));
  return s;
}

TLStudy finish(TLStudy st) {
  std::vector<double> e;
  for (const auto& r : st.rows) e.push_back(r.error);
  st.non_increasing = non_increasing_with_slack(e);
  st.final_error = e.empty() ? 0.0 : e.back();
  return st;
}

}  // namespace

TLStudy tl_convergence_vanhove(const VanHoveFamily& fam, const std::vector<TLRow>& sweep, double beta, double t,
                               const std::vector<double>& alphas) {
  const PoissonLKLaw exact(fam.f, beta, t);
  std::vector<cplx> ref;
  for (double a : alphas) ref.push_back(char_fn(exact, a));
  TLStudy st;
  for (TLRow row : sweep) {
    VanHoveFamily f2 = fam;
    f2.ir_floor = row.delta;
    const TTMEngine eng(f2.model(row.D, row.n_max, beta));
    row.error = sup_diff(eng.char_fn(t, alphas), ref);
    st.rows.push_back(row);
  }
  return finish(std::move(st));
}

TLStudy tl_convergence_impurity(const ImpurityFamily& fam, const std::vector<TLRow>& sweep, double beta, double t,
                                const std::vector<double>& alphas) {
  if (sweep.empty()) throw PreconditionViolation("sweep is empty");
  std::vector<std::vector<cplx>> phis;
  for (const auto& row : sweep) {
    ImpurityFamily f2 = fam;
    f2.boson_total_cap = row.n_max;
    f2.ir_floor = row.delta;
    phis.push_back(TTMEngine(f2.model(row.D, beta)).char_fn(t, alphas));
  }
  TLStudy st;
  for (std::size_t i = 0; i < sweep.size(); ++i) {
    TLRow row = sweep[i];
    row.error = sup_diff(phis[i], phis.back());
    st.rows.push_back(row);
  }
  return finish(std::move(st));
}

CommutatorScan commutator_scan(const FiniteModel& model, const std::vector<double>& t_grid) {
  model.validate();
  const MatrixC& H0 = model.H0;
  const MatrixC& V = model.V;
  auto ad = [&](const MatrixC& x) { return MatrixC(H0 * x - x * H0); };
  HermitianFunctions fh(MatrixC(H0 + V));
  CommutatorScan r;
  r.bound = 2.0 * op_norm(ad(V)) + 2.0 * std::pow(op_norm(V), 2);
  for (double t : t_grid) {
    const MatrixC u = fh.exp_i(t);
    r.norms.push_back(op_norm(ad(V - u * V * u.adjoint())));
  }
  return r;
}

}  // namespace heatlaw
