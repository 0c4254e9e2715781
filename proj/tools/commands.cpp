#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include "app.hpp"
#include "config.hpp"
#include "heatlaw/classical.hpp"
#include "heatlaw/errors.hpp"
#include "heatlaw/fockttm.hpp"
#include "heatlaw/oneparticle.hpp"
#include "heatlaw/parallel.hpp"
#include "heatlaw/stats.hpp"
#include "heatlaw/vanhove.hpp"
#include "heatlaw/version.hpp"

namespace heatlaw::app {

using nlohmann::json;

namespace {

std::string fnv1a(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> x(n);
  for (int i = 0; i < n; ++i) x[i] = n == 1 ? a : a + (b - a) * i / (n - 1);
  return x;
}

// Everything a command needs after its config has been read.
struct Context {
  std::string command;
  std::filesystem::path out;
  std::uint64_t seed = 0;
  QuadratureRule rule;
  json config;
  std::string hash;

  void begin(const Config& cfg) {
    cfg.finish();
    config = cfg.resolved();
    hash = fnv1a(config.dump());
    std::filesystem::create_directories(out);
  }

  std::ofstream open(const std::string& name) const {
    std::ofstream f(out / name, std::ios::binary);
    if (!f) throw Error("cannot write " + (out / name).string());
    return f;
  }

  void report(const std::string& name, json results) const {
    json r = {{"tool", "heatlaw"},
              {"version", kVersion},
              {"command", command},
              {"config", config},
              {"config_hash", hash},
              {"quadrature", to_json(rule)},
              {"results", std::move(results)}};
    auto f = open(name);
    f << r.dump(2) << "\n";
  }
};

class Csv {
 public:
  Csv(const Context& ctx, const std::string& name, const std::vector<std::string>& columns, bool with_command = true)
      : f_(ctx.open(name)) {
    f_ << "# heatlaw " << kVersion << (with_command ? " " + ctx.command : std::string()) << " config_hash=" << ctx.hash
       << "\n";
    for (std::size_t i = 0; i < columns.size(); ++i) f_ << (i ? "," : "") << columns[i];
    f_ << "\n" << std::setprecision(17);
  }
  void row(std::initializer_list<double> v) {
    bool first = true;
    for (double x : v) {
      f_ << (first ? "" : ",") << x;
      first = false;
    }
    f_ << "\n";
  }

 private:
  std::ofstream f_;
};

void write_samples(const Context& ctx, const std::vector<double>& s) {
  // same bytes from "vanhove" and "vanhove sample"
  Csv csv(ctx, "samples.csv", {"delta_q"}, false);
  for (double x : s) csv.row({x});
}

json to_json(const IntegralVerdict& v) {
  json j = {{"status", to_string(v.status)}, {"value", v.value.real()}, {"err_estimate", v.err_estimate}};
  if (v.value.imag() != 0.0) j["value_imag"] = v.value.imag();
  if (v.growth_exponent != 0.0) j["growth_exponent"] = v.growth_exponent;
  if (!v.note.empty()) j["note"] = v.note;
  return j;
}

json to_json(const EquivalenceReport& r) {
  json per = json::array();
  for (const auto& p : r.per_time) per.push_back({{"t", p.t}, {"verdict", to_json(p.verdict)}});
  return {{"kind", r.kind},
          {"order", r.order},
          {"sup_over_grid", to_json(r.sup_over_grid)},
          {"window", to_json(r.window)},
          {"uv", to_json(r.uv)},
          {"consistent", r.consistent},
          {"extrapolated", r.extrapolated},
          {"note", r.note},
          {"per_time", per}};
}

std::vector<double> sample_atoms(const DiscreteAtomicLaw& law, std::size_t n, std::uint64_t seed) {
  std::vector<double> cum;
  double acc = 0.0;
  for (const auto& a : law.atoms) cum.push_back(acc += a.p);
  return chunked_draw(n, seed, [&](std::mt19937_64& rng) {
    const double u = std::uniform_real_distribution<double>(0.0, acc)(rng);
    const auto i = std::min<std::size_t>(std::upper_bound(cum.begin(), cum.end(), u) - cum.begin(), cum.size() - 1);
    return law.atoms[i].dq;
  });
}

std::pair<double, double> window_of(Config& cfg, const std::string& key, std::vector<double> def) {
  const auto w = cfg.reals(key, def);
  if (w.size() != 2 || !(w[1] > w[0]) || w[0] < 0.0) cfg.fail(key, "window must be [t1, t2] with 0 <= t1 < t2");
  return {w[0], w[1]};
}

// ---------------------------------------------------------------- vanhove

int cmd_vanhove(Config& cfg, Context& ctx, bool sample_only) {
  const FormFactor f = cfg.formfactor();
  const double beta = cfg.positive("beta");
  const auto t_grid = cfg.grid("t_grid");
  const auto alphas = cfg.grid("alpha_grid", linspace(-3.0, 3.0, 61));
  const int up_to = int(cfg.integer("moments_up_to", 4, 1, 16));
  const auto orders = cfg.ints("scan.moment_orders", std::vector<int>{1});
  const auto gammas = cfg.reals("scan.exp_gammas", std::vector<double>{});
  const auto window = window_of(cfg, "scan.window", {t_grid.front(), t_grid.back() + (t_grid.back() > t_grid.front() ? 0.0 : 1.0)});
  const int time_nodes = int(cfg.integer("scan.time_nodes", 8, 2, 256));
  const bool required = cfg.boolean("scan.required", true);
  const auto n_samples = std::size_t(cfg.integer("sampling.n", 0, 0, 100000000));
  const double ts = cfg.real("sampling.t", t_grid.back());
  for (int n : orders)
    if (n < 0) cfg.fail("scan.moment_orders", "orders must be >= 0");
  for (double g : gammas)
    if (!(g > 0.0)) cfg.fail("scan.exp_gammas", "gammas must be > 0");
  if (sample_only && n_samples == 0) cfg.fail("sampling.n", "must be > 0 for vanhove sample");
  ctx.begin(cfg);

  if (n_samples > 0) write_samples(ctx, sample(PoissonLKLaw(f, beta, ts, ctx.rule), n_samples, ctx.seed));
  if (sample_only) return kExitOk;

  const std::size_t nt = t_grid.size();
  std::vector<json> per_t(nt);
  std::vector<std::vector<cplx>> phi(nt);
  parallel_for(nt, [&](std::size_t i) {
    const PoissonLKLaw law(f, beta, t_grid[i], ctx.rule);
    json ms = json::array();
    for (const auto& m : moments(law, up_to)) ms.push_back(to_json(m));
    per_t[i] = {{"t", t_grid[i]},
                {"total_mass", to_json(law.intensity().total_mass())},
                {"detailed_balance_defect", detailed_balance_defect(law)},
                {"extrapolated", law.intensity().extrapolated()},
                {"moments", ms}};
    for (double a : alphas) phi[i].push_back(char_fn(law, a));
  });
  {
    Csv csv(ctx, "charfn.csv", {"t", "alpha", "re", "im"});
    for (std::size_t i = 0; i < nt; ++i)
      for (std::size_t k = 0; k < alphas.size(); ++k) csv.row({t_grid[i], alphas[k], phi[i][k].real(), phi[i][k].imag()});
  }

  std::vector<EquivalenceReport> scans(orders.size() + gammas.size());
  parallel_for(scans.size(), [&](std::size_t i) {
    scans[i] = i < orders.size()
                   ? equivalence_scan_moments(f, beta, orders[i], t_grid, window, ctx.rule, time_nodes)
                   : equivalence_scan_exp(f, beta, gammas[i - orders.size()], t_grid, window, ctx.rule, time_nodes);
  });
  json js = json::array();
  bool inconclusive = false;
  for (const auto& s : scans) {
    js.push_back(to_json(s));
    inconclusive |= s.sup_over_grid.inconclusive() || s.window.inconclusive() || s.uv.inconclusive();
  }
  ctx.report("report.json", {{"per_time", per_t}, {"scans", js}, {"any_inconclusive", inconclusive}});
  if (required && inconclusive) {
    std::cerr << "error: an equivalence verdict is Inconclusive (see report.json)\n";
    return kExitInconclusive;
  }
  return kExitOk;
}

// ---------------------------------------------------------------- classical

int cmd_classical(Config& cfg, Context& ctx) {
  const std::string model = cfg.str("model", std::nullopt, {"linear", "harmonic"});
  const auto t_grid = cfg.grid("t_grid");
  const auto gammas = cfg.reals("exp_gammas", std::vector<double>{});
  for (double g : gammas)
    if (!(g > 0.0)) cfg.fail("exp_gammas", "gammas must be > 0");
  const auto n_samples = std::size_t(cfg.integer("sampling.n", 0, 0, 100000000));
  const double ts = cfg.real("sampling.t", t_grid.back());

  if (model == "linear") {
    const double beta = cfg.positive("beta", 1.0);
    const auto alphas = cfg.grid("alpha_grid", linspace(-3.0, 3.0, 61));
    LinearClassicalModel m;
    for (const auto& r : cfg.records("modes", {{"f_pi", 0.0}, {"f_phi", 0.0}, {"cov", 1.0 / beta}}, {"freq"}))
      m.modes.push_back({r.at("freq"), r.at("f_pi"), r.at("f_phi"), r.at("cov")});
    try {
      m.validate();
    } catch (const PreconditionViolation& e) {
      cfg.fail("modes", e.what());
    }
    ctx.begin(cfg);
    Csv law_csv(ctx, "classical_law.csv", {"t", "mean", "variance"});
    Csv phi_csv(ctx, "charfn.csv", {"t", "alpha", "re", "im"});
    json per = json::array();
    for (double t : t_grid) {
      const auto g = linear_gaussian_law(m, t);
      law_csv.row({t, g.mean, g.variance});
      for (double a : alphas) {
        const cplx c = g.char_fn(a);
        phi_csv.row({t, a, c.real(), c.imag()});
      }
      json em = json::array();
      for (double gm : gammas) em.push_back({{"gamma", gm}, {"exp_moment_abs", linear_exp_moment(m, gm, t)}});
      per.push_back({{"t", t}, {"mean", g.mean}, {"variance", g.variance}, {"exp_moments", em}});
    }
    ctx.report("report.json", {{"model", "linear"}, {"f_norm2", m.f_norm2()}, {"max_cov", m.max_cov()}, {"per_time", per}});
    if (n_samples > 0) write_samples(ctx, linear_sample(m, ts, n_samples, ctx.seed));
    return kExitOk;
  }

  const auto freqs = cfg.reals("freqs");
  const MatrixC vc = cfg.matrix("v");
  if (vc.imag().cwiseAbs().maxCoeff() > 0.0) cfg.fail("v", "must be real");
  Eigen::MatrixXd sigma;
  if (cfg.has("sigma")) {
    const MatrixC sc = cfg.matrix("sigma");
    if (sc.imag().cwiseAbs().maxCoeff() > 0.0) cfg.fail("sigma", "must be real");
    sigma = sc.real();
  } else {
    const double beta = cfg.positive("beta", 1.0);
    sigma = Eigen::MatrixXd::Identity(vc.rows(), vc.cols()) / beta;
  }
  std::optional<double> ug;
  if (cfg.has("uniform.gamma")) ug = cfg.positive("uniform.gamma");
  HarmonicClassicalModel m;
  try {
    m = HarmonicClassicalModel::from_modes(freqs, vc.real(), sigma);
    m.validate();
  } catch (const PreconditionViolation& e) {
    cfg.fail("v", e.what());
  }
  ctx.begin(cfg);

  Csv law_csv(ctx, "classical_law.csv", {"t", "mean", "variance", "gamma_crit_plus", "gamma_crit_minus"});
  json per = json::array();
  for (double t : t_grid) {
    const auto law = harmonic_law(m, t);
    std::vector<double> kap;
    for (int k = 1; k <= 4; ++k) kap.push_back(law.cumulant(k));
    law_csv.row({t, kap[0], kap[1], law.critical_gamma_plus(), law.critical_gamma_minus()});
    json em = json::array();
    for (double g : gammas) {
      json e = {{"gamma", g}};
      for (int sgn : {1, -1}) {
        const char* key = sgn > 0 ? "log_mgf_plus" : "log_mgf_minus";
        try {
          e[key] = law.log_mgf(sgn * g);
        } catch (const MGFDiverges& d) {
          e[key] = nullptr;
          e[std::string(key) + "_critical"] = d.gamma_critical;
        }
      }
      em.push_back(e);
    }
    per.push_back({{"t", t},
                   {"cumulants", kap},
                   {"gamma_crit_plus", law.critical_gamma_plus()},
                   {"gamma_crit_minus", law.critical_gamma_minus()},
                   {"exp_moments", em}});
  }
  double g = ug.value_or(0.0);
  if (!ug) {
    const auto probe = harmonic_uniform_check(m, 0.0, t_grid);
    g = std::isfinite(probe.gamma_uniform) && probe.gamma_uniform > 0.0 ? 0.5 * probe.gamma_uniform : 0.0;
  }
  const auto u = harmonic_uniform_check(m, g, t_grid);
  json uj = {{"gamma", g},
             {"grid_max", u.grid_max},
             {"certified_bound", u.certified_bound},
             {"flow_norm2_max", u.flow_norm2_max},
             {"flow_norm2_bound", u.flow_norm2_bound},
             {"gamma_uniform", u.gamma_uniform},
             {"uniform_bound", u.uniform_bound},
             {"note", u.note}};
  ctx.report("report.json", {{"model", "harmonic"}, {"dim", m.dim}, {"per_time", per}, {"uniform_check", uj}});
  if (n_samples > 0) write_samples(ctx, harmonic_law(m, ts).sample(n_samples, ctx.seed));
  return kExitOk;
}

// ---------------------------------------------------------------- ttm

MatrixC gibbs_of(const MatrixC& h, double beta) {
  HermitianFunctions fh(h);
  const double lo = fh.values().minCoeff();
  MatrixC w = fh.apply([&](double e) { return cplx(std::exp(-beta * (e - lo)), 0.0); });
  return w / w.trace().real();
}

json law_json(const DiscreteAtomicLaw& law, const std::vector<int>& orders) {
  return {{"atoms", law.atoms.size()}, {"total", law.total()}, {"moments", law_moments(law, orders)}};
}

int cmd_ttm(Config& cfg, Context& ctx) {
  FiniteModel model;
  model.H0 = cfg.matrix("H0");
  model.V = cfg.matrix("V");
  if (model.V.rows() != model.H0.rows()) cfg.fail("V", "size differs from H0");
  std::optional<double> beta;
  if (cfg.has("omega")) {
    model.omega = cfg.matrix("omega");
    if (model.omega.rows() != model.H0.rows()) cfg.fail("omega", "size differs from H0");
  } else {
    beta = cfg.positive("beta");
    model.omega = gibbs_of(model.H0, *beta);
  }
  model.cluster_tol = cfg.real("cluster_tol", 0.0);
  const auto t_grid = cfg.grid("t_grid");
  const auto orders = cfg.ints("moment_orders", std::vector<int>{1, 2, 3, 4});
  std::vector<double> alphas;
  if (cfg.has("alpha_grid")) alphas = cfg.grid("alpha_grid");
  const auto n_samples = std::size_t(cfg.integer("sampling.n", 0, 0, 100000000));
  const double ts = cfg.real("sampling.t", t_grid.back());
  try {
    model.validate();
  } catch (const Error& e) {
    cfg.fail(cfg.has("omega") ? "omega" : "H0", e.what());
  }
  ctx.begin(cfg);

  const TTMEngine eng(model);
  HermitianFunctions fh(MatrixC(model.H0 + model.V));
  Csv law_csv(ctx, "ttm_law.csv", {"t", "delta_q", "p"});
  std::unique_ptr<Csv> phi_csv;
  if (!alphas.empty()) phi_csv = std::make_unique<Csv>(ctx, "charfn.csv", std::vector<std::string>{"t", "alpha", "re", "im"});
  json per = json::array();
  for (double t : t_grid) {
    const auto law = eng.law(t);
    for (const auto& a : law.atoms) law_csv.row({t, a.dq, a.p});
    json j = law_json(law, orders);
    j["t"] = t;
    const MatrixC u = fh.exp_i(t);
    j["first_law_mean"] = law_moments(law, {1})[0];
    j["first_law_trace"] = (model.omega * (model.V - u * model.V * u.adjoint())).trace().real();
    if (beta) {
      double s = 0.0;
      for (const auto& a : law.atoms) s += std::exp(-*beta * a.dq) * a.p;
      j["jarzynski_sum"] = s;
    }
    if (phi_csv) {
      const auto c = eng.char_fn(t, alphas);
      for (std::size_t k = 0; k < alphas.size(); ++k) phi_csv->row({t, alphas[k], c[k].real(), c[k].imag()});
    }
    per.push_back(j);
  }
  ctx.report("report.json", {{"dimension", eng.dimension()},
                             {"sectors", eng.sectors()},
                             {"cluster_tol", model.effective_tol()},
                             {"per_time", per}});
  if (n_samples > 0) write_samples(ctx, sample_atoms(eng.law(ts), n_samples, ctx.seed));
  return kExitOk;
}

// ---------------------------------------------------------------- impurity models

ImpurityFamily impurity_family(Config& cfg, Statistics st) {
  ImpurityFamily fam;
  fam.f = cfg.formfactor();
  fam.statistics = st;
  fam.lambda_per_mode = cfg.positive("lambda_per_mode", 1.0);
  fam.eps_o = cfg.positive("eps_o", 1.0);
  if (st == Statistics::Boson) {
    fam.boson_total_cap = int(cfg.integer("boson_total_cap", 4, 0, 64));
    fam.ir_floor = cfg.real("ir_floor", 0.0);
    if (fam.ir_floor < 0.0) cfg.fail("ir_floor", "must be >= 0");
  }
  return fam;
}

int cmd_impurity(Config& cfg, Context& ctx, Statistics st) {
  const ImpurityFamily fam = impurity_family(cfg, st);
  const double beta = cfg.positive("beta");
  const int n = int(cfg.integer("n", 1, 0, 8));
  const auto D_list = cfg.ints("D_list");
  if (D_list.empty()) cfg.fail("D_list", "is empty");
  for (int D : D_list)
    if (D < 1) cfg.fail("D_list", "D must be >= 1");
  const auto t_grid = cfg.grid("t_grid");
  const bool comm = cfg.boolean("commutator_scan", false);
  const auto n_samples = std::size_t(cfg.integer("sampling.n", 0, 0, 100000000));
  const double ts = cfg.real("sampling.t", t_grid.back());
  const int Ds = int(cfg.integer("sampling.D", D_list.back(), 1, 64));
  ctx.begin(cfg);

  const GrowthScan g = moment_growth_scan(fam, n, D_list, beta, t_grid);
  Csv csv(ctx, "growth.csv", {"D", "t", "moment"});
  json rows = json::array();
  for (const auto& r : g.rows) {
    for (std::size_t i = 0; i < t_grid.size(); ++i) csv.row({double(r.D), t_grid[i], r.moments[i]});
    rows.push_back({{"D", r.D}, {"max_moment", r.max_moment}, {"argmax_t", r.argmax_t}});
  }
  json res = {{"order", g.order},
              {"rows", rows},
              {"last_change", g.last_change},
              {"stabilizes", g.stabilizes},
              {"increasing", g.increasing},
              {"trend_slope", g.trend_slope}};
  if (comm) {
    const auto c = commutator_scan(fam.model(D_list.back(), beta), t_grid);
    res["commutator"] = {{"max_norm", *std::max_element(c.norms.begin(), c.norms.end())}, {"bound", c.bound}};
  }
  ctx.report("report.json", res);
  if (n_samples > 0) write_samples(ctx, sample_atoms(ttm_distribution(fam.model(Ds, beta), ts), n_samples, ctx.seed));
  return kExitOk;
}

// ---------------------------------------------------------------- tl-convergence

int cmd_tl(Config& cfg, Context& ctx) {
  const std::string model = cfg.str("model", std::nullopt, {"vanhove", "fermion-impurity", "boson-oscillator"});
  const double beta = cfg.positive("beta");
  const double t = cfg.real("t");
  const auto alphas = cfg.grid("alpha_grid", linspace(-2.0, 2.0, 41));
  const bool vh = model == "vanhove";
  std::vector<TLRow> sweep;
  for (const auto& r : cfg.records("sweep", {{"n_max", vh ? 8.0 : 4.0}, {"delta", vh ? 1e-3 : 0.0}}, {"D"})) {
    TLRow row;
    row.D = int(r.at("D"));
    row.n_max = int(r.at("n_max"));
    row.delta = r.at("delta");
    if (row.D < 1 || double(row.D) != r.at("D")) cfg.fail("sweep", "D must be a positive integer");
    if (row.n_max < 0 || double(row.n_max) != r.at("n_max")) cfg.fail("sweep", "n_max must be a nonnegative integer");
    if (row.delta < 0.0 || (vh && row.delta <= 0.0)) cfg.fail("sweep", "delta must be > 0 (van Hove) or >= 0");
    sweep.push_back(row);
  }
  TLStudy st;
  if (vh) {
    VanHoveFamily fam;
    fam.f = cfg.formfactor();
    fam.lambda_bath = cfg.positive("lambda_bath", 8.0);
    ctx.begin(cfg);
    st = tl_convergence_vanhove(fam, sweep, beta, t, alphas);
  } else {
    const ImpurityFamily fam =
        impurity_family(cfg, model == "fermion-impurity" ? Statistics::Fermion : Statistics::Boson);
    ctx.begin(cfg);
    st = tl_convergence_impurity(fam, sweep, beta, t, alphas);
  }
  Csv csv(ctx, "tl.csv", {"D", "n_max", "delta", "error"});
  json rows = json::array();
  for (const auto& r : st.rows) {
    csv.row({double(r.D), double(r.n_max), r.delta, r.error});
    rows.push_back({{"D", r.D}, {"n_max", r.n_max}, {"delta", r.delta}, {"error", r.error}});
  }
  ctx.report("report.json", {{"reference", vh ? "exact Poisson law" : "last sweep row"},
                             {"rows", rows},
                             {"non_increasing", st.non_increasing},
                             {"final_error", st.final_error}});
  return kExitOk;
}

// ---------------------------------------------------------------- tails

std::vector<double> read_samples(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError(path + ": cannot open sample file");
  std::vector<double> x;
  std::string line;
  int col = -1, lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
    if (col < 0) {
      const auto it = std::find(cells.begin(), cells.end(), "delta_q");
      if (it == cells.end()) throw ConfigError(path + ":" + std::to_string(lineno) + ": no delta_q column");
      col = int(it - cells.begin());
      continue;
    }
    if (int(cells.size()) <= col) throw ConfigError(path + ":" + std::to_string(lineno) + ": missing delta_q value");
    char* end = nullptr;
    const double v = std::strtod(cells[col].c_str(), &end);
    if (end == cells[col].c_str() || !std::isfinite(v))
      throw ConfigError(path + ":" + std::to_string(lineno) + ": bad number '" + cells[col] + "'");
    x.push_back(v);
  }
  return x;
}

json to_json(const HillEstimate& h) {
  if (h.k_used == 0) return nullptr;
  return {{"index", h.index},
          {"std_error", h.std_error},
          {"k_used", h.k_used},
          {"drift_z", h.drift_z},
          {"light_tailed", h.light_tailed}};
}

int cmd_tails(Config& cfg, Context& ctx) {
  const std::string input = cfg.path("input");
  const int k = int(cfg.integer("k", 1000, 10));
  const auto orders = cfg.ints("orders", std::vector<int>{1, 2, 3, 4});
  for (int o : orders)
    if (o < 0) cfg.fail("orders", "orders must be >= 0");
  MarkovMode mode;
  const std::string kind = cfg.str("markov.mode", "power", {"power", "exp"});
  if (kind == "power") {
    mode.kind = MarkovMode::Power;
    mode.n = int(cfg.integer("markov.n", 1, 0, 32));
  } else {
    mode.kind = MarkovMode::Exponential;
    mode.gamma = cfg.positive("markov.gamma");
    if (cfg.has("markov.C")) mode.C = cfg.positive("markov.C");
  }
  const auto E_grid = cfg.grid("markov.E_grid");
  for (double E : E_grid)
    if (!(E > 0.0)) cfg.fail("markov.E_grid", "energies must be > 0");
  const auto x = read_samples(input);
  if (x.size() < 100) cfg.fail("input", "need at least 100 samples, file has " + std::to_string(x.size()));
  if (std::size_t(k) >= x.size()) cfg.fail("k", "must be below the sample count");
  ctx.begin(cfg);

  const TailReport r = tail_report(x, orders, k, mode, E_grid);
  Csv csv(ctx, "markov.csv", {"E", "empirical", "bound", "binom_se"});
  json mc = json::array();
  for (const auto& p : r.markov.points) {
    csv.row({p.E, p.empirical, p.bound, p.binom_se});
    mc.push_back({{"E", p.E}, {"empirical", p.empirical}, {"bound", p.bound}, {"binom_se", p.binom_se}});
  }
  json mt = json::array();
  for (const auto& m : r.moment_table) mt.push_back({{"order", m.order}, {"estimate", m.estimate}, {"std_error", m.std_error}});
  ctx.report("tail_report.json", {{"samples", x.size()},
                                  {"hill_index", r.hill.index},
                                  {"k_used", r.hill.k_used},
                                  {"hill", to_json(r.hill)},
                                  {"hill_upper", to_json(r.hill_upper)},
                                  {"hill_lower", to_json(r.hill_lower)},
                                  {"moment_table", mt},
                                  {"markov_C", r.markov.C},
                                  {"markov_dominated", r.markov.dominated},
                                  {"markov_curve", mc}});
  return kExitOk;
}

// ---------------------------------------------------------------- lemmas

OneParticleTriple random_triple(std::mt19937_64& rng, int D) {
  std::uniform_real_distribution<double> u(0.2, 1.5);
  const double rate = u(rng), lam = 2.0 + 3.0 * u(rng), eps = u(rng);
  const double s = u(rng);
  auto f = FormFactor::custom("random", [rate, s](double e) {
    return cplx(std::exp(-rate * e) * e, s * e * e * std::exp(-e));
  });
  return build_one_particle(DiscretizedImpurity::gauss(f, D, lam, eps));
}

VectorC random_unit(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> g;
  VectorC v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = cplx(g(rng), g(rng));
  return v / v.norm();
}

int cmd_lemmas(Config& cfg, Context& ctx) {
  const int instances = int(cfg.integer("instances", 20, 1, 10000));
  const int D = int(cfg.integer("D", 6, 1, 400));
  const int n = int(cfg.integer("n", 2, 0, 8));
  const auto t_grid = cfg.grid("t_grid", linspace(0.0, 100.0, 201));
  const double alpha = cfg.real("lemma52_alpha", 2.0);
  const auto window = window_of(cfg, "window", {0.0, 2.0 * std::numbers::pi});
  std::vector<double> e_def;
  for (int i = 0; i <= 2000; ++i) e_def.push_back(0.01 * i);
  for (double e = 25.0; e <= 5000.0; e *= 1.25) e_def.push_back(e);
  const auto e_grid = cfg.grid("e_grid", e_def);
  Occupation occ;
  occ.kind = cfg.str("occupation", "fermi", {"fermi", "bose"}) == "fermi" ? Occupation::FermiDirac : Occupation::BoseEinstein;
  occ.beta = cfg.positive("beta", 1.0);
  ctx.begin(cfg);

  std::vector<json> rows(instances);
  std::vector<char> ok(instances, 0);
  parallel_for(std::size_t(instances), [&](std::size_t i) {
    auto rng = chunk_rng(ctx.seed, i);
    const auto tr = random_triple(rng, D);
    const VectorC phi = random_unit(rng, tr.h.rows());
    const auto l51 = lemma51_defect(tr, n, t_grid);
    const auto l52 = lemma52_scan(tr, phi, alpha, t_grid, n);
    const auto l54 = lemma54_infimum(tr, occ, phi, window, e_grid);
    const auto l55 = lemma55_check(tr, phi, t_grid);
    const double plateau = std::abs(l54.jensen.back() - l54.plateau_target) / l54.plateau_target;
    ok[i] = l51.defect <= 0.0 && l54.infimum > 0.0 && plateau <= 0.01 && l55.max_deviation <= 1e-10 &&
            l55.sup_norm <= l55.proof_bound * (1 + 1e-12);
    rows[i] = {{"instance", i},
               {"lemma51_defect", l51.defect},
               {"lemma51_worst_t", l51.worst_t},
               {"lemma52_max_norm", l52.max_norm},
               {"lemma52_proof_bound", l52.proof_bound},
               {"lemma52_growth_flag", l52.growth_flag},
               {"lemma54_infimum", l54.infimum},
               {"lemma54_argmin_e", l54.argmin_e},
               {"lemma54_plateau_rel_error", plateau},
               {"lemma55_max_deviation", l55.max_deviation},
               {"lemma55_sup_norm", l55.sup_norm},
               {"lemma55_proof_bound", l55.proof_bound},
               {"pass", bool(ok[i])}};
  });
  const bool all = std::all_of(ok.begin(), ok.end(), [](char c) { return c != 0; });
  ctx.report("report.json", {{"instances", rows}, {"all_pass", all}});
  return kExitOk;
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"vanhove",        "vanhove-sample",   "classical", "ttm",
                                                 "fermion-impurity", "boson-oscillator", "tl-convergence",
                                                 "tails",          "lemmas"};
  return names;
}

int run(const std::string& command, const RunOptions& opt) {
  try {
    Config cfg = Config::load(opt.config_path);
    Context ctx;
    ctx.command = command;
    if (opt.seed) {
      cfg.set("seed", *opt.seed);
      ctx.seed = *opt.seed;
    } else {
      ctx.seed = std::uint64_t(cfg.integer("seed", 1, 0));
    }
    // neither the thread count nor the output directory may change any output
    int threads = int(cfg.integer("threads", 1, 1, 1024));
    if (opt.threads) threads = *opt.threads;
    cfg.forget("threads");
    if (threads < 1) throw ConfigError("--threads must be >= 1");
    set_thread_cap(threads);
    ctx.out = cfg.str("output.dir", ".");
    if (opt.out_dir) ctx.out = *opt.out_dir;
    cfg.forget("output");
    ctx.rule = cfg.quadrature();

    if (command == "vanhove") return cmd_vanhove(cfg, ctx, false);
    if (command == "vanhove-sample") return cmd_vanhove(cfg, ctx, true);
    if (command == "classical") return cmd_classical(cfg, ctx);
    if (command == "ttm") return cmd_ttm(cfg, ctx);
    if (command == "fermion-impurity") return cmd_impurity(cfg, ctx, Statistics::Fermion);
    if (command == "boson-oscillator") return cmd_impurity(cfg, ctx, Statistics::Boson);
    if (command == "tl-convergence") return cmd_tl(cfg, ctx);
    if (command == "tails") return cmd_tails(cfg, ctx);
    if (command == "lemmas") return cmd_lemmas(cfg, ctx);
    std::cerr << "error: unknown command " << command << "\n";
    return kExitConfig;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const CapExceeded& e) {
    std::cerr << "cap exceeded: " << e.what() << "\n";
    return kExitCap;
  } catch (const InconclusiveVerdict& e) {
    std::cerr << "inconclusive: " << e.what() << "\n";
    return kExitInconclusive;
  } catch (const PreconditionViolation& e) {
    std::cerr << "config error: model rejected the configuration: " << e.what() << "\n";
    return kExitConfig;
  } catch (const StateNotCommuting& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace heatlaw::app
