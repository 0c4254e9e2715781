#include "config.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <sstream>

#include "toml.hpp"

namespace heatlaw::app {

namespace {

std::string line_of(const toml::node* n) {
  if (!n || n->source().begin.line == 0) return {};
  return std::to_string(n->source().begin.line);
}

const char* type_name(const toml::node& n) {
  switch (n.type()) {
    case toml::node_type::table: return "table";
    case toml::node_type::array: return "array";
    case toml::node_type::string: return "string";
    case toml::node_type::integer: return "integer";
    case toml::node_type::floating_point: return "float";
    case toml::node_type::boolean: return "boolean";
    default: return "date/time";
  }
}

}  // namespace

Config::Config() : root_(std::make_unique<toml::table>()) {}
Config::Config(Config&&) noexcept = default;
Config& Config::operator=(Config&&) noexcept = default;
Config::~Config() = default;

Config Config::load(const std::string& path) {
  Config c;
  c.source_ = path;
  try {
    *c.root_ = toml::parse_file(path);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << path << ":" << e.source().begin.line << ": " << e.description();
    throw ConfigError(os.str());
  }
  return c;
}

Config Config::parse(std::string_view text, std::string source) {
  Config c;
  c.source_ = std::move(source);
  try {
    *c.root_ = toml::parse(text, c.source_);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << c.source_ << ":" << e.source().begin.line << ": " << e.description();
    throw ConfigError(os.str());
  }
  return c;
}

void Config::fail(std::string_view key, const std::string& msg) const {
  std::string where = source_;
  const std::string line = line_of(find(key));
  if (!line.empty()) where += ":" + line;
  throw ConfigError(where + ": field '" + std::string(key) + "': " + msg);
}

const toml::node* Config::find(std::string_view key) const { return root_->at_path(key).node(); }

bool Config::has(std::string_view key) const { return find(key) != nullptr; }

void Config::mark(std::string_view key) { used_.emplace(key); }

void Config::record(std::string_view key, nlohmann::json v) {
  mark(key);
  nlohmann::json* j = &resolved_;
  std::string_view rest = key;
  for (;;) {
    const auto dot = rest.find('.');
    const std::string part(rest.substr(0, dot));
    if (dot == std::string_view::npos) {
      (*j)[part] = std::move(v);
      return;
    }
    j = &(*j)[part];
    rest = rest.substr(dot + 1);
  }
}

void Config::forget(std::string_view key) {
  nlohmann::json* j = &resolved_;
  std::string_view rest = key;
  for (;;) {
    const auto dot = rest.find('.');
    const std::string part(rest.substr(0, dot));
    if (!j->is_object() || !j->contains(part)) return;
    if (dot == std::string_view::npos) {
      j->erase(part);
      return;
    }
    j = &(*j)[part];
    rest = rest.substr(dot + 1);
  }
}

std::string Config::path(std::string_view key) {
  const std::string raw = str(key);
  std::filesystem::path p(raw);
  if (p.is_relative()) p = std::filesystem::path(source_).parent_path() / p;
  return p.string();
}

void Config::set(std::string_view key, const nlohmann::json& v) { record(key, v); }

double Config::real(std::string_view key, std::optional<double> def) {
  const toml::node* n = find(key);
  double x;
  if (!n) {
    if (!def) fail(key, "required");
    x = *def;
  } else {
    if (!n->is_number()) fail(key, std::string("expected a number, got ") + type_name(*n));
    x = n->value<double>().value();
    if (!std::isfinite(x)) fail(key, "must be finite");
  }
  record(key, x);
  return x;
}

double Config::positive(std::string_view key, std::optional<double> def) {
  const double x = real(key, def);
  if (!(x > 0.0)) fail(key, "must be > 0");
  return x;
}

long long Config::integer(std::string_view key, std::optional<long long> def, long long min, long long max) {
  const toml::node* n = find(key);
  long long x;
  if (!n) {
    if (!def) fail(key, "required");
    x = *def;
  } else {
    if (!n->is_integer()) fail(key, std::string("expected an integer, got ") + type_name(*n));
    x = n->value<long long>().value();
  }
  if (x < min) fail(key, "must be >= " + std::to_string(min));
  if (x > max) fail(key, "must be <= " + std::to_string(max));
  record(key, x);
  return x;
}

bool Config::boolean(std::string_view key, std::optional<bool> def) {
  const toml::node* n = find(key);
  bool x;
  if (!n) {
    if (!def) fail(key, "required");
    x = *def;
  } else {
    if (!n->is_boolean()) fail(key, std::string("expected a boolean, got ") + type_name(*n));
    x = n->value<bool>().value();
  }
  record(key, x);
  return x;
}

std::string Config::str(std::string_view key, std::optional<std::string> def, const std::vector<std::string>& allowed) {
  const toml::node* n = find(key);
  std::string x;
  if (!n) {
    if (!def) fail(key, "required");
    x = *def;
  } else {
    if (!n->is_string()) fail(key, std::string("expected a string, got ") + type_name(*n));
    x = n->value<std::string>().value();
  }
  if (!allowed.empty() && std::find(allowed.begin(), allowed.end(), x) == allowed.end()) {
    std::string list;
    for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
    fail(key, "'" + x + "' is not one of " + list);
  }
  record(key, x);
  return x;
}

std::vector<double> Config::reals(std::string_view key, std::optional<std::vector<double>> def) {
  const toml::node* n = find(key);
  std::vector<double> x;
  if (!n) {
    if (!def) fail(key, "required");
    x = *def;
  } else {
    const toml::array* a = n->as_array();
    if (!a) fail(key, std::string("expected an array of numbers, got ") + type_name(*n));
    for (const auto& e : *a) {
      if (!e.is_number()) fail(key, std::string("array element is a ") + type_name(e));
      x.push_back(e.value<double>().value());
      if (!std::isfinite(x.back())) fail(key, "elements must be finite");
    }
  }
  record(key, x);
  return x;
}

std::vector<int> Config::ints(std::string_view key, std::optional<std::vector<int>> def) {
  const toml::node* n = find(key);
  std::vector<int> x;
  if (!n) {
    if (!def) fail(key, "required");
    x = *def;
  } else {
    const toml::array* a = n->as_array();
    if (!a) fail(key, std::string("expected an array of integers, got ") + type_name(*n));
    for (const auto& e : *a) {
      if (!e.is_integer()) fail(key, std::string("array element is a ") + type_name(e));
      x.push_back(int(e.value<long long>().value()));
    }
  }
  record(key, x);
  return x;
}

std::vector<double> Config::grid(std::string_view key, std::optional<std::vector<double>> def) {
  const toml::node* n = find(key);
  std::vector<double> x;
  if (n && n->is_table()) {
    const toml::table& t = *n->as_table();
    auto num = [&](const char* f) -> std::optional<double> {
      const toml::node* e = t.get(f);
      if (!e) return std::nullopt;
      if (!e->is_number()) fail(key, std::string(f) + " must be a number");
      return e->value<double>();
    };
    for (auto&& [k, v] : t)
      if (k.str() != "start" && k.str() != "stop" && k.str() != "count" && k.str() != "step")
        fail(key, "unknown grid field '" + std::string(k.str()) + "'");
    const auto a = num("start"), b = num("stop"), cnt = num("count"), step = num("step");
    if (!a || !b) fail(key, "grid table needs start and stop");
    if (cnt.has_value() == step.has_value()) fail(key, "grid table needs exactly one of count, step");
    if (!(*b >= *a)) fail(key, "stop must be >= start");
    if (cnt) {
      const long long m = (long long)*cnt;
      if (double(m) != *cnt || m < 1) fail(key, "count must be a positive integer");
      for (long long i = 0; i < m; ++i) x.push_back(m == 1 ? *a : *a + (*b - *a) * double(i) / double(m - 1));
    } else {
      if (!(*step > 0.0)) fail(key, "step must be > 0");
      const long long m = (long long)std::floor((*b - *a) / *step * (1.0 + 1e-12)) + 1;
      if (m > 10000000) fail(key, "grid has too many points");
      for (long long i = 0; i < m; ++i) x.push_back(*a + double(i) * *step);
    }
    record(key, x);
  } else {
    x = reals(key, def);
  }
  if (x.empty()) fail(key, "grid is empty");
  return x;
}

MatrixC Config::matrix(std::string_view key) {
  const toml::node* n = find(key);
  if (!n) fail(key, "required");
  auto read = [&](const toml::node& node, const char* part) {
    const toml::array* rows = node.as_array();
    if (!rows || rows->empty()) fail(key, std::string(part) + " must be a nonempty array of rows");
    const std::size_t r = rows->size();
    Eigen::MatrixXd m(r, r);
    for (std::size_t i = 0; i < r; ++i) {
      const toml::array* row = (*rows)[i].as_array();
      if (!row || row->size() != r) fail(key, std::string(part) + " must be square");
      for (std::size_t j = 0; j < r; ++j) {
        if (!(*row)[j].is_number()) fail(key, std::string(part) + " entries must be numbers");
        m(Eigen::Index(i), Eigen::Index(j)) = (*row)[j].value<double>().value();
      }
    }
    return m;
  };
  MatrixC out;
  nlohmann::json j;
  auto rows_json = [](const Eigen::MatrixXd& m) {
    nlohmann::json a = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      std::vector<double> row(m.cols());
      for (Eigen::Index k = 0; k < m.cols(); ++k) row[k] = m(i, k);
      a.push_back(row);
    }
    return a;
  };
  if (const toml::table* t = n->as_table()) {
    for (auto&& [k, v] : *t)
      if (k.str() != "re" && k.str() != "im") fail(key, "unknown matrix field '" + std::string(k.str()) + "'");
    const toml::node* re = t->get("re");
    if (!re) fail(key, "complex matrix needs re");
    const Eigen::MatrixXd mr = read(*re, "re");
    Eigen::MatrixXd mi = Eigen::MatrixXd::Zero(mr.rows(), mr.cols());
    if (const toml::node* im = t->get("im")) mi = read(*im, "im");
    if (mi.rows() != mr.rows()) fail(key, "re and im differ in size");
    out = mr.cast<cplx>() + cplx(0.0, 1.0) * mi.cast<cplx>();
    j = {{"re", rows_json(mr)}, {"im", rows_json(mi)}};
  } else {
    const Eigen::MatrixXd mr = read(*n, "matrix");
    out = mr.cast<cplx>();
    j = rows_json(mr);
  }
  record(key, j);
  return out;
}

std::vector<Record> Config::records(std::string_view key, const Record& defaults, const std::set<std::string>& required) {
  const toml::node* n = find(key);
  if (!n) fail(key, "required");
  const toml::array* a = n->as_array();
  if (!a || a->empty()) fail(key, "expected a nonempty array of tables");
  std::vector<Record> out;
  nlohmann::json j = nlohmann::json::array();
  for (std::size_t i = 0; i < a->size(); ++i) {
    const toml::table* t = (*a)[i].as_table();
    const std::string at = std::string(key) + "[" + std::to_string(i) + "]";
    if (!t) fail(key, at + " is not a table");
    Record r = defaults;
    for (auto&& [k, v] : *t) {
      const std::string name(k.str());
      if (!defaults.count(name) && !required.count(name)) fail(key, at + ": unknown field '" + name + "'");
      if (!v.is_number()) fail(key, at + "." + name + " must be a number");
      r[name] = v.value<double>().value();
    }
    for (const auto& q : required)
      if (!r.count(q)) fail(key, at + ": missing field '" + q + "'");
    out.push_back(r);
    j.push_back(r);
  }
  record(key, j);
  return out;
}

FormFactor Config::formfactor(std::string_view key) {
  const std::string k(key);
  const std::string fam =
      str(k + ".family", std::nullopt, {"sharp_cutoff", "power_tail", "exp_tail", "counterexample", "tabulated"});
  try {
    if (fam == "sharp_cutoff") return FormFactor::sharp_cutoff(positive(k + ".lambda"), real(k + ".ir_exponent", 0.0));
    if (fam == "power_tail") return FormFactor::power_tail(positive(k + ".p"), positive(k + ".knee", 1.0));
    if (fam == "exp_tail") return FormFactor::exp_tail(positive(k + ".rate"), real(k + ".ir_exponent", 0.0));
    if (fam == "counterexample") return FormFactor::counterexample(int(integer(k + ".n", 1, 0, 64)));
    return FormFactor::from_csv(path(k + ".csv"));
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    fail(k + ".family", e.what());
  }
}

QuadratureRule Config::quadrature(std::string_view key) {
  const std::string k(key);
  QuadratureRule r;
  r.abs_tol = positive(k + ".abs_tol", r.abs_tol);
  r.rel_tol = positive(k + ".rel_tol", r.rel_tol);
  r.max_subdivisions = int(integer(k + ".max_subdivisions", r.max_subdivisions, 1, 1000000));
  r.tail_cutoffs = reals(k + ".tail_cutoffs", r.tail_cutoffs);
  r.exponent_resolution = positive(k + ".exponent_resolution", r.exponent_resolution);
  try {
    r.validate();
  } catch (const std::exception& e) {
    fail(k, e.what());
  }
  return r;
}

void Config::finish() const {
  std::function<void(const toml::table&, const std::string&)> walk = [&](const toml::table& t, const std::string& pre) {
    for (auto&& [k, v] : t) {
      const std::string path = pre.empty() ? std::string(k.str()) : pre + "." + std::string(k.str());
      if (used_.count(path)) continue;
      if (const toml::table* sub = v.as_table()) {
        walk(*sub, path);
        continue;
      }
      fail(path, "unknown key");
    }
  };
  walk(*root_, "");
}

nlohmann::json to_json(const QuadratureRule& r) {
  return {{"abs_tol", r.abs_tol},
          {"rel_tol", r.rel_tol},
          {"max_subdivisions", r.max_subdivisions},
          {"tail_cutoffs", r.tail_cutoffs},
          {"exponent_resolution", r.exponent_resolution}};
}

}  // namespace heatlaw::app
