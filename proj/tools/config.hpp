#pragma once

#include <climits>
#include <map>
#include <memory>
#include <nlohmann/json.hpp>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "heatlaw/formfactor.hpp"
#include "heatlaw/numerics.hpp"
#include "heatlaw/oneparticle.hpp"

namespace toml {
inline namespace v3 {
class table;
class node;
}  // namespace v3
}  // namespace toml

namespace heatlaw::app {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using Record = std::map<std::string, double>;

// Typed view of a TOML experiment file. Every value read is copied, with its
// default filled in, into resolved(); finish() rejects keys nobody read.
class Config {
 public:
  static Config load(const std::string& path);
  static Config parse(std::string_view text, std::string source = "<config>");
  Config(Config&&) noexcept;
  Config& operator=(Config&&) noexcept;
  ~Config();

  bool has(std::string_view key) const;

  double real(std::string_view key, std::optional<double> def = {});
  double positive(std::string_view key, std::optional<double> def = {});
  long long integer(std::string_view key, std::optional<long long> def = {}, long long min = LLONG_MIN,
                    long long max = LLONG_MAX);
  bool boolean(std::string_view key, std::optional<bool> def = {});
  std::string str(std::string_view key, std::optional<std::string> def = {},
                  const std::vector<std::string>& allowed = {});
  std::vector<double> reals(std::string_view key, std::optional<std::vector<double>> def = {});
  std::vector<int> ints(std::string_view key, std::optional<std::vector<int>> def = {});
  // array of numbers or {start, stop, count} / {start, stop, step}; never empty
  std::vector<double> grid(std::string_view key, std::optional<std::vector<double>> def = {});
  // real array of rows, or {re = [...], im = [...]}
  MatrixC matrix(std::string_view key);
  // array of inline tables with numeric fields; missing fields take the defaults
  std::vector<Record> records(std::string_view key, const Record& defaults,
                              const std::set<std::string>& required = {});
  FormFactor formfactor(std::string_view key = "formfactor");
  QuadratureRule quadrature(std::string_view key = "quadrature");

  // override from the command line, recorded like a config value
  void set(std::string_view key, const nlohmann::json& v);
  // drop a consumed key from resolved() (settings that cannot change outputs)
  void forget(std::string_view key);
  // file path, relative paths taken from the config file's directory
  std::string path(std::string_view key);

  void finish() const;
  [[noreturn]] void fail(std::string_view key, const std::string& msg) const;

  const nlohmann::json& resolved() const { return resolved_; }
  const std::string& source() const { return source_; }

 private:
  Config();
  const toml::node* find(std::string_view key) const;
  void record(std::string_view key, nlohmann::json v);
  void mark(std::string_view key);

  std::unique_ptr<toml::table> root_;
  std::string source_;
  nlohmann::json resolved_ = nlohmann::json::object();
  std::set<std::string, std::less<>> used_;
};

nlohmann::json to_json(const QuadratureRule& r);

}  // namespace heatlaw::app
