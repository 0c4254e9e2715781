#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "heatlaw/numerics.hpp"

namespace heatlaw {

// |f|^2 = e^ir_exponent on [0, lambda], zero beyond
struct SharpCutoff {
  double lambda = 1.0;
  double ir_exponent = 0.0;
};

// f = e/knee below the knee, (e/knee)^-p above
struct PowerTail {
  double p = 1.0;
  double knee = 1.0;
};

// |f|^2 = e^ir_exponent * exp(-2 rate e)
struct ExpTail {
  double rate = 1.0;
  double ir_exponent = 0.0;
};

// f_n(e) = i e on [0,1), ceil(e)^-(n+1) (ceil(e) - e - i/ceil(e))^-1 for e >= 1
struct CounterexampleFn {
  int n = 1;
};

// complex node values; |f|^2 interpolated linearly, zero past the last node,
// held at the first node value below it
struct Tabulated {
  std::vector<double> energy;
  std::vector<cplx> value;
};

struct CustomForm {
  std::string name;
  std::function<cplx(double)> f;
  double support_end = std::numeric_limits<double>::infinity();
  std::vector<double> breaks;
};

class FormFactor {
 public:
  using Family = std::variant<SharpCutoff, PowerTail, ExpTail, CounterexampleFn, Tabulated, CustomForm>;

  FormFactor() : FormFactor(SharpCutoff{}) {}
  explicit FormFactor(Family fam);

  static FormFactor sharp_cutoff(double lambda, double ir_exponent = 0.0);
  static FormFactor power_tail(double p, double knee = 1.0);
  static FormFactor exp_tail(double rate, double ir_exponent = 0.0);
  static FormFactor counterexample(int n);
  static FormFactor tabulated(std::vector<double> energy, std::vector<cplx> value);
  // columns energy,re_f,im_f; '#' comments and one optional header line
  static FormFactor from_csv(const std::string& path);
  static FormFactor custom(std::string name, std::function<cplx(double)> f,
                           double support_end = std::numeric_limits<double>::infinity(),
                           std::vector<double> breaks = {});

  cplx value(double e) const;
  double abs2(double e) const;
  // log|f|^2, -inf where f vanishes; finite for large e where abs2 underflows
  double log_abs2(double e) const;

  double support_end() const;
  bool compact() const { return std::isfinite(support_end()); }
  // kinks and near-pole points in (0, up_to]
  std::vector<double> breakpoints(double up_to) const;

  std::string family_name() const;
  std::vector<std::pair<std::string, double>> params() const;
  const Family& family() const { return fam_; }

 private:
  Family fam_;
};

IntegralVerdict uv_power_integral(const FormFactor& f, int n, const QuadratureRule& rule = {});
IntegralVerdict uv_exp_integral(const FormFactor& f, double gamma, const QuadratureRule& rule = {});
IntegralVerdict ir_integral(const FormFactor& f, const QuadratureRule& rule = {});

struct Extent {
  bool infinite = false;
  double value = 0.0;  // largest verified index when finite; -1 when none verified
};

struct RegularityReport {
  Extent n_max_power;
  Extent gamma_max;
  bool ir_ok = false;
  IntegralVerdict ir;
  std::map<int, IntegralVerdict> power_verdicts;
  std::map<double, IntegralVerdict> exp_verdicts;
  bool consistent = true;
  std::string note;
};

RegularityReport classify(const FormFactor& f, const std::vector<int>& n_list,
                          const std::vector<double>& gamma_list, const QuadratureRule& rule = {});

// throws PreconditionViolation when the IR integral is Divergent, InconclusiveVerdict when unsettled
void require_ir(const FormFactor& f, const QuadratureRule& rule = {});

}  // namespace heatlaw
