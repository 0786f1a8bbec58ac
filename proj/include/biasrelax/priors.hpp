#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "biasrelax/rng.hpp"

namespace biasrelax {

enum class PriorKind { Flat, Normal, Laplace, LogF };

// One coefficient's prior. Normal(mean, variance) corresponds to the
// quadratic penalty (beta-mean)^2/variance, Laplace(mean, scale) to the
// absolute penalty 2|beta-mean|/scale, and LogF(m, s, r, n) to the
// generalized-conjugate density proportional to e^{znr}/(1+e^z)^n with
// z = (beta + logit(r) - m)/s. Flat contributes nothing.
struct PriorSpec {
  PriorKind kind = PriorKind::Flat;
  double mean = 0.0;      // Normal, Laplace
  double variance = 0.0;  // Normal
  double scale = 0.0;     // Laplace
  double m = 0.0, s = 0.0, r = 0.0, n = 0.0;  // LogF

  static PriorSpec flat();
  static PriorSpec normal(double mean, double variance);
  static PriorSpec laplace(double mean, double scale);
  static PriorSpec log_f(double m, double s, double r, double n);

  bool proper() const { return kind != PriorKind::Flat; }
  double mode() const;

  // -2 ln(density), shifted so the minimum over beta is exactly zero.
  double penalty(double beta) const;
  // d(penalty)/d(beta); at a Laplace kink this returns the subgradient
  // midpoint 0, so callers must handle the kink themselves.
  double penalty_gradient(double beta) const;

  double sample(RngStream& rng) const;

  // Equal-tailed interval on the coefficient (log-odds) scale.
  std::pair<double, double> interval(double level) const;

  std::string describe() const;
};

// Hypothetical binomial record whose likelihood reproduces a Normal prior:
// `successes` of `trials` with the given offset on the linear predictor.
struct DataPriorRecord {
  double successes = 0.0;
  double trials = 0.0;
  double offset = 0.0;
  std::string target;
};

enum class ReportScale { Identity, Exp, Expit };

std::pair<double, double> prior_interval(const PriorSpec& p, double level, ReportScale scale);

DataPriorRecord to_data_prior(const PriorSpec& p, const std::string& target);

// ln L(beta) = b*(beta + offset) - n*ln(1 + e^{beta + offset}), up to a
// constant; maximized at beta = -offset when b/n = 1/2.
double data_prior_loglik(const DataPriorRecord& rec, double beta);

// Unnormalized log-F density e^{znr}/(1+e^z)^n.
double logf_density(const PriorSpec& p, double theta);

// One spec per model coefficient, in model order.
class PriorPanel {
 public:
  PriorPanel() = default;

  // Builds a panel for the given coefficients; names absent from `specs`
  // get Flat priors. A spec naming an unknown coefficient is an error.
  static PriorPanel for_coefficients(const std::vector<std::string>& names,
                                     const std::map<std::string, PriorSpec>& specs);

  const std::vector<std::pair<std::string, PriorSpec>>& entries() const { return entries_; }
  bool has(const std::string& name) const;
  const PriorSpec& at(const std::string& name) const;
  std::vector<std::string> proper_names() const;

 private:
  std::vector<std::pair<std::string, PriorSpec>> entries_;
};

// Total penalty over the panel; `beta` must cover every panel coefficient.
double penalty(const PriorPanel& panel, const std::map<std::string, double>& beta);

}  // namespace biasrelax
