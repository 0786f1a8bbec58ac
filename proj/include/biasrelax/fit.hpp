#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "biasrelax/linalg.hpp"
#include "biasrelax/priors.hpp"
#include "biasrelax/tables.hpp"

namespace biasrelax {

// Sampling frame for the count likelihood. Poisson treats every cell as an
// independent Poisson count; MultinomialGivenY conditions on the per-Y
// stratum totals, which freezes the design coefficients "0" and "Y" out of
// the free set. The two give identical inferences on odds-ratio
// coefficients when "0" and "Y" are free and flat under Poisson.
enum class Frame { Poisson, MultinomialGivenY };

// Coefficient names of the saturated loglinear model on the given axes:
// "0" plus every nonempty axis subset, ordered by subset size then axis
// order (axes {T,X,Y} give 0, T, X, Y, TX, TY, XY, TXY).
std::vector<std::string> model_coefficients(const std::vector<std::string>& axes);

struct FitProblem {
  StratifiedCountTable data;
  PriorPanel panel;
  std::vector<std::pair<std::string, double>> constraints;
  Frame frame = Frame::Poisson;
};

struct FitOptions {
  double grad_tol = 1e-8;
  double step_tol = 1e-10;
  int max_iter = 200;
  double hess_step = 1e-5;  // relative central-difference step
};

struct Convergence {
  int iterations = 0;
  double grad_max_norm = 0.0;
  // Laplace coefficients resting exactly at their prior mean; the
  // covariance is unavailable when this is nonempty.
  std::vector<std::string> kinked;
};

// Scalar log-scale function of the coefficient map. `linear` holds the
// coefficient weights when the functional is a linear combination, which is
// what profile intervals need.
struct Functional {
  std::string name;
  std::function<double(const std::map<std::string, double>&)> eval;
  std::optional<std::map<std::string, double>> linear;
};

// Estimate and interval for a log-scale functional, reported on the ratio
// scale: estimate = exp(g), (lo, hi) = exp(g -/+ z*se).
struct FunctionalResult {
  double log_estimate = 0.0;
  double se = 0.0;
  double estimate = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

struct FitResult {
  std::vector<std::string> coef_names;
  std::map<std::string, double> beta;
  std::vector<std::string> free_names;
  std::optional<Matrix> covariance;  // over free_names
  double objective = 0.0;
  Convergence convergence;
  Frame frame = Frame::Poisson;
  std::map<std::string, FunctionalResult> functionals;
};

// Observed-data log likelihood: latent axes are summed out of the expected
// counts cell by cell. Poisson: sum of a*ln(mu) - mu over observed cells.
// Multinomial-given-Y: sum of a*ln(mu) minus N_y*ln(S_y) per Y stratum.
double observed_data_loglik(const std::map<std::string, double>& beta,
                            const StratifiedCountTable& data, Frame frame);

// Analytic gradient of observed_data_loglik, keyed by coefficient.
std::map<std::string, double> observed_data_loglik_gradient(
    const std::map<std::string, double>& beta, const StratifiedCountTable& data, Frame frame);

// observed_data_loglik minus penalty/2.
double penalized_loglik(const std::map<std::string, double>& beta, const FitProblem& problem);

// Newton iteration with step halving; converged when the free-coordinate
// gradient max-norm drops below grad_tol. The covariance is the inverse of
// the negated central-difference Hessian at the optimum; a Hessian that is
// not negative definite there is reported as an error (it means some free
// direction has no curvature from either data or prior).
FitResult maximize(const FitProblem& problem, const FitOptions& options = {});

FunctionalResult wald_functional_interval(const FitResult& fit, const Functional& f,
                                          double level);

// Profile (penalized-deviance) interval for a functional linear in the
// coefficients; endpoints found by bisection on the signed deviance root
// within estimate +/- 10 Wald SE.
std::pair<double, double> profile_interval(const FitProblem& problem, const Functional& f,
                                           double level, const FitOptions& options = {});

// Closed-form saturated fit of a 2x2 table (row axis named X, column axis
// named Y); equals maximize() with an all-flat panel.
FitResult conventional_mle(const TwoByTwo& t, double level = 0.95);

}  // namespace biasrelax
