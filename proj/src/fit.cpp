#include "biasrelax/fit.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "biasrelax/errors.hpp"
#include "biasrelax/numerics.hpp"

namespace biasrelax {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kKinkTol = 1e-6;
constexpr double kBetaTrustBound = 200.0;

std::string subset_name(const std::vector<std::string>& axes, unsigned mask) {
  if (mask == 0) return "0";
  std::string name;
  for (std::size_t i = 0; i < axes.size(); ++i) {
    if (mask & (1u << i)) name += axes[i];
  }
  return name;
}

// Compiled likelihood: every observed cell carries its count, its Y level
// (for the multinomial strata), and the full-table completions that sum
// into its expectation. A completion's mask records which coefficients are
// active (axis subset fully at level 1).
struct Design {
  std::vector<std::string> axes;
  std::vector<std::string> coef_names;
  std::vector<unsigned> coef_masks;  // axis mask per coefficient

  struct ObsCell {
    double count = 0.0;
    int y_level = -1;
    std::vector<unsigned> completions;  // coefficient masks
  };
  std::vector<ObsCell> cells;
  bool y_observed_everywhere = false;
  double stratum_total[2] = {0.0, 0.0};  // N_y for multinomial
};

Design compile(const StratifiedCountTable& data) {
  Design d;
  d.axes = data.axes();
  const std::size_t k = d.axes.size();

  // Coefficients: subsets by size then mask order.
  for (std::size_t size = 0; size <= k; ++size) {
    for (unsigned mask = 0; mask < (1u << k); ++mask) {
      if (std::popcount(mask) == size) {
        d.coef_masks.push_back(mask);
        d.coef_names.push_back(subset_name(d.axes, mask));
      }
    }
  }

  int y_axis = -1;
  for (std::size_t i = 0; i < k; ++i) {
    if (d.axes[i] == "Y") y_axis = static_cast<int>(i);
  }

  d.y_observed_everywhere = y_axis >= 0;
  for (const auto& g : data.groups()) {
    if (std::find(g.latent.begin(), g.latent.end(), "Y") != g.latent.end()) {
      d.y_observed_everywhere = false;
    }
  }

  for (const auto& g : data.groups()) {
    std::vector<std::size_t> obs_axis_pos;  // position of each observed axis in d.axes
    for (const auto& name : g.observed) {
      obs_axis_pos.push_back(static_cast<std::size_t>(
          std::find(d.axes.begin(), d.axes.end(), name) - d.axes.begin()));
    }
    std::vector<std::size_t> latent_axis_pos;
    for (const auto& name : g.latent) {
      latent_axis_pos.push_back(static_cast<std::size_t>(
          std::find(d.axes.begin(), d.axes.end(), name) - d.axes.begin()));
    }

    for (std::size_t idx = 0; idx < g.counts.size(); ++idx) {
      Design::ObsCell cell;
      cell.count = g.counts[idx];
      unsigned observed_mask = 0;
      for (std::size_t i = 0; i < obs_axis_pos.size(); ++i) {
        if ((idx >> i) & 1) observed_mask |= 1u << obs_axis_pos[i];
      }
      if (y_axis >= 0 &&
          std::find(g.latent.begin(), g.latent.end(), "Y") == g.latent.end()) {
        cell.y_level = (observed_mask >> y_axis) & 1;
      }
      // Enumerate latent completions.
      const std::size_t n_latent = latent_axis_pos.size();
      for (std::size_t c = 0; c < (std::size_t{1} << n_latent); ++c) {
        unsigned full = observed_mask;
        for (std::size_t i = 0; i < n_latent; ++i) {
          if ((c >> i) & 1) full |= 1u << latent_axis_pos[i];
        }
        unsigned active = 0;
        for (std::size_t j = 0; j < d.coef_masks.size(); ++j) {
          if ((d.coef_masks[j] & full) == d.coef_masks[j]) active |= 1u << j;
        }
        cell.completions.push_back(active);
      }
      if (cell.y_level >= 0) d.stratum_total[cell.y_level] += cell.count;
      d.cells.push_back(std::move(cell));
    }
  }
  return d;
}

struct Eval {
  double value = 0.0;
  std::vector<double> grad;  // over all coefficients
};

Eval eval_loglik(const Design& d, const std::vector<double>& beta, Frame frame) {
  const std::size_t p = d.coef_names.size();
  Eval out;
  out.grad.assign(p, 0.0);

  double s_y[2] = {0.0, 0.0};
  std::vector<double> ds_y[2];
  if (frame == Frame::MultinomialGivenY) {
    ds_y[0].assign(p, 0.0);
    ds_y[1].assign(p, 0.0);
  }

  std::vector<double> dmu(p);
  for (const auto& cell : d.cells) {
    double mu = 0.0;
    std::fill(dmu.begin(), dmu.end(), 0.0);
    for (unsigned active : cell.completions) {
      double lin = 0.0;
      for (unsigned bits = active; bits;) {
        const int j = std::countr_zero(bits);
        lin += beta[j];
        bits &= bits - 1;
      }
      if (std::fabs(lin) > 700.0) {
        throw std::overflow_error("observed_data_loglik: linear predictor " +
                                  std::to_string(lin) + " overflows");
      }
      const double e = std::exp(lin);
      mu += e;
      for (unsigned bits = active; bits;) {
        const int j = std::countr_zero(bits);
        dmu[j] += e;
        bits &= bits - 1;
      }
    }
    if (!(mu > 0.0)) throw DataError("observed_data_loglik: nonpositive expected count");

    if (frame == Frame::Poisson) {
      out.value += (cell.count > 0.0 ? cell.count * std::log(mu) : 0.0) - mu;
      const double w = (cell.count > 0.0 ? cell.count / mu : 0.0) - 1.0;
      for (std::size_t j = 0; j < p; ++j) out.grad[j] += w * dmu[j];
    } else {
      out.value += cell.count > 0.0 ? cell.count * std::log(mu) : 0.0;
      if (cell.count > 0.0) {
        const double w = cell.count / mu;
        for (std::size_t j = 0; j < p; ++j) out.grad[j] += w * dmu[j];
      }
      if (cell.y_level < 0) {
        throw ConfigError("multinomial frame requires Y observed in every record group");
      }
      s_y[cell.y_level] += mu;
      for (std::size_t j = 0; j < p; ++j) ds_y[cell.y_level][j] += dmu[j];
    }
  }

  if (frame == Frame::MultinomialGivenY) {
    for (int y = 0; y < 2; ++y) {
      if (d.stratum_total[y] <= 0.0) continue;
      out.value -= d.stratum_total[y] * std::log(s_y[y]);
      const double w = d.stratum_total[y] / s_y[y];
      for (std::size_t j = 0; j < p; ++j) out.grad[j] -= w * ds_y[y][j];
    }
  }
  return out;
}

// Full objective: loglik minus penalty/2 over all panel priors.
struct PenalizedObjective {
  const Design* design;
  Frame frame;
  std::vector<const PriorSpec*> priors;  // aligned with coefficients

  Eval operator()(const std::vector<double>& beta) const {
    Eval e = eval_loglik(*design, beta, frame);
    for (std::size_t j = 0; j < priors.size(); ++j) {
      if (priors[j] && priors[j]->proper()) {
        e.value -= 0.5 * priors[j]->penalty(beta[j]);
        e.grad[j] -= 0.5 * priors[j]->penalty_gradient(beta[j]);
      }
    }
    return e;
  }

  double value_or_neginf(const std::vector<double>& beta) const {
    try {
      return (*this)(beta).value;
    } catch (const std::overflow_error&) {
      return kNegInf;
    }
  }
};

// Central-difference Hessian of the objective gradient over the active
// coordinates (relative step options.hess_step), symmetrized.
Matrix active_hessian(const PenalizedObjective& obj, const std::vector<double>& beta,
                      const std::vector<std::size_t>& active, double rel_step) {
  const std::size_t m = active.size();
  Matrix h(m, m);
  std::vector<double> work = beta;
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t ci = active[i];
    const double step = rel_step * std::max(1.0, std::fabs(beta[ci]));
    work[ci] = beta[ci] + step;
    const Eval up = obj(work);
    work[ci] = beta[ci] - step;
    const Eval dn = obj(work);
    work[ci] = beta[ci];
    for (std::size_t j = 0; j < m; ++j) {
      h(i, j) = (up.grad[active[j]] - dn.grad[active[j]]) / (2.0 * step);
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      const double v = 0.5 * (h(i, j) + h(j, i));
      h(i, j) = h(j, i) = v;
    }
  }
  return h;
}

int coef_index(const Design& d, const std::string& name) {
  for (std::size_t j = 0; j < d.coef_names.size(); ++j) {
    if (d.coef_names[j] == name) return static_cast<int>(j);
  }
  return -1;
}

std::vector<double> beta_map_to_vector(const Design& d,
                                       const std::map<std::string, double>& beta) {
  std::vector<double> v(d.coef_names.size());
  for (std::size_t j = 0; j < d.coef_names.size(); ++j) {
    const auto it = beta.find(d.coef_names[j]);
    if (it == beta.end()) {
      throw DataError("fit: coefficient '" + d.coef_names[j] + "' missing from beta");
    }
    v[j] = it->second;
  }
  return v;
}

// Starting point: coefficients touching a latent axis sit at their prior
// modes (0 when flat); the rest come from the saturated log-linear
// decomposition of the pooled observed margins split across latent
// completions by those modes. For the all-latent-T problem this point is
// already stationary.
std::vector<double> start_values(const Design& d, const StratifiedCountTable& data,
                                 const std::vector<const PriorSpec*>& priors) {
  const std::size_t k = d.axes.size();

  std::vector<std::string> everywhere;
  for (const auto& a : d.axes) {
    bool obs = true;
    for (const auto& g : data.groups()) {
      if (std::find(g.observed.begin(), g.observed.end(), a) == g.observed.end()) obs = false;
    }
    if (obs) everywhere.push_back(a);
  }
  const auto margins = data.margin(everywhere);

  unsigned latent_mask = 0;
  std::vector<std::size_t> obs_pos;
  for (std::size_t i = 0; i < k; ++i) {
    const auto it = std::find(everywhere.begin(), everywhere.end(), d.axes[i]);
    if (it == everywhere.end()) {
      latent_mask |= 1u << i;
    }
  }
  for (const auto& a : everywhere) {
    obs_pos.push_back(static_cast<std::size_t>(
        std::find(d.axes.begin(), d.axes.end(), a) - d.axes.begin()));
  }

  // Prior-mode weights over latent completions.
  std::vector<double> mode(d.coef_names.size(), 0.0);
  for (std::size_t j = 0; j < d.coef_names.size(); ++j) {
    if (priors[j] && priors[j]->proper()) mode[j] = priors[j]->mode();
  }

  std::vector<double> cells(std::size_t{1} << k, 0.0);
  for (std::size_t mi = 0; mi < margins.size(); ++mi) {
    unsigned base = 0;
    for (std::size_t r = 0; r < obs_pos.size(); ++r) {
      if ((mi >> r) & 1) base |= 1u << obs_pos[r];
    }
    // Weights over latent completions from latent-touching coefficients.
    std::vector<unsigned> completions;
    std::vector<double> weights;
    double total_w = 0.0;
    for (unsigned sub = latent_mask;; sub = (sub - 1) & latent_mask) {
      const unsigned full = base | sub;
      double lin = 0.0;
      for (std::size_t j = 0; j < d.coef_masks.size(); ++j) {
        if ((d.coef_masks[j] & latent_mask) != 0 &&
            (d.coef_masks[j] & full) == d.coef_masks[j]) {
          lin += mode[j];
        }
      }
      const double w = std::exp(std::clamp(lin, -500.0, 500.0));
      completions.push_back(full);
      weights.push_back(w);
      total_w += w;
      if (sub == 0) break;
    }
    for (std::size_t c = 0; c < completions.size(); ++c) {
      cells[completions[c]] += margins[mi] * weights[c] / total_w;
    }
  }
  for (double& c : cells) c = std::max(c, 0.5);

  // Moebius inversion of ln(cells) onto the interaction coefficients.
  std::vector<double> beta(d.coef_names.size(), 0.0);
  for (std::size_t j = 0; j < d.coef_masks.size(); ++j) {
    const unsigned s = d.coef_masks[j];
    double acc = 0.0;
    for (unsigned sub = s;; sub = (sub - 1) & s) {
      const int sign = (std::popcount(s) - std::popcount(sub)) % 2 == 0 ? 1 : -1;
      acc += sign * std::log(cells[sub]);
      if (sub == 0) break;
    }
    beta[j] = acc;
  }
  return beta;
}

// Rescale the design coefficients "0" and "Y" so the fitted stratum totals
// match the observed ones (the multinomial objective is flat in them).
void normalize_design_coords(const Design& d, std::vector<double>& beta, int i0, int iy) {
  beta[i0] = 0.0;
  beta[iy] = 0.0;
  double base[2] = {0.0, 0.0};
  for (const auto& cell : d.cells) {
    double mu = 0.0;
    for (unsigned active : cell.completions) {
      double lin = 0.0;
      for (unsigned bits = active; bits;) {
        const int j = std::countr_zero(bits);
        lin += beta[j];
        bits &= bits - 1;
      }
      mu += std::exp(std::clamp(lin, -500.0, 500.0));
    }
    base[cell.y_level] += mu;
  }
  beta[i0] = std::log(d.stratum_total[0] / base[0]);
  beta[iy] = std::log(d.stratum_total[1] / base[1]) - beta[i0];
}

struct FreeSet {
  std::vector<std::size_t> free;      // indices into the coefficient vector
  std::vector<std::size_t> active;    // free minus kinked
  std::set<std::size_t> kinked;
};

}  // namespace

std::vector<std::string> model_coefficients(const std::vector<std::string>& axes) {
  std::vector<std::string> names;
  const std::size_t k = axes.size();
  for (std::size_t size = 0; size <= k; ++size) {
    for (unsigned mask = 0; mask < (1u << k); ++mask) {
      if (std::popcount(mask) == static_cast<int>(size)) {
        names.push_back(subset_name(axes, mask));
      }
    }
  }
  return names;
}

double observed_data_loglik(const std::map<std::string, double>& beta,
                            const StratifiedCountTable& data, Frame frame) {
  const Design d = compile(data);
  return eval_loglik(d, beta_map_to_vector(d, beta), frame).value;
}

std::map<std::string, double> observed_data_loglik_gradient(
    const std::map<std::string, double>& beta, const StratifiedCountTable& data, Frame frame) {
  const Design d = compile(data);
  const Eval e = eval_loglik(d, beta_map_to_vector(d, beta), frame);
  std::map<std::string, double> out;
  for (std::size_t j = 0; j < d.coef_names.size(); ++j) out[d.coef_names[j]] = e.grad[j];
  return out;
}

double penalized_loglik(const std::map<std::string, double>& beta, const FitProblem& problem) {
  return observed_data_loglik(beta, problem.data, problem.frame) -
         0.5 * penalty(problem.panel, beta);
}

FitResult maximize(const FitProblem& problem, const FitOptions& options) {
  const Design d = compile(problem.data);
  const std::size_t p = d.coef_names.size();

  // Panel must describe exactly the model coefficients.
  std::vector<const PriorSpec*> priors(p, nullptr);
  for (std::size_t j = 0; j < p; ++j) priors[j] = &problem.panel.at(d.coef_names[j]);
  for (const auto& [name, spec] : problem.panel.entries()) {
    (void)spec;
    if (coef_index(d, name) < 0) {
      throw ConfigError("fit: panel names '" + name + "' which is not a model coefficient");
    }
  }

  PenalizedObjective obj{&d, problem.frame, priors};

  FreeSet fs;
  std::set<std::size_t> fixed;
  std::vector<double> beta(p, 0.0);

  int i0 = coef_index(d, "0");
  int iy = coef_index(d, "Y");
  if (problem.frame == Frame::MultinomialGivenY) {
    if (iy < 0 || !d.y_observed_everywhere) {
      throw ConfigError("multinomial frame requires an everywhere-observed Y axis");
    }
    if (priors[i0]->proper() || priors[iy]->proper()) {
      throw ConfigError(
          "multinomial frame: design coefficients '0' and 'Y' are fixed by the sampling "
          "design and must have flat priors");
    }
    fixed.insert(static_cast<std::size_t>(i0));
    fixed.insert(static_cast<std::size_t>(iy));
  }

  beta = start_values(d, problem.data, priors);
  for (const auto& [name, value] : problem.constraints) {
    const int j = coef_index(d, name);
    if (j < 0) throw ConfigError("fit: constraint names unknown coefficient '" + name + "'");
    beta[j] = value;
    fixed.insert(static_cast<std::size_t>(j));
  }
  if (problem.frame == Frame::MultinomialGivenY) {
    normalize_design_coords(d, beta, i0, iy);
  }

  for (std::size_t j = 0; j < p; ++j) {
    if (!fixed.count(j)) fs.free.push_back(j);
  }
  if (fs.free.empty()) throw ConfigError("fit: no free coefficients");

  auto refresh_active = [&]() {
    fs.active.clear();
    for (std::size_t j : fs.free) {
      if (!fs.kinked.count(j)) fs.active.push_back(j);
    }
  };
  refresh_active();

  // Subgradient optimality for a Laplace coefficient resting at its mean:
  // |d(loglik)/d(beta_j)| <= 1/scale. At beta_j = mean the objective
  // gradient carries no penalty term, so it is exactly the loglik part.
  auto kink_balanced = [&](const Eval& e, std::size_t j) {
    return std::fabs(e.grad[j]) <= 1.0 / priors[j]->scale + 1e-12;
  };

  Eval cur = obj(beta);
  int iter = 0;
  bool converged = false;
  for (; iter < options.max_iter; ++iter) {
    // Unpin kinked coordinates whose balance condition broke.
    bool repinned = false;
    for (auto it = fs.kinked.begin(); it != fs.kinked.end();) {
      if (!kink_balanced(cur, *it)) {
        it = fs.kinked.erase(it);
        repinned = true;
      } else {
        ++it;
      }
    }
    if (repinned) refresh_active();

    double gmax = 0.0;
    for (std::size_t j : fs.active) gmax = std::max(gmax, std::fabs(cur.grad[j]));
    if (gmax < options.grad_tol) {
      converged = true;
      break;
    }

    const std::size_t m = fs.active.size();
    Matrix h = active_hessian(obj, beta, fs.active, options.hess_step);
    Matrix a(m, m);
    double diag_scale = 1.0;
    for (std::size_t i = 0; i < m; ++i) diag_scale = std::max(diag_scale, std::fabs(h(i, i)));
    std::vector<double> g(m);
    for (std::size_t i = 0; i < m; ++i) g[i] = cur.grad[fs.active[i]];

    std::vector<double> step;
    double tau = 0.0;
    for (;;) {
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j2 = 0; j2 < m; ++j2) a(i, j2) = -h(i, j2) + (i == j2 ? tau : 0.0);
      }
      const auto l = cholesky(a);
      if (l) {
        step = cholesky_solve(*l, g);
        break;
      }
      tau = tau == 0.0 ? 1e-8 * diag_scale : tau * 10.0;
      if (tau > 1e10 * diag_scale) {
        throw ConvergenceError("maximize: objective is not locally concave in any damping");
      }
    }

    // Step halving.
    double lambda = 1.0;
    bool improved = false;
    std::vector<double> trial = beta;
    for (int half = 0; half < 60; ++half) {
      for (std::size_t i = 0; i < m; ++i) {
        trial[fs.active[i]] = beta[fs.active[i]] + lambda * step[i];
      }
      const double v = obj.value_or_neginf(trial);
      if (v > cur.value) {
        improved = true;
        break;
      }
      lambda *= 0.5;
    }
    if (!improved) {
      double smax = 0.0;
      for (double s : step) smax = std::max(smax, std::fabs(s));
      if (smax * lambda < options.step_tol || smax < options.step_tol) {
        converged = true;
        break;
      }
      throw ConvergenceError("maximize: line search failed to improve the objective");
    }

    double step_size = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      step_size = std::max(step_size, std::fabs(trial[fs.active[i]] - beta[fs.active[i]]));
    }
    beta = trial;
    for (double b : beta) {
      if (std::fabs(b) > kBetaTrustBound) {
        throw ConvergenceError(
            "maximize: a coefficient ran past the trust bound; the penalized objective "
            "appears unbounded (free coefficient without data or prior information)");
      }
    }
    cur = obj(beta);

    // Pin Laplace coefficients that landed on their kink.
    bool pinned = false;
    for (std::size_t j : fs.active) {
      if (priors[j]->kind == PriorKind::Laplace &&
          std::fabs(beta[j] - priors[j]->mean) < kKinkTol) {
        std::vector<double> at_kink = beta;
        at_kink[j] = priors[j]->mean;
        const Eval ek = obj(at_kink);
        if (kink_balanced(ek, j)) {
          beta = at_kink;
          cur = ek;
          fs.kinked.insert(j);
          pinned = true;
        }
      }
    }
    if (pinned) refresh_active();

    if (step_size < options.step_tol) {
      double gm = 0.0;
      for (std::size_t j : fs.active) gm = std::max(gm, std::fabs(cur.grad[j]));
      if (gm < options.grad_tol) converged = true;
      break;
    }
  }

  double gmax = 0.0;
  for (std::size_t j : fs.active) gmax = std::max(gmax, std::fabs(cur.grad[j]));
  if (gmax < options.grad_tol) converged = true;
  if (!converged) {
    std::ostringstream os;
    os << "maximize: no convergence after " << iter
       << " iterations (gradient max-norm " << gmax << ")";
    throw ConvergenceError(os.str());
  }

  FitResult result;
  result.coef_names = d.coef_names;
  for (std::size_t j = 0; j < p; ++j) result.beta[d.coef_names[j]] = beta[j];
  for (std::size_t j : fs.free) result.free_names.push_back(d.coef_names[j]);
  result.objective = cur.value;
  result.convergence.iterations = iter;
  result.convergence.grad_max_norm = gmax;
  for (std::size_t j : fs.kinked) result.convergence.kinked.push_back(d.coef_names[j]);
  result.frame = problem.frame;

  if (fs.kinked.empty()) {
    Matrix h = active_hessian(obj, beta, fs.free, options.hess_step);
    Matrix a(fs.free.size(), fs.free.size());
    for (std::size_t i = 0; i < fs.free.size(); ++i) {
      for (std::size_t j2 = 0; j2 < fs.free.size(); ++j2) a(i, j2) = -h(i, j2);
    }
    const auto cov = spd_inverse(a);
    if (!cov) {
      throw ConvergenceError(
          "maximize: observed penalized information is indefinite or singular at the "
          "optimum; some free direction has no curvature from data or prior");
    }
    result.covariance = *cov;
  }
  return result;
}

FunctionalResult wald_functional_interval(const FitResult& fit, const Functional& f,
                                          double level) {
  if (!fit.covariance) {
    throw ConvergenceError(
        "wald_functional_interval: covariance unavailable (optimum at a Laplace kink)");
  }
  const double g0 = f.eval(fit.beta);
  if (!std::isfinite(g0)) {
    throw DataError("wald_functional_interval: functional non-finite at the estimate");
  }
  const std::size_t m = fit.free_names.size();
  std::vector<double> grad(m);
  std::map<std::string, double> work = fit.beta;
  for (std::size_t i = 0; i < m; ++i) {
    const std::string& name = fit.free_names[i];
    const double b = fit.beta.at(name);
    const double h = 1e-6 * std::max(1.0, std::fabs(b));
    work[name] = b + h;
    const double up = f.eval(work);
    work[name] = b - h;
    const double dn = f.eval(work);
    work[name] = b;
    grad[i] = (up - dn) / (2.0 * h);
  }
  const double var = quadratic_form(*fit.covariance, grad);
  const double se = std::sqrt(std::max(var, 0.0));
  const double z = normal_quantile(0.5 * (1.0 + level));
  FunctionalResult r;
  r.log_estimate = g0;
  r.se = se;
  r.estimate = std::exp(g0);
  r.lo = std::exp(g0 - z * se);
  r.hi = std::exp(g0 + z * se);
  return r;
}

std::pair<double, double> profile_interval(const FitProblem& problem, const Functional& f,
                                           double level, const FitOptions& options) {
  if (!f.linear) {
    throw ConfigError("profile_interval: functional must be linear in the coefficients");
  }
  for (const auto& [name, spec] : problem.panel.entries()) {
    (void)name;
    if (spec.kind == PriorKind::Laplace) {
      throw ConfigError("profile_interval: not available with Laplace priors");
    }
  }

  const FitResult central = maximize(problem, options);
  const FunctionalResult wald = wald_functional_interval(central, f, level);
  const double c_hat = wald.log_estimate;
  const double se = wald.se;
  if (!(se > 0.0)) return {std::exp(c_hat), std::exp(c_hat)};

  const Design d = compile(problem.data);
  std::vector<const PriorSpec*> priors(d.coef_names.size(), nullptr);
  for (std::size_t j = 0; j < d.coef_names.size(); ++j) {
    priors[j] = &problem.panel.at(d.coef_names[j]);
  }
  PenalizedObjective obj{&d, problem.frame, priors};

  // Weights over coefficient indices; pivot on the largest free weight.
  std::vector<double> w(d.coef_names.size(), 0.0);
  for (const auto& [name, weight] : *f.linear) {
    const int j = coef_index(d, name);
    if (j < 0) throw ConfigError("profile_interval: weight on unknown coefficient " + name);
    w[j] = weight;
  }
  std::set<std::size_t> movable(
      [&] {
        std::set<std::size_t> s;
        for (const auto& name : central.free_names) {
          s.insert(static_cast<std::size_t>(coef_index(d, name)));
        }
        return s;
      }());
  int pivot = -1;
  double wbest = 0.0;
  for (std::size_t j : movable) {
    if (std::fabs(w[j]) > wbest) {
      wbest = std::fabs(w[j]);
      pivot = static_cast<int>(j);
    }
  }
  if (pivot < 0) {
    throw ConfigError("profile_interval: functional does not involve any free coefficient");
  }

  std::vector<std::size_t> reduced;
  for (std::size_t j : movable) {
    if (static_cast<int>(j) != pivot) reduced.push_back(j);
  }

  const std::vector<double> beta_hat = beta_map_to_vector(d, central.beta);

  // Maximize the objective over the reduced coordinates subject to
  // sum(w*beta) = c, eliminating the pivot coordinate.
  auto solve_constrained = [&](double c, std::vector<double> beta) {
    auto apply_pivot = [&](std::vector<double>& b) {
      double s = 0.0;
      for (std::size_t j = 0; j < w.size(); ++j) {
        if (static_cast<int>(j) != pivot) s += w[j] * b[j];
      }
      b[pivot] = (c - s) / w[pivot];
    };
    apply_pivot(beta);
    Eval cur = obj(beta);
    auto reduced_grad = [&](const Eval& e) {
      std::vector<double> g(reduced.size());
      for (std::size_t i = 0; i < reduced.size(); ++i) {
        const std::size_t j = reduced[i];
        g[i] = e.grad[j] - (w[j] / w[pivot]) * e.grad[pivot];
      }
      return g;
    };
    for (int it = 0; it < options.max_iter; ++it) {
      std::vector<double> g = reduced_grad(cur);
      double gmax = 0.0;
      for (double v : g) gmax = std::max(gmax, std::fabs(v));
      if (gmax < options.grad_tol) break;

      const std::size_t m = reduced.size();
      if (m == 0) break;
      // Hessian of the reduced objective by differencing the reduced gradient.
      Matrix h(m, m);
      std::vector<double> work = beta;
      for (std::size_t i = 0; i < m; ++i) {
        const std::size_t ci = reduced[i];
        const double step = options.hess_step * std::max(1.0, std::fabs(beta[ci]));
        work = beta;
        work[ci] += step;
        apply_pivot(work);
        const auto gup = reduced_grad(obj(work));
        work = beta;
        work[ci] -= step;
        apply_pivot(work);
        const auto gdn = reduced_grad(obj(work));
        for (std::size_t j2 = 0; j2 < m; ++j2) h(i, j2) = (gup[j2] - gdn[j2]) / (2.0 * step);
      }
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j2 = 0; j2 < i; ++j2) {
          const double v = 0.5 * (h(i, j2) + h(j2, i));
          h(i, j2) = h(j2, i) = v;
        }
      }
      Matrix a(m, m);
      double tau = 0.0;
      double dscale = 1.0;
      for (std::size_t i = 0; i < m; ++i) dscale = std::max(dscale, std::fabs(h(i, i)));
      std::vector<double> step_vec;
      for (;;) {
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t j2 = 0; j2 < m; ++j2) a(i, j2) = -h(i, j2) + (i == j2 ? tau : 0.0);
        }
        const auto l = cholesky(a);
        if (l) {
          step_vec = cholesky_solve(*l, g);
          break;
        }
        tau = tau == 0.0 ? 1e-8 * dscale : tau * 10.0;
        if (tau > 1e10 * dscale) {
          throw ConvergenceError("profile_interval: constrained fit not concave");
        }
      }
      double lambda = 1.0;
      bool improved = false;
      std::vector<double> trial = beta;
      for (int half = 0; half < 60; ++half) {
        trial = beta;
        for (std::size_t i = 0; i < m; ++i) trial[reduced[i]] += lambda * step_vec[i];
        apply_pivot(trial);
        double v;
        try {
          v = obj(trial).value;
        } catch (const std::overflow_error&) {
          v = kNegInf;
        }
        if (v > cur.value) {
          improved = true;
          break;
        }
        lambda *= 0.5;
      }
      if (!improved) break;
      beta = trial;
      cur = obj(beta);
    }
    return cur.value;
  };

  const double f_hat = central.objective;
  const double z = normal_quantile(0.5 * (1.0 + level));

  auto signed_root = [&](double c) {
    const double drop = 2.0 * (f_hat - solve_constrained(c, beta_hat));
    const double root = std::sqrt(std::max(drop, 0.0));
    return c < c_hat ? -root : root;
  };

  auto find_endpoint = [&](double target) {
    double inner = c_hat;
    double outer = c_hat + (target > 0.0 ? 10.0 * se : -10.0 * se);
    const double r_outer = signed_root(outer);
    if ((target > 0.0 && r_outer < target) || (target < 0.0 && r_outer > target)) {
      throw ConvergenceError("profile_interval: endpoint outside the search bracket");
    }
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (inner + outer);
      const double r = signed_root(mid);
      if (std::fabs(r) < std::fabs(target)) {
        inner = mid;
      } else {
        outer = mid;
      }
      if (std::fabs(outer - inner) < 1e-10 * std::max(1.0, se)) break;
    }
    return 0.5 * (inner + outer);
  };

  const double lo = find_endpoint(-z);
  const double hi = find_endpoint(z);
  return {std::exp(lo), std::exp(hi)};
}

FitResult conventional_mle(const TwoByTwo& t, double level) {
  if (!(t.n11 > 0.0 && t.n10 > 0.0 && t.n01 > 0.0 && t.n00 > 0.0)) {
    throw DataError("conventional_mle: zero cell");
  }
  // Saturated decomposition of the 2x2 (row axis X, column axis Y).
  FitResult r;
  r.coef_names = {"0", "X", "Y", "XY"};
  r.free_names = r.coef_names;
  const double l00 = std::log(t.n00), l10 = std::log(t.n10);
  const double l01 = std::log(t.n01), l11 = std::log(t.n11);
  r.beta["0"] = l00;
  r.beta["X"] = l10 - l00;
  r.beta["Y"] = l01 - l00;
  r.beta["XY"] = l11 - l10 - l01 + l00;

  // Observed information of the saturated Poisson fit: X' diag(count) X.
  const double counts[4] = {t.n00, t.n10, t.n01, t.n11};
  const int design[4][4] = {{1, 0, 0, 0}, {1, 1, 0, 0}, {1, 0, 1, 0}, {1, 1, 1, 1}};
  Matrix info(4, 4);
  for (int c = 0; c < 4; ++c) {
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) info(i, j) += counts[c] * design[c][i] * design[c][j];
    }
  }
  const auto cov = spd_inverse(info);
  if (!cov) throw DataError("conventional_mle: singular information");
  r.covariance = *cov;

  double obj = 0.0;
  for (double c : counts) obj += c * std::log(c) - c;
  r.objective = obj;
  r.convergence.iterations = 0;
  r.convergence.grad_max_norm = 0.0;

  const double se = wald_log_or_se(t);
  const double z = normal_quantile(0.5 * (1.0 + level));
  FunctionalResult orr;
  orr.log_estimate = r.beta["XY"];
  orr.se = se;
  orr.estimate = std::exp(orr.log_estimate);
  orr.lo = std::exp(orr.log_estimate - z * se);
  orr.hi = std::exp(orr.log_estimate + z * se);
  r.functionals["OR"] = orr;
  return r;
}

}  // namespace biasrelax
