#include "biasrelax/workflows.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "biasrelax/errors.hpp"
#include "biasrelax/numerics.hpp"

namespace biasrelax {

namespace {

// Priors with variance this large pin the target down so weakly that the
// analysis is close to nonidentified; the echo carries a warning.
constexpr double kVagueVariance = 4.0;

Functional log_or_ty_functional() {
  Functional f;
  f.name = "OR_TY";
  f.eval = [](const std::map<std::string, double>& beta) {
    return std::log(marginal_or(expected_counts(CoefVector::from_map(beta)), MarginPair::TY));
  };
  return f;
}

Functional coordinate_functional(const std::string& label, const std::string& coefficient) {
  Functional f;
  f.name = label;
  f.eval = [coefficient](const std::map<std::string, double>& beta) {
    return beta.at(coefficient);
  };
  f.linear = std::map<std::string, double>{{coefficient, 1.0}};
  return f;
}

FitBlock fit_block(const std::string& label, const FitResult& fit, const Functional& f,
                   double level) {
  FitBlock block;
  block.label = label;
  const FunctionalResult r = wald_functional_interval(fit, f, level);
  block.or_estimate = IntervalEstimate::make(f.name, r.estimate, r.lo, r.hi, r.se);
  block.beta = fit.beta;
  if (fit.covariance) {
    for (std::size_t i = 0; i < fit.free_names.size(); ++i) {
      block.beta_se[fit.free_names[i]] = std::sqrt(std::max(0.0, (*fit.covariance)(i, i)));
    }
  }
  block.iterations = fit.convergence.iterations;
  block.grad_max_norm = fit.convergence.grad_max_norm;
  block.kinked = fit.convergence.kinked;
  block.frame = fit.frame == Frame::Poisson ? "poisson" : "multinomial";
  return block;
}

IntervalEstimate conventional_block(const TwoByTwo& t, const std::string& label) {
  const FitResult mle = conventional_mle(t);
  const auto& r = mle.functionals.at("OR");
  return IntervalEstimate::make(label, r.estimate, r.lo, r.hi, r.se);
}

// Require proper priors on exactly `wanted`; anything else proper is an error.
void check_prior_targets(const std::map<std::string, PriorSpec>& priors,
                         const std::vector<std::string>& wanted, const std::string& analysis) {
  for (const auto& name : wanted) {
    const auto it = priors.find(name);
    if (it == priors.end() || !it->second.proper()) {
      throw ConfigError(analysis + ": coefficient '" + name + "' needs a proper prior");
    }
  }
  for (const auto& [name, spec] : priors) {
    if (spec.proper() && std::find(wanted.begin(), wanted.end(), name) == wanted.end()) {
      throw ConfigError(analysis + ": prior on '" + name +
                        "' is outside this analysis's bias block");
    }
  }
}

PriorEcho echo_prior(const std::string& name, const PriorSpec& spec) {
  PriorEcho e;
  e.coefficient = name;
  e.description = spec.describe();
  e.scale = name.size() == 1 ? "expit" : "exp";
  const auto [lo, hi] =
      prior_interval(spec, 0.95, e.scale == "expit" ? ReportScale::Expit : ReportScale::Exp);
  e.lo95 = lo;
  e.hi95 = hi;
  if (spec.kind == PriorKind::Normal) {
    e.data_prior = to_data_prior(spec, name);
    e.effective_n = 4.0 / spec.variance;
    if (spec.variance >= kVagueVariance) {
      e.warning =
          "prior variance " + std::to_string(spec.variance) +
          " is near-noninformative; the target is then close to nonidentified";
    }
  }
  return e;
}

std::vector<PriorEcho> echo_priors(const std::map<std::string, PriorSpec>& priors) {
  std::vector<PriorEcho> out;
  for (const auto& [name, spec] : priors) {
    if (spec.proper()) out.push_back(echo_prior(name, spec));
  }
  return out;
}

// The XY table re-declared with a latent T axis for the full model.
StratifiedCountTable with_latent_t(const StratifiedCountTable& xy) {
  const auto m = xy.margin({"X", "Y"});
  std::vector<RawCell> cells;
  for (int x = 0; x < 2; ++x) {
    for (int y = 0; y < 2; ++y) {
      RawCell c;
      c.levels = {{"X", x}, {"Y", y}};
      c.count = m[static_cast<std::size_t>(x) | (static_cast<std::size_t>(y) << 1)];
      cells.push_back(c);
    }
  }
  return StratifiedCountTable::from_cells({"T", "X", "Y"}, cells);
}

void require_axes(const StratifiedCountTable& t, const std::vector<std::string>& axes,
                  const std::string& analysis) {
  if (t.axes() != axes || !t.fully_observed()) {
    std::ostringstream os;
    os << analysis << ": expected a fully observed table with axes";
    for (const auto& a : axes) os << " " << a;
    throw DataError(os.str());
  }
}

SamplerBlock sampler_block(const DrawSummary& summary, const SamplerConfig& cfg) {
  SamplerBlock b;
  b.identified_mode =
      cfg.identified_mode == IdentifiedMode::Dirichlet ? "dirichlet" : "bootstrap";
  b.dirichlet_prior = cfg.dirichlet_prior;
  b.draws = cfg.draws;
  b.seed = cfg.seed;
  b.chunk = cfg.chunk;
  b.threads = cfg.threads;
  b.summary = summary;
  return b;
}

}  // namespace

IntervalEstimate IntervalEstimate::make(std::string label, double estimate, double lo,
                                        double hi, std::optional<double> se_log) {
  if (!(lo <= estimate && estimate <= hi)) {
    std::ostringstream os;
    os << "interval for " << label << " does not bracket its estimate: (" << lo << ", "
       << estimate << ", " << hi << ")";
    throw DataError(os.str());
  }
  IntervalEstimate e;
  e.label = std::move(label);
  e.estimate = estimate;
  e.lo = lo;
  e.hi = hi;
  e.se_log = se_log;
  return e;
}

AnalysisReport run_conventional(const StratifiedCountTable& xy,
                                const std::map<std::string, PriorSpec>& priors,
                                const WorkflowConfig& cfg) {
  require_axes(xy, {"X", "Y"}, "conventional analysis");
  AnalysisReport report;
  report.kind = "conventional";
  report.provenance.seed = cfg.sampling.seed;
  report.provenance.draws = 0;

  const TwoByTwo t = xy.to_two_by_two("X", "Y");
  report.conventional = conventional_block(t, "OR_XY");

  for (const auto& [name, spec] : priors) {
    if (spec.proper() && name != "XY") {
      throw ConfigError("conventional analysis: only the XY coefficient may carry a prior");
    }
  }
  const auto it = priors.find("XY");
  if (it != priors.end() && it->second.proper()) {
    FitProblem problem{xy, PriorPanel::for_coefficients(model_coefficients(xy.axes()), priors),
                       {}, cfg.frame};
    const FitResult fit = maximize(problem, cfg.fit);
    report.semi_bayes =
        fit_block("posterior mode", fit, coordinate_functional("OR_XY", "XY"), 0.95);
    report.priors = echo_priors(priors);
  }
  return report;
}

AnalysisReport run_misclassification(const StratifiedCountTable& xy,
                                     const std::map<std::string, PriorSpec>& priors,
                                     const WorkflowConfig& cfg) {
  require_axes(xy, {"X", "Y"}, "misclassification analysis");
  check_prior_targets(priors, {"T", "TX", "TY", "TXY"}, "misclassification analysis");

  AnalysisReport report;
  report.kind = "misclassification";
  report.provenance.seed = cfg.sampling.seed;
  report.provenance.draws = cfg.with_sampler ? cfg.sampling.draws : 0;

  const TwoByTwo crude = xy.to_two_by_two("X", "Y");
  report.conventional = conventional_block(crude, "OR_XY");

  // Posterior mode for the measured exposure: the TY prior doubles as the
  // prior on OR_XY when X is taken at face value.
  {
    std::map<std::string, PriorSpec> crude_priors = {{"XY", priors.at("TY")}};
    FitProblem problem{
        xy, PriorPanel::for_coefficients(model_coefficients(xy.axes()), crude_priors),
        {}, cfg.frame};
    const FitResult fit = maximize(problem, cfg.fit);
    report.semi_bayes = fit_block("posterior mode (measured exposure)", fit,
                                  coordinate_functional("OR_XY", "XY"), 0.95);
  }

  // Eight-coefficient penalized fit with latent T.
  {
    const StratifiedCountTable full = with_latent_t(xy);
    FitProblem problem{full,
                       PriorPanel::for_coefficients(model_coefficients(full.axes()), priors),
                       {}, cfg.frame};
    const FitResult fit = maximize(problem, cfg.fit);
    report.penalized =
        fit_block("penalized likelihood", fit, log_or_ty_functional(), 0.95);
  }

  if (cfg.with_sampler) {
    const PriorPanel bias_panel = PriorPanel::for_coefficients(
        bias_coefficients(AnalysisKind::Misclassification), priors);
    auto draws = std::make_shared<DrawSet>(
        run_sampler(AnalysisKind::Misclassification, xy, bias_panel, cfg.sampling));
    const double crude_se = wald_log_or_se(crude);
    const DrawSummary summary = summarize(draws->target, cfg.levels, crude_se * crude_se);
    report.sampler = sampler_block(summary, cfg.sampling);
    report.draw_set = std::move(draws);
    if (cfg.sampling.identified_mode == IdentifiedMode::Dirichlet) {
      char mass[32];
      std::snprintf(mass, sizeof mass, "%g", cfg.sampling.dirichlet_prior);
      report.notes.push_back(
          std::string("identified-block draws use a conjugate Dirichlet posterior with mass ") +
          mass + " per cell; bootstrap mode is the matching sensitivity check");
    }
  }

  report.priors = echo_priors(priors);
  return report;
}

ClosedFormValidation closed_form_validation_or(const StratifiedCountTable& mixed) {
  // One record group with T observed, optionally one with T latent.
  const StratifiedCountTable::Group* complete = nullptr;
  const StratifiedCountTable::Group* incomplete = nullptr;
  for (const auto& g : mixed.groups()) {
    const bool has_t =
        std::find(g.observed.begin(), g.observed.end(), "T") != g.observed.end();
    if (has_t && g.observed.size() == 3) {
      complete = &g;
    } else if (!has_t && g.observed.size() == 2) {
      incomplete = &g;
    }
  }
  if (!complete) {
    throw DataError("validation: no record group observes T together with X and Y");
  }

  auto level_of = [](const StratifiedCountTable::Group& g, const std::string& axis,
                     std::size_t idx) {
    for (std::size_t i = 0; i < g.observed.size(); ++i) {
      if (g.observed[i] == axis) return static_cast<int>((idx >> i) & 1);
    }
    throw DataError("validation: axis '" + axis + "' not observed in group");
  };

  double validated[2][2][2] = {};  // [t][x][y]
  for (std::size_t idx = 0; idx < complete->counts.size(); ++idx) {
    validated[level_of(*complete, "T", idx)][level_of(*complete, "X", idx)]
             [level_of(*complete, "Y", idx)] += complete->counts[idx];
  }
  double missing[2][2] = {};  // [x][y]
  if (incomplete) {
    for (std::size_t idx = 0; idx < incomplete->counts.size(); ++idx) {
      missing[level_of(*incomplete, "X", idx)][level_of(*incomplete, "Y", idx)] +=
          incomplete->counts[idx];
    }
  }

  ClosedFormValidation out;
  for (int x = 0; x < 2; ++x) {
    for (int y = 0; y < 2; ++y) {
      const double total = validated[0][x][y] + validated[1][x][y];
      if (!(total > 0.0)) {
        std::ostringstream os;
        os << "validation: no validated records at (x=" << x << ", y=" << y << ")";
        throw DataError(os.str());
      }
      out.pi_hat.at(x, y) = validated[1][x][y] / total;
    }
  }

  double ty[2][2] = {};
  for (int t = 0; t < 2; ++t) {
    for (int y = 0; y < 2; ++y) {
      for (int x = 0; x < 2; ++x) {
        const double pi = t == 1 ? out.pi_hat.at(x, y) : 1.0 - out.pi_hat.at(x, y);
        ty[t][y] += validated[t][x][y] + missing[x][y] * pi;
      }
    }
  }
  out.imputed_ty.n11 = ty[1][1];
  out.imputed_ty.n10 = ty[1][0];
  out.imputed_ty.n01 = ty[0][1];
  out.imputed_ty.n00 = ty[0][0];
  out.or_ty = odds_ratio(out.imputed_ty);
  return out;
}

AnalysisReport run_validation(const StratifiedCountTable& mixed_in,
                              const std::map<std::string, PriorSpec>& priors,
                              const WorkflowConfig& cfg) {
  StratifiedCountTable mixed = mixed_in;
  AnalysisReport report;
  report.kind = "validation";
  report.provenance.seed = cfg.sampling.seed;
  report.provenance.draws = 0;
  if (mixed.has_axis("W") && !mixed.has_axis("T")) {
    mixed = mixed.with_renamed_axis("W", "T");
    report.notes.push_back("record measurement W treated as the true exposure T");
  }
  if (mixed.axes() != std::vector<std::string>{"T", "X", "Y"} &&
      mixed.axes() != std::vector<std::string>{"X", "Y", "T"}) {
    // Accept any ordering of the three axes.
    std::set<std::string> got(mixed.axes().begin(), mixed.axes().end());
    if (got != std::set<std::string>{"T", "X", "Y"}) {
      throw DataError("validation: expected axes T (or W), X, Y");
    }
  }

  for (const auto& [name, spec] : priors) {
    if (spec.proper() &&
        !(name == "T" || name == "TX" || name == "TY" || name == "TXY")) {
      throw ConfigError("validation: prior on '" + name + "' is outside the T-block");
    }
  }

  const TwoByTwo crude = mixed.to_two_by_two("X", "Y");
  report.conventional = conventional_block(crude, "OR_XY");

  const ClosedFormValidation cf = closed_form_validation_or(mixed);
  report.closed_form = cf;

  FitProblem ml_problem{mixed,
                        PriorPanel::for_coefficients(model_coefficients(mixed.axes()), {}),
                        {}, cfg.frame};
  const FitResult ml_fit = maximize(ml_problem, cfg.fit);
  report.ml = fit_block("maximum likelihood", ml_fit, log_or_ty_functional(), 0.95);

  report.closed_form_ml_rel_gap =
      std::fabs(cf.or_ty - report.ml->or_estimate.estimate) / cf.or_ty;

  bool any_proper = false;
  for (const auto& [name, spec] : priors) {
    (void)name;
    if (spec.proper()) any_proper = true;
  }
  if (any_proper) {
    FitProblem pen_problem{mixed,
                           PriorPanel::for_coefficients(model_coefficients(mixed.axes()), priors),
                           {}, cfg.frame};
    const FitResult pen_fit = maximize(pen_problem, cfg.fit);
    report.penalized =
        fit_block("penalized likelihood", pen_fit, log_or_ty_functional(), 0.95);
    report.priors = echo_priors(priors);
  }
  return report;
}

AnalysisReport run_confounder(const StratifiedCountTable& xy,
                              const std::map<std::string, PriorSpec>& priors,
                              const WorkflowConfig& cfg) {
  require_axes(xy, {"X", "Y"}, "confounder analysis");
  check_prior_targets(priors, {"T", "TX", "TY"}, "confounder analysis");

  AnalysisReport report;
  report.kind = "confounder";
  report.provenance.seed = cfg.sampling.seed;
  report.provenance.draws = cfg.with_sampler ? cfg.sampling.draws : 0;

  const TwoByTwo crude = xy.to_two_by_two("X", "Y");
  report.conventional = conventional_block(crude, "OR_XY");

  if (cfg.with_sampler) {
    const PriorPanel bias_panel =
        PriorPanel::for_coefficients(bias_coefficients(AnalysisKind::Confounder), priors);
    auto draws = std::make_shared<DrawSet>(
        run_sampler(AnalysisKind::Confounder, xy, bias_panel, cfg.sampling));
    const double crude_se = wald_log_or_se(crude);
    const DrawSummary summary = summarize(draws->target, cfg.levels, crude_se * crude_se);
    report.sampler = sampler_block(summary, cfg.sampling);
    report.draw_set = std::move(draws);
    report.notes.push_back(
        "sampler target is the T-adjusted exp(beta_XY) = crude OR_XY / R(beta_T), "
        "with the three-way coefficient fixed at zero");
  }
  report.priors = echo_priors(priors);
  return report;
}

AnalysisReport run_selection(const StratifiedCountTable& stratum0,
                             const std::map<std::string, PriorSpec>& priors,
                             SelectionMode mode, const WorkflowConfig& cfg) {
  require_axes(stratum0, {"T", "Y"}, "selection analysis");
  const AnalysisKind kind = mode == SelectionMode::Density ? AnalysisKind::SelectionDensity
                                                           : AnalysisKind::SelectionStratum;
  check_prior_targets(priors, bias_coefficients(kind), "selection analysis");

  AnalysisReport report;
  report.kind = "selection";
  report.provenance.seed = cfg.sampling.seed;
  report.provenance.draws = cfg.with_sampler ? cfg.sampling.draws : 0;

  const TwoByTwo stratum = stratum0.to_two_by_two("T", "Y");
  report.conventional = conventional_block(stratum, "OR_TY|observed stratum");
  report.notes.push_back(mode == SelectionMode::Density
                             ? "density sampling: OR_TY = stratum OR * exp(-beta_STY)"
                             : "stratum selection: OR_TY = stratum OR * R of the "
                               "nonresponse (X = 1 - S) block");

  if (cfg.with_sampler) {
    const PriorPanel bias_panel =
        PriorPanel::for_coefficients(bias_coefficients(kind), priors);
    auto draws =
        std::make_shared<DrawSet>(run_sampler(kind, stratum0, bias_panel, cfg.sampling));
    const double crude_se = wald_log_or_se(stratum);
    const DrawSummary summary = summarize(draws->target, cfg.levels, crude_se * crude_se);
    report.sampler = sampler_block(summary, cfg.sampling);
    report.draw_set = std::move(draws);
  }
  report.priors = echo_priors(priors);
  return report;
}

}  // namespace biasrelax
