#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "biasrelax/fit.hpp"
#include "biasrelax/mc.hpp"
#include "biasrelax/model.hpp"
#include "biasrelax/priors.hpp"
#include "biasrelax/tables.hpp"

namespace biasrelax {

// Estimate with equal-tailed interval on the ratio scale; construction
// enforces lo <= estimate <= hi.
struct IntervalEstimate {
  std::string label;
  double estimate = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  std::optional<double> se_log;

  static IntervalEstimate make(std::string label, double estimate, double lo, double hi,
                               std::optional<double> se_log = std::nullopt);
};

struct FitBlock {
  std::string label;
  IntervalEstimate or_estimate;
  std::map<std::string, double> beta;
  std::map<std::string, double> beta_se;  // empty when the covariance is unavailable
  int iterations = 0;
  double grad_max_norm = 0.0;
  std::vector<std::string> kinked;
  std::string frame;
};

struct PriorEcho {
  std::string coefficient;
  std::string description;
  std::string scale;  // "exp" or "expit"
  double lo95 = 0.0;
  double hi95 = 0.0;
  std::optional<DataPriorRecord> data_prior;
  std::optional<double> effective_n;  // 4/variance for normal priors
  std::optional<std::string> warning;
};

struct SamplerBlock {
  std::string identified_mode;
  double dirichlet_prior = 1.0;
  std::int64_t draws = 0;
  std::uint64_t seed = 0;
  std::int64_t chunk = 0;
  int threads = 1;
  DrawSummary summary;
};

struct ClosedFormValidation {
  PredictiveValues pi_hat;  // validated-record proportions per (x,y)
  TwoByTwo imputed_ty;      // rows T, columns Y
  double or_ty = 0.0;
};

struct Provenance {
  std::uint64_t seed = 0;
  std::int64_t draws = 0;
  std::string config_digest;
};

struct AnalysisReport {
  std::string kind;
  std::optional<IntervalEstimate> conventional;
  std::optional<FitBlock> semi_bayes;
  std::optional<FitBlock> penalized;
  std::optional<FitBlock> ml;
  std::optional<ClosedFormValidation> closed_form;
  std::optional<double> closed_form_ml_rel_gap;
  std::optional<SamplerBlock> sampler;
  std::vector<PriorEcho> priors;
  std::vector<std::string> notes;
  Provenance provenance;

  // Raw draws for optional CSV export; not serialized into the report.
  std::shared_ptr<const DrawSet> draw_set;
};

struct WorkflowConfig {
  SamplerConfig sampling;
  std::vector<double> levels = {0.025, 0.25, 0.5, 0.75, 0.975};
  Frame frame = Frame::Poisson;
  bool with_sampler = true;
  FitOptions fit;
};

// Conventional 2x2 analysis of an XY table, plus a posterior-mode fit when
// a proper prior is supplied for the "XY" coefficient.
AnalysisReport run_conventional(const StratifiedCountTable& xy,
                                const std::map<std::string, PriorSpec>& priors,
                                const WorkflowConfig& cfg);

// Misclassified-exposure analysis: conventional and posterior-mode results
// for the measured-exposure odds ratio, the eight-coefficient penalized fit
// and Wald interval for OR_TY, and sampler percentiles with the
// variance-ratio diagnostic. Proper priors are required on exactly the
// T-block (T, TX, TY, TXY).
AnalysisReport run_misclassification(const StratifiedCountTable& xy,
                                     const std::map<std::string, PriorSpec>& priors,
                                     const WorkflowConfig& cfg);

// Validated-subsample estimate: per-(x,y) record proportions imputed into
// the incomplete stratum, collapsed over X.
ClosedFormValidation closed_form_validation_or(const StratifiedCountTable& mixed);

// Mixed complete/incomplete analysis treating the record measurement as the
// true exposure: closed form, full-likelihood fit, penalized fit when the
// T-block carries priors, and the closed-form/ML agreement check.
AnalysisReport run_validation(const StratifiedCountTable& mixed,
                              const std::map<std::string, PriorSpec>& priors,
                              const WorkflowConfig& cfg);

// Unmeasured-confounder analysis of an XY table: crude results plus sampler
// percentiles of the T-adjusted exp(beta_XY). Proper priors on (T, TX, TY).
AnalysisReport run_confounder(const StratifiedCountTable& xy,
                              const std::map<std::string, PriorSpec>& priors,
                              const WorkflowConfig& cfg);

// Selection-bias analysis of the observed (X=0) TY stratum. Density mode
// needs a proper prior on STY; stratum mode needs the X-block (X, TX, XY,
// TXY).
AnalysisReport run_selection(const StratifiedCountTable& stratum0,
                             const std::map<std::string, PriorSpec>& priors,
                             SelectionMode mode, const WorkflowConfig& cfg);

}  // namespace biasrelax
