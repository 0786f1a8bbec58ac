#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "biasrelax/model.hpp"
#include "biasrelax/priors.hpp"
#include "biasrelax/rng.hpp"
#include "biasrelax/tables.hpp"

namespace biasrelax {

enum class IdentifiedMode { Dirichlet, Bootstrap };

enum class AnalysisKind {
  Misclassification,  // target OR_TY from an XY table with latent T
  Confounder,         // target exp(beta_XY) = crude OR_XY / R(beta_T)
  SelectionDensity,   // target OR_TY = stratum OR * exp(-beta_STY)
  SelectionStratum,   // target OR_TY = stratum OR * R(beta_X)
};

struct SamplerConfig {
  std::int64_t draws = 250000;
  std::uint64_t seed = 1;
  IdentifiedMode identified_mode = IdentifiedMode::Dirichlet;
  double dirichlet_prior = 1.0;  // conjugate mass per cell
  std::int64_t chunk = 4096;
  int threads = 1;
};

// Bias-block coefficient names for each analysis kind, in draw order.
const std::vector<std::string>& bias_coefficients(AnalysisKind kind);

// One identified-block draw. The table must be fully observed; cells are
// drawn within each Y stratum (conjugate Dirichlet posterior scaled by the
// stratum total, or a multinomial bootstrap resample). The result is
// aligned with table.margin(table.axes()).
std::vector<double> draw_identified(const StratifiedCountTable& table,
                                    const SamplerConfig& cfg, RngStream& rng);

// Kind-specific targets. e is oriented rows = non-Y axis (X or T),
// columns = Y.
double misclass_draw(const TwoByTwo& e_star, const TBlock& b);
double confounder_draw(const TwoByTwo& e_star, double bt, double btx, double bty);
double selection_density_draw(const TwoByTwo& e0_star, double b_sty);
double selection_stratum_draw(const TwoByTwo& e0_star, const XBlock& b);

// Shared evaluation used by the sampler and the ignorance optimizer: the
// target at identified cells e and bias values in bias_coefficients order.
double bias_target(AnalysisKind kind, const TwoByTwo& e, const std::vector<double>& bias);

struct DrawSet {
  std::vector<std::string> bias_names;
  std::vector<double> target;              // one entry per draw, NaN if degenerate
  std::vector<std::vector<double>> bias;   // bias[j][i]: coefficient j, draw i
};

// Independent posterior draws: identified block from its conjugate
// posterior (or bootstrap), bias block straight from its prior (no
// updating), target from the kind-specific formula. Deterministic given
// (seed, chunk) for any thread count.
DrawSet run_sampler(AnalysisKind kind, const StratifiedCountTable& table,
                    const PriorPanel& bias_panel, const SamplerConfig& cfg);

struct DrawSummary {
  double median = 0.0;
  std::vector<std::pair<double, double>> percentiles;  // (level, target value)
  double mean_log = 0.0;
  double var_log = 0.0;
  std::optional<double> variance_ratio;  // crude_log_var / var_log
  std::string variance_flag;             // nonempty when the ratio is undefined
  std::size_t n_total = 0;
  std::size_t n_used = 0;
  std::size_t n_dropped = 0;
};

// Percentiles are order statistics at ceil(level * n). Draws that are not
// finite and positive are dropped and counted; more than 0.1% dropped is an
// error.
DrawSummary summarize(const std::vector<double>& draws, const std::vector<double>& levels,
                      std::optional<double> crude_log_var);

struct CoefInterval {
  std::string name;
  double lo = 0.0;
  double hi = 0.0;
};

struct IgnoranceInterval {
  double lo = 0.0;
  double hi = 0.0;
  bool unbounded = false;
};

// Range of the target over the bias box at fixed identified cells: corner
// enumeration plus multi-start cyclic coordinate refinement. Boxes with
// infinite edges are probed along those directions and flagged unbounded if
// the target keeps moving.
IgnoranceInterval ignorance_interval(const TwoByTwo& e_hat, const std::vector<CoefInterval>& box,
                                     AnalysisKind kind);

}  // namespace biasrelax
