#include "doctest.h"

#include <cmath>
#include <map>

#include "biasrelax/errors.hpp"
#include "biasrelax/priors.hpp"
#include "biasrelax/report.hpp"
#include "biasrelax/rng.hpp"
#include "biasrelax/workflows.hpp"

using namespace biasrelax;

namespace {

const double kLogit01 = std::log(0.1 / 0.9);
const double kLn135 = std::log(13.5);

RawCell cell(std::map<std::string, int> levels, double n) { return {std::move(levels), n}; }

StratifiedCountTable sids_xy() {
  return StratifiedCountTable::from_cells(
      {"X", "Y"}, {cell({{"X", 1}, {"Y", 1}}, 173), cell({{"X", 0}, {"Y", 1}}, 602),
                   cell({{"X", 1}, {"Y", 0}}, 134), cell({{"X", 0}, {"Y", 0}}, 663)});
}

StratifiedCountTable sids_validation_w() {
  std::vector<RawCell> cells = {
      cell({{"W", 1}, {"X", 1}, {"Y", 1}}, 29),  cell({{"W", 0}, {"X", 1}, {"Y", 1}}, 22),
      cell({{"W", 1}, {"X", 0}, {"Y", 1}}, 17),  cell({{"W", 0}, {"X", 0}, {"Y", 1}}, 143),
      cell({{"W", 1}, {"X", 1}, {"Y", 0}}, 21),  cell({{"W", 0}, {"X", 1}, {"Y", 0}}, 12),
      cell({{"W", 1}, {"X", 0}, {"Y", 0}}, 16),  cell({{"W", 0}, {"X", 0}, {"Y", 0}}, 168),
      cell({{"X", 1}, {"Y", 1}}, 122),           cell({{"X", 0}, {"Y", 1}}, 442),
      cell({{"X", 1}, {"Y", 0}}, 101),           cell({{"X", 0}, {"Y", 0}}, 479)};
  return StratifiedCountTable::from_cells({"W", "X", "Y"}, cells);
}

std::map<std::string, PriorSpec> table3() {
  return {{"T", PriorSpec::normal(kLogit01, 0.16)},
          {"TX", PriorSpec::normal(kLn135, 0.25)},
          {"TY", PriorSpec::normal(0.0, 0.50)},
          {"TXY", PriorSpec::normal(0.0, 0.125)}};
}

WorkflowConfig quick(std::int64_t draws = 60000, std::uint64_t seed = 101) {
  WorkflowConfig cfg;
  cfg.sampling.draws = draws;
  cfg.sampling.seed = seed;
  cfg.levels = {0.025, 0.5, 0.975};
  return cfg;
}

}  // namespace

TEST_CASE("misclassification workflow on the SIDS study") {
  const auto report = run_misclassification(sids_xy(), table3(), quick());

  REQUIRE(report.conventional.has_value());
  CHECK(report.conventional->estimate == doctest::Approx(1.42).epsilon(0.005));
  CHECK(report.conventional->lo == doctest::Approx(1.11).epsilon(0.005));
  CHECK(report.conventional->hi == doctest::Approx(1.83).epsilon(0.005));

  REQUIRE(report.semi_bayes.has_value());
  CHECK(report.semi_bayes->or_estimate.estimate == doctest::Approx(1.41).epsilon(0.005));
  CHECK(report.semi_bayes->or_estimate.lo == doctest::Approx(1.10).epsilon(0.01));
  CHECK(report.semi_bayes->or_estimate.hi == doctest::Approx(1.80).epsilon(0.01));

  REQUIRE(report.penalized.has_value());
  CHECK(report.penalized->or_estimate.estimate == doctest::Approx(1.19).epsilon(0.01));
  CHECK(report.penalized->or_estimate.lo == doctest::Approx(0.413).epsilon(0.02));
  CHECK(report.penalized->or_estimate.hi == doctest::Approx(3.424).epsilon(0.02));

  REQUIRE(report.sampler.has_value());
  const auto& s = report.sampler->summary;
  CHECK(s.median == doctest::Approx(1.19).epsilon(0.02));
  CHECK(s.percentiles.front().second == doctest::Approx(0.365).epsilon(0.08));
  CHECK(s.percentiles.back().second == doctest::Approx(3.43).epsilon(0.05));
  REQUIRE(s.variance_ratio.has_value());
  CHECK(*s.variance_ratio == doctest::Approx(0.052).epsilon(0.25));

  // The conventional interval sits inside the bias-aware one.
  CHECK(report.penalized->or_estimate.lo < report.conventional->lo);
  CHECK(report.penalized->or_estimate.hi > report.conventional->hi);

  // Prior echo carries the data-prior trial counts.
  std::map<std::string, double> n_by_coef;
  for (const auto& p : report.priors) {
    REQUIRE(p.effective_n.has_value());
    n_by_coef[p.coefficient] = *p.effective_n;
  }
  CHECK(n_by_coef.at("T") == doctest::Approx(25.0));
  CHECK(n_by_coef.at("TX") == doctest::Approx(16.0));
  CHECK(n_by_coef.at("TY") == doctest::Approx(8.0));
  CHECK(n_by_coef.at("TXY") == doctest::Approx(32.0));
}

TEST_CASE("misclassification workflow requires the T-block priors") {
  auto priors = table3();
  priors.erase("TXY");
  CHECK_THROWS_AS(run_misclassification(sids_xy(), priors, quick()), ConfigError);
  priors = table3();
  priors["XY"] = PriorSpec::normal(0.0, 1.0);
  CHECK_THROWS_AS(run_misclassification(sids_xy(), priors, quick()), ConfigError);
}

TEST_CASE("degenerate point-mass imputation priors reproduce the conventional result") {
  // pi_11y ~ 1 and pi_10y ~ 0 says X = T; the bias-aware analysis then
  // collapses onto the conventional one.
  std::map<std::string, PriorSpec> degenerate = {
      {"T", PriorSpec::normal(std::log(0.001 / 0.999), 1e-8)},
      {"TX", PriorSpec::normal(2.0 * std::log(0.999 / 0.001), 1e-8)},
      {"TY", PriorSpec::normal(0.0, 1e-8)},
      {"TXY", PriorSpec::normal(0.0, 1e-8)}};
  auto cfg = quick(20000, 33);
  const auto report = run_misclassification(sids_xy(), degenerate, cfg);
  CHECK(report.penalized->or_estimate.estimate == doctest::Approx(1.42).epsilon(0.01));
  CHECK(report.penalized->or_estimate.lo == doctest::Approx(1.11).epsilon(0.015));
  CHECK(report.penalized->or_estimate.hi == doctest::Approx(1.83).epsilon(0.015));
  CHECK(report.sampler->summary.median == doctest::Approx(1.42).epsilon(0.02));
}

TEST_CASE("symmetric tables with symmetric priors give symmetric percentiles") {
  const auto even = StratifiedCountTable::from_cells(
      {"X", "Y"}, {cell({{"X", 1}, {"Y", 1}}, 400), cell({{"X", 0}, {"Y", 1}}, 400),
                   cell({{"X", 1}, {"Y", 0}}, 400), cell({{"X", 0}, {"Y", 0}}, 400)});
  std::map<std::string, PriorSpec> symmetric = {{"T", PriorSpec::normal(0.0, 0.2)},
                                                {"TX", PriorSpec::normal(0.0, 0.3)},
                                                {"TY", PriorSpec::normal(0.0, 0.4)},
                                                {"TXY", PriorSpec::normal(0.0, 0.1)}};
  const auto report = run_misclassification(even, symmetric, quick(80000, 55));
  const auto& s = report.sampler->summary;
  CHECK(std::fabs(std::log(s.percentiles.front().second) +
                  std::log(s.percentiles.back().second)) < 0.05);
  CHECK(s.median == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("closed-form validation estimate") {
  SUBCASE("the SIDS record-review table") {
    const auto cf = closed_form_validation_or(sids_validation_w().with_renamed_axis("W", "T"));
    CHECK(cf.pi_hat.at(1, 1) == doctest::Approx(0.568627).epsilon(1e-5));
    CHECK(cf.pi_hat.at(0, 1) == doctest::Approx(0.106250).epsilon(1e-5));
    CHECK(cf.pi_hat.at(1, 0) == doctest::Approx(0.636364).epsilon(1e-5));
    CHECK(cf.pi_hat.at(0, 0) == doctest::Approx(0.086957).epsilon(1e-5));
    CHECK(cf.imputed_ty.n11 == doctest::Approx(162.335).epsilon(1e-4));
    CHECK(cf.imputed_ty.n01 == doctest::Approx(612.665).epsilon(1e-4));
    CHECK(cf.imputed_ty.n10 == doctest::Approx(142.925).epsilon(1e-4));
    CHECK(cf.imputed_ty.n00 == doctest::Approx(654.075).epsilon(1e-4));
    CHECK(cf.or_ty == doctest::Approx(1.212576).epsilon(1e-5));
  }
  SUBCASE("fully validated table reduces to the direct TY ratio") {
    std::vector<RawCell> cells;
    const double counts[2][2][2] = {{{30, 12}, {25, 33}}, {{14, 9}, {21, 40}}};
    for (int t = 0; t < 2; ++t)
      for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y)
          cells.push_back(cell({{"T", t}, {"X", x}, {"Y", y}}, counts[t][x][y]));
    const auto table = StratifiedCountTable::from_cells({"T", "X", "Y"}, cells);
    const auto cf = closed_form_validation_or(table);
    const auto direct = table.collapse("X").to_two_by_two("T", "Y");
    CHECK(cf.or_ty == doctest::Approx(odds_ratio(direct)).epsilon(1e-12));
  }
  SUBCASE("empty validation cell is an error") {
    std::vector<RawCell> cells = {
        cell({{"T", 1}, {"X", 1}, {"Y", 1}}, 0), cell({{"T", 0}, {"X", 1}, {"Y", 1}}, 0),
        cell({{"T", 1}, {"X", 0}, {"Y", 1}}, 17), cell({{"T", 0}, {"X", 0}, {"Y", 1}}, 143),
        cell({{"T", 1}, {"X", 1}, {"Y", 0}}, 21), cell({{"T", 0}, {"X", 1}, {"Y", 0}}, 12),
        cell({{"T", 1}, {"X", 0}, {"Y", 0}}, 16), cell({{"T", 0}, {"X", 0}, {"Y", 0}}, 168),
        cell({{"X", 1}, {"Y", 1}}, 122), cell({{"X", 0}, {"Y", 1}}, 442),
        cell({{"X", 1}, {"Y", 0}}, 101), cell({{"X", 0}, {"Y", 0}}, 479)};
    const auto table = StratifiedCountTable::from_cells({"T", "X", "Y"}, cells);
    CHECK_THROWS_AS(closed_form_validation_or(table), DataError);
  }
}

TEST_CASE("validation workflow") {
  SUBCASE("flat panel reproduces the record-based analysis") {
    const auto report = run_validation(sids_validation_w(), {}, quick());
    REQUIRE(report.ml.has_value());
    CHECK(report.ml->or_estimate.estimate == doctest::Approx(1.2126).epsilon(0.005));
    CHECK(report.ml->or_estimate.lo == doctest::Approx(0.786).epsilon(0.01));
    CHECK(report.ml->or_estimate.hi == doctest::Approx(1.871).epsilon(0.01));
    REQUIRE(report.closed_form_ml_rel_gap.has_value());
    CHECK(*report.closed_form_ml_rel_gap < 1e-6);
    CHECK_FALSE(report.penalized.has_value());
    // Crude XY results ride along.
    CHECK(report.conventional->estimate == doctest::Approx(1.42).epsilon(0.005));
  }
  SUBCASE("table 3 panel tightens the estimate") {
    const auto report = run_validation(sids_validation_w(), table3(), quick());
    REQUIRE(report.penalized.has_value());
    CHECK(report.penalized->or_estimate.estimate == doctest::Approx(1.196).epsilon(0.01));
    CHECK(report.penalized->or_estimate.lo == doctest::Approx(0.809).epsilon(0.015));
    CHECK(report.penalized->or_estimate.hi == doctest::Approx(1.768).epsilon(0.015));
  }
  SUBCASE("closed form equals ML on random mixed tables") {
    RngStream rng(61);
    for (int rep = 0; rep < 5; ++rep) {
      std::vector<RawCell> cells;
      for (int t = 0; t < 2; ++t)
        for (int x = 0; x < 2; ++x)
          for (int y = 0; y < 2; ++y)
            cells.push_back(
                cell({{"T", t}, {"X", x}, {"Y", y}}, 5.0 + 80.0 * rng.uniform()));
      for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y)
          cells.push_back(cell({{"X", x}, {"Y", y}}, 20.0 + 300.0 * rng.uniform()));
      const auto table = StratifiedCountTable::from_cells({"T", "X", "Y"}, cells);
      const auto report = run_validation(table, {}, quick());
      CHECK(*report.closed_form_ml_rel_gap < 1e-6);
    }
  }
  SUBCASE("priors outside the T block are rejected") {
    std::map<std::string, PriorSpec> bad = {{"XY", PriorSpec::normal(0, 1)}};
    CHECK_THROWS_AS(run_validation(sids_validation_w(), bad, quick()), ConfigError);
  }
}

TEST_CASE("confounder workflow") {
  std::map<std::string, PriorSpec> priors = {
      {"T", PriorSpec::normal(std::log(0.25 / 0.75), 0.25)},
      {"TX", PriorSpec::normal(std::log(2.0), 0.25)},
      {"TY", PriorSpec::normal(std::log(2.0), 0.25)}};

  SUBCASE("null confounding priors reproduce the crude") {
    std::map<std::string, PriorSpec> null_priors = {
        {"T", PriorSpec::normal(0.3, 1e-12)},
        {"TX", PriorSpec::normal(0.0, 1e-12)},
        {"TY", PriorSpec::normal(0.0, 1e-12)}};
    const auto report = run_confounder(sids_xy(), null_priors, quick(40000, 71));
    CHECK(report.sampler->summary.median == doctest::Approx(1.42).epsilon(0.01));
    // With R identically 1, target variance equals the identified variance.
    REQUIRE(report.sampler->summary.variance_ratio.has_value());
    CHECK(*report.sampler->summary.variance_ratio == doctest::Approx(1.0).epsilon(0.1));
  }

  SUBCASE("a point mass at beta_TY = 0 makes the factor identically one") {
    std::map<std::string, PriorSpec> ty_null = {
        {"T", PriorSpec::normal(-1.0, 0.3)},
        {"TX", PriorSpec::normal(0.5, 0.3)},
        {"TY", PriorSpec::normal(0.0, 1e-14)}};
    const auto report = run_confounder(sids_xy(), ty_null, quick(30000, 72));
    // Adjusted draws coincide with crude draws, so the summary matches the
    // identified-only run above.
    CHECK(report.sampler->summary.median == doctest::Approx(1.42).epsilon(0.01));
    REQUIRE(report.sampler->summary.variance_ratio.has_value());
    CHECK(*report.sampler->summary.variance_ratio == doctest::Approx(1.0).epsilon(0.1));
  }

  SUBCASE("log-target mean decomposes into crude minus factor") {
    auto cfg = quick(150000, 73);
    const auto report = run_confounder(sids_xy(), priors, cfg);
    const double mean_adjusted = report.sampler->summary.mean_log;

    // Independent estimates of E[ln crude] and E[ln R] by direct MC.
    RngStream rng(997);
    double sum_crude = 0.0, sum_r = 0.0;
    const int n = 200000;
    SamplerConfig id_cfg;
    const auto table = sids_xy();
    for (int i = 0; i < n; ++i) {
      const auto cells = draw_identified(table, id_cfg, rng);
      sum_crude += std::log(cells[3] * cells[0] / (cells[1] * cells[2]));
      const double bt = priors.at("T").sample(rng);
      const double btx = priors.at("TX").sample(rng);
      const double bty = priors.at("TY").sample(rng);
      sum_r += std::log(confounding_bias_factor(bt, btx, bty, 0.0));
    }
    CHECK(mean_adjusted ==
          doctest::Approx(sum_crude / n - sum_r / n).epsilon(0.02));
  }

  SUBCASE("needs the T triple") {
    std::map<std::string, PriorSpec> missing = {{"T", PriorSpec::normal(0, 1)}};
    CHECK_THROWS_AS(run_confounder(sids_xy(), missing, quick()), ConfigError);
  }
}

TEST_CASE("selection workflow") {
  const auto stratum = StratifiedCountTable::from_cells(
      {"T", "Y"}, {cell({{"T", 1}, {"Y", 1}}, 29), cell({{"T", 1}, {"Y", 0}}, 22),
                   cell({{"T", 0}, {"Y", 1}}, 21), cell({{"T", 0}, {"Y", 0}}, 12)});

  SUBCASE("stratum odds ratio is the conventional block") {
    std::map<std::string, PriorSpec> null_sty = {{"STY", PriorSpec::normal(0.0, 1e-12)}};
    const auto report =
        run_selection(stratum, null_sty, SelectionMode::Density, quick(30000, 81));
    CHECK(report.conventional->estimate ==
          doctest::Approx(29.0 * 12.0 / (22.0 * 21.0)).epsilon(1e-9));
    CHECK(report.sampler->summary.median ==
          doctest::Approx(report.conventional->estimate).epsilon(0.03));
  }

  SUBCASE("selection variance adds to the stratum variance") {
    const double nu = 0.09;
    std::map<std::string, PriorSpec> null_sty = {{"STY", PriorSpec::normal(0.0, 1e-12)}};
    std::map<std::string, PriorSpec> with_sty = {{"STY", PriorSpec::normal(0.0, nu)}};
    const auto base =
        run_selection(stratum, null_sty, SelectionMode::Density, quick(200000, 83));
    const auto wide =
        run_selection(stratum, with_sty, SelectionMode::Density, quick(200000, 84));
    CHECK(wide.sampler->summary.var_log ==
          doctest::Approx(base.sampler->summary.var_log + nu).epsilon(0.02));
  }

  SUBCASE("stratum mode with nondifferential block leaves the stratum ratio") {
    std::map<std::string, PriorSpec> block = {
        {"X", PriorSpec::normal(0.2, 0.4)},
        {"TX", PriorSpec::normal(1.0, 0.3)},
        {"XY", PriorSpec::normal(0.0, 1e-12)},
        {"TXY", PriorSpec::normal(0.0, 1e-12)}};
    const auto report =
        run_selection(stratum, block, SelectionMode::Stratum, quick(30000, 87));
    CHECK(report.sampler->summary.median ==
          doctest::Approx(report.conventional->estimate).epsilon(0.03));
  }
}

TEST_CASE("reports are pure functions of inputs and seed") {
  const auto a = run_misclassification(sids_xy(), table3(), quick(20000, 91));
  const auto b = run_misclassification(sids_xy(), table3(), quick(20000, 91));
  CHECK(dump_json(report_to_json(a)) == dump_json(report_to_json(b)));
  const auto c = run_misclassification(sids_xy(), table3(), quick(20000, 92));
  CHECK(dump_json(report_to_json(a)) != dump_json(report_to_json(c)));
}

TEST_CASE("conventional workflow") {
  const auto plain = run_conventional(sids_xy(), {}, quick());
  CHECK(plain.conventional->estimate == doctest::Approx(1.42).epsilon(0.005));
  CHECK_FALSE(plain.semi_bayes.has_value());

  const auto with_prior = run_conventional(
      sids_xy(), {{"XY", PriorSpec::normal(0.0, 0.5)}}, quick());
  REQUIRE(with_prior.semi_bayes.has_value());
  CHECK(with_prior.semi_bayes->or_estimate.estimate == doctest::Approx(1.41).epsilon(0.005));

  CHECK_THROWS_AS(
      run_conventional(sids_xy(), {{"TY", PriorSpec::normal(0.0, 0.5)}}, quick()),
      ConfigError);
}
