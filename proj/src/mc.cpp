#include "biasrelax/mc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "biasrelax/errors.hpp"

namespace biasrelax {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

// Everything the per-draw loop needs, computed once per run: margin counts
// and the cell indices of each Y stratum (in ascending index order, which
// fixes the RNG call sequence).
struct IdentifiedPlan {
  std::vector<double> counts;
  struct Stratum {
    std::vector<std::size_t> cells;
    double total = 0.0;
  };
  std::vector<Stratum> strata;
};

IdentifiedPlan make_plan(const StratifiedCountTable& table, IdentifiedMode mode) {
  if (!table.fully_observed()) {
    throw SamplingError("draw_identified: table has latent axes");
  }
  if (!table.has_axis("Y")) {
    throw SamplingError("draw_identified: table has no Y axis to stratify on");
  }
  const auto& axes = table.axes();
  std::size_t y_pos = 0;
  for (std::size_t i = 0; i < axes.size(); ++i) {
    if (axes[i] == "Y") y_pos = i;
  }
  IdentifiedPlan plan;
  plan.counts = table.margin(axes);
  plan.strata.resize(2);
  for (std::size_t idx = 0; idx < plan.counts.size(); ++idx) {
    auto& stratum = plan.strata[(idx >> y_pos) & 1];
    stratum.cells.push_back(idx);
    stratum.total += plan.counts[idx];
  }
  for (const auto& stratum : plan.strata) {
    if (stratum.cells.empty()) continue;
    if (!(stratum.total > 0.0)) {
      throw SamplingError("draw_identified: empty Y stratum");
    }
    if (mode == IdentifiedMode::Bootstrap &&
        std::fabs(stratum.total - std::round(stratum.total)) > 1e-9) {
      throw SamplingError("draw_identified: bootstrap requires integer counts");
    }
  }
  return plan;
}

// One identified draw into `out`; `gamma_buf` is scratch of cell size.
void draw_from_plan(const IdentifiedPlan& plan, const SamplerConfig& cfg, RngStream& rng,
                    std::vector<double>& out, std::vector<double>& gamma_buf) {
  for (const auto& stratum : plan.strata) {
    if (stratum.cells.empty()) continue;
    if (cfg.identified_mode == IdentifiedMode::Dirichlet) {
      double gsum = 0.0;
      for (std::size_t i = 0; i < stratum.cells.size(); ++i) {
        gamma_buf[i] = rng.gamma(plan.counts[stratum.cells[i]] + cfg.dirichlet_prior);
        gsum += gamma_buf[i];
      }
      if (!(gsum > 0.0)) throw SamplingError("draw_identified: degenerate Dirichlet draw");
      for (std::size_t i = 0; i < stratum.cells.size(); ++i) {
        out[stratum.cells[i]] = stratum.total * gamma_buf[i] / gsum;
      }
    } else {
      std::int64_t remaining = static_cast<std::int64_t>(std::round(stratum.total));
      double mass = stratum.total;
      for (std::size_t i = 0; i + 1 < stratum.cells.size(); ++i) {
        const double count = plan.counts[stratum.cells[i]];
        const double p = mass > 0.0 ? count / mass : 0.0;
        const std::int64_t k = rng.binomial(remaining, std::clamp(p, 0.0, 1.0));
        out[stratum.cells[i]] = static_cast<double>(k);
        remaining -= k;
        mass -= count;
      }
      out[stratum.cells.back()] = static_cast<double>(remaining);
    }
  }
}

}  // namespace

const std::vector<std::string>& bias_coefficients(AnalysisKind kind) {
  static const std::vector<std::string> kMisclass = {"T", "TX", "TY", "TXY"};
  static const std::vector<std::string> kConfounder = {"T", "TX", "TY"};
  static const std::vector<std::string> kDensity = {"STY"};
  static const std::vector<std::string> kStratum = {"X", "TX", "XY", "TXY"};
  switch (kind) {
    case AnalysisKind::Misclassification:
      return kMisclass;
    case AnalysisKind::Confounder:
      return kConfounder;
    case AnalysisKind::SelectionDensity:
      return kDensity;
    case AnalysisKind::SelectionStratum:
      return kStratum;
  }
  return kMisclass;
}

std::vector<double> draw_identified(const StratifiedCountTable& table,
                                    const SamplerConfig& cfg, RngStream& rng) {
  const IdentifiedPlan plan = make_plan(table, cfg.identified_mode);
  std::vector<double> out(plan.counts.size(), 0.0);
  std::vector<double> gamma_buf(plan.counts.size(), 0.0);
  draw_from_plan(plan, cfg, rng, out, gamma_buf);
  return out;
}

double misclass_draw(const TwoByTwo& e_star, const TBlock& b) {
  XYCells e;
  e.at(1, 1) = e_star.n11;
  e.at(1, 0) = e_star.n10;
  e.at(0, 1) = e_star.n01;
  e.at(0, 0) = e_star.n00;
  return marginal_or(transparent_expected(e, b), MarginPair::TY);
}

double confounder_draw(const TwoByTwo& e_star, double bt, double btx, double bty) {
  return odds_ratio(e_star) / confounding_bias_factor(bt, btx, bty, 0.0);
}

double selection_density_draw(const TwoByTwo& e0_star, double b_sty) {
  return odds_ratio(e0_star) * std::exp(-b_sty);
}

double selection_stratum_draw(const TwoByTwo& e0_star, const XBlock& b) {
  return odds_ratio(e0_star) * selection_bias_factor(b);
}

double bias_target(AnalysisKind kind, const TwoByTwo& e, const std::vector<double>& bias) {
  switch (kind) {
    case AnalysisKind::Misclassification:
      return misclass_draw(e, TBlock{bias[0], bias[1], bias[2], bias[3]});
    case AnalysisKind::Confounder:
      return confounder_draw(e, bias[0], bias[1], bias[2]);
    case AnalysisKind::SelectionDensity:
      return selection_density_draw(e, bias[0]);
    case AnalysisKind::SelectionStratum:
      return selection_stratum_draw(e, XBlock{bias[0], bias[1], bias[2], bias[3]});
  }
  return kNan;
}

namespace {

TwoByTwo cells_to_2x2(const std::vector<double>& cells) {
  // 2-axis margin order: bit 0 = row axis, bit 1 = Y.
  TwoByTwo t;
  t.n00 = cells[0];
  t.n10 = cells[1];
  t.n01 = cells[2];
  t.n11 = cells[3];
  return t;
}

}  // namespace

DrawSet run_sampler(AnalysisKind kind, const StratifiedCountTable& table,
                    const PriorPanel& bias_panel, const SamplerConfig& cfg) {
  if (cfg.draws < 1) throw SamplingError("run_sampler: draws must be >= 1");
  if (cfg.chunk < 1) throw SamplingError("run_sampler: chunk must be >= 1");
  if (table.axes().size() != 2 || !table.has_axis("Y")) {
    throw SamplingError("run_sampler: expected a fully observed 2-axis table with Y");
  }

  const auto& names = bias_coefficients(kind);
  std::vector<const PriorSpec*> priors;
  for (const auto& n : names) {
    if (!bias_panel.has(n) || !bias_panel.at(n).proper()) {
      throw SamplingError("run_sampler: bias coefficient '" + n + "' needs a proper prior");
    }
    priors.push_back(&bias_panel.at(n));
  }
  for (const auto& [n, spec] : bias_panel.entries()) {
    if (spec.proper() && std::find(names.begin(), names.end(), n) == names.end()) {
      throw SamplingError("run_sampler: proper prior on '" + n +
                          "', which is not a bias coefficient for this analysis");
    }
  }

  DrawSet set;
  set.bias_names = names;
  set.target.assign(static_cast<std::size_t>(cfg.draws), kNan);
  set.bias.assign(names.size(), std::vector<double>(static_cast<std::size_t>(cfg.draws), kNan));

  const std::int64_t n_chunks = (cfg.draws + cfg.chunk - 1) / cfg.chunk;
  const int threads = std::max(1, cfg.threads);
  const IdentifiedPlan plan = make_plan(table, cfg.identified_mode);

  auto worker = [&](int worker_id) {
    std::vector<double> bias(names.size());
    std::vector<double> cells(plan.counts.size(), 0.0);
    std::vector<double> gamma_buf(plan.counts.size(), 0.0);
    for (std::int64_t c = worker_id; c < n_chunks; c += threads) {
      RngStream rng = RngStream::substream(cfg.seed, static_cast<std::uint64_t>(c));
      const std::int64_t begin = c * cfg.chunk;
      const std::int64_t end = std::min(cfg.draws, begin + cfg.chunk);
      for (std::int64_t i = begin; i < end; ++i) {
        draw_from_plan(plan, cfg, rng, cells, gamma_buf);
        for (std::size_t j = 0; j < priors.size(); ++j) bias[j] = priors[j]->sample(rng);
        double value;
        try {
          value = bias_target(kind, cells_to_2x2(cells), bias);
        } catch (const Error&) {
          value = kNan;  // degenerate identified draw; dropped in the summary
        } catch (const std::overflow_error&) {
          value = kNan;
        }
        set.target[static_cast<std::size_t>(i)] = value;
        for (std::size_t j = 0; j < bias.size(); ++j) {
          set.bias[j][static_cast<std::size_t>(i)] = bias[j];
        }
      }
    }
  };

  if (threads == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker, t);
    for (auto& th : pool) th.join();
  }
  return set;
}

DrawSummary summarize(const std::vector<double>& draws, const std::vector<double>& levels,
                      std::optional<double> crude_log_var) {
  if (draws.size() < 2) throw SamplingError("summarize: need at least 2 draws");
  for (double level : levels) {
    if (!(level > 0.0 && level < 1.0)) {
      throw SamplingError("summarize: percentile levels must lie in (0,1)");
    }
  }

  std::vector<double> usable;
  usable.reserve(draws.size());
  for (double v : draws) {
    if (std::isfinite(v) && v > 0.0) usable.push_back(v);
  }
  DrawSummary s;
  s.n_total = draws.size();
  s.n_used = usable.size();
  s.n_dropped = s.n_total - s.n_used;
  if (s.n_dropped * 1000 > s.n_total) {
    throw SamplingError("summarize: more than 0.1% of draws were non-finite (" +
                        std::to_string(s.n_dropped) + " of " + std::to_string(s.n_total) + ")");
  }
  if (usable.size() < 2) throw SamplingError("summarize: fewer than 2 usable draws");

  std::sort(usable.begin(), usable.end());
  const auto order_stat = [&](double q) {
    const double raw = std::ceil(q * static_cast<double>(usable.size()));
    const std::size_t rank =
        static_cast<std::size_t>(std::clamp(raw, 1.0, static_cast<double>(usable.size())));
    return usable[rank - 1];
  };
  s.median = order_stat(0.5);
  for (double level : levels) s.percentiles.emplace_back(level, order_stat(level));
  std::sort(s.percentiles.begin(), s.percentiles.end());

  double mean = 0.0;
  for (double v : usable) mean += std::log(v);
  mean /= static_cast<double>(usable.size());
  double ss = 0.0;
  for (double v : usable) {
    const double d = std::log(v) - mean;
    ss += d * d;
  }
  s.mean_log = mean;
  s.var_log = ss / static_cast<double>(usable.size() - 1);

  if (crude_log_var) {
    if (s.var_log > 0.0) {
      s.variance_ratio = *crude_log_var / s.var_log;
    } else {
      s.variance_flag = "zero-variance-target";
    }
  }
  return s;
}

namespace {

// Cyclic coordinate golden-section search within the box; sign = +1
// maximizes, -1 minimizes ln(target).
double coordinate_refine(AnalysisKind kind, const TwoByTwo& e,
                         const std::vector<std::pair<double, double>>& box,
                         std::vector<double> point, double sign) {
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  auto value = [&](const std::vector<double>& p) {
    const double v = bias_target(kind, e, p);
    return sign * std::log(v);
  };
  double best = value(point);
  for (int cycle = 0; cycle < 60; ++cycle) {
    const double before = best;
    for (std::size_t k = 0; k < box.size(); ++k) {
      double lo = box[k].first;
      double hi = box[k].second;
      if (!(hi > lo)) continue;
      double a = lo, b = hi;
      double x1 = b - gr * (b - a);
      double x2 = a + gr * (b - a);
      auto eval_at = [&](double v) {
        point[k] = v;
        return value(point);
      };
      double f1 = eval_at(x1);
      double f2 = eval_at(x2);
      for (int it = 0; it < 80 && (b - a) > 1e-10 * std::max(1.0, std::fabs(hi - lo)); ++it) {
        if (f1 < f2) {
          a = x1;
          x1 = x2;
          f1 = f2;
          x2 = a + gr * (b - a);
          f2 = eval_at(x2);
        } else {
          b = x2;
          x2 = x1;
          f2 = f1;
          x1 = b - gr * (b - a);
          f1 = eval_at(x1);
        }
      }
      // Compare the bracket midpoint against both box edges.
      const double mid = 0.5 * (a + b);
      double cand_best = eval_at(mid);
      double cand_arg = mid;
      for (double edge : {lo, hi}) {
        const double fv = eval_at(edge);
        if (fv > cand_best) {
          cand_best = fv;
          cand_arg = edge;
        }
      }
      point[k] = cand_arg;
      best = std::max(best, cand_best);
    }
    if (best - before < 1e-12 * std::max(1.0, std::fabs(best))) break;
  }
  return sign * best;  // back to signed ln(target)
}

}  // namespace

IgnoranceInterval ignorance_interval(const TwoByTwo& e_hat,
                                     const std::vector<CoefInterval>& box,
                                     AnalysisKind kind) {
  const auto& names = bias_coefficients(kind);
  if (box.size() != names.size()) {
    throw SamplingError("ignorance_interval: box must cover exactly the bias coefficients");
  }
  std::vector<std::pair<double, double>> limits(names.size());
  std::vector<bool> open(names.size(), false);
  for (std::size_t k = 0; k < names.size(); ++k) {
    const auto it =
        std::find_if(box.begin(), box.end(), [&](const CoefInterval& c) { return c.name == names[k]; });
    if (it == box.end()) {
      throw SamplingError("ignorance_interval: box is missing coefficient '" + names[k] + "'");
    }
    if (!(it->lo <= it->hi)) {
      throw SamplingError("ignorance_interval: empty interval for '" + names[k] + "'");
    }
    limits[k] = {it->lo, it->hi};
    open[k] = !std::isfinite(it->lo) || !std::isfinite(it->hi);
  }

  // Probe infinite directions: if the log target still moves between a
  // clamp at 40 and one at 80, the target is unbounded over the box.
  bool unbounded = false;
  std::vector<double> center(names.size());
  for (std::size_t k = 0; k < names.size(); ++k) {
    const double lo = std::isfinite(limits[k].first) ? limits[k].first : -40.0;
    const double hi = std::isfinite(limits[k].second) ? limits[k].second : 40.0;
    center[k] = 0.5 * (lo + hi);
  }
  for (std::size_t k = 0; k < names.size(); ++k) {
    if (!open[k]) continue;
    for (double direction : {-1.0, 1.0}) {
      const double edge = direction < 0.0 ? limits[k].first : limits[k].second;
      if (std::isfinite(edge)) continue;
      std::vector<double> probe = center;
      probe[k] = direction * 40.0;
      const double near = std::log(bias_target(kind, e_hat, probe));
      probe[k] = direction * 80.0;
      const double far = std::log(bias_target(kind, e_hat, probe));
      if (std::fabs(far - near) > 0.5) unbounded = true;
    }
    limits[k].first = std::isfinite(limits[k].first) ? limits[k].first : -40.0;
    limits[k].second = std::isfinite(limits[k].second) ? limits[k].second : 40.0;
  }

  // Corner starts plus the center.
  std::vector<std::vector<double>> starts;
  const std::size_t k = names.size();
  for (std::size_t corner = 0; corner < (std::size_t{1} << k); ++corner) {
    std::vector<double> p(k);
    for (std::size_t i = 0; i < k; ++i) {
      p[i] = (corner >> i) & 1 ? limits[i].second : limits[i].first;
    }
    starts.push_back(std::move(p));
  }
  std::vector<double> mid(k);
  for (std::size_t i = 0; i < k; ++i) mid[i] = 0.5 * (limits[i].first + limits[i].second);
  starts.push_back(mid);

  double log_lo = std::numeric_limits<double>::infinity();
  double log_hi = -std::numeric_limits<double>::infinity();
  for (const auto& start : starts) {
    log_hi = std::max(log_hi, coordinate_refine(kind, e_hat, limits, start, +1.0));
    log_lo = std::min(log_lo, coordinate_refine(kind, e_hat, limits, start, -1.0));
  }

  IgnoranceInterval out;
  out.lo = std::exp(log_lo);
  out.hi = std::exp(log_hi);
  out.unbounded = unbounded;
  return out;
}

}  // namespace biasrelax
