#include "biasrelax/priors.hpp"

#include <cmath>
#include <sstream>

#include "biasrelax/errors.hpp"
#include "biasrelax/numerics.hpp"

namespace biasrelax {

PriorSpec PriorSpec::flat() { return PriorSpec{}; }

PriorSpec PriorSpec::normal(double mean, double variance) {
  if (!(variance > 0.0)) throw ConfigError("normal prior: variance must be positive");
  PriorSpec p;
  p.kind = PriorKind::Normal;
  p.mean = mean;
  p.variance = variance;
  return p;
}

PriorSpec PriorSpec::laplace(double mean, double scale) {
  if (!(scale > 0.0)) throw ConfigError("laplace prior: scale must be positive");
  PriorSpec p;
  p.kind = PriorKind::Laplace;
  p.mean = mean;
  p.scale = scale;
  return p;
}

PriorSpec PriorSpec::log_f(double m, double s, double r, double n) {
  if (!(s > 0.0)) throw ConfigError("log-F prior: scale s must be positive");
  if (!(r > 0.0 && r < 1.0)) throw ConfigError("log-F prior: skew r must lie in (0,1)");
  if (!(n > 0.0)) throw ConfigError("log-F prior: weight n must be positive");
  PriorSpec p;
  p.kind = PriorKind::LogF;
  p.m = m;
  p.s = s;
  p.r = r;
  p.n = n;
  return p;
}

double PriorSpec::mode() const {
  switch (kind) {
    case PriorKind::Normal:
    case PriorKind::Laplace:
      return mean;
    case PriorKind::LogF:
      // Density maximal at z = logit(r).
      return m + (s - 1.0) * logit(r);
    case PriorKind::Flat:
      return 0.0;
  }
  return 0.0;
}

double PriorSpec::penalty(double beta) const {
  switch (kind) {
    case PriorKind::Flat:
      return 0.0;
    case PriorKind::Normal: {
      const double d = beta - mean;
      return d * d / variance;
    }
    case PriorKind::Laplace:
      return 2.0 * std::fabs(beta - mean) / scale;
    case PriorKind::LogF: {
      const double z = (beta + logit(r) - m) / s;
      const double lh = n * (r * z - log1pexp(z));
      const double lh_max = n * (r * logit(r) + std::log1p(-r));
      return -2.0 * (lh - lh_max);
    }
  }
  return 0.0;
}

double PriorSpec::penalty_gradient(double beta) const {
  switch (kind) {
    case PriorKind::Flat:
      return 0.0;
    case PriorKind::Normal:
      return 2.0 * (beta - mean) / variance;
    case PriorKind::Laplace: {
      const double d = beta - mean;
      if (d == 0.0) return 0.0;
      return 2.0 * (d > 0.0 ? 1.0 : -1.0) / scale;
    }
    case PriorKind::LogF: {
      const double z = (beta + logit(r) - m) / s;
      return -2.0 * n * (r - expit(z)) / s;
    }
  }
  return 0.0;
}

double PriorSpec::sample(RngStream& rng) const {
  switch (kind) {
    case PriorKind::Flat:
      throw SamplingError("sample_prior: flat priors cannot be sampled");
    case PriorKind::Normal:
      return mean + std::sqrt(variance) * rng.normal();
    case PriorKind::Laplace: {
      const double e = rng.exponential();
      return mean + (rng.uniform() < 0.5 ? -scale * e : scale * e);
    }
    case PriorKind::LogF: {
      // z = ln(G1/G2) with G1 ~ Gamma(nr), G2 ~ Gamma(n(1-r)) has density
      // proportional to e^{znr}/(1+e^z)^n; equivalent to the F(2nr, 2n(1-r))
      // transform z = ln(rU/(1-r)).
      const double g1 = rng.gamma(n * r);
      const double g2 = rng.gamma(n * (1.0 - r));
      const double z = std::log(g1) - std::log(g2);
      return m - logit(r) + s * z;
    }
  }
  return 0.0;
}

std::pair<double, double> PriorSpec::interval(double level) const {
  if (!(level > 0.0 && level < 1.0)) {
    throw ConfigError("prior_interval: level must lie in (0,1)");
  }
  const double plo = 0.5 * (1.0 - level);
  const double phi = 1.0 - plo;
  switch (kind) {
    case PriorKind::Flat:
      throw ConfigError("prior_interval: flat prior has no interval");
    case PriorKind::Normal: {
      const double sd = std::sqrt(variance);
      return {mean + sd * normal_quantile(plo), mean + sd * normal_quantile(phi)};
    }
    case PriorKind::Laplace: {
      auto q = [&](double p) {
        return p < 0.5 ? mean + scale * std::log(2.0 * p)
                       : mean - scale * std::log(2.0 * (1.0 - p));
      };
      return {q(plo), q(phi)};
    }
    case PriorKind::LogF: {
      auto q = [&](double p) {
        const double f = f_quantile(2.0 * n * r, 2.0 * n * (1.0 - r), p);
        return m - logit(r) + s * std::log(r * f / (1.0 - r));
      };
      return {q(plo), q(phi)};
    }
  }
  return {0.0, 0.0};
}

std::string PriorSpec::describe() const {
  std::ostringstream os;
  switch (kind) {
    case PriorKind::Flat:
      os << "flat";
      break;
    case PriorKind::Normal:
      os << "normal(mean=" << mean << ", variance=" << variance << ")";
      break;
    case PriorKind::Laplace:
      os << "laplace(mean=" << mean << ", scale=" << scale << ")";
      break;
    case PriorKind::LogF:
      os << "log-F(m=" << m << ", s=" << s << ", r=" << r << ", n=" << n << ")";
      break;
  }
  return os.str();
}

std::pair<double, double> prior_interval(const PriorSpec& p, double level, ReportScale scale) {
  auto [lo, hi] = p.interval(level);
  switch (scale) {
    case ReportScale::Identity:
      return {lo, hi};
    case ReportScale::Exp:
      return {std::exp(lo), std::exp(hi)};
    case ReportScale::Expit:
      return {expit(lo), expit(hi)};
  }
  return {lo, hi};
}

DataPriorRecord to_data_prior(const PriorSpec& p, const std::string& target) {
  if (p.kind != PriorKind::Normal) {
    throw ConfigError("to_data_prior: only normal priors have a binomial record translation");
  }
  DataPriorRecord rec;
  rec.successes = 2.0 / p.variance;
  rec.trials = 4.0 / p.variance;
  rec.offset = -p.mean;
  rec.target = target;
  return rec;
}

double data_prior_loglik(const DataPriorRecord& rec, double beta) {
  const double u = beta + rec.offset;
  return rec.successes * u - rec.trials * log1pexp(u);
}

double logf_density(const PriorSpec& p, double theta) {
  if (p.kind != PriorKind::LogF) {
    throw ConfigError("logf_density: prior is not log-F");
  }
  const double z = (theta + logit(p.r) - p.m) / p.s;
  return std::exp(p.n * (p.r * z - log1pexp(z)));
}

PriorPanel PriorPanel::for_coefficients(const std::vector<std::string>& names,
                                        const std::map<std::string, PriorSpec>& specs) {
  for (const auto& [name, spec] : specs) {
    (void)spec;
    bool known = false;
    for (const auto& n : names) {
      if (n == name) {
        known = true;
        break;
      }
    }
    if (!known) throw ConfigError("prior panel: no model coefficient named '" + name + "'");
  }
  PriorPanel panel;
  for (const auto& n : names) {
    const auto it = specs.find(n);
    panel.entries_.emplace_back(n, it == specs.end() ? PriorSpec::flat() : it->second);
  }
  return panel;
}

bool PriorPanel::has(const std::string& name) const {
  for (const auto& [n, s] : entries_) {
    (void)s;
    if (n == name) return true;
  }
  return false;
}

const PriorSpec& PriorPanel::at(const std::string& name) const {
  for (const auto& [n, s] : entries_) {
    if (n == name) return s;
  }
  throw ConfigError("prior panel: no entry for coefficient '" + name + "'");
}

std::vector<std::string> PriorPanel::proper_names() const {
  std::vector<std::string> out;
  for (const auto& [n, s] : entries_) {
    if (s.proper()) out.push_back(n);
  }
  return out;
}

double penalty(const PriorPanel& panel, const std::map<std::string, double>& beta) {
  double total = 0.0;
  for (const auto& [name, spec] : panel.entries()) {
    if (!spec.proper()) continue;
    const auto it = beta.find(name);
    if (it == beta.end()) {
      throw DataError("penalty: coefficient '" + name + "' missing from beta");
    }
    total += spec.penalty(it->second);
  }
  return total;
}

}  // namespace biasrelax
