#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "biasrelax/fit.hpp"
#include "biasrelax/priors.hpp"
#include "biasrelax/tables.hpp"
#include "biasrelax/workflows.hpp"

namespace biasrelax {

struct OutputConfig {
  std::vector<double> levels = {0.025, 0.25, 0.5, 0.75, 0.975};
  std::string report_path;
  std::string draws_csv_path;
};

struct RunConfig {
  std::string analysis;
  std::optional<StratifiedCountTable> table;
  std::map<std::string, PriorSpec> priors;
  SamplerConfig sampling;
  OutputConfig output;
  Frame frame = Frame::Poisson;
  SelectionMode selection_mode = SelectionMode::Density;
  FitOptions fit;
};

// Strict parse: unknown keys are rejected with a path-qualified message;
// priors on the design coefficients "0" and "Y" are rejected because the
// case-control design fixes them.
RunConfig parse_config(const std::string& text);

// Canonical JSON form with defaults materialized; parse(dump(...)) is the
// identity on RunConfig.
nlohmann::json config_to_json(const RunConfig& config);

// FNV-1a 64 over the canonical serialized config, as a hex string.
std::string config_digest(const RunConfig& config);

// Dispatches to the workflow for config.analysis (including "prior-check",
// which touches no data) and stamps provenance.
AnalysisReport run(const RunConfig& config);

// Prior gauges only: implied 95% limits, data-prior records, effective
// trial counts. Errors when no proper prior is present.
AnalysisReport prior_check(const RunConfig& config);

// The machine-readable config schema (also shipped at share/config.schema.json).
extern const char* const kConfigSchemaJson;

}  // namespace biasrelax
