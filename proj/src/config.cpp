#include "biasrelax/config.hpp"

#include <algorithm>
#include <cstdint>
#include <set>

#include "biasrelax/errors.hpp"
#include "biasrelax/report.hpp"

namespace biasrelax {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError("config: " + path + ": " + what);
}

const json& expect_object(const json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
  return j;
}

void reject_unknown_keys(const json& j, const std::set<std::string>& known,
                         const std::string& path) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!known.count(it.key())) fail(path + "." + it.key(), "unknown key");
  }
}

double get_number(const json& j, const std::string& key, const std::string& path,
                  double fallback, bool required = false) {
  if (!j.contains(key)) {
    if (required) fail(path + "." + key, "missing required number");
    return fallback;
  }
  if (!j.at(key).is_number()) fail(path + "." + key, "expected a number");
  return j.at(key).get<double>();
}

std::int64_t get_integer(const json& j, const std::string& key, const std::string& path,
                         std::int64_t fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number_integer() && !j.at(key).is_number_unsigned()) {
    fail(path + "." + key, "expected an integer");
  }
  return j.at(key).get<std::int64_t>();
}

std::string get_string(const json& j, const std::string& key, const std::string& path,
                       const std::string& fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_string()) fail(path + "." + key, "expected a string");
  return j.at(key).get<std::string>();
}

PriorSpec parse_prior(const json& j, const std::string& path) {
  expect_object(j, path);
  const std::string dist = get_string(j, "dist", path, "");
  if (dist == "flat") {
    reject_unknown_keys(j, {"dist"}, path);
    return PriorSpec::flat();
  }
  if (dist == "normal") {
    reject_unknown_keys(j, {"dist", "mean", "variance"}, path);
    return PriorSpec::normal(get_number(j, "mean", path, 0.0, true),
                             get_number(j, "variance", path, 0.0, true));
  }
  if (dist == "laplace") {
    reject_unknown_keys(j, {"dist", "mean", "scale"}, path);
    return PriorSpec::laplace(get_number(j, "mean", path, 0.0, true),
                              get_number(j, "scale", path, 0.0, true));
  }
  if (dist == "logf") {
    reject_unknown_keys(j, {"dist", "m", "s", "r", "n"}, path);
    return PriorSpec::log_f(
        get_number(j, "m", path, 0.0, true), get_number(j, "s", path, 0.0, true),
        get_number(j, "r", path, 0.0, true), get_number(j, "n", path, 0.0, true));
  }
  fail(path + ".dist", "expected one of flat, normal, laplace, logf");
}

StratifiedCountTable parse_table(const json& j, const std::string& path) {
  expect_object(j, path);
  reject_unknown_keys(j, {"axes", "cells"}, path);
  if (!j.contains("axes") || !j.at("axes").is_array()) {
    fail(path + ".axes", "expected an array of axis names");
  }
  std::vector<std::string> axes;
  for (const auto& a : j.at("axes")) {
    if (!a.is_string()) fail(path + ".axes", "axis names must be strings");
    axes.push_back(a.get<std::string>());
  }
  if (!j.contains("cells") || !j.at("cells").is_array()) {
    fail(path + ".cells", "expected an array of cells");
  }
  std::vector<RawCell> cells;
  std::size_t index = 0;
  for (const auto& cj : j.at("cells")) {
    const std::string cpath = path + ".cells[" + std::to_string(index++) + "]";
    expect_object(cj, cpath);
    RawCell cell;
    bool have_n = false;
    for (auto it = cj.begin(); it != cj.end(); ++it) {
      if (it.key() == "n") {
        if (!it.value().is_number()) fail(cpath + ".n", "expected a number");
        cell.count = it.value().get<double>();
        have_n = true;
        continue;
      }
      if (std::find(axes.begin(), axes.end(), it.key()) == axes.end()) {
        fail(cpath + "." + it.key(), "unknown key (not an axis, not 'n')");
      }
      if (!it.value().is_number_integer() && !it.value().is_number_unsigned()) {
        fail(cpath + "." + it.key(), "axis level must be 0 or 1");
      }
      cell.levels[it.key()] = it.value().get<int>();
    }
    if (!have_n) fail(cpath, "missing count 'n'");
    cells.push_back(std::move(cell));
  }
  try {
    return StratifiedCountTable::from_cells(axes, cells);
  } catch (const DataError& e) {
    fail(path, e.what());
  }
}

const std::set<std::string> kAnalyses = {"conventional", "misclassification", "validation",
                                         "confounder",   "selection",         "prior-check"};

}  // namespace

RunConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: not valid JSON: ") + e.what());
  }
  expect_object(j, "$");
  reject_unknown_keys(
      j, {"analysis", "frame", "selection_mode", "table", "priors", "sampling", "output",
          "fit"},
      "$");

  RunConfig config;
  config.analysis = get_string(j, "analysis", "$", "");
  if (!kAnalyses.count(config.analysis)) {
    fail("$.analysis", "expected one of conventional, misclassification, validation, "
                       "confounder, selection, prior-check");
  }

  const std::string frame = get_string(j, "frame", "$", "poisson");
  if (frame == "poisson") {
    config.frame = Frame::Poisson;
  } else if (frame == "multinomial") {
    config.frame = Frame::MultinomialGivenY;
  } else {
    fail("$.frame", "expected poisson or multinomial");
  }

  const std::string mode = get_string(j, "selection_mode", "$", "density");
  if (mode == "density") {
    config.selection_mode = SelectionMode::Density;
  } else if (mode == "stratum") {
    config.selection_mode = SelectionMode::Stratum;
  } else {
    fail("$.selection_mode", "expected density or stratum");
  }

  if (j.contains("table")) config.table = parse_table(j.at("table"), "$.table");
  if (config.analysis != "prior-check" && !config.table) {
    fail("$.table", "required for analysis '" + config.analysis + "'");
  }

  if (j.contains("priors")) {
    expect_object(j.at("priors"), "$.priors");
    for (auto it = j.at("priors").begin(); it != j.at("priors").end(); ++it) {
      const PriorSpec spec = parse_prior(it.value(), "$.priors." + it.key());
      if (spec.proper() && (it.key() == "0" || it.key() == "Y")) {
        fail("$.priors." + it.key(),
             "the case-control design fixes the intercept and the Y coefficient, so "
             "they carry no prior");
      }
      config.priors[it.key()] = spec;
    }
  }

  if (j.contains("sampling")) {
    const json& s = expect_object(j.at("sampling"), "$.sampling");
    reject_unknown_keys(
        s, {"draws", "seed", "identified_mode", "dirichlet_prior", "chunk", "threads"},
        "$.sampling");
    config.sampling.draws = get_integer(s, "draws", "$.sampling", config.sampling.draws);
    if (config.sampling.draws < 1) fail("$.sampling.draws", "must be >= 1");
    const std::int64_t seed = get_integer(s, "seed", "$.sampling", 1);
    if (seed < 0) fail("$.sampling.seed", "must be >= 0");
    config.sampling.seed = static_cast<std::uint64_t>(seed);
    const std::string im = get_string(s, "identified_mode", "$.sampling", "dirichlet");
    if (im == "dirichlet") {
      config.sampling.identified_mode = IdentifiedMode::Dirichlet;
    } else if (im == "bootstrap") {
      config.sampling.identified_mode = IdentifiedMode::Bootstrap;
    } else {
      fail("$.sampling.identified_mode", "expected dirichlet or bootstrap");
    }
    config.sampling.dirichlet_prior =
        get_number(s, "dirichlet_prior", "$.sampling", config.sampling.dirichlet_prior);
    if (config.sampling.dirichlet_prior < 0.0) {
      fail("$.sampling.dirichlet_prior", "must be >= 0");
    }
    config.sampling.chunk = get_integer(s, "chunk", "$.sampling", config.sampling.chunk);
    if (config.sampling.chunk < 1) fail("$.sampling.chunk", "must be >= 1");
    config.sampling.threads =
        static_cast<int>(get_integer(s, "threads", "$.sampling", config.sampling.threads));
    if (config.sampling.threads < 1) fail("$.sampling.threads", "must be >= 1");
  } else {
    config.sampling.seed = 1;
  }

  if (j.contains("fit")) {
    const json& f = expect_object(j.at("fit"), "$.fit");
    reject_unknown_keys(f, {"grad_tol", "step_tol", "max_iter"}, "$.fit");
    config.fit.grad_tol = get_number(f, "grad_tol", "$.fit", config.fit.grad_tol);
    if (!(config.fit.grad_tol > 0.0)) fail("$.fit.grad_tol", "must be positive");
    config.fit.step_tol = get_number(f, "step_tol", "$.fit", config.fit.step_tol);
    if (!(config.fit.step_tol > 0.0)) fail("$.fit.step_tol", "must be positive");
    config.fit.max_iter =
        static_cast<int>(get_integer(f, "max_iter", "$.fit", config.fit.max_iter));
    if (config.fit.max_iter < 1) fail("$.fit.max_iter", "must be >= 1");
  }

  if (j.contains("output")) {
    const json& o = expect_object(j.at("output"), "$.output");
    reject_unknown_keys(o, {"levels", "report_path", "draws_csv_path"}, "$.output");
    if (o.contains("levels")) {
      if (!o.at("levels").is_array()) fail("$.output.levels", "expected an array");
      std::vector<double> levels;
      for (const auto& lv : o.at("levels")) {
        if (!lv.is_number()) fail("$.output.levels", "levels must be numbers");
        const double v = lv.get<double>();
        if (!(v > 0.0 && v < 1.0)) fail("$.output.levels", "levels must lie in (0,1)");
        levels.push_back(v);
      }
      if (!std::is_sorted(levels.begin(), levels.end())) {
        fail("$.output.levels", "levels must be sorted ascending");
      }
      config.output.levels = levels;
    }
    config.output.report_path = get_string(o, "report_path", "$.output", "");
    config.output.draws_csv_path = get_string(o, "draws_csv_path", "$.output", "");
  }
  return config;
}

json config_to_json(const RunConfig& config) {
  json j;
  j["analysis"] = config.analysis;
  j["frame"] = config.frame == Frame::Poisson ? "poisson" : "multinomial";
  j["selection_mode"] =
      config.selection_mode == SelectionMode::Density ? "density" : "stratum";
  if (config.table) {
    json cells = json::array();
    for (const auto& group : config.table->groups()) {
      for (std::size_t idx = 0; idx < group.counts.size(); ++idx) {
        json cell;
        for (std::size_t i = 0; i < group.observed.size(); ++i) {
          cell[group.observed[i]] = static_cast<int>((idx >> i) & 1);
        }
        cell["n"] = group.counts[idx];
        cells.push_back(cell);
      }
    }
    j["table"] = {{"axes", config.table->axes()}, {"cells", cells}};
  }
  json priors = json::object();
  for (const auto& [name, spec] : config.priors) {
    json p;
    switch (spec.kind) {
      case PriorKind::Flat:
        p = {{"dist", "flat"}};
        break;
      case PriorKind::Normal:
        p = {{"dist", "normal"}, {"mean", spec.mean}, {"variance", spec.variance}};
        break;
      case PriorKind::Laplace:
        p = {{"dist", "laplace"}, {"mean", spec.mean}, {"scale", spec.scale}};
        break;
      case PriorKind::LogF:
        p = {{"dist", "logf"}, {"m", spec.m}, {"s", spec.s}, {"r", spec.r}, {"n", spec.n}};
        break;
    }
    priors[name] = p;
  }
  j["priors"] = priors;
  j["sampling"] = {
      {"draws", config.sampling.draws},
      {"seed", config.sampling.seed},
      {"identified_mode",
       config.sampling.identified_mode == IdentifiedMode::Dirichlet ? "dirichlet"
                                                                    : "bootstrap"},
      {"dirichlet_prior", config.sampling.dirichlet_prior},
      {"chunk", config.sampling.chunk},
      {"threads", config.sampling.threads}};
  j["output"] = {{"levels", config.output.levels},
                 {"report_path", config.output.report_path},
                 {"draws_csv_path", config.output.draws_csv_path}};
  j["fit"] = {{"grad_tol", config.fit.grad_tol},
              {"step_tol", config.fit.step_tol},
              {"max_iter", config.fit.max_iter}};
  return j;
}

std::string config_digest(const RunConfig& config) {
  const std::string text = dump_json(config_to_json(config), 0);
  std::uint64_t hash = 0xCBF29CE484222325ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001B3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

AnalysisReport prior_check(const RunConfig& config) {
  AnalysisReport report;
  report.kind = "prior-check";
  report.provenance.seed = config.sampling.seed;
  report.provenance.draws = 0;
  report.provenance.config_digest = config_digest(config);
  bool any = false;
  for (const auto& [name, spec] : config.priors) {
    (void)name;
    if (spec.proper()) any = true;
  }
  if (!any) throw ConfigError("prior-check: no proper priors to gauge");
  for (const auto& [name, spec] : config.priors) {
    if (!spec.proper()) continue;
    PriorEcho echo;
    echo.coefficient = name;
    echo.description = spec.describe();
    echo.scale = name.size() == 1 ? "expit" : "exp";
    const auto [lo, hi] = prior_interval(
        spec, 0.95, echo.scale == "expit" ? ReportScale::Expit : ReportScale::Exp);
    echo.lo95 = lo;
    echo.hi95 = hi;
    if (spec.kind == PriorKind::Normal) {
      echo.data_prior = to_data_prior(spec, name);
      echo.effective_n = 4.0 / spec.variance;
      if (spec.variance >= 4.0) {
        echo.warning = "prior variance " + std::to_string(spec.variance) +
                       " is near-noninformative; the target is then close to nonidentified";
      }
    }
    report.priors.push_back(echo);
  }
  return report;
}

AnalysisReport run(const RunConfig& config) {
  WorkflowConfig wf;
  wf.sampling = config.sampling;
  wf.levels = config.output.levels;
  wf.frame = config.frame;
  wf.fit = config.fit;

  AnalysisReport report;
  if (config.analysis == "prior-check") {
    report = prior_check(config);
  } else if (config.analysis == "conventional") {
    report = run_conventional(*config.table, config.priors, wf);
  } else if (config.analysis == "misclassification") {
    report = run_misclassification(*config.table, config.priors, wf);
  } else if (config.analysis == "validation") {
    report = run_validation(*config.table, config.priors, wf);
  } else if (config.analysis == "confounder") {
    report = run_confounder(*config.table, config.priors, wf);
  } else if (config.analysis == "selection") {
    report = run_selection(*config.table, config.priors, config.selection_mode, wf);
  } else {
    throw ConfigError("run: unknown analysis '" + config.analysis + "'");
  }
  report.provenance.config_digest = config_digest(config);
  return report;
}

const char* const kConfigSchemaJson = R"SCHEMA({
  "$schema": "http://json-schema.org/draft-07/schema#",
  "title": "biasrelax run configuration",
  "type": "object",
  "additionalProperties": false,
  "required": ["analysis"],
  "properties": {
    "analysis": {
      "enum": ["conventional", "misclassification", "validation", "confounder",
               "selection", "prior-check"]
    },
    "frame": {"enum": ["poisson", "multinomial"]},
    "selection_mode": {"enum": ["density", "stratum"]},
    "table": {
      "type": "object",
      "additionalProperties": false,
      "required": ["axes", "cells"],
      "properties": {
        "axes": {"type": "array", "items": {"enum": ["T", "W", "X", "S", "Y"]}},
        "cells": {
          "type": "array",
          "items": {
            "type": "object",
            "description": "axis levels (0/1) under the axis names plus the count under 'n'; omit an axis to mark it latent for the record group"
          }
        }
      }
    },
    "priors": {
      "type": "object",
      "description": "coefficient name -> prior; '0' and 'Y' may not carry priors",
      "additionalProperties": {
        "type": "object",
        "properties": {
          "dist": {"enum": ["flat", "normal", "laplace", "logf"]},
          "mean": {"type": "number"},
          "variance": {"type": "number"},
          "scale": {"type": "number"},
          "m": {"type": "number"},
          "s": {"type": "number"},
          "r": {"type": "number"},
          "n": {"type": "number"}
        },
        "required": ["dist"]
      }
    },
    "sampling": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "draws": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0},
        "identified_mode": {"enum": ["dirichlet", "bootstrap"]},
        "dirichlet_prior": {"type": "number", "minimum": 0},
        "chunk": {"type": "integer", "minimum": 1},
        "threads": {"type": "integer", "minimum": 1}
      }
    },
    "fit": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "grad_tol": {"type": "number", "exclusiveMinimum": 0},
        "step_tol": {"type": "number", "exclusiveMinimum": 0},
        "max_iter": {"type": "integer", "minimum": 1}
      }
    },
    "output": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "levels": {
          "type": "array",
          "items": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}
        },
        "report_path": {"type": "string"},
        "draws_csv_path": {"type": "string"}
      }
    }
  }
}
)SCHEMA";

}  // namespace biasrelax
