#include "biasrelax/report.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace biasrelax {

using nlohmann::json;

namespace {

json interval_to_json(const IntervalEstimate& e) {
  json j;
  j["label"] = e.label;
  j["estimate"] = e.estimate;
  j["lo"] = e.lo;
  j["hi"] = e.hi;
  if (e.se_log) j["se_log"] = *e.se_log;
  return j;
}

json fit_block_to_json(const FitBlock& b) {
  json j;
  j["label"] = b.label;
  j["or"] = interval_to_json(b.or_estimate);
  j["beta"] = b.beta;
  j["beta_se"] = b.beta_se;
  j["convergence"] = {{"iterations", b.iterations},
                      {"grad_max_norm", b.grad_max_norm},
                      {"kinked", b.kinked}};
  j["frame"] = b.frame;
  return j;
}

json summary_to_json(const DrawSummary& s) {
  json j;
  j["median"] = s.median;
  json pct = json::array();
  for (const auto& [level, value] : s.percentiles) {
    pct.push_back({{"level", level}, {"value", value}});
  }
  j["percentiles"] = pct;
  j["mean_log"] = s.mean_log;
  j["var_log"] = s.var_log;
  if (s.variance_ratio) {
    j["variance_ratio"] = *s.variance_ratio;
  } else {
    j["variance_ratio"] = nullptr;
  }
  if (!s.variance_flag.empty()) j["variance_flag"] = s.variance_flag;
  j["n_total"] = s.n_total;
  j["n_used"] = s.n_used;
  j["n_dropped"] = s.n_dropped;
  return j;
}

void dump_value(const json& j, std::string& out, int indent, int depth);

void dump_indent(std::string& out, int indent, int depth) {
  if (indent > 0) {
    out += '\n';
    out.append(static_cast<std::size_t>(indent * depth), ' ');
  }
}

void dump_number(const json& j, std::string& out) {
  if (j.is_number_float()) {
    const double v = j.get<double>();
    if (!std::isfinite(v)) {
      out += "null";
      return;
    }
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out += buf;
    return;
  }
  if (j.is_number_unsigned()) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%" PRIu64, j.get<std::uint64_t>());
    out += buf;
    return;
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%" PRId64, j.get<std::int64_t>());
  out += buf;
}

void dump_value(const json& j, std::string& out, int indent, int depth) {
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ',';
        first = false;
        dump_indent(out, indent, depth + 1);
        out += json(it.key()).dump();
        out += indent > 0 ? ": " : ":";
        dump_value(it.value(), out, indent, depth + 1);
      }
      dump_indent(out, indent, depth);
      out += '}';
      return;
    }
    case json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += '[';
      bool first = true;
      for (const auto& v : j) {
        if (!first) out += ',';
        first = false;
        dump_indent(out, indent, depth + 1);
        dump_value(v, out, indent, depth + 1);
      }
      dump_indent(out, indent, depth);
      out += ']';
      return;
    }
    case json::value_t::string:
      out += j.dump();
      return;
    case json::value_t::boolean:
      out += j.get<bool>() ? "true" : "false";
      return;
    case json::value_t::null:
      out += "null";
      return;
    default:
      dump_number(j, out);
      return;
  }
}

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

std::string interval_line(const IntervalEstimate& e) {
  std::string line = fmt("%8.2f", e.estimate) + "  (" + fmt("%.2f", e.lo) + ", " +
                     fmt("%.2f", e.hi) + ")";
  if (e.se_log) line += "   se(ln) " + fmt("%.3f", *e.se_log);
  return line;
}

}  // namespace

json report_to_json(const AnalysisReport& report) {
  json j;
  j["analysis"] = report.kind;
  if (report.conventional) j["conventional"] = interval_to_json(*report.conventional);
  if (report.semi_bayes) j["semi_bayes"] = fit_block_to_json(*report.semi_bayes);
  if (report.penalized) j["penalized"] = fit_block_to_json(*report.penalized);
  if (report.ml) j["ml"] = fit_block_to_json(*report.ml);
  if (report.closed_form) {
    const auto& cf = *report.closed_form;
    j["closed_form"] = {
        {"pi_hat",
         {{"x1y1", cf.pi_hat.at(1, 1)},
          {"x0y1", cf.pi_hat.at(0, 1)},
          {"x1y0", cf.pi_hat.at(1, 0)},
          {"x0y0", cf.pi_hat.at(0, 0)}}},
        {"imputed_ty",
         {{"t1y1", cf.imputed_ty.n11},
          {"t1y0", cf.imputed_ty.n10},
          {"t0y1", cf.imputed_ty.n01},
          {"t0y0", cf.imputed_ty.n00}}},
        {"or_ty", cf.or_ty}};
  }
  if (report.closed_form_ml_rel_gap) {
    j["closed_form_ml_rel_gap"] = *report.closed_form_ml_rel_gap;
  }
  if (report.sampler) {
    const auto& s = *report.sampler;
    j["sampler"] = {{"identified_mode", s.identified_mode},
                    {"dirichlet_prior", s.dirichlet_prior},
                    {"draws", s.draws},
                    {"seed", s.seed},
                    {"chunk", s.chunk},
                    {"threads", s.threads},
                    {"summary", summary_to_json(s.summary)}};
  }
  json priors = json::array();
  for (const auto& p : report.priors) {
    json jp;
    jp["coefficient"] = p.coefficient;
    jp["description"] = p.description;
    jp["scale"] = p.scale;
    jp["lo95"] = p.lo95;
    jp["hi95"] = p.hi95;
    if (p.data_prior) {
      jp["data_prior"] = {{"successes", p.data_prior->successes},
                          {"trials", p.data_prior->trials},
                          {"offset", p.data_prior->offset}};
    }
    if (p.effective_n) jp["effective_n"] = *p.effective_n;
    if (p.warning) jp["warning"] = *p.warning;
    priors.push_back(jp);
  }
  j["priors"] = priors;
  j["notes"] = report.notes;
  j["provenance"] = {{"seed", report.provenance.seed},
                     {"draws", report.provenance.draws},
                     {"config_digest", report.provenance.config_digest}};
  return j;
}

std::string dump_json(const json& j, int indent) {
  std::string out;
  dump_value(j, out, indent, 0);
  out += '\n';
  return out;
}

std::string render_text(const AnalysisReport& report) {
  std::ostringstream os;
  os << "analysis: " << report.kind << "\n";
  os << std::string(60, '-') << "\n";
  auto block_line = [&](const std::string& label, const IntervalEstimate& e) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%-44s", label.c_str());
    os << buf << interval_line(e) << "\n";
  };
  if (report.conventional) {
    block_line("conventional " + report.conventional->label, *report.conventional);
  }
  if (report.semi_bayes) {
    block_line(report.semi_bayes->label + " " + report.semi_bayes->or_estimate.label,
               report.semi_bayes->or_estimate);
  }
  if (report.ml) {
    block_line(report.ml->label + " " + report.ml->or_estimate.label,
               report.ml->or_estimate);
  }
  if (report.penalized) {
    block_line(report.penalized->label + " " + report.penalized->or_estimate.label,
               report.penalized->or_estimate);
  }
  if (report.closed_form) {
    const auto& cf = *report.closed_form;
    os << "closed-form validation\n";
    os << "  pi_hat (x1y1 x0y1 x1y0 x0y0)    " << fmt("%.3f", cf.pi_hat.at(1, 1)) << " "
       << fmt("%.3f", cf.pi_hat.at(0, 1)) << " " << fmt("%.3f", cf.pi_hat.at(1, 0)) << " "
       << fmt("%.3f", cf.pi_hat.at(0, 0)) << "\n";
    os << "  imputed TY (t1y1 t1y0 t0y1 t0y0) " << fmt("%.2f", cf.imputed_ty.n11) << " "
       << fmt("%.2f", cf.imputed_ty.n10) << " " << fmt("%.2f", cf.imputed_ty.n01) << " "
       << fmt("%.2f", cf.imputed_ty.n00) << "\n";
    os << "  OR_TY                            " << fmt("%.2f", cf.or_ty) << "\n";
  }
  if (report.sampler) {
    const auto& s = *report.sampler;
    os << "sampler: " << s.identified_mode << ", " << s.draws << " draws, seed " << s.seed
       << ", threads " << s.threads << "\n";
    os << "  median " << fmt("%.2f", s.summary.median) << "\n";
    os << "  percentiles ";
    for (const auto& [level, value] : s.summary.percentiles) {
      os << fmt("%.3g", 100.0 * level) << "%: " << fmt("%.2f", value) << "  ";
    }
    os << "\n";
    if (s.summary.variance_ratio) {
      os << "  variance ratio (crude ln OR / ln target) "
         << fmt("%.1f", 100.0 * *s.summary.variance_ratio) << "%\n";
    } else if (!s.summary.variance_flag.empty()) {
      os << "  variance ratio unavailable: " << s.summary.variance_flag << "\n";
    }
    if (s.summary.n_dropped > 0) {
      os << "  dropped draws " << s.summary.n_dropped << " of " << s.summary.n_total << "\n";
    }
  }
  if (!report.priors.empty()) {
    os << "priors\n";
    for (const auto& p : report.priors) {
      char buf[16];
      std::snprintf(buf, sizeof buf, "%-5s", p.coefficient.c_str());
      os << "  " << buf << p.description << "   95% " << p.scale << " ("
         << fmt("%.3g", p.lo95) << ", " << fmt("%.3g", p.hi95) << ")";
      if (p.effective_n) os << "   n=" << fmt("%.6g", *p.effective_n);
      if (p.data_prior) os << " b=" << fmt("%.6g", p.data_prior->successes);
      os << "\n";
      if (p.warning) os << "        warning: " << *p.warning << "\n";
    }
  }
  for (const auto& note : report.notes) {
    os << "note: " << note << "\n";
  }
  os << "provenance: seed " << report.provenance.seed << ", draws "
     << report.provenance.draws << ", config " << report.provenance.config_digest << "\n";
  return os.str();
}

std::string draws_to_csv(const DrawSet& draws) {
  std::string out = "draw_index,target";
  for (const auto& name : draws.bias_names) {
    out += ',';
    out += name;
  }
  out += '\n';
  char buf[40];
  for (std::size_t i = 0; i < draws.target.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu", i);
    out += buf;
    std::snprintf(buf, sizeof buf, ",%.17g", draws.target[i]);
    out += buf;
    for (const auto& column : draws.bias) {
      std::snprintf(buf, sizeof buf, ",%.17g", column[i]);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

}  // namespace biasrelax
