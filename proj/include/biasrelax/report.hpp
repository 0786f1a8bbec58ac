#pragma once

#include <string>

#include "json.hpp"

#include "biasrelax/mc.hpp"
#include "biasrelax/workflows.hpp"

namespace biasrelax {

nlohmann::json report_to_json(const AnalysisReport& report);

// JSON text with every floating-point number printed at 17 significant
// digits (round-trip exact) and object keys in sorted order, so identical
// inputs give byte-identical output.
std::string dump_json(const nlohmann::json& j, int indent = 2);

// Human-readable rendering, rounded to display precision.
std::string render_text(const AnalysisReport& report);

// CSV export: header draw_index,target,<bias coefficients>, rows in draw order.
std::string draws_to_csv(const DrawSet& draws);

}  // namespace biasrelax
