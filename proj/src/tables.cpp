#include "biasrelax/tables.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "biasrelax/errors.hpp"

namespace biasrelax {

namespace {

const std::set<std::string> kKnownAxes = {"T", "W", "X", "S", "Y"};

std::string tuple_to_string(const std::map<std::string, int>& levels) {
  std::ostringstream os;
  os << "{";
  bool first = true;
  for (const auto& [k, v] : levels) {
    if (!first) os << ",";
    os << k << "=" << v;
    first = false;
  }
  os << "}";
  return os.str();
}

}  // namespace

double odds_ratio(const TwoByTwo& t, bool continuity) {
  TwoByTwo u = t;
  if (continuity) {
    u.n11 += 0.5;
    u.n10 += 0.5;
    u.n01 += 0.5;
    u.n00 += 0.5;
  }
  if (!(u.n11 > 0.0 && u.n10 > 0.0 && u.n01 > 0.0 && u.n00 > 0.0)) {
    throw DataError("odds_ratio: zero cell (pass continuity=true to add 0.5 to every cell)");
  }
  return u.n11 * u.n00 / (u.n10 * u.n01);
}

double wald_log_or_se(const TwoByTwo& t) {
  if (!(t.n11 > 0.0 && t.n10 > 0.0 && t.n01 > 0.0 && t.n00 > 0.0)) {
    throw DataError("wald_log_or_se: zero cell");
  }
  return std::sqrt(1.0 / t.n11 + 1.0 / t.n10 + 1.0 / t.n01 + 1.0 / t.n00);
}

StratifiedCountTable StratifiedCountTable::from_cells(std::vector<std::string> axes,
                                                      const std::vector<RawCell>& cells) {
  if (axes.empty()) throw DataError("table: axis list is empty");
  std::set<std::string> seen;
  for (const auto& a : axes) {
    if (!kKnownAxes.count(a)) throw DataError("table: unknown axis '" + a + "'");
    if (!seen.insert(a).second) throw DataError("table: duplicate axis '" + a + "'");
  }
  if (cells.empty()) throw DataError("table: no cells");

  StratifiedCountTable table;
  table.axes_ = std::move(axes);

  // Group cells by the set of axes they carry.
  std::map<std::vector<std::string>, std::vector<const RawCell*>> by_keys;
  for (const auto& cell : cells) {
    std::vector<std::string> keys;
    for (const auto& a : table.axes_) {
      if (cell.levels.count(a)) keys.push_back(a);
    }
    if (keys.size() != cell.levels.size()) {
      for (const auto& [k, v] : cell.levels) {
        (void)v;
        if (std::find(table.axes_.begin(), table.axes_.end(), k) == table.axes_.end()) {
          throw DataError("table: cell " + tuple_to_string(cell.levels) +
                          " names undeclared axis '" + k + "'");
        }
      }
    }
    if (keys.empty()) {
      throw DataError("table: cell with no axis levels");
    }
    by_keys[keys].push_back(&cell);
  }

  for (auto& [keys, members] : by_keys) {
    Group g;
    g.observed = keys;
    for (const auto& a : table.axes_) {
      if (std::find(keys.begin(), keys.end(), a) == keys.end()) g.latent.push_back(a);
    }
    const std::size_t size = std::size_t{1} << keys.size();
    g.counts.assign(size, -1.0);  // -1 marks "not yet provided"
    for (const RawCell* cell : members) {
      std::size_t index = 0;
      for (std::size_t i = 0; i < keys.size(); ++i) {
        const int lvl = cell->levels.at(keys[i]);
        if (lvl != 0 && lvl != 1) {
          throw DataError("table: axis '" + keys[i] + "' level must be 0 or 1 in cell " +
                          tuple_to_string(cell->levels));
        }
        index |= static_cast<std::size_t>(lvl) << i;
      }
      if (cell->count < 0.0 || !std::isfinite(cell->count)) {
        throw DataError("table: negative or non-finite count in cell " +
                        tuple_to_string(cell->levels));
      }
      if (g.counts[index] >= 0.0) {
        throw DataError("table: duplicate cell " + tuple_to_string(cell->levels));
      }
      g.counts[index] = cell->count;
    }
    for (std::size_t idx = 0; idx < size; ++idx) {
      if (g.counts[idx] < 0.0) {
        std::ostringstream os;
        os << "table: missing cell in group observing {";
        for (std::size_t i = 0; i < keys.size(); ++i) {
          if (i) os << ",";
          os << keys[i] << "=" << ((idx >> i) & 1);
        }
        os << "}";
        throw DataError(os.str());
      }
    }
    table.groups_.push_back(std::move(g));
  }

  table.validate();
  return table;
}

void StratifiedCountTable::validate() const {
  const double tot = total();
  if (!(tot > 0.0)) throw DataError("table: all counts are zero");
  // Consistency of margins: summing the margin over any everywhere-observed
  // axis must reproduce the grand total.
  for (const auto& axis : axes_) {
    bool everywhere = true;
    for (const auto& g : groups_) {
      if (std::find(g.observed.begin(), g.observed.end(), axis) == g.observed.end()) {
        everywhere = false;
        break;
      }
    }
    if (!everywhere) continue;
    const auto m = margin({axis});
    const double s = m[0] + m[1];
    if (std::fabs(s - tot) > 1e-9 * std::max(1.0, tot)) {
      throw DataError("table: stratum totals over axis '" + axis +
                      "' do not reproduce the grand total");
    }
  }
}

double StratifiedCountTable::total() const {
  double s = 0.0;
  for (const auto& g : groups_) {
    for (double c : g.counts) s += c;
  }
  return s;
}

bool StratifiedCountTable::has_axis(const std::string& axis) const {
  return std::find(axes_.begin(), axes_.end(), axis) != axes_.end();
}

bool StratifiedCountTable::fully_observed() const {
  for (const auto& g : groups_) {
    if (!g.latent.empty()) return false;
  }
  return true;
}

StratifiedCountTable StratifiedCountTable::collapse(const std::string& axis) const {
  if (!has_axis(axis)) throw DataError("collapse: axis '" + axis + "' not in table");
  for (const auto& g : groups_) {
    if (std::find(g.latent.begin(), g.latent.end(), axis) != g.latent.end()) {
      throw DataError("collapse: axis '" + axis + "' is latent in a record group");
    }
  }

  StratifiedCountTable out;
  for (const auto& a : axes_) {
    if (a != axis) out.axes_.push_back(a);
  }
  if (out.axes_.empty()) throw DataError("collapse: cannot collapse the last axis");

  for (const auto& g : groups_) {
    Group ng;
    std::size_t drop_bit = 0;
    for (std::size_t i = 0; i < g.observed.size(); ++i) {
      if (g.observed[i] == axis) {
        drop_bit = i;
      } else {
        ng.observed.push_back(g.observed[i]);
      }
    }
    ng.latent = g.latent;
    ng.counts.assign(std::size_t{1} << ng.observed.size(), 0.0);
    for (std::size_t idx = 0; idx < g.counts.size(); ++idx) {
      const std::size_t low = idx & ((std::size_t{1} << drop_bit) - 1);
      const std::size_t high = (idx >> (drop_bit + 1)) << drop_bit;
      ng.counts[low | high] += g.counts[idx];
    }
    out.groups_.push_back(std::move(ng));
  }
  out.validate();
  return out;
}

StratifiedCountTable StratifiedCountTable::with_renamed_axis(const std::string& from,
                                                             const std::string& to) const {
  if (!has_axis(from)) throw DataError("rename: axis '" + from + "' not in table");
  if (has_axis(to)) throw DataError("rename: axis '" + to + "' already present");
  if (!kKnownAxes.count(to)) throw DataError("rename: unknown axis '" + to + "'");
  StratifiedCountTable out = *this;
  auto rename = [&](std::vector<std::string>& names) {
    for (auto& n : names) {
      if (n == from) n = to;
    }
  };
  rename(out.axes_);
  for (auto& g : out.groups_) {
    rename(g.observed);
    rename(g.latent);
  }
  return out;
}

std::vector<double> StratifiedCountTable::margin(const std::vector<std::string>& request) const {
  for (const auto& a : request) {
    if (!has_axis(a)) throw DataError("margin: axis '" + a + "' not in table");
  }
  std::vector<double> out(std::size_t{1} << request.size(), 0.0);
  for (const auto& g : groups_) {
    std::vector<std::size_t> pos(request.size());
    for (std::size_t r = 0; r < request.size(); ++r) {
      const auto it = std::find(g.observed.begin(), g.observed.end(), request[r]);
      if (it == g.observed.end()) {
        throw DataError("margin: axis '" + request[r] + "' is latent in a record group");
      }
      pos[r] = static_cast<std::size_t>(it - g.observed.begin());
    }
    for (std::size_t idx = 0; idx < g.counts.size(); ++idx) {
      std::size_t m = 0;
      for (std::size_t r = 0; r < request.size(); ++r) {
        m |= ((idx >> pos[r]) & 1) << r;
      }
      out[m] += g.counts[idx];
    }
  }
  return out;
}

TwoByTwo StratifiedCountTable::to_two_by_two(const std::string& row,
                                             const std::string& col) const {
  const auto m = margin({row, col});
  TwoByTwo t;
  t.n00 = m[0];  // row=0, col=0
  t.n10 = m[1];  // row=1, col=0
  t.n01 = m[2];  // row=0, col=1
  t.n11 = m[3];  // row=1, col=1
  return t;
}

}  // namespace biasrelax
