#pragma once

#include <map>
#include <string>
#include <vector>

namespace biasrelax {

// 2x2 count table; n11 is (row level 1, column level 1), n10 is
// (row level 1, column level 0), and so on. Counts are reals because
// imputation produces fractional cells.
struct TwoByTwo {
  double n11 = 0.0;
  double n10 = 0.0;
  double n01 = 0.0;
  double n00 = 0.0;

  double total() const { return n11 + n10 + n01 + n00; }
};

// Cross-product ratio n11*n00 / (n10*n01). A zero cell is an error unless
// the continuity flag asks for 0.5 added to every cell first.
double odds_ratio(const TwoByTwo& t, bool continuity = false);

// sqrt(1/n11 + 1/n10 + 1/n01 + 1/n00); requires all cells positive.
double wald_log_or_se(const TwoByTwo& t);

// One input cell: levels for the axes the record group observes, plus a count.
struct RawCell {
  std::map<std::string, int> levels;
  double count = 0.0;
};

// Counts over binary axes (subset of {T, W, X, S, Y}), organized into record
// groups by which axes each group observes. A group that omits an axis holds
// records where that variable is latent, which is how mixed
// complete/incomplete data (validation subsamples) are represented.
//
// Immutable after construction; safe to share across threads.
class StratifiedCountTable {
 public:
  struct Group {
    std::vector<std::string> observed;  // in table axis order
    std::vector<std::string> latent;    // axes not observed by this group
    // counts.size() == 2^observed.size(); bit i of the index is the level
    // of observed[i].
    std::vector<double> counts;
  };

  static StratifiedCountTable from_cells(std::vector<std::string> axes,
                                         const std::vector<RawCell>& cells);

  const std::vector<std::string>& axes() const { return axes_; }
  const std::vector<Group>& groups() const { return groups_; }
  double total() const;
  bool has_axis(const std::string& axis) const;
  bool fully_observed() const;

  // Sums counts over the given axis, which must be observed in every group.
  StratifiedCountTable collapse(const std::string& axis) const;

  StratifiedCountTable with_renamed_axis(const std::string& from, const std::string& to) const;

  // Counts binned by the requested axes (observed in every group), summed
  // over everything else. Bit i of the result index is the level of
  // request[i].
  std::vector<double> margin(const std::vector<std::string>& request) const;

  TwoByTwo to_two_by_two(const std::string& row, const std::string& col) const;

 private:
  StratifiedCountTable() = default;
  void validate() const;

  std::vector<std::string> axes_;
  std::vector<Group> groups_;
};

}  // namespace biasrelax
