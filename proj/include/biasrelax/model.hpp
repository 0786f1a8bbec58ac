#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace biasrelax {

// The eight saturated loglinear coefficients for a TXY table, log scale.
struct CoefVector {
  double b0 = 0.0;
  double bT = 0.0;
  double bX = 0.0;
  double bY = 0.0;
  double bTX = 0.0;
  double bTY = 0.0;
  double bXY = 0.0;
  double bTXY = 0.0;

  static const std::vector<std::string>& names();  // {"0","T","X","Y","TX","TY","XY","TXY"}
  std::map<std::string, double> to_map() const;
  static CoefVector from_map(const std::map<std::string, double>& m);
};

// The T-predictive block (beta_T, beta_TX, beta_TY, beta_TXY): the
// coefficients of the imputation model for latent T.
struct TBlock {
  double t = 0.0;
  double tx = 0.0;
  double ty = 0.0;
  double txy = 0.0;
};

// The X-classification block (beta_X, beta_TX, beta_XY, beta_TXY).
struct XBlock {
  double x = 0.0;
  double tx = 0.0;
  double xy = 0.0;
  double txy = 0.0;
};

// TY-dependent selection-rate coefficients exp(bS + bST t + bSY y + bSTY ty).
struct SelectionCoefs {
  double s = 0.0;
  double st = 0.0;
  double sy = 0.0;
  double sty = 0.0;
};

// Expected counts E_txy over the full 2x2x2 table, all positive.
struct ExpectedCells {
  double e[2][2][2] = {};  // [t][x][y]

  double at(int t, int x, int y) const { return e[t][x][y]; }
  double& at(int t, int x, int y) { return e[t][x][y]; }
  double margin_xy(int x, int y) const { return e[0][x][y] + e[1][x][y]; }
  double margin_ty(int t, int y) const { return e[t][0][y] + e[t][1][y]; }
};

// Predictive values pi_1xy = Pr(T=1 | X=x, Y=y); pi_0xy = 1 - pi_1xy.
struct PredictiveValues {
  double p[2][2] = {};  // [x][y]
  double at(int x, int y) const { return p[x][y]; }
  double& at(int x, int y) { return p[x][y]; }
};

// Cell values indexed by (x, y), used for the identified XY margin.
struct XYCells {
  double n[2][2] = {};  // [x][y]
  double at(int x, int y) const { return n[x][y]; }
  double& at(int x, int y) { return n[x][y]; }
};

enum class MarginPair { TY, XY };
enum class SelectionMode { Stratum, Density };

// E_txy = exp(b0 + bT t + bX x + bY y + bTX tx + bTY ty + bXY xy + bTXY txy).
// Throws std::overflow_error (with the offending coefficients) if any linear
// predictor exceeds 700 on the log scale.
ExpectedCells expected_counts(const CoefVector& beta);

// pi_1xy = expit(bT + bTX x + bTY y + bTXY xy).
PredictiveValues imputation_probs(const TBlock& b);

// E_txy = E_+xy * pi_txy; reproduces the XY margins exactly.
ExpectedCells transparent_expected(const XYCells& e_xy, const TBlock& b);

// R(beta_X) = OR_TY / exp(beta_TY):
// {1+exp(x+tx+xy+txy)}{1+exp(x)} / [{1+exp(x+tx)}{1+exp(x+xy)}].
double misclass_bias_factor(const XBlock& b);

// R(beta_T) = OR_XY / exp(beta_XY), general form including the three-way
// term; the txy = 0 case is the usual display.
double confounding_bias_factor(double t, double tx, double ty, double txy = 0.0);

// Y-specific ROC odds ratios (exp(bTX), exp(bTX + bTXY)).
std::pair<double, double> roc_odds_ratios(const TBlock& b);

// Cross-product ratio of the requested two-way margin of E.
double marginal_or(const ExpectedCells& e, MarginPair pair);

// Density mode: exp(-bSTY). (Stratum mode goes through the X = 1 - S
// identification, i.e. misclass_bias_factor on the corresponding XBlock.)
double selection_bias_factor(const SelectionCoefs& s, SelectionMode mode);
double selection_bias_factor(const XBlock& b);

// Classification probabilities phi_1ty = Pr(X=1 | T=t, Y=y); prior
// elicitation helper only.
double classification_prob(const CoefVector& beta, int t, int y);

}  // namespace biasrelax
