#include "biasrelax/model.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "biasrelax/errors.hpp"
#include "biasrelax/numerics.hpp"

namespace biasrelax {

const std::vector<std::string>& CoefVector::names() {
  static const std::vector<std::string> kNames = {"0",  "T",  "X",  "Y",
                                                  "TX", "TY", "XY", "TXY"};
  return kNames;
}

std::map<std::string, double> CoefVector::to_map() const {
  return {{"0", b0},   {"T", bT},   {"X", bX},   {"Y", bY},
          {"TX", bTX}, {"TY", bTY}, {"XY", bXY}, {"TXY", bTXY}};
}

CoefVector CoefVector::from_map(const std::map<std::string, double>& m) {
  CoefVector b;
  auto get = [&](const char* name) {
    const auto it = m.find(name);
    if (it == m.end()) throw DataError(std::string("CoefVector: missing coefficient '") + name + "'");
    return it->second;
  };
  b.b0 = get("0");
  b.bT = get("T");
  b.bX = get("X");
  b.bY = get("Y");
  b.bTX = get("TX");
  b.bTY = get("TY");
  b.bXY = get("XY");
  b.bTXY = get("TXY");
  return b;
}

ExpectedCells expected_counts(const CoefVector& beta) {
  ExpectedCells out;
  for (int t = 0; t < 2; ++t) {
    for (int x = 0; x < 2; ++x) {
      for (int y = 0; y < 2; ++y) {
        const double u = beta.b0 + beta.bT * t + beta.bX * x + beta.bY * y +
                         beta.bTX * t * x + beta.bTY * t * y + beta.bXY * x * y +
                         beta.bTXY * t * x * y;
        if (std::fabs(u) > 700.0) {
          std::ostringstream os;
          os << "expected_counts: linear predictor " << u << " at cell (t=" << t
             << ",x=" << x << ",y=" << y << ") overflows; coefficients: 0=" << beta.b0
             << " T=" << beta.bT << " X=" << beta.bX << " Y=" << beta.bY
             << " TX=" << beta.bTX << " TY=" << beta.bTY << " XY=" << beta.bXY
             << " TXY=" << beta.bTXY;
          throw std::overflow_error(os.str());
        }
        out.at(t, x, y) = std::exp(u);
      }
    }
  }
  return out;
}

PredictiveValues imputation_probs(const TBlock& b) {
  PredictiveValues out;
  for (int x = 0; x < 2; ++x) {
    for (int y = 0; y < 2; ++y) {
      out.at(x, y) = expit(b.t + b.tx * x + b.ty * y + b.txy * x * y);
    }
  }
  return out;
}

ExpectedCells transparent_expected(const XYCells& e_xy, const TBlock& b) {
  for (int x = 0; x < 2; ++x) {
    for (int y = 0; y < 2; ++y) {
      if (!(e_xy.at(x, y) > 0.0)) {
        throw DataError("transparent_expected: XY margin cells must be positive");
      }
    }
  }
  // The T = 0 share uses expit(-u) rather than 1 - expit(u) so extreme
  // blocks keep both shares positive instead of underflowing a margin.
  ExpectedCells out;
  for (int x = 0; x < 2; ++x) {
    for (int y = 0; y < 2; ++y) {
      const double u = b.t + b.tx * x + b.ty * y + b.txy * x * y;
      out.at(1, x, y) = e_xy.at(x, y) * expit(u);
      out.at(0, x, y) = e_xy.at(x, y) * expit(-u);
    }
  }
  return out;
}

double misclass_bias_factor(const XBlock& b) {
  const double num = (1.0 + std::exp(b.x + b.tx + b.xy + b.txy)) * (1.0 + std::exp(b.x));
  const double den = (1.0 + std::exp(b.x + b.tx)) * (1.0 + std::exp(b.x + b.xy));
  return num / den;
}

double confounding_bias_factor(double t, double tx, double ty, double txy) {
  const double num = (1.0 + std::exp(t + tx + ty + txy)) * (1.0 + std::exp(t));
  const double den = (1.0 + std::exp(t + tx)) * (1.0 + std::exp(t + ty));
  return num / den;
}

std::pair<double, double> roc_odds_ratios(const TBlock& b) {
  return {std::exp(b.tx), std::exp(b.tx + b.txy)};
}

double marginal_or(const ExpectedCells& e, MarginPair pair) {
  double m11, m10, m01, m00;
  if (pair == MarginPair::TY) {
    m11 = e.margin_ty(1, 1);
    m10 = e.margin_ty(1, 0);
    m01 = e.margin_ty(0, 1);
    m00 = e.margin_ty(0, 0);
  } else {
    m11 = e.margin_xy(1, 1);
    m10 = e.margin_xy(1, 0);
    m01 = e.margin_xy(0, 1);
    m00 = e.margin_xy(0, 0);
  }
  if (!(m11 > 0.0 && m10 > 0.0 && m01 > 0.0 && m00 > 0.0)) {
    throw DataError("marginal_or: zero margin");
  }
  return m11 * m00 / (m10 * m01);
}

double selection_bias_factor(const SelectionCoefs& s, SelectionMode mode) {
  if (mode == SelectionMode::Density) {
    return std::exp(-s.sty);
  }
  throw ConfigError(
      "selection_bias_factor: stratum mode takes the X = 1 - S coefficient block, "
      "not selection-rate coefficients");
}

double selection_bias_factor(const XBlock& b) { return misclass_bias_factor(b); }

double classification_prob(const CoefVector& beta, int t, int y) {
  return expit(beta.bX + beta.bTX * t + beta.bXY * y + beta.bTXY * t * y);
}

}  // namespace biasrelax
