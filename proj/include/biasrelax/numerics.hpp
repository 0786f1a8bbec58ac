#pragma once

#include <utility>

// Scalar special functions used throughout: logistic transforms, normal
// quantiles, and the regularized incomplete beta function (which gives
// F-distribution tail quantiles).

namespace biasrelax {

double expit(double u);
double logit(double p);

// ln(1 + e^u), overflow-safe.
double log1pexp(double u);

double normal_cdf(double z);

// Inverse standard-normal CDF. Acklam's rational approximation polished
// with one Halley step against erfc; |error| < 1e-14 on (0,1).
double normal_quantile(double p);

// Regularized incomplete beta I_x(a,b), continued-fraction evaluation
// (Lentz's method, cf. Numerical Recipes 6.4).
double ibeta(double a, double b, double x);

// Inverse of ibeta in x for fixed (a,b): Newton with bisection safeguard.
double ibeta_inv(double a, double b, double p);

// Quantile of the F(d1,d2) distribution via the incomplete beta inverse.
double f_quantile(double d1, double d2, double p);

}  // namespace biasrelax
