#pragma once

// Univariate distribution functions used by the elliptical pair copulas.

namespace vinestep {

/// Standard normal density.
double norm_pdf(double x);

/// Standard normal CDF, accurate in both tails (computed through erfc).
double norm_cdf(double x);

/// Upper tail 1 - Phi(x) without cancellation.
double norm_sf(double x);

/// Standard normal quantile. Wichura's AS241 rational approximation followed
/// by one Newton step on the tail that avoids cancellation.
double norm_quantile(double p);

/// Student's t CDF / quantile / log-density for real degrees of freedom nu > 0.
double t_cdf(double x, double nu);
double t_quantile(double p, double nu);
double t_log_pdf(double x, double nu);

}  // namespace vinestep
