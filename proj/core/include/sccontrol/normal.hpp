#pragma once

namespace scc {

// Standard normal density, CDF and quantile.
// norm_cdf is built on erfc and is accurate to a few ulp in the tails;
// norm_quantile uses Boost's inverse erfc (relative error ~1e-16).
double norm_pdf(double x);
double norm_cdf(double x);
double norm_quantile(double p);

// Log density of N(mean, var) at x.
double log_normal_density(double x, double mean, double var);

}  // namespace scc
