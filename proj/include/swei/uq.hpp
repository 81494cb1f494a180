#pragma once

#include <span>
#include <vector>

#include "swei/types.hpp"

namespace swei::uq {

/// Bounds applied to s = log sigma^2 before exponentiation.
inline constexpr double kMinLogVar = -10.0;
inline constexpr double kMaxLogVar = 4.0;

double clamp_log_var(double s) noexcept;

/// m = exp(mu), sigma = exp(s / 2) with s clamped.
LogNormalSpeed to_estimate(const NetworkOutput& out);

/// Inverse of to_estimate: mu = log m, s = log sigma^2.
NetworkOutput to_output(const LogNormalSpeed& est) noexcept;

/// If c ~ LogNormal(m, sigma) then G = rho c^2 ~ LogNormal(rho m^2, 2 sigma).
struct LogNormalModulus {
  double median_modulus = 0.0;  ///< Pa
  double sigma_g = 0.0;
  double rho = 0.0;             ///< kg/m^3
};

LogNormalModulus to_modulus(const LogNormalSpeed& est, double rho);

enum class CorrelationMode { independent, fully_correlated };

/// Sigma floor used when a measurement claims zero uncertainty.
inline constexpr double kSigmaFloor = 1e-6;

/// w_i = sigma_i^-2 / sum_k sigma_k^-2.
std::vector<double> inverse_variance_weights(std::span<const LogNormalSpeed> estimates);

/// Inverse-variance weighted mean in the log domain. The combined variance is
/// sum w_i^2 sigma_i^2 for independent errors and (sum w_i sigma_i)^2 when all
/// errors are fully correlated.
LogNormalSpeed weighted_average(std::span<const LogNormalSpeed> estimates, CorrelationMode mode);

/// Maximum-likelihood log-normal fit: log m = mean(log y),
/// sigma^2 = mean((log y - log m)^2).
LogNormalSpeed mle_fit(std::span<const double> samples);

/// Per-sample log-normal loss (log y - mu)^2 exp(-s) + s, s clamped.
double lognormal_loss(double mu, double s, double y);

}  // namespace swei::uq
