#include "swei/uq.hpp"

#include <algorithm>
#include <cmath>

namespace swei::uq {

double clamp_log_var(double s) noexcept { return std::clamp(s, kMinLogVar, kMaxLogVar); }

LogNormalSpeed to_estimate(const NetworkOutput& out) {
  if (!std::isfinite(out.mu) || std::isnan(out.s)) {
    throw Error(Errc::NonFiniteData, "network output is not finite");
  }
  return LogNormalSpeed(std::exp(out.mu), std::exp(0.5 * clamp_log_var(out.s)));
}

NetworkOutput to_output(const LogNormalSpeed& est) noexcept {
  return {std::log(est.m()), 2.0 * std::log(est.sigma())};
}

LogNormalModulus to_modulus(const LogNormalSpeed& est, double rho) {
  if (!(rho > 0.0)) throw Error(Errc::InvalidArgument, "density must be positive");
  return {rho * est.m() * est.m(), 2.0 * est.sigma(), rho};
}

std::vector<double> inverse_variance_weights(std::span<const LogNormalSpeed> estimates) {
  if (estimates.empty()) throw Error(Errc::EmptyInput, "no estimates to average");
  std::vector<double> w(estimates.size());
  double total = 0.0;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    const double sigma = std::max(estimates[i].sigma(), kSigmaFloor);
    w[i] = 1.0 / (sigma * sigma);
    total += w[i];
  }
  for (auto& v : w) v /= total;
  return w;
}

LogNormalSpeed weighted_average(std::span<const LogNormalSpeed> estimates, CorrelationMode mode) {
  const auto w = inverse_variance_weights(estimates);
  if (estimates.size() == 1) return estimates[0];
  double log_m = 0.0, var = 0.0, lin = 0.0;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    const double sigma = std::max(estimates[i].sigma(), kSigmaFloor);
    log_m += w[i] * std::log(estimates[i].m());
    var += w[i] * w[i] * sigma * sigma;
    lin += w[i] * sigma;
  }
  if (mode == CorrelationMode::fully_correlated) var = lin * lin;
  return LogNormalSpeed(std::exp(log_m), std::sqrt(var));
}

LogNormalSpeed mle_fit(std::span<const double> samples) {
  if (samples.empty()) throw Error(Errc::EmptyInput, "no samples to fit");
  double mean = 0.0;
  for (double y : samples) {
    if (!(y > 0.0) || !std::isfinite(y)) throw Error(Errc::BadSample, "samples must be positive");
    mean += std::log(y);
  }
  mean /= static_cast<double>(samples.size());
  double var = 0.0;
  for (double y : samples) {
    const double d = std::log(y) - mean;
    var += d * d;
  }
  var /= static_cast<double>(samples.size());
  return LogNormalSpeed(std::exp(mean), std::sqrt(var));
}

double lognormal_loss(double mu, double s, double y) {
  if (!(y > 0.0)) throw Error(Errc::BadLabel, "label must be positive");
  const double sc = clamp_log_var(s);
  const double r = std::log(y) - mu;
  return r * r * std::exp(-sc) + sc;
}

}  // namespace swei::uq
