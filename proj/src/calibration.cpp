#include "swei/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>

#include "swei/parallel.hpp"
#include "swei/rng.hpp"
#include "swei/uq.hpp"

namespace swei::calibration {

double PredictionRecord::rel_unc() const noexcept { return std::sinh(sigma); }
double PredictionRecord::rel_err() const noexcept { return m / truth - 1.0; }

CalibrationReport bin_calibration(std::span<const double> rel_unc,
                                  std::span<const double> rel_err, std::size_t n_bins) {
  if (rel_unc.size() != rel_err.size()) {
    throw Error(Errc::SizeMismatch, "uncertainty and error lists differ in length");
  }
  if (n_bins == 0) throw Error(Errc::InvalidArgument, "need at least one bin");
  const std::size_t n = rel_unc.size();
  if (n < n_bins) {
    throw Error(Errc::TooFewSamples, std::to_string(n) + " records for " +
                                         std::to_string(n_bins) + " bins");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (rel_unc[a] != rel_unc[b]) return rel_unc[a] < rel_unc[b];
    return rel_err[a] < rel_err[b];
  });

  CalibrationReport report;
  const std::size_t base = n / n_bins;
  const std::size_t extra = n % n_bins;
  std::size_t pos = 0;
  double dev_sum = 0.0;
  for (std::size_t b = 0; b < n_bins; ++b) {
    const std::size_t count = base + (b < extra ? 1 : 0);
    double unc_sum = 0.0, sq_sum = 0.0;
    for (std::size_t k = pos; k < pos + count; ++k) {
      unc_sum += rel_unc[order[k]];
      sq_sum += rel_err[order[k]] * rel_err[order[k]];
    }
    pos += count;
    CalibrationBin bin{unc_sum / static_cast<double>(count),
                       std::sqrt(sq_sum / static_cast<double>(count)), count};
    dev_sum += std::abs(bin.mean_rel_unc - bin.rms_rel_err) / std::max(bin.rms_rel_err, 1e-9);
    report.bins.push_back(bin);
  }
  report.mean_abs_pct_dev = 100.0 * dev_sum / static_cast<double>(n_bins);
  return report;
}

CalibrationReport bin_calibration(std::span<const PredictionRecord> records, std::size_t n_bins) {
  std::vector<double> unc, err;
  unc.reserve(records.size());
  err.reserve(records.size());
  for (const auto& r : records) {
    unc.push_back(r.rel_unc());
    err.push_back(r.rel_err());
  }
  return bin_calibration(unc, err, n_bins);
}

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j);
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) {
    throw Error(Errc::TooFewSamples, "rank correlation needs two equal-length lists");
  }
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (!(saa > 0.0) || !(sbb > 0.0)) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

NetworkOutput ensemble_combine(std::span<const NetworkOutput> members) {
  if (members.empty()) throw Error(Errc::EmptyEnsemble, "ensemble has no members");
  if (members.size() == 1) return members[0];
  double mu = 0.0, sigma = 0.0;
  for (const auto& m : members) {
    mu += m.mu;
    sigma += std::exp(0.5 * uq::clamp_log_var(m.s));
  }
  const double n = static_cast<double>(members.size());
  mu /= n;
  sigma /= n;
  return {mu, 2.0 * std::log(sigma)};
}

double ensemble_spread(std::span<const double> member_ms) {
  if (member_ms.size() < 2) throw Error(Errc::TooFew, "spread needs at least 2 members");
  const double n = static_cast<double>(member_ms.size());
  const double mean = std::accumulate(member_ms.begin(), member_ms.end(), 0.0) / n;
  double ss = 0.0;
  for (double m : member_ms) ss += (m - mean) * (m - mean);
  return std::sqrt(ss / n);
}

std::vector<NetworkOutput> predict_outputs(const nn::SweiNet& net,
                                           std::span<const LabeledPlot> plots) {
  nn::Workspace<float> ws(net.config());
  std::vector<NetworkOutput> out;
  out.reserve(plots.size());
  for (const auto& lp : plots) out.push_back(nn::forward(net, lp.plot, ws));
  return out;
}

PredictionRecord make_record(const NetworkOutput& out, const LabeledPlot& plot) {
  const auto est = uq::to_estimate(out);
  return {est.m(), est.sigma(), plot.truth, plot.group_id};
}

LooResult loo_harness(std::span<const LabeledPlot> dataset, const NetConfig& net,
                      const nn::TrainConfig& config, const LooProgress& progress,
                      std::size_t threads) {
  std::map<int, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < dataset.size(); ++i) members[dataset[i].group_id].push_back(i);
  if (members.size() < 2) {
    throw Error(Errc::InvalidArgument, "leave-one-out needs at least 2 groups");
  }
  std::vector<int> groups;
  for (const auto& entry : members) groups.push_back(entry.first);

  LooResult result;
  result.group_ids = groups;
  result.models.resize(groups.size());
  result.traces.resize(groups.size());
  result.records.resize(dataset.size());
  std::mutex progress_mutex;
  std::size_t done = 0;

  parallel_for(groups.size(), threads, [&](std::size_t gi) {
    const int group = groups[gi];
    std::vector<LabeledPlot> train_plots;
    std::vector<LabeledPlot> test_plots;
    for (const auto& lp : dataset) {
      (lp.group_id == group ? test_plots : train_plots).push_back(lp);
    }
    if (train_plots.empty()) throw Error(Errc::EmptyGroup, "no training data outside a group");

    auto trained = nn::train(nn::make_training_set(train_plots, net), net,
                             fold_config(config, group));
    const nn::SweiNet model(trained.weights);
    const auto outputs = predict_outputs(model, test_plots);
    const auto& held_out = members.at(group);
    for (std::size_t k = 0; k < held_out.size(); ++k) {
      result.records[held_out[k]] = make_record(outputs[k], dataset[held_out[k]]);
    }
    result.models[gi] = std::move(trained.weights);
    result.traces[gi] = std::move(trained.trace);
    if (progress) {
      const std::lock_guard lock(progress_mutex);
      progress(++done, groups.size());
    }
  });
  return result;
}

nn::TrainConfig fold_config(const nn::TrainConfig& config, int group) {
  auto cfg = config;
  cfg.seed = derive_seed(config.seed, static_cast<std::uint64_t>(static_cast<std::int64_t>(group)));
  return cfg;
}

}  // namespace swei::calibration
