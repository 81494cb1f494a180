#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "swei/nn/network.hpp"
#include "swei/nn/train.hpp"
#include "swei/types.hpp"

namespace swei::calibration {

inline constexpr std::size_t kDefaultBins = 25;

struct PredictionRecord {
  double m = 0.0;      ///< predicted median speed, m/s
  double sigma = 0.0;  ///< log-domain std
  double truth = 0.0;  ///< m/s
  int group_id = 0;

  double rel_unc() const noexcept;
  /// m / truth - 1
  double rel_err() const noexcept;
};

struct CalibrationBin {
  double mean_rel_unc = 0.0;
  double rms_rel_err = 0.0;
  std::size_t count = 0;
};

struct CalibrationReport {
  std::vector<CalibrationBin> bins;
  /// Mean over bins of |mean_rel_unc - rms_rel_err| / max(rms_rel_err, 1e-9), in percent.
  double mean_abs_pct_dev = 0.0;
};

/// Equal-population bins by increasing relative uncertainty (ties broken by
/// error so the result does not depend on record order). The first
/// (N mod n_bins) bins hold one extra record. Throws TooFewSamples.
CalibrationReport bin_calibration(std::span<const PredictionRecord> records,
                                  std::size_t n_bins = kDefaultBins);

/// Same protocol with an arbitrary relative-uncertainty value per record.
CalibrationReport bin_calibration(std::span<const double> rel_unc,
                                  std::span<const double> rel_err,
                                  std::size_t n_bins = kDefaultBins);

/// Spearman rank correlation (average ranks for ties).
double spearman(std::span<const double> a, std::span<const double> b);

/// Ensemble of network heads: arithmetic mean of mu and of sigma, reported as
/// s = log(mean sigma)^2. Throws EmptyEnsemble.
NetworkOutput ensemble_combine(std::span<const NetworkOutput> members);

/// Population standard deviation of member medians. Throws TooFew below 2.
double ensemble_spread(std::span<const double> member_ms);

struct LooResult {
  std::vector<int> group_ids;                 ///< ascending
  std::vector<ModelWeights> models;           ///< models[i] never saw group_ids[i]
  std::vector<std::vector<nn::EpochStat>> traces;
  /// One record per input plot, in input order.
  std::vector<PredictionRecord> records;
};

/// Progress hook: (folds finished, fold count).
using LooProgress = std::function<void(std::size_t, std::size_t)>;

/// Leave-one-group-out training. Group g's model trains on every other group
/// with fold_config(config, g) and predicts group g. Folds run on up to
/// `threads` workers; results do not depend on the thread count.
/// Throws InvalidArgument below 2 groups and EmptyGroup when a held-out
/// group leaves nothing to train on.
LooResult loo_harness(std::span<const LabeledPlot> dataset, const NetConfig& net,
                      const nn::TrainConfig& config, const LooProgress& progress = {},
                      std::size_t threads = 1);

/// Training config of the fold holding out `group`: seed derive_seed(seed, group).
nn::TrainConfig fold_config(const nn::TrainConfig& config, int group);

/// Predictions of one model over labeled plots.
std::vector<NetworkOutput> predict_outputs(const nn::SweiNet& net,
                                           std::span<const LabeledPlot> plots);

PredictionRecord make_record(const NetworkOutput& out, const LabeledPlot& plot);

}  // namespace swei::calibration
