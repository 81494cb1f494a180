#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "swei/nn/network.hpp"
#include "swei/preprocess.hpp"
#include "swei/types.hpp"

namespace swei::pipeline {

/// Options of the inference preprocessing chain.
struct InferOptions {
  /// Apply the 90 degree phase shift to velocity data.
  bool velocity = false;
  /// Time interpolation factor applied first; 0 disables it.
  double interp_t = 0.0;
  preprocess::SamplingRef ref{};
  void validate() const;
};

/// Network-ready input and the factor turning a network speed into m/s.
struct PreparedPlot {
  SpaceTimePlot plot;
  double speed_factor = 1.0;
};

/// resample_time(K) -> hilbert_shift (if velocity) -> linear resampling of
/// both axes to the network input shape -> per-track normalization. The
/// speed factor is apparent_speed_factor of the final grid, which already
/// contains the interpolation factor.
PreparedPlot prepare(const SpaceTimePlot& plot, const NetConfig& config,
                     const InferOptions& options);

struct Prediction {
  NetworkOutput output;  ///< ensemble head on the canonical grid
  double m_mps = 0.0;
  double sigma = 0.0;
  double rel_unc() const noexcept;
  double abs_unc_mps() const noexcept;
};

/// One or more trained networks; several are combined by mean mu / mean sigma.
class Predictor {
 public:
  explicit Predictor(std::vector<ModelWeights> models);
  std::size_t size() const noexcept { return nets_.size(); }
  Prediction predict(const SpaceTimePlot& plot, const InferOptions& options) const;

 private:
  std::vector<nn::SweiNet> nets_;
};

/// Loads `model` (may be empty) plus every *.swnw in `ensemble_dir` (may be
/// empty), sorted by file name. Throws EmptyEnsemble when nothing is found.
std::vector<ModelWeights> load_models(const std::filesystem::path& model,
                                      const std::filesystem::path& ensemble_dir);

/// Expands directories to their *.swst files (sorted); files pass through.
std::vector<std::filesystem::path> expand_inputs(std::span<const std::string> inputs);

}  // namespace swei::pipeline
