#include "swei/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "swei/calibration.hpp"
#include "swei/core_io.hpp"
#include "swei/error.hpp"
#include "swei/uq.hpp"

namespace swei::pipeline {
namespace {

// Largest per-axis stretch or shrink accepted when adapting to the input shape.
constexpr double kMaxAxisRatio = 8.0;

void check_ratio(std::size_t from, std::size_t to, const char* axis) {
  const double ratio = static_cast<double>(std::max(from, to)) / static_cast<double>(std::min(from, to));
  if (ratio > kMaxAxisRatio) {
    throw Error(Errc::BadShape, std::string(axis) + " axis of " + std::to_string(from) +
                                    " samples cannot be adapted to " + std::to_string(to));
  }
}

}  // namespace

void InferOptions::validate() const {
  if (interp_t != 0.0 && !(interp_t >= 0.25 && interp_t <= 8.0)) {
    throw Error(Errc::InvalidArgument, "--interp-t must lie in [0.25, 8]");
  }
  ref.validate();
}

PreparedPlot prepare(const SpaceTimePlot& plot, const NetConfig& config,
                     const InferOptions& options) {
  options.validate();
  SpaceTimePlot p = plot;
  if (options.interp_t != 0.0) p = preprocess::resample_time(p, options.interp_t);
  if (options.velocity) p = preprocess::hilbert_shift(p);
  if (p.n_x() != config.in_x) {
    check_ratio(p.n_x(), config.in_x, "lateral");
    p = preprocess::resample_lateral(p, config.in_x);
  }
  if (p.n_t() != config.in_t) {
    check_ratio(p.n_t(), config.in_t, "time");
    p = preprocess::resample_time_to(p, config.in_t);
  }
  PreparedPlot out{preprocess::normalize_tracks(p).plot, 1.0};
  out.speed_factor = preprocess::apparent_speed_factor(out.plot, options.ref);
  return out;
}

double Prediction::rel_unc() const noexcept { return std::sinh(sigma); }

double Prediction::abs_unc_mps() const noexcept { return m_mps * std::sinh(sigma); }

Predictor::Predictor(std::vector<ModelWeights> models) {
  if (models.empty()) throw Error(Errc::EmptyEnsemble, "no model to predict with");
  nets_.reserve(models.size());
  for (const auto& w : models) nets_.emplace_back(w);
}

Prediction Predictor::predict(const SpaceTimePlot& plot, const InferOptions& options) const {
  std::vector<NetworkOutput> heads;
  heads.reserve(nets_.size());
  double factor = 1.0;
  for (std::size_t i = 0; i < nets_.size(); ++i) {
    const auto& net = nets_[i];
    const auto prepared = prepare(plot, net.config(), options);
    if (i == 0) factor = prepared.speed_factor;
    nn::Workspace<float> ws(net.config());
    heads.push_back(nn::forward(net, prepared.plot, ws));
  }
  Prediction pred;
  pred.output = heads.size() == 1 ? heads.front() : calibration::ensemble_combine(heads);
  const auto est = uq::to_estimate(pred.output);
  pred.m_mps = est.m() * factor;
  pred.sigma = est.sigma();
  return pred;
}

std::vector<ModelWeights> load_models(const std::filesystem::path& model,
                                      const std::filesystem::path& ensemble_dir) {
  std::vector<ModelWeights> models;
  if (!model.empty()) models.push_back(read_model(model));
  if (!ensemble_dir.empty()) {
    if (!std::filesystem::is_directory(ensemble_dir)) {
      throw Error(Errc::IoError, "not a directory: " + ensemble_dir.string());
    }
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(ensemble_dir)) {
      if (entry.is_regular_file() && entry.path().extension() == ".swnw") {
        files.push_back(entry.path());
      }
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) models.push_back(read_model(f));
  }
  if (models.empty()) throw Error(Errc::EmptyEnsemble, "no .swnw model found");
  return models;
}

std::vector<std::filesystem::path> expand_inputs(std::span<const std::string> inputs) {
  std::vector<std::filesystem::path> out;
  for (const auto& in : inputs) {
    const std::filesystem::path p(in);
    if (std::filesystem::is_directory(p)) {
      std::vector<std::filesystem::path> files;
      for (const auto& entry : std::filesystem::directory_iterator(p)) {
        if (entry.is_regular_file() && entry.path().extension() == ".swst") {
          files.push_back(entry.path());
        }
      }
      std::sort(files.begin(), files.end());
      out.insert(out.end(), files.begin(), files.end());
    } else {
      out.push_back(p);
    }
  }
  if (out.empty()) throw Error(Errc::EmptyInput, "no input plots");
  return out;
}

}  // namespace swei::pipeline
