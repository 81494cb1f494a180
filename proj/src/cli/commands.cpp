#include "swei/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include "swei/calibration.hpp"
#include "swei/classical.hpp"
#include "swei/core_io.hpp"
#include "swei/error.hpp"
#include "swei/nn/train.hpp"
#include "swei/parallel.hpp"
#include "swei/pipeline.hpp"
#include "swei/rng.hpp"
#include "swei/synth.hpp"

namespace fs = std::filesystem;

namespace swei::cli {
namespace {

const char* const kPreprocessingHelp =
    "Preprocessing order: --interp-t resampling, then the phase shift (--velocity), then "
    "linear resampling to the network input shape, then per-track normalization.";

struct SynthArgs {
  std::size_t groups = 0;
  std::size_t per_group = 0;
  std::uint64_t seed = 0;
  std::string out;
  bool force = false;
  bool velocity = false;
  double white_min = 0.0;
  double white_max = 0.5;
  int first_group = 0;
};

struct LabelArgs {
  std::string data;
  std::string labels;
  std::string method;
  std::optional<std::uint64_t> seed;
  std::string out;
};

struct TrainArgs {
  std::string data;
  std::string labels;
  std::size_t epochs = 90;
  std::size_t batch = 128;
  double lr = 5e-4;
  double wd = 1e-4;
  std::optional<std::uint64_t> seed;
  std::size_t channels = 32;
  std::optional<int> leave_out;
  bool loo = false;
  std::string out;
};

struct InferArgs {
  std::string model;
  std::string ensemble;
  std::vector<std::string> inputs;
  bool velocity = false;
  double interp_t = 0.0;
  double ref_dx = synth::kDefaultDx;
  double ref_dt = synth::kDefaultDt;
  bool json = false;
  std::string labels;
  std::string out;
};

struct CalibrateArgs {
  std::string pred;
  std::size_t bins = calibration::kDefaultBins;
  std::string out;
};

struct EstimateArgs {
  std::string method;
  std::vector<std::string> inputs;
  std::optional<std::uint64_t> seed;
  std::string out;
};

/// Writes to `path`, or to `fallback` when the path is empty.
template <typename Fn>
void emit(const std::string& path, std::ostream& fallback, Fn&& fn) {
  if (path.empty()) {
    fn(fallback);
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(Errc::IoError, "cannot write " + path);
  fn(f);
  if (!f) throw Error(Errc::IoError, "write failed: " + path);
}

fs::path default_labels(const std::string& data, const std::string& labels) {
  return labels.empty() ? fs::path(data) / "labels.csv" : fs::path(labels);
}

/// Label rows with paths resolved against the label file's directory.
std::vector<LabelRow> resolved_rows(const fs::path& labels_path) {
  auto rows = read_labels(labels_path);
  const fs::path base = labels_path.parent_path();
  for (auto& r : rows) {
    if (fs::path(r.path).is_relative()) r.path = (base / r.path).string();
  }
  return rows;
}

std::vector<LabeledPlot> load_labeled(const std::vector<LabelRow>& rows) {
  std::vector<std::optional<LabeledPlot>> slots(rows.size());
  parallel_for(rows.size(), worker_count(), [&](std::size_t i) {
    slots[i].emplace(read_plot(rows[i].path), rows[i].truth_mps, rows[i].group_id,
                     rows[i].label_source);
  });
  std::vector<LabeledPlot> out;
  out.reserve(rows.size());
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

void write_predictions(std::ostream& os, const std::vector<std::string>& paths,
                       const std::vector<calibration::PredictionRecord>& records) {
  os << "path,m_mps,sigma,truth_mps,group_id\n";
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    os << paths[i] << ',' << format_double(r.m) << ',' << format_double(r.sigma) << ','
       << format_double(r.truth) << ',' << r.group_id << '\n';
  }
}

void write_trace(const fs::path& path, const std::vector<nn::EpochStat>& trace) {
  emit(path.string(), std::cout, [&](std::ostream& os) {
    os << "epoch,mean_loss,lr\n";
    for (const auto& e : trace) {
      os << e.epoch << ',' << format_double(e.mean_loss) << ',' << format_double(e.lr) << '\n';
    }
  });
}

std::string model_name(int group) { return "model_loo_" + std::to_string(group) + ".swnw"; }

std::string trace_name(int group) { return "loss_trace_loo_" + std::to_string(group) + ".csv"; }

void cmd_synth(const SynthArgs& a, std::ostream& out) {
  if (a.groups < 2) throw Error(Errc::InvalidArgument, "--groups must be at least 2 (leave-one-out)");
  if (a.per_group < 1) throw Error(Errc::InvalidArgument, "--per-group must be positive");
  const fs::path dir(a.out);
  if (fs::exists(dir) && !fs::is_directory(dir)) {
    throw Error(Errc::InvalidArgument, "--out is not a directory: " + a.out);
  }
  if (fs::exists(dir) && !fs::is_empty(dir) && !a.force) {
    throw Error(Errc::InvalidArgument, "output directory is not empty (use --force): " + a.out);
  }
  synth::GroupConfig cfg;
  cfg.n_groups = a.groups;
  cfg.plots_per_group = a.per_group;
  cfg.seed = a.seed;
  cfg.white_min = a.white_min;
  cfg.white_max = a.white_max;
  cfg.first_group_id = a.first_group;
  cfg.kind = a.velocity ? MotionKind::velocity : MotionKind::displacement;
  cfg.validate();

  fs::create_directories(dir);
  const auto plots = synth::gen_dataset(cfg);
  std::vector<LabelRow> rows(plots.size());
  parallel_for(plots.size(), worker_count(), [&](std::size_t i) {
    char name[64];
    std::snprintf(name, sizeof name, "g%03d_%06zu.swst", plots[i].group_id, i % a.per_group);
    write_plot(plots[i].plot, dir / name);
    rows[i] = LabelRow{name, plots[i].truth, plots[i].group_id, plots[i].label_source};
  });
  write_labels(rows, dir / "labels.csv");
  out << "wrote " << plots.size() << " plots to " << dir.string() << '\n';
}

void cmd_label(const LabelArgs& a, std::ostream& out) {
  const auto source = label_source_from_string(a.method);
  if (source == LabelSource::mixed && !a.seed) {
    throw Error(Errc::InvalidArgument, "--method mixed requires --seed");
  }
  const fs::path labels_path = default_labels(a.data, a.labels);
  const auto rows = read_labels(labels_path);
  const auto resolved = resolved_rows(labels_path);
  std::vector<LabelRow> result = rows;
  parallel_for(rows.size(), worker_count(), [&](std::size_t i) {
    result[i].label_source = source;
    if (source == LabelSource::true_speed) return;
    const auto plot = read_plot(resolved[i].path);
    double v = 0.0;
    try {
      switch (source) {
        case LabelSource::radon:
          v = classical::radon_estimate(plot, classical::RadonGrid::standard()).sws;
          break;
        case LabelSource::xcorr:
          v = classical::xcorr_estimate(plot).sws;
          break;
        default:
          v = classical::mixed_label(plot, derive_seed(*a.seed, i));
          break;
      }
    } catch (const Error& e) {
      if (e.code() == Errc::LabelUnavailable) throw;
      throw Error(Errc::LabelUnavailable, rows[i].path + ": " + e.what());
    }
    result[i].truth_mps = std::clamp(v, kMinSpeed, kMaxSpeed);
  });
  const fs::path dest = a.out.empty()
                            ? labels_path.parent_path() / ("labels_" + a.method + ".csv")
                            : fs::path(a.out);
  write_labels(result, dest);
  out << "wrote " << result.size() << " labels to " << dest.string() << '\n';
}

void cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  if (!a.seed) throw Error(Errc::InvalidArgument, "--seed is required");
  nn::TrainConfig cfg;
  cfg.epochs = a.epochs;
  cfg.batch_size = a.batch;
  cfg.peak_lr = a.lr;
  cfg.weight_decay = a.wd;
  cfg.seed = *a.seed;
  cfg.validate();
  NetConfig net;
  net.channels = static_cast<std::uint32_t>(a.channels);
  net.validate();

  const fs::path labels_path = default_labels(a.data, a.labels);
  const auto rows = resolved_rows(labels_path);
  const auto plain = read_labels(labels_path);
  const auto dataset = load_labeled(rows);
  const fs::path dir(a.out);
  fs::create_directories(dir);

  if (a.loo) {
    const auto result = calibration::loo_harness(
        dataset, net, cfg,
        [&](std::size_t done, std::size_t total) {
          err << "fold " << done << "/" << total << " done\n";
        },
        worker_count());
    for (std::size_t g = 0; g < result.group_ids.size(); ++g) {
      write_model(result.models[g], dir / model_name(result.group_ids[g]));
      write_trace(dir / trace_name(result.group_ids[g]), result.traces[g]);
    }
    std::vector<std::string> paths;
    for (const auto& r : plain) paths.push_back(r.path);
    emit((dir / "predictions_loo.csv").string(), out,
         [&](std::ostream& os) { write_predictions(os, paths, result.records); });
    out << "trained " << result.models.size() << " leave-one-out models in " << dir.string()
        << '\n';
    return;
  }

  std::vector<LabeledPlot> train_plots;
  std::vector<std::size_t> held;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (a.leave_out && dataset[i].group_id == *a.leave_out) {
      held.push_back(i);
    } else {
      train_plots.push_back(dataset[i]);
    }
  }
  if (a.leave_out && held.empty()) {
    throw Error(Errc::EmptyGroup, "no plot has group " + std::to_string(*a.leave_out));
  }
  if (train_plots.empty()) throw Error(Errc::EmptyInput, "nothing to train on");
  const auto fold = a.leave_out ? calibration::fold_config(cfg, *a.leave_out) : cfg;
  const auto trained = nn::train(nn::make_training_set(train_plots, net), net, fold);
  const std::string model_file = a.leave_out ? model_name(*a.leave_out) : "model.swnw";
  write_model(trained.weights, dir / model_file);
  write_trace(dir / (a.leave_out ? trace_name(*a.leave_out) : "loss_trace.csv"), trained.trace);
  if (a.leave_out) {
    const nn::SweiNet model(trained.weights);
    std::vector<LabeledPlot> test;
    std::vector<std::string> paths;
    for (auto i : held) {
      test.push_back(dataset[i]);
      paths.push_back(plain[i].path);
    }
    const auto outputs = calibration::predict_outputs(model, test);
    std::vector<calibration::PredictionRecord> records;
    for (std::size_t k = 0; k < test.size(); ++k) {
      records.push_back(calibration::make_record(outputs[k], test[k]));
    }
    emit((dir / ("predictions_loo_" + std::to_string(*a.leave_out) + ".csv")).string(), out,
         [&](std::ostream& os) { write_predictions(os, paths, records); });
  }
  out << "wrote " << (dir / model_file).string() << '\n';
}

void cmd_infer(const InferArgs& a, std::ostream& out) {
  if (a.model.empty() && a.ensemble.empty()) {
    throw Error(Errc::InvalidArgument, "give --model and/or --ensemble");
  }
  pipeline::InferOptions opts;
  opts.velocity = a.velocity;
  opts.interp_t = a.interp_t;
  opts.ref = {a.ref_dx, a.ref_dt};
  opts.validate();

  std::map<std::string, LabelRow> truth;
  if (!a.labels.empty()) {
    for (auto& r : resolved_rows(a.labels)) {
      truth[fs::weakly_canonical(r.path).string()] = r;
    }
  }
  const pipeline::Predictor predictor(pipeline::load_models(a.model, a.ensemble));
  const auto files = pipeline::expand_inputs(a.inputs);
  std::vector<pipeline::Prediction> preds(files.size());
  parallel_for(files.size(), worker_count(), [&](std::size_t i) {
    preds[i] = predictor.predict(read_plot(files[i]), opts);
  });

  emit(a.out, out, [&](std::ostream& os) {
    if (a.json) {
      auto arr = nlohmann::json::array();
      for (std::size_t i = 0; i < files.size(); ++i) {
        arr.push_back({{"path", files[i].string()},
                       {"m_mps", preds[i].m_mps},
                       {"sigma", preds[i].sigma},
                       {"rel_unc", preds[i].rel_unc()},
                       {"abs_unc_mps", preds[i].abs_unc_mps()}});
      }
      os << arr.dump(2) << '\n';
      return;
    }
    os << "path,m_mps,sigma,truth_mps,group_id\n";
    for (std::size_t i = 0; i < files.size(); ++i) {
      os << files[i].string() << ',' << format_double(preds[i].m_mps) << ','
         << format_double(preds[i].sigma) << ',';
      const auto it = truth.find(fs::weakly_canonical(files[i]).string());
      if (it != truth.end()) {
        os << format_double(it->second.truth_mps) << ',' << it->second.group_id;
      } else {
        os << ',';
      }
      os << '\n';
    }
  });
}

std::vector<calibration::PredictionRecord> read_predictions(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(Errc::IoError, "cannot read " + path);
  std::string line;
  if (!std::getline(f, line)) throw Error(Errc::MalformedCsv, "empty prediction file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "path,m_mps,sigma,truth_mps,group_id") {
    throw Error(Errc::MalformedCsv, "unexpected prediction header: " + line);
  }
  std::vector<calibration::PredictionRecord> records;
  std::size_t line_no = 1;
  while (std::getline(f, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    const auto bad = [&] {
      return Error(Errc::MalformedCsv, "line " + std::to_string(line_no) + ": " + line);
    };
    if (cells.size() != 5) throw bad();
    try {
      std::size_t used = 0;
      calibration::PredictionRecord r;
      const auto num = [&](const std::string& s) {
        const double v = std::stod(s, &used);
        if (used != s.size()) throw bad();
        return v;
      };
      r.m = num(cells[1]);
      r.sigma = num(cells[2]);
      r.truth = num(cells[3]);
      r.group_id = std::stoi(cells[4], &used);
      if (used != cells[4].size()) throw bad();
      records.push_back(r);
    } catch (const std::logic_error&) {
      throw bad();
    }
  }
  return records;
}

void cmd_calibrate(const CalibrateArgs& a, std::ostream& out) {
  if (a.bins < 1) throw Error(Errc::InvalidArgument, "--bins must be positive");
  const auto records = read_predictions(a.pred);
  const auto report = calibration::bin_calibration(records, a.bins);
  emit(a.out, out, [&](std::ostream& os) {
    os << "bin_index,mean_rel_unc,rms_rel_err,count\n";
    for (std::size_t b = 0; b < report.bins.size(); ++b) {
      const auto& bin = report.bins[b];
      os << b << ',' << format_double(bin.mean_rel_unc) << ',' << format_double(bin.rms_rel_err)
         << ',' << bin.count << '\n';
    }
    os << "mean_abs_pct_dev," << format_double(report.mean_abs_pct_dev) << '\n';
  });
}

void cmd_estimate(const EstimateArgs& a, std::ostream& out) {
  const bool random = a.method == "mixed" || a.method == "ransac";
  if (random && !a.seed) throw Error(Errc::InvalidArgument, "--method " + a.method + " requires --seed");
  const auto files = pipeline::expand_inputs(a.inputs);
  std::vector<classical::ClassicalEstimate> est(files.size());
  parallel_for(files.size(), worker_count(), [&](std::size_t i) {
    const auto plot = read_plot(files[i]);
    if (a.method == "ttp") {
      est[i] = classical::ttp_estimate(plot);
    } else if (a.method == "ransac") {
      classical::RansacParams params;
      params.seed = derive_seed(*a.seed, i);
      est[i] = classical::ransac_estimate(plot, params);
    } else if (a.method == "xcorr") {
      est[i] = classical::xcorr_estimate(plot);
    } else if (a.method == "radon") {
      est[i] = classical::radon_estimate(plot, classical::RadonGrid::standard());
    } else {
      const auto r = classical::radon_estimate(plot, classical::RadonGrid::standard());
      const auto x = classical::xcorr_estimate(plot);
      est[i].sws = classical::mix_labels(r.sws, x.sws, derive_seed(*a.seed, i));
      est[i].quality = std::min(r.quality, x.quality);
    }
  });
  emit(a.out, out, [&](std::ostream& os) {
    os << "path,method,sws_mps,quality\n";
    for (std::size_t i = 0; i < files.size(); ++i) {
      os << files[i].string() << ',' << a.method << ',' << format_double(est[i].sws) << ','
         << format_double(est[i].quality) << '\n';
    }
  });
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Shear wave speed estimation with calibrated uncertainty"};
  app.require_subcommand(1);

  SynthArgs sa;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a labeled synthetic dataset");
  synth_cmd->add_option("--groups", sa.groups, "Number of groups (>= 2)")->required();
  synth_cmd->add_option("--per-group", sa.per_group, "Plots per group")->required();
  synth_cmd->add_option("--seed", sa.seed, "Master seed")->required();
  synth_cmd->add_option("--out", sa.out, "Output directory")->required();
  synth_cmd->add_flag("--force", sa.force, "Write into a non-empty directory");
  synth_cmd->add_flag("--velocity", sa.velocity, "Velocity instead of displacement plots");
  synth_cmd->add_option("--white-min", sa.white_min, "Lower white-noise bound");
  synth_cmd->add_option("--white-max", sa.white_max, "Upper white-noise bound");
  synth_cmd->add_option("--first-group", sa.first_group, "Id of the first group");

  LabelArgs la;
  auto* label_cmd = app.add_subcommand("label", "Relabel a dataset with a classical estimator");
  label_cmd->add_option("--data", la.data, "Dataset directory")->required();
  label_cmd->add_option("--labels", la.labels, "Label CSV (default DATA/labels.csv)");
  label_cmd->add_option("--method", la.method, "true_speed, radon, xcorr or mixed")
      ->required()
      ->check(CLI::IsMember({"true_speed", "radon", "xcorr", "mixed"}));
  label_cmd->add_option("--seed", la.seed, "Seed (required for mixed)");
  label_cmd->add_option("--out", la.out, "Output CSV (default DATA/labels_METHOD.csv)");

  TrainArgs ta;
  auto* train_cmd = app.add_subcommand("train", "Train a network");
  train_cmd->add_option("--data", ta.data, "Dataset directory")->required();
  train_cmd->add_option("--labels", ta.labels, "Label CSV (default DATA/labels.csv)");
  train_cmd->add_option("--epochs", ta.epochs, "Epochs")->capture_default_str();
  train_cmd->add_option("--batch", ta.batch, "Batch size")->capture_default_str();
  train_cmd->add_option("--lr", ta.lr, "Peak learning rate")->capture_default_str();
  train_cmd->add_option("--wd", ta.wd, "Decoupled weight decay")->capture_default_str();
  train_cmd->add_option("--seed", ta.seed, "Seed")->required();
  train_cmd->add_option("--channels", ta.channels, "Channel width")->capture_default_str();
  auto* leave = train_cmd->add_option("--leave-out", ta.leave_out, "Hold out one group");
  auto* loo = train_cmd->add_flag("--loo", ta.loo, "One model per held-out group");
  leave->excludes(loo);
  train_cmd->add_option("--out", ta.out, "Output directory")->required();

  InferArgs ia;
  auto* infer_cmd = app.add_subcommand("infer", "Predict speed and uncertainty");
  infer_cmd->footer(kPreprocessingHelp);
  infer_cmd->add_option("--model", ia.model, "Model file");
  infer_cmd->add_option("--ensemble", ia.ensemble, "Directory of models to average");
  infer_cmd->add_option("--in", ia.inputs, "Plot files or directories")->required();
  infer_cmd->add_flag("--velocity", ia.velocity, "Phase-shift velocity data");
  infer_cmd->add_option("--interp-t", ia.interp_t, "Time interpolation factor");
  infer_cmd->add_option("--ref-dx", ia.ref_dx, "Training lateral pitch (m)")->capture_default_str();
  infer_cmd->add_option("--ref-dt", ia.ref_dt, "Training frame interval (s)")->capture_default_str();
  infer_cmd->add_flag("--json", ia.json, "JSON output");
  infer_cmd->add_option("--labels", ia.labels, "Label CSV to fill truth and group columns");
  infer_cmd->add_option("--out", ia.out, "Output file (default stdout)");

  CalibrateArgs ca;
  auto* cal_cmd = app.add_subcommand("calibrate", "Binned uncertainty calibration");
  cal_cmd->add_option("--pred", ca.pred, "Prediction CSV")->required();
  cal_cmd->add_option("--bins", ca.bins, "Bin count")->capture_default_str();
  cal_cmd->add_option("--out", ca.out, "Output file (default stdout)");

  EstimateArgs ea;
  auto* est_cmd = app.add_subcommand("estimate", "Classical speed estimates");
  est_cmd->add_option("--method", ea.method, "ttp, ransac, xcorr, radon or mixed")
      ->required()
      ->check(CLI::IsMember({"ttp", "ransac", "xcorr", "radon", "mixed"}));
  est_cmd->add_option("--in", ea.inputs, "Plot files or directories")->required();
  est_cmd->add_option("--seed", ea.seed, "Seed (required for ransac and mixed)");
  est_cmd->add_option("--out", ea.out, "Output file (default stdout)");

  std::vector<const char*> argv;
  for (const auto& s : args) argv.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*synth_cmd) cmd_synth(sa, out);
    if (*label_cmd) cmd_label(la, out);
    if (*train_cmd) cmd_train(ta, out, err);
    if (*infer_cmd) cmd_infer(ia, out);
    if (*cal_cmd) cmd_calibrate(ca, out);
    if (*est_cmd) cmd_estimate(ea, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}

}  // namespace swei::cli
