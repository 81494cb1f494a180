#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "swei/calibration.hpp"
#include "swei/classical.hpp"
#include "swei/cli.hpp"
#include "swei/core_io.hpp"
#include "swei/nn/network.hpp"
#include "swei/nn/train.hpp"
#include "swei/pipeline.hpp"
#include "swei/preprocess.hpp"
#include "swei/synth.hpp"
#include "swei/uq.hpp"

namespace py = pybind11;
using namespace swei;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;
using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

SpaceTimePlot plot_from_array(const FloatArray& data, double dx, double dt, MotionKind kind) {
  if (data.ndim() != 2) throw Error(Errc::InvalidArgument, "plot data must be 2-D (n_x, n_t)");
  const auto n_x = static_cast<std::size_t>(data.shape(0));
  const auto n_t = static_cast<std::size_t>(data.shape(1));
  std::vector<float> values(data.data(), data.data() + n_x * n_t);
  return SpaceTimePlot(n_x, n_t, dx, dt, std::move(values), kind);
}

py::array_t<float> plot_array(const SpaceTimePlot& p) {
  py::array_t<float> out({p.n_x(), p.n_t()});
  std::copy(p.data().begin(), p.data().end(), out.mutable_data());
  return out;
}

std::vector<double> to_vector(const DoubleArray& a) {
  return std::vector<double>(a.data(), a.data() + a.size());
}

classical::ClassicalEstimate estimate(const SpaceTimePlot& plot, const std::string& method,
                                      std::optional<std::uint64_t> seed) {
  if (method == "ttp") return classical::ttp_estimate(plot);
  if (method == "xcorr") return classical::xcorr_estimate(plot);
  if (method == "radon") return classical::radon_estimate(plot, classical::RadonGrid::standard());
  if (method == "ransac") {
    if (!seed) throw Error(Errc::InvalidArgument, "ransac needs a seed");
    classical::RansacParams params;
    params.seed = *seed;
    return classical::ransac_estimate(plot, params);
  }
  throw Error(Errc::InvalidArgument, "unknown method '" + method + "'");
}

}  // namespace

PYBIND11_MODULE(_swei, m) {
  m.doc() = "Shear wave speed estimation with calibrated log-normal uncertainty";

  // The module attribute keeps the type alive; the handle avoids a static destructor.
  static py::handle error_type =
      py::exception<Error>(m, "SweiError", PyExc_RuntimeError).release();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object inst = error_type(e.what());
      inst.attr("code") = to_string(e.code());
      PyErr_SetObject(error_type.ptr(), inst.ptr());
    }
  });

  py::enum_<MotionKind>(m, "MotionKind")
      .value("displacement", MotionKind::displacement)
      .value("velocity", MotionKind::velocity);

  py::class_<SpaceTimePlot>(m, "Plot")
      .def(py::init(&plot_from_array), py::arg("data"), py::arg("dx"), py::arg("dt"),
           py::arg("kind") = MotionKind::displacement)
      .def_property_readonly("n_x", &SpaceTimePlot::n_x)
      .def_property_readonly("n_t", &SpaceTimePlot::n_t)
      .def_property_readonly("dx", &SpaceTimePlot::dx)
      .def_property_readonly("dt", &SpaceTimePlot::dt)
      .def_property_readonly("kind", &SpaceTimePlot::kind)
      .def_property_readonly("data", &plot_array, "Copy of the samples, shape (n_x, n_t)")
      .def("bitwise_equal", &SpaceTimePlot::bitwise_equal)
      .def("__repr__", [](const SpaceTimePlot& p) {
        std::ostringstream s;
        s << "Plot(n_x=" << p.n_x() << ", n_t=" << p.n_t() << ", dx=" << p.dx()
          << ", dt=" << p.dt() << ")";
        return s.str();
      });

  m.def("read_plot", py::overload_cast<const std::filesystem::path&>(&read_plot), py::arg("path"));
  m.def("write_plot",
        py::overload_cast<const SpaceTimePlot&, const std::filesystem::path&>(&write_plot),
        py::arg("plot"), py::arg("path"));

  // Synthetic data
  m.def(
      "gen_plot",
      [](double c, double t0, double tau, double alpha, double refl_amp, double white_sigma,
         double offset_sigma, std::uint64_t seed, std::size_t n_x, std::size_t n_t, double dx,
         double dt, MotionKind kind) {
        synth::WaveParams w{c, t0, tau, alpha, refl_amp};
        synth::NoiseParams noise{white_sigma, offset_sigma, seed};
        synth::Geometry geo{n_x, n_t, dx, dt};
        return synth::gen_plot(w, noise, geo, kind).plot;
      },
      py::arg("c"), py::arg("t0") = 2.0e-3, py::arg("tau") = synth::kDefaultTau,
      py::arg("alpha") = 0.0, py::arg("refl_amp") = 0.0, py::arg("white_sigma") = 0.0,
      py::arg("offset_sigma") = 0.0, py::arg("seed") = 0, py::arg("n_x") = 16,
      py::arg("n_t") = 64, py::arg("dx") = synth::kDefaultDx, py::arg("dt") = synth::kDefaultDt,
      py::arg("kind") = MotionKind::displacement);
  m.def(
      "gen_dataset",
      [](std::size_t n_groups, std::size_t plots_per_group, std::uint64_t seed, double white_min,
         double white_max, MotionKind kind) {
        synth::GroupConfig gc;
        gc.n_groups = n_groups;
        gc.plots_per_group = plots_per_group;
        gc.seed = seed;
        gc.white_min = white_min;
        gc.white_max = white_max;
        gc.kind = kind;
        py::list out;
        for (auto& p : synth::gen_dataset(gc)) {
          out.append(py::make_tuple(std::move(p.plot), p.truth, p.group_id));
        }
        return out;
      },
      "List of (plot, truth_mps, group_id)", py::arg("n_groups"), py::arg("plots_per_group"),
      py::arg("seed"), py::arg("white_min") = 0.0, py::arg("white_max") = 0.5,
      py::arg("kind") = MotionKind::displacement);

  // Preprocessing
  m.def("normalize_tracks", [](const SpaceTimePlot& p) {
    auto n = preprocess::normalize_tracks(p);
    return py::make_tuple(std::move(n.plot), n.dead_tracks);
  });
  m.def("hilbert_shift", &preprocess::hilbert_shift);
  m.def("resample_time", &preprocess::resample_time, py::arg("plot"), py::arg("factor"));
  m.def(
      "apparent_speed_factor",
      [](const SpaceTimePlot& p, double dx0, double dt0) {
        return preprocess::apparent_speed_factor(p, {dx0, dt0});
      },
      py::arg("plot"), py::arg("dx0") = synth::kDefaultDx, py::arg("dt0") = synth::kDefaultDt);

  // Classical estimators
  py::class_<classical::ClassicalEstimate>(m, "ClassicalEstimate")
      .def_readonly("sws", &classical::ClassicalEstimate::sws)
      .def_readonly("quality", &classical::ClassicalEstimate::quality)
      .def_readonly("clipped", &classical::ClassicalEstimate::clipped);
  m.def("estimate", &estimate, "method: ttp, ransac, xcorr or radon", py::arg("plot"),
        py::arg("method"), py::arg("seed") = py::none());
  m.def("mixed_label", &classical::mixed_label, py::arg("plot"), py::arg("seed"));

  // Uncertainty
  py::class_<LogNormalSpeed>(m, "LogNormalSpeed")
      .def(py::init<double, double>(), py::arg("m"), py::arg("sigma"))
      .def_property_readonly("m", &LogNormalSpeed::m)
      .def_property_readonly("sigma", &LogNormalSpeed::sigma)
      .def_property_readonly("rel_unc", &LogNormalSpeed::rel_unc)
      .def_property_readonly("abs_unc", &LogNormalSpeed::abs_unc);
  m.def(
      "to_estimate", [](double mu, double s) { return uq::to_estimate({mu, s}); }, py::arg("mu"),
      py::arg("s"));
  m.def(
      "to_modulus",
      [](const LogNormalSpeed& est, double rho) {
        const auto g = uq::to_modulus(est, rho);
        return py::make_tuple(g.median_modulus, g.sigma_g);
      },
      "(median modulus in Pa, log-domain sigma)", py::arg("estimate"), py::arg("rho"));
  m.def(
      "weighted_average",
      [](const std::vector<LogNormalSpeed>& est, bool fully_correlated) {
        return uq::weighted_average(est, fully_correlated ? uq::CorrelationMode::fully_correlated
                                                          : uq::CorrelationMode::independent);
      },
      py::arg("estimates"), py::arg("fully_correlated") = false);
  m.def(
      "mle_fit", [](const DoubleArray& y) { return uq::mle_fit(to_vector(y)); },
      py::arg("samples"));

  // Network
  py::class_<NetConfig>(m, "NetConfig")
      .def(py::init([](std::uint32_t in_x, std::uint32_t in_t, std::uint32_t channels) {
             NetConfig c;
             c.in_x = in_x;
             c.in_t = in_t;
             c.channels = channels;
             c.validate();
             return c;
           }),
           py::arg("in_x") = 16, py::arg("in_t") = 64, py::arg("channels") = 32)
      .def_readonly("in_x", &NetConfig::in_x)
      .def_readonly("in_t", &NetConfig::in_t)
      .def_readonly("channels", &NetConfig::channels);

  py::class_<ModelWeights>(m, "Model")
      .def_readonly("config", &ModelWeights::config)
      .def_property_readonly("parameter_count",
                             [](const ModelWeights& w) {
                               std::size_t n = 0;
                               for (const auto& t : w.tensors) n += t.values.size();
                               return n;
                             })
      .def("tensor_names",
           [](const ModelWeights& w) {
             std::vector<std::string> names;
             for (const auto& t : w.tensors) names.push_back(t.name);
             return names;
           })
      .def("bitwise_equal", &ModelWeights::bitwise_equal)
      .def(
          "forward",
          [](const ModelWeights& w, const SpaceTimePlot& plot) {
            const nn::SweiNet net(w);
            nn::Workspace<float> ws(w.config);
            const auto out = nn::forward(net, plot, ws);
            return py::make_tuple(out.mu, out.s);
          },
          "(mu, s) for one canonical-shape plot", py::arg("plot"));

  m.def("init_model", &nn::init_model, py::arg("config"), py::arg("seed"));
  m.def("read_model", py::overload_cast<const std::filesystem::path&>(&read_model),
        py::arg("path"));
  m.def("write_model",
        py::overload_cast<const ModelWeights&, const std::filesystem::path&>(&write_model),
        py::arg("model"), py::arg("path"));
  m.def(
      "train",
      [](const std::vector<SpaceTimePlot>& plots, const DoubleArray& truths,
         const NetConfig& config, std::size_t epochs, std::size_t batch_size, double peak_lr,
         double weight_decay, std::uint64_t seed) {
        const auto y = to_vector(truths);
        if (y.size() != plots.size()) throw Error(Errc::SizeMismatch, "one truth per plot");
        std::vector<LabeledPlot> labeled;
        for (std::size_t i = 0; i < plots.size(); ++i) labeled.emplace_back(plots[i], y[i], 0);
        nn::TrainConfig tc;
        tc.epochs = epochs;
        tc.batch_size = batch_size;
        tc.peak_lr = peak_lr;
        tc.weight_decay = weight_decay;
        tc.seed = seed;
        nn::TrainResult result;
        {
          py::gil_scoped_release release;
          result = nn::train(nn::make_training_set(labeled, config), config, tc);
        }
        std::vector<double> trace;
        for (const auto& e : result.trace) trace.push_back(e.mean_loss);
        return py::make_tuple(std::move(result.weights), trace);
      },
      "(model, per-epoch mean loss)", py::arg("plots"), py::arg("truths"), py::arg("config"),
      py::arg("epochs") = 90, py::arg("batch_size") = 128, py::arg("peak_lr") = 5e-4,
      py::arg("weight_decay") = 1e-4, py::arg("seed") = 0);

  py::class_<pipeline::Predictor>(m, "Predictor")
      .def(py::init<std::vector<ModelWeights>>(), py::arg("models"))
      .def_property_readonly("size", &pipeline::Predictor::size)
      .def(
          "predict",
          [](const pipeline::Predictor& p, const SpaceTimePlot& plot, bool velocity,
             double interp_t, double dx0, double dt0) {
            pipeline::InferOptions opt;
            opt.velocity = velocity;
            opt.interp_t = interp_t;
            opt.ref = {dx0, dt0};
            const auto r = p.predict(plot, opt);
            py::dict d;
            d["m_mps"] = r.m_mps;
            d["sigma"] = r.sigma;
            d["rel_unc"] = r.rel_unc();
            d["abs_unc_mps"] = r.abs_unc_mps();
            return d;
          },
          py::arg("plot"), py::arg("velocity") = false, py::arg("interp_t") = 0.0,
          py::arg("dx0") = synth::kDefaultDx, py::arg("dt0") = synth::kDefaultDt);

  // Calibration
  m.def(
      "bin_calibration",
      [](const DoubleArray& m_pred, const DoubleArray& sigma, const DoubleArray& truth,
         std::size_t n_bins) {
        const auto mv = to_vector(m_pred), sv = to_vector(sigma), tv = to_vector(truth);
        if (mv.size() != sv.size() || mv.size() != tv.size()) {
          throw Error(Errc::SizeMismatch, "m, sigma and truth differ in length");
        }
        std::vector<calibration::PredictionRecord> recs(mv.size());
        for (std::size_t i = 0; i < recs.size(); ++i) {
          recs[i].m = mv[i];
          recs[i].sigma = sv[i];
          recs[i].truth = tv[i];
        }
        const auto report = calibration::bin_calibration(recs, n_bins);
        py::list bins;
        for (const auto& b : report.bins) {
          bins.append(py::make_tuple(b.mean_rel_unc, b.rms_rel_err, b.count));
        }
        return py::make_tuple(bins, report.mean_abs_pct_dev);
      },
      "([(mean_rel_unc, rms_rel_err, count)], mean_abs_pct_dev)", py::arg("m"), py::arg("sigma"),
      py::arg("truth"), py::arg("n_bins") = calibration::kDefaultBins);
  m.def(
      "ensemble_spread",
      [](const DoubleArray& ms) { return calibration::ensemble_spread(to_vector(ms)); },
      py::arg("member_ms"));

  m.def(
      "run_cli",
      [](std::vector<std::string> args) {
        args.insert(args.begin(), "swei");
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release release;
          code = cli::run(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      "Runs one swei command; returns (exit code, stdout, stderr)", py::arg("args"));
}
