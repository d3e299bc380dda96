#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "cardio/estimator.hpp"
#include "cardio/pipeline.hpp"
#include "cardio/synth.hpp"
#include "cardio/tensor.hpp"

namespace py = pybind11;

namespace {

using Options = std::map<std::string, std::string>;

cardio::synth::SynthConfig synth_from(const Options& options) {
  cardio::synth::SynthConfig cfg;
  for (const auto& [k, v] : options) {
    if (!cardio::synth::apply_synth_key(cfg, k, v)) {
      throw py::value_error("unknown synth key '" + k + "'");
    }
  }
  cfg.validate();
  return cfg;
}

cardio::pipeline::PipelineConfig pipeline_from(const Options& options) {
  cardio::pipeline::PipelineConfig cfg;
  for (const auto& [k, v] : options) {
    if (cardio::pipeline::apply_pipeline_key(cfg, k, v)) continue;
    if (cardio::synth::apply_synth_key(cfg.synth, k, v)) continue;
    throw py::value_error("unknown pipeline key '" + k + "'");
  }
  return cfg;
}

py::dict estimate_dict(const cardio::estimator::HrEstimate& e) {
  py::dict d;
  d["valid"] = e.valid;
  d["bpm"] = e.bpm;
  d["t_start_us"] = e.window_start_us;
  d["t_end_us"] = e.window_end_us;
  d["snr_db"] = e.snr_db;
  d["source"] = cardio::estimator::to_string(e.source);
  return d;
}

py::dict report_dict(const cardio::pipeline::RunReport& rep) {
  py::list ests;
  for (const auto& e : rep.estimates) ests.append(estimate_dict(e));
  py::dict d;
  d["windows"] = rep.windows_emitted;
  d["invalid"] = rep.invalid_estimates;
  d["realigns"] = rep.realign_events;
  d["frames_processed"] = rep.frames_processed;
  d["wall_s"] = rep.wall_s;
  d["throughput_fps"] = rep.throughput_fps;
  d["estimates"] = ests;
  d["stats_json"] = rep.stats_json;
  return d;
}

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "cardiostream: synchronized audio/video heart-rate estimation";
  m.attr("__version__") = "0.1.0";

  m.def(
      "synth_capture",
      [](const std::string& path, const Options& options) {
        cardio::synth::synth_to_file(path, synth_from(options));
      },
      py::arg("path"), py::arg("options") = Options{},
      "Write a synthetic capture file; options use the flat config keys.");

  m.def(
      "capture_info",
      [](const std::string& path) {
        const auto cap = cardio::synth::load_capture(path);
        py::dict d;
        d["video_width"] = cap.header.video_width;
        d["video_height"] = cap.header.video_height;
        d["audio_rate"] = cap.header.audio_sample_rate;
        d["fps"] = cap.header.nominal_fps;
        d["packets"] = cap.packets.size();
        return d;
      },
      py::arg("path"));

  m.def(
      "run",
      [](const Options& options) {
        const auto cfg = pipeline_from(options);
        cardio::pipeline::RunReport rep;
        {
          py::gil_scoped_release release;
          rep = cardio::pipeline::run(cfg);
        }
        return report_dict(rep);
      },
      py::arg("options") = Options{},
      "Process a capture file or live synthesis and return the full report.");

  m.def(
      "bench",
      [](const Options& options) {
        const auto cfg = pipeline_from(options);
        cardio::pipeline::RunReport rep;
        {
          py::gil_scoped_release release;
          rep = cardio::pipeline::bench(cfg);
        }
        return report_dict(rep);
      },
      py::arg("options") = Options{}, "run() with pacing forced off.");

  m.def(
      "band_peak",
      [](const DoubleArray& x, double fs) {
        if (x.ndim() != 1) throw py::value_error("band_peak expects a 1-d signal");
        const auto pk = cardio::estimator::band_peak(
            std::span<const double>(x.data(), static_cast<std::size_t>(x.size())), fs);
        py::dict d;
        d["found"] = pk.found;
        d["freq_hz"] = pk.freq_hz;
        d["power"] = pk.power;
        d["snr_db"] = pk.snr_db;
        return d;
      },
      py::arg("x"), py::arg("fs"), "Dominant in-band spectral peak of a sampled signal.");

  m.def(
      "pos_pulse",
      [](const DoubleArray& frames, double fps) {
        if (frames.ndim() != 4 || frames.shape(3) != 3) {
          throw py::value_error("pos_pulse expects frames shaped [T, H, W, 3]");
        }
        cardio::TensorNd t({static_cast<std::size_t>(frames.shape(0)),
                            static_cast<std::size_t>(frames.shape(1)),
                            static_cast<std::size_t>(frames.shape(2)), 3});
        std::memcpy(t.data(), frames.data(), t.size() * sizeof(double));
        return cardio::estimator::pos_pulse(t, fps);
      },
      py::arg("frames"), py::arg("fps"),
      "Plane-orthogonal-to-skin pulse signal from RGB frames in [0, 1].");

  m.def(
      "metrics",
      [](const std::vector<double>& preds, const std::vector<double>& truths) {
        const auto r = cardio::estimator::compute_metrics(preds, truths);
        py::dict d;
        d["mae"] = r.mae;
        d["rmse"] = r.rmse;
        d["mape"] = r.mape;
        return d;
      },
      py::arg("preds"), py::arg("truths"));
}
