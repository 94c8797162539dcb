#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "firstcontact/persist.hpp"
#include "firstcontact/pipeline.hpp"
#include "firstcontact/wire.hpp"
#include "firstcontact/workflow.hpp"

namespace py = pybind11;
using namespace firstcontact;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<double> to_vector(const Array& a) {
  if (a.ndim() != 1) throw std::invalid_argument("expected a 1-D array");
  const auto view = a.unchecked<1>();
  std::vector<double> v(static_cast<std::size_t>(view.shape(0)));
  for (py::ssize_t i = 0; i < view.shape(0); ++i) v[static_cast<std::size_t>(i)] = view(i);
  return v;
}

py::array_t<double> to_array(const std::vector<double>& v) {
  py::array_t<double> out(std::vector<py::ssize_t>{static_cast<py::ssize_t>(v.size())});
  auto view = out.mutable_unchecked<1>();
  for (py::ssize_t i = 0; i < view.shape(0); ++i) view(i) = v[static_cast<std::size_t>(i)];
  return out;
}

SynthConfig parse_synth(const std::string& config_json) {
  return config_json.empty() ? SynthConfig{} : synth_config_from_json(Json::parse(config_json));
}

py::dict trace_dict(const GraspTrace& t) {
  py::dict d;
  d["vibration"] = to_array(t.vibration);
  py::array_t<double> force({static_cast<py::ssize_t>(kForceChannels), static_cast<py::ssize_t>(t.size())});
  auto f = force.mutable_unchecked<2>();
  for (std::size_t c = 0; c < kForceChannels; ++c)
    for (std::size_t k = 0; k < t.size(); ++k) f(c, k) = t.force[c][k];
  d["force"] = force;
  d["t_contact1"] = t.t_contact1;
  d["t_contact2"] = t.t_contact2;
  d["shore_a"] = t.label.shore_a();
  d["sample_rate_hz"] = t.sample_rate_hz;
  d["trace_id"] = t.trace_id;
  d["source"] = t.source;
  return d;
}

// Models cross the boundary as their JSON documents.
class Model {
 public:
  explicit Model(StiffnessModel m) : model_(std::move(m)) {}
  static Model from_json(const std::string& text) { return Model(stiffness_model_from_json(Json::parse(text))); }
  [[nodiscard]] std::string to_json_text() const { return firstcontact::to_json(model_).dump(); }
  [[nodiscard]] double predict(const Array& window) const { return predict_value(model_, to_vector(window)); }
  [[nodiscard]] bool classifier() const { return is_classifier(model_); }
  [[nodiscard]] std::size_t window_len() const { return input_len(model_); }
  [[nodiscard]] const StiffnessModel& get() const { return model_; }

 private:
  StiffnessModel model_;
};

}  // namespace

PYBIND11_MODULE(_firstcontact, m) {
  m.doc() = "Stiffness estimation from first-contact vibration";

  py::register_exception<DataError>(m, "DataError");
  py::register_exception<ConfigError>(m, "ConfigError");

  m.attr("SAMPLE_RATE_HZ") = SynthConfig{}.sample_rate_hz;
  m.attr("FORMAT_VERSION") = kFormatVersion;
  m.attr("FRAME_SIZE") = wire::kFrameSize;

  m.def(
      "quantize", [](double v) { return quantize(v, AdcSpec{}); }, py::arg("volts"), "10-bit code for a voltage");
  m.def(
      "dequantize", [](std::uint16_t c) { return dequantize(c, AdcSpec{}); }, py::arg("code"));
  m.def(
      "exp_smooth", [](const Array& x, double alpha) { return to_array(exp_smooth(to_vector(x), alpha)); },
      py::arg("x"), py::arg("alpha") = 0.5);
  m.def(
      "moving_average", [](const Array& x, std::size_t n) { return to_array(moving_average(to_vector(x), n)); },
      py::arg("x"), py::arg("n"));
  m.def(
      "savgol",
      [](const Array& x, int window, int order) {
        return to_array(savgol(to_vector(x), SavGolSpec{window, order}));
      },
      py::arg("x"), py::arg("window_len") = 11, py::arg("poly_order") = 3);

  m.def(
      "gap_law",
      [](const std::string& config_json) {
        const GapLaw g = gap_law(parse_synth(config_json));
        return py::make_tuple(g.mu_ms, g.sigma_ms, g.min_ms);
      },
      py::arg("config_json") = "", "(mu_ms, sigma_ms, min_ms) of the latent contact-gap Normal");
  m.def(
      "synthesize_grasp",
      [](double shore, std::uint64_t seed, const std::string& config_json) {
        Rng rng(seed);
        return trace_dict(synthesize_grasp(parse_synth(config_json), StiffnessLabel(shore), rng));
      },
      py::arg("shore_a"), py::arg("seed") = 0, py::arg("config_json") = "");
  m.def(
      "make_dataset",
      [](const std::string& preset, std::size_t pinches, std::uint64_t seed, const std::string& config_json) {
        if (preset != "real-objects" && preset != "paper-blocks") throw ConfigError("unknown preset " + preset);
        const auto scenarios = preset == "real-objects" ? real_objects() : paper_blocks();
        Rng rng(seed);
        py::list out;
        for (const auto& t : make_dataset(parse_synth(config_json), scenarios, pinches, rng)) out.append(trace_dict(t));
        return out;
      },
      py::arg("preset") = "paper-blocks", py::arg("pinches") = 10, py::arg("seed") = 0, py::arg("config_json") = "");

  py::class_<Model>(m, "Model")
      .def_static("from_json", &Model::from_json, py::arg("text"))
      .def_static(
          "load", [](const std::string& path) { return Model(stiffness_model_from_json(read_json_file(path))); },
          py::arg("path"))
      .def("to_json", &Model::to_json_text)
      .def("predict", &Model::predict, py::arg("window"))
      .def_property_readonly("is_classifier", &Model::classifier)
      .def_property_readonly("window_len", &Model::window_len);

  m.def(
      "train",
      [](const std::string& kind_name, const std::string& preset, std::size_t pinches, std::uint64_t seed) {
        const auto kind = parse_model_kind(kind_name);
        if (!kind) throw ConfigError("unknown model kind " + kind_name);
        SynthConfig cfg;
        cfg.seed = seed;
        Rng rng(seed);
        const auto traces = make_dataset(cfg, preset == "real-objects" ? real_objects() : paper_blocks(), pinches, rng);
        TrainOptions opts;
        opts.seed = seed;
        py::gil_scoped_release release;
        return Model(train_stiffness(*kind, corpus_windows(traces, cfg, WindowSpec{}), opts).model);
      },
      py::arg("kind"), py::arg("preset") = "paper-blocks", py::arg("pinches") = 40, py::arg("seed") = 0,
      "Train on a freshly synthesized corpus; 10% is held out as in the command-line tool");

  m.def(
      "run_grasp",
      [](const Model& model, double shore, std::uint64_t seed) {
        const SynthConfig cfg;
        Rng rng(seed);
        const auto t = synthesize_grasp(cfg, StiffnessLabel(shore), rng);
        const Detector d = calibrated_threshold(cfg, derive_seed(seed, 1));
        return to_json(run_grasp(t, d, model.get())).dump();
      },
      py::arg("model"), py::arg("shore_a"), py::arg("seed") = 0, "Streaming run over one synthesized grasp, as JSON");

  m.def(
      "crc16_ccitt", [](const py::bytes& b) {
        const std::string s = b;
        return wire::crc16_ccitt(std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
      },
      py::arg("data"));
  m.def(
      "encode_frame",
      [](std::uint16_t seq, std::uint32_t ts, std::uint16_t piezo, const std::array<std::uint16_t, kForceChannels>& force) {
        const auto b = wire::encode_frame(wire::Frame{seq, ts, piezo, force});
        return py::bytes(reinterpret_cast<const char*>(b.data()), b.size());
      },
      py::arg("seq"), py::arg("timestamp_us"), py::arg("piezo"), py::arg("force"));
  m.def(
      "decode_stream",
      [](const py::bytes& b) {
        const std::string s = b;
        wire::FrameParser p;
        py::list frames;
        for (const auto& f : p.feed(std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size())))
          frames.append(py::make_tuple(f.seq, f.timestamp_us, f.piezo, f.force));
        return py::make_tuple(frames, p.state().crc_fail_count, p.state().resync_count);
      },
      py::arg("data"), "(frames, crc_fail_count, resync_count)");
}
