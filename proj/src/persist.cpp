#include "firstcontact/persist.hpp"

#include <array>
#include <cstdio>
#include <fstream>
#include <functional>
#include <initializer_list>
#include <iomanip>
#include <sstream>
#include <utility>

#include "firstcontact/random.hpp"

namespace firstcontact {

namespace {

using Setter = std::function<void(const Json&)>;

/// Applies known keys; any other key is a ConfigError.
void assign_fields(const Json& j, const std::string& what,
                   std::initializer_list<std::pair<const char*, Setter>> fields) {
  if (!j.is_object()) throw ConfigError(what + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (const auto& [name, set] : fields) {
      if (key != name) continue;
      known = true;
      try {
        set(value);
      } catch (const Json::exception& e) {
        throw ConfigError(what + "." + key + ": " + e.what());
      }
    }
    if (!known) throw ConfigError(what + ": unknown key '" + key + "'");
  }
}

template <typename T>
Setter into(T& field) {
  return [&field](const Json& v) { field = v.get<T>(); };
}

}  // namespace

Json to_json(const SynthConfig& c) {
  return {{"sample_rate_hz", c.sample_rate_hz},
          {"delta_mean_ms", c.delta_mean_ms},
          {"delta_std_ms", c.delta_std_ms},
          {"delta_min_ms", c.delta_min_ms},
          {"amp_gain_per_shore", c.amp_gain_per_shore},
          {"amp_offset_v", c.amp_offset_v},
          {"osc_freq_hz", c.osc_freq_hz},
          {"damping_per_s", c.damping_per_s},
          {"noise_std_v", c.noise_std_v},
          {"force_rise_ms", c.force_rise_ms},
          {"force_plateau_v", c.force_plateau_v},
          {"adc_bits", c.adc_bits},
          {"adc_ref_v", c.adc_ref_v},
          {"adc_offset_v", c.adc_offset_v},
          {"seed", c.seed},
          {"lead_ms", c.lead_ms},
          {"lead_jitter_ms", c.lead_jitter_ms},
          {"tail_ms", c.tail_ms},
          {"second_contact_gain", c.second_contact_gain},
          {"amp_jitter_sigma", c.amp_jitter_sigma},
          {"damping_jitter", c.damping_jitter},
          {"texture_gain", c.texture_gain}};
}

SynthConfig synth_config_from_json(const Json& j) {
  SynthConfig c;
  assign_fields(j, "synth",
                {{"sample_rate_hz", into(c.sample_rate_hz)},
                 {"delta_mean_ms", into(c.delta_mean_ms)},
                 {"delta_std_ms", into(c.delta_std_ms)},
                 {"delta_min_ms", into(c.delta_min_ms)},
                 {"amp_gain_per_shore", into(c.amp_gain_per_shore)},
                 {"amp_offset_v", into(c.amp_offset_v)},
                 {"osc_freq_hz", into(c.osc_freq_hz)},
                 {"damping_per_s", into(c.damping_per_s)},
                 {"noise_std_v", into(c.noise_std_v)},
                 {"force_rise_ms", into(c.force_rise_ms)},
                 {"force_plateau_v", into(c.force_plateau_v)},
                 {"adc_bits", into(c.adc_bits)},
                 {"adc_ref_v", into(c.adc_ref_v)},
                 {"adc_offset_v", into(c.adc_offset_v)},
                 {"seed", into(c.seed)},
                 {"lead_ms", into(c.lead_ms)},
                 {"lead_jitter_ms", into(c.lead_jitter_ms)},
                 {"tail_ms", into(c.tail_ms)},
                 {"second_contact_gain", into(c.second_contact_gain)},
                 {"amp_jitter_sigma", into(c.amp_jitter_sigma)},
                 {"damping_jitter", into(c.damping_jitter)},
                 {"texture_gain", into(c.texture_gain)}});
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return c;
}

Json to_json(const WindowSpec& s) {
  return {{"detect_history_ms", s.detect_history_ms},
          {"detect_new_ms", s.detect_new_ms},
          {"stiffness_ms", s.stiffness_ms},
          {"sample_rate_hz", s.sample_rate_hz}};
}

WindowSpec window_spec_from_json(const Json& j) {
  WindowSpec s;
  assign_fields(j, "windows",
                {{"detect_history_ms", into(s.detect_history_ms)},
                 {"detect_new_ms", into(s.detect_new_ms)},
                 {"stiffness_ms", into(s.stiffness_ms)},
                 {"sample_rate_hz", into(s.sample_rate_hz)}});
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return s;
}

Json to_json(const TrainSchedule& s) {
  return {{"lr0", s.lr0},           {"beta1", s.beta1},
          {"beta2", s.beta2},       {"adam_eps", s.adam_eps},
          {"epochs", s.epochs},     {"decay_every", s.decay_every},
          {"decay_factor", s.decay_factor}, {"batch_size", s.batch_size},
          {"validation_fraction", s.validation_fraction}, {"seed", s.seed},
          {"restore_best", s.restore_best}};
}

TrainSchedule train_schedule_from_json(const Json& j) {
  TrainSchedule s;
  assign_fields(j, "schedule",
                {{"lr0", into(s.lr0)},
                 {"beta1", into(s.beta1)},
                 {"beta2", into(s.beta2)},
                 {"adam_eps", into(s.adam_eps)},
                 {"epochs", into(s.epochs)},
                 {"decay_every", into(s.decay_every)},
                 {"decay_factor", into(s.decay_factor)},
                 {"batch_size", into(s.batch_size)},
                 {"validation_fraction", into(s.validation_fraction)},
                 {"seed", into(s.seed)},
                 {"restore_best", into(s.restore_best)}});
  return s;
}

std::string config_hash(const Json& config) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << fnv1a(config.dump());
  return os.str();
}

Json to_json(const DatasetManifest& m) {
  Json scenarios = Json::array();
  for (const auto& s : m.scenarios) {
    Json e = {{"name", s.name}, {"shore_a", s.label.shore_a()}};
    e["material"] = s.material ? Json(*s.material) : Json(nullptr);
    scenarios.push_back(e);
  }
  return {{"format_version", m.format_version},
          {"preset", m.preset},
          {"synth", to_json(m.synth)},
          {"scenarios", scenarios},
          {"pinches_per_label", m.pinches_per_label},
          {"windows", to_json(m.windows)},
          {"window_samples",
           {{"detect_history", m.windows.history_len()},
            {"detect_new", m.windows.new_len()},
            {"detect", m.windows.detect_len()},
            {"stiffness", m.windows.stiffness_len()}}},
          {"seed", m.seed},
          {"trace_count", m.trace_count},
          {"generator", m.generator}};
}

DatasetManifest manifest_from_json(const Json& j) {
  try {
    DatasetManifest m;
    m.format_version = j.at("format_version").get<int>();
    if (m.format_version != kFormatVersion)
      throw DataError("dataset format_version " + std::to_string(m.format_version) + " is not supported");
    m.preset = j.at("preset").get<std::string>();
    m.synth = synth_config_from_json(j.at("synth"));
    for (const auto& s : j.at("scenarios")) {
      std::optional<std::string> material;
      if (!s.at("material").is_null()) material = s.at("material").get<std::string>();
      m.scenarios.push_back({s.at("name").get<std::string>(), StiffnessLabel(s.at("shore_a").get<double>()), material});
    }
    m.pinches_per_label = j.at("pinches_per_label").get<std::size_t>();
    m.windows = window_spec_from_json(j.at("windows"));
    m.seed = j.at("seed").get<std::uint64_t>();
    m.trace_count = j.at("trace_count").get<std::size_t>();
    m.generator = j.at("generator").get<std::string>();
    return m;
  } catch (const Json::exception& e) {
    throw DataError(std::string("manifest: ") + e.what());
  } catch (const ConfigError& e) {
    throw DataError(std::string("manifest: ") + e.what());
  }
}

namespace {

constexpr std::array<char, 4> kTraceMagic{'F', 'C', 'T', 'R'};

class ByteWriter {
 public:
  explicit ByteWriter(std::vector<char>& out) : out_(out) {}
  void raw(const char* p, std::size_t n) { out_.insert(out_.end(), p, p + n); }
  template <typename T>
  void le(T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void f64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    le(bits);
  }

 private:
  std::vector<char>& out_;
};

class ByteReader {
 public:
  ByteReader(const std::vector<char>& in) : in_(in) {}
  bool done() const { return pos_ >= in_.size(); }
  void raw(char* p, std::size_t n) {
    need(n);
    std::memcpy(p, in_.data() + pos_, n);
    pos_ += n;
  }
  template <typename T>
  T le() {
    need(sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
      v |= static_cast<T>(static_cast<T>(static_cast<unsigned char>(in_[pos_ + i])) << (8 * i));
    pos_ += sizeof(T);
    return v;
  }
  double f64() {
    const auto bits = le<std::uint64_t>();
    double v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
  }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw DataError("traces.bin: truncated record");
  }
  const std::vector<char>& in_;
  std::size_t pos_ = 0;
};

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write " + path.string());
  f << text;
}

std::vector<char> read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot read " + path.string());
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

std::string format_shore(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void save_dataset(const std::filesystem::path& dir, const DatasetManifest& manifest,
                  const std::vector<GraspTrace>& traces) {
  std::filesystem::create_directories(dir);
  const AdcSpec adc = manifest.synth.adc();
  DatasetManifest m = manifest;
  m.trace_count = traces.size();
  write_file(dir / "manifest.json", to_json(m).dump(2) + "\n");

  std::vector<char> bin;
  ByteWriter w(bin);
  std::string csv = "trace_id,source,shore_a,t_contact1,t_contact2,samples\n";
  for (const auto& t : traces) {
    t.check_invariants();
    w.raw(kTraceMagic.data(), kTraceMagic.size());
    w.le<std::uint16_t>(kFormatVersion);
    w.le<std::uint16_t>(static_cast<std::uint16_t>(t.source.size()));
    w.le<std::uint64_t>(t.trace_id);
    w.le<std::uint32_t>(static_cast<std::uint32_t>(t.size()));
    w.le<std::uint32_t>(static_cast<std::uint32_t>(t.t_contact1));
    w.le<std::uint32_t>(static_cast<std::uint32_t>(t.t_contact2));
    w.f64(t.label.shore_a());
    w.f64(t.sample_rate_hz);
    w.raw(t.source.data(), t.source.size());
    for (double v : t.vibration) w.le<std::uint16_t>(quantize(v, adc));
    for (const auto& ch : t.force)
      for (double v : ch) w.le<std::uint16_t>(quantize(v, adc));
    csv += std::to_string(t.trace_id) + "," + t.source + "," + format_shore(t.label.shore_a()) + "," +
           std::to_string(t.t_contact1) + "," + std::to_string(t.t_contact2) + "," + std::to_string(t.size()) + "\n";
  }
  write_file(dir / "traces.bin", std::string(bin.begin(), bin.end()));
  write_file(dir / "labels.csv", csv);
}

Dataset load_dataset(const std::filesystem::path& dir) {
  Dataset d;
  d.manifest = manifest_from_json(read_json_file(dir / "manifest.json"));
  const AdcSpec adc = d.manifest.synth.adc();
  const std::vector<char> bin = read_file(dir / "traces.bin");
  ByteReader r(bin);
  while (!r.done()) {
    std::array<char, 4> magic{};
    r.raw(magic.data(), magic.size());
    if (magic != kTraceMagic) throw DataError("traces.bin: bad record magic");
    if (r.le<std::uint16_t>() != kFormatVersion) throw DataError("traces.bin: unsupported record version");
    const auto source_len = r.le<std::uint16_t>();
    GraspTrace t;
    t.trace_id = r.le<std::uint64_t>();
    const auto n = r.le<std::uint32_t>();
    t.t_contact1 = r.le<std::uint32_t>();
    t.t_contact2 = r.le<std::uint32_t>();
    try {
      t.label = StiffnessLabel(r.f64());
    } catch (const std::invalid_argument& e) {
      throw DataError(std::string("traces.bin: ") + e.what());
    }
    t.sample_rate_hz = r.f64();
    t.source.resize(source_len);
    r.raw(t.source.data(), source_len);
    t.vibration.resize(n);
    for (auto& v : t.vibration) v = dequantize(r.le<std::uint16_t>(), adc);
    for (auto& ch : t.force) {
      ch.resize(n);
      for (auto& v : ch) v = dequantize(r.le<std::uint16_t>(), adc);
    }
    try {
      t.check_invariants();
    } catch (const std::logic_error& e) {
      throw DataError(std::string("traces.bin: ") + e.what());
    }
    d.traces.push_back(std::move(t));
  }
  if (d.traces.size() != d.manifest.trace_count)
    throw DataError("traces.bin holds " + std::to_string(d.traces.size()) + " traces, manifest says " +
                    std::to_string(d.manifest.trace_count));
  return d;
}

namespace {

Json to_json(const Preprocess& p) {
  return {{"center", p.center == Preprocess::Center::window_mean ? "window_mean" : "fixed"},
          {"center_value", p.center_value},
          {"scale", p.scale}};
}

Preprocess preprocess_from_json(const Json& j) {
  Preprocess p;
  const auto c = j.at("center").get<std::string>();
  if (c == "window_mean") p.center = Preprocess::Center::window_mean;
  else if (c == "fixed") p.center = Preprocess::Center::fixed;
  else throw DataError("unknown preprocess center '" + c + "'");
  p.center_value = j.at("center_value").get<double>();
  p.scale = j.at("scale").get<double>();
  return p;
}

Json to_json(const TargetScale& t) { return {{"mean", t.mean}, {"scale", t.scale}}; }

TargetScale target_from_json(const Json& j) { return {j.at("mean").get<double>(), j.at("scale").get<double>()}; }

Json to_json(const BaselineStats& b) {
  return {{"mean_v", b.mean_v}, {"sigma_v", b.sigma_v}, {"n_samples", b.n_samples}};
}

BaselineStats baseline_from_json(const Json& j) {
  return {j.at("mean_v").get<double>(), j.at("sigma_v").get<double>(), j.at("n_samples").get<std::size_t>()};
}

void check_version(const Json& j, const char* type) {
  if (j.at("format_version").get<int>() != kFormatVersion)
    throw DataError(std::string(type) + ": unsupported format_version");
  if (j.at("type").get<std::string>() != type)
    throw DataError(std::string("expected a ") + type + " record, found " + j.at("type").get<std::string>());
}

template <typename F>
auto guarded(const char* what, F&& f) {
  try {
    return f();
  } catch (const Json::exception& e) {
    throw DataError(std::string(what) + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string(what) + ": " + e.what());
  } catch (const std::logic_error& e) {
    throw DataError(std::string(what) + ": " + e.what());
  }
}

const char* layer_name(LayerSpec::Type t) {
  switch (t) {
    case LayerSpec::Type::conv1d: return "conv1d";
    case LayerSpec::Type::relu: return "relu";
    case LayerSpec::Type::maxpool: return "maxpool";
    case LayerSpec::Type::dense: return "dense";
  }
  return "?";
}

LayerSpec::Type layer_type(const std::string& s) {
  if (s == "conv1d") return LayerSpec::Type::conv1d;
  if (s == "relu") return LayerSpec::Type::relu;
  if (s == "maxpool") return LayerSpec::Type::maxpool;
  if (s == "dense") return LayerSpec::Type::dense;
  throw DataError("unknown layer type '" + s + "'");
}

}  // namespace

Json to_json(const KernelModel& m) {
  Json pairs = Json::array();
  for (const auto& p : m.pair_models)
    pairs.push_back({{"positive_class", p.positive_class},
                     {"negative_class", p.negative_class},
                     {"sv", p.sv},
                     {"coef", p.coef},
                     {"bias", p.bias},
                     {"dual_objective", p.dual_objective},
                     {"kkt_gap", p.kkt_gap}});
  return {{"format_version", kFormatVersion},
          {"type", "kernel"},
          {"kind", m.kind == KernelModel::Kind::classifier ? "classifier" : "regressor"},
          {"input_len", m.input_len},
          {"support_vectors", m.support_vectors},
          {"dual_coefs", m.dual_coefs},
          {"bias", m.bias},
          {"gamma", m.gamma},
          {"c_penalty", m.c_penalty},
          {"epsilon", m.epsilon ? Json(*m.epsilon) : Json(nullptr)},
          {"classes", m.classes},
          {"pair_models", pairs},
          {"preprocess", to_json(m.preprocess)},
          {"target", to_json(m.target)},
          {"seed", m.seed}};
}

KernelModel kernel_model_from_json(const Json& j) {
  return guarded("kernel model", [&] {
    check_version(j, "kernel");
    KernelModel m;
    const auto kind = j.at("kind").get<std::string>();
    if (kind != "classifier" && kind != "regressor") throw DataError("unknown kernel model kind '" + kind + "'");
    m.kind = kind == "classifier" ? KernelModel::Kind::classifier : KernelModel::Kind::regressor;
    m.input_len = j.at("input_len").get<std::size_t>();
    m.support_vectors = j.at("support_vectors").get<FeatureRows>();
    m.dual_coefs = j.at("dual_coefs").get<std::vector<double>>();
    m.bias = j.at("bias").get<double>();
    m.gamma = j.at("gamma").get<double>();
    m.c_penalty = j.at("c_penalty").get<double>();
    if (!j.at("epsilon").is_null()) m.epsilon = j.at("epsilon").get<double>();
    m.classes = j.at("classes").get<std::vector<double>>();
    for (const auto& p : j.at("pair_models")) {
      PairModel pm;
      pm.positive_class = p.at("positive_class").get<double>();
      pm.negative_class = p.at("negative_class").get<double>();
      pm.sv = p.at("sv").get<std::vector<std::size_t>>();
      pm.coef = p.at("coef").get<std::vector<double>>();
      pm.bias = p.at("bias").get<double>();
      pm.dual_objective = p.at("dual_objective").get<double>();
      pm.kkt_gap = p.at("kkt_gap").get<double>();
      m.pair_models.push_back(std::move(pm));
    }
    m.preprocess = preprocess_from_json(j.at("preprocess"));
    m.target = target_from_json(j.at("target"));
    m.seed = j.at("seed").get<std::uint64_t>();
    m.check_invariants();
    return m;
  });
}

Json to_json(const ConvModel& m) {
  Json layers = Json::array();
  for (const auto& l : m.spec().layers)
    layers.push_back({{"type", layer_name(l.type)}, {"channels", l.channels}, {"kernel_len", l.kernel_len}, {"stride", l.stride}});
  const auto params = m.params();
  return {{"format_version", kFormatVersion},
          {"type", "conv"},
          {"spec",
           {{"input_len", m.spec().input_len},
            {"head", m.spec().head == ConvHead::scalar ? "scalar" : "softmax"},
            {"layers", layers}}},
          {"params", std::vector<double>(params.begin(), params.end())},
          {"preprocess", to_json(m.preprocess)},
          {"target", to_json(m.target)},
          {"classes", m.classes}};
}

ConvModel conv_model_from_json(const Json& j) {
  return guarded("conv model", [&] {
    check_version(j, "conv");
    ConvSpec spec;
    const Json& s = j.at("spec");
    spec.input_len = s.at("input_len").get<std::size_t>();
    const auto head = s.at("head").get<std::string>();
    if (head != "scalar" && head != "softmax") throw DataError("unknown conv head '" + head + "'");
    spec.head = head == "scalar" ? ConvHead::scalar : ConvHead::softmax;
    for (const auto& l : s.at("layers"))
      spec.layers.push_back({layer_type(l.at("type").get<std::string>()), l.at("channels").get<std::size_t>(),
                             l.at("kernel_len").get<std::size_t>(), l.at("stride").get<std::size_t>()});
    ConvModel m = ConvModel::build(spec, 0);
    const auto params = j.at("params").get<std::vector<double>>();
    if (params.size() != m.param_count()) throw DataError("conv model: parameter count does not match its layers");
    std::copy(params.begin(), params.end(), m.params().begin());
    m.preprocess = preprocess_from_json(j.at("preprocess"));
    m.target = target_from_json(j.at("target"));
    m.classes = j.at("classes").get<std::vector<double>>();
    return m;
  });
}

Json to_json(const StiffnessModel& m) {
  return std::visit([](const auto& v) { return to_json(v); }, m);
}

StiffnessModel stiffness_model_from_json(const Json& j) {
  const auto type = guarded("model", [&] { return j.at("type").get<std::string>(); });
  if (type == "kernel") return kernel_model_from_json(j);
  if (type == "conv") return conv_model_from_json(j);
  throw DataError("not a stiffness model: type '" + type + "'");
}

Json to_json(const Detector& d) {
  if (const auto* t = std::get_if<ThresholdDetector>(&d))
    return {{"format_version", kFormatVersion},
            {"type", "threshold_detector"},
            {"baseline", to_json(t->baseline)},
            {"multiplier", t->multiplier},
            {"floor_v", t->floor_v}};
  const auto& s = std::get<SvmDetector>(d);
  return {{"format_version", kFormatVersion},
          {"type", "svm_detector"},
          {"baseline", to_json(s.baseline)},
          {"floor_v", s.floor_v},
          {"localize_onset", s.localize_onset},
          {"onset_multiplier", s.onset_multiplier},
          {"model", to_json(s.model)}};
}

Detector detector_from_json(const Json& j) {
  return guarded("detector", [&]() -> Detector {
    const auto type = j.at("type").get<std::string>();
    if (type == "threshold_detector") {
      check_version(j, "threshold_detector");
      ThresholdDetector t;
      t.baseline = baseline_from_json(j.at("baseline"));
      t.multiplier = j.at("multiplier").get<double>();
      t.floor_v = j.at("floor_v").get<double>();
      return t;
    }
    check_version(j, "svm_detector");
    SvmDetector s;
    s.baseline = baseline_from_json(j.at("baseline"));
    s.floor_v = j.at("floor_v").get<double>();
    s.localize_onset = j.at("localize_onset").get<bool>();
    s.onset_multiplier = j.at("onset_multiplier").get<double>();
    s.model = kernel_model_from_json(j.at("model"));
    return s;
  });
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  write_file(path, j.dump(1) + "\n");
}

Json read_json_file(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  try {
    return Json::parse(bytes.begin(), bytes.end());
  } catch (const Json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

Json to_json(const InferenceStats& s) {
  return {{"mean_ms", s.mean_ms}, {"p99_ms", s.p99_ms}, {"samples", s.samples}};
}

Json to_json(const GraspReport& r) {
  const auto& l = r.ledger;
  return {{"trace_id", r.trace_id},
          {"source", r.source},
          {"detected", r.detection.detected},
          {"detect_index", r.detection.detect_index ? Json(*r.detection.detect_index) : Json(nullptr)},
          {"method", r.detection.method == DetectMethod::svm ? "svm" : "threshold"},
          {"windows_scanned", r.detection.windows_scanned},
          {"predicted_shore", r.predicted_shore ? Json(*r.predicted_shore) : Json(nullptr)},
          {"true_shore", r.true_shore},
          {"force_at_estimate_v", r.force_at_estimate_v ? Json(*r.force_at_estimate_v) : Json(nullptr)},
          {"ledger",
           {{"detect_lag_ms", l.detect_lag_ms},
            {"collect_ms", l.collect_ms},
            {"inference_ms", l.inference_ms},
            {"total_ms", l.total_ms},
            {"budget_ms", l.budget_ms},
            {"within_budget", l.within_budget}}}};
}

Json to_json(const EvalReport& r) {
  Json j = {{"task", r.task == Task::discrimination ? "discrimination" : "regression"},
            {"samples", r.samples},
            {"mse_shore", r.mse_shore ? Json(*r.mse_shore) : Json(nullptr)},
            {"rmse_shore", r.rmse_shore ? Json(*r.rmse_shore) : Json(nullptr)},
            {"inference", to_json(r.inference)}};
  if (r.accuracy) j["accuracy"] = *r.accuracy;
  if (!r.confusion.empty()) {
    j["classes"] = r.classes;
    j["confusion"] = r.confusion;
  }
  Json objects = Json::object();
  for (const auto& [name, o] : r.per_object) {
    double sum = 0.0;
    double ss = 0.0;
    for (double p : o.predictions) {
      sum += p;
      ss += (p - o.true_shore) * (p - o.true_shore);
    }
    const auto n = static_cast<double>(o.predictions.size());
    objects[name] = {{"true_shore", o.true_shore},
                     {"n", o.predictions.size()},
                     {"mean_prediction", sum / n},
                     {"rmse", std::sqrt(ss / n)}};
  }
  j["per_object"] = objects;
  return j;
}

Json to_json(const DetectionScore& s) {
  return {{"true_positive", s.true_positive}, {"false_positive", s.false_positive},
          {"false_negative", s.false_negative}, {"accuracy", s.accuracy},
          {"mean_lag_ms", s.mean_lag_ms},       {"tolerance_ms", s.tolerance_ms}};
}

}  // namespace firstcontact
