#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "firstcontact/detect.hpp"
#include "firstcontact/evaluate.hpp"
#include "firstcontact/pipeline.hpp"
#include "firstcontact/synth.hpp"

namespace firstcontact {

using Json = nlohmann::json;

inline constexpr int kFormatVersion = 1;
inline constexpr const char* kToolVersion = "firstcontact 0.3.0";

/// Malformed or unreadable dataset/model files.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration: unknown keys, wrong types, out-of-range values.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Configs. Unknown keys throw ConfigError; missing keys keep their defaults.
[[nodiscard]] Json to_json(const SynthConfig& cfg);
[[nodiscard]] SynthConfig synth_config_from_json(const Json& j);
[[nodiscard]] Json to_json(const WindowSpec& spec);
[[nodiscard]] WindowSpec window_spec_from_json(const Json& j);
[[nodiscard]] Json to_json(const TrainSchedule& s);
[[nodiscard]] TrainSchedule train_schedule_from_json(const Json& j);

/// FNV-1a of the compact dump, rendered as 16 hex digits.
[[nodiscard]] std::string config_hash(const Json& config);

struct DatasetManifest {
  int format_version = kFormatVersion;
  std::string preset;
  SynthConfig synth;
  std::vector<Scenario> scenarios;
  std::size_t pinches_per_label = 0;
  WindowSpec windows;
  std::uint64_t seed = 0;
  std::size_t trace_count = 0;
  std::string generator = kToolVersion;
};

[[nodiscard]] Json to_json(const DatasetManifest& m);
[[nodiscard]] DatasetManifest manifest_from_json(const Json& j);

/// Writes manifest.json, traces.bin (little-endian 16-bit codes) and labels.csv.
/// Output is a pure function of the arguments, so equal inputs give equal bytes.
void save_dataset(const std::filesystem::path& dir, const DatasetManifest& manifest,
                  const std::vector<GraspTrace>& traces);

struct Dataset {
  DatasetManifest manifest;
  std::vector<GraspTrace> traces;
};

[[nodiscard]] Dataset load_dataset(const std::filesystem::path& dir);

// Models. Reals are written with round-trip precision.
[[nodiscard]] Json to_json(const KernelModel& m);
[[nodiscard]] KernelModel kernel_model_from_json(const Json& j);
[[nodiscard]] Json to_json(const ConvModel& m);
[[nodiscard]] ConvModel conv_model_from_json(const Json& j);
[[nodiscard]] Json to_json(const StiffnessModel& m);
[[nodiscard]] StiffnessModel stiffness_model_from_json(const Json& j);
[[nodiscard]] Json to_json(const Detector& d);
[[nodiscard]] Detector detector_from_json(const Json& j);

void write_json_file(const std::filesystem::path& path, const Json& j);
[[nodiscard]] Json read_json_file(const std::filesystem::path& path);

// Reports
[[nodiscard]] Json to_json(const GraspReport& r);
[[nodiscard]] Json to_json(const EvalReport& r);
[[nodiscard]] Json to_json(const InferenceStats& s);
[[nodiscard]] Json to_json(const DetectionScore& s);

}  // namespace firstcontact
