#pragma once

#include <optional>
#include <string>

#include "tinymyo/container.hpp"
#include "tinymyo/heads.hpp"
#include "tinymyo/quant.hpp"
#include "tinymyo/sched.hpp"
#include "tinymyo/signal.hpp"

namespace tinymyo {

// Everything the run pipeline needs: model geometry, preprocessing chain,
// windowing, masking and the cost-model hierarchy. Parsed strictly; unknown
// keys are rejected by name.
struct RunConfig {
  ModelConfig model;
  std::vector<signal::FilterSpec> filters;
  signal::NormalizeMode normalize_mode = signal::NormalizeMode::minmax_pm1;
  bool normalize_per_recording = false;  // z-score statistics scope
  signal::WindowSpec window;
  double mask_ratio = 0.5;
  AttentionMaskMode mask_mode = AttentionMaskMode::bidirectional;
  bool quantized = false;
  sched::MemoryHierarchy hierarchy;
  std::uint64_t seed = 0;
};

RunConfig parse_run_config(const std::string& json_text);
std::string run_config_to_json(const RunConfig& cfg);

struct ModelBundle {
  EncoderWeights encoder;
  std::optional<DecoderWeights> decoder;
  std::optional<ClassifierHead> classifier;
  std::optional<RegressionHead> regression;
};

WeightContainer bundle_to_container(const ModelBundle& bundle);
ModelBundle bundle_from_container(const WeightContainer& c);

// Quantized model: int8/int32 payload in the same container format plus a
// sidecar JSON carrying quantization parameters with scales as decimal
// strings.
WeightContainer quantized_to_container(const quant::QuantizedModel& qm);
std::string quant_params_sidecar(const quant::QuantizedModel& qm);
quant::QuantizedModel quantized_from_container(const WeightContainer& c,
                                               const std::string& sidecar_json);

// Preprocessed windows: "windows" f32 [n x T x C] plus sampling metadata.
WeightContainer windows_to_container(const std::vector<signal::WaveformRecord>& windows);
std::vector<signal::WaveformRecord> windows_from_container(const WeightContainer& c);

// Waveform input: CSV with header ch0..ch{C-1} (fs passed separately) or the
// binary container with a "waveform" tensor.
signal::WaveformRecord load_waveform(const std::string& path, double fs_hint);
void save_waveform_container(const std::string& path, const signal::WaveformRecord& w);

}  // namespace tinymyo
