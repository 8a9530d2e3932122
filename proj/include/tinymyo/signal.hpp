#pragma once

#include <complex>
#include <vector>

#include "tinymyo/common.hpp"

namespace tinymyo::signal {

// Multichannel waveform, row-major [frames x channels].
struct WaveformRecord {
  std::vector<double> samples;
  int frames = 0;
  int channels = 0;
  double fs = 0.0;

  double& at(int t, int c) { return samples[static_cast<std::size_t>(t) * channels + c]; }
  double at(int t, int c) const { return samples[static_cast<std::size_t>(t) * channels + c]; }
  void validate() const;
};

enum class FilterKind { bandpass, highpass, notch };

struct FilterSpec {
  FilterKind kind = FilterKind::bandpass;
  int order = 4;            // 2..4; unused for notch
  double cutoff_lo_hz = 0;  // the single cutoff for highpass / notch center
  double cutoff_hi_hz = 0;  // bandpass upper edge
  double notch_q = 30.0;

  void validate(double fs) const;
};

struct Biquad {
  double b0, b1, b2;  // numerator
  double a1, a2;      // denominator (a0 normalized to 1)
};

struct CascadedBiquads {
  std::vector<Biquad> sections;

  // H(e^{j 2 pi f / fs}), evaluated directly from the coefficients.
  std::complex<double> response(double f_hz, double fs) const;
  double magnitude_db(double f_hz, double fs) const;
};

// Butterworth band-pass / high-pass as cascaded second-order sections
// (analog prototype, band transform with pre-warped edges, bilinear).
CascadedBiquads design_butterworth(const FilterSpec& spec, double fs);

// Dispatch on FilterSpec::kind; notch is a two-pole/two-zero section.
CascadedBiquads design_filter(const FilterSpec& spec, double fs);

// Forward (causal) filtering, zero initial state, channels independent.
WaveformRecord apply_filter_chain(const WaveformRecord& x,
                                  const std::vector<FilterSpec>& chain);

enum class NormalizeMode { minmax_pm1, zscore };

// Constant channels map to all-zeros under both modes.
WaveformRecord normalize(const WaveformRecord& x, NormalizeMode mode);

struct WindowSpec {
  int length_samples = 1000;
  double overlap_fraction = 0.5;

  int stride() const {
    return static_cast<int>(round_half_away(length_samples * (1.0 - overlap_fraction)));
  }
  void validate() const;
};

// Fixed-length windows at the computed stride; trailing remainder dropped.
std::vector<WaveformRecord> segment_windows(const WaveformRecord& x,
                                            const WindowSpec& w);

// Appends all-zero channels up to target_channels.
WaveformRecord pad_channels(const WaveformRecord& x, int target_channels);

}  // namespace tinymyo::signal
