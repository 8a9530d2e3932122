#include "tinymyo/signal.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace tinymyo::signal {

namespace {

constexpr double kPi = std::numbers::pi;

using cd = std::complex<double>;

// Analog Butterworth low-pass prototype poles, cutoff 1 rad/s.
std::vector<cd> prototype_poles(int order) {
  std::vector<cd> poles;
  poles.reserve(order);
  for (int k = 0; k < order; ++k) {
    double theta = kPi * (2.0 * k + order + 1.0) / (2.0 * order);
    poles.emplace_back(std::cos(theta), std::sin(theta));
  }
  return poles;
}

double prewarp(double f_hz, double fs) { return 2.0 * fs * std::tan(kPi * f_hz / fs); }

cd bilinear(cd s, double fs) { return (2.0 * fs + s) / (2.0 * fs - s); }

// Group digital poles into real-coefficient sections. Conjugate partners are
// matched by value; leftover real poles are paired two at a time.
std::vector<Biquad> sections_from_poles(std::vector<cd> poles) {
  const double tol = 1e-9;
  std::vector<Biquad> out;
  std::vector<cd> reals;
  std::vector<char> used(poles.size(), 0);
  for (std::size_t i = 0; i < poles.size(); ++i) {
    if (used[i]) continue;
    if (std::abs(poles[i].imag()) < tol) {
      used[i] = 1;
      reals.push_back(poles[i]);
      continue;
    }
    std::size_t match = poles.size();
    double best = tol;
    for (std::size_t j = i + 1; j < poles.size(); ++j) {
      if (used[j]) continue;
      double d = std::abs(poles[j] - std::conj(poles[i]));
      if (d < best) {
        best = d;
        match = j;
      }
    }
    if (match == poles.size()) throw NumericError("filter design: unpaired complex pole");
    used[i] = used[match] = 1;
    out.push_back({1.0, 0.0, 0.0, -2.0 * poles[i].real(), std::norm(poles[i])});
  }
  for (std::size_t i = 0; i + 1 < reals.size(); i += 2) {
    double p = reals[i].real(), q = reals[i + 1].real();
    out.push_back({1.0, 0.0, 0.0, -(p + q), p * q});
  }
  if (reals.size() % 2 == 1) {
    out.push_back({1.0, 0.0, 0.0, -reals.back().real(), 0.0});
  }
  return out;
}

void normalize_gain_at(CascadedBiquads& f, double f_ref, double fs) {
  double mag = std::abs(f.response(f_ref, fs));
  if (!(mag > 0.0) || !std::isfinite(mag)) throw NumericError("filter design: degenerate passband gain");
  double g = 1.0 / mag;
  f.sections.front().b0 *= g;
  f.sections.front().b1 *= g;
  f.sections.front().b2 *= g;
}

CascadedBiquads design_notch(const FilterSpec& spec, double fs) {
  double w0 = 2.0 * kPi * spec.cutoff_lo_hz / fs;
  double alpha = std::sin(w0) / (2.0 * spec.notch_q);
  double a0 = 1.0 + alpha;
  Biquad s{1.0 / a0, -2.0 * std::cos(w0) / a0, 1.0 / a0,
           -2.0 * std::cos(w0) / a0, (1.0 - alpha) / a0};
  return CascadedBiquads{{s}};
}

double apply_sample(Biquad& bq, double x, double& s1, double& s2) {
  // transposed direct form II
  double y = bq.b0 * x + s1;
  s1 = bq.b1 * x - bq.a1 * y + s2;
  s2 = bq.b2 * x - bq.a2 * y;
  return y;
}

}  // namespace

void WaveformRecord::validate() const {
  if (frames < 1 || channels < 1) throw ValidationError("waveform: frames and channels must be >= 1");
  if (fs <= 0.0) throw ValidationError("waveform: sampling rate must be positive");
  if (samples.size() != static_cast<std::size_t>(frames) * channels)
    throw ShapeError("waveform: sample buffer does not match frames x channels");
  for (double v : samples)
    if (!std::isfinite(v)) throw ValidationError("waveform: non-finite sample");
}

void FilterSpec::validate(double fs) const {
  const double nyquist = fs / 2.0;
  auto check = [&](double f, const char* what) {
    if (!(f > 0.0) || f >= nyquist)
      throw ValidationError(std::string("filter: ") + what + " must lie strictly inside (0, fs/2)");
  };
  switch (kind) {
    case FilterKind::bandpass:
      check(cutoff_lo_hz, "lower cutoff");
      check(cutoff_hi_hz, "upper cutoff");
      if (cutoff_lo_hz >= cutoff_hi_hz)
        throw ValidationError("filter: band-pass cutoffs must be ordered lo < hi");
      break;
    case FilterKind::highpass:
      check(cutoff_lo_hz, "cutoff");
      break;
    case FilterKind::notch:
      check(cutoff_lo_hz, "notch frequency");
      if (!(notch_q > 0.0)) throw ValidationError("filter: notch quality factor must be > 0");
      return;  // order not used
  }
  if (order < 2 || order > 4) throw ValidationError("filter: order must be 2, 3 or 4");
}

std::complex<double> CascadedBiquads::response(double f_hz, double fs) const {
  cd zi = std::exp(cd(0.0, -2.0 * kPi * f_hz / fs));  // z^-1
  cd zi2 = zi * zi;
  cd h(1.0, 0.0);
  for (const Biquad& s : sections)
    h *= (s.b0 + s.b1 * zi + s.b2 * zi2) / (1.0 + s.a1 * zi + s.a2 * zi2);
  return h;
}

double CascadedBiquads::magnitude_db(double f_hz, double fs) const {
  return 20.0 * std::log10(std::abs(response(f_hz, fs)));
}

CascadedBiquads design_butterworth(const FilterSpec& spec, double fs) {
  spec.validate(fs);
  if (spec.kind == FilterKind::notch)
    throw ValidationError("filter: notch is not a Butterworth design");

  const int n = spec.order;
  std::vector<cd> analog = prototype_poles(n);
  std::vector<cd> zpoles;
  CascadedBiquads out;

  if (spec.kind == FilterKind::highpass) {
    double wc = prewarp(spec.cutoff_lo_hz, fs);
    for (cd p : analog) zpoles.push_back(bilinear(wc / p, fs));
    out.sections = sections_from_poles(std::move(zpoles));
    // n analog zeros at s=0 map to z=+1
    int zeros_left = n;
    for (Biquad& s : out.sections) {
      if (zeros_left >= 2 && s.a2 != 0.0) {
        s.b0 = 1.0; s.b1 = -2.0; s.b2 = 1.0;
        zeros_left -= 2;
      } else if (zeros_left >= 1) {
        s.b0 = 1.0; s.b1 = -1.0; s.b2 = 0.0;
        zeros_left -= 1;
      }
    }
    normalize_gain_at(out, fs / 2.0, fs);
    return out;
  }

  // band-pass: s -> (s^2 + w0^2) / (B s)
  double w1 = prewarp(spec.cutoff_lo_hz, fs);
  double w2 = prewarp(spec.cutoff_hi_hz, fs);
  double w0 = std::sqrt(w1 * w2);
  double bw = w2 - w1;
  for (cd p : analog) {
    cd pb = p * bw / 2.0;
    cd disc = std::sqrt(pb * pb - w0 * w0);
    zpoles.push_back(bilinear(pb + disc, fs));
    zpoles.push_back(bilinear(pb - disc, fs));
  }
  out.sections = sections_from_poles(std::move(zpoles));
  // n zeros at z=+1 (from s=0) and n at z=-1 (from infinity): one of each
  // per section keeps coefficients balanced.
  for (Biquad& s : out.sections) {
    s.b0 = 1.0; s.b1 = 0.0; s.b2 = -1.0;
  }
  double f_center = fs / kPi * std::atan(w0 / (2.0 * fs));  // digital image of w0
  normalize_gain_at(out, f_center, fs);
  return out;
}

CascadedBiquads design_filter(const FilterSpec& spec, double fs) {
  spec.validate(fs);
  if (spec.kind == FilterKind::notch) return design_notch(spec, fs);
  return design_butterworth(spec, fs);
}

WaveformRecord apply_filter_chain(const WaveformRecord& x,
                                  const std::vector<FilterSpec>& chain) {
  x.validate();
  WaveformRecord y = x;
  for (const FilterSpec& spec : chain) {
    CascadedBiquads f = design_filter(spec, x.fs);
    for (int c = 0; c < y.channels; ++c) {
      for (Biquad& bq : f.sections) {
        double s1 = 0.0, s2 = 0.0;
        for (int t = 0; t < y.frames; ++t) y.at(t, c) = apply_sample(bq, y.at(t, c), s1, s2);
      }
    }
  }
  return y;
}

WaveformRecord normalize(const WaveformRecord& x, NormalizeMode mode) {
  x.validate();
  WaveformRecord y = x;
  for (int c = 0; c < x.channels; ++c) {
    if (mode == NormalizeMode::minmax_pm1) {
      double lo = x.at(0, c), hi = x.at(0, c);
      for (int t = 1; t < x.frames; ++t) {
        lo = std::min(lo, x.at(t, c));
        hi = std::max(hi, x.at(t, c));
      }
      if (hi == lo) {
        for (int t = 0; t < x.frames; ++t) y.at(t, c) = 0.0;
      } else {
        for (int t = 0; t < x.frames; ++t)
          y.at(t, c) = 2.0 * (x.at(t, c) - lo) / (hi - lo) - 1.0;
      }
    } else {
      double mean = 0.0;
      for (int t = 0; t < x.frames; ++t) mean += x.at(t, c);
      mean /= x.frames;
      double var = 0.0;
      for (int t = 0; t < x.frames; ++t) {
        double d = x.at(t, c) - mean;
        var += d * d;
      }
      var /= x.frames;  // population variance
      if (var == 0.0) {
        for (int t = 0; t < x.frames; ++t) y.at(t, c) = 0.0;
      } else {
        double inv = 1.0 / std::sqrt(var);
        for (int t = 0; t < x.frames; ++t) y.at(t, c) = (x.at(t, c) - mean) * inv;
      }
    }
  }
  return y;
}

void WindowSpec::validate() const {
  if (length_samples < 1) throw ValidationError("window: length must be >= 1");
  if (overlap_fraction < 0.0 || overlap_fraction >= 1.0)
    throw ValidationError("window: overlap must lie in [0, 1)");
  if (stride() < 1) throw ValidationError("window: stride rounds to zero");
}

std::vector<WaveformRecord> segment_windows(const WaveformRecord& x, const WindowSpec& w) {
  x.validate();
  w.validate();
  std::vector<WaveformRecord> out;
  if (x.frames < w.length_samples) return out;
  const int stride = w.stride();
  const int count = (x.frames - w.length_samples) / stride + 1;
  out.reserve(count);
  for (int k = 0; k < count; ++k) {
    WaveformRecord win;
    win.frames = w.length_samples;
    win.channels = x.channels;
    win.fs = x.fs;
    const std::size_t begin = static_cast<std::size_t>(k) * stride * x.channels;
    win.samples.assign(x.samples.begin() + begin,
                       x.samples.begin() + begin + static_cast<std::size_t>(w.length_samples) * x.channels);
    out.push_back(std::move(win));
  }
  return out;
}

WaveformRecord pad_channels(const WaveformRecord& x, int target_channels) {
  x.validate();
  if (x.channels > target_channels)
    throw ValidationError("pad_channels: record has more channels than target");
  if (x.channels == target_channels) return x;
  WaveformRecord y;
  y.frames = x.frames;
  y.channels = target_channels;
  y.fs = x.fs;
  y.samples.assign(static_cast<std::size_t>(x.frames) * target_channels, 0.0);
  for (int t = 0; t < x.frames; ++t)
    for (int c = 0; c < x.channels; ++c) y.at(t, c) = x.at(t, c);
  return y;
}

}  // namespace tinymyo::signal
