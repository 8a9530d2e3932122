#include <doctest.h>

#include <cmath>

#include "test_util.hpp"
#include "tinymyo/signal.hpp"

using namespace tinymyo;
using namespace tinymyo::signal;

namespace {

constexpr double kPi = 3.14159265358979323846;

WaveformRecord make_record(int frames, int channels, double fs) {
  WaveformRecord w;
  w.frames = frames;
  w.channels = channels;
  w.fs = fs;
  w.samples.assign(static_cast<std::size_t>(frames) * channels, 0.0);
  return w;
}

WaveformRecord sine_record(double freq, double fs, int frames, double amp = 1.0) {
  WaveformRecord w = make_record(frames, 1, fs);
  for (int t = 0; t < frames; ++t) w.at(t, 0) = amp * std::sin(2.0 * kPi * freq * t / fs);
  return w;
}

double tail_rms(const WaveformRecord& w, int tail) {
  double acc = 0.0;
  for (int t = w.frames - tail; t < w.frames; ++t) acc += w.at(t, 0) * w.at(t, 0);
  return std::sqrt(acc / tail);
}

FilterSpec bandpass(double lo, double hi, int order = 4) {
  FilterSpec f;
  f.kind = FilterKind::bandpass;
  f.order = order;
  f.cutoff_lo_hz = lo;
  f.cutoff_hi_hz = hi;
  return f;
}

FilterSpec notch(double f0, double q = 30.0) {
  FilterSpec f;
  f.kind = FilterKind::notch;
  f.cutoff_lo_hz = f0;
  f.notch_q = q;
  return f;
}

}  // namespace

TEST_SUITE("signal") {

TEST_CASE("butterworth bandpass edges sit at -3 dB") {
  const FilterSpec spec = bandpass(20.0, 450.0);
  const CascadedBiquads f = design_butterworth(spec, 2000.0);
  CHECK(f.sections.size() == 4);  // order-n band-pass -> n biquads
  const double w0 = std::sqrt((2 * 2000 * std::tan(kPi * 20 / 2000)) *
                              (2 * 2000 * std::tan(kPi * 450 / 2000)));
  const double f_center = 2000.0 / kPi * std::atan(w0 / (2 * 2000.0));
  const double center_db = f.magnitude_db(f_center, 2000.0);
  CHECK(f.magnitude_db(20.0, 2000.0) - center_db == doctest::Approx(-3.0).epsilon(0.2));
  CHECK(f.magnitude_db(450.0, 2000.0) - center_db == doctest::Approx(-3.0).epsilon(0.2));
  CHECK(f.magnitude_db(20.0, 2000.0) - center_db <= -2.5);
  CHECK(f.magnitude_db(20.0, 2000.0) - center_db >= -3.5);
  CHECK(f.magnitude_db(450.0, 2000.0) - center_db <= -2.5);
  CHECK(f.magnitude_db(450.0, 2000.0) - center_db >= -3.5);
}

TEST_CASE("passband center nearly flat for 20-90 at fs=200") {
  const CascadedBiquads f = design_butterworth(bandpass(20.0, 90.0), 200.0);
  CHECK(f.magnitude_db(55.0, 200.0) >= -0.5);
}

TEST_CASE("dc through band-pass settles to zero") {
  WaveformRecord w = make_record(4000, 1, 2000.0);
  for (double& v : w.samples) v = 1.0;
  const WaveformRecord y = apply_filter_chain(w, {bandpass(20.0, 450.0)});
  CHECK(std::abs(y.at(y.frames - 1, 0)) <= 1e-6);
}

TEST_CASE("cutoff at or above nyquist is rejected") {
  CHECK_THROWS_AS(design_butterworth(bandpass(20.0, 1000.0), 2000.0), ValidationError);
  CHECK_THROWS_AS(design_butterworth(bandpass(20.0, 1200.0), 2000.0), ValidationError);
  FilterSpec hp;
  hp.kind = FilterKind::highpass;
  hp.cutoff_lo_hz = 100.0;
  CHECK_NOTHROW(design_butterworth(hp, 2000.0));
  hp.order = 5;
  CHECK_THROWS_AS(design_butterworth(hp, 2000.0), ValidationError);
}

TEST_CASE("notch kills its center tone by 30 dB") {
  const WaveformRecord x = sine_record(50.0, 2000.0, 8000);
  const WaveformRecord y = apply_filter_chain(x, {notch(50.0)});
  const double in_rms = tail_rms(x, 2000);
  const double out_rms = tail_rms(y, 2000);
  CHECK(20.0 * std::log10(out_rms / in_rms) <= -30.0);
}

TEST_CASE("empty chain is the identity") {
  std::mt19937_64 rng(7);
  WaveformRecord w = make_record(100, 3, 2000.0);
  for (double& v : w.samples) v = testutil::gauss(rng);
  const WaveformRecord y = apply_filter_chain(w, {});
  CHECK(y.samples == w.samples);
}

TEST_CASE("in-band tone passes at the designed gain") {
  // oracle: evaluate the designed transfer function, then check the
  // time-domain steady state against it
  const CascadedBiquads f = design_butterworth(bandpass(20.0, 90.0), 200.0);
  const double gain = std::abs(f.response(55.0, 200.0));
  const WaveformRecord x = sine_record(55.0, 200.0, 2000);
  const WaveformRecord y = apply_filter_chain(x, {bandpass(20.0, 90.0)});
  const double measured = tail_rms(y, 400) * std::sqrt(2.0);
  CHECK(measured == doctest::Approx(gain).epsilon(0.02));
  CHECK(std::abs(measured - 1.0) <= 0.10);  // within 10% of the input amplitude
}

TEST_CASE("filtering is linear") {
  std::mt19937_64 rng(11);
  WaveformRecord x = make_record(500, 2, 2000.0), y = make_record(500, 2, 2000.0);
  for (double& v : x.samples) v = testutil::gauss(rng);
  for (double& v : y.samples) v = testutil::gauss(rng);
  const double a = 1.7, b = -0.6;
  WaveformRecord mix = x;
  for (std::size_t i = 0; i < mix.samples.size(); ++i)
    mix.samples[i] = a * x.samples[i] + b * y.samples[i];
  const std::vector<FilterSpec> chain = {bandpass(20.0, 450.0), notch(50.0)};
  const WaveformRecord fx = apply_filter_chain(x, chain);
  const WaveformRecord fy = apply_filter_chain(y, chain);
  const WaveformRecord fmix = apply_filter_chain(mix, chain);
  double max_rel = 0.0;
  for (std::size_t i = 0; i < fmix.samples.size(); ++i) {
    const double want = a * fx.samples[i] + b * fy.samples[i];
    max_rel = std::max(max_rel, std::abs(fmix.samples[i] - want) /
                                    std::max(1.0, std::abs(want)));
  }
  CHECK(max_rel <= 1e-9);
}

TEST_CASE("magnitude decays monotonically outside the passband") {
  const CascadedBiquads f = design_butterworth(bandpass(20.0, 450.0), 2000.0);
  double prev = -1.0;
  for (int i = 0; i < 30; ++i) {  // log grid below the passband
    const double freq = 0.5 * std::pow(18.0 / 0.5, i / 29.0);
    const double mag = std::abs(f.response(freq, 2000.0));
    CHECK(mag >= prev);
    prev = mag;
  }
  prev = 2.0;
  for (int i = 0; i < 30; ++i) {  // log grid above the passband
    const double freq = 470.0 * std::pow(990.0 / 470.0, i / 29.0);
    const double mag = std::abs(f.response(freq, 2000.0));
    CHECK(mag <= prev);
    prev = mag;
  }
}

TEST_CASE("normalize examples") {
  WaveformRecord w = make_record(3, 1, 100.0);
  w.at(0, 0) = 0.0;
  w.at(1, 0) = 5.0;
  w.at(2, 0) = 10.0;
  const WaveformRecord mm = normalize(w, NormalizeMode::minmax_pm1);
  CHECK(mm.at(0, 0) == doctest::Approx(-1.0));
  CHECK(mm.at(1, 0) == doctest::Approx(0.0));
  CHECK(mm.at(2, 0) == doctest::Approx(1.0));

  WaveformRecord c = make_record(3, 1, 100.0);
  for (double& v : c.samples) v = 1.0;
  const WaveformRecord z = normalize(c, NormalizeMode::zscore);
  for (double v : z.samples) CHECK(v == 0.0);

  WaveformRecord s = make_record(3, 1, 100.0);
  s.at(0, 0) = 2.0;
  s.at(1, 0) = 4.0;
  s.at(2, 0) = 6.0;
  const WaveformRecord zs = normalize(s, NormalizeMode::zscore);
  double mean = 0.0, var = 0.0;
  for (double v : zs.samples) mean += v;
  mean /= 3.0;
  for (double v : zs.samples) var += (v - mean) * (v - mean);
  var /= 3.0;
  CHECK(std::abs(mean) <= 1e-9);
  CHECK(std::abs(std::sqrt(var) - 1.0) <= 1e-6);
}

TEST_CASE("minmax output ignores positive affine rescaling") {
  std::mt19937_64 rng(3);
  WaveformRecord w = make_record(64, 2, 100.0);
  for (double& v : w.samples) v = testutil::gauss(rng);
  WaveformRecord scaled = w;
  for (double& v : scaled.samples) v = 3.7 * v + 1.2;
  const WaveformRecord a = normalize(w, NormalizeMode::minmax_pm1);
  const WaveformRecord b = normalize(scaled, NormalizeMode::minmax_pm1);
  for (std::size_t i = 0; i < a.samples.size(); ++i)
    CHECK(std::abs(a.samples[i] - b.samples[i]) <= 1e-12);
}

TEST_CASE("window segmentation counts and slicing") {
  WaveformRecord w = make_record(2000, 2, 2000.0);
  std::mt19937_64 rng(5);
  for (double& v : w.samples) v = testutil::gauss(rng);
  WindowSpec spec{1000, 0.5};
  const auto windows = segment_windows(w, spec);
  REQUIRE(windows.size() == 3);
  for (int k = 0; k < 3; ++k)
    for (int t = 0; t < 1000; ++t)
      for (int c = 0; c < 2; ++c)
        CHECK(windows[k].at(t, c) == w.at(k * 500 + t, c));

  w.frames = 1000;
  w.samples.resize(1000 * 2);
  CHECK(segment_windows(w, spec).size() == 1);
  w.frames = 999;
  w.samples.resize(999 * 2);
  CHECK(segment_windows(w, spec).empty());
}

TEST_CASE("channel padding") {
  WaveformRecord w = make_record(10, 14, 2000.0);
  for (double& v : w.samples) v = 1.0;
  const WaveformRecord p = pad_channels(w, 16);
  CHECK(p.channels == 16);
  for (int t = 0; t < 10; ++t) {
    CHECK(p.at(t, 13) == 1.0);
    CHECK(p.at(t, 14) == 0.0);
    CHECK(p.at(t, 15) == 0.0);
  }
  const WaveformRecord same = pad_channels(w, 14);
  CHECK(same.samples == w.samples);

  WaveformRecord ones = make_record(8, 8, 2000.0);
  for (double& v : ones.samples) v = 1.0;
  const WaveformRecord p10 = pad_channels(ones, 10);
  for (int c = 0; c < 10; ++c) {
    double sum = 0.0;
    for (int t = 0; t < 8; ++t) sum += p10.at(t, c);
    CHECK(sum == (c < 8 ? 8.0 : 0.0));
  }
  CHECK_THROWS_AS(pad_channels(p10, 9), ValidationError);
}

}  // TEST_SUITE
