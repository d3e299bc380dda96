#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <map>
#include <vector>

#include "doctest.h"

#include "cardio/synth.hpp"

using namespace cardio;
using namespace cardio::synth;

namespace {

constexpr double kPi = 3.14159265358979323846;

SynthConfig small_config() {
  SynthConfig cfg;
  cfg.seed = 7;
  cfg.duration_s = 2.0;
  cfg.video.width = 16;
  cfg.video.height = 16;
  return cfg;
}

std::vector<std::int16_t> samples_of(const wire::MediaPacket& pkt) {
  std::vector<std::int16_t> out(pkt.payload.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<std::int16_t>(
        static_cast<std::uint16_t>(pkt.payload[2 * i]) |
        (static_cast<std::uint16_t>(pkt.payload[2 * i + 1]) << 8));
  }
  return out;
}

double tone_amplitude(const std::vector<double>& x, double freq_hz, double rate) {
  std::complex<double> acc{0.0, 0.0};
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double a = 2.0 * kPi * freq_hz * static_cast<double>(i) / rate;
    acc += x[i] * std::complex<double>{std::cos(a), -std::sin(a)};
  }
  return 2.0 * std::abs(acc) / static_cast<double>(x.size());
}

}  // namespace

TEST_SUITE("synth") {
  TEST_CASE("schedule interpolates and holds the endpoints") {
    HrSchedule hr;
    hr.points = {{0.0, 60.0}, {10.0, 120.0}};
    CHECK(hr.bpm_at(-5.0) == 60.0);
    CHECK(hr.bpm_at(0.0) == 60.0);
    CHECK(hr.bpm_at(5.0) == doctest::Approx(90.0));
    CHECK(hr.bpm_at(10.0) == 120.0);
    CHECK(hr.bpm_at(25.0) == 120.0);
  }

  TEST_CASE("phase integrates the rate exactly on ramps") {
    HrSchedule flat;
    flat.points = {{0.0, 60.0}};
    CHECK(flat.phase_at(3.5) == doctest::Approx(2.0 * kPi * 3.5).epsilon(1e-12));

    HrSchedule ramp;
    ramp.points = {{0.0, 60.0}, {10.0, 120.0}};
    // f(t) = 1 + t/10 Hz integrates to 15 cycles over [0, 10]
    CHECK(ramp.phase_at(10.0) == doctest::Approx(2.0 * kPi * 15.0).epsilon(1e-12));
    CHECK(ramp.mean_bpm(0.0, 10.0) == doctest::Approx(90.0).epsilon(1e-12));
    CHECK(ramp.mean_bpm(10.0, 20.0) == doctest::Approx(120.0).epsilon(1e-12));
    CHECK(ramp.mean_bpm(4.0, 4.0) == doctest::Approx(ramp.bpm_at(4.0)));
    // phase is monotone
    double prev = 0.0;
    for (double t = 0.25; t <= 20.0; t += 0.25) {
      const double p = ramp.phase_at(t);
      CHECK(p > prev);
      prev = p;
    }
  }

  TEST_CASE("schedule parsing accepts t:bpm lists and rejects junk") {
    const auto hr = HrSchedule::parse("0:70,30:90,60:65");
    REQUIRE(hr.points.size() == 3);
    CHECK(hr.points[1].first == 30.0);
    CHECK(hr.points[1].second == 90.0);

    CHECK_THROWS_AS(HrSchedule::parse("0-70"), std::invalid_argument);
    CHECK_THROWS_AS(HrSchedule::parse(""), std::invalid_argument);
    CHECK_THROWS_AS(HrSchedule::parse("0:10"), std::invalid_argument);     // bpm below 20
    CHECK_THROWS_AS(HrSchedule::parse("0:70,0:80"), std::invalid_argument);  // equal times
    CHECK_THROWS_AS(HrSchedule::parse("5:70,2:80"), std::invalid_argument);
  }

  TEST_CASE("pulse waveform is a raised cosine over the duty span") {
    CHECK(pulse_waveform(0.0) == doctest::Approx(0.0));
    CHECK(pulse_waveform(2.0 * kPi * 0.2) == doctest::Approx(1.0));  // mid-systole
    CHECK(pulse_waveform(2.0 * kPi * 0.4) == doctest::Approx(0.0));
    CHECK(pulse_waveform(2.0 * kPi * 0.7) == 0.0);
    CHECK(pulse_waveform(2.0 * kPi * 1.2) ==
          doctest::Approx(pulse_waveform(2.0 * kPi * 0.2)));  // periodic

    double mean = 0.0;
    const int n = 10'000;
    for (int i = 0; i < n; ++i) mean += pulse_waveform(2.0 * kPi * i / n);
    mean /= n;
    CHECK(mean == doctest::Approx(0.2).epsilon(0.01));  // duty/2

    CHECK_THROWS_AS(pulse_waveform(0.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(pulse_waveform(0.0, 1.0), std::invalid_argument);
  }

  TEST_CASE("config validation rejects out-of-range fields") {
    auto cfg = small_config();
    CHECK_NOTHROW(cfg.validate());
    cfg.duration_s = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

    cfg = small_config();
    cfg.video.dropout = 1.5;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.video.dropout = 1.0;
    CHECK_NOTHROW(cfg.validate());

    cfg = small_config();
    cfg.audio.modulation_depth = -0.1;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

    cfg = small_config();
    cfg.video.jitter_us = -1.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

    cfg = small_config();
    cfg.audio.chunk_ms = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

    cfg = small_config();
    cfg.schedule.points = {{0.0, 400.0}};
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  }

  TEST_CASE("generation is a pure function of the config") {
    auto cfg = small_config();
    cfg.video.pixel_noise_std = 0.02;
    cfg.video.jitter_us = 3000.0;
    cfg.video.dropout = 0.1;
    cfg.audio.noise_level = 0.01;
    cfg.audio.dropout = 0.1;

    const auto a = generate(cfg);
    const auto b = generate(cfg);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].kind == b[i].kind);
      CHECK(a[i].timestamp_us == b[i].timestamp_us);
      CHECK(a[i].payload == b[i].payload);
    }

    auto other = cfg;
    other.seed = 8;
    const auto c = generate(other);
    bool differs = a.size() != c.size();
    for (std::size_t i = 0; !differs && i < a.size(); ++i) {
      differs = a[i].timestamp_us != c[i].timestamp_us || a[i].payload != c[i].payload;
    }
    CHECK(differs);
  }

  TEST_CASE("packets come out in timestamp order with audio winning ties") {
    const auto pkts = generate(small_config());
    REQUIRE(!pkts.empty());
    CHECK(pkts.front().kind == wire::MediaKind::Audio);
    for (std::size_t i = 1; i < pkts.size(); ++i) {
      CHECK(pkts[i].timestamp_us >= pkts[i - 1].timestamp_us);
      if (pkts[i].timestamp_us == pkts[i - 1].timestamp_us) {
        CHECK(pkts[i - 1].kind == wire::MediaKind::Audio);
        CHECK(pkts[i].kind == wire::MediaKind::Video);
      }
    }
    // 2 s at 30 fps and 25 chunks/s
    std::size_t frames = 0, chunks = 0;
    for (const auto& p : pkts) (p.kind == wire::MediaKind::Video ? frames : chunks)++;
    CHECK(frames == 60);
    CHECK(chunks == 50);
  }

  TEST_CASE("drift skews audio timestamps and leaves video alone") {
    auto cfg = small_config();
    cfg.drift_ppm = 1000.0;
    const auto pkts = generate(cfg);
    std::size_t frame_i = 0, chunk_j = 0;
    for (const auto& p : pkts) {
      if (p.kind == wire::MediaKind::Audio) {
        const auto want = static_cast<std::uint64_t>(
            std::llround(static_cast<double>(chunk_j) * 40'000.0 * 1.001));
        CHECK(p.timestamp_us == want);
        ++chunk_j;
      } else {
        const auto want = static_cast<std::uint64_t>(
            std::llround(static_cast<double>(frame_i) * 1e6 / 30.0));
        CHECK(p.timestamp_us == want);
        ++frame_i;
      }
    }
  }

  TEST_CASE("jitter moves video timestamps within the configured bound") {
    auto cfg = small_config();
    cfg.video.jitter_us = 5000.0;
    const auto pkts = generate(cfg);
    std::size_t i = 0;
    bool any_moved = false;
    for (const auto& p : pkts) {
      if (p.kind != wire::MediaKind::Video) continue;
      const double nominal = static_cast<double>(i) * 1e6 / 30.0;
      const double off = static_cast<double>(p.timestamp_us) - nominal;
      CHECK(off <= 5000.5);
      CHECK(off >= -std::min(nominal, 5000.0) - 0.5);
      if (std::abs(off) > 100.0) any_moved = true;
      ++i;
    }
    CHECK(any_moved);
  }

  TEST_CASE("dropout removes roughly the configured fraction") {
    SynthConfig cfg;
    cfg.seed = 3;
    cfg.duration_s = 60.0;
    cfg.video.width = 4;
    cfg.video.height = 4;
    cfg.video.dropout = 0.3;
    cfg.audio.dropout = 0.2;
    const auto pkts = generate(cfg);
    std::size_t frames = 0, chunks = 0;
    for (const auto& p : pkts) (p.kind == wire::MediaKind::Video ? frames : chunks)++;
    // 1800 nominal frames, 1500 nominal chunks
    CHECK(frames > 1140);
    CHECK(frames < 1380);
    CHECK(chunks > 1120);
    CHECK(chunks < 1280);
  }

  TEST_CASE("dropout and jitter never change surviving content") {
    SynthConfig clean;
    clean.seed = 11;
    clean.duration_s = 4.0;
    clean.video.width = 8;
    clean.video.height = 8;
    clean.audio.content = AudioContent::FilteredNoise;

    auto lossy = clean;
    lossy.video.dropout = 0.4;
    lossy.audio.dropout = 0.4;

    std::map<std::uint64_t, std::vector<std::uint8_t>> clean_audio, clean_video;
    for (const auto& p : generate(clean)) {
      (p.kind == wire::MediaKind::Audio ? clean_audio : clean_video)[p.timestamp_us] = p.payload;
    }
    std::size_t checked = 0;
    for (const auto& p : generate(lossy)) {
      const auto& ref = p.kind == wire::MediaKind::Audio ? clean_audio : clean_video;
      const auto it = ref.find(p.timestamp_us);
      REQUIRE(it != ref.end());
      CHECK(p.payload == it->second);
      ++checked;
    }
    CHECK(checked > 50);
  }

  TEST_CASE("video frames encode the pulse in the green channel") {
    auto cfg = small_config();
    const auto pkts = generate(cfg);
    double g_min = 1e9, g_max = -1e9;
    for (const auto& p : pkts) {
      if (p.kind != wire::MediaKind::Video) continue;
      CHECK(p.payload.size() == 16 * 16 * 3);
      CHECK(p.payload[0] == p.payload[3]);  // constant red plane
      const double g = p.payload[1] / 255.0;
      g_min = std::min(g_min, g);
      g_max = std::max(g_max, g);
    }
    CHECK(g_min == doctest::Approx(0.55).epsilon(0.01));
    CHECK(g_max == doctest::Approx(0.63).epsilon(0.01));
  }

  TEST_CASE("the tone complex keeps its harmonic ratios") {
    SynthConfig cfg;
    cfg.seed = 5;
    cfg.duration_s = 1.0;
    cfg.video.width = 2;
    cfg.video.height = 2;
    cfg.audio.modulation_depth = 0.0;  // hold the envelope at 1
    std::vector<double> x;
    for (const auto& p : generate(cfg)) {
      if (p.kind != wire::MediaKind::Audio) continue;
      for (std::int16_t s : samples_of(p)) x.push_back(s / 32767.0);
    }
    REQUIRE(x.size() == 8000);
    const double a1 = tone_amplitude(x, 180.0, 8000.0);
    const double a2 = tone_amplitude(x, 360.0, 8000.0);
    const double a3 = tone_amplitude(x, 540.0, 8000.0);
    CHECK(a1 == doctest::Approx(0.45 / 1.75).epsilon(0.02));
    CHECK(a2 / a1 == doctest::Approx(0.5).epsilon(0.02));
    CHECK(a3 / a1 == doctest::Approx(0.25).epsilon(0.02));
  }

  TEST_CASE("captures roundtrip through disk byte for byte") {
    namespace fs = std::filesystem;
    const auto path = (fs::temp_directory_path() / "cardio_synth_test.crdh").string();
    auto cfg = small_config();
    synth_to_file(path, cfg);
    const auto cap = load_capture(path);
    CHECK(cap.header.video_width == 16);
    CHECK(cap.header.video_height == 16);
    CHECK(cap.header.audio_sample_rate == 8000);
    CHECK(cap.header.nominal_fps == 30.0);

    const auto want = generate(cfg);
    REQUIRE(cap.packets.size() == want.size());
    for (std::size_t i = 0; i < want.size(); ++i) {
      CHECK(cap.packets[i].kind == want[i].kind);
      CHECK(cap.packets[i].timestamp_us == want[i].timestamp_us);
      CHECK(cap.packets[i].payload == want[i].payload);
    }
    fs::remove(path);
    CHECK_THROWS_AS(load_capture(path), std::runtime_error);
  }

  TEST_CASE("ground truth samples the schedule at trace rate") {
    SynthConfig cfg;
    cfg.duration_s = 2.0;
    cfg.schedule.points = {{0.0, 60.0}, {10.0, 120.0}};
    const auto gt = make_ground_truth(cfg);
    REQUIRE(gt.bpm_trace.size() == 60);
    CHECK(gt.trace_fs == 30.0);
    CHECK(gt.bpm_trace[0] == 60.0);
    CHECK(gt.bpm_trace[30] == doctest::Approx(66.0));
    CHECK(gt.mean_bpm(0.0, 10.0) == doctest::Approx(90.0));
  }

  TEST_CASE("kv text parsing trims, skips comments and demands key=value") {
    const auto kv = parse_kv_text("a=1\n# note\n\n  b = two words \n\tc=3\n");
    REQUIRE(kv.size() == 3);
    CHECK(kv.at("a") == "1");
    CHECK(kv.at("b") == "two words");
    CHECK(kv.at("c") == "3");
    CHECK_THROWS_AS(parse_kv_text("novalue\n"), std::invalid_argument);
    CHECK_THROWS_AS(load_kv_file("/nonexistent/cardio.cfg"), std::runtime_error);
  }

  TEST_CASE("config keys apply to the right fields") {
    SynthConfig cfg;
    CHECK(apply_synth_key(cfg, "seed", "42"));
    CHECK(cfg.seed == 42);
    CHECK(apply_synth_key(cfg, "duration_s", "12.5"));
    CHECK(cfg.duration_s == 12.5);
    CHECK(apply_synth_key(cfg, "drift_ppm", "250"));
    CHECK(cfg.drift_ppm == 250.0);
    CHECK(apply_synth_key(cfg, "hr", "0:65,30:80"));
    CHECK(cfg.schedule.points.size() == 2);
    CHECK(apply_synth_key(cfg, "video.fps", "25"));
    CHECK(cfg.video.fps == 25.0);
    CHECK(apply_synth_key(cfg, "video.dropout", "0.25"));
    CHECK(cfg.video.dropout == 0.25);
    CHECK(apply_synth_key(cfg, "audio.rate", "16000"));
    CHECK(cfg.audio.sample_rate == 16'000);
    CHECK(apply_synth_key(cfg, "audio.content", "filtered_noise"));
    CHECK(cfg.audio.content == AudioContent::FilteredNoise);
    CHECK(apply_synth_key(cfg, "audio.content", "tone_complex"));
    CHECK(cfg.audio.content == AudioContent::ToneComplex);
    CHECK_THROWS_AS(apply_synth_key(cfg, "audio.content", "square"), std::invalid_argument);
    CHECK_FALSE(apply_synth_key(cfg, "video.gamma", "2.2"));
    CHECK_FALSE(apply_synth_key(cfg, "bogus", "1"));
  }
}
