// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "specscan/detectors.hpp"
#include "specscan/signal_synth.hpp"

using namespace specscan;

namespace {

ComplexFrame frame_of(std::vector<std::complex<double>> s) { return ComplexFrame(std::move(s), FrameInfo{}); }

ComplexFrame ones(std::size_t n) { return frame_of(std::vector<std::complex<double>>(n, {1.0, 0.0})); }

ComplexFrame tone_frame(std::size_t n, double w) {
  std::vector<std::complex<double>> s(n);
  for (std::size_t m = 0; m < n; ++m) s[m] = std::polar(1.0, w * static_cast<double>(m));
  return frame_of(std::move(s));
}

ComplexFrame scaled(const ComplexFrame& f, std::complex<double> c) {
  std::vector<std::complex<double>> s(f.samples().begin(), f.samples().end());
  for (auto& v : s) v *= c;
  return frame_of(std::move(s));
}

std::vector<oracle::cd> as_vector(const ComplexFrame& f) { return {f.samples().begin(), f.samples().end()}; }

// Random frame of random length and character (noise, tone, bpsk, sparse).
ComplexFrame random_frame(std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> len(8, 300);
  std::uniform_int_distribution<int> kind(0, 3);
  std::uniform_real_distribution<double> u(-0.49, 0.49);
  const std::size_t n = len(rng);
  const std::uint64_t seed = rng();
  switch (kind(rng)) {
    case 0: return gen_noise_frame(n, NoiseSpec{1.0, seed}, 0);
    case 1: return mix_at_snr(gen_signal_frame(n, {SignalKind::tone, u(rng), 1, 1.0, u(rng), 0}, 0),
                              gen_noise_frame(n, NoiseSpec{1.0, seed}, 0), 5.0, 1.0, 1.0);
    case 2: return gen_signal_frame(n, {SignalKind::bpsk, 0.0, 3, 0.7, 1.0, seed}, 0);
    default: {
      std::vector<std::complex<double>> s(n);
      s[rng() % n] = {u(rng) + 1.0, u(rng)};
      return frame_of(std::move(s));
    }
  }
}

}  // namespace

TEST_CASE("energy statistic") {
  CHECK(energy_statistic(frame_of(std::vector<std::complex<double>>(16))) == 0.0);
  CHECK(energy_statistic(ones(7)) == 1.0);
  const auto f = frame_of({{1, 1}, {1, -1}, {2, 0}, {0, 2}});
  CHECK(energy_statistic(f) == oracle::mean_power(as_vector(f)));
  CHECK(energy_statistic(f) == 3.0);
}

TEST_CASE("decision rules and tie-breaks") {
  CHECK_FALSE(energy_decide(0.5, 1.0).present);
  CHECK(energy_decide(1.5, 1.0).present);
  CHECK_FALSE(energy_decide(1.0, 1.0).present);

  CHECK(acf1_decide(0.75, 0.5).present);
  CHECK_FALSE(acf1_decide(0.02, 0.5).present);
  CHECK_FALSE(acf1_decide(0.5, 0.5).present);

  CHECK(distance_decide(0.1, 0.4).present);
  CHECK_FALSE(distance_decide(0.9, 0.4).present);
  CHECK_FALSE(distance_decide(0.4, 0.4).present);

  const auto d = distance_decide(0.1, 0.4);
  CHECK(d.statistic == 0.1);
  CHECK(d.threshold == 0.4);
}

TEST_CASE("linear autocorrelation") {
  const auto f = frame_of({{1, 2}, {-0.5, 1}, {3, -1}, {0.25, 0.75}, {-2, -2}});
  for (std::size_t l = 0; l < f.size(); ++l) {
    const auto expected = oracle::linear_acf(as_vector(f), l);
    CHECK(acf(f, l).real() == Catch::Approx(expected.real()).margin(1e-14));
    CHECK(acf(f, l).imag() == Catch::Approx(expected.imag()).margin(1e-14));
  }
  CHECK(acf(f, 0).imag() == 0.0);
  CHECK(acf(f, 0).real() == Catch::Approx(oracle::mean_power(as_vector(f)) * 5));
  CHECK(acf(ones(4), 1) == std::complex<double>(3.0, 0.0));
  CHECK(acf(frame_of({{1, 0}, {-1, 0}, {1, 0}, {-1, 0}}), 1) == std::complex<double>(-3.0, 0.0));
  CHECK_THROWS_AS(acf(ones(4), 4), RangeError);
}

TEST_CASE("lag-1 statistic") {
  CHECK(acf1_statistic(ones(4)) == 0.75);
  for (std::size_t n : {16u, 100u, 1024u})
    CHECK(acf1_statistic(tone_frame(n, 0.3)) == Catch::Approx(static_cast<double>(n - 1) / n).epsilon(1e-12));
  CHECK_THROWS_AS(acf1_statistic(frame_of(std::vector<std::complex<double>>(8))), DegenerateInputError);
}

TEST_CASE("lag-1 statistic of white noise is small") {
  double sum = 0.0;
  for (std::uint64_t t = 0; t < 1000; ++t) sum += acf1_statistic(gen_noise_frame(1024, NoiseSpec{1.0, 77}, t));
  const double mean = sum / 1000.0;
  // |acf(1)|/acf(0) ~ Rayleigh with mean sqrt(pi)/2 / sqrt(N) ~ 0.028
  CHECK(mean <= 2.0 / std::sqrt(1024.0));
  CHECK(mean == Catch::Approx(std::sqrt(std::numbers::pi) / 2.0 / 32.0).epsilon(0.1));
}

TEST_CASE("ACF vectors") {
  const auto t = tone_frame(256, 0.3);
  const auto v = acf_vector(t, 4);
  CHECK(v[0] == 1.0);
  const auto expected = oracle::tone_acf_vector(256, 4);
  for (std::size_t l = 0; l < 4; ++l) CHECK(v[l] == Catch::Approx(expected[l]).epsilon(1e-12));

  CHECK_THROWS_AS(acf_vector(t, 1), RangeError);
  CHECK_THROWS_AS(acf_vector(ones(4), 5), RangeError);
  CHECK_THROWS_AS(acf_vector(frame_of(std::vector<std::complex<double>>(8)), 4), DegenerateInputError);
  CHECK_THROWS(AcfVector({0.9, 0.5}));
  CHECK_THROWS(AcfVector({1.0, 1.5}));
  CHECK_THROWS(AcfVector({1.0}));
}

TEST_CASE("reference calibration") {
  const auto t = tone_frame(128, 0.7);
  const std::vector<ComplexFrame> one{t};
  CHECK(calibrate_reference(std::span<const ComplexFrame>(one), 6) == acf_vector(t, 6));
  const std::vector<ComplexFrame> repeated(5, t);
  const auto rep = calibrate_reference(std::span<const ComplexFrame>(repeated), 6);
  for (std::size_t l = 0; l < 6; ++l) CHECK(rep[l] == Catch::Approx(acf_vector(t, 6)[l]).epsilon(1e-15));
  CHECK_THROWS_AS(calibrate_reference(std::span<const ComplexFrame>(), 6), CalibrationError);

  // 100 noisy tone frames at 20 dB versus the noiseless closed form.
  const SignalSpec tone{SignalKind::tone, 0.05, 1, 1.0, 0.0, 0};
  const NoiseSpec noise{1.0, 1234};
  std::vector<ComplexFrame> training;
  for (std::uint64_t k = 0; k < 100; ++k)
    training.push_back(mix_at_snr(gen_signal_frame(1024, tone, k), gen_noise_frame(1024, noise, k), 20.0, tone, noise));
  const auto ref = calibrate_reference(std::span<const ComplexFrame>(training), 8);
  const auto clean = oracle::tone_acf_vector(1024, 8);
  CHECK(ref[0] == 1.0);
  for (std::size_t l = 0; l < 8; ++l) CHECK(std::abs(ref[l] - clean[l]) <= 0.05);
}

TEST_CASE("correlation distance") {
  const AcfVector a({1, 1, 1, 1});
  const AcfVector b({1, 0, 0, 0});
  CHECK(correlation_distance(a, a) == 0.0);
  CHECK(std::abs(correlation_distance(a, b) - std::sqrt(3.0) / 2.0) <= 1e-12);
  CHECK(correlation_distance(a, b) == Catch::Approx(oracle::normalized_distance({1, 1, 1, 1}, {1, 0, 0, 0})));
  CHECK(raw_correlation_distance(a, b) == Catch::Approx(std::sqrt(3.0)));
  CHECK_THROWS_AS(correlation_distance(a, AcfVector({1, 0.5})), DimensionError);
}

TEST_CASE("empirical quantile and energy threshold calibration") {
  CHECK(empirical_quantile({0.9, 1.1}, 0.5) == Catch::Approx(1.0));
  CHECK(empirical_quantile({3.0, 1.0, 2.0}, 1.0) == 3.0);
  CHECK(empirical_quantile({3.0, 1.0, 2.0}, 0.0) == 1.0);
  CHECK(empirical_quantile({0.0, 10.0}, 0.25) == Catch::Approx(2.5));
  CHECK_THROWS_AS(empirical_quantile({}, 0.5), CalibrationError);

  const std::vector<ComplexFrame> constant(100, ones(32));
  for (double pfa : {0.01, 0.3, 0.9})
    CHECK(calibrate_ed_threshold(std::span<const ComplexFrame>(constant), pfa) == 1.0);
  const std::vector<ComplexFrame> few(99, ones(32));
  CHECK_THROWS_AS(calibrate_ed_threshold(std::span<const ComplexFrame>(few), 0.05), CalibrationError);
}

TEST_CASE("energy threshold at pfa 0.05 matches the Gamma quantile") {
  // Independent check of the frozen oracle value: sample means of 1024
  // unit exponentials directly.
  std::mt19937_64 rng(2024);
  std::exponential_distribution<double> expo(1.0);
  std::vector<double> means(20000);
  for (auto& m : means) {
    double s = 0.0;
    for (int i = 0; i < 1024; ++i) s += expo(rng);
    m = s / 1024.0;
  }
  std::sort(means.begin(), means.end());
  CHECK(means[static_cast<std::size_t>(0.95 * (means.size() - 1))] == Catch::Approx(oracle::kGamma1024Q95).margin(0.003));

  std::vector<ComplexFrame> noise;
  for (std::uint64_t k = 0; k < 10000; ++k) noise.push_back(gen_noise_frame(1024, NoiseSpec{1.0, 555}, k));
  const double lambda = calibrate_ed_threshold(std::span<const ComplexFrame>(noise), 0.05);
  CHECK(lambda == Catch::Approx(oracle::kGamma1024Q95).margin(0.003));
}

TEST_CASE("detector invariances", "[property]") {
  std::mt19937_64 rng(31337);
  std::uniform_real_distribution<double> mag(-6.0, 6.0), ang(-std::numbers::pi, std::numbers::pi);
  for (int iter = 0; iter < 1000; ++iter) {
    const auto f = random_frame(rng);
    const auto c = std::polar(std::pow(10.0, mag(rng)), ang(rng));
    const auto g = scaled(f, c);

    const double e = energy_statistic(f);
    CHECK(energy_statistic(g) == Catch::Approx(std::norm(c) * e).epsilon(1e-12));

    // powers of two times a quarter turn are exact in floating point
    const std::complex<double> exact_c[] = {{4.0, 0.0}, {0.0, 0.5}, {-0.25, 0.0}, {0.0, -8.0}};
    const auto& ec = exact_c[iter % 4];
    CHECK(energy_statistic(scaled(f, ec)) == std::norm(ec) * e);

    const double r1 = acf1_statistic(f);
    CHECK(r1 >= 0.0);
    CHECK(r1 <= 1.0);
    CHECK(std::abs(acf1_statistic(g) - r1) <= 1e-12 * std::max(r1, 1e-300) + 1e-15);

    const std::size_t lags = std::min<std::size_t>(8, f.size());
    const auto v = acf_vector(f, lags);
    const auto w = acf_vector(g, lags);
    for (std::size_t l = 0; l < lags; ++l) {
      CHECK(v[l] >= 0.0);
      CHECK(v[l] <= 1.0);
      CHECK(std::abs(w[l] - v[l]) <= 1e-12 * std::max(v[l], 1e-300) + 1e-15);
    }

    const auto other = acf_vector(random_frame(rng), 2);
    const double d = correlation_distance(acf_vector(f, 2), other);
    CHECK(d >= 0.0);
    CHECK(d <= 1.0);

    // determinism: bit-identical statistics from identical frames
    CHECK(acf1_statistic(f) == r1);
  }
}

TEST_CASE("distance bound holds for arbitrary valid vectors", "[property]") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> len(2, 32);
  for (int iter = 0; iter < 1000; ++iter) {
    const std::size_t L = len(rng);
    std::vector<double> a(L), b(L);
    a[0] = b[0] = 1.0;
    for (std::size_t l = 1; l < L; ++l) {
      a[l] = iter % 10 == 0 ? 1.0 : u(rng);
      b[l] = iter % 10 == 0 ? 0.0 : u(rng);
    }
    const double d = correlation_distance(AcfVector(a), AcfVector(b));
    CHECK(d >= 0.0);
    CHECK(d <= 1.0);
    CHECK(d == Catch::Approx(oracle::normalized_distance(a, b)).epsilon(1e-12));
  }
}

TEST_CASE("correlation distance separates noise from a 5 dB tone") {
  const SignalSpec tone{SignalKind::tone, 0.05, 1, 1.0, 0.0, 0};
  const std::vector<ComplexFrame> clean{gen_signal_frame(1024, tone, 0)};
  const auto ref = calibrate_reference(std::span<const ComplexFrame>(clean), 8);
  const NoiseSpec noise{1.0, 2718};
  const NoiseSpec other{1.0, 3141};
  std::vector<double> h0, h1;
  for (std::uint64_t k = 0; k < 2000; ++k) {
    h0.push_back(correlation_distance(ref, acf_vector(gen_noise_frame(1024, noise, k), 8)));
    h1.push_back(correlation_distance(
        ref, acf_vector(mix_at_snr(gen_signal_frame(1024, tone, k), gen_noise_frame(1024, other, k), 5.0, tone, other), 8)));
  }
  CHECK(empirical_quantile(h0, 0.05) > empirical_quantile(h1, 0.95));
}

TEST_CASE("energy detector with threshold below the noise floor always fires") {
  for (std::uint64_t k = 0; k < 1000; ++k)
    CHECK(energy_decide(energy_statistic(gen_noise_frame(1024, NoiseSpec{1.0, 9}, k)), 0.5).present);
}

TEST_CASE("detector config validation") {
  DetectorConfig cfg;
  cfg.reference = AcfVector(oracle::tone_acf_vector(1024, 8));
  CHECK_NOTHROW(cfg.validate());
  cfg.gamma = 1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.gamma = 0.3;
  cfg.acf_lags = 4;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.acf_lags = 8;
  cfg.lambda_ed = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("reference file round trip and errors") {
  const auto dir = oracle::scratch_dir("reference");
  const AcfVector ref(std::vector<double>{1.0, 0.9990234375, 0.123456789012345678, 0.0});
  write_reference(ref, dir / "ref.txt");
  {
    std::ifstream in(dir / "ref.txt");
    std::string l1, l2;
    std::getline(in, l1);
    std::getline(in, l2);
    CHECK(l1 == "lags=4");
    CHECK(l2 == "1");
  }
  CHECK(read_reference(dir / "ref.txt") == ref);

  std::ofstream(dir / "bad1.txt") << "lags=3\n1\n0.5\n";
  CHECK_THROWS_AS(read_reference(dir / "bad1.txt"), FormatError);
  std::ofstream(dir / "bad2.txt") << "L=2\n1\n0.5\n";
  CHECK_THROWS_AS(read_reference(dir / "bad2.txt"), FormatError);
  std::ofstream(dir / "bad3.txt") << "lags=2\n0.9\n0.5\n";
  CHECK_THROWS_AS(read_reference(dir / "bad3.txt"), FormatError);
  std::ofstream(dir / "bad4.txt") << "lags=2\n1\nhalf\n";
  CHECK_THROWS_AS(read_reference(dir / "bad4.txt"), FormatError);
}
