#include <cmath>
#include <cstring>
#include <limits>
#include <numbers>
#include <random>

#include "doctest.h"
#include "topoqst/ensemble.hpp"
#include "topoqst/errors.hpp"

using namespace topo;
using std::numbers::pi;

namespace {

EnsembleSpec small_spec(std::vector<double> strengths, std::size_t r, std::uint64_t seed) {
  const ChainModel m(7, 80.0, EdgeCosineParams{});
  auto spec = make_ensemble_spec(m, std::move(strengths), r, seed);
  spec.evolution.step_size = 0.1;
  spec.verify_convergence = false;
  return spec;
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

// Mean direction and resultant length straight from the definition, summing
// unit phasors in long double.
std::pair<double, double> brute_circular(const std::vector<double>& g) {
  long double re = 0, im = 0;
  for (double x : g) {
    re += std::cos(static_cast<long double>(x));
    im += std::sin(static_cast<long double>(x));
  }
  const long double k = static_cast<long double>(g.size());
  return {static_cast<double>(std::atan2(im, re)), static_cast<double>(std::hypot(re, im) / k)};
}

}  // namespace

TEST_CASE("circular statistics examples") {
  const std::vector<double> pair{pi - 0.1, -pi + 0.1};
  const auto s = circular_stats(pair);
  CHECK(std::abs(std::abs(s.mean_direction) - pi) < 1e-12);
  CHECK(s.resultant_length == doctest::Approx(std::cos(0.1)).epsilon(1e-12));
  CHECK(s.circular_std == doctest::Approx(std::sqrt(-2 * std::log(std::cos(0.1)))));

  const std::vector<double> same(10, 0.7);
  const auto t = circular_stats(same);
  CHECK(t.mean_direction == doctest::Approx(0.7));
  CHECK(t.resultant_length == doctest::Approx(1.0));
  CHECK(t.circular_std < 1e-6);

  const std::vector<double> opposite{0.0, pi};
  const auto o = circular_stats(opposite);
  CHECK(o.resultant_length == 0.0);
  CHECK(o.mean_direction == 0.0);
  CHECK(std::isinf(o.circular_std));

  CHECK_THROWS_AS(circular_stats(std::vector<double>{}), ConfigError);
}

TEST_CASE("circular statistics agree with a direct phasor sum") {
  std::mt19937_64 rng(314);
  std::uniform_real_distribution<double> u(-pi, pi);
  std::uniform_int_distribution<int> len(1, 40);
  std::normal_distribution<double> spread(0.0, 0.8);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> g(static_cast<std::size_t>(len(rng)));
    const double centre = u(rng);
    for (auto& x : g) x = (trial % 2 == 0) ? u(rng) : centre + spread(rng);
    const auto [mean, r] = brute_circular(g);
    const auto s = circular_stats(g);
    CHECK(s.resultant_length == doctest::Approx(r).epsilon(1e-12));
    if (r > 1e-6) CHECK(circular_distance(s.mean_direction, mean) < 1e-9);
    CHECK(s.resultant_length <= 1.0);
  }
}

TEST_CASE("records are ordered by strength then realization with derived seeds") {
  const auto spec = small_spec({0.0, 0.1, 0.2}, 4, 99);
  const auto res = run_ensemble(spec);
  REQUIRE(res.records.size() == 12);
  for (std::size_t i = 0; i < res.records.size(); ++i) {
    const auto& r = res.records[i];
    CHECK(r.delta_index == i / 4);
    CHECK(r.k == i % 4 + 1);
    CHECK(r.delta == spec.strengths[i / 4]);
    CHECK(r.sub_seed == split_seed(99, i / 4, i % 4 + 1));
    CHECK_FALSE(r.failed);
    CHECK(r.magnitude == doctest::Approx(std::abs(r.amplitude)));
    CHECK(r.fidelity == doctest::Approx(average_fidelity(r.amplitude)));
  }
  REQUIRE(res.summary.per_strength.size() == 3);
  const auto& s0 = res.summary.per_strength[0];
  CHECK(s0.realizations == 4);
  CHECK(s0.min_abs == s0.max_abs);
  CHECK(s0.expected_phase == doctest::Approx(pi));
}

TEST_CASE("zero disorder gives identical clean records") {
  const auto spec = small_spec({0.0}, 5, 7);
  const auto res = run_ensemble(spec);
  const ChainModel& m = spec.model;
  const Complex clean = transfer_amplitude(m, DisorderRealization::clean(m.n_bonds()), spec.evolution);
  for (const auto& r : res.records) CHECK(r.amplitude == clean);
  CHECK(res.summary.per_strength[0].phase.resultant_length == doctest::Approx(1.0));
}

TEST_CASE("results are bit-identical across thread counts") {
  auto spec = small_spec({0.05, 0.3}, 6, 2024);
  spec.verify_convergence = true;
  spec.evolution.step_size = 0.2;
  const auto one = run_ensemble(spec, 1);
  for (unsigned threads : {4u, 8u}) {
    const auto many = run_ensemble(spec, threads);
    REQUIRE(many.records.size() == one.records.size());
    for (std::size_t i = 0; i < one.records.size(); ++i) {
      CHECK(same_bits(one.records[i].amplitude.real(), many.records[i].amplitude.real()));
      CHECK(same_bits(one.records[i].amplitude.imag(), many.records[i].amplitude.imag()));
      CHECK(same_bits(one.records[i].step_size, many.records[i].step_size));
    }
    for (std::size_t d = 0; d < 2; ++d) {
      CHECK(same_bits(one.summary.per_strength[d].mean_abs, many.summary.per_strength[d].mean_abs));
      CHECK(same_bits(one.summary.per_strength[d].phase.mean_direction,
                      many.summary.per_strength[d].phase.mean_direction));
    }
  }
}

TEST_CASE("summaries count failures separately") {
  std::vector<TransferRecord> recs(5);
  const double phases[] = {pi, pi - 0.05, 0.0, 1.0, 0.0};
  const double mags[] = {0.9, 0.8, 0.5, 0.7, 0.0};
  for (std::size_t i = 0; i < 5; ++i) {
    recs[i].phase = phases[i];
    recs[i].magnitude = mags[i];
    recs[i].amplitude = std::polar(mags[i], phases[i]);
  }
  recs[4].failed = true;
  recs[4].failure = "non-finite amplitudes at step 3";
  recs[1].converged = false;
  recs[1].convergence_delta = 2e-6;
  const auto s = summarize(0.4, recs, 19, kDefaultZ4Tolerance);
  CHECK(s.realizations == 5);
  CHECK(s.failures == 1);
  CHECK(s.class_counts[static_cast<std::size_t>(Z4Class::pi)] == 2);
  CHECK(s.class_counts[static_cast<std::size_t>(Z4Class::zero)] == 1);
  CHECK(s.unclassified == 1);
  CHECK(s.expected_count == 2);
  CHECK(s.fraction_expected == doctest::Approx(0.5));
  CHECK(s.mean_abs == doctest::Approx((0.9 + 0.8 + 0.5 + 0.7) / 4));
  CHECK(s.min_abs == 0.5);
  CHECK(s.max_abs == 0.9);
  CHECK(s.unconverged == 1);
  CHECK(s.max_convergence_delta == 2e-6);

  std::vector<TransferRecord> all_failed(2);
  for (auto& r : all_failed) r.failed = true;
  const auto f = summarize(0.4, all_failed, 19, kDefaultZ4Tolerance);
  CHECK(f.failures == 2);
  CHECK(f.mean_abs == 0.0);
  CHECK(std::isinf(f.phase.circular_std));
}

TEST_CASE("critical disorder is the first strength leaving the expected class") {
  EnsembleSummary sum;
  for (double d : {0.1, 0.2, 0.3}) {
    StrengthSummary s;
    s.delta = d;
    s.realizations = 10;
    s.expected_count = 10;
    sum.per_strength.push_back(s);
  }
  CHECK(critical_disorder(sum) < 0.0);
  sum.per_strength[2].unclassified = 1;
  sum.per_strength[2].expected_count = 9;
  CHECK(critical_disorder(sum) == 0.3);
  sum.per_strength[1].expected_count = 8;
  sum.per_strength[1].failures = 1;
  CHECK(critical_disorder(sum) == 0.2);
}

TEST_CASE("ensemble spec validation") {
  auto spec = small_spec({0.1, 0.2}, 3, 1);
  CHECK_NOTHROW(spec.validate());
  auto bad = spec;
  bad.realizations = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = spec;
  bad.strengths = {0.2, 0.1};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad.strengths = {0.1, 0.1};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad.strengths = {-0.1};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad.strengths = {};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = spec;
  bad.z4_tolerance = 1.0;
  CHECK_THROWS_AS(run_ensemble(bad), ConfigError);
}

TEST_CASE("parallel_for covers every index once and propagates errors") {
  std::vector<int> hits(1000, 0);
  parallel_for(hits.size(), 8, [&](std::size_t i) { hits[i] += 1; });
  for (int h : hits) CHECK(h == 1);
  parallel_for(0, 4, [](std::size_t) { FAIL("no jobs expected"); });
  CHECK_THROWS_AS(parallel_for(100, 4,
                               [](std::size_t i) {
                                 if (i == 37) throw std::runtime_error("boom");
                               }),
                  std::runtime_error);
}
