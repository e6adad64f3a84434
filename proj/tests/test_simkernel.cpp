#include <doctest.h>

#include <cmath>
#include <numeric>
#include <set>

#include "edfa/simkernel.hpp"
#include "helpers.hpp"

using namespace edfa;
using namespace edfa::sim;
using edfa::test::mask_of;

namespace {

double mean_active(const Spectrum& g, const ChannelPlan& plan) {
  double s = 0.0;
  for (std::size_t i = 0; i < kChannels; ++i) s += plan.on(i) ? g[i] : 0.0;
  return s / static_cast<double>(plan.active_count());
}

Spectrum flat_launch(const ChannelPlan& plan, double dbm) {
  Spectrum s;
  for (std::size_t i = 0; i < kChannels; ++i) s[i] = plan.on(i) ? dbm : kOffChannelDbm;
  return s;
}

}  // namespace

TEST_SUITE("simkernel") {
  TEST_CASE("flat device gives exactly g0 on every active channel") {
    const auto d = flat_device("B01", EdfaType::Booster);
    Rng rng(1);
    for (int k = 0; k < 20; ++k) {
      const auto plan = gen_plan(LoadingMode::Random, rng);
      const auto g = true_gain(d, plan, gen_launch_spectrum(d, plan, rng), 20.0);
      for (std::size_t i = 0; i < kChannels; ++i) CHECK(g[i] == (plan.on(i) ? 20.0 : kOffChannelDbm));
    }
  }

  TEST_CASE("more input power compresses the gain") {
    const auto d = make_fleet({1, 1, 1.0}, 3).front();
    REQUIRE(d.saturation_strength > 0.0);
    const auto plan = ChannelPlan::full();
    double prev = 1e9;
    for (double p = -24.0; p <= 0.0; p += 3.0) {
      const double m = mean_active(true_gain(d, plan, flat_launch(plan, p), 20.0), plan);
      CHECK(m < prev);
      prev = m;
    }
  }

  TEST_CASE("oracle is deterministic") {
    const auto d = make_fleet({1, 1, 1.0}, 3).back();
    const ChannelPlan a(mask_of({3, 4, 50}), LoadingMode::Random);
    const ChannelPlan b(mask_of({3, 4, 50}), LoadingMode::Random);
    const auto s = flat_launch(a, -15.0);
    CHECK(true_gain(d, a, s, 18.0) == true_gain(d, b, s, 18.0));
  }

  TEST_CASE("loading changes the spectrum") {
    const auto d = make_fleet({1, 1, 1.0}, 3).front();
    REQUIRE(d.loading_coupling > 0.0);
    const ChannelPlan one(mask_of({40}), LoadingMode::Random);
    const auto full = ChannelPlan::full();
    // Same per-channel power; compare the shared channel.
    const auto g1 = true_gain(d, one, flat_launch(one, -15.0), 20.0);
    const auto gf = true_gain(d, full, flat_launch(full, -15.0), 20.0);
    CHECK(std::abs(g1[40] - gf[40]) > 0.05);
  }

  TEST_CASE("VOA attenuation follows the gain setting") {
    const auto d = make_fleet({1, 1, 1.0}, 3).front();
    const double p = -10.0;
    const auto top = voa_state(d, d.gain_max_db, p);
    const auto bottom = voa_state(d, d.gain_min_db, p);
    const auto mid = voa_state(d, 0.5 * (d.gain_min_db + d.gain_max_db), p);
    CHECK(top.voa_attn_db == doctest::Approx(d.voa_min_db));
    CHECK(bottom.voa_attn_db == doctest::Approx(d.voa_max_db));
    CHECK(mid.voa_attn_db > d.voa_min_db);
    CHECK(mid.voa_attn_db < d.voa_max_db);
    CHECK(mid.voa_attn_db == doctest::Approx(0.5 * (d.voa_min_db + d.voa_max_db)));
    CHECK_THROWS_AS(voa_state(d, d.gain_max_db + 1.0, p), ConfigError);
    // The law depends on the gain set point only.
    CHECK(voa_state(d, 20.0, p + 3.0).voa_attn_db == voa_state(d, 20.0, p).voa_attn_db);
    CHECK(mid.voa_in_dbm == doctest::Approx(p + d.stage1_gain_db));
  }

  TEST_CASE("quantization") {
    CHECK(quantize(0.05, 0.1) == doctest::Approx(0.1));
    CHECK(quantize(-0.05, 0.1) == doctest::Approx(-0.1));
    CHECK(quantize(15.34, 0.1) == 15.3);
    const auto d = make_fleet({1, 1, 1.0}, 3).front();
    Rng rng(5);
    for (int k = 0; k < 100; ++k) {
      const auto plan = gen_plan(static_cast<LoadingMode>(k % 3), rng);
      const auto launch = gen_launch_spectrum(d, plan, rng);
      const auto q = measure(d, plan, launch, 20.0, true);
      const auto raw = measure(d, plan, launch, 20.0, false);
      for (std::size_t i = 0; i < kChannels; ++i) {
        if (!plan.on(i)) continue;
        const double g = (*q.gain_spectrum_db)[i];
        CHECK(std::abs(g * 10.0 - std::round(g * 10.0)) < 1e-9);
        CHECK(std::abs(g - (*raw.gain_spectrum_db)[i]) <= 0.05 + 1e-12);
      }
      CHECK(q.voa_attn_db == q.voa_in_dbm - q.voa_out_dbm);
    }
  }

  TEST_CASE("one channel at -10 dBm with 20 dB gain gives 10 dBm out") {
    const auto d = flat_device("B01", EdfaType::Booster);
    const ChannelPlan plan(mask_of({47}), LoadingMode::Random);
    const auto r = measure(d, plan, flat_launch(plan, -10.0), 20.0, false);
    CHECK(r.total_in_dbm == doctest::Approx(-10.0));
    CHECK(r.total_out_dbm == doctest::Approx(10.0));
  }

  TEST_CASE("plan generation") {
    Rng rng(11);
    CHECK(gen_plan(LoadingMode::Full, rng).active_count() == kChannels);
    for (int k = 0; k < 1000; ++k) {
      const auto p = gen_plan(LoadingMode::Goalpost, rng);
      CHECK(p.run_count() >= 1);
      CHECK(p.run_count() <= 4);
    }
    Rng a(42), b(42);
    CHECK(gen_plan(LoadingMode::Random, a) == gen_plan(LoadingMode::Random, b));
  }

  TEST_CASE("dataset generation") {
    const auto fleet = make_fleet({1, 1, 1.0}, 8);
    const auto recs = gen_dataset(fleet[0], {{15.0, 20.0, 25.0}}, 3168, {}, true, 3);
    CHECK(recs.size() == 9504);
    for (const auto& r : recs) r.validate();
    const auto again = gen_dataset(fleet[0], {{15.0, 20.0, 25.0}}, 3168, {}, true, 3);
    CHECK(recs.front().input_spectrum_dbm == again.front().input_spectrum_dbm);
    CHECK(*recs.back().gain_spectrum_db == *again.back().gain_spectrum_db);
    CHECK_THROWS_AS(gen_dataset(fleet[0], {{40.0}}, 10, {}, true, 3), ConfigError);
  }

  TEST_CASE("different devices give different mean gains at equal inputs") {
    const auto fleet = make_fleet({2, 1, 1.0}, 8);
    const auto plan = ChannelPlan::full();
    const auto s = flat_launch(plan, -12.0);
    CHECK(mean_active(true_gain(fleet[0], plan, s, 20.0), plan) !=
          mean_active(true_gain(fleet[1], plan, s, 20.0), plan));
  }

  TEST_CASE("fleet construction") {
    const auto same = make_fleet({3, 3, 0.0}, 1);
    CHECK(same[0].ripple_coeffs == same[1].ripple_coeffs);
    CHECK(same[3].ripple_coeffs == same[4].ripple_coeffs);
    CHECK(same[0].ripple_coeffs != same[3].ripple_coeffs);

    const auto fleet = make_fleet({11, 11, 1.0}, 1);
    CHECK(fleet.size() == 22);
    std::set<std::string> ids;
    for (const auto& d : fleet) {
      ids.insert(d.device_id);
      CHECK(d.ripple_peak_to_peak() <= 3.0 + 1e-12);
    }
    CHECK(ids.size() == 22);
    for (std::size_t a = 0; a < fleet.size(); ++a) {
      for (std::size_t b = a + 1; b < fleet.size(); ++b) {
        double dist = 0.0;
        for (std::size_t k = 0; k < fleet[a].ripple_coeffs.size(); ++k) {
          dist += std::pow(fleet[a].ripple_coeffs[k] - fleet[b].ripple_coeffs[k], 2);
        }
        CHECK(dist > 0.0);
      }
    }
    const auto back = fleet_from_json(fleet_to_json(fleet));
    REQUIRE(back.size() == fleet.size());
    CHECK(to_json(back[5]) == to_json(fleet[5]));
  }
}
