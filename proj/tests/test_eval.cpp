#include <doctest.h>

#include <algorithm>
#include <random>

#include "edfa/eval.hpp"
#include "edfa/simkernel.hpp"
#include "helpers.hpp"

using namespace edfa;
using namespace edfa::eval;
using edfa::test::make_record;
using edfa::test::mask_of;

TEST_SUITE("eval") {
  TEST_CASE("perfect oracle has zero error") {
    const auto dev = sim::make_fleet({1, 1, 1.0}, 1).front();
    const auto recs = sim::gen_dataset(dev, {{20.0}}, 30, {}, false, 2);
    const Predictor oracle = [&](const MeasurementRecord& r) {
      return sim::true_gain(dev, r.plan, r.input_spectrum_dbm, r.target_gain_db);
    };
    const auto e = abs_errors(oracle, recs);
    std::size_t expected = 0;
    for (const auto& r : recs) expected += r.plan.active_count();
    CHECK(e.size() == expected);
    CHECK(*std::max_element(e.begin(), e.end()) < 1e-12);
  }

  TEST_CASE("two active channels with residuals 0.1 and -0.3") {
    auto r = make_record(ChannelPlan(mask_of({4, 9}), LoadingMode::Random));
    const Spectrum truth = *r.gain_spectrum_db;
    auto pred = truth;
    pred[4] += 0.1;
    pred[9] -= 0.3;
    const std::vector<MeasurementRecord> test{r};
    const auto e = abs_errors([&](const MeasurementRecord&) { return pred; }, test);
    REQUIRE(e.size() == 2);
    CHECK(e[0] == doctest::Approx(0.1));
    CHECK(e[1] == doctest::Approx(0.3));
    CHECK(summarize(e).mae_db == doctest::Approx(0.2));
    // Off-channel predictions never matter.
    auto noisy = pred;
    noisy[0] = 1e6;
    noisy[50] = -1e6;
    CHECK(abs_errors([&](const MeasurementRecord&) { return noisy; }, test) == e);
    CHECK_THROWS_AS(abs_errors([&](const MeasurementRecord&) { return pred; }, {}), ConfigError);
  }

  TEST_CASE("summary statistics") {
    const std::vector<double> e{1, 2, 3, 4, 5};
    const auto s = summarize(e);
    CHECK(s.median_db == 3.0);
    CHECK(s.p95_db == doctest::Approx(4.8));
    CHECK(s.q25_db == 2.0);
    CHECK(s.q75_db == 4.0);
    CHECK(s.mae_db == 3.0);
    CHECK(s.n_channels_evaluated == 5);
    const auto c = summarize(std::vector<double>(7, 0.25));
    for (double v : {c.mae_db, c.median_db, c.q25_db, c.q75_db, c.p95_db, c.min_db, c.max_db}) CHECK(v == 0.25);
    CHECK_THROWS_AS(summarize(std::vector<double>{}), ConfigError);
  }

  TEST_CASE("ordering holds and order of input does not matter") {
    std::mt19937_64 rng(5);
    std::exponential_distribution<double> ex(3.0);
    std::uniform_int_distribution<int> len(1, 60);
    for (int k = 0; k < 1000; ++k) {
      std::vector<double> e(static_cast<std::size_t>(len(rng)));
      for (auto& v : e) v = ex(rng);
      const auto s = summarize(e);
      CHECK(s.min_db >= 0.0);
      CHECK(s.min_db <= s.q25_db);
      CHECK(s.q25_db <= s.median_db);
      CHECK(s.median_db <= s.q75_db);
      CHECK(s.q75_db <= s.p95_db);
      CHECK(s.p95_db <= s.max_db);
      std::shuffle(e.begin(), e.end(), rng);
      const auto t = summarize(e);
      CHECK(t.mae_db == s.mae_db);
      CHECK(t.p95_db == s.p95_db);
    }
  }

  TEST_CASE("report files") {
    edfa::test::TempDir dir("report");
    NamedStats stats{{"booster/random/internal", summarize(std::vector<double>{0.1, 0.2, 0.4})}};
    report(stats, dir.path);
    const auto csv = edfa::test::slurp(dir.path / "stats.csv");
    CHECK(csv ==
          "config,mae,median,q25,q75,p95,min,max,n\n"
          "booster/random/internal,0.233333,0.200000,0.150000,0.300000,0.380000,0.100000,0.400000,3\n");
    const auto first = edfa::test::slurp(dir.path / "stats.json");
    report(stats, dir.path);
    CHECK(edfa::test::slurp(dir.path / "stats.json") == first);

    TlMatrix m;
    m.device_ids = {"B01", "P01"};
    m.entries.assign(2, std::vector<std::optional<ErrorStats>>(2, summarize(std::vector<double>{0.1})));
    m.entries[0][1].reset();
    report(m, dir.path);
    const auto mcsv = edfa::test::slurp(dir.path / "tl_matrix.csv");
    CHECK(std::count(mcsv.begin(), mcsv.end(), '\n') == 5);
    CHECK(mcsv.find("B01,P01,failed") != std::string::npos);
  }
}
