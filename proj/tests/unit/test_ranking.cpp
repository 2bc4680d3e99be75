#include <algorithm>
#include <chrono>
#include <set>

#include <doctest.h>

#include "cloudrank/errors.hpp"
#include "cloudrank/json_io.hpp"
#include "cloudrank/ranking.hpp"
#include "synthetic.hpp"

using namespace cloudrank;
using testsupport::ComboKey;
using testsupport::Dec;

namespace {

std::vector<ComboKey> Keys(const RankResult& r) {
  std::vector<ComboKey> out;
  for (const ScoredCombination& s : r.solutions) out.push_back(testsupport::KeyOf(s));
  return out;
}

std::set<ComboKey> KeySet(const RankResult& r) {
  const auto keys = Keys(r);
  return {keys.begin(), keys.end()};
}

bool Subset(const std::set<ComboKey>& a, const std::set<ComboKey>& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

testsupport::Synthetic SampleFixture() {
  testsupport::Synthetic s;
  s.catalog = ParseCatalog(testsupport::ReadText(testsupport::FixturePath("sample_catalog.json")));
  SampleStore store;
  store.MergeCsv(testsupport::ReadText(testsupport::FixturePath("sample_qos.csv")));
  s.averages = store.ComputeAverages();
  s.client_location = "melbourne";
  return s;
}

RankRequest Table8(const std::string& client) {
  RankRequest r = DefaultRankRequest();
  r.client_location = client;
  return r;
}

}  // namespace

TEST_SUITE("ranking") {
  TEST_CASE("default request mirrors the reference input form") {
    const RankRequest r = DefaultRankRequest();
    CHECK(r.usage.storage_gb == Dec("20"));
    CHECK(r.usage.data_out_gb == Dec("50"));
    CHECK(r.usage.compute_instances == 1);
    CHECK(r.usage.compute_hours == Dec("720"));
    CHECK(r.min_memory_gb == Dec("4"));
    CHECK(r.cost_weights.weights == std::vector<double>{0.35, 0.25, 0.35, 0.05});
    CHECK(r.benefit_weights.weights == std::vector<double>{0.7, 0.3});
  }

  TEST_CASE("effective QoS averages the two kinds") {
    const auto both = CombineQos(QosTriple{10, 10, 4}, QosTriple{20, 6, 2});
    REQUIRE(both);
    CHECK(both->values.download_mbps == 8);
    CHECK(both->values.latency_ms == 15);
    CHECK(both->source == QosSource::kAveraged);
    const auto only = CombineQos(QosTriple{10, 10, 4}, std::nullopt);
    CHECK(only->values.download_mbps == 10);
    CHECK(only->source == QosSource::kCompute);
    CHECK_FALSE(CombineQos(std::nullopt, std::nullopt).has_value());
  }

  TEST_CASE("score formula") {
    CriterionValues v;
    v.total_cost = 4;
    v.latency_ms = 2;
    v.upload_mbps = 2;
    v.download_mbps = 6;
    const auto equal = Score(v, {{"cost", "latency"}, {0.5, 0.5}}, {{"upload", "download"}, {0.5, 0.5}});
    REQUIRE(equal);
    CHECK(equal->ratio == doctest::Approx(0.75).epsilon(1e-15));

    // Extended form with ram and disk benefit terms, evaluated by hand.
    CriterionValues x;
    x.total_cost = 95.2;
    x.latency_ms = 41.5;
    x.upload_mbps = 22.25;
    x.download_mbps = 71.0;
    x.memory_gb = 8;
    x.disk_gb = 80;
    const ahp::WeightVector cost{{"cost", "latency"}, {0.8, 0.2}};
    const ahp::WeightVector benefit{{"upload", "download", "ram", "disk"}, {0.0566, 0.4248, 0.3050, 0.2135}};
    const auto extended = Score(x, cost, benefit);
    const double expected =
        (0.8 * 95.2 + 0.2 * 41.5) / (0.0566 * 22.25 + 0.4248 * 71.0 + 0.3050 * 8 + 0.2135 * 80);
    CHECK(extended->ratio == doctest::Approx(expected).epsilon(1e-14));
    REQUIRE(extended->denominator_terms.size() == 4);
    double num = 0;
    double den = 0;
    for (const auto& t : extended->numerator_terms) num += t.contribution;
    for (const auto& t : extended->denominator_terms) den += t.contribution;
    CHECK(std::abs(num - extended->numerator) <= 1e-9);
    CHECK(std::abs(den - extended->denominator) <= 1e-9);

    CriterionValues zero;
    CHECK_FALSE(Score(zero, cost, {{"download"}, {1.0}}).has_value());
  }

  TEST_CASE("scaling costs scales the ratio when latency carries no weight") {
    testsupport::Rng rng(51);
    std::uniform_real_distribution<double> d(0.5, 100);
    for (int trial = 0; trial < 200; ++trial) {
      CriterionValues v;
      v.compute_cost = d(rng);
      v.storage_cost = d(rng);
      v.network_cost = d(rng);
      v.latency_ms = d(rng);
      v.download_mbps = d(rng);
      v.upload_mbps = d(rng);
      const double lambda = d(rng) / 10;
      CriterionValues scaled = v;
      scaled.compute_cost *= lambda;
      scaled.storage_cost *= lambda;
      scaled.network_cost *= lambda;
      const ahp::WeightVector cost{{"compute_cost", "storage_cost", "network_cost", "latency"}, {0.5, 0.3, 0.2, 0.0}};
      const ahp::WeightVector benefit{{"download", "upload"}, {0.7, 0.3}};
      CHECK(Score(scaled, cost, benefit)->ratio == doctest::Approx(lambda * Score(v, cost, benefit)->ratio).epsilon(1e-12));
    }
  }

  TEST_CASE("request validation") {
    const auto s = SampleFixture();
    RankRequest r = Table8("melbourne");
    CHECK_NOTHROW(ValidateRankRequest(r, s.catalog));
    RankRequest bad = r;
    bad.cost_weights.weights = {0.35, 0.25, 0.25, 0.05};
    CHECK_THROWS_WITH_AS(ValidateRankRequest(bad, s.catalog), doctest::Contains("cost_weights"), ValidationError);
    bad = r;
    bad.providers = {"nobody"};
    CHECK_THROWS_WITH_AS(ValidateRankRequest(bad, s.catalog), doctest::Contains("providers"), ValidationError);
    bad = r;
    bad.price_max = Dec("-2");
    CHECK_THROWS_AS(ValidateRankRequest(bad, s.catalog), ValidationError);
    bad = r;
    bad.cost_weights = {{"cost", "compute_cost"}, {0.5, 0.5}};
    CHECK_THROWS_AS(ValidateRankRequest(bad, s.catalog), ValidationError);
    bad = r;
    bad.benefit_weights = {{"download", "price"}, {0.5, 0.5}};
    CHECK_THROWS_AS(ValidateRankRequest(bad, s.catalog), ValidationError);
    bad = r;
    bad.client_location.clear();
    CHECK_THROWS_AS(ValidateRankRequest(bad, s.catalog), ValidationError);
  }

  TEST_CASE("empty catalog and singleton") {
    Catalog empty;
    CHECK(OrderedSolutions(Table8("melbourne"), empty, {}).solutions.empty());

    auto s = testsupport::DivergenceSynthetic();
    s.catalog.compute_offers.resize(1);
    s.catalog.storage_offers.resize(1);
    s.catalog.network_offers.resize(1);
    RankRequest r = Table8(s.client_location);
    const auto one = OrderedSolutions(r, s.catalog, s.averages);
    REQUIRE(one.solutions.size() == 1);
    CHECK(one.solutions[0].rank_position == 1);
    r.cost_weights = {{"cost", "latency"}, {0.9, 0.1}};
    r.benefit_weights = {{"ram", "disk"}, {0.5, 0.5}};
    CHECK(OrderedSolutions(r, s.catalog, s.averages).solutions.size() == 1);
  }

  TEST_CASE("matches the brute-force oracle on the sample fixture") {
    const auto s = SampleFixture();
    const RankRequest r = Table8("melbourne");
    const RankResult got = OrderedSolutions(r, s.catalog, s.averages);
    const auto expected = testsupport::BruteForceRank(r, s.catalog, s.averages);
    CHECK(got.solutions.size() > 100);
    REQUIRE(got.solutions.size() == expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i) {
      REQUIRE(testsupport::KeyOf(got.solutions[i]) == expected[i].key);
      REQUIRE(got.solutions[i].ratio() == expected[i].ratio);
      REQUIRE(got.solutions[i].cost.total == expected[i].total);
      REQUIRE(got.solutions[i].rank_position == i + 1);
    }
  }

  TEST_CASE("matches the brute-force oracle on random catalogs") {
    testsupport::Rng rng(52);
    int nonempty = 0;
    for (int trial = 0; trial < 60; ++trial) {
      const auto s = testsupport::RandomSynthetic(rng, 120);
      const RankRequest r = testsupport::RandomRequest(rng, s);
      const bool by_cost = trial % 4 == 0;
      const RankResult got = Rank(r, s.catalog, s.averages, by_cost ? RankOrder::kCost : RankOrder::kRatio);
      const auto expected = testsupport::BruteForceRank(r, s.catalog, s.averages, by_cost);
      REQUIRE(got.solutions.size() == expected.size());
      for (std::size_t i = 0; i < expected.size(); ++i) {
        REQUIRE(testsupport::KeyOf(got.solutions[i]) == expected[i].key);
        REQUIRE(got.solutions[i].ratio() == expected[i].ratio);
      }
      nonempty += expected.empty() ? 0 : 1;
    }
    CHECK(nonempty > 20);
  }

  TEST_CASE("cost order equals re-sorting the ratio order by cost") {
    const auto s = SampleFixture();
    const RankRequest r = Table8("melbourne");
    RankResult by_ratio = OrderedSolutions(r, s.catalog, s.averages);
    const RankResult by_cost = RankByCostOnly(r, s.catalog, s.averages);
    std::sort(by_ratio.solutions.begin(), by_ratio.solutions.end(), CostOrderLess);
    CHECK(Keys(by_ratio) == Keys(by_cost));
    for (std::size_t i = 1; i < by_cost.solutions.size(); ++i)
      CHECK(by_cost.solutions[i - 1].cost.total <= by_cost.solutions[i].cost.total);
  }

  TEST_CASE("identical prices fall back to offer keys") {
    auto s = testsupport::DivergenceSynthetic();
    for (ComputeOffer& c : s.catalog.compute_offers) c.price_per_hour = Dec("0.1");
    const RankResult r = RankByCostOnly(Table8(s.client_location), s.catalog, s.averages);
    const auto keys = Keys(r);
    CHECK(std::is_sorted(keys.begin(), keys.end()));
  }

  TEST_CASE("raising min RAM yields nested result sets") {
    const auto s = SampleFixture();
    std::set<ComboKey> previous;
    bool first = true;
    for (const int ram : {0, 4, 8, 16}) {
      RankRequest r = Table8("melbourne");
      r.min_memory_gb = Decimal::FromInteger(ram);
      const auto keys = KeySet(OrderedSolutions(r, s.catalog, s.averages));
      if (!first) {
        CHECK(Subset(keys, previous));
        CHECK(keys.size() < previous.size());
      }
      previous = keys;
      first = false;
    }
  }

  TEST_CASE("shrinking providers or locations never adds combinations") {
    testsupport::Rng rng(53);
    for (int trial = 0; trial < 40; ++trial) {
      const auto s = testsupport::RandomSynthetic(rng, 100);
      RankRequest r = testsupport::RandomRequest(rng, s);
      r.providers.clear();
      r.locations.clear();
      const auto all = KeySet(OrderedSolutions(r, s.catalog, s.averages));
      RankRequest narrow = r;
      narrow.providers = {s.catalog.providers.front().id};
      CHECK(Subset(KeySet(OrderedSolutions(narrow, s.catalog, s.averages)), all));
      narrow = r;
      narrow.locations = {s.catalog.locations.front().id};
      CHECK(Subset(KeySet(OrderedSolutions(narrow, s.catalog, s.averages)), all));
    }
  }

  TEST_CASE("raising one offer's price never improves its ratio or best rank") {
    const auto s = SampleFixture();
    const RankRequest r = Table8("melbourne");
    const RankResult before = OrderedSolutions(r, s.catalog, s.averages);
    for (std::size_t target = 0; target < s.catalog.compute_offers.size(); target += 5) {
      Catalog raised = s.catalog;
      raised.compute_offers[target].price_per_hour += Dec("0.05");
      const OfferKey key = raised.compute_offers[target].Key();
      const RankResult after = OrderedSolutions(r, raised, s.averages);
      std::map<ComboKey, double> old_ratio;
      std::size_t old_best = SIZE_MAX;
      std::size_t new_best = SIZE_MAX;
      for (const auto& sol : before.solutions) {
        old_ratio[testsupport::KeyOf(sol)] = sol.ratio();
        if (sol.compute && sol.compute->Key() == key) old_best = std::min(old_best, sol.rank_position);
      }
      for (const auto& sol : after.solutions) {
        if (sol.compute && sol.compute->Key() == key) {
          CHECK(sol.ratio() >= old_ratio.at(testsupport::KeyOf(sol)));
          new_best = std::min(new_best, sol.rank_position);
        }
      }
      CHECK(new_best >= old_best);
    }
  }

  TEST_CASE("ratio ascending equals benefit/cost descending") {
    const auto s = SampleFixture();
    const RankResult r = OrderedSolutions(Table8("melbourne"), s.catalog, s.averages);
    for (std::size_t i = 1; i < r.solutions.size(); ++i) {
      const auto& a = r.solutions[i - 1].score;
      const auto& b = r.solutions[i].score;
      CHECK(a.denominator / a.numerator >= b.denominator / b.numerator);
    }
  }

  TEST_CASE("result does not depend on worker partitioning and is deterministic") {
    const auto s = testsupport::TableTenSynthetic();
    RankRequest r = Table8(s.client_location);
    r.min_memory_gb = Decimal{};
    const std::string reference =
        json_io::RankResponseJson(r, OrderedSolutions(r, s.catalog, s.averages, {1}), 1, 0, 100000, 0).dump();
    for (const unsigned workers : {2u, 3u, 7u, 16u}) {
      CHECK(json_io::RankResponseJson(r, OrderedSolutions(r, s.catalog, s.averages, {workers}), 1, 0, 100000, 0)
                .dump() == reference);
    }
  }

  TEST_CASE("single provider keeps every kind at one provider and location") {
    const auto s = SampleFixture();
    RankRequest r = Table8("melbourne");
    r.single_provider = true;
    const RankResult res = OrderedSolutions(r, s.catalog, s.averages);
    CHECK_FALSE(res.solutions.empty());
    for (const auto& sol : res.solutions) {
      CHECK(sol.compute->provider == sol.network.provider);
      CHECK(sol.storage->provider == sol.network.provider);
      CHECK(sol.compute->location == sol.network.location);
      CHECK(sol.storage->location == sol.network.location);
    }
  }

  TEST_CASE("zero-usage kinds are left out and budgets apply to the total") {
    const auto s = SampleFixture();
    RankRequest r = Table8("melbourne");
    r.usage.storage_gb = Decimal{};
    const RankResult compute_only = OrderedSolutions(r, s.catalog, s.averages);
    CHECK_FALSE(compute_only.solutions.empty());
    for (const auto& sol : compute_only.solutions) {
      CHECK_FALSE(sol.storage.has_value());
      CHECK(sol.qos.source == QosSource::kCompute);
    }
    r = Table8("melbourne");
    r.price_max = Dec("80");
    const RankResult capped = OrderedSolutions(r, s.catalog, s.averages);
    CHECK(capped.stats.excluded_budget > 0);
    for (const auto& sol : capped.solutions) CHECK(sol.cost.total <= Dec("80"));
    r.price_max = Decimal{};
    CHECK(OrderedSolutions(r, s.catalog, s.averages).solutions.empty());
  }

  TEST_CASE("missing QoS excludes offers unless estimation is requested") {
    const auto s = SampleFixture();
    RankRequest r = Table8("sydney");  // no measurements from this vantage point
    CHECK(OrderedSolutions(r, s.catalog, s.averages).solutions.empty());
    r.estimate_missing_qos = true;
    const RankResult estimated = OrderedSolutions(r, s.catalog, s.averages);
    CHECK_FALSE(estimated.solutions.empty());
    for (const auto& sol : estimated.solutions) CHECK(sol.qos.estimated);
  }

  TEST_CASE("normalization maps criteria to [1, 2]") {
    const auto s = SampleFixture();
    RankRequest r = Table8("melbourne");
    r.normalize = true;
    const RankResult res = OrderedSolutions(r, s.catalog, s.averages);
    for (const auto& sol : res.solutions) {
      for (const auto& t : sol.score.numerator_terms) {
        CHECK(t.value >= 1.0);
        CHECK(t.value <= 2.0);
      }
    }
  }

  TEST_CASE("cheap but slow loses the ratio ranking") {
    const auto s = testsupport::DivergenceSynthetic();
    const RankRequest r = Table8(s.client_location);
    const RankResult by_ratio = OrderedSolutions(r, s.catalog, s.averages);
    const RankResult by_cost = RankByCostOnly(r, s.catalog, s.averages);
    REQUIRE_FALSE(by_ratio.solutions.empty());
    CHECK(testsupport::KeyOf(by_ratio.solutions[0]) != testsupport::KeyOf(by_cost.solutions[0]));
    CHECK(by_cost.solutions[0].compute->provider == "budget");
    CHECK(by_ratio.solutions[0].compute->provider == "premium");
    CHECK(by_ratio.solutions[0].qos.values.download_mbps == 25 * by_cost.solutions[0].qos.values.download_mbps);
  }

  TEST_CASE("evaluated combinations stay within the filtered product") {
    const auto s = SampleFixture();
    const RankResult r = OrderedSolutions(Table8("melbourne"), s.catalog, s.averages);
    CHECK(r.stats.evaluated <= r.stats.compute_candidates * r.stats.storage_candidates * r.stats.network_candidates);
  }
}
