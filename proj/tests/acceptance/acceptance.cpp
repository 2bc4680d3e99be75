// One PASS/FAIL line per acceptance criterion. Exit status is nonzero when any line fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>

#include <boost/multiprecision/cpp_dec_float.hpp>

#include "cloudrank/ahp.hpp"
#include "cloudrank/pricing.hpp"
#include "cloudrank/probe.hpp"
#include "cloudrank/qos.hpp"
#include "cloudrank/ranking.hpp"
#include "loopback.hpp"
#include "synthetic.hpp"

using namespace cloudrank;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void Require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << (detail.tellp() > 0 ? "; " : "") << what;
    }
  }
};

double Ms(Clock::duration d) { return std::chrono::duration<double, std::milli>(d).count(); }

std::vector<ahp::Judgment> ReferenceJudgments() {
  return {{"upload", "download", 1.0 / 3}, {"upload", "ram", 1.0 / 5}, {"upload", "disk", 1.0 / 5},
          {"download", "ram", 3},          {"download", "disk", 5},    {"ram", "disk", 3}};
}

std::string Fmt(const std::vector<double>& v) {
  std::ostringstream out;
  out.precision(4);
  out << std::fixed << '(';
  for (std::size_t i = 0; i < v.size(); ++i) out << (i ? ", " : "") << v[i];
  return out.str() + ')';
}

void AhpExample(Outcome& o) {
  const auto start = Clock::now();
  const ahp::ComparisonMatrix m = ahp::BuildMatrix(ReferenceJudgments());
  const ahp::WeightVector w = ahp::ComputeWeights(m);
  const double elapsed = Ms(Clock::now() - start);
  const std::vector<double> sums = ahp::RowSums(m.cells());
  const std::vector<double> want_sums{1.7333, 13, 9.3333, 6.5333};
  const std::vector<double> want{0.0566, 0.4248, 0.3050, 0.2135};
  bool sums_ok = true;
  bool weights_ok = true;
  for (std::size_t i = 0; i < 4; ++i) {
    sums_ok &= std::abs(sums[i] - want_sums[i]) <= 5e-4;
    weights_ok &= std::abs(w.weights[i] - want[i]) <= 5e-4;
  }
  const double total = std::accumulate(sums.begin(), sums.end(), 0.0);
  o.Require(sums_ok, "row sums " + Fmt(sums) + " vs " + Fmt(want_sums));
  o.Require(std::abs(total - 30.5999) <= 5e-4, "column sum " + std::to_string(total) + " vs 30.5999");
  o.Require(weights_ok, "weights " + Fmt(w.weights) + " vs " + Fmt(want));
  o.Require(elapsed < 1.0, "took " + std::to_string(elapsed) + " ms");
}

void MatrixSquaring(Outcome& o) {
  const ahp::ComparisonMatrix m = ahp::BuildMatrix(ReferenceJudgments());
  const ahp::Matrix m2 = ahp::SquareMatrix(m);
  const double expected[4][4] = {{4, 58.0 / 75, 22.0 / 15, 8.0 / 3},
                                 {46, 4, 124.0 / 15, 98.0 / 5},
                                 {26, 44.0 / 15, 4, 26.0 / 3},
                                 {184.0 / 15, 98.0 / 45, 34.0 / 15, 4}};
  double worst = 0;
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) worst = std::max(worst, std::abs(m2(i, j) - expected[i][j]));
  o.Require(worst <= 1e-9, "M2 entry error " + std::to_string(worst));
  const std::vector<double> w2 = ahp::NormalizedRowSums(m2);
  const std::vector<double> want{0.0597, 0.5223, 0.2790, 0.1389};
  bool ok = true;
  for (std::size_t i = 0; i < 4; ++i) ok &= std::abs(w2[i] - want[i]) <= 5e-4;
  o.Require(ok, "M2 weights " + Fmt(w2) + " vs " + Fmt(want));
  const double gap = ahp::ConvergenceGap(m);
  o.Require(std::abs(gap - 0.0975) <= 1e-3, "gap " + std::to_string(gap) + " vs 0.0975");
}

void OracleEquivalence(Outcome& o) {
  testsupport::Rng rng(9001);
  const auto start = Clock::now();
  int mismatches = 0;
  std::size_t rows = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto s = testsupport::RandomSynthetic(rng, 200);
    const RankRequest r = testsupport::RandomRequest(rng, s);
    const RankResult got = OrderedSolutions(r, s.catalog, s.averages);
    const auto want = testsupport::BruteForceRank(r, s.catalog, s.averages);
    bool same = got.solutions.size() == want.size();
    for (std::size_t i = 0; same && i < want.size(); ++i) {
      same = testsupport::KeyOf(got.solutions[i]) == want[i].key && got.solutions[i].ratio() == want[i].ratio &&
             got.solutions[i].cost.total == want[i].total;
    }
    mismatches += same ? 0 : 1;
    rows += want.size();
  }
  const double seconds = Ms(Clock::now() - start) / 1000;
  o.Require(mismatches == 0, std::to_string(mismatches) + " of 100 catalogs differ");
  o.Require(rows > 0, "every synthetic result was empty");
  o.Require(seconds < 60, "took " + std::to_string(seconds) + " s");
  o.detail << (o.pass ? std::to_string(rows) + " rows compared in " + std::to_string(seconds) + " s" : "");
}

double MedianRankMs(const RankRequest& r, const testsupport::Synthetic& s, int runs, std::size_t* count) {
  std::vector<double> times;
  for (int i = 0; i < runs; ++i) {
    const auto start = Clock::now();
    const RankResult res = OrderedSolutions(r, s.catalog, s.averages);
    times.push_back(Ms(Clock::now() - start));
    *count = res.solutions.size();
  }
  std::sort(times.begin(), times.end());
  return times[times.size() / 2];
}

void TieredPricing(Outcome& o) {
  testsupport::Rng rng(9002);
  int mismatches = 0;
  for (int schedule = 0; schedule < 50; ++schedule) {
    const auto tiers = testsupport::RandomTiers(rng, schedule % 2 == 0);
    for (std::int64_t u = 0; u <= 1000; ++u) {
      mismatches += TieredCost(tiers, Decimal::FromInteger(u)) == testsupport::GbByGbCost(tiers, u) ? 0 : 1;
    }
  }
  o.Require(mismatches == 0, std::to_string(mismatches) + " tier prices differ from the GB oracle");

  const auto s = testsupport::TableTenSynthetic();
  std::vector<double> xs;
  std::vector<double> ys;
  double full_ms = 0;
  for (const int ram : {16, 8, 4, 0}) {
    RankRequest r = DefaultRankRequest();
    r.client_location = s.client_location;
    r.min_memory_gb = Decimal::FromInteger(ram);
    std::size_t count = 0;
    MedianRankMs(r, s, 3, &count);  // warm-up
    const double ms = MedianRankMs(r, s, 21, &count);
    xs.push_back(static_cast<double>(count));
    ys.push_back(ms);
    if (ram == 0) full_ms = ms;
  }
  o.Require(xs == std::vector<double>{552, 1524, 2095, 3808}, "combination counts " + Fmt(xs));
  o.Require(full_ms < 1000, "3808 combinations took " + std::to_string(full_ms) + " ms");
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / ys.size();
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  const double r2 = syy == 0 ? 0 : sxy * sxy / (sxx * syy);
  o.Require(r2 >= 0.9, "runtime linear fit R^2 = " + std::to_string(r2));
  if (o.pass) {
    o.detail << "3808 combinations in " << full_ms << " ms, R^2 = " << r2;
  }
}

void RamSubsetChain(Outcome& o) {
  const std::vector<testsupport::Synthetic> fixtures = [] {
    testsupport::Synthetic sample;
    sample.catalog = ParseCatalog(testsupport::ReadText(testsupport::FixturePath("sample_catalog.json")));
    SampleStore store;
    store.MergeCsv(testsupport::ReadText(testsupport::FixturePath("sample_qos.csv")));
    sample.averages = store.ComputeAverages();
    sample.client_location = "melbourne";
    return std::vector{sample, testsupport::TableTenSynthetic()};
  }();
  for (const auto& s : fixtures) {
    std::set<testsupport::ComboKey> previous;
    std::string sizes;
    for (const int ram : {0, 4, 8, 16}) {
      RankRequest r = DefaultRankRequest();
      r.client_location = s.client_location;
      r.min_memory_gb = Decimal::FromInteger(ram);
      std::set<testsupport::ComboKey> keys;
      for (const auto& sol : OrderedSolutions(r, s.catalog, s.averages).solutions)
        keys.insert(testsupport::KeyOf(sol));
      if (ram > 0) {
        o.Require(std::includes(previous.begin(), previous.end(), keys.begin(), keys.end()),
                  "min RAM " + std::to_string(ram) + " adds combinations");
        o.Require(keys.size() < previous.size(), "min RAM " + std::to_string(ram) + " does not shrink the set");
      }
      sizes += (sizes.empty() ? "" : " > ") + std::to_string(keys.size());
      previous = std::move(keys);
    }
    if (o.pass) o.detail << (o.detail.tellp() > 0 ? "; " : "") << sizes;
  }
}

void QosAggregation(Outcome& o) {
  using Wide = boost::multiprecision::cpp_dec_float_50;
  testsupport::Rng rng(9003);
  std::uniform_int_distribution<int> key(0, 11);
  std::lognormal_distribution<double> value(3.0, 1.2);
  std::vector<QosSample> samples;
  for (int i = 0; i < 10'000; ++i) {
    const int k = key(rng);
    samples.push_back({{"p" + std::to_string(k % 4), "l" + std::to_string(k % 3),
                        k % 2 ? ServiceKind::kCompute : ServiceKind::kStorage, "client"},
                       1'700'000'000 + i,
                       value(rng),
                       value(rng),
                       value(rng)});
  }
  std::map<QosKey, std::pair<std::array<Wide, 3>, int>> oracle;
  for (const QosSample& s : samples) {
    auto& [sums, n] = oracle[s.key];
    sums[0] += s.latency_ms;
    sums[1] += s.download_mbps;
    sums[2] += s.upload_mbps;
    ++n;
  }
  SampleStore reference;
  reference.Merge(samples);
  const auto averages = reference.ComputeAverages();
  double worst = 0;
  for (const QosAverage& a : averages) {
    const auto& [sums, n] = oracle.at(a.key);
    const double got[] = {a.mean_latency_ms, a.mean_download_mbps, a.mean_upload_mbps};
    for (int m = 0; m < 3; ++m) {
      const double want = static_cast<double>(sums[m] / n);
      worst = std::max(worst, std::abs(got[m] - want) / std::abs(want));
    }
  }
  o.Require(averages.size() == oracle.size(), "key count differs from the oracle");
  o.Require(worst <= 1e-9, "relative mean error " + std::to_string(worst));

  int unstable = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::shuffle(samples.begin(), samples.end(), rng);
    SampleStore store;
    std::size_t pos = 0;
    while (pos < samples.size()) {
      const std::size_t len =
          std::min<std::size_t>(samples.size() - pos, std::uniform_int_distribution<std::size_t>(1, 800)(rng));
      const std::span<const QosSample> batch(samples.data() + pos, len);
      store.Merge(batch);
      if (trial % 2 == 0) store.Merge(batch);
      pos += len;
    }
    const auto got = store.ComputeAverages();
    bool same = got.size() == averages.size();
    for (std::size_t i = 0; same && i < got.size(); ++i) {
      same = got[i].key == averages[i].key && got[i].sample_count == averages[i].sample_count &&
             got[i].mean_latency_ms == averages[i].mean_latency_ms &&
             got[i].mean_download_mbps == averages[i].mean_download_mbps &&
             got[i].mean_upload_mbps == averages[i].mean_upload_mbps;
    }
    unstable += same ? 0 : 1;
  }
  o.Require(unstable == 0, std::to_string(unstable) + " of 100 shuffled merges differ");

  using namespace std::chrono_literals;
  constexpr double kRate = 40.0;
  testsupport::LoopbackServer server({100ms, kRate, 1 << 20, -1});
  try {
    const QosSample s = ProbeOnce(server.Endpoint(), "loopback", 5);
    o.Require(s.latency_ms >= 100 && s.latency_ms <= 150, "probe latency " + std::to_string(s.latency_ms) + " ms");
    o.Require(std::abs(s.download_mbps - kRate) <= 0.2 * kRate,
              "probe download " + std::to_string(s.download_mbps) + " Mbps");
    o.Require(std::abs(s.upload_mbps - kRate) <= 0.2 * kRate,
              "probe upload " + std::to_string(s.upload_mbps) + " Mbps");
    if (o.pass) {
      o.detail << "probe " << s.latency_ms << " ms, " << s.download_mbps << "/" << s.upload_mbps << " Mbps";
    }
  } catch (const std::exception& e) {
    o.Require(false, std::string("probe failed: ") + e.what());
  }
}

void Divergence(Outcome& o) {
  const auto s = testsupport::DivergenceSynthetic();
  RankRequest r = DefaultRankRequest();
  r.client_location = s.client_location;
  const RankResult by_ratio = OrderedSolutions(r, s.catalog, s.averages);
  const RankResult by_cost = RankByCostOnly(r, s.catalog, s.averages);
  if (by_ratio.solutions.empty() || by_cost.solutions.empty()) {
    o.Require(false, "empty result");
    return;
  }
  const auto& cheap = by_cost.solutions.front();
  const auto& best = by_ratio.solutions.front();
  o.Require(testsupport::KeyOf(cheap) != testsupport::KeyOf(best), "cost top-1 equals ratio top-1");
  o.Require(best.qos.values.download_mbps >= 25 * cheap.qos.values.download_mbps, "download gap below 25x");
  if (o.pass) {
    o.detail << "cost top-1 " << cheap.compute->provider << " (" << cheap.cost.total.ToString() << "), ratio top-1 "
             << best.compute->provider << " (" << best.cost.total.ToString() << ")";
  }
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria{
      {"ahp-worked-example", AhpExample},
      {"ahp-matrix-squaring", MatrixSquaring},
      {"ranking-oracle-equivalence", OracleEquivalence},
      {"tiered-pricing-and-scaling", TieredPricing},
      {"min-ram-subset-chain", RamSubsetChain},
      {"qos-aggregation-and-probe", QosAggregation},
      {"ratio-vs-cost-divergence", Divergence},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      check(o);
    } catch (const std::exception& e) {
      o.Require(false, std::string("exception: ") + e.what());
    }
    failed += o.pass ? 0 : 1;
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.str().c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
