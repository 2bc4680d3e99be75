#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cloudrank/ahp.hpp"
#include "cloudrank/catalog.hpp"
#include "cloudrank/errors.hpp"
#include "cloudrank/json_io.hpp"
#include "cloudrank/pricing.hpp"
#include "cloudrank/qos.hpp"
#include "cloudrank/ranking.hpp"

namespace py = pybind11;
using namespace cloudrank;
using Json = nlohmann::json;

namespace {

std::string Weights(const std::vector<std::tuple<std::string, std::string, double>>& judgments,
                    std::vector<std::string> criteria) {
  std::vector<ahp::Judgment> parsed;
  for (const auto& [a, b, v] : judgments) parsed.push_back({a, b, v});
  const ahp::ComparisonMatrix m = ahp::BuildMatrix(parsed, std::move(criteria));
  Json out = json_io::ToJson(ahp::ComputeWeights(m));
  out["row_sums"] = ahp::RowSums(m.cells());
  out["convergence_gap"] = ahp::ConvergenceGap(m);
  return out.dump();
}

std::optional<std::string> Tiered(const std::vector<std::tuple<std::string, std::optional<std::string>, std::string>>& tiers,
                                  const std::string& usage_gb) {
  std::vector<PriceTier> parsed;
  for (const auto& [from, to, price] : tiers) {
    parsed.push_back({Decimal::Parse(from), to ? std::optional(Decimal::Parse(*to)) : std::nullopt,
                      Decimal::Parse(price)});
  }
  const auto cost = TieredCost(parsed, Decimal::Parse(usage_gb));
  return cost ? std::optional(cost->ToString()) : std::nullopt;
}

std::string CatalogSummary(const std::string& document) {
  const Catalog c = ParseCatalog(document);
  return Json{{"compute", json_io::OffersJson(c, "compute")},
              {"storage", json_io::OffersJson(c, "storage")},
              {"network", json_io::OffersJson(c, "network")}}
      .dump();
}

std::string Averages(const std::string& csv, const std::optional<std::string>& client_location) {
  SampleStore store;
  const MergeReport report = store.MergeCsv(csv);
  if (!report.errors.empty()) {
    throw ValidationError("csv line " + std::to_string(report.errors.front().line), report.errors.front().message);
  }
  std::vector<QosAverage> averages = store.ComputeAverages();
  if (client_location) {
    std::erase_if(averages, [&](const QosAverage& a) { return a.key.client_location != *client_location; });
  }
  return json_io::AveragesJson(averages).dump();
}

std::string RankJson(const std::string& request_json, const std::string& catalog_json, const std::string& qos_csv,
                     const std::string& by, std::size_t limit, unsigned workers) {
  if (by != "ratio" && by != "cost") {
    throw ValidationError("by", "must be ratio or cost");
  }
  const Catalog catalog = ParseCatalog(catalog_json);
  SampleStore store;
  store.MergeCsv(qos_csv);
  const RankRequest request = json_io::ParseRankRequest(Json::parse(request_json));
  ValidateRankRequest(request, catalog);
  const auto averages = store.ComputeAverages();
  RankResult result;
  {
    py::gil_scoped_release release;
    result = Rank(request, catalog, averages, by == "cost" ? RankOrder::kCost : RankOrder::kRatio, {workers});
  }
  return json_io::RankResponseJson(request, result, 0, 0, limit, 0).dump();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "cloudrank native core";
  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);

  m.def("weights", &Weights, py::arg("judgments"), py::arg("criteria") = std::vector<std::string>{});
  m.def("tiered_cost", &Tiered, py::arg("tiers"), py::arg("usage_gb"));
  m.def("catalog_offers", &CatalogSummary, py::arg("document"));
  m.def("qos_averages", &Averages, py::arg("csv"), py::arg("client_location") = std::nullopt);
  m.def("rank", &RankJson, py::arg("request"), py::arg("catalog"), py::arg("qos_csv"), py::arg("by") = "ratio",
        py::arg("limit") = 100, py::arg("workers") = 1);
}
