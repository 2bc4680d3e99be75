#include "cloudrank/json_io.hpp"

#include <array>
#include <charconv>

#include "cloudrank/errors.hpp"
#include "json_util.hpp"

namespace cloudrank::json_io {

namespace {

Json Number(Decimal d) { return d.ToDouble(); }

Json TiersJson(const std::vector<PriceTier>& tiers) {
  Json out = Json::array();
  for (const PriceTier& t : tiers) {
    out.push_back({{"quota_min_gb", Number(t.quota_min_gb)},
                   {"quota_max_gb", t.quota_max_gb ? Number(*t.quota_max_gb) : Json("unbounded")},
                   {"unit_price_per_gb", Number(t.unit_price_per_gb)}});
  }
  return out;
}

std::set<std::string> StringSet(const Json& body, const char* key) {
  std::set<std::string> out;
  const auto it = body.find(key);
  if (it == body.end() || it->is_null()) {
    return out;
  }
  if (!it->is_array()) {
    throw ValidationError(key, "must be an array of ids");
  }
  for (const Json& v : *it) {
    if (!v.is_string()) {
      throw ValidationError(key, "must be an array of ids");
    }
    out.insert(v.get<std::string>());
  }
  return out;
}

bool Flag(const Json& body, const char* key, bool fallback) {
  const auto it = body.find(key);
  if (it == body.end() || it->is_null()) {
    return fallback;
  }
  if (!it->is_boolean()) {
    throw ValidationError(key, "must be a boolean");
  }
  return it->get<bool>();
}

Decimal DecimalOr(const Json& body, const char* key, Decimal fallback, const std::string& where) {
  const auto it = body.find(key);
  if (it == body.end() || it->is_null()) {
    return fallback;
  }
  return detail::ToDecimal(*it, where);
}

ahp::WeightVector ParseWeightVector(const Json& value, const std::string& where) {
  ahp::WeightVector w;
  if (value.is_object() && value.contains("criteria")) {
    const Json& criteria = value.at("criteria");
    const Json& weights = detail::Require(value, "weights", where);
    if (!criteria.is_array() || !weights.is_array() || criteria.size() != weights.size()) {
      throw ValidationError(where, "criteria and weights must be arrays of equal length");
    }
    for (std::size_t i = 0; i < criteria.size(); ++i) {
      if (!criteria[i].is_string() || !weights[i].is_number()) {
        throw ValidationError(where, "criteria must be strings and weights numbers");
      }
      w.criteria.push_back(criteria[i].get<std::string>());
      w.weights.push_back(weights[i].get<double>());
    }
    return w;
  }
  if (!value.is_object()) {
    throw ValidationError(where, "expected an object of criterion -> weight");
  }
  for (const auto& [criterion, weight] : value.items()) {
    if (!weight.is_number()) {
      throw ValidationError(where, "weight for '" + criterion + "' must be a number");
    }
    w.criteria.push_back(criterion);
    w.weights.push_back(weight.get<double>());
  }
  return w;
}

ahp::WeightVector WeightsFrom(const Json& body, const char* direct_key, const char* judgments_key,
                              const ahp::WeightVector& fallback) {
  const auto direct = body.find(direct_key);
  const auto judged = body.find(judgments_key);
  const bool has_direct = direct != body.end() && !direct->is_null();
  const bool has_judged = judged != body.end() && !judged->is_null();
  if (has_direct && has_judged) {
    throw ValidationError(direct_key, std::string("give either ") + direct_key + " or " + judgments_key);
  }
  if (has_direct) {
    return ParseWeightVector(*direct, direct_key);
  }
  if (has_judged) {
    try {
      return ahp::ComputeWeights(ahp::BuildMatrix(ParseJudgments(*judged, judgments_key)));
    } catch (const ValidationError& e) {
      throw ValidationError(judgments_key, e.what());
    }
  }
  return fallback;
}

std::string FormatDouble(double value) {
  std::array<char, 64> buffer{};
  const auto [end, ec] = std::to_chars(buffer.data(), buffer.data() + buffer.size(), value);
  return std::string(buffer.data(), end);
}

std::string CsvField(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) {
    return field;
  }
  std::string out = "\"";
  for (const char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string Label(const OfferKey& key) {
  return key.service_name.empty() ? key.provider + "@" + key.location
                                  : key.provider + ":" + key.service_name + "@" + key.location;
}

Json TermsJson(const std::vector<ScoreTerm>& terms) {
  Json out = Json::array();
  for (const ScoreTerm& t : terms) {
    out.push_back({{"criterion", t.criterion}, {"weight", t.weight}, {"value", t.value},
                   {"contribution", t.contribution}});
  }
  return out;
}

}  // namespace

std::vector<ahp::Judgment> ParseJudgments(const Json& array, const std::string& where) {
  if (!array.is_array()) {
    throw ValidationError(where, "expected an array of {criterion_a, criterion_b, value}");
  }
  std::vector<ahp::Judgment> out;
  for (std::size_t i = 0; i < array.size(); ++i) {
    const std::string item = where + "[" + std::to_string(i) + "]";
    const Json& j = array[i];
    ahp::Judgment judgment;
    judgment.criterion_a = detail::RequireString(j, "criterion_a", item);
    judgment.criterion_b = detail::RequireString(j, "criterion_b", item);
    const Json& value = detail::Require(j, "value", item);
    if (value.is_number()) {
      judgment.value = value.get<double>();
    } else if (value.is_string()) {
      // Accept "1/3" style reciprocals.
      const std::string text = value.get<std::string>();
      const auto slash = text.find('/');
      try {
        judgment.value = slash == std::string::npos
                             ? std::stod(text)
                             : std::stod(text.substr(0, slash)) / std::stod(text.substr(slash + 1));
      } catch (const std::exception&) {
        throw ValidationError(item, "value '" + text + "' is not a number");
      }
    } else {
      throw ValidationError(item, "value must be a number or a fraction string");
    }
    out.push_back(std::move(judgment));
  }
  return out;
}

RankRequest ParseRankRequest(const Json& body) {
  if (!body.is_object()) {
    throw ValidationError("body", "rank request must be a JSON object");
  }
  RankRequest r = DefaultRankRequest();
  r.locations = StringSet(body, "locations");
  r.providers = StringSet(body, "providers");
  r.min_memory_gb = DecimalOr(body, "min_memory_gb", r.min_memory_gb, "min_memory_gb");
  if (const auto it = body.find("max_memory_gb"); it != body.end() && !it->is_null()) {
    r.max_memory_gb = detail::ToDecimal(*it, "max_memory_gb");
  }
  r.price_max = DecimalOr(body, "price_max", r.price_max, "price_max");
  if (const auto it = body.find("usage"); it != body.end() && !it->is_null()) {
    const Json& u = *it;
    if (!u.is_object()) {
      throw ValidationError("usage", "must be an object");
    }
    if (const auto ci = u.find("compute_instances"); ci != u.end()) {
      if (!ci->is_number_integer()) {
        throw ValidationError("usage.compute_instances", "must be an integer");
      }
      r.usage.compute_instances = ci->get<std::int64_t>();
    }
    r.usage.compute_hours = DecimalOr(u, "compute_hours", r.usage.compute_hours, "usage.compute_hours");
    r.usage.storage_gb = DecimalOr(u, "storage_gb", r.usage.storage_gb, "usage.storage_gb");
    r.usage.data_in_gb = DecimalOr(u, "data_in_gb", r.usage.data_in_gb, "usage.data_in_gb");
    r.usage.data_out_gb = DecimalOr(u, "data_out_gb", r.usage.data_out_gb, "usage.data_out_gb");
    r.usage.period_label = detail::OptionalString(u, "period_label", r.usage.period_label);
  }
  if (const auto it = body.find("client_location"); it != body.end()) {
    if (!it->is_string()) {
      throw ValidationError("client_location", "must be a string");
    }
    r.client_location = it->get<std::string>();
  }
  r.cost_weights = WeightsFrom(body, "cost_weights", "cost_judgments", r.cost_weights);
  r.benefit_weights = WeightsFrom(body, "benefit_weights", "benefit_judgments", r.benefit_weights);
  r.single_provider = Flag(body, "single_provider", r.single_provider);
  r.estimate_missing_qos = Flag(body, "estimate_missing_qos", r.estimate_missing_qos);
  r.normalize = Flag(body, "normalize", r.normalize);
  return r;
}

Json ToJson(const ahp::WeightVector& weights) {
  return {{"criteria", weights.criteria}, {"weights", weights.weights}};
}

Json ToJson(const RankRequest& r) {
  Json out;
  out["locations"] = Json(std::vector<std::string>(r.locations.begin(), r.locations.end()));
  out["providers"] = Json(std::vector<std::string>(r.providers.begin(), r.providers.end()));
  out["min_memory_gb"] = Number(r.min_memory_gb);
  out["max_memory_gb"] = r.max_memory_gb ? Number(*r.max_memory_gb) : Json(nullptr);
  out["price_max"] = Number(r.price_max);
  out["usage"] = {{"compute_instances", r.usage.compute_instances},
                  {"compute_hours", Number(r.usage.compute_hours)},
                  {"storage_gb", Number(r.usage.storage_gb)},
                  {"data_in_gb", Number(r.usage.data_in_gb)},
                  {"data_out_gb", Number(r.usage.data_out_gb)},
                  {"period_label", r.usage.period_label}};
  out["client_location"] = r.client_location;
  out["cost_weights"] = ToJson(r.cost_weights);
  out["benefit_weights"] = ToJson(r.benefit_weights);
  out["single_provider"] = r.single_provider;
  out["estimate_missing_qos"] = r.estimate_missing_qos;
  out["normalize"] = r.normalize;
  return out;
}

Json ToJson(const ComputeOffer& o) {
  return {{"provider", o.provider},
          {"location", o.location},
          {"service_name", o.service_name},
          {"memory_gb", Number(o.memory_gb)},
          {"cpu_cores", o.cpu_cores},
          {"cpu_speed_ghz", Number(o.cpu_speed_ghz)},
          {"disk_gb", Number(o.disk_gb)},
          {"price_per_hour", Number(o.price_per_hour)}};
}

Json ToJson(const StorageOffer& o) {
  return {{"provider", o.provider},
          {"location", o.location},
          {"service_name", o.service_name},
          {"tiers", TiersJson(o.tiers)},
          {"max_capacity_gb", o.max_capacity_gb ? Number(*o.max_capacity_gb) : Json("unbounded")}};
}

Json ToJson(const NetworkOffer& o) {
  return {{"provider", o.provider},
          {"location", o.location},
          {"inbound_tiers", TiersJson(o.inbound_tiers)},
          {"outbound_tiers", TiersJson(o.outbound_tiers)}};
}

Json OffersJson(const Catalog& catalog, const std::string& kind) {
  Json out = Json::array();
  if (kind == "compute") {
    for (const auto& o : catalog.compute_offers) out.push_back(ToJson(o));
  } else if (kind == "storage") {
    for (const auto& o : catalog.storage_offers) out.push_back(ToJson(o));
  } else if (kind == "network") {
    for (const auto& o : catalog.network_offers) out.push_back(ToJson(o));
  } else {
    throw ValidationError("kind", "must be compute, storage or network");
  }
  return out;
}

Json ToJson(const QosAverage& a) {
  return {{"provider", a.key.provider},
          {"datacenter_location", a.key.datacenter_location},
          {"service_kind", std::string(ToString(a.key.service_kind))},
          {"client_location", a.key.client_location},
          {"mean_latency_ms", a.mean_latency_ms},
          {"mean_download_mbps", a.mean_download_mbps},
          {"mean_upload_mbps", a.mean_upload_mbps},
          {"sample_count", a.sample_count}};
}

Json AveragesJson(std::span<const QosAverage> averages) {
  Json out = Json::array();
  for (const QosAverage& a : averages) {
    out.push_back(ToJson(a));
  }
  return out;
}

Json ToJson(const ScoredCombination& s) {
  static constexpr std::array<const char*, 3> kSources{"compute", "storage", "averaged"};
  Json out;
  out["rank"] = s.rank_position;
  out["providers"] = ProvidersLabel(s);
  out["compute"] = s.compute ? ToJson(*s.compute) : Json(nullptr);
  out["storage"] = s.storage ? ToJson(*s.storage) : Json(nullptr);
  out["network"] = ToJson(s.network);
  out["cost"] = {{"compute", Number(s.cost.compute_cost)},
                 {"storage", Number(s.cost.storage_cost)},
                 {"network", Number(s.cost.network_cost)},
                 {"total", Number(s.cost.total)},
                 {"compute_present", s.cost.compute_present},
                 {"storage_present", s.cost.storage_present}};
  out["qos"] = {{"latency_ms", s.qos.values.latency_ms},
                {"download_mbps", s.qos.values.download_mbps},
                {"upload_mbps", s.qos.values.upload_mbps},
                {"source", kSources[static_cast<std::size_t>(s.qos.source)]},
                {"estimated", s.qos.estimated}};
  out["memory_gb"] = s.memory_gb;
  out["disk_gb"] = s.disk_gb;
  out["score"] = {{"ratio", s.score.ratio},
                  {"numerator", s.score.numerator},
                  {"denominator", s.score.denominator},
                  {"numerator_terms", TermsJson(s.score.numerator_terms)},
                  {"denominator_terms", TermsJson(s.score.denominator_terms)}};
  return out;
}

Json ToJson(const RankStats& st) {
  return {{"compute_candidates", st.compute_candidates}, {"storage_candidates", st.storage_candidates},
          {"network_candidates", st.network_candidates}, {"evaluated", st.evaluated},
          {"excluded_no_qos", st.excluded_no_qos},       {"excluded_budget", st.excluded_budget},
          {"excluded_zero_benefit", st.excluded_zero_benefit}};
}

Json RankResponseJson(const RankRequest& request, const RankResult& result, std::uint64_t catalog_version,
                      std::size_t offset, std::size_t limit, std::int64_t generated_at) {
  Json out;
  out["request_echo"] = ToJson(request);
  out["catalog_version"] = catalog_version;
  out["total_results"] = result.solutions.size();
  out["offset"] = offset;
  out["limit"] = limit;
  out["stats"] = ToJson(result.stats);
  Json results = Json::array();
  for (std::size_t i = offset; i < result.solutions.size() && i < offset + limit; ++i) {
    results.push_back(ToJson(result.solutions[i]));
  }
  out["results"] = std::move(results);
  if (generated_at != 0) {
    out["generated_at"] = generated_at;
  }
  return out;
}

std::string ProvidersLabel(const ScoredCombination& s) {
  std::vector<std::string> providers;
  auto add = [&](const std::string& p) {
    if (std::find(providers.begin(), providers.end(), p) == providers.end()) {
      providers.push_back(p);
    }
  };
  if (s.compute) add(s.compute->provider);
  if (s.storage) add(s.storage->provider);
  add(s.network.provider);
  std::string out;
  for (const std::string& p : providers) {
    out += out.empty() ? p : "+" + p;
  }
  return out;
}

std::string RankCsv(std::span<const ScoredCombination> solutions) {
  std::string out = kRankCsvHeader;
  out += '\n';
  for (const ScoredCombination& s : solutions) {
    out += std::to_string(s.rank_position) + ',';
    out += CsvField(ProvidersLabel(s)) + ',';
    out += CsvField(s.compute ? Label(s.compute->Key()) : "-") + ',';
    out += CsvField(s.storage ? Label(s.storage->Key()) : "-") + ',';
    out += CsvField(Label(s.network.Key())) + ',';
    out += s.cost.total.ToString() + ',';
    out += FormatDouble(s.qos.values.latency_ms) + ',';
    out += FormatDouble(s.qos.values.download_mbps) + ',';
    out += FormatDouble(s.qos.values.upload_mbps) + ',';
    out += FormatDouble(s.score.ratio) + '\n';
  }
  return out;
}

}  // namespace cloudrank::json_io
