#include "cloudrank/qos.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <numbers>
#include <set>

#include "cloudrank/errors.hpp"

namespace cloudrank {

namespace {

constexpr double kEarthRadiusKm = 6371.0;

std::string FormatDouble(double value) {
  std::array<char, 64> buffer{};
  const auto [end, ec] = std::to_chars(buffer.data(), buffer.data() + buffer.size(), value);
  return std::string(buffer.data(), end);
}

bool NeedsQuoting(std::string_view field) { return field.find_first_of(",\"\n\r") != std::string_view::npos; }

void AppendField(std::string& out, std::string_view field) {
  if (!NeedsQuoting(field)) {
    out += field;
    return;
  }
  out += '"';
  for (const char c : field) {
    if (c == '"') {
      out += '"';
    }
    out += c;
  }
  out += '"';
}

// Splits one CSV record (no embedded newlines). Returns nullopt on an unterminated quote.
std::optional<std::vector<std::string>> SplitRecord(std::string_view line) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(current));
      current.clear();
    } else {
      current += c;
    }
  }
  if (quoted) {
    return std::nullopt;
  }
  fields.push_back(std::move(current));
  return fields;
}

template <typename T>
bool ParseNumber(const std::string& text, T& out) {
  const char* begin = text.data();
  const char* end = begin + text.size();
  const auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc{} && ptr == end;
}

double Radians(double degrees) { return degrees * std::numbers::pi / 180.0; }

}  // namespace

std::string_view ToString(ServiceKind kind) { return kind == ServiceKind::kCompute ? "compute" : "storage"; }

std::optional<ServiceKind> ParseServiceKind(std::string_view text) {
  if (text == "compute") {
    return ServiceKind::kCompute;
  }
  if (text == "storage") {
    return ServiceKind::kStorage;
  }
  return std::nullopt;
}

void ValidateSample(const QosSample& sample) {
  if (sample.key.provider.empty() || sample.key.datacenter_location.empty() || sample.key.client_location.empty()) {
    throw ValidationError("sample", "provider, datacenter_location and client_location must be non-empty");
  }
  for (const auto& [name, value] : {std::pair{"latency_ms", sample.latency_ms},
                                    std::pair{"download_mbps", sample.download_mbps},
                                    std::pair{"upload_mbps", sample.upload_mbps}}) {
    if (!(value > 0.0) || !std::isfinite(value)) {
      throw ValidationError(name, "must be positive and finite");
    }
  }
}

std::string FormatSamplesCsv(std::span<const QosSample> samples) {
  std::string out(kSampleCsvHeader);
  out += '\n';
  for (const QosSample& s : samples) {
    AppendField(out, s.key.provider);
    out += ',';
    AppendField(out, s.key.datacenter_location);
    out += ',';
    out += ToString(s.key.service_kind);
    out += ',';
    AppendField(out, s.key.client_location);
    out += ',';
    out += std::to_string(s.timestamp);
    out += ',';
    out += FormatDouble(s.latency_ms);
    out += ',';
    out += FormatDouble(s.download_mbps);
    out += ',';
    out += FormatDouble(s.upload_mbps);
    out += '\n';
  }
  return out;
}

ParsedSamples ParseSamplesCsv(std::string_view text) {
  ParsedSamples out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool header_seen = false;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) {
      end = text.size();
    }
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') {
      line.remove_suffix(1);
    }
    if (!header_seen) {
      if (line != kSampleCsvHeader) {
        out.errors.push_back({line_no, "missing or unexpected header row"});
        return out;
      }
      header_seen = true;
      continue;
    }
    if (line.empty()) {
      continue;
    }
    const auto fields = SplitRecord(line);
    if (!fields) {
      out.errors.push_back({line_no, "unterminated quoted field"});
      continue;
    }
    if (fields->size() != 8) {
      out.errors.push_back({line_no, "expected 8 columns, got " + std::to_string(fields->size())});
      continue;
    }
    const auto& f = *fields;
    QosSample sample;
    sample.key.provider = f[0];
    sample.key.datacenter_location = f[1];
    const auto kind = ParseServiceKind(f[2]);
    if (!kind) {
      out.errors.push_back({line_no, "service_kind must be compute or storage"});
      continue;
    }
    sample.key.service_kind = *kind;
    sample.key.client_location = f[3];
    if (!ParseNumber(f[4], sample.timestamp)) {
      out.errors.push_back({line_no, "timestamp_utc is not an integer"});
      continue;
    }
    if (!ParseNumber(f[5], sample.latency_ms) || !ParseNumber(f[6], sample.download_mbps) ||
        !ParseNumber(f[7], sample.upload_mbps)) {
      out.errors.push_back({line_no, "measurement is not a number"});
      continue;
    }
    try {
      ValidateSample(sample);
    } catch (const ValidationError& e) {
      out.errors.push_back({line_no, e.what()});
      continue;
    }
    out.samples.push_back(std::move(sample));
  }
  if (!header_seen) {
    out.errors.push_back({1, "missing header row"});
  }
  return out;
}

bool SampleStore::InsertLocked(const QosSample& sample) {
  const Measurement m{sample.latency_ms, sample.download_mbps, sample.upload_mbps};
  const auto [it, inserted] = samples_.emplace(Identity{sample.key, sample.timestamp}, m);
  if (!inserted && m < it->second) {
    it->second = m;
  }
  return inserted;
}

std::size_t SampleStore::Merge(std::span<const QosSample> batch) {
  for (const QosSample& s : batch) {
    ValidateSample(s);
  }
  std::lock_guard lock(mutex_);
  std::size_t inserted = 0;
  for (const QosSample& s : batch) {
    inserted += InsertLocked(s) ? 1 : 0;
  }
  return inserted;
}

MergeReport SampleStore::MergeCsv(std::string_view csv) {
  ParsedSamples parsed = ParseSamplesCsv(csv);
  MergeReport report;
  report.errors = std::move(parsed.errors);
  report.inserted = Merge(parsed.samples);
  report.duplicates = parsed.samples.size() - report.inserted;
  return report;
}

std::vector<QosSample> SampleStore::Since(std::int64_t since) const {
  std::vector<QosSample> out;
  {
    std::lock_guard lock(mutex_);
    for (const auto& [id, m] : samples_) {
      if (id.timestamp >= since) {
        out.push_back({id.key, id.timestamp, m.latency_ms, m.download_mbps, m.upload_mbps});
      }
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const QosSample& a, const QosSample& b) { return a.timestamp < b.timestamp; });
  return out;
}

std::string SampleStore::ExportCsv(std::int64_t since) const { return FormatSamplesCsv(Since(since)); }

std::vector<QosAverage> SampleStore::ComputeAverages() const {
  std::vector<QosAverage> out;
  std::lock_guard lock(mutex_);
  // Map order groups identical keys together and fixes the summation order.
  for (auto it = samples_.begin(); it != samples_.end();) {
    QosAverage avg;
    avg.key = it->first.key;
    double latency = 0.0;
    double download = 0.0;
    double upload = 0.0;
    for (; it != samples_.end() && it->first.key == avg.key; ++it) {
      latency += it->second.latency_ms;
      download += it->second.download_mbps;
      upload += it->second.upload_mbps;
      ++avg.sample_count;
    }
    const auto n = static_cast<double>(avg.sample_count);
    avg.mean_latency_ms = latency / n;
    avg.mean_download_mbps = download / n;
    avg.mean_upload_mbps = upload / n;
    out.push_back(std::move(avg));
  }
  return out;
}

std::size_t SampleStore::size() const {
  std::lock_guard lock(mutex_);
  return samples_.size();
}

std::vector<QosAverage> ComputeAverages(std::span<const QosSample> samples) {
  SampleStore store;
  store.Merge(samples);
  return store.ComputeAverages();
}

double GreatCircleKm(const Location& a, const Location& b) {
  const double lat1 = Radians(a.latitude);
  const double lat2 = Radians(b.latitude);
  const double dlat = lat2 - lat1;
  const double dlon = Radians(b.longitude - a.longitude);
  const double h = std::sin(dlat / 2) * std::sin(dlat / 2) +
                   std::cos(lat1) * std::cos(lat2) * std::sin(dlon / 2) * std::sin(dlon / 2);
  return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(h)));
}

std::optional<LinearFit> FitLine(std::span<const std::pair<double, double>> points) {
  std::set<double> distinct;
  double mean_x = 0.0;
  double mean_y = 0.0;
  for (const auto& [x, y] : points) {
    distinct.insert(x);
    mean_x += x;
    mean_y += y;
  }
  if (distinct.size() < 2) {
    return std::nullopt;
  }
  const auto n = static_cast<double>(points.size());
  mean_x /= n;
  mean_y /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (const auto& [x, y] : points) {
    sxx += (x - mean_x) * (x - mean_x);
    sxy += (x - mean_x) * (y - mean_y);
  }
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = mean_y - fit.slope * mean_x;
  return fit;
}

std::optional<double> EstimateByDistance(std::span<const std::pair<double, double>> observations, double query_km) {
  const auto fit = FitLine(observations);
  if (!fit) {
    return std::nullopt;
  }
  double floor = observations.front().second;
  for (const auto& [x, y] : observations) {
    floor = std::min(floor, y);
  }
  return std::max(floor, fit->intercept + fit->slope * query_km);
}

std::optional<LatencyEstimate> EstimateLatencyFallback(const Location& client, const Location& datacenter,
                                                       std::span<const QosAverage> known, const Catalog& catalog) {
  std::vector<std::pair<double, double>> points;
  for (const QosAverage& avg : known) {
    const Location* c = catalog.FindLocation(avg.key.client_location);
    const Location* d = catalog.FindLocation(avg.key.datacenter_location);
    if (c != nullptr && d != nullptr) {
      points.emplace_back(GreatCircleKm(*c, *d), avg.mean_latency_ms);
    }
  }
  const auto latency = EstimateByDistance(points, GreatCircleKm(client, datacenter));
  if (!latency) {
    return std::nullopt;
  }
  return LatencyEstimate{*latency, true};
}

}  // namespace cloudrank
