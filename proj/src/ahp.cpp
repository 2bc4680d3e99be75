#include "cloudrank/ahp.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <set>

#include "cloudrank/errors.hpp"

namespace cloudrank::ahp {

namespace {

constexpr double kReciprocalTolerance = 1e-9;
constexpr double kScaleTolerance = 1e-3;

}  // namespace

ComparisonMatrix::ComparisonMatrix(std::vector<std::string> criteria, Matrix cells)
    : criteria_(std::move(criteria)), cells_(std::move(cells)) {
  const std::size_t n = criteria_.size();
  if (n == 0) {
    throw ValidationError("matrix", "at least one criterion is required");
  }
  if (cells_.size() != n) {
    throw ValidationError("matrix", "cell matrix size does not match criteria count");
  }
  if (std::set<std::string>(criteria_.begin(), criteria_.end()).size() != n) {
    throw ValidationError("matrix", "duplicate criterion id");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(cells_(i, i) - 1.0) > kReciprocalTolerance) {
      throw ValidationError("matrix", "diagonal entry for '" + criteria_[i] + "' must be 1");
    }
    for (std::size_t j = 0; j < n; ++j) {
      const double v = cells_(i, j);
      if (!(v > 0.0) || !std::isfinite(v)) {
        throw ValidationError("matrix", "cells must be positive and finite");
      }
      if (std::abs(cells_(j, i) - 1.0 / v) > kReciprocalTolerance) {
        throw ValidationError("matrix",
                              "cells for (" + criteria_[i] + ", " + criteria_[j] + ") are not reciprocal");
      }
    }
  }
}

std::optional<double> WeightVector::Find(const std::string& criterion) const {
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (criteria[i] == criterion) {
      return weights[i];
    }
  }
  return std::nullopt;
}

void ValidateWeights(const WeightVector& weights, const std::string& group) {
  if (weights.criteria.size() != weights.weights.size()) {
    throw ValidationError(group, "criteria and weights differ in length");
  }
  if (weights.criteria.empty()) {
    throw ValidationError(group, "no weights given");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < weights.weights.size(); ++i) {
    const double w = weights.weights[i];
    if (!(w >= 0.0 && w <= 1.0)) {
      throw ValidationError(group, "weight for '" + weights.criteria[i] + "' must lie in [0, 1]");
    }
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw ValidationError(group, "weights must sum to 1, got " + std::to_string(sum));
  }
}

std::optional<double> SnapToScale(double value) {
  static constexpr std::array<double, 5> kScale{1.0, 3.0, 5.0, 7.0, 9.0};
  for (const double s : kScale) {
    if (std::abs(value - s) <= kScaleTolerance) {
      return s;
    }
    if (std::abs(value - 1.0 / s) <= kScaleTolerance) {
      return 1.0 / s;
    }
  }
  return std::nullopt;
}

ComparisonMatrix BuildMatrix(const std::vector<Judgment>& judgments, std::vector<std::string> criteria) {
  if (criteria.empty()) {
    for (const Judgment& j : judgments) {
      for (const std::string* c : {&j.criterion_a, &j.criterion_b}) {
        if (std::find(criteria.begin(), criteria.end(), *c) == criteria.end()) {
          criteria.push_back(*c);
        }
      }
    }
  }
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!index.emplace(criteria[i], i).second) {
      throw ValidationError("judgments", "duplicate criterion '" + criteria[i] + "'");
    }
  }
  if (criteria.size() < 2) {
    throw ValidationError("judgments", "at least two criteria are required");
  }

  const std::size_t n = criteria.size();
  Matrix cells(n, 1.0);
  std::vector<std::vector<bool>> given(n, std::vector<bool>(n, false));
  for (std::size_t k = 0; k < judgments.size(); ++k) {
    const Judgment& j = judgments[k];
    const std::string where = "judgments[" + std::to_string(k) + "]";
    const auto a = index.find(j.criterion_a);
    const auto b = index.find(j.criterion_b);
    if (a == index.end() || b == index.end()) {
      throw ValidationError(where, "unknown criterion in (" + j.criterion_a + ", " + j.criterion_b + ")");
    }
    if (a->second == b->second) {
      throw ValidationError(where, "criterion '" + j.criterion_a + "' compared with itself");
    }
    if (given[a->second][b->second]) {
      throw ValidationError(where, "duplicate pair (" + j.criterion_a + ", " + j.criterion_b + ")");
    }
    const auto value = SnapToScale(j.value);
    if (!value) {
      throw ValidationError(where, "value " + std::to_string(j.value) + " is not on the 1/3/5/7/9 scale");
    }
    cells(a->second, b->second) = *value;
    cells(b->second, a->second) = 1.0 / *value;
    given[a->second][b->second] = true;
    given[b->second][a->second] = true;
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = i + 1; k < n; ++k) {
      if (!given[i][k]) {
        throw ValidationError("judgments", "missing pair (" + criteria[i] + ", " + criteria[k] + ")");
      }
    }
  }
  return ComparisonMatrix(std::move(criteria), std::move(cells));
}

std::vector<double> RowSums(const Matrix& m) {
  std::vector<double> sums(m.size(), 0.0);
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t j = 0; j < m.size(); ++j) {
      sums[i] += m(i, j);
    }
  }
  return sums;
}

std::vector<double> NormalizedRowSums(const Matrix& m) {
  std::vector<double> sums = RowSums(m);
  double total = 0.0;
  for (const double s : sums) {
    total += s;
  }
  for (double& s : sums) {
    s /= total;
  }
  return sums;
}

WeightVector ComputeWeights(const ComparisonMatrix& m) { return {m.criteria(), NormalizedRowSums(m.cells())}; }

Matrix SquareMatrix(const Matrix& m) {
  const std::size_t n = m.size();
  Matrix out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < n; ++k) {
      const double lhs = m(i, k);
      for (std::size_t j = 0; j < n; ++j) {
        out(i, j) += lhs * m(k, j);
      }
    }
  }
  return out;
}

double ConvergenceGap(const ComparisonMatrix& m) {
  const std::vector<double> before = NormalizedRowSums(m.cells());
  const std::vector<double> after = NormalizedRowSums(SquareMatrix(m.cells()));
  double gap = 0.0;
  for (std::size_t i = 0; i < before.size(); ++i) {
    gap = std::max(gap, std::abs(before[i] - after[i]));
  }
  return gap;
}

}  // namespace cloudrank::ahp
