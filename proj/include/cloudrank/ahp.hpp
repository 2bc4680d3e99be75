#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace cloudrank::ahp {

// Dense row-major square matrix of positive entries.
class Matrix {
 public:
  Matrix() = default;
  explicit Matrix(std::size_t n, double fill = 0.0) : n_(n), cells_(n * n, fill) {}

  std::size_t size() const { return n_; }
  double& operator()(std::size_t row, std::size_t col) { return cells_[row * n_ + col]; }
  double operator()(std::size_t row, std::size_t col) const { return cells_[row * n_ + col]; }

 private:
  std::size_t n_ = 0;
  std::vector<double> cells_;
};

/*
 * Reciprocal pairwise-comparison matrix over an ordered list of criteria. Construction enforces a unit diagonal,
 * positive cells and cells[j][i] == 1 / cells[i][j] (within 1e-9); an accepted object always satisfies them.
 * Consistency (Saaty's CR) is not checked, so inconsistent judgments are accepted.
 */
class ComparisonMatrix {
 public:
  ComparisonMatrix(std::vector<std::string> criteria, Matrix cells);

  const std::vector<std::string>& criteria() const { return criteria_; }
  const Matrix& cells() const { return cells_; }
  std::size_t size() const { return criteria_.size(); }

 private:
  std::vector<std::string> criteria_;
  Matrix cells_;
};

struct WeightVector {
  std::vector<std::string> criteria;
  std::vector<double> weights;

  std::optional<double> Find(const std::string& criterion) const;
};

// Throws ValidationError naming `group` unless weights lie in [0,1], match criteria in length and sum to 1 (1e-9).
void ValidateWeights(const WeightVector& weights, const std::string& group);

// "criterion_a is `value` times as important as criterion_b".
struct Judgment {
  std::string criterion_a;
  std::string criterion_b;
  double value = 1.0;
};

// Snaps a judgment to the nearest value of the odd 1..9 scale or its reciprocals (within 1e-3); nullopt otherwise.
std::optional<double> SnapToScale(double value);

/*
 * Builds the reciprocal matrix from one judgment per unordered pair. When `criteria` is empty the order of first
 * appearance in `judgments` is used. Throws ValidationError on a missing pair, a duplicated pair, a self-comparison,
 * an unknown criterion or an off-scale value (even intermediates 2,4,6,8 are rejected).
 */
ComparisonMatrix BuildMatrix(const std::vector<Judgment>& judgments, std::vector<std::string> criteria = {});

std::vector<double> RowSums(const Matrix& m);

// weight_i = row_sum_i / sum of all row sums.
std::vector<double> NormalizedRowSums(const Matrix& m);

WeightVector ComputeWeights(const ComparisonMatrix& m);

Matrix SquareMatrix(const Matrix& m);
inline Matrix SquareMatrix(const ComparisonMatrix& m) { return SquareMatrix(m.cells()); }

// max_i |weights(m)_i - weights(m*m)_i|, i.e. how much one squaring step would still move the weights.
double ConvergenceGap(const ComparisonMatrix& m);

}  // namespace cloudrank::ahp
