#include "rebmkit/matrix.hpp"

#include <cmath>

#include "rebmkit/errors.hpp"

namespace rebmkit {

RealMatrix RealMatrix::identity(int n) {
  RealMatrix m(n, n);
  for (int i = 0; i < n; ++i) m.at(i, i) = 1.0;
  return m;
}

RealMatrix RealMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return {};
  RealMatrix m(static_cast<int>(rows.size()), static_cast<int>(rows[0].size()));
  for (int r = 0; r < m.rows; ++r) {
    if (static_cast<int>(rows[r].size()) != m.cols) {
      throw DimensionError("from_rows: ragged row " + std::to_string(r));
    }
    for (int c = 0; c < m.cols; ++c) m.at(r, c) = rows[r][c];
  }
  return m;
}

bool RealMatrix::all_finite() const {
  for (double v : data) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void RealMatrix::fill(double v) {
  for (double& x : data) x = v;
}

std::string RealMatrix::shape() const {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

RealMatrix matmul(const RealMatrix& a, const RealMatrix& b) {
  if (a.cols != b.rows) {
    throw DimensionError("matmul: inner dimensions disagree, a is " + a.shape() + ", b is " +
                         b.shape());
  }
  RealMatrix y(a.rows, b.cols);
  for (int i = 0; i < a.rows; ++i) {
    for (int k = 0; k < a.cols; ++k) {
      double av = a.at(i, k);
      if (av == 0.0) continue;
      const double* brow = b.data.data() + static_cast<size_t>(k) * b.cols;
      double* yrow = y.data.data() + static_cast<size_t>(i) * y.cols;
      for (int j = 0; j < b.cols; ++j) yrow[j] += av * brow[j];
    }
  }
  return y;
}

std::vector<double> matvec(const RealMatrix& w, std::span<const double> x) {
  if (w.cols != static_cast<int>(x.size())) {
    throw DimensionError("matvec: W is " + w.shape() + ", x has length " +
                         std::to_string(x.size()));
  }
  std::vector<double> y(static_cast<size_t>(w.rows), 0.0);
  for (int i = 0; i < w.rows; ++i) {
    const double* row = w.data.data() + static_cast<size_t>(i) * w.cols;
    double acc = 0.0;
    for (int j = 0; j < w.cols; ++j) acc += row[j] * x[j];
    y[i] = acc;
  }
  return y;
}

std::vector<double> matvec_transposed(const RealMatrix& w, std::span<const double> x) {
  if (w.rows != static_cast<int>(x.size())) {
    throw DimensionError("matvec_transposed: W is " + w.shape() + ", x has length " +
                         std::to_string(x.size()));
  }
  std::vector<double> y(static_cast<size_t>(w.cols), 0.0);
  for (int i = 0; i < w.rows; ++i) {
    const double* row = w.data.data() + static_cast<size_t>(i) * w.cols;
    double xi = x[i];
    if (xi == 0.0) continue;
    for (int j = 0; j < w.cols; ++j) y[j] += row[j] * xi;
  }
  return y;
}

void add_outer(RealMatrix& a, std::span<const double> u, std::span<const double> v) {
  if (a.rows != static_cast<int>(u.size()) || a.cols != static_cast<int>(v.size())) {
    throw DimensionError("add_outer: A is " + a.shape() + ", u has length " +
                         std::to_string(u.size()) + ", v has length " + std::to_string(v.size()));
  }
  for (int i = 0; i < a.rows; ++i) {
    double ui = u[i];
    if (ui == 0.0) continue;
    double* row = a.data.data() + static_cast<size_t>(i) * a.cols;
    for (int j = 0; j < a.cols; ++j) row[j] += ui * v[j];
  }
}

void add_scaled(std::span<double> y, std::span<const double> x, double s) {
  if (y.size() != x.size()) {
    throw DimensionError("add_scaled: lengths " + std::to_string(y.size()) + " vs " +
                         std::to_string(x.size()));
  }
  for (size_t i = 0; i < y.size(); ++i) y[i] += s * x[i];
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw DimensionError("dot: lengths " + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()));
  }
  double acc = 0.0;
  for (size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

std::vector<double> concat(std::span<const double> a, std::span<const double> b) {
  std::vector<double> y;
  y.reserve(a.size() + b.size());
  y.insert(y.end(), a.begin(), a.end());
  y.insert(y.end(), b.begin(), b.end());
  return y;
}

}  // namespace rebmkit
