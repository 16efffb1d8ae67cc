// matrix.hpp -- dense row-major 64-bit matrices and the small linear algebra
// kernel the models are built on.
#pragma once

#include <span>
#include <string>
#include <vector>

namespace rebmkit {

struct RealMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;  // row-major, rows*cols entries

  RealMatrix() = default;
  RealMatrix(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0.0) {}

  static RealMatrix zeros(int r, int c) { return RealMatrix(r, c); }
  static RealMatrix identity(int n);
  static RealMatrix from_rows(const std::vector<std::vector<double>>& rows);

  double& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
  double at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }

  std::span<double> row(int r) {
    return {data.data() + static_cast<size_t>(r) * cols, static_cast<size_t>(cols)};
  }
  std::span<const double> row(int r) const {
    return {data.data() + static_cast<size_t>(r) * cols, static_cast<size_t>(cols)};
  }

  bool same_shape(const RealMatrix& o) const { return rows == o.rows && cols == o.cols; }
  bool all_finite() const;
  void fill(double v);
  std::string shape() const;  // "3x4"

  bool operator==(const RealMatrix& o) const {
    return rows == o.rows && cols == o.cols && data == o.data;
  }
};

RealMatrix matmul(const RealMatrix& a, const RealMatrix& b);

// W * x for a single vector
std::vector<double> matvec(const RealMatrix& w, std::span<const double> x);
// W^T * x
std::vector<double> matvec_transposed(const RealMatrix& w, std::span<const double> x);
// a += u v^T
void add_outer(RealMatrix& a, std::span<const double> u, std::span<const double> v);
// y += s * x
void add_scaled(std::span<double> y, std::span<const double> x, double s);
double dot(std::span<const double> a, std::span<const double> b);

std::vector<double> concat(std::span<const double> a, std::span<const double> b);

}  // namespace rebmkit
