#ifndef HML_MAT_HPP
#define HML_MAT_HPP

#include <cstddef>
#include <vector>

namespace hml {

/// Dense row-major matrix of doubles. Element storage is contiguous so the
/// data() pointer can be handed to serialization code directly.
struct Mat {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> v;

  Mat() = default;
  Mat(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), v(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return v[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return v[r * cols + c]; }

  double* row_ptr(std::size_t r) { return v.data() + r * cols; }
  const double* row_ptr(std::size_t r) const { return v.data() + r * cols; }

  std::size_t size() const { return v.size(); }
  bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }
};

/// out = a * b. Shapes (m,k) x (k,n) -> (m,n). Throws ShapeError on mismatch.
Mat matmul(const Mat& a, const Mat& b);

/// out = a * b^T. Shapes (m,k) x (n,k) -> (m,n).
Mat matmul_nt(const Mat& a, const Mat& b);

/// out = a^T * b. Shapes (m,k) x (m,n) -> (k,n).
Mat matmul_tn(const Mat& a, const Mat& b);

/// Elementwise product. Throws ShapeError on shape mismatch.
Mat hadamard(const Mat& a, const Mat& b);

/// Throws ShapeError unless a and b have identical shape.
void check_same_shape(const Mat& a, const Mat& b, const char* what);

/// New matrix from the given source rows, in order, repetitions allowed.
Mat take_rows(const Mat& m, const std::vector<std::size_t>& rows);

}  // namespace hml

#endif  // HML_MAT_HPP
