#include "hml/mat.hpp"

#include <algorithm>
#include <string>

#include "hml/errors.hpp"

namespace hml {

namespace {

[[noreturn]] void shape_fail(const char* what, std::size_t ar, std::size_t ac, std::size_t br,
                             std::size_t bc) {
  throw ShapeError(std::string(what) + ": (" + std::to_string(ar) + "x" + std::to_string(ac) +
                   ") vs (" + std::to_string(br) + "x" + std::to_string(bc) + ")");
}

}  // namespace

void check_same_shape(const Mat& a, const Mat& b, const char* what) {
  if (!a.same_shape(b)) shape_fail(what, a.rows, a.cols, b.rows, b.cols);
}

Mat matmul(const Mat& a, const Mat& b) {
  if (a.cols != b.rows) shape_fail("matmul", a.rows, a.cols, b.rows, b.cols);
  Mat out(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* arow = a.row_ptr(i);
    double* orow = out.row_ptr(i);
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double aik = arow[k];
      if (aik == 0.0) continue;
      const double* brow = b.row_ptr(k);
      for (std::size_t j = 0; j < b.cols; ++j) orow[j] += aik * brow[j];
    }
  }
  return out;
}

Mat matmul_nt(const Mat& a, const Mat& b) {
  if (a.cols != b.cols) shape_fail("matmul_nt", a.rows, a.cols, b.rows, b.cols);
  Mat out(a.rows, b.rows);
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* arow = a.row_ptr(i);
    double* orow = out.row_ptr(i);
    for (std::size_t j = 0; j < b.rows; ++j) {
      const double* brow = b.row_ptr(j);
      double acc = 0.0;
      for (std::size_t k = 0; k < a.cols; ++k) acc += arow[k] * brow[k];
      orow[j] = acc;
    }
  }
  return out;
}

Mat matmul_tn(const Mat& a, const Mat& b) {
  if (a.rows != b.rows) shape_fail("matmul_tn", a.rows, a.cols, b.rows, b.cols);
  Mat out(a.cols, b.cols);
  for (std::size_t k = 0; k < a.rows; ++k) {
    const double* arow = a.row_ptr(k);
    const double* brow = b.row_ptr(k);
    for (std::size_t i = 0; i < a.cols; ++i) {
      const double aki = arow[i];
      if (aki == 0.0) continue;
      double* orow = out.row_ptr(i);
      for (std::size_t j = 0; j < b.cols; ++j) orow[j] += aki * brow[j];
    }
  }
  return out;
}

Mat take_rows(const Mat& m, const std::vector<std::size_t>& rows) {
  Mat out(rows.size(), m.cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= m.rows) throw ShapeError("take_rows: row " + std::to_string(rows[i]) +
                                            " out of range for " + std::to_string(m.rows));
    const double* src = m.row_ptr(rows[i]);
    std::copy(src, src + m.cols, out.row_ptr(i));
  }
  return out;
}

Mat hadamard(const Mat& a, const Mat& b) {
  check_same_shape(a, b, "hadamard");
  Mat out(a.rows, a.cols);
  for (std::size_t i = 0; i < a.v.size(); ++i) out.v[i] = a.v[i] * b.v[i];
  return out;
}

}  // namespace hml
