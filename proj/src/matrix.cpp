#include "rfclust/matrix.hpp"

#include <algorithm>

#include "rfclust/common.hpp"

namespace rfclust {

std::vector<double> Matrix::column(std::size_t c) const {
  std::vector<double> out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
  return out;
}

Matrix Matrix::select_rows(std::span<const std::size_t> rows) const {
  Matrix out(rows.size(), cols_);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= rows_) throw ValidationError("select_rows: row index out of range");
    std::ranges::copy(row(rows[i]), out.row(i).begin());
  }
  return out;
}

Matrix Matrix::select_columns(std::span<const std::size_t> cols) const {
  for (std::size_t c : cols) {
    if (c >= cols_) throw ValidationError("select_columns: column index out of range");
  }
  Matrix out(rows_, cols.size());
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t j = 0; j < cols.size(); ++j) out(r, j) = (*this)(r, cols[j]);
  }
  return out;
}

Matrix Matrix::without_column(std::size_t c) const {
  std::vector<std::size_t> keep;
  keep.reserve(cols_);
  for (std::size_t j = 0; j < cols_; ++j) {
    if (j != c) keep.push_back(j);
  }
  return select_columns(keep);
}

}  // namespace rfclust
