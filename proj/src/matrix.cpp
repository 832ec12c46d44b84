#include "steatosis/matrix.hpp"

#include <algorithm>
#include <stdexcept>

namespace steatosis {

void Matrix::append_row(std::span<const double> values) {
    if (rows_ == 0 && cols_ == 0) cols_ = values.size();
    if (values.size() != cols_) throw std::invalid_argument("append_row: width mismatch");
    data_.insert(data_.end(), values.begin(), values.end());
    ++rows_;
}

Matrix Matrix::select_rows(std::span<const std::size_t> indices) const {
    Matrix out(indices.size(), cols_);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        auto src = row(indices[i]);
        std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return out;
}

Matrix Matrix::select_cols(std::size_t first, std::size_t count) const {
    if (first + count > cols_) throw std::invalid_argument("select_cols: out of range");
    Matrix out(rows_, count);
    for (std::size_t r = 0; r < rows_; ++r) {
        auto src = row(r).subspan(first, count);
        std::copy(src.begin(), src.end(), out.row(r).begin());
    }
    return out;
}

Matrix hconcat(const Matrix& left, const Matrix& right) {
    if (left.rows() != right.rows()) throw std::invalid_argument("hconcat: row mismatch");
    Matrix out(left.rows(), left.cols() + right.cols());
    for (std::size_t r = 0; r < left.rows(); ++r) {
        auto dst = out.row(r);
        std::copy(left.row(r).begin(), left.row(r).end(), dst.begin());
        std::copy(right.row(r).begin(), right.row(r).end(), dst.begin() + static_cast<std::ptrdiff_t>(left.cols()));
    }
    return out;
}

}  // namespace steatosis
