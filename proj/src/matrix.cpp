#include <rsm/error.hpp>
#include <rsm/matrix.hpp>

#include <algorithm>
#include <string>

namespace rsm {

void Matrix::append_row(std::span<const double> values) {
    if (values.size() != cols_)
        throw Error(ErrorCode::dimension, "row of width " + std::to_string(values.size()) +
                                              " appended to matrix of width " + std::to_string(cols_));
    data_.insert(data_.end(), values.begin(), values.end());
    ++rows_;
}

void Matrix::append_row(double fill) {
    data_.resize(data_.size() + cols_, fill);
    ++rows_;
}

void Matrix::append_columns(const Matrix &block) {
    if (block.rows_ != rows_)
        throw Error(ErrorCode::alignment, "cannot append " + std::to_string(block.rows_) +
                                              " rows to matrix with " + std::to_string(rows_) + " rows");
    if (block.cols_ == 0)
        return;
    const std::size_t width = cols_ + block.cols_;
    std::vector<double> merged(rows_ * width);
    for (std::size_t r = 0; r < rows_; ++r) {
        auto out = merged.begin() + static_cast<std::ptrdiff_t>(r * width);
        auto left = row(r);
        auto right = block.row(r);
        out = std::copy(left.begin(), left.end(), out);
        std::copy(right.begin(), right.end(), out);
    }
    data_ = std::move(merged);
    cols_ = width;
}

} // namespace rsm
