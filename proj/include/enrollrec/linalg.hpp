#pragma once

#include <Eigen/Dense>
#include <span>

namespace enrollrec {

// Row-major so that an item's vector is a contiguous row.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline std::span<const double> row_span(const RowMatrix& m, Eigen::Index row) {
    return {m.data() + row * m.cols(), static_cast<std::size_t>(m.cols())};
}

// Numerically stable softmax (max-subtraction), in place.
template <typename Derived>
void softmax_inplace(Eigen::MatrixBase<Derived>& z) {
    const double top = z.maxCoeff();
    z = (z.array() - top).exp().matrix();
    z /= z.sum();
}

}  // namespace enrollrec
