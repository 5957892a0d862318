#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace oocdr {

using Index = Eigen::Index;

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using ColMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Labels = std::vector<std::int32_t>;

// Error taxonomy; the CLI maps each class to its own exit status.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class CapacityError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// A dense block of points (one per row) with optional integer labels.
/// `row_offset` is the index of the first row within the source file.
template <typename Scalar>
struct DataMatrix {
    RowMatrix<Scalar> data;
    std::optional<Labels> labels;
    std::uint64_t row_offset = 0;

    Index rows() const { return data.rows(); }
    Index dims() const { return data.cols(); }
};

using DataMatrixD = DataMatrix<double>;

}  // namespace oocdr
