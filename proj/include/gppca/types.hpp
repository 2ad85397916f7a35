#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace gppca {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

/// Thrown when a factorization or optimizer fails for numerical reasons
/// (as opposed to malformed arguments, which raise std::invalid_argument).
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

/// Ordered list of n input locations, each p-dimensional. Stored row-wise.
struct InputGrid {
    Matrix points;  // n x p

    InputGrid() = default;
    explicit InputGrid(Matrix pts) : points(std::move(pts)) { validate(); }

    /// One-dimensional grid helper.
    static InputGrid from_vector(const Vector& x) {
        Matrix pts(x.size(), 1);
        pts.col(0) = x;
        return InputGrid(std::move(pts));
    }
    /// Regular grid x_i = 1..n.
    static InputGrid regular(int n) {
        Vector x = Vector::LinSpaced(n, 1.0, double(n));
        return InputGrid::from_vector(x);
    }

    int size() const { return int(points.rows()); }
    int dim() const { return int(points.cols()); }

    /// Coordinate-wise extent (max - min), used for range initialization.
    Vector extent() const {
        return points.colwise().maxCoeff() - points.colwise().minCoeff();
    }

    void validate() const {
        if (points.rows() < 1 || points.cols() < 1)
            throw std::invalid_argument("InputGrid: need at least one point with at least one coordinate");
        if (!points.allFinite())
            throw std::invalid_argument("InputGrid: non-finite input coordinate");
    }
};

/// k x n observation matrix over an input grid (column i observes grid point i).
struct OutputMatrix {
    Matrix values;  // k x n
    InputGrid grid;

    OutputMatrix() = default;
    OutputMatrix(Matrix vals, InputGrid g) : values(std::move(vals)), grid(std::move(g)) { validate(); }

    int k() const { return int(values.rows()); }
    int n() const { return int(values.cols()); }

    void validate() const {
        grid.validate();
        if (values.rows() < 1)
            throw std::invalid_argument("OutputMatrix: need at least one output row");
        if (values.cols() != grid.points.rows())
            throw std::invalid_argument("OutputMatrix: column count must equal grid size");
        if (!values.allFinite())
            throw std::invalid_argument("OutputMatrix: non-finite entry");
    }
};

}  // namespace gppca
