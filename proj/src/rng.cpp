#include "gppca/rng.hpp"

#include <Eigen/QR>
#include <stdexcept>

namespace gppca {

Matrix sample_uniform_stiefel(int k, int d, Rng& rng) {
    if (d > k || d < 1) throw std::invalid_argument("sample_uniform_stiefel: need 1 <= d <= k");
    const Matrix G = rng.normal_matrix(k, d);
    Eigen::HouseholderQR<Matrix> qr(G);
    Matrix Q = qr.householderQ() * Matrix::Identity(k, d);
    const Matrix R = qr.matrixQR().topRows(d).triangularView<Eigen::Upper>();
    for (int j = 0; j < d; ++j)
        if (R(j, j) < 0.0) Q.col(j) = -Q.col(j);
    return Q;
}

}  // namespace gppca
