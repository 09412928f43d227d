#pragma once

#include <Eigen/Dense>

#include <complex>
#include <random>
#include <stdexcept>

namespace otoclab {

using cxd = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

inline Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

enum class Pauli { I, X, Y, Z };

inline Matrix pauli_matrix(Pauli p) {
    Matrix m(2, 2);
    switch (p) {
        case Pauli::I: m << 1, 0, 0, 1; break;
        case Pauli::X: m << 0, 1, 1, 0; break;
        case Pauli::Y: m << 0, cxd(0, -1), cxd(0, 1), 0; break;
        case Pauli::Z: m << 1, 0, 0, -1; break;
    }
    return m;
}

inline double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

inline double hermiticity_error(const Matrix& m) {
    return max_abs(m - m.adjoint().eval());
}

// ||U†U − I||_max
inline double unitarity_error(const Matrix& u) {
    Matrix d = u.adjoint() * u;
    d -= Matrix::Identity(u.rows(), u.cols());
    return max_abs(d);
}

inline bool is_unitary(const Matrix& u, double tol = 1e-10) {
    return u.rows() == u.cols() && unitarity_error(u) <= tol;
}

// Unitary factor of the QR decomposition with the phase convention that the
// triangular factor has a strictly positive real diagonal.  With this
// convention qf(U) == U for unitary U and qf is a retraction: qf(X + H)
// depends smoothly on H near 0.
inline Matrix qf(const Matrix& a) {
    Eigen::HouseholderQR<Matrix> qr(a);
    Matrix q = qr.householderQ() * Matrix::Identity(a.rows(), a.cols());
    Matrix r = q.adjoint() * a;
    for (Eigen::Index i = 0; i < a.cols(); ++i) {
        cxd d = r(i, i);
        double mag = std::abs(d);
        if (mag < 1e-300) throw std::runtime_error("qf: rank-deficient input");
        q.col(i) *= d / mag;
    }
    return q;
}

inline Matrix gaussian_matrix(Eigen::Index dim, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    Matrix m(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i)
        for (Eigen::Index j = 0; j < dim; ++j) m(i, j) = cxd(g(rng), g(rng));
    return m;
}

// Haar-distributed via QR of a Ginibre matrix.
inline Matrix random_unitary(Eigen::Index dim, std::mt19937_64& rng) {
    return qf(gaussian_matrix(dim, rng));
}

}  // namespace otoclab
