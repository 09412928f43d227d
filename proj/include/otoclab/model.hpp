#pragma once

#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>

#include "otoclab/linalg.hpp"

namespace otoclab {

enum class Boundary { open, periodic };

// Anisotropic XY chain in a transverse field:
//   H = J sum_j [ (1+r)/2 X_j X_{j+1} + (1-r)/2 Y_j Y_{j+1} ] + J h sum_j Z_j
// Sites are numbered 1..n; site 1 maps to the most significant bit of the
// 2^n-dimensional computational basis index.
struct ModelParams {
    double J = 1.0;
    double r = 0.0;
    double h = 0.0;
    int n = 1;
    Boundary boundary = Boundary::open;

    void validate() const {
        if (n < 1) throw std::invalid_argument("ModelParams: n must be >= 1");
        if (!std::isfinite(J) || !std::isfinite(r) || !std::isfinite(h))
            throw std::invalid_argument("ModelParams: couplings must be finite");
    }
};

// Single-site Pauli embedded in the n-site chain (identity elsewhere).
inline Matrix pauli_at(int site, Pauli which, int n) {
    if (site < 1 || site > n)
        throw std::out_of_range("pauli_at: site out of range");
    Matrix op = Matrix::Identity(1, 1);
    for (int s = 1; s <= n; ++s)
        op = kron(op, s == site ? pauli_matrix(which) : pauli_matrix(Pauli::I));
    return op;
}

inline Matrix build_xy_hamiltonian(const ModelParams& p) {
    p.validate();
    const Eigen::Index dim = Eigen::Index(1) << p.n;
    Matrix ham = Matrix::Zero(dim, dim);
    const double xx = p.J * (1.0 + p.r) / 2.0;
    const double yy = p.J * (1.0 - p.r) / 2.0;
    const int bonds = p.boundary == Boundary::open ? p.n - 1 : p.n;
    for (int j = 1; j <= bonds; ++j) {
        int next = j == p.n ? 1 : j + 1;
        ham += xx * (pauli_at(j, Pauli::X, p.n) * pauli_at(next, Pauli::X, p.n));
        ham += yy * (pauli_at(j, Pauli::Y, p.n) * pauli_at(next, Pauli::Y, p.n));
    }
    for (int j = 1; j <= p.n; ++j)
        ham += (p.J * p.h) * pauli_at(j, Pauli::Z, p.n);
    return ham;
}

// Eigendecomposition of a Hermitian operator, reusable across many
// evolution times.
struct SpectralEvolution {
    Eigen::VectorXd energies;
    Matrix modes;

    explicit SpectralEvolution(const Matrix& ham) {
        if (hermiticity_error(ham) > 1e-12)
            throw std::invalid_argument("SpectralEvolution: operator is not Hermitian");
        Eigen::SelfAdjointEigenSolver<Matrix> solver(ham);
        if (solver.info() != Eigen::Success)
            throw std::runtime_error("SpectralEvolution: eigensolver failed");
        energies = solver.eigenvalues();
        modes = solver.eigenvectors();
    }

    // U(t) = exp(-i H t)
    Matrix at(double t) const {
        Vector phases(energies.size());
        for (Eigen::Index i = 0; i < energies.size(); ++i)
            phases(i) = std::exp(cxd(0.0, -energies(i) * t));
        return modes * phases.asDiagonal() * modes.adjoint();
    }
};

inline Matrix exact_evolution(const Matrix& ham, double t) {
    return SpectralEvolution(ham).at(t);
}

}  // namespace otoclab
