#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "otoclab/linalg.hpp"

namespace otoclab {

// Brick-wall circuit on an n-site chain.  Every layer shares one two-site
// gate: even-indexed layers (0, 2, ...) tile pairs (1,2),(3,4),...; odd ones
// tile (2,3),(4,5),....  Unpaired edge sites pass through untouched.
struct GateSequence {
    int n = 2;
    std::vector<Matrix> layers;  // one 4x4 unitary per layer, applied in order

    void validate() const {
        if (n < 2) throw std::invalid_argument("GateSequence: need at least two sites");
        for (const auto& gate : layers)
            if (gate.rows() != 4 || gate.cols() != 4)
                throw std::invalid_argument("GateSequence: gates must be 4x4");
    }
};

// Start sites of the gates in one layer; the gate at s acts on (s, s+1).
inline std::vector<int> layer_gate_sites(int n, int layer) {
    std::vector<int> sites;
    for (int s = layer % 2 == 0 ? 1 : 2; s + 1 <= n; s += 2) sites.push_back(s);
    return sites;
}

inline Matrix layer_matrix(int n, const Matrix& gate, int layer) {
    const auto sites = layer_gate_sites(n, layer);
    Matrix out = Matrix::Identity(1, 1);
    int next = 1;
    for (int s : sites) {
        while (next < s) { out = kron(out, Matrix::Identity(2, 2)); ++next; }
        out = kron(out, gate);
        next += 2;
    }
    while (next <= n) { out = kron(out, Matrix::Identity(2, 2)); ++next; }
    return out;
}

inline Matrix brickwall_expand(const GateSequence& seq) {
    seq.validate();
    const Eigen::Index dim = Eigen::Index(1) << seq.n;
    Matrix total = Matrix::Identity(dim, dim);
    for (std::size_t l = 0; l < seq.layers.size(); ++l)
        total = layer_matrix(seq.n, seq.layers[l], int(l)) * total;
    return total;
}

inline void check_target_dim(const GateSequence& seq, const Matrix& target) {
    const Eigen::Index dim = Eigen::Index(1) << seq.n;
    if (target.rows() != dim || target.cols() != dim)
        throw std::invalid_argument("target must be 2^n x 2^n for the chain size");
}

inline double compile_cost(const GateSequence& seq, const Matrix& target) {
    check_target_dim(seq, target);
    return (brickwall_expand(seq) - target).squaredNorm();
}

// Frobenius distance per basis state; 0 for an exact compile, sqrt(2) for
// orthogonal unitaries.
inline double normalized_error(const GateSequence& seq, const Matrix& target) {
    check_target_dim(seq, target);
    const double dim = std::ldexp(1.0, seq.n);
    return (brickwall_expand(seq) - target).norm() / std::sqrt(dim);
}

// Same distance minimized over a global phase of the target.
inline double phase_aligned_error(const GateSequence& seq, const Matrix& target) {
    check_target_dim(seq, target);
    const double dim = std::ldexp(1.0, seq.n);
    const double overlap = std::abs((target.adjoint() * brickwall_expand(seq)).trace());
    return std::sqrt(std::max(0.0, 2.0 * dim - 2.0 * overlap)) / std::sqrt(dim);
}

namespace detail {

// Sensitivity of tr[m * (left ⊗ G ⊗ right)] to the 4x4 factor G:
// entry (a,b) is sum over the outer indices of
// m[(ui,b,wi),(uj,a,wj)] left[uj,ui] right[wj,wi].
inline Matrix block_sensitivity(const Matrix& m, const Matrix& left,
                                const Matrix& right) {
    const Eigen::Index dl = left.rows(), dr = right.rows();
    Matrix t = Matrix::Zero(4, 4);
    for (Eigen::Index a = 0; a < 4; ++a)
        for (Eigen::Index b = 0; b < 4; ++b) {
            cxd acc = 0.0;
            for (Eigen::Index uj = 0; uj < dl; ++uj)
                for (Eigen::Index ui = 0; ui < dl; ++ui)
                    for (Eigen::Index wj = 0; wj < dr; ++wj)
                        for (Eigen::Index wi = 0; wi < dr; ++wi)
                            acc += m((ui * 4 + b) * dr + wi, (uj * 4 + a) * dr + wj) *
                                   left(uj, ui) * right(wj, wi);
            t(a, b) = acc;
        }
    return t;
}

}  // namespace detail

// Gradient of compile_cost with respect to each layer's shared gate, taken
// for the real inner product Re tr(A^dag B).  The shared gate appears in
// every block of its layer, so each block contributes one sensitivity term.
inline std::vector<Matrix> euclidean_gradient(const GateSequence& seq,
                                              const Matrix& target) {
    seq.validate();
    check_target_dim(seq, target);
    const int m = int(seq.layers.size());
    const Eigen::Index dim = Eigen::Index(1) << seq.n;

    std::vector<Matrix> mats(m);
    for (int l = 0; l < m; ++l) mats[l] = layer_matrix(seq.n, seq.layers[l], l);

    std::vector<Matrix> before(m), after(m);
    Matrix acc = Matrix::Identity(dim, dim);
    for (int l = 0; l < m; ++l) { before[l] = acc; acc = mats[l] * acc; }
    const Matrix defect = (acc - target).adjoint();
    acc = Matrix::Identity(dim, dim);
    for (int l = m - 1; l >= 0; --l) { after[l] = acc; acc = acc * mats[l]; }

    std::vector<Matrix> grad(m);
    for (int l = 0; l < m; ++l) {
        const Matrix mxl = before[l] * defect * after[l];
        const auto sites = layer_gate_sites(seq.n, l);

        // Kron prefixes and suffixes of the layer around each gate copy.
        std::vector<Matrix> pre(sites.size()), post(sites.size());
        {
            Matrix run = Matrix::Identity(1, 1);
            int site = 1;
            std::size_t g = 0;
            while (site <= seq.n) {
                if (g < sites.size() && sites[g] == site) {
                    pre[g++] = run;
                    run = kron(run, seq.layers[l]);
                    site += 2;
                } else {
                    run = kron(run, Matrix::Identity(2, 2));
                    ++site;
                }
            }
        }
        {
            Matrix run = Matrix::Identity(1, 1);
            int site = seq.n;
            int g = int(sites.size()) - 1;
            while (site >= 1) {
                if (g >= 0 && sites[g] + 1 == site) {
                    post[g--] = run;
                    run = kron(seq.layers[l], run);
                    site -= 2;
                } else {
                    run = kron(Matrix::Identity(2, 2), run);
                    --site;
                }
            }
        }

        Matrix sens = Matrix::Zero(4, 4);
        for (std::size_t g = 0; g < sites.size(); ++g)
            sens += detail::block_sensitivity(mxl, pre[g], post[g]);
        grad[l] = 2.0 * sens.conjugate();
    }
    return grad;
}

}  // namespace otoclab
