#pragma once

#include <stdexcept>
#include <vector>

#include "otoclab/brickwall.hpp"
#include "otoclab/linalg.hpp"
#include "otoclab/model.hpp"

namespace otoclab {

// Two-site step generator: the bond term plus half the field on each site, so
// one odd layer followed by one even layer covers every field once on the
// chain interior.
inline Matrix trotter_gate(const ModelParams& p, double dt) {
    const Matrix eye = pauli_matrix(Pauli::I);
    const Matrix bond =
        p.J * (1.0 + p.r) / 2.0 * kron(pauli_matrix(Pauli::X), pauli_matrix(Pauli::X)) +
        p.J * (1.0 - p.r) / 2.0 * kron(pauli_matrix(Pauli::Y), pauli_matrix(Pauli::Y)) +
        p.J * p.h / 2.0 *
            (kron(pauli_matrix(Pauli::Z), eye) + kron(eye, pauli_matrix(Pauli::Z)));
    return SpectralEvolution(bond).at(dt);
}

// First-order splitting of exp(-iHt) into the brick-wall shape: layers/2
// steps, each one odd plus one even layer of the same gate.
inline GateSequence trotter_compile(const ModelParams& p, double t, int layers) {
    p.validate();
    if (layers < 2 || layers % 2 != 0)
        throw std::invalid_argument("trotter_compile: layer count must be even and >= 2");
    const int steps = layers / 2;
    GateSequence seq;
    seq.n = p.n;
    seq.layers.assign(std::size_t(layers), trotter_gate(p, t / steps));
    seq.validate();
    return seq;
}

}  // namespace otoclab
