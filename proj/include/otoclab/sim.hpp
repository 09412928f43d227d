#pragma once

#include <cmath>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "otoclab/brickwall.hpp"
#include "otoclab/linalg.hpp"
#include "otoclab/util.hpp"

namespace otoclab {

// Dense statevector over q qubits.  Position 0 is the most significant bit of
// the basis index, matching the chain convention (site 1 = MSB).
struct StateVector {
    int qubits = 0;
    Vector amps;

    static StateVector zero_state(int q) {
        if (q < 1 || q > 24) throw std::invalid_argument("StateVector: bad qubit count");
        StateVector s;
        s.qubits = q;
        s.amps = Vector::Zero(Eigen::Index(1) << q);
        s.amps(0) = 1.0;
        return s;
    }

    double norm_error() const { return std::abs(amps.squaredNorm() - 1.0); }
};

// Wire layout of the doubled register, top to bottom
// [A_0, A_1, ..., A_n, B_n, ..., B_1, B_0].
struct DoubledLayout {
    int n = 2;

    explicit DoubledLayout(int sites) : n(sites) {
        if (n < 2) throw std::invalid_argument("DoubledLayout: need n >= 2");
        std::vector<int> seen(qubits(), 0);
        for (int k = 0; k <= n; ++k) {
            ++seen[a(k)];
            ++seen[b(k)];
        }
        for (int c : seen)
            if (c != 1) throw std::logic_error("DoubledLayout: label/position map not a bijection");
    }

    int qubits() const { return 2 * n + 2; }
    int a(int k) const { return check(k), k; }
    int b(int k) const { return check(k), 2 * n + 1 - k; }

    std::string label_of(int pos) const {
        if (pos < 0 || pos >= qubits()) throw std::out_of_range("DoubledLayout: position");
        return pos <= n ? "A_" + std::to_string(pos) : "B_" + std::to_string(2 * n + 1 - pos);
    }

  private:
    void check(int k) const {
        if (k < 0 || k > n) throw std::out_of_range("DoubledLayout: site index");
    }
};

namespace detail {

inline std::size_t position_bit(const StateVector& s, int pos) {
    if (pos < 0 || pos >= s.qubits) throw std::out_of_range("apply_gate: position");
    return std::size_t(1) << (s.qubits - 1 - pos);
}

inline void apply_gate1(StateVector& s, const Matrix& g, int q0) {
    const std::size_t bit = position_bit(s, q0);
    const std::size_t dim = std::size_t(s.amps.size());
    for (std::size_t i = 0; i < dim; ++i) {
        if (i & bit) continue;
        const cxd a0 = s.amps(i), a1 = s.amps(i | bit);
        s.amps(i) = g(0, 0) * a0 + g(0, 1) * a1;
        s.amps(i | bit) = g(1, 0) * a0 + g(1, 1) * a1;
    }
}

inline void apply_gate2(StateVector& s, const Matrix& g, int qa, int qb) {
    const std::size_t ba = position_bit(s, qa), bb = position_bit(s, qb);
    const std::size_t dim = std::size_t(s.amps.size());
    for (std::size_t i = 0; i < dim; ++i) {
        if (i & (ba | bb)) continue;
        const std::size_t idx[4] = {i, i | bb, i | ba, i | ba | bb};
        cxd in[4], out[4];
        for (int v = 0; v < 4; ++v) in[v] = s.amps(idx[v]);
        for (int u = 0; u < 4; ++u) {
            out[u] = 0.0;
            for (int v = 0; v < 4; ++v) out[u] += g(u, v) * in[v];
        }
        for (int u = 0; u < 4; ++u) s.amps(idx[u]) = out[u];
    }
}

}  // namespace detail

// Applies a unitary to the listed positions; targets[0] is the most
// significant bit of the gate's own index space.
inline void apply_gate(StateVector& s, const Matrix& gate, const std::vector<int>& targets) {
    const int k = int(targets.size());
    if (gate.rows() != gate.cols() || gate.rows() != (Eigen::Index(1) << k))
        throw std::invalid_argument("apply_gate: gate dimension does not match target count");
    for (std::size_t i = 0; i < targets.size(); ++i)
        for (std::size_t l = i + 1; l < targets.size(); ++l)
            if (targets[i] == targets[l])
                throw std::invalid_argument("apply_gate: duplicate target");
    if (unitarity_error(gate) > 1e-8)
        throw std::invalid_argument("apply_gate: gate is not unitary");

    if (k == 1) return detail::apply_gate1(s, gate, targets[0]);
    if (k == 2) return detail::apply_gate2(s, gate, targets[0], targets[1]);

    std::size_t mask = 0;
    std::vector<std::size_t> bits(targets.size());
    for (std::size_t t = 0; t < targets.size(); ++t) {
        bits[t] = detail::position_bit(s, targets[t]);
        mask |= bits[t];
    }
    const std::size_t block = std::size_t(1) << k;
    std::vector<std::size_t> spread(block, 0);
    for (std::size_t v = 0; v < block; ++v)
        for (int t = 0; t < k; ++t)
            if (v & (std::size_t(1) << (k - 1 - t))) spread[v] |= bits[t];

    const std::size_t dim = std::size_t(s.amps.size());
    Vector in(block), out(block);
    for (std::size_t i = 0; i < dim; ++i) {
        if (i & mask) continue;
        for (std::size_t v = 0; v < block; ++v) in(v) = s.amps(i | spread[v]);
        out.noalias() = gate * in;
        for (std::size_t v = 0; v < block; ++v) s.amps(i | spread[v]) = out(v);
    }
}

inline Matrix hadamard_gate() {
    Matrix h(2, 2);
    const double s = 1.0 / std::sqrt(2.0);
    h << s, s, s, -s;
    return h;
}

inline Matrix cnot_gate() {
    Matrix c = Matrix::Zero(4, 4);
    c(0, 0) = c(1, 1) = c(2, 3) = c(3, 2) = 1.0;
    return c;
}

// Bell pairs per the circuit's left half: H plus CNOT on (A_0,A_1), (B_1,B_0)
// and (A_k,B_k) for k = 2..n.
inline StateVector prepare_yky_input(int n) {
    const DoubledLayout lay(n);
    StateVector s = StateVector::zero_state(lay.qubits());
    const Matrix h = hadamard_gate(), cx = cnot_gate();
    apply_gate(s, h, {lay.a(0)});
    apply_gate(s, cx, {lay.a(0), lay.a(1)});
    apply_gate(s, h, {lay.b(1)});
    apply_gate(s, cx, {lay.b(1), lay.b(0)});
    for (int k = 2; k <= n; ++k) {
        apply_gate(s, h, {lay.a(k)});
        apply_gate(s, cx, {lay.a(k), lay.b(k)});
    }
    return s;
}

// U on the A physics register and, when conjugate_copy, U* on the B register
// (site k of the conjugate copy lands on wire B_k).
inline void apply_unitary_pair(StateVector& s, const Matrix& u, int n,
                               bool conjugate_copy = true) {
    const DoubledLayout lay(n);
    if (s.qubits != lay.qubits())
        throw std::invalid_argument("apply_unitary_pair: register size mismatch");
    if (u.rows() != (Eigen::Index(1) << n) || u.cols() != u.rows())
        throw std::invalid_argument("apply_unitary_pair: operator dimension mismatch");
    std::vector<int> apos(n), bpos(n);
    for (int k = 1; k <= n; ++k) {
        apos[k - 1] = lay.a(k);
        bpos[k - 1] = lay.b(k);
    }
    apply_gate(s, u, apos);
    if (conjugate_copy) apply_gate(s, u.conjugate(), bpos);
}

// Gate-by-gate counterpart of apply_unitary_pair; site_pos maps chain site k
// to qubit position site_pos[k-1].
inline void apply_sequence(StateVector& s, const GateSequence& seq,
                           const std::vector<int>& site_pos, bool conjugate = false) {
    seq.validate();
    if (int(site_pos.size()) != seq.n)
        throw std::invalid_argument("apply_sequence: site map size mismatch");
    for (std::size_t l = 0; l < seq.layers.size(); ++l) {
        const Matrix gate = conjugate ? seq.layers[l].conjugate() : seq.layers[l];
        for (int site : layer_gate_sites(seq.n, int(l)))
            apply_gate(s, gate, {site_pos[site - 1], site_pos[site]});
    }
}

struct NoiseSpec {
    double p2 = 0.0;      // two-qubit depolarizing probability per gate
    double p_read = 0.0;  // readout bit-flip probability per measured bit

    void validate() const {
        if (!(p2 >= 0.0 && p2 <= 1.0 && p_read >= 0.0 && p_read <= 1.0))
            throw std::invalid_argument("NoiseSpec: probabilities must lie in [0, 1]");
    }
};

// One trajectory of the depolarizing unraveling: after every two-qubit gate,
// with probability p2 a uniformly random non-identity two-qubit Pauli hits
// the gate's targets.  Averaging over rng draws reproduces the channel.
inline void apply_noisy_sequence(StateVector& s, const GateSequence& seq,
                                 const std::vector<int>& site_pos, const NoiseSpec& noise,
                                 std::mt19937_64& rng, bool conjugate = false) {
    seq.validate();
    noise.validate();
    if (int(site_pos.size()) != seq.n)
        throw std::invalid_argument("apply_noisy_sequence: site map size mismatch");
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::uniform_int_distribution<int> pick(1, 15);
    for (std::size_t l = 0; l < seq.layers.size(); ++l) {
        const Matrix gate = conjugate ? seq.layers[l].conjugate() : seq.layers[l];
        for (int site : layer_gate_sites(seq.n, int(l))) {
            const int qa = site_pos[site - 1], qb = site_pos[site];
            apply_gate(s, gate, {qa, qb});
            if (noise.p2 > 0.0 && coin(rng) < noise.p2) {
                const int idx = pick(rng);
                const Matrix pauli = kron(pauli_matrix(Pauli(idx / 4)),
                                          pauli_matrix(Pauli(idx % 4)));
                apply_gate(s, pauli, {qa, qb});
            }
        }
    }
}

// Probability of the |00>+|11> Bell outcome on positions (qa, qb).
inline double bell_projection_prob(const StateVector& s, int qa, int qb) {
    if (qa == qb) throw std::invalid_argument("bell_projection_prob: equal positions");
    const std::size_t ba = detail::position_bit(s, qa), bb = detail::position_bit(s, qb);
    const std::size_t dim = std::size_t(s.amps.size());
    double p = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
        if (i & (ba | bb)) continue;
        p += std::norm((s.amps(i) + s.amps(i | ba | bb)) / std::sqrt(2.0));
    }
    return p;
}

// Projects onto that Bell outcome and renormalizes; returns the outcome
// probability with the post-measurement state.
inline std::pair<double, StateVector> bell_project(const StateVector& s, int qa, int qb) {
    if (qa == qb) throw std::invalid_argument("bell_project: equal positions");
    const std::size_t ba = detail::position_bit(s, qa), bb = detail::position_bit(s, qb);
    const std::size_t dim = std::size_t(s.amps.size());
    StateVector post = s;
    double p = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
        if (i & (ba | bb)) continue;
        const cxd c = (s.amps(i) + s.amps(i | ba | bb)) / std::sqrt(2.0);
        p += std::norm(c);
        post.amps(i) = c / std::sqrt(2.0);
        post.amps(i | ba | bb) = c / std::sqrt(2.0);
        post.amps(i | ba) = 0.0;
        post.amps(i | bb) = 0.0;
    }
    if (p <= 1e-14)
        throw std::runtime_error("bell_project: conditioning probability degenerate");
    post.amps /= std::sqrt(p);
    return {p, post};
}

// Exact outcome distribution of a Bell-basis measurement of the listed pairs:
// rotate each pair by CNOT followed by H, then read the marginal over the
// measured positions.  Outcome bits are ordered (qa_1, qb_1, qa_2, qb_2, ...)
// most significant first; "00" on a pair is the |00>+|11> outcome.
inline std::vector<double> measurement_distribution(
    const StateVector& s, const std::vector<std::pair<int, int>>& pairs) {
    StateVector rot = s;
    const Matrix h = hadamard_gate(), cx = cnot_gate();
    for (const auto& [qa, qb] : pairs) {
        apply_gate(rot, cx, {qa, qb});
        apply_gate(rot, h, {qa});
    }
    const int bits = 2 * int(pairs.size());
    std::vector<std::size_t> bit_of(bits);
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        bit_of[2 * p] = detail::position_bit(rot, pairs[p].first);
        bit_of[2 * p + 1] = detail::position_bit(rot, pairs[p].second);
    }
    std::vector<double> dist(std::size_t(1) << bits, 0.0);
    const std::size_t dim = std::size_t(rot.amps.size());
    for (std::size_t i = 0; i < dim; ++i) {
        std::size_t out = 0;
        for (int b = 0; b < bits; ++b)
            if (i & bit_of[b]) out |= std::size_t(1) << (bits - 1 - b);
        dist[out] += std::norm(rot.amps(i));
    }
    return dist;
}

// Pushes an outcome distribution through independent per-bit readout flips.
inline std::vector<double> apply_readout(std::vector<double> dist, int bits, double p_read) {
    if (p_read == 0.0) return dist;
    std::vector<double> next(dist.size());
    for (int b = 0; b < bits; ++b) {
        const std::size_t bit = std::size_t(1) << b;
        for (std::size_t x = 0; x < dist.size(); ++x)
            next[x] = (1.0 - p_read) * dist[x] + p_read * dist[x ^ bit];
        dist.swap(next);
    }
    return dist;
}

// Sampled Bell-basis measurement.  Keys are outcome bitstrings in the pair
// order of measurement_distribution.
inline std::map<std::string, long> sample_counts(const StateVector& s,
                                                 const std::vector<std::pair<int, int>>& pairs,
                                                 long shots, const NoiseSpec& noise,
                                                 std::uint64_t seed) {
    if (shots < 1) throw std::invalid_argument("sample_counts: shots must be >= 1");
    noise.validate();
    const int bits = 2 * int(pairs.size());
    const std::vector<double> dist =
        apply_readout(measurement_distribution(s, pairs), bits, noise.p_read);
    std::mt19937_64 rng(mix_seed(seed));
    std::discrete_distribution<std::size_t> draw(dist.begin(), dist.end());
    std::map<std::string, long> counts;
    for (long shot = 0; shot < shots; ++shot) {
        const std::size_t out = draw(rng);
        std::string key(bits, '0');
        for (int b = 0; b < bits; ++b)
            if (out & (std::size_t(1) << (bits - 1 - b))) key[b] = '1';
        ++counts[key];
    }
    return counts;
}

}  // namespace otoclab
