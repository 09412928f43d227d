#include <otoclab/rtr.hpp>
#include <otoclab/sim.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

using namespace otoclab;

namespace {

double marginal_zero(const StateVector& s, int position) {
  long bit = 1L << (s.qubits - 1 - position);
  double p = 0.0;
  for (long i = 0; i < s.amps.size(); ++i)
    if (!(i & bit)) p += std::norm(s.amps(i));
  return p;
}

StateVector random_state(int qubits, unsigned long long seed) {
  std::mt19937_64 rng(seed);
  auto s = StateVector::zero_state(qubits);
  std::vector<int> all(qubits);
  for (int q = 0; q < qubits; ++q) all[q] = q;
  apply_gate(s, random_unitary(1L << qubits, rng), all);
  return s;
}

}  // namespace

TEST_CASE("zero state and bounds", "[sim]") {
  auto s = StateVector::zero_state(3);
  REQUIRE(s.amps.size() == 8);
  CHECK(std::abs(s.amps(0) - cxd(1, 0)) < 1e-15);
  CHECK(s.norm_error() < 1e-15);
  CHECK_THROWS(StateVector::zero_state(0));
  CHECK_THROWS(StateVector::zero_state(25));
}

TEST_CASE("single qubit gates address positions most significant first", "[sim]") {
  auto s = StateVector::zero_state(3);
  apply_gate(s, pauli_matrix(Pauli::X), {0});
  CHECK(std::abs(s.amps(4) - cxd(1, 0)) < 1e-14);
  apply_gate(s, pauli_matrix(Pauli::X), {2});
  CHECK(std::abs(s.amps(5) - cxd(1, 0)) < 1e-14);
}

TEST_CASE("gate application validates inputs", "[sim]") {
  auto s = StateVector::zero_state(3);
  Matrix notu = Matrix::Identity(4, 4);
  notu(0, 0) = 1.5;
  CHECK_THROWS(apply_gate(s, notu, {0, 1}));
  CHECK_THROWS(apply_gate(s, cnot_gate(), {1, 1}));
  CHECK_THROWS(apply_gate(s, cnot_gate(), {0}));
  CHECK_THROWS(apply_gate(s, cnot_gate(), {0, 3}));
}

TEST_CASE("cnot is an involution and hadamard squares to identity", "[sim]") {
  auto s = random_state(3, 17);
  auto t = s;
  apply_gate(t, cnot_gate(), {2, 0});
  apply_gate(t, cnot_gate(), {2, 0});
  CHECK(max_abs(t.amps - s.amps) < 1e-12);
  apply_gate(t, hadamard_gate(), {1});
  apply_gate(t, hadamard_gate(), {1});
  CHECK(max_abs(t.amps - s.amps) < 1e-12);
  CHECK(t.norm_error() < 1e-12);
}

TEST_CASE("dense multi qubit application agrees with composed two qubit gates", "[sim]") {
  std::mt19937_64 rng(31);
  Matrix g1 = random_unitary(4, rng), g2 = random_unitary(4, rng);
  auto a = random_state(4, 5);
  auto b = a;
  apply_gate(a, g1, {1, 2});
  apply_gate(a, g2, {3, 0});
  Matrix big = Matrix::Identity(16, 16);
  // Build the same pair of gates as one dense operator on positions 0..3.
  {
    auto embed = [&](const Matrix& g, int qa, int qb) {
      Matrix full = Matrix::Zero(16, 16);
      for (long col = 0; col < 16; ++col) {
        long abit = (col >> (3 - qa)) & 1, bbit = (col >> (3 - qb)) & 1;
        long colrest = col & ~((1L << (3 - qa)) | (1L << (3 - qb)));
        for (long ra = 0; ra < 2; ++ra)
          for (long rb = 0; rb < 2; ++rb) {
            long row = colrest | (ra << (3 - qa)) | (rb << (3 - qb));
            full(row, col) = g(ra * 2 + rb, abit * 2 + bbit);
          }
      }
      return full;
    };
    big = embed(g2, 3, 0) * embed(g1, 1, 2);
  }
  apply_gate(b, big, {0, 1, 2, 3});
  CHECK(max_abs(a.amps - b.amps) < 1e-11);
}

TEST_CASE("doubled layout positions mirror the two registers", "[sim]") {
  DoubledLayout lay(3);
  CHECK(lay.qubits() == 8);
  CHECK(lay.a(0) == 0);
  CHECK(lay.a(3) == 3);
  CHECK(lay.b(3) == 4);
  CHECK(lay.b(0) == 7);
  CHECK_THROWS(DoubledLayout(1));
}

TEST_CASE("protocol input carries Bell pairs on every declared pair", "[sim]") {
  for (int n : {2, 4}) {
    DoubledLayout lay(n);
    auto s = prepare_yky_input(n);
    REQUIRE(s.qubits == 2 * n + 2);
    CHECK(s.norm_error() < 1e-12);
    CHECK(bell_projection_prob(s, lay.a(0), lay.a(1)) == Catch::Approx(1.0).margin(1e-12));
    CHECK(bell_projection_prob(s, lay.b(0), lay.b(1)) == Catch::Approx(1.0).margin(1e-12));
    for (int k = 2; k <= n; ++k)
      CHECK(bell_projection_prob(s, lay.a(k), lay.b(k)) == Catch::Approx(1.0).margin(1e-12));
    for (int q = 0; q < s.qubits; ++q)
      CHECK(marginal_zero(s, q) == Catch::Approx(0.5).margin(1e-12));
  }
  CHECK_THROWS(prepare_yky_input(1));
}

TEST_CASE("mirrored evolution leaves cross register Bell pairs alone", "[sim]") {
  std::mt19937_64 rng(41);
  int n = 2;
  DoubledLayout lay(n);
  auto s = prepare_yky_input(n);
  Matrix u = kron(Matrix::Identity(2, 2), random_unitary(2, rng));
  apply_unitary_pair(s, u, n);
  CHECK(bell_projection_prob(s, lay.a(0), lay.a(1)) == Catch::Approx(1.0).margin(1e-10));
  CHECK(bell_projection_prob(s, lay.a(2), lay.b(2)) == Catch::Approx(1.0).margin(1e-10));
  CHECK(s.norm_error() < 1e-10);
}

TEST_CASE("bell projection distinguishes the four reference states", "[sim]") {
  auto pair00 = StateVector::zero_state(2);
  CHECK(bell_projection_prob(pair00, 0, 1) == Catch::Approx(0.5).margin(1e-12));

  auto phi = StateVector::zero_state(2);
  apply_gate(phi, hadamard_gate(), {0});
  apply_gate(phi, cnot_gate(), {0, 1});
  CHECK(bell_projection_prob(phi, 0, 1) == Catch::Approx(1.0).margin(1e-12));

  auto odd = StateVector::zero_state(2);
  apply_gate(odd, pauli_matrix(Pauli::X), {1});
  CHECK(bell_projection_prob(odd, 0, 1) < 1e-14);
  CHECK_THROWS(bell_project(odd, 0, 1));

  auto [p, conditioned] = bell_project(phi, 0, 1);
  CHECK(p == Catch::Approx(1.0).margin(1e-12));
  CHECK(conditioned.norm_error() < 1e-12);
}

TEST_CASE("gate by gate circuit application matches the dense expansion", "[sim]") {
  int n = 3;
  DoubledLayout lay(n);
  auto seq = random_brickwall(n, 4, 1.0, 314);
  Matrix dense = brickwall_expand(seq);

  auto a = prepare_yky_input(n);
  auto b = a;
  std::vector<int> apos, bpos;
  for (int k = 1; k <= n; ++k) {
    apos.push_back(lay.a(k));
    bpos.push_back(lay.b(k));
  }
  apply_sequence(a, seq, apos);
  apply_sequence(a, seq, bpos, true);
  apply_gate(b, dense, apos);
  apply_gate(b, dense.conjugate(), bpos);
  CHECK(max_abs(a.amps - b.amps) < 1e-9);

  auto c = prepare_yky_input(n);
  apply_unitary_pair(c, dense, n);
  CHECK(max_abs(c.amps - b.amps) < 1e-9);
}

TEST_CASE("measurement distribution matches sampled frequencies", "[sim]") {
  auto s = random_state(4, 23);
  std::vector<std::pair<int, int>> pairs{{0, 1}, {2, 3}};
  auto dist = measurement_distribution(s, pairs);
  REQUIRE(dist.size() == 16);
  double total = 0.0;
  for (double p : dist) total += p;
  CHECK(total == Catch::Approx(1.0).margin(1e-10));

  const long shots = 100000;
  auto counts = sample_counts(s, pairs, shots, NoiseSpec{}, 7);
  long seen = 0;
  for (auto& [key, c] : counts) {
    REQUIRE(key.size() == 4);
    seen += c;
    long idx = std::stol(key, nullptr, 2);
    double p = dist[idx];
    double sigma = std::sqrt(std::max(p * (1 - p), 1e-12) / shots);
    CHECK(std::abs(static_cast<double>(c) / shots - p) <= 5 * sigma + 1e-9);
  }
  CHECK(seen == shots);
}

TEST_CASE("readout error channel flips bits independently", "[sim]") {
  std::vector<double> point(16, 0.0);
  point[0b0110] = 1.0;
  auto same = apply_readout(point, 4, 0.0);
  CHECK(same[0b0110] == Catch::Approx(1.0).margin(1e-12));
  auto flat = apply_readout(point, 4, 0.5);
  for (double p : flat) CHECK(p == Catch::Approx(1.0 / 16).margin(1e-12));
  auto one = apply_readout(point, 4, 1.0);
  CHECK(one[0b1001] == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("half readout noise drives sampled marginals to a coin flip", "[sim]") {
  auto phi = StateVector::zero_state(2);
  apply_gate(phi, hadamard_gate(), {0});
  apply_gate(phi, cnot_gate(), {0, 1});
  NoiseSpec noise;
  noise.p_read = 0.5;
  const long shots = 100000;
  auto counts = sample_counts(phi, {{0, 1}}, shots, noise, 99);
  long first_zero = 0;
  for (auto& [key, c] : counts)
    if (key[0] == '0') first_zero += c;
  double sigma = std::sqrt(0.25 / shots);
  CHECK(std::abs(static_cast<double>(first_zero) / shots - 0.5) <= 5 * sigma);
}

TEST_CASE("noiseless trajectories reproduce the deterministic circuit", "[sim]") {
  int n = 3;
  DoubledLayout lay(n);
  auto seq = random_brickwall(n, 4, 1.0, 11);
  std::vector<int> apos;
  for (int k = 1; k <= n; ++k) apos.push_back(lay.a(k));
  auto a = prepare_yky_input(n);
  auto b = a;
  apply_sequence(a, seq, apos);
  std::mt19937_64 rng(1);
  apply_noisy_sequence(b, seq, apos, NoiseSpec{}, rng);
  CHECK(max_abs(a.amps - b.amps) == 0.0);
}

TEST_CASE("maximal gate noise scrambles a pair to the depolarized fixed point", "[sim]") {
  // Two noisy gates at p2 = 1 leave the averaged two qubit state with purity
  // (56^2 * 4 + 2 * 56 + 1) / 225^2, indistinguishable from 1/4 at this
  // sample size.
  GateSequence seq;
  seq.n = 2;
  seq.layers = {Matrix::Identity(4, 4), Matrix::Identity(4, 4), Matrix::Identity(4, 4)};

  std::mt19937_64 prep(5);
  Matrix start = random_unitary(4, prep);
  NoiseSpec noise;
  noise.p2 = 1.0;

  const int trajectories = 10000;
  Matrix rho = Matrix::Zero(4, 4);
  for (int i = 0; i < trajectories; ++i) {
    auto s = StateVector::zero_state(2);
    apply_gate(s, start, {0, 1});
    std::mt19937_64 rng(mix_seed(2222, i));
    apply_noisy_sequence(s, seq, {0, 1}, noise, rng);
    rho += s.amps * s.amps.adjoint();
  }
  rho /= static_cast<double>(trajectories);
  double purity = (rho * rho).trace().real();
  CHECK(purity == Catch::Approx(12657.0 / 50625.0).margin(0.01));
}
