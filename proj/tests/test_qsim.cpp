#include <cmath>
#include <complex>

#include "doctest.h"
#include "oracles.hpp"
#include "qebm/qsim.hpp"

using namespace qebm;

namespace {

const Matrix2c kI = Matrix2c::Identity();
const Matrix2c kX = (Matrix2c() << 0, 1, 1, 0).finished();
const Matrix2c kY = (Matrix2c() << Complex(0, 0), Complex(0, -1), Complex(0, 1), Complex(0, 0)).finished();
const Matrix2c kZ = (Matrix2c() << 1, 0, 0, -1).finished();

}  // namespace

TEST_SUITE("qsim") {
  TEST_CASE("tim couples z on edges and x per site") {
    MatrixXc h = build_hamiltonian(tim_chain(2, -1.0, 0.0));
    // H = -Z_0 Z_1, qubit 0 least significant
    VectorXd diag(4);
    diag << -1, 1, 1, -1;
    CHECK((h - MatrixXc(diag.cast<Complex>().asDiagonal())).norm() == doctest::Approx(0.0).epsilon(1e-14));

    HamiltonianSpec single;
    single.n = 1;
    single.kind = HamiltonianKind::tim;
    single.g = 2.0;
    MatrixXc hx = build_hamiltonian(single);
    CHECK((hx - MatrixXc(2.0 * kX)).norm() == doctest::Approx(0.0).epsilon(1e-14));

    MatrixXc h3 = build_hamiltonian(tim_chain(3, -1.0, 0.7));
    MatrixXc want = -oracle::kron_sites({kZ, kZ, kI}) - oracle::kron_sites({kI, kZ, kZ}) +
                    0.7 * (oracle::kron_sites({kX, kI, kI}) + oracle::kron_sites({kI, kX, kI}) +
                           oracle::kron_sites({kI, kI, kX}));
    CHECK((h3 - want).norm() < 1e-13);
  }

  TEST_CASE("heisenberg two-site spectrum") {
    HamiltonianSpec spec;
    spec.n = 2;
    spec.kind = HamiltonianKind::heisenberg;
    spec.edges = {{0, 1, 1.0}};
    MatrixXc h = build_hamiltonian(spec);
    Eigen::SelfAdjointEigenSolver<MatrixXc> es(h);
    VectorXd lam = es.eigenvalues();
    CHECK(lam(0) == doctest::Approx(-3.0).epsilon(1e-12));
    CHECK(lam(1) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(lam(2) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(lam(3) == doctest::Approx(1.0).epsilon(1e-12));
  }

  TEST_CASE("pauli string character i acts on qubit i") {
    HamiltonianSpec spec;
    spec.n = 2;
    spec.kind = HamiltonianKind::custom_pauli_sum;
    spec.terms = {{"XZ", 1.0}};
    MatrixXc h = build_hamiltonian(spec);
    // X on qubit 0, Z on qubit 1; qubit 1 owns the slow bit
    MatrixXc want = oracle::kron_sites({kX, kZ});
    CHECK((h - want).norm() < 1e-14);

    spec.terms = {{"YI", 0.5}, {"IY", -2.0}};
    h = build_hamiltonian(spec);
    want = 0.5 * oracle::kron_sites({kY, kI}) - 2.0 * oracle::kron_sites({kI, kY});
    CHECK((h - want).norm() < 1e-14);
  }

  TEST_CASE("hamiltonian input validation") {
    HamiltonianSpec spec;
    spec.n = 2;
    spec.kind = HamiltonianKind::custom_pauli_sum;
    spec.terms = {{"XQ", 1.0}};
    CHECK_THROWS_AS(build_hamiltonian(spec), Error);
    spec.terms = {{"X", 1.0}};  // wrong length
    CHECK_THROWS_AS(build_hamiltonian(spec), Error);
    spec.terms = {};
    CHECK_THROWS_AS(build_hamiltonian(spec), Error);

    HamiltonianSpec bad = tim_chain(3, -1.0, 1.0);
    bad.edges[0].j = 7;
    CHECK_THROWS_AS(build_hamiltonian(bad), Error);
    bad = tim_chain(3, -1.0, 1.0);
    bad.edges[0].j = bad.edges[0].i;
    CHECK_THROWS_AS(build_hamiltonian(bad), Error);
  }

  TEST_CASE("thermal state of a zz bond") {
    MatrixXc h = build_hamiltonian(tim_chain(2, -1.0, 0.0));
    DensityMatrix dm = thermal_state(h, 1.0);
    validate_density(dm);
    // Z = 2e + 2/e, aligned configurations carry weight e each
    double p00 = 1.0 / (2.0 + 2.0 * std::exp(-2.0));
    CHECK(dm.rho(0, 0).real() == doctest::Approx(p00).epsilon(1e-12));
    CHECK(dm.rho(3, 3).real() == doctest::Approx(p00).epsilon(1e-12));
    CHECK(std::abs(dm.rho(0, 3)) < 1e-14);
    CHECK(pauli_expectation_exact(dm, "ZZ") == doctest::Approx(std::tanh(1.0)).epsilon(1e-12));

    // beta = 0 is maximally mixed regardless of H
    DensityMatrix hot = thermal_state(h, 0.0);
    CHECK((hot.rho - MatrixXc::Identity(4, 4) * 0.25).norm() < 1e-13);

    // large beta survives the spectral shift and lands on the ground manifold
    DensityMatrix cold = thermal_state(h, 5000.0);
    CHECK(cold.rho(0, 0).real() == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(cold.rho(3, 3).real() == doctest::Approx(0.5).epsilon(1e-9));

    CHECK_THROWS_AS(thermal_state(h, -1.0), Error);
  }

  TEST_CASE("ground state requires a gap") {
    MatrixXc h = build_hamiltonian(tim_chain(2, -1.0, 0.0));
    try {
      ground_state(h);
      FAIL("degenerate hamiltonian was accepted");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::config);
      CHECK(std::string(e.what()).find("degenerate") != std::string::npos);
    }

    MatrixXc hg = build_hamiltonian(tim_chain(2, -1.0, 0.5));
    PureState gs = ground_state(hg);
    Eigen::SelfAdjointEigenSolver<MatrixXc> es(hg);
    CHECK(std::abs(std::abs(gs.amps.dot(es.eigenvectors().col(0))) - 1.0) < 1e-10);
    // phase convention: dominant amplitude real positive
    Eigen::Index imax = 0;
    gs.amps.cwiseAbs().maxCoeff(&imax);
    CHECK(gs.amps(imax).real() > 0.0);
    CHECK(std::abs(gs.amps(imax).imag()) < 1e-12);
  }

  TEST_CASE("ghz expectations") {
    PureState ghz = ghz_plus(3);
    CHECK(ghz.amps(0).real() == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-14));
    CHECK(ghz.amps(7).real() == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-14));
    CHECK(pauli_expectation_exact(ghz, "XXX") == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(pauli_expectation_exact(ghz, "ZZZ") == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(pauli_expectation_exact(ghz, "ZZI") == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(pauli_expectation_exact(ghz, "ZII") == doctest::Approx(0.0).epsilon(1e-12));

    PureState odd = ghz_minus(3);
    CHECK(pauli_expectation_exact(odd, "XXX") == doctest::Approx(-1.0).epsilon(1e-12));

    double p = 0.3;
    DensityMatrix mix = ghz_mixture(2, p);
    validate_density(mix);
    CHECK(mix.rho(0, 3).real() == doctest::Approx((1.0 - 2.0 * p) / 2.0).epsilon(1e-12));
    CHECK(pauli_expectation_exact(mix, "XX") == doctest::Approx(1.0 - 2.0 * p).epsilon(1e-12));
    CHECK_THROWS_AS(ghz_mixture(2, 1.5), Error);
  }

  TEST_CASE("pauli expectation agrees with dense matrix algebra") {
    MatrixXc rho = oracle::random_density(8, 41);
    DensityMatrix dm{3, rho};
    MatrixXc op = oracle::kron_sites({kY, kI, kZ});
    double want = (op * rho).trace().real();
    CHECK(pauli_expectation_exact(dm, "YIZ") == doctest::Approx(want).epsilon(1e-12));

    VectorXc psi = oracle::random_pure(8, 42);
    PureState ps{3, psi};
    op = oracle::kron_sites({kX, kY, kI});
    want = (psi.adjoint() * op * psi)(0).real();
    CHECK(pauli_expectation_exact(ps, "XYI") == doctest::Approx(want).epsilon(1e-12));

    CHECK_THROWS_AS(pauli_expectation_exact(ps, "XY"), Error);
    CHECK_THROWS_AS(pauli_expectation_exact(ps, "XYQ"), Error);
  }

  TEST_CASE("validate density rejects bad inputs") {
    DensityMatrix dm{1, MatrixXc::Identity(2, 2)};
    CHECK_THROWS_AS(validate_density(dm), Error);  // trace 2
    dm.rho *= 0.5;
    CHECK_NOTHROW(validate_density(dm));
    dm.rho(0, 1) = Complex(0.2, 0.0);
    CHECK_THROWS_AS(validate_density(dm), Error);  // not Hermitian
    dm.rho(0, 1) = Complex(0.4, 0.0);
    dm.rho(1, 0) = Complex(0.4, 0.0);
    dm.rho(0, 0) = 0.9;
    dm.rho(1, 1) = 0.1;
    CHECK_THROWS_AS(validate_density(dm), Error);  // negative eigenvalue
  }
}
