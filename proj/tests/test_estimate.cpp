#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "qebm/estimate.hpp"

using namespace qebm;

namespace {

SampleSet draw(const QuantumState& state, const Povm& povm, std::uint64_t m, std::uint64_t seed) {
  ProbTable table = outcome_distribution(state, povm);
  return sample_outcomes(table, m, seed, "");
}

}  // namespace

TEST_SUITE("estimate") {
  TEST_CASE("trace distance oracles") {
    MatrixXc mixed = MatrixXc::Identity(2, 2) * 0.5;
    MatrixXc zero = MatrixXc::Zero(2, 2);
    zero(0, 0) = 1.0;
    MatrixXc one = MatrixXc::Zero(2, 2);
    one(1, 1) = 1.0;
    CHECK(trace_distance(mixed, zero) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(trace_distance(zero, one) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(trace_distance(zero, zero) == doctest::Approx(0.0).epsilon(1e-12));
    MatrixXc rho = oracle::random_density(4, 8);
    MatrixXc sig = oracle::random_density(4, 9);
    double t = trace_distance(rho, sig);
    CHECK(t > 0.0);
    CHECK(t <= 1.0 + 1e-12);

    MatrixXc skew = zero;
    skew(0, 1) = Complex(0.3, 0.0);
    CHECK_THROWS_AS(trace_distance(skew, zero), Error);
    CHECK_THROWS_AS(trace_distance(zero, MatrixXc::Identity(4, 4)), Error);
  }

  TEST_CASE("observable estimates agree with exact expectations") {
    MatrixXc h = build_hamiltonian(tim_chain(2, -1.0, 0.0));
    DensityMatrix dm = thermal_state(h, 1.0);
    Povm comp = build_povm("computational");
    DualSet cd = dual_operators(comp);
    SampleSet s = draw(dm, comp, 200000, 21);

    EstimateResult zz = estimate_observable(s, cd, "ZZ");
    CHECK(zz.n_used == 200000);
    CHECK(zz.stderr_ > 0.0);
    CHECK(std::abs(zz.mean - std::tanh(1.0)) < 5 * zz.stderr_);

    EstimateResult zi = estimate_observable(s, cd, "ZI");
    CHECK(std::abs(zi.mean) < 5 * zi.stderr_ + 1e-9);

    EstimateResult ii = estimate_observable(s, cd, "II");
    CHECK(ii.mean == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(ii.stderr_ == 0.0);

    // the tetrahedral frame reaches every Pauli
    Povm tet = build_povm("tetrahedral");
    DualSet td = dual_operators(tet);
    PureState ghz = ghz_plus(3);
    SampleSet st = draw(ghz, tet, 200000, 22);
    EstimateResult xxx = estimate_observable(st, td, "XXX");
    CHECK(std::abs(xxx.mean - 1.0) < 5 * xxx.stderr_);
    EstimateResult zzi = estimate_observable(st, td, "ZZI");
    CHECK(std::abs(zzi.mean - 1.0) < 5 * zzi.stderr_);
    EstimateResult yyx = estimate_observable(st, td, "YYX");
    CHECK(std::abs(yyx.mean + 1.0) < 5 * yyx.stderr_);
  }

  TEST_CASE("span violations and bad strings are refused") {
    MatrixXc h = build_hamiltonian(tim_chain(2, -1.0, 0.0));
    DensityMatrix dm = thermal_state(h, 1.0);
    Povm comp = build_povm("computational");
    DualSet cd = dual_operators(comp);
    SampleSet s = draw(dm, comp, 100, 1);

    try {
      estimate_observable(s, cd, "XI");
      FAIL("X is not in the computational span");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::span);
      CHECK(std::string(e.what()).find("site 0") != std::string::npos);
    }
    CHECK_THROWS_AS(estimate_observable(s, cd, "Z"), Error);
    CHECK_THROWS_AS(estimate_observable(s, cd, "ZQ"), Error);
  }

  TEST_CASE("ghz fidelity from tetrahedral samples") {
    PureState ghz = ghz_plus(3);
    Povm tet = build_povm("tetrahedral");
    DualSet td = dual_operators(tet);
    SampleSet s = draw(ghz, tet, 200000, 31);

    EstimateResult plus = estimate_fidelity(s, td, ghz_plus_sparse(3));
    CHECK(std::abs(plus.mean - 1.0) < std::max(5 * plus.stderr_, 0.02));
    EstimateResult minus = estimate_fidelity(s, td, ghz_minus_sparse(3));
    CHECK(std::abs(minus.mean) < std::max(5 * minus.stderr_, 0.02));

    DensityMatrix mix = ghz_mixture(2, 0.3);
    SampleSet sm = draw(mix, tet, 300000, 32);
    EstimateResult f = estimate_fidelity(sm, dual_operators(tet), ghz_plus_sparse(2));
    CHECK(std::abs(f.mean - 0.7) < std::max(5 * f.stderr_, 0.02));
  }

  TEST_CASE("fidelity validates its target and frame") {
    Povm tet = build_povm("tetrahedral");
    DualSet td = dual_operators(tet);
    PureState ghz = ghz_plus(2);
    SampleSet s = draw(ghz, tet, 100, 2);

    SparseState bad_norm{2, {{0, Complex(1.0, 0)}, {3, Complex(1.0, 0)}}};
    CHECK_THROWS_AS(estimate_fidelity(s, td, bad_norm), Error);
    SparseState dup{2, {{0, Complex(std::sqrt(0.5), 0)}, {0, Complex(std::sqrt(0.5), 0)}}};
    CHECK_THROWS_AS(estimate_fidelity(s, td, dup), Error);
    SparseState range{2, {{9, Complex(1.0, 0)}}};
    CHECK_THROWS_AS(estimate_fidelity(s, td, range), Error);

    Povm comp = build_povm("computational");
    SampleSet sc = draw(ghz, comp, 100, 3);
    try {
      estimate_fidelity(sc, dual_operators(comp), ghz_plus_sparse(2));
      FAIL("computational frame is not informationally complete");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::span);
    }
  }

  TEST_CASE("reduced states put the first listed site on the slow index") {
    // site 0 = |0>, site 1 = |1>, site 2 = |+>
    PureState psi{3, VectorXc::Zero(8)};
    psi.amps(2) = std::sqrt(0.5);  // |010>
    psi.amps(6) = std::sqrt(0.5);  // |110>

    int s01[] = {0, 1};
    MatrixXc r01 = exact_reduced_state(psi, s01);
    CHECK(r01(1, 1).real() == doctest::Approx(1.0).epsilon(1e-12));  // |s0 s1> = |01>
    int s10[] = {1, 0};
    MatrixXc r10 = exact_reduced_state(psi, s10);
    CHECK(r10(2, 2).real() == doctest::Approx(1.0).epsilon(1e-12));  // |s1 s0> = |10>

    int s2[] = {2};
    MatrixXc r2 = exact_reduced_state(psi, s2);
    CHECK(r2(0, 1).real() == doctest::Approx(0.5).epsilon(1e-12));

    // the estimator follows the same convention
    Povm tet = build_povm("tetrahedral");
    DualSet td = dual_operators(tet);
    SampleSet s = draw(psi, tet, 200000, 41);
    MatrixXc e10 = estimate_reduced_state(s, td, s10);
    CHECK((e10 - r10).cwiseAbs().maxCoeff() < 0.03);
    MatrixXc e2 = estimate_reduced_state(s, td, s2);
    CHECK((e2 - r2).cwiseAbs().maxCoeff() < 0.03);

    // exact partial trace of a mixed state against dense algebra
    DensityMatrix mix = ghz_mixture(3, 0.25);
    int s02[] = {0, 2};
    MatrixXc red = exact_reduced_state(mix, s02);
    CHECK(red(0, 0).real() == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(red(3, 3).real() == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(std::abs(red(0, 3)) < 1e-12);  // coherence dies under partial trace
    CHECK(std::abs(red.trace().real() - 1.0) < 1e-12);

    int dup[] = {0, 0};
    CHECK_THROWS_AS(exact_reduced_state(psi, dup), Error);
    int oor[] = {5};
    CHECK_THROWS_AS(exact_reduced_state(psi, oor), Error);
    CHECK_THROWS_AS(estimate_reduced_state(s, td, dup), Error);
  }

  TEST_CASE("tvd against a table with a sampling floor") {
    ProbTable uniform;
    uniform.n = 1;
    uniform.q = 4;
    uniform.probs.assign(4, 0.25);

    SampleSet ones;
    ones.n = 1;
    ones.q = 4;
    ones.data.assign(1000, Symbol{1});
    TvdResult r = tvd_with_floor(ones, uniform, 5);
    CHECK(r.tvd == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(r.floor > 0.0);
    CHECK(r.floor < 0.1);

    // samples drawn from the table itself sit at the floor's scale
    SampleSet fair = sample_outcomes(uniform, 1000, 6, "");
    TvdResult r2 = tvd_with_floor(fair, uniform, 7);
    CHECK(r2.tvd < 10 * std::max(r2.floor, 1e-3));

    SampleSet mismatched;
    mismatched.n = 2;
    mismatched.q = 4;
    mismatched.data.assign(20, Symbol{1});
    CHECK_THROWS_AS(tvd_with_floor(mismatched, uniform, 8), Error);
  }

  TEST_CASE("order strength reads poly coefficients by interaction order") {
    EnergyModel model;
    model.n = 3;
    model.q = 2;
    model.symmetry = Symmetry::none;
    for (int u = 0; u < 3; ++u) {
      PolyParams p = PolyParams::create(2, 2, 3);
      // keys: {}, {0}, {1}, {0,1}
      p.coeffs = {0.1 * (u + 1), 0.5, -0.8, u == 2 ? 0.05 : 0.02};
      model.spins.push_back({std::move(p), false});
    }
    auto orders = order_strength(model);
    REQUIRE(orders.size() == 3);
    CHECK(orders[0].order == 1);
    CHECK(orders[0].strength == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(orders[1].order == 2);
    CHECK(orders[1].strength == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(orders[2].order == 3);
    CHECK(orders[2].strength == doctest::Approx(0.05).epsilon(1e-12));

    // wrapped blocks double odd-size keys and erase even-size ones
    for (auto& spin : model.spins) spin.spin_flip_symmetrized = true;
    auto wrapped = order_strength(model);
    CHECK(wrapped[0].strength == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(wrapped[1].strength == doctest::Approx(1.6).epsilon(1e-12));
    CHECK(wrapped[2].strength == doctest::Approx(0.0).epsilon(1e-12));

    EnergyModel sym;
    sym.n = 3;
    sym.q = 2;
    sym.symmetry = Symmetry::permutation;
    sym.spins.push_back({SymParams::create(2, 2), false});
    CHECK_THROWS_AS(order_strength(sym), Error);
  }

  TEST_CASE("potts order strength maxes over output symbols") {
    EnergyModel model;
    model.n = 2;
    model.q = 3;
    model.symmetry = Symmetry::none;
    for (int u = 0; u < 2; ++u) {
      PolyParams p = PolyParams::create(3, 1, 2);
      // 4 keys ({} and {0} with three assignments), 3 outputs each
      p.coeffs.assign(12, 0.0);
      p.coeffs[1] = u == 0 ? -0.6 : 0.1;  // field block
      p.coeffs[7] = 0.9;                  // pair block
      model.spins.push_back({std::move(p), false});
    }
    auto orders = order_strength(model);
    REQUIRE(orders.size() == 2);
    CHECK(orders[0].strength == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(orders[1].strength == doctest::Approx(0.9).epsilon(1e-12));
  }
}
