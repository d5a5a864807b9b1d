#include <cmath>
#include <set>

#include "doctest.h"
#include "oracles.hpp"
#include "qebm/povm.hpp"
#include "qebm/qsim.hpp"

using namespace qebm;

namespace {

const double kS2 = std::sqrt(2.0);
const double kS6 = std::sqrt(6.0);

// Tetrahedron directions in the order the POVM uses them.
const double kDirs[4][3] = {
    {0, 0, 1},
    {2 * kS2 / 3, 0, -1.0 / 3},
    {-kS2 / 3, kS6 / 3, -1.0 / 3},
    {-kS2 / 3, -kS6 / 3, -1.0 / 3},
};

Matrix2c bloch(double x, double y, double z) {
  Matrix2c m;
  m << Complex(z, 0), Complex(x, -y), Complex(x, y), Complex(-z, 0);
  return m;
}

}  // namespace

TEST_SUITE("povm") {
  TEST_CASE("elements resolve and sum to identity") {
    for (const char* kind : {"computational", "tetrahedral", "rotated-tetrahedral"}) {
      Povm povm = build_povm(kind, 7);
      Matrix2c sum = Matrix2c::Zero();
      for (const auto& m : povm.elements) sum += m;
      CHECK((sum - Matrix2c::Identity()).cwiseAbs().maxCoeff() < 1e-12);
    }
    CHECK(build_povm("computational").q == 2);
    CHECK(build_povm("tetrahedral").q == 4);
    CHECK_THROWS_AS(build_povm("sic"), Error);
  }

  TEST_CASE("tetrahedral elements match (1/4)(I + s_a.sigma)") {
    Povm povm = build_povm("tetrahedral");
    for (int a = 0; a < 4; ++a) {
      Matrix2c want = 0.25 * (Matrix2c::Identity() + bloch(kDirs[a][0], kDirs[a][1], kDirs[a][2]));
      CHECK((povm.elements[static_cast<std::size_t>(a)] - want).cwiseAbs().maxCoeff() < 1e-14);
    }
    // spelled out for the first two
    Matrix2c m1;
    m1 << 0.5, 0, 0, 0;
    CHECK((povm.elements[0] - m1).cwiseAbs().maxCoeff() < 1e-14);
    Matrix2c m2;
    m2 << 1.0 / 6, kS2 / 6, kS2 / 6, 1.0 / 3;
    CHECK((povm.elements[1] - m2).cwiseAbs().maxCoeff() < 1e-14);
  }

  TEST_CASE("tetrahedral duals") {
    DualSet ds = dual_operators(build_povm("tetrahedral"));
    CHECK(ds.informationally_complete);
    for (int a = 0; a < 4; ++a) {
      Matrix2c want = 0.5 * Matrix2c::Identity() + 1.5 * bloch(kDirs[a][0], kDirs[a][1], kDirs[a][2]);
      CHECK((ds.duals[static_cast<std::size_t>(a)] - want).cwiseAbs().maxCoeff() < 1e-12);
    }
    Matrix2c d1;
    d1 << 2, 0, 0, -1;
    CHECK((ds.duals[0] - d1).cwiseAbs().maxCoeff() < 1e-12);
    // duals invert the frame: sum_a Tr(rho M_a) D_a = rho
    MatrixXc rho = oracle::random_density(2, 5);
    Matrix2c rec = Matrix2c::Zero();
    Povm povm = build_povm("tetrahedral");
    for (int a = 0; a < 4; ++a)
      rec += (rho * povm.elements[static_cast<std::size_t>(a)]).trace() * ds.duals[static_cast<std::size_t>(a)];
    CHECK((rec - rho).cwiseAbs().maxCoeff() < 1e-12);
  }

  TEST_CASE("computational duals are the elements and not complete") {
    DualSet ds = dual_operators(build_povm("computational"));
    CHECK_FALSE(ds.informationally_complete);
    Matrix2c p0;
    p0 << 1, 0, 0, 0;
    CHECK((ds.duals[0] - p0).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((ds.gram - MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-14);
  }

  TEST_CASE("rotated tetrahedral is a seeded unitary conjugation") {
    Povm a1 = build_povm("rotated-tetrahedral", 11);
    Povm a2 = build_povm("rotated-tetrahedral", 11);
    Povm b = build_povm("rotated-tetrahedral", 12);
    double same = 0, diff = 0;
    for (int a = 0; a < 4; ++a) {
      same = std::max(same, (a1.elements[static_cast<std::size_t>(a)] - a2.elements[static_cast<std::size_t>(a)]).cwiseAbs().maxCoeff());
      diff = std::max(diff, (a1.elements[static_cast<std::size_t>(a)] - b.elements[static_cast<std::size_t>(a)]).cwiseAbs().maxCoeff());
    }
    CHECK(same == 0.0);
    CHECK(diff > 1e-3);
    // conjugation preserves spectra
    for (const auto& m : a1.elements) {
      Eigen::SelfAdjointEigenSolver<Matrix2c> es(m);
      CHECK(es.eigenvalues()(0) == doctest::Approx(0.0).epsilon(1e-12));
      CHECK(es.eigenvalues()(1) == doctest::Approx(0.5).epsilon(1e-12));
    }
    CHECK(dual_operators(a1).informationally_complete);
  }

  TEST_CASE("haar unitary is unitary and deterministic") {
    MatrixXc u = haar_unitary(4, 3);
    CHECK((u * u.adjoint() - MatrixXc::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((u - haar_unitary(4, 3)).cwiseAbs().maxCoeff() == 0.0);
    CHECK((u - haar_unitary(4, 4)).cwiseAbs().maxCoeff() > 1e-3);
  }

  TEST_CASE("outcome distribution on product and entangled states") {
    // |0> under the tetrahedron: (1/2, 1/6, 1/6, 1/6)
    PureState zero{1, VectorXc::Zero(2)};
    zero.amps(0) = 1.0;
    ProbTable t = outcome_distribution(zero, build_povm("tetrahedral"));
    REQUIRE(t.entries() == 4);
    CHECK(t.probs[0] == doctest::Approx(0.5).epsilon(1e-12));
    for (int a = 1; a < 4; ++a) CHECK(t.probs[static_cast<std::size_t>(a)] == doctest::Approx(1.0 / 6).epsilon(1e-12));

    // pure and density paths agree
    PureState ghz = ghz_plus(3);
    DensityMatrix dm{3, ghz.amps * ghz.amps.adjoint()};
    Povm tet = build_povm("tetrahedral");
    ProbTable tp = outcome_distribution(ghz, tet);
    ProbTable td = outcome_distribution(dm, tet);
    REQUIRE(tp.entries() == 64);
    double worst = 0;
    for (std::size_t i = 0; i < 64; ++i) worst = std::max(worst, std::abs(tp.probs[i] - td.probs[i]));
    CHECK(worst < 1e-12);

    // computational outcomes of GHZ: only all-1 and all-2 survive
    ProbTable tc = outcome_distribution(ghz, build_povm("computational"));
    CHECK(tc.probs[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(tc.probs[7] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(std::abs(tc.probs[1]) < 1e-14);
  }

  TEST_CASE("table indexing is little-endian") {
    ProbTable t;
    t.n = 3;
    t.q = 2;
    t.probs.assign(8, 0.125);
    Symbol s211[] = {2, 1, 1};
    CHECK(t.index_of(s211) == 1);
    Symbol s122[] = {1, 2, 2};
    CHECK(t.index_of(s122) == 6);
    Symbol out[3];
    t.decode(6, out);
    CHECK(out[0] == 1);
    CHECK(out[1] == 2);
    CHECK(out[2] == 2);
    for (std::uint64_t i = 0; i < 8; ++i) {
      t.decode(i, out);
      CHECK(t.index_of(out) == i);
    }
    Symbol bad[] = {3, 1, 1};
    CHECK_THROWS_AS(t.index_of(bad), Error);
  }

  TEST_CASE("sampling is seeded and matches the table") {
    PureState ghz = ghz_plus(2);
    ProbTable t = outcome_distribution(ghz, build_povm("tetrahedral"));
    SampleSet s1 = sample_outcomes(t, 20000, 9, "test");
    SampleSet s2 = sample_outcomes(t, 20000, 9, "test");
    SampleSet s3 = sample_outcomes(t, 20000, 10, "test");
    CHECK(s1.data == s2.data);
    CHECK(s1.data != s3.data);
    CHECK(s1.rows() == 20000);
    CHECK(s1.n == 2);
    CHECK(s1.q == 4);
    CHECK(s1.provenance == "test");

    // empirical frequencies within 5 sigma of the table
    std::vector<double> freq(t.entries(), 0.0);
    for (std::uint64_t r = 0; r < s1.rows(); ++r) freq[t.index_of(s1.row(r))] += 1.0 / static_cast<double>(s1.rows());
    for (std::size_t i = 0; i < t.entries(); ++i) {
      double sigma = std::sqrt(t.probs[i] * (1 - t.probs[i]) / static_cast<double>(s1.rows()));
      CHECK(std::abs(freq[i] - t.probs[i]) <= 5 * sigma + 1e-12);
    }
    CHECK_THROWS_AS(sample_outcomes(t, 0, 1, ""), Error);
  }
}
