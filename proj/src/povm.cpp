#include "qebm/povm.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "qebm/rng.hpp"

namespace qebm {

namespace {

void check_povm(const Povm& povm) {
  require(povm.q >= 2, ErrorKind::config, "POVM needs at least two outcomes");
  require(static_cast<int>(povm.elements.size()) == povm.q, ErrorKind::config, "POVM element count mismatch");
  Matrix2c sum = Matrix2c::Zero();
  for (const auto& m : povm.elements) {
    require((m - m.adjoint()).cwiseAbs().maxCoeff() <= 1e-12, ErrorKind::config,
            "POVM element is not Hermitian");
    Eigen::SelfAdjointEigenSolver<Matrix2c> es(m);
    require(es.eigenvalues().minCoeff() >= -1e-12, ErrorKind::config, "POVM element is not PSD");
    sum += m;
  }
  require((sum - Matrix2c::Identity()).cwiseAbs().maxCoeff() <= 1e-12, ErrorKind::config,
          "POVM elements do not sum to the identity");
}

std::vector<std::uint64_t> radix_powers(int q, int n) {
  std::vector<std::uint64_t> p(static_cast<std::size_t>(n) + 1, 1);
  for (int i = 0; i < n; ++i) p[static_cast<std::size_t>(i) + 1] = p[static_cast<std::size_t>(i)] * static_cast<std::uint64_t>(q);
  return p;
}

// Weighted partial trace over the top qubit of the current block:
// rho' = sum_{t,t'} M(t,t') rho[block row t', block col t].
MatrixXc contract_top_site(const MatrixXc& rho, const Matrix2c& m) {
  Eigen::Index h = rho.rows() / 2;
  MatrixXc out = MatrixXc::Zero(h, h);
  for (int t = 0; t < 2; ++t)
    for (int tp = 0; tp < 2; ++tp) {
      Complex c = m(t, tp);
      if (c != Complex{0.0, 0.0}) out += c * rho.block(tp * h, t * h, h, h);
    }
  return out;
}

void recurse_density(const MatrixXc& rho, int sites_left, std::uint64_t offset,
                     const std::vector<Matrix2c>& elems, const std::vector<std::uint64_t>& qpow,
                     std::vector<double>& probs) {
  if (sites_left == 0) {
    probs[offset] += rho(0, 0).real();
    return;
  }
  int s = sites_left - 1;
  for (std::size_t a = 0; a < elems.size(); ++a) {
    MatrixXc sub = contract_top_site(rho, elems[a]);
    recurse_density(sub, s, offset + a * qpow[static_cast<std::size_t>(s)], elems, qpow, probs);
  }
}

void recurse_pure(const VectorXc& psi, int sites_left, std::uint64_t offset,
                  const std::vector<std::vector<Eigen::Vector2cd>>& kvecs,
                  const std::vector<std::uint64_t>& qpow, std::vector<double>& probs) {
  if (sites_left == 0) {
    probs[offset] += std::norm(psi(0));
    return;
  }
  int s = sites_left - 1;
  Eigen::Index h = psi.size() / 2;
  for (std::size_t a = 0; a < kvecs.size(); ++a) {
    for (const auto& k : kvecs[a]) {
      VectorXc phi = std::conj(k(0)) * psi.head(h) + std::conj(k(1)) * psi.tail(h);
      recurse_pure(phi, s, offset + a * qpow[static_cast<std::size_t>(s)], kvecs, qpow, probs);
    }
  }
}

}  // namespace

std::uint64_t ProbTable::index_of(std::span<const Symbol> symbols) const {
  require(static_cast<int>(symbols.size()) == n, ErrorKind::config, "symbol count does not match table");
  std::uint64_t idx = 0;
  std::uint64_t w = 1;
  for (int i = 0; i < n; ++i) {
    Symbol s = symbols[static_cast<std::size_t>(i)];
    require(s >= 1 && s <= q, ErrorKind::config, "symbol out of range 1..q");
    idx += static_cast<std::uint64_t>(s - 1) * w;
    w *= static_cast<std::uint64_t>(q);
  }
  return idx;
}

void ProbTable::decode(std::uint64_t index, std::span<Symbol> out) const {
  for (int i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] = static_cast<Symbol>(index % static_cast<std::uint64_t>(q) + 1);
    index /= static_cast<std::uint64_t>(q);
  }
}

MatrixXc haar_unitary(int dim, std::uint64_t seed) {
  require(dim >= 1, ErrorKind::config, "haar_unitary: dim must be >= 1");
  auto eng = make_stream(seed, "haar-unitary");
  MatrixXc g(dim, dim);
  const double r = 1.0 / std::sqrt(2.0);
  for (Eigen::Index i = 0; i < dim; ++i)
    for (Eigen::Index j = 0; j < dim; ++j)
      g(i, j) = Complex(standard_normal(eng) * r, standard_normal(eng) * r);
  Eigen::HouseholderQR<MatrixXc> qr(g);
  MatrixXc qmat = qr.householderQ() * MatrixXc::Identity(dim, dim);
  MatrixXc rmat = qr.matrixQR().triangularView<Eigen::Upper>();
  VectorXc phases(dim);
  for (Eigen::Index j = 0; j < dim; ++j) {
    Complex d = rmat(j, j);
    phases(j) = std::abs(d) > 1e-300 ? d / std::abs(d) : Complex{1.0, 0.0};
  }
  return qmat * phases.asDiagonal();
}

Povm build_povm(std::string_view kind, std::uint64_t seed) {
  Povm povm;
  if (kind == "computational") {
    povm.q = 2;
    povm.label = "computational";
    Matrix2c m1, m2;
    m1 << 1, 0, 0, 0;
    m2 << 0, 0, 0, 1;
    povm.elements = {m1, m2};
  } else if (kind == "tetrahedral" || kind == "rotated-tetrahedral") {
    povm.q = 4;
    povm.label = std::string(kind);
    Matrix2c m1;
    m1 << 0.5, 0, 0, 0;
    povm.elements.push_back(m1);
    const double off = std::sqrt(2.0) / 6.0;
    for (int k = 0; k < 3; ++k) {
      double phi = 2.0 * std::numbers::pi * k / 3.0;
      Matrix2c m;
      m << Complex{1.0 / 6.0, 0.0}, std::polar(off, -phi), std::polar(off, phi), Complex{1.0 / 3.0, 0.0};
      povm.elements.push_back(m);
    }
    if (kind == "rotated-tetrahedral") {
      MatrixXc u = haar_unitary(2, seed);
      povm.label += "; seed=" + std::to_string(seed);
      for (auto& m : povm.elements) m = (u * m * u.adjoint()).eval();
    }
  } else {
    fail(ErrorKind::config, "unknown POVM kind '" + std::string(kind) +
                                "' (expected computational, tetrahedral or rotated-tetrahedral)");
  }
  check_povm(povm);
  return povm;
}

DualSet dual_operators(const Povm& povm) {
  check_povm(povm);
  int q = povm.q;
  MatrixXd gram(q, q);
  for (int a = 0; a < q; ++a)
    for (int b = 0; b < q; ++b) {
      Complex t = (povm.elements[static_cast<std::size_t>(a)] * povm.elements[static_cast<std::size_t>(b)]).trace();
      require(std::abs(t.imag()) <= 1e-12, ErrorKind::config, "Gram entry has imaginary residue");
      gram(a, b) = t.real();
    }
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(gram);
  double lmin = es.eigenvalues().minCoeff();
  double lmax = es.eigenvalues().maxCoeff();
  require(lmin > 0.0 && lmax / lmin < 1e8, ErrorKind::config,
          "POVM elements are linearly dependent (Gram matrix singular or ill-conditioned)");
  MatrixXd ginv = es.eigenvectors() * es.eigenvalues().cwiseInverse().asDiagonal() * es.eigenvectors().transpose();

  DualSet duals;
  duals.q = q;
  duals.label = povm.label;
  duals.gram = gram;
  duals.duals.assign(static_cast<std::size_t>(q), Matrix2c::Zero());
  for (int a = 0; a < q; ++a)
    for (int b = 0; b < q; ++b)
      duals.duals[static_cast<std::size_t>(a)] += ginv(a, b) * povm.elements[static_cast<std::size_t>(b)];

  // Rank of the element set inside the 4-dim real space of Hermitian 2x2
  // matrices decides informational completeness.
  Matrix2c sx, sy, sz;
  sx << 0, 1, 1, 0;
  sy << Complex{0, 0}, Complex{0, -1}, Complex{0, 1}, Complex{0, 0};
  sz << 1, 0, 0, -1;
  MatrixXd coords(q, 4);
  for (int a = 0; a < q; ++a) {
    const Matrix2c& m = povm.elements[static_cast<std::size_t>(a)];
    coords(a, 0) = m.trace().real();
    coords(a, 1) = (m * sx).trace().real();
    coords(a, 2) = (m * sy).trace().real();
    coords(a, 3) = (m * sz).trace().real();
  }
  Eigen::JacobiSVD<MatrixXd> svd(coords);
  double smax = svd.singularValues().maxCoeff();
  int rank = 0;
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()(i) > 1e-10 * smax) ++rank;
  duals.informationally_complete = (rank == 4);
  return duals;
}

ProbTable outcome_distribution(const QuantumState& state, const Povm& povm, std::uint64_t max_entries) {
  check_povm(povm);
  int n = state_sites(state);
  require(n >= 1, ErrorKind::config, "state has no sites");
  std::uint64_t entries = 1;
  for (int i = 0; i < n; ++i) {
    require(entries <= max_entries / static_cast<std::uint64_t>(povm.q), ErrorKind::config,
            "outcome table would exceed the entry cap (" + std::to_string(max_entries) + ")");
    entries *= static_cast<std::uint64_t>(povm.q);
  }

  ProbTable table;
  table.n = n;
  table.q = povm.q;
  table.probs.assign(entries, 0.0);
  auto qpow = radix_powers(povm.q, n);

  if (const auto* ps = std::get_if<PureState>(&state)) {
    require(ps->amps.size() == (Eigen::Index{1} << n), ErrorKind::config, "state vector size mismatch");
    std::vector<std::vector<Eigen::Vector2cd>> kvecs(povm.elements.size());
    for (std::size_t a = 0; a < povm.elements.size(); ++a) {
      Eigen::SelfAdjointEigenSolver<Matrix2c> es(povm.elements[a]);
      for (int r = 0; r < 2; ++r) {
        double lam = es.eigenvalues()(r);
        if (lam > 1e-14) kvecs[a].push_back(std::sqrt(lam) * es.eigenvectors().col(r));
      }
    }
    recurse_pure(ps->amps, n, 0, kvecs, qpow, table.probs);
  } else {
    const auto& dm = std::get<DensityMatrix>(state);
    require(dm.rho.rows() == (Eigen::Index{1} << n), ErrorKind::config, "density matrix size mismatch");
    recurse_density(dm.rho, n, 0, povm.elements, qpow, table.probs);
  }

  double sum = 0.0;
  for (double& p : table.probs) {
    require(p >= -1e-12, ErrorKind::config, "outcome distribution has negativity beyond tolerance");
    if (p < 0.0) p = 0.0;
    sum += p;
  }
  require(std::abs(sum - 1.0) <= 1e-10, ErrorKind::config,
          "outcome distribution does not sum to 1 (got " + std::to_string(sum) + ")");
  for (double& p : table.probs) p /= sum;
  return table;
}

SampleSet sample_outcomes(const ProbTable& table, std::uint64_t m, std::uint64_t seed, std::string provenance) {
  require(m >= 1, ErrorKind::config, "sample count must be >= 1");
  require(!table.probs.empty(), ErrorKind::config, "empty probability table");
  std::replace(provenance.begin(), provenance.end(), '\n', ' ');

  std::vector<double> cdf(table.probs.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < table.probs.size(); ++i) {
    acc += table.probs[i];
    cdf[i] = acc;
  }

  SampleSet out;
  out.n = table.n;
  out.q = table.q;
  out.provenance = std::move(provenance);
  out.data.resize(m * static_cast<std::uint64_t>(table.n));
  auto eng = make_stream(seed, "sample-outcomes");
  for (std::uint64_t t = 0; t < m; ++t) {
    double r = uniform01(eng) * acc;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), r);
    std::uint64_t idx = it == cdf.end() ? cdf.size() - 1 : static_cast<std::uint64_t>(it - cdf.begin());
    table.decode(idx, out.row(t));
  }
  return out;
}

}  // namespace qebm
