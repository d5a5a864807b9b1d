#include "qebm/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qebm/families.hpp"

namespace qebm {

namespace {

Matrix2c pauli_letter(char letter) {
  Matrix2c p;
  switch (letter) {
    case 'I': p << 1, 0, 0, 1; break;
    case 'X': p << 0, 1, 1, 0; break;
    case 'Y': p << 0, Complex(0, -1), Complex(0, 1), 0; break;
    case 'Z': p << 1, 0, 0, -1; break;
    default: fail(ErrorKind::config, std::string("unknown pauli letter '") + letter + "'");
  }
  return p;
}

// Pauli coordinates of the duals: D_a = sum_r A(r, a) P_r with P = I,X,Y,Z.
MatrixXd dual_pauli_coords(const DualSet& duals) {
  const char letters[4] = {'I', 'X', 'Y', 'Z'};
  MatrixXd a(4, duals.q);
  for (int r = 0; r < 4; ++r) {
    Matrix2c p = pauli_letter(letters[r]);
    for (int k = 0; k < duals.q; ++k) a(r, k) = 0.5 * (p * duals.duals[static_cast<std::size_t>(k)]).trace().real();
  }
  return a;
}

void check_in_span(const MatrixXd& coords, char letter, int site) {
  VectorXd b = VectorXd::Zero(4);
  b(letter == 'X' ? 1 : letter == 'Y' ? 2 : 3) = 1.0;
  VectorXd c = coords.colPivHouseholderQr().solve(b);
  double residual = (coords * c - b).norm();
  require(residual < 1e-9, ErrorKind::span,
          std::string("observable ") + letter + " at site " + std::to_string(site) +
              " lies outside the measurement span");
}

EstimateResult reduce_mean(double sum, double sumsq, std::uint64_t m) {
  EstimateResult out;
  out.n_used = m;
  double md = static_cast<double>(m);
  out.mean = sum / md;
  if (m >= 2) {
    double var = std::max(0.0, (sumsq - md * out.mean * out.mean) / (md - 1.0));
    out.stderr_ = std::sqrt(var / md);
  }
  return out;
}

void check_sites(std::span<const int> sites, int n) {
  require(sites.size() == 1 || sites.size() == 2, ErrorKind::config,
          "reduced states cover one or two sites");
  for (int s : sites)
    require(s >= 0 && s < n, ErrorKind::config, "site index " + std::to_string(s) + " out of range");
  if (sites.size() == 2)
    require(sites[0] != sites[1], ErrorKind::config, "reduced state sites must be distinct");
}

}  // namespace

EstimateResult estimate_observable(const SampleSet& samples, const DualSet& duals,
                                   std::string_view pauli) {
  require(samples.q == duals.q, ErrorKind::config, "sample alphabet does not match the dual set");
  require(static_cast<int>(pauli.size()) == samples.n, ErrorKind::config,
          "pauli string length " + std::to_string(pauli.size()) + " does not match n = " +
              std::to_string(samples.n));
  std::uint64_t m = samples.rows();
  require(m >= 1, ErrorKind::config, "sample set is empty");

  std::vector<int> support;
  for (int i = 0; i < samples.n; ++i)
    if (pauli[static_cast<std::size_t>(i)] != 'I') support.push_back(i);
  if (support.empty()) {
    EstimateResult out;
    out.mean = 1.0;
    out.n_used = m;
    return out;
  }

  MatrixXd coords = dual_pauli_coords(duals);
  // factor table per support site: f(a) = Tr(D_a O_i)
  std::vector<double> factors(support.size() * static_cast<std::size_t>(duals.q));
  for (std::size_t k = 0; k < support.size(); ++k) {
    char letter = pauli[static_cast<std::size_t>(support[k])];
    Matrix2c p = pauli_letter(letter);
    check_in_span(coords, letter, support[k]);
    for (int a = 0; a < duals.q; ++a) {
      Complex tr = (duals.duals[static_cast<std::size_t>(a)] * p).trace();
      factors[k * static_cast<std::size_t>(duals.q) + static_cast<std::size_t>(a)] = tr.real();
    }
  }

  double sum = 0.0, sumsq = 0.0;
  for (std::uint64_t t = 0; t < m; ++t) {
    auto row = samples.row(t);
    double x = 1.0;
    for (std::size_t k = 0; k < support.size(); ++k) {
      Symbol a = row[static_cast<std::size_t>(support[k])];
      x *= factors[k * static_cast<std::size_t>(duals.q) + static_cast<std::size_t>(a - 1)];
    }
    sum += x;
    sumsq += x * x;
  }
  return reduce_mean(sum, sumsq, m);
}

SparseState ghz_plus_sparse(int n) {
  require(n >= 1 && n <= 63, ErrorKind::config, "ghz target needs 1 <= n <= 63");
  double r = 1.0 / std::sqrt(2.0);
  return {n, {{0, Complex(r, 0)}, {(std::uint64_t{1} << n) - 1, Complex(r, 0)}}};
}

SparseState ghz_minus_sparse(int n) {
  require(n >= 1 && n <= 63, ErrorKind::config, "ghz target needs 1 <= n <= 63");
  double r = 1.0 / std::sqrt(2.0);
  return {n, {{0, Complex(r, 0)}, {(std::uint64_t{1} << n) - 1, Complex(-r, 0)}}};
}

EstimateResult estimate_fidelity(const SampleSet& samples, const DualSet& duals,
                                 const SparseState& target) {
  require(duals.informationally_complete, ErrorKind::span,
          "fidelity estimation requires an informationally complete measurement");
  require(samples.q == duals.q, ErrorKind::config, "sample alphabet does not match the dual set");
  require(target.n == samples.n, ErrorKind::config, "target size does not match the samples");
  std::size_t k = target.terms.size();
  require(k >= 1 && k <= 16, ErrorKind::config, "fidelity targets carry 1 to 16 basis terms");
  std::uint64_t m = samples.rows();
  require(m >= 1, ErrorKind::config, "sample set is empty");

  double norm = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    auto [idx, c] = target.terms[j];
    require(target.n >= 64 || idx < (std::uint64_t{1} << target.n), ErrorKind::config,
            "target basis index out of range");
    for (std::size_t l = j + 1; l < k; ++l)
      require(target.terms[l].first != idx, ErrorKind::config, "duplicate target basis index");
    norm += std::norm(c);
  }
  require(std::abs(norm - 1.0) <= 1e-8, ErrorKind::config, "fidelity target is not normalized");

  int n = samples.n;
  double sum = 0.0, sumsq = 0.0, max_imag = 0.0;
  for (std::uint64_t t = 0; t < m; ++t) {
    auto row = samples.row(t);
    Complex v = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      auto [xj, cj] = target.terms[j];
      for (std::size_t l = 0; l < k; ++l) {
        auto [xl, cl] = target.terms[l];
        Complex prod = std::conj(cj) * cl;
        for (int i = 0; i < n && prod != Complex(0, 0); ++i) {
          const Matrix2c& d = duals.duals[static_cast<std::size_t>(row[static_cast<std::size_t>(i)] - 1)];
          prod *= d(static_cast<Eigen::Index>((xj >> i) & 1), static_cast<Eigen::Index>((xl >> i) & 1));
        }
        v += prod;
      }
    }
    max_imag = std::max(max_imag, std::abs(v.imag()));
    sum += v.real();
    sumsq += v.real() * v.real();
  }
  require(max_imag <= 1e-9, ErrorKind::config,
          "fidelity estimate has imaginary residue " + std::to_string(max_imag));
  return reduce_mean(sum, sumsq, m);
}

MatrixXc estimate_reduced_state(const SampleSet& samples, const DualSet& duals,
                                std::span<const int> sites) {
  require(duals.informationally_complete, ErrorKind::span,
          "reduced-state estimation requires an informationally complete measurement");
  require(samples.q == duals.q, ErrorKind::config, "sample alphabet does not match the dual set");
  check_sites(sites, samples.n);
  std::uint64_t m = samples.rows();
  require(m >= 1, ErrorKind::config, "sample set is empty");

  Eigen::Index dim = sites.size() == 1 ? 2 : 4;
  MatrixXc acc = MatrixXc::Zero(dim, dim);
  for (std::uint64_t t = 0; t < m; ++t) {
    auto row = samples.row(t);
    const Matrix2c& d0 = duals.duals[static_cast<std::size_t>(row[static_cast<std::size_t>(sites[0])] - 1)];
    if (sites.size() == 1) {
      acc += d0;
    } else {
      const Matrix2c& d1 = duals.duals[static_cast<std::size_t>(row[static_cast<std::size_t>(sites[1])] - 1)];
      for (Eigen::Index r0 = 0; r0 < 2; ++r0)
        for (Eigen::Index r1 = 0; r1 < 2; ++r1)
          for (Eigen::Index c0 = 0; c0 < 2; ++c0)
            for (Eigen::Index c1 = 0; c1 < 2; ++c1)
              acc(2 * r0 + r1, 2 * c0 + c1) += d0(r0, c0) * d1(r1, c1);
    }
  }
  acc /= static_cast<double>(m);
  return 0.5 * (acc + acc.adjoint().eval());
}

MatrixXc exact_reduced_state(const QuantumState& state, std::span<const int> sites) {
  int n = state_sites(state);
  check_sites(sites, n);
  int k = static_cast<int>(sites.size());
  Eigen::Index dim = k == 1 ? 2 : 4;

  // full basis index from the reduced index (first site = slow bit) and the
  // index over the remaining sites
  std::vector<int> rest;
  for (int i = 0; i < n; ++i)
    if (std::find(sites.begin(), sites.end(), i) == sites.end()) rest.push_back(i);
  auto compose = [&](Eigen::Index red, std::uint64_t r) {
    std::uint64_t full = 0;
    for (int j = 0; j < k; ++j) {
      std::uint64_t bit = (static_cast<std::uint64_t>(red) >> (k - 1 - j)) & 1;
      full |= bit << sites[static_cast<std::size_t>(j)];
    }
    for (std::size_t j = 0; j < rest.size(); ++j) full |= ((r >> j) & 1) << rest[j];
    return full;
  };

  std::uint64_t rest_dim = std::uint64_t{1} << rest.size();
  MatrixXc red = MatrixXc::Zero(dim, dim);
  if (const auto* ps = std::get_if<PureState>(&state)) {
    for (Eigen::Index a = 0; a < dim; ++a)
      for (Eigen::Index b = 0; b < dim; ++b) {
        Complex acc = 0.0;
        for (std::uint64_t r = 0; r < rest_dim; ++r)
          acc += ps->amps(static_cast<Eigen::Index>(compose(a, r))) *
                 std::conj(ps->amps(static_cast<Eigen::Index>(compose(b, r))));
        red(a, b) = acc;
      }
  } else {
    const auto& dm = std::get<DensityMatrix>(state);
    for (Eigen::Index a = 0; a < dim; ++a)
      for (Eigen::Index b = 0; b < dim; ++b) {
        Complex acc = 0.0;
        for (std::uint64_t r = 0; r < rest_dim; ++r)
          acc += dm.rho(static_cast<Eigen::Index>(compose(a, r)), static_cast<Eigen::Index>(compose(b, r)));
        red(a, b) = acc;
      }
  }
  return red;
}

double trace_distance(const MatrixXc& a, const MatrixXc& b) {
  require(a.rows() == a.cols() && b.rows() == b.cols() && a.rows() == b.rows(), ErrorKind::config,
          "trace distance needs square matrices of equal size");
  auto check_hermitian = [](const MatrixXc& mat, const char* name) {
    double scale = std::max(1.0, mat.cwiseAbs().maxCoeff());
    require((mat - mat.adjoint()).cwiseAbs().maxCoeff() <= 1e-8 * scale, ErrorKind::config,
            std::string(name) + " matrix is not Hermitian");
  };
  check_hermitian(a, "first");
  check_hermitian(b, "second");
  MatrixXc diff = 0.5 * ((a - b) + (a - b).adjoint().eval());
  Eigen::SelfAdjointEigenSolver<MatrixXc> es(diff, Eigen::EigenvaluesOnly);
  require(es.info() == Eigen::Success, ErrorKind::config, "trace distance eigensolve failed");
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

namespace {

double histogram_tvd(const SampleSet& samples, const ProbTable& table) {
  std::vector<std::uint64_t> counts(table.entries(), 0);
  for (std::uint64_t t = 0; t < samples.rows(); ++t) ++counts[table.index_of(samples.row(t))];
  double m = static_cast<double>(samples.rows());
  double acc = 0.0;
  for (std::uint64_t i = 0; i < table.entries(); ++i)
    acc += std::abs(static_cast<double>(counts[i]) / m - table.probs[i]);
  return 0.5 * acc;
}

}  // namespace

TvdResult tvd_with_floor(const SampleSet& model_samples, const ProbTable& table,
                         std::uint64_t floor_seed) {
  require(model_samples.n == table.n && model_samples.q == table.q, ErrorKind::config,
          "samples do not match the reference table");
  require(model_samples.rows() >= 1, ErrorKind::config, "sample set is empty");
  TvdResult out;
  out.tvd = histogram_tvd(model_samples, table);
  SampleSet reference = sample_outcomes(table, model_samples.rows(), floor_seed,
                                        "tvd sampling-floor reference draw");
  out.floor = histogram_tvd(reference, table);
  return out;
}

std::vector<OrderStrength> order_strength(const EnergyModel& model) {
  int max_order = 0;
  for (const auto& spin : model.spins) {
    const auto* poly = std::get_if<PolyParams>(&spin.params);
    require(poly != nullptr, ErrorKind::config, "order strengths are defined for the poly family");
    max_order = std::max(max_order, poly->L);
  }
  std::vector<OrderStrength> out(static_cast<std::size_t>(max_order));
  for (int o = 1; o <= max_order; ++o) out[static_cast<std::size_t>(o - 1)].order = o;
  for (const auto& spin : model.spins) {
    const auto& poly = std::get<PolyParams>(spin.params);
    for (std::size_t key = 0; key < poly.key_sites.size(); ++key) {
      int order = static_cast<int>(poly.key_sites[key].size()) + 1;
      double c;
      if (poly.q == 2) {
        c = std::abs(poly.coeffs[key]);
        if (spin.spin_flip_symmetrized) c *= (poly.key_sites[key].size() % 2 == 0) ? 0.0 : 2.0;
      } else {
        c = 0.0;
        for (int a = 0; a < poly.q; ++a)
          c = std::max(c, std::abs(poly.coeffs[key * static_cast<std::size_t>(poly.q) +
                                               static_cast<std::size_t>(a)]));
      }
      auto& slot = out[static_cast<std::size_t>(order - 1)];
      slot.strength = std::max(slot.strength, c);
    }
  }
  return out;
}

}  // namespace qebm
