#include "qebm/qsim.hpp"

#include <Eigen/Eigenvalues>
#include <bit>
#include <cmath>
#include <cstdint>

namespace qebm {

namespace {

constexpr Complex kI{0.0, 1.0};

void check_sites(int n, int cap, const char* what) {
  require(n >= 1, ErrorKind::config, std::string(what) + ": site count must be >= 1");
  require(n <= cap, ErrorKind::config,
          std::string(what) + ": site count " + std::to_string(n) + " exceeds cap " + std::to_string(cap));
}

void check_pauli_string(std::string_view ops, int n) {
  require(static_cast<int>(ops.size()) == n, ErrorKind::config,
          "pauli string length " + std::to_string(ops.size()) + " does not match n=" + std::to_string(n));
  for (char c : ops)
    require(c == 'I' || c == 'X' || c == 'Y' || c == 'Z', ErrorKind::config,
            std::string("pauli string may contain only I X Y Z, got '") + c + "'");
}

// P|x> = phase * |x ^ flip>, evaluated per basis column.
struct PauliAction {
  std::uint64_t flip = 0;
  std::uint64_t zmask = 0;  // Z or Y: sign (-1)^bit
  std::uint64_t ymask = 0;  // Y: extra factor i * (-1)^bit ... tracked via count and bits
};

PauliAction compile_pauli(std::string_view ops) {
  PauliAction a;
  for (std::size_t i = 0; i < ops.size(); ++i) {
    std::uint64_t bit = std::uint64_t{1} << i;
    switch (ops[i]) {
      case 'X': a.flip |= bit; break;
      case 'Y':
        a.flip |= bit;
        a.ymask |= bit;
        break;
      case 'Z': a.zmask |= bit; break;
      default: break;
    }
  }
  return a;
}

// Phase of P acting on |x>: prod over Z sites of (-1)^x_i, over Y sites of
// i*(-1)^x_i (since Y|0>=i|1>, Y|1>=-i|0>).
Complex pauli_phase(const PauliAction& a, std::uint64_t x) {
  int zbits = std::popcount(a.zmask & x);
  int ybits_set = std::popcount(a.ymask & x);
  int ycount = std::popcount(a.ymask);
  int quarter = (ycount + 2 * (zbits + ybits_set)) % 4;  // i^ycount * (-1)^(...)
  switch (quarter) {
    case 0: return Complex{1.0, 0.0};
    case 1: return kI;
    case 2: return Complex{-1.0, 0.0};
    default: return -kI;
  }
}

void add_pauli_term(MatrixXc& h, std::string_view ops, double coeff) {
  PauliAction a = compile_pauli(ops);
  std::uint64_t dim = static_cast<std::uint64_t>(h.rows());
  for (std::uint64_t x = 0; x < dim; ++x) {
    std::uint64_t y = x ^ a.flip;
    h(static_cast<Eigen::Index>(y), static_cast<Eigen::Index>(x)) += coeff * pauli_phase(a, x);
  }
}

std::string pauli_two_site(int n, int i, int j, char op) {
  std::string s(static_cast<std::size_t>(n), 'I');
  s[static_cast<std::size_t>(i)] = op;
  s[static_cast<std::size_t>(j)] = op;
  return s;
}

void check_edges(const std::vector<Edge>& edges, int n) {
  for (const auto& e : edges) {
    require(e.i >= 0 && e.i < n && e.j >= 0 && e.j < n, ErrorKind::config,
            "edge (" + std::to_string(e.i) + "," + std::to_string(e.j) + ") out of range for n=" + std::to_string(n));
    require(e.i != e.j, ErrorKind::config, "edge endpoints must differ");
    require(std::isfinite(e.coupling), ErrorKind::config, "edge coupling must be finite");
  }
}

void check_hermitian(const MatrixXc& h, const char* what) {
  require(h.rows() == h.cols() && h.rows() >= 2, ErrorKind::config, std::string(what) + ": matrix must be square");
  std::uint64_t d = static_cast<std::uint64_t>(h.rows());
  require((d & (d - 1)) == 0, ErrorKind::config, std::string(what) + ": dimension must be a power of two");
  double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
  double dev = (h - h.adjoint()).cwiseAbs().maxCoeff();
  require(dev <= 1e-10 * scale, ErrorKind::config, std::string(what) + ": matrix is not Hermitian");
}

}  // namespace

int state_sites(const QuantumState& state) {
  return std::visit([](const auto& s) { return s.n; }, state);
}

HamiltonianSpec tim_chain(int n, double j, double g) {
  HamiltonianSpec spec;
  spec.n = n;
  spec.kind = HamiltonianKind::tim;
  spec.g = g;
  for (int i = 0; i + 1 < n; ++i) spec.edges.push_back({i, i + 1, j});
  return spec;
}

MatrixXc build_hamiltonian(const HamiltonianSpec& spec) {
  check_sites(spec.n, kMaxDensityQubits, "build_hamiltonian");
  std::uint64_t dim = std::uint64_t{1} << spec.n;
  MatrixXc h = MatrixXc::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  switch (spec.kind) {
    case HamiltonianKind::tim: {
      check_edges(spec.edges, spec.n);
      require(std::isfinite(spec.g), ErrorKind::config, "transverse field must be finite");
      for (const auto& e : spec.edges) add_pauli_term(h, pauli_two_site(spec.n, e.i, e.j, 'Z'), e.coupling);
      for (int i = 0; i < spec.n; ++i) {
        std::string s(static_cast<std::size_t>(spec.n), 'I');
        s[static_cast<std::size_t>(i)] = 'X';
        add_pauli_term(h, s, spec.g);
      }
      break;
    }
    case HamiltonianKind::heisenberg: {
      check_edges(spec.edges, spec.n);
      for (const auto& e : spec.edges)
        for (char op : {'X', 'Y', 'Z'}) add_pauli_term(h, pauli_two_site(spec.n, e.i, e.j, op), e.coupling);
      break;
    }
    case HamiltonianKind::custom_pauli_sum: {
      require(!spec.terms.empty(), ErrorKind::config, "custom-pauli-sum needs at least one term");
      for (const auto& t : spec.terms) {
        check_pauli_string(t.ops, spec.n);
        require(std::isfinite(t.coeff), ErrorKind::config, "term coefficient must be finite");
        add_pauli_term(h, t.ops, t.coeff);
      }
      break;
    }
  }
  return h;
}

DensityMatrix thermal_state(const MatrixXc& h, double beta) {
  check_hermitian(h, "thermal_state");
  require(std::isfinite(beta) && beta >= 0.0, ErrorKind::config, "beta must be finite and >= 0");
  Eigen::SelfAdjointEigenSolver<MatrixXc> es(h);
  require(es.info() == Eigen::Success, ErrorKind::config, "thermal_state: eigendecomposition failed");
  VectorXd lam = es.eigenvalues();
  double lmin = lam.minCoeff();
  VectorXd w = (-beta * (lam.array() - lmin)).exp().matrix();
  double z = w.sum();
  DensityMatrix dm;
  dm.n = static_cast<int>(std::countr_zero(static_cast<std::uint64_t>(h.rows())));
  dm.rho = es.eigenvectors() * (w / z).asDiagonal() * es.eigenvectors().adjoint();
  dm.rho = 0.5 * (dm.rho + dm.rho.adjoint().eval());
  return dm;
}

PureState ground_state(const MatrixXc& h, double degeneracy_tol) {
  check_hermitian(h, "ground_state");
  require(degeneracy_tol > 0.0, ErrorKind::config, "degeneracy_tol must be positive");
  Eigen::SelfAdjointEigenSolver<MatrixXc> es(h);
  require(es.info() == Eigen::Success, ErrorKind::config, "ground_state: eigendecomposition failed");
  const VectorXd& lam = es.eigenvalues();
  require(lam.size() >= 2, ErrorKind::config, "ground_state: need dimension >= 2");
  double gap = lam(1) - lam(0);
  require(gap >= degeneracy_tol, ErrorKind::config,
          "ground state is degenerate within tolerance (gap " + std::to_string(gap) +
              "); break the symmetry, e.g. with a tiny field");
  PureState ps;
  ps.n = static_cast<int>(std::countr_zero(static_cast<std::uint64_t>(h.rows())));
  ps.amps = es.eigenvectors().col(0);
  Eigen::Index imax = 0;
  ps.amps.cwiseAbs().maxCoeff(&imax);
  Complex a = ps.amps(imax);
  ps.amps *= std::conj(a) / std::abs(a);
  return ps;
}

namespace {
PureState ghz(int n, double sign) {
  check_sites(n, kMaxPureQubits, "ghz");
  std::uint64_t dim = std::uint64_t{1} << n;
  PureState ps;
  ps.n = n;
  ps.amps = VectorXc::Zero(static_cast<Eigen::Index>(dim));
  double r = 1.0 / std::sqrt(2.0);
  ps.amps(0) = r;
  ps.amps(static_cast<Eigen::Index>(dim - 1)) = sign * r;
  return ps;
}
}  // namespace

PureState ghz_plus(int n) { return ghz(n, 1.0); }
PureState ghz_minus(int n) { return ghz(n, -1.0); }

DensityMatrix ghz_mixture(int n, double p) {
  check_sites(n, kMaxDensityQubits, "ghz_mixture");
  require(p >= 0.0 && p <= 1.0, ErrorKind::config, "mixture weight p must lie in [0,1]");
  std::uint64_t dim = std::uint64_t{1} << n;
  DensityMatrix dm;
  dm.n = n;
  dm.rho = MatrixXc::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  Eigen::Index last = static_cast<Eigen::Index>(dim - 1);
  dm.rho(0, 0) = 0.5;
  dm.rho(last, last) = 0.5;
  dm.rho(0, last) = 0.5 * (1.0 - 2.0 * p);
  dm.rho(last, 0) = 0.5 * (1.0 - 2.0 * p);
  return dm;
}

double pauli_expectation_exact(const QuantumState& state, std::string_view paulis) {
  int n = state_sites(state);
  check_pauli_string(paulis, n);
  PauliAction a = compile_pauli(paulis);
  Complex acc{0.0, 0.0};
  if (const auto* ps = std::get_if<PureState>(&state)) {
    std::uint64_t dim = static_cast<std::uint64_t>(ps->amps.size());
    for (std::uint64_t x = 0; x < dim; ++x) {
      std::uint64_t y = x ^ a.flip;
      acc += std::conj(ps->amps(static_cast<Eigen::Index>(y))) * pauli_phase(a, x) *
             ps->amps(static_cast<Eigen::Index>(x));
    }
  } else {
    const auto& dm = std::get<DensityMatrix>(state);
    std::uint64_t dim = static_cast<std::uint64_t>(dm.rho.rows());
    for (std::uint64_t x = 0; x < dim; ++x) {
      std::uint64_t y = x ^ a.flip;
      acc += dm.rho(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y)) * pauli_phase(a, x);
    }
  }
  require(std::abs(acc.imag()) < 1e-10, ErrorKind::config,
          "pauli expectation has imaginary residue " + std::to_string(acc.imag()) + "; state is not valid");
  return acc.real();
}

void validate_density(const DensityMatrix& dm, double tol) {
  require(dm.rho.rows() == dm.rho.cols(), ErrorKind::config, "density matrix must be square");
  require(dm.rho.rows() == (Eigen::Index{1} << dm.n), ErrorKind::config, "density matrix size does not match n");
  double dev = (dm.rho - dm.rho.adjoint()).cwiseAbs().maxCoeff();
  require(dev <= tol, ErrorKind::config, "density matrix is not Hermitian");
  require(std::abs(dm.rho.trace().real() - 1.0) <= tol && std::abs(dm.rho.trace().imag()) <= tol,
          ErrorKind::config, "density matrix trace must be 1");
  Eigen::SelfAdjointEigenSolver<MatrixXc> es(dm.rho);
  require(es.eigenvalues().minCoeff() >= -tol, ErrorKind::config, "density matrix has a negative eigenvalue");
}

}  // namespace qebm
