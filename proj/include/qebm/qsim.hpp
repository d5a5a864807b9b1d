#pragma once

#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "qebm/types.hpp"

namespace qebm {

// Qubit 0 is the least significant bit of every basis index, and character i
// of a Pauli string acts on qubit i.

struct Edge {
  int i = 0;
  int j = 0;
  double coupling = 0.0;
};

struct PauliTerm {
  std::string ops;  // one of I X Y Z per qubit
  double coeff = 0.0;
};

enum class HamiltonianKind { tim, heisenberg, custom_pauli_sum };

struct HamiltonianSpec {
  int n = 0;
  HamiltonianKind kind = HamiltonianKind::tim;
  std::vector<Edge> edges;       // tim, heisenberg
  double g = 0.0;                // tim transverse field
  std::vector<PauliTerm> terms;  // custom_pauli_sum
};

struct PureState {
  int n = 0;
  VectorXc amps;
};

struct DensityMatrix {
  int n = 0;
  MatrixXc rho;
};

using QuantumState = std::variant<PureState, DensityMatrix>;

int state_sites(const QuantumState& state);

// Uniform ferromagnetic (J=-1) or antiferromagnetic (J=+1) open chain helper.
HamiltonianSpec tim_chain(int n, double j, double g);

MatrixXc build_hamiltonian(const HamiltonianSpec& spec);

// exp(-beta H)/Z via eigendecomposition; the smallest eigenvalue is shifted
// out before exponentiation so large beta cannot overflow.
DensityMatrix thermal_state(const MatrixXc& h, double beta);

// Fails when the spectral gap is below degeneracy_tol. The returned vector is
// phase-fixed: its largest-magnitude amplitude is real and positive.
PureState ground_state(const MatrixXc& h, double degeneracy_tol = 1e-8);

PureState ghz_plus(int n);
PureState ghz_minus(int n);
// (1-p) |ghz+><ghz+| + p |ghz-><ghz-|
DensityMatrix ghz_mixture(int n, double p);

double pauli_expectation_exact(const QuantumState& state, std::string_view paulis);

void validate_density(const DensityMatrix& dm, double tol = 1e-10);

}  // namespace qebm
