#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "qebm/ebm.hpp"
#include "qebm/povm.hpp"
#include "qebm/qsim.hpp"
#include "qebm/types.hpp"

namespace qebm {

struct EstimateResult {
  double mean = 0.0;
  double stderr_ = 0.0;  // standard error of the mean
  std::uint64_t n_used = 0;
};

// Mean of the per-sample product of single-site dual factors Tr(D_a O_i) over
// the observable's support. Each non-identity Pauli letter must lie in the
// span of the duals; sites marked 'I' contribute no factor.
EstimateResult estimate_observable(const SampleSet& samples, const DualSet& duals,
                                   std::string_view pauli);

// Sparse computational-basis expansion of a pure target, |psi> = sum c_x |x>.
// Basis indices are little-endian (site 0 = least significant bit).
struct SparseState {
  int n = 0;
  std::vector<std::pair<std::uint64_t, Complex>> terms;
};

SparseState ghz_plus_sparse(int n);
SparseState ghz_minus_sparse(int n);

// <psi|rho|psi> from samples: per sample sum_{x,y} conj(c_x) c_y prod_i
// D_{a_i}[x_i, y_i]. Requires an informationally complete POVM and a
// normalized target with at most 16 terms.
EstimateResult estimate_fidelity(const SampleSet& samples, const DualSet& duals,
                                 const SparseState& target);

// Hermitized sample mean of D_{a_i} (one site) or D_{a_i} (x) D_{a_j} (two
// sites). The first listed site is the slow index of the returned matrix.
// Requires an informationally complete POVM.
MatrixXc estimate_reduced_state(const SampleSet& samples, const DualSet& duals,
                                std::span<const int> sites);

// Exact counterpart via partial trace, same site ordering convention.
MatrixXc exact_reduced_state(const QuantumState& state, std::span<const int> sites);

// (1/2) sum |eig(a - b)| for Hermitian a, b.
double trace_distance(const MatrixXc& a, const MatrixXc& b);

struct TvdResult {
  double tvd = 0.0;    // empirical histogram of the samples vs the table
  double floor = 0.0;  // same statistic for a fresh equal-size draw from the table
};

TvdResult tvd_with_floor(const SampleSet& model_samples, const ProbTable& table,
                         std::uint64_t floor_seed);

struct OrderStrength {
  int order = 0;        // interaction order: centre spin plus |K| neighbours
  double strength = 0.0;
};

// Largest |coefficient| per interaction order across all blocks of a poly
// model. Spin-flip symmetrized blocks report the effective coefficients of
// the wrapped energy.
std::vector<OrderStrength> order_strength(const EnergyModel& model);

}  // namespace qebm
