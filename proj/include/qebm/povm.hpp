#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "qebm/qsim.hpp"
#include "qebm/types.hpp"

namespace qebm {

// Single-qubit POVM, applied identically at every site.
struct Povm {
  int q = 0;
  std::string label;
  std::vector<Matrix2c> elements;
};

struct DualSet {
  int q = 0;
  std::string label;
  std::vector<Matrix2c> duals;
  MatrixXd gram;  // C_ab = Tr(M_a M_b)
  bool informationally_complete = false;
};

// Exact outcome distribution over [q]^n, indexed little-endian: the symbol at
// site 0 is the least significant digit.
struct ProbTable {
  int n = 0;
  int q = 0;
  std::vector<double> probs;

  std::uint64_t entries() const { return probs.size(); }
  std::uint64_t index_of(std::span<const Symbol> symbols) const;
  void decode(std::uint64_t index, std::span<Symbol> out) const;
};

// Row-major m x n matrix of outcome symbols in 1..q.
struct SampleSet {
  int n = 0;
  int q = 0;
  std::string provenance;
  std::vector<Symbol> data;

  std::uint64_t rows() const { return n == 0 ? 0 : data.size() / static_cast<std::uint64_t>(n); }
  std::span<const Symbol> row(std::uint64_t t) const {
    return {data.data() + t * static_cast<std::uint64_t>(n), static_cast<std::size_t>(n)};
  }
  std::span<Symbol> row(std::uint64_t t) {
    return {data.data() + t * static_cast<std::uint64_t>(n), static_cast<std::size_t>(n)};
  }
};

// kind: "computational" (q=2), "tetrahedral" (q=4), or "rotated-tetrahedral"
// (q=4, Haar rotation drawn from seed).
Povm build_povm(std::string_view kind, std::uint64_t seed = 0);

DualSet dual_operators(const Povm& povm);

ProbTable outcome_distribution(const QuantumState& state, const Povm& povm,
                               std::uint64_t max_entries = kMaxTableEntries);

SampleSet sample_outcomes(const ProbTable& table, std::uint64_t m, std::uint64_t seed,
                          std::string provenance);

// QR of a seeded complex Gaussian matrix, diagonal phases of R folded in.
MatrixXc haar_unitary(int dim, std::uint64_t seed);

}  // namespace qebm
