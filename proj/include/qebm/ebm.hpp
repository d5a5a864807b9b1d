#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qebm/families.hpp"
#include "qebm/povm.hpp"
#include "qebm/types.hpp"

namespace qebm {

enum class Symmetry { none, translation, permutation };

Symmetry symmetry_from_label(std::string_view label);
std::string symmetry_label(Symmetry s);

// mu(sigma) = exp(E(sigma))/Z with per-spin local energies
// <phi(sigma_u), f_u(sigma_without_u)>. Shared-symmetry models keep a single
// parameter block in spins[0].
struct EnergyModel {
  int n = 0;
  int q = 0;
  Symmetry symmetry = Symmetry::none;
  std::vector<SpinFamily> spins;

  const SpinFamily& block_for(int u) const;
  SpinFamily& block_for(int u);

  // Canonical neighbour order: ascending site order for none/permutation,
  // ring-rotated (u+1, u+2, ...) for translation.
  void neighbor_config(int u, std::span<const Symbol> config, std::span<Symbol> out) const;

  // P(sigma_u = a | rest), softmax over <phi(a), f_u>.
  void conditional(int u, std::span<const Symbol> config, std::span<double> out_probs,
                   FamilyWorkspace& ws) const;

  void validate() const;
};

struct GibbsConfig {
  int chains = 1;
  long burn_in = -1;  // sweeps; -1 -> 10 n
  long thin = -1;     // sweeps between rows; -1 -> max(1, n/2)
  std::uint64_t total = 0;
  std::uint64_t seed = 0;
  std::string provenance;
};

// Systematic-scan Gibbs sampler. Chains run independently (one RNG stream per
// chain) and rows interleave round-robin, so output is reproducible for a
// given seed regardless of thread scheduling.
SampleSet gibbs_sample(const EnergyModel& model, const GibbsConfig& cfg);

}  // namespace qebm
