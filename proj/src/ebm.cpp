#include "qebm/ebm.hpp"

#include <algorithm>
#include <cmath>

#include "qebm/parallel.hpp"
#include "qebm/rng.hpp"

namespace qebm {

Symmetry symmetry_from_label(std::string_view label) {
  if (label == "none") return Symmetry::none;
  if (label == "translation") return Symmetry::translation;
  if (label == "permutation") return Symmetry::permutation;
  fail(ErrorKind::config, "unknown symmetry '" + std::string(label) + "'");
}

std::string symmetry_label(Symmetry s) {
  switch (s) {
    case Symmetry::none: return "none";
    case Symmetry::translation: return "translation";
    default: return "permutation";
  }
}

const SpinFamily& EnergyModel::block_for(int u) const {
  return symmetry == Symmetry::none ? spins[static_cast<std::size_t>(u)] : spins[0];
}

SpinFamily& EnergyModel::block_for(int u) {
  return symmetry == Symmetry::none ? spins[static_cast<std::size_t>(u)] : spins[0];
}

void EnergyModel::neighbor_config(int u, std::span<const Symbol> config, std::span<Symbol> out) const {
  if (symmetry == Symmetry::translation) {
    for (int j = 0; j < n - 1; ++j)
      out[static_cast<std::size_t>(j)] = config[static_cast<std::size_t>((u + 1 + j) % n)];
  } else {
    int w = 0;
    for (int i = 0; i < n; ++i)
      if (i != u) out[static_cast<std::size_t>(w++)] = config[static_cast<std::size_t>(i)];
  }
}

void EnergyModel::conditional(int u, std::span<const Symbol> config, std::span<double> out_probs,
                              FamilyWorkspace& ws) const {
  require(u >= 0 && u < n, ErrorKind::config, "spin index out of range");
  require(static_cast<int>(config.size()) == n, ErrorKind::config, "configuration size mismatch");
  require(static_cast<int>(out_probs.size()) == q, ErrorKind::config, "probability buffer size mismatch");
  ws.neigh.resize(static_cast<std::size_t>(n - 1));
  neighbor_config(u, config, ws.neigh);
  const SpinFamily& fam = block_for(u);
  fam.value(ws.neigh, ws.f_a, ws);
  // softmax of <phi(a), f>; the mean shift in phi cancels, max subtraction
  // keeps the exponentials in range
  double mx = ws.f_a.maxCoeff();
  double z = 0.0;
  for (int a = 0; a < q; ++a) {
    double e = std::exp(ws.f_a(a) - mx);
    out_probs[static_cast<std::size_t>(a)] = e;
    z += e;
  }
  for (int a = 0; a < q; ++a) out_probs[static_cast<std::size_t>(a)] /= z;
}

void EnergyModel::validate() const {
  require(n >= 1, ErrorKind::config, "model needs n >= 1");
  require(q >= 2, ErrorKind::config, "model needs q >= 2");
  std::size_t expected = symmetry == Symmetry::none ? static_cast<std::size_t>(n) : std::size_t{1};
  require(spins.size() == expected, ErrorKind::config,
          "model holds " + std::to_string(spins.size()) + " parameter blocks, expected " +
              std::to_string(expected));
  for (const auto& s : spins) {
    s.validate();
    require(s.q() == q, ErrorKind::config, "family q does not match model q");
    require(s.n_inputs() == n - 1, ErrorKind::config, "family input count does not match n - 1");
  }
  if (symmetry == Symmetry::permutation)
    require(std::holds_alternative<SymParams>(spins[0].params), ErrorKind::config,
            "permutation symmetry requires the symmetric family");
}

SampleSet gibbs_sample(const EnergyModel& model, const GibbsConfig& cfg) {
  model.validate();
  require(cfg.chains >= 1, ErrorKind::config, "chains must be >= 1");
  require(cfg.total >= 1, ErrorKind::config, "total rows must be >= 1");
  long burn_in = cfg.burn_in >= 0 ? cfg.burn_in : 10L * model.n;
  long thin = cfg.thin >= 0 ? cfg.thin : std::max(1L, static_cast<long>(model.n) / 2);
  require(thin >= 1, ErrorKind::config, "thin must be >= 1");

  SampleSet out;
  out.n = model.n;
  out.q = model.q;
  out.provenance = cfg.provenance;
  std::replace(out.provenance.begin(), out.provenance.end(), '\n', ' ');
  out.data.resize(cfg.total * static_cast<std::uint64_t>(model.n));

  std::uint64_t chains = static_cast<std::uint64_t>(cfg.chains);
  parallel_for(chains, [&](std::size_t cb, std::size_t ce) {
    FamilyWorkspace ws;
    std::vector<Symbol> config(static_cast<std::size_t>(model.n));
    std::vector<double> probs(static_cast<std::size_t>(model.q));
    for (std::size_t c = cb; c < ce; ++c) {
      auto eng = make_stream(cfg.seed, "gibbs-chain", c);
      for (auto& s : config)
        s = static_cast<Symbol>(1 + uniform_below(eng, static_cast<std::uint64_t>(model.q)));
      auto sweep = [&] {
        for (int u = 0; u < model.n; ++u) {
          model.conditional(u, config, probs, ws);
          double r = uniform01(eng);
          double acc = 0.0;
          Symbol drawn = static_cast<Symbol>(model.q);
          for (int a = 0; a < model.q; ++a) {
            acc += probs[static_cast<std::size_t>(a)];
            if (r < acc) {
              drawn = static_cast<Symbol>(a + 1);
              break;
            }
          }
          config[static_cast<std::size_t>(u)] = drawn;
        }
      };
      for (long s = 0; s < burn_in; ++s) sweep();
      // row r belongs to chain r % chains; consecutive rows of a chain are
      // separated by `thin` sweeps
      for (std::uint64_t r = c; r < cfg.total; r += chains) {
        for (long s = 0; s < thin; ++s) sweep();
        std::copy(config.begin(), config.end(), out.row(r).begin());
      }
    }
  });
  return out;
}

}  // namespace qebm
