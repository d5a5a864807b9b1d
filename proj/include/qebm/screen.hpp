#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "qebm/ebm.hpp"
#include "qebm/povm.hpp"
#include "qebm/types.hpp"

namespace qebm {

// family: poly | neural | symmetric. optimizer: auto | gd-backtracking |
// entropic-mirror | adam (auto picks gd for the convex families, adam for
// neural). Non-positive learning_rate / max_epochs resolve to per-optimizer
// defaults.
struct FitConfig {
  std::string family = "poly";
  int L = 2;
  int depth = 3;
  int width = 15;
  std::string encoding = "auto";
  bool spin_flip_symmetrize = false;
  Symmetry symmetry = Symmetry::none;
  std::string optimizer = "auto";
  double learning_rate = 0.0;
  double lr_decay = 0.1;
  int minibatch = 500;
  long max_epochs = 0;
  double grad_tol = 1e-7;
  double early_stop_delta = 1e-4;
  double l1_radius = 0.0;
  std::uint64_t seed = 0;
};

struct SpinFitReport {
  int spin = 0;
  double loss = 0.0;
  double grad_norm = 0.0;
  long epochs = 0;
  double wall_time_s = 0.0;
  long clip_events = 0;
};

struct FitReport {
  std::string family;
  std::string optimizer;
  Symmetry symmetry = Symmetry::none;
  std::vector<SpinFitReport> spins;
  double total_wall_time_s = 0.0;
};

struct LossEval {
  double loss = 0.0;
  VectorXd grad;
  long clip_events = 0;
};

// Screening loss of spin u at the family's current parameters:
// mean over rows (resp. expectation over the table) of exp(-<phi(sigma_u), f>).
LossEval is_loss_empirical(const SpinFamily& family, int u, const SampleSet& samples);
LossEval is_loss_exact(const SpinFamily& family, int u, const ProbTable& table);

std::pair<EnergyModel, FitReport> fit_model(const SampleSet& samples, const FitConfig& cfg);
std::pair<EnergyModel, FitReport> fit_model_exact(const ProbTable& table, const FitConfig& cfg);

}  // namespace qebm
