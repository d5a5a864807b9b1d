#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "qebm/types.hpp"

namespace qebm {

// phi_b(x) = [x == b] - 1/q, the centered delta basis of gauge-fixed outputs.
inline double centered_delta(int b, Symbol x, int q) {
  return (static_cast<int>(x) == b ? 1.0 : 0.0) - 1.0 / static_cast<double>(q);
}

inline double spin_of(Symbol s) { return s == 1 ? 1.0 : -1.0; }
inline Symbol flip_symbol(Symbol s, int q) { return static_cast<Symbol>(q + 1 - s); }

inline double swish(double x) {
  double sig = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
  return x * sig;
}

inline double swish_deriv(double x) {
  double sig = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
  return sig * (1.0 + x * (1.0 - sig));
}

// Interaction terms up to total order L. For q=2 a term couples the centre
// spin to the +/-1 product over a neighbour subset K (|K| <= L-1); for q>2
// each (K, assignment) key carries one coefficient per output symbol with a
// zero-sum gauge over that index.
struct PolyParams {
  int q = 2;
  int n_inputs = 0;
  int L = 1;
  std::vector<std::vector<int>> key_sites;      // neighbour positions, ascending
  std::vector<std::vector<Symbol>> key_assign;  // empty vectors when q == 2
  std::vector<double> coeffs;                   // q==2: per key; q>2: key-major [k*q + a]

  static PolyParams create(int q, int n_inputs, int L);
  int param_count() const {
    return static_cast<int>(q == 2 ? key_sites.size() : key_sites.size() * static_cast<std::size_t>(q));
  }
  // q==2 monomials (or q>2 centered-delta products) per key, written to out.
  void basis_into(std::span<const Symbol> x, std::span<double> out) const;
};

enum class NeuralEncoding { spin, centered_onehot, raw };

NeuralEncoding neural_encoding_from_label(std::string_view label, int q);
std::string neural_encoding_label(NeuralEncoding enc);

struct NeuralStack {
  VectorXd x;
  std::vector<VectorXd> z;  // pre-activations per affine layer
  std::vector<VectorXd> h;  // activations (h[0] = input)
  std::vector<VectorXd> delta;
};

// depth hidden layers of uniform width with swish activations, linear R^q head.
struct NeuralParams {
  int q = 2;
  int n_inputs = 0;
  int depth = 1;
  int width = 1;
  NeuralEncoding encoding = NeuralEncoding::spin;
  std::vector<MatrixXd> weights;  // depth+1 entries
  std::vector<VectorXd> biases;

  static NeuralParams create(int q, int n_inputs, int depth, int width, NeuralEncoding encoding,
                             std::uint64_t seed);
  int input_dim() const;
  int param_count() const;
  void encode_into(std::span<const Symbol> x, VectorXd& out) const;
  // forward leaves activations in the stack; backward reads them back.
  void forward(const VectorXd& x_enc, VectorXd& f_out, NeuralStack& st) const;
  void backward(const VectorXd& cot, std::span<double> grad, NeuralStack& st) const;
};

// Exact-sum symmetric table: one R^q row per count vector of the neighbours.
struct SymParams {
  int q = 2;
  int n_inputs = 0;
  std::vector<std::vector<int>> keys;  // compositions of n_inputs into q parts
  std::vector<double> coeffs;          // key-major [k*q + a], zero-sum gauge over a
  std::unordered_map<std::uint64_t, int> key_index;

  static SymParams create(int q, int n_inputs);
  int param_count() const { return static_cast<int>(keys.size()) * q; }
  int key_of(std::span<const Symbol> x) const;
  int flipped_key(int key) const;  // q==2 reversal partner
  void rebuild_index();
};

using FamilyParams = std::variant<PolyParams, NeuralParams, SymParams>;

struct FamilyWorkspace {
  std::vector<Symbol> flipped;
  std::vector<Symbol> neigh;
  VectorXd f_a, f_b, cot;
  std::vector<double> basis_a, basis_b;
  int key_a = -1, key_b = -1;
  NeuralStack nn_a, nn_b;
};

// One spin's local energy f: [q]^{n-1} -> R^q, optionally wrapped so that the
// induced energy term <phi(s), f(x)> is invariant under the global symbol
// swap (s, x) -> (flip s, flip x).
struct SpinFamily {
  FamilyParams params;
  bool spin_flip_symmetrized = false;

  int q() const;
  int n_inputs() const;
  int param_count() const;
  std::string family_label() const;

  void get_params(std::span<double> out) const;
  void set_params(std::span<const double> in);
  void project_gauge();

  // Fills f_out (size q) and caches forward state in ws.
  void value(std::span<const Symbol> x, VectorXd& f_out, FamilyWorkspace& ws) const;
  // Accumulates d<w, f(x)>/dtheta into grad. Must follow value() on the same x/ws.
  void backward(std::span<const Symbol> x, const VectorXd& w, std::span<double> grad,
                FamilyWorkspace& ws) const;

  void validate() const;
};

std::vector<std::vector<int>> enumerate_subsets(int n, int max_size);
std::vector<std::vector<int>> enumerate_compositions(int total, int parts);

}  // namespace qebm
