#include "qebm/families.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

#include "qebm/rng.hpp"

namespace qebm {

std::vector<std::vector<int>> enumerate_subsets(int n, int max_size) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur;
  // by size, then lexicographic within a size
  for (int size = 0; size <= max_size; ++size) {
    std::function<void(int)> rec = [&](int start) {
      if (static_cast<int>(cur.size()) == size) {
        out.push_back(cur);
        return;
      }
      for (int i = start; i < n; ++i) {
        cur.push_back(i);
        rec(i + 1);
        cur.pop_back();
      }
    };
    rec(0);
  }
  return out;
}

std::vector<std::vector<int>> enumerate_compositions(int total, int parts) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur(static_cast<std::size_t>(parts), 0);
  std::function<void(int, int)> rec = [&](int pos, int left) {
    if (pos == parts - 1) {
      cur[static_cast<std::size_t>(pos)] = left;
      out.push_back(cur);
      return;
    }
    for (int c = 0; c <= left; ++c) {
      cur[static_cast<std::size_t>(pos)] = c;
      rec(pos + 1, left - c);
    }
  };
  if (parts >= 1) rec(0, total);
  return out;
}

PolyParams PolyParams::create(int q, int n_inputs, int L) {
  require(q >= 2, ErrorKind::config, "poly family needs q >= 2");
  require(n_inputs >= 0, ErrorKind::config, "poly family needs n_inputs >= 0");
  require(L >= 1 && L - 1 <= n_inputs, ErrorKind::config,
          "poly order L must satisfy 1 <= L <= n_inputs + 1 (full order)");
  PolyParams p;
  p.q = q;
  p.n_inputs = n_inputs;
  p.L = L;
  auto subsets = enumerate_subsets(n_inputs, L - 1);
  if (q == 2) {
    p.key_sites = std::move(subsets);
    p.key_assign.assign(p.key_sites.size(), {});
    p.coeffs.assign(p.key_sites.size(), 0.0);
  } else {
    for (const auto& k : subsets) {
      std::vector<Symbol> assign(k.size(), Symbol{1});
      // odometer over assignments, last position fastest
      for (;;) {
        p.key_sites.push_back(k);
        p.key_assign.push_back(assign);
        int pos = static_cast<int>(assign.size()) - 1;
        while (pos >= 0) {
          if (assign[static_cast<std::size_t>(pos)] < q) {
            ++assign[static_cast<std::size_t>(pos)];
            break;
          }
          assign[static_cast<std::size_t>(pos)] = 1;
          --pos;
        }
        if (pos < 0) break;
      }
    }
    p.coeffs.assign(p.key_sites.size() * static_cast<std::size_t>(q), 0.0);
  }
  return p;
}

void PolyParams::basis_into(std::span<const Symbol> x, std::span<double> out) const {
  for (std::size_t k = 0; k < key_sites.size(); ++k) {
    double v = 1.0;
    if (q == 2) {
      for (int site : key_sites[k]) v *= spin_of(x[static_cast<std::size_t>(site)]);
    } else {
      const auto& assign = key_assign[k];
      for (std::size_t j = 0; j < key_sites[k].size(); ++j)
        v *= centered_delta(assign[j], x[static_cast<std::size_t>(key_sites[k][j])], q);
    }
    out[k] = v;
  }
}

NeuralEncoding neural_encoding_from_label(std::string_view label, int q) {
  if (label == "auto") return q == 2 ? NeuralEncoding::spin : NeuralEncoding::centered_onehot;
  if (label == "spin") return NeuralEncoding::spin;
  if (label == "centered-onehot") return NeuralEncoding::centered_onehot;
  if (label == "raw") return NeuralEncoding::raw;
  fail(ErrorKind::config, "unknown neural encoding '" + std::string(label) + "'");
}

std::string neural_encoding_label(NeuralEncoding enc) {
  switch (enc) {
    case NeuralEncoding::spin: return "spin";
    case NeuralEncoding::centered_onehot: return "centered-onehot";
    default: return "raw";
  }
}

NeuralParams NeuralParams::create(int q, int n_inputs, int depth, int width, NeuralEncoding encoding,
                                  std::uint64_t seed) {
  require(q >= 2, ErrorKind::config, "neural family needs q >= 2");
  require(n_inputs >= 1, ErrorKind::config, "neural family needs n_inputs >= 1");
  require(depth >= 1, ErrorKind::config, "neural depth must be >= 1");
  require(width >= 1, ErrorKind::config, "neural width must be >= 1");
  require(encoding != NeuralEncoding::spin || q == 2, ErrorKind::config,
          "spin encoding requires q == 2");
  NeuralParams p;
  p.q = q;
  p.n_inputs = n_inputs;
  p.depth = depth;
  p.width = width;
  p.encoding = encoding;
  auto eng = make_stream(seed, "neural-init");
  int in_dim = p.input_dim();
  for (int l = 0; l <= depth; ++l) {
    int fan_in = l == 0 ? in_dim : width;
    int fan_out = l == depth ? q : width;
    double r = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    MatrixXd w(fan_out, fan_in);
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = (2.0 * uniform01(eng) - 1.0) * r;
    p.weights.push_back(std::move(w));
    p.biases.push_back(VectorXd::Zero(fan_out));
  }
  return p;
}

int NeuralParams::input_dim() const {
  switch (encoding) {
    case NeuralEncoding::spin: return n_inputs;
    case NeuralEncoding::centered_onehot: return n_inputs * q;
    default: return n_inputs;
  }
}

int NeuralParams::param_count() const {
  int total = 0;
  for (std::size_t l = 0; l < weights.size(); ++l)
    total += static_cast<int>(weights[l].size() + biases[l].size());
  return total;
}

void NeuralParams::encode_into(std::span<const Symbol> x, VectorXd& out) const {
  out.resize(input_dim());
  switch (encoding) {
    case NeuralEncoding::spin:
      for (int j = 0; j < n_inputs; ++j) out(j) = spin_of(x[static_cast<std::size_t>(j)]);
      break;
    case NeuralEncoding::centered_onehot:
      for (int j = 0; j < n_inputs; ++j)
        for (int b = 1; b <= q; ++b)
          out(j * q + b - 1) = centered_delta(b, x[static_cast<std::size_t>(j)], q);
      break;
    case NeuralEncoding::raw:
      for (int j = 0; j < n_inputs; ++j) out(j) = static_cast<double>(x[static_cast<std::size_t>(j)]);
      break;
  }
}

void NeuralParams::forward(const VectorXd& x_enc, VectorXd& f_out, NeuralStack& st) const {
  std::size_t layers = weights.size();
  st.z.resize(layers);
  st.h.resize(layers + 1);
  st.h[0] = x_enc;
  for (std::size_t l = 0; l < layers; ++l) {
    st.z[l].noalias() = weights[l] * st.h[l];
    st.z[l] += biases[l];
    if (l + 1 < layers) {
      st.h[l + 1] = st.z[l].unaryExpr([](double v) { return swish(v); });
    } else {
      st.h[l + 1] = st.z[l];
    }
  }
  f_out = st.h[layers];
}

void NeuralParams::backward(const VectorXd& cot, std::span<double> grad, NeuralStack& st) const {
  std::size_t layers = weights.size();
  st.delta.resize(layers);
  st.delta[layers - 1] = cot;
  for (std::size_t l = layers - 1; l-- > 0;) {
    st.delta[l].noalias() = weights[l + 1].transpose() * st.delta[l + 1];
    st.delta[l].array() *= st.z[l].unaryExpr([](double v) { return swish_deriv(v); }).array();
  }
  std::size_t off = 0;
  for (std::size_t l = 0; l < layers; ++l) {
    Eigen::Map<MatrixXd> gw(grad.data() + off, weights[l].rows(), weights[l].cols());
    gw.noalias() += st.delta[l] * st.h[l].transpose();
    off += static_cast<std::size_t>(weights[l].size());
    Eigen::Map<VectorXd> gb(grad.data() + off, biases[l].size());
    gb += st.delta[l];
    off += static_cast<std::size_t>(biases[l].size());
  }
}

SymParams SymParams::create(int q, int n_inputs) {
  require(q >= 2 && q <= 8, ErrorKind::config, "symmetric family supports 2 <= q <= 8");
  require(n_inputs >= 0, ErrorKind::config, "symmetric family needs n_inputs >= 0");
  SymParams p;
  p.q = q;
  p.n_inputs = n_inputs;
  p.keys = enumerate_compositions(n_inputs, q);
  p.coeffs.assign(p.keys.size() * static_cast<std::size_t>(q), 0.0);
  p.rebuild_index();
  return p;
}

namespace {
std::uint64_t pack_counts(std::span<const int> counts) {
  std::uint64_t packed = 0;
  for (std::size_t i = 0; i < counts.size(); ++i)
    packed |= static_cast<std::uint64_t>(counts[i] & 0xff) << (8 * i);
  return packed;
}
}  // namespace

void SymParams::rebuild_index() {
  key_index.clear();
  key_index.reserve(keys.size());
  for (std::size_t k = 0; k < keys.size(); ++k) key_index.emplace(pack_counts(keys[k]), static_cast<int>(k));
}

int SymParams::key_of(std::span<const Symbol> x) const {
  int counts[8] = {0};
  for (Symbol s : x) ++counts[s - 1];
  auto it = key_index.find(pack_counts({counts, static_cast<std::size_t>(q)}));
  require(it != key_index.end(), ErrorKind::config, "count vector not found in symmetric table");
  return it->second;
}

int SymParams::flipped_key(int key) const {
  std::vector<int> rev(keys[static_cast<std::size_t>(key)].rbegin(), keys[static_cast<std::size_t>(key)].rend());
  auto it = key_index.find(pack_counts(rev));
  require(it != key_index.end(), ErrorKind::config, "flipped count vector not found in symmetric table");
  return it->second;
}

int SpinFamily::q() const {
  return std::visit([](const auto& p) { return p.q; }, params);
}

int SpinFamily::n_inputs() const {
  return std::visit([](const auto& p) { return p.n_inputs; }, params);
}

int SpinFamily::param_count() const {
  return std::visit([](const auto& p) { return p.param_count(); }, params);
}

std::string SpinFamily::family_label() const {
  if (std::holds_alternative<PolyParams>(params)) return "poly";
  if (std::holds_alternative<NeuralParams>(params)) return "neural";
  return "symmetric";
}

void SpinFamily::get_params(std::span<double> out) const {
  require(static_cast<int>(out.size()) == param_count(), ErrorKind::config, "parameter buffer size mismatch");
  if (const auto* p = std::get_if<PolyParams>(&params)) {
    std::copy(p->coeffs.begin(), p->coeffs.end(), out.begin());
  } else if (const auto* s = std::get_if<SymParams>(&params)) {
    std::copy(s->coeffs.begin(), s->coeffs.end(), out.begin());
  } else {
    const auto& nn = std::get<NeuralParams>(params);
    std::size_t off = 0;
    for (std::size_t l = 0; l < nn.weights.size(); ++l) {
      std::copy(nn.weights[l].data(), nn.weights[l].data() + nn.weights[l].size(), out.begin() + off);
      off += static_cast<std::size_t>(nn.weights[l].size());
      std::copy(nn.biases[l].data(), nn.biases[l].data() + nn.biases[l].size(), out.begin() + off);
      off += static_cast<std::size_t>(nn.biases[l].size());
    }
  }
}

void SpinFamily::set_params(std::span<const double> in) {
  require(static_cast<int>(in.size()) == param_count(), ErrorKind::config, "parameter buffer size mismatch");
  if (auto* p = std::get_if<PolyParams>(&params)) {
    std::copy(in.begin(), in.end(), p->coeffs.begin());
  } else if (auto* s = std::get_if<SymParams>(&params)) {
    std::copy(in.begin(), in.end(), s->coeffs.begin());
  } else {
    auto& nn = std::get<NeuralParams>(params);
    std::size_t off = 0;
    for (std::size_t l = 0; l < nn.weights.size(); ++l) {
      std::copy(in.begin() + off, in.begin() + off + nn.weights[l].size(), nn.weights[l].data());
      off += static_cast<std::size_t>(nn.weights[l].size());
      std::copy(in.begin() + off, in.begin() + off + nn.biases[l].size(), nn.biases[l].data());
      off += static_cast<std::size_t>(nn.biases[l].size());
    }
  }
}

void SpinFamily::project_gauge() {
  auto project = [](std::vector<double>& coeffs, int q) {
    for (std::size_t k = 0; k + q <= coeffs.size(); k += static_cast<std::size_t>(q)) {
      double mean = 0.0;
      for (int a = 0; a < q; ++a) mean += coeffs[k + static_cast<std::size_t>(a)];
      mean /= q;
      for (int a = 0; a < q; ++a) coeffs[k + static_cast<std::size_t>(a)] -= mean;
    }
  };
  if (auto* p = std::get_if<PolyParams>(&params)) {
    if (p->q > 2) project(p->coeffs, p->q);
  } else if (auto* s = std::get_if<SymParams>(&params)) {
    project(s->coeffs, s->q);
  }
}

namespace {

struct Branch {
  std::vector<double>* basis;
  int* key;
  NeuralStack* nn;
};

void value_one(const FamilyParams& params, std::span<const Symbol> x, VectorXd& f_out, Branch br) {
  if (const auto* p = std::get_if<PolyParams>(&params)) {
    br.basis->resize(p->key_sites.size());
    p->basis_into(x, *br.basis);
    f_out.setZero(p->q);
    if (p->q == 2) {
      double F = 0.0;
      for (std::size_t k = 0; k < p->coeffs.size(); ++k) F += p->coeffs[k] * (*br.basis)[k];
      f_out(0) = F;
      f_out(1) = -F;
    } else {
      for (std::size_t k = 0; k < p->key_sites.size(); ++k) {
        double b = (*br.basis)[k];
        for (int a = 0; a < p->q; ++a) f_out(a) += p->coeffs[k * static_cast<std::size_t>(p->q) + static_cast<std::size_t>(a)] * b;
      }
    }
  } else if (const auto* s = std::get_if<SymParams>(&params)) {
    int key = s->key_of(x);
    *br.key = key;
    f_out.resize(s->q);
    for (int a = 0; a < s->q; ++a)
      f_out(a) = s->coeffs[static_cast<std::size_t>(key) * static_cast<std::size_t>(s->q) + static_cast<std::size_t>(a)];
  } else {
    const auto& nn = std::get<NeuralParams>(params);
    nn.encode_into(x, br.nn->x);
    nn.forward(br.nn->x, f_out, *br.nn);
  }
}

void backward_one(const FamilyParams& params, const VectorXd& w, std::span<double> grad, Branch br) {
  if (const auto* p = std::get_if<PolyParams>(&params)) {
    if (p->q == 2) {
      double wd = w(0) - w(1);
      for (std::size_t k = 0; k < p->coeffs.size(); ++k) grad[k] += wd * (*br.basis)[k];
    } else {
      for (std::size_t k = 0; k < p->key_sites.size(); ++k) {
        double b = (*br.basis)[k];
        for (int a = 0; a < p->q; ++a)
          grad[k * static_cast<std::size_t>(p->q) + static_cast<std::size_t>(a)] += w(a) * b;
      }
    }
  } else if (const auto* s = std::get_if<SymParams>(&params)) {
    std::size_t base = static_cast<std::size_t>(*br.key) * static_cast<std::size_t>(s->q);
    for (int a = 0; a < s->q; ++a) grad[base + static_cast<std::size_t>(a)] += w(a);
  } else {
    const auto& nn = std::get<NeuralParams>(params);
    nn.backward(w, grad, *br.nn);
  }
}

}  // namespace

void SpinFamily::value(std::span<const Symbol> x, VectorXd& f_out, FamilyWorkspace& ws) const {
  require(static_cast<int>(x.size()) == n_inputs(), ErrorKind::config, "input size mismatch");
  Branch main{&ws.basis_a, &ws.key_a, &ws.nn_a};
  value_one(params, x, f_out, main);
  if (!spin_flip_symmetrized) return;
  int qq = q();
  ws.flipped.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) ws.flipped[i] = flip_symbol(x[i], qq);
  Branch flip{&ws.basis_b, &ws.key_b, &ws.nn_b};
  value_one(params, ws.flipped, ws.f_b, flip);
  for (int a = 0; a < qq; ++a) f_out(a) += ws.f_b(qq - 1 - a);
}

void SpinFamily::backward(std::span<const Symbol> x, const VectorXd& w, std::span<double> grad,
                          FamilyWorkspace& ws) const {
  Branch main{&ws.basis_a, &ws.key_a, &ws.nn_a};
  backward_one(params, w, grad, main);
  if (!spin_flip_symmetrized) return;
  int qq = q();
  ws.cot.resize(qq);
  for (int a = 0; a < qq; ++a) ws.cot(a) = w(qq - 1 - a);
  Branch flip{&ws.basis_b, &ws.key_b, &ws.nn_b};
  backward_one(params, ws.cot, grad, flip);
}

void SpinFamily::validate() const {
  if (spin_flip_symmetrized)
    require(q() == 2, ErrorKind::config, "spin-flip symmetrization requires q == 2");
  if (const auto* nn = std::get_if<NeuralParams>(&params)) {
    require(nn->encoding != NeuralEncoding::spin || nn->q == 2, ErrorKind::config,
            "spin encoding requires q == 2");
    require(static_cast<int>(nn->weights.size()) == nn->depth + 1, ErrorKind::config,
            "neural layer count mismatch");
  }
}

}  // namespace qebm
