#include "qebm/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

#include "qebm/rng.hpp"

namespace qebm {

using nlohmann::json;

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorKind::io, "cannot open '" + path + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  require(!in.bad(), ErrorKind::io, "read failed on '" + path + "'");
  return buf.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), ErrorKind::io, "cannot open '" + path + "' for writing");
  out << content;
  out.flush();
  require(out.good(), ErrorKind::io, "write failed on '" + path + "'");
}

namespace {

json parse_json(const std::string& text, ErrorKind kind, const std::string& what) {
  json j = json::parse(text, nullptr, false);
  require(!j.is_discarded(), kind, what + " is not valid JSON");
  return j;
}

// missing keys and type mismatches surface as nlohmann exceptions; fold them
// into the local error taxonomy
template <typename Fn>
auto map_json_errors(ErrorKind kind, const std::string& what, Fn&& fn) {
  try {
    return fn();
  } catch (const Error&) {
    throw;
  } catch (const json::exception& e) {
    fail(kind, what + ": " + e.what());
  }
}

void reject_unknown(const json& obj, std::initializer_list<const char*> known,
                    const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : known)
      if (it.key() == k) {
        ok = true;
        break;
      }
    require(ok, ErrorKind::config, "unknown field '" + it.key() + "' in " + where);
  }
}

double as_number(const json& j, const std::string& name) {
  require(j.is_number(), ErrorKind::config, "field '" + name + "' must be a number");
  return j.get<double>();
}

long as_integer(const json& j, const std::string& name) {
  require(j.is_number_integer(), ErrorKind::config, "field '" + name + "' must be an integer");
  return j.get<long>();
}

std::string as_string(const json& j, const std::string& name) {
  require(j.is_string(), ErrorKind::config, "field '" + name + "' must be a string");
  return j.get<std::string>();
}

}  // namespace

void save_samples(const SampleSet& samples, const std::string& path) {
  std::string prov = samples.provenance;
  for (char& c : prov)
    if (c == '\n' || c == '\r') c = ' ';
  std::ostringstream out;
  out << "#qebm-samples v1 q=" << samples.q << " n=" << samples.n << " m=" << samples.rows()
      << " provenance=" << prov << "\n";
  for (std::uint64_t t = 0; t < samples.rows(); ++t) {
    auto row = samples.row(t);
    for (int i = 0; i < samples.n; ++i) {
      if (i) out << ' ';
      out << static_cast<int>(row[static_cast<std::size_t>(i)]);
    }
    out << '\n';
  }
  write_text_file(path, out.str());
}

SampleSet load_samples(const std::string& path) {
  std::string text = read_text_file(path);
  std::size_t eol = text.find('\n');
  require(eol != std::string::npos, ErrorKind::io, "'" + path + "': missing sample header line");
  std::string header = text.substr(0, eol);

  long q = 0, n = 0;
  std::uint64_t m = 0;
  std::string prov;
  {
    std::istringstream hs(header);
    std::string magic, version, tok;
    hs >> magic >> version;
    require(magic == "#qebm-samples" && version == "v1", ErrorKind::io,
            "'" + path + "': not a qebm-samples v1 file");
    auto keyed = [&](const std::string& key) -> std::string {
      std::string t;
      hs >> t;
      require(t.rfind(key + "=", 0) == 0, ErrorKind::io,
              "'" + path + "': header is missing " + key + "=");
      return t.substr(key.size() + 1);
    };
    try {
      q = std::stol(keyed("q"));
      n = std::stol(keyed("n"));
      m = std::stoull(keyed("m"));
    } catch (const std::exception&) {
      fail(ErrorKind::io, "'" + path + "': malformed header numbers");
    }
    std::size_t pp = header.find("provenance=");
    require(pp != std::string::npos, ErrorKind::io, "'" + path + "': header is missing provenance=");
    prov = header.substr(pp + std::string("provenance=").size());
  }
  require(q >= 2 && q <= 255, ErrorKind::io, "'" + path + "': q out of range");
  require(n >= 1, ErrorKind::io, "'" + path + "': n out of range");

  SampleSet out;
  out.q = static_cast<int>(q);
  out.n = static_cast<int>(n);
  out.provenance = prov;
  out.data.reserve(m * static_cast<std::uint64_t>(n));

  const char* p = text.data() + eol + 1;
  const char* end = text.data() + text.size();
  std::uint64_t count = 0;
  while (true) {
    while (p < end && (*p == ' ' || *p == '\n' || *p == '\r' || *p == '\t')) ++p;
    if (p == end) break;
    int value = 0;
    auto [next, ec] = std::from_chars(p, end, value);
    require(ec == std::errc{} && next != p, ErrorKind::io,
            "'" + path + "': malformed symbol near offset " + std::to_string(p - text.data()));
    require(value >= 1 && value <= q, ErrorKind::io,
            "'" + path + "': symbol " + std::to_string(value) + " outside 1.." + std::to_string(q));
    out.data.push_back(static_cast<Symbol>(value));
    ++count;
    p = next;
  }
  require(count == m * static_cast<std::uint64_t>(n), ErrorKind::io,
          "'" + path + "': expected " + std::to_string(m * static_cast<std::uint64_t>(n)) +
              " symbols, found " + std::to_string(count) + " (truncated or padded file)");
  return out;
}

namespace {

json block_to_json(const SpinFamily& spin) {
  json b;
  b["family"] = spin.family_label();
  b["spin_flip_symmetrized"] = spin.spin_flip_symmetrized;
  if (const auto* p = std::get_if<PolyParams>(&spin.params)) {
    b["n_inputs"] = p->n_inputs;
    b["L"] = p->L;
    json terms = json::array();
    for (std::size_t k = 0; k < p->key_sites.size(); ++k) {
      json term;
      term["k"] = p->key_sites[k];
      if (p->q == 2) {
        term["c"] = p->coeffs[k];
      } else {
        json assign = json::array();
        for (Symbol s : p->key_assign[k]) assign.push_back(static_cast<int>(s));
        term["b"] = assign;
        json cs = json::array();
        for (int a = 0; a < p->q; ++a)
          cs.push_back(p->coeffs[k * static_cast<std::size_t>(p->q) + static_cast<std::size_t>(a)]);
        term["c"] = cs;
      }
      terms.push_back(std::move(term));
    }
    b["terms"] = std::move(terms);
  } else if (const auto* s = std::get_if<SymParams>(&spin.params)) {
    b["n_inputs"] = s->n_inputs;
    json theta = json::array();
    for (std::size_t k = 0; k < s->keys.size(); ++k) {
      json row;
      row["counts"] = s->keys[k];
      json vs = json::array();
      for (int a = 0; a < s->q; ++a)
        vs.push_back(s->coeffs[k * static_cast<std::size_t>(s->q) + static_cast<std::size_t>(a)]);
      row["v"] = vs;
      theta.push_back(std::move(row));
    }
    b["theta"] = std::move(theta);
  } else {
    const auto& nn = std::get<NeuralParams>(spin.params);
    b["n_inputs"] = nn.n_inputs;
    b["depth"] = nn.depth;
    b["width"] = nn.width;
    b["encoding"] = neural_encoding_label(nn.encoding);
    json layers = json::array();
    for (std::size_t l = 0; l < nn.weights.size(); ++l) {
      json layer;
      json a = json::array();
      for (Eigen::Index r = 0; r < nn.weights[l].rows(); ++r) {
        json rowj = json::array();
        for (Eigen::Index c = 0; c < nn.weights[l].cols(); ++c) rowj.push_back(nn.weights[l](r, c));
        a.push_back(std::move(rowj));
      }
      layer["A"] = std::move(a);
      json bias = json::array();
      for (Eigen::Index r = 0; r < nn.biases[l].size(); ++r) bias.push_back(nn.biases[l](r));
      layer["b"] = std::move(bias);
      layers.push_back(std::move(layer));
    }
    b["layers"] = std::move(layers);
  }
  return b;
}

std::string key_signature(const std::vector<int>& sites, const std::vector<Symbol>& assign) {
  std::string s;
  for (int v : sites) {
    s += std::to_string(v);
    s += ',';
  }
  s += '|';
  for (Symbol v : assign) {
    s += std::to_string(static_cast<int>(v));
    s += ',';
  }
  return s;
}

SpinFamily block_from_json(const json& b, int q, int n) {
  require(b.is_object(), ErrorKind::io, "model block must be an object");
  std::string family = as_string(b.at("family"), "family");
  SpinFamily spin;
  spin.spin_flip_symmetrized =
      b.contains("spin_flip_symmetrized") ? b.at("spin_flip_symmetrized").get<bool>() : false;
  int n_inputs = static_cast<int>(as_integer(b.at("n_inputs"), "n_inputs"));
  require(n_inputs == n - 1, ErrorKind::io, "model block n_inputs does not match n");

  if (family == "poly") {
    reject_unknown(b, {"family", "spin_flip_symmetrized", "n_inputs", "L", "terms"}, "poly block");
    int L = static_cast<int>(as_integer(b.at("L"), "L"));
    PolyParams params = PolyParams::create(q, n_inputs, L);
    std::map<std::string, std::size_t> lookup;
    for (std::size_t k = 0; k < params.key_sites.size(); ++k)
      lookup[key_signature(params.key_sites[k],
                           q == 2 ? std::vector<Symbol>{} : params.key_assign[k])] = k;
    const json& terms = b.at("terms");
    require(terms.is_array(), ErrorKind::io, "poly terms must be an array");
    std::vector<bool> seen(params.key_sites.size(), false);
    for (const json& term : terms) {
      std::vector<int> sites = term.at("k").get<std::vector<int>>();
      std::vector<Symbol> assign;
      if (q > 2)
        for (int v : term.at("b").get<std::vector<int>>()) assign.push_back(static_cast<Symbol>(v));
      auto it = lookup.find(key_signature(sites, assign));
      require(it != lookup.end(), ErrorKind::io, "poly term does not match any interaction key");
      require(!seen[it->second], ErrorKind::io, "duplicate poly term");
      seen[it->second] = true;
      if (q == 2) {
        params.coeffs[it->second] = as_number(term.at("c"), "c");
      } else {
        std::vector<double> cs = term.at("c").get<std::vector<double>>();
        require(static_cast<int>(cs.size()) == q, ErrorKind::io, "poly term needs q coefficients");
        for (int a = 0; a < q; ++a)
          params.coeffs[it->second * static_cast<std::size_t>(q) + static_cast<std::size_t>(a)] = cs[static_cast<std::size_t>(a)];
      }
    }
    spin.params = std::move(params);
  } else if (family == "symmetric") {
    reject_unknown(b, {"family", "spin_flip_symmetrized", "n_inputs", "theta"}, "symmetric block");
    SymParams params = SymParams::create(q, n_inputs);
    std::map<std::vector<int>, std::size_t> lookup;
    for (std::size_t k = 0; k < params.keys.size(); ++k) lookup[params.keys[k]] = k;
    const json& theta = b.at("theta");
    require(theta.is_array(), ErrorKind::io, "symmetric theta must be an array");
    std::vector<bool> seen(params.keys.size(), false);
    for (const json& row : theta) {
      std::vector<int> counts = row.at("counts").get<std::vector<int>>();
      auto it = lookup.find(counts);
      require(it != lookup.end(), ErrorKind::io, "count vector does not match the symmetric table");
      require(!seen[it->second], ErrorKind::io, "duplicate symmetric table row");
      seen[it->second] = true;
      std::vector<double> vs = row.at("v").get<std::vector<double>>();
      require(static_cast<int>(vs.size()) == q, ErrorKind::io, "symmetric row needs q values");
      for (int a = 0; a < q; ++a)
        params.coeffs[it->second * static_cast<std::size_t>(q) + static_cast<std::size_t>(a)] = vs[static_cast<std::size_t>(a)];
    }
    spin.params = std::move(params);
  } else if (family == "neural") {
    reject_unknown(b, {"family", "spin_flip_symmetrized", "n_inputs", "depth", "width", "encoding", "layers"},
                   "neural block");
    int depth = static_cast<int>(as_integer(b.at("depth"), "depth"));
    int width = static_cast<int>(as_integer(b.at("width"), "width"));
    NeuralEncoding enc = neural_encoding_from_label(as_string(b.at("encoding"), "encoding"), q);
    NeuralParams params = NeuralParams::create(q, n_inputs, depth, width, enc, 0);
    const json& layers = b.at("layers");
    require(layers.is_array() && layers.size() == params.weights.size(), ErrorKind::io,
            "neural block needs depth+1 layers");
    for (std::size_t l = 0; l < params.weights.size(); ++l) {
      const json& layer = layers[l];
      const json& a = layer.at("A");
      require(a.is_array() && static_cast<Eigen::Index>(a.size()) == params.weights[l].rows(),
              ErrorKind::io, "neural layer row count mismatch");
      for (Eigen::Index r = 0; r < params.weights[l].rows(); ++r) {
        std::vector<double> rowv = a[static_cast<std::size_t>(r)].get<std::vector<double>>();
        require(static_cast<Eigen::Index>(rowv.size()) == params.weights[l].cols(), ErrorKind::io,
                "neural layer column count mismatch");
        for (Eigen::Index c = 0; c < params.weights[l].cols(); ++c)
          params.weights[l](r, c) = rowv[static_cast<std::size_t>(c)];
      }
      std::vector<double> bias = layer.at("b").get<std::vector<double>>();
      require(static_cast<Eigen::Index>(bias.size()) == params.biases[l].size(), ErrorKind::io,
              "neural bias size mismatch");
      for (Eigen::Index r = 0; r < params.biases[l].size(); ++r) params.biases[l](r) = bias[static_cast<std::size_t>(r)];
    }
    spin.params = std::move(params);
  } else {
    fail(ErrorKind::io, "unknown family '" + family + "' in model file");
  }
  spin.validate();
  return spin;
}

}  // namespace

std::string model_to_json(const EnergyModel& model, const std::string& provenance_json) {
  json j;
  j["format"] = "qebm-model";
  j["version"] = 1;
  j["n"] = model.n;
  j["q"] = model.q;
  j["symmetry"] = symmetry_label(model.symmetry);
  json spins = json::array();
  for (const auto& spin : model.spins) spins.push_back(block_to_json(spin));
  j["spins"] = std::move(spins);
  if (!provenance_json.empty())
    j["provenance"] = parse_json(provenance_json, ErrorKind::config, "provenance");
  return j.dump(2) + "\n";
}

EnergyModel model_from_json(const std::string& text) {
  return map_json_errors(ErrorKind::io, "model file", [&] {
    json j = parse_json(text, ErrorKind::io, "model file");
    require(j.is_object(), ErrorKind::io, "model file must hold a JSON object");
    require(j.value("format", "") == "qebm-model", ErrorKind::io, "not a qebm-model file");
    require(j.value("version", 0) == 1, ErrorKind::io, "unsupported model version");
    reject_unknown(j, {"format", "version", "n", "q", "symmetry", "spins", "provenance"}, "model file");
    EnergyModel model;
    model.n = static_cast<int>(as_integer(j.at("n"), "n"));
    model.q = static_cast<int>(as_integer(j.at("q"), "q"));
    model.symmetry = symmetry_from_label(as_string(j.at("symmetry"), "symmetry"));
    const json& spins = j.at("spins");
    require(spins.is_array(), ErrorKind::io, "model spins must be an array");
    std::size_t expect = model.symmetry == Symmetry::none ? static_cast<std::size_t>(model.n) : 1;
    require(spins.size() == expect, ErrorKind::io,
            "model holds " + std::to_string(spins.size()) + " blocks, expected " + std::to_string(expect));
    for (const json& b : spins) model.spins.push_back(block_from_json(b, model.q, model.n));
    model.validate();
    return model;
  });
}

void save_model(const EnergyModel& model, const std::string& path, const std::string& provenance_json) {
  write_text_file(path, model_to_json(model, provenance_json));
}

EnergyModel load_model(const std::string& path) { return model_from_json(read_text_file(path)); }

namespace {

HamiltonianSpec hamiltonian_from_obj(const json& j) {
  require(j.is_object(), ErrorKind::config, "hamiltonian must be a JSON object");
  HamiltonianSpec spec;
  spec.n = static_cast<int>(as_integer(j.at("n"), "n"));
  std::string kind = as_string(j.at("kind"), "kind");

  auto read_edges = [&](const json& obj) {
    require(obj.contains("edges") != obj.contains("chain"), ErrorKind::config,
            "hamiltonian needs exactly one of 'edges' and 'chain'");
    if (obj.contains("chain")) {
      double coupling = as_number(obj.at("chain"), "chain");
      for (int i = 0; i + 1 < spec.n; ++i) spec.edges.push_back({i, i + 1, coupling});
      return;
    }
    const json& edges = obj.at("edges");
    require(edges.is_array(), ErrorKind::config, "field 'edges' must be an array");
    for (const json& e : edges) {
      require(e.is_array() && e.size() == 3, ErrorKind::config,
              "each edge must be [site, site, coupling]");
      spec.edges.push_back({static_cast<int>(as_integer(e[0], "edge site")),
                            static_cast<int>(as_integer(e[1], "edge site")),
                            as_number(e[2], "edge coupling")});
    }
  };

  if (kind == "tim") {
    reject_unknown(j, {"n", "kind", "g", "edges", "chain"}, "tim hamiltonian");
    spec.kind = HamiltonianKind::tim;
    spec.g = as_number(j.at("g"), "g");
    read_edges(j);
  } else if (kind == "heisenberg") {
    reject_unknown(j, {"n", "kind", "edges", "chain"}, "heisenberg hamiltonian");
    spec.kind = HamiltonianKind::heisenberg;
    read_edges(j);
  } else if (kind == "pauli") {
    reject_unknown(j, {"n", "kind", "terms"}, "pauli hamiltonian");
    spec.kind = HamiltonianKind::custom_pauli_sum;
    const json& terms = j.at("terms");
    require(terms.is_array(), ErrorKind::config, "field 'terms' must be an array");
    for (const json& t : terms) {
      require(t.is_array() && t.size() == 2, ErrorKind::config,
              "each pauli term must be [string, coefficient]");
      spec.terms.push_back({as_string(t[0], "pauli string"), as_number(t[1], "pauli coefficient")});
    }
  } else {
    fail(ErrorKind::config, "unknown hamiltonian kind '" + kind + "'");
  }
  return spec;
}

}  // namespace

HamiltonianSpec hamiltonian_from_json(const std::string& text) {
  return map_json_errors(ErrorKind::config, "hamiltonian", [&] {
    return hamiltonian_from_obj(parse_json(text, ErrorKind::config, "hamiltonian"));
  });
}

static QuantumState state_from_json_impl(const std::string& text);

QuantumState state_from_json(const std::string& text) {
  return map_json_errors(ErrorKind::config, "state spec",
                         [&] { return state_from_json_impl(text); });
}

static QuantumState state_from_json_impl(const std::string& text) {
  json j = parse_json(text, ErrorKind::config, "state spec");
  require(j.is_object(), ErrorKind::config, "state spec must be a JSON object");
  std::string kind = as_string(j.at("state"), "state");
  if (kind == "thermal") {
    reject_unknown(j, {"state", "beta", "hamiltonian"}, "thermal state spec");
    HamiltonianSpec spec = hamiltonian_from_obj(j.at("hamiltonian"));
    return thermal_state(build_hamiltonian(spec), as_number(j.at("beta"), "beta"));
  }
  if (kind == "ground") {
    reject_unknown(j, {"state", "degeneracy_tol", "hamiltonian"}, "ground state spec");
    HamiltonianSpec spec = hamiltonian_from_obj(j.at("hamiltonian"));
    double tol = j.contains("degeneracy_tol") ? as_number(j.at("degeneracy_tol"), "degeneracy_tol") : 1e-8;
    return ground_state(build_hamiltonian(spec), tol);
  }
  if (kind == "ghz-plus" || kind == "ghz-minus") {
    reject_unknown(j, {"state", "n"}, "ghz state spec");
    int n = static_cast<int>(as_integer(j.at("n"), "n"));
    return kind == "ghz-plus" ? ghz_plus(n) : ghz_minus(n);
  }
  if (kind == "ghz-mixture") {
    reject_unknown(j, {"state", "n", "p"}, "ghz mixture spec");
    return ghz_mixture(static_cast<int>(as_integer(j.at("n"), "n")), as_number(j.at("p"), "p"));
  }
  fail(ErrorKind::config, "unknown state '" + kind + "'");
}

FitConfig fit_config_from_json(const std::string& text) {
  return map_json_errors(ErrorKind::config, "fit config", [&] {
    json j = parse_json(text, ErrorKind::config, "fit config");
    require(j.is_object(), ErrorKind::config, "fit config must be a JSON object");
    FitConfig cfg;
    for (auto it = j.begin(); it != j.end(); ++it) {
      const std::string& key = it.key();
      const json& v = it.value();
      if (key == "family") cfg.family = as_string(v, key);
      else if (key == "L") cfg.L = static_cast<int>(as_integer(v, key));
      else if (key == "depth") cfg.depth = static_cast<int>(as_integer(v, key));
      else if (key == "width") cfg.width = static_cast<int>(as_integer(v, key));
      else if (key == "encoding") cfg.encoding = as_string(v, key);
      else if (key == "spin_flip_symmetrize") {
        require(v.is_boolean(), ErrorKind::config, "field 'spin_flip_symmetrize' must be a boolean");
        cfg.spin_flip_symmetrize = v.get<bool>();
      } else if (key == "symmetry") cfg.symmetry = symmetry_from_label(as_string(v, key));
      else if (key == "optimizer") cfg.optimizer = as_string(v, key);
      else if (key == "learning_rate") cfg.learning_rate = as_number(v, key);
      else if (key == "lr_decay") cfg.lr_decay = as_number(v, key);
      else if (key == "minibatch") cfg.minibatch = static_cast<int>(as_integer(v, key));
      else if (key == "max_epochs") cfg.max_epochs = as_integer(v, key);
      else if (key == "grad_tol") cfg.grad_tol = as_number(v, key);
      else if (key == "early_stop_delta") cfg.early_stop_delta = as_number(v, key);
      else if (key == "l1_radius") cfg.l1_radius = as_number(v, key);
      else if (key == "seed") {
        require(v.is_number_unsigned() || v.is_number_integer(), ErrorKind::config,
                "field 'seed' must be an integer");
        cfg.seed = v.get<std::uint64_t>();
      } else {
        fail(ErrorKind::config, "unknown field '" + key + "' in fit config");
      }
    }
    return cfg;
  });
}

std::string fit_report_to_jsonl(const FitReport& report) {
  std::ostringstream out;
  for (const auto& s : report.spins) {
    json line;
    line["spin"] = s.spin;
    line["loss"] = s.loss;
    line["grad_norm"] = s.grad_norm;
    line["epochs"] = s.epochs;
    line["wall_time_s"] = s.wall_time_s;
    line["clip_events"] = s.clip_events;
    out << line.dump() << "\n";
  }
  json tail;
  tail["family"] = report.family;
  tail["optimizer"] = report.optimizer;
  tail["symmetry"] = symmetry_label(report.symmetry);
  tail["blocks"] = report.spins.size();
  tail["total_wall_time_s"] = report.total_wall_time_s;
  out << tail.dump() << "\n";
  return out.str();
}

std::string config_hash_hex(const std::string& json_text) {
  json j = parse_json(json_text, ErrorKind::config, "config");
  std::uint64_t h = fnv1a(j.dump());
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

}  // namespace qebm
