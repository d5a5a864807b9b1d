#include "qebm/qebm.h"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <string>
#include <utility>

#include "json.hpp"

#include "qebm/ebm.hpp"
#include "qebm/estimate.hpp"
#include "qebm/io.hpp"
#include "qebm/povm.hpp"
#include "qebm/qsim.hpp"
#include "qebm/screen.hpp"
#include "qebm/types.hpp"

struct qebm_state {
  qebm::QuantumState v;
};
struct qebm_povm {
  qebm::Povm povm;
  qebm::DualSet duals;
};
struct qebm_table {
  qebm::ProbTable v;
};
struct qebm_samples {
  qebm::SampleSet v;
};
struct qebm_model {
  qebm::EnergyModel v;
};

namespace {

thread_local std::string g_last_error;

qebm_status status_of(qebm::ErrorKind kind) {
  switch (kind) {
    case qebm::ErrorKind::config: return QEBM_ERR_CONFIG;
    case qebm::ErrorKind::optimization: return QEBM_ERR_OPTIMIZATION;
    case qebm::ErrorKind::span: return QEBM_ERR_SPAN;
    case qebm::ErrorKind::io: return QEBM_ERR_IO;
  }
  return QEBM_ERR_INTERNAL;
}

template <typename Fn>
qebm_status guarded(Fn&& fn) {
  try {
    fn();
    return QEBM_OK;
  } catch (const qebm::Error& e) {
    g_last_error = e.what();
    return status_of(e.kind());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return QEBM_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return QEBM_ERR_INTERNAL;
  }
}

void check_ptr(const void* p, const char* name) {
  qebm::require(p != nullptr, qebm::ErrorKind::config, std::string(name) + " must not be null");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  qebm::require(out != nullptr, qebm::ErrorKind::io, "out of memory");
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void write_interleaved(const qebm::MatrixXc& m, double* out) {
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      out[k++] = m(r, c).real();
      out[k++] = m(r, c).imag();
    }
}

qebm::SparseState parse_fidelity_target(const char* target, int n) {
  std::string t(target);
  if (t == "ghz-plus") return qebm::ghz_plus_sparse(n);
  if (t == "ghz-minus") return qebm::ghz_minus_sparse(n);
  nlohmann::json j = nlohmann::json::parse(t, nullptr, false);
  qebm::require(j.is_object() && j.contains("terms"), qebm::ErrorKind::config,
                "fidelity target must be \"ghz-plus\", \"ghz-minus\" or {\"terms\": [...]}");
  qebm::SparseState out;
  out.n = n;
  for (const auto& term : j.at("terms")) {
    qebm::require(term.is_array() && term.size() == 3, qebm::ErrorKind::config,
                  "each fidelity term must be [basis_index, re, im]");
    out.terms.push_back({term[0].get<std::uint64_t>(),
                         qebm::Complex(term[1].get<double>(), term[2].get<double>())});
  }
  return out;
}

}  // namespace

extern "C" {

const char* qebm_version(void) { return "0.1.0"; }

const char* qebm_last_error(void) { return g_last_error.c_str(); }

void qebm_string_free(char* s) { std::free(s); }

qebm_status qebm_state_create(const char* spec_json, qebm_state** out) {
  return guarded([&] {
    check_ptr(spec_json, "spec_json");
    check_ptr(out, "out");
    *out = new qebm_state{qebm::state_from_json(spec_json)};
  });
}

void qebm_state_free(qebm_state* s) { delete s; }

qebm_status qebm_state_sites(const qebm_state* s, int* out_n) {
  return guarded([&] {
    check_ptr(s, "state");
    check_ptr(out_n, "out_n");
    *out_n = qebm::state_sites(s->v);
  });
}

qebm_status qebm_state_pauli_expectation(const qebm_state* s, const char* paulis, double* out) {
  return guarded([&] {
    check_ptr(s, "state");
    check_ptr(paulis, "paulis");
    check_ptr(out, "out");
    *out = qebm::pauli_expectation_exact(s->v, paulis);
  });
}

qebm_status qebm_state_reduced(const qebm_state* s, const int* sites, int n_sites, double* out) {
  return guarded([&] {
    check_ptr(s, "state");
    check_ptr(sites, "sites");
    check_ptr(out, "out");
    write_interleaved(qebm::exact_reduced_state(s->v, {sites, static_cast<std::size_t>(n_sites)}), out);
  });
}

qebm_status qebm_povm_create(const char* kind, uint64_t seed, qebm_povm** out) {
  return guarded([&] {
    check_ptr(kind, "kind");
    check_ptr(out, "out");
    qebm::Povm povm = qebm::build_povm(kind, seed);
    qebm::DualSet duals = qebm::dual_operators(povm);
    *out = new qebm_povm{std::move(povm), std::move(duals)};
  });
}

void qebm_povm_free(qebm_povm* p) { delete p; }

qebm_status qebm_povm_outcomes(const qebm_povm* p, int* out_q) {
  return guarded([&] {
    check_ptr(p, "povm");
    check_ptr(out_q, "out_q");
    *out_q = p->povm.q;
  });
}

qebm_status qebm_povm_info_complete(const qebm_povm* p, int* out_flag) {
  return guarded([&] {
    check_ptr(p, "povm");
    check_ptr(out_flag, "out_flag");
    *out_flag = p->duals.informationally_complete ? 1 : 0;
  });
}

qebm_status qebm_table_create(const qebm_state* s, const qebm_povm* p, qebm_table** out) {
  return guarded([&] {
    check_ptr(s, "state");
    check_ptr(p, "povm");
    check_ptr(out, "out");
    *out = new qebm_table{qebm::outcome_distribution(s->v, p->povm)};
  });
}

void qebm_table_free(qebm_table* t) { delete t; }

qebm_status qebm_table_prob(const qebm_table* t, const uint8_t* symbols, int n, double* out) {
  return guarded([&] {
    check_ptr(t, "table");
    check_ptr(symbols, "symbols");
    check_ptr(out, "out");
    qebm::require(n == t->v.n, qebm::ErrorKind::config, "symbol count does not match the table");
    *out = t->v.probs[t->v.index_of({symbols, static_cast<std::size_t>(n)})];
  });
}

qebm_status qebm_sample_table(const qebm_table* t, uint64_t m, uint64_t seed,
                              const char* provenance, qebm_samples** out) {
  return guarded([&] {
    check_ptr(t, "table");
    check_ptr(out, "out");
    *out = new qebm_samples{
        qebm::sample_outcomes(t->v, m, seed, provenance ? provenance : "")};
  });
}

void qebm_samples_free(qebm_samples* s) { delete s; }

qebm_status qebm_samples_info(const qebm_samples* s, int* out_n, int* out_q, uint64_t* out_m) {
  return guarded([&] {
    check_ptr(s, "samples");
    if (out_n) *out_n = s->v.n;
    if (out_q) *out_q = s->v.q;
    if (out_m) *out_m = s->v.rows();
  });
}

qebm_status qebm_samples_provenance(const qebm_samples* s, char** out) {
  return guarded([&] {
    check_ptr(s, "samples");
    check_ptr(out, "out");
    *out = dup_string(s->v.provenance);
  });
}

qebm_status qebm_samples_save(const qebm_samples* s, const char* path) {
  return guarded([&] {
    check_ptr(s, "samples");
    check_ptr(path, "path");
    qebm::save_samples(s->v, path);
  });
}

qebm_status qebm_samples_load(const char* path, qebm_samples** out) {
  return guarded([&] {
    check_ptr(path, "path");
    check_ptr(out, "out");
    *out = new qebm_samples{qebm::load_samples(path)};
  });
}

qebm_status qebm_fit(const char* config_json, const qebm_samples* s, qebm_model** out_model,
                     char** out_report_jsonl) {
  return guarded([&] {
    check_ptr(config_json, "config_json");
    check_ptr(s, "samples");
    check_ptr(out_model, "out_model");
    qebm::FitConfig cfg = qebm::fit_config_from_json(config_json);
    auto [model, report] = qebm::fit_model(s->v, cfg);
    if (out_report_jsonl) *out_report_jsonl = dup_string(qebm::fit_report_to_jsonl(report));
    *out_model = new qebm_model{std::move(model)};
  });
}

qebm_status qebm_fit_exact(const char* config_json, const qebm_table* t, qebm_model** out_model,
                           char** out_report_jsonl) {
  return guarded([&] {
    check_ptr(config_json, "config_json");
    check_ptr(t, "table");
    check_ptr(out_model, "out_model");
    qebm::FitConfig cfg = qebm::fit_config_from_json(config_json);
    auto [model, report] = qebm::fit_model_exact(t->v, cfg);
    if (out_report_jsonl) *out_report_jsonl = dup_string(qebm::fit_report_to_jsonl(report));
    *out_model = new qebm_model{std::move(model)};
  });
}

void qebm_model_free(qebm_model* m) { delete m; }

qebm_status qebm_model_info(const qebm_model* m, int* out_n, int* out_q) {
  return guarded([&] {
    check_ptr(m, "model");
    if (out_n) *out_n = m->v.n;
    if (out_q) *out_q = m->v.q;
  });
}

qebm_status qebm_model_save(const qebm_model* m, const char* path, const char* provenance_json) {
  return guarded([&] {
    check_ptr(m, "model");
    check_ptr(path, "path");
    qebm::save_model(m->v, path, provenance_json ? provenance_json : "");
  });
}

qebm_status qebm_model_load(const char* path, qebm_model** out) {
  return guarded([&] {
    check_ptr(path, "path");
    check_ptr(out, "out");
    *out = new qebm_model{qebm::load_model(path)};
  });
}

qebm_status qebm_model_conditional(const qebm_model* m, int u, const uint8_t* config, int n,
                                   double* out_probs) {
  return guarded([&] {
    check_ptr(m, "model");
    check_ptr(config, "config");
    check_ptr(out_probs, "out_probs");
    qebm::require(n == m->v.n, qebm::ErrorKind::config, "configuration size does not match the model");
    qebm::require(u >= 0 && u < n, qebm::ErrorKind::config, "spin index out of range");
    for (int i = 0; i < n; ++i)
      qebm::require(config[i] >= 1 && config[i] <= m->v.q, qebm::ErrorKind::config,
                    "configuration symbol outside 1..q");
    qebm::FamilyWorkspace ws;
    m->v.conditional(u, {config, static_cast<std::size_t>(n)},
                     {out_probs, static_cast<std::size_t>(m->v.q)}, ws);
  });
}

qebm_status qebm_gibbs_sample(const qebm_model* m, int chains, long burn_in, long thin,
                              uint64_t total, uint64_t seed, const char* provenance,
                              qebm_samples** out) {
  return guarded([&] {
    check_ptr(m, "model");
    check_ptr(out, "out");
    qebm::GibbsConfig cfg;
    cfg.chains = chains;
    cfg.burn_in = burn_in;
    cfg.thin = thin;
    cfg.total = total;
    cfg.seed = seed;
    cfg.provenance = provenance ? provenance : "";
    *out = new qebm_samples{qebm::gibbs_sample(m->v, cfg)};
  });
}

qebm_status qebm_estimate_observable(const qebm_samples* s, const qebm_povm* p, const char* pauli,
                                     double* out_mean, double* out_stderr, uint64_t* out_n_used) {
  return guarded([&] {
    check_ptr(s, "samples");
    check_ptr(p, "povm");
    check_ptr(pauli, "pauli");
    check_ptr(out_mean, "out_mean");
    qebm::EstimateResult r = qebm::estimate_observable(s->v, p->duals, pauli);
    *out_mean = r.mean;
    if (out_stderr) *out_stderr = r.stderr_;
    if (out_n_used) *out_n_used = r.n_used;
  });
}

qebm_status qebm_estimate_fidelity(const qebm_samples* s, const qebm_povm* p, const char* target,
                                   double* out_mean, double* out_stderr, uint64_t* out_n_used) {
  return guarded([&] {
    check_ptr(s, "samples");
    check_ptr(p, "povm");
    check_ptr(target, "target");
    check_ptr(out_mean, "out_mean");
    qebm::SparseState tgt = parse_fidelity_target(target, s->v.n);
    qebm::EstimateResult r = qebm::estimate_fidelity(s->v, p->duals, tgt);
    *out_mean = r.mean;
    if (out_stderr) *out_stderr = r.stderr_;
    if (out_n_used) *out_n_used = r.n_used;
  });
}

qebm_status qebm_estimate_reduced_state(const qebm_samples* s, const qebm_povm* p,
                                        const int* sites, int n_sites, double* out) {
  return guarded([&] {
    check_ptr(s, "samples");
    check_ptr(p, "povm");
    check_ptr(sites, "sites");
    check_ptr(out, "out");
    write_interleaved(
        qebm::estimate_reduced_state(s->v, p->duals, {sites, static_cast<std::size_t>(n_sites)}), out);
  });
}

qebm_status qebm_trace_distance(const double* a, const double* b, int dim, double* out) {
  return guarded([&] {
    check_ptr(a, "a");
    check_ptr(b, "b");
    check_ptr(out, "out");
    qebm::require(dim >= 1, qebm::ErrorKind::config, "dim must be >= 1");
    auto unpack = [dim](const double* src) {
      qebm::MatrixXc m(dim, dim);
      std::size_t k = 0;
      for (int r = 0; r < dim; ++r)
        for (int c = 0; c < dim; ++c) {
          m(r, c) = qebm::Complex(src[k], src[k + 1]);
          k += 2;
        }
      return m;
    };
    *out = qebm::trace_distance(unpack(a), unpack(b));
  });
}

qebm_status qebm_estimate_tvd(const qebm_samples* s, const qebm_table* t, uint64_t floor_seed,
                              double* out_tvd, double* out_floor) {
  return guarded([&] {
    check_ptr(s, "samples");
    check_ptr(t, "table");
    check_ptr(out_tvd, "out_tvd");
    qebm::TvdResult r = qebm::tvd_with_floor(s->v, t->v, floor_seed);
    *out_tvd = r.tvd;
    if (out_floor) *out_floor = r.floor;
  });
}

qebm_status qebm_order_strength(const qebm_model* m, char** out_text) {
  return guarded([&] {
    check_ptr(m, "model");
    check_ptr(out_text, "out_text");
    std::string text;
    for (const auto& [order, strength] : qebm::order_strength(m->v)) {
      char line[64];
      std::snprintf(line, sizeof(line), "%d %.17g\n", order, strength);
      text += line;
    }
    *out_text = dup_string(text);
  });
}

}  // extern "C"
