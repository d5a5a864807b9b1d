/* C interface to the qebm library.
 *
 * Every function returns a qebm_status; on failure qebm_last_error() holds a
 * message for the calling thread, valid until the next failing call. Objects
 * returned through out-parameters stay owned by the caller and are released
 * with the matching _free function. Strings returned through char** are
 * released with qebm_string_free.
 */
#ifndef QEBM_H
#define QEBM_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum qebm_status {
  QEBM_OK = 0,
  QEBM_ERR_INTERNAL = 1,
  QEBM_ERR_CONFIG = 2,
  QEBM_ERR_OPTIMIZATION = 3,
  QEBM_ERR_SPAN = 4,
  QEBM_ERR_IO = 5
} qebm_status;

typedef struct qebm_state qebm_state;
typedef struct qebm_povm qebm_povm;
typedef struct qebm_table qebm_table;
typedef struct qebm_samples qebm_samples;
typedef struct qebm_model qebm_model;

const char* qebm_version(void);
const char* qebm_last_error(void);
void qebm_string_free(char* s);

/* States. spec_json: {"state":"thermal","beta":...,"hamiltonian":{...}},
 * {"state":"ground",...}, {"state":"ghz-plus","n":...}, {"state":"ghz-minus",
 * "n":...} or {"state":"ghz-mixture","n":...,"p":...}. */
qebm_status qebm_state_create(const char* spec_json, qebm_state** out);
void qebm_state_free(qebm_state* s);
qebm_status qebm_state_sites(const qebm_state* s, int* out_n);
qebm_status qebm_state_pauli_expectation(const qebm_state* s, const char* paulis, double* out);
/* Reduced density matrix on 1 or 2 sites, row-major re/im interleaved into
 * out (size 2*dim*dim, dim = 2^n_sites). First listed site = slow index. */
qebm_status qebm_state_reduced(const qebm_state* s, const int* sites, int n_sites, double* out);

/* POVMs. kind: "computational", "tetrahedral" or "rotated-tetrahedral"
 * (the seed only matters for the rotated kind). */
qebm_status qebm_povm_create(const char* kind, uint64_t seed, qebm_povm** out);
void qebm_povm_free(qebm_povm* p);
qebm_status qebm_povm_outcomes(const qebm_povm* p, int* out_q);
qebm_status qebm_povm_info_complete(const qebm_povm* p, int* out_flag);

/* Exact outcome distributions over [q]^n. */
qebm_status qebm_table_create(const qebm_state* s, const qebm_povm* p, qebm_table** out);
void qebm_table_free(qebm_table* t);
qebm_status qebm_table_prob(const qebm_table* t, const uint8_t* symbols, int n, double* out);
qebm_status qebm_sample_table(const qebm_table* t, uint64_t m, uint64_t seed,
                              const char* provenance, qebm_samples** out);

/* Sample sets (rows of 1-based outcome symbols). */
void qebm_samples_free(qebm_samples* s);
qebm_status qebm_samples_info(const qebm_samples* s, int* out_n, int* out_q, uint64_t* out_m);
qebm_status qebm_samples_provenance(const qebm_samples* s, char** out);
qebm_status qebm_samples_save(const qebm_samples* s, const char* path);
qebm_status qebm_samples_load(const char* path, qebm_samples** out);

/* Interaction-screening fits. config_json keys: family (poly|neural|
 * symmetric), L, depth, width, encoding, spin_flip_symmetrize, symmetry,
 * optimizer, learning_rate, lr_decay, minibatch, max_epochs, grad_tol,
 * early_stop_delta, l1_radius, seed. Unknown keys are rejected.
 * out_report_jsonl (optional, may be NULL) receives the per-spin fit report. */
qebm_status qebm_fit(const char* config_json, const qebm_samples* s, qebm_model** out_model,
                     char** out_report_jsonl);
qebm_status qebm_fit_exact(const char* config_json, const qebm_table* t, qebm_model** out_model,
                           char** out_report_jsonl);

void qebm_model_free(qebm_model* m);
qebm_status qebm_model_info(const qebm_model* m, int* out_n, int* out_q);
qebm_status qebm_model_save(const qebm_model* m, const char* path, const char* provenance_json);
qebm_status qebm_model_load(const char* path, qebm_model** out);
/* P(sigma_u = a | rest) for a full configuration of n symbols; out_probs has
 * q entries. */
qebm_status qebm_model_conditional(const qebm_model* m, int u, const uint8_t* config, int n,
                                   double* out_probs);

/* Gibbs sampling. burn_in/thin of -1 pick defaults (10n and max(1, n/2)
 * sweeps). */
qebm_status qebm_gibbs_sample(const qebm_model* m, int chains, long burn_in, long thin,
                              uint64_t total, uint64_t seed, const char* provenance,
                              qebm_samples** out);

/* Estimators. pauli: one of I X Y Z per site. */
qebm_status qebm_estimate_observable(const qebm_samples* s, const qebm_povm* p, const char* pauli,
                                     double* out_mean, double* out_stderr, uint64_t* out_n_used);
/* target: "ghz-plus", "ghz-minus", or a JSON object
 * {"terms": [[basis_index, re, im], ...]} with at most 16 normalized terms. */
qebm_status qebm_estimate_fidelity(const qebm_samples* s, const qebm_povm* p, const char* target,
                                   double* out_mean, double* out_stderr, uint64_t* out_n_used);
/* Same layout as qebm_state_reduced. */
qebm_status qebm_estimate_reduced_state(const qebm_samples* s, const qebm_povm* p,
                                        const int* sites, int n_sites, double* out);
/* a, b: row-major re/im interleaved dim x dim Hermitian matrices. */
qebm_status qebm_trace_distance(const double* a, const double* b, int dim, double* out);
qebm_status qebm_estimate_tvd(const qebm_samples* s, const qebm_table* t, uint64_t floor_seed,
                              double* out_tvd, double* out_floor);
/* One line per interaction order: "<order> <max abs coefficient>\n". */
qebm_status qebm_order_strength(const qebm_model* m, char** out_text);

#ifdef __cplusplus
}
#endif

#endif /* QEBM_H */
