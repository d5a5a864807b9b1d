#pragma once

#include <string>

#include "qebm/ebm.hpp"
#include "qebm/povm.hpp"
#include "qebm/qsim.hpp"
#include "qebm/screen.hpp"

namespace qebm {

// Text format: "#qebm-samples v1 q=<q> n=<n> m=<m> provenance=<rest of line>"
// followed by m rows of n space-separated symbols in 1..q.
void save_samples(const SampleSet& samples, const std::string& path);
SampleSet load_samples(const std::string& path);

// JSON model files; provenance_json (an object dump, may be empty) is stored
// verbatim and ignored on load.
std::string model_to_json(const EnergyModel& model, const std::string& provenance_json = "");
EnergyModel model_from_json(const std::string& text);
void save_model(const EnergyModel& model, const std::string& path,
                const std::string& provenance_json = "");
EnergyModel load_model(const std::string& path);

HamiltonianSpec hamiltonian_from_json(const std::string& text);
QuantumState state_from_json(const std::string& text);
FitConfig fit_config_from_json(const std::string& text);

// One line per spin block plus a trailing summary line.
std::string fit_report_to_jsonl(const FitReport& report);

// FNV-1a hex digest of the canonical (sorted-key, minimal) JSON dump.
std::string config_hash_hex(const std::string& json_text);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace qebm
