// Command-line front end. Talks to the library exclusively through the C API;
// everything here is argument handling, JSON plumbing and file bookkeeping.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "qebm/qebm.h"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

struct CliError {
  int exit_code;
  std::string message;
};

[[noreturn]] void die(int code, const std::string& message) { throw CliError{code, message}; }

void check(qebm_status st, const std::string& context) {
  if (st == QEBM_OK) return;
  die(static_cast<int>(st), context + ": " + qebm_last_error());
}

// RAII wrappers over the opaque handles
template <typename T, void (*Free)(T*)>
struct Handle {
  T* ptr = nullptr;
  Handle() = default;
  explicit Handle(T* p) : ptr(p) {}
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  Handle(Handle&& other) noexcept : ptr(other.ptr) { other.ptr = nullptr; }
  Handle& operator=(Handle&& other) noexcept {
    if (this != &other) {
      reset();
      ptr = other.ptr;
      other.ptr = nullptr;
    }
    return *this;
  }
  ~Handle() { reset(); }
  void reset() {
    if (ptr) Free(ptr);
    ptr = nullptr;
  }
  T** out() {
    reset();
    return &ptr;
  }
  explicit operator bool() const { return ptr != nullptr; }
};

using StateHandle = Handle<qebm_state, qebm_state_free>;
using PovmHandle = Handle<qebm_povm, qebm_povm_free>;
using TableHandle = Handle<qebm_table, qebm_table_free>;
using SamplesHandle = Handle<qebm_samples, qebm_samples_free>;
using ModelHandle = Handle<qebm_model, qebm_model_free>;

std::string take_string(char* s) {
  std::string out = s ? s : "";
  qebm_string_free(s);
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.good()) die(5, "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// JSON arguments are either inline (first non-space char is '{' or '"') or a
// path to a file holding the JSON.
std::string json_arg(const std::string& arg) {
  for (char c : arg) {
    if (c == ' ' || c == '\t' || c == '\n') continue;
    if (c == '{' || c == '"' || c == '[') return arg;
    break;
  }
  return read_file(arg);
}

json parse_or_die(const std::string& text, const std::string& what) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) die(2, what + " is not valid JSON");
  return j;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_hash(const json& j) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a(j.dump())));
  return buf;
}

StateHandle make_state(const std::string& spec_json) {
  StateHandle state;
  check(qebm_state_create(spec_json.c_str(), state.out()), "state");
  return state;
}

PovmHandle make_povm(const std::string& kind, std::uint64_t seed) {
  PovmHandle povm;
  check(qebm_povm_create(kind.c_str(), seed, povm.out()), "povm");
  return povm;
}

void print_estimate(const std::string& label, double mean, double se, std::uint64_t n) {
  std::printf("%s  mean=%.10g  stderr=%.3g  n=%llu\n", label.c_str(), mean, se,
              static_cast<unsigned long long>(n));
}

// ---- run subcommand -------------------------------------------------------

struct RunArtifacts {
  fs::path dir;
  std::vector<std::string> names;

  fs::path claim(const std::string& name) {
    names.push_back(name);
    return dir / name;
  }
  void discard_all() {
    for (const auto& name : names) {
      std::error_code ec;
      fs::remove(dir / name, ec);
    }
  }
};

int cmd_run(const std::string& config_arg) {
  json cfg = parse_or_die(json_arg(config_arg), "run config");
  for (auto it = cfg.begin(); it != cfg.end(); ++it) {
    const std::string& k = it.key();
    if (k != "out" && k != "state" && k != "povm" && k != "samples" && k != "fit" && k != "gibbs" &&
        k != "estimate")
      die(2, "unknown field '" + k + "' in run config");
  }
  if (!cfg.contains("out") || !cfg.at("out").is_string()) die(2, "run config needs an 'out' directory");
  if (!cfg.contains("samples")) die(2, "run config needs a 'samples' section");

  RunArtifacts art;
  art.dir = fs::path(cfg.at("out").get<std::string>());
  std::error_code ec;
  fs::create_directories(art.dir, ec);
  if (ec) die(5, "cannot create output directory '" + art.dir.string() + "'");

  try {
    std::string hash = config_hash(cfg);
    json seeds = json::object();

    StateHandle state;
    if (cfg.contains("state")) state = make_state(cfg.at("state").dump());

    PovmHandle povm;
    if (cfg.contains("povm")) {
      const json& pj = cfg.at("povm");
      std::uint64_t povm_seed = pj.value("seed", 0ULL);
      povm = make_povm(pj.at("kind").get<std::string>(), povm_seed);
      seeds["povm"] = povm_seed;
    }

    TableHandle table;
    auto need_table = [&]() -> qebm_table* {
      if (!table) {
        if (!state || !povm) die(2, "this pipeline needs both 'state' and 'povm'");
        check(qebm_table_create(state.ptr, povm.ptr, table.out()), "outcome distribution");
      }
      return table.ptr;
    };

    // data samples: drawn fresh or loaded, never both
    const json& sj = cfg.at("samples");
    bool draw = sj.contains("m");
    bool load = sj.contains("path");
    if (draw == load) die(2, "'samples' needs exactly one of m (draw) and path (load)");
    SamplesHandle data;
    if (draw) {
      std::uint64_t m = sj.at("m").get<std::uint64_t>();
      std::uint64_t seed = sj.value("seed", 0ULL);
      seeds["samples"] = seed;
      std::string prov = "drawn m=" + std::to_string(m) + " seed=" + std::to_string(seed) +
                         " config=" + hash;
      check(qebm_sample_table(need_table(), m, seed, prov.c_str(), data.out()), "sampling");
      fs::path p = art.claim("samples.txt");
      check(qebm_samples_save(data.ptr, p.string().c_str()), "saving samples");
    } else {
      check(qebm_samples_load(sj.at("path").get<std::string>().c_str(), data.out()),
            "loading samples");
    }

    ModelHandle model;
    if (cfg.contains("fit")) {
      json fit_cfg = cfg.at("fit");
      std::string report;
      {
        char* report_c = nullptr;
        check(qebm_fit(fit_cfg.dump().c_str(), data.ptr, model.out(), &report_c), "fit");
        report = take_string(report_c);
      }
      seeds["fit"] = fit_cfg.value("seed", 0ULL);
      fs::path rp = art.claim("fit_report.jsonl");
      std::ofstream(rp) << report;
      json prov;
      prov["config_hash"] = hash;
      prov["version"] = qebm_version();
      fs::path mp = art.claim("model.json");
      check(qebm_model_save(model.ptr, mp.string().c_str(), prov.dump().c_str()), "saving model");
    }

    SamplesHandle model_samples;
    if (cfg.contains("gibbs")) {
      if (!model) die(2, "'gibbs' needs a 'fit' section to produce a model");
      const json& gj = cfg.at("gibbs");
      std::uint64_t total = gj.at("total").get<std::uint64_t>();
      std::uint64_t seed = gj.value("seed", 0ULL);
      seeds["gibbs"] = seed;
      std::string prov = "gibbs total=" + std::to_string(total) + " seed=" + std::to_string(seed) +
                         " config=" + hash;
      check(qebm_gibbs_sample(model.ptr, gj.value("chains", 1), gj.value("burn_in", -1L),
                              gj.value("thin", -1L), total, seed, prov.c_str(),
                              model_samples.out()),
            "gibbs sampling");
      fs::path p = art.claim("model_samples.txt");
      check(qebm_samples_save(model_samples.ptr, p.string().c_str()), "saving model samples");
    }

    if (cfg.contains("estimate")) {
      const json& ej = cfg.at("estimate");
      for (auto it = ej.begin(); it != ej.end(); ++it) {
        const std::string& k = it.key();
        if (k != "observables" && k != "fidelity" && k != "tvd" && k != "orders")
          die(2, "unknown field '" + k + "' in estimate section");
      }

      if (ej.contains("observables")) {
        if (!povm) die(2, "'observables' needs a 'povm' section");
        std::ostringstream lines;
        auto emit = [&](qebm_samples* samples, const char* source, const std::string& pauli) {
          double mean = 0, se = 0;
          std::uint64_t n = 0;
          check(qebm_estimate_observable(samples, povm.ptr, pauli.c_str(), &mean, &se, &n),
                "observable " + pauli);
          json line;
          line["observable"] = pauli;
          line["source"] = source;
          line["mean"] = mean;
          line["stderr"] = se;
          line["n"] = n;
          lines << line.dump() << "\n";
        };
        for (const json& obs : ej.at("observables")) {
          std::string pauli = obs.get<std::string>();
          emit(data.ptr, "data", pauli);
          if (model_samples) emit(model_samples.ptr, "model", pauli);
        }
        fs::path p = art.claim("estimates.jsonl");
        std::ofstream(p) << lines.str();
      }

      if (ej.contains("fidelity")) {
        if (!povm) die(2, "'fidelity' needs a 'povm' section");
        std::string target = ej.at("fidelity").is_string() ? ej.at("fidelity").get<std::string>()
                                                           : ej.at("fidelity").dump();
        json out = json::object();
        auto emit = [&](qebm_samples* samples, const char* source) {
          double mean = 0, se = 0;
          std::uint64_t n = 0;
          check(qebm_estimate_fidelity(samples, povm.ptr, target.c_str(), &mean, &se, &n),
                "fidelity");
          out[source] = {{"mean", mean}, {"stderr", se}, {"n", n}};
        };
        emit(data.ptr, "data");
        if (model_samples) emit(model_samples.ptr, "model");
        out["target"] = ej.at("fidelity");
        fs::path p = art.claim("fidelity.json");
        std::ofstream(p) << out.dump(2) << "\n";
      }

      if (ej.contains("tvd")) {
        if (!model_samples) die(2, "'tvd' needs a 'gibbs' section to produce model samples");
        std::uint64_t floor_seed = ej.at("tvd").value("floor_seed", 0ULL);
        seeds["tvd_floor"] = floor_seed;
        double tvd = 0, floor = 0;
        check(qebm_estimate_tvd(model_samples.ptr, need_table(), floor_seed, &tvd, &floor), "tvd");
        json out;
        out["tvd"] = tvd;
        out["sampling_floor"] = floor;
        out["m"] = [&] {
          std::uint64_t m = 0;
          qebm_samples_info(model_samples.ptr, nullptr, nullptr, &m);
          return m;
        }();
        fs::path p = art.claim("tvd.json");
        std::ofstream(p) << out.dump(2) << "\n";
      }

      if (ej.contains("orders") && ej.at("orders").get<bool>()) {
        if (!model) die(2, "'orders' needs a 'fit' section");
        char* text_c = nullptr;
        check(qebm_order_strength(model.ptr, &text_c), "order strengths");
        fs::path p = art.claim("orders.txt");
        std::ofstream(p) << take_string(text_c);
      }
    }

    json runj;
    runj["version"] = qebm_version();
    runj["config_hash"] = hash;
    runj["config"] = cfg;
    runj["seeds"] = seeds;
    runj["artifacts"] = art.names;
    fs::path rp = art.claim("run.json");
    std::ofstream(rp) << runj.dump(2) << "\n";
    std::printf("run complete: %zu artifacts in %s\n", art.names.size(), art.dir.string().c_str());
    return 0;
  } catch (...) {
    // never leave half-written artifact sets behind
    art.discard_all();
    throw;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Energy-based generative models of POVM measurement data"};
  app.set_version_flag("--version", std::string(qebm_version()));
  int threads = 0;
  app.add_option("--threads", threads, "cap worker threads (default: all cores)");

  std::string spec, povm_kind = "tetrahedral", target, samples_path, model_path, config_arg,
      out_path, report_path;
  std::uint64_t povm_seed = 0, seed = 0, m = 0, total = 0, floor_seed = 0;
  std::vector<std::string> paulis;

  auto* c_state = app.add_subcommand("state", "inspect an exact quantum state");
  c_state->add_option("--spec", spec, "state spec (inline JSON or file)")->required();
  c_state->add_option("--pauli", paulis, "pauli strings to evaluate exactly");

  auto* c_sample = app.add_subcommand("sample", "draw measurement outcomes from a state");
  c_sample->add_option("--spec", spec, "state spec (inline JSON or file)")->required();
  c_sample->add_option("--povm", povm_kind, "computational | tetrahedral | rotated-tetrahedral");
  c_sample->add_option("--povm-seed", povm_seed, "seed for rotated-tetrahedral");
  c_sample->add_option("-m", m, "number of samples")->required();
  c_sample->add_option("--seed", seed, "sampling seed");
  c_sample->add_option("-o,--out", out_path, "output samples file")->required();

  auto* c_learn = app.add_subcommand("learn", "fit an energy model to samples");
  c_learn->add_option("--samples", samples_path, "input samples file")->required();
  c_learn->add_option("--config", config_arg, "fit config (inline JSON or file)")->required();
  c_learn->add_option("-o,--out", out_path, "output model file")->required();
  c_learn->add_option("--report", report_path, "fit report jsonl file");

  auto* c_gibbs = app.add_subcommand("gibbs", "sample a learned model");
  int chains = 1;
  long burn_in = -1, thin = -1;
  c_gibbs->add_option("--model", model_path, "model file")->required();
  c_gibbs->add_option("--chains", chains, "independent chains");
  c_gibbs->add_option("--burn-in", burn_in, "burn-in sweeps (-1: default)");
  c_gibbs->add_option("--thin", thin, "sweeps between rows (-1: default)");
  c_gibbs->add_option("--total", total, "total rows")->required();
  c_gibbs->add_option("--seed", seed, "chain seed");
  c_gibbs->add_option("-o,--out", out_path, "output samples file")->required();

  auto* c_est = app.add_subcommand("estimate", "estimate observables from samples");
  c_est->add_option("--samples", samples_path, "samples file")->required();
  c_est->add_option("--povm", povm_kind, "POVM kind used to draw the samples");
  c_est->add_option("--povm-seed", povm_seed, "seed for rotated-tetrahedral");
  c_est->add_option("--pauli", paulis, "pauli strings")->required();

  auto* c_fid = app.add_subcommand("fidelity", "estimate fidelity against a pure target");
  c_fid->add_option("--samples", samples_path, "samples file")->required();
  c_fid->add_option("--povm", povm_kind, "POVM kind used to draw the samples");
  c_fid->add_option("--povm-seed", povm_seed, "seed for rotated-tetrahedral");
  c_fid->add_option("--target", target, "ghz-plus | ghz-minus | {\"terms\": ...}")->required();

  auto* c_tvd = app.add_subcommand("tvd", "total variation against an exact distribution");
  c_tvd->add_option("--samples", samples_path, "samples file")->required();
  c_tvd->add_option("--spec", spec, "state spec (inline JSON or file)")->required();
  c_tvd->add_option("--povm", povm_kind, "POVM kind");
  c_tvd->add_option("--povm-seed", povm_seed, "seed for rotated-tetrahedral");
  c_tvd->add_option("--floor-seed", floor_seed, "seed for the sampling-floor reference draw");

  auto* c_orders = app.add_subcommand("orders", "interaction order strengths of a poly model");
  c_orders->add_option("--model", model_path, "model file")->required();

  auto* c_run = app.add_subcommand("run", "run a full pipeline from a JSON config");
  c_run->add_option("--config", config_arg, "pipeline config (inline JSON or file)")->required();

  app.require_subcommand(1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  if (threads > 0) setenv("QEBM_THREADS", std::to_string(threads).c_str(), 1);

  try {
    if (*c_state) {
      StateHandle state = make_state(json_arg(spec));
      int n = 0;
      check(qebm_state_sites(state.ptr, &n), "state");
      std::printf("sites: %d\n", n);
      for (const auto& p : paulis) {
        double v = 0;
        check(qebm_state_pauli_expectation(state.ptr, p.c_str(), &v), "expectation " + p);
        std::printf("<%s> = %.10g\n", p.c_str(), v);
      }
    } else if (*c_sample) {
      StateHandle state = make_state(json_arg(spec));
      PovmHandle povm = make_povm(povm_kind, povm_seed);
      TableHandle table;
      check(qebm_table_create(state.ptr, povm.ptr, table.out()), "outcome distribution");
      SamplesHandle samples;
      std::string prov = "cli sample povm=" + povm_kind + " m=" + std::to_string(m) +
                         " seed=" + std::to_string(seed);
      check(qebm_sample_table(table.ptr, m, seed, prov.c_str(), samples.out()), "sampling");
      check(qebm_samples_save(samples.ptr, out_path.c_str()), "saving samples");
      std::printf("wrote %llu rows to %s\n", static_cast<unsigned long long>(m), out_path.c_str());
    } else if (*c_learn) {
      SamplesHandle samples;
      check(qebm_samples_load(samples_path.c_str(), samples.out()), "loading samples");
      ModelHandle model;
      char* report_c = nullptr;
      check(qebm_fit(json_arg(config_arg).c_str(), samples.ptr, model.out(), &report_c), "fit");
      std::string report = take_string(report_c);
      if (!report_path.empty()) std::ofstream(report_path) << report;
      json prov;
      prov["source_samples"] = samples_path;
      prov["version"] = qebm_version();
      check(qebm_model_save(model.ptr, out_path.c_str(), prov.dump().c_str()), "saving model");
      std::printf("wrote model to %s\n", out_path.c_str());
      if (report_path.empty()) std::fputs(report.c_str(), stdout);
    } else if (*c_gibbs) {
      ModelHandle model;
      check(qebm_model_load(model_path.c_str(), model.out()), "loading model");
      SamplesHandle samples;
      std::string prov = "cli gibbs model=" + model_path + " total=" + std::to_string(total) +
                         " seed=" + std::to_string(seed);
      check(qebm_gibbs_sample(model.ptr, chains, burn_in, thin, total, seed, prov.c_str(),
                              samples.out()),
            "gibbs sampling");
      check(qebm_samples_save(samples.ptr, out_path.c_str()), "saving samples");
      std::printf("wrote %llu rows to %s\n", static_cast<unsigned long long>(total),
                  out_path.c_str());
    } else if (*c_est) {
      SamplesHandle samples;
      check(qebm_samples_load(samples_path.c_str(), samples.out()), "loading samples");
      PovmHandle povm = make_povm(povm_kind, povm_seed);
      for (const auto& p : paulis) {
        double mean = 0, se = 0;
        std::uint64_t n = 0;
        check(qebm_estimate_observable(samples.ptr, povm.ptr, p.c_str(), &mean, &se, &n),
              "observable " + p);
        print_estimate("<" + p + ">", mean, se, n);
      }
    } else if (*c_fid) {
      SamplesHandle samples;
      check(qebm_samples_load(samples_path.c_str(), samples.out()), "loading samples");
      PovmHandle povm = make_povm(povm_kind, povm_seed);
      double mean = 0, se = 0;
      std::uint64_t n = 0;
      check(qebm_estimate_fidelity(samples.ptr, povm.ptr, target.c_str(), &mean, &se, &n),
            "fidelity");
      print_estimate("fidelity", mean, se, n);
    } else if (*c_tvd) {
      SamplesHandle samples;
      check(qebm_samples_load(samples_path.c_str(), samples.out()), "loading samples");
      StateHandle state = make_state(json_arg(spec));
      PovmHandle povm = make_povm(povm_kind, povm_seed);
      TableHandle table;
      check(qebm_table_create(state.ptr, povm.ptr, table.out()), "outcome distribution");
      double tvd = 0, floor = 0;
      check(qebm_estimate_tvd(samples.ptr, table.ptr, floor_seed, &tvd, &floor), "tvd");
      std::printf("tvd=%.6g sampling_floor=%.6g\n", tvd, floor);
    } else if (*c_orders) {
      ModelHandle model;
      check(qebm_model_load(model_path.c_str(), model.out()), "loading model");
      char* text_c = nullptr;
      check(qebm_order_strength(model.ptr, &text_c), "order strengths");
      std::fputs(take_string(text_c).c_str(), stdout);
    } else if (*c_run) {
      return cmd_run(config_arg);
    }
  } catch (const CliError& e) {
    std::fprintf(stderr, "error: %s\n", e.message.c_str());
    return e.exit_code;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
