#ifndef SCMC_EXPERIMENTS_HPP
#define SCMC_EXPERIMENTS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "scmc/engine.hpp"
#include "scmc/types.hpp"

namespace scmc {

enum class ExperimentKind { monotone, manifold, sir, ricker_abc };

std::string to_string(ExperimentKind kind);
ExperimentKind experiment_from_string(const std::string& name);

/// Fully validated run description. Defaults depend on the experiment; every
/// field is written back into meta.json for provenance.
struct ExperimentConfig {
    ExperimentKind experiment = ExperimentKind::monotone;
    std::uint64_t seed = 1;
    int particles = 0;             // 0: experiment default
    int threads = 1;               // 0: auto (hardware concurrency)
    std::string out_dir = "out";
    std::vector<int> checkpoint_stages;  // empty: engine default

    // monotone
    std::string toy = "f1";
    int poly_order = 9;
    double noise = 0.1;
    int n_points = 30;
    int monotone_stages = 50;
    double tau_min = 1e-2;
    double tau_max = 1e5;
    int monotone_sweeps = 1;

    // manifold
    int manifold_stages = 1102;
    int manifold_sweeps = 1;

    // sir
    int b_steps = 25;
    int xi_steps = 25;
    double b_min = 2.0;
    double b_max = 26.0;
    double true_alpha = 2.5;
    double true_beta = 0.02;
    int true_i0 = 5;
    int n_pop = 261;
    int days = 136;
    double rk4_step = 0.1;
    int sir_sweeps = 5;
    std::string sir_data;  // optional CSV (day, cumulative_deaths)

    // ricker-abc
    int replicates = 100;
    int ricker_n_obs = 50;
    double true_r = 44.701184493300815;  // exp(3.8)
    double true_sigma2_e = 0.09;
    double true_phi = 10.0;
    int abc_sweeps = 5;
    std::string ricker_data;  // optional CSV of observed counts
    std::vector<double> tolerances;  // empty: built-in defaults

    int effective_particles() const;
    int effective_threads() const;
};

/// Parse and validate a config from a JSON file; unknown keys are errors.
ExperimentConfig parse_config(const std::string& path);
ExperimentConfig parse_config_json(const std::string& json_text);

/// Canonical JSON rendering of a config (round-trips through parse).
std::string config_to_json(const ExperimentConfig& config);

struct ExperimentResult {
    ParticleEnsemble ensemble;
    RunTrace trace;
    std::vector<std::string> component_names;
};

/// Run the configured experiment in memory (no file output).
ExperimentResult run_experiment_in_memory(const ExperimentConfig& config);

/// Run and write particles_stage<t>.csv, trace.json, and meta.json into
/// config.out_dir. Identical (config, seed) produce byte-identical particle
/// and trace files regardless of thread count.
void run_experiment(const ExperimentConfig& config);

Vec load_counts_csv(const std::string& path);

}  // namespace scmc

#endif  // SCMC_EXPERIMENTS_HPP
