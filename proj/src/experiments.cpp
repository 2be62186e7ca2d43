#include "scmc/experiments.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "scmc/abc.hpp"
#include "scmc/errors.hpp"
#include "scmc/monotone.hpp"
#include "scmc/probit.hpp"
#include "scmc/rng.hpp"
#include "scmc/sir.hpp"

namespace scmc {

namespace {

using nlohmann::json;

constexpr std::uint64_t kDataStreamTag = 97;  // observed-data generation stream

ToyFunction toy_from_string(const std::string& name) {
    if (name == "f1") return ToyFunction::f1;
    if (name == "f2") return ToyFunction::f2;
    if (name == "f3") return ToyFunction::f3;
    throw config_error("unknown toy function: " + name);
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::vector<double> parse_numbers(const std::string& line) {
    std::vector<double> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        std::stringstream cs(cell);
        double v;
        if (cs >> v) out.push_back(v);
    }
    return out;
}

}  // namespace

std::string to_string(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::monotone: return "monotone";
        case ExperimentKind::manifold: return "manifold";
        case ExperimentKind::sir: return "sir";
        case ExperimentKind::ricker_abc: return "ricker-abc";
    }
    throw config_error("unknown experiment kind");
}

ExperimentKind experiment_from_string(const std::string& name) {
    if (name == "monotone") return ExperimentKind::monotone;
    if (name == "manifold") return ExperimentKind::manifold;
    if (name == "sir") return ExperimentKind::sir;
    if (name == "ricker-abc") return ExperimentKind::ricker_abc;
    throw config_error("unknown experiment: " + name);
}

int ExperimentConfig::effective_particles() const {
    if (particles > 0) return particles;
    return experiment == ExperimentKind::manifold ? 100000 : 2000;
}

int ExperimentConfig::effective_threads() const {
    if (threads > 0) return threads;
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

ExperimentConfig parse_config_json(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw config_error(std::string("config parse error: ") + e.what());
    }
    if (!j.is_object()) throw config_error("config must be a JSON object");

    ExperimentConfig c;
    bool have_experiment = false;
    for (const auto& [key, value] : j.items()) {
        try {
            if (key == "experiment") {
                c.experiment = experiment_from_string(value.get<std::string>());
                have_experiment = true;
            } else if (key == "seed") {
                c.seed = value.get<std::uint64_t>();
            } else if (key == "particles") {
                c.particles = value.get<int>();
            } else if (key == "threads") {
                if (value.is_string() && value.get<std::string>() == "auto") c.threads = 0;
                else c.threads = value.get<int>();
            } else if (key == "out") {
                c.out_dir = value.get<std::string>();
            } else if (key == "checkpoint_stages") {
                c.checkpoint_stages = value.get<std::vector<int>>();
            } else if (key == "toy") {
                c.toy = value.get<std::string>();
            } else if (key == "poly_order") {
                c.poly_order = value.get<int>();
            } else if (key == "noise") {
                c.noise = value.get<double>();
            } else if (key == "n_points") {
                c.n_points = value.get<int>();
            } else if (key == "monotone_stages") {
                c.monotone_stages = value.get<int>();
            } else if (key == "tau_min") {
                c.tau_min = value.get<double>();
            } else if (key == "tau_max") {
                c.tau_max = value.get<double>();
            } else if (key == "monotone_sweeps") {
                c.monotone_sweeps = value.get<int>();
            } else if (key == "manifold_stages") {
                c.manifold_stages = value.get<int>();
            } else if (key == "manifold_sweeps") {
                c.manifold_sweeps = value.get<int>();
            } else if (key == "b_steps") {
                c.b_steps = value.get<int>();
            } else if (key == "xi_steps") {
                c.xi_steps = value.get<int>();
            } else if (key == "b_min") {
                c.b_min = value.get<double>();
            } else if (key == "b_max") {
                c.b_max = value.get<double>();
            } else if (key == "true_alpha") {
                c.true_alpha = value.get<double>();
            } else if (key == "true_beta") {
                c.true_beta = value.get<double>();
            } else if (key == "true_i0") {
                c.true_i0 = value.get<int>();
            } else if (key == "n_pop") {
                c.n_pop = value.get<int>();
            } else if (key == "days") {
                c.days = value.get<int>();
            } else if (key == "rk4_step") {
                c.rk4_step = value.get<double>();
            } else if (key == "sir_sweeps") {
                c.sir_sweeps = value.get<int>();
            } else if (key == "sir_data") {
                c.sir_data = value.get<std::string>();
            } else if (key == "replicates") {
                c.replicates = value.get<int>();
            } else if (key == "ricker_n_obs") {
                c.ricker_n_obs = value.get<int>();
            } else if (key == "true_r") {
                c.true_r = value.get<double>();
            } else if (key == "true_sigma2_e") {
                c.true_sigma2_e = value.get<double>();
            } else if (key == "true_phi") {
                c.true_phi = value.get<double>();
            } else if (key == "abc_sweeps") {
                c.abc_sweeps = value.get<int>();
            } else if (key == "ricker_data") {
                c.ricker_data = value.get<std::string>();
            } else if (key == "tolerances") {
                c.tolerances = value.get<std::vector<double>>();
            } else {
                throw config_error("unknown config key: " + key);
            }
        } catch (const json::exception& e) {
            throw config_error("config field '" + key + "': " + e.what());
        }
    }
    if (!have_experiment) throw config_error("config field 'experiment' is required");

    // Field-level validation against the owning modules' preconditions.
    if (c.particles < 0 || (c.particles > 0 && c.particles < 2))
        throw config_error("config field 'particles': need at least 2");
    if (c.threads < 0) throw config_error("config field 'threads': must be positive or \"auto\"");
    if (c.poly_order < 1) throw config_error("config field 'poly_order': must be positive");
    if (c.noise < 0.0) throw config_error("config field 'noise': must be non-negative");
    if (c.n_points < c.poly_order + 1)
        throw config_error("config field 'n_points': need at least poly_order+1 points");
    if (c.monotone_stages < 1 || c.manifold_stages < 1)
        throw config_error("stage counts must be positive");
    if (c.tau_min <= 0.0 || c.tau_max < c.tau_min)
        throw config_error("require 0 < tau_min <= tau_max");
    if (c.monotone_sweeps < 1 || c.manifold_sweeps < 1 || c.sir_sweeps < 1 || c.abc_sweeps < 1)
        throw config_error("sweep counts must be positive");
    if (c.b_steps < 1 || c.xi_steps < 1) throw config_error("b_steps and xi_steps must be positive");
    if (c.b_min <= 0.0 || c.b_max < c.b_min) throw config_error("require 0 < b_min <= b_max");
    if (c.true_alpha <= 0.0 || c.true_beta <= 0.0) throw config_error("SIR truth rates must be positive");
    if (c.n_pop < 1 || c.true_i0 < 0 || c.true_i0 > c.n_pop)
        throw config_error("require 0 <= true_i0 <= n_pop");
    if (c.days < 1) throw config_error("config field 'days': must be positive");
    if (c.rk4_step <= 0.0) throw config_error("config field 'rk4_step': must be positive");
    if (c.replicates < 1) throw config_error("config field 'replicates': must be positive");
    if (c.ricker_n_obs < 1) throw config_error("config field 'ricker_n_obs': must be positive");
    if (c.true_r <= 0.0 || c.true_sigma2_e <= 0.0 || c.true_phi <= 0.0)
        throw config_error("Ricker truth parameters must be positive");
    if (!c.tolerances.empty() && c.tolerances.size() != 7)
        throw config_error("config field 'tolerances': expected 7 values");
    toy_from_string(c.toy);
    return c;
}

ExperimentConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_json(buf.str());
}

std::string config_to_json(const ExperimentConfig& c) {
    json j;
    j["experiment"] = to_string(c.experiment);
    j["seed"] = c.seed;
    j["particles"] = c.particles;
    j["threads"] = c.threads;
    j["out"] = c.out_dir;
    j["checkpoint_stages"] = c.checkpoint_stages;
    j["toy"] = c.toy;
    j["poly_order"] = c.poly_order;
    j["noise"] = c.noise;
    j["n_points"] = c.n_points;
    j["monotone_stages"] = c.monotone_stages;
    j["tau_min"] = c.tau_min;
    j["tau_max"] = c.tau_max;
    j["monotone_sweeps"] = c.monotone_sweeps;
    j["manifold_stages"] = c.manifold_stages;
    j["manifold_sweeps"] = c.manifold_sweeps;
    j["b_steps"] = c.b_steps;
    j["xi_steps"] = c.xi_steps;
    j["b_min"] = c.b_min;
    j["b_max"] = c.b_max;
    j["true_alpha"] = c.true_alpha;
    j["true_beta"] = c.true_beta;
    j["true_i0"] = c.true_i0;
    j["n_pop"] = c.n_pop;
    j["days"] = c.days;
    j["rk4_step"] = c.rk4_step;
    j["sir_sweeps"] = c.sir_sweeps;
    j["sir_data"] = c.sir_data;
    j["replicates"] = c.replicates;
    j["ricker_n_obs"] = c.ricker_n_obs;
    j["true_r"] = c.true_r;
    j["true_sigma2_e"] = c.true_sigma2_e;
    j["true_phi"] = c.true_phi;
    j["abc_sweeps"] = c.abc_sweeps;
    j["ricker_data"] = c.ricker_data;
    j["tolerances"] = c.tolerances;
    return j.dump(2);
}

Vec load_counts_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open data file: " + path);
    std::vector<double> values;
    std::string line;
    while (std::getline(in, line))
        for (double v : parse_numbers(line)) values.push_back(v);
    if (values.empty()) throw config_error("no numeric values in " + path);
    Vec y(static_cast<Index>(values.size()));
    for (std::size_t i = 0; i < values.size(); ++i) y[static_cast<Index>(i)] = values[i];
    return y;
}

namespace {

// CSV with columns (day, cumulative_deaths); header lines are skipped.
std::pair<Vec, Vec> load_sir_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open data file: " + path);
    std::vector<double> t, y;
    std::string line;
    while (std::getline(in, line)) {
        const std::vector<double> row = parse_numbers(line);
        if (row.size() < 2) continue;
        t.push_back(row[0]);
        y.push_back(row[1]);
    }
    if (t.empty()) throw config_error("no (day, deaths) rows in " + path);
    Vec tv(static_cast<Index>(t.size())), yv(static_cast<Index>(y.size()));
    for (std::size_t i = 0; i < t.size(); ++i) {
        tv[static_cast<Index>(i)] = t[i];
        yv[static_cast<Index>(i)] = y[i];
    }
    return {tv, yv};
}

KernelFactory gaussian_kernel_factory(const DensitySequence& seq, int sweeps) {
    return [&seq, sweeps](int t, const ParticleEnsemble& ens) {
        const Vec sd = weighted_component_sd(ens);
        MutationKernel k;
        k.sweeps = sweeps;
        for (Index c = 0; c < sd.size(); ++c) k.proposals.push_back(GaussianStep{0.5 * sd[c]});
        k.log_target = [&seq, t](const Vec& theta) { return seq.log_kernel(theta, t); };
        return k;
    };
}

ExperimentResult run_monotone(const ExperimentConfig& c) {
    auto data_rng = rng::substream(c.seed, kDataStreamTag, 0);
    const ToyData data = generate_toy_data(toy_from_string(c.toy), c.n_points, c.noise, data_rng);
    const PolyModel model = make_poly_model(data.x, c.poly_order);
    const NIGHyper hyper = NIGHyper::diffuse(c.poly_order);
    const TauSchedule schedule = TauSchedule::geometric(c.tau_min, c.tau_max, c.monotone_stages);
    const DensitySequence seq = monotone_sequence(model, data.y, hyper, schedule.values);

    SmcConfig sc;
    sc.seed = c.seed;
    sc.particles = c.effective_particles();
    sc.threads = c.effective_threads();
    sc.checkpoint_stages = c.checkpoint_stages;
    auto [ens, trace] = run_scmc(seq, gaussian_kernel_factory(seq, c.monotone_sweeps), sc);

    ExperimentResult res{std::move(ens), std::move(trace), {}};
    for (int k = 0; k <= c.poly_order; ++k) res.component_names.push_back("beta" + std::to_string(k));
    res.component_names.push_back("sigma2");
    return res;
}

namespace {

// Hyperbolic-coordinate ensembles (s, u, sigma) back to the (x, y) plane.
ParticleEnsemble manifold_to_plane(const ParticleEnsemble& ens) {
    ParticleEnsemble out;
    out.particles.resize(ens.particles.rows(), 2);
    out.log_weights = ens.log_weights;
    for (Index i = 0; i < ens.particles.rows(); ++i)
        out.particles.row(i) = manifold_from_hyperbolic(ens.particles.row(i).transpose());
    return out;
}

}  // namespace

ExperimentResult run_manifold(const ExperimentConfig& c) {
    const TauSchedule schedule = TauSchedule::geometric(c.tau_min, c.tau_max, c.manifold_stages);
    // Sample in hyperbolic coordinates: the constraint defect is a single
    // coordinate there, so ensemble-adapted proposal scales stay effective
    // as the admissible band shrinks. Outputs are mapped back to (x, y).
    const DensitySequence seq = manifold_sequence_hyperbolic(schedule);

    SmcConfig sc;
    sc.seed = c.seed;
    sc.particles = c.effective_particles();
    sc.threads = c.effective_threads();
    sc.checkpoint_stages = c.checkpoint_stages;
    KernelFactory factory = [&seq, &c](int t, const ParticleEnsemble& ens) {
        const Vec sd = weighted_component_sd(ens);
        MutationKernel k;
        k.sweeps = c.manifold_sweeps;
        k.proposals.push_back(GaussianStep{0.5 * sd[0]});
        k.proposals.push_back(GaussianStep{0.5 * sd[1]});
        k.proposals.push_back(IntegerStep{2});  // branch swap: sigma -> -sigma
        k.log_target = [&seq, t](const Vec& v) { return seq.log_kernel(v, t); };
        return k;
    };
    auto [ens, trace] = run_scmc(seq, factory, sc);

    ens = manifold_to_plane(ens);
    for (StageRecord& rec : trace.stages)
        if (rec.has_checkpoint) rec.checkpoint = manifold_to_plane(rec.checkpoint);
    return {std::move(ens), std::move(trace), {"x", "y"}};
}

ExperimentResult run_sir(const ExperimentConfig& c) {
    Vec t_obs, y;
    if (!c.sir_data.empty()) {
        std::tie(t_obs, y) = load_sir_csv(c.sir_data);
    } else {
        t_obs.resize(c.days);
        for (int i = 0; i < c.days; ++i) t_obs[i] = static_cast<double>(i + 1);
        SIRParams truth{c.true_alpha, c.true_beta, c.true_i0, c.n_pop};
        auto data_rng = rng::substream(c.seed, kDataStreamTag, 0);
        y = sir_synthetic_data(truth, t_obs, data_rng, c.rk4_step);
    }
    const std::vector<RelaxStage> stages =
        default_relax_schedule(c.b_steps, c.xi_steps, c.b_min, c.b_max);
    const DensitySequence seq = build_relax_sequence(stages, y, t_obs, c.n_pop, c.rk4_step);

    SmcConfig sc;
    sc.seed = c.seed;
    sc.particles = c.effective_particles();
    sc.threads = c.effective_threads();
    sc.checkpoint_stages = c.checkpoint_stages;
    KernelFactory factory = [&seq, &c](int t, const ParticleEnsemble& ens) {
        const Vec sd = weighted_component_sd(ens);
        MutationKernel k;
        k.sweeps = c.sir_sweeps;
        k.proposals.push_back(GaussianStep{0.5 * sd[0]});
        k.proposals.push_back(GaussianStep{0.5 * sd[1]});
        k.proposals.push_back(IntegerStep{1});
        k.log_target = [&seq, t](const Vec& theta) { return seq.log_kernel(theta, t); };
        return k;
    };
    auto [ens, trace] = run_scmc(seq, factory, sc);
    return {std::move(ens), std::move(trace), {"alpha", "beta", "I0"}};
}

ExperimentResult run_ricker(const ExperimentConfig& c) {
    const AbcModel model = make_ricker_model(c.ricker_n_obs);
    Vec s_obs;
    if (!c.ricker_data.empty()) {
        s_obs = ricker_summaries(load_counts_csv(c.ricker_data));
    } else {
        RickerParams truth{c.true_r, c.true_sigma2_e, c.true_phi};
        auto data_rng = rng::substream(c.seed, kDataStreamTag, 0);
        s_obs = ricker_summaries(ricker_simulate(truth, c.ricker_n_obs, 1.0, data_rng));
    }
    Vec eps = ricker_tolerances();
    if (!c.tolerances.empty())
        for (Index i = 0; i < 7; ++i) eps[i] = c.tolerances[static_cast<std::size_t>(i)];

    AbcConfig ac;
    ac.seed = c.seed;
    ac.particles = c.effective_particles();
    ac.replicates = c.replicates;
    ac.sweeps = c.abc_sweeps;
    ac.threads = c.effective_threads();
    auto [ens, trace] = run_scmc_abc(model, s_obs, eps, ac);
    return {std::move(ens), std::move(trace), {"r", "sigma2_e", "phi"}};
}

void write_particles_csv(const std::string& path, int stage, const ParticleEnsemble& ens,
                         const std::vector<std::string>& names) {
    std::ofstream out(path);
    out << "stage,particle,weight";
    for (const std::string& name : names) out << "," << name;
    out << "\n";
    const Vec norm = normalize_log_weights(ens.log_weights);
    for (Index i = 0; i < ens.size(); ++i) {
        out << stage << "," << i << "," << format_double(std::exp(norm[i]));
        for (Index cidx = 0; cidx < ens.dim(); ++cidx)
            out << "," << format_double(ens.particles(i, cidx));
        out << "\n";
    }
}

json stage_record_json(const StageRecord& rec, const std::vector<std::string>& param_names) {
    json j;
    j["t"] = rec.t;
    for (std::size_t k = 0; k < param_names.size(); ++k)
        j[param_names[k]] = rec.params[static_cast<Index>(k)];
    j["ess"] = rec.ess;
    j["resampled"] = rec.resampled;
    j["acceptance"] = rec.acceptance;
    return j;
}

}  // namespace

ExperimentResult run_experiment_in_memory(const ExperimentConfig& config) {
    switch (config.experiment) {
        case ExperimentKind::monotone: return run_monotone(config);
        case ExperimentKind::manifold: return run_manifold(config);
        case ExperimentKind::sir: return run_sir(config);
        case ExperimentKind::ricker_abc: return run_ricker(config);
    }
    throw config_error("unknown experiment kind");
}

void run_experiment(const ExperimentConfig& config) {
    const auto start = std::chrono::steady_clock::now();
    ExperimentResult res = run_experiment_in_memory(config);
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    std::filesystem::create_directories(config.out_dir);
    const std::filesystem::path dir(config.out_dir);

    json trace_json;
    json stage_array = json::array();
    for (const StageRecord& rec : res.trace.stages) {
        if (rec.t == 0) {
            trace_json["init"] = stage_record_json(rec, res.trace.param_names);
        } else {
            stage_array.push_back(stage_record_json(rec, res.trace.param_names));
        }
        if (rec.has_checkpoint) {
            const std::string name = "particles_stage" + std::to_string(rec.t) + ".csv";
            write_particles_csv((dir / name).string(), rec.t, rec.checkpoint,
                                res.component_names);
        }
    }
    trace_json["stages"] = stage_array;
    {
        std::ofstream out(dir / "trace.json");
        out << trace_json.dump(2) << "\n";
    }
    {
        json meta;
        meta["seed"] = config.seed;
        meta["config"] = json::parse(config_to_json(config));
        meta["wall_clock_seconds"] = wall;
        std::ofstream out(dir / "meta.json");
        out << meta.dump(2) << "\n";
    }
}

}  // namespace scmc
