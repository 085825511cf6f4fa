#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "gridvolterra/errors.hpp"
#include "gridvolterra/features.hpp"
#include "gridvolterra/grid.hpp"
#include "gridvolterra/identify.hpp"
#include "gridvolterra/io.hpp"
#include "gridvolterra/powerflow.hpp"
#include "gridvolterra/solver.hpp"
#include "gridvolterra/version.hpp"

namespace gv = gridvolterra;
using nlohmann::json;

namespace {

std::string error_name(const std::exception& e) {
    if (dynamic_cast<const gv::CycleDetected*>(&e)) return "CycleDetected";
    if (dynamic_cast<const gv::DisconnectedBus*>(&e)) return "DisconnectedBus";
    if (dynamic_cast<const gv::DuplicateChild*>(&e)) return "DuplicateChild";
    if (dynamic_cast<const gv::BadIndex*>(&e)) return "BadIndex";
    if (dynamic_cast<const gv::ZeroImpedance*>(&e)) return "ZeroImpedance";
    if (dynamic_cast<const gv::SingularIncidence*>(&e)) return "SingularIncidence";
    if (dynamic_cast<const gv::NoConvergence*>(&e)) return "NoConvergence";
    if (dynamic_cast<const gv::NonPositiveVoltage*>(&e)) return "NonPositiveVoltage";
    if (dynamic_cast<const gv::NonFiniteInput*>(&e)) return "NonFiniteInput";
    if (dynamic_cast<const gv::DimensionMismatch*>(&e)) return "DimensionMismatch";
    if (dynamic_cast<const gv::SingularCovariance*>(&e)) return "SingularCovariance";
    if (dynamic_cast<const gv::DegenerateTruth*>(&e)) return "DegenerateTruth";
    if (dynamic_cast<const gv::FileNotFound*>(&e)) return "FileNotFound";
    if (dynamic_cast<const gv::ParseError*>(&e)) return "ParseError";
    if (dynamic_cast<const gv::ConfigError*>(&e)) return "ConfigError";
    if (dynamic_cast<const gv::Error*>(&e)) return "Error";
    return "Exception";
}

int exit_code(const std::exception& e) {
    if (dynamic_cast<const gv::FileNotFound*>(&e)) return 2;
    if (dynamic_cast<const gv::ParseError*>(&e)) return 2;
    if (dynamic_cast<const gv::ConfigError*>(&e)) return 2;
    if (dynamic_cast<const gv::Error*>(&e)) return 3;
    return 4;
}

void print_error(const std::exception& e) {
    json err{{"error", {{"type", error_name(e)}, {"message", e.what()}}}};
    std::cerr << err.dump() << "\n";
}

std::uint64_t env_seed() {
    const char* env = std::getenv("GRIDVOLTERRA_SEED");
    if (!env) return 0;
    std::string s(env);
    try {
        std::size_t used = 0;
        const unsigned long long v = std::stoull(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw gv::ConfigError("GRIDVOLTERRA_SEED is not an unsigned integer: '" + s + "'");
    }
}

gv::FlowModel parse_model(const std::string& name) {
    if (name == "exact") return gv::FlowModel::Exact;
    if (name == "linear") return gv::FlowModel::Linear;
    throw gv::ConfigError("model must be exact or linear, got '" + name + "'");
}

// Flat key = value config: one pair per line, # comments, optional double
// quotes around values.
std::map<std::string, std::string> parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw gv::FileNotFound("cannot open " + path);
    const auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    std::map<std::string, std::string> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw gv::ParseError(path + ":" + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        if (val.size() >= 2 && val.front() == '"' && val.back() == '"')
            val = val.substr(1, val.size() - 2);
        if (key.empty())
            throw gv::ParseError(path + ":" + std::to_string(lineno) + ": empty key");
        if (!out.emplace(key, val).second)
            throw gv::ParseError(path + ":" + std::to_string(lineno) + ": duplicate key " + key);
    }
    return out;
}

long long config_int(const std::string& key, const std::string& val) {
    try {
        std::size_t used = 0;
        const long long v = std::stoll(val, &used);
        if (used != val.size()) throw std::invalid_argument(val);
        return v;
    } catch (const std::exception&) {
        throw gv::ConfigError("config key " + key + " must be an integer, got '" + val + "'");
    }
}

double config_double(const std::string& key, const std::string& val) {
    try {
        std::size_t used = 0;
        const double v = std::stod(val, &used);
        if (used != val.size()) throw std::invalid_argument(val);
        return v;
    } catch (const std::exception&) {
        throw gv::ConfigError("config key " + key + " must be a number, got '" + val + "'");
    }
}

bool config_bool(const std::string& key, const std::string& val) {
    if (val == "true" || val == "1") return true;
    if (val == "false" || val == "0") return false;
    throw gv::ConfigError("config key " + key + " must be true or false, got '" + val + "'");
}

struct PipelineOptions {
    std::string grid_path;
    std::string profiles_path;
    std::string out_dir;
    int buses = 0;  // used only when grid_path is empty
    std::uint64_t seed = 0;
    bool seed_set = false;
    double degree_bias = 0.0;
    int steps = 240;
    double base_load = 0.01;
    double volatility = 0.4;
    double solar_fraction = 0.3;
    std::string model = "exact";
    double noise_std = 0.0;
    double flow_tol = 1e-10;
    int flow_max_iter = 200;
    bool sweep = true;
    double lambda = 0.0;
    double mu = 0.0;
    double tol = 1e-8;
    int max_iter = 20000;
    int jobs = 1;
    std::vector<std::string> methods{"volterra", "pc", "concentration"};
};

void apply_config(PipelineOptions& opt, const std::map<std::string, std::string>& kv) {
    for (const auto& [key, val] : kv) {
        if (key == "grid") opt.grid_path = val;
        else if (key == "profiles") opt.profiles_path = val;
        else if (key == "out_dir") opt.out_dir = val;
        else if (key == "buses") opt.buses = static_cast<int>(config_int(key, val));
        else if (key == "seed") {
            opt.seed = static_cast<std::uint64_t>(config_int(key, val));
            opt.seed_set = true;
        } else if (key == "degree_bias") opt.degree_bias = config_double(key, val);
        else if (key == "steps") opt.steps = static_cast<int>(config_int(key, val));
        else if (key == "base_load") opt.base_load = config_double(key, val);
        else if (key == "volatility") opt.volatility = config_double(key, val);
        else if (key == "solar_fraction") opt.solar_fraction = config_double(key, val);
        else if (key == "model") opt.model = val;
        else if (key == "noise_std") opt.noise_std = config_double(key, val);
        else if (key == "flow_tol") opt.flow_tol = config_double(key, val);
        else if (key == "flow_max_iter") opt.flow_max_iter = static_cast<int>(config_int(key, val));
        else if (key == "sweep") opt.sweep = config_bool(key, val);
        else if (key == "lambda") opt.lambda = config_double(key, val);
        else if (key == "mu") opt.mu = config_double(key, val);
        else if (key == "tol") opt.tol = config_double(key, val);
        else if (key == "max_iter") opt.max_iter = static_cast<int>(config_int(key, val));
        else if (key == "jobs") opt.jobs = static_cast<int>(config_int(key, val));
        else if (key == "methods") {
            opt.methods.clear();
            std::string cur;
            for (char c : val + ",") {
                if (c == ',') {
                    if (!cur.empty()) opt.methods.push_back(cur);
                    cur.clear();
                } else if (c != ' ') {
                    cur.push_back(c);
                }
            }
        } else {
            throw gv::ConfigError("unknown config key: " + key);
        }
    }
}

gv::SolverConfig solver_config(double lambda, double mu, bool sweep, double tol, int max_iter,
                               int jobs) {
    gv::SolverConfig cfg;
    cfg.lambda = lambda;
    cfg.mu = mu;
    cfg.sweep = sweep;
    cfg.tol = tol;
    cfg.max_iter = max_iter;
    cfg.jobs = jobs;
    return cfg;
}

void run_pipeline(const PipelineOptions& opt, bool dry_run) {
    if (opt.out_dir.empty()) throw gv::ConfigError("pipeline needs out_dir");
    if (opt.grid_path.empty() && opt.buses < 1)
        throw gv::ConfigError("pipeline needs either a grid file or buses >= 1");
    if (!opt.grid_path.empty() && opt.buses > 0)
        throw gv::ConfigError("grid file and buses are mutually exclusive");
    if (!opt.grid_path.empty() && !std::filesystem::exists(opt.grid_path))
        throw gv::FileNotFound("cannot open " + opt.grid_path);
    if (!opt.profiles_path.empty() && !std::filesystem::exists(opt.profiles_path))
        throw gv::FileNotFound("cannot open " + opt.profiles_path);
    if (opt.profiles_path.empty() && opt.steps < 1)
        throw gv::ConfigError("pipeline needs either a profiles file or steps >= 1");
    parse_model(opt.model);  // validate early
    for (const std::string& m : opt.methods)
        if (m != "volterra" && m != "pc" && m != "concentration")
            throw gv::ConfigError("unknown method: " + m);

    // stage seeds derived from the base seed so one value pins the whole run
    const std::uint64_t grid_seed = opt.seed;
    const std::uint64_t profile_seed = opt.seed + 1;
    const std::uint64_t noise_seed = opt.seed + 2;

    if (dry_run) {
        json plan{{"out_dir", opt.out_dir},
                  {"grid", opt.grid_path.empty() ? json{{"synth", {{"buses", opt.buses},
                                                                   {"seed", grid_seed},
                                                                   {"degree_bias", opt.degree_bias}}}}
                                                 : json{{"file", opt.grid_path}}},
                  {"profiles",
                   opt.profiles_path.empty()
                       ? json{{"synth",
                               {{"steps", opt.steps},
                                {"seed", profile_seed},
                                {"base_load", opt.base_load},
                                {"volatility", opt.volatility},
                                {"solar_fraction", opt.solar_fraction}}}}
                       : json{{"file", opt.profiles_path}}},
                  {"simulate",
                   {{"model", opt.model}, {"noise_std", opt.noise_std}, {"seed", noise_seed}}},
                  {"identify",
                   {{"sweep", opt.sweep}, {"lambda", opt.lambda}, {"mu", opt.mu},
                    {"tol", opt.tol}, {"max_iter", opt.max_iter}, {"jobs", opt.jobs}}},
                  {"evaluate", {{"methods", opt.methods}}}};
        std::cout << json{{"dry_run", true}, {"plan", plan}}.dump(2) << "\n";
        return;
    }

    std::error_code ec;
    std::filesystem::create_directories(opt.out_dir, ec);
    if (ec) throw gv::Error("cannot create directory " + opt.out_dir + ": " + ec.message());
    const std::filesystem::path base(opt.out_dir);

    const gv::RadialGrid grid = opt.grid_path.empty()
                                    ? gv::synth_grid(opt.buses, grid_seed, opt.degree_bias)
                                    : gv::load_grid(opt.grid_path);
    gv::save_grid(grid, (base / "grid.json").string());
    std::cout << "grid: " << grid.num_buses() << " buses\n";

    const gv::InjectionProfile profile =
        opt.profiles_path.empty()
            ? gv::synth_profiles(grid, opt.steps, profile_seed, opt.base_load, opt.volatility,
                                 opt.solar_fraction)
            : gv::load_profiles(opt.profiles_path);
    gv::save_profiles(profile, (base / "profiles.csv").string());

    gv::VoltageSeries series = gv::simulate_series(grid, profile, parse_model(opt.model),
                                                   opt.flow_tol, opt.flow_max_iter, opt.jobs);
    if (opt.noise_std > 0.0) series = gv::apply_noise(series, opt.noise_std, noise_seed);
    gv::save_series(series, (base / "series.csv").string());
    std::cout << "series: " << series.V.rows() << " steps x " << series.V.cols() << " buses\n";

    const gv::SolverConfig cfg =
        solver_config(opt.lambda, opt.mu, opt.sweep, opt.tol, opt.max_iter, opt.jobs);
    const gv::EvaluationReport rep = gv::evaluate(grid, series, cfg, opt.methods);
    gv::save_report(rep, opt.out_dir);
    for (const std::string& m : rep.methods) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.4f", rep.edge_roc.at(m).auc);
        std::cout << "edge auc " << m << ": " << buf << "\n";
    }
    if (rep.has_triads) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.4f", rep.triad_roc.auc);
        std::cout << "triad auc volterra: " << buf << "\n";
    }
    std::cout << "report: " << opt.out_dir << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"topology and second-order interaction identification for radial "
                 "distribution grids"};
    app.set_version_flag("--version", gv::kVersion);
    app.require_subcommand(1);

    // synth-grid
    auto* sg = app.add_subcommand("synth-grid", "generate a random radial feeder");
    int sg_buses = 0;
    std::uint64_t sg_seed = 0;
    double sg_bias = 0.0;
    std::string sg_out;
    sg->add_option("--buses", sg_buses, "number of non-substation buses")
        ->required()
        ->check(CLI::PositiveNumber);
    auto* sg_seed_opt = sg->add_option("--seed", sg_seed, "RNG seed (env GRIDVOLTERRA_SEED)");
    sg->add_option("--degree-bias", sg_bias, "attachment bias: >0 chains, <0 stars");
    sg->add_option("--out", sg_out, "output grid json")->required();
    sg->callback([&] {
        const std::uint64_t seed = sg_seed_opt->count() ? sg_seed : env_seed();
        const gv::RadialGrid grid = gv::synth_grid(sg_buses, seed, sg_bias);
        gv::save_grid(grid, sg_out);
        std::cout << "wrote " << sg_out << " (" << grid.num_buses() << " buses)\n";
    });

    // synth-profiles
    auto* sp = app.add_subcommand("synth-profiles", "generate synthetic injection profiles");
    std::string sp_grid, sp_out;
    int sp_steps = 240;
    std::uint64_t sp_seed = 0;
    double sp_base = 0.01, sp_vol = 0.4, sp_solar = 0.3;
    sp->add_option("--grid", sp_grid, "grid json")->required();
    sp->add_option("--steps,-T", sp_steps, "time steps")->check(CLI::PositiveNumber);
    auto* sp_seed_opt = sp->add_option("--seed", sp_seed, "RNG seed (env GRIDVOLTERRA_SEED)");
    sp->add_option("--base-load", sp_base, "mean per-unit consumption magnitude");
    sp->add_option("--volatility", sp_vol, "AR(1) fluctuation scale, 0 = constant");
    sp->add_option("--solar-fraction", sp_solar, "fraction of generating buses");
    sp->add_option("--out", sp_out, "output profiles csv")->required();
    sp->callback([&] {
        const std::uint64_t seed = sp_seed_opt->count() ? sp_seed : env_seed();
        const gv::RadialGrid grid = gv::load_grid(sp_grid);
        const gv::InjectionProfile prof =
            gv::synth_profiles(grid, sp_steps, seed, sp_base, sp_vol, sp_solar);
        gv::save_profiles(prof, sp_out);
        std::cout << "wrote " << sp_out << " (" << sp_steps << " steps)\n";
    });

    // simulate
    auto* sim = app.add_subcommand("simulate", "solve the branch flow per time step");
    std::string sim_grid, sim_profiles, sim_out, sim_model = "exact";
    double sim_tol = 1e-10, sim_noise = 0.0;
    int sim_max_iter = 200, sim_jobs = 1;
    std::uint64_t sim_seed = 0;
    sim->add_option("--grid", sim_grid, "grid json")->required();
    sim->add_option("--profiles", sim_profiles, "profiles csv")->required();
    sim->add_option("--model", sim_model, "exact | linear")
        ->check(CLI::IsMember({"exact", "linear"}));
    sim->add_option("--tol", sim_tol, "sweep convergence tolerance");
    sim->add_option("--max-iter", sim_max_iter, "sweep iteration cap");
    sim->add_option("--noise-std", sim_noise, "measurement noise std on v");
    auto* sim_seed_opt = sim->add_option("--seed", sim_seed, "noise seed (env GRIDVOLTERRA_SEED)");
    sim->add_option("--jobs", sim_jobs, "worker threads")->check(CLI::PositiveNumber);
    sim->add_option("--out", sim_out, "output series csv")->required();
    sim->callback([&] {
        const gv::RadialGrid grid = gv::load_grid(sim_grid);
        const gv::InjectionProfile prof = gv::load_profiles(sim_profiles);
        gv::VoltageSeries series = gv::simulate_series(grid, prof, parse_model(sim_model),
                                                       sim_tol, sim_max_iter, sim_jobs);
        if (sim_noise > 0.0) {
            const std::uint64_t seed = sim_seed_opt->count() ? sim_seed : env_seed();
            series = gv::apply_noise(series, sim_noise, seed);
        }
        gv::save_series(series, sim_out);
        std::cout << "wrote " << sim_out << " (" << series.V.rows() << " steps)\n";
    });

    // identify
    auto* idn = app.add_subcommand("identify", "fit the per-bus Volterra kernels");
    std::string idn_series, idn_out;
    double idn_lambda = 0.0, idn_mu = 0.0, idn_tol = 1e-8;
    int idn_max_iter = 20000, idn_jobs = 1;
    bool idn_sweep = false;
    idn->add_option("--series", idn_series, "voltage series csv")->required();
    idn->add_option("--lambda", idn_lambda, "l1 weight");
    idn->add_option("--mu", idn_mu, "group l2,1 weight");
    idn->add_flag("--sweep", idn_sweep, "select lambda, mu on a holdout grid");
    idn->add_option("--tol", idn_tol, "relative objective tolerance");
    idn->add_option("--max-iter", idn_max_iter, "iteration cap");
    idn->add_option("--jobs", idn_jobs, "worker threads")->check(CLI::PositiveNumber);
    idn->add_option("--out", idn_out, "output kernels json")->required();
    idn->callback([&] {
        const gv::VoltageSeries series = gv::load_series(idn_series);
        const gv::FeatureMatrix features = gv::build_feature_matrix(series);
        const gv::SolverConfig cfg =
            solver_config(idn_lambda, idn_mu, idn_sweep, idn_tol, idn_max_iter, idn_jobs);
        const gv::IdentifyResult result = gv::solve_all(series, features, cfg);
        gv::save_kernels(result.kernels, idn_out);
        std::filesystem::path diag(idn_out);
        diag.replace_extension(".diag.json");
        std::ofstream out(diag);
        if (!out) throw gv::Error("cannot open " + diag.string() + " for writing");
        out << gv::diagnostics_to_json(result).dump(2) << "\n";
        std::cout << "wrote " << idn_out << " and " << diag.string() << "\n";
    });

    // evaluate
    auto* ev = app.add_subcommand("evaluate", "score methods against the grid ground truth");
    std::string ev_grid, ev_series, ev_out;
    std::vector<std::string> ev_methods{"volterra", "pc", "concentration"};
    double ev_lambda = 0.0, ev_mu = 0.0, ev_tol = 1e-8;
    int ev_max_iter = 20000, ev_jobs = 1;
    bool ev_sweep = true;
    ev->add_option("--grid", ev_grid, "grid json")->required();
    ev->add_option("--series", ev_series, "voltage series csv")->required();
    ev->add_option("--methods", ev_methods, "volterra,pc,concentration")->delimiter(',');
    ev->add_option("--lambda", ev_lambda, "l1 weight (volterra)");
    ev->add_option("--mu", ev_mu, "group l2,1 weight (volterra)");
    ev->add_flag("--sweep,!--no-sweep", ev_sweep, "holdout grid for lambda, mu (default on)");
    ev->add_option("--tol", ev_tol, "relative objective tolerance");
    ev->add_option("--max-iter", ev_max_iter, "iteration cap");
    ev->add_option("--jobs", ev_jobs, "worker threads")->check(CLI::PositiveNumber);
    ev->add_option("--out", ev_out, "report directory")->required();
    ev->callback([&] {
        const gv::RadialGrid grid = gv::load_grid(ev_grid);
        const gv::VoltageSeries series = gv::load_series(ev_series);
        const gv::SolverConfig cfg =
            solver_config(ev_lambda, ev_mu, ev_sweep, ev_tol, ev_max_iter, ev_jobs);
        const gv::EvaluationReport rep = gv::evaluate(grid, series, cfg, ev_methods);
        gv::save_report(rep, ev_out);
        for (const std::string& m : rep.methods) {
            char buf[64];
            std::snprintf(buf, sizeof(buf), "%.4f", rep.edge_roc.at(m).auc);
            std::cout << "edge auc " << m << ": " << buf << "\n";
        }
        if (rep.has_triads) {
            char buf[64];
            std::snprintf(buf, sizeof(buf), "%.4f", rep.triad_roc.auc);
            std::cout << "triad auc volterra: " << buf << "\n";
        }
        std::cout << "report: " << ev_out << "\n";
    });

    // pipeline
    auto* pl = app.add_subcommand("pipeline", "synth/load, simulate, identify, evaluate");
    std::string pl_config;
    PipelineOptions flags;
    bool pl_dry = false;
    pl->add_option("--config", pl_config, "flat key = value config file");
    auto* o_grid = pl->add_option("--grid", flags.grid_path, "existing grid json");
    auto* o_profiles = pl->add_option("--profiles", flags.profiles_path, "existing profiles csv");
    auto* o_out = pl->add_option("--out-dir", flags.out_dir, "output directory");
    auto* o_buses = pl->add_option("--buses", flags.buses, "synth grid size");
    auto* o_seed = pl->add_option("--seed", flags.seed, "base seed (env GRIDVOLTERRA_SEED)");
    auto* o_bias = pl->add_option("--degree-bias", flags.degree_bias, "synth grid attachment bias");
    auto* o_steps = pl->add_option("--steps,-T", flags.steps, "synth profile steps");
    auto* o_base = pl->add_option("--base-load", flags.base_load, "synth profile mean load");
    auto* o_vol = pl->add_option("--volatility", flags.volatility, "synth profile volatility");
    auto* o_solar = pl->add_option("--solar-fraction", flags.solar_fraction, "generating fraction");
    auto* o_model = pl->add_option("--model", flags.model, "exact | linear")
                        ->check(CLI::IsMember({"exact", "linear"}));
    auto* o_noise = pl->add_option("--noise-std", flags.noise_std, "measurement noise std");
    auto* o_sweep = pl->add_flag("--sweep,!--no-sweep", flags.sweep, "holdout grid (default on)");
    auto* o_lambda = pl->add_option("--lambda", flags.lambda, "l1 weight when sweep is off");
    auto* o_mu = pl->add_option("--mu", flags.mu, "group weight when sweep is off");
    auto* o_tol = pl->add_option("--tol", flags.tol, "solver tolerance");
    auto* o_maxit = pl->add_option("--max-iter", flags.max_iter, "solver iteration cap");
    auto* o_jobs = pl->add_option("--jobs", flags.jobs, "worker threads");
    auto* o_methods =
        pl->add_option("--methods", flags.methods, "volterra,pc,concentration")->delimiter(',');
    pl->add_flag("--dry-run", pl_dry, "validate and print the plan, write nothing");
    pl->callback([&] {
        PipelineOptions opt;
        if (!pl_config.empty()) apply_config(opt, parse_config_file(pl_config));
        if (o_grid->count()) opt.grid_path = flags.grid_path;
        if (o_profiles->count()) opt.profiles_path = flags.profiles_path;
        if (o_out->count()) opt.out_dir = flags.out_dir;
        if (o_buses->count()) opt.buses = flags.buses;
        if (o_seed->count()) {
            opt.seed = flags.seed;
            opt.seed_set = true;
        }
        if (o_bias->count()) opt.degree_bias = flags.degree_bias;
        if (o_steps->count()) opt.steps = flags.steps;
        if (o_base->count()) opt.base_load = flags.base_load;
        if (o_vol->count()) opt.volatility = flags.volatility;
        if (o_solar->count()) opt.solar_fraction = flags.solar_fraction;
        if (o_model->count()) opt.model = flags.model;
        if (o_noise->count()) opt.noise_std = flags.noise_std;
        if (o_sweep->count()) opt.sweep = flags.sweep;
        if (o_lambda->count()) opt.lambda = flags.lambda;
        if (o_mu->count()) opt.mu = flags.mu;
        if (o_tol->count()) opt.tol = flags.tol;
        if (o_maxit->count()) opt.max_iter = flags.max_iter;
        if (o_jobs->count()) opt.jobs = flags.jobs;
        if (o_methods->count()) opt.methods = flags.methods;
        if (!opt.seed_set) opt.seed = env_seed();
        run_pipeline(opt, pl_dry);
    });

    // schema
    auto* sc = app.add_subcommand("schema", "print the file format description");
    sc->callback([] { std::cout << gv::schema_json().dump(2) << "\n"; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const gv::Error& e) {
        print_error(e);
        return exit_code(e);
    } catch (const std::exception& e) {
        print_error(e);
        return 4;
    }
    return 0;
}
