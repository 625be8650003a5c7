#include "fellerstop/cli.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

namespace fellerstop {

using nlohmann::json;

namespace {

json atoms_to_json(const std::vector<std::pair<double, double>>& atoms) {
    json arr = json::array();
    for (auto [y, w] : atoms) arr.push_back(json::array({y, w}));
    return arr;
}

std::vector<std::pair<double, double>> atoms_from_json(const json& arr, const std::string& field) {
    if (!arr.is_array()) throw std::invalid_argument(field + ": expected an array of [atom, weight]");
    std::vector<std::pair<double, double>> atoms;
    for (const auto& item : arr) {
        if (!item.is_array() || item.size() != 2)
            throw std::invalid_argument(field + ": each atom must be [value, weight]");
        atoms.emplace_back(item[0].get<double>(), item[1].get<double>());
    }
    return atoms;
}

template <typename T>
T get_or(const json& j, const std::string& key, T fallback) {
    if (!j.contains(key)) return fallback;
    return j.at(key).get<T>();
}

} // namespace

std::string process_tag(const ProcessSpec& process) {
    struct Visitor {
        std::string operator()(const ReflectedBmProcess&) const { return "reflected_bm"; }
        std::string operator()(const StickyBmProcess&) const { return "sticky_bm"; }
        std::string operator()(const StickyReflectingBmProcess&) const { return "sticky_reflecting_bm"; }
        std::string operator()(const JumpBmProcess&) const { return "jump_bm"; }
        std::string operator()(const SkewBmProcess&) const { return "skew_bm"; }
        std::string operator()(const PiecewiseDiffusionProcess&) const { return "piecewise_diffusion"; }
        std::string operator()(const LevyCpdProcess&) const { return "levy_cpd"; }
        std::string operator()(const RegimeSwitchingProcess&) const { return "regime_switching"; }
        std::string operator()(const SemiMarkovProcess&) const { return "semi_markov"; }
    };
    return std::visit(Visitor{}, process);
}

ExperimentConfig parse_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("config: invalid JSON: ") + e.what());
    }

    ExperimentConfig cfg;
    cfg.schema_version = get_or<int>(j, "schema_version", 1);
    if (cfg.schema_version != 1)
        throw std::invalid_argument("schema_version: unsupported value");

    if (!j.contains("process") || !j["process"].contains("type"))
        throw std::invalid_argument("process.type: missing");
    const json& p = j["process"];
    const std::string type = p["type"].get<std::string>();
    if (type == "reflected_bm") {
        cfg.process = ReflectedBmProcess{};
    } else if (type == "sticky_bm") {
        cfg.process = StickyBmProcess{};
    } else if (type == "sticky_reflecting_bm") {
        cfg.process = StickyReflectingBmProcess{get_or<double>(p, "c", 1.0)};
    } else if (type == "jump_bm") {
        JumpBmProcess proc;
        proc.lambda = get_or<double>(p, "lambda", 1.0);
        proc.atoms = atoms_from_json(p.value("atoms", json::array()), "process.atoms");
        cfg.process = proc;
    } else if (type == "skew_bm") {
        cfg.process = SkewBmProcess{get_or<double>(p, "beta", 0.5)};
    } else if (type == "piecewise_diffusion") {
        PiecewiseDiffusionProcess proc;
        proc.breaks = get_or<std::vector<double>>(p, "breaks", {});
        proc.sigma = get_or<std::vector<double>>(p, "sigma", {1.0});
        proc.rho = get_or<std::vector<double>>(p, "rho", {1.0});
        proc.mu = get_or<std::vector<double>>(p, "mu", {0.0});
        cfg.process = proc;
    } else if (type == "levy_cpd") {
        LevyCpdProcess proc;
        proc.drift = get_or<double>(p, "drift", 0.0);
        proc.diffusion = get_or<double>(p, "diffusion", 1.0);
        proc.jump_rate = get_or<double>(p, "jump_rate", 0.0);
        proc.atoms = atoms_from_json(p.value("atoms", json::array()), "process.atoms");
        cfg.process = proc;
    } else if (type == "regime_switching") {
        RegimeSwitchingProcess proc;
        proc.q1 = get_or<double>(p, "q1", 0.1);
        proc.q2 = get_or<double>(p, "q2", 0.1);
        proc.boundaries =
            get_or<std::vector<std::string>>(p, "boundaries", {"sticky", "reflected"});
        cfg.process = proc;
    } else if (type == "semi_markov") {
        SemiMarkovProcess proc;
        if (p.contains("hazard")) {
            const json& h = p["hazard"];
            proc.hazard.type = get_or<std::string>(h, "type", "constant");
            proc.hazard.rate = get_or<double>(h, "rate", 1.0);
            proc.hazard.weights = get_or<std::vector<double>>(h, "weights", {});
            proc.hazard.rates = get_or<std::vector<double>>(h, "rates", {});
        }
        proc.atoms = atoms_from_json(p.value("atoms", json::array()), "process.atoms");
        proc.s_max = get_or<double>(p, "s_max", 0.0);
        proc.clock_n = get_or<std::size_t>(p, "clock_n", 25);
        cfg.process = proc;
    } else {
        throw std::invalid_argument("process.type: unknown tag '" + type + "'");
    }

    if (j.contains("payoff")) {
        const json& pay = j["payoff"];
        cfg.payoff.c1 = get_or<double>(pay, "c1", 1.0);
        cfg.payoff.c2 = get_or<double>(pay, "c2", 4.0);
        cfg.payoff.tabulated = get_or<std::vector<double>>(pay, "tabulated", {});
    }
    cfg.discount_a = get_or<double>(j, "discount_a", 0.1);
    if (j.contains("grid")) {
        const json& g = j["grid"];
        cfg.grid_lo = get_or<double>(g, "lo", 0.0);
        cfg.grid_hi = get_or<double>(g, "hi", 12.0);
        cfg.grid_n = get_or<std::size_t>(g, "n", 961);
    }
    cfg.f_constant = get_or<double>(j, "f_constant", 0.0);
    cfg.f_tabulated = get_or<std::vector<double>>(j, "f_tabulated", {});
    if (j.contains("solver")) {
        const json& s = j["solver"];
        cfg.solver.lambda_stages = get_or<std::size_t>(s, "lambda_stages", 20);
        cfg.solver.lambda_factor = get_or<double>(s, "lambda_factor", 2.0);
        cfg.solver.fixed_point_tol = get_or<double>(s, "fixed_point_tol", 1e-10);
        cfg.solver.outer_stop_tol = get_or<double>(s, "outer_stop_tol", 1e-8);
        cfg.solver.max_inner_iters = get_or<std::uint64_t>(s, "max_inner_iters", 0);
    }
    if (j.contains("mc")) {
        const json& m = j["mc"];
        cfg.mc.n_paths = get_or<std::size_t>(m, "n_paths", 100000);
        cfg.mc.t_max = get_or<double>(m, "t_max", 0.0);
        cfg.mc.rng_seed = get_or<std::uint64_t>(m, "rng_seed", 1);
        cfg.mc.antithetic = get_or<bool>(m, "antithetic", false);
        cfg.mc.start_x = get_or<std::vector<double>>(m, "start_x", {});
    }
    if (j.contains("crosscheck")) {
        const json& c = j["crosscheck"];
        cfg.crosscheck.value_tol = get_or<double>(c, "value_tol", 5e-3);
        cfg.crosscheck.boundary_tol_nodes = get_or<double>(c, "boundary_tol_nodes", 2.0);
    }
    cfg.outputs = get_or<std::string>(j, "outputs", "");
    validate_config(cfg);
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config: cannot read '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str());
}

std::string serialize_config(const ExperimentConfig& cfg) {
    json j;
    j["schema_version"] = cfg.schema_version;
    json p;
    p["type"] = process_tag(cfg.process);
    if (const auto* sr = std::get_if<StickyReflectingBmProcess>(&cfg.process)) {
        p["c"] = sr->c;
    } else if (const auto* jb = std::get_if<JumpBmProcess>(&cfg.process)) {
        p["lambda"] = jb->lambda;
        p["atoms"] = atoms_to_json(jb->atoms);
    } else if (const auto* sk = std::get_if<SkewBmProcess>(&cfg.process)) {
        p["beta"] = sk->beta;
    } else if (const auto* pw = std::get_if<PiecewiseDiffusionProcess>(&cfg.process)) {
        p["breaks"] = pw->breaks;
        p["sigma"] = pw->sigma;
        p["rho"] = pw->rho;
        p["mu"] = pw->mu;
    } else if (const auto* lv = std::get_if<LevyCpdProcess>(&cfg.process)) {
        p["drift"] = lv->drift;
        p["diffusion"] = lv->diffusion;
        p["jump_rate"] = lv->jump_rate;
        p["atoms"] = atoms_to_json(lv->atoms);
    } else if (const auto* rs = std::get_if<RegimeSwitchingProcess>(&cfg.process)) {
        p["q1"] = rs->q1;
        p["q2"] = rs->q2;
        p["boundaries"] = rs->boundaries;
    } else if (const auto* sm = std::get_if<SemiMarkovProcess>(&cfg.process)) {
        json h;
        h["type"] = sm->hazard.type;
        h["rate"] = sm->hazard.rate;
        h["weights"] = sm->hazard.weights;
        h["rates"] = sm->hazard.rates;
        p["hazard"] = h;
        p["atoms"] = atoms_to_json(sm->atoms);
        p["s_max"] = sm->s_max;
        p["clock_n"] = sm->clock_n;
    }
    j["process"] = p;
    j["payoff"] = {{"c1", cfg.payoff.c1}, {"c2", cfg.payoff.c2}, {"tabulated", cfg.payoff.tabulated}};
    j["discount_a"] = cfg.discount_a;
    j["grid"] = {{"lo", cfg.grid_lo}, {"hi", cfg.grid_hi}, {"n", cfg.grid_n}};
    j["f_constant"] = cfg.f_constant;
    j["f_tabulated"] = cfg.f_tabulated;
    j["solver"] = {{"lambda_stages", cfg.solver.lambda_stages},
                   {"lambda_factor", cfg.solver.lambda_factor},
                   {"fixed_point_tol", cfg.solver.fixed_point_tol},
                   {"outer_stop_tol", cfg.solver.outer_stop_tol},
                   {"max_inner_iters", cfg.solver.max_inner_iters}};
    j["mc"] = {{"n_paths", cfg.mc.n_paths},
               {"t_max", cfg.mc.t_max},
               {"rng_seed", cfg.mc.rng_seed},
               {"antithetic", cfg.mc.antithetic},
               {"start_x", cfg.mc.start_x}};
    j["crosscheck"] = {{"value_tol", cfg.crosscheck.value_tol},
                       {"boundary_tol_nodes", cfg.crosscheck.boundary_tol_nodes}};
    j["outputs"] = cfg.outputs;
    return j.dump(2);
}

void validate_config(const ExperimentConfig& cfg) {
    if (!(cfg.discount_a > 0.0)) throw std::invalid_argument("discount_a: must be positive");
    if (!(cfg.grid_lo < cfg.grid_hi)) throw std::invalid_argument("grid.lo/grid.hi: invalid-range");
    if (cfg.grid_n < 3) throw std::invalid_argument("grid.n: too-few-nodes");
    if (cfg.payoff.tabulated.empty() && !(cfg.payoff.c1 < cfg.payoff.c2))
        throw std::invalid_argument("payoff.c1/payoff.c2: invalid-strikes: require c1 < c2");
    if (!cfg.payoff.tabulated.empty() && cfg.payoff.tabulated.size() != cfg.grid_n)
        throw std::invalid_argument("payoff.tabulated: length must equal grid.n");
    if (!cfg.f_tabulated.empty() && cfg.f_tabulated.size() != cfg.grid_n)
        throw std::invalid_argument("f_tabulated: length must equal grid.n");
    if (!(cfg.solver.lambda_factor > 1.0))
        throw std::invalid_argument("solver.lambda_factor: must exceed 1");
    if (cfg.solver.lambda_stages < 2)
        throw std::invalid_argument("solver.lambda_stages: need at least 2 stages");
    if (!(cfg.solver.fixed_point_tol > 0.0))
        throw std::invalid_argument("solver.fixed_point_tol: must be positive");
    if (!(cfg.solver.outer_stop_tol > 0.0))
        throw std::invalid_argument("solver.outer_stop_tol: must be positive");
    if (cfg.mc.n_paths < 1) throw std::invalid_argument("mc.n_paths: must be >= 1");
    if (const auto* rs = std::get_if<RegimeSwitchingProcess>(&cfg.process)) {
        if (rs->boundaries.size() < 2)
            throw std::invalid_argument("process.boundaries: need one entry per regime");
        for (const auto& b : rs->boundaries)
            if (b != "sticky" && b != "reflected")
                throw std::invalid_argument("process.boundaries: entries must be 'sticky' or 'reflected'");
        if (!(rs->q1 >= 0.0) || !(rs->q2 >= 0.0))
            throw std::invalid_argument("process.q1/process.q2: must be nonnegative");
    }
    if (const auto* sk = std::get_if<SkewBmProcess>(&cfg.process)) {
        if (!(sk->beta > 0.0 && sk->beta < 1.0))
            throw std::invalid_argument("process.beta: must lie in (0,1)");
        if (!(cfg.grid_lo < 0.0 && cfg.grid_hi > 0.0))
            throw std::invalid_argument("grid: skew Brownian motion needs 0 interior");
    }
    if (const auto* sm = std::get_if<SemiMarkovProcess>(&cfg.process)) {
        if (sm->clock_n < 3) throw std::invalid_argument("process.clock_n: too-few-nodes");
        if (sm->atoms.empty()) throw std::invalid_argument("process.atoms: need at least one atom");
        if (sm->hazard.type != "constant" && sm->hazard.type != "mixture_exponential" &&
            sm->hazard.type != "beta_prime")
            throw std::invalid_argument("process.hazard.type: unknown hazard");
    }
}

namespace {

SampledFunction build_payoff(const ExperimentConfig& cfg, const StateSpacePtr& space) {
    if (!cfg.payoff.tabulated.empty()) {
        const auto& table = cfg.payoff.tabulated;
        return sample2(space, [&](std::size_t, double x) {
            return table[space->space_grid().nearest_index(x)];
        });
    }
    return straddle_payoff(space, cfg.payoff.c1, cfg.payoff.c2);
}

SampledFunction build_running_reward(const ExperimentConfig& cfg, const StateSpacePtr& space) {
    if (!cfg.f_tabulated.empty()) {
        const auto& table = cfg.f_tabulated;
        return sample2(space, [&](std::size_t, double x) {
            return table[space->space_grid().nearest_index(x)];
        });
    }
    return constant_function(space, cfg.f_constant);
}

double default_semi_markov_horizon(const SemiMarkovHazard& hazard) {
    constexpr double mass_tol = 1e-6;
    if (hazard.type == "constant") return -std::log(mass_tol) / hazard.rate;
    if (hazard.type == "mixture_exponential")
        return mixture_exponential_clock_horizon(hazard.weights, hazard.rates, mass_tol);
    // beta prime: 1 - P(S) = 1/(1+S)
    return 1.0 / mass_tol - 1.0;
}

} // namespace

BuiltExperiment build_experiment(const ExperimentConfig& cfg) {
    validate_config(cfg);
    Grid1D grid = make_uniform_grid(cfg.grid_lo, cfg.grid_hi, cfg.grid_n,
                                    BoundaryKind::Reflecting, BoundaryKind::Artificial);
    BuiltExperiment built;
    const bool straddle_zero_f = cfg.payoff.tabulated.empty() && cfg.f_tabulated.empty() &&
                                 cfg.f_constant == 0.0;

    if (std::holds_alternative<ReflectedBmProcess>(cfg.process)) {
        built.G = bm_generator(grid, ReflectedBoundary{});
        built.has_analytic = straddle_zero_f;
    } else if (std::holds_alternative<StickyBmProcess>(cfg.process)) {
        built.G = bm_generator(grid, StickyBoundary{});
    } else if (const auto* sr = std::get_if<StickyReflectingBmProcess>(&cfg.process)) {
        built.G = bm_generator(grid, StickyReflectingSpec{sr->c});
    } else if (const auto* jb = std::get_if<JumpBmProcess>(&cfg.process)) {
        built.G = bm_generator(grid, JumpBoundarySpec{jb->lambda, jb->atoms});
        built.has_analytic = straddle_zero_f;
    } else if (const auto* sk = std::get_if<SkewBmProcess>(&cfg.process)) {
        built.G = skew_bm_generator(grid, sk->beta);
    } else if (const auto* pw = std::get_if<PiecewiseDiffusionProcess>(&cfg.process)) {
        auto piecewise = [&](const std::vector<double>& values) {
            if (values.size() != pw->breaks.size() + 1)
                throw std::invalid_argument("process: coefficient lists need breaks.size()+1 values");
            std::vector<std::function<double(double)>> pieces;
            for (double v : values) pieces.push_back([v](double) { return v; });
            return PiecewiseCoefficient(pw->breaks, std::move(pieces));
        };
        PiecewiseDiffusionSpec spec{piecewise(pw->sigma), piecewise(pw->rho), piecewise(pw->mu),
                                    pw->breaks, 1e-10};
        built.G = piecewise_diffusion_generator(grid, spec);
    } else if (const auto* lv = std::get_if<LevyCpdProcess>(&cfg.process)) {
        built.G = levy_cpd_generator(grid, lv->drift, lv->diffusion, lv->jump_rate, lv->atoms);
    } else if (const auto* rs = std::get_if<RegimeSwitchingProcess>(&cfg.process)) {
        std::vector<GeneratorMatrix> blocks;
        for (const auto& b : rs->boundaries) {
            if (b == "sticky")
                blocks.push_back(bm_generator(grid, StickyBoundary{}));
            else
                blocks.push_back(bm_generator(grid, ReflectedBoundary{}));
        }
        built.G = regime_switching_generator(blocks, RegimeCouplingSpec::two_state(rs->q1, rs->q2));
        built.has_analytic = straddle_zero_f && rs->boundaries.size() == 2 &&
                             rs->boundaries[0] == "sticky" && rs->boundaries[1] == "reflected" &&
                             rs->q1 > 0.0 && rs->q2 > 0.0;
    } else if (const auto* sm = std::get_if<SemiMarkovProcess>(&cfg.process)) {
        SemiMarkovSpec spec;
        if (sm->hazard.type == "constant") {
            double rate = sm->hazard.rate;
            spec.hazard = [rate](double) { return rate; };
        } else if (sm->hazard.type == "mixture_exponential") {
            spec.hazard = mixture_exponential_hazard(sm->hazard.weights, sm->hazard.rates);
        } else {
            spec.hazard = beta_prime_hazard();
        }
        double s_max = sm->s_max > 0.0 ? sm->s_max : default_semi_markov_horizon(sm->hazard);
        spec.jump_dist = sm->atoms;
        spec.clock_grid = make_uniform_grid(0.0, s_max, sm->clock_n);
        built.G = semi_markov_lift_generator(grid, spec);
    }

    StateSpacePtr space = built.G.space;
    built.problem = make_problem(space, cfg.discount_a, build_running_reward(cfg, space),
                                 build_payoff(cfg, space));
    return built;
}

PenaltyParams solver_params(const ExperimentConfig& cfg) {
    PenaltyParams params;
    params.lambda_schedule = default_lambda_schedule(cfg.discount_a, cfg.solver.lambda_stages,
                                                     cfg.solver.lambda_factor);
    params.fixed_point_tol = cfg.solver.fixed_point_tol;
    params.outer_stop_tol = cfg.solver.outer_stop_tol;
    params.max_inner_iters = cfg.solver.max_inner_iters;
    return params;
}

SimConfig sim_config(const ExperimentConfig& cfg) {
    SimConfig sim;
    sim.n_paths = cfg.mc.n_paths;
    sim.t_max = cfg.mc.t_max;
    sim.rng_seed = cfg.mc.rng_seed;
    sim.antithetic = cfg.mc.antithetic;
    return sim;
}

std::string resolve_output_dir(const std::string& config_outputs, const CliOptions& opts) {
    if (opts.out_dir && !opts.out_dir->empty()) return *opts.out_dir;
    if (!config_outputs.empty()) return config_outputs;
    if (const char* env = std::getenv("FELLER_STOP_OUT"); env && *env) return env;
    return ".";
}

namespace {

void apply_overrides(ExperimentConfig& cfg, const CliOptions& opts) {
    if (opts.seed) cfg.mc.rng_seed = *opts.seed;
    if (opts.grid_n) cfg.grid_n = *opts.grid_n;
    validate_config(cfg);
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << text;
}

void write_mask_csv(const std::filesystem::path& path, const ValueFunction& vf) {
    std::ostringstream os;
    auto cols = vf.v.space->coordinate_columns();
    for (const auto& c : cols) os << c << ',';
    os << "stopping\n";
    for (std::size_t i = 0; i < vf.stopping_mask.size(); ++i) {
        for (double c : vf.v.space->coordinates(i)) os << format_double(c) << ',';
        os << (vf.stopping_mask[i] ? 1 : 0) << '\n';
    }
    write_file(path, os.str());
}

std::string value_csv(const SampledFunction& u) {
    std::ostringstream os;
    write_csv(os, u);
    return os.str();
}

/// Midpoint of the last continuation -> stopping transition along x.
double exercise_point(const ValueFunction& vf, std::size_t outer) {
    const auto& space = *vf.v.space;
    const auto& grid = space.space_grid();
    for (std::size_t i = grid.size() - 1; i > 0; --i) {
        bool hi = vf.stopping_mask[space.flat(outer, i)] != 0;
        bool lo = vf.stopping_mask[space.flat(outer, i - 1)] != 0;
        if (hi && !lo) return 0.5 * (grid.nodes[i - 1] + grid.nodes[i]);
    }
    return std::numeric_limits<double>::quiet_NaN();
}

int warning_exit(const ValueFunction& vf) { return vf.diagnostics.warning() ? 3 : 0; }

ExperimentConfig figure_base_config(const CliOptions& opts) {
    ExperimentConfig cfg;
    cfg.discount_a = figure_defaults::discount_a;
    cfg.payoff.c1 = figure_defaults::payoff_c1;
    cfg.payoff.c2 = figure_defaults::payoff_c2;
    cfg.grid_lo = figure_defaults::grid_lo;
    cfg.grid_hi = figure_defaults::grid_hi;
    cfg.grid_n = opts.grid_n.value_or(figure_defaults::grid_n);
    cfg.solver.lambda_stages = 36;
    cfg.solver.fixed_point_tol = 1e-9;
    return cfg;
}

int figure_jump_boundary(const std::filesystem::path& dir, const CliOptions& opts) {
    ExperimentConfig base = figure_base_config(opts);
    std::ostringstream values, points;
    values << "jump_size,x,V\n";
    points << "jump_size,x_star,x_star_analytic,v0,v0_analytic\n";
    int exit_code = 0;
    for (double size : figure_defaults::jump_sizes) {
        ExperimentConfig cfg = base;
        cfg.process = JumpBmProcess{figure_defaults::jump_lambda, {{size, 1.0}}};
        BuiltExperiment built = build_experiment(cfg);
        ValueFunction vf = solve_value_function(built.G, built.problem, solver_params(cfg));
        exit_code = std::max(exit_code, warning_exit(vf));
        const auto& grid = built.problem.space->space_grid();
        for (std::size_t i = 0; i < grid.size(); ++i)
            values << format_double(size) << ',' << format_double(grid.nodes[i]) << ','
                   << format_double(vf.v.values[i]) << '\n';
        AnalyticJumpSolution analytic = jump_boundary_solution(
            cfg.discount_a, figure_defaults::jump_lambda, {{size, 1.0}}, cfg.payoff.c1,
            cfg.payoff.c2);
        points << format_double(size) << ',' << format_double(exercise_point(vf, 0)) << ','
               << format_double(analytic.x_star) << ',' << format_double(vf.v.values[0]) << ','
               << format_double(analytic.value(0.0)) << '\n';
    }
    write_file(dir / "jump_boundary_values.csv", values.str());
    write_file(dir / "jump_boundary_exercise_points.csv", points.str());
    return exit_code;
}

int figure_regime(const std::filesystem::path& dir, const CliOptions& opts) {
    ExperimentConfig base = figure_base_config(opts);
    std::ostringstream values, points;
    values << "curve,x,V\n";
    points << "curve,x_star\n";
    int exit_code = 0;

    auto emit_curve = [&](const std::string& name, const ValueFunction& vf, std::size_t outer) {
        const auto& space = *vf.v.space;
        const auto& grid = space.space_grid();
        for (std::size_t i = 0; i < grid.size(); ++i)
            values << name << ',' << format_double(grid.nodes[i]) << ','
                   << format_double(vf.v.values[space.flat(outer, i)]) << '\n';
        points << name << ',' << format_double(exercise_point(vf, outer)) << '\n';
    };

    {
        ExperimentConfig cfg = base;
        cfg.process = StickyBmProcess{};
        BuiltExperiment built = build_experiment(cfg);
        ValueFunction vf = solve_value_function(built.G, built.problem, solver_params(cfg));
        exit_code = std::max(exit_code, warning_exit(vf));
        emit_curve("sticky_bm", vf, 0);
    }
    {
        ExperimentConfig cfg = base;
        cfg.process = RegimeSwitchingProcess{figure_defaults::regime_q1,
                                             figure_defaults::regime_q2,
                                             {"sticky", "reflected"}};
        BuiltExperiment built = build_experiment(cfg);
        ValueFunction vf = solve_value_function(built.G, built.problem, solver_params(cfg));
        exit_code = std::max(exit_code, warning_exit(vf));
        emit_curve("regime_sticky", vf, 0);
        emit_curve("regime_reflected", vf, 1);
    }
    {
        ExperimentConfig cfg = base;
        cfg.process = ReflectedBmProcess{};
        BuiltExperiment built = build_experiment(cfg);
        ValueFunction vf = solve_value_function(built.G, built.problem, solver_params(cfg));
        exit_code = std::max(exit_code, warning_exit(vf));
        emit_curve("reflected_bm", vf, 0);
    }

    write_file(dir / "regime_values.csv", values.str());
    write_file(dir / "regime_exercise_points.csv", points.str());
    write_file(dir / "README.md",
               "# Regime figure data\n\n"
               "Curve names follow the generator's domain convention: regime 1 is the\n"
               "regime whose boundary row at 0 is sticky (absorbing), regime 2 the one\n"
               "with the reflecting closure. `regime_sticky` and `regime_reflected` are\n"
               "those two regimes of the coupled solve; `sticky_bm` and `reflected_bm`\n"
               "are the decoupled single-regime solves. Some figure legends for this\n"
               "model label state 1 as the reflected regime; the data in this directory\n"
               "always uses the domain convention above.\n\n"
               "`regime_exercise_points.csv` lists the exercise points x_s, x_rs, x_rr,\n"
               "x_r for the four curves in that order.\n");
    return exit_code;
}

} // namespace

int cmd_solve(const std::string& config_path, const CliOptions& opts) {
    try {
        ExperimentConfig cfg = load_config(config_path);
        apply_overrides(cfg, opts);
        BuiltExperiment built = build_experiment(cfg);
        ValueFunction vf = solve_value_function(built.G, built.problem, solver_params(cfg));

        std::filesystem::path dir = resolve_output_dir(cfg.outputs, opts);
        std::filesystem::create_directories(dir);
        write_file(dir / "value.csv", value_csv(vf.v));
        write_file(dir / "solve.json", solve_report_json(vf));
        write_mask_csv(dir / "stopping_region.csv", vf);
        if (!opts.quiet)
            std::cout << "solve: wrote value.csv, solve.json, stopping_region.csv to " << dir
                      << "\n";
        if (vf.diagnostics.warning()) {
            std::cerr << "solve: warning: convergence budget exhausted (best-effort output)\n";
            return 3;
        }
        return 0;
    } catch (const std::invalid_argument& e) {
        std::cerr << "solve: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "solve: " << e.what() << "\n";
        return 2;
    }
}

int cmd_figure(const std::string& name, const std::string& out_dir, const CliOptions& opts) {
    try {
        std::filesystem::path dir = resolve_output_dir(out_dir, opts);
        std::filesystem::create_directories(dir);
        int code;
        if (name == "jump_boundary_fig") {
            code = figure_jump_boundary(dir, opts);
        } else if (name == "regime_fig") {
            code = figure_regime(dir, opts);
        } else {
            std::cerr << "figure: unknown figure '" << name << "'\n";
            return 2;
        }
        if (!opts.quiet) std::cout << "figure: wrote " << name << " data to " << dir << "\n";
        return code;
    } catch (const std::exception& e) {
        std::cerr << "figure: " << e.what() << "\n";
        return 2;
    }
}

int cmd_crosscheck(const std::string& config_path, const CliOptions& opts) {
    try {
        ExperimentConfig cfg = load_config(config_path);
        apply_overrides(cfg, opts);
        BuiltExperiment built = build_experiment(cfg);
        ValueFunction vf = solve_value_function(built.G, built.problem, solver_params(cfg));
        const auto& space = built.problem.space;
        const double h = space->space_grid().spacing();

        json checks = json::array();
        bool all_pass = true;
        auto push_check = [&](const std::string& name, bool pass, double value, double threshold) {
            checks.push_back({{"name", name}, {"pass", pass}, {"value", value},
                              {"threshold", threshold}});
            all_pass = all_pass && pass;
        };

        if (built.has_analytic) {
            SampledFunction analytic_values;
            double x_star_analytic = std::numeric_limits<double>::quiet_NaN();
            if (std::holds_alternative<ReflectedBmProcess>(cfg.process)) {
                auto sol = reflected_straddle_solution(cfg.discount_a, cfg.payoff.c1, cfg.payoff.c2);
                analytic_values = resample_reflected(sol, space);
                x_star_analytic = sol.x_star;
            } else if (const auto* jb = std::get_if<JumpBmProcess>(&cfg.process)) {
                auto sol = jump_boundary_solution(cfg.discount_a, jb->lambda, jb->atoms,
                                                  cfg.payoff.c1, cfg.payoff.c2);
                analytic_values = resample_jump(sol, space);
                x_star_analytic = sol.x_star;
            } else {
                const auto& rs = std::get<RegimeSwitchingProcess>(cfg.process);
                auto sol = regime_switching_solution(cfg.discount_a, rs.q1, rs.q2, cfg.payoff.c1,
                                                     cfg.payoff.c2, 2);
                analytic_values = resample_regime(sol, space);
                x_star_analytic = sol.x2_star;
            }
            double sup_diff = sup_norm_diff(vf.v, analytic_values);
            push_check("analytic_value_sup_diff", sup_diff <= cfg.crosscheck.value_tol, sup_diff,
                       cfg.crosscheck.value_tol);
            double boundary_tol = cfg.crosscheck.boundary_tol_nodes * h;
            double x_num = exercise_point(vf, space->n_outer() - 1);
            double x_diff = std::abs(x_num - x_star_analytic);
            push_check("analytic_exercise_point", x_diff <= boundary_tol, x_diff, boundary_tol);
        }

        if (space->kind() == StateSpace::Kind::ClockGrid) {
            // s-independence of the lifted solve (degenerate Markov case check)
            double variation = 0.0;
            const auto& grid = space->space_grid();
            for (std::size_t ix = 0; ix < grid.size(); ++ix) {
                double lo = std::numeric_limits<double>::infinity(), hi = -lo;
                for (std::size_t is = 0; is < space->n_outer(); ++is) {
                    double v = vf.v.values[space->flat(is, ix)];
                    lo = std::min(lo, v);
                    hi = std::max(hi, v);
                }
                variation = std::max(variation, hi - lo);
            }
            const auto& sm = std::get<SemiMarkovProcess>(cfg.process);
            if (sm.hazard.type == "constant")
                push_check("clock_independence", variation <= 1e-6, variation, 1e-6);
        }

        StoppingRegion region = stopping_rule(vf);
        std::vector<double> starts = cfg.mc.start_x;
        if (starts.empty())
            starts = {0.25 * (cfg.grid_lo + cfg.grid_hi) + 0.5 * cfg.grid_lo,
                      0.5 * (cfg.grid_lo + cfg.grid_hi)};
        SimConfig sim = sim_config(cfg);
        for (double x : starts) {
            std::size_t idx = space->flat(0, space->space_grid().nearest_index(x));
            PathEstimate est = simulate_stopped_value(built.G, built.problem, region, idx, sim);
            double diff = std::abs(est.mean - vf.v.values[idx]);
            double threshold = 3.0 * est.std_error + est.truncation_bias_bound;
            push_check("mc_start_" + format_double(x), diff <= threshold, diff, threshold);
        }

        json verdict;
        verdict["pass"] = all_pass;
        verdict["solver_warning"] = vf.diagnostics.warning();
        verdict["checks"] = checks;
        std::filesystem::path dir = resolve_output_dir(cfg.outputs, opts);
        std::filesystem::create_directories(dir);
        write_file(dir / "crosscheck.json", verdict.dump(2));
        if (!opts.quiet)
            std::cout << "crosscheck: " << (all_pass ? "pass" : "fail") << ", wrote "
                      << (dir / "crosscheck.json") << "\n";
        return all_pass ? 0 : 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "crosscheck: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "crosscheck: " << e.what() << "\n";
        return 2;
    }
}

int cmd_validate(const std::string& config_path, const CliOptions& opts) {
    try {
        ExperimentConfig cfg = load_config(config_path);
        apply_overrides(cfg, opts);
        if (!opts.quiet) std::cout << "validate: ok (" << process_tag(cfg.process) << ")\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "validate: " << e.what() << "\n";
        return 2;
    }
}

} // namespace fellerstop
