#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "fellerstop/analytic.hpp"
#include "fellerstop/core.hpp"
#include "fellerstop/generators.hpp"
#include "fellerstop/mc.hpp"
#include "fellerstop/solver.hpp"

namespace fellerstop {

struct ReflectedBmProcess {};
struct StickyBmProcess {};
struct StickyReflectingBmProcess {
    double c = 1.0;
};
struct JumpBmProcess {
    double lambda = 1.0;
    std::vector<std::pair<double, double>> atoms;
};
struct SkewBmProcess {
    double beta = 0.5;
};
struct PiecewiseDiffusionProcess {
    std::vector<double> breaks;
    std::vector<double> sigma; // breaks.size()+1 piecewise-constant values
    std::vector<double> rho;
    std::vector<double> mu;
};
struct LevyCpdProcess {
    double drift = 0.0;
    double diffusion = 1.0;
    double jump_rate = 0.0;
    std::vector<std::pair<double, double>> atoms;
};
struct RegimeSwitchingProcess {
    double q1 = 0.1;
    double q2 = 0.1;
    std::vector<std::string> boundaries; // per regime: "sticky" | "reflected"
};
struct SemiMarkovHazard {
    std::string type = "constant"; // constant | mixture_exponential | beta_prime
    double rate = 1.0;             // constant
    std::vector<double> weights;   // mixture
    std::vector<double> rates;     // mixture
};
struct SemiMarkovProcess {
    SemiMarkovHazard hazard;
    std::vector<std::pair<double, double>> atoms;
    double s_max = 0.0; // 0 selects the 1 - P(S_max) < 1e-6 default
    std::size_t clock_n = 25;
};

using ProcessSpec = std::variant<ReflectedBmProcess, StickyBmProcess, StickyReflectingBmProcess,
                                 JumpBmProcess, SkewBmProcess, PiecewiseDiffusionProcess,
                                 LevyCpdProcess, RegimeSwitchingProcess, SemiMarkovProcess>;

std::string process_tag(const ProcessSpec& process);

struct PayoffConfig {
    // straddle (c1, c2) unless a tabulated vector is given
    double c1 = 1.0;
    double c2 = 4.0;
    std::vector<double> tabulated; // per space-grid node when non-empty
};

struct SolverConfig {
    std::size_t lambda_stages = 20;
    double lambda_factor = 2.0;
    double fixed_point_tol = 1e-10;
    double outer_stop_tol = 1e-8;
    std::uint64_t max_inner_iters = 0;
};

struct McConfig {
    std::size_t n_paths = 100000;
    double t_max = 0.0;
    std::uint64_t rng_seed = 1;
    bool antithetic = false;
    std::vector<double> start_x; // start coordinates for crosscheck estimates
};

struct CrosscheckConfig {
    double value_tol = 5e-3;
    double boundary_tol_nodes = 2.0;
};

struct ExperimentConfig {
    int schema_version = 1;
    ProcessSpec process;
    PayoffConfig payoff;
    double discount_a = 0.1;
    double grid_lo = 0.0;
    double grid_hi = 12.0;
    std::size_t grid_n = 961;
    double f_constant = 0.0;
    std::vector<double> f_tabulated;
    SolverConfig solver;
    McConfig mc;
    CrosscheckConfig crosscheck;
    std::string outputs;
};

ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);
std::string serialize_config(const ExperimentConfig& config);
/// Throws std::invalid_argument naming the failing field.
void validate_config(const ExperimentConfig& config);

/// Generator + problem assembled from a validated config.
struct BuiltExperiment {
    GeneratorMatrix G;
    StoppingProblem problem;
    bool has_analytic = false; // closed-form benchmark available
};

BuiltExperiment build_experiment(const ExperimentConfig& config);

PenaltyParams solver_params(const ExperimentConfig& config);
SimConfig sim_config(const ExperimentConfig& config);

struct CliOptions {
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> grid_n;
    std::optional<std::string> out_dir;
    bool quiet = false;
};

/// Exit codes: 0 success, 1 crosscheck failure, 2 validation error,
/// 3 solver warning (schedule or iteration budget exhausted).
int cmd_solve(const std::string& config_path, const CliOptions& opts);
int cmd_figure(const std::string& name, const std::string& out_dir, const CliOptions& opts);
int cmd_crosscheck(const std::string& config_path, const CliOptions& opts);
int cmd_validate(const std::string& config_path, const CliOptions& opts);

/// Output directory resolution: --out flag, config value, FELLER_STOP_OUT,
/// then the working directory.
std::string resolve_output_dir(const std::string& config_outputs, const CliOptions& opts);

/// Baked-in figure parameters (overridable through the CLI).
namespace figure_defaults {
inline constexpr double discount_a = 0.1;
inline constexpr double payoff_c1 = 1.0;
inline constexpr double payoff_c2 = 4.0;
inline constexpr double jump_lambda = 1.0;
inline constexpr double jump_sizes[] = {0.5, 3.0, 5.0};
inline constexpr double regime_q1 = 0.1;
inline constexpr double regime_q2 = 0.1;
inline constexpr double grid_lo = 0.0;
inline constexpr double grid_hi = 12.0;
inline constexpr std::size_t grid_n = 961;
} // namespace figure_defaults

} // namespace fellerstop
