#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fellerstop/core.hpp"
#include "fellerstop/generators.hpp"
#include "fellerstop/solver.hpp"

namespace fellerstop {

struct SimConfig {
    std::size_t n_paths = 100000;
    double t_max = 0.0; // 0 selects the default horizon from the bias target
    std::uint64_t rng_seed = 1;
    bool antithetic = false;
};

/// Horizon with e^{-a t_max} (||g|| + ||f||/a) below half the target standard
/// error scale.
double default_time_horizon(const StoppingProblem& problem, double target_bias);

struct PathEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t n_paths = 0;
    double truncation_bias_bound = 0.0;
};

/// Monte Carlo estimate of J_x(tau) for tau = first entry into the region
/// (entry at t=0 included). The CTMC is simulated by exponential holding
/// times driven directly by the generator rows; absorbing rows contribute
/// their f/a tail analytically.
PathEstimate simulate_stopped_value(const GeneratorMatrix& G, const StoppingProblem& problem,
                                    const StoppingRegion& region, std::size_t start_index,
                                    const SimConfig& cfg);

struct CheckResult {
    std::string name;
    bool pass = false;
    double margin = 0.0; // slack left before the check would fail
};

struct MartingaleCheckpoint {
    double t = 0.0;
    PathEstimate stopped;  // E[M(t ^ tau*)]
    PathEstimate running;  // E[M(t)]
    CheckResult martingale_check;     // |E[M(t^tau*)] - V(start)| <= 3 SE
    CheckResult supermartingale_check; // E[M(t)] <= V(start) + 3 SE
};

struct MartingaleReport {
    double v_start = 0.0;
    std::vector<MartingaleCheckpoint> checkpoints;
    bool all_pass() const;
};

/// Checks the discounted-value process M(t) = e^{-at} V(X(t)) +
/// int_0^t e^{-as} f(X(s)) ds: a martingale up to tau*, a supermartingale
/// globally.
MartingaleReport martingale_check(const GeneratorMatrix& G, const StoppingProblem& problem,
                                  const ValueFunction& vf, std::size_t start_index,
                                  const std::vector<double>& checkpoints, const SimConfig& cfg);

struct SuboptimalityReport {
    long shift_nodes = 0;
    PathEstimate estimate;
    double v_reference = 0.0;
    CheckResult check; // J <= V + 3 SE
};

/// Estimates J under the region shifted by `shift_nodes` grid nodes; any
/// stopping rule other than tau* is suboptimal.
SuboptimalityReport perturbed_region_suboptimality(const GeneratorMatrix& G,
                                                   const StoppingProblem& problem,
                                                   const StoppingRegion& region,
                                                   long shift_nodes, std::size_t start_index,
                                                   double v_reference, const SimConfig& cfg);

std::string estimate_json(const PathEstimate& estimate);
std::string martingale_report_json(const MartingaleReport& report);

} // namespace fellerstop
