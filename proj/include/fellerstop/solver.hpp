#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "fellerstop/core.hpp"
#include "fellerstop/generators.hpp"

namespace fellerstop {

/// Geometric schedule a * {factor, factor^2, ..., factor^stages}.
std::vector<double> default_lambda_schedule(double discount_a, std::size_t stages = 20,
                                            double factor = 2.0);

struct PenaltyParams {
    /// Strictly increasing positive penalty levels; empty means the default
    /// schedule a * {2^1, ..., 2^20}.
    std::vector<double> lambda_schedule;
    /// Inner stop: sup-norm of consecutive iterates <= fixed_point_tol.
    double fixed_point_tol = 1e-10;
    /// 0 means the default 10 * ceil(log(tol)/log(lambda/(a+lambda))).
    std::uint64_t max_inner_iters = 0;
    /// Outer stop: sup-norm between consecutive-stage solutions.
    double outer_stop_tol = 1e-8;

    double contact_tol() const { return 10.0 * outer_stop_tol; }
};

void validate_params(const PenaltyParams& params, double discount_a);

/// Solution of the penalized equation a v - G v - f = lambda (g - v)^+ at one
/// penalty level.
struct PenaltySolution {
    SampledFunction v;
    double lambda = 0.0;
    std::uint64_t inner_iterations = 0;
    double final_update_norm = 0.0;
};

struct SolveDiagnostics {
    std::vector<double> lambdas;
    std::vector<double> stage_diffs;        // ||v_k - v_{k-1}||_inf (NaN for stage 0)
    std::vector<double> final_update_norms; // per-stage inner update at stop
    std::vector<std::uint64_t> inner_iterations;
    double contact_tol = 0.0;
    bool schedule_exhausted = false;     // outer tolerance never reached
    bool inner_budget_exhausted = false; // some stage ran out of iterations

    bool warning() const { return schedule_exhausted || inner_budget_exhausted; }
};

struct ValueFunction {
    SampledFunction v;
    std::vector<char> stopping_mask;          // v - g <= contact_tol
    std::vector<double> exercise_boundaries;  // midpoints of mask flips
    SolveDiagnostics diagnostics;
};

/// Stopping rule tau* = first entry into the masked region.
struct StoppingRegion {
    StateSpacePtr space;
    std::vector<char> mask;
    /// Clock-product spaces only: gamma[ix] = smallest clock value whose mask
    /// is set (infinity when the column never stops).
    std::vector<double> clock_threshold;
};

/// Cached factorization of (rate * I - G) for repeated resolvent solves.
class ResolventOperator {
public:
    ResolventOperator(const GeneratorMatrix& G, double rate);
    ~ResolventOperator();
    ResolventOperator(ResolventOperator&&) noexcept;
    ResolventOperator& operator=(ResolventOperator&&) noexcept;
    ResolventOperator(const ResolventOperator&) = delete;
    ResolventOperator& operator=(const ResolventOperator&) = delete;

    double rate() const;
    const StateSpacePtr& space() const;

    /// Solves (rate*I - G) u = h with a residual check of
    /// 1e-10 * (1 + ||h||_inf); one refinement pass before reporting
    /// "singular-system".
    SampledFunction apply(const SampledFunction& h) const;

    /// Backward-stable solve without the residual pass; the fixed-point loop
    /// uses this between update-norm checks.
    void apply_raw(const double* rhs, double* out) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// One-shot resolvent solve u = (lambda*I - G)^{-1} h.
SampledFunction resolvent_apply(const GeneratorMatrix& G, double lambda,
                                const SampledFunction& h);

/// Banach iteration w <- R_{a+lambda}(f + lambda * max(g, w)) from warm_start;
/// the contraction factor lambda/(a+lambda) certifies convergence. Throws
/// std::runtime_error ("max-iters-exceeded") when the iteration budget runs
/// out.
PenaltySolution penalty_fixed_point(const GeneratorMatrix& G, const StoppingProblem& problem,
                                    double lambda, const SampledFunction& warm_start,
                                    const PenaltyParams& params);

/// Lambda-continuation along the schedule with warm starts; stops when the
/// consecutive-stage sup-difference falls below outer_stop_tol (otherwise the
/// best value is returned with diagnostics.schedule_exhausted set).
ValueFunction solve_value_function(const GeneratorMatrix& G, const StoppingProblem& problem,
                                   const PenaltyParams& params = {});

/// Region {V = g} plus, on clock-product spaces, the threshold curve gamma(x).
StoppingRegion stopping_rule(const ValueFunction& vf);

/// Shifts the stopping region k nodes along the space grid (k > 0 delays
/// stopping for an upper stopping region); edge values replicate.
StoppingRegion shift_region(const StoppingRegion& region, long k);

/// Solve report JSON: {lambda_schedule, per_stage_update_norms, contact_tol,
/// boundaries, ...}.
std::string solve_report_json(const ValueFunction& vf);

} // namespace fellerstop
