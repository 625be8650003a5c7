#include "fellerstop/solver.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace fellerstop {

std::vector<double> default_lambda_schedule(double discount_a, std::size_t stages,
                                            double factor) {
    if (!(discount_a > 0.0)) throw std::invalid_argument("discount must be positive");
    if (!(factor > 1.0)) throw std::invalid_argument("schedule factor must exceed 1");
    std::vector<double> schedule(stages);
    double lambda = discount_a;
    for (std::size_t k = 0; k < stages; ++k) {
        lambda *= factor;
        schedule[k] = lambda;
    }
    return schedule;
}

void validate_params(const PenaltyParams& params, double discount_a) {
    (void)discount_a;
    if (!(params.fixed_point_tol > 0.0))
        throw std::invalid_argument("fixed_point_tol must be positive");
    if (!(params.outer_stop_tol > 0.0))
        throw std::invalid_argument("outer_stop_tol must be positive");
    const auto& s = params.lambda_schedule;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!(s[i] > 0.0)) throw std::invalid_argument("lambda schedule must be positive");
        if (i > 0 && !(s[i] > s[i - 1]))
            throw std::invalid_argument("lambda schedule must be strictly increasing");
    }
}

struct ResolventOperator::Impl {
    StateSpacePtr space;
    double rate = 0.0;
    Eigen::SparseMatrix<double> system; // rate*I - G

    // Thomas factorization for tridiagonal systems (no pivoting: the shifted
    // generator is strictly diagonally dominant), SparseLU otherwise.
    bool tridiagonal = false;
    std::vector<double> lower, inv_diag, upper; // factored in place
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;

    bool try_tridiagonal() {
        const auto n = system.rows();
        lower.assign(static_cast<std::size_t>(n), 0.0);
        inv_diag.assign(static_cast<std::size_t>(n), 0.0);
        upper.assign(static_cast<std::size_t>(n), 0.0);
        std::vector<double> diag(static_cast<std::size_t>(n), 0.0);
        for (int k = 0; k < system.outerSize(); ++k) {
            for (Eigen::SparseMatrix<double>::InnerIterator it(system, k); it; ++it) {
                auto r = it.row(), c = it.col();
                if (c == r)
                    diag[static_cast<std::size_t>(r)] = it.value();
                else if (c == r - 1)
                    lower[static_cast<std::size_t>(r)] = it.value();
                else if (c == r + 1)
                    upper[static_cast<std::size_t>(r)] = it.value();
                else if (it.value() != 0.0)
                    return false;
            }
        }
        for (Eigen::Index i = 0; i < n; ++i) {
            std::size_t s = static_cast<std::size_t>(i);
            if (i > 0) {
                double m = lower[s] * inv_diag[s - 1];
                lower[s] = m;
                diag[s] -= m * upper[s - 1];
            }
            inv_diag[s] = 1.0 / diag[s];
        }
        return true;
    }

    void solve_tridiagonal(const double* rhs, double* out) const {
        const std::size_t n = inv_diag.size();
        out[0] = rhs[0];
        for (std::size_t i = 1; i < n; ++i) out[i] = rhs[i] - lower[i] * out[i - 1];
        out[n - 1] *= inv_diag[n - 1];
        for (std::size_t i = n - 1; i-- > 0;)
            out[i] = (out[i] - upper[i] * out[i + 1]) * inv_diag[i];
    }
};

ResolventOperator::ResolventOperator(const GeneratorMatrix& G, double rate)
    : impl_(std::make_unique<Impl>()) {
    if (!(rate > 0.0)) throw std::invalid_argument("resolvent rate must be positive");
    impl_->space = G.space;
    impl_->rate = rate;
    const auto n = static_cast<Eigen::Index>(G.size());
    Eigen::SparseMatrix<double> identity(n, n);
    identity.setIdentity();
    impl_->system = -G.entries;
    impl_->system += rate * identity;
    impl_->system.makeCompressed();
    impl_->tridiagonal = impl_->try_tridiagonal();
    if (!impl_->tridiagonal) {
        impl_->lu.compute(impl_->system);
        if (impl_->lu.info() != Eigen::Success)
            throw std::runtime_error("singular-system: resolvent factorization failed");
    }
}

ResolventOperator::~ResolventOperator() = default;
ResolventOperator::ResolventOperator(ResolventOperator&&) noexcept = default;
ResolventOperator& ResolventOperator::operator=(ResolventOperator&&) noexcept = default;

double ResolventOperator::rate() const { return impl_->rate; }
const StateSpacePtr& ResolventOperator::space() const { return impl_->space; }

SampledFunction ResolventOperator::apply(const SampledFunction& h) const {
    if (!h.space || !h.space->same_as(*impl_->space))
        throw std::invalid_argument("space-mismatch: resolvent input lives on a different space");
    const auto n = static_cast<Eigen::Index>(h.values.size());
    Eigen::Map<const Eigen::VectorXd> rhs(h.values.data(), n);
    Eigen::VectorXd u(n);
    auto solve_once = [&](const Eigen::VectorXd& b) {
        if (impl_->tridiagonal) {
            Eigen::VectorXd x(n);
            impl_->solve_tridiagonal(b.data(), x.data());
            return x;
        }
        Eigen::VectorXd x = impl_->lu.solve(b);
        if (impl_->lu.info() != Eigen::Success)
            throw std::runtime_error("singular-system: resolvent solve failed");
        return x;
    };
    u = solve_once(rhs);

    const double tol = 1e-10 * (1.0 + rhs.cwiseAbs().maxCoeff());
    Eigen::VectorXd residual = rhs - impl_->system * u;
    if (residual.cwiseAbs().maxCoeff() > tol) {
        u += solve_once(residual); // one refinement pass
        residual = rhs - impl_->system * u;
        if (residual.cwiseAbs().maxCoeff() > tol)
            throw std::runtime_error("singular-system: resolvent residual exceeds tolerance");
    }

    SampledFunction out;
    out.space = h.space;
    out.values.assign(u.data(), u.data() + n);
    return out;
}

void ResolventOperator::apply_raw(const double* rhs, double* out) const {
    const auto n = impl_->system.rows();
    if (impl_->tridiagonal) {
        impl_->solve_tridiagonal(rhs, out);
        return;
    }
    Eigen::Map<const Eigen::VectorXd> b(rhs, n);
    Eigen::VectorXd x = impl_->lu.solve(b);
    if (impl_->lu.info() != Eigen::Success)
        throw std::runtime_error("singular-system: resolvent solve failed");
    Eigen::Map<Eigen::VectorXd>(out, n) = x;
}

SampledFunction resolvent_apply(const GeneratorMatrix& G, double lambda,
                                const SampledFunction& h) {
    return ResolventOperator(G, lambda).apply(h);
}

namespace {

std::uint64_t default_inner_budget(double lambda, double a, double tol) {
    // 10 * ceil(log(tol) / log(lambda/(a+lambda))), clamped
    double denom = std::log(lambda / (a + lambda));
    if (!(denom < 0.0)) return std::numeric_limits<std::uint64_t>::max();
    double bound = 10.0 * std::ceil(std::log(tol) / denom);
    if (!(bound < 9e18)) return std::numeric_limits<std::uint64_t>::max();
    return std::max<std::uint64_t>(10, static_cast<std::uint64_t>(bound));
}

PenaltySolution run_fixed_point(const ResolventOperator& resolvent, const StoppingProblem& problem,
                                double lambda, const SampledFunction& warm_start,
                                const PenaltyParams& params, bool throw_on_budget) {
    const std::size_t n = problem.space->size();
    const double* f = problem.f.values.data();
    const double* g = problem.g.values.data();
    SampledFunction w = warm_start;
    std::vector<double> rhs(n), next(n);

    const std::uint64_t budget = params.max_inner_iters
                                     ? params.max_inner_iters
                                     : default_inner_budget(lambda, problem.discount_a,
                                                            params.fixed_point_tol);
    std::uint64_t iters = 0;
    double update = std::numeric_limits<double>::infinity();
    while (update > params.fixed_point_tol) {
        if (iters >= budget) {
            if (throw_on_budget)
                throw std::runtime_error("max-iters-exceeded: penalty fixed point did not reach tolerance");
            break; // best effort: hand back the current iterate
        }
        for (std::size_t i = 0; i < n; ++i)
            rhs[i] = f[i] + lambda * std::max(g[i], w.values[i]);
        resolvent.apply_raw(rhs.data(), next.data());
        update = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            update = std::max(update, std::abs(next[i] - w.values[i]));
        w.values.swap(next);
        ++iters;
    }
    return PenaltySolution{std::move(w), lambda, iters, update};
}

} // namespace

PenaltySolution penalty_fixed_point(const GeneratorMatrix& G, const StoppingProblem& problem,
                                    double lambda, const SampledFunction& warm_start,
                                    const PenaltyParams& params) {
    if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
    validate_params(params, problem.discount_a);
    if (!G.space->same_as(*problem.space))
        throw std::invalid_argument("space-mismatch: generator and problem spaces differ");
    ResolventOperator resolvent(G, problem.discount_a + lambda);
    return run_fixed_point(resolvent, problem, lambda, warm_start, params, true);
}

namespace {

std::vector<double> boundaries_along_space(const StateSpace& space,
                                           const std::vector<char>& mask) {
    std::vector<double> boundaries;
    const auto& grid = space.space_grid();
    for (std::size_t outer = 0; outer < space.n_outer(); ++outer) {
        for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
            bool a = mask[space.flat(outer, i)] != 0;
            bool b = mask[space.flat(outer, i + 1)] != 0;
            if (a != b)
                boundaries.push_back(0.5 * (grid.nodes[i] + grid.nodes[i + 1]));
        }
    }
    return boundaries;
}

} // namespace

ValueFunction solve_value_function(const GeneratorMatrix& G, const StoppingProblem& problem,
                                   const PenaltyParams& params) {
    validate_params(params, problem.discount_a);
    if (!G.space->same_as(*problem.space))
        throw std::invalid_argument("space-mismatch: generator and problem spaces differ");
    std::vector<double> schedule = params.lambda_schedule.empty()
                                       ? default_lambda_schedule(problem.discount_a)
                                       : params.lambda_schedule;

    ValueFunction out;
    out.diagnostics.contact_tol = params.contact_tol();
    out.diagnostics.schedule_exhausted = true;

    SampledFunction current = constant_function(problem.space, 0.0);
    SampledFunction previous;
    double prev_lambda = 0.0;
    std::size_t stages_done = 0;
    for (std::size_t k = 0; k < schedule.size(); ++k) {
        const double lambda = schedule[k];
        ResolventOperator resolvent(G, problem.discount_a + lambda);

        // Warm start: beyond the second stage the converged solutions track
        // V - c/(a+lambda), so extrapolating the last two stages removes the
        // O(1/lambda) starting lag. The fixed point itself is unchanged.
        SampledFunction start = current;
        if (stages_done >= 2) {
            const double a = problem.discount_a;
            double beta = (1.0 / (a + schedule[k - 1]) - 1.0 / (a + lambda)) /
                          (1.0 / (a + prev_lambda) - 1.0 / (a + schedule[k - 1]));
            for (std::size_t i = 0; i < start.values.size(); ++i)
                start.values[i] += beta * (current.values[i] - previous.values[i]);
        }

        PenaltySolution sol = run_fixed_point(resolvent, problem, lambda, start, params, false);
        if (sol.final_update_norm > params.fixed_point_tol)
            out.diagnostics.inner_budget_exhausted = true;
        double stage_diff = stages_done > 0 ? sup_norm_diff(sol.v, current)
                                            : std::numeric_limits<double>::quiet_NaN();
        out.diagnostics.lambdas.push_back(lambda);
        out.diagnostics.stage_diffs.push_back(stage_diff);
        out.diagnostics.final_update_norms.push_back(sol.final_update_norm);
        out.diagnostics.inner_iterations.push_back(sol.inner_iterations);
        if (stages_done >= 1) prev_lambda = schedule[k - 1];
        previous = std::move(current);
        current = std::move(sol.v);
        ++stages_done;
        if (stages_done > 1 && stage_diff <= params.outer_stop_tol) {
            out.diagnostics.schedule_exhausted = false;
            break;
        }
    }

    out.v = std::move(current);
    const double contact_tol = params.contact_tol();
    out.stopping_mask.resize(problem.space->size());
    for (std::size_t i = 0; i < out.stopping_mask.size(); ++i)
        out.stopping_mask[i] = (out.v.values[i] - problem.g.values[i] <= contact_tol) ? 1 : 0;
    out.exercise_boundaries = boundaries_along_space(*problem.space, out.stopping_mask);
    return out;
}

StoppingRegion stopping_rule(const ValueFunction& vf) {
    StoppingRegion region;
    region.space = vf.v.space;
    region.mask = vf.stopping_mask;
    if (region.space->kind() == StateSpace::Kind::ClockGrid) {
        const auto& clock = region.space->clock_grid();
        const std::size_t nx = region.space->space_grid().size();
        region.clock_threshold.assign(nx, std::numeric_limits<double>::infinity());
        for (std::size_t ix = 0; ix < nx; ++ix) {
            for (std::size_t is = 0; is < clock.size(); ++is) {
                if (region.mask[region.space->flat(is, ix)]) {
                    region.clock_threshold[ix] = clock.nodes[is];
                    break;
                }
            }
        }
    }
    return region;
}

StoppingRegion shift_region(const StoppingRegion& region, long k) {
    StoppingRegion shifted;
    shifted.space = region.space;
    shifted.mask.resize(region.mask.size());
    const auto& space = *region.space;
    const long nx = static_cast<long>(space.space_grid().size());
    for (std::size_t outer = 0; outer < space.n_outer(); ++outer) {
        for (long i = 0; i < nx; ++i) {
            long src = std::clamp(i - k, 0L, nx - 1);
            shifted.mask[space.flat(outer, static_cast<std::size_t>(i))] =
                region.mask[space.flat(outer, static_cast<std::size_t>(src))];
        }
    }
    return shifted;
}

std::string solve_report_json(const ValueFunction& vf) {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["lambda_schedule"] = vf.diagnostics.lambdas;
    j["per_stage_update_norms"] = vf.diagnostics.final_update_norms;
    nlohmann::json diffs = nlohmann::json::array();
    for (double d : vf.diagnostics.stage_diffs) {
        if (std::isnan(d))
            diffs.push_back(nullptr);
        else
            diffs.push_back(d);
    }
    j["stage_diffs"] = diffs;
    j["inner_iterations"] = vf.diagnostics.inner_iterations;
    j["contact_tol"] = vf.diagnostics.contact_tol;
    j["boundaries"] = vf.exercise_boundaries;
    j["schedule_exhausted"] = vf.diagnostics.schedule_exhausted;
    j["inner_budget_exhausted"] = vf.diagnostics.inner_budget_exhausted;
    return j.dump(2);
}

} // namespace fellerstop
