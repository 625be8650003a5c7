#include "fellerstop/generators.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace fellerstop {

namespace {

/// Accumulates nonnegative off-diagonal rates; the diagonal of each row is
/// set to minus the accumulated rate sum (minus an optional absorption
/// deficit), so constructed rows satisfy the positive maximum principle by
/// construction.
class RateMatrixBuilder {
public:
    explicit RateMatrixBuilder(std::size_t n) : n_(n), rate_sum_(n, 0.0), deficit_(n, 0.0) {}

    void add_rate(std::size_t row, std::size_t col, double rate) {
        if (rate < 0.0) throw std::invalid_argument("negative-rate: off-diagonal rates must be >= 0");
        if (row == col || rate == 0.0) return; // clipped self-loops carry no rate
        triplets_.emplace_back(static_cast<int>(row), static_cast<int>(col), rate);
        rate_sum_[row] += rate;
    }

    /// Extra killing on a row (row sum becomes -deficit).
    void add_absorption(std::size_t row, double deficit) {
        if (deficit < 0.0) throw std::invalid_argument("negative absorption deficit");
        deficit_[row] += deficit;
    }

    GeneratorMatrix finish(StateSpacePtr space) {
        for (std::size_t i = 0; i < n_; ++i) {
            double d = rate_sum_[i] + deficit_[i];
            if (d != 0.0)
                triplets_.emplace_back(static_cast<int>(i), static_cast<int>(i), -d);
        }
        GeneratorMatrix G;
        G.space = std::move(space);
        G.entries.resize(static_cast<int>(n_), static_cast<int>(n_));
        G.entries.setFromTriplets(triplets_.begin(), triplets_.end());
        G.entries.makeCompressed();
        GeneratorReport report = validate_generator(G);
        if (!report.valid())
            throw std::runtime_error("invariant-violation: constructed generator failed validation");
        G.conservative = report.conservative;
        return G;
    }

private:
    std::size_t n_;
    std::vector<double> rate_sum_;
    std::vector<double> deficit_;
    std::vector<Eigen::Triplet<double>> triplets_;
};

double require_uniform(const Grid1D& grid) {
    if (!grid.uniform) throw std::invalid_argument("nonuniform-grid: builder requires a uniform grid");
    return grid.spacing();
}

void diffusive_closure(RateMatrixBuilder& b, std::size_t row, std::size_t neighbor,
                       BoundaryKind kind, double rate_reflect) {
    switch (kind) {
        case BoundaryKind::Reflecting:
        case BoundaryKind::Artificial:
            b.add_rate(row, neighbor, rate_reflect);
            break;
        case BoundaryKind::Absorbing:
            break; // all-zero row
    }
}

std::size_t snap_and_clip(const Grid1D& grid, double target) {
    if (target <= grid.lo()) return 0;
    if (target >= grid.hi()) return grid.size() - 1;
    return grid.nearest_index(target);
}

double harmonic_mean(double a, double b) { return 2.0 * a * b / (a + b); }

} // namespace

GeneratorReport validate_generator(const GeneratorMatrix& G) {
    GeneratorReport report;
    const auto& A = G.entries;
    const std::size_t n = G.size();
    if (static_cast<std::size_t>(A.rows()) != n || static_cast<std::size_t>(A.cols()) != n) {
        report.violations.push_back({"dimension-mismatch", 0, 0,
                                     static_cast<double>(A.rows())});
        return report;
    }
    std::vector<double> row_sum(n, 0.0);
    std::vector<bool> row_has_entry(n, false);
    for (int k = 0; k < A.outerSize(); ++k) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(A, k); it; ++it) {
            std::size_t r = static_cast<std::size_t>(it.row());
            std::size_t c = static_cast<std::size_t>(it.col());
            if (r != c && it.value() < 0.0)
                report.violations.push_back({"negative-offdiagonal", r, c, it.value()});
            row_sum[r] += it.value();
            if (it.value() != 0.0) row_has_entry[r] = true;
        }
    }
    constexpr double slack = 1e-10;
    bool conservative = true;
    for (std::size_t r = 0; r < n; ++r) {
        if (row_sum[r] > slack)
            report.violations.push_back({"positive-row-sum", r, r, row_sum[r]});
        if (std::abs(row_sum[r]) > slack) conservative = false;
        if (!row_has_entry[r]) report.absorbing_rows.push_back(r);
    }
    report.conservative = conservative;
    if (G.conservative && !conservative)
        report.violations.push_back({"conservativity-mismatch", 0, 0, 0.0});
    return report;
}

void validate_jump_spec(const JumpBoundarySpec& spec) {
    if (!(spec.lambda_rate > 0.0))
        throw std::invalid_argument("negative-rate: jump boundary needs lambda_rate > 0");
    if (spec.jump_dist.empty())
        throw std::invalid_argument("jump boundary needs at least one atom");
    double total = 0.0;
    for (auto [atom, weight] : spec.jump_dist) {
        if (!(atom > 0.0)) throw std::invalid_argument("jump atoms must be positive");
        if (!(weight > 0.0)) throw std::invalid_argument("jump weights must be positive");
        total += weight;
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw std::invalid_argument("jump weights must sum to 1");
}

GeneratorMatrix bm_generator(const Grid1D& grid, const BmBoundary& boundary) {
    const double h = require_uniform(grid);
    const std::size_t n = grid.size();
    const double half = 1.0 / (2.0 * h * h);
    RateMatrixBuilder b(n);

    for (std::size_t i = 1; i + 1 < n; ++i) {
        b.add_rate(i, i - 1, half);
        b.add_rate(i, i + 1, half);
    }

    if (std::holds_alternative<ReflectedBoundary>(boundary)) {
        b.add_rate(0, 1, 1.0 / (h * h));
    } else if (std::holds_alternative<StickyBoundary>(boundary)) {
        // all-zero row: the boundary state is absorbing
    } else if (const auto* sr = std::get_if<StickyReflectingSpec>(&boundary)) {
        if (!(sr->c > 0.0))
            throw std::invalid_argument("sticky-reflecting constant c must be positive");
        b.add_rate(0, 1, 2.0 * sr->c / (h * (2.0 + sr->c * h)));
    } else {
        const auto& spec = std::get<JumpBoundarySpec>(boundary);
        validate_jump_spec(spec);
        for (auto [atom, weight] : spec.jump_dist) {
            if (atom > grid.hi())
                throw std::invalid_argument("atom-outside-domain: jump atom exceeds the truncation window");
            b.add_rate(0, grid.nearest_index(atom), spec.lambda_rate * weight);
        }
    }

    diffusive_closure(b, n - 1, n - 2, grid.right_boundary_kind, 1.0 / (h * h));
    return b.finish(StateSpace::single(grid));
}

GeneratorMatrix skew_bm_generator(const Grid1D& grid, double beta) {
    const double h = require_uniform(grid);
    const std::size_t n = grid.size();
    if (!(beta > 0.0 && beta < 1.0))
        throw std::invalid_argument("skew parameter beta must lie in (0,1)");
    if (!grid.contains_node(0.0))
        throw std::invalid_argument("zero-not-interior: grid must contain 0 as a node");
    const std::size_t i0 = grid.nearest_index(0.0);
    if (i0 == 0 || i0 + 1 == n)
        throw std::invalid_argument("zero-not-interior: 0 must be an interior node");

    const double half = 1.0 / (2.0 * h * h);
    RateMatrixBuilder b(n);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (i == i0) {
            b.add_rate(i, i - 1, (1.0 - beta) / (h * h));
            b.add_rate(i, i + 1, beta / (h * h));
        } else {
            b.add_rate(i, i - 1, half);
            b.add_rate(i, i + 1, half);
        }
    }
    diffusive_closure(b, 0, 1, grid.left_boundary_kind, 1.0 / (h * h));
    diffusive_closure(b, n - 1, n - 2, grid.right_boundary_kind, 1.0 / (h * h));
    return b.finish(StateSpace::single(grid));
}

PiecewiseCoefficient::PiecewiseCoefficient(std::function<double(double)> fn)
    : pieces_{std::move(fn)} {}

PiecewiseCoefficient::PiecewiseCoefficient(double value)
    : pieces_{[value](double) { return value; }} {}

PiecewiseCoefficient::PiecewiseCoefficient(std::vector<double> breakpoints,
                                           std::vector<std::function<double(double)>> pieces)
    : breakpoints_(std::move(breakpoints)), pieces_(std::move(pieces)) {
    if (pieces_.size() != breakpoints_.size() + 1)
        throw std::invalid_argument("piecewise coefficient needs breakpoints.size()+1 pieces");
    if (!std::is_sorted(breakpoints_.begin(), breakpoints_.end()))
        throw std::invalid_argument("breakpoints must be sorted");
}

std::size_t PiecewiseCoefficient::piece_index(double x, bool from_left) const {
    auto it = from_left ? std::lower_bound(breakpoints_.begin(), breakpoints_.end(), x)
                        : std::upper_bound(breakpoints_.begin(), breakpoints_.end(), x);
    return static_cast<std::size_t>(it - breakpoints_.begin());
}

double PiecewiseCoefficient::left_limit(double x) const {
    return pieces_[piece_index(x, true)](x);
}

double PiecewiseCoefficient::right_limit(double x) const {
    return pieces_[piece_index(x, false)](x);
}

GeneratorMatrix piecewise_diffusion_generator(const Grid1D& grid,
                                              const PiecewiseDiffusionSpec& spec) {
    const double h = require_uniform(grid);
    const std::size_t n = grid.size();
    for (double xj : spec.discontinuity_set) {
        if (!grid.contains_node(xj))
            throw std::invalid_argument("J-not-on-grid: discontinuity point does not coincide with a node");
    }
    const double floor = spec.ellipticity_floor;
    if (!(floor > 0.0)) throw std::invalid_argument("ellipticity floor must be positive");

    // side limits at nodes; faces use harmonic averages of the adjacent limits
    std::vector<double> sigma_left(n), sigma_right(n), rho_at(n), mu_at(n);
    for (std::size_t i = 0; i < n; ++i) {
        double x = grid.nodes[i];
        sigma_left[i] = spec.sigma.left_limit(x);
        sigma_right[i] = spec.sigma.right_limit(x);
        rho_at[i] = spec.rho.right_limit(x);
        mu_at[i] = spec.mu.right_limit(x);
        if (sigma_left[i] < floor || sigma_right[i] < floor || rho_at[i] < floor)
            throw std::invalid_argument("ellipticity-violation: sigma/rho below the ellipticity floor");
    }
    std::vector<double> face(n - 1); // face i sits between nodes i and i+1
    for (std::size_t i = 0; i + 1 < n; ++i)
        face[i] = harmonic_mean(sigma_right[i], sigma_left[i + 1]);

    RateMatrixBuilder b(n);
    const double inv_h2 = 1.0 / (h * h);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        double diff_left = rho_at[i] * face[i - 1] * 0.5 * inv_h2;
        double diff_right = rho_at[i] * face[i] * 0.5 * inv_h2;
        b.add_rate(i, i - 1, diff_left + std::max(-mu_at[i], 0.0) / h);
        b.add_rate(i, i + 1, diff_right + std::max(mu_at[i], 0.0) / h);
    }
    if (grid.left_boundary_kind != BoundaryKind::Absorbing)
        b.add_rate(0, 1, rho_at[0] * face[0] * inv_h2 + std::max(mu_at[0], 0.0) / h);
    if (grid.right_boundary_kind != BoundaryKind::Absorbing)
        b.add_rate(n - 1, n - 2,
                   rho_at[n - 1] * face[n - 2] * inv_h2 + std::max(-mu_at[n - 1], 0.0) / h);
    return b.finish(StateSpace::single(grid));
}

GeneratorMatrix levy_cpd_generator(const Grid1D& grid, double drift, double diffusion,
                                   double jump_rate,
                                   const std::vector<std::pair<double, double>>& jump_dist) {
    const double h = require_uniform(grid);
    const std::size_t n = grid.size();
    if (diffusion < 0.0) throw std::invalid_argument("negative-diffusion");
    if (jump_rate < 0.0) throw std::invalid_argument("negative-rate");
    if (jump_rate > 0.0) {
        double total = 0.0;
        for (auto [atom, weight] : jump_dist) {
            (void)atom;
            if (weight < 0.0) throw std::invalid_argument("jump weights must be nonnegative");
            total += weight;
        }
        if (std::abs(total - 1.0) > 1e-12)
            throw std::invalid_argument("jump weights must sum to 1");
    }

    const double q = 0.5 * diffusion * diffusion / (h * h); // one-sided diffusive rate
    RateMatrixBuilder b(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0 && i + 1 < n) {
            b.add_rate(i, i - 1, q + std::max(-drift, 0.0) / h);
            b.add_rate(i, i + 1, q + std::max(drift, 0.0) / h);
        } else if (i == 0) {
            if (grid.left_boundary_kind != BoundaryKind::Absorbing)
                b.add_rate(0, 1, 2.0 * q + std::max(drift, 0.0) / h);
        } else {
            if (grid.right_boundary_kind != BoundaryKind::Absorbing)
                b.add_rate(n - 1, n - 2, 2.0 * q + std::max(-drift, 0.0) / h);
        }
        if (jump_rate > 0.0) {
            for (auto [atom, weight] : jump_dist)
                b.add_rate(i, snap_and_clip(grid, grid.nodes[i] + atom), jump_rate * weight);
        }
    }
    return b.finish(StateSpace::single(grid));
}

GeneratorMatrix perturb_generator(const GeneratorMatrix& base,
                                  const GeneratorMatrix& bounded_op) {
    if (!base.space || !bounded_op.space || !base.space->same_as(*bounded_op.space))
        throw std::invalid_argument("space-mismatch: perturbation must share the base state space");
    GeneratorMatrix G;
    G.space = base.space;
    G.entries = base.entries + bounded_op.entries;
    G.entries.makeCompressed();
    GeneratorReport report = validate_generator(G);
    if (!report.valid())
        throw std::runtime_error("invariant-violation: perturbed generator failed validation");
    G.conservative = report.conservative;
    return G;
}

RegimeCouplingSpec RegimeCouplingSpec::constant(const std::vector<std::vector<double>>& rates) {
    RegimeCouplingSpec spec;
    spec.q.resize(rates.size());
    for (std::size_t i = 0; i < rates.size(); ++i) {
        if (rates[i].size() != rates.size())
            throw std::invalid_argument("coupling-dimension-mismatch: q must be square");
        for (std::size_t j = 0; j < rates[i].size(); ++j) {
            double r = rates[i][j];
            if (i != j && r < 0.0) throw std::invalid_argument("coupling rates must be >= 0");
            spec.q[i].push_back([r](double) { return r; });
        }
    }
    return spec;
}

RegimeCouplingSpec RegimeCouplingSpec::two_state(double q1, double q2) {
    return constant({{0.0, q1}, {q2, 0.0}});
}

GeneratorMatrix regime_switching_generator(const std::vector<GeneratorMatrix>& per_regime,
                                           const RegimeCouplingSpec& coupling) {
    if (per_regime.empty()) throw std::invalid_argument("need at least one regime");
    const std::size_t N = per_regime.size();
    if (coupling.q.size() != N)
        throw std::invalid_argument("coupling-dimension-mismatch: q size differs from regime count");
    for (const auto& row : coupling.q)
        if (row.size() != N)
            throw std::invalid_argument("coupling-dimension-mismatch: q must be square");
    const Grid1D& grid = per_regime.front().space->space_grid();
    for (const auto& G : per_regime) {
        if (G.space->kind() != StateSpace::Kind::Single ||
            G.space->space_grid().nodes != grid.nodes)
            throw std::invalid_argument("grid-mismatch: regimes must share one grid");
    }

    const std::size_t nx = grid.size();
    RateMatrixBuilder b(N * nx);
    for (std::size_t r = 0; r < N; ++r) {
        const auto& A = per_regime[r].entries;
        std::vector<double> row_sum(nx, 0.0);
        for (int k = 0; k < A.outerSize(); ++k) {
            for (Eigen::SparseMatrix<double>::InnerIterator it(A, k); it; ++it) {
                row_sum[static_cast<std::size_t>(it.row())] += it.value();
                if (it.row() != it.col())
                    b.add_rate(r * nx + static_cast<std::size_t>(it.row()),
                               r * nx + static_cast<std::size_t>(it.col()), it.value());
            }
        }
        for (std::size_t i = 0; i < nx; ++i) {
            if (row_sum[i] < 0.0) b.add_absorption(r * nx + i, -row_sum[i]);
        }
        for (std::size_t j = 0; j < N; ++j) {
            if (j == r) continue;
            for (std::size_t i = 0; i < nx; ++i) {
                double rate = coupling.q[r][j](grid.nodes[i]);
                if (rate < 0.0) throw std::invalid_argument("coupling rates must be >= 0");
                b.add_rate(r * nx + i, j * nx + i, rate);
            }
        }
    }
    return b.finish(StateSpace::regime_product(N, grid));
}

GeneratorMatrix semi_markov_lift_generator(const Grid1D& space_grid,
                                           const SemiMarkovSpec& spec) {
    require_uniform(space_grid);
    const double ds = require_uniform(spec.clock_grid);
    const std::size_t ns = spec.clock_grid.size();
    const std::size_t nx = space_grid.size();
    double total = 0.0;
    for (auto [atom, weight] : spec.jump_dist) {
        (void)atom;
        if (weight < 0.0) throw std::invalid_argument("jump weights must be nonnegative");
        total += weight;
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw std::invalid_argument("jump weights must sum to 1");

    std::vector<double> hazard(ns);
    for (std::size_t k = 0; k < ns; ++k) {
        hazard[k] = spec.hazard(spec.clock_grid.nodes[k]);
        if (hazard[k] < 0.0 || !std::isfinite(hazard[k]))
            throw std::invalid_argument("negative-hazard: Q must be nonnegative and bounded");
    }

    auto space = StateSpace::clock_product(spec.clock_grid, space_grid);
    RateMatrixBuilder b(ns * nx);
    for (std::size_t is = 0; is < ns; ++is) {
        for (std::size_t ix = 0; ix < nx; ++ix) {
            const std::size_t row = space->flat(is, ix);
            if (is + 1 < ns) b.add_rate(row, space->flat(is + 1, ix), 1.0 / ds);
            if (hazard[is] > 0.0) {
                for (auto [atom, weight] : spec.jump_dist) {
                    std::size_t jx = snap_and_clip(space_grid, space_grid.nodes[ix] + atom);
                    b.add_rate(row, space->flat(0, jx), hazard[is] * weight);
                }
            }
        }
    }
    return b.finish(space);
}

std::function<double(double)> mixture_exponential_hazard(std::vector<double> weights,
                                                         std::vector<double> rates) {
    if (weights.size() != rates.size() || weights.empty())
        throw std::invalid_argument("mixture needs matching weights and rates");
    double total = 0.0;
    double min_rate = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (!(weights[i] > 0.0) || !(rates[i] > 0.0))
            throw std::invalid_argument("mixture weights and rates must be positive");
        total += weights[i];
        min_rate = std::min(min_rate, rates[i]);
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw std::invalid_argument("mixture weights must sum to 1");
    return [weights = std::move(weights), rates = std::move(rates), min_rate](double s) {
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            double e = std::exp(-(rates[i] - min_rate) * s);
            num += weights[i] * rates[i] * e;
            den += weights[i] * e;
        }
        return num / den;
    };
}

std::function<double(double)> beta_prime_hazard() {
    return [](double s) { return 1.0 / (1.0 + s); };
}

double mixture_exponential_clock_horizon(const std::vector<double>& weights,
                                         const std::vector<double>& rates,
                                         double mass_tol) {
    auto tail = [&](double s) {
        double t = 0.0;
        for (std::size_t i = 0; i < weights.size(); ++i) t += weights[i] * std::exp(-rates[i] * s);
        return t;
    };
    double hi = 1.0;
    while (tail(hi) >= mass_tol) hi *= 2.0;
    double lo = 0.0;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        (tail(mid) >= mass_tol ? lo : hi) = mid;
    }
    return hi;
}

std::vector<std::pair<double, double>> discretize_exponential(double gamma,
                                                              std::size_t n_atoms) {
    if (!(gamma > 0.0)) throw std::invalid_argument("exponential rate must be positive");
    if (n_atoms == 0) throw std::invalid_argument("need at least one atom");
    // quantile midpoints with equal weights
    std::vector<std::pair<double, double>> atoms;
    atoms.reserve(n_atoms);
    const double w = 1.0 / static_cast<double>(n_atoms);
    for (std::size_t k = 0; k < n_atoms; ++k) {
        double p = (static_cast<double>(k) + 0.5) * w;
        atoms.emplace_back(-std::log(1.0 - p) / gamma, w);
    }
    return atoms;
}

void write_triplets(std::ostream& os, const GeneratorMatrix& G) {
    std::vector<Eigen::Triplet<double>> entries;
    const auto& A = G.entries;
    for (int k = 0; k < A.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(A, k); it; ++it)
            entries.emplace_back(it.row(), it.col(), it.value());
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
        return a.row() != b.row() ? a.row() < b.row() : a.col() < b.col();
    });
    os << "row,col,rate\n";
    for (const auto& t : entries)
        os << t.row() << ',' << t.col() << ',' << format_double(t.value()) << '\n';
}

std::string generator_header_json(const GeneratorMatrix& G) {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["size"] = G.size();
    j["nnz"] = static_cast<std::size_t>(G.entries.nonZeros());
    j["conservative"] = G.conservative;
    nlohmann::json sp;
    switch (G.space->kind()) {
        case StateSpace::Kind::Single: sp["kind"] = "single"; break;
        case StateSpace::Kind::RegimeGrid: sp["kind"] = "regime_grid"; break;
        case StateSpace::Kind::ClockGrid: sp["kind"] = "clock_grid"; break;
    }
    sp["n_outer"] = G.space->n_outer();
    sp["space_nodes"] = G.space->space_grid().size();
    sp["space_lo"] = G.space->space_grid().lo();
    sp["space_hi"] = G.space->space_grid().hi();
    if (G.space->kind() == StateSpace::Kind::ClockGrid) {
        sp["clock_nodes"] = G.space->clock_grid().size();
        sp["clock_hi"] = G.space->clock_grid().hi();
    }
    j["space"] = sp;
    return j.dump(2);
}

} // namespace fellerstop
