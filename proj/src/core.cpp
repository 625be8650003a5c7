#include "fellerstop/core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace fellerstop {

double Grid1D::spacing() const {
    if (!uniform) throw std::logic_error("nonuniform-grid: spacing() requires a uniform grid");
    return (nodes.back() - nodes.front()) / static_cast<double>(nodes.size() - 1);
}

std::size_t Grid1D::nearest_index(double x) const {
    auto it = std::lower_bound(nodes.begin(), nodes.end(), x);
    if (it == nodes.begin()) return 0;
    if (it == nodes.end()) return nodes.size() - 1;
    std::size_t hi_idx = static_cast<std::size_t>(it - nodes.begin());
    std::size_t lo_idx = hi_idx - 1;
    return (x - nodes[lo_idx] < nodes[hi_idx] - x) ? lo_idx : hi_idx;
}

bool Grid1D::contains_node(double x) const {
    std::size_t i = nearest_index(x);
    double h = uniform ? spacing() : 1.0;
    return std::abs(nodes[i] - x) <= 1e-9 * h;
}

namespace {

bool spacing_uniform(const std::vector<double>& nodes) {
    double min_h = std::numeric_limits<double>::infinity();
    double max_h = 0.0;
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
        double h = nodes[i + 1] - nodes[i];
        min_h = std::min(min_h, h);
        max_h = std::max(max_h, h);
    }
    return max_h / min_h < 1.0 + 1e-12;
}

} // namespace

Grid1D make_grid(std::vector<double> nodes, BoundaryKind left, BoundaryKind right) {
    if (nodes.size() < 3) throw std::invalid_argument("too-few-nodes: grid needs at least 3 nodes");
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
        if (!(nodes[i] < nodes[i + 1]))
            throw std::invalid_argument("invalid-range: grid nodes must be strictly increasing");
    }
    for (double x : nodes) {
        if (!std::isfinite(x)) throw std::invalid_argument("invalid-range: grid nodes must be finite");
    }
    Grid1D g;
    g.uniform = spacing_uniform(nodes);
    g.nodes = std::move(nodes);
    g.left_boundary_kind = left;
    g.right_boundary_kind = right;
    return g;
}

Grid1D make_uniform_grid(double lo, double hi, std::size_t n,
                         BoundaryKind left, BoundaryKind right) {
    if (!(lo < hi)) throw std::invalid_argument("invalid-range: require lo < hi");
    if (n < 3) throw std::invalid_argument("too-few-nodes: require n >= 3");
    std::vector<double> nodes(n);
    double h = (hi - lo) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) nodes[i] = lo + h * static_cast<double>(i);
    nodes.back() = hi;
    Grid1D g = make_grid(std::move(nodes), left, right);
    g.uniform = true;
    return g;
}

std::shared_ptr<const StateSpace> StateSpace::single(Grid1D space) {
    auto s = std::shared_ptr<StateSpace>(new StateSpace());
    s->kind_ = Kind::Single;
    s->n_outer_ = 1;
    s->space_ = std::move(space);
    return s;
}

std::shared_ptr<const StateSpace> StateSpace::regime_product(std::size_t n_regimes,
                                                             Grid1D space) {
    if (n_regimes < 1) throw std::invalid_argument("regime count must be positive");
    auto s = std::shared_ptr<StateSpace>(new StateSpace());
    s->kind_ = Kind::RegimeGrid;
    s->n_outer_ = n_regimes;
    s->space_ = std::move(space);
    return s;
}

std::shared_ptr<const StateSpace> StateSpace::clock_product(Grid1D clock, Grid1D space) {
    auto s = std::shared_ptr<StateSpace>(new StateSpace());
    s->kind_ = Kind::ClockGrid;
    s->n_outer_ = clock.size();
    s->clock_ = std::move(clock);
    s->space_ = std::move(space);
    return s;
}

std::size_t StateSpace::n_regimes() const {
    return kind_ == Kind::RegimeGrid ? n_outer_ : 1;
}

const Grid1D& StateSpace::clock_grid() const {
    if (kind_ != Kind::ClockGrid) throw std::logic_error("state space has no clock factor");
    return clock_;
}

std::size_t StateSpace::flat(std::size_t outer, std::size_t inner) const {
    return outer * space_.size() + inner;
}

std::pair<std::size_t, std::size_t> StateSpace::unflat(std::size_t index) const {
    return {index / space_.size(), index % space_.size()};
}

std::vector<std::string> StateSpace::coordinate_columns() const {
    switch (kind_) {
        case Kind::Single: return {"x"};
        case Kind::RegimeGrid: return {"regime", "x"};
        case Kind::ClockGrid: return {"s", "x"};
    }
    return {};
}

std::vector<double> StateSpace::coordinates(std::size_t index) const {
    auto [outer, inner] = unflat(index);
    double x = space_.nodes[inner];
    switch (kind_) {
        case Kind::Single: return {x};
        case Kind::RegimeGrid: return {static_cast<double>(outer + 1), x};
        case Kind::ClockGrid: return {clock_.nodes[outer], x};
    }
    return {};
}

bool StateSpace::same_as(const StateSpace& other) const {
    if (kind_ != other.kind_ || n_outer_ != other.n_outer_) return false;
    if (space_.nodes != other.space_.nodes) return false;
    if (kind_ == Kind::ClockGrid && clock_.nodes != other.clock_.nodes) return false;
    return true;
}

SampledFunction sample(const StateSpacePtr& space,
                       const std::function<double(double)>& fn) {
    SampledFunction u;
    u.space = space;
    u.values.resize(space->size());
    for (std::size_t i = 0; i < u.values.size(); ++i) {
        auto [outer, inner] = space->unflat(i);
        (void)outer;
        u.values[i] = fn(space->space_grid().nodes[inner]);
    }
    validate_sampled(u);
    return u;
}

SampledFunction sample2(const StateSpacePtr& space,
                        const std::function<double(std::size_t, double)>& fn) {
    SampledFunction u;
    u.space = space;
    u.values.resize(space->size());
    for (std::size_t i = 0; i < u.values.size(); ++i) {
        auto [outer, inner] = space->unflat(i);
        u.values[i] = fn(outer, space->space_grid().nodes[inner]);
    }
    validate_sampled(u);
    return u;
}

SampledFunction constant_function(const StateSpacePtr& space, double value) {
    SampledFunction u;
    u.space = space;
    u.values.assign(space->size(), value);
    validate_sampled(u);
    return u;
}

void validate_sampled(const SampledFunction& u) {
    if (!u.space) throw std::invalid_argument("sampled function has no state space");
    if (u.values.size() != u.space->size())
        throw std::invalid_argument("space-mismatch: value vector length differs from state space size");
    for (double v : u.values) {
        if (!std::isfinite(v))
            throw std::invalid_argument("sampled function has non-finite values");
    }
}

double straddle_value(double x, double c1, double c2) {
    return std::max(x - c1, 0.0) - std::max(x - c2, 0.0);
}

SampledFunction straddle_payoff(const StateSpacePtr& space, double c1, double c2) {
    if (!(c1 < c2)) throw std::invalid_argument("invalid-strikes: require c1 < c2");
    return sample(space, [=](double x) { return straddle_value(x, c1, c2); });
}

SampledFunction straddle_payoff(const Grid1D& grid, double c1, double c2) {
    return straddle_payoff(StateSpace::single(grid), c1, c2);
}

double sup_norm(const SampledFunction& u) {
    double m = 0.0;
    for (double v : u.values) m = std::max(m, std::abs(v));
    return m;
}

double sup_norm_diff(const SampledFunction& u, const SampledFunction& v) {
    if (!u.space || !v.space || !u.space->same_as(*v.space))
        throw std::invalid_argument("space-mismatch: sup_norm_diff needs a shared state space");
    double m = 0.0;
    for (std::size_t i = 0; i < u.values.size(); ++i)
        m = std::max(m, std::abs(u.values[i] - v.values[i]));
    return m;
}

StoppingProblem make_problem(StateSpacePtr space, double discount_a,
                             SampledFunction f, SampledFunction g) {
    if (!(discount_a > 0.0)) throw std::invalid_argument("discount_a must be positive");
    validate_sampled(f);
    validate_sampled(g);
    if (!f.space->same_as(*space) || !g.space->same_as(*space))
        throw std::invalid_argument("space-mismatch: f and g must live on the problem space");
    return StoppingProblem{std::move(space), discount_a, std::move(f), std::move(g)};
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_csv(std::ostream& os, const SampledFunction& u) {
    validate_sampled(u);
    auto cols = u.space->coordinate_columns();
    for (const auto& c : cols) os << c << ',';
    os << "value\n";
    for (std::size_t i = 0; i < u.values.size(); ++i) {
        for (double c : u.space->coordinates(i)) os << format_double(c) << ',';
        os << format_double(u.values[i]) << '\n';
    }
}

} // namespace fellerstop
