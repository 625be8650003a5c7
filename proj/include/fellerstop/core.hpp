#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace fellerstop {

/// Discrete closure applied to a boundary row when a generator is built.
/// `Artificial` marks a truncation boundary of an unbounded state space; it
/// receives the same zero-flux closure as `Reflecting`.
enum class BoundaryKind { Reflecting, Absorbing, Artificial };

/// One-dimensional grid with strictly increasing nodes (length >= 3).
struct Grid1D {
    std::vector<double> nodes;
    BoundaryKind left_boundary_kind = BoundaryKind::Reflecting;
    BoundaryKind right_boundary_kind = BoundaryKind::Artificial;
    /// true iff max/min spacing ratio < 1 + 1e-12
    bool uniform = false;

    std::size_t size() const { return nodes.size(); }
    double lo() const { return nodes.front(); }
    double hi() const { return nodes.back(); }

    /// Spacing of a uniform grid. Throws if the grid is not uniform.
    double spacing() const;

    /// Index of the node closest to x (ties resolve to the lower index).
    std::size_t nearest_index(double x) const;

    /// true if x lies within 1e-9 * spacing of a node.
    bool contains_node(double x) const;
};

/// Builds a grid from explicit nodes, validating the invariants.
Grid1D make_grid(std::vector<double> nodes,
                 BoundaryKind left = BoundaryKind::Reflecting,
                 BoundaryKind right = BoundaryKind::Artificial);

/// n equally spaced nodes on [lo, hi] including both endpoints.
/// Throws std::invalid_argument on lo >= hi ("invalid-range") or n < 3
/// ("too-few-nodes").
Grid1D make_uniform_grid(double lo, double hi, std::size_t n,
                         BoundaryKind left = BoundaryKind::Reflecting,
                         BoundaryKind right = BoundaryKind::Artificial);

/// Flattened product state space. Supported shapes:
///   Single     : one spatial grid,                     index = ix
///   RegimeGrid : {1..N} x grid,                        index = r * nx + ix
///   ClockGrid  : clock grid x space grid (semi-Markov) index = is * nx + ix
class StateSpace {
public:
    enum class Kind { Single, RegimeGrid, ClockGrid };

    static std::shared_ptr<const StateSpace> single(Grid1D space);
    static std::shared_ptr<const StateSpace> regime_product(std::size_t n_regimes,
                                                            Grid1D space);
    static std::shared_ptr<const StateSpace> clock_product(Grid1D clock,
                                                           Grid1D space);

    Kind kind() const { return kind_; }
    std::size_t size() const { return n_outer_ * space_.size(); }

    /// Number of outer-factor states (1, N regimes, or clock nodes).
    std::size_t n_outer() const { return n_outer_; }
    std::size_t n_regimes() const;

    const Grid1D& space_grid() const { return space_; }
    const Grid1D& clock_grid() const;

    std::size_t flat(std::size_t outer, std::size_t inner) const;
    std::pair<std::size_t, std::size_t> unflat(std::size_t index) const;

    /// CSV header columns preceding "value".
    std::vector<std::string> coordinate_columns() const;
    /// Coordinate values for a flat index, in coordinate_columns() order.
    std::vector<double> coordinates(std::size_t index) const;

    /// Structural equality (factor shapes and node values).
    bool same_as(const StateSpace& other) const;

private:
    StateSpace() = default;
    Kind kind_ = Kind::Single;
    std::size_t n_outer_ = 1;
    Grid1D clock_;
    Grid1D space_;
};

using StateSpacePtr = std::shared_ptr<const StateSpace>;

/// Function sampled on every state of a StateSpace. Values must be finite.
struct SampledFunction {
    StateSpacePtr space;
    std::vector<double> values;

    double operator[](std::size_t i) const { return values[i]; }
    std::size_t size() const { return values.size(); }
};

/// Samples pointwise from a function of the spatial coordinate only.
SampledFunction sample(const StateSpacePtr& space,
                       const std::function<double(double)>& fn);

/// Samples from a function of (outer index, spatial coordinate).
SampledFunction sample2(const StateSpacePtr& space,
                        const std::function<double(std::size_t, double)>& fn);

SampledFunction constant_function(const StateSpacePtr& space, double value);

/// Validates finiteness and size; throws std::invalid_argument on failure.
void validate_sampled(const SampledFunction& u);

/// Call-spread payoff g(x) = (x-c1)^+ - (x-c2)^+ sampled on the grid.
/// Throws std::invalid_argument ("invalid-strikes") when c1 >= c2.
SampledFunction straddle_payoff(const Grid1D& grid, double c1, double c2);
SampledFunction straddle_payoff(const StateSpacePtr& space, double c1, double c2);

/// Pointwise payoff value, shared by the sampled and analytic code paths.
double straddle_value(double x, double c1, double c2);

double sup_norm(const SampledFunction& u);
/// Throws std::invalid_argument ("space-mismatch") when spaces differ.
double sup_norm_diff(const SampledFunction& u, const SampledFunction& v);

/// Infinite-horizon discounted stopping problem: data (a, f, g) on a space.
struct StoppingProblem {
    StateSpacePtr space;
    double discount_a = 0.0;
    SampledFunction f;
    SampledFunction g;
};

/// Validating constructor; throws on a <= 0, space mismatch, non-finite data.
StoppingProblem make_problem(StateSpacePtr space, double discount_a,
                             SampledFunction f, SampledFunction g);

/// CSV with header `x,value` (or `regime,x,value`, `s,x,value`),
/// 17-significant-digit decimals, LF line endings.
void write_csv(std::ostream& os, const SampledFunction& u);

/// 17-significant-digit decimal formatting used by all emitters.
std::string format_double(double v);

} // namespace fellerstop
