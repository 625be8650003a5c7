#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "fellerstop/core.hpp"

namespace fellerstop {

/// Continuous piecewise-linear function on [0, inf) described by its value at
/// 0, interior kink locations and per-segment slopes.
struct PiecewiseLinear {
    double value_at_zero = 0.0;
    std::vector<double> kinks;  // sorted, positive
    std::vector<double> slopes; // kinks.size() + 1 entries

    double value(double x) const;
    /// Right slope at x (left slope just below a kink).
    double slope(double x) const;

    static PiecewiseLinear constant(double value);
    static PiecewiseLinear linear(double intercept, double slope);
    /// Call-spread payoff (x-c1)^+ - (x-c2)^+.
    static PiecewiseLinear straddle(double c1, double c2);
};

/// Piecewise solution A_i e^{theta x} + B_i e^{-theta x} + p0_i + p1_i x of a
/// half-line ODE, C^1-matched across knots.
struct PiecewiseExpFunction {
    double theta = 0.0;
    std::vector<double> knots; // segment i applies on [knots[i], knots[i+1])
    struct Segment {
        double exp_pos = 0.0; // coefficient of e^{+theta x}
        double exp_neg = 0.0; // coefficient of e^{-theta x}
        double poly0 = 0.0;
        double poly1 = 0.0;
    };
    std::vector<Segment> segments;

    double value(double x) const;
    double derivative(double x) const;
    double second_derivative(double x) const;
    PiecewiseExpFunction scaled(double factor) const;

private:
    std::size_t segment_index(double x) const;
};

enum class HalflineBoundaryKind { Reflected, Sticky, StickyReflecting, Jump };

struct HalflineBoundary {
    HalflineBoundaryKind kind = HalflineBoundaryKind::Reflected;
    double c = 0.0; // sticky-reflecting constant
};

/// Closed-form bounded solution of (a - (1/2) D_xx) u = h on [0, inf) with
/// the boundary condition imposed at 0. Throws "unsupported-boundary" for the
/// jump boundary.
PiecewiseExpFunction halfline_resolvent(double a, HalflineBoundary boundary,
                                        const PiecewiseLinear& h);

/// Reflected-boundary solution: V(x) = C(e^{sqrt(2a)x} + e^{-sqrt(2a)x}) on
/// [0, x*), g(x) beyond; C and x* from smooth fit on the payoff.
struct AnalyticReflectedSolution {
    double C = 0.0;
    double x_star = 0.0;
    double a = 0.0, c1 = 0.0, c2 = 0.0;

    double envelope(double x) const; // C(e^{theta x} + e^{-theta x})
    double value(double x) const;
};

AnalyticReflectedSolution reflected_straddle_solution(double a, double c1, double c2);

/// Solution for Brownian motion with a jump at the boundary:
/// u(x) = C1 e^{-sqrt(2a)x} + C2 e^{sqrt(2a)x} on [0, x*), g beyond.
struct AnalyticJumpSolution {
    double C1 = 0.0, C2 = 0.0;
    double x_star = 0.0;
    double a = 0.0, lambda = 0.0, c1 = 0.0, c2 = 0.0;
    std::vector<std::pair<double, double>> jump_dist;
    /// All tangency roots found in the bracket; the solution uses the first
    /// one whose assembled function dominates the payoff.
    std::vector<double> candidate_roots;
    bool kink_contact = false; // x* = c2 with value matching only

    double continuation(double x) const;
    double value(double x) const;
    /// Residual of the boundary linkage a(C1+C2) = lambda int u dF +
    /// lambda int g dF - lambda u(0).
    double linkage_residual() const;
};

AnalyticJumpSolution jump_boundary_solution(double a, double lambda,
                                            const std::vector<std::pair<double, double>>& jump_dist,
                                            double c1, double c2);

/// Solution for the regime-switching boundary diffusion.
/// Regime 1 carries the sticky boundary (D_xx u(1,0) = 0), regime 2 the
/// reflected boundary (D_x u(2,0) = 0); `l` is the regime whose continuation
/// region extends to x2*.
struct AnalyticRegimeSolution {
    std::array<double, 4> A{};
    std::array<double, 2> B{};
    double x1_star = 0.0, x2_star = 0.0;
    int l = 2;
    double a = 0.0, q1 = 0.0, q2 = 0.0, c1 = 0.0, c2 = 0.0;
    std::array<double, 4> beta{};  // sqrt(2a), -sqrt(2a), +-sqrt(2(a+q1+q2))
    double gamma_l = 0.0;          // sqrt(2(a + q_l))
    PiecewiseExpFunction v_l;      // particular solution q_l R_{a+q_l} g

    double alpha(int regime, int k) const; // alpha_{ik}, regime in {1,2}, k in {1..4}
    double gamma(int regime) const;        // sqrt(2(a + q_regime))
    double value(int regime, double x) const;
    double derivative(int regime, double x) const;
};

AnalyticRegimeSolution regime_switching_solution(double a, double q1, double q2,
                                                 double c1, double c2, int l);

/// Same solve with the particular solution built under the other admissible
/// boundary condition (the assembled value function must not change).
AnalyticRegimeSolution regime_switching_solution_alt_boundary(double a, double q1, double q2,
                                                              double c1, double c2, int l);

/// Resamples an analytic curve on a state space (regime-aware).
SampledFunction resample_reflected(const AnalyticReflectedSolution& sol, const StateSpacePtr& space);
SampledFunction resample_jump(const AnalyticJumpSolution& sol, const StateSpacePtr& space);
SampledFunction resample_regime(const AnalyticRegimeSolution& sol, const StateSpacePtr& space);

/// Parameter block {C, x_star, C1, C2, A, B, x1_star, x2_star} as JSON (only
/// the fields of the given family are present).
std::string analytic_params_json(const AnalyticReflectedSolution& sol);
std::string analytic_params_json(const AnalyticJumpSolution& sol);
std::string analytic_params_json(const AnalyticRegimeSolution& sol);

} // namespace fellerstop
