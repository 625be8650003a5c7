#pragma once

#include <Eigen/SparseCore>

#include <cstddef>
#include <functional>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include "fellerstop/core.hpp"

namespace fellerstop {

/// Sparse rate-matrix approximation of a Feller generator.
///
/// Invariants (the discrete positive maximum principle): off-diagonal entries
/// are nonnegative and every row sum is <= 0 within 1e-10 slack;
/// `conservative` is true iff every row sum vanishes within 1e-10.
struct GeneratorMatrix {
    StateSpacePtr space;
    Eigen::SparseMatrix<double> entries; // M x M, rates in 1/time
    bool conservative = false;

    std::size_t size() const { return space ? space->size() : 0; }
};

struct GeneratorViolation {
    std::string kind; // "negative-offdiagonal" | "positive-row-sum" | "conservativity-mismatch"
    std::size_t row = 0;
    std::size_t col = 0;
    double value = 0.0;
};

struct GeneratorReport {
    std::vector<GeneratorViolation> violations;
    std::vector<std::size_t> absorbing_rows; // informational, all-zero rows
    bool conservative = false;

    bool valid() const { return violations.empty(); }
};

/// Checks the GeneratorMatrix invariants and reports every violation.
GeneratorReport validate_generator(const GeneratorMatrix& G);

/// Nonlocal boundary behaviour: from the boundary the process waits an
/// exponential time with rate `lambda_rate` and jumps to an atom of the
/// discrete measure `jump_dist`.
struct JumpBoundarySpec {
    double lambda_rate = 0.0;
    std::vector<std::pair<double, double>> jump_dist; // (atom, weight)
};

/// Throws std::invalid_argument if rates/weights/atoms violate the invariants
/// (weights positive and summing to 1 within 1e-12, atoms positive).
void validate_jump_spec(const JumpBoundarySpec& spec);

struct StickyReflectingSpec {
    double c = 0.0; // D_xx u(0) = c D_x u(0), c > 0
};

struct ReflectedBoundary {};
struct StickyBoundary {};

using BmBoundary = std::variant<ReflectedBoundary, StickyBoundary,
                                StickyReflectingSpec, JumpBoundarySpec>;

/// Brownian motion on a uniform grid with the selected left-boundary
/// behaviour; the right boundary follows grid.right_boundary_kind.
///
/// Row conventions (h = spacing):
///   interior:          (1/(2h^2), -1/h^2, 1/(2h^2))
///   reflected:         rate 1/h^2 to node 1 (ghost-node zero-flux closure)
///   sticky:            all-zero row (absorbing)
///   sticky-reflecting: rate 2c/(h(2+ch)) to node 1
///   jump:              rate lambda*weight_k to the node nearest atom_k,
///                      diagonal -lambda
GeneratorMatrix bm_generator(const Grid1D& grid, const BmBoundary& boundary);

/// Skew Brownian motion: standard rows except at the node x=0, which carries
/// left rate (1-beta)/h^2 and right rate beta/h^2 (flux-transmission closure
/// beta u'(0+) = (1-beta) u'(0-)). Requires 0 as an interior node.
GeneratorMatrix skew_bm_generator(const Grid1D& grid, double beta);

/// Coefficient defined piecewise so one-sided limits at discontinuities are
/// well defined. Intervals are delimited by `breakpoints`; piece i applies on
/// (breakpoints[i-1], breakpoints[i]).
class PiecewiseCoefficient {
public:
    /// Globally continuous coefficient.
    explicit PiecewiseCoefficient(std::function<double(double)> fn);
    /// Constant coefficient.
    explicit PiecewiseCoefficient(double value);
    /// Pieces separated by breakpoints; pieces.size() == breakpoints.size()+1.
    PiecewiseCoefficient(std::vector<double> breakpoints,
                         std::vector<std::function<double(double)>> pieces);

    double left_limit(double x) const;
    double right_limit(double x) const;
    const std::vector<double>& breakpoints() const { return breakpoints_; }

private:
    std::size_t piece_index(double x, bool from_left) const;
    std::vector<double> breakpoints_;
    std::vector<std::function<double(double)>> pieces_;
};

/// Diffusion (rho/2) D_x(sigma D_x u) + mu D_x u with piecewise-continuous
/// coefficients discontinuous only on the finite set J.
struct PiecewiseDiffusionSpec {
    PiecewiseCoefficient sigma;
    PiecewiseCoefficient rho;
    PiecewiseCoefficient mu;
    std::vector<double> discontinuity_set; // J, sorted
    double ellipticity_floor = 1e-10;      // lambda_0 > 0
};

/// Finite-volume discretization with harmonic face averaging of sigma (which
/// enforces the transmission condition sigma(x-)u'(x-) = sigma(x+)u'(x+)) and
/// first-order upwind drift. Every point of J must coincide with a grid node.
GeneratorMatrix piecewise_diffusion_generator(const Grid1D& grid,
                                              const PiecewiseDiffusionSpec& spec);

/// Finite-activity 1-D Levy generator: upwind drift + (diffusion^2/2) D_xx +
/// jump rows with atoms snapped to the grid; jumps leaving the truncation
/// window are clipped to the nearest window edge (self-loops are dropped).
GeneratorMatrix levy_cpd_generator(const Grid1D& grid, double drift,
                                   double diffusion, double jump_rate,
                                   const std::vector<std::pair<double, double>>& jump_dist);

/// Entrywise sum of a generator and a bounded perturbing operator on the same
/// state space; the result is re-validated.
GeneratorMatrix perturb_generator(const GeneratorMatrix& base,
                                  const GeneratorMatrix& bounded_op);

/// Regime coupling rates q_ij >= 0 (zero diagonal), possibly state dependent.
struct RegimeCouplingSpec {
    std::vector<std::vector<std::function<double(double)>>> q;

    static RegimeCouplingSpec constant(const std::vector<std::vector<double>>& rates);
    /// Two-regime chain with intensity matrix [[-q1, q1], [q2, -q2]].
    static RegimeCouplingSpec two_state(double q1, double q2);
};

/// Block-diagonal assembly of per-regime generators plus coupling rates
/// between matching grid nodes.
GeneratorMatrix regime_switching_generator(const std::vector<GeneratorMatrix>& per_regime,
                                           const RegimeCouplingSpec& coupling);

/// Semi-Markov lift data: hazard Q(s) on the truncated clock [0, S_max] and
/// the jump-size distribution F.
struct SemiMarkovSpec {
    std::function<double(double)> hazard;            // Q(s) >= 0
    std::vector<std::pair<double, double>> jump_dist; // F atoms on R
    Grid1D clock_grid;                                // uniform on [0, S_max]
};

/// Two-factor lift of a renewal-reward process: D_s by first-order upwind in
/// +s, renewal jumps (s,x) -> (0, x+y) at rate Q(s) F(y); the clock row at
/// S_max drops the D_s term (compactified clock closure).
GeneratorMatrix semi_markov_lift_generator(const Grid1D& space_grid,
                                           const SemiMarkovSpec& spec);

/// Hazard rate of the mixture-exponential interarrival distribution
/// P(x) = sum_i w_i (1 - e^{-lambda_i x}); tends to min_i lambda_i.
std::function<double(double)> mixture_exponential_hazard(std::vector<double> weights,
                                                         std::vector<double> rates);

/// Hazard rate Q(s) = 1/(1+s) of the generalized beta prime interarrival
/// distribution P(x) = x/(1+x).
std::function<double(double)> beta_prime_hazard();

/// Clock horizon with 1 - P(S_max) < mass_tol for the mixture-exponential law.
double mixture_exponential_clock_horizon(const std::vector<double>& weights,
                                         const std::vector<double>& rates,
                                         double mass_tol = 1e-6);

/// Discretizes Exp(gamma) into n equal-probability quantile-midpoint atoms.
std::vector<std::pair<double, double>> discretize_exponential(double gamma,
                                                              std::size_t n_atoms);

/// Sparse triplet text export `row,col,rate` (one entry per line).
void write_triplets(std::ostream& os, const GeneratorMatrix& G);

/// JSON debug header: space layout and conservativity flag.
std::string generator_header_json(const GeneratorMatrix& G);

} // namespace fellerstop
