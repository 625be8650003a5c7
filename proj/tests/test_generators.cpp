#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cmath>
#include <map>
#include <random>

#include "fellerstop/generators.hpp"
#include "fellerstop/solver.hpp"

using namespace fellerstop;

namespace {

std::map<std::size_t, double> row_entries(const GeneratorMatrix& G, std::size_t row) {
    std::map<std::size_t, double> out;
    for (int k = 0; k < G.entries.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(G.entries, k); it; ++it)
            if (static_cast<std::size_t>(it.row()) == row && it.value() != 0.0)
                out[static_cast<std::size_t>(it.col())] = it.value();
    return out;
}

SampledFunction random_function(const StateSpacePtr& space, std::mt19937_64& gen,
                                double scale = 1.0) {
    std::uniform_real_distribution<double> dist(-scale, scale);
    SampledFunction u{space, std::vector<double>(space->size())};
    for (auto& v : u.values) v = dist(gen);
    return u;
}

/// Dirichlet solve of G u = 0 with pinned end values (test-only helper).
std::vector<double> dirichlet_harmonic(const GeneratorMatrix& G, double left_value,
                                       double right_value) {
    const auto n = static_cast<Eigen::Index>(G.size());
    Eigen::MatrixXd A = Eigen::MatrixXd(G.entries);
    Eigen::MatrixXd interior = A.block(1, 1, n - 2, n - 2);
    Eigen::VectorXd rhs = -left_value * A.block(1, 0, n - 2, 1) -
                          right_value * A.block(1, n - 1, n - 2, 1);
    Eigen::VectorXd u = interior.fullPivLu().solve(rhs);
    std::vector<double> full(static_cast<std::size_t>(n));
    full.front() = left_value;
    full.back() = right_value;
    for (Eigen::Index i = 0; i < n - 2; ++i) full[static_cast<std::size_t>(i + 1)] = u(i);
    return full;
}

void check_valid(const GeneratorMatrix& G) {
    GeneratorReport report = validate_generator(G);
    CAPTURE(report.violations.size());
    CHECK(report.valid());
}

} // namespace

TEST_CASE("reflected BM rows") {
    Grid1D g = make_uniform_grid(0.0, 10.0, 3); // h = 5
    GeneratorMatrix G = bm_generator(g, ReflectedBoundary{});
    auto row0 = row_entries(G, 0);
    CHECK(row0[0] == doctest::Approx(-1.0 / 25.0));
    CHECK(row0[1] == doctest::Approx(1.0 / 25.0));
    CHECK(row0.count(2) == 0);
    auto row1 = row_entries(G, 1);
    CHECK(row1[0] == doctest::Approx(1.0 / 50.0));
    CHECK(row1[1] == doctest::Approx(-1.0 / 25.0));
    CHECK(row1[2] == doctest::Approx(1.0 / 50.0));
    CHECK(G.conservative);
    check_valid(G);
}

TEST_CASE("sticky BM has an absorbing boundary row") {
    Grid1D g = make_uniform_grid(0.0, 10.0, 41);
    GeneratorMatrix G = bm_generator(g, StickyBoundary{});
    CHECK(row_entries(G, 0).empty());
    GeneratorReport report = validate_generator(G);
    CHECK(report.valid());
    CHECK(report.conservative);
    REQUIRE(report.absorbing_rows.size() == 1);
    CHECK(report.absorbing_rows[0] == 0);
}

TEST_CASE("sticky-reflecting boundary row rate") {
    Grid1D g = make_uniform_grid(0.0, 10.0, 101); // h = 0.1
    double c = 2.0;
    GeneratorMatrix G = bm_generator(g, StickyReflectingSpec{c});
    auto row0 = row_entries(G, 0);
    double h = 0.1;
    double expected = 2.0 * c / (h * (2.0 + c * h));
    CHECK(row0[1] == doctest::Approx(expected).epsilon(1e-14));
    CHECK(row0[0] == doctest::Approx(-expected).epsilon(1e-14));
    check_valid(G);
}

TEST_CASE("jump boundary row with a point mass at 3") {
    Grid1D g = make_uniform_grid(0.0, 10.0, 801); // h = 0.0125
    GeneratorMatrix G = bm_generator(g, JumpBoundarySpec{1.0, {{3.0, 1.0}}});
    auto row0 = row_entries(G, 0);
    REQUIRE(row0.size() == 2);
    CHECK(row0[240] == doctest::Approx(1.0));
    CHECK(row0[0] == doctest::Approx(-1.0));
    check_valid(G);

    CHECK_THROWS_WITH_AS(bm_generator(g, JumpBoundarySpec{1.0, {{11.0, 1.0}}}),
                         doctest::Contains("atom-outside-domain"), std::invalid_argument);
    CHECK_THROWS_AS(bm_generator(make_grid({0.0, 1.0, 3.0}), ReflectedBoundary{}),
                    std::invalid_argument);
}

TEST_CASE("skew BM closure") {
    Grid1D g = make_uniform_grid(-5.0, 5.0, 101); // h = 0.1, node 50 at 0
    GeneratorMatrix half = skew_bm_generator(g, 0.5);
    auto row_half = row_entries(half, 50);
    CHECK(row_half[49] == doctest::Approx(1.0 / 0.02)); // 1/(2h^2)
    CHECK(row_half[51] == doctest::Approx(1.0 / 0.02));

    GeneratorMatrix skew = skew_bm_generator(g, 0.9);
    auto row = row_entries(skew, 50);
    CHECK(row[51] / row[49] == doctest::Approx(9.0).epsilon(1e-12));
    check_valid(skew);

    Grid1D positive = make_uniform_grid(1.0, 5.0, 11);
    CHECK_THROWS_WITH_AS(skew_bm_generator(positive, 0.5), doctest::Contains("zero-not-interior"),
                         std::invalid_argument);
}

TEST_CASE("skew BM discrete harmonic function matches the scale function") {
    // closed form on [-L, L] with u(-L)=0, u(L)=1: piecewise linear with
    // slope ratio s_+/s_- = (1-beta)/beta, i.e.
    //   u(x) = s_- (x+L)          for x <= 0
    //   u(x) = s_- L + s_+ x      for x >= 0
    // where s_- = beta/(L), s_+ = (1-beta)/L, normalized so u(L)=1:
    //   s_- = beta / (L), s_+ = (1-beta)/L over normalizer beta+ (1-beta) = 1
    const double beta = 0.9;
    const double L = 5.0;
    Grid1D g = make_uniform_grid(-L, L, 201);
    GeneratorMatrix G = skew_bm_generator(g, beta);
    std::vector<double> u = dirichlet_harmonic(G, 0.0, 1.0);

    auto exact = [&](double x) {
        double s_minus = beta / L;   // slope left of 0
        double s_plus = (1 - beta) / L; // slope right of 0
        return x <= 0.0 ? s_minus * (x + L) : s_minus * L + s_plus * x;
    };
    double h = g.spacing();
    double worst = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i)
        worst = std::max(worst, std::abs(u[i] - exact(g.nodes[i])));
    CHECK(worst <= 2.0 * h);

    double slope_left = (u[100] - u[99]) / h;
    double slope_right = (u[101] - u[100]) / h;
    CHECK(slope_right / slope_left == doctest::Approx((1.0 - beta) / beta).epsilon(1e-9));
}

TEST_CASE("piecewise diffusion reduces to BM for unit coefficients") {
    Grid1D g = make_uniform_grid(0.0, 10.0, 51);
    PiecewiseDiffusionSpec spec{PiecewiseCoefficient(1.0), PiecewiseCoefficient(1.0),
                                PiecewiseCoefficient(0.0), {}, 1e-10};
    GeneratorMatrix G = piecewise_diffusion_generator(g, spec);
    GeneratorMatrix bm = bm_generator(g, ReflectedBoundary{});
    for (std::size_t i = 1; i + 1 < g.size(); ++i) {
        auto a = row_entries(G, i);
        auto b = row_entries(bm, i);
        CHECK(a[i - 1] == doctest::Approx(b[i - 1]).epsilon(1e-14));
        CHECK(a[i + 1] == doctest::Approx(b[i + 1]).epsilon(1e-14));
    }
    check_valid(G);
}

TEST_CASE("piecewise diffusion transmission condition") {
    // face value across the jump is the harmonic mean
    PiecewiseCoefficient sigma({0.0}, {[](double) { return 1.0; }, [](double) { return 2.0; }});
    CHECK(2.0 * sigma.left_limit(0.0) * sigma.right_limit(0.0) /
              (sigma.left_limit(0.0) + sigma.right_limit(0.0)) ==
          doctest::Approx(4.0 / 3.0));

    const double L = 4.0;
    Grid1D g = make_uniform_grid(-L, L, 161);
    PiecewiseDiffusionSpec spec{sigma, PiecewiseCoefficient(1.0), PiecewiseCoefficient(0.0),
                                {0.0}, 1e-10};
    GeneratorMatrix G = piecewise_diffusion_generator(g, spec);
    check_valid(G);

    // discrete harmonic function carries a continuous flux sigma u'
    std::vector<double> u = dirichlet_harmonic(G, 0.0, 1.0);
    double h = g.spacing();
    // closed-form scale function: slopes s_- = J/sigma(0-), s_+ = J/sigma(0+),
    // J = sigma- sigma+ / (L (sigma- + sigma+))
    double J = 1.0 * 2.0 / (L * 3.0);
    auto exact = [&](double x) {
        return x <= 0.0 ? J * (x + L) / 1.0 : J * L / 1.0 + J * x / 2.0;
    };
    double worst = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i)
        worst = std::max(worst, std::abs(u[i] - exact(g.nodes[i])));
    CHECK(worst <= 2.0 * h);

    std::size_t i0 = g.nearest_index(0.0);
    double slope_left = (u[i0] - u[i0 - 1]) / h;
    double slope_right = (u[i0 + 1] - u[i0]) / h;
    CHECK(slope_left / slope_right == doctest::Approx(2.0).epsilon(1e-6));

    CHECK_THROWS_WITH_AS(
        piecewise_diffusion_generator(
            g, PiecewiseDiffusionSpec{sigma, PiecewiseCoefficient(1.0), PiecewiseCoefficient(0.0),
                                      {0.017}, 1e-10}),
        doctest::Contains("J-not-on-grid"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(
        piecewise_diffusion_generator(
            g, PiecewiseDiffusionSpec{PiecewiseCoefficient(0.0), PiecewiseCoefficient(1.0),
                                      PiecewiseCoefficient(0.0), {}, 1e-10}),
        doctest::Contains("ellipticity-violation"), std::invalid_argument);
}

TEST_CASE("levy generator degenerate cases") {
    Grid1D g = make_uniform_grid(0.0, 10.0, 101); // h = 0.1
    GeneratorMatrix pure_bm = levy_cpd_generator(g, 0.0, 1.0, 0.0, {});
    GeneratorMatrix bm = bm_generator(g, ReflectedBoundary{});
    for (std::size_t i = 1; i + 1 < g.size(); ++i) {
        auto a = row_entries(pure_bm, i);
        auto b = row_entries(bm, i);
        CHECK(a[i - 1] == doctest::Approx(b[i - 1]));
        CHECK(a[i + 1] == doctest::Approx(b[i + 1]));
    }

    GeneratorMatrix drift = levy_cpd_generator(g, 1.0, 0.0, 0.0, {});
    auto row = row_entries(drift, 50);
    REQUIRE(row.size() == 2);
    CHECK(row[51] == doctest::Approx(10.0));
    CHECK(row[50] == doctest::Approx(-10.0));

    // upwinding flips with the drift sign
    GeneratorMatrix down = levy_cpd_generator(g, -1.0, 0.0, 0.0, {});
    auto row_down = row_entries(down, 50);
    REQUIRE(row_down.size() == 2);
    CHECK(row_down[49] == doctest::Approx(10.0));
    CHECK(row_down[50] == doctest::Approx(-10.0));

    CHECK_THROWS_WITH_AS(levy_cpd_generator(g, 0.0, -1.0, 0.0, {}),
                         doctest::Contains("negative-diffusion"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(levy_cpd_generator(g, 0.0, 1.0, -1.0, {}),
                         doctest::Contains("negative-rate"), std::invalid_argument);
}

TEST_CASE("levy jump-diffusion equals its perturbation construction") {
    Grid1D g = make_uniform_grid(0.0, 10.0, 201);
    auto atoms = discretize_exponential(1.0, 16);
    GeneratorMatrix direct = levy_cpd_generator(g, 0.0, 1.0, 1.0, atoms);
    GeneratorMatrix diffusion_only = levy_cpd_generator(g, 0.0, 1.0, 0.0, {});
    GeneratorMatrix jumps_only = levy_cpd_generator(g, 0.0, 0.0, 1.0, atoms);
    GeneratorMatrix combined = perturb_generator(diffusion_only, jumps_only);

    Eigen::SparseMatrix<double> diff = direct.entries - combined.entries;
    CHECK(Eigen::MatrixXd(diff).cwiseAbs().maxCoeff() <= 1e-14);

    // resolvent route agrees as well
    std::mt19937_64 gen(3);
    SampledFunction h = random_function(direct.space, gen);
    SampledFunction u1 = resolvent_apply(direct, 0.7, h);
    SampledFunction u2 = resolvent_apply(combined, 0.7, h);
    CHECK(sup_norm_diff(u1, u2) <= 1e-10);
}

TEST_CASE("perturbation identity and conservativity additivity") {
    Grid1D g = make_uniform_grid(0.0, 10.0, 101);
    GeneratorMatrix base = bm_generator(g, ReflectedBoundary{});
    GeneratorMatrix zero;
    zero.space = base.space;
    zero.entries.resize(base.entries.rows(), base.entries.cols());
    GeneratorMatrix sum = perturb_generator(base, zero);
    Eigen::SparseMatrix<double> diff = sum.entries - base.entries;
    CHECK(Eigen::MatrixXd(diff).cwiseAbs().maxCoeff() == 0.0);

    GeneratorMatrix compound = levy_cpd_generator(g, 0.0, 0.0, 1.0, discretize_exponential(1.0, 8));
    GeneratorMatrix perturbed = perturb_generator(base, compound);
    check_valid(perturbed);
    CHECK(perturbed.conservative);

    Grid1D other = make_uniform_grid(0.0, 5.0, 101);
    GeneratorMatrix mismatched = bm_generator(other, ReflectedBoundary{});
    CHECK_THROWS_WITH_AS(perturb_generator(base, mismatched), doctest::Contains("space-mismatch"),
                         std::invalid_argument);
}

TEST_CASE("regime switching assembly") {
    Grid1D g = make_uniform_grid(0.0, 10.0, 51);
    std::vector<GeneratorMatrix> blocks = {bm_generator(g, StickyBoundary{}),
                                           bm_generator(g, ReflectedBoundary{})};

    GeneratorMatrix decoupled = regime_switching_generator(blocks, RegimeCouplingSpec::two_state(0.0, 0.0));
    for (std::size_t i = 0; i < g.size(); ++i) {
        auto row = row_entries(decoupled, i);
        for (auto [col, value] : row) {
            (void)value;
            CHECK(col < g.size()); // no cross-block entries
        }
    }

    GeneratorMatrix coupled = regime_switching_generator(blocks, RegimeCouplingSpec::two_state(0.1, 0.1));
    auto row0 = row_entries(coupled, 0); // state (regime 1, x=0): sticky row + coupling
    REQUIRE(row0.size() == 2);
    CHECK(row0[g.size()] == doctest::Approx(0.1));
    CHECK(row0[0] == doctest::Approx(-0.1));
    check_valid(coupled);

    CHECK_THROWS_WITH_AS(
        regime_switching_generator(blocks, RegimeCouplingSpec::constant({{0.0}})),
        doctest::Contains("coupling-dimension-mismatch"), std::invalid_argument);
    std::vector<GeneratorMatrix> mixed = {bm_generator(g, StickyBoundary{}),
                                          bm_generator(make_uniform_grid(0.0, 5.0, 51),
                                                       ReflectedBoundary{})};
    CHECK_THROWS_WITH_AS(regime_switching_generator(mixed, RegimeCouplingSpec::two_state(0.1, 0.1)),
                         doctest::Contains("grid-mismatch"), std::invalid_argument);
}

TEST_CASE("semi-Markov lift structure") {
    Grid1D space = make_uniform_grid(0.0, 6.0, 31);
    SemiMarkovSpec spec;
    spec.hazard = [](double) { return 1.0; };
    spec.jump_dist = {{0.5, 0.6}, {-0.4, 0.4}};
    spec.clock_grid = make_uniform_grid(0.0, 10.0, 11); // ds = 1
    GeneratorMatrix G = semi_markov_lift_generator(space, spec);
    check_valid(G);
    CHECK(G.conservative);

    const auto& st = *G.space;
    // interior clock row: upwind 1/ds plus renewal
    auto row = row_entries(G, st.flat(3, 10));
    CHECK(row[st.flat(4, 10)] == doctest::Approx(1.0));
    CHECK(row[st.flat(0, space.nearest_index(space.nodes[10] + 0.5))] == doctest::Approx(0.6));
    CHECK(row[st.flat(0, space.nearest_index(space.nodes[10] - 0.4))] == doctest::Approx(0.4));

    // clock closure at S_max drops the upwind term
    auto top = row_entries(G, st.flat(10, 10));
    CHECK(top.count(st.flat(10, 10)) == 1);
    CHECK(top[st.flat(10, 10)] == doctest::Approx(-1.0));

    SemiMarkovSpec bad = spec;
    bad.hazard = [](double) { return -1.0; };
    CHECK_THROWS_WITH_AS(semi_markov_lift_generator(space, bad),
                         doctest::Contains("negative-hazard"), std::invalid_argument);
}

TEST_CASE("hazard rate helpers") {
    auto Q = mixture_exponential_hazard({0.3, 0.7}, {2.0, 0.5});
    // direct formula at s = 1
    double num = 0.3 * 2.0 * std::exp(-2.0) + 0.7 * 0.5 * std::exp(-0.5);
    double den = 0.3 * std::exp(-2.0) + 0.7 * std::exp(-0.5);
    CHECK(Q(1.0) == doctest::Approx(num / den).epsilon(1e-12));
    CHECK(Q(200.0) == doctest::Approx(0.5).epsilon(1e-9)); // limit min lambda_i

    auto B = beta_prime_hazard();
    CHECK(B(0.0) == doctest::Approx(1.0));
    CHECK(B(3.0) == doctest::Approx(0.25));

    double horizon = mixture_exponential_clock_horizon({0.3, 0.7}, {2.0, 0.5});
    double tail = 0.3 * std::exp(-2.0 * horizon) + 0.7 * std::exp(-0.5 * horizon);
    CHECK(tail <= 1e-6);
    CHECK(tail >= 1e-7);
}

TEST_CASE("validate_generator reports violations") {
    Grid1D g = make_uniform_grid(0.0, 10.0, 21);
    GeneratorMatrix G = bm_generator(g, ReflectedBoundary{});
    CHECK(validate_generator(G).valid());

    GeneratorMatrix bad = G;
    bad.entries.coeffRef(3, 4) = -0.5;
    GeneratorReport report = validate_generator(bad);
    REQUIRE_FALSE(report.valid());
    bool found = false;
    for (const auto& v : report.violations)
        if (v.kind == "negative-offdiagonal" && v.row == 3 && v.col == 4) found = true;
    CHECK(found);
}

TEST_CASE("every generator family satisfies the discrete maximum principle and resolvent algebra") {
    std::mt19937_64 gen(17);

    std::vector<GeneratorMatrix> family;
    Grid1D g = make_uniform_grid(0.0, 10.0, 101);
    family.push_back(bm_generator(g, ReflectedBoundary{}));
    family.push_back(bm_generator(g, StickyBoundary{}));
    family.push_back(bm_generator(g, StickyReflectingSpec{1.5}));
    family.push_back(bm_generator(g, JumpBoundarySpec{1.0, {{3.0, 0.5}, {5.0, 0.5}}}));
    family.push_back(skew_bm_generator(make_uniform_grid(-5.0, 5.0, 101), 0.7));
    {
        PiecewiseCoefficient sigma({0.0}, {[](double) { return 1.0; }, [](double) { return 2.0; }});
        family.push_back(piecewise_diffusion_generator(
            make_uniform_grid(-5.0, 5.0, 101),
            PiecewiseDiffusionSpec{sigma, PiecewiseCoefficient(1.0), PiecewiseCoefficient(0.3),
                                   {0.0}, 1e-10}));
    }
    family.push_back(levy_cpd_generator(g, 0.5, 1.0, 1.0, discretize_exponential(1.0, 12)));
    family.push_back(regime_switching_generator(
        {bm_generator(g, StickyBoundary{}), bm_generator(g, ReflectedBoundary{})},
        RegimeCouplingSpec::two_state(0.1, 0.1)));
    {
        SemiMarkovSpec spec;
        spec.hazard = beta_prime_hazard();
        spec.jump_dist = {{0.8, 1.0}};
        spec.clock_grid = make_uniform_grid(0.0, 20.0, 11);
        family.push_back(semi_markov_lift_generator(make_uniform_grid(0.0, 6.0, 41), spec));
    }

    for (const auto& G : family) {
        GeneratorReport report = validate_generator(G);
        CHECK(report.valid());

        // Dynkin: conservative generators annihilate constants
        if (G.conservative) {
            Eigen::VectorXd ones = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(G.size()));
            CHECK((G.entries * ones).cwiseAbs().maxCoeff() <= 1e-10);
        }

        for (double lambda : {0.1, 1.0, 10.0}) {
            ResolventOperator R(G, lambda);
            SampledFunction h = random_function(G.space, gen);
            SampledFunction u = R.apply(h);
            CHECK(sup_norm(u) <= sup_norm(h) / lambda + 1e-10);
        }

        // resolvent identity R_l h - R_m h = (m - l) R_l R_m h
        for (auto [l, m] : std::vector<std::pair<double, double>>{{0.1, 1.0}, {1.0, 10.0}}) {
            ResolventOperator Rl(G, l), Rm(G, m);
            SampledFunction h = random_function(G.space, gen);
            SampledFunction lhs = Rl.apply(h);
            SampledFunction rhs = Rm.apply(h);
            SampledFunction cross = Rl.apply(rhs);
            double worst = 0.0;
            for (std::size_t i = 0; i < h.size(); ++i)
                worst = std::max(worst, std::abs(lhs.values[i] - rhs.values[i] -
                                                 (m - l) * cross.values[i]));
            CHECK(worst <= 1e-10);
        }
    }
}

TEST_CASE("triplet export and JSON header") {
    Grid1D g = make_uniform_grid(0.0, 10.0, 3);
    GeneratorMatrix G = bm_generator(g, ReflectedBoundary{});
    std::ostringstream os;
    write_triplets(os, G);
    CHECK(os.str().substr(0, 13) == "row,col,rate\n");
    CHECK(os.str().find("0,1,") != std::string::npos);
    std::string header = generator_header_json(G);
    CHECK(header.find("\"conservative\": true") != std::string::npos);
    CHECK(header.find("\"kind\": \"single\"") != std::string::npos);
}
