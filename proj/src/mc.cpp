#include "fellerstop/mc.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace fellerstop {

namespace {

/// splitmix64: a splittable 64-bit generator; per-path streams are derived
/// deterministically from (seed, path_index) so estimates do not depend on
/// how paths are scheduled.
struct SplitMix64 {
    std::uint64_t state;

    explicit SplitMix64(std::uint64_t s) : state(s) {}

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
};

std::uint64_t mix(std::uint64_t x) {
    SplitMix64 g(x);
    return g.next();
}

/// Uniform draw in the open interval (0,1); antithetic streams map u -> 1-u.
struct PathRng {
    SplitMix64 gen;
    bool antithetic;

    PathRng(std::uint64_t seed, std::uint64_t path_index, bool flip)
        : gen(mix(seed ^ mix(path_index + 0x632BE59BD9B4E019ULL))), antithetic(flip) {}

    double uniform() {
        double u = (static_cast<double>(gen.next() >> 11) + 0.5) * 0x1.0p-53;
        return antithetic ? 1.0 - u : u;
    }

    double exponential(double rate) { return -std::log(uniform()) / rate; }
};

struct CtmcRows {
    std::vector<double> total_rate;
    std::vector<std::vector<std::pair<std::size_t, double>>> transitions;

    explicit CtmcRows(const GeneratorMatrix& G) {
        const std::size_t n = G.size();
        total_rate.assign(n, 0.0);
        transitions.resize(n);
        const auto& A = G.entries;
        for (int k = 0; k < A.outerSize(); ++k) {
            for (Eigen::SparseMatrix<double>::InnerIterator it(A, k); it; ++it) {
                if (it.row() == it.col() || it.value() <= 0.0) continue;
                auto r = static_cast<std::size_t>(it.row());
                transitions[r].emplace_back(static_cast<std::size_t>(it.col()), it.value());
                total_rate[r] += it.value();
            }
        }
        for (auto& row : transitions)
            std::sort(row.begin(), row.end());
    }

    bool absorbing(std::size_t i) const { return total_rate[i] <= 0.0; }

    std::size_t jump_from(std::size_t i, double u) const {
        double target = u * total_rate[i];
        double acc = 0.0;
        for (const auto& [col, rate] : transitions[i]) {
            acc += rate;
            if (target <= acc) return col;
        }
        return transitions[i].back().first;
    }
};

/// Streaming mean/variance (Welford), accumulated in path order.
struct RunningStats {
    std::size_t n = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) {
        ++n;
        double d = x - mean;
        mean += d / static_cast<double>(n);
        m2 += d * (x - mean);
    }

    double std_error() const {
        if (n < 2) return 0.0;
        double var = m2 / static_cast<double>(n - 1);
        return std::sqrt(std::max(var, 0.0) / static_cast<double>(n));
    }
};

void validate_sim_config(const SimConfig& cfg) {
    if (cfg.n_paths < 1) throw std::invalid_argument("n_paths must be >= 1");
    if (cfg.antithetic && cfg.n_paths % 2 != 0)
        throw std::invalid_argument("antithetic sampling needs an even n_paths");
}

double bias_bound(const StoppingProblem& problem, double t_max) {
    return std::exp(-problem.discount_a * t_max) *
           (sup_norm(problem.g) + sup_norm(problem.f) / problem.discount_a);
}

double resolve_horizon(const StoppingProblem& problem, const SimConfig& cfg) {
    if (cfg.t_max > 0.0) return cfg.t_max;
    double scale = sup_norm(problem.g) + sup_norm(problem.f) / problem.discount_a;
    return default_time_horizon(problem, std::max(1e-8 * scale, 1e-300));
}

} // namespace

double default_time_horizon(const StoppingProblem& problem, double target_bias) {
    double scale = sup_norm(problem.g) + sup_norm(problem.f) / problem.discount_a;
    if (scale <= 0.0) return 1.0;
    return std::log(scale / target_bias) / problem.discount_a;
}

PathEstimate simulate_stopped_value(const GeneratorMatrix& G, const StoppingProblem& problem,
                                    const StoppingRegion& region, std::size_t start_index,
                                    const SimConfig& cfg) {
    validate_sim_config(cfg);
    if (!region.space->same_as(*problem.space))
        throw std::invalid_argument("space-mismatch: region and problem spaces differ");
    if (start_index >= problem.space->size())
        throw std::invalid_argument("start index outside the state space");

    const double a = problem.discount_a;
    const double t_max = resolve_horizon(problem, cfg);
    const CtmcRows rows(G);
    const auto& f = problem.f.values;
    const auto& g = problem.g.values;

    auto run_path = [&](PathRng& rng) {
        double value = 0.0;
        double t = 0.0;
        double disc = 1.0;
        std::size_t x = start_index;
        while (true) {
            if (region.mask[x]) {
                value += disc * g[x];
                break;
            }
            if (rows.absorbing(x)) {
                value += disc * f[x] / a;
                break;
            }
            double tau = rng.exponential(rows.total_rate[x]);
            if (t + tau >= t_max) {
                double disc_end = std::exp(-a * t_max);
                value += f[x] / a * (disc - disc_end);
                break;
            }
            double disc_next = disc * std::exp(-a * tau);
            value += f[x] / a * (disc - disc_next);
            t += tau;
            disc = disc_next;
            x = rows.jump_from(x, rng.uniform());
        }
        return value;
    };

    RunningStats stats;
    if (cfg.antithetic) {
        for (std::size_t p = 0; p < cfg.n_paths; p += 2) {
            PathRng rng_a(cfg.rng_seed, p, false);
            PathRng rng_b(cfg.rng_seed, p, true);
            stats.add(0.5 * (run_path(rng_a) + run_path(rng_b)));
        }
    } else {
        for (std::size_t p = 0; p < cfg.n_paths; ++p) {
            PathRng rng(cfg.rng_seed, p, false);
            stats.add(run_path(rng));
        }
    }

    PathEstimate est;
    est.mean = stats.mean;
    est.std_error = stats.std_error();
    est.n_paths = cfg.n_paths;
    est.truncation_bias_bound = bias_bound(problem, t_max);
    return est;
}

bool MartingaleReport::all_pass() const {
    for (const auto& cp : checkpoints)
        if (!cp.martingale_check.pass || !cp.supermartingale_check.pass) return false;
    return true;
}

MartingaleReport martingale_check(const GeneratorMatrix& G, const StoppingProblem& problem,
                                  const ValueFunction& vf, std::size_t start_index,
                                  const std::vector<double>& checkpoints, const SimConfig& cfg) {
    validate_sim_config(cfg);
    if (checkpoints.empty()) throw std::invalid_argument("need at least one checkpoint");
    std::vector<double> times = checkpoints;
    std::sort(times.begin(), times.end());
    const double a = problem.discount_a;
    const CtmcRows rows(G);
    const auto& f = problem.f.values;
    const auto& v = vf.v.values;
    const auto& mask = vf.stopping_mask;

    const std::size_t n_cp = times.size();
    std::vector<RunningStats> stopped_stats(n_cp), running_stats(n_cp);
    std::vector<double> stopped_path(n_cp), running_path(n_cp);

    auto run_path = [&](PathRng& rng) {
        double t = 0.0;
        double fint = 0.0; // int_0^t e^{-as} f ds
        std::size_t x = start_index;
        bool stopped = false;
        double m_stopped = 0.0;
        std::size_t cp = 0;

        while (cp < n_cp) {
            if (!stopped && mask[x]) {
                stopped = true;
                m_stopped = std::exp(-a * t) * v[x] + fint;
            }
            double tau = rows.absorbing(x) ? std::numeric_limits<double>::infinity()
                                           : rng.exponential(rows.total_rate[x]);
            double t_next = t + tau;
            while (cp < n_cp && times[cp] <= t_next) {
                double c = times[cp];
                double fint_c = fint + f[x] / a * (std::exp(-a * t) - std::exp(-a * c));
                double m_run = std::exp(-a * c) * v[x] + fint_c;
                running_path[cp] = m_run;
                stopped_path[cp] = stopped ? m_stopped : m_run;
                ++cp;
            }
            if (cp >= n_cp) break;
            fint += f[x] / a * (std::exp(-a * t) - std::exp(-a * t_next));
            t = t_next;
            x = rows.jump_from(x, rng.uniform());
        }
    };

    auto accumulate = [&]() {
        for (std::size_t c = 0; c < n_cp; ++c) {
            stopped_stats[c].add(stopped_path[c]);
            running_stats[c].add(running_path[c]);
        }
    };

    if (cfg.antithetic) {
        std::vector<double> s_a(n_cp), r_a(n_cp);
        for (std::size_t p = 0; p < cfg.n_paths; p += 2) {
            PathRng rng_a(cfg.rng_seed, p, false);
            run_path(rng_a);
            s_a = stopped_path;
            r_a = running_path;
            PathRng rng_b(cfg.rng_seed, p, true);
            run_path(rng_b);
            for (std::size_t c = 0; c < n_cp; ++c) {
                stopped_path[c] = 0.5 * (stopped_path[c] + s_a[c]);
                running_path[c] = 0.5 * (running_path[c] + r_a[c]);
            }
            accumulate();
        }
    } else {
        for (std::size_t p = 0; p < cfg.n_paths; ++p) {
            PathRng rng(cfg.rng_seed, p, false);
            run_path(rng);
            accumulate();
        }
    }

    MartingaleReport report;
    report.v_start = v[start_index];
    for (std::size_t c = 0; c < n_cp; ++c) {
        MartingaleCheckpoint cp;
        cp.t = times[c];
        cp.stopped.mean = stopped_stats[c].mean;
        cp.stopped.std_error = stopped_stats[c].std_error();
        cp.stopped.n_paths = cfg.n_paths;
        cp.running.mean = running_stats[c].mean;
        cp.running.std_error = running_stats[c].std_error();
        cp.running.n_paths = cfg.n_paths;

        double diff = std::abs(cp.stopped.mean - report.v_start);
        cp.martingale_check = CheckResult{"martingale-up-to-tau*",
                                          diff <= 3.0 * cp.stopped.std_error,
                                          3.0 * cp.stopped.std_error - diff};
        double slack = report.v_start + 3.0 * cp.running.std_error - cp.running.mean;
        cp.supermartingale_check = CheckResult{"supermartingale", slack >= 0.0, slack};
        report.checkpoints.push_back(cp);
    }
    return report;
}

SuboptimalityReport perturbed_region_suboptimality(const GeneratorMatrix& G,
                                                   const StoppingProblem& problem,
                                                   const StoppingRegion& region,
                                                   long shift_nodes, std::size_t start_index,
                                                   double v_reference, const SimConfig& cfg) {
    StoppingRegion shifted = shift_region(region, shift_nodes);
    SuboptimalityReport report;
    report.shift_nodes = shift_nodes;
    report.estimate = simulate_stopped_value(G, problem, shifted, start_index, cfg);
    report.v_reference = v_reference;
    double slack = v_reference + 3.0 * report.estimate.std_error - report.estimate.mean;
    report.check = CheckResult{"perturbed-region-suboptimal", slack >= 0.0, slack};
    return report;
}

std::string estimate_json(const PathEstimate& estimate) {
    nlohmann::json j;
    j["mean"] = estimate.mean;
    j["std_error"] = estimate.std_error;
    j["n_paths"] = estimate.n_paths;
    j["bias_bound"] = estimate.truncation_bias_bound;
    return j.dump(2);
}

std::string martingale_report_json(const MartingaleReport& report) {
    nlohmann::json j;
    j["v_start"] = report.v_start;
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& cp : report.checkpoints) {
        nlohmann::json c;
        c["t"] = cp.t;
        c["stopped_mean"] = cp.stopped.mean;
        c["stopped_std_error"] = cp.stopped.std_error;
        c["running_mean"] = cp.running.mean;
        c["running_std_error"] = cp.running.std_error;
        c["checks"] = nlohmann::json::array(
            {{{"name", cp.martingale_check.name},
              {"pass", cp.martingale_check.pass},
              {"margin", cp.martingale_check.margin}},
             {{"name", cp.supermartingale_check.name},
              {"pass", cp.supermartingale_check.pass},
              {"margin", cp.supermartingale_check.margin}}});
        checks.push_back(c);
    }
    j["checks"] = checks;
    return j.dump(2);
}

} // namespace fellerstop
