#pragma once

#include <optional>
#include <string>
#include <vector>

#include "simofdma/allocation.hpp"
#include "simofdma/channel.hpp"
#include "simofdma/common.hpp"
#include "simofdma/config.hpp"
#include "simofdma/phase_opt.hpp"
#include "simofdma/sim_stack.hpp"

namespace simofdma {

struct TraceRow {
    unsigned iteration = 0;
    std::string step;     // "init", "phase", "alpha", "zstep"
    int layer = -1;       // 1-based layer for phase steps, -1 otherwise
    double gamma = 0.0;
    double max_slack = 0.0;
    double alpha = 0.0;
};

struct FitState {
    Assignment assignment;
    PhaseConfig phases;
    double alpha = 0.0;
    double gamma = 0.0;
    std::vector<TraceRow> trace;
};

struct OptimizeOptions {
    unsigned ao_iterations = 50;
    InnerSolver inner = InnerSolver::coordinate_descent;
    ZStepSolver zstep = ZStepSolver::milp;
    unsigned cd_sweeps = 3;
    PccpOptions pccp;
    double plateau_rel_tol = 1e-5;
    unsigned plateau_window = 3;
    double greedy_threshold = 0.10;
    unsigned per_user = 10;  // K_c

    static OptimizeOptions from_config(const SystemConfig& cfg) {
        OptimizeOptions o;
        o.ao_iterations = cfg.ao_iterations;
        o.inner = cfg.inner();
        o.zstep = cfg.zstep();
        o.cd_sweeps = cfg.cd_sweeps;
        o.pccp.lambda0 = cfg.pccp_lambda0;
        o.pccp.growth = cfg.pccp_growth;
        o.pccp.lambda_max = cfg.pccp_lambda_max;
        o.pccp.tol = cfg.pccp_tol;
        o.plateau_rel_tol = cfg.plateau_rel_tol;
        o.plateau_window = cfg.plateau_window;
        o.greedy_threshold = cfg.greedy_threshold;
        o.per_user = cfg.subcarriers_per_user;
        return o;
    }
};

inline double fit_objective(const std::vector<arma::cx_mat>& g, const SimStack& stack,
                            const FitState& state) {
    const auto h = effective_channels(g, stack, state.phases);
    return gamma_direct(h, state.assignment.z, state.alpha);
}

// Probe used by the greedy baseline: restricted fitting cost of a candidate
// user set on one subcarrier under the given phases and scaling.
inline FitProbe make_fit_probe(const std::vector<arma::cx_mat>& h, double alpha) {
    return [&h, alpha](unsigned subcarrier, const std::vector<unsigned>& users) {
        double cost = 0.0;
        for (unsigned p : users) {
            cost += std::norm(alpha * h[subcarrier](p, p) - 1.0);
            for (unsigned q : users)
                if (q != p) cost += std::norm(alpha * h[subcarrier](p, q));
        }
        return cost;
    };
}

// Builds the starting point: i.i.d. uniform phases, a random feasible
// assignment (or the fixed baseline pattern) and the closed-form alpha.
inline FitState initialize(const std::vector<arma::cx_mat>& g, const SimStack& stack,
                           const OptimizeOptions& opts, std::uint64_t seed) {
    const unsigned num_users = static_cast<unsigned>(g.front().n_rows);
    const unsigned nc = static_cast<unsigned>(g.size());
    FitState state;
    state.phases = PhaseConfig(stack.geometry.layers, stack.geometry.num_atoms());
    std::mt19937_64 rng(seed_stream(seed, 0x7068617365ULL));  // phase stream
    std::uniform_real_distribution<double> uang(0.0, 2.0 * kPi);
    for (arma::uword l = 0; l < state.phases.theta.n_rows; ++l)
        for (arma::uword m = 0; m < state.phases.theta.n_cols; ++m)
            state.phases.theta(l, m) = uang(rng);

    switch (opts.zstep) {
        case ZStepSolver::fixed_sdma: {
            state.assignment.z.ones(num_users, nc);
            state.assignment.per_user = nc;
            break;
        }
        case ZStepSolver::fixed_ofdma: {
            state.assignment.z.zeros(num_users, nc);
            // contiguous near-even blocks
            unsigned start = 0;
            for (unsigned k = 0; k < num_users; ++k) {
                const unsigned len = (nc + num_users - 1 - k) / num_users;
                for (unsigned i = start; i < start + len; ++i)
                    state.assignment.z(k, i) = 1;
                start += len;
            }
            state.assignment.per_user = nc / num_users;
            break;
        }
        case ZStepSolver::greedy: {
            const auto h0 = effective_channels(g, stack, state.phases);
            const double alpha0 = optimal_alpha(h0, arma::umat(num_users, nc,
                                                               arma::fill::ones));
            state.assignment = greedy_assignment(g, opts.per_user,
                                                 make_fit_probe(h0, alpha0),
                                                 opts.greedy_threshold);
            break;
        }
        default: {  // milp and random both start from a random assignment
            state.assignment = random_assignment(
                num_users, nc, opts.per_user, seed_stream(seed, 0x7a737465ULL));
            break;
        }
    }

    const auto h = effective_channels(g, stack, state.phases);
    state.alpha = optimal_alpha(h, state.assignment.z);
    state.gamma = gamma_direct(h, state.assignment.z, state.alpha);
    state.trace.push_back({0, "init", -1, state.gamma, 0.0, state.alpha});
    return state;
}

// One AO pass per iteration: phase step over all layers (ascending), alpha
// step, Z step (exact MILP warm-started at the incumbent), alpha step.
// Every sub-step is individually non-increasing, and the best state seen is
// memoized in case a loose inner solver wobbles.
inline FitState alternating_optimize(const std::vector<arma::cx_mat>& g,
                                     const SimStack& stack, FitState state,
                                     const OptimizeOptions& opts) {
    FitState best = state;
    std::vector<double> recent = {state.gamma};

    for (unsigned iter = 1; iter <= opts.ao_iterations; ++iter) {
        // phase step, layer by layer
        for (unsigned l = 1; l <= stack.geometry.layers; ++l) {
            const LayerQuadratic quad =
                layer_quadratic(g, stack, state.phases, state.assignment.z, l);
            const arma::cx_vec phi0 = state.phases.layer_phases(l - 1);
            double slack = 0.0;
            arma::cx_vec phi;
            if (opts.inner == InnerSolver::coordinate_descent) {
                phi = coordinate_descent_layer(quad, phi0, opts.cd_sweeps,
                                               state.alpha);
            } else {
                PccpDiagnostics diag;
                phi = pccp_layer(quad, phi0, state.alpha, opts.pccp, &diag);
                slack = diag.max_slack;
                if (quadratic_value(quad, state.alpha, phi) >
                    quadratic_value(quad, state.alpha, phi0))
                    phi = phi0;  // keep the layer if projection lost ground
            }
            state.phases.set_layer(l - 1, phi);
            state.gamma = fit_objective(g, stack, state);
            state.trace.push_back({iter, "phase", static_cast<int>(l), state.gamma,
                                   slack, state.alpha});
        }

        auto h = effective_channels(g, stack, state.phases);
        state.alpha = optimal_alpha(h, state.assignment.z);
        state.gamma = gamma_direct(h, state.assignment.z, state.alpha);
        state.trace.push_back({iter, "alpha", -1, state.gamma, 0.0, state.alpha});

        if (opts.zstep == ZStepSolver::milp) {
            const MilpInstance inst = build_milp(h, state.alpha, opts.per_user);
            state.assignment = solve_branch_and_bound(inst, &state.assignment.z);
            state.gamma = gamma_direct(h, state.assignment.z, state.alpha);
            state.trace.push_back({iter, "zstep", -1, state.gamma, 0.0, state.alpha});

            state.alpha = optimal_alpha(h, state.assignment.z);
            state.gamma = gamma_direct(h, state.assignment.z, state.alpha);
            state.trace.push_back({iter, "alpha", -1, state.gamma, 0.0, state.alpha});
        }

        if (state.gamma < best.gamma) best = state;

        recent.push_back(state.gamma);
        if (recent.size() > opts.plateau_window + 1)
            recent.erase(recent.begin());
        if (recent.size() == opts.plateau_window + 1) {
            const double anchor = recent.front();
            if (anchor - recent.back() <
                opts.plateau_rel_tol * std::max(anchor, 1e-300))
                break;
        }
    }
    best.trace = std::move(state.trace);
    return best;
}

// Multi-start wrapper keeping the best final objective.
inline FitState optimize_multistart(const std::vector<arma::cx_mat>& g,
                                    const SimStack& stack,
                                    const OptimizeOptions& opts, std::uint64_t seed,
                                    unsigned restarts = 1) {
    std::optional<FitState> best;
    for (unsigned r = 0; r < std::max(1u, restarts); ++r) {
        FitState st = initialize(g, stack, opts, seed_stream(seed, 0xabc0 + r));
        st = alternating_optimize(g, stack, std::move(st), opts);
        if (!best || st.gamma < best->gamma) best = std::move(st);
    }
    return *best;
}

}  // namespace simofdma
