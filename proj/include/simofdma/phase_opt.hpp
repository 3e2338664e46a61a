#pragma once

#include <vector>

#include "simofdma/allocation.hpp"
#include "simofdma/common.hpp"
#include "simofdma/sim_stack.hpp"

namespace simofdma {

// The P1 objective evaluated directly from the effective channels:
// sum_i sum_{p,q active} |alpha H_i(p,q) - [p==q]|^2.
inline double gamma_direct(const std::vector<arma::cx_mat>& h, const arma::umat& z,
                           double alpha) {
    double total = 0.0;
    for (arma::uword i = 0; i < z.n_cols; ++i) {
        for (arma::uword p = 0; p < z.n_rows; ++p) {
            if (!z(p, i)) continue;
            for (arma::uword q = 0; q < z.n_rows; ++q) {
                if (!z(q, i)) continue;
                const cx target = p == q ? cx(1.0) : cx(0.0);
                total += std::norm(alpha * h[i](p, q) - target);
            }
        }
    }
    return total;
}

struct RestrictedPair {
    arma::cx_mat g;               // R x M, rows of G_i for the active users
    arma::cx_mat p;               // M x R, columns of P_i for the active users
    std::vector<unsigned> users;  // strictly increasing
};

inline RestrictedPair restrict_pair(const arma::cx_mat& g, const arma::cx_mat& p,
                                    const std::vector<unsigned>& users) {
    if (users.empty())
        throw InfeasibleError("restrict_pair: empty user set violates coverage");
    arma::uvec idx(users.size());
    for (size_t r = 0; r < users.size(); ++r) {
        if (users[r] >= g.n_rows)
            throw std::out_of_range("restrict_pair: user index out of range");
        idx[r] = users[r];
    }
    return {g.rows(idx), p.cols(idx), users};
}

// Gamma as a function of one layer's phases:
//   Gamma(phi) = alpha^2 phi^H A phi - 2 alpha Re(b^H phi) + constant,
// with A Hermitian PSD. Built per subcarrier from the cascade split around
// the layer via Tr(Phi^H X Phi Y) = phi^H (X .* Y^T) phi.
struct LayerQuadratic {
    arma::cx_mat a;
    arma::cx_vec b;
    double constant = 0.0;
};

inline double quadratic_value(const LayerQuadratic& q, double alpha,
                              const arma::cx_vec& phi) {
    const double quad = std::real(arma::as_scalar(phi.t() * q.a * phi));
    const double lin = std::real(arma::cdot(q.b, phi));
    return alpha * alpha * quad - 2.0 * alpha * lin + q.constant;
}

inline LayerQuadratic layer_quadratic(const std::vector<arma::cx_mat>& g,
                                      const SimStack& stack,
                                      const PhaseConfig& phases,
                                      const arma::umat& z, unsigned layer) {
    const unsigned m = stack.geometry.num_atoms();
    LayerQuadratic q;
    q.a.zeros(m, m);
    q.b.zeros(m);
    for (unsigned i = 0; i < stack.num_subcarriers(); ++i) {
        std::vector<unsigned> users;
        for (arma::uword k = 0; k < z.n_rows; ++k)
            if (z(k, i)) users.push_back(static_cast<unsigned>(k));
        if (users.empty())
            throw InfeasibleError("layer_quadratic: uncovered subcarrier " +
                                  std::to_string(i));
        auto [left, right] = split_cascade(stack, phases, i, layer);
        const auto pair = restrict_pair(g[i], right, users);
        const arma::cx_mat x = pair.g * left;          // R x M
        const arma::cx_mat rr = pair.p * pair.p.t();   // M x M, P_R P_R^H
        q.a += (x.t() * x) % rr.st();                  // X^H X .* (P_R P_R^H)^T
        for (unsigned mm = 0; mm < m; ++mm) {
            cx diag(0.0);
            for (unsigned r = 0; r < users.size(); ++r)
                diag += pair.p(mm, r) * x(r, mm);
            q.b[mm] += std::conj(diag);
        }
        q.constant += static_cast<double>(users.size());
    }
    return q;
}

// Exact per-atom unit-modulus minimizer: with the other atoms fixed, the
// phi_m-dependent part of Gamma is 2 Re(conj(phi_m) c_m), minimized by
// phi_m = -c_m / |c_m|. Never increases the objective.
inline arma::cx_vec coordinate_descent_layer(const LayerQuadratic& q,
                                             arma::cx_vec phi, unsigned sweeps,
                                             double alpha) {
    const double a2 = alpha * alpha;
    arma::cx_vec aphi = q.a * phi;
    for (unsigned sweep = 0; sweep < sweeps; ++sweep) {
        for (arma::uword m = 0; m < phi.n_elem; ++m) {
            const cx cm = a2 * (aphi[m] - q.a(m, m) * phi[m]) - alpha * q.b[m];
            const double mag = std::abs(cm);
            if (mag < 1e-14) continue;
            const cx updated = -cm / mag;
            const cx delta = updated - phi[m];
            if (delta != cx(0.0)) {
                aphi += q.a.col(m) * delta;
                phi[m] = updated;
            }
        }
    }
    return phi;
}

struct PccpOptions {
    double lambda0 = 1e-3;
    double growth = 2.0;
    double lambda_max = 1e4;
    double tol = 1e-6;
    unsigned max_outer = 200;
    unsigned max_inner = 5000;
};

struct PccpDiagnostics {
    unsigned outer_iterations = 0;
    double max_slack = 0.0;
    double final_lambda = 0.0;
};

namespace detail {

// Penalized inner objective with the slacks eliminated at their optima:
//   F(phi) = a2 phi^H A phi - 2 alpha Re(b^H phi)
//          + lambda sum_m max(0, |phi_m|^2 - 1)
//          + lambda sum_m max(0, 1 + |phi0_m|^2 - 2 Re(conj(phi_m) phi0_m)).
inline double pccp_inner_value(const LayerQuadratic& q, double alpha,
                               double lambda, const arma::cx_vec& phi0,
                               const arma::cx_vec& phi) {
    double f = quadratic_value(q, alpha, phi) - q.constant;
    for (arma::uword m = 0; m < phi.n_elem; ++m) {
        f += lambda * std::max(0.0, std::norm(phi[m]) - 1.0);
        f += lambda * std::max(0.0, 1.0 + std::norm(phi0[m]) -
                                        2.0 * std::real(std::conj(phi[m]) * phi0[m]));
    }
    return f;
}

inline arma::cx_vec pccp_inner_gradient(const LayerQuadratic& q, double alpha,
                                        double lambda, const arma::cx_vec& phi0,
                                        const arma::cx_vec& phi) {
    arma::cx_vec grad = 2.0 * (alpha * alpha * (q.a * phi) - alpha * q.b);
    for (arma::uword m = 0; m < phi.n_elem; ++m) {
        if (std::norm(phi[m]) > 1.0) grad[m] += 2.0 * lambda * phi[m];
        if (1.0 + std::norm(phi0[m]) - 2.0 * std::real(std::conj(phi[m]) * phi0[m]) >
            0.0)
            grad[m] -= 2.0 * lambda * phi0[m];
    }
    return grad;
}

// Backtracking gradient descent on the convex inner problem.
inline arma::cx_vec pccp_inner_solve(const LayerQuadratic& q, double alpha,
                                     double lambda, const arma::cx_vec& phi0,
                                     arma::cx_vec phi, unsigned max_inner) {
    double f = pccp_inner_value(q, alpha, lambda, phi0, phi);
    double step = 1.0 / (2.0 * (alpha * alpha * arma::norm(q.a, "fro") +
                                2.0 * lambda) + 1e-30);
    for (unsigned it = 0; it < max_inner; ++it) {
        const arma::cx_vec grad = pccp_inner_gradient(q, alpha, lambda, phi0, phi);
        const double gnorm2 = std::real(arma::cdot(grad, grad));
        if (gnorm2 < 1e-24) break;
        double t = step;
        bool moved = false;
        for (unsigned ls = 0; ls < 60; ++ls) {
            const arma::cx_vec trial = phi - t * grad;
            const double ft = pccp_inner_value(q, alpha, lambda, phi0, trial);
            if (ft <= f - 1e-4 * t * gnorm2) {
                phi = trial;
                const double drop = f - ft;
                f = ft;
                step = t * 2.0;
                moved = true;
                if (drop < 1e-15 * (std::abs(f) + 1e-30)) return phi;
                break;
            }
            t *= 0.5;
        }
        if (!moved) break;  // stationary up to line-search resolution
    }
    return phi;
}

}  // namespace detail

// Penalty convex-concave procedure for one layer. Alternates convex solves
// with the unit-modulus constraint linearized around the previous iterate,
// growing the penalty until the slacks vanish; the result is projected onto
// unit modulus.
inline arma::cx_vec pccp_layer(const LayerQuadratic& q, const arma::cx_vec& phi_init,
                               double alpha, const PccpOptions& opts = {},
                               PccpDiagnostics* diag = nullptr) {
    arma::cx_vec phi = phi_init;
    arma::cx_vec phi0 = phi_init;
    double lambda = opts.lambda0;
    double prev_gamma = quadratic_value(q, alpha, phi);
    double max_slack = std::numeric_limits<double>::infinity();
    unsigned outer = 0;
    for (; outer < opts.max_outer; ++outer) {
        phi = detail::pccp_inner_solve(q, alpha, lambda, phi0, phi, opts.max_inner);
        max_slack = 0.0;
        for (arma::uword m = 0; m < phi.n_elem; ++m) {
            max_slack = std::max(max_slack, std::norm(phi[m]) - 1.0);
            max_slack = std::max(
                max_slack, 1.0 + std::norm(phi0[m]) -
                               2.0 * std::real(std::conj(phi[m]) * phi0[m]));
        }
        phi0 = phi;
        const double gamma = quadratic_value(q, alpha, phi);
        const bool settled = max_slack < opts.tol &&
                             std::abs(prev_gamma - gamma) < opts.tol;
        prev_gamma = gamma;
        lambda = std::min(lambda * opts.growth, opts.lambda_max);
        if (settled) break;
    }
    if (diag) {
        diag->outer_iterations = outer + 1;
        diag->max_slack = std::max(max_slack, 0.0);
        diag->final_lambda = lambda;
    }
    if (!(max_slack < opts.tol))
        throw SolverError("pccp_layer: slacks did not converge (max slack " +
                          std::to_string(max_slack) + ", lambda " +
                          std::to_string(lambda) + ")");
    for (arma::uword m = 0; m < phi.n_elem; ++m)
        phi[m] = std::abs(phi[m]) > 0 ? phi[m] / std::abs(phi[m]) : cx(1.0);
    return phi;
}

// Closed-form scaling factor. The restricted form masks G_i P_i by the
// selection matrices so the alpha step minimizes the actual objective; the
// unrestricted form follows the formula as printed.
inline double optimal_alpha(const std::vector<arma::cx_mat>& h, const arma::umat& z,
                            bool restricted = true) {
    double num = 0.0, den = 0.0;
    for (arma::uword i = 0; i < h.size(); ++i) {
        for (arma::uword p = 0; p < h[i].n_rows; ++p) {
            if (restricted && !z(p, i)) continue;
            num += std::real(h[i](p, p));
            for (arma::uword q = 0; q < h[i].n_cols; ++q) {
                if (restricted && !z(q, i)) continue;
                den += std::norm(h[i](p, q));
            }
        }
    }
    if (!(den > 0.0))
        throw InfeasibleError("optimal_alpha: degenerate (all-zero) effective channel");
    return num / den;
}

}  // namespace simofdma
