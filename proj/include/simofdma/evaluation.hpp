#pragma once

#include <map>
#include <random>
#include <string>
#include <vector>

#include "simofdma/allocation.hpp"
#include "simofdma/common.hpp"
#include "simofdma/config.hpp"
#include "simofdma/phase_opt.hpp"

namespace simofdma {

struct MetricsRecord {
    double nmse = 0.0;
    std::vector<double> ber_per_user;
    double ber = 0.0;
    double sum_rate = 0.0;  // bits/s/Hz
    std::string scheme;
    std::uint64_t seed = 0;
    std::string config_hash;
};

// Gamma normalized by the number of active user-subcarrier pairs, so the
// trivial alpha = 0 stack scores exactly 1.
inline double nmse(double gamma, const arma::umat& z) {
    const double active = static_cast<double>(arma::accu(z));
    if (!(active > 0)) throw InfeasibleError("nmse: no active user-subcarrier pairs");
    return gamma / active;
}

// |alpha T_i H_i T_i| blocks, concatenated along subcarriers: K x (K N_c).
inline arma::mat heatmap(const std::vector<arma::cx_mat>& h, double alpha,
                         const arma::umat& z) {
    const unsigned k = static_cast<unsigned>(z.n_rows);
    const unsigned nc = static_cast<unsigned>(z.n_cols);
    arma::mat grid(k, k * nc, arma::fill::zeros);
    for (unsigned i = 0; i < nc; ++i)
        for (unsigned p = 0; p < k; ++p)
            for (unsigned q = 0; q < k; ++q)
                if (z(p, i) && z(q, i))
                    grid(p, i * k + q) = std::abs(alpha * h[i](p, q));
    return grid;
}

// Water-filling over parallel channels with per-entry effective noise:
// p_j = max(0, mu - n_j / g_j), sum p = total. Bisection locates the active
// set, then mu is recomputed in closed form so the power budget is met to
// machine precision.
inline std::vector<double> water_filling(const std::vector<double>& gains,
                                         double total_power_w,
                                         const std::vector<double>& noise_w) {
    const size_t n = gains.size();
    if (n == 0 || noise_w.size() != n)
        throw std::invalid_argument("water_filling: bad input sizes");
    bool any = false;
    for (double g : gains) any = any || g > 0;
    if (!any) throw InfeasibleError("water_filling: all-zero gains");

    std::vector<double> floor(n, std::numeric_limits<double>::infinity());
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (size_t j = 0; j < n; ++j) {
        if (gains[j] > 0) {
            floor[j] = noise_w[j] / gains[j];
            lo = std::min(lo, floor[j]);
        }
    }
    hi = lo + total_power_w;
    auto allocated = [&](double mu) {
        double s = 0.0;
        for (size_t j = 0; j < n; ++j)
            if (gains[j] > 0) s += std::max(0.0, mu - floor[j]);
        return s;
    };
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (allocated(mid) < total_power_w ? lo : hi) = mid;
        if (hi - lo <= 1e-12 * std::max(1.0, std::abs(hi))) break;
    }
    const double mu_guess = 0.5 * (lo + hi);

    // closed-form polish over the bisection's active set
    double floor_sum = 0.0;
    unsigned active = 0;
    for (size_t j = 0; j < n; ++j)
        if (gains[j] > 0 && mu_guess > floor[j]) {
            floor_sum += floor[j];
            ++active;
        }
    if (active == 0) {  // degenerate: put everything on the best channel
        size_t best = 0;
        for (size_t j = 1; j < n; ++j)
            if (floor[j] < floor[best]) best = j;
        std::vector<double> p(n, 0.0);
        p[best] = total_power_w;
        return p;
    }
    const double mu = (total_power_w + floor_sum) / active;
    std::vector<double> p(n, 0.0);
    for (size_t j = 0; j < n; ++j)
        if (gains[j] > 0 && mu_guess > floor[j]) p[j] = mu - floor[j];
    return p;
}

inline std::vector<double> water_filling(const std::vector<double>& gains,
                                         double total_power_w, double noise_w) {
    return water_filling(gains, total_power_w,
                         std::vector<double>(gains.size(), noise_w));
}

// Active (user, subcarrier) pairs in a fixed canonical order: subcarrier
// major, user minor.
struct ActivePairs {
    std::vector<std::pair<unsigned, unsigned>> list;  // (user, subcarrier)

    explicit ActivePairs(const arma::umat& z) {
        for (arma::uword i = 0; i < z.n_cols; ++i)
            for (arma::uword k = 0; k < z.n_rows; ++k)
                if (z(k, i)) list.emplace_back(static_cast<unsigned>(k),
                                               static_cast<unsigned>(i));
    }
};

// Per-pair power allocation as a K x N_c matrix (zeros off the assignment).
// The iterative variant folds residual inter-user interference from the
// previous allocation into the effective noise and repeats.
inline arma::mat water_filled_powers(const std::vector<arma::cx_mat>& h, double alpha,
                                     const arma::umat& z, double total_power_w,
                                     double noise_w, unsigned outer_iterations = 20) {
    const ActivePairs pairs(z);
    const size_t n = pairs.list.size();
    std::vector<double> gains(n), noise(n, noise_w), p(n, 0.0);
    for (size_t j = 0; j < n; ++j) {
        const auto [k, i] = pairs.list[j];
        gains[j] = std::norm(alpha * h[i](k, k));
    }
    for (unsigned it = 0; it < std::max(1u, outer_iterations); ++it) {
        const std::vector<double> prev = p;
        p = water_filling(gains, total_power_w, noise);
        double delta = 0.0;
        for (size_t j = 0; j < n; ++j) delta = std::max(delta, std::abs(p[j] - prev[j]));
        // interference from this allocation feeds the next pass
        for (size_t j = 0; j < n; ++j) {
            const auto [k, i] = pairs.list[j];
            double interference = 0.0;
            for (size_t j2 = 0; j2 < n; ++j2) {
                const auto [q, i2] = pairs.list[j2];
                if (i2 == i && q != k)
                    interference += p[j2] * std::norm(alpha * h[i](k, q));
            }
            noise[j] = noise_w + interference;
        }
        if (delta <= 1e-10 * std::max(total_power_w, 1e-300)) break;
    }
    arma::mat powers(z.n_rows, z.n_cols, arma::fill::zeros);
    for (size_t j = 0; j < n; ++j) {
        const auto [k, i] = pairs.list[j];
        powers(k, i) = p[j];
    }
    return powers;
}

// (1/N_c) sum_i sum_{k in u_i} log2(1 + p a / (I + sigma^2)), residual
// fitting error counted as interference.
inline double sum_rate(const std::vector<arma::cx_mat>& h, double alpha,
                       const arma::umat& z, const arma::mat& powers,
                       double noise_w) {
    double rate = 0.0;
    for (arma::uword i = 0; i < z.n_cols; ++i) {
        for (arma::uword k = 0; k < z.n_rows; ++k) {
            if (!z(k, i)) continue;
            const double signal = powers(k, i) * std::norm(alpha * h[i](k, k));
            double interference = 0.0;
            for (arma::uword q = 0; q < z.n_rows; ++q)
                if (q != k && z(q, i))
                    interference += powers(q, i) * std::norm(alpha * h[i](k, q));
            rate += std::log2(1.0 + signal / (interference + noise_w));
        }
    }
    return rate / static_cast<double>(z.n_cols);
}

struct BerResult {
    std::vector<double> per_user;
    double aggregate = 0.0;
    std::uint64_t bits = 0;
    std::uint64_t errors = 0;
};

// Monte-Carlo BPSK link: per trial, +/-1 symbols on the active pairs,
// y_i = alpha H_i x_i + n_i with circular complex noise of variance
// noise_w, sign decision on Re(y_k). Trials draw from per-trial seed
// streams so they can be partitioned across workers.
inline BerResult ber_monte_carlo(const std::vector<arma::cx_mat>& h, double alpha,
                                 const arma::umat& z, const arma::mat& powers,
                                 double noise_w, unsigned trials,
                                 std::uint64_t seed) {
    if (trials < 1) throw std::invalid_argument("ber_monte_carlo: trials must be >= 1");
    const unsigned num_users = static_cast<unsigned>(z.n_rows);
    const unsigned nc = static_cast<unsigned>(z.n_cols);
    const double noise_sigma = std::sqrt(0.5 * noise_w);

    std::vector<std::vector<unsigned>> active(nc);
    for (unsigned i = 0; i < nc; ++i)
        for (unsigned k = 0; k < num_users; ++k)
            if (z(k, i)) active[i].push_back(k);

    std::vector<std::uint64_t> user_bits(num_users, 0), user_errs(num_users, 0);
    std::vector<double> s(num_users);
    for (unsigned t = 0; t < trials; ++t) {
        std::mt19937_64 rng(seed_stream(seed, t));
        std::uniform_int_distribution<int> bit(0, 1);
        std::normal_distribution<double> noise(0.0, noise_sigma);
        for (unsigned i = 0; i < nc; ++i) {
            if (active[i].empty()) continue;
            for (unsigned k : active[i]) s[k] = bit(rng) ? 1.0 : -1.0;
            for (unsigned k : active[i]) {
                cx y(0.0);
                for (unsigned q : active[i])
                    y += alpha * h[i](k, q) * std::sqrt(powers(q, i)) * s[q];
                y += cx(noise(rng), noise(rng));
                const double decided = std::real(y) >= 0.0 ? 1.0 : -1.0;
                ++user_bits[k];
                if (decided != s[k]) ++user_errs[k];
            }
        }
    }
    BerResult out;
    out.per_user.resize(num_users, 0.0);
    for (unsigned k = 0; k < num_users; ++k) {
        out.bits += user_bits[k];
        out.errors += user_errs[k];
        out.per_user[k] = user_bits[k]
                              ? static_cast<double>(user_errs[k]) / user_bits[k]
                              : 0.0;
    }
    out.aggregate = out.bits ? static_cast<double>(out.errors) / out.bits : 0.0;
    return out;
}

// Pure SDMA (all ones) and pure OFDMA (contiguous blocks) assignment
// patterns; OFDMA falls back to a near-even split when K does not divide
// N_c.
inline Assignment baseline_assignment(const std::string& mode, unsigned num_users,
                                      unsigned num_subcarriers) {
    Assignment out;
    if (mode == "sdma") {
        out.z.ones(num_users, num_subcarriers);
        out.per_user = num_subcarriers;
        return out;
    }
    if (mode == "ofdma") {
        out.z.zeros(num_users, num_subcarriers);
        unsigned start = 0;
        for (unsigned k = 0; k < num_users; ++k) {
            const unsigned len = (num_subcarriers + num_users - 1 - k) / num_users;
            for (unsigned i = start; i < start + len; ++i) out.z(k, i) = 1;
            start += len;
        }
        out.per_user = num_subcarriers / num_users;
        return out;
    }
    throw ConfigError("baseline_assignment: unknown mode " + mode);
}

struct DigitalZf {
    std::vector<arma::cx_mat> h;  // diagonal effective channels
    arma::umat z;                 // all ones
    double alpha = 1.0;
};

// Per-subcarrier digital zero forcing with unit-norm precoder columns:
// H_i = diag(1 / ||p_k||) exactly, zero cross terms.
inline DigitalZf digital_zf_baseline(const std::vector<arma::cx_mat>& g) {
    DigitalZf out;
    const unsigned k = static_cast<unsigned>(g.front().n_rows);
    out.z.ones(k, g.size());
    for (const auto& gi : g) {
        arma::cx_mat gram = gi * gi.t();
        arma::cx_mat inv;
        if (!arma::inv(inv, gram))
            throw InfeasibleError("digital_zf_baseline: rank-deficient channel");
        arma::cx_mat p = gi.t() * inv;  // M x K, G p_k = e_k
        arma::cx_mat hi(k, k, arma::fill::zeros);
        for (unsigned u = 0; u < k; ++u) {
            const double norm = arma::norm(p.col(u));
            if (!(norm > 0))
                throw InfeasibleError("digital_zf_baseline: zero precoder column");
            hi(u, u) = 1.0 / norm;
        }
        out.h.push_back(std::move(hi));
    }
    return out;
}

}  // namespace simofdma
