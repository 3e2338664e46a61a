#pragma once

#include <atomic>
#include <cmath>
#include <functional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "simofdma/channel.hpp"
#include "simofdma/common.hpp"
#include "simofdma/config.hpp"
#include "simofdma/evaluation.hpp"
#include "simofdma/io.hpp"
#include "simofdma/joint.hpp"

namespace simofdma {

// Runs independent tasks on a small worker pool. Results must be written to
// pre-allocated slots so the output never depends on scheduling.
inline void parallel_run(std::vector<std::function<void()>>& tasks,
                         unsigned threads) {
    if (threads <= 1 || tasks.size() <= 1) {
        for (auto& t : tasks) t();
        return;
    }
    std::atomic<size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const size_t i = next.fetch_add(1);
            if (i >= tasks.size()) return;
            try {
                tasks[i]();
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    const unsigned n = std::min<unsigned>(threads, static_cast<unsigned>(tasks.size()));
    pool.reserve(n);
    for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

inline std::vector<unsigned> kc_sweep_values(const SystemConfig& cfg) {
    const unsigned lo = cfg.kc_sweep_min
                            ? cfg.kc_sweep_min
                            : (cfg.n_subcarriers + cfg.num_users - 1) / cfg.num_users;
    const unsigned hi = cfg.kc_sweep_max ? cfg.kc_sweep_max : cfg.n_subcarriers;
    std::vector<unsigned> values;
    for (unsigned kc = lo; kc <= hi; kc += std::max(1u, cfg.kc_sweep_step))
        values.push_back(kc);
    return values;
}

inline std::vector<double> ber_power_values(const SystemConfig& cfg) {
    std::vector<double> powers;
    for (double p = cfg.ber_power_min_dbm; p <= cfg.ber_power_max_dbm + 1e-9;
         p += cfg.ber_power_step_db)
        powers.push_back(p);
    return powers;
}

// Per-bandwidth handicap of the pure-OFDMA baseline: it carries K_c/(N_c/K)
// times fewer bits per OFDM symbol than the proposed allocation, so its
// transmit power is scaled down by the same ratio for a per-bit-fair BER
// comparison.
inline double ofdma_snr_offset_db(const SystemConfig& cfg) {
    const double ofdma_share = static_cast<double>(cfg.n_subcarriers) / cfg.num_users;
    return 10.0 * std::log10(cfg.subcarriers_per_user / ofdma_share);
}

inline bool kc_feasible(const SystemConfig& cfg, unsigned kc) {
    return kc >= 1 && kc <= cfg.n_subcarriers &&
           static_cast<std::uint64_t>(cfg.num_users) * kc >= cfg.n_subcarriers;
}

namespace detail {

inline FitState run_scheme(const SystemConfig& cfg,
                           const std::vector<arma::cx_mat>& g,
                           const SimStack& stack, ZStepSolver zstep, unsigned kc,
                           std::uint64_t run_seed) {
    OptimizeOptions opts = OptimizeOptions::from_config(cfg);
    opts.zstep = zstep;
    opts.per_user = kc;
    FitState st = initialize(g, stack, opts, seed_stream(run_seed, 0x696e6974ULL));
    return alternating_optimize(g, stack, std::move(st), opts);
}

inline void append_mean_std(std::vector<ResultRow>& rows, const std::string& scheme,
                            const std::string& key, double value,
                            const std::string& metric,
                            const std::vector<double>& samples) {
    double mean = 0.0;
    for (double s : samples) mean += s;
    mean /= samples.size();
    double var = 0.0;
    for (double s : samples) var += (s - mean) * (s - mean);
    const double std_dev = samples.size() > 1
                               ? std::sqrt(var / (samples.size() - 1))
                               : 0.0;
    rows.push_back({scheme, key, value, -1, metric + "_mean", mean});
    rows.push_back({scheme, key, value, -1, metric + "_std", std_dev});
}

}  // namespace detail

// Fitting NMSE of the joint, greedy and random assignment schemes across a
// K_c sweep and the Monte-Carlo seed budget.
inline std::vector<ResultRow> run_nmse_sweep(const SystemConfig& cfg,
                                             const std::vector<std::string>& schemes,
                                             unsigned threads = 1) {
    cfg.validate();
    const auto freqs = subcarrier_frequencies(cfg.f0_hz, cfg.bandwidth_hz,
                                              cfg.n_subcarriers);
    const SimStack stack = build_stack(cfg.sim_geometry(), freqs);
    const auto kcs = kc_sweep_values(cfg);

    struct Cell {
        std::string scheme;
        unsigned kc = 0;
        std::uint64_t seed = 0;
        double nmse_value = 0.0;
    };
    std::vector<ResultRow> rows;
    std::vector<Cell> cells;
    for (unsigned kc : kcs) {
        if (!kc_feasible(cfg, kc)) {
            rows.push_back({"all", "kc", static_cast<double>(kc), -1,
                            "infeasible_skipped", 1.0});
            continue;
        }
        for (const auto& scheme : schemes)
            for (unsigned run = 0; run < cfg.mc_runs; ++run)
                cells.push_back({scheme, kc, cfg.seed + run, 0.0});
    }

    std::vector<std::function<void()>> tasks;
    tasks.reserve(cells.size());
    for (auto& cell : cells)
        tasks.push_back([&cfg, &stack, &cell] {
            const auto channel =
                make_channel(cfg, seed_stream(cell.seed, 0x6368616eULL));
            ZStepSolver zstep = ZStepSolver::milp;
            if (cell.scheme == "greedy") zstep = ZStepSolver::greedy;
            if (cell.scheme == "random") zstep = ZStepSolver::random;
            const FitState st = detail::run_scheme(cfg, channel.g, stack, zstep,
                                                   cell.kc, cell.seed);
            cell.nmse_value = nmse(st.gamma, st.assignment.z);
        });
    parallel_run(tasks, threads);

    for (unsigned kc : kcs) {
        if (!kc_feasible(cfg, kc)) continue;
        for (const auto& scheme : schemes) {
            std::vector<double> samples;
            for (const auto& cell : cells)
                if (cell.kc == kc && cell.scheme == scheme) {
                    rows.push_back({scheme, "kc", static_cast<double>(kc),
                                    static_cast<long long>(cell.seed), "nmse",
                                    cell.nmse_value});
                    samples.push_back(cell.nmse_value);
                }
            detail::append_mean_std(rows, scheme, "kc", kc, "nmse", samples);
        }
    }
    return rows;
}

// BER versus transmit power for the proposed scheme and the three
// benchmarks. Fits are reused across the power loop; noise streams are
// shared across schemes and powers (common random numbers).
inline std::vector<ResultRow> run_ber_sweep(const SystemConfig& cfg,
                                            const std::vector<std::string>& schemes,
                                            unsigned threads = 1) {
    cfg.validate();
    if (!kc_feasible(cfg, cfg.subcarriers_per_user))
        throw InfeasibleError("ber sweep: configured K_c is infeasible");
    const auto freqs = subcarrier_frequencies(cfg.f0_hz, cfg.bandwidth_hz,
                                              cfg.n_subcarriers);
    const SimStack stack = build_stack(cfg.sim_geometry(), freqs);
    const auto powers = ber_power_values(cfg);
    const double noise_w = cfg.budget().subcarrier_noise_w();
    const double offset_db = ofdma_snr_offset_db(cfg);

    struct Cell {
        std::string scheme;
        std::uint64_t seed = 0;
        std::vector<double> ber;  // one per power point
    };
    std::vector<Cell> cells;
    for (const auto& scheme : schemes)
        for (unsigned run = 0; run < cfg.mc_runs; ++run)
            cells.push_back({scheme, cfg.seed + run, {}});

    std::vector<std::function<void()>> tasks;
    for (auto& cell : cells)
        tasks.push_back([&cfg, &stack, &powers, noise_w, offset_db, &cell] {
            const auto channel =
                make_channel(cfg, seed_stream(cell.seed, 0x6368616eULL));
            std::vector<arma::cx_mat> h;
            arma::umat z;
            double alpha = 1.0;
            double scheme_offset_db = 0.0;
            if (cell.scheme == "digital-zf") {
                const DigitalZf zf = digital_zf_baseline(channel.g);
                h = zf.h;
                z = zf.z;
            } else {
                ZStepSolver zstep = ZStepSolver::milp;
                if (cell.scheme == "sim-sdma") zstep = ZStepSolver::fixed_sdma;
                if (cell.scheme == "sim-ofdma") zstep = ZStepSolver::fixed_ofdma;
                const FitState st = detail::run_scheme(
                    cfg, channel.g, stack, zstep, cfg.subcarriers_per_user,
                    cell.seed);
                h = effective_channels(channel.g, stack, st.phases);
                z = st.assignment.z;
                alpha = st.alpha;
                if (cell.scheme == "sim-ofdma") scheme_offset_db = offset_db;
            }
            const std::uint64_t ber_seed = seed_stream(cell.seed, 0x626572ULL);
            for (double p_dbm : powers) {
                const double p_w = dbm_to_watts(p_dbm - scheme_offset_db);
                const arma::mat alloc =
                    water_filled_powers(h, alpha, z, p_w, noise_w);
                const BerResult ber = ber_monte_carlo(h, alpha, z, alloc, noise_w,
                                                      cfg.ber_trials, ber_seed);
                cell.ber.push_back(ber.aggregate);
            }
        });
    parallel_run(tasks, threads);

    std::vector<ResultRow> rows;
    for (const auto& scheme : schemes)
        for (size_t pi = 0; pi < powers.size(); ++pi) {
            std::vector<double> samples;
            for (const auto& cell : cells)
                if (cell.scheme == scheme) {
                    rows.push_back({scheme, "tx_power_dbm", powers[pi],
                                    static_cast<long long>(cell.seed), "ber",
                                    cell.ber[pi]});
                    samples.push_back(cell.ber[pi]);
                }
            detail::append_mean_std(rows, scheme, "tx_power_dbm", powers[pi], "ber",
                                    samples);
        }
    return rows;
}

// Sum rate versus K_c at the configured power, with the digital-ZF
// reference repeated per K_c (it does not depend on the allocation).
inline std::vector<ResultRow> run_sumrate_sweep(const SystemConfig& cfg,
                                                unsigned threads = 1) {
    cfg.validate();
    const auto freqs = subcarrier_frequencies(cfg.f0_hz, cfg.bandwidth_hz,
                                              cfg.n_subcarriers);
    const SimStack stack = build_stack(cfg.sim_geometry(), freqs);
    const auto kcs = kc_sweep_values(cfg);
    const double noise_w = cfg.budget().subcarrier_noise_w();
    const double power_w = cfg.budget().tx_power_w();

    struct Cell {
        unsigned kc = 0;
        std::uint64_t seed = 0;
        double proposed = 0.0;
    };
    std::vector<ResultRow> rows;
    std::vector<Cell> cells;
    for (unsigned kc : kcs) {
        if (!kc_feasible(cfg, kc)) {
            rows.push_back({"all", "kc", static_cast<double>(kc), -1,
                            "infeasible_skipped", 1.0});
            continue;
        }
        for (unsigned run = 0; run < cfg.mc_runs; ++run)
            cells.push_back({kc, cfg.seed + run, 0.0});
    }
    std::vector<double> zf_rate(cfg.mc_runs, 0.0);

    std::vector<std::function<void()>> tasks;
    for (auto& cell : cells)
        tasks.push_back([&cfg, &stack, noise_w, power_w, &cell] {
            const auto channel =
                make_channel(cfg, seed_stream(cell.seed, 0x6368616eULL));
            const FitState st = detail::run_scheme(cfg, channel.g, stack,
                                                   ZStepSolver::milp, cell.kc,
                                                   cell.seed);
            const auto h = effective_channels(channel.g, stack, st.phases);
            const arma::mat alloc = water_filled_powers(h, st.alpha,
                                                        st.assignment.z, power_w,
                                                        noise_w);
            cell.proposed = sum_rate(h, st.alpha, st.assignment.z, alloc, noise_w);
        });
    for (unsigned run = 0; run < cfg.mc_runs; ++run)
        tasks.push_back([&cfg, noise_w, power_w, run, &zf_rate] {
            const std::uint64_t seed = cfg.seed + run;
            const auto channel = make_channel(cfg, seed_stream(seed, 0x6368616eULL));
            const DigitalZf zf = digital_zf_baseline(channel.g);
            const arma::mat alloc =
                water_filled_powers(zf.h, zf.alpha, zf.z, power_w, noise_w);
            zf_rate[run] = sum_rate(zf.h, zf.alpha, zf.z, alloc, noise_w);
        });
    parallel_run(tasks, threads);

    for (unsigned kc : kcs) {
        if (!kc_feasible(cfg, kc)) continue;
        std::vector<double> samples;
        for (const auto& cell : cells)
            if (cell.kc == kc) {
                rows.push_back({"proposed", "kc", static_cast<double>(kc),
                                static_cast<long long>(cell.seed), "sum_rate",
                                cell.proposed});
                samples.push_back(cell.proposed);
            }
        detail::append_mean_std(rows, "proposed", "kc", kc, "sum_rate", samples);
        std::vector<double> zf_samples;
        for (unsigned run = 0; run < cfg.mc_runs; ++run) {
            rows.push_back({"digital-zf", "kc", static_cast<double>(kc),
                            static_cast<long long>(cfg.seed + run), "sum_rate",
                            zf_rate[run]});
            zf_samples.push_back(zf_rate[run]);
        }
        detail::append_mean_std(rows, "digital-zf", "kc", kc, "sum_rate",
                                zf_samples);
    }
    return rows;
}

struct SingleRunOutput {
    FitState state;
    MetricsRecord metrics;
    arma::mat heatmap_grid;
    std::vector<ResultRow> rows;
};

// One full optimization with trace, heatmap data and link metrics.
inline SingleRunOutput run_single(const SystemConfig& cfg) {
    cfg.validate();
    if (!kc_feasible(cfg, cfg.subcarriers_per_user))
        throw InfeasibleError("single run: configured K_c is infeasible");
    const auto freqs = subcarrier_frequencies(cfg.f0_hz, cfg.bandwidth_hz,
                                              cfg.n_subcarriers);
    const SimStack stack = build_stack(cfg.sim_geometry(), freqs);
    const auto channel = make_channel(cfg, seed_stream(cfg.seed, 0x6368616eULL));

    OptimizeOptions opts = OptimizeOptions::from_config(cfg);
    SingleRunOutput out;
    FitState st = initialize(channel.g, stack, opts,
                             seed_stream(cfg.seed, 0x696e6974ULL));
    if (cfg.restarts > 1)
        st = optimize_multistart(channel.g, stack, opts, cfg.seed, cfg.restarts);
    else
        st = alternating_optimize(channel.g, stack, std::move(st), opts);

    const auto h = effective_channels(channel.g, stack, st.phases);
    const double noise_w = cfg.budget().subcarrier_noise_w();
    const arma::mat alloc = water_filled_powers(h, st.alpha, st.assignment.z,
                                                cfg.budget().tx_power_w(), noise_w);
    const BerResult ber =
        ber_monte_carlo(h, st.alpha, st.assignment.z, alloc, noise_w,
                        cfg.ber_trials, seed_stream(cfg.seed, 0x626572ULL));

    out.metrics.nmse = nmse(st.gamma, st.assignment.z);
    out.metrics.ber = ber.aggregate;
    out.metrics.ber_per_user = ber.per_user;
    out.metrics.sum_rate = sum_rate(h, st.alpha, st.assignment.z, alloc, noise_w);
    out.metrics.scheme = cfg.zstep_solver;
    out.metrics.seed = cfg.seed;
    out.metrics.config_hash = config_hash(cfg);
    out.heatmap_grid = heatmap(h, st.alpha, st.assignment.z);

    const long long seed = static_cast<long long>(cfg.seed);
    out.rows.push_back({cfg.zstep_solver, "single", 0.0, seed, "nmse",
                        out.metrics.nmse});
    out.rows.push_back({cfg.zstep_solver, "single", 0.0, seed, "gamma", st.gamma});
    out.rows.push_back({cfg.zstep_solver, "single", 0.0, seed, "alpha", st.alpha});
    out.rows.push_back({cfg.zstep_solver, "single", 0.0, seed, "ber",
                        out.metrics.ber});
    for (size_t k = 0; k < ber.per_user.size(); ++k)
        out.rows.push_back({cfg.zstep_solver, "single", 0.0, seed,
                            "ber_user" + std::to_string(k), ber.per_user[k]});
    out.rows.push_back({cfg.zstep_solver, "single", 0.0, seed, "sum_rate",
                        out.metrics.sum_rate});
    out.state = std::move(st);
    return out;
}

}  // namespace simofdma
