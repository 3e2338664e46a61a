// Experiment runner for the SIM-assisted OFDMA link simulator: NMSE / BER /
// sum-rate sweeps, single runs with trace and heatmap dumps, and a quick
// self-test of the numerical oracles.

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "simofdma/simofdma.hpp"

namespace {

using namespace simofdma;

std::vector<std::string> split_list(const std::string& csv) {
    std::vector<std::string> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

void write_outputs(const std::filesystem::path& dir, const std::string& name,
                   const std::vector<ResultRow>& rows, const SystemConfig& cfg) {
    const std::string hash = config_hash(cfg);
    write_file(dir / (name + ".csv"), render_csv(rows, hash));
    write_file(dir / (name + "_meta.txt"),
               "# config_hash " + hash + "\n" + serialize_config(cfg));
}

int run_selftest() {
    unsigned failures = 0;
    auto check = [&](const std::string& label, bool ok) {
        std::cout << (ok ? "ok   " : "FAIL ") << label << "\n";
        if (!ok) ++failures;
    };

    const auto freqs = subcarrier_frequencies(28e9, 40e6, 16);
    check("subcarrier grid endpoints",
          std::abs(freqs.front() - 27.98125e9) < 1.0 &&
              std::abs(freqs.back() - 28.01875e9) < 1.0);

    const double rt = kSpeedOfLight / 56e9;
    const cx w = rs_coefficient(0.05 / 7, rt * rt, 0.05 / 7, 28e9);
    check("rayleigh-sommerfeld reference value",
          std::abs(w - cx(-0.36955254642885782, 0.10887571197644983)) < 1e-12);

    std::mt19937_64 rng(7);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<arma::cx_mat> h;
    for (int i = 0; i < 4; ++i) {
        arma::cx_mat hi(3, 3);
        for (auto& v : hi) v = cx(gauss(rng), gauss(rng));
        h.push_back(hi);
    }
    arma::umat z(3, 4, arma::fill::ones);
    z(0, 1) = 0;
    z(2, 3) = 0;
    const double alpha = 0.7;
    check("frobenius expansion identity",
          std::abs(gamma_expanded(h, alpha, z) - gamma_direct(h, z, alpha)) <
              1e-12 * gamma_direct(h, z, alpha));

    const double a_opt = optimal_alpha(h, z);
    const double g0 = gamma_direct(h, z, a_opt);
    check("alpha stationarity",
          gamma_direct(h, z, a_opt + 1e-3) >= g0 &&
              gamma_direct(h, z, a_opt - 1e-3) >= g0);

    std::vector<double> gains = {0.5, 1.0, 2.0, 4.0};
    const auto p = water_filling(gains, 2.0, 0.1);
    double total = 0.0;
    for (double v : p) total += v;
    check("water-filling power conservation", std::abs(total - 2.0) < 1e-9 * 2.0);

    MilpInstance inst;
    inst.num_users = 2;
    inst.num_subcarriers = 3;
    inst.per_user = 2;
    inst.c.set_size(2, 3);
    inst.d.assign(3, arma::mat(2, 2, arma::fill::zeros));
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (auto& v : inst.c) v = uni(rng);
    for (auto& m : inst.d) m(0, 1) = uni(rng);
    check("branch and bound against brute force",
          solve_branch_and_bound(inst).objective == brute_force(inst).objective);

    std::cout << (failures ? "selftest: FAILED\n" : "selftest: all checks passed\n");
    return failures ? 4 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"SIM-assisted OFDMA link simulator and joint optimizer"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path, profile = "paper", out_dir = "results";
    std::string scheme_list, inner, zstep;
    std::uint64_t seed = 0;
    bool seed_set = false;
    unsigned threads = 1;

    app.add_option("--config", config_path, "experiment config file");
    app.add_option("--seed", seed, "base RNG seed")->each([&](const std::string&) {
        seed_set = true;
    });
    app.add_option("--profile", profile, "paper or desk parameter profile")
        ->check(CLI::IsMember({"paper", "desk"}));
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--scheme", scheme_list, "comma-separated scheme list");
    app.add_option("--inner", inner, "inner phase solver")
        ->check(CLI::IsMember({"cd", "pccp"}));
    app.add_option("--zstep", zstep, "assignment solver")
        ->check(CLI::IsMember({"milp", "random", "greedy", "ofdma", "sdma"}));
    app.add_option("--threads", threads, "worker pool size");

    auto* cmd_nmse = app.add_subcommand("nmse", "fitting NMSE vs K_c sweep");
    auto* cmd_ber = app.add_subcommand("ber", "BER vs transmit power sweep");
    auto* cmd_sumrate = app.add_subcommand("sumrate", "sum rate vs K_c sweep");
    auto* cmd_single = app.add_subcommand("single", "one optimization run");
    auto* cmd_selftest = app.add_subcommand("selftest", "run the oracle checks");

    CLI11_PARSE(app, argc, argv);

    try {
        SystemConfig cfg;
        if (profile == "desk") cfg = desk_profile();
        if (!config_path.empty()) load_config_file(cfg, config_path);
        if (seed_set) cfg.seed = seed;
        if (!inner.empty()) cfg.inner_solver = inner;
        if (!zstep.empty()) cfg.zstep_solver = zstep;
        cfg.validate();

        const std::filesystem::path dir(out_dir);
        if (cmd_selftest->parsed()) return run_selftest();

        if (cmd_nmse->parsed()) {
            std::vector<std::string> schemes = {"joint", "greedy", "random"};
            if (!scheme_list.empty()) schemes = split_list(scheme_list);
            const auto rows = run_nmse_sweep(cfg, schemes, threads);
            write_outputs(dir, "nmse", rows, cfg);
            std::cout << "nmse sweep: " << rows.size() << " rows -> "
                      << (dir / "nmse.csv") << "\n";
        } else if (cmd_ber->parsed()) {
            std::vector<std::string> schemes = {"proposed", "sim-sdma", "sim-ofdma",
                                                "digital-zf"};
            if (!scheme_list.empty()) schemes = split_list(scheme_list);
            const auto rows = run_ber_sweep(cfg, schemes, threads);
            write_outputs(dir, "ber", rows, cfg);
            std::cout << "ber sweep: " << rows.size() << " rows -> "
                      << (dir / "ber.csv") << "\n";
        } else if (cmd_sumrate->parsed()) {
            const auto rows = run_sumrate_sweep(cfg, threads);
            write_outputs(dir, "sumrate", rows, cfg);
            std::cout << "sumrate sweep: " << rows.size() << " rows -> "
                      << (dir / "sumrate.csv") << "\n";
        } else if (cmd_single->parsed()) {
            const auto out = run_single(cfg);
            const std::string hash = config_hash(cfg);
            write_outputs(dir, "single", out.rows, cfg);
            write_file(dir / "trace.csv", render_trace(out.state.trace, hash));
            write_file(dir / "heatmap.txt", render_matrix(out.heatmap_grid, hash));
            std::cout << "single run: gamma " << out.state.gamma << ", nmse "
                      << out.metrics.nmse << ", sum rate " << out.metrics.sum_rate
                      << " -> " << dir << "\n";
        }
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const InfeasibleError& e) {
        std::cerr << "infeasible instance: " << e.what() << "\n";
        return 3;
    } catch (const SolverError& e) {
        std::cerr << "solver failure: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
