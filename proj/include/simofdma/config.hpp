#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "simofdma/common.hpp"

namespace simofdma {

// BS/user geometry. The BS (SIM aperture center) sits at (0, 0, bs_height);
// the K users stand on the ground at y = user_range, centered on x = 0 with
// user_spacing between neighbours.
struct Geometry {
    double bs_height_m = 10.0;
    double user_range_m = 250.0;
    double user_spacing_m = 30.0;
    unsigned num_users = 4;
    unsigned meta_cols = 10;   // M_x
    unsigned meta_rows = 10;   // M_z
    double atom_pitch_m = kSpeedOfLight / 56e9;  // r_T = c/(2 f0)
    double bs_gain_dbi = 3.0;
    double ue_gain_dbi = 0.0;

    unsigned num_atoms() const { return meta_cols * meta_rows; }

    arma::vec3 bs_position() const { return {0.0, 0.0, bs_height_m}; }

    arma::vec3 user_position(unsigned k) const {
        const double x = (static_cast<double>(k + 1) -
                          0.5 * (num_users + 1)) * user_spacing_m;
        return {x, user_range_m, 0.0};
    }

    // Scatterers live in the axis-aligned box spanning the user row in x,
    // the strip between BS and users in y, and ground-to-BS-height in z.
    void scatter_box(arma::vec3& lo, arma::vec3& hi) const {
        const double half_row = 0.5 * (num_users - 1) * user_spacing_m;
        lo = {-half_row, 10.0, 0.0};
        hi = {half_row, user_range_m - 10.0, bs_height_m};
    }

    double amplitude_gain() const {
        return std::pow(10.0, (bs_gain_dbi + ue_gain_dbi) / 20.0);
    }

    void validate() const {
        if (num_users < 1) throw ConfigError("geometry: num_users must be >= 1");
        if (meta_cols * meta_rows == 0)
            throw ConfigError("geometry: meta grid must be non-empty");
        if (bs_height_m <= 0 || user_range_m <= 0 || user_spacing_m <= 0 ||
            atom_pitch_m <= 0)
            throw ConfigError("geometry: all lengths must be positive");
    }
};

// Stacked-metasurface geometry. Layers share one atom grid; the feed array
// is a uniform line of K antennas along x, pitch r_T, one gap d_T before
// layer 1.
struct SimGeometry {
    unsigned layers = 7;
    unsigned meta_cols = 10;   // M_x
    unsigned meta_rows = 10;   // M_z
    double atom_pitch_m = kSpeedOfLight / 56e9;
    double atom_area_m2 = std::pow(kSpeedOfLight / 56e9, 2);  // S_T
    double total_thickness_m = 0.05;                          // D_T
    unsigned feed_antennas = 4;

    unsigned num_atoms() const { return meta_cols * meta_rows; }

    double layer_gap() const { return total_thickness_m / layers; }

    // Atom m (0-based, m = m_x*M_z + m_z) sits at the centered grid point.
    void atom_xy(unsigned m, double& x, double& z) const {
        const unsigned mx = m / meta_rows;
        const unsigned mz = m % meta_rows;
        x = (static_cast<double>(mx + 1) - 0.5 * (meta_cols + 1)) * atom_pitch_m;
        z = (static_cast<double>(mz + 1) - 0.5 * (meta_rows + 1)) * atom_pitch_m;
    }

    double feed_x(unsigned k) const {
        return (static_cast<double>(k + 1) - 0.5 * (feed_antennas + 1)) *
               atom_pitch_m;
    }

    void validate() const {
        if (layers < 1) throw ConfigError("sim: layers must be >= 1");
        if (num_atoms() == 0) throw ConfigError("sim: atom grid must be non-empty");
        if (atom_area_m2 <= 0 || total_thickness_m <= 0 || atom_pitch_m <= 0)
            throw ConfigError("sim: all dimensions must be positive");
        if (feed_antennas < 1) throw ConfigError("sim: feed_antennas must be >= 1");
    }
};

// Power and noise bookkeeping for the link-level metrics.
struct LinkBudget {
    double tx_power_dbm = 10.0;
    double noise_psd_dbm_hz = -112.0;
    double bandwidth_hz = 40e6;
    unsigned num_subcarriers = 16;
    double snr_offset_db = 0.0;  // handicap applied to the pure-OFDMA baseline

    double tx_power_w() const { return dbm_to_watts(tx_power_dbm); }

    double subcarrier_noise_w() const {
        return dbm_to_watts(noise_psd_dbm_hz) *
               (bandwidth_hz / num_subcarriers);
    }

    void validate() const {
        if (!(subcarrier_noise_w() > 0))
            throw ConfigError("budget: subcarrier noise must be positive");
        if (!std::isfinite(tx_power_dbm))
            throw ConfigError("budget: tx power must be finite");
    }
};

enum class InnerSolver { coordinate_descent, pccp };
enum class ZStepSolver { milp, random, greedy, fixed_ofdma, fixed_sdma };

// Every physical and algorithmic knob of an experiment, flat so it can be
// round-tripped through the dotted key-value config format.
struct SystemConfig {
    // carrier / band
    double f0_hz = 28e9;
    double bandwidth_hz = 40e6;
    unsigned n_subcarriers = 16;

    // deployment geometry
    double bs_height_m = 10.0;
    double user_range_m = 250.0;
    double user_spacing_m = 30.0;
    unsigned num_users = 4;
    unsigned num_scatterers = 100;
    double bs_gain_dbi = 3.0;
    double ue_gain_dbi = 0.0;

    // SIM
    unsigned meta_cols = 10;
    unsigned meta_rows = 10;
    unsigned layers = 7;
    double sim_thickness_m = 0.05;
    double atom_pitch_m = kSpeedOfLight / 56e9;
    double atom_area_m2 = std::pow(kSpeedOfLight / 56e9, 2);

    // link budget
    double noise_psd_dbm_hz = -112.0;
    double tx_power_dbm = 10.0;

    // optimizer
    unsigned subcarriers_per_user = 10;  // K_c, rho = 0.625 at 16 subcarriers
    unsigned ao_iterations = 50;
    unsigned restarts = 1;
    unsigned cd_sweeps = 3;
    double plateau_rel_tol = 1e-5;
    unsigned plateau_window = 3;
    double greedy_threshold = 0.10;
    std::string inner_solver = "cd";   // cd | pccp
    std::string zstep_solver = "milp"; // milp | random | greedy | ofdma | sdma

    // PCCP defaults (declared values, not paper values)
    double pccp_lambda0 = 1e-3;
    double pccp_growth = 2.0;
    double pccp_lambda_max = 1e4;
    double pccp_tol = 1e-6;

    // Monte-Carlo / sweeps
    unsigned mc_runs = 100;
    unsigned ber_trials = 10000;
    double ber_power_min_dbm = -40.0;
    double ber_power_max_dbm = 10.0;
    double ber_power_step_db = 5.0;
    unsigned kc_sweep_min = 0;   // 0 -> N_c / K
    unsigned kc_sweep_max = 0;   // 0 -> N_c
    unsigned kc_sweep_step = 2;

    std::uint64_t seed = 1;

    Geometry geometry() const {
        Geometry g;
        g.bs_height_m = bs_height_m;
        g.user_range_m = user_range_m;
        g.user_spacing_m = user_spacing_m;
        g.num_users = num_users;
        g.meta_cols = meta_cols;
        g.meta_rows = meta_rows;
        g.atom_pitch_m = atom_pitch_m;
        g.bs_gain_dbi = bs_gain_dbi;
        g.ue_gain_dbi = ue_gain_dbi;
        return g;
    }

    SimGeometry sim_geometry() const {
        SimGeometry s;
        s.layers = layers;
        s.meta_cols = meta_cols;
        s.meta_rows = meta_rows;
        s.atom_pitch_m = atom_pitch_m;
        s.atom_area_m2 = atom_area_m2;
        s.total_thickness_m = sim_thickness_m;
        s.feed_antennas = num_users;  // N_TX = S = K
        return s;
    }

    LinkBudget budget() const {
        LinkBudget b;
        b.tx_power_dbm = tx_power_dbm;
        b.noise_psd_dbm_hz = noise_psd_dbm_hz;
        b.bandwidth_hz = bandwidth_hz;
        b.num_subcarriers = n_subcarriers;
        return b;
    }

    InnerSolver inner() const {
        if (inner_solver == "cd") return InnerSolver::coordinate_descent;
        if (inner_solver == "pccp") return InnerSolver::pccp;
        throw ConfigError("unknown inner solver: " + inner_solver);
    }

    ZStepSolver zstep() const {
        if (zstep_solver == "milp") return ZStepSolver::milp;
        if (zstep_solver == "random") return ZStepSolver::random;
        if (zstep_solver == "greedy") return ZStepSolver::greedy;
        if (zstep_solver == "ofdma") return ZStepSolver::fixed_ofdma;
        if (zstep_solver == "sdma") return ZStepSolver::fixed_sdma;
        throw ConfigError("unknown zstep solver: " + zstep_solver);
    }

    void validate() const {
        if (n_subcarriers < 1) throw ConfigError("system.n_subcarriers must be >= 1");
        if (bandwidth_hz <= 0) throw ConfigError("system.bandwidth_hz must be > 0");
        geometry().validate();
        sim_geometry().validate();
        budget().validate();
        inner();
        zstep();
        if (subcarriers_per_user < 1 || subcarriers_per_user > n_subcarriers)
            throw ConfigError("optimizer.subcarriers_per_user out of range");
    }
};

inline SystemConfig desk_profile(SystemConfig cfg = {}) {
    cfg.meta_cols = 4;
    cfg.meta_rows = 4;
    cfg.layers = 3;
    cfg.mc_runs = 10;
    return cfg;
}

inline SystemConfig paper_profile(SystemConfig cfg = {}) { return cfg; }

namespace detail {

inline std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
    std::istringstream ss(value);
    T out{};
    ss >> out;
    if (ss.fail()) throw ConfigError("config: bad value for " + key + ": " + value);
    std::string rest;
    ss >> rest;
    if (!rest.empty()) throw ConfigError("config: trailing junk for " + key);
    return out;
}

}  // namespace detail

// Flat dotted key-value schema. Unknown keys are rejected so a stale config
// cannot silently drift from the code.
inline void apply_config_entry(SystemConfig& cfg, const std::string& key,
                               const std::string& value) {
    using detail::parse_number;
    static const std::map<std::string, int> string_keys = {
        {"optimizer.inner", 0}, {"optimizer.zstep", 1}};
    if (key == "optimizer.inner") { cfg.inner_solver = value; return; }
    if (key == "optimizer.zstep") { cfg.zstep_solver = value; return; }
    (void)string_keys;

    std::map<std::string, double*> dkeys = {
        {"system.f0_hz", &cfg.f0_hz},
        {"system.bandwidth_hz", &cfg.bandwidth_hz},
        {"geometry.bs_height_m", &cfg.bs_height_m},
        {"geometry.user_range_m", &cfg.user_range_m},
        {"geometry.user_spacing_m", &cfg.user_spacing_m},
        {"geometry.bs_gain_dbi", &cfg.bs_gain_dbi},
        {"geometry.ue_gain_dbi", &cfg.ue_gain_dbi},
        {"sim.thickness_m", &cfg.sim_thickness_m},
        {"sim.atom_pitch_m", &cfg.atom_pitch_m},
        {"sim.atom_area_m2", &cfg.atom_area_m2},
        {"budget.noise_psd_dbm_hz", &cfg.noise_psd_dbm_hz},
        {"budget.tx_power_dbm", &cfg.tx_power_dbm},
        {"optimizer.plateau_rel_tol", &cfg.plateau_rel_tol},
        {"optimizer.greedy_threshold", &cfg.greedy_threshold},
        {"pccp.lambda0", &cfg.pccp_lambda0},
        {"pccp.growth", &cfg.pccp_growth},
        {"pccp.lambda_max", &cfg.pccp_lambda_max},
        {"pccp.tol", &cfg.pccp_tol},
        {"sweep.ber_power_min_dbm", &cfg.ber_power_min_dbm},
        {"sweep.ber_power_max_dbm", &cfg.ber_power_max_dbm},
        {"sweep.ber_power_step_db", &cfg.ber_power_step_db},
    };
    std::map<std::string, unsigned*> ukeys = {
        {"system.n_subcarriers", &cfg.n_subcarriers},
        {"geometry.num_users", &cfg.num_users},
        {"geometry.num_scatterers", &cfg.num_scatterers},
        {"sim.meta_cols", &cfg.meta_cols},
        {"sim.meta_rows", &cfg.meta_rows},
        {"sim.layers", &cfg.layers},
        {"optimizer.subcarriers_per_user", &cfg.subcarriers_per_user},
        {"optimizer.ao_iterations", &cfg.ao_iterations},
        {"optimizer.restarts", &cfg.restarts},
        {"optimizer.cd_sweeps", &cfg.cd_sweeps},
        {"optimizer.plateau_window", &cfg.plateau_window},
        {"mc.runs", &cfg.mc_runs},
        {"mc.ber_trials", &cfg.ber_trials},
        {"sweep.kc_min", &cfg.kc_sweep_min},
        {"sweep.kc_max", &cfg.kc_sweep_max},
        {"sweep.kc_step", &cfg.kc_sweep_step},
    };
    if (auto it = dkeys.find(key); it != dkeys.end()) {
        *it->second = parse_number<double>(key, value);
        return;
    }
    if (auto it = ukeys.find(key); it != ukeys.end()) {
        *it->second = parse_number<unsigned>(key, value);
        return;
    }
    if (key == "seed") {
        cfg.seed = parse_number<std::uint64_t>(key, value);
        return;
    }
    throw ConfigError("config: unknown key: " + key);
}

inline void load_config_text(SystemConfig& cfg, std::istream& in) {
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: line " + std::to_string(lineno) +
                              " is not key = value");
        apply_config_entry(cfg, detail::trim(line.substr(0, eq)),
                           detail::trim(line.substr(eq + 1)));
    }
}

inline void load_config_file(SystemConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    load_config_text(cfg, in);
}

// Canonical serialization: sorted dotted keys, full double precision. Also
// the basis of the config hash stamped into every output.
inline std::string serialize_config(const SystemConfig& cfg) {
    std::ostringstream os;
    os.precision(17);
    std::map<std::string, std::string> kv;
    auto put = [&](const std::string& k, auto v) {
        std::ostringstream s;
        s.precision(17);
        s << v;
        kv[k] = s.str();
    };
    put("system.f0_hz", cfg.f0_hz);
    put("system.bandwidth_hz", cfg.bandwidth_hz);
    put("system.n_subcarriers", cfg.n_subcarriers);
    put("geometry.bs_height_m", cfg.bs_height_m);
    put("geometry.user_range_m", cfg.user_range_m);
    put("geometry.user_spacing_m", cfg.user_spacing_m);
    put("geometry.num_users", cfg.num_users);
    put("geometry.num_scatterers", cfg.num_scatterers);
    put("geometry.bs_gain_dbi", cfg.bs_gain_dbi);
    put("geometry.ue_gain_dbi", cfg.ue_gain_dbi);
    put("sim.meta_cols", cfg.meta_cols);
    put("sim.meta_rows", cfg.meta_rows);
    put("sim.layers", cfg.layers);
    put("sim.thickness_m", cfg.sim_thickness_m);
    put("sim.atom_pitch_m", cfg.atom_pitch_m);
    put("sim.atom_area_m2", cfg.atom_area_m2);
    put("budget.noise_psd_dbm_hz", cfg.noise_psd_dbm_hz);
    put("budget.tx_power_dbm", cfg.tx_power_dbm);
    put("optimizer.subcarriers_per_user", cfg.subcarriers_per_user);
    put("optimizer.ao_iterations", cfg.ao_iterations);
    put("optimizer.restarts", cfg.restarts);
    put("optimizer.cd_sweeps", cfg.cd_sweeps);
    put("optimizer.plateau_rel_tol", cfg.plateau_rel_tol);
    put("optimizer.plateau_window", cfg.plateau_window);
    put("optimizer.greedy_threshold", cfg.greedy_threshold);
    put("optimizer.inner", cfg.inner_solver);
    put("optimizer.zstep", cfg.zstep_solver);
    put("pccp.lambda0", cfg.pccp_lambda0);
    put("pccp.growth", cfg.pccp_growth);
    put("pccp.lambda_max", cfg.pccp_lambda_max);
    put("pccp.tol", cfg.pccp_tol);
    put("mc.runs", cfg.mc_runs);
    put("mc.ber_trials", cfg.ber_trials);
    put("sweep.ber_power_min_dbm", cfg.ber_power_min_dbm);
    put("sweep.ber_power_max_dbm", cfg.ber_power_max_dbm);
    put("sweep.ber_power_step_db", cfg.ber_power_step_db);
    put("sweep.kc_min", cfg.kc_sweep_min);
    put("sweep.kc_max", cfg.kc_sweep_max);
    put("sweep.kc_step", cfg.kc_sweep_step);
    put("seed", cfg.seed);
    for (const auto& [k, v] : kv) os << k << " = " << v << "\n";
    return os.str();
}

// FNV-1a over the canonical serialization.
inline std::string config_hash(const SystemConfig& cfg) {
    const std::string text = serialize_config(cfg);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(h));
    return std::string(buf);
}

}  // namespace simofdma
