#pragma once

#include <random>
#include <vector>

#include "simofdma/common.hpp"
#include "simofdma/config.hpp"

namespace simofdma {

struct Scatterer {
    arma::vec3 position;
    cx phase_seed;  // unit-modulus reflection phase, shared by all users
};

struct Path {
    cx gain;            // complex amplitude g_p (antenna gains included)
    double delay_s = 0; // tau_p
    double elevation = 0;  // theta_p in [0, pi)
    double azimuth = 0;    // phi_p in [-pi/2, pi/2]
};

struct ChannelRealization {
    std::vector<arma::cx_mat> g;   // per-subcarrier K x M
    std::vector<double> freqs_hz;  // length N_c
    std::uint64_t seed = 0;

    unsigned num_subcarriers() const { return static_cast<unsigned>(g.size()); }
};

// Uniform subcarrier grid centered on f0: f_i = f0 - B/2 + (i - 1/2) B/N_c.
inline std::vector<double> subcarrier_frequencies(double f0_hz, double bandwidth_hz,
                                                  unsigned n_subcarriers) {
    if (n_subcarriers < 1) throw ConfigError("subcarrier grid: N_c must be >= 1");
    if (!(bandwidth_hz > 0)) throw ConfigError("subcarrier grid: B must be > 0");
    std::vector<double> f(n_subcarriers);
    const double df = bandwidth_hz / n_subcarriers;
    for (unsigned i = 0; i < n_subcarriers; ++i)
        f[i] = f0_hz - 0.5 * bandwidth_hz + (i + 0.5) * df;
    return f;
}

// Scatterer positions uniform in the box between the BS and the user row,
// with a uniform reflection phase each. Draw order is fixed (x, y, z, phase
// per scatterer) so realizations are reproducible.
inline std::vector<Scatterer> generate_scatterers(const Geometry& geom,
                                                  unsigned count,
                                                  std::uint64_t seed) {
    arma::vec3 lo, hi;
    geom.scatter_box(lo, hi);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ux(lo[0], hi[0]);
    std::uniform_real_distribution<double> uy(lo[1], hi[1]);
    std::uniform_real_distribution<double> uz(lo[2], hi[2]);
    std::uniform_real_distribution<double> uphase(0.0, 2.0 * kPi);
    std::vector<Scatterer> out;
    out.reserve(count);
    for (unsigned s = 0; s < count; ++s) {
        Scatterer sc;
        sc.position = {ux(rng), uy(rng), uz(rng)};
        const double psi = uphase(rng);
        sc.phase_seed = cx(std::cos(psi), std::sin(psi));
        out.push_back(sc);
    }
    return out;
}

// Departure angles from the aperture center toward a target point. The
// aperture is the x-z plane, so the x phase gradient goes with
// sin(theta) sin(phi) and the z gradient with cos(theta).
inline void departure_angles(const Geometry& geom, const arma::vec3& target,
                             double& elevation, double& azimuth) {
    const arma::vec3 rel = target - geom.bs_position();
    const double d = arma::norm(rel);
    elevation = std::acos(std::clamp(rel[2] / d, -1.0, 1.0));
    azimuth = std::atan2(rel[0], rel[1]);
}

// Uniform planar array steering vector, alpha = alpha_x (x) alpha_z.
inline arma::cx_vec steering_vector(const Geometry& geom, double elevation,
                                    double azimuth, double f_hz) {
    if (!(elevation >= 0.0 && elevation < kPi))
        throw std::domain_error("steering_vector: elevation out of [0, pi)");
    if (!(azimuth >= -kPi / 2 && azimuth <= kPi / 2))
        throw std::domain_error("steering_vector: azimuth out of [-pi/2, pi/2]");
    const double kx = 2.0 * kPi * geom.atom_pitch_m * std::sin(elevation) *
                      std::sin(azimuth) * f_hz / kSpeedOfLight;
    const double kz = 2.0 * kPi * geom.atom_pitch_m * std::cos(elevation) *
                      f_hz / kSpeedOfLight;
    arma::cx_vec ax(geom.meta_cols), az(geom.meta_rows);
    for (unsigned mx = 0; mx < geom.meta_cols; ++mx)
        ax[mx] = std::polar(1.0, kx * mx);
    for (unsigned mz = 0; mz < geom.meta_rows; ++mz)
        az[mz] = std::polar(1.0, kz * mz);
    return arma::kron(ax, az);
}

// Path table for one user: path 0 is LoS (zero extra phase), path p >= 1
// bounces off scatterer p-1. Gains use the free-space amplitude
// sqrt(lambda0 / (4 pi d)) evaluated at f0, frequency-flat.
inline std::vector<Path> build_paths(const Geometry& geom,
                                     const std::vector<Scatterer>& scatterers,
                                     unsigned user, double f0_hz,
                                     bool include_los = true) {
    if (user >= geom.num_users)
        throw std::out_of_range("build_paths: user index out of range");
    const double lambda0 = kSpeedOfLight / f0_hz;
    const double amp_gain = geom.amplitude_gain();
    const arma::vec3 bs = geom.bs_position();
    const arma::vec3 ue = geom.user_position(user);
    std::vector<Path> paths;
    paths.reserve(scatterers.size() + 1);
    if (include_los) {
        Path p;
        const double d = arma::norm(ue - bs);
        p.gain = amp_gain * std::sqrt(lambda0 / (4.0 * kPi * d));
        p.delay_s = d / kSpeedOfLight;
        departure_angles(geom, ue, p.elevation, p.azimuth);
        paths.push_back(p);
    }
    for (const auto& sc : scatterers) {
        Path p;
        const double d = arma::norm(sc.position - bs) +
                         arma::norm(ue - sc.position);
        p.gain = amp_gain * std::sqrt(lambda0 / (4.0 * kPi * d)) * sc.phase_seed;
        p.delay_s = d / kSpeedOfLight;
        departure_angles(geom, sc.position, p.elevation, p.azimuth);
        paths.push_back(p);
    }
    return paths;
}

// g_k(f) = sum_p g_p e^{-j 2 pi f tau_p} alpha_p(f)^H, a 1 x M row.
inline arma::cx_rowvec channel_vector(const Geometry& geom,
                                      const std::vector<Path>& paths,
                                      double f_hz) {
    arma::cx_rowvec g(geom.num_atoms(), arma::fill::zeros);
    for (const auto& p : paths) {
        const cx phasor = std::polar(1.0, -2.0 * kPi * f_hz * p.delay_s);
        const arma::cx_vec a = steering_vector(geom, p.elevation, p.azimuth, f_hz);
        g += p.gain * phasor * a.t();  // .t() is the conjugate transpose
    }
    return g;
}

inline ChannelRealization assemble_channel(const Geometry& geom,
                                           const std::vector<Scatterer>& scatterers,
                                           const std::vector<double>& freqs_hz,
                                           double f0_hz, std::uint64_t seed,
                                           bool include_los = true) {
    ChannelRealization ch;
    ch.freqs_hz = freqs_hz;
    ch.seed = seed;
    std::vector<std::vector<Path>> paths(geom.num_users);
    for (unsigned k = 0; k < geom.num_users; ++k)
        paths[k] = build_paths(geom, scatterers, k, f0_hz, include_los);
    ch.g.reserve(freqs_hz.size());
    for (double f : freqs_hz) {
        arma::cx_mat gi(geom.num_users, geom.num_atoms());
        for (unsigned k = 0; k < geom.num_users; ++k)
            gi.row(k) = channel_vector(geom, paths[k], f);
        ch.g.push_back(std::move(gi));
    }
    return ch;
}

// Convenience: scatterers + assembly from one config and seed.
inline ChannelRealization make_channel(const SystemConfig& cfg, std::uint64_t seed) {
    const Geometry geom = cfg.geometry();
    const auto scatterers = generate_scatterers(geom, cfg.num_scatterers, seed);
    const auto freqs = subcarrier_frequencies(cfg.f0_hz, cfg.bandwidth_hz,
                                              cfg.n_subcarriers);
    return assemble_channel(geom, scatterers, freqs, cfg.f0_hz, seed);
}

}  // namespace simofdma
