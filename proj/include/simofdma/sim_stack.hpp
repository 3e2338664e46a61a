#pragma once

#include <utility>
#include <vector>

#include "simofdma/common.hpp"
#include "simofdma/config.hpp"

namespace simofdma {

// Phase shifts of all layers, stored as angles. Row l holds theta^l.
struct PhaseConfig {
    arma::mat theta;  // L x M, radians

    PhaseConfig() = default;
    PhaseConfig(unsigned layers, unsigned atoms)
        : theta(layers, atoms, arma::fill::zeros) {}

    unsigned layers() const { return static_cast<unsigned>(theta.n_rows); }
    unsigned atoms() const { return static_cast<unsigned>(theta.n_cols); }

    arma::cx_vec layer_phases(unsigned l) const {
        arma::cx_vec phi(theta.n_cols);
        for (arma::uword m = 0; m < theta.n_cols; ++m)
            phi[m] = std::polar(1.0, theta(l, m));
        return phi;
    }

    void set_layer(unsigned l, const arma::cx_vec& phi) {
        for (arma::uword m = 0; m < theta.n_cols; ++m)
            theta(l, m) = std::arg(phi[m]);
    }
};

// Rayleigh-Sommerfeld transmission coefficient between two points at
// distance t across one layer gap.
inline cx rs_coefficient(double t_m, double atom_area_m2, double layer_gap_m,
                         double f_hz) {
    if (!(t_m > 0))
        throw std::domain_error("rs_coefficient: non-positive distance");
    const double scale = atom_area_m2 * layer_gap_m / (t_m * t_m);
    const cx kernel(1.0 / (2.0 * kPi * t_m), -f_hz / kSpeedOfLight);
    return scale * kernel * std::polar(1.0, 2.0 * kPi * t_m * f_hz / kSpeedOfLight);
}

// Precomputed propagation matrices of the stack. All layers share the same
// atom grid and gap, so one inter-layer matrix per subcarrier serves every
// l >= 2.
struct SimStack {
    SimGeometry geometry;
    std::vector<double> freqs_hz;
    std::vector<arma::cx_mat> feed;        // per subcarrier, M x K (W^1_i)
    std::vector<arma::cx_mat> inter_layer; // per subcarrier, M x M (W^l_i, l>=2)

    unsigned num_subcarriers() const { return static_cast<unsigned>(freqs_hz.size()); }

    const arma::cx_mat& w(unsigned subcarrier, unsigned layer) const {
        if (layer < 1 || layer > geometry.layers)
            throw std::out_of_range("SimStack::w: layer out of range");
        return layer == 1 ? feed[subcarrier] : inter_layer[subcarrier];
    }
};

inline SimStack build_stack(const SimGeometry& geom,
                            const std::vector<double>& freqs_hz) {
    geom.validate();
    const unsigned m = geom.num_atoms();
    const unsigned k = geom.feed_antennas;
    const double gap = geom.layer_gap();

    // inter-atom and feed-to-atom distance tables (frequency independent)
    arma::mat t_inter(m, m), t_feed(m, k);
    std::vector<double> ax(m), az(m);
    for (unsigned i = 0; i < m; ++i) geom.atom_xy(i, ax[i], az[i]);
    for (unsigned i = 0; i < m; ++i)
        for (unsigned j = 0; j < m; ++j) {
            const double dx = ax[i] - ax[j];
            const double dz = az[i] - az[j];
            t_inter(i, j) = std::sqrt(gap * gap + dx * dx + dz * dz);
        }
    for (unsigned i = 0; i < m; ++i)
        for (unsigned a = 0; a < k; ++a) {
            const double dx = ax[i] - geom.feed_x(a);
            const double dz = az[i];
            t_feed(i, a) = std::sqrt(gap * gap + dx * dx + dz * dz);
        }

    SimStack stack;
    stack.geometry = geom;
    stack.freqs_hz = freqs_hz;
    stack.feed.reserve(freqs_hz.size());
    stack.inter_layer.reserve(freqs_hz.size());
    for (double f : freqs_hz) {
        arma::cx_mat wi(m, m), w1(m, k);
        for (unsigned i = 0; i < m; ++i)
            for (unsigned j = 0; j < m; ++j)
                wi(i, j) = rs_coefficient(t_inter(i, j), geom.atom_area_m2, gap, f);
        for (unsigned i = 0; i < m; ++i)
            for (unsigned a = 0; a < k; ++a)
                w1(i, a) = rs_coefficient(t_feed(i, a), geom.atom_area_m2, gap, f);
        stack.inter_layer.push_back(std::move(wi));
        stack.feed.push_back(std::move(w1));
    }
    return stack;
}

// P_i = Phi^L W^L ... Phi^2 W^2 Phi^1 W^1, an M x K map from the feed array
// to the output aperture.
inline arma::cx_mat cascade(const SimStack& stack, const PhaseConfig& phases,
                            unsigned subcarrier) {
    arma::cx_mat p = stack.w(subcarrier, 1);
    p.each_col() %= phases.layer_phases(0);
    for (unsigned l = 2; l <= stack.geometry.layers; ++l) {
        p = stack.w(subcarrier, l) * p;
        p.each_col() %= phases.layer_phases(l - 1);
    }
    return p;
}

// Splits the cascade around layer l (1-based): P_i = P_L diag(phi^l) P_R.
// P_L is the product of layers above l (identity when l = L) and P_R starts
// at W^l and runs down to the feed.
inline std::pair<arma::cx_mat, arma::cx_mat> split_cascade(
    const SimStack& stack, const PhaseConfig& phases, unsigned subcarrier,
    unsigned layer) {
    const unsigned big_l = stack.geometry.layers;
    if (layer < 1 || layer > big_l)
        throw std::out_of_range("split_cascade: layer out of range");

    arma::cx_mat right = stack.w(subcarrier, 1);
    for (unsigned l = 2; l <= layer; ++l) {
        right.each_col() %= phases.layer_phases(l - 2);
        right = stack.w(subcarrier, l) * right;
    }

    arma::cx_mat left(stack.geometry.num_atoms(), stack.geometry.num_atoms(),
                      arma::fill::eye);
    for (unsigned l = big_l; l > layer; --l) {
        arma::cx_mat factor = stack.w(subcarrier, l);
        factor.each_col() %= phases.layer_phases(l - 1);
        left = left * factor;
    }
    return {std::move(left), std::move(right)};
}

// H_i = G_i P_i, the K x K end-to-end channel on one subcarrier.
inline arma::cx_mat effective_channel(const arma::cx_mat& g, const arma::cx_mat& p) {
    if (g.n_cols != p.n_rows)
        throw std::invalid_argument("effective_channel: dimension mismatch");
    return g * p;
}

inline std::vector<arma::cx_mat> effective_channels(
    const std::vector<arma::cx_mat>& g, const SimStack& stack,
    const PhaseConfig& phases) {
    std::vector<arma::cx_mat> h;
    h.reserve(g.size());
    for (unsigned i = 0; i < g.size(); ++i)
        h.push_back(effective_channel(g[i], cascade(stack, phases, i)));
    return h;
}

}  // namespace simofdma
