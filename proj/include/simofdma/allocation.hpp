#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <vector>

#include "simofdma/common.hpp"

namespace simofdma {

// Binary subcarrier assignment. Row sums equal per_user (the K_c quota) and
// every column hosts at least one user; the OFDMA baseline with K not
// dividing N_c is the one sanctioned exception to the row-sum equality.
struct Assignment {
    arma::umat z;        // K x N_c, entries 0/1
    unsigned per_user = 0;
    double objective = std::numeric_limits<double>::quiet_NaN();

    unsigned num_users() const { return static_cast<unsigned>(z.n_rows); }
    unsigned num_subcarriers() const { return static_cast<unsigned>(z.n_cols); }

    std::vector<unsigned> active_users(unsigned subcarrier) const {
        std::vector<unsigned> u;
        for (arma::uword k = 0; k < z.n_rows; ++k)
            if (z(k, subcarrier)) u.push_back(static_cast<unsigned>(k));
        return u;
    }

    unsigned total_active_pairs() const { return static_cast<unsigned>(arma::accu(z)); }

    void validate() const {
        for (arma::uword k = 0; k < z.n_rows; ++k)
            if (arma::accu(z.row(k)) != per_user)
                throw InfeasibleError("assignment: row sum != K_c for user " +
                                      std::to_string(k));
        for (arma::uword i = 0; i < z.n_cols; ++i)
            if (arma::accu(z.col(i)) < 1)
                throw InfeasibleError("assignment: uncovered subcarrier " +
                                      std::to_string(i));
    }
};

inline void check_cardinality(unsigned num_users, unsigned num_subcarriers,
                              unsigned per_user) {
    if (per_user < 1)
        throw InfeasibleError("assignment: K_c must be >= 1 (row sum constraint)");
    if (per_user > num_subcarriers)
        throw InfeasibleError("assignment: K_c > N_c violates the row sum constraint");
    if (static_cast<std::uint64_t>(num_users) * per_user < num_subcarriers)
        throw InfeasibleError(
            "assignment: K * K_c < N_c makes column coverage unsatisfiable");
}

// T_i = diag of column i of Z.
inline std::vector<arma::mat> selection_matrices(const arma::umat& z) {
    std::vector<arma::mat> t;
    t.reserve(z.n_cols);
    for (arma::uword i = 0; i < z.n_cols; ++i) {
        arma::mat ti(z.n_rows, z.n_rows, arma::fill::zeros);
        for (arma::uword k = 0; k < z.n_rows; ++k)
            ti(k, k) = static_cast<double>(z(k, i));
        t.push_back(std::move(ti));
    }
    return t;
}

// The expanded fitting objective of the assignment subproblem:
// sum_i [ sum_p |a H(p,p)-1|^2 Z(p,i) + sum_{p != q} |a H(p,q)|^2 Z(p,i) Z(q,i) ].
inline double gamma_expanded(const std::vector<arma::cx_mat>& h, double alpha,
                             const arma::umat& z) {
    double total = 0.0;
    for (arma::uword i = 0; i < z.n_cols; ++i) {
        const arma::cx_mat& hi = h[i];
        for (arma::uword p = 0; p < z.n_rows; ++p) {
            if (!z(p, i)) continue;
            total += std::norm(alpha * hi(p, p) - 1.0);
            for (arma::uword q = 0; q < z.n_rows; ++q) {
                if (q == p || !z(q, i)) continue;
                total += std::norm(alpha * hi(p, q));
            }
        }
    }
    return total;
}

// Linearized instance of the assignment problem. Pair costs fold both
// off-diagonal orientations into p < q, matching Y(p,q,i) = Z(p,i) Z(q,i).
struct MilpInstance {
    unsigned num_users = 0;
    unsigned num_subcarriers = 0;
    unsigned per_user = 0;
    arma::mat c;                // K x N_c
    std::vector<arma::mat> d;   // per subcarrier, entries at (p,q), p < q

    // Cost of one column given its active-user bitmask. Fixed summation
    // order (p ascending, then pairs lexicographic) so every solver computes
    // bitwise-identical objectives.
    double column_cost(unsigned i, std::uint32_t mask) const {
        double cost = 0.0;
        for (unsigned p = 0; p < num_users; ++p) {
            if (!(mask >> p & 1u)) continue;
            cost += c(p, i);
            for (unsigned q = p + 1; q < num_users; ++q)
                if (mask >> q & 1u) cost += d[i](p, q);
        }
        return cost;
    }

    std::uint32_t column_mask(const arma::umat& z, unsigned i) const {
        std::uint32_t mask = 0;
        for (unsigned k = 0; k < num_users; ++k)
            if (z(k, i)) mask |= 1u << k;
        return mask;
    }

    double objective(const arma::umat& z) const {
        double total = 0.0;
        for (unsigned i = 0; i < num_subcarriers; ++i)
            total += column_cost(i, column_mask(z, i));
        return total;
    }
};

inline MilpInstance build_milp(const std::vector<arma::cx_mat>& h, double alpha,
                               unsigned per_user) {
    MilpInstance inst;
    inst.num_subcarriers = static_cast<unsigned>(h.size());
    inst.num_users = static_cast<unsigned>(h.front().n_rows);
    inst.per_user = per_user;
    inst.c.set_size(inst.num_users, inst.num_subcarriers);
    inst.d.assign(inst.num_subcarriers,
                  arma::mat(inst.num_users, inst.num_users, arma::fill::zeros));
    for (unsigned i = 0; i < inst.num_subcarriers; ++i) {
        for (unsigned p = 0; p < inst.num_users; ++p) {
            inst.c(p, i) = std::norm(alpha * h[i](p, p) - 1.0);
            for (unsigned q = p + 1; q < inst.num_users; ++q)
                inst.d[i](p, q) = std::norm(alpha * h[i](p, q)) +
                                  std::norm(alpha * h[i](q, p));
        }
    }
    return inst;
}

namespace detail {

// Row-major lexicographic order over 0/1 matrices.
inline bool lex_less(const arma::umat& a, const arma::umat& b) {
    for (arma::uword k = 0; k < a.n_rows; ++k)
        for (arma::uword i = 0; i < a.n_cols; ++i)
            if (a(k, i) != b(k, i)) return a(k, i) < b(k, i);
    return false;
}

struct SubsetCost {
    std::uint32_t mask;
    double cost;
};

}  // namespace detail

// Exhaustive enumeration over column subsets with row-cardinality filtering.
// Serves as the optimality oracle for the branch-and-bound solver.
inline Assignment brute_force(const MilpInstance& inst) {
    check_cardinality(inst.num_users, inst.num_subcarriers, inst.per_user);
    const unsigned k = inst.num_users;
    const unsigned nc = inst.num_subcarriers;
    const std::uint64_t per_col = (1ull << k) - 1;
    double space = 1.0;
    for (unsigned i = 0; i < nc; ++i) space *= static_cast<double>(per_col);
    if (space > 1e7)
        throw SolverError("brute_force: search space exceeds 10^7 candidates");

    arma::umat z(k, nc, arma::fill::zeros), best_z;
    std::vector<unsigned> counts(k, 0);
    double best = std::numeric_limits<double>::infinity();

    std::function<void(unsigned, double)> recurse = [&](unsigned col, double acc) {
        if (col == nc) {
            for (unsigned r = 0; r < k; ++r)
                if (counts[r] != inst.per_user) return;
            if (acc < best || (acc == best && detail::lex_less(z, best_z))) {
                best = acc;
                best_z = z;
            }
            return;
        }
        const unsigned remaining = nc - col - 1;
        for (std::uint32_t mask = 1; mask <= per_col; ++mask) {
            bool ok = true;
            for (unsigned r = 0; r < k && ok; ++r) {
                const unsigned cnt = counts[r] + ((mask >> r) & 1u);
                if (cnt > inst.per_user) ok = false;
                if (inst.per_user - cnt > remaining) ok = false;
            }
            if (!ok) continue;
            for (unsigned r = 0; r < k; ++r) {
                z(r, col) = (mask >> r) & 1u;
                counts[r] += (mask >> r) & 1u;
            }
            recurse(col + 1, acc + inst.column_cost(col, mask));
            for (unsigned r = 0; r < k; ++r) {
                counts[r] -= (mask >> r) & 1u;
                z(r, col) = 0;
            }
        }
    };
    recurse(0, 0.0);

    Assignment out;
    out.z = best_z;
    out.per_user = inst.per_user;
    out.objective = best;
    return out;
}

// Depth-first branch and bound over whole column subsets, pruned by the
// larger of two admissible bounds: the quota-blind sum of per-column minima
// and the coverage-blind sum of each row's cheapest remaining diagonal
// costs. Pruning is strict so all equal-cost optima stay reachable and the
// lexicographically smallest one is returned.
inline Assignment solve_branch_and_bound(const MilpInstance& inst,
                                         const arma::umat* warm_start = nullptr) {
    check_cardinality(inst.num_users, inst.num_subcarriers, inst.per_user);
    const unsigned k = inst.num_users;
    const unsigned nc = inst.num_subcarriers;
    if (k > 20) throw SolverError("solve_branch_and_bound: too many users");
    const std::uint32_t full = static_cast<std::uint32_t>((1ull << k) - 1);

    // per-column subset costs, ascending
    std::vector<std::vector<detail::SubsetCost>> subsets(nc);
    std::vector<double> col_min(nc);
    for (unsigned i = 0; i < nc; ++i) {
        subsets[i].reserve(full);
        for (std::uint32_t mask = 1; mask <= full; ++mask)
            subsets[i].push_back({mask, inst.column_cost(i, mask)});
        std::sort(subsets[i].begin(), subsets[i].end(),
                  [](const auto& a, const auto& b) {
                      return a.cost != b.cost ? a.cost < b.cost : a.mask < b.mask;
                  });
        col_min[i] = subsets[i].front().cost;
    }
    std::vector<double> col_suffix(nc + 1, 0.0);
    for (unsigned i = nc; i-- > 0;) col_suffix[i] = col_suffix[i + 1] + col_min[i];

    // row_prefix[r][j][n]: sum of the n smallest c(r, i) over columns i >= j
    std::vector<std::vector<std::vector<double>>> row_prefix(k);
    for (unsigned r = 0; r < k; ++r) {
        row_prefix[r].resize(nc + 1);
        for (unsigned j = 0; j <= nc; ++j) {
            std::vector<double> vals;
            for (unsigned i = j; i < nc; ++i) vals.push_back(inst.c(r, i));
            std::sort(vals.begin(), vals.end());
            std::vector<double> pre(vals.size() + 1, 0.0);
            for (size_t n = 0; n < vals.size(); ++n) pre[n + 1] = pre[n] + vals[n];
            row_prefix[r][j] = std::move(pre);
        }
    }

    double best = std::numeric_limits<double>::infinity();
    arma::umat best_z;
    if (warm_start) {
        best = inst.objective(*warm_start);
        best_z = *warm_start;
    }

    arma::umat z(k, nc, arma::fill::zeros);
    std::vector<unsigned> counts(k, 0);

    auto lower_bound = [&](unsigned col) {
        double row_bound = 0.0;
        for (unsigned r = 0; r < k; ++r)
            row_bound += row_prefix[r][col][inst.per_user - counts[r]];
        return std::max(col_suffix[col], row_bound);
    };

    std::function<void(unsigned, double)> recurse = [&](unsigned col, double acc) {
        if (col == nc) {
            if (acc < best || (acc == best && detail::lex_less(z, best_z))) {
                best = acc;
                best_z = z;
            }
            return;
        }
        const unsigned remaining = nc - col - 1;
        for (const auto& [mask, cost] : subsets[col]) {
            const double child = acc + cost;
            if (child + col_suffix[col + 1] > best) break;  // sorted by cost
            bool ok = true;
            for (unsigned r = 0; r < k && ok; ++r) {
                const unsigned cnt = counts[r] + ((mask >> r) & 1u);
                if (cnt > inst.per_user || inst.per_user - cnt > remaining)
                    ok = false;
            }
            if (!ok) continue;
            for (unsigned r = 0; r < k; ++r) {
                z(r, col) = (mask >> r) & 1u;
                counts[r] += (mask >> r) & 1u;
            }
            if (!(child + lower_bound(col + 1) > best))
                recurse(col + 1, child);
            for (unsigned r = 0; r < k; ++r) {
                counts[r] -= (mask >> r) & 1u;
                z(r, col) = 0;
            }
        }
    };
    recurse(0, 0.0);

    if (!best_z.n_elem)
        throw SolverError("solve_branch_and_bound: no feasible assignment found");
    Assignment out;
    out.z = best_z;
    out.per_user = inst.per_user;
    out.objective = best;
    return out;
}

// Uniform over feasible assignments: independent uniform K_c-subsets per
// row, rejected until every column is covered.
inline Assignment random_assignment(unsigned num_users, unsigned num_subcarriers,
                                    unsigned per_user, std::uint64_t seed) {
    check_cardinality(num_users, num_subcarriers, per_user);
    std::mt19937_64 rng(seed);
    std::vector<unsigned> idx(num_subcarriers);
    arma::umat z(num_users, num_subcarriers);
    constexpr std::uint64_t kMaxAttempts = 10'000'000;
    for (std::uint64_t attempt = 0; attempt < kMaxAttempts; ++attempt) {
        z.zeros();
        for (unsigned k = 0; k < num_users; ++k) {
            for (unsigned i = 0; i < num_subcarriers; ++i) idx[i] = i;
            for (unsigned t = 0; t < per_user; ++t) {
                std::uniform_int_distribution<unsigned> pick(t, num_subcarriers - 1);
                std::swap(idx[t], idx[pick(rng)]);
                z(k, idx[t]) = 1;
            }
        }
        bool covered = true;
        for (unsigned i = 0; i < num_subcarriers && covered; ++i)
            covered = arma::accu(z.col(i)) >= 1;
        if (covered) {
            Assignment out;
            out.z = z;
            out.per_user = per_user;
            return out;
        }
    }
    throw InfeasibleError("random_assignment: no covered draw within attempt budget");
}

// Callback evaluating the partial wave-domain fitting cost of a candidate
// user set on one subcarrier under the current phases.
using FitProbe =
    std::function<double(unsigned subcarrier, const std::vector<unsigned>& users)>;

// Channel-magnitude-ranked greedy assignment. Coverage pass first, then a
// sharing pass that admits a ranked candidate whenever the probe cost grows
// by at most threshold times the current per-subcarrier average, and a
// forced completion pass that tops unmet row quotas up on the cheapest
// subcarriers.
inline Assignment greedy_assignment(const std::vector<arma::cx_mat>& g,
                                    unsigned per_user, const FitProbe& probe,
                                    double threshold) {
    const unsigned nc = static_cast<unsigned>(g.size());
    const unsigned k = static_cast<unsigned>(g.front().n_rows);
    check_cardinality(k, nc, per_user);

    std::vector<std::vector<unsigned>> ranked(nc);
    for (unsigned i = 0; i < nc; ++i) {
        arma::vec peak(k);
        for (unsigned u = 0; u < k; ++u)
            peak[u] = arma::abs(g[i].row(u)).max();
        std::vector<unsigned> order(k);
        for (unsigned u = 0; u < k; ++u) order[u] = u;
        std::stable_sort(order.begin(), order.end(),
                         [&](unsigned a, unsigned b) { return peak[a] > peak[b]; });
        ranked[i] = std::move(order);
    }

    arma::umat z(k, nc, arma::fill::zeros);
    std::vector<unsigned> quota(k, per_user);
    std::vector<std::vector<unsigned>> users(nc);
    std::vector<double> cost(nc, 0.0);

    // coverage: the strongest user with remaining quota takes each subcarrier
    for (unsigned i = 0; i < nc; ++i) {
        for (unsigned u : ranked[i]) {
            if (!quota[u]) continue;
            z(u, i) = 1;
            --quota[u];
            users[i] = {u};
            cost[i] = probe(i, users[i]);
            break;
        }
    }
    double total = 0.0;
    for (unsigned i = 0; i < nc; ++i) total += cost[i];

    // sharing: admit further ranked users while the probe stays tame
    for (unsigned i = 0; i < nc; ++i) {
        for (unsigned u : ranked[i]) {
            if (z(u, i) || !quota[u]) continue;
            std::vector<unsigned> candidate = users[i];
            candidate.push_back(u);
            std::sort(candidate.begin(), candidate.end());
            const double with = probe(i, candidate);
            if (with - cost[i] <= threshold * (total / nc)) {
                z(u, i) = 1;
                --quota[u];
                total += with - cost[i];
                cost[i] = with;
                users[i] = std::move(candidate);
            }
        }
    }

    // forced completion: cheapest remaining subcarriers until quotas close
    for (unsigned u = 0; u < k; ++u) {
        while (quota[u]) {
            double best_inc = std::numeric_limits<double>::infinity();
            unsigned best_i = nc;
            std::vector<unsigned> best_set;
            for (unsigned i = 0; i < nc; ++i) {
                if (z(u, i)) continue;
                std::vector<unsigned> candidate = users[i];
                candidate.push_back(u);
                std::sort(candidate.begin(), candidate.end());
                const double inc = probe(i, candidate) - cost[i];
                if (inc < best_inc) {
                    best_inc = inc;
                    best_i = i;
                    best_set = std::move(candidate);
                }
            }
            if (best_i == nc)
                throw InfeasibleError("greedy_assignment: quota cannot be met");
            z(u, best_i) = 1;
            --quota[u];
            cost[best_i] += best_inc;
            users[best_i] = std::move(best_set);
        }
    }

    Assignment out;
    out.z = z;
    out.per_user = per_user;
    return out;
}

// Plain-text exchange format: "K N_c K_c" header, the c table (one row per
// user) and then one line of pair costs (p < q, lexicographic) per
// subcarrier.
inline std::string write_milp_instance(const MilpInstance& inst) {
    std::ostringstream os;
    os.precision(17);
    os << inst.num_users << " " << inst.num_subcarriers << " " << inst.per_user
       << "\n";
    for (unsigned p = 0; p < inst.num_users; ++p) {
        for (unsigned i = 0; i < inst.num_subcarriers; ++i)
            os << (i ? " " : "") << inst.c(p, i);
        os << "\n";
    }
    for (unsigned i = 0; i < inst.num_subcarriers; ++i) {
        bool first = true;
        for (unsigned p = 0; p < inst.num_users; ++p)
            for (unsigned q = p + 1; q < inst.num_users; ++q) {
                os << (first ? "" : " ") << inst.d[i](p, q);
                first = false;
            }
        os << "\n";
    }
    return os.str();
}

inline MilpInstance read_milp_instance(std::istream& in) {
    MilpInstance inst;
    if (!(in >> inst.num_users >> inst.num_subcarriers >> inst.per_user))
        throw ConfigError("milp instance: bad header");
    inst.c.set_size(inst.num_users, inst.num_subcarriers);
    inst.d.assign(inst.num_subcarriers,
                  arma::mat(inst.num_users, inst.num_users, arma::fill::zeros));
    for (unsigned p = 0; p < inst.num_users; ++p)
        for (unsigned i = 0; i < inst.num_subcarriers; ++i)
            if (!(in >> inst.c(p, i)))
                throw ConfigError("milp instance: truncated c table");
    for (unsigned i = 0; i < inst.num_subcarriers; ++i)
        for (unsigned p = 0; p < inst.num_users; ++p)
            for (unsigned q = p + 1; q < inst.num_users; ++q)
                if (!(in >> inst.d[i](p, q)))
                    throw ConfigError("milp instance: truncated d table");
    return inst;
}

}  // namespace simofdma
