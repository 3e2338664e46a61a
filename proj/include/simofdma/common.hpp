#pragma once

#include <armadillo>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace simofdma {

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s
inline constexpr double kPi = 3.141592653589793238462643383279502884;

using cx = std::complex<double>;

// Error categories map onto the CLI exit codes (config=2, infeasible=3,
// solver=4).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InfeasibleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// splitmix64; used to derive independent seed streams from (seed, index)
// so parallel trials stay reproducible regardless of scheduling.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d4a2c62ed4d1ecULL;
    return x ^ (x >> 31);
}

inline std::uint64_t seed_stream(std::uint64_t seed, std::uint64_t index) {
    return splitmix64(seed ^ splitmix64(index + 1));
}

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

inline double dbm_to_watts(double dbm) { return 1e-3 * db_to_linear(dbm); }

}  // namespace simofdma
