#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace truvrf {

// Error taxonomy. The CLI maps these onto process exit codes:
// invalid_input/format_error -> 2, infeasible_error -> 3, calibration_error -> 4.
struct invalid_input : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct format_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct infeasible_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct calibration_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Deterministic seed derivation. Every independent random stream in the
// toolkit is keyed by chaining mix_seed over (parent seed, salt...) so that
// runs are reproducible regardless of scheduling.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c);

// FNV-1a, used to turn short string tags into seed salts.
std::uint64_t tag_seed(const char* tag);

/// Deterministic RNG with platform-independent sampling shapes.
/// std::*_distribution is implementation-defined, so the few draws we need
/// are generated explicitly from the raw mt19937_64 stream.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1), full 53-bit mantissa.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Standard normal via Box-Muller; the second variate is cached.
    double normal();

    // Unbiased integer in [0, bound) by rejection.
    std::uint64_t below(std::uint64_t bound);

    std::vector<std::size_t> permutation(std::size_t n);

    // First k entries of a permutation of [0, n); order is the draw order.
    std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k);

    template <typename T>
    void shuffle(std::vector<T>& v) {
        if (v.size() < 2) return;
        for (std::size_t i = v.size() - 1; i > 0; --i) {
            std::size_t j = static_cast<std::size_t>(below(i + 1));
            std::swap(v[i], v[j]);
        }
    }

  private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// Worker count for parallel sections: TRUVRF_THREADS when set, otherwise the
// hardware concurrency. Results never depend on the worker count.
int resolve_worker_count();

// Runs fn(0..n-1) on up to `workers` threads (<=0 means resolve from the
// environment). Rethrows the first exception after all workers join.
void parallel_for(int n, int workers, const std::function<void(int)>& fn);

}  // namespace truvrf
