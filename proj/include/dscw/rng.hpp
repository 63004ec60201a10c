#pragma once
// Seeded random streams with hand-rolled transforms.
//
// Every stochastic routine in the library takes an explicit RandomStream so
// that whole runs reproduce bit-for-bit from one master seed.  Child streams
// are derived by mixing the master seed with a stream index (period,
// replication, unit) through a splitmix64 finalizer; transforms are written
// out here rather than delegated to std::* distributions, whose outputs are
// not pinned by the standard.

#include <cstdint>
#include <random>
#include <string_view>

namespace dscw {

// splitmix64 finalizer: bijective 64-bit mixing.
std::uint64_t mix64(std::uint64_t x);

// Independent child seed from a master seed and a stream index.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

// FNV-1a hash of a label, for label-invariant per-unit streams.
std::uint64_t hash_name(std::string_view name);

class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform on [0,1) with 53-bit resolution.
    double uniform01();

    // Uniform on [a,b).
    double uniform(double a, double b);

    // Standard normal via Box-Muller; the paired deviate is cached.
    double normal();
    double normal(double mean, double sd);

    // Poisson by inversion (sequential search); exact for small means.
    int poisson(double mean);

    // Uniform on {0,...,n-1}, rejection-corrected so every value is
    // exactly equally likely.
    std::size_t uniform_index(std::size_t n);

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace dscw
