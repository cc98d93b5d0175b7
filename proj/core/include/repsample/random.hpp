#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace repsample {

using Seed = std::uint64_t;

/// Mixes a parent seed with a stream index into an independent child seed
/// (splitmix64 finalizer). Used for restarts, per-k fits and harness runs.
Seed derive_seed(Seed parent, std::uint64_t stream) noexcept;
Seed derive_seed(Seed parent, std::initializer_list<std::uint64_t> path) noexcept;

/// Seeded generator whose outputs are identical on every platform.
///
/// std::mt19937_64 is fully specified by the standard, but the std
/// distributions are not, so the few we need are implemented here.
class Rng {
public:
    explicit Rng(Seed seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform();

    /// Uniform integer in [0, bound) without modulo bias. bound must be > 0.
    std::uint64_t below(std::uint64_t bound);

    /// Standard normal via Box-Muller.
    double normal();

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace repsample
