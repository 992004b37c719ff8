#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace ans {

/// Seeded pseudorandom stream with platform-independent output.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard. The standard *distributions* are implementation-defined, so the
/// transforms below are written out explicitly:
///   uniform()   53 high bits of one draw scaled to [0, 1)
///   normal()    Box-Muller on two uniforms, second variate cached
///   below(n)    rejection sampling on the top bits (no modulo bias)
///
/// Independent consumers (initialization, shuffling, dropout masks, data
/// generation) take their own stream via `derive(label)`, so adding draws in
/// one consumer never shifts another.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t seed() const noexcept { return seed_; }

    /// Child stream keyed by (parent seed, label). Does not advance the parent.
    Rng derive(std::string_view label) const;
    Rng derive(std::uint64_t index) const;

    std::uint64_t next_u64() { return engine_(); }
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double normal();
    double normal(double mean, double stddev) { return mean + stddev * normal(); }
    std::uint64_t below(std::uint64_t n);
    bool bernoulli(double p) { return uniform() < p; }

    template <typename T>
    void shuffle(std::span<T> items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

    /// Identity permutation of [0, n) shuffled in place.
    std::vector<std::size_t> permutation(std::size_t n);

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// SplitMix64 finalizer; used to decorrelate derived seeds.
std::uint64_t mix64(std::uint64_t x) noexcept;

}  // namespace ans
