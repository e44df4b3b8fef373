#pragma once

#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <random>

namespace eofc {

/// Independent random sub-streams used by a single trial.
enum class StreamPurpose : std::uint64_t {
    data = 1,
    phase_noise = 2,
    additive_noise = 3,
    test = 99,
};

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

}  // namespace detail

/// A keyed random stream. Two streams built from the same (seed, key path)
/// produce identical sequences; any difference in the key path yields an
/// unrelated sequence. Not thread-safe: give every worker its own stream.
class RandomStream {
public:
    using engine_type = std::mt19937_64;

    explicit RandomStream(std::uint64_t seed) : RandomStream(seed, {}) {}

    RandomStream(std::uint64_t seed, std::initializer_list<std::uint64_t> path)
        : key_(mix_path(seed, path)) {
        reseed();
    }

    /// Child stream keyed by an extra path component; the parent is untouched.
    RandomStream derive(std::uint64_t component) const {
        RandomStream child(*this);
        child.key_ = detail::splitmix64(key_ ^ detail::splitmix64(component + 0x632BE59BD9B4E019ULL));
        child.reseed();
        return child;
    }

    RandomStream derive(StreamPurpose purpose) const {
        return derive(static_cast<std::uint64_t>(purpose));
    }

    std::uint64_t key() const noexcept { return key_; }

    double normal() { return normal_(engine_); }

    /// Uniform on [lo, hi).
    double uniform(double lo, double hi) {
        return lo + (hi - lo) * std::generate_canonical<double, 53>(engine_);
    }

    /// Uniform phase on [-pi, pi).
    double uniform_phase() { return uniform(-std::numbers::pi, std::numbers::pi); }

    std::uint64_t bits() { return engine_(); }

    engine_type& engine() noexcept { return engine_; }

private:
    static std::uint64_t mix_path(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
        std::uint64_t k = detail::splitmix64(seed);
        for (auto c : path) k = detail::splitmix64(k ^ detail::splitmix64(c + 0x632BE59BD9B4E019ULL));
        return k;
    }

    void reseed() {
        std::seed_seq seq{static_cast<std::uint32_t>(key_), static_cast<std::uint32_t>(key_ >> 32)};
        engine_.seed(seq);
        normal_.reset();
    }

    std::uint64_t key_;
    engine_type engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace eofc
