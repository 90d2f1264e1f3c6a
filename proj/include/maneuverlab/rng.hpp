#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace mlab {

/// Seeded random stream. Each named substream (e.g. "init", "sampling",
/// "dropout", "reparam") derives its own engine from the run seed, so
/// draws in one stream never shift another.
class Rng {
public:
    Rng(std::uint64_t seed, std::string_view stream);

    [[nodiscard]] double uniform();                       // [0, 1)
    [[nodiscard]] double uniform(double lo, double hi);
    [[nodiscard]] double normal();                        // N(0, 1)
    [[nodiscard]] std::size_t index(std::size_t n);       // uniform in [0, n)

    std::mt19937_64& engine() noexcept { return engine_; }

private:
    std::mt19937_64 engine_;
};

/// Mixes a run seed and a stream name into a 64-bit engine seed.
[[nodiscard]] std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream);

}  // namespace mlab
