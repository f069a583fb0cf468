#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace mvcone {

/// Separates independent uses of one seed so that, e.g., the SAA sample
/// set never shares draws with the Monte Carlo paths.
enum class StreamDomain : std::uint32_t {
    simulation = 0,
    saa = 1,
    diagnostics = 2,
};

/// Philox4x32-10 counter-based generator. A stream is fully determined by
/// (seed, path, period, domain); no state is shared between streams, so
/// paths can be generated in any order or in parallel with identical
/// results. Satisfies UniformRandomBitGenerator.
class CounterStream {
public:
    using result_type = std::uint32_t;

    CounterStream(std::uint64_t seed, std::uint64_t path, std::uint32_t period,
                  StreamDomain domain = StreamDomain::simulation) noexcept;

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept;

    /// Uniform on the open interval (0, 1) with 53 random bits.
    double uniform() noexcept;

private:
    void refill() noexcept;

    std::array<std::uint32_t, 2> key_;
    std::array<std::uint32_t, 4> counter_;
    std::array<std::uint32_t, 4> buffer_{};
    unsigned next_ = 4;
};

/// Raw Philox4x32-10 block function, exposed for known-answer tests.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key) noexcept;

}  // namespace mvcone
