#include "mvcone/random.hpp"

namespace mvcone {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) noexcept {
    const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(product >> 32);
    lo = static_cast<std::uint32_t>(product);
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                           std::array<std::uint32_t, 2> key) noexcept {
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            key[0] += kWeyl0;
            key[1] += kWeyl1;
        }
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kMul0, ctr[0], hi0, lo0);
        mulhilo(kMul1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
}

CounterStream::CounterStream(std::uint64_t seed, std::uint64_t path, std::uint32_t period,
                             StreamDomain domain) noexcept
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
      counter_{0u,
               (period & 0x00FFFFFFu) | (static_cast<std::uint32_t>(domain) << 24),
               static_cast<std::uint32_t>(path), static_cast<std::uint32_t>(path >> 32)} {}

void CounterStream::refill() noexcept {
    buffer_ = philox4x32_10(counter_, key_);
    ++counter_[0];
    next_ = 0;
}

CounterStream::result_type CounterStream::operator()() noexcept {
    if (next_ == 4) refill();
    return buffer_[next_++];
}

double CounterStream::uniform() noexcept {
    const std::uint64_t hi = (*this)() >> 5;  // 27 bits
    const std::uint64_t lo = (*this)() >> 6;  // 26 bits
    const double u53 = static_cast<double>((hi << 26) | lo);
    return (u53 + 0.5) * 0x1.0p-53;
}

}  // namespace mvcone
