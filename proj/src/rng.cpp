#include "endow_opt/rng.hpp"

#include <cmath>
#include <numbers>

namespace endow_opt {
namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(product >> 32);
    lo = static_cast<std::uint32_t>(product);
}

// 53-bit uniform strictly inside (0, 1).
inline double to_open_unit(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 32) | lo;
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace

Philox4x32::Counter Philox4x32::block(Counter ctr, Key key) noexcept {
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kMul0, ctr[0], hi0, lo0);
        mulhilo(kMul1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kWeyl0;
        key[1] += kWeyl1;
    }
    return ctr;
}

NormalStream::NormalStream(std::uint64_t seed, std::uint64_t path) noexcept
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
      path_lo_(static_cast<std::uint32_t>(path)),
      path_hi_(static_cast<std::uint32_t>(path >> 32)) {}

std::array<double, 2> NormalStream::pair(std::uint64_t block_index) const noexcept {
    const Philox4x32::Counter ctr = {static_cast<std::uint32_t>(block_index),
                                     static_cast<std::uint32_t>(block_index >> 32), path_lo_,
                                     path_hi_};
    const auto bits = Philox4x32::block(ctr, key_);
    const double u1 = to_open_unit(bits[0], bits[1]);
    const double u2 = to_open_unit(bits[2], bits[3]);
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    return {radius * std::cos(angle), radius * std::sin(angle)};
}

void NormalStream::fill(std::uint64_t index0, double* out, std::size_t n) const noexcept {
    std::uint64_t block = index0 / 2;
    std::size_t i = 0;
    for (; i + 1 < n; i += 2, ++block) {
        const auto z = pair(block);
        out[i] = z[0];
        out[i + 1] = z[1];
    }
    if (i < n) out[i] = pair(block)[0];
}

double NormalStream::operator()(std::uint64_t index) const noexcept {
    return pair(index / 2)[index % 2];
}

}  // namespace endow_opt
