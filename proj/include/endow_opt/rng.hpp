#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace endow_opt {

/// Philox4x32-10 counter-based generator (Salmon et al., Random123). Output is
/// a pure function of (counter, key), so any draw of any substream can be
/// addressed directly and parallel generation needs no shared state.
class Philox4x32 {
public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter block(Counter counter, Key key) noexcept;
};

/// Standard normal draws addressed by (seed, path, index). Normals 2m and 2m+1
/// come from one Box-Muller transform of Philox block m of substream `path`.
class NormalStream {
public:
    NormalStream(std::uint64_t seed, std::uint64_t path) noexcept;

    /// Fills out[0..n) with draws index0, index0 + 1, ...; index0 must be even.
    void fill(std::uint64_t index0, double* out, std::size_t n) const noexcept;

    double operator()(std::uint64_t index) const noexcept;

private:
    std::array<double, 2> pair(std::uint64_t block_index) const noexcept;

    Philox4x32::Key key_;
    std::uint32_t path_lo_;
    std::uint32_t path_hi_;
};

/// Identity of the generator + normal transform; recorded in every report.
inline constexpr std::string_view kRngIdentity = "philox4x32-10/box-muller/v1";

}  // namespace endow_opt
