#ifndef GREENFL_QUANTIZE_HPP
#define GREENFL_QUANTIZE_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace greenfl {

using Rng = std::mt19937_64;

/// Fixed-point precision: one integer bit plus (bits - 1) fractional bits.
/// Values live on the grid [-1, 1 - 2^(1-bits)] with resolution 2^(1-bits).
class PrecisionLevel {
public:
    static constexpr int kMinBits = 2;
    static constexpr int kMaxBits = 52;  // resolution must stay exact in a double

    explicit PrecisionLevel(int bits);

    [[nodiscard]] int bits() const noexcept { return bits_; }
    [[nodiscard]] double resolution() const noexcept { return std::ldexp(1.0, 1 - bits_); }

    auto operator<=>(const PrecisionLevel&) const = default;

private:
    int bits_;
};

struct QuantGrid {
    explicit QuantGrid(PrecisionLevel lvl) : level(lvl) {}
    explicit QuantGrid(int bits) : level(bits) {}

    PrecisionLevel level;

    [[nodiscard]] double kappa() const noexcept { return level.resolution(); }
    [[nodiscard]] double lo() const noexcept { return -1.0; }
    [[nodiscard]] double hi() const noexcept { return 1.0 - kappa(); }
    /// Largest grid point <= w, anchored at -1.
    [[nodiscard]] double floor_to_grid(double w) const noexcept;
    [[nodiscard]] bool on_grid(double w) const noexcept;
};

/// Stochastic rounding: returns floor_k(w) w.p. (floor_k(w) + k - w)/k, else floor_k(w) + k.
/// Throws std::domain_error when w is outside [-1, 1].
double quantize_scalar(double w, const QuantGrid& grid, Rng& rng);

std::vector<double> quantize_vector(std::span<const double> w, const QuantGrid& grid, Rng& rng);

std::vector<double> clip_unit(std::span<const double> w);
void clip_unit_inplace(std::span<double> w) noexcept;

struct NormalizedUpdate {
    std::vector<double> direction;
    double scale = 0.0;
};

/// d / ||d||_2 together with ||d||_2. The zero vector maps to (0, 0).
NormalizedUpdate normalize_update(std::span<const double> d);

}  // namespace greenfl

#endif
