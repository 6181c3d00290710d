#include "greenfl/quantize.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace greenfl {

PrecisionLevel::PrecisionLevel(int bits) : bits_(bits) {
    if (bits < kMinBits || bits > kMaxBits) {
        throw std::invalid_argument("precision level must be in [2, 52] bits, got " + std::to_string(bits));
    }
}

double QuantGrid::floor_to_grid(double w) const noexcept {
    const double k = kappa();
    // (w + 1) / k is exact for k = 2^-j, so the floor is exact too.
    const double j = std::floor((w + 1.0) / k);
    return std::min(-1.0 + j * k, hi());
}

bool QuantGrid::on_grid(double w) const noexcept {
    if (w < lo() || w > hi()) return false;
    const double j = (w + 1.0) / kappa();
    return j == std::floor(j);
}

double quantize_scalar(double w, const QuantGrid& grid, Rng& rng) {
    if (!(w >= -1.0 && w <= 1.0)) {
        throw std::domain_error("quantize_scalar: value outside [-1, 1] (missing clip?)");
    }
    const double k = grid.kappa();
    const double lo = grid.floor_to_grid(w);
    const double frac = (w - lo) / k;  // probability of rounding up
    if (frac <= 0.0) return lo;
    // The top cell (hi, 1] rounds up to the saturation value 1.0.
    const double u = std::generate_canonical<double, 53>(rng);
    return u < frac ? lo + k : lo;
}

std::vector<double> quantize_vector(std::span<const double> w, const QuantGrid& grid, Rng& rng) {
    std::vector<double> out(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) out[i] = quantize_scalar(w[i], grid, rng);
    return out;
}

std::vector<double> clip_unit(std::span<const double> w) {
    std::vector<double> out(w.begin(), w.end());
    clip_unit_inplace(out);
    return out;
}

void clip_unit_inplace(std::span<double> w) noexcept {
    for (auto& x : w) x = std::clamp(x, -1.0, 1.0);
}

NormalizedUpdate normalize_update(std::span<const double> d) {
    double ss = 0.0;
    for (double x : d) ss += x * x;
    NormalizedUpdate out;
    out.direction.assign(d.size(), 0.0);
    if (ss == 0.0) return out;
    out.scale = std::sqrt(ss);
    for (std::size_t i = 0; i < d.size(); ++i) out.direction[i] = std::clamp(d[i] / out.scale, -1.0, 1.0);
    return out;
}

}  // namespace greenfl
