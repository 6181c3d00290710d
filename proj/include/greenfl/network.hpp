#ifndef GREENFL_NETWORK_HPP
#define GREENFL_NETWORK_HPP

#include <cstdint>
#include <vector>

#include "greenfl/energy.hpp"

namespace greenfl {

struct Point2 {
    double x = 0;
    double y = 0;
};

/// Devices dropped uniformly in a square with the base station at its center.
struct Deployment {
    std::vector<Point2> positions;
    Point2 bs;
    double area_m = 500.0;
    double pathloss_exp = 4.0;
    uint64_t seed = 0;

    [[nodiscard]] double distance(std::size_t k) const noexcept;
};

Deployment deploy_uniform(int num_devices, double area_m, double pathloss_exp, uint64_t seed);

/// Average power gain max(dist, ref)^-exp.
double average_gain(double distance_m, double pathloss_exp, double ref_distance_m = 1.0) noexcept;

std::vector<LinkSpec> link_specs(const Deployment& dep, double bandwidth_hz, double tx_power_w,
                                 double noise_psd_w_per_hz, double ref_distance_m = 1.0);

}  // namespace greenfl

#endif
