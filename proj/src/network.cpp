#include "greenfl/network.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace greenfl {

double Deployment::distance(std::size_t k) const noexcept {
    return std::hypot(positions[k].x - bs.x, positions[k].y - bs.y);
}

Deployment deploy_uniform(int num_devices, double area_m, double pathloss_exp, uint64_t seed) {
    if (num_devices < 1) throw std::invalid_argument("network.N must be >= 1");
    if (!(area_m > 0)) throw std::invalid_argument("network.area_m must be positive");
    if (!(pathloss_exp > 0)) throw std::invalid_argument("network.pathloss_exp must be positive");

    Deployment dep;
    dep.area_m = area_m;
    dep.pathloss_exp = pathloss_exp;
    dep.seed = seed;
    dep.bs = {area_m / 2, area_m / 2};
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> coord(0.0, area_m);
    dep.positions.reserve(num_devices);
    for (int k = 0; k < num_devices; ++k) {
        const double x = coord(rng);
        const double y = coord(rng);
        dep.positions.push_back({x, y});
    }
    return dep;
}

double average_gain(double distance_m, double pathloss_exp, double ref_distance_m) noexcept {
    return std::pow(std::max(distance_m, ref_distance_m), -pathloss_exp);
}

std::vector<LinkSpec> link_specs(const Deployment& dep, double bandwidth_hz, double tx_power_w,
                                 double noise_psd_w_per_hz, double ref_distance_m) {
    std::vector<LinkSpec> out;
    out.reserve(dep.positions.size());
    for (std::size_t k = 0; k < dep.positions.size(); ++k) {
        LinkSpec l;
        l.bandwidth_hz = bandwidth_hz;
        l.tx_power_w = tx_power_w;
        l.noise_psd_w_per_hz = noise_psd_w_per_hz;
        l.avg_gain = average_gain(dep.distance(k), dep.pathloss_exp, ref_distance_m);
        out.push_back(l);
    }
    return out;
}

}  // namespace greenfl
