#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "greenfl/flsim.hpp"
#include "greenfl/network.hpp"

using namespace greenfl;

TEST_CASE("path-loss gain") {
    CHECK(average_gain(0.0, 4.0) == 1.0);
    CHECK(average_gain(0.3, 4.0) == 1.0);
    CHECK(average_gain(1.0, 4.0) == 1.0);
    CHECK(average_gain(100.0, 4.0) == doctest::Approx(1e-8));
    CHECK(average_gain(20.0, 4.0) / average_gain(40.0, 4.0) == doctest::Approx(16.0));
}

TEST_CASE("uniform deployment") {
    auto dep = deploy_uniform(50, 500.0, 4.0, 9);
    REQUIRE(dep.positions.size() == 50);
    CHECK(dep.bs.x == 250.0);
    CHECK(dep.bs.y == 250.0);
    for (auto& p : dep.positions) {
        CHECK(p.x >= 0);
        CHECK(p.x <= 500);
        CHECK(p.y >= 0);
        CHECK(p.y <= 500);
    }
    auto again = deploy_uniform(50, 500.0, 4.0, 9);
    for (std::size_t k = 0; k < 50; ++k) {
        CHECK(again.positions[k].x == dep.positions[k].x);
        CHECK(again.positions[k].y == dep.positions[k].y);
    }
}

TEST_CASE("gain falls and uplink energy rises with distance") {
    auto dep = deploy_uniform(40, 500.0, 4.0, 3);
    auto links = link_specs(dep, 1e7, 0.1, dbm_per_hz_to_w_per_hz(-173));
    std::vector<std::size_t> order(links.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return dep.distance(a) < dep.distance(b); });
    ModelArch arch;
    for (std::size_t i = 1; i < order.size(); ++i) {
        const auto& near = links[order[i - 1]];
        const auto& far = links[order[i]];
        CHECK(far.avg_gain <= near.avg_gain);
        CHECK(uplink_rate(far) <= uplink_rate(near));
        CHECK(uplink_energy(12, arch, far) >= uplink_energy(12, arch, near));
    }
}

TEST_CASE("deploy_network matches the deployment pipeline") {
    const double N0 = dbm_per_hz_to_w_per_hz(-173);
    auto a = deploy_network(10, 500.0, 4.0, 5, 1e7, 0.1, N0);
    auto b = link_specs(deploy_uniform(10, 500.0, 4.0, 5), 1e7, 0.1, N0);
    CHECK(a == b);
}
