#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include <json.hpp>

#include "greenfl/pareto.hpp"
#include "support.hpp"

using namespace greenfl;

namespace {

ParetoPoint make_point(ControlVector c, double g1, double g2) {
    ParetoPoint p;
    p.ctrl = c;
    p.g1 = g1;
    p.g2 = g2;
    return p;
}

const ParetoFront& default_front() {
    static const ParetoFront front = build_front(test::default_problem(50), 21);
    return front;
}

}  // namespace

TEST_CASE("dominance") {
    CHECK(dominates({1, 1}, {1, 2}));
    CHECK(dominates({1, 1}, {2, 2}));
    CHECK_FALSE(dominates({1, 1}, {1, 1}));
    CHECK_FALSE(dominates({1, 3}, {2, 2}));

    std::vector<ParetoPoint> pts{make_point({1, 1, 10, 20}, 1, 5), make_point({1, 2, 10, 20}, 2, 4),
                                 make_point({1, 3, 10, 20}, 3, 4.5), make_point({1, 1, 10, 20}, 1, 5),
                                 make_point({1, 4, 10, 20}, 4, 1)};
    auto kept = filter_nondominated(pts);
    REQUIRE(kept.size() == 3);
    CHECK(kept[0].ctrl.K == 1);
    CHECK(kept[1].ctrl.K == 2);
    CHECK(kept[2].ctrl.K == 4);
}

TEST_CASE("two-step front hits the anchors") {
    auto prob = test::default_problem(50);
    auto f = build_front(prob, 2);
    REQUIRE_FALSE(f.points.empty());
    double lo_g1 = INFINITY, lo_g2 = INFINITY;
    for (const auto& p : f.points) {
        lo_g1 = std::min(lo_g1, p.g1);
        lo_g2 = std::min(lo_g2, p.g2);
    }
    CHECK(lo_g1 <= 1.02 * f.anchors.x1.obj.g1);
    CHECK(lo_g2 <= 1.02 * f.anchors.x2.obj.g2);
    CHECK_THROWS(build_front(prob, 1));
}

TEST_CASE("front is a monotone non-dominated set") {
    const auto& f = default_front();
    REQUIRE(f.points.size() >= 5);
    auto pts = f.points;
    std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.g1 < b.g1; });
    for (std::size_t i = 1; i < pts.size(); ++i) CHECK(pts[i].g2 < pts[i - 1].g2);
    for (const auto& a : f.points)
        for (const auto& b : f.points) CHECK_FALSE(dominates({a.g1, a.g2}, {b.g1, b.g2}));

    CHECK(pts.front().g1 <= 1.02 * f.anchors.x1.obj.g1);
    CHECK(pts.back().g2 <= 1.02 * f.anchors.x2.obj.g2);
}

TEST_CASE("disagreement point") {
    auto prob = test::default_problem(50);
    CHECK(disagreement_point(prob) == ControlVector{30, 1, 2, 15});
    const auto& f = default_front();
    CHECK(std::isfinite(f.disagreement.g2));
    for (const auto& p : f.points) CHECK((p.g1 < f.disagreement.g1 || p.g2 < f.disagreement.g2));
}

TEST_CASE("bargaining and sum selections") {
    const auto& f = default_front();
    const auto nbs = nbs_point(f);
    const auto sum = sum_point(f);
    const auto product = [&](const ParetoPoint& p) {
        return (f.disagreement.g1 - p.g1) * (f.disagreement.g2 - p.g2);
    };
    bool nbs_member = false, sum_member = false;
    for (const auto& p : f.points) {
        nbs_member |= p.ctrl == nbs.ctrl;
        sum_member |= p.ctrl == sum.ctrl;
        if (p.g1 < f.disagreement.g1 && p.g2 < f.disagreement.g2) CHECK(product(nbs) >= product(p));
        CHECK(sum.g1 + sum.g2 <= p.g1 + p.g2);
    }
    CHECK(nbs_member);
    CHECK(sum_member);

    // the Nash product ranking is invariant under rescaling either axis
    for (double scale : {1e-3, 1e3}) {
        ParetoFront g = f;
        g.disagreement.g1 *= scale;
        for (auto& p : g.points) p.g1 *= scale;
        CHECK(nbs_point(g).ctrl == nbs.ctrl);
        ParetoFront h = f;
        h.disagreement.g2 *= scale;
        for (auto& p : h.points) p.g2 *= scale;
        CHECK(nbs_point(h).ctrl == nbs.ctrl);
    }
}

TEST_CASE("degenerate selections") {
    ParetoFront one;
    one.points.push_back(make_point({2, 3, 12, 20}, 5, 50));
    one.disagreement = {10, 100};
    one.disagreement_ctrl = {30, 1, 2, 15};
    CHECK(nbs_point(one).ctrl == ControlVector{2, 3, 12, 20});
    CHECK(sum_point(one).ctrl == ControlVector{2, 3, 12, 20});

    ParetoFront fail = one;
    fail.disagreement = {4, 100};
    CHECK(nbs_point(fail).ctrl == ControlVector{30, 1, 2, 15});
}

TEST_CASE("serialized front") {
    const auto& f = default_front();
    const std::string csv = front_csv(f, "00112233aabbccdd", 17);
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    CHECK(line == "zeta1,I,K,m,n,g1_joules,g2_rounds,s,residual,flagged,config_hash,seed");
    int rows = 0;
    while (std::getline(in, line)) {
        ++rows;
        CHECK(line.find(",00112233aabbccdd,17") != std::string::npos);
    }
    CHECK(rows == int(f.points.size() + f.excluded.size()));

    auto j = nlohmann::json::parse(front_json(f, "00112233aabbccdd", 17));
    CHECK(j["config_hash"] == "00112233aabbccdd");
    CHECK(j["seed"] == 17);
    CHECK(j["points"].size() == f.points.size());
    CHECK(j["disagreement"]["ctrl"]["I"] == 30);
}
