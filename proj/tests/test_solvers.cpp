#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

#include "greenfl/solvers.hpp"
#include "support.hpp"

using namespace greenfl;

namespace {

double golden_min(const std::function<double(double)>& f, double a, double b, double tol = 1e-10) {
    constexpr double r = 0.6180339887498949;
    double c = b - r * (b - a), d = a + r * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tol) {
        if (fc <= fd) {
            b = d; d = c; fd = fc;
            c = b - r * (b - a); fc = f(c);
        } else {
            a = c; c = d; fc = fd;
            d = a + r * (b - a); fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

double newton_w(double x) {
    double w = 0.5;
    for (int i = 0; i < 100; ++i) w -= (w * std::exp(w) - x) / (std::exp(w) * (w + 1));
    return w;
}

double reduced_grid_min(const Problem& prob, const std::function<double(const Objectives&)>& key) {
    std::vector<int> ms, ns;
    for (int v = 8; v <= 16; ++v) ms.push_back(v);
    ms.push_back(32);
    for (int v = std::max(8, prob.n_min()); v <= 16; ++v) ns.push_back(v);
    ns.push_back(32);
    double best = INFINITY;
    for (int I = 1; I <= 10; ++I)
        for (int K = 1; K <= std::min(10, prob.bounds().K_max); ++K)
            for (int m : ms)
                for (int n : ns) best = std::min(best, key(prob.evaluate(ControlVector{I, K, m, n})));
    return best;
}

}  // namespace

TEST_CASE("cubic roots") {
    auto r = solve_cubic(1, -6, 11, -6);
    REQUIRE(r.size() == 3);
    CHECK(r[0] == doctest::Approx(1.0));
    CHECK(r[1] == doctest::Approx(2.0));
    CHECK(r[2] == doctest::Approx(3.0));

    // (I + 2)(I - 4)^2
    auto d = solve_cubic(1, -6, 0, 32);
    REQUIRE(d.size() == 3);
    CHECK(d[0] == doctest::Approx(-2.0));
    CHECK(d[1] == doctest::Approx(4.0).epsilon(1e-6));
    CHECK(d[2] == doctest::Approx(4.0).epsilon(1e-6));

    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> U(-20, 20);
    for (int t = 0; t < 1000; ++t) {
        const double a = U(rng), b = U(rng), c = U(rng), e = U(rng);
        for (double x : solve_cubic(a, b, c, e)) {
            const double scale = std::abs(a * x * x * x) + std::abs(b * x * x) + std::abs(c * x) + std::abs(e);
            CHECK(std::abs(((a * x + b) * x + c) * x + e) <= 1e-10 * scale);
        }
    }
}

TEST_CASE("stationary point of the cubic") {
    auto one = stationary_I({2.5, 0.0, -2.5});
    REQUIRE(one);
    CHECK(*one == doctest::Approx(1.0));
    CHECK_FALSE(stationary_I({1, 6, 32}));
    auto dbl = stationary_I({1, -6, 32});
    REQUIRE(dbl);
    CHECK(*dbl == doctest::Approx(4.0).epsilon(1e-6));
}

TEST_CASE("Lambert W") {
    CHECK(lambert_w(0.0) == 0.0);
    const double e_inv = -1.0 / std::numbers::e;
    CHECK(lambert_w(e_inv) == doctest::Approx(-1.0));
    CHECK(lambert_w(e_inv, LambertBranch::minus_one) == doctest::Approx(-1.0));
    CHECK(lambert_w(1.0) == doctest::Approx(0.5671432904).epsilon(1e-10));
    CHECK(lambert_w(1.0) == doctest::Approx(newton_w(1.0)).epsilon(1e-14));
    CHECK_THROWS_AS(lambert_w(-0.5), std::domain_error);
    CHECK_THROWS_AS(lambert_w(0.1, LambertBranch::minus_one), std::domain_error);

    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> U(0, 1);
    double worst0 = 0, worst1 = 0;
    for (int i = 0; i < 10000; ++i) {
        const double x0 = e_inv + U(rng) * (50.0 - e_inv);
        const double w0 = lambert_w(x0);
        worst0 = std::max(worst0, std::abs(w0 * std::exp(w0) - x0));
        const double x1 = e_inv * U(rng);
        if (x1 == 0.0) continue;
        const double w1 = lambert_w(x1, LambertBranch::minus_one);
        CHECK(w1 <= -1.0);
        worst1 = std::max(worst1, std::abs(w1 * std::exp(w1) - x1));
    }
    CHECK(worst0 <= 1e-12);
    CHECK(worst1 <= 1e-12);
}

TEST_CASE("energy-optimal local iterations") {
    auto prob = test::default_problem(50);
    for (double n : {15.0, 19.0, 26.0, 32.0}) {
        for (double m : {6.0, 12.0, 24.0}) {
            for (double K : {1.0, 5.0}) {
                auto r = optimal_I_energy(prob, K, m, n);
                REQUIRE_FALSE(std::isnan(r.raw));
                CHECK(r.residual <= 1e-6);
                const double oracle = golden_min([&](double I) { return prob.energy({I, K, m, n}); }, 1.0, 30.0);
                const double got = prob.energy({r.value, K, m, n});
                CHECK(got <= prob.energy({oracle, K, m, n}) * (1 + 1e-9));
            }
        }
    }
    double prev = INFINITY;
    for (int n = 15; n <= 32; ++n) {
        const double I = optimal_I_energy(prob, 1, 12, n).raw;
        CHECK(I < prev);
        prev = I;
    }
}

TEST_CASE("energy-optimal uplink precision") {
    auto prob = test::default_problem(50);
    for (double I : {1.0, 3.0}) {
        for (double n : {15.0, 20.0, 32.0}) {
            auto r = optimal_m_energy(prob, I, 1, n);
            REQUIRE_FALSE(r.fallback);
            auto t = transcendental_coeffs(prob, I, 1, n);
            CHECK(t.M_A > 0);
            CHECK(t.M_C > 0);
            CHECK(std::abs(t.residual(r.value)) <= 1e-6 * std::max(1.0, std::abs(r.value)));
            const auto g = [&](double m) { return prob.energy({I, 1, m, n}); };
            const double oracle = golden_min(g, 2.0, 32.0);
            CHECK(r.value == doctest::Approx(oracle).epsilon(1e-4));
            // unimodal: decreasing then increasing around the optimum
            for (double m = 2; m + 0.5 < r.value; m += 0.5) CHECK(g(m) > g(m + 0.5));
            for (double m = std::ceil(r.value); m + 0.5 <= 32; m += 0.5) CHECK(g(m) < g(m + 0.5));
        }
    }
}

TEST_CASE("energy-optimal training precision") {
    auto prob = test::default_problem(50);
    const int n = optimal_n_energy(prob, 1, 1, 11);
    for (int k = prob.n_min(); k <= 32; ++k) CHECK(prob.energy({1, 1, 11, double(n)}) <= prob.energy({1, 1, 11, double(k)}));
    Bounds narrow = prob.bounds();
    narrow.n_max = 24;
    narrow.n_min = 18;
    auto pn = prob.with_bounds(narrow);
    CHECK(prob.energy({1, 1, 11, double(n)}) <= pn.energy({1, 1, 11, double(optimal_n_energy(pn, 1, 1, 11))}));
}

TEST_CASE("energy minimizer") {
    for (int N : {10, 50}) {
        auto prob = test::default_problem(N);
        auto r = minimize_g1(prob);
        CHECK(r.converged);
        CHECK(r.ctrl.K == prob.bounds().K_min);
        CHECK(r.ctrl.n >= prob.n_min());
        const double grid = reduced_grid_min(prob, [](const Objectives& o) { return o.g1; });
        CHECK(r.obj.g1 <= 1.02 * grid);
    }
}

TEST_CASE("rounds minimizer") {
    for (int N : {10, 50}) {
        auto prob = test::default_problem(N);
        auto r = minimize_g2(prob);
        CHECK(r.ctrl.K == N);
        CHECK(r.ctrl.m == 32);
        CHECK(r.ctrl.n == 32);
        const double grid = reduced_grid_min(prob, [](const Objectives& o) { return o.g2; });
        CHECK(r.obj.g2 <= 1.02 * grid);
    }
    auto prob = test::default_problem(50);
    const auto& p = prob.params();
    const double G2 = p.G * p.G;
    const double rad = rounds_I_radicand(prob, 50, 32, 32);
    REQUIRE(rad > 0);
    const double I2 = rad;
    const double bm = p.beta * p.mu - 1;
    const double c = p.beta * p.beta / (bm * accuracy_margin(32, p, prob.arch()));
    const double numerator = p.sampling_variance() + 4 * G2 + 4 * p.L * p.Gamma - p.gamma / c;
    CHECK(I2 * (4 * G2 + 4 * G2 / 50) == doctest::Approx(numerator).epsilon(1e-9));
    // stationarity of g2 in I at the closed form
    const double I = std::sqrt(rad);
    const double h = 1e-4 * I;
    const double slope = (prob.rounds({I + h, 50, 32, 32}) - prob.rounds({I - h, 50, 32, 32})) / (2 * h);
    CHECK(std::abs(slope) <= 1e-6 * prob.rounds({I, 50, 32, 32}));
    double prev = -INFINITY;
    for (int n = 32; n >= prob.n_min(); --n) {
        const double v = rounds_I_radicand(prob, 50, 32, n);
        CHECK(v > prev);
        prev = v;
    }
}

TEST_CASE("rounding and repair") {
    auto prob = test::default_problem(50);
    const auto g1 = [&](const RelaxedControl& c) { return prob.energy(c); };
    const RelaxedControl x{1.4, 4.6, 11.5, 18.7};
    ControlVector best{};
    double best_v = INFINITY;
    for (int I : {1, 2})
        for (int K : {4, 5})
            for (int m : {11, 12})
                for (int n : {18, 19}) {
                    const double v = prob.energy(ControlVector{I, K, m, n});
                    if (v < best_v) {
                        best_v = v;
                        best = {I, K, m, n};
                    }
                }
    CHECK(round_and_repair(prob, x, g1) == best);
    CHECK(integer_neighbors(prob, x).size() == 16);

    const ControlVector integral{3, 7, 10, 20};
    CHECK(round_and_repair(prob, integral, g1) == integral);
    CHECK(round_and_repair(prob, RelaxedControl{2.2, 3.1, 9.5, 3.5}, g1).n >= prob.n_min());
}

TEST_CASE("box minimization") {
    const auto f = [](const RelaxedControl& c) {
        const double dm = c.m - 12, dn = c.n - 25;
        return (c.I - 3.3) * (c.I - 3.3) + 2 * (c.K - 7.1) * (c.K - 7.1) + dm * dm + dn * dn + 0.5 * dm * dn;
    };
    RelaxedControl lo{1, 1, 2, 15}, hi{30, 50, 32, 32}, x{1, 1, 2, 15};
    const double v = minimize_box(f, lo, hi, x);
    CHECK(x.I == doctest::Approx(3.3).epsilon(1e-3));
    CHECK(x.K == doctest::Approx(7.1).epsilon(1e-3));
    CHECK(x.m == doctest::Approx(12).epsilon(1e-3));
    CHECK(x.n == doctest::Approx(25).epsilon(1e-3));
    CHECK(v < 1e-5);

    // active bound
    RelaxedControl y{20, 20, 20, 20};
    RelaxedControl hi2{2, 50, 32, 32};
    minimize_box(f, lo, hi2, y);
    CHECK(y.I == doctest::Approx(2.0));
}

TEST_CASE("penalty subproblem endpoints and violation") {
    auto prob = test::default_problem(10);
    Anchors a{minimize_g1(prob), minimize_g2(prob)};
    NbiOptions opts;
    auto top = nbi_subproblem(prob, a, 1.0, opts, 1);
    CHECK(top.obj.g1 <= 1.02 * a.x1.obj.g1);
    auto bottom = nbi_subproblem(prob, a, 0.0, opts, 2);
    CHECK(bottom.obj.g2 <= 1.02 * a.x2.obj.g2);
    for (double zeta : {0.25, 0.5, 0.75}) {
        auto r = nbi_subproblem(prob, a, zeta, opts, 3);
        REQUIRE(r.violation.size() == opts.lambdas.size());
        for (std::size_t i = 1; i < r.violation.size(); ++i) CHECK(r.violation[i] <= r.violation[i - 1] + 1e-12);
        CHECK(r.violation.back() < 1e-3);
        CHECK(r.relaxed_residual < 1e-3);
    }
}
