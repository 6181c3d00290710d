#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "greenfl/convergence.hpp"
#include "greenfl/errors.hpp"
#include "support.hpp"

using namespace greenfl;

namespace {

ConvergenceParams uniform_params(int N, double sigma = 1.0) {
    ConvergenceParams p;
    p.beta = 2.0 / p.mu;
    p.sigma.assign(N, sigma);
    p.probs.assign(N, 1.0 / N);
    return p;
}

}  // namespace

TEST_CASE("quantization floor term") {
    ConvergenceParams p = uniform_params(4);
    ModelArch arch;
    CHECK(psi1(15, p, arch) == doctest::Approx(0.41e6 * 99.95 / std::pow(2.0, 30)));
    CHECK(psi1(15, p, arch) == doctest::Approx(0.03816).epsilon(1e-3));
    for (double n : {3.0, 10.0, 20.5}) CHECK(psi1(n, p, arch) / psi1(n + 1, p, arch) == doctest::Approx(4.0));
    CHECK(psi1(60, p, arch) < 1e-28);
}

TEST_CASE("variance term") {
    const int N = 8;
    ConvergenceParams p = uniform_params(N, 0.7);
    ModelArch arch;
    const double G2 = p.G * p.G;
    // I = 1, K = N, m large: only the sampling, 1/N and heterogeneity terms survive
    const double reduced = N * (0.7 * 0.7) / (N * N) + 4 * G2 / N + 4 * p.L * p.Gamma;
    CHECK(psi2({1, double(N), 50, 32}, p, arch) == doctest::Approx(reduced).epsilon(1e-9));

    const RelaxedControl c{1, 5, 12, 19};
    const double oracle = N * 0.49 / 64.0 + 0.0 + 4 * 0.41e6 * 1 * G2 / (5 * std::pow(2.0, 24)) + 4 * G2 / 5 +
                          4 * 0.097 * 0.6;
    CHECK(psi2(c, p, arch) == doctest::Approx(oracle).epsilon(1e-12));
    for (int K = 1; K < 8; ++K) CHECK(psi2({3, double(K + 1), 10, 20}, p, arch) < psi2({3, double(K), 10, 20}, p, arch));
    for (int m = 2; m < 32; ++m) CHECK(psi2({3, 4, double(m + 1), 20}, p, arch) < psi2({3, 4, double(m), 20}, p, arch));
}

TEST_CASE("convergence bound") {
    ConvergenceParams p = uniform_params(10);
    ModelArch arch;
    const RelaxedControl c{2, 3, 12, 18};
    const double bm = p.beta * p.mu - 1;
    const double floor = p.L * p.beta * psi1(18, p, arch) / (2 * bm);
    CHECK(convergence_bound(1e15, c, p, arch) == doctest::Approx(floor).epsilon(1e-9));
    double prev = INFINITY;
    for (double T = 1; T < 1e5; T *= 3) {
        const double b = convergence_bound(T, c, p, arch);
        CHECK(b < prev);
        prev = b;
    }
}

TEST_CASE("minimum precision") {
    ConvergenceParams p = uniform_params(50);
    ModelArch arch;
    const double arg = 0.097 * 40 * 0.41e6 * 99.95 / 0.2;
    CHECK(0.5 * std::log2(arg) == doctest::Approx(14.78).epsilon(1e-3));
    CHECK(min_precision(p, arch) == 15);
    CHECK(accuracy_margin(15, p, arch) > 0);
    CHECK(accuracy_margin(14, p, arch) <= 0);

    ConvergenceParams loose = p;
    loose.epsilon *= 4;
    CHECK(min_precision(loose, arch) == 14);
    loose.epsilon = 1e12;
    CHECK(min_precision(loose, arch) == 2);

    ConvergenceParams bad = p;
    bad.epsilon = -1;
    CHECK_THROWS_AS(min_precision(bad, arch), ConfigError);
}

TEST_CASE("inverse-variance sampling") {
    std::vector<double> equal(5, 0.3);
    for (double q : optimal_sampling(equal)) CHECK(q == doctest::Approx(0.2));
    std::vector<double> two{1.0, 2.0};
    auto p = optimal_sampling(two);
    CHECK(p[0] == doctest::Approx(0.8));
    CHECK(p[1] == doctest::Approx(0.2));

    std::vector<double> with_zero{1.0, 0.0, 2.0, 0.0};
    auto z = optimal_sampling(with_zero);
    CHECK(z == std::vector<double>{0.0, 0.5, 0.0, 0.5});

    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> U(0.2, 3.0);
    std::vector<double> sigma(6);
    for (auto& s : sigma) s = U(rng);
    auto best = optimal_sampling(sigma);
    double total = 0;
    for (double v : best) total += v;
    CHECK(total == doctest::Approx(1.0));
    const auto variance = [&](const std::vector<double>& q) {
        double v = 0;
        for (std::size_t k = 0; k < q.size(); ++k) v += q[k] * q[k] * sigma[k] * sigma[k];
        return v;
    };
    const double v_best = variance(best);
    std::exponential_distribution<double> E(1.0);
    int beaten = 0;
    for (int trial = 0; trial < 100000; ++trial) {
        std::vector<double> q(sigma.size());
        double s = 0;
        for (auto& x : q) s += (x = E(rng));
        for (auto& x : q) x /= s;
        beaten += variance(q) < v_best - 1e-15;
    }
    CHECK(beaten == 0);
}

TEST_CASE("rounds to accuracy") {
    ConvergenceParams p = uniform_params(10);
    ModelArch arch;
    CHECK_THROWS_AS(g2_rounds({1, 1, 12, 14}, p, arch), InfeasibleError);
    for (double I : {1.0, 4.0, 9.0}) {
        for (double K : {1.0, 5.0}) {
            for (double n : {15.0, 18.0, 32.0}) {
                const RelaxedControl c{I, K, 11, n};
                const double T = g2_rounds(c, p, arch);
                CHECK(convergence_bound(T, c, p, arch) == doctest::Approx(p.epsilon).epsilon(1e-9));
            }
        }
    }
    // T_min corner: K = N, m = n = 32 minimize rounds on a grid scan
    const double corner = g2_rounds({1, 10, 32, 32}, p, arch);
    for (int K = 1; K <= 10; ++K) {
        for (int m = 2; m <= 32; m += 3) {
            for (int n = 15; n <= 32; n += 2) CHECK(g2_rounds({1, double(K), double(m), double(n)}, p, arch) >= corner);
        }
    }
}

TEST_CASE("energy objective") {
    auto prob = test::default_problem(10);
    const auto& p = prob.params();
    const RelaxedControl c{2, 3, 12, 18};
    const double direct = g1_energy(c, p, prob.arch(), prob.chip(), prob.links());
    CHECK(prob.energy(c) == doctest::Approx(direct).epsilon(1e-12));
    // linear in K at fixed T
    const double T = g2_rounds(c, p, prob.arch());
    double prev = 0, step = 0;
    for (int K = 1; K <= 10; ++K) {
        RelaxedControl ck = c;
        ck.K = K;
        const double e = T * prob.round_energy(ck);
        if (K > 1) {
            if (K > 2) CHECK(e - prev == doctest::Approx(step).epsilon(1e-12));
            step = e - prev;
        }
        prev = e;
    }
    CHECK(prob.energy({1, 1, 12, 14}) == INFINITY);
    auto o = prob.evaluate(c);
    CHECK(o.g2 == doctest::Approx(T));
    CHECK(o.g1 == doctest::Approx(direct));
}

TEST_CASE("problem validation") {
    auto prob = test::default_problem(10);
    CHECK(prob.n_min() == 15);
    CHECK(prob.bounds().n_min == 15);
    Bounds b = prob.bounds();
    b.K_max = 11;
    CHECK_THROWS_AS((void)prob.with_bounds(b), ConfigError);

    ConvergenceParams p = prob.params();
    p.beta = 10;  // beta mu = 0.5
    CHECK_THROWS_AS(Problem(p, prob.arch(), prob.chip(), prob.links(), prob.bounds()), ConfigError);

    ConvergenceParams tight = prob.params();
    tight.epsilon = 1e-12;
    CHECK_THROWS_AS(Problem(tight, prob.arch(), prob.chip(), prob.links(), prob.bounds()), InfeasibleError);
}

TEST_CASE("bounds and levels") {
    Bounds b;
    b.m_levels = {32, 8, 9, 8, 40};
    CHECK(b.levels_m() == std::vector<int>{8, 9, 32});
    CHECK(b.contains({1, 1, 9, 20}));
    CHECK_FALSE(b.contains({1, 1, 10, 20}));
    CHECK_FALSE(b.contains({31, 1, 9, 20}));
    CHECK(ControlVector{1, 5, 12, 19}.to_string() == "(1,5,12,19)");
}
