#include "greenfl/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

#include "greenfl/errors.hpp"

namespace greenfl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
const double kLn4 = std::log(4.0);

double pow4(double x) noexcept { return std::exp2(2.0 * x); }

// beta^2 / ((beta mu - 1) * margin(n)), so that g2 = (c psi2 - gamma) / I
double rounds_scale(const Problem& prob, double n) noexcept {
    const auto& p = prob.params();
    return p.beta * p.beta / ((p.beta * p.mu - 1.0) * accuracy_margin(n, p, prob.arch()));
}

double polish_cubic_root(double a, double b, double c, double d, double x) noexcept {
    for (int it = 0; it < 4; ++it) {
        const double f = ((a * x + b) * x + c) * x + d;
        const double df = (3.0 * a * x + 2.0 * b) * x + c;
        if (df == 0.0) break;
        const double step = f / df;
        if (!std::isfinite(step)) break;
        x -= step;
        if (std::abs(step) <= 1e-16 * std::max(1.0, std::abs(x))) break;
    }
    return x;
}

}  // namespace

double TranscendentalCoeffs::residual(double m) const noexcept { return m - M_A * pow4(m) - M_B; }

std::vector<double> solve_cubic(double a, double b, double c, double d) {
    std::vector<double> roots;
    const double scale = std::max({std::abs(a), std::abs(b), std::abs(c), std::abs(d)});
    if (scale == 0.0) return roots;
    if (std::abs(a) <= 1e-14 * scale) {
        if (std::abs(b) <= 1e-14 * scale) {
            if (c != 0.0) roots.push_back(-d / c);
            return roots;
        }
        const double disc = c * c - 4.0 * b * d;
        if (disc < 0) return roots;
        const double q = -0.5 * (c + std::copysign(std::sqrt(disc), c));
        if (q != 0.0) roots.push_back(d / q);
        roots.push_back(q / b);
        if (q == 0.0) roots.push_back(0.0);
        std::sort(roots.begin(), roots.end());
        return roots;
    }

    const double B = b / a, C = c / a, D = d / a;
    const double p = C - B * B / 3.0;
    const double q = 2.0 * B * B * B / 27.0 - B * C / 3.0 + D;
    const double shift = -B / 3.0;
    const double disc = 0.25 * q * q + p * p * p / 27.0;

    if (p == 0.0 && q == 0.0) {
        roots.push_back(shift);
    } else if (disc > 0.0) {
        const double s = std::sqrt(disc);
        roots.push_back(std::cbrt(-0.5 * q + s) + std::cbrt(-0.5 * q - s) + shift);
    } else {
        // three real roots
        const double r = 2.0 * std::sqrt(-p / 3.0);
        const double arg = std::clamp(3.0 * q / (p * r), -1.0, 1.0);
        const double phi = std::acos(arg) / 3.0;
        for (int k = 0; k < 3; ++k) roots.push_back(r * std::cos(phi - 2.0 * std::numbers::pi * k / 3.0) + shift);
    }
    for (double& x : roots) x = polish_cubic_root(a, b, c, d, x);
    std::sort(roots.begin(), roots.end());
    return roots;
}

CubicCoeffs cubic_coeffs(const Problem& prob, double K, double m, double n) {
    const auto& p = prob.params();
    const double d = prob.arch().params;
    const double G2 = p.G * p.G;
    const double c = rounds_scale(prob, n);
    const double U = prob.uplink_energy_per_bit() * m;
    const double C = prob.iteration_energy(n);
    // c psi2 - gamma = a2 I^2 + a1 I + a0
    const double a2 = c * (4.0 * G2 + 4.0 * G2 / K);
    const double a1 = c * (4.0 * d * G2 / (K * pow4(m)) - 8.0 * G2);
    const double a0 = c * (p.sampling_variance() + 4.0 * p.L * p.Gamma + 4.0 * G2) - p.gamma;
    const double s = K / c;
    return {s * 2.0 * a2 * C, s * (a2 * U + a1 * C), -s * a0 * U};
}

TranscendentalCoeffs transcendental_coeffs(const Problem& prob, double I, double K, double n) {
    const auto& p = prob.params();
    const double d = prob.arch().params;
    const double G2 = p.G * p.G;
    const double c = rounds_scale(prob, n);
    const double a = p.sampling_variance() + 4.0 * (I - 1.0) * (I - 1.0) * G2 + 4.0 * I * I * G2 / K + 4.0 * p.L * p.Gamma;
    TranscendentalCoeffs t;
    t.M_C = prob.uplink_energy_per_bit();
    t.M_A = K * (a - p.gamma / c) / (4.0 * d * I * G2 * kLn4);
    t.M_B = 1.0 / kLn4 - I * prob.iteration_energy(n) / t.M_C;
    return t;
}

double lambert_w(double x, LambertBranch branch) {
    constexpr double inv_e = 1.0 / std::numbers::e;
    if (std::isnan(x)) throw std::domain_error("lambert_w: NaN argument");
    if (x < -inv_e) {
        if (x < -inv_e - 1e-15) throw std::domain_error("lambert_w: argument below -1/e");
        x = -inv_e;
    }
    if (branch == LambertBranch::minus_one && x >= 0.0) throw std::domain_error("lambert_w: W_-1 needs x < 0");
    if (x == -inv_e) return -1.0;
    if (x == 0.0) return 0.0;

    double w;
    if (x < -0.25) {
        const double p = std::sqrt(2.0 * (std::numbers::e * x + 1.0));
        const double sgn = branch == LambertBranch::principal ? 1.0 : -1.0;
        w = -1.0 + sgn * p - p * p / 3.0 + sgn * 11.0 / 72.0 * p * p * p;
    } else if (branch == LambertBranch::minus_one) {
        const double l1 = std::log(-x);
        const double l2 = std::log(-l1);
        w = l1 - l2 + l2 / l1;
    } else if (x < 3.0) {
        w = std::log1p(x);
    } else {
        const double l1 = std::log(x);
        const double l2 = std::log(l1);
        w = l1 - l2 + l2 / l1;
    }

    for (int it = 0; it < 100; ++it) {
        const double ew = std::exp(w);
        const double f = w * ew - x;
        const double wp1 = w + 1.0;
        if (wp1 == 0.0) break;
        const double step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1));
        if (!std::isfinite(step)) break;
        w -= step;
        if (std::abs(step) <= 4e-16 * (1.0 + std::abs(w))) break;
    }
    return w;
}

std::optional<double> stationary_I(const CubicCoeffs& h) {
    std::optional<double> best;
    for (double root : solve_cubic(h.H1, h.H2, 0.0, h.H3)) {
        if (!(root > 0)) continue;
        const double curvature = 6.0 * h.H1 * root + 2.0 * h.H2;
        if (!best || curvature > 0) best = root;
    }
    return best;
}

RootResult optimal_I_energy(const Problem& prob, double K, double m, double n) {
    const auto& b = prob.bounds();
    const CubicCoeffs h = cubic_coeffs(prob, K, m, n);
    RootResult r;
    r.raw = std::numeric_limits<double>::quiet_NaN();
    if (const auto root = stationary_I(h)) {
        r.raw = *root;
        r.residual = std::abs(h.residual(*root)) / std::max(std::abs(h.H1), std::abs(h.H3));
        r.value = std::clamp(*root, double(b.I_min), double(b.I_max));
        return r;
    }
    const auto g1 = [&](double I) { return prob.energy({I, K, m, n}); };
    r.fallback = true;
    r.value = g1(b.I_min) <= g1(b.I_max) ? b.I_min : b.I_max;
    return r;
}

RootResult optimal_m_energy(const Problem& prob, double I, double K, double n) {
    const auto& b = prob.bounds();
    const double lo = b.m_min, hi = b.m_max;
    const auto g1 = [&](double m) { return prob.energy({I, K, m, n}); };
    const TranscendentalCoeffs t = transcendental_coeffs(prob, I, K, n);

    RootResult r;
    r.raw = std::numeric_limits<double>::quiet_NaN();
    r.value = g1(lo) <= g1(hi) ? lo : hi;
    r.fallback = true;
    double best = g1(r.value);
    if (!(t.M_A > 0)) return r;

    const double z = -t.M_A * kLn4 * std::exp(t.M_B * kLn4);
    if (!(z >= -1.0 / std::numbers::e) || z == 0.0) return r;
    for (auto branch : {LambertBranch::minus_one, LambertBranch::principal}) {
        const double m = t.M_B - lambert_w(z, branch) / kLn4;
        if (!std::isfinite(m)) continue;
        if (std::isnan(r.raw)) {
            r.raw = m;
            r.residual = std::abs(t.residual(m)) / std::max({std::abs(m), std::abs(t.M_B), 1.0});
        }
        if (m < lo || m > hi) continue;
        const double v = g1(m);
        if (v <= best) {
            best = v;
            r.value = m;
            r.raw = m;
            r.residual = std::abs(t.residual(m)) / std::max({std::abs(m), std::abs(t.M_B), 1.0});
            r.fallback = false;
        }
    }
    return r;
}

int optimal_n_energy(const Problem& prob, double I, double K, double m) {
    int best_n = prob.bounds().levels_n().back();
    double best = kInf;
    for (int n : prob.bounds().levels_n()) {
        const double v = prob.energy({I, K, m, double(n)});
        if (v < best) {
            best = v;
            best_n = n;
        }
    }
    return best_n;
}

SolveResult minimize_g1(const Problem& prob, double eps_uto, int max_iters) {
    const auto& b = prob.bounds();
    RelaxedControl x{double(b.I_min), double(b.K_min), double(b.levels_m().back()), double(b.levels_n().back())};
    SolveResult res;
    res.converged = false;
    for (int it = 1; it <= max_iters; ++it) {
        const RootResult ri = optimal_I_energy(prob, x.K, x.m, x.n);
        const RootResult rm = optimal_m_energy(prob, ri.value, x.K, x.n);
        const int n = optimal_n_energy(prob, ri.value, x.K, rm.value);
        const double step = std::sqrt((x.I - ri.value) * (x.I - ri.value) + (x.m - rm.value) * (x.m - rm.value) +
                                      (x.n - n) * (x.n - n));
        x.I = ri.value;
        x.m = rm.value;
        x.n = n;
        res.iterations = it;
        res.fallback = ri.fallback || rm.fallback;
        if (step <= eps_uto) {
            res.converged = true;
            break;
        }
    }
    res.relaxed = x;
    res.ctrl = round_and_repair(prob, x, [&](const RelaxedControl& c) { return prob.energy(c); });
    res.obj = prob.evaluate(res.ctrl);
    return res;
}

double rounds_I_radicand(const Problem& prob, double K, double /*m*/, double n) {
    const auto& p = prob.params();
    const double G2 = p.G * p.G;
    const double c = rounds_scale(prob, n);
    return (p.sampling_variance() + 4.0 * G2 + 4.0 * p.L * p.Gamma - p.gamma / c) / (4.0 * G2 + 4.0 * G2 / K);
}

SolveResult minimize_g2(const Problem& prob) {
    const auto& b = prob.bounds();
    SolveResult res;
    res.iterations = 1;
    RelaxedControl x{double(b.I_min), double(b.K_max), double(b.levels_m().back()), double(b.levels_n().back())};
    const auto g2 = [&](const RelaxedControl& c) { return prob.rounds(c); };
    const double radicand = rounds_I_radicand(prob, x.K, x.m, x.n);
    if (radicand > 0) {
        x.I = std::clamp(std::sqrt(radicand), double(b.I_min), double(b.I_max));
        res.relaxed = x;
        res.ctrl = round_and_repair(prob, x, g2);
    } else {
        res.fallback = true;
        double best = kInf;
        for (int I = b.I_min; I <= b.I_max; ++I) {
            const RelaxedControl c{double(I), x.K, x.m, x.n};
            if (const double v = g2(c); v < best) {
                best = v;
                x.I = I;
            }
        }
        res.relaxed = x;
        res.ctrl = ControlVector{int(x.I), int(x.K), int(x.m), int(x.n)};
    }
    res.obj = prob.evaluate(res.ctrl);
    return res;
}

namespace {

std::array<int, 2> adjacent_levels(const std::vector<int>& levels, double v) {
    auto above = std::lower_bound(levels.begin(), levels.end(), v - 1e-9);
    if (above == levels.end()) return {levels.back(), levels.back()};
    if (std::abs(*above - v) <= 1e-9) return {*above, *above};
    if (above == levels.begin()) return {*above, *above};
    return {*std::prev(above), *above};
}

}  // namespace

std::vector<ControlVector> integer_neighbors(const Problem& prob, const RelaxedControl& x) {
    const auto& b = prob.bounds();
    const auto snap = [](double v, int lo, int hi) -> std::array<int, 2> {
        const double r = std::round(v);
        if (std::abs(v - r) <= 1e-9) {
            const int i = std::clamp(int(r), lo, hi);
            return {i, i};
        }
        return {std::clamp(int(std::floor(v)), lo, hi), std::clamp(int(std::ceil(v)), lo, hi)};
    };
    const auto Is = snap(x.I, b.I_min, b.I_max);
    const auto Ks = snap(x.K, b.K_min, b.K_max);
    const auto ms = adjacent_levels(b.levels_m(), x.m);
    const auto ns = adjacent_levels(b.levels_n(), x.n);
    std::vector<ControlVector> out;
    for (int I : Is)
        for (int K : Ks)
            for (int m : ms)
                for (int n : ns) out.push_back({I, K, m, n});
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

ControlVector round_and_repair(const Problem& prob, const RelaxedControl& x, const Objective& objective) {
    RelaxedControl y = x;
    for (int attempt = 0; attempt < 2; ++attempt) {
        ControlVector best{};
        double best_v = kInf;
        for (const auto& c : integer_neighbors(prob, y)) {
            if (c.n < prob.n_min()) continue;
            const double v = objective(c);
            if (v < best_v) {
                best_v = v;
                best = c;
            }
        }
        if (std::isfinite(best_v)) return best;
        y.n = std::max(y.n, double(prob.bounds().levels_n().front()));
    }
    throw InfeasibleError("no feasible integer neighbour");
}

double minimize_box(const Objective& f, const RelaxedControl& lo, const RelaxedControl& hi, RelaxedControl& x,
                    const BoxOptions& opts) {
    using Vec = std::array<double, 4>;
    Vec span{};
    std::vector<int> free_dims;
    for (int i = 0; i < 4; ++i) {
        span[i] = hi[i] - lo[i];
        if (span[i] > 0) free_dims.push_back(i);
    }
    const auto to_ctrl = [&](const Vec& t) {
        RelaxedControl c;
        for (int i = 0; i < 4; ++i) c[i] = lo[i] + std::clamp(t[i], 0.0, 1.0) * span[i];
        return c;
    };
    const auto eval = [&](const Vec& t) { return f(to_ctrl(t)); };

    Vec t{};
    for (int i = 0; i < 4; ++i) t[i] = span[i] > 0 ? std::clamp((x[i] - lo[i]) / span[i], 0.0, 1.0) : 0.0;
    double ft = eval(t);
    if (free_dims.empty()) {
        x = to_ctrl(t);
        return ft;
    }

    const auto line_search = [&](const Vec& d) {
        double a_lo = -kInf, a_hi = kInf, dnorm = 0;
        for (int i = 0; i < 4; ++i) {
            if (d[i] == 0.0) continue;
            dnorm = std::max(dnorm, std::abs(d[i]));
            const double s0 = (0.0 - t[i]) / d[i], s1 = (1.0 - t[i]) / d[i];
            a_lo = std::max(a_lo, std::min(s0, s1));
            a_hi = std::min(a_hi, std::max(s0, s1));
        }
        if (dnorm == 0.0 || !(a_hi > a_lo)) return 0.0;
        const auto at = [&](double a) {
            Vec y = t;
            for (int i = 0; i < 4; ++i) y[i] += a * d[i];
            return eval(y);
        };
        std::vector<std::pair<double, double>> pts;
        const int ns = std::max(2, opts.samples);
        for (int j = 0; j <= ns; ++j) {
            const double a = a_lo + (a_hi - a_lo) * j / ns;
            pts.emplace_back(a, at(a));
        }
        pts.emplace_back(0.0, ft);
        std::sort(pts.begin(), pts.end());
        std::size_t j = 0;
        for (std::size_t k = 1; k < pts.size(); ++k) {
            if (pts[k].second < pts[j].second) j = k;
        }
        double best_a = pts[j].first, best_f = pts[j].second;
        double a = pts[j > 0 ? j - 1 : 0].first, b = pts[std::min(j + 1, pts.size() - 1)].first;
        const double atol = opts.tol / dnorm;
        constexpr double r = 0.6180339887498949;
        double c1 = b - r * (b - a), c2 = a + r * (b - a);
        double f1 = at(c1), f2 = at(c2);
        while (b - a > atol) {
            if (f1 <= f2) {
                b = c2; c2 = c1; f2 = f1;
                c1 = b - r * (b - a); f1 = at(c1);
            } else {
                a = c1; c1 = c2; f1 = f2;
                c2 = a + r * (b - a); f2 = at(c2);
            }
        }
        if (f1 < best_f) { best_f = f1; best_a = c1; }
        if (f2 < best_f) { best_f = f2; best_a = c2; }
        if (best_f < ft) {
            for (int i = 0; i < 4; ++i) t[i] = std::clamp(t[i] + best_a * d[i], 0.0, 1.0);
            ft = best_f;
            return best_a;
        }
        return 0.0;
    };

    const auto coordinate_dirs = [&] {
        std::vector<Vec> dirs;
        for (int i : free_dims) {
            Vec d{};
            d[i] = 1.0;
            dirs.push_back(d);
        }
        return dirs;
    };
    std::vector<Vec> dirs = coordinate_dirs();
    bool fresh = true;
    for (int sweep = 0; sweep < opts.max_sweeps; ++sweep) {
        const Vec t0 = t;
        const double f0 = ft;
        std::size_t biggest = 0;
        double biggest_drop = 0;
        for (std::size_t k = 0; k < dirs.size(); ++k) {
            const double before = ft;
            line_search(dirs[k]);
            if (before - ft > biggest_drop) {
                biggest_drop = before - ft;
                biggest = k;
            }
        }
        Vec dn{};
        double step = 0;
        for (int i = 0; i < 4; ++i) {
            dn[i] = t[i] - t0[i];
            step = std::max(step, std::abs(dn[i]));
        }
        if (step <= opts.tol && f0 - ft <= 1e-15 * std::abs(ft)) {
            if (fresh) break;
            dirs = coordinate_dirs();
            fresh = true;
            continue;
        }
        if (step > 0) {
            line_search(dn);
            for (double& v : dn) v /= step;
            dirs.erase(dirs.begin() + static_cast<std::ptrdiff_t>(biggest));
            dirs.push_back(dn);
            fresh = false;
        }
        if ((sweep + 1) % (2 * static_cast<int>(free_dims.size())) == 0) {
            dirs = coordinate_dirs();
            fresh = true;
        }
    }
    x = to_ctrl(t);
    return ft;
}

double nbi_residual(const Anchors& a, double zeta, const Objectives& g) noexcept {
    return std::abs(1.0 - 2.0 * zeta + a.u2(g.g2) - a.u1(g.g1));
}

NbiResult nbi_subproblem(const Problem& prob, const Anchors& anchors, double zeta, const NbiOptions& opts,
                         uint64_t seed, const RelaxedControl* warm) {
    if (!(zeta >= 0.0 && zeta <= 1.0)) throw std::invalid_argument("nbi_subproblem: zeta must lie in [0, 1]");
    if (opts.lambdas.empty()) throw std::invalid_argument("nbi_subproblem: empty lambda schedule");
    const auto& b = prob.bounds();
    const RelaxedControl lo{double(b.I_min), double(b.K_min), double(b.levels_m().front()), double(b.levels_n().front())};
    const RelaxedControl hi{double(b.I_max), double(b.K_max), double(b.levels_m().back()), double(b.levels_n().back())};

    const auto penalized = [&](double lambda) {
        return [&, lambda](const RelaxedControl& c) {
            const Objectives g = prob.evaluate(c);
            if (!std::isfinite(g.g1) || !std::isfinite(g.g2)) return kInf;
            const double r = 1.0 - 2.0 * zeta + anchors.u2(g.g2) - anchors.u1(g.g1);
            return anchors.u2(g.g2) - zeta + lambda * r * r;
        };
    };

    std::vector<RelaxedControl> starts;
    if (warm) starts.push_back(prob.clamp(*warm));
    starts.push_back(anchors.x1.relaxed);
    starts.push_back(anchors.x2.relaxed);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int s = 0; s < opts.starts; ++s) {
        RelaxedControl c;
        for (int i = 0; i < 4; ++i) c[i] = lo[i] + unit(rng) * (hi[i] - lo[i]);
        starts.push_back(c);
    }

    NbiResult res;
    res.zeta = zeta;
    RelaxedControl best;
    for (double lambda : opts.lambdas) {
        const Objective f = penalized(lambda);
        double best_v = kInf;
        for (auto& x : starts) {
            const double v = minimize_box(f, lo, hi, x, opts.box);
            if (v < best_v) {
                best_v = v;
                best = x;
            }
        }
        const double r = nbi_residual(anchors, zeta, prob.evaluate(best));
        res.violation.push_back(r);
    }
    res.relaxed = best;
    res.relaxed_residual = nbi_residual(anchors, zeta, prob.evaluate(best));
    res.flagged = res.relaxed_residual > opts.eps_out;

    // round: keep non-dominated neighbours, then the smallest final-stage penalty
    std::vector<std::pair<ControlVector, Objectives>> cand;
    for (const auto& c : integer_neighbors(prob, best)) {
        const Objectives g = prob.evaluate(c);
        if (std::isfinite(g.g1) && std::isfinite(g.g2)) cand.emplace_back(c, g);
    }
    if (cand.empty()) throw InfeasibleError("no feasible integer neighbour of the NBI solution");
    const Objective f_last = penalized(opts.lambdas.back());
    double best_v = kInf;
    for (const auto& [c, g] : cand) {
        const bool dominated = std::any_of(cand.begin(), cand.end(), [&](const auto& o) {
            return o.second.g1 <= g.g1 && o.second.g2 <= g.g2 && (o.second.g1 < g.g1 || o.second.g2 < g.g2);
        });
        if (dominated) continue;
        const double v = f_last(c);
        if (v < best_v) {
            best_v = v;
            res.ctrl = c;
            res.obj = g;
        }
    }
    res.s = zeta - anchors.u2(res.obj.g2);
    res.residual = nbi_residual(anchors, zeta, res.obj);
    return res;
}

}  // namespace greenfl
