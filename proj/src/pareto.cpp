#include "greenfl/pareto.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>
#include <json.hpp>

#include "greenfl/errors.hpp"

namespace greenfl {

ControlVector disagreement_point(const Problem& prob) {
    const auto& b = prob.bounds();
    return {b.I_max, b.K_min, b.levels_m().front(), b.levels_n().front()};
}

bool dominates(const Objectives& a, const Objectives& b) noexcept {
    return a.g1 <= b.g1 && a.g2 <= b.g2 && (a.g1 < b.g1 || a.g2 < b.g2);
}

std::vector<ParetoPoint> filter_nondominated(std::vector<ParetoPoint> pts) {
    std::vector<ParetoPoint> unique;
    for (auto& p : pts) {
        const bool seen = std::any_of(unique.begin(), unique.end(), [&](const ParetoPoint& q) { return q.ctrl == p.ctrl; });
        if (!seen) unique.push_back(std::move(p));
    }
    std::vector<ParetoPoint> out;
    for (const auto& p : unique) {
        const Objectives gp{p.g1, p.g2};
        const bool dominated = std::any_of(unique.begin(), unique.end(), [&](const ParetoPoint& q) {
            return dominates({q.g1, q.g2}, gp);
        });
        if (!dominated) out.push_back(p);
    }
    return out;
}

ParetoFront build_front(const Problem& prob, int zeta_steps, const NbiOptions& opts, uint64_t seed, double eps_uto) {
    if (zeta_steps < 2) throw ConfigError("zeta_steps must be >= 2", "sweep.zeta_steps");
    ParetoFront front;
    front.anchors.x1 = minimize_g1(prob, eps_uto);
    front.anchors.x2 = minimize_g2(prob);
    const auto& a = front.anchors;
    front.utopia = {a.x1.obj.g1, a.x2.obj.g2};
    front.phi = {{{0.0, a.x2.obj.g1 - a.x1.obj.g1}, {a.x1.obj.g2 - a.x2.obj.g2, 0.0}}};
    front.disagreement_ctrl = disagreement_point(prob);
    front.disagreement = prob.evaluate(front.disagreement_ctrl);

    const auto anchor_point = [](const SolveResult& r, double zeta) {
        ParetoPoint p;
        p.ctrl = r.ctrl;
        p.g1 = r.obj.g1;
        p.g2 = r.obj.g2;
        p.zeta = zeta;
        return p;
    };
    if (!(front.phi[0][1] > 0) || !(front.phi[1][0] > 0)) {
        // one control minimizes both objectives
        front.points.push_back(anchor_point(a.x1, 1.0));
        return front;
    }

    std::vector<ParetoPoint> raw;
    RelaxedControl warm = a.x2.relaxed;
    for (int j = 0; j < zeta_steps; ++j) {
        const double zeta = double(j) / double(zeta_steps - 1);
        const NbiResult r = nbi_subproblem(prob, a, zeta, opts, seed * 0x9E3779B97F4A7C15ULL + uint64_t(j), &warm);
        warm = r.relaxed;
        ParetoPoint p;
        p.ctrl = r.ctrl;
        p.g1 = r.obj.g1;
        p.g2 = r.obj.g2;
        p.zeta = zeta;
        p.s = r.s;
        p.penalty_residual = r.relaxed_residual;
        p.flagged = r.flagged;
        p.violation = r.violation;
        if (p.flagged) {
            front.excluded.push_back(std::move(p));
        } else {
            raw.push_back(std::move(p));
        }
    }
    front.points = filter_nondominated(std::move(raw));
    return front;
}

ParetoPoint nbs_point(const ParetoFront& front) {
    if (front.points.empty()) throw std::invalid_argument("nbs_point: empty front");
    const auto& D = front.disagreement;
    const ParetoPoint* best = nullptr;
    double best_v = 0;
    for (const auto& p : front.points) {
        const double f1 = D.g1 - p.g1, f2 = D.g2 - p.g2;
        if (!(f1 > 0 && f2 > 0)) continue;
        if (const double v = f1 * f2; !best || v > best_v) {
            best_v = v;
            best = &p;
        }
    }
    if (best) return *best;
    ParetoPoint d;
    d.ctrl = front.disagreement_ctrl;
    d.g1 = D.g1;
    d.g2 = D.g2;
    return d;
}

ParetoPoint sum_point(const ParetoFront& front) {
    if (front.points.empty()) throw std::invalid_argument("sum_point: empty front");
    return *std::min_element(front.points.begin(), front.points.end(),
                             [](const ParetoPoint& x, const ParetoPoint& y) { return x.g1 + x.g2 < y.g1 + y.g2; });
}

std::string front_csv(const ParetoFront& front, const std::string& config_hash, uint64_t seed) {
    std::string out = "zeta1,I,K,m,n,g1_joules,g2_rounds,s,residual,flagged,config_hash,seed\n";
    std::vector<const ParetoPoint*> all;
    for (const auto& p : front.points) all.push_back(&p);
    for (const auto& p : front.excluded) all.push_back(&p);
    std::stable_sort(all.begin(), all.end(), [](const auto* x, const auto* y) { return x->zeta < y->zeta; });
    for (const auto* p : all) {
        out += fmt::format("{:.6f},{},{},{},{},{:.10g},{:.10g},{:.10g},{:.6e},{},{},{}\n", p->zeta, p->ctrl.I, p->ctrl.K,
                           p->ctrl.m, p->ctrl.n, p->g1, p->g2, p->s, p->penalty_residual, p->flagged ? 1 : 0,
                           config_hash, seed);
    }
    return out;
}

namespace {

nlohmann::ordered_json point_json(const ParetoPoint& p) {
    nlohmann::ordered_json j;
    j["zeta1"] = p.zeta;
    j["ctrl"] = {{"I", p.ctrl.I}, {"K", p.ctrl.K}, {"m", p.ctrl.m}, {"n", p.ctrl.n}};
    j["g1_joules"] = p.g1;
    j["g2_rounds"] = p.g2;
    j["s"] = p.s;
    j["residual"] = p.penalty_residual;
    j["flagged"] = p.flagged;
    j["violation"] = p.violation;
    return j;
}

}  // namespace

std::string front_json(const ParetoFront& front, const std::string& config_hash, uint64_t seed) {
    nlohmann::ordered_json j;
    j["config_hash"] = config_hash;
    j["seed"] = seed;
    j["utopia"] = {{"g1_joules", front.utopia.g1}, {"g2_rounds", front.utopia.g2}};
    j["phi"] = {{front.phi[0][0], front.phi[0][1]}, {front.phi[1][0], front.phi[1][1]}};
    const auto& D = front.disagreement_ctrl;
    j["disagreement"] = {{"ctrl", {{"I", D.I}, {"K", D.K}, {"m", D.m}, {"n", D.n}}},
                         {"g1_joules", front.disagreement.g1},
                         {"g2_rounds", front.disagreement.g2}};
    j["points"] = nlohmann::ordered_json::array();
    for (const auto& p : front.points) j["points"].push_back(point_json(p));
    j["excluded"] = nlohmann::ordered_json::array();
    for (const auto& p : front.excluded) j["excluded"].push_back(point_json(p));
    return j.dump(2) + "\n";
}

}  // namespace greenfl
