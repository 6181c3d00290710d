#include "greenfl/commands.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "greenfl/errors.hpp"

namespace greenfl {

namespace {

using ojson = nlohmann::ordered_json;

ojson ctrl_json(const ControlVector& c) { return {{"I", c.I}, {"K", c.K}, {"m", c.m}, {"n", c.n}}; }

void check_ctrl(const ControlVector& c, const RunConfig& cfg) {
    if (c.I < 1) throw ConfigError("ctrl I must be >= 1", "ctrl");
    if (c.K < 1 || c.K > cfg.network.N) throw ConfigError("ctrl K must lie in [1, N]", "ctrl");
    if (c.m < 2 || c.m > cfg.arch.m_max) throw ConfigError("ctrl m must lie in [2, m_max]", "ctrl");
    if (c.n < 2 || c.n > cfg.arch.n_max) throw ConfigError("ctrl n must lie in [2, n_max]", "ctrl");
}

std::vector<int> range_or(const std::optional<int>& fixed, int lo, int hi) {
    if (fixed) return {*fixed};
    std::vector<int> v;
    for (int x = lo; x <= hi; ++x) v.push_back(x);
    return v;
}

}  // namespace

OperatingPoints operating_points(const Problem& prob, const RunConfig& cfg) {
    OperatingPoints op;
    op.front = build_front(prob, cfg.sweep.zeta_steps, nbi_options(cfg), cfg.seed, cfg.sweep.eps_uto);
    op.emin = op.front.anchors.x1;
    op.tmin = op.front.anchors.x2;
    op.nbs = nbs_point(op.front);
    op.sum = sum_point(op.front);
    return op;
}

std::vector<BaselineSpec> baseline_specs() {
    return {
        {"fedavg", 2, 5, 32, 32, false},
        {"fedpaq", 2, 5, std::nullopt, 32, false},
        {"ifedavg", std::nullopt, std::nullopt, 32, 32, false},
        {"unifiedq", std::nullopt, std::nullopt, std::nullopt, std::nullopt, true},
        {"mnfedavg", 2, 5, std::nullopt, std::nullopt, false},
        {"proposed", std::nullopt, std::nullopt, std::nullopt, std::nullopt, false},
    };
}

BaselineChoice optimize_baseline(const Problem& prob, const BaselineSpec& spec, const Objectives& disagreement) {
    const auto& b = prob.bounds();
    const bool free = !spec.I && !spec.K && !spec.m && !spec.n && !spec.tie_m_to_n;
    if (free) throw std::invalid_argument("optimize_baseline: the free scheme uses the NBI front");

    const auto I_vals = range_or(spec.I, b.I_min, b.I_max);
    const auto K_vals = range_or(spec.K, b.K_min, b.K_max);
    const auto n_vals = spec.n ? std::vector<int>{*spec.n} : b.levels_n();
    const auto m_levels = b.levels_m();
    std::vector<ParetoPoint> pts;
    for (int n : n_vals) {
        std::vector<int> m_vals;
        if (spec.tie_m_to_n) {
            m_vals = {n};
        } else {
            m_vals = spec.m ? std::vector<int>{*spec.m} : m_levels;
        }
        for (int m : m_vals)
            for (int K : K_vals)
                for (int I : I_vals) {
                    const ControlVector c{I, K, m, n};
                    if (c.K > b.K_max || c.K < 1 || c.I < 1 || c.n < prob.n_min() || c.m < 2) continue;
                    const Objectives g = prob.evaluate(c);
                    if (!std::isfinite(g.g1) || !std::isfinite(g.g2)) continue;
                    ParetoPoint p;
                    p.ctrl = c;
                    p.g1 = g.g1;
                    p.g2 = g.g2;
                    pts.push_back(p);
                }
    }
    if (pts.empty()) throw InfeasibleError(fmt::format("{}: no feasible control in its restricted set", spec.name));
    pts = filter_nondominated(std::move(pts));

    const ParetoPoint* best = nullptr;
    double best_v = 0;
    for (const auto& p : pts) {
        const double f1 = disagreement.g1 - p.g1, f2 = disagreement.g2 - p.g2;
        if (!(f1 > 0 && f2 > 0)) continue;
        if (const double v = f1 * f2; !best || v > best_v) {
            best_v = v;
            best = &p;
        }
    }
    if (!best) {
        best = &*std::min_element(pts.begin(), pts.end(), [](const auto& x, const auto& y) { return x.g1 < y.g1; });
    }
    return {best->ctrl, {best->g1, best->g2}};
}

ControlVector parse_ctrl(const std::string& text) {
    std::vector<int> v;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            std::size_t used = 0;
            v.push_back(std::stoi(tok, &used));
            if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw ConfigError(fmt::format("--ctrl expects I,K,m,n integers, got '{}'", text), "ctrl");
        }
    }
    if (v.size() != 4) throw ConfigError(fmt::format("--ctrl expects I,K,m,n integers, got '{}'", text), "ctrl");
    return {v[0], v[1], v[2], v[3]};
}

int cmd_boundary(const RunConfig& cfg, const CommandOptions& opts, std::ostream& out) {
    const Scenario sc = make_scenario(cfg, false);
    const ParetoFront front = build_front(*sc.problem, cfg.sweep.zeta_steps, nbi_options(cfg), cfg.seed, cfg.sweep.eps_uto);
    const std::string hash = config_hash(cfg);
    write_atomic(opts.out_dir / "front.csv", front_csv(front, hash, cfg.seed));
    write_atomic(opts.out_dir / "front.json", front_json(front, hash, cfg.seed));
    out << fmt::format("front: {} points, {} flagged\n", front.points.size(), front.excluded.size());
    return kExitOk;
}

int cmd_operating_points(const RunConfig& cfg, const CommandOptions& opts, std::ostream& out) {
    const Scenario sc = make_scenario(cfg, false);
    const OperatingPoints op = operating_points(*sc.problem, cfg);
    const std::string hash = config_hash(cfg);

    struct Row {
        const char* name;
        ControlVector c;
        double g1, g2;
    };
    const Row rows[] = {{"NBS", op.nbs.ctrl, op.nbs.g1, op.nbs.g2},
                        {"SUM", op.sum.ctrl, op.sum.g1, op.sum.g2},
                        {"E_min", op.emin.ctrl, op.emin.obj.g1, op.emin.obj.g2},
                        {"T_min", op.tmin.ctrl, op.tmin.obj.g1, op.tmin.obj.g2}};

    std::string csv = "point,I,K,m,n,g1_joules,g2_rounds,rounds,config_hash,seed\n";
    ojson j;
    j["config_hash"] = hash;
    j["seed"] = cfg.seed;
    j["n_min"] = sc.problem->n_min();
    j["disagreement"] = {{"ctrl", ctrl_json(op.front.disagreement_ctrl)},
                         {"g1_joules", op.front.disagreement.g1},
                         {"g2_rounds", op.front.disagreement.g2}};
    j["points"] = ojson::object();
    out << fmt::format("{:<6} {:>3} {:>3} {:>3} {:>3} {:>14} {:>12}\n", "point", "I", "K", "m", "n", "g1_joules", "g2_rounds");
    for (const auto& r : rows) {
        csv += fmt::format("{},{},{},{},{},{:.10g},{:.10g},{},{},{}\n", r.name, r.c.I, r.c.K, r.c.m, r.c.n, r.g1, r.g2,
                           int(std::ceil(r.g2)), hash, cfg.seed);
        j["points"][r.name] = {{"ctrl", ctrl_json(r.c)}, {"g1_joules", r.g1}, {"g2_rounds", r.g2}, {"rounds", int(std::ceil(r.g2))}};
        out << fmt::format("{:<6} {:>3} {:>3} {:>3} {:>3} {:>14.6g} {:>12.2f}\n", r.name, r.c.I, r.c.K, r.c.m, r.c.n, r.g1, r.g2);
    }
    write_atomic(opts.out_dir / "points.csv", csv);
    write_atomic(opts.out_dir / "points.json", j.dump(2) + "\n");
    return kExitOk;
}

int cmd_simulate(const RunConfig& cfg, const CommandOptions& opts, std::ostream& out) {
    const Scenario sc = make_scenario(cfg, true);
    ControlVector ctrl;
    if (opts.ctrl) {
        ctrl = *opts.ctrl;
    } else {
        const std::string point = opts.point.value_or("nbs");
        if (point != "nbs" && point != "sum" && point != "emin" && point != "tmin") {
            throw ConfigError(fmt::format("unknown operating point '{}'", point), "point");
        }
        const OperatingPoints op = operating_points(*sc.problem, cfg);
        ctrl = point == "nbs" ? op.nbs.ctrl : point == "sum" ? op.sum.ctrl : point == "emin" ? op.emin.ctrl : op.tmin.ctrl;
    }
    check_ctrl(ctrl, cfg);
    const SimTrace trace = run_federated(ctrl, sc.sim->data, sc.sim->devices, sc.sim->options, sc.sim->oracle, cfg.seed);
    const std::string hash = config_hash(cfg);
    write_atomic(opts.out_dir / "trace.csv", trace_csv(trace, hash));
    write_atomic(opts.out_dir / "trace.json", trace_json(trace, hash));
    out << fmt::format("ctrl {} rounds_to_eps {} energy {:.6g} J{}\n", ctrl.to_string(),
                       trace.rounds_to_eps ? std::to_string(*trace.rounds_to_eps) : "none", trace.energy_to_eps,
                       trace.diverged ? " DIVERGED" : "");
    return trace.diverged ? kExitDiverged : kExitOk;
}

int cmd_compare_baselines(const RunConfig& cfg, const CommandOptions& opts, std::ostream& out) {
    const Scenario sc = make_scenario(cfg, true);
    const std::string hash = config_hash(cfg);
    const auto eps_list = opts.eps_list.value_or(cfg.eps_list);
    if (eps_list.empty()) throw ConfigError("eps_list is empty", "eps_list");

    std::string csv =
        "scheme,epsilon,I,K,m,n,g1_joules,g2_rounds,saving_vs_fedavg,sim_rounds,sim_energy_j,status,config_hash,seed\n";
    ojson rows = ojson::array();
    for (double eps : eps_list) {
        if (!(eps > 0)) throw ConfigError("eps_list entries must be positive", "eps_list");
        ConvergenceParams p = sc.problem->params();
        p.epsilon = eps;
        std::optional<Problem> prob;
        std::string problem_error;
        try {
            prob.emplace(p, cfg.arch, cfg.chip, sc.links, make_bounds(cfg));
        } catch (const InfeasibleError& e) {
            problem_error = e.what();
        }
        SimOptions so = sc.sim->options;
        so.target_eps = eps;

        std::optional<double> fedavg_g1;
        std::optional<Objectives> D;
        std::optional<OperatingPoints> op;
        for (const auto& spec : baseline_specs()) {
            std::string status = "ok";
            std::optional<BaselineChoice> choice;
            try {
                if (!prob) throw InfeasibleError(problem_error);
                if (!op) {
                    op = operating_points(*prob, cfg);
                    D = op->front.disagreement;
                }
                if (spec.name == "proposed") {
                    choice = BaselineChoice{op->nbs.ctrl, {op->nbs.g1, op->nbs.g2}};
                } else {
                    choice = optimize_baseline(*prob, spec, *D);
                }
            } catch (const InfeasibleError& e) {
                status = fmt::format("infeasible: {}", e.what());
            }
            ojson row;
            row["scheme"] = spec.name;
            row["epsilon"] = eps;
            row["status"] = status;
            if (!choice) {
                csv += fmt::format("{},{},,,,,,,,,,\"{}\",{},{}\n", spec.name, eps, status, hash, cfg.seed);
                rows.push_back(row);
                continue;
            }
            if (spec.name == "fedavg") fedavg_g1 = choice->obj.g1;
            const double saving = fedavg_g1 ? 1.0 - choice->obj.g1 / *fedavg_g1 : std::nan("");
            const SimTrace tr = run_federated(choice->ctrl, sc.sim->data, sc.sim->devices, so, sc.sim->oracle, cfg.seed);
            const std::string sim_rounds = tr.rounds_to_eps ? std::to_string(*tr.rounds_to_eps) : "";
            if (tr.diverged) status = "diverged";
            const auto& c = choice->ctrl;
            csv += fmt::format("{},{},{},{},{},{},{:.10g},{:.10g},{:.6f},{},{:.10g},{},{},{}\n", spec.name, eps, c.I, c.K, c.m,
                               c.n, choice->obj.g1, choice->obj.g2, saving, sim_rounds, tr.energy_to_eps, status, hash,
                               cfg.seed);
            row["ctrl"] = ctrl_json(c);
            row["g1_joules"] = choice->obj.g1;
            row["g2_rounds"] = choice->obj.g2;
            row["saving_vs_fedavg"] = saving;
            row["sim_rounds"] = tr.rounds_to_eps ? ojson(*tr.rounds_to_eps) : ojson();
            row["sim_energy_j"] = tr.energy_to_eps;
            row["status"] = status;
            rows.push_back(row);
            out << fmt::format("eps {:<6} {:<9} {:<14} g1 {:>12.6g} J  g2 {:>9.2f}  sim rounds {:>5}  sim energy {:.6g} J\n", eps,
                               spec.name, c.to_string(), choice->obj.g1, choice->obj.g2,
                               sim_rounds.empty() ? "-" : sim_rounds, tr.energy_to_eps);
        }
    }
    ojson j;
    j["config_hash"] = hash;
    j["seed"] = cfg.seed;
    j["rows"] = rows;
    write_atomic(opts.out_dir / "compare.csv", csv);
    write_atomic(opts.out_dir / "compare.json", j.dump(2) + "\n");
    return kExitOk;
}

int cmd_estimate(const RunConfig& cfg, const CommandOptions& opts, std::ostream& out) {
    RunConfig c = cfg;
    c.convergence.sigma_estimate = true;
    c.convergence.G.estimate = true;
    c.convergence.Gamma.estimate = true;
    const Scenario sc = make_scenario(c, true);
    const auto& e = *sc.estimated;
    ojson j;
    j["config_hash"] = config_hash(cfg);
    j["seed"] = cfg.seed;
    j["G"] = e.G;
    j["Gamma"] = e.Gamma;
    j["degenerate"] = e.degenerate;
    j["f_star"] = sc.sim->oracle.f_star;
    j["n_min"] = sc.problem->n_min();
    j["sigma"] = e.sigma;
    j["G_k"] = e.G_k;
    j["probs"] = sc.problem->params().probs;
    std::vector<std::size_t> sizes;
    for (const auto& d : sc.sim->devices) sizes.push_back(d.samples.size());
    j["samples_per_device"] = sizes;
    write_atomic(opts.out_dir / "estimate.json", j.dump(2) + "\n");
    out << fmt::format("G {:.6g}  Gamma {:.6g}  f_star {:.6g}{}\n", e.G, e.Gamma, sc.sim->oracle.f_star,
                       e.degenerate ? "  (degenerate)" : "");
    return kExitOk;
}

}  // namespace greenfl
