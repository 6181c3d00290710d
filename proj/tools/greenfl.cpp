#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "greenfl/commands.hpp"
#include "greenfl/errors.hpp"

namespace {

struct Args {
    std::string config;
    std::optional<uint64_t> seed;
    std::string out = ".";
    std::optional<int> zeta_steps;
    std::optional<std::string> point;
    std::optional<std::string> ctrl;
    std::vector<double> eps_list;
};

void add_common(CLI::App* sub, Args& a) {
    sub->add_option("--config", a.config, "JSON run configuration")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", a.seed, "override the config seed");
    sub->add_option("--out", a.out, "output directory");
    sub->add_option("--zeta-steps", a.zeta_steps, "override sweep.zeta_steps")->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"greenfl: energy/convergence co-design for quantized federated learning"};
    app.require_subcommand(1);
    Args a;
    auto* boundary = app.add_subcommand("boundary", "Pareto boundary between energy and rounds");
    auto* points = app.add_subcommand("points", "NBS, SUM, E_min and T_min operating points");
    auto* simulate = app.add_subcommand("simulate", "run the quantized FL simulator");
    auto* compare = app.add_subcommand("compare", "baseline comparison");
    auto* estimate = app.add_subcommand("estimate", "estimate G, sigma_k and Gamma on the simulated task");
    for (auto* s : {boundary, points, simulate, compare, estimate}) add_common(s, a);
    simulate->add_option("--point", a.point, "operating point")->check(CLI::IsMember({"nbs", "sum", "emin", "tmin"}));
    simulate->add_option("--ctrl", a.ctrl, "explicit control I,K,m,n");
    compare->add_option("--eps-list", a.eps_list, "accuracy targets")->delimiter(',');

    CLI11_PARSE(app, argc, argv);

    try {
        greenfl::RunConfig cfg = greenfl::load_config(a.config);
        if (a.seed) cfg.seed = *a.seed;
        if (a.zeta_steps) {
            if (*a.zeta_steps < 2) throw greenfl::ConfigError("--zeta-steps must be >= 2", "sweep.zeta_steps");
            cfg.sweep.zeta_steps = *a.zeta_steps;
        }
        greenfl::CommandOptions opts;
        opts.out_dir = a.out;
        opts.point = a.point;
        if (a.ctrl) opts.ctrl = greenfl::parse_ctrl(*a.ctrl);
        if (!a.eps_list.empty()) opts.eps_list = a.eps_list;

        if (*boundary) return greenfl::cmd_boundary(cfg, opts, std::cout);
        if (*points) return greenfl::cmd_operating_points(cfg, opts, std::cout);
        if (*simulate) return greenfl::cmd_simulate(cfg, opts, std::cout);
        if (*compare) return greenfl::cmd_compare_baselines(cfg, opts, std::cout);
        return greenfl::cmd_estimate(cfg, opts, std::cout);
    } catch (const greenfl::ConfigError& e) {
        std::cerr << "error: config: " << e.what() << (e.key().empty() ? "" : " [key: " + e.key() + "]") << "\n";
        return greenfl::kExitConfig;
    } catch (const greenfl::InfeasibleError& e) {
        std::cerr << "error: infeasible: " << e.what() << "\n";
        return greenfl::kExitInfeasible;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
