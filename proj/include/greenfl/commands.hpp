#ifndef GREENFL_COMMANDS_HPP
#define GREENFL_COMMANDS_HPP

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "greenfl/config.hpp"
#include "greenfl/pareto.hpp"

namespace greenfl {

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitInfeasible = 3, kExitDiverged = 4 };

struct OperatingPoints {
    ParetoFront front;
    SolveResult emin;
    SolveResult tmin;
    ParetoPoint nbs;
    ParetoPoint sum;
};

OperatingPoints operating_points(const Problem& prob, const RunConfig& cfg);

/// Restricted control set of a comparison scheme. Unset fields are optimized.
struct BaselineSpec {
    std::string name;
    std::optional<int> I, K, m, n;
    bool tie_m_to_n = false;
};

/// fedavg, fedpaq, ifedavg, unifiedq, mnfedavg, proposed
std::vector<BaselineSpec> baseline_specs();

struct BaselineChoice {
    ControlVector ctrl;
    Objectives obj;
};

/// Best restricted control by exhaustive enumeration and the Nash product against `disagreement`.
/// The fully free "proposed" scheme uses the NBS of the NBI front instead.
BaselineChoice optimize_baseline(const Problem& prob, const BaselineSpec& spec, const Objectives& disagreement);

struct CommandOptions {
    std::filesystem::path out_dir = ".";
    std::optional<std::string> point;     // nbs | sum | emin | tmin
    std::optional<ControlVector> ctrl;
    std::optional<std::vector<double>> eps_list;
};

int cmd_boundary(const RunConfig& cfg, const CommandOptions& opts, std::ostream& out);
int cmd_operating_points(const RunConfig& cfg, const CommandOptions& opts, std::ostream& out);
int cmd_simulate(const RunConfig& cfg, const CommandOptions& opts, std::ostream& out);
int cmd_compare_baselines(const RunConfig& cfg, const CommandOptions& opts, std::ostream& out);
int cmd_estimate(const RunConfig& cfg, const CommandOptions& opts, std::ostream& out);

/// "I,K,m,n"
ControlVector parse_ctrl(const std::string& text);

}  // namespace greenfl

#endif
