#ifndef GREENFL_CONFIG_HPP
#define GREENFL_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "greenfl/convergence.hpp"
#include "greenfl/energy.hpp"
#include "greenfl/flsim.hpp"
#include "greenfl/solvers.hpp"

namespace greenfl {

struct NetworkConfig {
    int N = 50;
    double area_m = 500.0;
    double pathloss_exp = 4.0;
    double bandwidth_hz = 1e7;
    double tx_power_w = 0.1;
    double noise_dbm_per_hz = -173.0;
    uint64_t seed = 0;

    bool operator==(const NetworkConfig&) const = default;
};

/// A constant that is either given or estimated on the simulated task.
struct Estimable {
    bool estimate = false;
    double value = 0;

    bool operator==(const Estimable&) const = default;
};

struct ConvergenceConfig {
    double L = 0.097;
    double mu = 0.05;
    double beta = 40.0;
    double gamma = 1.0;
    double rho = 100.0;
    double epsilon = 0.1;
    Estimable G{false, 0.25};
    Estimable Gamma{false, 0.6};
    bool sigma_estimate = false;
    std::vector<double> sigma{1.0};  // one value is broadcast to every device

    bool operator==(const ConvergenceConfig&) const = default;
};

struct BoundsConfig {
    int I_min = 1;
    int I_max = 30;
    int K_min = 1;
    std::optional<int> K_max;  // default N
    std::vector<int> m_levels;
    std::vector<int> n_levels;

    bool operator==(const BoundsConfig&) const = default;
};

struct SweepConfig {
    int zeta_steps = 21;
    std::vector<double> lambdas{1e0, 1e1, 1e2, 1e3, 1e4, 1e5, 1e6};
    int starts = 8;
    double eps_uto = 1e-6;
    double eps_out = 1e-3;
    double box_tol = 1e-4;

    bool operator==(const SweepConfig&) const = default;
};

struct SimConfig {
    SyntheticTask task;
    double dirichlet_alpha = 0.1;
    uint64_t data_seed = 7;
    int batch_size = 16;
    int max_rounds = 3000;
    double target_eps = 0.1;
    int smooth_window = 5;
    bool with_replacement = true;
    int reference_budget = 500;
    int probe_iters = 20;
    double probe_lr = 0.01;

    bool operator==(const SimConfig&) const = default;
};

struct RunConfig {
    ChipSpec chip;
    ModelArch arch;
    NetworkConfig network;
    ConvergenceConfig convergence;
    BoundsConfig bounds;
    SweepConfig sweep;
    SimConfig sim;
    uint64_t seed = 0;
    std::vector<double> eps_list{0.05, 0.1, 0.2};

    bool operator==(const RunConfig&) const = default;
};

/// Parse and validate. Unknown keys and wrong types raise ConfigError naming the key.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);
/// Canonical JSON with every key explicit; parse_config(emit_config(c)) == c.
std::string emit_config(const RunConfig& cfg);
/// FNV-1a 64 of the canonical JSON, 16 hex digits.
std::string config_hash(const RunConfig& cfg);

/// Write via a temporary file and rename.
void write_atomic(const std::filesystem::path& path, const std::string& content);

NbiOptions nbi_options(const RunConfig& cfg);
Bounds make_bounds(const RunConfig& cfg);
std::vector<LinkSpec> make_links(const RunConfig& cfg);

/// Dataset, devices and reference optimum of the simulated task.
struct SimSetup {
    Dataset data;
    std::vector<Device> devices;
    SimOracle oracle;
    SimOptions options;
};

/// Everything a subcommand needs: the analytic problem and, when built, the simulated task.
struct Scenario {
    RunConfig cfg;
    std::vector<LinkSpec> links;
    std::optional<EstimatedConstants> estimated;
    std::optional<SimSetup> sim;
    std::optional<Problem> problem;
};

/// Build the analytic problem, running the simulated task first if any constant must be estimated
/// or `with_sim` is set.
Scenario make_scenario(const RunConfig& cfg, bool with_sim);

SimSetup make_sim_setup(const RunConfig& cfg, const std::vector<LinkSpec>& links);

}  // namespace greenfl

#endif
