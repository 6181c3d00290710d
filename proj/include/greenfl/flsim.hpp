#ifndef GREENFL_FLSIM_HPP
#define GREENFL_FLSIM_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "greenfl/convergence.hpp"
#include "greenfl/energy.hpp"

namespace greenfl {

/// Dense labelled samples, row-major features.
struct Dataset {
    int features = 0;
    int classes = 0;
    std::vector<double> x;
    std::vector<int> y;

    [[nodiscard]] std::size_t size() const noexcept { return y.size(); }
    [[nodiscard]] std::span<const double> row(std::size_t i) const noexcept {
        return {x.data() + i * static_cast<std::size_t>(features), static_cast<std::size_t>(features)};
    }
    /// Parameter count of the linear softmax model (classes x features, no bias).
    [[nodiscard]] std::size_t model_dim() const noexcept { return std::size_t(features) * std::size_t(classes); }
};

/// Gaussian class clusters: class means of norm ~separation, isotropic noise of norm ~noise.
struct SyntheticTask {
    int features = 50;
    int classes = 10;
    int samples = 3000;
    double separation = 2.0;
    double noise = 1.0;

    bool operator==(const SyntheticTask&) const = default;
};

Dataset make_synthetic(const SyntheticTask& task, uint64_t seed);

/// l2-regularized mean cross-entropy over a subset of a dataset.
class SoftmaxObjective {
public:
    SoftmaxObjective(const Dataset& data, std::vector<std::size_t> indices, double mu);
    SoftmaxObjective(const Dataset& data, double mu);  // every sample

    [[nodiscard]] double loss(std::span<const double> w) const;
    /// Full gradient; returns the loss.
    double gradient(std::span<const double> w, std::span<double> out) const;
    /// Mean gradient over `batch` (indices into this objective's subset).
    void batch_gradient(std::span<const double> w, std::span<const std::size_t> batch, std::span<double> out) const;

    [[nodiscard]] std::size_t size() const noexcept { return idx_.size(); }
    [[nodiscard]] std::size_t dim() const noexcept { return data_->model_dim(); }
    [[nodiscard]] const std::vector<std::size_t>& indices() const noexcept { return idx_; }

private:
    double accumulate(std::span<const double> w, std::span<const std::size_t> rows, std::span<double> out) const;

    const Dataset* data_;
    std::vector<std::size_t> idx_;
    double mu_;
};

/// Non-iid split: per class, device shares drawn from Dirichlet(alpha). Every device gets >= 1 sample.
std::vector<std::vector<std::size_t>> partition_dirichlet(const Dataset& data, int num_devices, double alpha,
                                                          uint64_t seed);

struct Device {
    int id = 0;
    std::vector<std::size_t> samples;
    double p = 0;
    double sigma = 0;
    LinkSpec link;
};

/// Uniform drop in a square, BS at the centre, average gain max(dist, 1)^-exp.
std::vector<LinkSpec> deploy_network(int num_devices, double area_m, double pathloss_exp, uint64_t seed,
                                     double bandwidth_hz, double tx_power_w, double noise_psd_w_per_hz);

struct EstimatedConstants {
    double G = 0;
    std::vector<double> G_k;
    std::vector<double> sigma;
    double Gamma = 0;
    bool degenerate = false;
};

struct ProbeOptions {
    int iterations = 20;
    int batch_size = 16;
    double mu = 0.05;
    double learning_rate = 0.01;
};

/// G_k = RMS stochastic-gradient norm over the probe, sigma_k^2 = mean squared deviation of the
/// stochastic gradient from the full local gradient, Gamma = sum_k p_k F_k(w') at the
/// sample-weighted average w' of the probe-end local models. p_k = D_k / D here.
EstimatedConstants estimate_constants(const Dataset& data, const std::vector<Device>& devices,
                                      const ProbeOptions& opts, uint64_t seed);

struct SimOracle {
    double f_star = 0;
    std::vector<double> w_star;
    int iterations = 0;
};

/// Projected accelerated gradient on [-1, 1]^d over the pooled data; keeps the best iterate.
SimOracle reference_optimum(const Dataset& data, double mu, int budget);

struct SimOptions {
    int max_rounds = 1000;
    double target_eps = 0.1;
    bool stop_at_eps = true;
    int smooth_window = 5;
    int batch_size = 16;
    double mu = 0.05;          // l2 coefficient of the task
    double beta = 40.0;        // learning rate min(beta / (t + gamma), 1 / rho), t = local iteration count
    double gamma = 1.0;
    double rho = 100.0;
    bool with_replacement = true;
    double divergence_factor = 1e3;
    ChipSpec chip;
    ModelArch arch;
};

struct RoundRecord {
    int round = 0;
    double loss = 0;
    double gap = 0;
    double round_energy = 0;
    double cumulative_energy = 0;
    std::vector<int> selected;
};

struct SimTrace {
    ControlVector ctrl;
    uint64_t seed = 0;
    double initial_loss = 0;
    std::vector<RoundRecord> rounds;
    std::optional<int> rounds_to_eps;
    double energy_to_eps = 0;  // cumulative energy at rounds_to_eps, or total if never reached
    double total_energy = 0;
    bool diverged = false;
    std::vector<double> final_weights;
};

/// Quantized federated training: sample K devices by p_k, I local steps with the forward pass at
/// Q_n(w) and a full-precision update, normalize and quantize the update at m bits, and average the
/// rescaled updates at the base station.
SimTrace run_federated(const ControlVector& ctrl, const Dataset& data, const std::vector<Device>& devices,
                       const SimOptions& opts, const SimOracle& oracle, uint64_t seed);

std::string trace_csv(const SimTrace& trace, const std::string& config_hash);
std::string trace_json(const SimTrace& trace, const std::string& config_hash);

}  // namespace greenfl

#endif
