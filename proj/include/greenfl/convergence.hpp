#ifndef GREENFL_CONVERGENCE_HPP
#define GREENFL_CONVERGENCE_HPP

#include <compare>
#include <span>
#include <string>
#include <vector>

#include "greenfl/energy.hpp"

namespace greenfl {

/// Analytic constants of the convergence bound.
struct ConvergenceParams {
    double L = 0.097;        // smoothness
    double mu = 0.05;        // strong convexity
    double G = 0.25;         // stochastic-gradient norm bound
    std::vector<double> sigma;  // per-device gradient-noise bound
    double Gamma = 0.6;      // degree of non-iid
    double beta = 40.0;      // step-size numerator, beta * mu > 1
    double gamma = 1.0;      // step-size shift
    double rho = 100.0;      // step-size cap is 1 / rho
    double epsilon = 0.1;    // target optimality gap
    std::vector<double> probs;  // sampling probabilities p_k

    void validate() const;
    /// sum_k p_k^2 sigma_k^2
    [[nodiscard]] double sampling_variance() const noexcept;
    /// Learning rate min(beta / (t + gamma), 1 / rho).
    [[nodiscard]] double learning_rate(double t) const noexcept;

    bool operator==(const ConvergenceParams&) const = default;
};

struct ControlVector {
    int I = 1;  // local iterations
    int K = 1;  // sampled devices per round
    int m = 32; // uplink precision
    int n = 32; // training precision

    auto operator<=>(const ControlVector&) const = default;
    [[nodiscard]] std::string to_string() const;
};

/// Continuous relaxation of ControlVector used by the solvers.
struct RelaxedControl {
    double I = 1, K = 1, m = 32, n = 32;

    RelaxedControl() = default;
    RelaxedControl(double I_, double K_, double m_, double n_) : I(I_), K(K_), m(m_), n(n_) {}
    RelaxedControl(const ControlVector& c)  // NOLINT(google-explicit-constructor)
        : I(c.I), K(c.K), m(c.m), n(c.n) {}

    [[nodiscard]] double& operator[](int i) noexcept;
    [[nodiscard]] double operator[](int i) const noexcept;
    bool operator==(const RelaxedControl&) const = default;
};

double psi1(double n, const ConvergenceParams& params, const ModelArch& arch) noexcept;
double psi2(const RelaxedControl& ctrl, const ConvergenceParams& params, const ModelArch& arch) noexcept;

/// Right-hand side of the optimality-gap bound after T rounds.
double convergence_bound(double T, const RelaxedControl& ctrl, const ConvergenceParams& params,
                         const ModelArch& arch) noexcept;

/// 2 eps / L - beta psi1 / (beta mu - 1); rounds are finite only when this is positive.
double accuracy_margin(double n, const ConvergenceParams& params, const ModelArch& arch) noexcept;

/// Smallest training precision whose quantization floor sits strictly below epsilon (>= 2).
int min_precision(const ConvergenceParams& params, const ModelArch& arch);

/// Inverse-variance sampling weights. Zero-variance devices, if any, share all the mass uniformly.
std::vector<double> optimal_sampling(std::span<const double> sigma);

/// Rounds needed to reach epsilon (real valued). Throws InfeasibleError when n is below n_min.
double g2_rounds(const RelaxedControl& ctrl, const ConvergenceParams& params, const ModelArch& arch);

/// Expected total energy K T sum_k p_k (E_UL,k(m) + I E_C(n)) with T = g2_rounds.
double g1_energy(const RelaxedControl& ctrl, const ConvergenceParams& params, const ModelArch& arch,
                 const ChipSpec& chip, std::span<const LinkSpec> links);

/// Box (and optional discrete level sets) of admissible controls.
struct Bounds {
    int I_min = 1;
    int I_max = 30;
    int K_min = 1;
    int K_max = 50;
    int m_min = 2;
    int m_max = 32;
    int n_min = 2;
    int n_max = 32;
    std::vector<int> m_levels;  // empty: every integer in [m_min, m_max]
    std::vector<int> n_levels;

    [[nodiscard]] bool contains(const ControlVector& c) const noexcept;
    [[nodiscard]] std::vector<int> levels_m() const;
    [[nodiscard]] std::vector<int> levels_n() const;
    [[nodiscard]] RelaxedControl lower() const noexcept { return {double(I_min), double(K_min), double(m_min), double(n_min)}; }
    [[nodiscard]] RelaxedControl upper() const noexcept { return {double(I_max), double(K_max), double(m_max), double(n_max)}; }
};

struct Objectives {
    double g1 = 0;  // joules
    double g2 = 0;  // rounds
};

/// A fully specified instance of the energy/rounds problem with cached sums.
/// Evaluation never throws; infeasible controls evaluate to +inf.
class Problem {
public:
    Problem(ConvergenceParams params, ModelArch arch, ChipSpec chip, std::vector<LinkSpec> links, Bounds bounds);

    [[nodiscard]] const ConvergenceParams& params() const noexcept { return params_; }
    [[nodiscard]] const ModelArch& arch() const noexcept { return arch_; }
    [[nodiscard]] const ChipSpec& chip() const noexcept { return chip_; }
    [[nodiscard]] const std::vector<LinkSpec>& links() const noexcept { return links_; }
    [[nodiscard]] const Bounds& bounds() const noexcept { return bounds_; }
    [[nodiscard]] int num_devices() const noexcept { return static_cast<int>(links_.size()); }
    [[nodiscard]] int n_min() const noexcept { return n_min_; }

    /// M_C = sum_k p_k P_k d / r_k, expected uplink joules per bit of precision.
    [[nodiscard]] double uplink_energy_per_bit() const noexcept { return uplink_per_bit_; }
    /// sum_k p_k E_C,k(n); every device carries the same chip.
    [[nodiscard]] double iteration_energy(double n) const noexcept;
    /// K sum_k p_k (E_UL,k(m) + I E_C(n))
    [[nodiscard]] double round_energy(const RelaxedControl& c) const noexcept;

    [[nodiscard]] double rounds(const RelaxedControl& c) const noexcept;
    [[nodiscard]] double energy(const RelaxedControl& c) const noexcept;
    [[nodiscard]] Objectives evaluate(const RelaxedControl& c) const noexcept;

    /// Clamp into the continuous box.
    [[nodiscard]] RelaxedControl clamp(const RelaxedControl& c) const noexcept;

    /// Copy of this problem with different bounds (n range is re-clamped to n_min).
    [[nodiscard]] Problem with_bounds(Bounds b) const;

private:
    ConvergenceParams params_;
    ModelArch arch_;
    ChipSpec chip_;
    std::vector<LinkSpec> links_;
    Bounds bounds_;
    int n_min_ = 2;
    double uplink_per_bit_ = 0;
    double backprop_ = 0;
};

}  // namespace greenfl

#endif
