#include "greenfl/convergence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <fmt/format.h>

#include "greenfl/errors.hpp"

namespace greenfl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double pow4(double x) noexcept { return std::exp2(2.0 * x); }

}  // namespace

void ConvergenceParams::validate() const {
    if (!(L > 0)) throw ConfigError("L must be positive", "convergence.L");
    if (!(mu > 0)) throw ConfigError("mu must be positive", "convergence.mu");
    if (!(L >= mu)) throw ConfigError("L must be >= mu", "convergence.L");
    if (!(G > 0)) throw ConfigError("G must be positive", "convergence.G");
    if (!(Gamma >= 0)) throw ConfigError("Gamma must be non-negative", "convergence.Gamma");
    if (!(beta * mu > 1.0)) throw ConfigError("beta * mu must exceed 1", "convergence.beta");
    if (!(gamma >= 0)) throw ConfigError("gamma must be >= 0", "convergence.gamma");
    if (!(rho > mu)) throw ConfigError("rho must exceed mu", "convergence.rho");
    if (!(epsilon > 0)) throw ConfigError("epsilon must be positive", "convergence.epsilon");
    if (sigma.empty()) throw ConfigError("sigma must have one entry per device", "convergence.sigma");
    if (sigma.size() != probs.size()) throw ConfigError("sigma and probs differ in length", "convergence.sigma");
    for (double s : sigma) {
        if (!(s >= 0) || !std::isfinite(s)) throw ConfigError("sigma entries must be finite and >= 0", "convergence.sigma");
    }
    double total = 0;
    for (double p : probs) {
        if (!(p >= 0)) throw ConfigError("sampling probabilities must be >= 0", "convergence.probs");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) throw ConfigError("sampling probabilities must sum to 1", "convergence.probs");
}

double ConvergenceParams::sampling_variance() const noexcept {
    double s = 0;
    for (std::size_t k = 0; k < probs.size() && k < sigma.size(); ++k) s += probs[k] * probs[k] * sigma[k] * sigma[k];
    return s;
}

double ConvergenceParams::learning_rate(double t) const noexcept { return std::min(beta / (t + gamma), 1.0 / rho); }

std::string ControlVector::to_string() const { return fmt::format("({},{},{},{})", I, K, m, n); }

double& RelaxedControl::operator[](int i) noexcept {
    switch (i) {
        case 0: return I;
        case 1: return K;
        case 2: return m;
        default: return n;
    }
}

double RelaxedControl::operator[](int i) const noexcept {
    switch (i) {
        case 0: return I;
        case 1: return K;
        case 2: return m;
        default: return n;
    }
}

double psi1(double n, const ConvergenceParams& params, const ModelArch& arch) noexcept {
    return arch.params * (params.rho - params.mu) / pow4(n);
}

double psi2(const RelaxedControl& c, const ConvergenceParams& params, const ModelArch& arch) noexcept {
    const double G2 = params.G * params.G;
    return params.sampling_variance() + 4.0 * (c.I - 1.0) * (c.I - 1.0) * G2 +
           4.0 * arch.params * c.I * G2 / (c.K * pow4(c.m)) + 4.0 * c.I * c.I * G2 / c.K +
           4.0 * params.L * params.Gamma;
}

double convergence_bound(double T, const RelaxedControl& c, const ConvergenceParams& params,
                         const ModelArch& arch) noexcept {
    const double bm = params.beta * params.mu - 1.0;
    return params.L * params.beta / (2.0 * bm) *
           (params.beta * psi2(c, params, arch) / (T * c.I + params.gamma) + psi1(c.n, params, arch));
}

double accuracy_margin(double n, const ConvergenceParams& params, const ModelArch& arch) noexcept {
    return 2.0 * params.epsilon / params.L - params.beta * psi1(n, params, arch) / (params.beta * params.mu - 1.0);
}

int min_precision(const ConvergenceParams& params, const ModelArch& arch) {
    const double arg = params.L * params.beta * arch.params * (params.rho - params.mu) / (2.0 * params.epsilon);
    if (!(arg > 0) || !std::isfinite(arg)) {
        throw ConfigError("minimum-precision argument must be positive", "convergence");
    }
    int n = std::max(2, static_cast<int>(std::ceil(0.5 * std::log2(arg))));
    // strict positivity of the margin; the ceiling can land on an exact root
    while (accuracy_margin(n, params, arch) <= 0.0) ++n;
    return n;
}

std::vector<double> optimal_sampling(std::span<const double> sigma) {
    if (sigma.empty()) throw std::invalid_argument("optimal_sampling: empty sigma");
    for (double s : sigma) {
        if (!(s >= 0) || !std::isfinite(s)) throw std::invalid_argument("optimal_sampling: sigma must be finite and >= 0");
    }
    std::vector<double> p(sigma.size(), 0.0);
    const auto zeros = std::count(sigma.begin(), sigma.end(), 0.0);
    if (zeros > 0) {
        for (std::size_t k = 0; k < sigma.size(); ++k) {
            if (sigma[k] == 0.0) p[k] = 1.0 / static_cast<double>(zeros);
        }
        return p;
    }
    double total = 0;
    for (std::size_t k = 0; k < sigma.size(); ++k) {
        p[k] = 1.0 / (sigma[k] * sigma[k]);
        total += p[k];
    }
    for (double& v : p) v /= total;
    return p;
}

double g2_rounds(const RelaxedControl& c, const ConvergenceParams& params, const ModelArch& arch) {
    const double margin = accuracy_margin(c.n, params, arch);
    if (!(margin > 0)) {
        throw InfeasibleError(fmt::format("training precision n={} cannot reach epsilon={}", c.n, params.epsilon));
    }
    const double bm = params.beta * params.mu - 1.0;
    return params.beta * params.beta * psi2(c, params, arch) / (c.I * bm * margin) - params.gamma / c.I;
}

double g1_energy(const RelaxedControl& c, const ConvergenceParams& params, const ModelArch& arch,
                 const ChipSpec& chip, std::span<const LinkSpec> links) {
    if (links.size() != params.probs.size()) throw std::invalid_argument("g1_energy: links and probs differ in length");
    const double T = g2_rounds(c, params, arch);
    const double ec = local_iteration_energy(c.n, chip, arch);
    double per_round = 0;
    for (std::size_t k = 0; k < links.size(); ++k) {
        per_round += params.probs[k] * (uplink_energy(c.m, arch, links[k]) + c.I * ec);
    }
    return c.K * T * per_round;
}

bool Bounds::contains(const ControlVector& c) const noexcept {
    if (c.I < I_min || c.I > I_max || c.K < K_min || c.K > K_max) return false;
    if (c.m < m_min || c.m > m_max || c.n < n_min || c.n > n_max) return false;
    if (!m_levels.empty() && std::find(m_levels.begin(), m_levels.end(), c.m) == m_levels.end()) return false;
    if (!n_levels.empty() && std::find(n_levels.begin(), n_levels.end(), c.n) == n_levels.end()) return false;
    return true;
}

static std::vector<int> levels_in(const std::vector<int>& explicit_levels, int lo, int hi) {
    std::vector<int> out;
    if (explicit_levels.empty()) {
        for (int v = lo; v <= hi; ++v) out.push_back(v);
    } else {
        for (int v : explicit_levels) {
            if (v >= lo && v <= hi) out.push_back(v);
        }
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
    }
    return out;
}

std::vector<int> Bounds::levels_m() const { return levels_in(m_levels, m_min, m_max); }
std::vector<int> Bounds::levels_n() const { return levels_in(n_levels, n_min, n_max); }

Problem::Problem(ConvergenceParams params, ModelArch arch, ChipSpec chip, std::vector<LinkSpec> links, Bounds bounds)
    : params_(std::move(params)), arch_(arch), chip_(chip), links_(std::move(links)), bounds_(std::move(bounds)) {
    params_.validate();
    try {
        arch_.validate();
        chip_.validate();
        for (const auto& l : links_) l.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (links_.size() != params_.probs.size()) throw ConfigError("network size and sigma length differ", "convergence.sigma");
    if (bounds_.I_min < 1 || bounds_.I_max < bounds_.I_min) throw ConfigError("invalid I range", "bounds.I_max");
    if (bounds_.K_min < 1 || bounds_.K_max < bounds_.K_min) throw ConfigError("invalid K range", "bounds.K_min");
    if (bounds_.K_max > num_devices()) throw ConfigError("K_max exceeds the number of devices", "bounds.K_max");
    if (bounds_.m_min < 2 || bounds_.m_max < bounds_.m_min) throw ConfigError("invalid m range", "bounds.m_max");
    if (bounds_.n_max > arch_.n_max || bounds_.m_max > arch_.m_max) {
        throw ConfigError("precision bound exceeds the architecture maximum", "bounds.n_max");
    }

    n_min_ = min_precision(params_, arch_);
    bounds_.n_min = std::max(bounds_.n_min, n_min_);
    if (bounds_.n_min > bounds_.n_max) {
        throw InfeasibleError(fmt::format("epsilon={} needs n >= {} but n_max is {}", params_.epsilon, n_min_, bounds_.n_max));
    }
    if (bounds_.levels_n().empty() || bounds_.levels_m().empty()) throw ConfigError("no admissible precision levels", "bounds");

    uplink_per_bit_ = 0;
    for (std::size_t k = 0; k < links_.size(); ++k) {
        uplink_per_bit_ += params_.probs[k] * uplink_energy(1.0, arch_, links_[k]);
    }
    backprop_ = backprop_energy(chip_, arch_);
}

double Problem::iteration_energy(double n) const noexcept { return inference_energy(n, chip_, arch_) + backprop_; }

double Problem::round_energy(const RelaxedControl& c) const noexcept {
    return c.K * (uplink_per_bit_ * c.m + c.I * iteration_energy(c.n));
}

double Problem::rounds(const RelaxedControl& c) const noexcept {
    const double margin = accuracy_margin(c.n, params_, arch_);
    if (!(margin > 0)) return kInf;
    const double bm = params_.beta * params_.mu - 1.0;
    return params_.beta * params_.beta * psi2(c, params_, arch_) / (c.I * bm * margin) - params_.gamma / c.I;
}

double Problem::energy(const RelaxedControl& c) const noexcept {
    const double T = rounds(c);
    if (!std::isfinite(T)) return kInf;
    return T * round_energy(c);
}

Objectives Problem::evaluate(const RelaxedControl& c) const noexcept {
    const double T = rounds(c);
    if (!std::isfinite(T)) return {kInf, kInf};
    return {T * round_energy(c), T};
}

RelaxedControl Problem::clamp(const RelaxedControl& c) const noexcept {
    const auto lo = bounds_.lower();
    const auto hi = bounds_.upper();
    RelaxedControl out;
    for (int i = 0; i < 4; ++i) out[i] = std::clamp(c[i], lo[i], hi[i]);
    return out;
}

Problem Problem::with_bounds(Bounds b) const { return Problem(params_, arch_, chip_, links_, std::move(b)); }

}  // namespace greenfl
