#ifndef GREENFL_PARETO_HPP
#define GREENFL_PARETO_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "greenfl/solvers.hpp"

namespace greenfl {

struct ParetoPoint {
    ControlVector ctrl;
    double g1 = 0;
    double g2 = 0;
    double zeta = 0;
    double s = 0;
    double penalty_residual = 0;
    bool flagged = false;
    std::vector<double> violation;  // constraint residual per lambda stage
};

struct ParetoFront {
    std::vector<ParetoPoint> points;    // retained, zeta-ordered
    std::vector<ParetoPoint> excluded;  // flagged by the penalty check
    Anchors anchors;
    Objectives utopia;
    std::array<std::array<double, 2>, 2> phi{};  // column i = g(x_i*) - g*
    ControlVector disagreement_ctrl;
    Objectives disagreement;
};

/// (I_max, K_min, lowest m level, n_min)
ControlVector disagreement_point(const Problem& prob);

bool dominates(const Objectives& a, const Objectives& b) noexcept;

/// Drop dominated points and repeated controls, keeping zeta order.
std::vector<ParetoPoint> filter_nondominated(std::vector<ParetoPoint> pts);

ParetoFront build_front(const Problem& prob, int zeta_steps, const NbiOptions& opts = {}, uint64_t seed = 0,
                        double eps_uto = 1e-6);

/// Maximizer of (g1(D) - g1)(g2(D) - g2) over points with both factors positive; D itself if none.
ParetoPoint nbs_point(const ParetoFront& front);
/// Minimizer of g1 + g2.
ParetoPoint sum_point(const ParetoFront& front);

std::string front_csv(const ParetoFront& front, const std::string& config_hash, uint64_t seed);
std::string front_json(const ParetoFront& front, const std::string& config_hash, uint64_t seed);

}  // namespace greenfl

#endif
