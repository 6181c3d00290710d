#ifndef GREENFL_SOLVERS_HPP
#define GREENFL_SOLVERS_HPP

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "greenfl/convergence.hpp"

namespace greenfl {

/// H1 I^3 + H2 I^2 + H3 = 0, the stationarity condition of g1 in I.
struct CubicCoeffs {
    double H1 = 0;
    double H2 = 0;
    double H3 = 0;

    [[nodiscard]] double residual(double I) const noexcept { return (H1 * I + H2) * I * I + H3; }
};

/// m = M_A 4^m + M_B, the stationarity condition of g1 in m.
struct TranscendentalCoeffs {
    double M_A = 0;
    double M_B = 0;
    double M_C = 0;  // expected uplink joules per bit of precision

    [[nodiscard]] double residual(double m) const noexcept;
};

/// Real roots of a x^3 + b x^2 + c x + d, ascending. Degenerates to lower degree when a == 0.
std::vector<double> solve_cubic(double a, double b, double c, double d);

/// The positive root of the cubic with positive curvature, if any.
std::optional<double> stationary_I(const CubicCoeffs& h);

CubicCoeffs cubic_coeffs(const Problem& prob, double K, double m, double n);
TranscendentalCoeffs transcendental_coeffs(const Problem& prob, double I, double K, double n);

enum class LambertBranch { principal, minus_one };

/// w with w e^w = x. Throws std::domain_error outside the real domain of the branch.
double lambert_w(double x, LambertBranch branch = LambertBranch::principal);

struct RootResult {
    double value = 0;       // clamped optimum
    double raw = 0;         // stationary point before clamping (NaN when none)
    double residual = 0;    // stationarity residual at raw
    bool fallback = false;  // no usable interior root, boundary argmin returned
};

RootResult optimal_I_energy(const Problem& prob, double K, double m, double n);
RootResult optimal_m_energy(const Problem& prob, double I, double K, double n);
int optimal_n_energy(const Problem& prob, double I, double K, double m);

struct SolveResult {
    ControlVector ctrl;
    RelaxedControl relaxed;
    Objectives obj;
    int iterations = 0;
    bool converged = true;
    bool fallback = false;
};

/// Block-coordinate descent I' -> m' -> n' with K fixed at K_min.
SolveResult minimize_g1(const Problem& prob, double eps_uto = 1e-6, int max_iters = 100);

/// Closed-form I'' with K, m, n at their upper bounds; integer scan over I when the closed form does not apply.
SolveResult minimize_g2(const Problem& prob);

/// Radicand of the closed-form I''; the closed form applies only when it is positive.
double rounds_I_radicand(const Problem& prob, double K, double m, double n);

using Objective = std::function<double(const RelaxedControl&)>;

/// Integer neighbours of a relaxed control: floor/ceil in I and K, adjacent admissible levels in m and n.
std::vector<ControlVector> integer_neighbors(const Problem& prob, const RelaxedControl& x);

/// The neighbour with the smallest finite objective. Raises n to n_min if every neighbour is infeasible.
ControlVector round_and_repair(const Problem& prob, const RelaxedControl& x, const Objective& objective);

struct BoxOptions {
    double tol = 1e-4;     // per-coordinate tolerance in unit-scaled coordinates
    int max_sweeps = 200;
    int samples = 8;       // coarse samples per line before golden section
};

/// Local minimization over the box [lo, hi] by line searches along coordinate and
/// conjugate (Powell) directions. `x` is the start and receives the minimizer.
double minimize_box(const Objective& f, const RelaxedControl& lo, const RelaxedControl& hi, RelaxedControl& x,
                    const BoxOptions& opts = {});

/// Individual minima needed to normalise the objectives.
struct Anchors {
    SolveResult x1;  // energy minimizer
    SolveResult x2;  // rounds minimizer

    [[nodiscard]] double u1(double g1) const noexcept { return (g1 - x1.obj.g1) / (x2.obj.g1 - x1.obj.g1); }
    [[nodiscard]] double u2(double g2) const noexcept { return (g2 - x2.obj.g2) / (x1.obj.g2 - x2.obj.g2); }
};

struct NbiOptions {
    std::vector<double> lambdas = {1e0, 1e1, 1e2, 1e3, 1e4, 1e5, 1e6};
    int starts = 8;
    double eps_out = 1e-3;
    BoxOptions box;
};

struct NbiResult {
    ControlVector ctrl;
    RelaxedControl relaxed;
    Objectives obj;           // at ctrl
    double zeta = 0;
    double s = 0;             // at ctrl
    double residual = 0;      // |1 - 2 zeta + u2 - u1| at ctrl
    double relaxed_residual = 0;
    std::vector<double> violation;  // |1 - 2 zeta + u2 - u1| at the end of each lambda stage
    bool flagged = false;
};

/// |1 - 2 zeta + u2 - u1|
double nbi_residual(const Anchors& a, double zeta, const Objectives& g) noexcept;

NbiResult nbi_subproblem(const Problem& prob, const Anchors& anchors, double zeta, const NbiOptions& opts,
                         uint64_t seed, const RelaxedControl* warm = nullptr);

}  // namespace greenfl

#endif
