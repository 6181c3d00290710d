#ifndef GREENFL_TESTS_SUPPORT_HPP
#define GREENFL_TESTS_SUPPORT_HPP

#include <cmath>
#include <string>

#include "greenfl/config.hpp"

namespace greenfl::test {

inline RunConfig default_config(int N = 50) {
    RunConfig cfg = parse_config("{}");
    cfg.network.N = N;
    return cfg;
}

inline Problem default_problem(int N = 50) { return *make_scenario(default_config(N), false).problem; }

inline double rel_diff(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace greenfl::test

#endif
