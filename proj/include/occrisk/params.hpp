#pragma once

// Default parameter set for simulations.

#include <cmath>

#include "occrisk/error.hpp"

namespace occrisk {

struct VehicleParams {
    double length = 4.88;  // l_v, m
    double width = 1.86;   // w_v, m
};

struct PlannerParams {
    double forecast_horizon = 1.5;      // T_f, s
    double sigma = 0.5 * 4.88;          // potential bandwidth, m
    double max_offset = 0.75 * 1.86;    // b_bar, m
    double lambda = 16384.0 * 1e-6;     // weight of the speed cost
    double v_des = 10.0;
    double v_min = 0.0;
    double v_max = 12.0;
    double a_min = -8.0;
    double a_max = 2.5;
    double discard_factor = 2.0;        // particles with r >= factor * sigma are dropped
    double grid_step = 0.005;           // candidate spacing, m/s^2

    double discard_radius() const { return discard_factor * sigma; }

    void validate() const {
        if (!(forecast_horizon > 0.0)) throw ConfigurationError("T_f must be positive");
        if (!(sigma > 0.0)) throw ConfigurationError("sigma must be positive");
        if (!(max_offset > 0.0)) throw ConfigurationError("b_bar must be positive");
        if (!(lambda >= 0.0)) throw ConfigurationError("lambda must be non-negative");
        if (!(a_min < 0.0 && 0.0 < a_max)) throw ConfigurationError("need a_min < 0 < a_max");
        if (!(v_min <= v_des && v_des <= v_max)) throw ConfigurationError("need v_min <= v_des <= v_max");
        if (!(discard_factor > 0.0)) throw ConfigurationError("discard factor must be positive");
        if (!(grid_step > 0.0)) throw ConfigurationError("grid step must be positive");
    }
};

}  // namespace occrisk
