#pragma once

#include "ptmech/errors.hpp"

namespace ptmech::numerics {

/// Central tolerance bundle. Defaults are the ones every module falls back to.
struct Tolerances {
    double ode_rel = 1e-9;
    double ode_abs = 1e-12;
    double eig_residual = 1e-10;
    double expm_tol = 1e-12;
    double quad_rel = 1e-8;
    double root_residual = 1e-10;

    void validate() const {
        if (!(ode_rel > 0 && ode_abs > 0 && eig_residual > 0 && expm_tol > 0 &&
              quad_rel > 0 && root_residual > 0)) {
            throw ValidationError("Tolerances: every tolerance must be > 0");
        }
    }

    bool operator==(const Tolerances&) const = default;
};

}  // namespace ptmech::numerics
