// roots.hpp - small dense nonlinear solvers (Newton, damped fixed point).

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>

#include "ptmech/errors.hpp"

namespace ptmech::numerics {

using VectorFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
using JacobianFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;

struct RootOptions {
    double residual_tol = 1e-10;
    int max_iterations = 100;
    double fd_step = 1e-7;  // relative step for the finite-difference Jacobian
};

struct RootResult {
    Eigen::VectorXd x;
    double residual = 0.0;
    int iterations = 0;
    double min_abs_det = 0.0;  // smallest |det J| seen; near zero flags a fold
};

inline Eigen::MatrixXd finite_difference_jacobian(const VectorFn& f, const Eigen::VectorXd& x,
                                                  const Eigen::VectorXd& fx, double rel_step) {
    Eigen::MatrixXd jac(fx.size(), x.size());
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        Eigen::VectorXd xp = x;
        const double h = rel_step * std::max(1.0, std::abs(x(j)));
        xp(j) += h;
        jac.col(j) = (f(xp) - fx) / h;
    }
    return jac;
}

/// Newton iteration with backtracking on ||f||. Uses a forward-difference
/// Jacobian when none is supplied.
inline RootResult root_solve(const VectorFn& f, const Eigen::VectorXd& x0,
                             const std::optional<JacobianFn>& jacobian = std::nullopt,
                             const RootOptions& opt = {}) {
    RootResult res;
    res.x = x0;
    Eigen::VectorXd fx = f(res.x);
    res.residual = fx.cwiseAbs().maxCoeff();
    res.min_abs_det = std::numeric_limits<double>::infinity();
    while (res.residual >= opt.residual_tol) {
        if (res.iterations++ >= opt.max_iterations) {
            std::ostringstream os;
            os << "root_solve: residual " << res.residual << " after " << opt.max_iterations
               << " Newton iterations";
            throw NoConvergence(os.str());
        }
        const Eigen::MatrixXd jac = jacobian ? (*jacobian)(res.x)
                                             : finite_difference_jacobian(f, res.x, fx, opt.fd_step);
        const Eigen::FullPivLU<Eigen::MatrixXd> lu(jac);
        res.min_abs_det = std::min(res.min_abs_det, std::abs(lu.determinant()));
        if (!lu.isInvertible()) throw NoConvergence("root_solve: singular Jacobian");
        const Eigen::VectorXd step = lu.solve(-fx);

        double lambda = 1.0;
        Eigen::VectorXd trial;
        Eigen::VectorXd f_trial;
        double r_trial = 0.0;
        for (int k = 0; k < 30; ++k, lambda *= 0.5) {
            trial = res.x + lambda * step;
            f_trial = f(trial);
            r_trial = f_trial.cwiseAbs().maxCoeff();
            if (std::isfinite(r_trial) && r_trial < res.residual) break;
        }
        if (!(r_trial < res.residual)) {
            throw NoConvergence("root_solve: line search failed to reduce the residual");
        }
        res.x = trial;
        fx = f_trial;
        res.residual = r_trial;
    }
    return res;
}

struct FixedPointOptions {
    double damping = 1.0;  // x <- (1-d) x + d g(x)
    double tol = 1e-12;    // on max |g(x) - x|
    int max_iterations = 200;
    double stall_ratio = 0.95;  // consecutive-change ratio that counts as stalling
};

struct FixedPointResult {
    Eigen::VectorXd x;
    bool converged = false;
    int iterations = 0;
    double last_change = 0.0;
};

/// Damped fixed-point iteration; reports (rather than throws) a stall so the
/// caller can hand over to Newton.
inline FixedPointResult fixed_point(const VectorFn& g, const Eigen::VectorXd& x0,
                                    const FixedPointOptions& opt = {}) {
    FixedPointResult res;
    res.x = x0;
    double prev_change = std::numeric_limits<double>::infinity();
    int stalls = 0;
    for (res.iterations = 0; res.iterations < opt.max_iterations; ++res.iterations) {
        const Eigen::VectorXd gx = g(res.x);
        const Eigen::VectorXd next = (1.0 - opt.damping) * res.x + opt.damping * gx;
        res.last_change = (next - res.x).cwiseAbs().maxCoeff();
        res.x = next;
        if (!std::isfinite(res.last_change)) return res;
        if (res.last_change <= opt.tol * std::max(1.0, res.x.cwiseAbs().maxCoeff())) {
            res.converged = true;
            return res;
        }
        stalls = (res.last_change > opt.stall_ratio * prev_change) ? stalls + 1 : 0;
        if (stalls >= 3) return res;
        prev_change = res.last_change;
    }
    return res;
}

}  // namespace ptmech::numerics
