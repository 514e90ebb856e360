// ode.hpp - deterministic explicit Runge-Kutta integrators.
//
// State types are Eigen dense objects (vectors or matrices, real or complex);
// anything supporting +, scalar *, cwiseAbs() and allFinite() works.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <sstream>
#include <vector>

#include "ptmech/errors.hpp"

namespace ptmech::numerics {

template <class State>
struct Trajectory {
    std::vector<double> t;
    std::vector<State> y;
};

struct FixedStepOptions {
    double dt = 1e-3;
    std::size_t sample_every = 1;   // keep every n-th step (the final step is always kept)
    double overflow_guard = 1e12;
    // Step-doubling error check every `check_every` steps; 0 disables it.
    std::size_t check_every = 0;
    double check_tol = 1e-6;
};

struct AdaptiveOptions {
    double rel_tol = 1e-9;
    double abs_tol = 1e-12;
    double h_initial = 0.0;  // 0 = pick from the first sample interval
    double h_min = 1e-14;
    std::size_t max_steps = 50'000'000;
    double overflow_guard = 1e12;
};

namespace detail {

template <class State>
double max_abs(const State& y) {
    return static_cast<double>(y.cwiseAbs().maxCoeff());
}

template <class State>
void guard(const State& y, double t, double limit) {
    if (!y.allFinite() || max_abs(y) > limit) {
        std::ostringstream os;
        os << "integration diverged at t=" << t << " (|y|max exceeds " << limit << ")";
        throw Diverged(os.str());
    }
}

template <class State, class Rhs>
State rk4_step(Rhs& f, double t, const State& y, double h) {
    const State k1 = f(t, y);
    const State k2 = f(t + 0.5 * h, State(y + (0.5 * h) * k1));
    const State k3 = f(t + 0.5 * h, State(y + (0.5 * h) * k2));
    const State k4 = f(t + h, State(y + h * k3));
    return State(y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
}

}  // namespace detail

/// Classical fourth-order Runge-Kutta on a fixed grid t0 + k*dt; the last
/// step is shortened to land exactly on t1. `visit(t, y)` is called for every
/// retained sample, including t0.
template <class State, class Rhs, class Visitor>
void rk4_visit(Rhs&& f, State y, double t0, double t1, const FixedStepOptions& opt,
               Visitor&& visit) {
    if (!(opt.dt > 0)) throw ValidationError("rk4: dt must be > 0");
    if (t1 < t0) throw ValidationError("rk4: t1 must be >= t0");
    const std::size_t stride = std::max<std::size_t>(1, opt.sample_every);
    const double span = t1 - t0;
    std::size_t n = static_cast<std::size_t>(std::ceil(span / opt.dt - 1e-9));
    if (span > 0 && n == 0) n = 1;

    detail::guard(y, t0, opt.overflow_guard);
    visit(t0, static_cast<const State&>(y));
    double t = t0;
    for (std::size_t k = 0; k < n; ++k) {
        const double t_next = (k + 1 == n) ? t1 : t0 + static_cast<double>(k + 1) * opt.dt;
        const double h = t_next - t;
        State y_next = detail::rk4_step(f, t, y, h);
        if (opt.check_every > 0 && k % opt.check_every == 0) {
            const State half = detail::rk4_step(f, t, y, 0.5 * h);
            const State two_half = detail::rk4_step(f, t + 0.5 * h, half, 0.5 * h);
            const double scale = std::max(1.0, detail::max_abs(y_next));
            const double err = detail::max_abs(State(two_half - y_next)) / scale;
            if (err > opt.check_tol) {
                std::ostringstream os;
                os << "rk4: step-doubling error " << err << " exceeds " << opt.check_tol
                   << " at t=" << t << " (dt=" << opt.dt << ")";
                throw StepTooLarge(os.str());
            }
        }
        y = std::move(y_next);
        t = t_next;
        detail::guard(y, t, opt.overflow_guard);
        if ((k + 1) % stride == 0 || k + 1 == n) visit(t, static_cast<const State&>(y));
    }
}

template <class State, class Rhs>
Trajectory<State> rk4(Rhs&& f, const State& y0, double t0, double t1,
                      const FixedStepOptions& opt) {
    Trajectory<State> out;
    rk4_visit(f, y0, t0, t1, opt, [&](double t, const State& y) {
        out.t.push_back(t);
        out.y.push_back(y);
    });
    return out;
}

/// Dormand-Prince 5(4) with a standard PI-free step controller. The solution
/// is reported at exactly the requested `sample_times` (steps are clipped to
/// land on them), which must be non-decreasing and start at or after t0.
template <class State, class Rhs>
Trajectory<State> dopri5(Rhs&& f, State y, double t0, std::span<const double> sample_times,
                         const AdaptiveOptions& opt) {
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                            a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                            e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

    if (!(opt.rel_tol > 0 && opt.abs_tol > 0)) throw ValidationError("dopri5: tolerances must be > 0");
    Trajectory<State> out;
    double t = t0;
    detail::guard(y, t, opt.overflow_guard);
    double h = opt.h_initial;
    if (!(h > 0)) {
        const double first = sample_times.empty() ? 1.0 : std::max(sample_times.back() - t0, 1e-12);
        h = std::min(1e-3, 0.01 * first);
    }
    State k1 = f(t, y);
    std::size_t steps = 0;
    for (double target : sample_times) {
        if (target < t - 1e-15 * std::max(1.0, std::abs(t))) {
            throw ValidationError("dopri5: sample_times must be non-decreasing and >= t0");
        }
        while (t < target) {
            if (++steps > opt.max_steps) throw NoConvergence("dopri5: step budget exhausted");
            bool clipped = false;
            double hs = h;
            if (t + hs >= target) {
                hs = target - t;
                clipped = true;
            }
            const State k2 = f(t + c2 * hs, State(y + hs * (a21 * k1)));
            const State k3 = f(t + c3 * hs, State(y + hs * (a31 * k1 + a32 * k2)));
            const State k4 = f(t + c4 * hs, State(y + hs * (a41 * k1 + a42 * k2 + a43 * k3)));
            const State k5 = f(t + c5 * hs, State(y + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4)));
            const State k6 = f(t + hs, State(y + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5)));
            State y_new = y + hs * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
            const State k7 = f(t + hs, y_new);
            const State err = hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

            const auto scale = (opt.abs_tol + opt.rel_tol *
                                 y.cwiseAbs().cwiseMax(y_new.cwiseAbs()).array()).eval();
            const double ratio = (err.cwiseAbs().array() / scale).maxCoeff();
            if (!std::isfinite(ratio)) throw Diverged("dopri5: non-finite error estimate");

            if (ratio <= 1.0) {
                t = clipped ? target : t + hs;
                y = std::move(y_new);
                k1 = k7;
                detail::guard(y, t, opt.overflow_guard);
            }
            const double factor = ratio == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(ratio, -0.2), 0.2, 5.0);
            if (!(clipped && ratio <= 1.0)) h = hs * factor;
            if (h < opt.h_min) {
                std::ostringstream os;
                os << "dopri5: step size fell below h_min at t=" << t;
                throw StepTooLarge(os.str());
            }
        }
        out.t.push_back(target);
        out.y.push_back(y);
    }
    return out;
}

}  // namespace ptmech::numerics
