// model.hpp - physical parameters, driven steady state and derived rates of
// two coupled optomechanical systems.
//
// All rates are normalized to the first cavity decay rate kappa[0]. Index 0
// is the blue-detuned (gain) subsystem in the canonical configuration and
// index 1 the red-detuned (damping) one, but nothing here assumes that.

#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "ptmech/errors.hpp"
#include "ptmech/numerics/roots.hpp"

namespace ptmech {

using cplx = std::complex<double>;
template <class T>
using Pair = std::array<T, 2>;

// --------------------------------------------------------------------------
// Parameters
// --------------------------------------------------------------------------

struct PhysicalParams {
    Pair<double> kappa{1.0, 1.0};  // cavity decay rates
    Pair<double> gamma{0.0, 0.0};  // intrinsic mechanical damping
    Pair<double> omega{1.0, 1.0};  // mechanical frequencies
    Pair<double> g{0.0, 0.0};      // single-photon optomechanical couplings
    Pair<double> delta{0.0, 0.0};  // bare detunings (cavity minus drive)
    Pair<double> drive{0.0, 0.0};  // driving strengths, real >= 0
    double j_coupling = 0.0;       // mechanical coupling J
    Pair<double> n_th{0.0, 0.0};   // bath occupations

    /// Throws ValidationError naming the first violated invariant.
    void validate() const {
        auto fail = [](const std::string& msg) { throw ValidationError(msg); };
        for (int i = 0; i < 2; ++i) {
            const std::string idx = "[" + std::to_string(i) + "]";
            if (!std::isfinite(kappa[i]) || !(kappa[i] > 0)) fail("kappa" + idx + " must be > 0");
            if (!std::isfinite(omega[i]) || !(omega[i] > 0)) fail("omega" + idx + " must be > 0");
            if (!std::isfinite(gamma[i]) || !(gamma[i] >= 0)) fail("gamma" + idx + " must be >= 0");
            if (!std::isfinite(drive[i]) || !(drive[i] >= 0)) fail("drive" + idx + " must be >= 0");
            if (!std::isfinite(n_th[i]) || !(n_th[i] >= 0)) fail("n_th" + idx + " must be >= 0");
            if (!std::isfinite(g[i])) fail("g" + idx + " must be finite");
            if (!std::isfinite(delta[i])) fail("delta" + idx + " must be finite");
        }
        if (!std::isfinite(j_coupling) || !(j_coupling >= 0)) fail("j_coupling must be >= 0");
        if (!(j_coupling < std::min(omega[0], omega[1]))) {
            fail("j_coupling must be < min(omega)");
        }
    }

    /// Subsystem labels 1 <-> 2 exchanged.
    PhysicalParams swapped() const {
        auto sw = [](Pair<double> p) { return Pair<double>{p[1], p[0]}; };
        PhysicalParams s = *this;
        s.kappa = sw(kappa);
        s.gamma = sw(gamma);
        s.omega = sw(omega);
        s.g = sw(g);
        s.delta = sw(delta);
        s.drive = sw(drive);
        s.n_th = sw(n_th);
        return s;
    }

    /// The working point used throughout the figures: omega_m = 10,
    /// g = 1e-4, drive = 5000, Delta = -/+ omega_m, J = 0.01, gamma = 1e-5.
    static PhysicalParams canonical() {
        PhysicalParams p;
        p.kappa = {1.0, 1.0};
        p.gamma = {1e-5, 1e-5};
        p.omega = {10.0, 10.0};
        p.g = {1e-4, 1e-4};
        p.delta = {-10.0, 10.0};
        p.drive = {5000.0, 5000.0};
        p.j_coupling = 0.01;
        p.n_th = {0.0, 0.0};
        return p;
    }

    bool operator==(const PhysicalParams&) const = default;
};

// --------------------------------------------------------------------------
// Derived rates
// --------------------------------------------------------------------------

/// Radiation-pressure frequency shift 8|G|^2 omega / (kappa^2 + 16 omega^2).
inline double optical_spring_shift(cplx g_eff, double omega, double kappa) {
    if (!(kappa > 0)) throw DomainError("optical_spring_shift: kappa must be > 0");
    return 8.0 * std::norm(g_eff) * omega / (kappa * kappa + 16.0 * omega * omega);
}

/// Optomechanical gain/damping magnitude (4|G|^2/kappa) 16 omega^2 / (kappa^2 + 16 omega^2).
/// The sign comes from the detuning, see mechanical_gain_sign().
inline double optomechanical_rate(cplx g_eff, double omega, double kappa) {
    if (!(kappa > 0)) throw DomainError("optomechanical_rate: kappa must be > 0");
    const double w2 = 16.0 * omega * omega;
    return 4.0 * std::norm(g_eff) / kappa * w2 / (kappa * kappa + w2);
}

/// +1 (gain) for a blue-detuned cavity (Delta' < 0), -1 (damping) otherwise.
inline int mechanical_gain_sign(double delta_eff) { return delta_eff < 0.0 ? +1 : -1; }

/// Exceptional-point value of gamma_eff for the ideal PT dimer:
/// 2 sqrt(2) omega_m sqrt(1 - sqrt(1 - (J/omega_m)^2)).
inline double pt_threshold(double omega_m, double j) {
    if (!(omega_m > 0)) throw DomainError("pt_threshold: omega_m must be > 0");
    if (!(j >= 0)) throw DomainError("pt_threshold: J must be >= 0");
    if (j > omega_m) throw DomainError("pt_threshold: J must not exceed omega_m");
    const double x = j / omega_m;
    // 1 - sqrt(1 - x^2) without cancellation
    const double inner = x * x / (1.0 + std::sqrt(1.0 - x * x));
    return 2.0 * std::numbers::sqrt2 * omega_m * std::sqrt(inner);
}

/// Bose-Einstein occupation 1/(e^x - 1) for x = hbar omega / (k_B T).
inline double bose_einstein(double x) {
    if (std::isnan(x) || x < 0) throw DomainError("bose_einstein: x must be >= 0");
    if (std::isinf(x)) return 0.0;
    return 1.0 / std::expm1(x);
}

namespace constants {
inline constexpr double hbar = 1.054571817e-34;  // J s
inline constexpr double k_boltzmann = 1.380649e-23;  // J / K
}  // namespace constants

/// Thermal phonon number for an angular frequency (rad/s) and temperature
/// (K). T = 0 gives exactly 0.
inline double thermal_occupation(double omega, double temperature) {
    if (!(temperature >= 0)) throw DomainError("thermal_occupation: temperature must be >= 0");
    if (!(omega > 0)) throw DomainError("thermal_occupation: omega must be > 0");
    if (temperature == 0.0) return 0.0;
    return bose_einstein(constants::hbar * omega / (constants::k_boltzmann * temperature));
}

// --------------------------------------------------------------------------
// Working point
// --------------------------------------------------------------------------

struct WorkingPoint {
    Pair<cplx> alpha{};          // steady cavity amplitudes
    Pair<double> xi{};           // steady mechanical displacements
    Pair<double> delta_eff{};    // Delta'_i = Delta_i - g_i xi_i
    Pair<cplx> g_eff{};          // G_i = g_i alpha_i
    Pair<double> spring_shift{}; // delta omega_i (magnitude)
    Pair<double> rate{};         // Gamma_i (magnitude)
    double gamma_eff = 0.0;      // (Gamma_1 + Gamma_2) / 2
    double residual = 0.0;       // scaled residual of the steady-state equations
    bool from_steady_state = false;
    std::vector<std::string> warnings;

    int gain_sign(int i) const { return mechanical_gain_sign(delta_eff[i]); }

    /// Builds a working point directly from effective couplings and
    /// detunings, bypassing the steady-state solve (how the stability map is
    /// parameterized). alpha and xi are back-filled when g_i != 0.
    static WorkingPoint from_effective(const PhysicalParams& p, Pair<cplx> g_eff, Pair<double> delta_eff);

    bool operator==(const WorkingPoint&) const = default;
};

namespace detail {

inline void fill_rates(const PhysicalParams& p, WorkingPoint& wp) {
    for (int i = 0; i < 2; ++i) {
        wp.delta_eff[i] = p.delta[i] - p.g[i] * wp.xi[i];
        wp.g_eff[i] = p.g[i] * wp.alpha[i];
        wp.spring_shift[i] = optical_spring_shift(wp.g_eff[i], p.omega[i], p.kappa[i]);
        wp.rate[i] = optomechanical_rate(wp.g_eff[i], p.omega[i], p.kappa[i]);
    }
    wp.gamma_eff = 0.5 * (wp.rate[0] + wp.rate[1]);
}

inline cplx cavity_amplitude(const PhysicalParams& p, int i, double xi, double drive) {
    return cplx(0.0, -drive) / cplx(0.5 * p.kappa[i], p.delta[i] - p.g[i] * xi);
}

inline Pair<double> steady_residuals(const PhysicalParams& p, const Pair<cplx>& alpha,
                                     const Pair<double>& xi) {
    Pair<double> r{};
    double cav = 0.0, mech = 0.0;
    for (int i = 0; i < 2; ++i) {
        const int o = 1 - i;
        const cplx lhs = cplx(0.5 * p.kappa[i], p.delta[i] - p.g[i] * xi[i]) * alpha[i];
        cav = std::max(cav, std::abs(lhs + cplx(0.0, p.drive[i])) / std::max(1.0, p.drive[i]));
        const double force = p.g[i] * std::norm(alpha[i]);
        const double scale = std::max(1.0, std::abs(p.omega[i] * xi[i]) +
                                               std::abs(p.j_coupling * xi[o]) + std::abs(force));
        mech = std::max(mech, std::abs(p.omega[i] * xi[i] - p.j_coupling * xi[o] - force) / scale);
    }
    r[0] = cav;
    r[1] = mech;
    return r;
}

}  // namespace detail

inline WorkingPoint WorkingPoint::from_effective(const PhysicalParams& p, Pair<cplx> g_eff,
                                                 Pair<double> delta_eff) {
    WorkingPoint wp;
    for (int i = 0; i < 2; ++i) {
        wp.alpha[i] = p.g[i] != 0.0 ? g_eff[i] / p.g[i] : cplx{};
        wp.xi[i] = p.g[i] != 0.0 ? (p.delta[i] - delta_eff[i]) / p.g[i] : 0.0;
    }
    wp.g_eff = g_eff;
    wp.delta_eff = delta_eff;
    for (int i = 0; i < 2; ++i) {
        wp.spring_shift[i] = optical_spring_shift(g_eff[i], p.omega[i], p.kappa[i]);
        wp.rate[i] = optomechanical_rate(g_eff[i], p.omega[i], p.kappa[i]);
    }
    wp.gamma_eff = 0.5 * (wp.rate[0] + wp.rate[1]);
    return wp;
}

struct SteadyStateOptions {
    double residual_tol = 1e-10;
    int homotopy_steps = 16;      // initial number of drive increments
    int max_refinements = 6;      // each halves the increment on failure
    double fold_tol = 1e-8;       // |det J| / (omega_1 omega_2) flagging a fold
};

/// Solves [kappa_i/2 + i(Delta_i - g_i xi_i)] alpha_i = -i Omega_i together
/// with omega_1 xi_1 - J xi_2 = g_1|alpha_1|^2, omega_2 xi_2 - J xi_1 = g_2|alpha_2|^2.
///
/// The drive is ramped from zero (homotopy) so the returned branch is the
/// one continuously connected to the undriven state. At each ramp step a
/// plain fixed-point iteration on xi is tried first; on stall it hands over
/// to Newton with the analytic Jacobian. A near-singular Jacobian along the
/// path is reported as a "bistable" warning.
inline WorkingPoint solve_steady_state(const PhysicalParams& p, const SteadyStateOptions& opt = {}) {
    p.validate();
    const double det_a = p.omega[0] * p.omega[1] - p.j_coupling * p.j_coupling;
    if (std::abs(det_a) <= 1e-14 * p.omega[0] * p.omega[1]) {
        throw DomainError("solve_steady_state: omega_1 omega_2 == J^2, mechanical block singular");
    }

    Eigen::Matrix2d a;
    a << p.omega[0], -p.j_coupling, -p.j_coupling, p.omega[1];
    const Eigen::Matrix2d a_inv = a.inverse();

    WorkingPoint wp;
    wp.from_steady_state = true;

    auto intensity = [&](int i, double xi, double drive) {
        const double d = p.delta[i] - p.g[i] * xi;
        return drive * drive / (0.25 * p.kappa[i] * p.kappa[i] + d * d);
    };
    // F(xi) = A xi - g |alpha(xi)|^2 at a given drive scale s.
    auto make_f = [&](double s) {
        return [&, s](const Eigen::VectorXd& x) {
            Eigen::VectorXd r(2);
            const Eigen::Vector2d ax = a * x;
            for (int i = 0; i < 2; ++i) r(i) = ax(i) - p.g[i] * intensity(i, x(i), s * p.drive[i]);
            return r;
        };
    };
    auto make_jac = [&](double s) {
        return [&, s](const Eigen::VectorXd& x) {
            Eigen::MatrixXd jac = a;
            for (int i = 0; i < 2; ++i) {
                const double d = p.delta[i] - p.g[i] * x(i);
                const double den = 0.25 * p.kappa[i] * p.kappa[i] + d * d;
                const double om = s * p.drive[i];
                // d|alpha|^2/dxi = 2 g d Omega^2 / den^2
                jac(i, i) -= p.g[i] * 2.0 * p.g[i] * d * om * om / (den * den);
            }
            return jac;
        };
    };
    auto make_g = [&](double s) {
        return [&, s](const Eigen::VectorXd& x) {
            Eigen::Vector2d rhs;
            for (int i = 0; i < 2; ++i) rhs(i) = p.g[i] * intensity(i, x(i), s * p.drive[i]);
            return Eigen::VectorXd(a_inv * rhs);
        };
    };

    Eigen::VectorXd xi = Eigen::VectorXd::Zero(2);
    bool fold_warned = false;
    const double det_scale = std::abs(p.omega[0] * p.omega[1]);

    auto solve_at = [&](double s, const Eigen::VectorXd& start) -> Eigen::VectorXd {
        numerics::FixedPointOptions fp;
        fp.tol = 1e-15;
        fp.max_iterations = 100;
        const auto fpr = numerics::fixed_point(make_g(s), start, fp);
        Eigen::VectorXd x = fpr.x.allFinite() ? fpr.x : start;
        numerics::RootOptions ro;
        ro.residual_tol = 1e-13 * std::max(1.0, p.g[0] * intensity(0, 0, s * p.drive[0]) +
                                                    p.g[1] * intensity(1, 0, s * p.drive[1]));
        ro.max_iterations = 60;
        const auto jac = make_jac(s);
        const auto rr = numerics::root_solve(make_f(s), x, jac, ro);
        const double det = std::abs(jac(rr.x).determinant());
        if (!fold_warned && det < opt.fold_tol * det_scale) {
            wp.warnings.push_back("bistable: steady-state Jacobian nearly singular along the drive ramp");
            fold_warned = true;
        }
        return rr.x;
    };

    int steps = std::max(1, opt.homotopy_steps);
    double s_done = 0.0;
    double ds = 1.0 / steps;
    int refinements = 0;
    while (s_done < 1.0) {
        const double s = std::min(1.0, s_done + ds);
        try {
            xi = solve_at(s, xi);
            s_done = s;
        } catch (const NoConvergence&) {
            if (++refinements > opt.max_refinements) throw;
            ds *= 0.5;
        }
    }

    for (int i = 0; i < 2; ++i) {
        wp.xi[i] = xi(i);
        wp.alpha[i] = detail::cavity_amplitude(p, i, xi(i), p.drive[i]);
    }
    const auto r = detail::steady_residuals(p, wp.alpha, wp.xi);
    wp.residual = std::max(r[0], r[1]);
    if (!(wp.residual < opt.residual_tol)) {
        std::ostringstream os;
        os << "solve_steady_state: residual " << wp.residual << " above " << opt.residual_tol;
        throw NoConvergence(os.str());
    }
    detail::fill_rates(p, wp);
    return wp;
}

/// gamma_eff for the reduced PT model; refuses when the two optomechanical
/// rates are not balanced to `rel_tol`.
inline double balanced_gamma_eff(const WorkingPoint& wp, double rel_tol = 1e-3) {
    const double mean = 0.5 * (wp.rate[0] + wp.rate[1]);
    if (std::abs(wp.rate[0] - wp.rate[1]) > rel_tol * mean) {
        std::ostringstream os;
        os << "gain/damping imbalance: Gamma_1=" << wp.rate[0] << ", Gamma_2=" << wp.rate[1]
           << " differ by more than " << rel_tol << " relative";
        throw RegimeError(os.str());
    }
    return mean;
}

}  // namespace ptmech
