// semiclassical.hpp - c-number dynamics of the coupled optomechanical
// systems at three levels of approximation: full nonlinear, linearized
// around the working point, and reduced to the two mechanical resonators.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "ptmech/errors.hpp"
#include "ptmech/model.hpp"
#include "ptmech/numerics/ode.hpp"

namespace ptmech {

using Vector8d = Eigen::Matrix<double, 8, 1>;
using Matrix8d = Eigen::Matrix<double, 8, 8>;

/// Cavity amplitudes plus mechanical quadratures. Packed order (see pack()):
/// re a1, im a1, re a2, im a2, q1, p1, q2, p2.
struct ClassicalState {
    Pair<cplx> a{};
    Pair<double> q{};
    Pair<double> p{};

    Vector8d pack() const {
        Vector8d y;
        y << a[0].real(), a[0].imag(), a[1].real(), a[1].imag(), q[0], p[0], q[1], p[1];
        return y;
    }
    static ClassicalState unpack(const Vector8d& y) {
        return ClassicalState{{cplx(y(0), y(1)), cplx(y(2), y(3))}, {y(4), y(6)}, {y(5), y(7)}};
    }
    bool operator==(const ClassicalState&) const = default;
};

/// (q1, p1, q2, p2)
struct ReducedState {
    Pair<double> q{};
    Pair<double> p{};

    Eigen::Vector4d pack() const { return {q[0], p[0], q[1], p[1]}; }
    static ReducedState unpack(const Eigen::Vector4d& y) { return ReducedState{{y(0), y(2)}, {y(1), y(3)}}; }
    bool operator==(const ReducedState&) const = default;
};

enum class Tier { Full, Linearized, Reduced, Quantum, Spectrum };

inline const char* to_string(Tier t) {
    switch (t) {
        case Tier::Full: return "full";
        case Tier::Linearized: return "linearized";
        case Tier::Reduced: return "reduced";
        case Tier::Quantum: return "quantum";
        case Tier::Spectrum: return "spectrum";
    }
    return "?";
}

/// Sampled trajectory. Row k holds the values of `columns` at t[k].
struct TimeSeries {
    Tier tier = Tier::Full;
    std::uint64_t params_hash = 0;
    std::vector<std::string> columns;
    std::vector<double> t;
    std::vector<double> data;  // row-major, t.size() x columns.size()

    std::size_t width() const { return columns.size(); }
    std::size_t size() const { return t.size(); }
    double at(std::size_t row, std::size_t col) const { return data[row * width() + col]; }

    std::size_t column_index(const std::string& name) const {
        const auto it = std::find(columns.begin(), columns.end(), name);
        if (it == columns.end()) throw ValidationError("TimeSeries: no column '" + name + "'");
        return static_cast<std::size_t>(it - columns.begin());
    }
    std::vector<double> column(std::size_t col) const {
        std::vector<double> out(size());
        for (std::size_t k = 0; k < size(); ++k) out[k] = at(k, col);
        return out;
    }
    std::vector<double> column(const std::string& name) const { return column(column_index(name)); }
};

/// FNV-1a over the raw parameter bytes; tags outputs with the inputs they came from.
inline std::uint64_t hash_params(const PhysicalParams& p) {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](double v) {
        unsigned char bytes[sizeof(double)];
        std::memcpy(bytes, &v, sizeof(double));
        for (unsigned char b : bytes) {
            h ^= b;
            h *= 1099511628211ull;
        }
    };
    for (int i = 0; i < 2; ++i) {
        mix(p.kappa[i]); mix(p.gamma[i]); mix(p.omega[i]); mix(p.g[i]);
        mix(p.delta[i]); mix(p.drive[i]); mix(p.n_th[i]);
    }
    mix(p.j_coupling);
    return h;
}

struct IntegrationOptions {
    double dt = 0.0;                 // 0 = 2 pi / (100 omega_fast)
    std::size_t sample_every = 1;
    bool adaptive = false;           // Dormand-Prince instead of fixed RK4
    double rel_tol = 1e-9;
    double abs_tol = 1e-12;
    double overflow_guard = 1e12;
    std::size_t error_check_every = 0;  // RK4 step-doubling check, 0 = off
    double error_check_tol = 1e-6;
};

inline const std::vector<std::string>& full_columns() {
    static const std::vector<std::string> c{"re_a1", "im_a1", "re_a2", "im_a2", "q1",
                                            "p1",    "q2",    "p2",    "I1",    "I2"};
    return c;
}
inline const std::vector<std::string>& reduced_columns() {
    static const std::vector<std::string> c{"q1", "p1", "q2", "p2"};
    return c;
}

namespace detail {

inline double fastest_frequency(const PhysicalParams& p) {
    return std::max({p.omega[0], p.omega[1], std::abs(p.delta[0]), std::abs(p.delta[1])});
}

inline double resolve_dt(const IntegrationOptions& opt, double fastest) {
    const double dt = opt.dt > 0 ? opt.dt : 2.0 * std::numbers::pi / (100.0 * fastest);
    const double limit = 2.0 * std::numbers::pi / (50.0 * fastest);
    if (dt > limit * (1.0 + 1e-12)) {
        std::ostringstream os;
        os << "dt=" << dt << " does not resolve the fastest oscillation (limit " << limit << ")";
        throw StepTooLarge(os.str());
    }
    return dt;
}

template <class State, class Rhs, class Emit>
void run_integration(Rhs&& rhs, const State& y0, double t_max, double dt, const IntegrationOptions& opt,
                     Emit&& emit) {
    if (!(t_max >= 0)) throw ValidationError("t_max must be >= 0");
    if (!opt.adaptive) {
        numerics::FixedStepOptions fs;
        fs.dt = dt;
        fs.sample_every = opt.sample_every;
        fs.overflow_guard = opt.overflow_guard;
        fs.check_every = opt.error_check_every;
        fs.check_tol = opt.error_check_tol;
        numerics::rk4_visit(rhs, y0, 0.0, t_max, fs, emit);
        return;
    }
    const double sample_dt = dt * static_cast<double>(std::max<std::size_t>(1, opt.sample_every));
    std::vector<double> times;
    const auto n = static_cast<std::size_t>(std::ceil(t_max / sample_dt - 1e-9));
    for (std::size_t k = 0; k <= n; ++k) times.push_back(std::min(t_max, static_cast<double>(k) * sample_dt));
    numerics::AdaptiveOptions ao;
    ao.rel_tol = opt.rel_tol;
    ao.abs_tol = opt.abs_tol;
    ao.overflow_guard = opt.overflow_guard;
    ao.h_initial = dt;
    const auto traj = numerics::dopri5(rhs, y0, 0.0, times, ao);
    for (std::size_t k = 0; k < traj.t.size(); ++k) emit(traj.t[k], traj.y[k]);
}

inline void emit_full_row(TimeSeries& ts, double t, const Vector8d& y) {
    ts.t.push_back(t);
    for (int i = 0; i < 8; ++i) ts.data.push_back(y(i));
    ts.data.push_back(y(0) * y(0) + y(1) * y(1));
    ts.data.push_back(y(2) * y(2) + y(3) * y(3));
}

}  // namespace detail

/// Full nonlinear c-number equations, including the radiation-pressure force
/// g|a|^2 and the position-dependent detuning g q a:
///   da/dt = -[kappa/2 + i(Delta - g q)] a - i Omega
///   dq/dt = omega p
///   dp_i/dt = -omega_i q_i + J q_j + g_i |a_i|^2 - gamma_i/2 p_i
inline TimeSeries integrate_full(const PhysicalParams& p, const ClassicalState& init, double t_max,
                                 const IntegrationOptions& opt = {}) {
    p.validate();
    const double dt = detail::resolve_dt(opt, detail::fastest_frequency(p));
    auto rhs = [&p](double, const Vector8d& y) {
        Vector8d d;
        for (int i = 0; i < 2; ++i) {
            const cplx a(y(2 * i), y(2 * i + 1));
            const double q = y(4 + 2 * i);
            const double pm = y(5 + 2 * i);
            const double qo = y(4 + 2 * (1 - i));
            const cplx da = -cplx(0.5 * p.kappa[i], p.delta[i] - p.g[i] * q) * a - cplx(0.0, p.drive[i]);
            d(2 * i) = da.real();
            d(2 * i + 1) = da.imag();
            d(4 + 2 * i) = p.omega[i] * pm;
            d(5 + 2 * i) = -p.omega[i] * q + p.j_coupling * qo + p.g[i] * std::norm(a) - 0.5 * p.gamma[i] * pm;
        }
        return d;
    };
    TimeSeries ts;
    ts.tier = Tier::Full;
    ts.params_hash = hash_params(p);
    ts.columns = full_columns();
    detail::run_integration(rhs, init.pack(), t_max, dt, opt,
                            [&ts](double t, const Vector8d& y) { detail::emit_full_row(ts, t, y); });
    return ts;
}

/// Real 8x8 generator L of the linearized fluctuation equations, dy/dt = L y,
/// over the packed ClassicalState ordering:
///   da_i/dt = -(kappa_i/2 + i Delta'_i) a_i + i G_i q_i
///   dp_i/dt = -omega_i q_i + J q_j + G_i^* a_i + G_i a_i^* - gamma_i/2 p_i
inline Matrix8d linearized_system_matrix(const WorkingPoint& wp, const PhysicalParams& p) {
    Matrix8d l = Matrix8d::Zero();
    for (int i = 0; i < 2; ++i) {
        const int re = 2 * i, im = 2 * i + 1, q = 4 + 2 * i, pm = 5 + 2 * i, qo = 4 + 2 * (1 - i);
        const double k2 = 0.5 * p.kappa[i];
        const double d = wp.delta_eff[i];
        const double gr = wp.g_eff[i].real(), gi = wp.g_eff[i].imag();
        // -(k2 + i d)(x + i y) + i G q
        l(re, re) = -k2;
        l(re, im) = d;
        l(re, q) = -gi;
        l(im, re) = -d;
        l(im, im) = -k2;
        l(im, q) = gr;
        l(q, pm) = p.omega[i];
        // G^* a + G a^* = 2 Re(G^* a) = 2 (gr x + gi y)
        l(pm, re) = 2.0 * gr;
        l(pm, im) = 2.0 * gi;
        l(pm, q) = -p.omega[i];
        l(pm, qo) = p.j_coupling;
        l(pm, pm) = -0.5 * p.gamma[i];
    }
    return l;
}

/// Fluctuations around the working point; no saturation.
inline TimeSeries integrate_linearized(const WorkingPoint& wp, const PhysicalParams& p, const ClassicalState& init,
                                       double t_max, const IntegrationOptions& opt = {}) {
    p.validate();
    const Matrix8d l = linearized_system_matrix(wp, p);
    const double fastest = std::max({p.omega[0], p.omega[1], std::abs(wp.delta_eff[0]), std::abs(wp.delta_eff[1])});
    const double dt = detail::resolve_dt(opt, fastest);
    auto rhs = [&l](double, const Vector8d& y) { return Vector8d(l * y); };
    TimeSeries ts;
    ts.tier = Tier::Linearized;
    ts.params_hash = hash_params(p);
    ts.columns = full_columns();
    detail::run_integration(rhs, init.pack(), t_max, dt, opt,
                            [&ts](double t, const Vector8d& y) { detail::emit_full_row(ts, t, y); });
    return ts;
}

/// Mechanical-only model after the cavities have been eliminated:
///   dq_i/dt = omega_i p_i
///   dp_i/dt = -(omega_i + s_i dw_i) q_i + J q_j + (s_i Gamma_i - gamma_i)/2 p_i
/// with s_i = +1 for the gain resonator and -1 for the damped one. With
/// dw = gamma = 0 and Gamma_1 = Gamma_2 this is the ideal PT dimer.
struct ReducedModel {
    Pair<double> omega{1.0, 1.0};
    Pair<double> shift{0.0, 0.0};
    Pair<double> rate{0.0, 0.0};
    Pair<int> sign{+1, -1};
    Pair<double> gamma{0.0, 0.0};
    double j = 0.0;

    static ReducedModel ideal(double gamma_eff, double omega_m, double j) {
        return with_corrections(gamma_eff, omega_m, j, {0.0, 0.0}, {0.0, 0.0});
    }

    static ReducedModel with_corrections(double gamma_eff, double omega_m, double j, Pair<double> shift,
                                         Pair<double> gamma_intrinsic) {
        ReducedModel m;
        m.omega = {omega_m, omega_m};
        m.shift = shift;
        m.rate = {gamma_eff, gamma_eff};
        m.gamma = gamma_intrinsic;
        m.j = j;
        return m;
    }

    /// Rates, shifts and gain signs taken from a solved working point.
    static ReducedModel from_working_point(const PhysicalParams& p, const WorkingPoint& wp) {
        ReducedModel m;
        m.omega = p.omega;
        m.shift = wp.spring_shift;
        m.rate = wp.rate;
        m.sign = {wp.gain_sign(0), wp.gain_sign(1)};
        m.gamma = p.gamma;
        m.j = p.j_coupling;
        return m;
    }

    bool is_ideal() const {
        return shift[0] == 0.0 && shift[1] == 0.0 && gamma[0] == 0.0 && gamma[1] == 0.0 &&
               rate[0] == rate[1] && omega[0] == omega[1] && sign[0] == -sign[1];
    }

    /// Generator A with d(q1,p1,q2,p2)/dt = A (q1,p1,q2,p2).
    Eigen::Matrix4d matrix() const {
        Eigen::Matrix4d a = Eigen::Matrix4d::Zero();
        for (int i = 0; i < 2; ++i) {
            const int q = 2 * i, pm = 2 * i + 1, qo = 2 * (1 - i);
            a(q, pm) = omega[i];
            a(pm, q) = -(omega[i] + sign[i] * shift[i]);
            a(pm, qo) = j;
            a(pm, pm) = 0.5 * (sign[i] * rate[i] - gamma[i]);
        }
        return a;
    }

    void validate() const {
        for (int i = 0; i < 2; ++i) {
            if (!(omega[i] > 0)) throw ValidationError("reduced model: omega must be > 0");
            if (!(rate[i] >= 0) || !(gamma[i] >= 0) || !(shift[i] >= 0)) {
                throw ValidationError("reduced model: rates, shifts and damping must be >= 0");
            }
            if (sign[i] != 1 && sign[i] != -1) throw ValidationError("reduced model: sign must be +-1");
        }
        if (!(j >= 0)) throw ValidationError("reduced model: J must be >= 0");
    }

    bool operator==(const ReducedModel&) const = default;
};

inline TimeSeries integrate_reduced(const ReducedModel& model, const ReducedState& init, double t_max,
                                    const IntegrationOptions& opt = {}) {
    model.validate();
    const Eigen::Matrix4d a = model.matrix();
    const double dt = detail::resolve_dt(opt, std::max(model.omega[0], model.omega[1]));
    auto rhs = [&a](double, const Eigen::Vector4d& y) { return Eigen::Vector4d(a * y); };
    TimeSeries ts;
    ts.tier = Tier::Reduced;
    ts.columns = reduced_columns();
    detail::run_integration(rhs, init.pack(), t_max, dt, opt, [&ts](double t, const Eigen::Vector4d& y) {
        ts.t.push_back(t);
        for (int i = 0; i < 4; ++i) ts.data.push_back(y(i));
    });
    return ts;
}

// --------------------------------------------------------------------------
// Envelope extraction
// --------------------------------------------------------------------------

struct EnvelopePoint {
    double t;
    double amplitude;
};

struct Window {
    double t0;
    double t1;
};

namespace detail {

struct Extremum {
    double t;
    double value;
};

/// Local extrema with parabolic refinement through the three samples around
/// each discrete extremum.
inline std::vector<Extremum> find_extrema(const std::vector<double>& t, const std::vector<double>& y) {
    std::vector<Extremum> out;
    for (std::size_t k = 1; k + 1 < y.size(); ++k) {
        const bool is_max = y[k] > y[k - 1] && y[k] >= y[k + 1];
        const bool is_min = y[k] < y[k - 1] && y[k] <= y[k + 1];
        if (!is_max && !is_min) continue;
        const double h0 = t[k] - t[k - 1], h1 = t[k + 1] - t[k];
        // Fit y = c0 + c1 s + c2 s^2 with s = time - t[k].
        const double d0 = (y[k] - y[k - 1]) / h0;
        const double d1 = (y[k + 1] - y[k]) / h1;
        const double c2 = (d1 - d0) / (h0 + h1);
        const double c1 = d0 + c2 * h0;
        double s = 0.0, v = y[k];
        if (c2 != 0.0) {
            s = std::clamp(-c1 / (2.0 * c2), -h0, h1);
            v = y[k] + c1 * s + c2 * s * s;
        }
        out.push_back({t[k] + s, v});
    }
    return out;
}

}  // namespace detail

/// Half peak-to-trough amplitude between consecutive extrema of one channel,
/// stamped at the midpoint time. Insensitive to a constant offset.
inline std::vector<EnvelopePoint> envelope(const TimeSeries& series, std::size_t channel, Window w) {
    if (channel >= series.width()) throw ValidationError("envelope: channel out of range");
    if (series.size() < 3 || w.t0 < series.t.front() || w.t1 > series.t.back() || !(w.t1 > w.t0)) {
        throw ValidationError("envelope: window must lie inside the series");
    }
    std::vector<double> t, y;
    for (std::size_t k = 0; k < series.size(); ++k) {
        if (series.t[k] >= w.t0 && series.t[k] <= w.t1) {
            t.push_back(series.t[k]);
            y.push_back(series.at(k, channel));
        }
    }
    const auto ext = detail::find_extrema(t, y);
    std::vector<EnvelopePoint> env;
    for (std::size_t k = 0; k + 1 < ext.size(); ++k) {
        env.push_back({0.5 * (ext[k].t + ext[k + 1].t), 0.5 * std::abs(ext[k + 1].value - ext[k].value)});
    }
    return env;
}

/// Least-squares slope of log(envelope) over the window; positive = growth.
/// Needs at least ten oscillation periods (twenty extrema).
inline double fit_envelope_rate(const TimeSeries& series, std::size_t channel, Window w) {
    const auto env = envelope(series, channel, w);
    if (env.size() < 19) {
        std::ostringstream os;
        os << "fit_envelope_rate: only " << env.size() + 1 << " extrema in [" << w.t0 << ", " << w.t1
           << "], need >= 20";
        throw InsufficientPeaks(os.str());
    }
    double st = 0, sy = 0, stt = 0, sty = 0;
    std::size_t n = 0;
    for (const auto& e : env) {
        if (!(e.amplitude > 0)) continue;
        const double ly = std::log(e.amplitude);
        st += e.t;
        sy += ly;
        stt += e.t * e.t;
        sty += e.t * ly;
        ++n;
    }
    if (n < 19) throw InsufficientPeaks("fit_envelope_rate: too few non-zero amplitudes");
    const double nn = static_cast<double>(n);
    const double tm = st / nn;
    return (sty - tm * sy) / (stt - tm * st);
}

/// max_t |env_a(t) - env_b(t)| / max_t env_b(t), with env_a linearly
/// interpolated onto the envelope times of b.
inline double envelope_deviation(const std::vector<EnvelopePoint>& a, const std::vector<EnvelopePoint>& b) {
    if (a.size() < 2 || b.empty()) throw InsufficientPeaks("envelope_deviation: empty envelope");
    double worst = 0.0, scale = 0.0;
    std::size_t j = 0;
    for (const auto& pb : b) {
        scale = std::max(scale, pb.amplitude);
        if (pb.t < a.front().t || pb.t > a.back().t) continue;
        while (j + 2 < a.size() && a[j + 1].t < pb.t) ++j;
        const double f = (pb.t - a[j].t) / (a[j + 1].t - a[j].t);
        const double va = a[j].amplitude + f * (a[j + 1].amplitude - a[j].amplitude);
        worst = std::max(worst, std::abs(va - pb.amplitude));
    }
    return scale > 0 ? worst / scale : worst;
}

}  // namespace ptmech
