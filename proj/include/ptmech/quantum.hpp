// quantum.hpp - linearized quantum Langevin tier.
//
// dV/dt = M V + F over V = (a1, a2, a1^dag, a2^dag, q1, q2, p1, p2).
// Phonon numbers are built from K(t) = e^{Mt}: a stimulated part carried by
// the initial second moments and a spontaneous part accumulated from the
// cavity input noise and the Brownian forces. An independent Lyapunov
// integration of the second-moment matrix serves as the cross-check.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <sstream>
#include <vector>

#include "ptmech/errors.hpp"
#include "ptmech/model.hpp"
#include "ptmech/numerics/eigen.hpp"
#include "ptmech/numerics/expm.hpp"
#include "ptmech/numerics/ode.hpp"
#include "ptmech/numerics/quadrature.hpp"

namespace ptmech {

using Matrix8cd = Eigen::Matrix<cplx, 8, 8>;

/// 0-based positions inside V.
namespace vidx {
inline constexpr int a(int i) { return i; }
inline constexpr int adag(int i) { return 2 + i; }
inline constexpr int q(int i) { return 4 + i; }
inline constexpr int p(int i) { return 6 + i; }
}  // namespace vidx

struct DriftMatrix {
    Matrix8cd m;
    WorkingPoint wp;
    PhysicalParams params;
};

inline DriftMatrix build_drift(const WorkingPoint& wp, const PhysicalParams& p) {
    const cplx I(0.0, 1.0);
    Matrix8cd m = Matrix8cd::Zero();
    for (int i = 0; i < 2; ++i) {
        const cplx g = wp.g_eff[i];
        m(vidx::a(i), vidx::a(i)) = -(0.5 * p.kappa[i] + I * wp.delta_eff[i]);
        m(vidx::a(i), vidx::q(i)) = I * g;
        m(vidx::adag(i), vidx::adag(i)) = -(0.5 * p.kappa[i] - I * wp.delta_eff[i]);
        m(vidx::adag(i), vidx::q(i)) = -I * std::conj(g);
        m(vidx::q(i), vidx::p(i)) = p.omega[i];
        m(vidx::p(i), vidx::a(i)) = std::conj(g);
        m(vidx::p(i), vidx::adag(i)) = g;
        m(vidx::p(i), vidx::q(i)) = -p.omega[i];
        m(vidx::p(i), vidx::q(1 - i)) = p.j_coupling;
        m(vidx::p(i), vidx::p(i)) = -0.5 * p.gamma[i];
    }
    return DriftMatrix{m, wp, p};
}

/// Permutation swapping a_i <-> a_i^dag (indices 0<->2, 1<->3).
inline int conjugate_index(int k) {
    if (k < 2) return k + 2;
    if (k < 4) return k - 2;
    return k;
}

/// max |A(k,l) - conj(A(c(k), c(l)))| over rows in `rows` (all when empty).
inline double conjugation_defect(const Matrix8cd& a, std::span<const int> rows = {}) {
    double worst = 0.0;
    auto check_row = [&](int k) {
        for (int l = 0; l < 8; ++l) {
            worst = std::max(worst, std::abs(a(k, l) - std::conj(a(conjugate_index(k), conjugate_index(l)))));
        }
    };
    if (rows.empty()) {
        for (int k = 0; k < 8; ++k) check_row(k);
    } else {
        for (int k : rows) check_row(k);
    }
    return worst;
}

struct NoiseModel {
    Pair<double> cavity_strength{};    // kappa_i, vacuum input <a_in a_in^dag> = delta
    Pair<double> brownian_strength{};  // gamma_i (n_th,i + 1/2)

    static NoiseModel from_params(const PhysicalParams& p) {
        NoiseModel n;
        for (int i = 0; i < 2; ++i) {
            n.cavity_strength[i] = p.kappa[i];
            n.brownian_strength[i] = p.gamma[i] * (p.n_th[i] + 0.5);
        }
        return n;
    }
    void validate() const {
        for (int i = 0; i < 2; ++i) {
            if (!(cavity_strength[i] >= 0) || !(brownian_strength[i] >= 0)) {
                throw ValidationError("NoiseModel: strengths must be >= 0");
            }
        }
    }
};

/// Diagonal initial second moments per mode.
struct InitialMoments {
    Pair<double> n_cavity{0.0, 0.0};  // <a^dag a>(0)
    Pair<double> q2{0.5, 0.5};        // <q^2>(0)
    Pair<double> p2{0.5, 0.5};        // <p^2>(0)

    void validate() const {
        for (int i = 0; i < 2; ++i) {
            if (!(n_cavity[i] >= 0)) throw ValidationError("initial <a^dag a> must be >= 0");
            if (!(q2[i] >= 0.5) || !(p2[i] >= 0.5)) {
                throw ValidationError("initial <q^2>, <p^2> must be >= 1/2 (vacuum)");
            }
        }
    }
    bool operator==(const InitialMoments&) const = default;
};

// --------------------------------------------------------------------------
// Stability
// --------------------------------------------------------------------------

enum class Stability { Stable, QuasiStable, Unstable };

inline const char* to_string(Stability s) {
    switch (s) {
        case Stability::Stable: return "stable";
        case Stability::QuasiStable: return "quasi_stable";
        case Stability::Unstable: return "unstable";
    }
    return "?";
}

struct StabilityResult {
    double lambda_max = 0.0;
    Stability region = Stability::Stable;
    Eigen::VectorXcd eigenvalues;
};

/// lambda_max = max Re Lambda_i; Stable below 0, QuasiStable below
/// quasi_threshold (in units of kappa), Unstable above.
inline StabilityResult stability_spectrum(const DriftMatrix& d, double quasi_threshold = 1e-3) {
    StabilityResult r;
    r.eigenvalues = numerics::eigenvalues(Eigen::MatrixXcd(d.m));
    r.lambda_max = -std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < r.eigenvalues.size(); ++k) {
        r.lambda_max = std::max(r.lambda_max, r.eigenvalues(k).real());
    }
    if (r.lambda_max < 0) {
        r.region = Stability::Stable;
    } else if (r.lambda_max < quasi_threshold) {
        r.region = Stability::QuasiStable;
    } else {
        r.region = Stability::Unstable;
    }
    return r;
}

// --------------------------------------------------------------------------
// Propagator and phonon numbers
// --------------------------------------------------------------------------

inline Matrix8cd propagator(const DriftMatrix& d, double t) {
    if (!(t >= 0)) throw DomainError("propagator: t must be >= 0");
    if (t == 0.0) return Matrix8cd::Identity();
    return numerics::expm(Matrix8cd(d.m * t));
}

namespace detail {

inline constexpr std::array<std::array<int, 2>, 2> kMechRows{{{vidx::q(0), vidx::p(0)}, {vidx::q(1), vidx::p(1)}}};

/// K rows 3,4 must be conjugates of rows 1,2 under the a <-> a^dag column
/// swap; the |K|^2 forms below rely on it.
inline void require_row_conjugation(const Matrix8cd& k, double t) {
    static constexpr std::array<int, 2> cav_rows{0, 1};
    const double defect = conjugation_defect(k, cav_rows);
    const double mech = conjugation_defect(k, std::array<int, 4>{4, 5, 6, 7});
    const double scale = std::max(1.0, k.cwiseAbs().maxCoeff());
    if (std::max(defect, mech) > 1e-10 * scale) {
        std::ostringstream os;
        os << "propagator lost its conjugation symmetry at t=" << t << " (defect " << std::max(defect, mech) << ")";
        throw Inconsistent(os.str());
    }
}

}  // namespace detail

/// Stimulated phonons
///   n_st = 1/2 sum_{r in {q,p}} sum_i { |K_{r,a_i}|^2 (2 n_i + 1) + |K_{r,q_i}|^2 <q_i^2> + |K_{r,p_i}|^2 <p_i^2> } - 1/2
inline Pair<double> phonon_stimulated_from(const Matrix8cd& k, const InitialMoments& init) {
    Pair<double> n{};
    for (int res = 0; res < 2; ++res) {
        double sum = 0.0;
        for (int r : detail::kMechRows[res]) {
            for (int i = 0; i < 2; ++i) {
                sum += std::norm(k(r, vidx::a(i))) * (2.0 * init.n_cavity[i] + 1.0) +
                       std::norm(k(r, vidx::q(i))) * init.q2[i] + std::norm(k(r, vidx::p(i))) * init.p2[i];
            }
        }
        n[res] = 0.5 * sum - 0.5;
    }
    return n;
}

inline Pair<double> phonon_stimulated(const DriftMatrix& d, const InitialMoments& init, double t) {
    init.validate();
    const Matrix8cd k = propagator(d, t);
    detail::require_row_conjugation(k, t);
    return phonon_stimulated_from(k, init);
}

struct SpontaneousPhonons {
    double t = 0.0;
    Pair<double> n_sp{};
    Pair<double> n_cm{};  // from cavity input noise
    Pair<double> n_mr{};  // from the mechanical Brownian forces
};

struct SpontaneousOptions {
    double quad_tol = 1e-8;
    double abs_tol = 1e-14;
    double panel_length = 0.0;  // 0 = a quarter mechanical period
    std::size_t max_evaluations = 20'000'000;
};

/// Cumulative spontaneous phonons at each (non-decreasing) time:
///   n_cm = 1/2 sum_r sum_i kappa_i int_0^t |K_{r, a_i^dag}|^2
///   n_mr = 1/2 sum_r sum_i gamma_i (n_th + 1/2) int_0^t |K_{r, p_i}|^2
/// Integrals run over consecutive sample intervals so every reported value
/// extends the previous one; n_sp is therefore non-decreasing in t.
inline std::vector<SpontaneousPhonons> phonon_spontaneous(const DriftMatrix& d, const NoiseModel& noise,
                                                          std::span<const double> times,
                                                          const SpontaneousOptions& opt = {}) {
    noise.validate();
    const double w_fast = std::max({d.params.omega[0], d.params.omega[1], std::abs(d.wp.delta_eff[0]),
                                    std::abs(d.wp.delta_eff[1]), 1e-12});
    const double panel = opt.panel_length > 0 ? opt.panel_length : 0.5 * std::numbers::pi / w_fast;

    // Integrand components: [res][row r][source i] for cavity (a^dag cols) and mechanical (p cols).
    auto integrand = [&d](double t) {
        const Matrix8cd k = propagator(d, t);
        Eigen::ArrayXd v(16);
        int n = 0;
        for (int res = 0; res < 2; ++res)
            for (int r : detail::kMechRows[res])
                for (int i = 0; i < 2; ++i) {
                    v(n++) = std::norm(k(r, vidx::adag(i)));
                    v(n++) = std::norm(k(r, vidx::p(i)));
                }
        return v;
    };

    std::vector<SpontaneousPhonons> out;
    Eigen::ArrayXd acc = Eigen::ArrayXd::Zero(16);
    double t_prev = 0.0;
    std::size_t evals = 0;
    for (double t : times) {
        if (!(t >= t_prev)) throw ValidationError("phonon_spontaneous: times must be non-decreasing and >= 0");
        if (t > t_prev) {
            numerics::QuadOptions qo;
            qo.rel_tol = opt.quad_tol;
            qo.abs_tol = opt.abs_tol;
            qo.initial_panels = static_cast<std::size_t>(std::ceil((t - t_prev) / panel));
            qo.max_evaluations = opt.max_evaluations - std::min(evals, opt.max_evaluations);
            const auto r = numerics::quad_adaptive_vec(integrand, t_prev, t, qo);
            acc += r.value;
            evals += r.evaluations;
        }
        SpontaneousPhonons s;
        s.t = t;
        int n = 0;
        for (int res = 0; res < 2; ++res) {
            double cm = 0.0, mr = 0.0;
            for (int rr = 0; rr < 2; ++rr)
                for (int i = 0; i < 2; ++i) {
                    cm += noise.cavity_strength[i] * acc(n++);
                    mr += noise.brownian_strength[i] * acc(n++);
                }
            s.n_cm[res] = 0.5 * cm;
            s.n_mr[res] = 0.5 * mr;
            s.n_sp[res] = s.n_cm[res] + s.n_mr[res];
            if (!out.empty() && s.n_sp[res] < out.back().n_sp[res]) {
                throw Inconsistent("phonon_spontaneous: n_sp decreased between samples");
            }
        }
        out.push_back(s);
        t_prev = t;
    }
    return out;
}

struct PhononBreakdown {
    double t = 0.0;
    Pair<double> n_st{}, n_sp{}, n_tt{}, n_cm{}, n_mr{};
};

/// n_tt = n_st + n_sp per resonator at each sample time.
inline std::vector<PhononBreakdown> phonon_total(const DriftMatrix& d, const NoiseModel& noise,
                                                 const InitialMoments& init, std::span<const double> times,
                                                 const SpontaneousOptions& opt = {}) {
    init.validate();
    const auto sp = phonon_spontaneous(d, noise, times, opt);
    std::vector<PhononBreakdown> out;
    out.reserve(sp.size());
    for (const auto& s : sp) {
        PhononBreakdown b;
        b.t = s.t;
        b.n_st = phonon_stimulated(d, init, s.t);
        b.n_sp = s.n_sp;
        b.n_cm = s.n_cm;
        b.n_mr = s.n_mr;
        for (int i = 0; i < 2; ++i) b.n_tt[i] = b.n_st[i] + b.n_sp[i];
        out.push_back(b);
    }
    return out;
}

// --------------------------------------------------------------------------
// Lyapunov second-moment propagation (independent oracle)
// --------------------------------------------------------------------------

/// C_{kl} = <V_k V_l^dag> for the diagonal initial moments. The q-p block
/// carries the commutator: <q p> = i/2, <p q> = -i/2.
inline Matrix8cd initial_covariance(const InitialMoments& init) {
    Matrix8cd c = Matrix8cd::Zero();
    for (int i = 0; i < 2; ++i) {
        c(vidx::a(i), vidx::a(i)) = init.n_cavity[i] + 1.0;  // <a a^dag>
        c(vidx::adag(i), vidx::adag(i)) = init.n_cavity[i];  // <a^dag a>
        c(vidx::q(i), vidx::q(i)) = init.q2[i];
        c(vidx::p(i), vidx::p(i)) = init.p2[i];
        c(vidx::q(i), vidx::p(i)) = cplx(0.0, 0.5);
        c(vidx::p(i), vidx::q(i)) = cplx(0.0, -0.5);
    }
    return c;
}

/// <F(s) F(s')^dag> = D delta(s - s'): kappa_i <a_in a_in^dag> on the a_i
/// diagonal, zero on a_i^dag (<a_in^dag a_in> = 0), gamma_i(n_th + 1/2) on p_i.
inline Matrix8cd diffusion_matrix(const NoiseModel& noise) {
    Matrix8cd dm = Matrix8cd::Zero();
    for (int i = 0; i < 2; ++i) {
        dm(vidx::a(i), vidx::a(i)) = noise.cavity_strength[i];
        dm(vidx::p(i), vidx::p(i)) = noise.brownian_strength[i];
    }
    return dm;
}

struct LyapunovOptions {
    double rel_tol = 1e-11;
    double abs_tol = 1e-13;
};

/// Integrates dC/dt = M C + C M^dag + D with Dormand-Prince and reports C at
/// each requested time.
inline std::vector<Matrix8cd> moments_lyapunov(const DriftMatrix& d, const Matrix8cd& diffusion,
                                               const Matrix8cd& init_cov, std::span<const double> times,
                                               const LyapunovOptions& opt = {}) {
    const Matrix8cd m = d.m;
    const Matrix8cd m_dag = m.adjoint();
    auto rhs = [&](double, const Matrix8cd& c) -> Matrix8cd { return m * c + c * m_dag + diffusion; };
    numerics::AdaptiveOptions ao;
    ao.rel_tol = opt.rel_tol;
    ao.abs_tol = opt.abs_tol;
    ao.h_initial = 1e-3;
    return numerics::dopri5(rhs, init_cov, 0.0, times, ao).y;
}

/// n_i = (<q_i^2> + <p_i^2> - 1) / 2 read from a second-moment matrix.
inline Pair<double> phonons_from_covariance(const Matrix8cd& c) {
    Pair<double> n{};
    for (int i = 0; i < 2; ++i) n[i] = 0.5 * (c(vidx::q(i), vidx::q(i)).real() + c(vidx::p(i), vidx::p(i)).real() - 1.0);
    return n;
}

}  // namespace ptmech
