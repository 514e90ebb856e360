// ptanalysis.hpp - effective non-Hermitian Hamiltonian of the ideal PT
// dimer, its spectrum (closed form and numeric), phase classification and
// the bi-orthogonal eigenbasis propagator.
//
// Convention: i d|Psi>/dt = H_eff |Psi>, |Psi> = (q1, p1, q2, p2), so
// H_eff = i A with A the real generator of the reduced equations.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numeric>
#include <sstream>

#include "ptmech/errors.hpp"
#include "ptmech/model.hpp"
#include "ptmech/numerics/eigen.hpp"
#include "ptmech/numerics/expm.hpp"
#include "ptmech/semiclassical.hpp"

namespace ptmech {

using Matrix4cd = Eigen::Matrix4cd;
using Vector4cd = Eigen::Vector4cd;

struct EffectiveHamiltonian {
    Matrix4cd matrix;
    double omega_m = 0.0;
    double j = 0.0;
    double gamma_eff = 0.0;
};

/// H_eff = i [[0, w, 0, 0], [-w, g/2, J, 0], [0, 0, 0, w], [J, 0, -w, -g/2]].
inline EffectiveHamiltonian build_heff(double omega_m, double j, double gamma_eff) {
    if (!(omega_m > 0)) throw ValidationError("build_heff: omega_m must be > 0");
    if (!(j >= 0)) throw ValidationError("build_heff: J must be >= 0");
    if (!(gamma_eff >= 0)) throw ValidationError("build_heff: gamma_eff must be >= 0");
    Eigen::Matrix4d a;
    a << 0.0, omega_m, 0.0, 0.0,
        -omega_m, 0.5 * gamma_eff, j, 0.0,
        0.0, 0.0, 0.0, omega_m,
        j, 0.0, -omega_m, -0.5 * gamma_eff;
    EffectiveHamiltonian h;
    h.matrix = cplx(0.0, 1.0) * a.cast<cplx>();
    h.omega_m = omega_m;
    h.j = j;
    h.gamma_eff = gamma_eff;
    return h;
}

enum class Phase { PTSymmetric, AtThreshold, Broken };

inline const char* to_string(Phase p) {
    switch (p) {
        case Phase::PTSymmetric: return "pt_symmetric";
        case Phase::AtThreshold: return "at_threshold";
        case Phase::Broken: return "broken";
    }
    return "?";
}

struct Spectrum {
    std::array<cplx, 4> lambda{};  // numeric eigenvalues, paired with closed_form4 slot by slot
    cplx lambda_plus{};            // closed form, minus-branch under the outer root
    cplx lambda_minus{};           // closed form, plus-branch (the larger one)
    std::array<cplx, 4> closed_form4{};  // {l+, -l+, l-, -l-}
    Phase phase = Phase::PTSymmetric;
    double max_imag = 0.0;         // max |Im lambda| of the numeric eigenvalues
    double max_mismatch = 0.0;     // max relative |numeric - closed form|
    double omega_m = 0.0;
    double gamma_eff = 0.0;
    double j = 0.0;
};

/// lambda_{+-} = sqrt(w^2 - (g^2 +- sqrt(g^4 - 16 w^2 (g^2 - 4 J^2))) / 8)
/// evaluated in complex arithmetic (principal roots).
inline std::pair<cplx, cplx> closed_form_eigenvalues(double omega_m, double j, double gamma_eff) {
    const double g2 = gamma_eff * gamma_eff;
    const double w2 = omega_m * omega_m;
    const cplx disc = std::sqrt(cplx(g2 * g2 - 16.0 * w2 * (g2 - 4.0 * j * j), 0.0));
    const cplx lp = std::sqrt(cplx(w2, 0.0) - (g2 + disc) / 8.0);
    const cplx lm = std::sqrt(cplx(w2, 0.0) - (g2 - disc) / 8.0);
    return {lp, lm};
}

namespace detail {

/// Optimal assignment of 4 items by exhaustive search over the 24 permutations.
inline std::array<int, 4> match_min_distance(const std::array<cplx, 4>& from, const std::array<cplx, 4>& to) {
    std::array<int, 4> perm{0, 1, 2, 3}, best = perm;
    double best_cost = std::numeric_limits<double>::infinity();
    do {
        double cost = 0.0;
        for (int k = 0; k < 4; ++k) cost += std::abs(from[perm[k]] - to[k]);
        if (cost < best_cost) {
            best_cost = cost;
            best = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

}  // namespace detail

/// Numeric spectrum cross-checked against the closed form (relative
/// agreement 1e-8, else Inconsistent). Phase: AtThreshold when
/// |gamma_eff - gamma_PT| < tol, PTSymmetric when max|Im lambda| < tol,
/// Broken otherwise. tol <= 0 selects 1e-10 omega_m.
inline Spectrum spectrum(const EffectiveHamiltonian& h, double tol = 0.0, double agreement = 1e-8) {
    if (!(tol > 0)) tol = 1e-10 * h.omega_m;
    Spectrum s;
    s.omega_m = h.omega_m;
    s.gamma_eff = h.gamma_eff;
    s.j = h.j;

    const auto [lp, lm] = closed_form_eigenvalues(h.omega_m, h.j, h.gamma_eff);
    s.lambda_plus = lp;
    s.lambda_minus = lm;
    s.closed_form4 = {lp, -lp, lm, -lm};

    const Eigen::VectorXcd ev = numerics::eigenvalues(h.matrix);
    std::array<cplx, 4> numeric{ev(0), ev(1), ev(2), ev(3)};
    const auto perm = detail::match_min_distance(numeric, s.closed_form4);
    const double scale = std::max(std::abs(lp), std::abs(lm));
    for (int k = 0; k < 4; ++k) {
        s.lambda[k] = numeric[perm[k]];
        s.max_mismatch = std::max(s.max_mismatch, std::abs(s.lambda[k] - s.closed_form4[k]) / scale);
        s.max_imag = std::max(s.max_imag, std::abs(s.lambda[k].imag()));
    }
    if (s.max_mismatch > agreement) {
        std::ostringstream os;
        os << "spectrum: closed form and numeric eigenvalues disagree by " << s.max_mismatch << " (relative)";
        throw Inconsistent(os.str());
    }

    double gamma_pt = std::numeric_limits<double>::quiet_NaN();
    if (h.j <= h.omega_m) gamma_pt = pt_threshold(h.omega_m, h.j);
    if (std::isfinite(gamma_pt) && std::abs(h.gamma_eff - gamma_pt) < tol) {
        s.phase = Phase::AtThreshold;
    } else if (s.max_imag < tol) {
        s.phase = Phase::PTSymmetric;
    } else {
        s.phase = Phase::Broken;
    }
    return s;
}

/// lambda_- - lambda_+ (closed form), the beat frequency of the two mirrors.
inline double beat_frequency(const Spectrum& s) {
    if (s.phase == Phase::Broken) throw WrongPhase("beat_frequency: spectrum is in the broken phase");
    return s.lambda_minus.real() - s.lambda_plus.real();
}

// --------------------------------------------------------------------------
// Bi-orthogonal basis
// --------------------------------------------------------------------------

struct BiorthogonalBasis {
    std::array<cplx, 4> lambda{};   // {l+, -l+, l-, -l-}
    std::array<Vector4cd, 4> x{};   // right eigenvectors  H X = l X
    std::array<Vector4cd, 4> y{};   // left eigenvectors   H^dag Y = l^* Y
    std::array<cplx, 4> d{};        // <Y_i, X_i>
    std::array<cplx, 4> chi{};
    double omega_m = 0.0;
    double j = 0.0;
    double gamma_eff = 0.0;

    /// min_i |D_i| / (|X_i| |Y_i|): the cosine between left and right
    /// eigenvectors, which vanishes as they coalesce at the exceptional point.
    double coalescence() const {
        double c = std::numeric_limits<double>::infinity();
        for (int i = 0; i < 4; ++i) c = std::min(c, std::abs(d[i]) / (x[i].norm() * y[i].norm()));
        return c;
    }
};

inline double min_eigenvalue_gap(const std::array<cplx, 4>& l) {
    double gap = std::numeric_limits<double>::infinity();
    for (int a = 0; a < 4; ++a)
        for (int b = a + 1; b < 4; ++b) gap = std::min(gap, std::abs(l[a] - l[b]));
    return gap;
}

/// Closed-form eigenvectors:
///   chi_i = w^2 / (g lambda_i / 2 + i lambda_i^2 - i w^2)
///   X_i = [J chi_i / lambda_i, -i J chi_i / w, i w / lambda_i, 1]
///   Y_i = [-i J / l* - J chi* / l*, i J chi* / w, i w / l* + J^2 chi* / (w l*), 1]
/// Refuses (DegenerateSpectrum) when two eigenvalues are closer than
/// min_gap; min_gap < 0 selects 1e-6 omega_m.
inline BiorthogonalBasis biorthogonal_basis(const EffectiveHamiltonian& h, double min_gap = -1.0) {
    if (min_gap < 0) min_gap = 1e-6 * h.omega_m;
    BiorthogonalBasis b;
    b.omega_m = h.omega_m;
    b.j = h.j;
    b.gamma_eff = h.gamma_eff;
    const auto [lp, lm] = closed_form_eigenvalues(h.omega_m, h.j, h.gamma_eff);
    b.lambda = {lp, -lp, lm, -lm};
    const double gap = min_eigenvalue_gap(b.lambda);
    if (!(gap > min_gap) || h.j == 0.0) {
        std::ostringstream os;
        os << "biorthogonal_basis: eigenvalue gap " << gap << " below " << min_gap
           << " (exceptional point or uncoupled resonators)";
        throw DegenerateSpectrum(os.str());
    }
    const double w = h.omega_m, j = h.j, g = h.gamma_eff;
    const cplx I(0.0, 1.0);
    for (int i = 0; i < 4; ++i) {
        const cplx l = b.lambda[i];
        const cplx lc = std::conj(l);
        const cplx chi = w * w / (0.5 * g * l + I * l * l - I * w * w);
        const cplx chic = std::conj(chi);
        b.chi[i] = chi;
        b.x[i] << j / l * chi, -I * j / w * chi, I * w / l, 1.0;
        b.y[i] << -I * j / lc - j / lc * chic, I * j / w * chic, I * w / lc + j * j / (w * lc) * chic, 1.0;
        b.d[i] = b.y[i].dot(b.x[i]);  // conjugates the first argument
    }
    return b;
}

/// Psi(t) = sum_i X_i e^{-i lambda_i t} <Y_i, Psi(0)> / D_i. The imaginary
/// residue of the sum must vanish (<= 1e-9 relative), else Inconsistent.
inline ReducedState analytic_evolution(const BiorthogonalBasis& b, const ReducedState& init, double t) {
    const Vector4cd c = init.pack().cast<cplx>();
    Vector4cd psi = Vector4cd::Zero();
    for (int i = 0; i < 4; ++i) {
        const cplx coeff = b.y[i].dot(c) / b.d[i] * std::exp(cplx(0.0, -1.0) * b.lambda[i] * t);
        psi += coeff * b.x[i];
    }
    const double norm = std::max(1.0, psi.cwiseAbs().maxCoeff());
    const double residue = psi.imag().cwiseAbs().maxCoeff();
    if (residue > 1e-9 * norm) {
        std::ostringstream os;
        os << "analytic_evolution: imaginary residue " << residue << " at t=" << t;
        throw Inconsistent(os.str());
    }
    return ReducedState::unpack(psi.real());
}

/// exp(-i H t) Psi(0) through the matrix exponential; valid at exceptional points.
inline ReducedState matrix_exponential_evolution(const EffectiveHamiltonian& h, const ReducedState& init, double t) {
    const Matrix4cd k = numerics::expm(Matrix4cd(cplx(0.0, -t) * h.matrix));
    const Vector4cd psi = k * init.pack().cast<cplx>();
    return ReducedState::unpack(psi.real());
}

/// Analytic route when the spectrum is non-degenerate, matrix exponential otherwise.
inline ReducedState evolve(const EffectiveHamiltonian& h, const ReducedState& init, double t) {
    try {
        return analytic_evolution(biorthogonal_basis(h), init, t);
    } catch (const DegenerateSpectrum&) {
        return matrix_exponential_evolution(h, init, t);
    }
}

}  // namespace ptmech
