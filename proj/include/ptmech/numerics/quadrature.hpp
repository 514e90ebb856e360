// quadrature.hpp - globally adaptive Gauss-Kronrod (7/15) quadrature for
// scalar and vector-valued integrands.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <vector>

#include "ptmech/errors.hpp"

namespace ptmech::numerics {

struct QuadOptions {
    double rel_tol = 1e-8;
    double abs_tol = 1e-14;
    std::size_t initial_panels = 1;
    std::size_t max_evaluations = 2'000'000;
};

struct QuadResult {
    Eigen::ArrayXd value;
    Eigen::ArrayXd error;
    std::size_t evaluations = 0;
};

namespace detail {

// QUADPACK qk15 abscissae/weights; Gauss-7 nodes are xgk[1], xgk[3], xgk[5], xgk[7].
inline constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
    double a, b;
    Eigen::ArrayXd value, error;
};

template <class F>
Panel gk15(F& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    Eigen::ArrayXd fc = f(c);
    Eigen::ArrayXd kron = kWgk[7] * fc;
    Eigen::ArrayXd gauss = kWg[3] * fc;
    for (int j = 0; j < 7; ++j) {
        const Eigen::ArrayXd f1 = f(c - h * kXgk[j]);
        const Eigen::ArrayXd f2 = f(c + h * kXgk[j]);
        kron += kWgk[j] * (f1 + f2);
        if (j % 2 == 1) gauss += kWg[j / 2] * (f1 + f2);
    }
    return Panel{a, b, kron * h, ((kron - gauss) * h).abs()};
}

}  // namespace detail

/// Integrates a vector-valued f: double -> Eigen::ArrayXd over [a, b]. Every
/// component must meet err <= max(rel_tol * |I|, abs_tol). The panel with
/// the worst tolerance-weighted error is bisected until that holds.
template <class F>
QuadResult quad_adaptive_vec(F&& f, double a, double b, const QuadOptions& opt = {}) {
    if (!(opt.rel_tol > 0)) throw ValidationError("quad_adaptive: rel_tol must be > 0");
    QuadResult res;
    if (a == b) {
        const Eigen::ArrayXd probe = f(a);
        res.value = Eigen::ArrayXd::Zero(probe.size());
        res.error = Eigen::ArrayXd::Zero(probe.size());
        res.evaluations = 1;
        return res;
    }
    const std::size_t n0 = std::max<std::size_t>(1, opt.initial_panels);
    std::vector<detail::Panel> panels;
    panels.reserve(n0 * 4);
    for (std::size_t k = 0; k < n0; ++k) {
        const double lo = a + (b - a) * static_cast<double>(k) / static_cast<double>(n0);
        const double hi = (k + 1 == n0) ? b : a + (b - a) * static_cast<double>(k + 1) / static_cast<double>(n0);
        panels.push_back(detail::gk15(f, lo, hi));
    }
    res.evaluations = 15 * n0;

    while (true) {
        Eigen::ArrayXd total = Eigen::ArrayXd::Zero(panels.front().value.size());
        Eigen::ArrayXd err = total;
        for (const auto& p : panels) {
            total += p.value;
            err += p.error;
        }
        const Eigen::ArrayXd allowed = (opt.rel_tol * total.abs()).max(opt.abs_tol);
        if ((err <= allowed).all()) {
            res.value = total;
            res.error = err;
            return res;
        }
        if (res.evaluations + 30 > opt.max_evaluations) {
            std::ostringstream os;
            os << "quad_adaptive: tolerance " << opt.rel_tol << " not reached within "
               << opt.max_evaluations << " evaluations (max error ratio "
               << (err / allowed).maxCoeff() << ")";
            throw QuadratureFailure(os.str());
        }
        std::size_t worst = 0;
        double worst_score = -1.0;
        for (std::size_t k = 0; k < panels.size(); ++k) {
            const double score = (panels[k].error / allowed).maxCoeff();
            if (score > worst_score) {
                worst_score = score;
                worst = k;
            }
        }
        const detail::Panel p = panels[worst];
        const double mid = 0.5 * (p.a + p.b);
        if (!(mid > p.a && mid < p.b)) throw QuadratureFailure("quad_adaptive: panel width underflow");
        panels[worst] = detail::gk15(f, p.a, mid);
        panels.push_back(detail::gk15(f, mid, p.b));
        res.evaluations += 30;
    }
}

/// Scalar convenience wrapper.
template <class F>
double quad_adaptive(F&& f, double a, double b, const QuadOptions& opt = {},
                     double* error_out = nullptr) {
    auto vf = [&f](double t) {
        Eigen::ArrayXd v(1);
        v(0) = f(t);
        return v;
    };
    const QuadResult r = quad_adaptive_vec(vf, a, b, opt);
    if (error_out) *error_out = r.error(0);
    return r.value(0);
}

}  // namespace ptmech::numerics
