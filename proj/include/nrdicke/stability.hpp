#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <vector>

#include "model.hpp"

namespace nrdicke {

// ---- analytic Jacobians ----

inline Eigen::MatrixXd jacobian(const SystemState& s, const ModelParams& p, ModelVariant v) {
    const double wp = p.omega_plus(), wm = p.omega_minus();
    const double hg = 0.5 * p.gamma_down, gam = p.gamma_down;

    switch (v) {
        case ModelVariant::Full: {
            const double cphi = std::cos(p.phi), sphi = std::sin(p.phi);
            const double lam = p.lambda, hl = 0.5 * lam;
            const double u = s.field.real(), vv = s.field.imag();
            const double fp = 2.0 * (u * cphi + vv * sphi);
            const double fm = 2.0 * (u * cphi - vv * sphi);
            Eigen::MatrixXd j = Eigen::MatrixXd::Zero(8, 8);
            j(0, 0) = -hg; j(0, 1) = -wp;
            j(1, 0) = wp; j(1, 1) = -hg; j(1, 2) = -lam * fp;
            j(1, 6) = -2.0 * lam * s.plus.z * cphi;
            j(1, 7) = -2.0 * lam * s.plus.z * sphi;
            j(2, 1) = lam * fp; j(2, 2) = -gam;
            j(2, 6) = 2.0 * lam * s.plus.y * cphi;
            j(2, 7) = 2.0 * lam * s.plus.y * sphi;
            j(3, 3) = -hg; j(3, 4) = -wm;
            j(4, 3) = wm; j(4, 4) = -hg; j(4, 5) = -lam * fm;
            j(4, 6) = -2.0 * lam * s.minus.z * cphi;
            j(4, 7) = 2.0 * lam * s.minus.z * sphi;
            j(5, 4) = lam * fm; j(5, 5) = -gam;
            j(5, 6) = 2.0 * lam * s.minus.y * cphi;
            j(5, 7) = -2.0 * lam * s.minus.y * sphi;
            j(6, 0) = hl * sphi; j(6, 3) = -hl * sphi;
            j(6, 6) = -0.5 * p.kappa; j(6, 7) = p.omega_l;
            j(7, 0) = -hl * cphi; j(7, 3) = -hl * cphi;
            j(7, 6) = -p.omega_l; j(7, 7) = -0.5 * p.kappa;
            return j;
        }
        case ModelVariant::Adiabatic: {
            const CouplingConstants c = adiabatic_coefficients(p);
            const double qp = c.xi * s.plus.x - c.chi_plus * s.minus.x;
            const double qm = c.xi * s.minus.x - c.chi_minus * s.plus.x;
            Eigen::MatrixXd j = Eigen::MatrixXd::Zero(6, 6);
            j(0, 0) = -hg; j(0, 1) = -wp;
            j(1, 0) = wp + c.xi * s.plus.z; j(1, 1) = -hg; j(1, 2) = qp;
            j(1, 3) = -c.chi_plus * s.plus.z;
            j(2, 0) = -c.xi * s.plus.y; j(2, 1) = -qp; j(2, 2) = -gam;
            j(2, 3) = c.chi_plus * s.plus.y;
            j(3, 3) = -hg; j(3, 4) = -wm;
            j(4, 0) = -c.chi_minus * s.minus.z; j(4, 3) = wm + c.xi * s.minus.z;
            j(4, 4) = -hg; j(4, 5) = qm;
            j(5, 0) = c.chi_minus * s.minus.y; j(5, 3) = -c.xi * s.minus.y;
            j(5, 4) = -qm; j(5, 5) = -gam;
            return j;
        }
        case ModelVariant::ReducedPlus: {
            const double k = reduced_plus_constant(p);
            Eigen::MatrixXd j = Eigen::MatrixXd::Zero(3, 3);
            j(0, 1) = -p.omega0;
            j(1, 0) = p.omega0 + k * s.plus.z; j(1, 2) = k * s.plus.x;
            j(2, 0) = -k * s.plus.y; j(2, 1) = -k * s.plus.x;
            return j;
        }
    }
    throw std::logic_error("jacobian: bad variant");
}

// ---- eigenvalue reports ----

enum class StabilityVerdict { Stable, Marginal, Unstable };

inline constexpr double kStabilityEps = 1e-8;

inline StabilityVerdict classify_stability(double max_real, double eps = kStabilityEps) {
    if (max_real >= eps) return StabilityVerdict::Unstable;
    if (max_real > -eps) return StabilityVerdict::Marginal;
    return StabilityVerdict::Stable;
}

inline const char* verdict_name(StabilityVerdict v) {
    switch (v) {
        case StabilityVerdict::Stable: return "STABLE";
        case StabilityVerdict::Marginal: return "MARGINAL";
        case StabilityVerdict::Unstable: return "UNSTABLE";
    }
    return "?";
}

struct EigenReport {
    std::vector<std::complex<double>> eigenvalues;  // sorted: Re desc, then Im desc
    Eigen::MatrixXcd eigenvectors;                  // columns follow the sort; 0x0 if none
    double max_real = 0.0;
    double min_pair_gap = std::numeric_limits<double>::infinity();
    int gap_i = -1, gap_j = -1;                     // indices of the closest pair
    double min_vector_angle = std::numeric_limits<double>::quiet_NaN();

    StabilityVerdict verdict(double eps = kStabilityEps) const {
        return classify_stability(max_real, eps);
    }
};

namespace detail {

inline void finish_report(EigenReport& r) {
    const std::size_t n = r.eigenvalues.size();
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) {
        const auto& ea = r.eigenvalues[a];
        const auto& eb = r.eigenvalues[b];
        if (ea.real() != eb.real()) return ea.real() > eb.real();
        return ea.imag() > eb.imag();
    });
    std::vector<std::complex<double>> vals(n);
    for (std::size_t i = 0; i < n; ++i) vals[i] = r.eigenvalues[perm[i]];
    r.eigenvalues = std::move(vals);
    if (r.eigenvectors.cols() == static_cast<Eigen::Index>(n) && n > 0) {
        Eigen::MatrixXcd sorted(r.eigenvectors.rows(), r.eigenvectors.cols());
        for (std::size_t i = 0; i < n; ++i) sorted.col(i) = r.eigenvectors.col(perm[i]);
        r.eigenvectors = std::move(sorted);
    }

    r.max_real = -std::numeric_limits<double>::infinity();
    for (const auto& e : r.eigenvalues) r.max_real = std::max(r.max_real, e.real());
    if (n == 0) r.max_real = 0.0;

    r.min_pair_gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double g = std::abs(r.eigenvalues[i] - r.eigenvalues[j]);
            if (g < r.min_pair_gap) {
                r.min_pair_gap = g;
                r.gap_i = static_cast<int>(i);
                r.gap_j = static_cast<int>(j);
            }
        }

    if (r.gap_i >= 0 && r.eigenvectors.cols() > 0) {
        const Eigen::VectorXcd a = r.eigenvectors.col(r.gap_i).normalized();
        const Eigen::VectorXcd b = r.eigenvectors.col(r.gap_j).normalized();
        const double c = std::min(1.0, std::abs(a.dot(b)));
        r.min_vector_angle = std::acos(c);
    }
}

} // namespace detail

inline EigenReport make_report(const Eigen::MatrixXd& m, bool with_vectors = true) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(m, with_vectors);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("make_report: eigensolver failed");
    EigenReport r;
    const auto vals = es.eigenvalues();
    r.eigenvalues.assign(vals.data(), vals.data() + vals.size());
    if (with_vectors) r.eigenvectors = es.eigenvectors();
    detail::finish_report(r);
    return r;
}

inline EigenReport make_report(std::vector<std::complex<double>> values) {
    EigenReport r;
    r.eigenvalues = std::move(values);
    detail::finish_report(r);
    return r;
}

inline EigenReport spectrum_at(const SystemState& s, const ModelParams& p, ModelVariant v) {
    return make_report(jacobian(s, p, v));
}

// ---- spectrum around the dark state (both spins down, empty cavity) ----

// Closed form for the adiabatic variant. The z fluctuations detach and decay
// at gamma_down; the four coherence modes come in two square-root pairs.
inline EigenReport np_spectrum_closed_form(const ModelParams& p) {
    const CouplingConstants c = adiabatic_coefficients(p);
    const double w0 = p.omega0, d = p.delta;
    const double xi_s = -c.xi;
    const double cross = c.chi_plus * c.chi_minus;
    const std::complex<double> a(-w0 * (w0 + xi_s) - d * d, 0.0);
    const std::complex<double> b(d * d * (2.0 * w0 + xi_s) * (2.0 * w0 + xi_s) +
                                     (w0 * w0 - d * d) * cross,
                                 0.0);
    const std::complex<double> root_b = std::sqrt(b);
    const double hg = 0.5 * p.gamma_down;
    std::vector<std::complex<double>> vals;
    vals.reserve(6);
    for (int s1 : {+1, -1}) {
        const std::complex<double> inner = a + double(s1) * root_b;
        const std::complex<double> root = std::sqrt(inner);
        vals.push_back(-hg + root);
        vals.push_back(-hg - root);
    }
    vals.emplace_back(-p.gamma_down, 0.0);
    vals.emplace_back(-p.gamma_down, 0.0);
    return make_report(std::move(vals));
}

inline EigenReport np_spectrum_numeric(const ModelParams& p, ModelVariant v) {
    return spectrum_at(np_state(), p, v);
}

// The z fluctuations around the dark state decouple exactly (their rows and
// columns vanish apart from the -gamma_down diagonal), which parks a degenerate
// pair in every spectrum. Branch-collision diagnostics work on the complement.

inline Eigen::MatrixXd np_xy_block_adiabatic(const ModelParams& p) {
    const CouplingConstants c = adiabatic_coefficients(p);
    const double hg = 0.5 * p.gamma_down;
    const double wp = p.omega_plus(), wm = p.omega_minus();
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(4, 4);
    // order: sx+, sy+, sx-, sy-
    m(0, 0) = -hg; m(0, 1) = -wp;
    m(1, 0) = wp - c.xi; m(1, 1) = -hg; m(1, 2) = c.chi_plus;
    m(2, 2) = -hg; m(2, 3) = -wm;
    m(3, 0) = c.chi_minus; m(3, 2) = wm - c.xi; m(3, 3) = -hg;
    return m;
}

inline Eigen::MatrixXd np_xy_block_full(const ModelParams& p) {
    const double hg = 0.5 * p.gamma_down;
    const double wp = p.omega_plus(), wm = p.omega_minus();
    const double cphi = std::cos(p.phi), sphi = std::sin(p.phi);
    const double lam = p.lambda, hl = 0.5 * lam;
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(6, 6);
    // order: sx+, sy+, sx-, sy-, Re beta, Im beta
    m(0, 0) = -hg; m(0, 1) = -wp;
    m(1, 0) = wp; m(1, 1) = -hg; m(1, 4) = 2.0 * lam * cphi; m(1, 5) = 2.0 * lam * sphi;
    m(2, 2) = -hg; m(2, 3) = -wm;
    m(3, 2) = wm; m(3, 3) = -hg; m(3, 4) = 2.0 * lam * cphi; m(3, 5) = -2.0 * lam * sphi;
    m(4, 0) = hl * sphi; m(4, 2) = -hl * sphi;
    m(4, 4) = -0.5 * p.kappa; m(4, 5) = p.omega_l;
    m(5, 0) = -hl * cphi; m(5, 2) = -hl * cphi;
    m(5, 4) = -p.omega_l; m(5, 5) = -0.5 * p.kappa;
    return m;
}

// Discriminant under the inner square root of the closed form; a sign change
// in phi marks a branch collision of the coherence modes.
inline double np_inner_discriminant(const ModelParams& p) {
    const CouplingConstants c = adiabatic_coefficients(p);
    const double w0 = p.omega0, d = p.delta;
    const double xi_s = -c.xi;
    return d * d * (2.0 * w0 + xi_s) * (2.0 * w0 + xi_s) +
           (w0 * w0 - d * d) * c.chi_plus * c.chi_minus;
}

// Smallest coupling at which the dark state starts to grow, by bisection on
// the leading eigenvalue's real part. Below threshold the undamped spin modes
// sit exactly on the axis, so the predicate needs a small positive margin.
inline double np_threshold_coupling(const ModelParams& base, ModelVariant v,
                                    double lambda_lo = 0.0, double lambda_hi = 20.0,
                                    double growth_eps = 1e-6) {
    auto grows = [&](double lam) {
        ModelParams q = base;
        q.lambda = lam;
        q.normalize();
        return np_spectrum_numeric(q, v).max_real > growth_eps;
    };
    if (grows(lambda_lo) || !grows(lambda_hi))
        throw std::invalid_argument("np_threshold_coupling: no crossing in bracket");
    double lo = lambda_lo, hi = lambda_hi;
    while (hi - lo > 1e-12) {
        const double mid = 0.5 * (lo + hi);
        (grows(mid) ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

struct ExceptionalPoint {
    double phi = 0.0;
    double gap = 0.0;           // closest eigenvalue pair of the coherence block
    double vector_angle = 0.0;  // principal angle of that pair's eigenvectors
    bool confirmed = false;
};

struct EpScanOptions {
    int grid = 4001;
    double refine_tol = 1e-13;  // interval width in phi
    double gap_tol = 1e-6;
    double angle_tol = 1e-3;
};

inline std::vector<ExceptionalPoint> find_exceptional_points(const ModelParams& base,
                                                             double phi_lo, double phi_hi,
                                                             const EpScanOptions& opt = {}) {
    auto disc = [&](double phi) {
        ModelParams q = base;
        q.phi = phi;
        q.normalize();
        return np_inner_discriminant(q);
    };

    std::vector<double> roots;
    const int n = std::max(opt.grid, 16);
    double prev_phi = phi_lo, prev_val = disc(phi_lo);
    for (int i = 1; i < n; ++i) {
        const double phi = phi_lo + (phi_hi - phi_lo) * static_cast<double>(i) / (n - 1);
        const double val = disc(phi);
        if (prev_val == 0.0) {
            roots.push_back(prev_phi);
        } else if (val != 0.0 && std::signbit(val) != std::signbit(prev_val)) {
            double lo = prev_phi, hi = phi, flo = prev_val;
            while (hi - lo > opt.refine_tol) {
                const double mid = 0.5 * (lo + hi);
                const double fm = disc(mid);
                if (fm == 0.0) {
                    lo = hi = mid;
                    break;
                }
                if (std::signbit(fm) == std::signbit(flo)) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            roots.push_back(0.5 * (lo + hi));
        }
        prev_phi = phi;
        prev_val = val;
    }
    if (prev_val == 0.0) roots.push_back(prev_phi);

    std::vector<ExceptionalPoint> out;
    for (double r : roots) {
        if (!out.empty() && std::abs(out.back().phi - r) < 1e-9) continue;
        ModelParams q = base;
        q.phi = r;
        q.normalize();
        const EigenReport rep = make_report(np_xy_block_adiabatic(q));
        ExceptionalPoint ep;
        ep.phi = r;
        ep.gap = rep.min_pair_gap;
        ep.vector_angle = rep.min_vector_angle;
        ep.confirmed = rep.min_pair_gap < opt.gap_tol && rep.min_vector_angle < opt.angle_tol;
        out.push_back(ep);
    }
    return out;
}

} // namespace nrdicke
