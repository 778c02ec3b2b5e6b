#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <optional>
#include <vector>

#include "model.hpp"
#include "stability.hpp"

namespace nrdicke {

enum class FixedPointLabel { NP, SPAligned, SPAntialigned, Other };

inline const char* label_name(FixedPointLabel l) {
    switch (l) {
        case FixedPointLabel::NP: return "NP";
        case FixedPointLabel::SPAligned: return "SP_ALIGNED";
        case FixedPointLabel::SPAntialigned: return "SP_ANTIALIGNED";
        case FixedPointLabel::Other: return "OTHER";
    }
    return "?";
}

struct FixedPoint {
    SystemState state;
    double residual_norm = 0.0;
    FixedPointLabel label = FixedPointLabel::Other;
    std::optional<bool> stable;
    std::optional<double> max_real;
};

struct FixedPointSet {
    ModelParams params;
    ModelVariant variant = ModelVariant::Full;
    std::vector<FixedPoint> points;
};

inline double residual_norm(const SystemState& s, const ModelParams& p, ModelVariant v) {
    double x[8], dx[8];
    pack_state(v, s, x);
    variant_rhs(v, p, x, dx);
    double r = 0.0;
    for (int i = 0; i < state_dim(v); ++i) r = std::max(r, std::abs(dx[i]));
    return r;
}

// Coherences below this are treated as zero when labelling a root.
inline constexpr double kLabelTol = 1e-6;

inline FixedPointLabel classify_fixed_point(const SystemState& s) {
    const double coh = std::max({std::abs(s.plus.x), std::abs(s.plus.y),
                                 std::abs(s.minus.x), std::abs(s.minus.y),
                                 std::abs(s.field)});
    if (coh < kLabelTol) return FixedPointLabel::NP;
    if (std::abs(s.plus.x) > kLabelTol && std::abs(s.minus.x) > kLabelTol)
        return s.plus.x * s.minus.x > 0.0 ? FixedPointLabel::SPAligned
                                          : FixedPointLabel::SPAntialigned;
    return FixedPointLabel::Other;
}

struct NewtonOptions {
    int max_iter = 200;
    double tol = 1e-12;          // max-norm of the flow at the root
    double min_damping = 1.0 / (1u << 20);
};

struct NewtonResult {
    bool converged = false;
    int iterations = 0;
    SystemState state;
    double residual = 0.0;
};

namespace detail {

// At gamma_down = 0 every Bloch sphere is invariant and roots come in
// continua along the spin norm; a norm penalty c(|s|^2-1)s selects the
// physical unit-sphere representatives and makes the Jacobian regular.
struct PenaltyInfo {
    bool active = false;
    double c = 1.0;
    int blocks[2] = {-1, -1};  // spin block offsets in the packed state
};

inline PenaltyInfo penalty_for(const ModelParams& p, ModelVariant v) {
    PenaltyInfo pi;
    if (p.gamma_down != 0.0) return pi;
    pi.active = true;
    pi.c = p.omega0;
    pi.blocks[0] = 0;
    if (v != ModelVariant::ReducedPlus) pi.blocks[1] = 3;
    return pi;
}

inline void penalized_rhs(ModelVariant v, const ModelParams& p, const PenaltyInfo& pi,
                          const double* x, double* h) {
    variant_rhs(v, p, x, h);
    if (!pi.active) return;
    for (int b : pi.blocks) {
        if (b < 0) continue;
        const double n2 = x[b] * x[b] + x[b + 1] * x[b + 1] + x[b + 2] * x[b + 2];
        const double w = pi.c * (n2 - 1.0);
        h[b] += w * x[b];
        h[b + 1] += w * x[b + 1];
        h[b + 2] += w * x[b + 2];
    }
}

inline Eigen::MatrixXd penalized_jacobian(ModelVariant v, const ModelParams& p,
                                          const PenaltyInfo& pi, const SystemState& s) {
    Eigen::MatrixXd j = jacobian(s, p, v);
    if (!pi.active) return j;
    double x[8];
    pack_state(v, s, x);
    for (int b : pi.blocks) {
        if (b < 0) continue;
        const double n2 = x[b] * x[b] + x[b + 1] * x[b + 1] + x[b + 2] * x[b + 2];
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c)
                j(b + r, b + c) += pi.c * ((r == c ? n2 - 1.0 : 0.0) +
                                           2.0 * x[b + r] * x[b + c]);
    }
    return j;
}

} // namespace detail

inline NewtonResult newton_solve(const SystemState& guess, const ModelParams& p,
                                 ModelVariant v, const NewtonOptions& opt = {}) {
    const int n = state_dim(v);
    const detail::PenaltyInfo pi = detail::penalty_for(p, v);

    double x[8];
    pack_state(v, guess, x);

    NewtonResult res;
    double h[8];
    detail::penalized_rhs(v, p, pi, x, h);
    auto hnorm = [&](const double* vec) {
        double m = 0.0;
        for (int i = 0; i < n; ++i) m = std::max(m, std::abs(vec[i]));
        return m;
    };
    double hn = hnorm(h);
    const double tol_inner = 0.1 * opt.tol;

    for (int it = 0; it < opt.max_iter && hn > tol_inner; ++it) {
        res.iterations = it + 1;
        const SystemState cur = unpack_state(v, x);
        Eigen::MatrixXd j = detail::penalized_jacobian(v, p, pi, cur);
        Eigen::VectorXd rhs(n);
        for (int i = 0; i < n; ++i) rhs(i) = -h[i];
        Eigen::FullPivLU<Eigen::MatrixXd> lu(j);
        if (!lu.isInvertible()) break;
        Eigen::VectorXd step = lu.solve(rhs);

        double t = 1.0;
        double xt[8], ht[8];
        bool accepted = false;
        while (t >= opt.min_damping) {
            for (int i = 0; i < n; ++i) xt[i] = x[i] + t * step(i);
            detail::penalized_rhs(v, p, pi, xt, ht);
            const double hnt = hnorm(ht);
            if (std::isfinite(hnt) && hnt <= (1.0 - 1e-4 * t) * hn) {
                for (int i = 0; i < n; ++i) {
                    x[i] = xt[i];
                    h[i] = ht[i];
                }
                hn = hnt;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) break;
        double mag = 0.0;
        for (int i = 0; i < n; ++i) mag = std::max(mag, std::abs(x[i]));
        if (mag > 10.0) break;  // running away, the seed was bad
    }

    res.state = unpack_state(v, x);
    res.residual = residual_norm(res.state, p, v);
    res.converged = hn <= tol_inner && res.residual <= opt.tol;
    return res;
}

struct FindAllOptions {
    int n_random = 32;
    std::uint64_t seed = 12345;
    double dedup_tol = 1e-6;
    double ball_slack = 1e-6;
    // continuation probe used to discard gamma_down = 0 artifacts; drift is
    // measured in the inversions only, since weak damping renormalizes the
    // transverse amplitude within a root family without moving sz
    double probe_gamma = 1e-4;
    double probe_drift = 0.05;
    bool assess = true;          // fill stability from the linear spectrum
    double eps_stab = kStabilityEps;
    NewtonOptions newton;
};

namespace detail {

// Seeds near the parity-broken branches. The down-spin level follows the
// coupling-threshold ratio; exact placement is Newton's job.
inline std::vector<SystemState> ansatz_seeds(const ModelParams& p, ModelVariant v) {
    std::vector<SystemState> out;
    double sz = -0.5;
    if (p.lambda > 0.0 && p.omega_l > 0.0) {
        const double lc2 = p.omega0 * field_denominator(p) / (2.0 * p.omega_l);
        sz = -std::clamp(lc2 / (p.lambda * p.lambda), 0.05, 1.0);
    }
    for (double z : {sz, -0.5}) {
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        if (r == 0.0) continue;
        for (int sp : {+1, -1})
            for (int sm : {+1, -1}) {
                SystemState s;
                s.plus = {sp * r, 0.0, z};
                s.minus = {sm * r, 0.0, z};
                if (v == ModelVariant::Full && field_denominator(p) > 0.0)
                    s.field = enslaved_field(s.plus, s.minus, p);
                out.push_back(s);
            }
    }
    return out;
}

} // namespace detail

inline FixedPointSet find_all_fixed_points(const ModelParams& p, ModelVariant v,
                                           const FindAllOptions& opt = {}) {
    std::vector<SystemState> seeds;
    seeds.push_back(np_state());
    for (auto& s : detail::ansatz_seeds(p, v)) seeds.push_back(s);
    SplitMix64 rng(opt.seed);
    for (int i = 0; i < opt.n_random; ++i) {
        SystemState s;
        s.plus = random_bloch(rng);
        s.minus = random_bloch(rng);
        if (v == ModelVariant::Full && field_denominator(p) > 0.0)
            s.field = enslaved_field(s.plus, s.minus, p);
        seeds.push_back(s);
    }

    const double ball = 1.0 + opt.ball_slack;
    std::vector<SystemState> roots;
    for (const auto& seed : seeds) {
        NewtonResult r = newton_solve(seed, p, v, opt.newton);
        if (!r.converged) continue;
        if (r.state.plus.norm2() > ball) continue;
        if (v != ModelVariant::ReducedPlus && r.state.minus.norm2() > ball) continue;

        if (p.gamma_down == 0.0 && v != ModelVariant::ReducedPlus) {
            // keep only roots that continue smoothly to weak decay
            ModelParams probe = p;
            probe.gamma_down = opt.probe_gamma;
            NewtonResult pr = newton_solve(r.state, probe, v, opt.newton);
            if (!pr.converged) continue;
            const double zdrift = std::max(std::abs(pr.state.plus.z - r.state.plus.z),
                                           std::abs(pr.state.minus.z - r.state.minus.z));
            if (zdrift > opt.probe_drift) continue;
        }

        bool dup = false;
        for (const auto& known : roots)
            if (max_norm_distance(known, r.state) < opt.dedup_tol) {
                dup = true;
                break;
            }
        if (!dup) roots.push_back(r.state);
    }

    FixedPointSet set;
    set.params = p;
    set.variant = v;
    for (const auto& s : roots) {
        FixedPoint fp;
        fp.state = s;
        if (v == ModelVariant::Adiabatic && field_denominator(p) > 0.0) {
            // report the field the eliminated mode would settle to
            fp.state.field = enslaved_field(s.plus, s.minus, p);
        }
        fp.residual_norm = residual_norm(s, p, v);
        fp.label = classify_fixed_point(fp.state);
        if (opt.assess) {
            const EigenReport rep = spectrum_at(s, p, v);
            fp.max_real = rep.max_real;
            fp.stable = rep.max_real < opt.eps_stab;
        }
        set.points.push_back(fp);
    }

    std::sort(set.points.begin(), set.points.end(), [](const FixedPoint& a, const FixedPoint& b) {
        if (a.label != b.label) return static_cast<int>(a.label) < static_cast<int>(b.label);
        if (a.state.plus.x != b.state.plus.x) return a.state.plus.x > b.state.plus.x;
        if (a.state.minus.x != b.state.minus.x) return a.state.minus.x > b.state.minus.x;
        return a.state.plus.y > b.state.plus.y;
    });
    return set;
}

} // namespace nrdicke
