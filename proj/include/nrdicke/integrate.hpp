#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "model.hpp"

namespace nrdicke {

enum class IntegratorMethod { RK4, RK45 };

struct IntegratorConfig {
    IntegratorMethod method = IntegratorMethod::RK45;
    double dt = 1e-3;            // fixed step for RK4, initial step for RK45
    double abs_tol = 1e-10;
    double rel_tol = 1e-10;
    double t_final = 2000.0;
    double t_transient = 1000.0; // samples start here
    double sample_dt = 0.01;

    void validate() const {
        auto bad = [](const char* what) {
            throw std::invalid_argument(std::string("IntegratorConfig: ") + what);
        };
        if (!(dt > 0.0) || !std::isfinite(dt)) bad("dt must be > 0");
        if (!(abs_tol > 0.0) || !(rel_tol > 0.0)) bad("tolerances must be > 0");
        if (!(t_final > 0.0) || !std::isfinite(t_final)) bad("t_final must be > 0");
        if (t_transient < 0.0 || t_transient >= t_final) bad("need 0 <= t_transient < t_final");
        if (!(sample_dt > 0.0)) bad("sample_dt must be > 0");
        if (sample_dt < dt) bad("sample_dt must be >= dt");
    }
};

struct IntegrationError : std::runtime_error {
    double t_fail;
    IntegrationError(const std::string& what, double t)
        : std::runtime_error(what + " at t = " + std::to_string(t)), t_fail(t) {}
};

struct Trajectory {
    ModelParams params;
    ModelVariant variant = ModelVariant::Full;
    IntegratorConfig config;
    std::vector<double> times;        // t_transient + k * sample_dt
    std::vector<SystemState> states;
    SystemState final_state;          // state at exactly t_final
    double final_time = 0.0;

    std::size_t size() const { return times.size(); }
};

enum class InitKind { PerturbedNP, RandomBloch, ExactNP };

inline InitKind parse_init_kind(const std::string& s) {
    if (s == "perturbed-np" || s == "perturbed_np") return InitKind::PerturbedNP;
    if (s == "random-bloch" || s == "random_bloch") return InitKind::RandomBloch;
    if (s == "np") return InitKind::ExactNP;
    throw std::invalid_argument("unknown initial condition kind: " + s);
}

inline SystemState default_initial_conditions(InitKind kind, std::uint64_t seed = 0) {
    if (kind == InitKind::ExactNP) return np_state();
    if (kind == InitKind::PerturbedNP) {
        SystemState s = np_state();
        s.plus.x = 1e-3;
        return s;
    }
    SplitMix64 rng(seed);
    SystemState s;
    s.plus = random_bloch(rng);
    s.minus = random_bloch(rng);
    s.field = {0.0, 0.0};
    return s;
}

namespace detail {

// Flow functors with parameter-derived constants hoisted out of the hot loop.
// model.hpp holds the reference definitions; unit tests pin these to those.

struct FullFlow {
    static constexpr int dim = 8;
    double wp, wm, hg, gam, lam, cphi, sphi, oml, hk;

    explicit FullFlow(const ModelParams& p)
        : wp(p.omega_plus()), wm(p.omega_minus()), hg(0.5 * p.gamma_down),
          gam(p.gamma_down), lam(p.lambda), cphi(std::cos(p.phi)),
          sphi(std::sin(p.phi)), oml(p.omega_l), hk(0.5 * p.kappa) {}

    void operator()(const double* x, double* dx) const {
        const double fp = 2.0 * (x[6] * cphi + x[7] * sphi);
        const double fm = 2.0 * (x[6] * cphi - x[7] * sphi);
        dx[0] = -wp * x[1] - hg * x[0];
        dx[1] = wp * x[0] - hg * x[1] - lam * x[2] * fp;
        dx[2] = -gam * (x[2] + 1.0) + lam * x[1] * fp;
        dx[3] = -wm * x[4] - hg * x[3];
        dx[4] = wm * x[3] - hg * x[4] - lam * x[5] * fm;
        dx[5] = -gam * (x[5] + 1.0) + lam * x[4] * fm;
        dx[6] = -hk * x[6] + oml * x[7] + 0.5 * lam * (x[0] - x[3]) * sphi;
        dx[7] = -oml * x[6] - hk * x[7] - 0.5 * lam * (x[0] + x[3]) * cphi;
    }
};

struct AdiabaticFlow {
    static constexpr int dim = 6;
    double wp, wm, hg, gam, xi, chp, chm;

    explicit AdiabaticFlow(const ModelParams& p)
        : wp(p.omega_plus()), wm(p.omega_minus()), hg(0.5 * p.gamma_down),
          gam(p.gamma_down) {
        const CouplingConstants c = adiabatic_coefficients(p);
        xi = c.xi;
        chp = c.chi_plus;
        chm = c.chi_minus;
    }

    void operator()(const double* x, double* dx) const {
        const double qp = xi * x[0] - chp * x[3];
        const double qm = xi * x[3] - chm * x[0];
        dx[0] = -wp * x[1] - hg * x[0];
        dx[1] = wp * x[0] - hg * x[1] + qp * x[2];
        dx[2] = -gam * (x[2] + 1.0) - qp * x[1];
        dx[3] = -wm * x[4] - hg * x[3];
        dx[4] = wm * x[3] - hg * x[4] + qm * x[5];
        dx[5] = -gam * (x[5] + 1.0) - qm * x[4];
    }
};

struct ReducedFlow {
    static constexpr int dim = 3;
    double w0, k;

    explicit ReducedFlow(const ModelParams& p)
        : w0(p.omega0), k(reduced_plus_constant(p)) {}

    void operator()(const double* x, double* dx) const {
        dx[0] = -w0 * x[1];
        dx[1] = w0 * x[0] + k * x[0] * x[2];
        dx[2] = -k * x[0] * x[1];
    }
};

template <int N>
inline bool all_finite(const double* x) {
    for (int i = 0; i < N; ++i)
        if (!std::isfinite(x[i])) return false;
    return true;
}

// Dormand-Prince 5(4) with FSAL. Accepted steps are clamped to land exactly
// on sample times, so samples are solution points rather than interpolants.
template <class Flow, class Emit>
void run_rk45(const Flow& f, double* x, const IntegratorConfig& cfg, Emit&& emit_segment) {
    constexpr int N = Flow::dim;
    constexpr double a21 = 1.0 / 5;
    constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                     a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                     a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                     b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                     e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

    double k1[N], k2[N], k3[N], k4[N], k5[N], k6[N], k7[N], xt[N], xn[N];
    f(x, k1);
    if (!all_finite<N>(k1)) throw IntegrationError("non-finite derivative", 0.0);

    double t = 0.0;
    double h = std::min(cfg.dt, cfg.t_final);

    while (t < cfg.t_final) {
        const double stop = emit_segment.next_stop(t);
        double h_eff = std::min(h, stop - t);
        const bool clamped = h_eff >= stop - t - 1e-30;

        for (int i = 0; i < N; ++i) xt[i] = x[i] + h_eff * a21 * k1[i];
        f(xt, k2);
        for (int i = 0; i < N; ++i) xt[i] = x[i] + h_eff * (a31 * k1[i] + a32 * k2[i]);
        f(xt, k3);
        for (int i = 0; i < N; ++i) xt[i] = x[i] + h_eff * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        f(xt, k4);
        for (int i = 0; i < N; ++i)
            xt[i] = x[i] + h_eff * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        f(xt, k5);
        for (int i = 0; i < N; ++i)
            xt[i] = x[i] + h_eff * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
        f(xt, k6);
        for (int i = 0; i < N; ++i)
            xn[i] = x[i] + h_eff * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
        f(xn, k7);

        double err = 0.0;
        for (int i = 0; i < N; ++i) {
            const double ei = h_eff * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] +
                                       e6 * k6[i] + e7 * k7[i]);
            const double sc = cfg.abs_tol +
                              cfg.rel_tol * std::max(std::abs(x[i]), std::abs(xn[i]));
            err += (ei / sc) * (ei / sc);
        }
        err = std::sqrt(err / N);

        if (!all_finite<N>(xn) || !all_finite<N>(k7) || !std::isfinite(err))
            throw IntegrationError("non-finite state", t);

        const double fac = (err > 0.0) ? 0.9 * std::pow(err, -0.2) : 5.0;
        if (err <= 1.0) {
            const double t_prev = t;
            t = clamped ? stop : t + h_eff;
            emit_segment(t_prev, x, t, xn);
            for (int i = 0; i < N; ++i) {
                x[i] = xn[i];
                k1[i] = k7[i];
            }
            // A clamped step was cut short by a sample boundary, not by the
            // error estimate; keeping the larger h avoids creeping off a
            // boundary in roundoff-sized steps.
            const double h_nat = h_eff * std::clamp(fac, 0.2, 5.0);
            h = clamped ? std::max(h, h_nat) : h_nat;
        } else {
            h = h_eff * std::clamp(fac, 0.2, 1.0);
            if (h < 1e-14 * std::max(1.0, std::abs(t)))
                throw IntegrationError("step size underflow", t);
        }
    }
}

template <class Flow, class Emit>
void run_rk4(const Flow& f, double* x, const IntegratorConfig& cfg, Emit&& emit_segment) {
    constexpr int N = Flow::dim;
    double k1[N], k2[N], k3[N], k4[N], xt[N], xn[N];
    double t = 0.0;
    while (t < cfg.t_final) {
        const double h = std::min(cfg.dt, cfg.t_final - t);
        f(x, k1);
        for (int i = 0; i < N; ++i) xt[i] = x[i] + 0.5 * h * k1[i];
        f(xt, k2);
        for (int i = 0; i < N; ++i) xt[i] = x[i] + 0.5 * h * k2[i];
        f(xt, k3);
        for (int i = 0; i < N; ++i) xt[i] = x[i] + h * k3[i];
        f(xt, k4);
        for (int i = 0; i < N; ++i)
            xn[i] = x[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        if (!all_finite<N>(xn)) throw IntegrationError("non-finite state", t);
        const double t_new = (cfg.t_final - t <= cfg.dt) ? cfg.t_final : t + h;
        emit_segment(t, x, t_new, xn);
        for (int i = 0; i < N; ++i) x[i] = xn[i];
        t = t_new;
    }
}

// Collects samples at t_transient + k * sample_dt by linear interpolation
// over accepted segments; for RK45 the segment ends on the sample exactly.
template <int N>
struct Sampler {
    const IntegratorConfig& cfg;
    std::size_t n_samples;
    std::size_t next = 0;
    std::vector<double>& times;
    std::vector<std::array<double, N>>& samples;

    Sampler(const IntegratorConfig& c, std::vector<double>& ts,
            std::vector<std::array<double, N>>& xs)
        : cfg(c), times(ts), samples(xs) {
        n_samples = static_cast<std::size_t>(
                        std::floor((cfg.t_final - cfg.t_transient) / cfg.sample_dt + 1e-9)) + 1;
        times.reserve(n_samples);
        samples.reserve(n_samples);
    }

    double sample_time(std::size_t k) const { return cfg.t_transient + static_cast<double>(k) * cfg.sample_dt; }

    double next_stop(double t) const {
        double stop = cfg.t_final;
        if (next < n_samples) stop = std::min(stop, sample_time(next));
        if (stop <= t) stop = cfg.t_final;  // guard against roundoff stall
        return stop;
    }

    void take(double tk, const double* x0, const double* x1, double w) {
        times.push_back(tk);
        std::array<double, N> s;
        for (int i = 0; i < N; ++i) s[i] = x0[i] + w * (x1[i] - x0[i]);
        samples.push_back(s);
    }

    void operator()(double t0, const double* x0, double t1, const double* x1) {
        while (next < n_samples) {
            const double tk = sample_time(next);
            if (tk > t1 + 1e-9 * std::max(1.0, t1)) break;
            const double w = (t1 > t0) ? std::clamp((tk - t0) / (t1 - t0), 0.0, 1.0) : 1.0;
            take(tk, x0, x1, w);
            ++next;
        }
    }
};

template <class Flow>
Trajectory integrate_with(const Flow& flow, const SystemState& init, const ModelParams& p,
                          ModelVariant v, const IntegratorConfig& cfg) {
    constexpr int N = Flow::dim;
    double x[8] = {};  // padded to the widest variant so pack/unpack stay in bounds
    pack_state(v, init, x);

    std::vector<double> times;
    std::vector<std::array<double, N>> raw;
    Sampler<N> sampler(cfg, times, raw);

    // t = 0 samples precede the first step
    while (sampler.next < sampler.n_samples && sampler.sample_time(sampler.next) <= 0.0) {
        sampler.take(sampler.sample_time(sampler.next), x, x, 0.0);
        ++sampler.next;
    }

    if (cfg.method == IntegratorMethod::RK45)
        run_rk45(flow, x, cfg, sampler);
    else
        run_rk4(flow, x, cfg, sampler);

    Trajectory traj;
    traj.params = p;
    traj.variant = v;
    traj.config = cfg;
    traj.times = std::move(times);
    traj.states.reserve(raw.size());
    for (const auto& a : raw) {
        double buf[8] = {};
        std::copy(a.begin(), a.end(), buf);
        traj.states.push_back(unpack_state(v, buf));
    }
    traj.final_state = unpack_state(v, x);
    traj.final_time = cfg.t_final;
    return traj;
}

} // namespace detail

inline Trajectory integrate(ModelVariant v, const SystemState& init, const ModelParams& p,
                            const IntegratorConfig& cfg) {
    cfg.validate();
    const double slack = 1.0 + 1e-6;
    if (init.plus.norm2() > slack)
        throw std::invalid_argument("integrate: |s_plus| exceeds the Bloch ball");
    if (v != ModelVariant::ReducedPlus && init.minus.norm2() > slack)
        throw std::invalid_argument("integrate: |s_minus| exceeds the Bloch ball");

    switch (v) {
        case ModelVariant::Full:
            return detail::integrate_with(detail::FullFlow(p), init, p, v, cfg);
        case ModelVariant::Adiabatic:
            return detail::integrate_with(detail::AdiabaticFlow(p), init, p, v, cfg);
        case ModelVariant::ReducedPlus:
            return detail::integrate_with(detail::ReducedFlow(p), init, p, v, cfg);
    }
    throw std::logic_error("integrate: bad variant");
}

} // namespace nrdicke
