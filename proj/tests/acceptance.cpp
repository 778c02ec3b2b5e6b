// Release gate. Each numbered check prints one verdict line with the
// measured quantities next to the accepted window; the process exits
// nonzero if any line reads FAIL. Budgets are sized so the whole gate
// finishes in a couple of minutes on one core.

#include <nrdicke/experiments.hpp>
#include <nrdicke/io.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdarg>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

using namespace nrdicke;

namespace {

int failures = 0;

void verdict(const char* name, bool ok, const std::string& detail) {
    std::printf("[%s] %-28s %s\n", ok ? "PASS" : "FAIL", name, detail.c_str());
    if (!ok) ++failures;
}

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

ModelParams make_params(double lambda, double phi, double delta = 0.0, double gamma = 0.0) {
    ModelParams p;
    p.lambda = lambda;
    p.phi = phi;
    p.delta = delta;
    p.gamma_down = gamma;
    p.normalize();
    return p;
}

SystemState random_state(SplitMix64& rng) {
    SystemState s;
    s.plus = {rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)};
    s.minus = {rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)};
    s.field = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    return s;
}

Eigen::MatrixXd fd_jacobian(const SystemState& s, const ModelParams& p, ModelVariant v) {
    const int n = state_dim(v);
    double x[8], xp[8], xm[8], dp[8], dm[8];
    pack_state(v, s, x);
    Eigen::MatrixXd j(n, n);
    const double h = 1e-6;
    for (int col = 0; col < n; ++col) {
        for (int i = 0; i < n; ++i) xp[i] = xm[i] = x[i];
        xp[col] += h;
        xm[col] -= h;
        variant_rhs(v, p, xp, dp);
        variant_rhs(v, p, xm, dm);
        for (int row = 0; row < n; ++row) j(row, col) = (dp[row] - dm[row]) / (2.0 * h);
    }
    return j;
}

double bloch_norm(const BlochVector& b) {
    return std::sqrt(b.x * b.x + b.y * b.y + b.z * b.z);
}

// strongest positive- and negative-frequency members among the top two peaks
bool split_pair(const std::vector<Peak>& peaks, Peak& pos, Peak& neg) {
    if (peaks.size() < 2) return false;
    const Peak& a = peaks[0];
    const Peak& b = peaks[1];
    if (a.frequency > 0.0 && b.frequency < 0.0) {
        pos = a;
        neg = b;
        return true;
    }
    if (a.frequency < 0.0 && b.frequency > 0.0) {
        pos = b;
        neg = a;
        return true;
    }
    return false;
}

void check_reciprocal_threshold() {
    const ModelParams base = make_params(1.0, 0.0);
    const double lc_full = np_threshold_coupling(base, ModelVariant::Full, 2.0, 4.0);
    const double lc_ad = np_threshold_coupling(base, ModelVariant::Adiabatic, 2.0, 4.0);
    const bool ok = std::abs(lc_full - 3.3131) <= 0.005 && std::abs(lc_ad - 3.3131) <= 0.005;
    verdict("01 reciprocal threshold", ok,
            fmt("lambda_c full=%.6f adiabatic=%.6f window 3.3131+/-0.005", lc_full, lc_ad));
}

void check_degeneracy_pair() {
    const ModelParams base = make_params(2.5, 0.0);
    const auto eps = find_exceptional_points(base, 0.0, M_PI_2);
    bool ok = eps.size() == 2;
    double d1 = -1.0, d2 = -1.0, worst_gap = 0.0, worst_angle = 0.0;
    double full_gap = std::numeric_limits<double>::infinity();
    if (ok) {
        d1 = std::abs(eps[0].phi - 0.20180 * M_PI);
        d2 = std::abs(eps[1].phi - 0.29820 * M_PI);
        ok = d1 <= 1e-4 && d2 <= 1e-4;
        for (const auto& ep : eps) {
            ok = ok && ep.confirmed;
            worst_gap = std::max(worst_gap, ep.gap);
            worst_angle = std::max(worst_angle, ep.vector_angle);
            ModelParams p = base;
            p.phi = ep.phi;
            p.normalize();
            full_gap = std::min(full_gap, make_report(np_xy_block_full(p)).min_pair_gap);
        }
        ok = ok && worst_gap < 1e-6 && worst_angle < 1e-3 && full_gap > 1e-2;
    }
    verdict("02 degeneracy pair", ok,
            fmt("n=%zu |dphi|=%.2e/%.2e gap=%.2e angle=%.2e full_gap=%.3f", eps.size(), d1,
                d2, worst_gap, worst_angle, full_gap));
}

void check_growth_spot() {
    const ModelParams p = make_params(2.5, M_PI / 4.0);
    const double closed = np_spectrum_closed_form(p).max_real;
    const double numeric = np_spectrum_numeric(p, ModelVariant::Adiabatic).max_real;
    const bool ok = std::abs(closed - 0.0525) <= 1e-4 && std::abs(numeric - 0.0525) <= 1e-4;
    verdict("03 growth-rate spot", ok,
            fmt("closed=%.6f numeric=%.6f window 0.0525+/-1e-4", closed, numeric));
}

void check_interior_instability() {
    double min_interior = std::numeric_limits<double>::infinity();
    bool ok = true;
    for (int i = 1; i <= 101; ++i) {
        const double phi = M_PI_2 * static_cast<double>(i) / 102.0;
        const double g = np_spectrum_numeric(make_params(2.5, phi), ModelVariant::Full).max_real;
        min_interior = std::min(min_interior, g);
        ok = ok && g > 0.0;
    }
    const double e0 = np_spectrum_numeric(make_params(2.5, 0.0), ModelVariant::Full).max_real;
    const double e1 = np_spectrum_numeric(make_params(2.5, M_PI_2), ModelVariant::Full).max_real;
    ok = ok && e0 <= kStabilityEps && e1 <= kStabilityEps;
    verdict("04 interior instability", ok,
            fmt("min interior growth=%.3e endpoints=%.1e/%.1e (cap %.0e)", min_interior, e0,
                e1, kStabilityEps));
}

void check_attractor_pairing() {
    CensusOptions co;
    co.n_ic = 64;
    const auto rep = attractor_census(make_params(3.0, M_PI / 4.0), ModelVariant::Full,
                                      20260815, co);
    bool ok = rep.clusters.size() == 2 && rep.pt_paired && rep.n_failed == 0;
    double a_lo = -1.0, a_hi = -1.0;
    std::size_t members = 0;
    if (rep.clusters.size() == 2) {
        a_lo = std::min(rep.clusters[0].signature.angle, rep.clusters[1].signature.angle);
        a_hi = std::max(rep.clusters[0].signature.angle, rep.clusters[1].signature.angle);
        for (const auto& c : rep.clusters) {
            members += c.members.size();
            ok = ok && !c.unresolved && c.signature.locked;
        }
        ok = ok && std::abs(a_lo - M_PI / 4.0) <= 1e-2 &&
             std::abs(a_hi - 3.0 * M_PI / 4.0) <= 1e-2 && members == 64;
    }
    verdict("05 paired attractors", ok,
            fmt("clusters=%zu paired=%d angles=%.5f/%.5f members=%zu failed=%d",
                rep.clusters.size(), static_cast<int>(rep.pt_paired), a_lo, a_hi, members,
                rep.n_failed));
}

void check_frequency_doubling() {
    IntegratorConfig ic;
    ic.t_final = 20000.0;
    ic.t_transient = 10000.0;
    ic.sample_dt = 0.02;
    ic.abs_tol = ic.rel_tol = 1e-9;
    const ModelParams p = make_params(3.0, M_PI / 4.0);
    const auto traj = integrate(ModelVariant::Full,
                                default_initial_conditions(InitKind::PerturbedNP, 1), p, ic);

    const auto spb = fft_spectrum(traj, Observable::Beta);
    const double window_time = static_cast<double>(spb.window) * spb.dt;
    bool ok = window_time >= 628.0 && spb.resolution <= 0.01;

    Peak pos, neg;
    double dpos = -1.0, dneg = -1.0, dz = -1.0;
    if (split_pair(dominant_peaks(spb, 2), pos, neg)) {
        dpos = std::abs(pos.frequency - 1.0);
        dneg = std::abs(neg.frequency + 1.0);
        ok = ok && dpos <= spb.resolution && dneg <= spb.resolution;
    } else {
        ok = false;
    }

    const auto spz = fft_spectrum(traj, Observable::SzPlus);
    const auto pz = dominant_peaks(spz, 1, 1e-3, 0.5);
    if (!pz.empty()) {
        dz = std::abs(pz[0].frequency - 2.0);
        ok = ok && dz <= spz.resolution;
    } else {
        ok = false;
    }
    verdict("06 locking and doubling", ok,
            fmt("|f-1|=%.1e |f+1|=%.1e |f_z-2|=%.1e bin=%.2e window=%.0f", dpos, dneg, dz,
                spb.resolution, window_time));
}

void check_quench_verdicts() {
    const QuenchOptions qo;
    const auto broken = quench_phi(make_params(2.5, M_PI / 4.0), ModelVariant::Full, qo);
    const auto invariant = quench_phi(make_params(5.5, M_PI / 8.0), ModelVariant::Full, qo);
    const bool ok = !broken.pt_invariant && broken.distance >= 10.0 * qo.eps_orbit &&
                    invariant.pt_invariant;
    verdict("07 quench verdicts", ok,
            fmt("broken d=%.4f (>= %.2f) invariant d=%.2e (< %.2f)", broken.distance,
                10.0 * qo.eps_orbit, invariant.distance, qo.eps_orbit));
}

void check_detuned_topology() {
    const ModelParams base = make_params(1.0, 0.0, 0.05);
    PhaseAxis ax1{"lambda", 0.0, 6.0, 24};
    PhaseAxis ax2{"phi", 0.0, M_PI_2, 24};
    const SweepOptions so;
    const auto pd = sweep_phase_diagram(base, ax1, ax2, ModelVariant::Full, 20260815, so);

    int n_np = 0, n_dp = 0, n_failed = 0, n_np_corner = 0;
    for (const auto& c : pd.cells) {
        if (c.label == PhaseLabel::Failed) ++n_failed;
        if (c.label == PhaseLabel::NP) {
            ++n_np;
            if (c.a1 <= 1.5 && c.a2 <= M_PI / 8.0) ++n_np_corner;
        }
        if (c.label == PhaseLabel::DP) ++n_dp;
    }
    bool ok = n_failed == 0 && n_np > 0 && n_dp > 0 && n_np_corner > 0;

    CensusOptions co;
    co.n_ic = 64;
    const auto rep = attractor_census(make_params(2.0, M_PI / 4.0, 0.05), ModelVariant::Full,
                                      20260815, co);
    ok = ok && rep.clusters.size() == 1 && rep.n_failed == 0;
    verdict("08 detuned topology", ok,
            fmt("NP=%d (corner %d) DP=%d failed=%d; detuned census clusters=%zu", n_np,
                n_np_corner, n_dp, n_failed, rep.clusters.size()));
}

void check_superradiant_scan() {
    const ModelParams base = make_params(1.0, M_PI / 5.0, 0.0, 0.02);
    PhaseAxis ax{"lambda", 0.0, 6.0, 121};
    const ScanOptions so;
    const auto scan = regime_scan(base, ax, ModelVariant::Full, so);

    // contiguous block structure and per-point health
    std::vector<PhaseLabel> blocks;
    bool ok = true;
    for (const auto& pt : scan) {
        ok = ok && pt.error.empty() && pt.label != PhaseLabel::Failed;
        if (blocks.empty() || pt.label != blocks.back()) blocks.push_back(pt.label);
    }
    const std::vector<PhaseLabel> want{PhaseLabel::NP, PhaseLabel::DP, PhaseLabel::DSR,
                                       PhaseLabel::SPAligned};
    ok = ok && blocks == want;

    // cycle band: each point carries one asymmetric +/- peak pair
    double min_asym = std::numeric_limits<double>::infinity();
    double last_cycle_sep = 0.0;
    for (const auto& pt : scan) {
        if (pt.label != PhaseLabel::DP) continue;
        ok = ok && pt.regime.label == RegimeLabel::LimitCycle;
        Peak pos, neg;
        if (!split_pair(pt.regime.peaks, pos, neg)) {
            ok = false;
            continue;
        }
        ok = ok && std::abs(pos.frequency + neg.frequency) <= 0.02;
        const double asym = (pos.amplitude - neg.amplitude) /
                            std::max(pos.amplitude, neg.amplitude);
        min_asym = std::min(min_asym, asym);
        last_cycle_sep = pos.frequency - neg.frequency;
    }
    ok = ok && min_asym >= 0.02;

    // superradiant cycle band: finite DC plus peaks that move outward
    double prev_sep = last_cycle_sep;
    int n_dsr = 0;
    for (const auto& pt : scan) {
        if (pt.label != PhaseLabel::DSR) continue;
        ++n_dsr;
        ok = ok && pt.regime.dc_amplitude >= 1e-3;
        Peak pos, neg;
        if (!split_pair(pt.regime.peaks, pos, neg) || std::abs(pos.frequency) < 0.05) {
            ok = false;
            continue;
        }
        const double sep = pos.frequency - neg.frequency;
        ok = ok && sep > prev_sep;
        prev_sep = sep;
    }
    ok = ok && n_dsr >= 1;

    // stationary tail and the intensity jump at its doorstep
    int first_sp = -1;
    for (std::size_t i = 0; i < scan.size(); ++i) {
        if (scan[i].label == PhaseLabel::SPAligned) {
            if (first_sp < 0) first_sp = static_cast<int>(i);
            ok = ok && scan[i].regime.label == RegimeLabel::Stationary;
        }
    }
    double jump = 0.0, median = 0.0;
    if (first_sp > 0) {
        std::vector<double> steps;
        for (std::size_t i = 1; i < scan.size(); ++i)
            steps.push_back(std::abs(scan[i].mean_intensity - scan[i - 1].mean_intensity));
        std::nth_element(steps.begin(), steps.begin() + steps.size() / 2, steps.end());
        median = steps[steps.size() / 2];
        jump = scan[first_sp].mean_intensity - scan[first_sp - 1].mean_intensity;
        ok = ok && jump >= 10.0 * median;
    } else {
        ok = false;
    }
    verdict("09 superradiant scan", ok,
            fmt("blocks=%zu dsr=%d min_asym=%.3f sep=%.3f->%.3f jump=%.2e median=%.2e",
                blocks.size(), n_dsr, min_asym, last_cycle_sep, prev_sep, jump, median));
}

void check_property_suites() {
    bool ok = true;

    // flow equivariance under parity and under species swap with reversed
    // phase and detuning, demanded to the last bit
    SplitMix64 rng(20260815);
    bool exact = true;
    for (int it = 0; it < 40; ++it) {
        const ModelParams p =
            make_params(rng.uniform(0.1, 5.0), rng.uniform(-3.0, 3.0),
                        rng.uniform(-0.3, 0.3), rng.uniform(0.0, 0.3));
        const SystemState s = random_state(rng);

        const auto pl = full_rhs(parity_transform(s), p).to_array();
        const auto pr = parity_transform(full_rhs(s, p)).to_array();
        const auto ql = full_rhs(pt_transform(s), pt_param_map(p)).to_array();
        const auto qr = pt_transform(full_rhs(s, p)).to_array();
        for (int i = 0; i < 8; ++i) exact = exact && pl[i] == pr[i] && ql[i] == qr[i];
    }
    ok = ok && exact;

    // eliminated-field flow against the full flow on the slaved manifold
    double rhs_dev = 0.0;
    for (const ModelParams& p :
         {make_params(2.0, 0.3, 0.01), make_params(4.0, 1.2, -0.05, 0.1)})
        rhs_dev = std::max(rhs_dev,
                           adiabatic_consistency_check(p, 200, 20260815).max_rhs_deviation);
    ok = ok && rhs_dev <= 1e-12;

    // hand-written jacobians against central differences
    double jac_dev = 0.0;
    for (ModelVariant v :
         {ModelVariant::Full, ModelVariant::Adiabatic, ModelVariant::ReducedPlus}) {
        for (int it = 0; it < 10; ++it) {
            const ModelParams p =
                make_params(rng.uniform(0.1, 5.0), rng.uniform(-3.0, 3.0),
                            rng.uniform(-0.3, 0.3), rng.uniform(0.0, 0.3));
            const SystemState s = random_state(rng);
            const Eigen::MatrixXd d = jacobian(s, p, v) - fd_jacobian(s, p, v);
            jac_dev = std::max(jac_dev, d.cwiseAbs().maxCoeff());
        }
    }
    ok = ok && jac_dev <= 1e-6;

    // undriven spin lengths stay on their spheres over a long run
    IntegratorConfig ic;
    ic.t_final = 1000.0;
    ic.t_transient = 0.0;
    ic.sample_dt = 0.1;
    ic.abs_tol = ic.rel_tol = 1e-12;
    const auto traj = integrate(ModelVariant::Full,
                                default_initial_conditions(InitKind::RandomBloch, 7),
                                make_params(3.0, M_PI / 4.0), ic);
    const double n_plus = bloch_norm(traj.states.front().plus);
    const double n_minus = bloch_norm(traj.states.front().minus);
    double norm_dev = 0.0;
    for (const auto& s : traj.states) {
        norm_dev = std::max(norm_dev, std::abs(bloch_norm(s.plus) - n_plus));
        norm_dev = std::max(norm_dev, std::abs(bloch_norm(s.minus) - n_minus));
    }
    ok = ok && norm_dev <= 1e-8;

    // windowed transform conserves power
    IntegratorConfig ic2;
    ic2.t_final = 600.0;
    ic2.t_transient = 300.0;
    ic2.sample_dt = 0.02;
    const auto traj2 = integrate(ModelVariant::Full,
                                 default_initial_conditions(InitKind::PerturbedNP, 3),
                                 make_params(4.0, M_PI / 5.0, 0.0, 0.02), ic2);
    const auto sp = fft_spectrum(traj2, Observable::Beta);
    double acc = 0.0;
    for (double a : sp.amplitudes) acc += a * a;
    const double lhs = acc * sp.window_sum * sp.window_sum;
    const double rhs = static_cast<double>(sp.window) * sp.signal_power;
    const double parseval = std::abs(lhs - rhs) / rhs;
    ok = ok && parseval <= 1e-10;

    // grid sweep is byte-stable under the worker count
    const ModelParams base = make_params(1.0, 0.0, 0.05);
    PhaseAxis ax1{"lambda", 0.0, 6.0, 3};
    PhaseAxis ax2{"phi", 0.0, M_PI_2, 3};
    SweepOptions s1, s4;
    s1.threads = 1;
    s4.threads = 4;
    std::ostringstream o1, o4;
    write_phase_diagram_csv(o1, sweep_phase_diagram(base, ax1, ax2, ModelVariant::Full,
                                                    20260815, s1));
    write_phase_diagram_csv(o4, sweep_phase_diagram(base, ax1, ax2, ModelVariant::Full,
                                                    20260815, s4));
    const bool deterministic = !o1.str().empty() && o1.str() == o4.str();
    ok = ok && deterministic;

    verdict("10 property suites", ok,
            fmt("exact=%d rhs=%.1e jac=%.1e norm=%.1e parseval=%.1e threads_equal=%d",
                static_cast<int>(exact), rhs_dev, jac_dev, norm_dev, parseval,
                static_cast<int>(deterministic)));
}

} // namespace

int main() {
    check_reciprocal_threshold();
    check_degeneracy_pair();
    check_growth_spot();
    check_interior_instability();
    check_attractor_pairing();
    check_frequency_doubling();
    check_quench_verdicts();
    check_detuned_topology();
    check_superradiant_scan();
    check_property_suites();
    std::printf("%d of 10 checks passed\n", 10 - failures);
    return failures == 0 ? 0 : 1;
}
