#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "fixed_points.hpp"
#include "spectral.hpp"
#include "util.hpp"

namespace nrdicke {

// ---- parameter axes ----

struct PhaseAxis {
    std::string name;  // lambda | phi | kappa | delta | omega_l | gamma_down
    double min = 0.0;
    double max = 1.0;
    int count = 2;

    double value(int i) const {
        if (count <= 1) return min;
        return min + (max - min) * static_cast<double>(i) / (count - 1);
    }
};

inline void apply_axis(ModelParams& p, const std::string& name, double value) {
    if (name == "lambda") p.lambda = value;
    else if (name == "phi") p.phi = value;
    else if (name == "kappa") p.kappa = value;
    else if (name == "delta") p.delta = value;
    else if (name == "omega_l") p.omega_l = value;
    else if (name == "gamma_down") p.gamma_down = value;
    else throw std::invalid_argument("unknown parameter axis: " + name);
}

// ---- phase diagram sweep ----

enum class PhaseLabel { NP, SPAligned, SPAntialigned, SPCoex, DP, DSR, Broadband, Failed };

inline const char* phase_label_name(PhaseLabel l) {
    switch (l) {
        case PhaseLabel::NP: return "NP";
        case PhaseLabel::SPAligned: return "SP_ALIGNED";
        case PhaseLabel::SPAntialigned: return "SP_ANTIALIGNED";
        case PhaseLabel::SPCoex: return "SP_COEX";
        case PhaseLabel::DP: return "DP";
        case PhaseLabel::DSR: return "DSR";
        case PhaseLabel::Broadband: return "BROADBAND";
        case PhaseLabel::Failed: return "FAILED";
    }
    return "?";
}

inline PhaseLabel parse_phase_label(const std::string& s) {
    for (PhaseLabel l : {PhaseLabel::NP, PhaseLabel::SPAligned, PhaseLabel::SPAntialigned,
                         PhaseLabel::SPCoex, PhaseLabel::DP, PhaseLabel::DSR,
                         PhaseLabel::Broadband, PhaseLabel::Failed})
        if (s == phase_label_name(l)) return l;
    throw std::invalid_argument("unknown phase label: " + s);
}

struct PhaseCell {
    double a1 = 0.0, a2 = 0.0;
    PhaseLabel label = PhaseLabel::Failed;
    double max_growth = 0.0;      // largest growth rate at the dark state
    double mean_intensity = 0.0;  // |beta|^2 of the settled phase
    int n_attractors = 0;
    std::string error;            // non-empty when the cell failed
};

struct PhaseDiagram {
    ModelParams base;
    ModelVariant variant = ModelVariant::Full;
    PhaseAxis axis1, axis2;
    std::uint64_t seed = 0;
    std::vector<PhaseCell> cells;  // row-major, index = i1 * axis2.count + i2

    const PhaseCell& at(int i1, int i2) const { return cells[i1 * axis2.count + i2]; }
};

struct SweepOptions {
    IntegratorConfig integ{IntegratorMethod::RK45, 1e-3, 1e-9, 1e-9, 3000.0, 1500.0, 0.02};
    FindAllOptions fp;
    RegimeOptions regime;
    int n_random_ic = 2;
    int marginal_retries = 3;    // window doublings granted to unsettled runs
    double perturb = 1e-3;       // kick used to test marginal spectra and seed runs
    double capture_tol = 1e-2;   // escape radius for the marginal-capture test
    double capture_t = 300.0;
    unsigned threads = 1;
};

// Model-aware field intensity: spin-only variants reconstruct the field the
// eliminated mode would carry.
inline double settled_intensity(const Trajectory& traj) {
    if (traj.states.empty()) return 0.0;
    double acc = 0.0;
    switch (traj.variant) {
        case ModelVariant::Full:
            return mean_intensity(traj);
        case ModelVariant::Adiabatic:
            for (const auto& s : traj.states)
                acc += std::norm(enslaved_field(s.plus, s.minus, traj.params));
            break;
        case ModelVariant::ReducedPlus: {
            const double r = reduced_field_ratio(traj.params);
            for (const auto& s : traj.states) acc += r * r * s.plus.x * s.plus.x;
            break;
        }
    }
    return acc / static_cast<double>(traj.states.size());
}

namespace detail {

// A spectrum flat at zero cannot distinguish a center from a slow spiral;
// kick the state and watch whether the orbit stays in a small ball. The kick
// is renormalized so spins stay on their shells (the radial direction is the
// neutral family mode, not the one under test).
inline bool marginal_captured(const FixedPoint& fp, const ModelParams& p, ModelVariant v,
                              const SweepOptions& opt) {
    IntegratorConfig cfg = opt.integ;
    cfg.t_final = opt.capture_t;
    cfg.t_transient = 0.0;
    cfg.sample_dt = std::max(cfg.sample_dt, 0.1);
    SystemState start = fp.state;
    start.plus.x += opt.perturb;
    const double n0 = std::sqrt(fp.state.plus.norm2());
    const double n1 = std::sqrt(start.plus.norm2());
    if (n0 > 0.0 && n1 > 0.0) {
        start.plus.x *= n0 / n1;
        start.plus.y *= n0 / n1;
        start.plus.z *= n0 / n1;
    }
    try {
        const Trajectory traj = integrate(v, start, p, cfg);
        for (const auto& s : traj.states)
            if (max_norm_distance(s, fp.state) > opt.capture_tol) return false;
        return true;
    } catch (const std::exception&) {
        return false;
    }
}

struct CellAssessment {
    bool has_stable_np = false;
    bool has_stable_aligned = false;
    bool has_stable_anti = false;
    int n_stable = 0;
    double np_max_growth = 0.0;
    const FixedPoint* stable_sp = nullptr;  // strongest stable parity-broken root
};

inline CellAssessment assess_cell(FixedPointSet& fps, const ModelParams& p, ModelVariant v,
                                  const SweepOptions& opt) {
    CellAssessment a;
    for (auto& fp : fps.points) {
        const double g = fp.max_real.value_or(0.0);
        if (fp.label == FixedPointLabel::NP)
            a.np_max_growth = std::max(a.np_max_growth, g);
        const StabilityVerdict verdict = classify_stability(g, opt.fp.eps_stab);
        bool eff_stable = verdict == StabilityVerdict::Stable;
        if (verdict == StabilityVerdict::Marginal)
            eff_stable = marginal_captured(fp, p, v, opt);
        fp.stable = eff_stable;
        if (!eff_stable) continue;
        ++a.n_stable;
        switch (fp.label) {
            case FixedPointLabel::NP: a.has_stable_np = true; break;
            case FixedPointLabel::SPAligned:
            case FixedPointLabel::SPAntialigned: {
                if (fp.label == FixedPointLabel::SPAligned) a.has_stable_aligned = true;
                else a.has_stable_anti = true;
                if (!a.stable_sp ||
                    std::norm(fp.state.field) > std::norm(a.stable_sp->state.field))
                    a.stable_sp = &fp;
                break;
            }
            case FixedPointLabel::Other: break;
        }
    }
    return a;
}

} // namespace detail

inline PhaseCell evaluate_phase_cell(const ModelParams& p, ModelVariant v,
                                     std::uint64_t cell_seed, const SweepOptions& opt) {
    PhaseCell cell;
    FindAllOptions fopt = opt.fp;
    fopt.seed = cell_seed;
    FixedPointSet fps = find_all_fixed_points(p, v, fopt);
    detail::CellAssessment a = detail::assess_cell(fps, p, v, opt);
    cell.max_growth = a.np_max_growth;

    if (a.has_stable_aligned || a.has_stable_anti) {
        cell.label = (a.has_stable_aligned && a.has_stable_anti) ? PhaseLabel::SPCoex
                     : a.has_stable_aligned                      ? PhaseLabel::SPAligned
                                                                 : PhaseLabel::SPAntialigned;
        cell.mean_intensity = a.stable_sp ? std::norm(a.stable_sp->state.field) : 0.0;
        cell.n_attractors = a.n_stable;
        return cell;
    }
    if (a.has_stable_np) {
        cell.label = PhaseLabel::NP;
        cell.mean_intensity = 0.0;
        cell.n_attractors = a.n_stable;
        return cell;
    }

    // no stable steady state: settle the flow and read the regime
    std::vector<RegimeLabel> votes;
    std::optional<Trajectory> first_run;
    SystemState polished_probe;
    const int n_runs = 1 + opt.n_random_ic;
    for (int r = 0; r < n_runs; ++r) {
        SystemState init;
        if (r == 0) {
            init = default_initial_conditions(InitKind::PerturbedNP);
        } else {
            init = default_initial_conditions(InitKind::RandomBloch,
                                              mix_seed(cell_seed, 0x1c, r));
        }
        IntegratorConfig cfg = opt.integ;
        Trajectory traj = integrate(v, init, p, cfg);
        RegimeReport rep = classify_regime(traj, opt.regime);
        for (int k = 0; k < opt.marginal_retries && rep.label == RegimeLabel::Marginal; ++k) {
            cfg.t_final *= 2.0;
            cfg.t_transient *= 2.0;
            traj = integrate(v, init, p, cfg);
            rep = classify_regime(traj, opt.regime);
        }
        if (!first_run) first_run = traj;
        polished_probe = traj.final_state;
        votes.push_back(rep.label == RegimeLabel::Marginal ? RegimeLabel::Stationary
                                                           : rep.label);
    }

    int n_lc = 0, n_dsr = 0, n_bb = 0, n_stat = 0;
    for (RegimeLabel lab : votes) {
        if (lab == RegimeLabel::LimitCycle) ++n_lc;
        else if (lab == RegimeLabel::DSR) ++n_dsr;
        else if (lab == RegimeLabel::Broadband) ++n_bb;
        else ++n_stat;
    }

    if (n_lc + n_dsr + n_bb == 0) {
        // everything settled after all: polish the endpoint into a root
        NewtonResult nr = newton_solve(polished_probe, p, v);
        const FixedPointLabel flab =
            nr.converged ? classify_fixed_point(nr.state) : FixedPointLabel::Other;
        switch (flab) {
            case FixedPointLabel::NP: cell.label = PhaseLabel::NP; break;
            case FixedPointLabel::SPAligned: cell.label = PhaseLabel::SPAligned; break;
            case FixedPointLabel::SPAntialigned: cell.label = PhaseLabel::SPAntialigned; break;
            case FixedPointLabel::Other:
                cell.label = PhaseLabel::Failed;
                cell.error = "stationary at unrecognized state";
                break;
        }
        if (nr.converged) cell.mean_intensity = std::norm(nr.state.field);
        cell.n_attractors = 1;
        return cell;
    }

    if (n_dsr >= n_lc && n_dsr >= n_bb) cell.label = PhaseLabel::DSR;
    else if (n_lc >= n_bb) cell.label = PhaseLabel::DP;
    else cell.label = PhaseLabel::Broadband;
    cell.mean_intensity = settled_intensity(*first_run);
    int distinct = 0;
    for (RegimeLabel lab : {RegimeLabel::LimitCycle, RegimeLabel::DSR, RegimeLabel::Broadband,
                            RegimeLabel::Stationary})
        if (std::count(votes.begin(), votes.end(), lab) > 0) ++distinct;
    cell.n_attractors = std::max(1, distinct);
    return cell;
}

inline PhaseDiagram sweep_phase_diagram(const ModelParams& base, const PhaseAxis& ax1,
                                        const PhaseAxis& ax2, ModelVariant v,
                                        std::uint64_t seed, const SweepOptions& opt = {}) {
    if (ax1.count < 1 || ax2.count < 1)
        throw std::invalid_argument("sweep_phase_diagram: axis count must be >= 1");
    PhaseDiagram pd;
    pd.base = base;
    pd.variant = v;
    pd.axis1 = ax1;
    pd.axis2 = ax2;
    pd.seed = seed;
    pd.cells.resize(static_cast<std::size_t>(ax1.count) * ax2.count);

    parallel_for(pd.cells.size(), opt.threads, [&](std::size_t idx) {
        const int i1 = static_cast<int>(idx) / ax2.count;
        const int i2 = static_cast<int>(idx) % ax2.count;
        PhaseCell cell;
        cell.a1 = ax1.value(i1);
        cell.a2 = ax2.value(i2);
        try {
            ModelParams p = base;
            apply_axis(p, ax1.name, cell.a1);
            apply_axis(p, ax2.name, cell.a2);
            p.normalize();
            PhaseCell result = evaluate_phase_cell(p, v, mix_seed(seed, i1, i2), opt);
            result.a1 = cell.a1;
            result.a2 = cell.a2;
            cell = result;
        } catch (const std::exception& e) {
            cell.label = PhaseLabel::Failed;
            cell.error = e.what();
        }
        pd.cells[idx] = cell;
    });
    return pd;
}

// ---- quench: relax, flip the coupling phase, compare orbits ----

struct OrbitSummary {
    LockingReport lock;
    double mean_sz_plus = 0.0;
    double mean_sz_minus = 0.0;
    double amp_beta = 0.0;  // half swing of |beta|
};

inline OrbitSummary summarize_orbit(const Trajectory& traj) {
    OrbitSummary s;
    s.lock = phase_locking_angle(traj);
    if (traj.states.empty()) return s;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& st : traj.states) {
        s.mean_sz_plus += st.plus.z;
        s.mean_sz_minus += st.minus.z;
        const double ab = std::abs(st.field);
        lo = std::min(lo, ab);
        hi = std::max(hi, ab);
    }
    const double n = static_cast<double>(traj.states.size());
    s.mean_sz_plus /= n;
    s.mean_sz_minus /= n;
    s.amp_beta = 0.5 * (hi - lo);
    return s;
}

namespace detail {

inline std::vector<SystemState> subsample_cloud(const std::vector<SystemState>& pts,
                                                std::size_t cap) {
    if (pts.size() <= cap) return pts;
    std::vector<SystemState> out;
    out.reserve(cap);
    const double stride = static_cast<double>(pts.size()) / static_cast<double>(cap);
    for (std::size_t i = 0; i < cap; ++i)
        out.push_back(pts[static_cast<std::size_t>(i * stride)]);
    return out;
}

inline double directed_hausdorff(const std::vector<SystemState>& a,
                                 const std::vector<SystemState>& b) {
    double worst = 0.0;
    for (const auto& pa : a) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& pb : b) {
            const double d = max_norm_distance(pa, pb);
            if (d < best) {
                best = d;
                if (best <= worst) break;  // cannot raise the supremum
            }
        }
        worst = std::max(worst, best);
    }
    return worst;
}

} // namespace detail

inline double hausdorff_distance(const std::vector<SystemState>& a,
                                 const std::vector<SystemState>& b,
                                 std::size_t cap = 2048) {
    if (a.empty() || b.empty())
        throw std::invalid_argument("hausdorff_distance: empty cloud");
    const auto sa = detail::subsample_cloud(a, cap);
    const auto sb = detail::subsample_cloud(b, cap);
    return std::max(detail::directed_hausdorff(sa, sb), detail::directed_hausdorff(sb, sa));
}

struct QuenchOptions {
    IntegratorConfig relax{IntegratorMethod::RK45, 1e-3, 1e-9, 1e-9, 6000.0, 3000.0, 0.02};
    IntegratorConfig post{IntegratorMethod::RK45, 1e-3, 1e-9, 1e-9, 6000.0, 3000.0, 0.02};
    double eps_orbit = 1e-2;
    std::size_t cloud_cap = 2048;
};

struct QuenchReport {
    ModelParams params;
    ModelVariant variant = ModelVariant::Full;
    double distance = 0.0;   // Hausdorff between the pre orbit and the swapped post orbit
    double eps_orbit = 1e-2;
    bool pt_invariant = false;
    OrbitSummary pre, post;
};

// Relax onto an attractor, flip phi -> -phi, and test whether the species-swapped
// continuation retraces the original orbit.
inline QuenchReport quench_phi(const ModelParams& p, ModelVariant v,
                               const QuenchOptions& opt = {}) {
    QuenchReport rep;
    rep.params = p;
    rep.variant = v;
    rep.eps_orbit = opt.eps_orbit;

    const Trajectory pre =
        integrate(v, default_initial_conditions(InitKind::PerturbedNP), p, opt.relax);
    ModelParams flipped = p;
    flipped.phi = -flipped.phi;
    flipped.normalize();
    const Trajectory post = integrate(v, pre.final_state, flipped, opt.post);

    rep.pre = summarize_orbit(pre);
    rep.post = summarize_orbit(post);

    std::vector<SystemState> image;
    image.reserve(post.states.size());
    for (const auto& s : post.states) image.push_back(pt_transform(s));
    rep.distance = hausdorff_distance(image, pre.states, opt.cloud_cap);
    rep.pt_invariant = rep.distance < opt.eps_orbit;
    return rep;
}

// ---- attractor census over random initial conditions ----

// Eight numbers in comparable units; the locking angle enters through
// (cos 2t, sin 2t)/2 so the mod-pi wrap needs no special casing and the
// species swap pairs with a sign flip of the second component.
struct OrbitSignature {
    bool locked = false;
    double angle = 0.0;
    std::array<double, 8> v{};

    static OrbitSignature from_trajectory(const Trajectory& traj) {
        OrbitSignature sig;
        const OrbitSummary sum = summarize_orbit(traj);
        sig.locked = sum.lock.locked;
        sig.angle = sum.lock.angle;
        double lo_p = 1e300, hi_p = -1e300, lo_m = 1e300, hi_m = -1e300;
        std::complex<double> mean_beta(0.0, 0.0);
        for (const auto& s : traj.states) {
            lo_p = std::min(lo_p, s.plus.z);
            hi_p = std::max(hi_p, s.plus.z);
            lo_m = std::min(lo_m, s.minus.z);
            hi_m = std::max(hi_m, s.minus.z);
            mean_beta += s.field;
        }
        mean_beta /= static_cast<double>(traj.states.size());
        double ac = 0.0;
        for (const auto& s : traj.states) ac += std::norm(s.field - mean_beta);
        ac = std::sqrt(ac / static_cast<double>(traj.states.size()));

        sig.v[0] = sig.locked ? 0.5 * std::cos(2.0 * sig.angle) : 0.0;
        sig.v[1] = sig.locked ? 0.5 * std::sin(2.0 * sig.angle) : 0.0;
        sig.v[2] = sum.mean_sz_plus;
        sig.v[3] = sum.mean_sz_minus;
        sig.v[4] = 0.5 * (hi_p - lo_p);
        sig.v[5] = 0.5 * (hi_m - lo_m);
        sig.v[6] = ac;
        sig.v[7] = std::abs(mean_beta);
        return sig;
    }

    OrbitSignature pt_image() const {
        OrbitSignature out = *this;
        out.v[1] = -out.v[1];
        std::swap(out.v[2], out.v[3]);
        std::swap(out.v[4], out.v[5]);
        if (locked) {
            out.angle = M_PI - angle;
            if (out.angle >= M_PI) out.angle -= M_PI;
        }
        return out;
    }
};

inline double signature_distance(const OrbitSignature& a, const OrbitSignature& b) {
    if (a.locked != b.locked) return std::numeric_limits<double>::infinity();
    double d = 0.0;
    for (int i = 0; i < 8; ++i) d = std::max(d, std::abs(a.v[i] - b.v[i]));
    return d;
}

struct CensusOptions {
    int n_ic = 64;
    // undamped spins relax onto their cycles only through the lossy field, so
    // signatures need a long horizon before clusters tighten below eps_cluster
    IntegratorConfig integ{IntegratorMethod::RK45, 1e-3, 1e-9, 1e-9, 20000.0, 10000.0, 0.02};
    double eps_cluster = 1e-2;
    unsigned threads = 1;
};

struct CensusCluster {
    OrbitSignature signature;   // centroid
    std::vector<int> members;
    double diameter = 0.0;
    bool unresolved = false;    // chained beyond the linking scale
};

struct CensusReport {
    ModelParams params;
    ModelVariant variant = ModelVariant::Full;
    int n_ic = 0;
    std::uint64_t seed = 0;
    double eps_cluster = 1e-2;
    std::vector<OrbitSignature> signatures;
    std::vector<CensusCluster> clusters;
    bool pt_paired = false;
    int n_failed = 0;
};

namespace detail {

struct UnionFind {
    std::vector<int> up;
    explicit UnionFind(int n) : up(n) { for (int i = 0; i < n; ++i) up[i] = i; }
    int find(int i) { return up[i] == i ? i : up[i] = find(up[i]); }
    void join(int a, int b) { up[find(a)] = find(b); }
};

} // namespace detail

inline CensusReport attractor_census(const ModelParams& p, ModelVariant v, std::uint64_t seed,
                                     const CensusOptions& opt = {}) {
    CensusReport rep;
    rep.params = p;
    rep.variant = v;
    rep.n_ic = opt.n_ic;
    rep.seed = seed;
    rep.eps_cluster = opt.eps_cluster;

    std::vector<OrbitSignature> sigs(opt.n_ic);
    std::vector<char> ok(opt.n_ic, 0);
    parallel_for(static_cast<std::size_t>(opt.n_ic), opt.threads, [&](std::size_t i) {
        try {
            const SystemState init =
                default_initial_conditions(InitKind::RandomBloch, mix_seed(seed, i));
            const Trajectory traj = integrate(v, init, p, opt.integ);
            sigs[i] = OrbitSignature::from_trajectory(traj);
            ok[i] = 1;
        } catch (const std::exception&) {
            ok[i] = 0;
        }
    });

    std::vector<int> keep;
    for (int i = 0; i < opt.n_ic; ++i) {
        if (ok[i]) keep.push_back(i);
        else ++rep.n_failed;
    }
    rep.signatures = sigs;

    detail::UnionFind uf(static_cast<int>(keep.size()));
    for (std::size_t i = 0; i < keep.size(); ++i)
        for (std::size_t j = i + 1; j < keep.size(); ++j)
            if (signature_distance(sigs[keep[i]], sigs[keep[j]]) < opt.eps_cluster)
                uf.join(static_cast<int>(i), static_cast<int>(j));

    std::vector<int> root_of(keep.size());
    std::vector<int> roots;
    for (std::size_t i = 0; i < keep.size(); ++i) {
        root_of[i] = uf.find(static_cast<int>(i));
        if (std::find(roots.begin(), roots.end(), root_of[i]) == roots.end())
            roots.push_back(root_of[i]);
    }
    std::sort(roots.begin(), roots.end());

    for (int r : roots) {
        CensusCluster c;
        double sum_cos = 0.0, sum_sin = 0.0;
        int n_locked = 0;
        std::array<double, 8> acc{};
        for (std::size_t i = 0; i < keep.size(); ++i) {
            if (root_of[i] != r) continue;
            const OrbitSignature& s = sigs[keep[i]];
            c.members.push_back(keep[i]);
            for (int k = 0; k < 8; ++k) acc[k] += s.v[k];
            if (s.locked) {
                ++n_locked;
                sum_cos += std::cos(2.0 * s.angle);
                sum_sin += std::sin(2.0 * s.angle);
            }
        }
        const double n = static_cast<double>(c.members.size());
        for (int k = 0; k < 8; ++k) c.signature.v[k] = acc[k] / n;
        c.signature.locked = n_locked * 2 > static_cast<int>(c.members.size());
        if (c.signature.locked) {
            double ang = 0.5 * std::atan2(sum_sin, sum_cos);
            if (ang < 0.0) ang += M_PI;
            c.signature.angle = ang;
        }
        for (std::size_t ii = 0; ii < c.members.size(); ++ii)
            for (std::size_t jj = ii + 1; jj < c.members.size(); ++jj)
                c.diameter = std::max(c.diameter,
                                      signature_distance(sigs[c.members[ii]], sigs[c.members[jj]]));
        c.unresolved = c.diameter > 2.0 * opt.eps_cluster;
        rep.clusters.push_back(c);
    }

    // every cluster must have a partner matching its species-swapped signature
    std::vector<char> used(rep.clusters.size(), 0);
    bool paired = true;
    for (const auto& c : rep.clusters) {
        const OrbitSignature img = c.signature.pt_image();
        bool found = false;
        for (std::size_t j = 0; j < rep.clusters.size(); ++j) {
            if (used[j]) continue;
            if (signature_distance(img, rep.clusters[j].signature) < opt.eps_cluster) {
                used[j] = 1;
                found = true;
                break;
            }
        }
        if (!found) {
            paired = false;
            break;
        }
    }
    rep.pt_paired = paired && !rep.clusters.empty();
    return rep;
}

// ---- adiabatic consistency ----

struct ConsistencyReport {
    double max_rhs_deviation = 0.0;  // spin block of the full flow at the enslaved
                                     // field vs the eliminated flow, relative
    struct ScalePoint {
        double scale = 1.0;
        double full_max_real = 0.0;
        double adiabatic_max_real = 0.0;
        double deviation = 0.0;
    };
    std::vector<ScalePoint> scale_points;
    bool monotone = true;
};

inline ConsistencyReport adiabatic_consistency_check(const ModelParams& p, int n_samples,
                                                     std::uint64_t seed) {
    ConsistencyReport rep;
    SplitMix64 rng(seed);
    for (int i = 0; i < n_samples; ++i) {
        SystemState s;
        s.plus = random_bloch(rng);
        s.minus = random_bloch(rng);
        s.field = enslaved_field(s.plus, s.minus, p);
        const SystemState full = full_rhs(s, p);
        const auto [dp, dm] = adiabatic_rhs(s.plus, s.minus, p);
        double scale = 1.0, dev = 0.0;
        const double fa[6] = {full.plus.x, full.plus.y, full.plus.z,
                              full.minus.x, full.minus.y, full.minus.z};
        const double aa[6] = {dp.x, dp.y, dp.z, dm.x, dm.y, dm.z};
        for (int k = 0; k < 6; ++k) {
            scale = std::max(scale, std::abs(aa[k]));
            dev = std::max(dev, std::abs(fa[k] - aa[k]));
        }
        rep.max_rhs_deviation = std::max(rep.max_rhs_deviation, dev / scale);
    }

    // push the field timescale away while holding the effective couplings fixed
    const EigenReport ad = np_spectrum_closed_form(p);
    for (double scale : {1.0, 2.0, 5.0, 10.0}) {
        ModelParams q = p;
        q.omega_l = p.omega_l * scale;
        q.kappa = p.kappa * scale;
        q.lambda = p.lambda * std::sqrt(scale);
        q.normalize();
        ConsistencyReport::ScalePoint sp;
        sp.scale = scale;
        sp.adiabatic_max_real = ad.max_real;
        sp.full_max_real = np_spectrum_numeric(q, ModelVariant::Full).max_real;
        sp.deviation = std::abs(sp.full_max_real - sp.adiabatic_max_real);
        rep.scale_points.push_back(sp);
    }
    for (std::size_t i = 1; i < rep.scale_points.size(); ++i)
        if (rep.scale_points[i].deviation > rep.scale_points[i - 1].deviation + 1e-12)
            rep.monotone = false;
    return rep;
}

// ---- one-dimensional regime scan ----

struct ScanPoint {
    double value = 0.0;
    RegimeReport regime;
    PhaseLabel label = PhaseLabel::Failed;  // stationary points resolve to NP/SP labels
    double mean_intensity = 0.0;
    LockingReport lock;
    std::string error;
};

struct ScanOptions {
    IntegratorConfig integ{IntegratorMethod::RK45, 1e-3, 1e-9, 1e-9, 3600.0, 1800.0, 0.02};
    RegimeOptions regime;
    int marginal_retries = 4;    // near a cycle onset the growth rate vanishes, so
                                 // boundary points need several window doublings
    unsigned threads = 1;
};

inline std::vector<ScanPoint> regime_scan(const ModelParams& base, const PhaseAxis& axis,
                                          ModelVariant v, const ScanOptions& opt = {}) {
    std::vector<ScanPoint> out(axis.count);
    parallel_for(static_cast<std::size_t>(axis.count), opt.threads, [&](std::size_t i) {
        ScanPoint pt;
        pt.value = axis.value(static_cast<int>(i));
        try {
            ModelParams p = base;
            apply_axis(p, axis.name, pt.value);
            p.normalize();
            IntegratorConfig cfg = opt.integ;
            Trajectory traj =
                integrate(v, default_initial_conditions(InitKind::PerturbedNP), p, cfg);
            RegimeReport rep = classify_regime(traj, opt.regime);
            for (int k = 0; k < opt.marginal_retries && rep.label == RegimeLabel::Marginal;
                 ++k) {
                cfg.t_final *= 2.0;
                cfg.t_transient *= 2.0;
                traj = integrate(v, default_initial_conditions(InitKind::PerturbedNP), p, cfg);
                rep = classify_regime(traj, opt.regime);
            }
            pt.regime = rep;
            pt.lock = phase_locking_angle(traj);
            pt.mean_intensity = settled_intensity(traj);
            switch (rep.label) {
                case RegimeLabel::LimitCycle: pt.label = PhaseLabel::DP; break;
                case RegimeLabel::DSR: pt.label = PhaseLabel::DSR; break;
                case RegimeLabel::Broadband: pt.label = PhaseLabel::Broadband; break;
                case RegimeLabel::Stationary:
                case RegimeLabel::Marginal: {
                    NewtonResult nr = newton_solve(traj.final_state, p, v);
                    FixedPointLabel flab =
                        nr.converged ? classify_fixed_point(nr.state) : FixedPointLabel::Other;
                    if (nr.converged && v == ModelVariant::Adiabatic &&
                        field_denominator(p) > 0.0) {
                        SystemState with_field = nr.state;
                        with_field.field = enslaved_field(nr.state.plus, nr.state.minus, p);
                        flab = classify_fixed_point(with_field);
                        pt.mean_intensity = std::norm(with_field.field);
                    } else if (nr.converged) {
                        pt.mean_intensity = std::norm(nr.state.field);
                    }
                    switch (flab) {
                        case FixedPointLabel::NP: pt.label = PhaseLabel::NP; break;
                        case FixedPointLabel::SPAligned: pt.label = PhaseLabel::SPAligned; break;
                        case FixedPointLabel::SPAntialigned:
                            pt.label = PhaseLabel::SPAntialigned;
                            break;
                        case FixedPointLabel::Other:
                            pt.label = PhaseLabel::Failed;
                            pt.error = "stationary at unrecognized state";
                            break;
                    }
                    break;
                }
            }
        } catch (const std::exception& e) {
            pt.label = PhaseLabel::Failed;
            pt.error = e.what();
        }
        out[i] = pt;
    });
    return out;
}

} // namespace nrdicke
