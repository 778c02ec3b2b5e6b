#pragma once

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "experiments.hpp"

namespace nrdicke {

using json = nlohmann::json;

// 17 significant digits: enough to reproduce any double exactly on re-parse.
inline std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

inline double parse_double(const std::string& s) {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("bad numeric field: " + s);
    return v;
}

inline std::ofstream open_out(const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    return f;
}

inline std::ifstream open_in(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open for reading: " + path);
    return f;
}

} // namespace detail

// ---- trajectory CSV ----

inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
    os << "t,sx_p,sy_p,sz_p,sx_m,sy_m,sz_m,re_beta,im_beta\n";
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const auto a = traj.states[i].to_array();
        os << fmt17(traj.times[i]);
        for (double x : a) os << ',' << fmt17(x);
        os << '\n';
    }
}

inline void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
    auto f = detail::open_out(path);
    write_trajectory_csv(f, traj);
}

struct TrajectoryData {
    std::vector<double> times;
    std::vector<SystemState> states;
};

inline TrajectoryData read_trajectory_csv(std::istream& is) {
    TrajectoryData td;
    std::string line;
    if (!std::getline(is, line) || line.rfind("t,", 0) != 0)
        throw std::runtime_error("trajectory CSV: missing header");
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto f = detail::split_csv_line(line);
        if (f.size() != 9) throw std::runtime_error("trajectory CSV: bad row");
        td.times.push_back(detail::parse_double(f[0]));
        std::array<double, 8> a;
        for (int k = 0; k < 8; ++k) a[k] = detail::parse_double(f[k + 1]);
        td.states.push_back(SystemState::from_array(a));
    }
    return td;
}

inline TrajectoryData read_trajectory_csv(const std::string& path) {
    auto f = detail::open_in(path);
    return read_trajectory_csv(f);
}

// ---- spectrum CSV ----

inline void write_spectrum_csv(std::ostream& os, const FrequencySpectrum& sp) {
    os << "frequency,amplitude\n";
    for (std::size_t k = 0; k < sp.frequencies.size(); ++k)
        os << fmt17(sp.frequencies[k]) << ',' << fmt17(sp.amplitudes[k]) << '\n';
}

inline void write_spectrum_csv(const std::string& path, const FrequencySpectrum& sp) {
    auto f = detail::open_out(path);
    write_spectrum_csv(f, sp);
}

struct SpectrumData {
    std::vector<double> frequencies;
    std::vector<double> amplitudes;
};

inline SpectrumData read_spectrum_csv(const std::string& path) {
    auto f = detail::open_in(path);
    SpectrumData sd;
    std::string line;
    if (!std::getline(f, line) || line.rfind("frequency", 0) != 0)
        throw std::runtime_error("spectrum CSV: missing header");
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != 2) throw std::runtime_error("spectrum CSV: bad row");
        sd.frequencies.push_back(detail::parse_double(fields[0]));
        sd.amplitudes.push_back(detail::parse_double(fields[1]));
    }
    return sd;
}

// ---- phase diagram CSV ----

inline void write_phase_diagram_csv(std::ostream& os, const PhaseDiagram& pd) {
    os << pd.axis1.name << ',' << pd.axis2.name
       << ",label,max_growth,mean_intensity,n_attractors\n";
    for (const auto& c : pd.cells)
        os << fmt17(c.a1) << ',' << fmt17(c.a2) << ',' << phase_label_name(c.label) << ','
           << fmt17(c.max_growth) << ',' << fmt17(c.mean_intensity) << ',' << c.n_attractors
           << '\n';
}

inline void write_phase_diagram_csv(const std::string& path, const PhaseDiagram& pd) {
    auto f = detail::open_out(path);
    write_phase_diagram_csv(f, pd);
}

struct PhaseDiagramData {
    std::string axis1, axis2;
    std::vector<PhaseCell> cells;
};

inline PhaseDiagramData read_phase_diagram_csv(const std::string& path) {
    auto f = detail::open_in(path);
    PhaseDiagramData pdd;
    std::string line;
    if (!std::getline(f, line)) throw std::runtime_error("phase diagram CSV: empty");
    const auto head = detail::split_csv_line(line);
    if (head.size() != 6) throw std::runtime_error("phase diagram CSV: bad header");
    pdd.axis1 = head[0];
    pdd.axis2 = head[1];
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != 6) throw std::runtime_error("phase diagram CSV: bad row");
        PhaseCell c;
        c.a1 = detail::parse_double(fields[0]);
        c.a2 = detail::parse_double(fields[1]);
        c.label = parse_phase_label(fields[2]);
        c.max_growth = detail::parse_double(fields[3]);
        c.mean_intensity = detail::parse_double(fields[4]);
        c.n_attractors = static_cast<int>(detail::parse_double(fields[5]));
        pdd.cells.push_back(c);
    }
    return pdd;
}

// ---- regime scan CSV ----

inline void write_scan_csv(std::ostream& os, const std::string& axis_name,
                           const std::vector<ScanPoint>& scan) {
    os << axis_name
       << ",regime,label,dc_amplitude,mean_intensity,locked,lock_angle,n_peaks,"
          "f1,a1,f2,a2,peak_separation\n";
    for (const auto& pt : scan) {
        const Peak p1 = pt.regime.peaks.size() > 0 ? pt.regime.peaks[0] : Peak{};
        const Peak p2 = pt.regime.peaks.size() > 1 ? pt.regime.peaks[1] : Peak{};
        const double sep = pt.regime.peaks.size() > 1
                               ? std::abs(p1.frequency - p2.frequency)
                               : 0.0;
        os << fmt17(pt.value) << ',' << regime_name(pt.regime.label) << ','
           << phase_label_name(pt.label) << ',' << fmt17(pt.regime.dc_amplitude) << ','
           << fmt17(pt.mean_intensity) << ',' << (pt.lock.locked ? 1 : 0) << ','
           << fmt17(pt.lock.angle) << ',' << pt.regime.peaks.size() << ',' << fmt17(p1.frequency)
           << ',' << fmt17(p1.amplitude) << ',' << fmt17(p2.frequency) << ','
           << fmt17(p2.amplitude) << ',' << fmt17(sep) << '\n';
    }
}

// ---- JSON report serialization ----

inline json params_to_json(const ModelParams& p) {
    return json{{"omega0", p.omega0},       {"omega_l", p.omega_l},
                {"kappa", p.kappa},         {"lambda", p.lambda},
                {"phi", p.phi},             {"delta", p.delta},
                {"gamma_down", p.gamma_down}};
}

inline ModelParams params_from_json(const json& j) {
    ModelParams p;
    p.omega0 = j.value("omega0", 1.0);
    p.omega_l = j.at("omega_l").get<double>();
    p.kappa = j.at("kappa").get<double>();
    p.lambda = j.at("lambda").get<double>();
    p.phi = j.at("phi").get<double>();
    p.delta = j.at("delta").get<double>();
    p.gamma_down = j.at("gamma_down").get<double>();
    p.normalize();
    return p;
}

inline json state_to_json(const SystemState& s) {
    json a = json::array();
    for (double x : s.to_array()) a.push_back(x);
    return a;
}

inline SystemState state_from_json(const json& j) {
    std::array<double, 8> a;
    for (int k = 0; k < 8; ++k) a[k] = j.at(k).get<double>();
    return SystemState::from_array(a);
}

inline ModelVariant parse_variant(const std::string& s) {
    if (s == "full") return ModelVariant::Full;
    if (s == "adiabatic") return ModelVariant::Adiabatic;
    if (s == "reduced_plus" || s == "reduced-plus") return ModelVariant::ReducedPlus;
    throw std::invalid_argument("unknown variant: " + s);
}

inline json fixed_point_set_to_json(const FixedPointSet& set) {
    json pts = json::array();
    for (const auto& fp : set.points) {
        json e{{"state", state_to_json(fp.state)},
               {"residual_norm", fp.residual_norm},
               {"label", label_name(fp.label)}};
        if (fp.stable) e["stable"] = *fp.stable;
        if (fp.max_real) e["max_real"] = *fp.max_real;
        pts.push_back(e);
    }
    return json{{"params", params_to_json(set.params)},
                {"variant", variant_name(set.variant)},
                {"points", pts}};
}

inline FixedPointSet fixed_point_set_from_json(const json& j) {
    FixedPointSet set;
    set.params = params_from_json(j.at("params"));
    set.variant = parse_variant(j.at("variant").get<std::string>());
    for (const auto& e : j.at("points")) {
        FixedPoint fp;
        fp.state = state_from_json(e.at("state"));
        fp.residual_norm = e.at("residual_norm").get<double>();
        const std::string lab = e.at("label").get<std::string>();
        if (lab == "NP") fp.label = FixedPointLabel::NP;
        else if (lab == "SP_ALIGNED") fp.label = FixedPointLabel::SPAligned;
        else if (lab == "SP_ANTIALIGNED") fp.label = FixedPointLabel::SPAntialigned;
        else fp.label = FixedPointLabel::Other;
        if (e.contains("stable")) fp.stable = e.at("stable").get<bool>();
        if (e.contains("max_real")) fp.max_real = e.at("max_real").get<double>();
        set.points.push_back(fp);
    }
    return set;
}

inline json eigen_report_to_json(const EigenReport& r) {
    json vals = json::array();
    for (const auto& e : r.eigenvalues) vals.push_back(json::array({e.real(), e.imag()}));
    json j{{"eigenvalues", vals},
           {"max_real", r.max_real},
           {"min_pair_gap", r.min_pair_gap},
           {"verdict", verdict_name(r.verdict())}};
    if (std::isfinite(r.min_vector_angle)) j["min_vector_angle"] = r.min_vector_angle;
    return j;
}

inline json locking_to_json(const LockingReport& l) {
    return json{{"locked", l.locked}, {"angle", l.angle}, {"residual", l.residual},
                {"rms", l.rms}};
}

inline LockingReport locking_from_json(const json& j) {
    LockingReport l;
    l.locked = j.at("locked").get<bool>();
    l.angle = j.at("angle").get<double>();
    l.residual = j.at("residual").get<double>();
    l.rms = j.at("rms").get<double>();
    return l;
}

inline json orbit_summary_to_json(const OrbitSummary& s) {
    return json{{"lock", locking_to_json(s.lock)},
                {"mean_sz_plus", s.mean_sz_plus},
                {"mean_sz_minus", s.mean_sz_minus},
                {"amp_beta", s.amp_beta}};
}

inline OrbitSummary orbit_summary_from_json(const json& j) {
    OrbitSummary s;
    s.lock = locking_from_json(j.at("lock"));
    s.mean_sz_plus = j.at("mean_sz_plus").get<double>();
    s.mean_sz_minus = j.at("mean_sz_minus").get<double>();
    s.amp_beta = j.at("amp_beta").get<double>();
    return s;
}

inline json quench_report_to_json(const QuenchReport& r) {
    return json{{"params", params_to_json(r.params)},
                {"variant", variant_name(r.variant)},
                {"distance", r.distance},
                {"eps_orbit", r.eps_orbit},
                {"verdict", r.pt_invariant ? "PT_INVARIANT" : "PT_BROKEN"},
                {"pre", orbit_summary_to_json(r.pre)},
                {"post", orbit_summary_to_json(r.post)}};
}

inline QuenchReport quench_report_from_json(const json& j) {
    QuenchReport r;
    r.params = params_from_json(j.at("params"));
    r.variant = parse_variant(j.at("variant").get<std::string>());
    r.distance = j.at("distance").get<double>();
    r.eps_orbit = j.at("eps_orbit").get<double>();
    r.pt_invariant = j.at("verdict").get<std::string>() == "PT_INVARIANT";
    r.pre = orbit_summary_from_json(j.at("pre"));
    r.post = orbit_summary_from_json(j.at("post"));
    return r;
}

inline json signature_to_json(const OrbitSignature& s) {
    json v = json::array();
    for (double x : s.v) v.push_back(x);
    return json{{"locked", s.locked}, {"angle", s.angle}, {"v", v}};
}

inline OrbitSignature signature_from_json(const json& j) {
    OrbitSignature s;
    s.locked = j.at("locked").get<bool>();
    s.angle = j.at("angle").get<double>();
    for (int k = 0; k < 8; ++k) s.v[k] = j.at("v").at(k).get<double>();
    return s;
}

inline json census_report_to_json(const CensusReport& r) {
    json sigs = json::array();
    for (const auto& s : r.signatures) sigs.push_back(signature_to_json(s));
    json clusters = json::array();
    for (const auto& c : r.clusters)
        clusters.push_back(json{{"signature", signature_to_json(c.signature)},
                                {"members", c.members},
                                {"diameter", c.diameter},
                                {"unresolved", c.unresolved}});
    return json{{"params", params_to_json(r.params)},
                {"variant", variant_name(r.variant)},
                {"n_ic", r.n_ic},
                {"seed", r.seed},
                {"eps_cluster", r.eps_cluster},
                {"n_failed", r.n_failed},
                {"signatures", sigs},
                {"clusters", clusters},
                {"pt_paired", r.pt_paired}};
}

inline CensusReport census_report_from_json(const json& j) {
    CensusReport r;
    r.params = params_from_json(j.at("params"));
    r.variant = parse_variant(j.at("variant").get<std::string>());
    r.n_ic = j.at("n_ic").get<int>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.eps_cluster = j.at("eps_cluster").get<double>();
    r.n_failed = j.at("n_failed").get<int>();
    for (const auto& s : j.at("signatures")) r.signatures.push_back(signature_from_json(s));
    for (const auto& c : j.at("clusters")) {
        CensusCluster cc;
        cc.signature = signature_from_json(c.at("signature"));
        cc.members = c.at("members").get<std::vector<int>>();
        cc.diameter = c.at("diameter").get<double>();
        cc.unresolved = c.at("unresolved").get<bool>();
        r.clusters.push_back(cc);
    }
    r.pt_paired = j.at("pt_paired").get<bool>();
    return r;
}

inline json consistency_to_json(const ConsistencyReport& r) {
    json pts = json::array();
    for (const auto& sp : r.scale_points)
        pts.push_back(json{{"scale", sp.scale},
                           {"full_max_real", sp.full_max_real},
                           {"adiabatic_max_real", sp.adiabatic_max_real},
                           {"deviation", sp.deviation}});
    return json{{"max_rhs_deviation", r.max_rhs_deviation},
                {"scale_points", pts},
                {"monotone", r.monotone}};
}

inline ConsistencyReport consistency_from_json(const json& j) {
    ConsistencyReport r;
    r.max_rhs_deviation = j.at("max_rhs_deviation").get<double>();
    for (const auto& sp : j.at("scale_points")) {
        ConsistencyReport::ScalePoint s;
        s.scale = sp.at("scale").get<double>();
        s.full_max_real = sp.at("full_max_real").get<double>();
        s.adiabatic_max_real = sp.at("adiabatic_max_real").get<double>();
        s.deviation = sp.at("deviation").get<double>();
        r.scale_points.push_back(s);
    }
    r.monotone = j.at("monotone").get<bool>();
    return r;
}

inline json regime_to_json(const RegimeReport& r) {
    json peaks = json::array();
    for (const auto& p : r.peaks)
        peaks.push_back(json{{"frequency", p.frequency}, {"amplitude", p.amplitude}});
    return json{{"label", regime_name(r.label)},
                {"osc_amplitude", r.osc_amplitude},
                {"dc_amplitude", r.dc_amplitude},
                {"captured", r.captured},
                {"observable", r.observable},
                {"peaks", peaks}};
}

inline json ep_points_to_json(const std::vector<ExceptionalPoint>& eps, double lo, double hi) {
    json pts = json::array();
    for (const auto& ep : eps)
        pts.push_back(json{{"phi", ep.phi},
                           {"gap", ep.gap},
                           {"vector_angle", ep.vector_angle},
                           {"confirmed", ep.confirmed}});
    return json{{"phi_min", lo}, {"phi_max", hi}, {"points", pts}};
}

// ---- run configuration ----

struct RunConfig {
    ModelParams params;
    ModelVariant variant = ModelVariant::Full;
    IntegratorConfig integrator;
    std::uint64_t seed = 12345;
    unsigned threads = 1;
    InitKind init = InitKind::PerturbedNP;
    Observable observable = Observable::Beta;
    std::string out;
    std::string format = "csv";

    struct SweepBlock {
        PhaseAxis axis1{"lambda", 0.0, 6.0, 64};
        PhaseAxis axis2{"phi", 0.0, M_PI_2, 64};
        int n_random_ic = 2;
        double t_final = 3000.0, t_transient = 1500.0, sample_dt = 0.02, tol = 1e-9;
    } sweep;

    struct CensusBlock {
        int n_ic = 64;
        double eps_cluster = 1e-2;
        double t_final = 20000.0, t_transient = 10000.0, sample_dt = 0.02, tol = 1e-9;
    } census;

    struct QuenchBlock {
        double eps_orbit = 1e-2;
        double t_final = 6000.0, t_transient = 3000.0, sample_dt = 0.02, tol = 1e-9;
    } quench;

    struct ScanBlock {
        PhaseAxis axis{"lambda", 0.0, 6.0, 121};
        double t_final = 3600.0, t_transient = 1800.0, sample_dt = 0.02, tol = 1e-9;
    } scan;

    struct EpBlock {
        double phi_min = 0.0;
        double phi_max = M_PI_2;
        int grid = 4001;
    } ep_scan;

    struct FpBlock {
        int n_random = 32;
    } fixed_points;

    int consistency_samples = 200;
    json resolved;  // fully resolved document, for --print-config and manifests

    SweepOptions sweep_options() const {
        SweepOptions o;
        o.integ.t_final = sweep.t_final;
        o.integ.t_transient = sweep.t_transient;
        o.integ.sample_dt = sweep.sample_dt;
        o.integ.abs_tol = o.integ.rel_tol = sweep.tol;
        o.fp.n_random = fixed_points.n_random;
        o.n_random_ic = sweep.n_random_ic;
        o.threads = threads;
        return o;
    }

    CensusOptions census_options() const {
        CensusOptions o;
        o.n_ic = census.n_ic;
        o.eps_cluster = census.eps_cluster;
        o.integ.t_final = census.t_final;
        o.integ.t_transient = census.t_transient;
        o.integ.sample_dt = census.sample_dt;
        o.integ.abs_tol = o.integ.rel_tol = census.tol;
        o.threads = threads;
        return o;
    }

    QuenchOptions quench_options() const {
        QuenchOptions o;
        o.eps_orbit = quench.eps_orbit;
        for (IntegratorConfig* c : {&o.relax, &o.post}) {
            c->t_final = quench.t_final;
            c->t_transient = quench.t_transient;
            c->sample_dt = quench.sample_dt;
            c->abs_tol = c->rel_tol = quench.tol;
        }
        return o;
    }

    ScanOptions scan_options() const {
        ScanOptions o;
        o.integ.t_final = scan.t_final;
        o.integ.t_transient = scan.t_transient;
        o.integ.sample_dt = scan.sample_dt;
        o.integ.abs_tol = o.integ.rel_tol = scan.tol;
        o.threads = threads;
        return o;
    }
};

namespace detail {

inline void check_keys(const json& j, const char* where,
                       std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw std::invalid_argument(std::string(where) + ": expected an object");
    for (const auto& kv : j.items()) {
        bool found = false;
        for (const char* k : allowed)
            if (kv.key() == k) {
                found = true;
                break;
            }
        if (!found)
            throw std::invalid_argument(std::string("unknown key \"") + kv.key() + "\" in " +
                                        where);
    }
}

inline double jnum(const json& j, const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number())
        throw std::invalid_argument(std::string("config field ") + key + " must be a number");
    return j.at(key).get<double>();
}

inline PhaseAxis jaxis(const json& j, const char* where, const PhaseAxis& fallback) {
    check_keys(j, where, {"name", "min", "max", "count"});
    PhaseAxis a = fallback;
    if (j.contains("name")) a.name = j.at("name").get<std::string>();
    a.min = jnum(j, "min", a.min);
    a.max = jnum(j, "max", a.max);
    a.count = static_cast<int>(jnum(j, "count", a.count));
    if (a.count < 1) throw std::invalid_argument(std::string(where) + ".count must be >= 1");
    ModelParams probe;
    apply_axis(probe, a.name, a.min);  // validates the axis name
    return a;
}

} // namespace detail

inline json default_config_json() {
    RunConfig d;
    return json{
        {"model",
         {{"omega_l", d.params.omega_l},
          {"kappa", d.params.kappa},
          {"lambda", d.params.lambda},
          {"phi", d.params.phi},
          {"delta", d.params.delta},
          {"gamma_down", d.params.gamma_down}}},
        {"integrator",
         {{"method", "rk45"},
          {"dt", d.integrator.dt},
          {"abs_tol", d.integrator.abs_tol},
          {"rel_tol", d.integrator.rel_tol},
          {"t_final", d.integrator.t_final},
          {"t_transient", d.integrator.t_transient},
          {"sample_dt", d.integrator.sample_dt}}},
        {"run",
         {{"variant", "full"},
          {"seed", d.seed},
          {"threads", d.threads},
          {"init", "perturbed-np"},
          {"observable", "beta"},
          {"out", ""},
          {"format", "csv"}}},
        {"sweep",
         {{"axis1", {{"name", d.sweep.axis1.name}, {"min", d.sweep.axis1.min},
                     {"max", d.sweep.axis1.max}, {"count", d.sweep.axis1.count}}},
          {"axis2", {{"name", d.sweep.axis2.name}, {"min", d.sweep.axis2.min},
                     {"max", d.sweep.axis2.max}, {"count", d.sweep.axis2.count}}},
          {"n_random_ic", d.sweep.n_random_ic},
          {"t_final", d.sweep.t_final},
          {"t_transient", d.sweep.t_transient},
          {"sample_dt", d.sweep.sample_dt},
          {"tol", d.sweep.tol}}},
        {"census",
         {{"n_ic", d.census.n_ic},
          {"eps_cluster", d.census.eps_cluster},
          {"t_final", d.census.t_final},
          {"t_transient", d.census.t_transient},
          {"sample_dt", d.census.sample_dt},
          {"tol", d.census.tol}}},
        {"quench",
         {{"eps_orbit", d.quench.eps_orbit},
          {"t_final", d.quench.t_final},
          {"t_transient", d.quench.t_transient},
          {"sample_dt", d.quench.sample_dt},
          {"tol", d.quench.tol}}},
        {"scan",
         {{"axis", {{"name", d.scan.axis.name}, {"min", d.scan.axis.min},
                    {"max", d.scan.axis.max}, {"count", d.scan.axis.count}}},
          {"t_final", d.scan.t_final},
          {"t_transient", d.scan.t_transient},
          {"sample_dt", d.scan.sample_dt},
          {"tol", d.scan.tol}}},
        {"ep_scan",
         {{"phi_min", d.ep_scan.phi_min}, {"phi_max", d.ep_scan.phi_max},
          {"grid", d.ep_scan.grid}}},
        {"fixed_points", {{"n_random", d.fixed_points.n_random}}},
        {"consistency", {{"n_samples", d.consistency_samples}}}};
}

// Deep-merge overrides into the defaults so a partial document is valid.
inline json merge_config(json base, const json& over) {
    if (!over.is_object()) return over;
    for (const auto& kv : over.items()) {
        if (base.contains(kv.key()) && base.at(kv.key()).is_object() && kv.value().is_object())
            base[kv.key()] = merge_config(base.at(kv.key()), kv.value());
        else
            base[kv.key()] = kv.value();
    }
    return base;
}

inline RunConfig config_from_json(const json& doc) {
    detail::check_keys(doc, "config",
                       {"model", "integrator", "run", "sweep", "census", "quench", "scan",
                        "ep_scan", "fixed_points", "consistency"});
    RunConfig cfg;
    const json full = merge_config(default_config_json(), doc);

    {
        const json& m = full.at("model");
        detail::check_keys(m, "model",
                           {"omega_l", "kappa", "lambda", "phi", "delta", "gamma_down"});
        cfg.params.omega_l = detail::jnum(m, "omega_l", 20.0);
        cfg.params.kappa = detail::jnum(m, "kappa", 12.5);
        cfg.params.lambda = detail::jnum(m, "lambda", 1.0);
        cfg.params.phi = detail::jnum(m, "phi", 0.0);
        cfg.params.delta = detail::jnum(m, "delta", 0.0);
        cfg.params.gamma_down = detail::jnum(m, "gamma_down", 0.0);
        cfg.params.normalize();
    }
    {
        const json& it = full.at("integrator");
        detail::check_keys(it, "integrator",
                           {"method", "dt", "abs_tol", "rel_tol", "t_final", "t_transient",
                            "sample_dt"});
        const std::string method = it.at("method").get<std::string>();
        if (method == "rk45") cfg.integrator.method = IntegratorMethod::RK45;
        else if (method == "rk4") cfg.integrator.method = IntegratorMethod::RK4;
        else throw std::invalid_argument("integrator.method must be rk4 or rk45");
        cfg.integrator.dt = detail::jnum(it, "dt", cfg.integrator.dt);
        cfg.integrator.abs_tol = detail::jnum(it, "abs_tol", cfg.integrator.abs_tol);
        cfg.integrator.rel_tol = detail::jnum(it, "rel_tol", cfg.integrator.rel_tol);
        cfg.integrator.t_final = detail::jnum(it, "t_final", cfg.integrator.t_final);
        cfg.integrator.t_transient = detail::jnum(it, "t_transient", cfg.integrator.t_transient);
        cfg.integrator.sample_dt = detail::jnum(it, "sample_dt", cfg.integrator.sample_dt);
        cfg.integrator.validate();
    }
    {
        const json& r = full.at("run");
        detail::check_keys(r, "run",
                           {"variant", "seed", "threads", "init", "observable", "out", "format"});
        cfg.variant = parse_variant(r.at("variant").get<std::string>());
        cfg.seed = r.at("seed").get<std::uint64_t>();
        cfg.threads = r.at("threads").get<unsigned>();
        if (cfg.threads < 1) throw std::invalid_argument("run.threads must be >= 1");
        cfg.init = parse_init_kind(r.at("init").get<std::string>());
        cfg.observable = parse_observable(r.at("observable").get<std::string>());
        cfg.out = r.at("out").get<std::string>();
        cfg.format = r.at("format").get<std::string>();
        if (cfg.format != "csv" && cfg.format != "json")
            throw std::invalid_argument("run.format must be csv or json");
    }
    {
        const json& s = full.at("sweep");
        detail::check_keys(s, "sweep",
                           {"axis1", "axis2", "n_random_ic", "t_final", "t_transient",
                            "sample_dt", "tol"});
        cfg.sweep.axis1 = detail::jaxis(s.at("axis1"), "sweep.axis1", cfg.sweep.axis1);
        cfg.sweep.axis2 = detail::jaxis(s.at("axis2"), "sweep.axis2", cfg.sweep.axis2);
        cfg.sweep.n_random_ic = static_cast<int>(detail::jnum(s, "n_random_ic", 2));
        cfg.sweep.t_final = detail::jnum(s, "t_final", cfg.sweep.t_final);
        cfg.sweep.t_transient = detail::jnum(s, "t_transient", cfg.sweep.t_transient);
        cfg.sweep.sample_dt = detail::jnum(s, "sample_dt", cfg.sweep.sample_dt);
        cfg.sweep.tol = detail::jnum(s, "tol", cfg.sweep.tol);
    }
    {
        const json& c = full.at("census");
        detail::check_keys(c, "census",
                           {"n_ic", "eps_cluster", "t_final", "t_transient", "sample_dt", "tol"});
        cfg.census.n_ic = static_cast<int>(detail::jnum(c, "n_ic", 64));
        if (cfg.census.n_ic < 1) throw std::invalid_argument("census.n_ic must be >= 1");
        cfg.census.eps_cluster = detail::jnum(c, "eps_cluster", 1e-2);
        cfg.census.t_final = detail::jnum(c, "t_final", cfg.census.t_final);
        cfg.census.t_transient = detail::jnum(c, "t_transient", cfg.census.t_transient);
        cfg.census.sample_dt = detail::jnum(c, "sample_dt", cfg.census.sample_dt);
        cfg.census.tol = detail::jnum(c, "tol", cfg.census.tol);
    }
    {
        const json& q = full.at("quench");
        detail::check_keys(q, "quench",
                           {"eps_orbit", "t_final", "t_transient", "sample_dt", "tol"});
        cfg.quench.eps_orbit = detail::jnum(q, "eps_orbit", 1e-2);
        cfg.quench.t_final = detail::jnum(q, "t_final", cfg.quench.t_final);
        cfg.quench.t_transient = detail::jnum(q, "t_transient", cfg.quench.t_transient);
        cfg.quench.sample_dt = detail::jnum(q, "sample_dt", cfg.quench.sample_dt);
        cfg.quench.tol = detail::jnum(q, "tol", cfg.quench.tol);
    }
    {
        const json& s = full.at("scan");
        detail::check_keys(s, "scan", {"axis", "t_final", "t_transient", "sample_dt", "tol"});
        cfg.scan.axis = detail::jaxis(s.at("axis"), "scan.axis", cfg.scan.axis);
        cfg.scan.t_final = detail::jnum(s, "t_final", cfg.scan.t_final);
        cfg.scan.t_transient = detail::jnum(s, "t_transient", cfg.scan.t_transient);
        cfg.scan.sample_dt = detail::jnum(s, "sample_dt", cfg.scan.sample_dt);
        cfg.scan.tol = detail::jnum(s, "tol", cfg.scan.tol);
    }
    {
        const json& e = full.at("ep_scan");
        detail::check_keys(e, "ep_scan", {"phi_min", "phi_max", "grid"});
        cfg.ep_scan.phi_min = detail::jnum(e, "phi_min", 0.0);
        cfg.ep_scan.phi_max = detail::jnum(e, "phi_max", M_PI_2);
        cfg.ep_scan.grid = static_cast<int>(detail::jnum(e, "grid", 4001));
    }
    {
        const json& f = full.at("fixed_points");
        detail::check_keys(f, "fixed_points", {"n_random"});
        cfg.fixed_points.n_random = static_cast<int>(detail::jnum(f, "n_random", 32));
    }
    {
        const json& c = full.at("consistency");
        detail::check_keys(c, "consistency", {"n_samples"});
        cfg.consistency_samples = static_cast<int>(detail::jnum(c, "n_samples", 200));
    }

    cfg.resolved = full;
    return cfg;
}

inline RunConfig parse_config(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("config parse error: ") + e.what());
    }
    return config_from_json(doc);
}

// `--set block.key=value`; the value is parsed as JSON when possible,
// otherwise taken as a string.
inline void apply_set_override(json& doc, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        throw std::invalid_argument("--set expects block.key=value, got: " + assignment);
    const std::string path = assignment.substr(0, eq);
    const std::string raw = assignment.substr(eq + 1);
    json value;
    try {
        value = json::parse(raw);
    } catch (const json::parse_error&) {
        value = raw;
    }
    json* node = &doc;
    std::size_t start = 0;
    for (;;) {
        const std::size_t dot = path.find('.', start);
        const std::string key = path.substr(start, dot - start);
        if (key.empty()) throw std::invalid_argument("--set: empty key in path: " + path);
        if (dot == std::string::npos) {
            (*node)[key] = value;
            break;
        }
        node = &(*node)[key];
        start = dot + 1;
    }
}

} // namespace nrdicke
