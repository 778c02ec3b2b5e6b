#include <catch_amalgamated.hpp>

#include <nrdicke/io.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <string>

using namespace nrdicke;
using Catch::Matchers::ContainsSubstring;

namespace {

// path helper: files land in the test working directory and are removed after use
struct TempFile {
    std::string path;
    explicit TempFile(std::string p) : path(std::move(p)) {}
    ~TempFile() { std::remove(path.c_str()); }
};

SystemState irrational_state(double shift) {
    SystemState s;
    s.plus = {std::sqrt(2.0) / 3.0 + shift, -1.0 / 3.0, std::cbrt(5.0) - 2.0};
    s.minus = {-M_PI / 7.0, std::exp(-shift - 1.0), -0.99};
    s.field = {std::log(2.0) + shift, -std::sqrt(3.0) / 5.0};
    return s;
}

Trajectory two_sample_trajectory() {
    Trajectory traj;
    traj.config.sample_dt = 0.01;
    traj.times = {10.0, 10.01};
    traj.states = {irrational_state(0.0), irrational_state(1e-3)};
    traj.final_state = traj.states.back();
    return traj;
}

} // namespace

TEST_CASE("seventeen digit formatting survives the text round trip") {
    for (double x : {M_PI, 1.0 / 3.0, 5e-324, 1.7976931348623157e308, -0.0, 123.456e-78}) {
        const std::string s = fmt17(x);
        CHECK(std::strtod(s.c_str(), nullptr) == x);
    }
}

TEST_CASE("trajectory CSV round trips bitwise") {
    const Trajectory traj = two_sample_trajectory();
    std::stringstream ss;
    write_trajectory_csv(ss, traj);

    const std::string text = ss.str();
    CHECK(text.rfind("t,sx_p,sy_p,sz_p,sx_m,sy_m,sz_m,re_beta,im_beta\n", 0) == 0);

    std::stringstream in(text);
    const TrajectoryData td = read_trajectory_csv(in);
    REQUIRE(td.times.size() == 2);
    for (std::size_t i = 0; i < td.times.size(); ++i) {
        CHECK(td.times[i] == traj.times[i]);
        const auto a = td.states[i].to_array();
        const auto b = traj.states[i].to_array();
        for (int k = 0; k < 8; ++k) CHECK(a[k] == b[k]);
    }

    std::stringstream bad("x,y\n1,2\n");
    CHECK_THROWS_WITH(read_trajectory_csv(bad), ContainsSubstring("header"));
    std::stringstream short_row("t,sx_p,sy_p,sz_p,sx_m,sy_m,sz_m,re_beta,im_beta\n1,2,3\n");
    CHECK_THROWS_WITH(read_trajectory_csv(short_row), ContainsSubstring("row"));
}

TEST_CASE("spectrum CSV round trips bitwise") {
    FrequencySpectrum sp;
    sp.frequencies = {-2.0 * M_PI, 0.0, 1.0 / 7.0};
    sp.amplitudes = {1e-17, 0.25, std::sqrt(7.0)};
    TempFile tmp("tmp_test_io_spectrum.csv");
    write_spectrum_csv(tmp.path, sp);

    const SpectrumData sd = read_spectrum_csv(tmp.path);
    REQUIRE(sd.frequencies.size() == 3);
    for (std::size_t k = 0; k < 3; ++k) {
        CHECK(sd.frequencies[k] == sp.frequencies[k]);
        CHECK(sd.amplitudes[k] == sp.amplitudes[k]);
    }
}

TEST_CASE("phase diagram CSV keeps its six columns bitwise") {
    PhaseDiagram pd;
    pd.axis1 = {"lambda", 0.0, 6.0, 2};
    pd.axis2 = {"phi", 0.0, 1.5, 2};
    PhaseCell c1{0.0, 0.0, PhaseLabel::NP, -1.0 / 3.0, 0.0, 1, ""};
    PhaseCell c2{6.0, 1.5, PhaseLabel::DP, 0.0525, std::sqrt(2.0) * 1e-3, 2, ""};
    PhaseCell c3{3.0, 0.7, PhaseLabel::Failed, 0.0, 0.0, 0, "solver stalled"};
    pd.cells = {c1, c2, c3, c1};

    TempFile tmp("tmp_test_io_diagram.csv");
    write_phase_diagram_csv(tmp.path, pd);

    const PhaseDiagramData pdd = read_phase_diagram_csv(tmp.path);
    CHECK(pdd.axis1 == "lambda");
    CHECK(pdd.axis2 == "phi");
    REQUIRE(pdd.cells.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(pdd.cells[i].a1 == pd.cells[i].a1);
        CHECK(pdd.cells[i].a2 == pd.cells[i].a2);
        CHECK(pdd.cells[i].label == pd.cells[i].label);
        CHECK(pdd.cells[i].max_growth == pd.cells[i].max_growth);
        CHECK(pdd.cells[i].mean_intensity == pd.cells[i].mean_intensity);
        CHECK(pdd.cells[i].n_attractors == pd.cells[i].n_attractors);
    }
    // the CSV is a fixed six-column table; the error text lives in JSON output only
    CHECK(pdd.cells[2].error.empty());
}

TEST_CASE("scan CSV reports peaks and their separation") {
    ScanPoint locked;
    locked.value = 2.5;
    locked.label = PhaseLabel::DP;
    locked.regime.label = RegimeLabel::LimitCycle;
    locked.regime.dc_amplitude = 1e-5;
    locked.regime.peaks = {{0.85, 0.025}, {-0.85, 0.021}};
    locked.mean_intensity = 3.5e-4;
    locked.lock.locked = true;
    locked.lock.angle = 0.77;

    ScanPoint flat;
    flat.value = 1.0;
    flat.label = PhaseLabel::NP;
    flat.regime.label = RegimeLabel::Stationary;

    std::stringstream ss;
    write_scan_csv(ss, "lambda", {flat, locked});
    std::string line;
    std::getline(ss, line);
    CHECK(line ==
          "lambda,regime,label,dc_amplitude,mean_intensity,locked,lock_angle,n_peaks,"
          "f1,a1,f2,a2,peak_separation");
    std::getline(ss, line);
    CHECK(detail::split_csv_line(line).size() == 13);
    CHECK_THAT(line, ContainsSubstring("STATIONARY,NP"));
    std::getline(ss, line);
    const auto f = detail::split_csv_line(line);
    REQUIRE(f.size() == 13);
    CHECK(f[1] == "LIMIT_CYCLE");
    CHECK(f[2] == "DP");
    CHECK(detail::parse_double(f[5]) == 1.0);
    CHECK(detail::parse_double(f[8]) == 0.85);
    CHECK(detail::parse_double(f[12]) == 1.7);
}

TEST_CASE("fixed point sets survive the JSON round trip") {
    FixedPointSet set;
    set.params.lambda = 4.0;
    set.params.phi = 0.2;
    set.params.normalize();
    set.variant = ModelVariant::Adiabatic;

    FixedPoint a;
    a.state = irrational_state(0.0);
    a.residual_norm = 3e-13;
    a.label = FixedPointLabel::SPAligned;
    a.stable = true;
    a.max_real = -0.017;
    FixedPoint b;
    b.state = np_state();
    b.residual_norm = 0.0;
    b.label = FixedPointLabel::NP;  // assessment skipped: optionals stay empty
    set.points = {a, b};

    const json j = json::parse(fixed_point_set_to_json(set).dump());
    const FixedPointSet back = fixed_point_set_from_json(j);
    REQUIRE(back.points.size() == 2);
    CHECK(back.params.lambda == set.params.lambda);
    CHECK(back.variant == ModelVariant::Adiabatic);
    CHECK(back.points[0].label == FixedPointLabel::SPAligned);
    CHECK(back.points[0].residual_norm == a.residual_norm);
    REQUIRE(back.points[0].stable.has_value());
    CHECK(*back.points[0].stable);
    REQUIRE(back.points[0].max_real.has_value());
    CHECK(*back.points[0].max_real == -0.017);
    CHECK_FALSE(back.points[1].stable.has_value());
    CHECK_FALSE(back.points[1].max_real.has_value());
    const auto sa = back.points[0].state.to_array();
    const auto sb = a.state.to_array();
    for (int k = 0; k < 8; ++k) CHECK(sa[k] == sb[k]);
}

TEST_CASE("quench census and consistency reports survive the JSON round trip") {
    QuenchReport q;
    q.params.lambda = 2.5;
    q.params.phi = M_PI / 4.0;
    q.params.normalize();
    q.variant = ModelVariant::Full;
    q.distance = 1.058;
    q.eps_orbit = 1e-2;
    q.pt_invariant = false;
    q.pre.lock = {true, 2.3564, 0.01, 0.2};
    q.pre.mean_sz_plus = -0.3;
    q.post.amp_beta = 0.15;
    const QuenchReport q2 = quench_report_from_json(json::parse(quench_report_to_json(q).dump()));
    CHECK(q2.distance == q.distance);
    CHECK(q2.pt_invariant == q.pt_invariant);
    CHECK(q2.pre.lock.locked);
    CHECK(q2.pre.lock.angle == q.pre.lock.angle);
    CHECK(q2.pre.mean_sz_plus == q.pre.mean_sz_plus);
    CHECK(q2.post.amp_beta == q.post.amp_beta);
    CHECK(q2.params.lambda == q.params.lambda);

    CensusReport c;
    c.params = q.params;
    c.n_ic = 8;
    c.seed = 77;
    c.eps_cluster = 1e-2;
    OrbitSignature sig;
    sig.locked = true;
    sig.angle = M_PI / 4.0;
    sig.v = {0.1, 0.2, -0.3, -0.4, 0.5, 0.6, 0.07, 0.008};
    c.signatures = {sig, sig.pt_image()};
    CensusCluster cl;
    cl.signature = sig;
    cl.members = {0, 1};
    cl.diameter = 2e-5;
    c.clusters = {cl};
    c.pt_paired = true;
    const CensusReport c2 = census_report_from_json(json::parse(census_report_to_json(c).dump()));
    CHECK(c2.n_ic == 8);
    CHECK(c2.seed == 77);
    CHECK(c2.pt_paired);
    REQUIRE(c2.signatures.size() == 2);
    for (int k = 0; k < 8; ++k) CHECK(c2.signatures[1].v[k] == c.signatures[1].v[k]);
    REQUIRE(c2.clusters.size() == 1);
    CHECK(c2.clusters[0].members == cl.members);
    CHECK(c2.clusters[0].diameter == cl.diameter);
    CHECK_FALSE(c2.clusters[0].unresolved);

    ConsistencyReport r;
    r.max_rhs_deviation = 4.4e-16;
    r.scale_points = {{1.0, 0.05251, 0.0525, 1e-5}, {2.0, 0.05250, 0.0525, 1e-6}};
    r.monotone = true;
    const ConsistencyReport r2 = consistency_from_json(json::parse(consistency_to_json(r).dump()));
    CHECK(r2.max_rhs_deviation == r.max_rhs_deviation);
    REQUIRE(r2.scale_points.size() == 2);
    CHECK(r2.scale_points[1].full_max_real == r.scale_points[1].full_max_real);
    CHECK(r2.scale_points[1].deviation == r.scale_points[1].deviation);
    CHECK(r2.monotone);
}

TEST_CASE("minimal config documents resolve against the defaults") {
    const RunConfig cfg = parse_config("{}");
    CHECK(cfg.params.omega_l == 20.0);
    CHECK(cfg.params.kappa == 12.5);
    CHECK(cfg.seed == 12345);
    CHECK(cfg.variant == ModelVariant::Full);
    CHECK(cfg.sweep.axis1.name == "lambda");
    CHECK(cfg.sweep.axis1.count == 64);
    CHECK(cfg.scan.axis.count == 121);
    CHECK(cfg.census.n_ic == 64);
    CHECK(cfg.format == "csv");

    const RunConfig over = parse_config(R"({"model": {"lambda": 3.0, "phi": 0.5},
                                            "run": {"variant": "adiabatic", "seed": 9}})");
    CHECK(over.params.lambda == 3.0);
    CHECK(over.params.phi == 0.5);
    CHECK(over.params.kappa == 12.5);
    CHECK(over.variant == ModelVariant::Adiabatic);
    CHECK(over.seed == 9);
}

TEST_CASE("config validation names the offending field") {
    CHECK_THROWS_WITH(parse_config(R"({"model": {"kappa": -1.0}})"), ContainsSubstring("kappa"));
    CHECK_THROWS_WITH(parse_config(R"({"model": {"lamda": 2.0}})"), ContainsSubstring("lamda"));
    CHECK_THROWS_WITH(parse_config(R"({"swep": {}})"), ContainsSubstring("swep"));
    CHECK_THROWS_WITH(parse_config(R"({"sweep": {"axis1": {"nme": "phi"}}})"),
                      ContainsSubstring("nme"));
    CHECK_THROWS_WITH(parse_config(R"({"integrator": {"method": "euler"}})"),
                      ContainsSubstring("rk4"));
    CHECK_THROWS_WITH(parse_config(R"({"run": {"variant": "fulll"}})"),
                      ContainsSubstring("fulll"));
    CHECK_THROWS_WITH(parse_config(R"({"run": {"format": "yaml"}})"),
                      ContainsSubstring("format"));
    CHECK_THROWS_WITH(parse_config("{nonsense"), ContainsSubstring("parse"));
    CHECK_THROWS_WITH(parse_config(R"({"census": {"n_ic": 0}})"), ContainsSubstring("n_ic"));
}

TEST_CASE("set overrides reach nested keys and reject malformed input") {
    json doc = json::object();
    apply_set_override(doc, "model.lambda=4.5");
    apply_set_override(doc, "sweep.axis1.name=phi");
    apply_set_override(doc, "run.variant=adiabatic");
    CHECK(doc["model"]["lambda"] == 4.5);
    CHECK(doc["sweep"]["axis1"]["name"] == "phi");

    const RunConfig cfg = config_from_json(doc);
    CHECK(cfg.params.lambda == 4.5);
    CHECK(cfg.sweep.axis1.name == "phi");
    CHECK(cfg.variant == ModelVariant::Adiabatic);

    CHECK_THROWS_WITH(apply_set_override(doc, "no_equals"), ContainsSubstring("--set"));
    CHECK_THROWS_WITH(apply_set_override(doc, "=5"), ContainsSubstring("--set"));
    CHECK_THROWS_WITH(apply_set_override(doc, "model..lambda=2"), ContainsSubstring("empty"));
}

TEST_CASE("resolved config documents re-parse to the same configuration") {
    json doc = json::object();
    apply_set_override(doc, "model.phi=0.6283185307179586");
    apply_set_override(doc, "census.n_ic=16");
    const RunConfig cfg = config_from_json(doc);
    CHECK(cfg.resolved.is_object());

    const RunConfig again = config_from_json(cfg.resolved);
    CHECK(again.params.phi == cfg.params.phi);
    CHECK(again.census.n_ic == 16);
    CHECK(again.resolved == cfg.resolved);
}

TEST_CASE("parser enum helpers reject unknown spellings") {
    CHECK(parse_variant("full") == ModelVariant::Full);
    CHECK(parse_variant("adiabatic") == ModelVariant::Adiabatic);
    CHECK(parse_variant("reduced-plus") == ModelVariant::ReducedPlus);
    CHECK_THROWS_WITH(parse_variant("minimal"), ContainsSubstring("minimal"));
}
