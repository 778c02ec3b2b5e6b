// Command-line front end: simulation, fixed-point analysis, spectra,
// exceptional-point scans, phase diagrams, quenches, and attractor censuses
// for the two-species nonreciprocal spin-light model.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <iostream>
#include <string>
#include <vector>

#include <nrdicke/io.hpp>

using namespace nrdicke;

namespace {

struct CommonArgs {
    std::string config_path;
    std::vector<std::string> sets;
    std::string out;
    std::string format;
    std::string variant;
    bool plot = false;
    bool print_config = false;
    int threads = -1;
    std::int64_t seed = -1;
};

void add_common(CLI::App* cmd, CommonArgs& a) {
    cmd->add_option("--config", a.config_path, "JSON configuration file");
    cmd->add_option("--set", a.sets, "override a config entry, block.key=value")
        ->take_all();
    cmd->add_option("--out", a.out, "output path");
    cmd->add_option("--format", a.format, "output format (csv or json)");
    cmd->add_option("--variant", a.variant, "model variant: full, adiabatic, reduced-plus");
    cmd->add_flag("--plot", a.plot, "emit a gnuplot script next to the output");
    cmd->add_flag("--print-config", a.print_config, "print the resolved config and exit");
    cmd->add_option("--threads", a.threads, "worker thread count");
    cmd->add_option("--seed", a.seed, "random seed");
}

// defaults -> config file -> --set overrides -> dedicated flags
RunConfig resolve_config(const CommonArgs& a) {
    json doc = json::object();
    if (!a.config_path.empty()) {
        auto f = detail::open_in(a.config_path);
        std::stringstream ss;
        ss << f.rdbuf();
        try {
            doc = json::parse(ss.str());
        } catch (const json::parse_error& e) {
            throw std::invalid_argument(std::string("config parse error: ") + e.what());
        }
    }
    for (const auto& s : a.sets) apply_set_override(doc, s);
    if (a.threads >= 0) doc["run"]["threads"] = a.threads;
    if (a.seed >= 0) doc["run"]["seed"] = static_cast<std::uint64_t>(a.seed);
    if (!a.out.empty()) doc["run"]["out"] = a.out;
    if (!a.format.empty()) doc["run"]["format"] = a.format;
    if (!a.variant.empty()) {
        parse_variant(a.variant);  // reject bad names before they reach the config
        doc["run"]["variant"] = a.variant == "reduced-plus" ? "reduced_plus" : a.variant;
    }
    return config_from_json(doc);
}

std::string timestamp_utc() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// Everything except "timestamp" is a pure function of the invocation, so two
// runs of the same command produce byte-identical manifests apart from it.
void write_manifest(const std::string& out_path, const std::string& command,
                    const RunConfig& cfg, const std::vector<std::string>& outputs,
                    const std::string& error = {}) {
    json m{{"command", command},
           {"outputs", outputs},
           {"config", cfg.resolved},
           {"status", error.empty() ? "ok" : "failed"},
           {"timestamp", timestamp_utc()}};
    if (!error.empty()) m["error"] = error;
    auto f = detail::open_out(out_path + ".manifest.json");
    f << m.dump(2) << '\n';
}

void write_json_file(const std::string& path, const json& j) {
    auto f = detail::open_out(path);
    f << j.dump(2) << '\n';
}

void write_plot_script(const std::string& out_path, const std::string& body) {
    auto f = detail::open_out(out_path + ".gnuplot");
    f << "set datafile separator ','\n" << body;
}

std::string default_out(const RunConfig& cfg, const char* name, const char* ext) {
    if (!cfg.out.empty()) return cfg.out;
    return std::string(name) + "." + ext;
}

// ---- subcommand bodies; each returns the list of files written ----

std::vector<std::string> run_simulate(const RunConfig& cfg) {
    const auto traj = integrate(cfg.variant, default_initial_conditions(cfg.init, cfg.seed),
                                cfg.params, cfg.integrator);
    if (cfg.format == "json") {
        const std::string out = default_out(cfg, "trajectory", "json");
        json states = json::array();
        for (const auto& s : traj.states) states.push_back(state_to_json(s));
        write_json_file(out, json{{"params", params_to_json(cfg.params)},
                                  {"variant", variant_name(cfg.variant)},
                                  {"times", traj.times},
                                  {"states", states}});
        return {out};
    }
    const std::string out = default_out(cfg, "trajectory", "csv");
    write_trajectory_csv(out, traj);
    return {out};
}

std::vector<std::string> run_fixed_points(const RunConfig& cfg) {
    FindAllOptions opt;
    opt.n_random = cfg.fixed_points.n_random;
    opt.seed = cfg.seed;
    const auto set = find_all_fixed_points(cfg.params, cfg.variant, opt);
    const std::string out = default_out(cfg, "fixed_points", "json");
    write_json_file(out, fixed_point_set_to_json(set));
    return {out};
}

std::vector<std::string> run_np_spectrum(const RunConfig& cfg, const std::string& sweep_name,
                                         const std::vector<double>& sweep_args) {
    if (!sweep_name.empty()) {
        if (sweep_args.size() != 3)
            throw std::invalid_argument("--sweep expects: name min max count");
        const double lo = sweep_args[0], hi = sweep_args[1];
        const int count = static_cast<int>(sweep_args[2]);
        if (count < 2) throw std::invalid_argument("--sweep count must be >= 2");
        const std::string out = default_out(cfg, "np_spectrum_sweep", "csv");
        auto f = detail::open_out(out);
        f << sweep_name;
        for (int k = 0; k < 6; ++k) f << ",ad_re_" << k << ",ad_im_" << k;
        for (int k = 0; k < 8; ++k) f << ",full_re_" << k << ",full_im_" << k;
        f << '\n';
        for (int i = 0; i < count; ++i) {
            ModelParams p = cfg.params;
            const double v = lo + (hi - lo) * static_cast<double>(i) /
                                      static_cast<double>(count - 1);
            apply_axis(p, sweep_name, v);
            const auto ad = np_spectrum_closed_form(p);
            const auto fu = make_report(jacobian(np_state(), p, ModelVariant::Full), false);
            f << fmt17(v);
            for (const auto& e : ad.eigenvalues)
                f << ',' << fmt17(e.real()) << ',' << fmt17(e.imag());
            for (const auto& e : fu.eigenvalues)
                f << ',' << fmt17(e.real()) << ',' << fmt17(e.imag());
            f << '\n';
        }
        return {out};
    }
    const std::string out = default_out(cfg, "np_spectrum", "json");
    const auto closed = np_spectrum_closed_form(cfg.params);
    const auto numeric = np_spectrum_numeric(cfg.params, cfg.variant);
    const auto ad_block = make_report(np_xy_block_adiabatic(cfg.params), true);
    const auto full_block = make_report(np_xy_block_full(cfg.params), true);
    write_json_file(out, json{{"params", params_to_json(cfg.params)},
                              {"closed_form", eigen_report_to_json(closed)},
                              {"numeric", eigen_report_to_json(numeric)},
                              {"adiabatic_block", eigen_report_to_json(ad_block)},
                              {"full_block", eigen_report_to_json(full_block)}});
    return {out};
}

std::vector<std::string> run_ep_scan(const RunConfig& cfg) {
    EpScanOptions opt;
    opt.grid = cfg.ep_scan.grid;
    const auto eps = find_exceptional_points(cfg.params, cfg.ep_scan.phi_min,
                                             cfg.ep_scan.phi_max, opt);
    const std::string out = default_out(cfg, "ep_scan", "json");
    json doc = ep_points_to_json(eps, cfg.ep_scan.phi_min, cfg.ep_scan.phi_max);
    doc["params"] = params_to_json(cfg.params);
    write_json_file(out, doc);
    return {out};
}

std::vector<std::string> run_phase_diagram(const RunConfig& cfg) {
    const auto pd = sweep_phase_diagram(cfg.params, cfg.sweep.axis1, cfg.sweep.axis2,
                                        cfg.variant, cfg.seed, cfg.sweep_options());
    if (cfg.format == "json") {
        const std::string out = default_out(cfg, "phase_diagram", "json");
        json cells = json::array();
        for (const auto& c : pd.cells)
            cells.push_back(json{{"a1", c.a1},
                                 {"a2", c.a2},
                                 {"label", phase_label_name(c.label)},
                                 {"max_growth", c.max_growth},
                                 {"mean_intensity", c.mean_intensity},
                                 {"n_attractors", c.n_attractors},
                                 {"error", c.error}});
        write_json_file(out, json{{"params", params_to_json(cfg.params)},
                                  {"variant", variant_name(cfg.variant)},
                                  {"axis1", pd.axis1.name},
                                  {"axis2", pd.axis2.name},
                                  {"cells", cells}});
        return {out};
    }
    const std::string out = default_out(cfg, "phase_diagram", "csv");
    write_phase_diagram_csv(out, pd);
    return {out};
}

std::vector<std::string> run_spectrum(const RunConfig& cfg, bool sweep) {
    if (sweep) {
        const auto scan = regime_scan(cfg.params, cfg.scan.axis, cfg.variant,
                                      cfg.scan_options());
        const std::string out = default_out(cfg, "regime_scan", "csv");
        auto f = detail::open_out(out);
        write_scan_csv(f, cfg.scan.axis.name, scan);
        return {out};
    }
    const auto traj = integrate(cfg.variant, default_initial_conditions(cfg.init, cfg.seed),
                                cfg.params, cfg.integrator);
    const auto sp = fft_spectrum(traj, cfg.observable);
    const auto regime = classify_regime(traj);
    const auto lock = phase_locking_angle(traj);
    const json report{{"params", params_to_json(cfg.params)},
                      {"variant", variant_name(cfg.variant)},
                      {"observable", sp.observable},
                      {"regime", regime_to_json(regime)},
                      {"lock", locking_to_json(lock)}};
    if (cfg.format == "json") {
        const std::string out = default_out(cfg, "spectrum", "json");
        json doc = report;
        doc["frequencies"] = sp.frequencies;
        doc["amplitudes"] = sp.amplitudes;
        write_json_file(out, doc);
        return {out};
    }
    const std::string out = default_out(cfg, "spectrum", "csv");
    write_spectrum_csv(out, sp);
    const std::string rep_out = out + ".report.json";
    write_json_file(rep_out, report);
    return {out, rep_out};
}

std::vector<std::string> run_quench(const RunConfig& cfg) {
    const auto rep = quench_phi(cfg.params, cfg.variant, cfg.quench_options());
    const std::string out = default_out(cfg, "quench", "json");
    write_json_file(out, quench_report_to_json(rep));
    return {out};
}

std::vector<std::string> run_census(const RunConfig& cfg) {
    const auto rep = attractor_census(cfg.params, cfg.variant, cfg.seed,
                                      cfg.census_options());
    const std::string out = default_out(cfg, "census", "json");
    write_json_file(out, census_report_to_json(rep));
    return {out};
}

std::vector<std::string> run_consistency(const RunConfig& cfg) {
    const auto rep = adiabatic_consistency_check(cfg.params, cfg.consistency_samples,
                                                 cfg.seed);
    const std::string out = default_out(cfg, "consistency", "json");
    write_json_file(out, consistency_to_json(rep));
    return {out};
}

void maybe_plot(const std::string& command, const RunConfig& cfg,
                const std::vector<std::string>& outputs) {
    if (outputs.empty()) return;
    const std::string& f = outputs.front();
    if (command == "simulate")
        write_plot_script(f, "plot '" + f + "' using 1:4 with lines title 'sz+', \\\n"
                                  "     '" + f + "' using 1:7 with lines title 'sz-', \\\n"
                                  "     '" + f +
                                  "' using 1:(sqrt($8**2+$9**2)) with lines title '|beta|'\n");
    else if (command == "spectrum" && cfg.format != "json")
        write_plot_script(f, "set logscale y\nplot '" + f +
                                  "' using 1:2 with impulses title 'amplitude'\n");
    else if (command == "phase-diagram" && cfg.format != "json")
        write_plot_script(f, "set view map\nsplot '" + f +
                                  "' using 1:2:4 with points pt 5 ps 2 palette title "
                                  "'max growth rate'\n");
    else if (command == "np-spectrum")
        write_plot_script(f, "plot for [k=0:7] '" + f +
                                  "' using 1:(column(14+2*k)) with lines title "
                                  "sprintf('Re full %d', k)\n");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"nonreciprocal two-species spin-light model toolkit"};
    app.require_subcommand(1);

    std::map<std::string, CommonArgs> args;
    std::string sweep_name;
    std::vector<double> sweep_vals;
    bool spectrum_sweep = false;
    std::vector<std::string> axes_tokens;

    const std::vector<std::string> names{"simulate",   "fixed-points", "np-spectrum",
                                         "ep-scan",    "phase-diagram", "spectrum",
                                         "quench",     "census",        "consistency"};
    const std::map<std::string, std::string> descs{
        {"simulate", "integrate one trajectory and write it out"},
        {"fixed-points", "locate and classify all fixed points"},
        {"np-spectrum", "stability spectrum of the normal state"},
        {"ep-scan", "locate spectral degeneracies along the phase angle"},
        {"phase-diagram", "classify attractors over a 2-axis parameter grid"},
        {"spectrum", "frequency content and regime of one trajectory"},
        {"quench", "phase-reversal quench and orbit-overlap verdict"},
        {"census", "cluster long-time attractors over random initial states"},
        {"consistency", "compare the reduced flow against the full one"}};

    for (const auto& n : names) {
        CLI::App* cmd = app.add_subcommand(n, descs.at(n));
        add_common(cmd, args[n]);
        if (n == "np-spectrum") {
            cmd->add_option("--sweep", sweep_name,
                            "sweep a parameter: --sweep name min max count");
            cmd->add_option("sweep_args", sweep_vals, "min max count")->expected(0, 3);
        }
        if (n == "spectrum")
            cmd->add_flag("--sweep", spectrum_sweep,
                          "scan the configured axis and tabulate regimes");
        if (n == "phase-diagram")
            cmd->add_option("--axes", axes_tokens,
                            "grid axes: name1 min1 max1 count1 name2 min2 max2 count2")
                ->expected(8);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    CommonArgs& common = args.at(command);
    if (!axes_tokens.empty()) {
        const char* pre[2] = {"sweep.axis1.", "sweep.axis2."};
        const char* key[4] = {"name=", "min=", "max=", "count="};
        for (int a = 0; a < 2; ++a)
            for (int k = 0; k < 4; ++k)
                common.sets.push_back(std::string(pre[a]) + key[k] + axes_tokens[4 * a + k]);
    }

    RunConfig cfg;
    try {
        cfg = resolve_config(common);
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    }

    if (common.print_config) {
        std::cout << cfg.resolved.dump(2) << '\n';
        return 0;
    }

    std::vector<std::string> outputs;
    try {
        if (command == "simulate") outputs = run_simulate(cfg);
        else if (command == "fixed-points") outputs = run_fixed_points(cfg);
        else if (command == "np-spectrum") outputs = run_np_spectrum(cfg, sweep_name, sweep_vals);
        else if (command == "ep-scan") outputs = run_ep_scan(cfg);
        else if (command == "phase-diagram") outputs = run_phase_diagram(cfg);
        else if (command == "spectrum") outputs = run_spectrum(cfg, spectrum_sweep);
        else if (command == "quench") outputs = run_quench(cfg);
        else if (command == "census") outputs = run_census(cfg);
        else if (command == "consistency") outputs = run_consistency(cfg);
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        const std::string base = outputs.empty()
                                     ? (cfg.out.empty() ? command : cfg.out)
                                     : outputs.front();
        try {
            write_manifest(base, command, cfg, outputs, e.what());
        } catch (...) {}
        return 2;
    }

    write_manifest(outputs.front(), command, cfg, outputs);
    if (common.plot) maybe_plot(command, cfg, outputs);
    return 0;
}
