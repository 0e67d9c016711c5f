// qcrit: command-line front end for the critical-scaling toolkit.
//
// Subcommands: ionchain, quench, lmg, spinwave, collapse, stats, run.
// Exit codes: 0 success, 2 input contract violation, 3 numerical failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qcrit/io.hpp"
#include "qcrit/pipeline.hpp"

namespace fs = std::filesystem;
using namespace qcrit;

namespace {

std::string g_out = ".";
std::uint64_t g_seed = 0;
bool g_seed_set = false;

std::string out_path(const std::string& name) {
    fs::create_directories(g_out);
    return (fs::path(g_out) / name).string();
}

InteractionMatrix coupling_from_json(const json& j, int n) {
    require(j.contains("kind"), "coupling: 'kind' is required");
    const std::string kind = j.at("kind").get<std::string>();
    const double j0 = j.value("j0", 1.0);
    if (kind == "uniform") return uniform_matrix(n, j0);
    if (kind == "power_law") {
        require(j.contains("p"), "coupling: power_law needs 'p'");
        return power_law_matrix(n, j.at("p").get<double>(), j0);
    }
    if (kind == "file") {
        require(j.contains("path"), "coupling: file needs 'path'");
        InteractionMatrix m = read_matrix_csv(j.at("path").get<std::string>());
        require(m.n() == n, "coupling: matrix size does not match 'n'");
        return m;
    }
    throw contract_error("coupling: unknown kind '" + kind + "'");
}

ObservableKind observable_from_name(const std::string& s) {
    for (ObservableKind k : {ObservableKind::Cx2, ObservableKind::Cy2, ObservableKind::Sx,
                             ObservableKind::energy})
        if (observable_label(k) == s) return k;
    throw contract_error("unknown observable: " + s);
}

int cmd_ionchain(const std::string& config_path) {
    const json cfg = read_json_file(config_path);
    TrapParams tp;
    if (cfg.contains("n")) tp.n = cfg.at("n").get<int>();
    if (cfg.contains("nu_com_hz")) tp.nu_com_hz = cfg.at("nu_com_hz").get<double>();
    if (cfg.contains("nu_axial_hz")) tp.nu_axial_hz = cfg.at("nu_axial_hz").get<double>();
    if (cfg.contains("detuning_hz")) tp.detuning_hz = cfg.at("detuning_hz").get<double>();
    if (cfg.contains("recoil_hz")) tp.recoil_hz = cfg.at("recoil_hz").get<double>();
    if (cfg.contains("rabi_hz")) tp.rabi_hz = cfg.at("rabi_hz").get<double>();
    const InteractionMatrix m = ion_chain_couplings(tp);
    write_matrix_csv(out_path("jij.csv"), m);
    const std::vector<double> prof = coupling_profile(m);
    const PowerLawFit pl = fit_power_law(prof);
    const HybridFit hy = fit_hybrid(prof);
    json fits = {
        {"n", m.n()},
        {"kac", m.kac()},
        {"profile", prof},
        {"power_law", {{"exponent", pl.exponent}, {"residual", pl.residual}}},
        {"hybrid", {{"exponent", hy.exponent}, {"decay", hy.decay}, {"residual", hy.residual}}}};
    write_json_file(out_path("jij_fits.json"), fits);
    std::cout << "wrote jij.csv and jij_fits.json (N=" << m.n() << ", p=" << pl.exponent
              << ")\n";
    return 0;
}

int cmd_quench(const std::string& config_path) {
    const json cfg = read_json_file(config_path);
    require(cfg.contains("n"), "protocol: 'n' is required");
    require(cfg.contains("coupling"), "protocol: 'coupling' is required");
    require(cfg.contains("segments"), "protocol: 'segments' is required");
    const int n = cfg.at("n").get<int>();
    const InteractionMatrix jm = coupling_from_json(cfg.at("coupling"), n);
    const bool kac_normalized = cfg.value("kac_normalized", true);
    const double tol = cfg.value("tolerance", 1e-9);

    QuenchProtocol protocol;
    const std::string basis = cfg.value("basis", "auto");
    if (basis == "full")
        protocol.basis = Basis::full;
    else if (basis == "dicke")
        protocol.basis = Basis::dicke;
    else if (basis == "auto")
        protocol.basis = (jm.is_uniform() && n > 16) ? Basis::dicke : Basis::full;
    else
        throw contract_error("protocol: basis must be full, dicke, or auto");

    std::vector<ObservableKind> observables;
    for (const json& seg : cfg.at("segments")) {
        HamiltonianSpec spec;
        spec.j = jm;
        spec.gamma_x = seg.value("gamma_x", 0.0);
        spec.gamma_y = seg.value("gamma_y", 0.0);
        spec.bz = seg.value("bz", 0.0);
        spec.kac_normalized = kac_normalized;
        require(seg.contains("duration"), "segment: 'duration' is required");
        const double duration = seg.at("duration").get<double>();
        const double dt = seg.value("dt", 0.05);
        require(dt > 0.0, "segment: dt must be positive");
        ProtocolSegment ps;
        ps.spec = spec;
        ps.duration = duration;
        for (double t = 0.0; t <= duration + 1e-12; t += dt)
            ps.sample_times.push_back(std::min(t, duration));
        protocol.segments.push_back(std::move(ps));
        observables.push_back(observable_from_name(seg.value("observable", "Cx2")));
    }
    const auto series = run_protocol(protocol, observables, tol);
    for (std::size_t k = 0; k < series.size(); ++k) {
        const std::string name =
            "quench_seg" + std::to_string(k + 1) + "_" + series[k].label + ".csv";
        write_series_csv(out_path(name), series[k]);
        std::cout << "wrote " << name << "\n";
    }

    if (cfg.contains("measure")) {
        require(protocol.basis == Basis::full,
                "measure: site-resolved sampling needs the full basis");
        const json& ms = cfg.at("measure");
        const std::string axis = ms.value("axis", "x");
        require(axis == "x" || axis == "y", "measure: axis must be x or y");
        const int shots = ms.value("shots", 1000);
        const double eps = ms.value("eps", 0.0);
        // replay the protocol to the final state, then sample
        SpinState state = all_down_state(n, Basis::full);
        for (const auto& seg : protocol.segments)
            state = evolve(state, seg.spec, seg.duration, tol);
        const std::uint64_t seed = g_seed_set ? g_seed : ms.value("seed", std::uint64_t{1});
        ShotSet set = sample_measurements(state, axis[0], shots, eps, seed);
        double t_total = 0.0;
        for (const auto& seg : protocol.segments) t_total += seg.duration;
        set.time = t_total;
        write_shots_csv(out_path("shots.csv"), set);
        std::cout << "wrote shots.csv (" << shots << " repetitions)\n";
    }
    return 0;
}

int cmd_lmg(const std::string& config_path) {
    const json cfg = read_json_file(config_path);
    const std::string mode = cfg.value("mode", "quench");
    require(cfg.contains("n"), "lmg: 'n' is required");
    const int n = cfg.at("n").get<int>();
    const double dt = cfg.value("dt", 0.05);

    if (mode == "quench") {
        const double b = cfg.value("b", 1.0);
        const double tmax = cfg.value("tmax", 6.0 * std::pow(n, 0.25));
        const LMGParams pre{n, 0.0, 0.0, 1.0};
        const LMGParams post{n, 1.0, 0.0, b};
        std::vector<double> ts;
        for (double t = 0.0; t <= tmax + 1e-12; t += dt) ts.push_back(t);
        const ObservableSeries s = quench_series(pre, post, ts);
        write_series_csv(out_path("lmg_Cx2.csv"), s);
        std::cout << "wrote lmg_Cx2.csv\n";
        return 0;
    }
    if (mode == "double_quench") {
        const double b = cfg.value("b", 1.0);
        SwitchRule rule;
        const std::string sw = cfg.value("switch", "scaled");
        if (sw == "scaled")
            rule.mode = SwitchRule::Mode::scaled;
        else if (sw == "at_peak")
            rule.mode = SwitchRule::Mode::at_peak;
        else
            throw contract_error("lmg: switch must be scaled or at_peak");
        rule.scaled_constant = cfg.value("switch_constant", 0.787);
        rule.dt = dt;
        const double dt2 = cfg.value("dt2", 0.01);
        const double t2max = cfg.value("t2max", 3.0 * std::pow(n, 0.125));
        std::vector<double> ts2;
        for (double t = 0.0; t <= t2max + 1e-12; t += dt2) ts2.push_back(t);
        const LMGParams pre{n, 0.0, 0.0, 1.0};
        const LMGParams mid{n, 1.0, 0.0, b};
        const LMGParams post{n, 0.0, 1.0, b};
        const DoubleQuenchResult dq = double_quench_series(pre, mid, post, rule, ts2);
        write_series_csv(out_path("lmg_seg1_Cx2.csv"), dq.segment1);
        write_series_csv(out_path("lmg_seg2_Cy2.csv"), dq.segment2);
        write_json_file(out_path("lmg_switch.json"), json{{"t_switch", dq.t_switch}});
        std::cout << "wrote lmg_seg1_Cx2.csv, lmg_seg2_Cy2.csv (t_switch=" << dq.t_switch
                  << ")\n";
        return 0;
    }
    if (mode == "order_parameter") {
        std::vector<double> fields;
        if (cfg.contains("fields"))
            fields = cfg.at("fields").get<std::vector<double>>();
        else
            for (int i = 1; i <= 40; ++i) fields.push_back(0.04 * i);
        const double tmax = cfg.value("tmax", 40.0);
        std::vector<double> ts;
        for (double t = 0.0; t <= tmax + 1e-12; t += dt) ts.push_back(t);
        std::vector<double> ys;
        for (double b : fields) {
            const LMGParams pre{n, 0.0, 0.0, 1.0};
            const LMGParams post{n, 1.0, 0.0, b};
            const ObservableSeries s = quench_series(pre, post, ts);
            double peak = s.values[0];
            for (double v : s.values) peak = std::max(peak, v);
            ys.push_back(peak / n);
        }
        {
            std::ofstream f(out_path("order_parameter.csv"), std::ios::binary);
            require(f.good(), "cannot open order_parameter.csv for writing");
            f << "# qcrit order-parameter v1\n# n=" << n << "\nb,m2\n";
            for (std::size_t i = 0; i < fields.size(); ++i)
                f << detail::fmt_double(fields[i]) << ',' << detail::fmt_double(ys[i]) << "\n";
        }
        const OrderParameterFit fit = fit_order_parameter(fields, ys, n);
        json cov = json::array();
        for (int r = 0; r < 3; ++r)
            cov.push_back({fit.covariance(r, 0), fit.covariance(r, 1), fit.covariance(r, 2)});
        write_json_file(out_path("order_fit.json"),
                        json{{"n", n},
                             {"b_c", fit.b_c},
                             {"d", fit.d},
                             {"amplitude", fit.amplitude},
                             {"ssr", fit.ssr},
                             {"iterations", fit.iterations},
                             {"covariance", cov}});
        std::cout << "wrote order_parameter.csv, order_fit.json (b_c=" << fit.b_c
                  << ", d=" << fit.d << ")\n";
        return 0;
    }
    throw contract_error("lmg: mode must be quench, double_quench, or order_parameter");
}

int cmd_spinwave(const std::string& matrix_path, double bmin, double bmax, int steps) {
    require(steps >= 1, "spinwave: steps >= 1");
    require(bmax >= bmin && bmin > 0.0, "spinwave: need 0 < bmin <= bmax");
    const InteractionMatrix m = read_matrix_csv(matrix_path);
    {
        std::ofstream f(out_path("spectrum.csv"), std::ios::binary);
        require(f.good(), "cannot open spectrum.csv for writing");
        f << "# qcrit spinwave v1\n# n=" << m.n() << " kac=" << detail::fmt_double(m.kac())
          << "\nb,lambda0,lambda1,valid\n";
        for (int i = 0; i < steps; ++i) {
            const double b =
                steps == 1 ? bmin : bmin + (bmax - bmin) * i / static_cast<double>(steps - 1);
            const BogoliubovSpectrum s = spectrum_realspace(m, b);
            f << detail::fmt_double(b) << ',' << detail::fmt_double(s.lowest_two.first) << ','
              << detail::fmt_double(s.lowest_two.second) << ',' << (s.valid ? 1 : 0) << "\n";
        }
    }
    const double bc = critical_field(m);
    const BogoliubovSpectrum at_bc = spectrum_realspace(m, bc);
    write_json_file(out_path("spinwave_fit.json"),
                    json{{"n", m.n()},
                         {"b_c", bc},
                         {"lambda1_at_bc", at_bc.lowest_two.second},
                         {"population_n1",
                          gapped_mode_population(1.0, at_bc.lowest_two.second)}});
    std::cout << "wrote spectrum.csv, spinwave_fit.json (b_c=" << bc << ")\n";
    return 0;
}

int cmd_collapse(const std::string& dir, const std::string& options_path) {
    std::array<double, 2> init{0.3, 0.3};
    CollapseWindow window = CollapseWindow::full;
    std::string mode = "auto";
    if (!options_path.empty()) {
        const json opt = read_json_file(options_path);
        if (opt.contains("init")) {
            const auto v = opt.at("init").get<std::vector<double>>();
            require(v.size() == 2, "options: init must have 2 entries");
            init = {v[0], v[1]};
        }
        if (opt.contains("window")) {
            const std::string w = opt.at("window").get<std::string>();
            if (w == "full")
                window = CollapseWindow::full;
            else if (w == "first_min")
                window = CollapseWindow::first_min_after_first_max;
            else
                throw contract_error("options: window must be full or first_min");
        }
        if (opt.contains("mode")) mode = opt.at("mode").get<std::string>();
        require(mode == "auto" || mode == "weighted" || mode == "unweighted",
                "options: mode must be auto, weighted, or unweighted");
    }

    require(fs::is_directory(dir), "collapse: '" + dir + "' is not a directory");
    std::vector<std::string> paths;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".csv")
            paths.push_back(e.path().string());
    std::sort(paths.begin(), paths.end());
    require(paths.size() >= 2, "collapse: need at least 2 CSV series in " + dir);

    std::vector<ObservableSeries> family;
    for (const auto& p : paths) family.push_back(read_series_csv(p));
    std::sort(family.begin(), family.end(),
              [](const ObservableSeries& a, const ObservableSeries& b) { return a.n < b.n; });
    for (std::size_t i = 1; i < family.size(); ++i)
        require(family[i].n != family[i - 1].n, "collapse: duplicate system size in input");
    for (auto& s : family) {
        if (mode == "unweighted") s.stderrs.clear();
        if (mode == "weighted")
            require(!s.stderrs.empty(), "collapse: weighted mode needs stderr columns");
    }

    const CollapseResult r = optimize_collapse(family, init, window);
    write_json_file(out_path("collapse.json"),
                    json{{"alpha", r.alpha},
                         {"zeta", r.zeta},
                         {"s_min", r.s_min},
                         {"d_alpha", r.d_alpha},
                         {"d_zeta", r.d_zeta},
                         {"evaluations", r.evaluations},
                         {"converged", r.converged},
                         {"weighted", r.weighted}});
    for (const auto& s : family) {
        const Curve c = scaled_curve(s, r.alpha, r.zeta);
        std::ofstream f(out_path("scaled_N" + std::to_string(s.n) + ".csv"),
                        std::ios::binary);
        require(f.good(), "cannot open scaled CSV for writing");
        f << "# qcrit scaled v1\n# n=" << s.n << " alpha=" << detail::fmt_double(r.alpha)
          << " zeta=" << detail::fmt_double(r.zeta) << "\nx,y,dy\n";
        for (const auto& p : c.points)
            f << detail::fmt_double(p.x) << ',' << detail::fmt_double(p.y) << ','
              << detail::fmt_double(p.dy) << "\n";
    }
    std::cout << "collapse: alpha=" << r.alpha << " zeta=" << r.zeta << " s_min=" << r.s_min
              << "\n";
    return 0;
}

int cmd_stats(const std::string& shots_path, bool raw_variance) {
    const ShotSet set = read_shots_csv(shots_path);
    EstimateWithError e;
    if (raw_variance) {
        e.estimate = correlator_estimate(set);
        e.stderr_ = jackknife_error(
            set, [](const ShotSet& s) { return correlator_estimate(s); }, false);
    } else {
        e = correlator_with_error(set);
    }
    write_json_file(out_path("estimate.json"),
                    json{{"estimate", e.estimate}, {"stderr", e.stderr_}});
    std::cout << "estimate=" << e.estimate << " stderr=" << e.stderr_ << "\n";
    return 0;
}

int cmd_run(const std::string& config_path) {
    const json cfg = read_json_file(config_path);
    ExperimentConfig config = ExperimentConfig::from_json(cfg);
    if (g_out != ".") config.out_dir = g_out;
    if (g_seed_set) config.seed = g_seed;
    const ExperimentResult r = run_experiment(config);
    std::cout << "experiment " << experiment_name(config.experiment) << ": wrote "
              << r.files.size() << " files to " << config.out_dir << "\n";
    if (!r.summary.is_null()) std::cout << r.summary.dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"qcrit: critical scaling analysis for long-range spin chains"};
    app.require_subcommand(1);

    int threads = 0;
    app.add_option("--seed", g_seed, "override RNG seed for sampling subcommands");
    app.add_option("--out", g_out, "output directory (default .)");
    app.add_option("--threads", threads, "BLAS/Eigen thread cap (0 = library default)");

    std::string config_path, matrix_path, dir_path, options_path, shots_path;
    double bmin = 0.5, bmax = 1.5;
    int steps = 51;
    bool raw_variance = false;

    CLI::App* ionchain = app.add_subcommand("ionchain", "synthesize trapped-ion couplings");
    ionchain->add_option("-c,--config", config_path, "trap parameter JSON")->required();

    CLI::App* quench = app.add_subcommand("quench", "run a quench protocol");
    quench->add_option("-c,--config", config_path, "protocol JSON")->required();

    CLI::App* lmg = app.add_subcommand("lmg", "collective-model quenches and fits");
    lmg->add_option("-c,--config", config_path, "parameter JSON")->required();

    CLI::App* spinwave = app.add_subcommand("spinwave", "quasiparticle spectrum scan");
    spinwave->add_option("-m,--matrix", matrix_path, "coupling matrix CSV")->required();
    spinwave->add_option("--bmin", bmin, "scan start (units of the Kac coupling)");
    spinwave->add_option("--bmax", bmax, "scan end");
    spinwave->add_option("--steps", steps, "number of grid points");

    CLI::App* collapse = app.add_subcommand("collapse", "two-exponent scaling collapse");
    collapse->add_option("-d,--dir", dir_path, "directory of per-size series CSVs")
        ->required();
    collapse->add_option("-c,--options", options_path, "options JSON (init, window, mode)");

    CLI::App* stats = app.add_subcommand("stats", "correlator estimate from shot records");
    stats->add_option("-s,--shots", shots_path, "shot set CSV")->required();
    stats->add_flag("--raw-variance", raw_variance,
                    "jackknife without the (R-1)/R factor");

    CLI::App* run = app.add_subcommand("run", "run a configured experiment");
    run->add_option("-c,--config", config_path, "experiment JSON")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    g_seed_set = app.count("--seed") > 0;
    if (threads > 0) {
        const std::string t = std::to_string(threads);
        setenv("OPENBLAS_NUM_THREADS", t.c_str(), 1);
        setenv("OMP_NUM_THREADS", t.c_str(), 1);
    }

    try {
        if (*ionchain) return cmd_ionchain(config_path);
        if (*quench) return cmd_quench(config_path);
        if (*lmg) return cmd_lmg(config_path);
        if (*spinwave) return cmd_spinwave(matrix_path, bmin, bmax, steps);
        if (*collapse) return cmd_collapse(dir_path, options_path);
        if (*stats) return cmd_stats(shots_path, raw_variance);
        if (*run) return cmd_run(config_path);
    } catch (const contract_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const numerical_error& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
