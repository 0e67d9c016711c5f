#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "qcrit/collapse.hpp"
#include "qcrit/common.hpp"
#include "qcrit/dynamics.hpp"
#include "qcrit/interaction.hpp"
#include "qcrit/io.hpp"
#include "qcrit/lmg.hpp"
#include "qcrit/spinwave.hpp"
#include "qcrit/stats.hpp"
#include "qcrit/types.hpp"

namespace qcrit {

enum class ExperimentId {
    order_parameter,
    single_quench_collapse,
    double_quench_collapse,
    spinwave_gap,
    jij_profile,
    twa_check,
};

enum class ModelKind { lmg, power_law, ion_chain };

inline std::string experiment_name(ExperimentId id) {
    switch (id) {
        case ExperimentId::order_parameter: return "order_parameter";
        case ExperimentId::single_quench_collapse: return "single_quench_collapse";
        case ExperimentId::double_quench_collapse: return "double_quench_collapse";
        case ExperimentId::spinwave_gap: return "spinwave_gap";
        case ExperimentId::jij_profile: return "jij_profile";
        case ExperimentId::twa_check: return "twa_check";
    }
    throw contract_error("unknown experiment id");
}

inline ExperimentId experiment_from_name(const std::string& name) {
    for (ExperimentId id :
         {ExperimentId::order_parameter, ExperimentId::single_quench_collapse,
          ExperimentId::double_quench_collapse, ExperimentId::spinwave_gap,
          ExperimentId::jij_profile, ExperimentId::twa_check})
        if (experiment_name(id) == name) return id;
    throw contract_error("unknown experiment: " + name);
}

inline std::string model_name(ModelKind m) {
    switch (m) {
        case ModelKind::lmg: return "lmg";
        case ModelKind::power_law: return "power_law";
        case ModelKind::ion_chain: return "ion_chain";
    }
    throw contract_error("unknown model kind");
}

inline ModelKind model_from_name(const std::string& name) {
    for (ModelKind m : {ModelKind::lmg, ModelKind::power_law, ModelKind::ion_chain})
        if (model_name(m) == name) return m;
    throw contract_error("unknown model: " + name);
}

struct ExperimentConfig {
    ExperimentId experiment = ExperimentId::single_quench_collapse;
    ModelKind model = ModelKind::lmg;
    std::vector<int> sizes{128, 256, 512, 1024};
    double p = 0.9;    // power-law exponent (model = power_law)
    TrapParams trap;   // model = ion_chain
    double b = 1.0;    // quench field in collective-coupling units
    std::vector<double> fields;  // scan grid (order_parameter, spinwave_gap)
    double dt = 0.05;
    double tmax = 0.0;         // absolute horizon; 0 means use tmax_factor * n^{1/4}
    double tmax_factor = 6.0;
    bool scaled_switch = true;  // double quench: fixed rescaled switch time
    double switch_constant = 0.787;
    double dt2 = 0.01;
    double t2max_factor = 3.0;
    std::array<double, 2> collapse_init{0.3, 0.3};
    bool window_first_min = true;  // single-quench collapse window
    int shots = 0;
    double bitflip_eps = 0.0;
    SemiclassicalParams twa{1.0, 1.0, 0.7, 1.0};
    long twa_samples = 100000;
    std::uint64_t seed = 1;
    std::string out_dir = ".";

    void validate() const {
        require(!sizes.empty(), "config: sizes must be nonempty");
        for (int n : sizes) require(n >= 2, "config: sizes must be >= 2");
        require(dt > 0.0 && dt2 > 0.0, "config: time steps must be positive");
        require(shots >= 0, "config: shots >= 0");
        require(bitflip_eps >= 0.0 && bitflip_eps <= 1.0, "config: eps in [0,1]");
        require(!out_dir.empty(), "config: output directory required");
    }

    json to_json() const {
        json j;
        j["experiment"] = experiment_name(experiment);
        j["model"] = model_name(model);
        j["sizes"] = sizes;
        j["p"] = p;
        j["trap"] = {{"n", trap.n},
                     {"nu_com_hz", trap.nu_com_hz},
                     {"nu_axial_hz", trap.nu_axial_hz},
                     {"detuning_hz", trap.detuning_hz},
                     {"recoil_hz", trap.recoil_hz},
                     {"rabi_hz", trap.rabi_hz}};
        j["b"] = b;
        j["fields"] = fields;
        j["dt"] = dt;
        j["tmax"] = tmax;
        j["tmax_factor"] = tmax_factor;
        j["scaled_switch"] = scaled_switch;
        j["switch_constant"] = switch_constant;
        j["dt2"] = dt2;
        j["t2max_factor"] = t2max_factor;
        j["collapse_init"] = {collapse_init[0], collapse_init[1]};
        j["window_first_min"] = window_first_min;
        j["shots"] = shots;
        j["bitflip_eps"] = bitflip_eps;
        j["twa"] = {{"r", twa.r}, {"u", twa.u}, {"d", twa.d}, {"amplitude", twa.amplitude}};
        j["twa_samples"] = twa_samples;
        j["seed"] = seed;
        return j;  // out_dir excluded: the hash identifies the computation, not its location
    }

    static ExperimentConfig from_json(const json& j) {
        ExperimentConfig c;
        require(j.contains("experiment"), "config: 'experiment' is required");
        c.experiment = experiment_from_name(j.at("experiment").get<std::string>());
        require(j.contains("seed"), "config: explicit 'seed' is required");
        c.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("model")) c.model = model_from_name(j.at("model").get<std::string>());
        if (j.contains("sizes")) c.sizes = j.at("sizes").get<std::vector<int>>();
        if (j.contains("p")) c.p = j.at("p").get<double>();
        if (j.contains("trap")) {
            const json& t = j.at("trap");
            if (t.contains("n")) c.trap.n = t.at("n").get<int>();
            if (t.contains("nu_com_hz")) c.trap.nu_com_hz = t.at("nu_com_hz").get<double>();
            if (t.contains("nu_axial_hz")) c.trap.nu_axial_hz = t.at("nu_axial_hz").get<double>();
            if (t.contains("detuning_hz")) c.trap.detuning_hz = t.at("detuning_hz").get<double>();
            if (t.contains("recoil_hz")) c.trap.recoil_hz = t.at("recoil_hz").get<double>();
            if (t.contains("rabi_hz")) c.trap.rabi_hz = t.at("rabi_hz").get<double>();
        }
        if (j.contains("b")) c.b = j.at("b").get<double>();
        if (j.contains("fields")) c.fields = j.at("fields").get<std::vector<double>>();
        if (j.contains("dt")) c.dt = j.at("dt").get<double>();
        if (j.contains("tmax")) c.tmax = j.at("tmax").get<double>();
        if (j.contains("tmax_factor")) c.tmax_factor = j.at("tmax_factor").get<double>();
        if (j.contains("scaled_switch")) c.scaled_switch = j.at("scaled_switch").get<bool>();
        if (j.contains("switch_constant"))
            c.switch_constant = j.at("switch_constant").get<double>();
        if (j.contains("dt2")) c.dt2 = j.at("dt2").get<double>();
        if (j.contains("t2max_factor")) c.t2max_factor = j.at("t2max_factor").get<double>();
        if (j.contains("collapse_init")) {
            const auto v = j.at("collapse_init").get<std::vector<double>>();
            require(v.size() == 2, "config: collapse_init must have 2 entries");
            c.collapse_init = {v[0], v[1]};
        }
        if (j.contains("window_first_min"))
            c.window_first_min = j.at("window_first_min").get<bool>();
        if (j.contains("shots")) c.shots = j.at("shots").get<int>();
        if (j.contains("bitflip_eps")) c.bitflip_eps = j.at("bitflip_eps").get<double>();
        if (j.contains("twa")) {
            const json& t = j.at("twa");
            if (t.contains("r")) c.twa.r = t.at("r").get<double>();
            if (t.contains("u")) c.twa.u = t.at("u").get<double>();
            if (t.contains("d")) c.twa.d = t.at("d").get<double>();
            if (t.contains("amplitude")) c.twa.amplitude = t.at("amplitude").get<double>();
        }
        if (j.contains("twa_samples")) c.twa_samples = j.at("twa_samples").get<long>();
        if (j.contains("out_dir")) c.out_dir = j.at("out_dir").get<std::string>();
        c.validate();
        return c;
    }
};

struct ExperimentResult {
    std::vector<std::string> files;  // paths relative to out_dir, manifest last
    json summary;
};

namespace detail {

inline std::vector<double> default_field_grid(ExperimentId id) {
    std::vector<double> g;
    if (id == ExperimentId::order_parameter)
        for (int i = 1; i <= 40; ++i) g.push_back(0.04 * i);
    else
        for (int i = 0; i <= 50; ++i) g.push_back(0.5 + 0.02 * i);
    return g;
}

inline std::vector<double> time_grid(double dt, double tmax) {
    const int steps = std::max(2, static_cast<int>(std::round(tmax / dt)) + 1);
    std::vector<double> ts(static_cast<std::size_t>(steps));
    for (int i = 0; i < steps; ++i) ts[static_cast<std::size_t>(i)] = dt * i;
    return ts;
}

// Critical single quench from the polarized state in the collective model.
inline ObservableSeries lmg_quench(int n, double b, double dt, double tmax) {
    const LMGParams pre{n, 0.0, 0.0, 1.0};  // field-only ground state = polarized
    const LMGParams post{n, 1.0, 0.0, b};
    return quench_series(pre, post, time_grid(dt, tmax));
}

inline std::string join_path(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

inline json collapse_to_json(const CollapseResult& r) {
    return json{{"alpha", r.alpha},           {"zeta", r.zeta},
                {"s_min", r.s_min},           {"d_alpha", r.d_alpha},
                {"d_zeta", r.d_zeta},         {"evaluations", r.evaluations},
                {"converged", r.converged},   {"weighted", r.weighted}};
}

// Peak amplitude exponent from fit_peak_scaling plus a log-log fit of the
// peak times, t_peak ~ n^zeta.
inline json peak_fit_json(const std::vector<std::pair<double, double>>& maxima,
                          const std::vector<std::pair<double, double>>& times) {
    const PeakScalingFit pf = fit_peak_scaling(maxima, PeakMode::raw);
    std::vector<double> lx, ly;
    for (const auto& [n, t] : times) {
        require(t > 0.0, "peak time must be positive for scaling fit");
        lx.push_back(std::log(n));
        ly.push_back(std::log(t));
    }
    const LineFit lf = fit_line(lx, ly);
    return json{{"alpha", pf.alpha}, {"d_alpha", pf.d_alpha}, {"zeta", lf.slope}};
}

}  // namespace detail

// Two-point correlations at the fluctuation peak of a critical full-basis
// quench: run the quench, locate the first peak of the net correlator, and
// report C(r) = (1/(n-r)) sum_i <sx_i sx_{i+r}> of the state at that time.
struct CorrelationProfile {
    double t_peak = 0.0;
    std::vector<double> c;  // index r, c[0] = 1
};

inline CorrelationProfile correlation_profile(const HamiltonianSpec& spec, double dt,
                                              double tmax, double tol = 1e-9) {
    spec.validate();
    require(spec.n() <= spec.full_basis_cap,
            "correlation_profile: site-resolved correlations need the full basis");
    require(dt > 0.0 && tmax > dt, "correlation_profile: bad time grid");
    const std::vector<double> ts = detail::time_grid(dt, tmax);
    QuenchProtocol protocol;
    protocol.basis = Basis::full;
    protocol.segments.push_back({spec, ts.back(), ts});
    const auto series = run_protocol(protocol, {ObservableKind::Cx2}, tol);
    const PeakInfo peak = find_peak(series[0]);
    SpinState state = all_down_state(spec.n(), Basis::full);
    state = evolve(state, spec, peak.time, tol);
    CorrelationProfile out;
    out.t_peak = peak.time;
    out.c = correlation_profile_x(state);
    return out;
}

// Run one experiment; writes a deterministic bundle (CSV series, JSON
// reports, manifest.json) into config.out_dir and returns the headline
// numbers. Identical configs and seeds produce byte-identical files.
inline ExperimentResult run_experiment(const ExperimentConfig& config) {
    config.validate();
    std::filesystem::create_directories(config.out_dir);
    ExperimentResult result;
    const auto emit = [&](const std::string& name) { result.files.push_back(name); };

    const std::vector<double> fields =
        config.fields.empty() ? detail::default_field_grid(config.experiment) : config.fields;

    switch (config.experiment) {
        case ExperimentId::order_parameter: {
            require(config.model == ModelKind::lmg,
                    "order_parameter: collective (lmg) model only");
            json fits = json::array();
            for (int n : config.sizes) {
                const double tmax = config.tmax > 0.0 ? config.tmax : 40.0;
                std::vector<double> ys;
                ys.reserve(fields.size());
                for (double bf : fields) {
                    const ObservableSeries s = detail::lmg_quench(n, bf, config.dt, tmax);
                    double peak = s.values[0];
                    for (double v : s.values) peak = std::max(peak, v);
                    ys.push_back(peak / n);
                }
                const std::string curve_name = "order_parameter_N" + std::to_string(n) + ".csv";
                {
                    std::ofstream f(detail::join_path(config.out_dir, curve_name),
                                    std::ios::binary);
                    require(f.good(), "cannot open for writing: " + curve_name);
                    f << "# qcrit order-parameter v1\n# n=" << n << "\nb,m2\n";
                    for (std::size_t i = 0; i < fields.size(); ++i)
                        f << detail::fmt_double(fields[i]) << ',' << detail::fmt_double(ys[i]) << "\n";
                }
                emit(curve_name);
                const OrderParameterFit fit = fit_order_parameter(fields, ys, n);
                fits.push_back(json{{"n", n},
                                    {"b_c", fit.b_c},
                                    {"d", fit.d},
                                    {"amplitude", fit.amplitude},
                                    {"ssr", fit.ssr},
                                    {"d_b_c", std::sqrt(std::max(0.0, fit.covariance(0, 0)))},
                                    {"d_d", std::sqrt(std::max(0.0, fit.covariance(1, 1)))}});
            }
            result.summary["fits"] = fits;
            write_json_file(detail::join_path(config.out_dir, "order_fit.json"), result.summary);
            emit("order_fit.json");
            break;
        }
        case ExperimentId::single_quench_collapse: {
            require(config.model == ModelKind::lmg,
                    "single_quench_collapse: collective (lmg) model only");
            std::vector<ObservableSeries> family;
            std::vector<std::pair<double, double>> maxima, peak_times;
            for (int n : config.sizes) {
                const double tmax = config.tmax > 0.0
                                        ? config.tmax
                                        : config.tmax_factor * std::pow(n, 0.25);
                ObservableSeries s = detail::lmg_quench(n, config.b, config.dt, tmax);
                const std::string name = "quench_Cx2_N" + std::to_string(n) + ".csv";
                write_series_csv(detail::join_path(config.out_dir, name), s);
                emit(name);
                const PeakInfo pk = find_peak(s);
                maxima.emplace_back(n, pk.value);
                peak_times.emplace_back(n, pk.time);
                family.push_back(std::move(s));
            }
            const CollapseResult col = optimize_collapse(
                family, config.collapse_init,
                config.window_first_min ? CollapseWindow::first_min_after_first_max
                                        : CollapseWindow::full);
            result.summary["collapse"] = detail::collapse_to_json(col);
            result.summary["peak_fit"] = detail::peak_fit_json(maxima, peak_times);
            write_json_file(detail::join_path(config.out_dir, "collapse.json"), result.summary);
            emit("collapse.json");
            break;
        }
        case ExperimentId::double_quench_collapse: {
            require(config.model == ModelKind::lmg,
                    "double_quench_collapse: collective (lmg) model only");
            std::vector<ObservableSeries> family;
            std::vector<std::pair<double, double>> maxima, peak_times;
            for (int n : config.sizes) {
                const LMGParams pre{n, 0.0, 0.0, 1.0};
                const LMGParams mid{n, 1.0, 0.0, config.b};
                const LMGParams post{n, 0.0, 1.0, config.b};
                SwitchRule rule;
                rule.mode = config.scaled_switch ? SwitchRule::Mode::scaled
                                                 : SwitchRule::Mode::at_peak;
                rule.scaled_constant = config.switch_constant;
                rule.dt = config.dt;
                rule.tmax_factor = config.tmax_factor;
                const double t2max = config.t2max_factor * std::pow(n, 0.125);
                const DoubleQuenchResult dq = double_quench_series(
                    pre, mid, post, rule, detail::time_grid(config.dt2, t2max));
                const std::string name = "quench2_Cy2_N" + std::to_string(n) + ".csv";
                write_series_csv(detail::join_path(config.out_dir, name), dq.segment2);
                emit(name);
                const PeakInfo pk = find_peak(dq.segment2);
                maxima.emplace_back(n, pk.value);
                peak_times.emplace_back(n, pk.time);
                family.push_back(dq.segment2);
            }
            const CollapseResult col =
                optimize_collapse(family, config.collapse_init, CollapseWindow::full);
            result.summary["collapse"] = detail::collapse_to_json(col);
            result.summary["peak_fit"] = detail::peak_fit_json(maxima, peak_times);
            write_json_file(detail::join_path(config.out_dir, "collapse.json"), result.summary);
            emit("collapse.json");
            break;
        }
        case ExperimentId::spinwave_gap: {
            require(config.model != ModelKind::lmg || !config.sizes.empty(),
                    "spinwave_gap: sizes required");
            const int n = config.sizes.front();
            InteractionMatrix jm;
            if (config.model == ModelKind::ion_chain) {
                TrapParams tp = config.trap;
                tp.n = n;
                jm = ion_chain_couplings(tp);
            } else {
                jm = config.model == ModelKind::lmg ? uniform_matrix(n)
                                                    : power_law_matrix(n, config.p);
            }
            const std::string name = "spinwave_gap.csv";
            {
                std::ofstream f(detail::join_path(config.out_dir, name), std::ios::binary);
                require(f.good(), "cannot open for writing: " + name);
                f << "# qcrit spinwave v1\n# n=" << n << " kac=" << detail::fmt_double(jm.kac())
                  << "\nb,lambda0,lambda1,valid\n";
                for (double bf : fields) {
                    const BogoliubovSpectrum s = spectrum_realspace(jm, bf);
                    f << detail::fmt_double(bf) << ',' << detail::fmt_double(s.lowest_two.first) << ','
                      << detail::fmt_double(s.lowest_two.second) << ',' << (s.valid ? 1 : 0) << "\n";
                }
            }
            emit(name);
            const double bc = critical_field(jm);
            const BogoliubovSpectrum at_bc = spectrum_realspace(jm, bc);
            result.summary = {{"n", n},
                              {"b_c", bc},
                              {"lambda1_at_bc", at_bc.lowest_two.second},
                              {"population_n1",
                               gapped_mode_population(1.0, at_bc.lowest_two.second)}};
            write_json_file(detail::join_path(config.out_dir, "spinwave_fit.json"),
                            result.summary);
            emit("spinwave_fit.json");
            break;
        }
        case ExperimentId::jij_profile: {
            require(config.model == ModelKind::ion_chain, "jij_profile: ion_chain model only");
            TrapParams tp = config.trap;
            tp.n = config.sizes.front();
            const InteractionMatrix jm = ion_chain_couplings(tp);
            write_matrix_csv(detail::join_path(config.out_dir, "jij.csv"), jm);
            emit("jij.csv");
            const std::vector<double> prof = coupling_profile(jm);
            {
                std::ofstream f(detail::join_path(config.out_dir, "jij_profile.csv"),
                                std::ios::binary);
                require(f.good(), "cannot open for writing: jij_profile.csv");
                f << "# qcrit profile v1\n# n=" << jm.n() << "\nr,j\n";
                for (std::size_t r = 0; r < prof.size(); ++r)
                    f << (r + 1) << ',' << detail::fmt_double(prof[r]) << "\n";
            }
            emit("jij_profile.csv");
            const PowerLawFit pl = fit_power_law(prof);
            const HybridFit hy = fit_hybrid(prof);
            result.summary = {
                {"n", jm.n()},
                {"kac", jm.kac()},
                {"power_law", {{"exponent", pl.exponent}, {"residual", pl.residual}}},
                {"hybrid",
                 {{"exponent", hy.exponent}, {"decay", hy.decay}, {"residual", hy.residual}}}};
            write_json_file(detail::join_path(config.out_dir, "jij_fits.json"), result.summary);
            emit("jij_fits.json");
            break;
        }
        case ExperimentId::twa_check: {
            const double closed = twa_ensemble_closed_form(config.twa);
            const MonteCarloResult mc =
                twa_ensemble_mc(config.twa, config.twa_samples, config.seed);
            result.summary = {{"closed_form", closed},
                              {"mc_mean", mc.mean},
                              {"mc_stderr", mc.stderr_},
                              {"samples", mc.samples},
                              {"diff_se", (mc.mean - closed) / mc.stderr_}};
            write_json_file(detail::join_path(config.out_dir, "twa.json"), result.summary);
            emit("twa.json");
            break;
        }
    }

    json manifest;
    manifest["tool_version"] = version_string;
    manifest["experiment"] = experiment_name(config.experiment);
    manifest["config"] = config.to_json();
    manifest["config_hash"] = fnv1a(config.to_json().dump());
    manifest["files"] = result.files;
    write_json_file(detail::join_path(config.out_dir, "manifest.json"), manifest);
    result.files.push_back("manifest.json");
    return result;
}

}  // namespace qcrit
