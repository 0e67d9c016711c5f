#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "qcrit/pipeline.hpp"

using namespace qcrit;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

namespace fs = std::filesystem;

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "qcrit_pipeline_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    REQUIRE(f.good());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("experiment and model names round-trip", "[pipeline]") {
    for (ExperimentId id :
         {ExperimentId::order_parameter, ExperimentId::single_quench_collapse,
          ExperimentId::double_quench_collapse, ExperimentId::spinwave_gap,
          ExperimentId::jij_profile, ExperimentId::twa_check})
        CHECK(experiment_from_name(experiment_name(id)) == id);
    for (ModelKind m : {ModelKind::lmg, ModelKind::power_law, ModelKind::ion_chain})
        CHECK(model_from_name(model_name(m)) == m);
    CHECK_THROWS_AS(experiment_from_name("nope"), contract_error);
    CHECK_THROWS_AS(model_from_name("nope"), contract_error);
}

TEST_CASE("experiment config serializes losslessly", "[pipeline]") {
    ExperimentConfig c;
    c.experiment = ExperimentId::double_quench_collapse;
    c.model = ModelKind::power_law;
    c.sizes = {12, 24};
    c.p = 1.3;
    c.trap.n = 9;
    c.trap.detuning_hz = 1.25e5;
    c.b = 1.1;
    c.fields = {0.5, 0.7};
    c.dt = 0.02;
    c.tmax = 7.5;
    c.tmax_factor = 5.0;
    c.scaled_switch = false;
    c.switch_constant = 0.8;
    c.dt2 = 0.005;
    c.t2max_factor = 2.5;
    c.collapse_init = {0.4, 0.2};
    c.window_first_min = false;
    c.shots = 250;
    c.bitflip_eps = 0.05;
    c.twa = {0.9, 1.1, 0.6, 1.2};
    c.twa_samples = 777;
    c.seed = 99;
    c.out_dir = "somewhere";

    const json j = c.to_json();
    CHECK_FALSE(j.contains("out_dir"));  // location must not affect the config hash

    const ExperimentConfig r = ExperimentConfig::from_json(j);
    CHECK(r.experiment == c.experiment);
    CHECK(r.model == c.model);
    CHECK(r.sizes == c.sizes);
    CHECK(r.p == c.p);
    CHECK(r.trap.n == c.trap.n);
    CHECK(r.trap.detuning_hz == c.trap.detuning_hz);
    CHECK(r.b == c.b);
    CHECK(r.fields == c.fields);
    CHECK(r.dt == c.dt);
    CHECK(r.tmax == c.tmax);
    CHECK(r.tmax_factor == c.tmax_factor);
    CHECK(r.scaled_switch == c.scaled_switch);
    CHECK(r.switch_constant == c.switch_constant);
    CHECK(r.dt2 == c.dt2);
    CHECK(r.t2max_factor == c.t2max_factor);
    CHECK(r.collapse_init == c.collapse_init);
    CHECK(r.window_first_min == c.window_first_min);
    CHECK(r.shots == c.shots);
    CHECK(r.bitflip_eps == c.bitflip_eps);
    CHECK(r.twa.r == c.twa.r);
    CHECK(r.twa.u == c.twa.u);
    CHECK(r.twa.d == c.twa.d);
    CHECK(r.twa_samples == c.twa_samples);
    CHECK(r.seed == c.seed);
}

TEST_CASE("experiment config input contract", "[pipeline]") {
    // Explicit experiment and seed are mandatory: a silently defaulted seed
    // would undermine reproducibility claims.
    CHECK_THROWS_AS(ExperimentConfig::from_json(json{{"seed", 1}}), contract_error);
    CHECK_THROWS_AS(ExperimentConfig::from_json(json{{"experiment", "twa_check"}}),
                    contract_error);
    CHECK_NOTHROW(ExperimentConfig::from_json(json{{"experiment", "twa_check"}, {"seed", 1}}));

    ExperimentConfig c;
    c.sizes.clear();
    CHECK_THROWS_AS(c.validate(), contract_error);
    c = ExperimentConfig{};
    c.sizes = {1};
    CHECK_THROWS_AS(c.validate(), contract_error);
    c = ExperimentConfig{};
    c.dt2 = 0.0;
    CHECK_THROWS_AS(c.validate(), contract_error);
    c = ExperimentConfig{};
    c.bitflip_eps = 1.5;
    CHECK_THROWS_AS(c.validate(), contract_error);
    c = ExperimentConfig{};
    c.out_dir.clear();
    CHECK_THROWS_AS(c.validate(), contract_error);
}

TEST_CASE("correlation profile of the uniform critical quench", "[pipeline]") {
    HamiltonianSpec spec;
    spec.j = uniform_matrix(10, 1.0 / 10.0);  // collective coupling 1
    spec.gamma_x = 1.0;
    spec.bz = 1.0;
    const CorrelationProfile cp = correlation_profile(spec, 0.05, 12.0);
    CHECK_THAT(cp.t_peak, WithinAbs(1.3, 1e-9));
    REQUIRE(cp.c.size() == 10);
    CHECK(cp.c[0] == 1.0);
    // Permutation symmetry makes the profile flat across separations.
    for (std::size_t r = 1; r < cp.c.size(); ++r)
        CHECK_THAT(cp.c[r], WithinRel(0.294567540049448, 1e-9));
}

TEST_CASE("critical correlations outrun the bare couplings", "[pipeline]") {
    // Power-law chain at the collective critical field: the normalized
    // correlation profile C(r)/C(1) must sit at or above J(r)/J(1) for every
    // separation; the quench spreads correlations beyond the interaction range.
    HamiltonianSpec spec;
    spec.j = power_law_matrix(12, 0.9, 1.0);
    spec.gamma_x = 1.0;
    spec.bz = 1.0;
    spec.kac_normalized = true;
    const CorrelationProfile cp = correlation_profile(spec, 0.05, 12.0);
    CHECK_THAT(cp.t_peak, WithinAbs(1.35, 1e-9));
    REQUIRE(cp.c.size() == 12);
    CHECK_THAT(cp.c[1], WithinRel(0.267287035792, 1e-8));
    CHECK_THAT(cp.c[11], WithinRel(0.147900193887, 1e-8));

    const std::vector<double> prof = coupling_profile(spec.j);
    for (std::size_t r = 2; r < cp.c.size(); ++r) {
        const double c_ratio = cp.c[r] / cp.c[1];
        const double j_ratio = prof[r - 1] / prof[0];
        CHECK(c_ratio >= j_ratio);
    }
}

TEST_CASE("correlation profile input contract", "[pipeline]") {
    HamiltonianSpec big;
    big.j = power_law_matrix(18, 0.9, 1.0);  // above the full-basis cap of 16
    big.gamma_x = 1.0;
    big.bz = 1.0;
    CHECK_THROWS_AS(correlation_profile(big, 0.05, 12.0), contract_error);

    HamiltonianSpec ok;
    ok.j = uniform_matrix(6, 1.0 / 6.0);
    ok.gamma_x = 1.0;
    ok.bz = 1.0;
    CHECK_THROWS_AS(correlation_profile(ok, 0.05, 0.01), contract_error);
    CHECK_THROWS_AS(correlation_profile(ok, -0.05, 12.0), contract_error);
}

TEST_CASE("twa experiment writes byte-identical bundles under one seed", "[pipeline]") {
    ExperimentConfig c;
    c.experiment = ExperimentId::twa_check;
    c.twa_samples = 20000;
    c.seed = 7;

    const fs::path d1 = fresh_dir("twa_a"), d2 = fresh_dir("twa_b");
    c.out_dir = d1.string();
    const ExperimentResult r1 = run_experiment(c);
    c.out_dir = d2.string();
    const ExperimentResult r2 = run_experiment(c);

    REQUIRE(r1.files == r2.files);
    REQUIRE(r1.files.back() == "manifest.json");
    for (const std::string& name : r1.files) CHECK(slurp(d1 / name) == slurp(d2 / name));

    const json m1 = read_json_file((d1 / "manifest.json").string());
    const json m2 = read_json_file((d2 / "manifest.json").string());
    CHECK(m1.at("config_hash") == m2.at("config_hash"));
    CHECK(m1.at("tool_version") == version_string);

    // Every listed file exists, and the listing covers the bundle.
    for (const auto& f : m1.at("files")) CHECK(fs::exists(d1 / f.get<std::string>()));

    // The MC estimate sits within a few standard errors of the closed form.
    const json twa = read_json_file((d1 / "twa.json").string());
    CHECK(std::abs(twa.at("diff_se").get<double>()) < 4.0);

    // A different seed changes both the stream and the config hash.
    c.seed = 8;
    c.out_dir = fresh_dir("twa_c").string();
    const ExperimentResult r3 = run_experiment(c);
    const json m3 = read_json_file((fs::path(c.out_dir) / "manifest.json").string());
    CHECK(m3.at("config_hash") != m1.at("config_hash"));
    CHECK(read_json_file((fs::path(c.out_dir) / "twa.json").string()).at("mc_mean") !=
          twa.at("mc_mean"));
}

TEST_CASE("ion-chain profile experiment", "[pipeline]") {
    ExperimentConfig c;
    c.experiment = ExperimentId::jij_profile;
    c.model = ModelKind::ion_chain;
    c.sizes = {10};
    c.seed = 1;

    const fs::path d1 = fresh_dir("jij_a"), d2 = fresh_dir("jij_b");
    c.out_dir = d1.string();
    const ExperimentResult r1 = run_experiment(c);
    c.out_dir = d2.string();
    run_experiment(c);
    for (const std::string& name : r1.files) CHECK(slurp(d1 / name) == slurp(d2 / name));

    const InteractionMatrix jm = read_matrix_csv((d1 / "jij.csv").string());
    CHECK(jm.n() == 10);  // sizes[0] overrides the trap ion count
    CHECK(jm.kac() > 0.0);

    const json fits = read_json_file((d1 / "jij_fits.json").string());
    CHECK(fits.at("n").get<int>() == 10);
    const double p_fit = fits.at("power_law").at("exponent").get<double>();
    CHECK(p_fit > 0.5);
    CHECK(p_fit < 1.5);
    // The two-parameter model must beat the pure power law on its own data.
    CHECK(fits.at("hybrid").at("residual").get<double>() <
          fits.at("power_law").at("residual").get<double>());

    // Profile file: one row per separation 1 .. n-1.
    std::istringstream prof(slurp(d1 / "jij_profile.csv"));
    std::string line;
    int rows = 0;
    while (std::getline(prof, line))
        if (!line.empty() && line[0] != '#' && line != "r,j") ++rows;
    CHECK(rows == 9);

    // Wrong model is an input error.
    c.model = ModelKind::lmg;
    CHECK_THROWS_AS(run_experiment(c), contract_error);
}

TEST_CASE("spinwave-gap experiment reproduces the frozen transition point", "[pipeline]") {
    ExperimentConfig c;
    c.experiment = ExperimentId::spinwave_gap;
    c.model = ModelKind::power_law;
    c.p = 0.9;
    c.sizes = {50};
    c.seed = 1;
    c.out_dir = fresh_dir("swgap").string();
    const ExperimentResult r = run_experiment(c);

    const json fit = read_json_file((fs::path(c.out_dir) / "spinwave_fit.json").string());
    CHECK(fit.at("n").get<int>() == 50);
    CHECK_THAT(fit.at("b_c").get<double>(), WithinAbs(0.996439795876, 1e-6));
    const double lambda1 = fit.at("lambda1_at_bc").get<double>();
    CHECK_THAT(lambda1, WithinRel(0.624939444260, 1e-5));
    CHECK_THAT(fit.at("population_n1").get<double>(),
               WithinRel(gapped_mode_population(1.0, lambda1), 1e-12));

    // Scan file covers the default grid (51 fields).
    std::istringstream csv(slurp(fs::path(c.out_dir) / "spinwave_gap.csv"));
    std::string line;
    int rows = 0;
    bool saw_invalid = false, saw_valid = false;
    while (std::getline(csv, line)) {
        if (line.empty() || line[0] == '#' || line.rfind("b,", 0) == 0) continue;
        ++rows;
        if (line.back() == '0') saw_invalid = true;
        if (line.back() == '1') saw_valid = true;
    }
    CHECK(rows == 51);
    CHECK(saw_invalid);  // grid starts below the transition
    CHECK(saw_valid);
}

TEST_CASE("single-quench collapse experiment wiring", "[pipeline]") {
    ExperimentConfig c;
    c.experiment = ExperimentId::single_quench_collapse;
    c.sizes = {32, 48, 64};
    c.seed = 1;
    c.out_dir = fresh_dir("sq").string();
    const ExperimentResult r = run_experiment(c);

    const std::vector<std::string> expect{"quench_Cx2_N32.csv", "quench_Cx2_N48.csv",
                                          "quench_Cx2_N64.csv", "collapse.json",
                                          "manifest.json"};
    CHECK(r.files == expect);

    const ObservableSeries s = read_series_csv((fs::path(c.out_dir) / expect[1]).string());
    CHECK(s.n == 48);
    CHECK(s.kac == 1.0);
    CHECK(s.label == "Cx2");
    CHECK_THAT(s.values.front(), WithinRel(12.0, 1e-10));  // N/4 polarized start

    const json col = read_json_file((fs::path(c.out_dir) / "collapse.json").string());
    CHECK(col.at("collapse").at("converged").get<bool>());
    CHECK(col.at("collapse").at("s_min").get<double>() >= 0.0);
    CHECK(col.contains("peak_fit"));

    const json manifest = read_json_file((fs::path(c.out_dir) / "manifest.json").string());
    const auto listed = manifest.at("files").get<std::vector<std::string>>();
    CHECK(listed == std::vector<std::string>(expect.begin(), expect.end() - 1));
}

TEST_CASE("order-parameter experiment locates the dynamical transition", "[pipeline]") {
    ExperimentConfig c;
    c.experiment = ExperimentId::order_parameter;
    c.sizes = {50};
    c.seed = 1;
    c.out_dir = fresh_dir("op").string();
    const ExperimentResult r = run_experiment(c);

    const json fit = read_json_file((fs::path(c.out_dir) / "order_fit.json").string());
    const json row = fit.at("fits").at(0);
    CHECK(row.at("n").get<int>() == 50);
    const double b_c = row.at("b_c").get<double>();
    const double d = row.at("d").get<double>();
    CHECK(b_c > 0.95);
    CHECK(b_c < 1.00);
    CHECK(d > 0.30);
    CHECK(d < 0.40);
    CHECK(row.at("d_b_c").get<double>() > 0.0);

    std::istringstream csv(slurp(fs::path(c.out_dir) / "order_parameter_N50.csv"));
    std::string line;
    int rows = 0;
    while (std::getline(csv, line))
        if (!line.empty() && line[0] != '#' && line != "b,m2") ++rows;
    CHECK(rows == 40);

    // Non-collective models are rejected for this experiment.
    c.model = ModelKind::power_law;
    CHECK_THROWS_AS(run_experiment(c), contract_error);
}
