#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "qcrit/interaction.hpp"
#include "qcrit/spinwave.hpp"

using namespace qcrit;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("fourier coupling at zero momentum fixes the collective scale", "[spinwave]") {
    // Jt_0 / Jbar = (n-1)/n by construction, independent of the decay power.
    for (double p : {0.0, 0.7, 1.5})
        for (int n : {11, 101, 1001}) {
            const double ratio = fourier_coupling(p, n, 0.0) / kac_coupling_periodic(p, n);
            CHECK_THAT(ratio, WithinRel((n - 1.0) / n, 1e-14));
        }

    // Uniform couplings: the full ring sum of cos vanishes, so the value at
    // the first nonzero momentum is exactly -1.
    for (int n : {11, 101})
        CHECK_THAT(fourier_coupling(0.0, n, 2.0 * M_PI / n), WithinAbs(-1.0, 1e-12));

    // Even in momentum.
    CHECK(fourier_coupling(0.7, 101, 0.4) == fourier_coupling(0.7, 101, -0.4));

    CHECK_THROWS_AS(fourier_coupling(0.7, 100, 0.0), contract_error);  // even n
    CHECK_THROWS_AS(fourier_coupling(0.7, 1, 0.0), contract_error);
    CHECK_THROWS_AS(fourier_coupling(-0.5, 101, 0.0), contract_error);
}

TEST_CASE("soft-mode frequency scales as 1/sqrt(n) at the critical field", "[spinwave]") {
    // At b = 1 the k = 0 mode has omega^2 = 1 - (n-1)/n = 1/n exactly.
    for (int n : {101, 401, 1601}) {
        const Dispersion d = dispersion_periodic(1.0, 0.7, n);
        CHECK(d.valid);
        CHECK_THAT(d.omega[0] * std::sqrt(static_cast<double>(n)), WithinRel(1.0, 1e-12));
    }
}

TEST_CASE("dispersion gap at the first momentum, frozen sequences", "[spinwave]") {
    // Slow decay (p = 0.5): the k_1 gap survives the large-n limit.
    struct Row {
        int n;
        double w1;
    };
    const Row slow[] = {{101, 0.837079267194555}, {401, 0.812958862728320},
                        {1601, 0.801763315847368}};
    for (const auto& r : slow)
        CHECK_THAT(dispersion_periodic(1.0, 0.5, r.n).omega[1], WithinRel(r.w1, 1e-12));
    CHECK(slow[2].w1 > 0.75);

    // Fast decay (p = 2): the same gap closes roughly as n^{-1/2}.
    const Row fast[] = {{101, 0.235316416690148}, {401, 0.118487042063568},
                        {1601, 0.059348158998086}};
    for (const auto& r : fast)
        CHECK_THAT(dispersion_periodic(1.0, 2.0, r.n).omega[1], WithinRel(r.w1, 1e-12));
    CHECK_THAT(fast[0].w1 / fast[1].w1, WithinAbs(2.0, 0.02));
    CHECK_THAT(fast[1].w1 / fast[2].w1, WithinAbs(2.0, 0.02));
}

TEST_CASE("dispersion far from the transition approaches the bare field", "[spinwave]") {
    const Dispersion d = dispersion_periodic(2.0, 0.7, 4001);
    CHECK_THAT(d.omega[0], WithinRel(1.414390283843622, 1e-12));
    CHECK_THAT(d.omega[0], WithinAbs(std::sqrt(2.0), 2e-4));
}

TEST_CASE("Bogoliubov angle at zero momentum", "[spinwave]") {
    // tanh(2 theta_0) = ((n-1)/2n) / (b - (n-1)/2n); at b = 1 this reduces
    // to (n-1)/(n+1) for every decay power.
    const Dispersion d = dispersion_periodic(1.0, 0.7, 101);
    CHECK_THAT(d.theta[0], WithinRel(0.5 * std::atanh(100.0 / 102.0), 1e-12));

    // Below the transition the angle diverges and is reported as NaN.
    const Dispersion inv = dispersion_periodic(0.9, 0.7, 101);
    CHECK_FALSE(inv.valid);
    CHECK(inv.omega[0] == 0.0);
    CHECK(std::isnan(inv.theta[0]));

    CHECK_THROWS_AS(dispersion_periodic(0.0, 0.7, 101), contract_error);
    CHECK_THROWS_AS(dispersion_periodic(-1.0, 0.7, 101), contract_error);
}

TEST_CASE("real-space spectrum matches the Fourier diagonalization", "[spinwave]") {
    // Uniform couplings are circulant, so the open-chain matrix coincides
    // with the ring and both routes must agree mode by mode.
    const int n = 31;
    const double b = 1.3;
    const Dispersion d = dispersion_periodic(b, 0.0, n);
    const BogoliubovSpectrum sp = spectrum_realspace(uniform_matrix(n), b);
    REQUIRE(sp.valid);
    std::vector<double> w = d.omega;
    std::sort(w.begin(), w.end());
    for (int i = 0; i < n; ++i)
        CHECK_THAT(sp.energies[static_cast<std::size_t>(i)],
                   WithinAbs(w[static_cast<std::size_t>(i)], 1e-12));
}

TEST_CASE("real-space spectrum basics", "[spinwave]") {
    const InteractionMatrix j = power_law_matrix(50, 0.9, 1.0);
    const BogoliubovSpectrum sp = spectrum_realspace(j, 1.2);
    REQUIRE(sp.energies.size() == 50);
    CHECK(sp.valid);
    CHECK(std::is_sorted(sp.energies.begin(), sp.energies.end()));
    CHECK(sp.lowest_two.first == sp.energies[0]);
    CHECK(sp.lowest_two.second == sp.energies[1]);
    CHECK_THAT(sp.lowest_two.first, WithinRel(0.494239056436, 1e-9));
    CHECK_THAT(sp.lowest_two.second, WithinRel(0.845343657666, 1e-9));

    // Below the transition the softest squared energy goes negative and the
    // description is flagged invalid.
    const BogoliubovSpectrum below = spectrum_realspace(j, 0.5);
    CHECK_FALSE(below.valid);
    CHECK(below.min_sq < 0.0);
    CHECK(below.energies[0] == 0.0);

    // min_sq grows monotonically with the field on the scanned window.
    double prev = -1e300;
    for (double b : {0.5, 0.8, 1.0, 1.2, 1.5}) {
        const double cur = spectrum_realspace(j, b).min_sq;
        CHECK(cur > prev);
        prev = cur;
    }

    CHECK_THROWS_AS(spectrum_realspace(j, std::numeric_limits<double>::infinity()),
                    contract_error);
}

TEST_CASE("large-field limit of the lowest mode", "[spinwave]") {
    const BogoliubovSpectrum sp = spectrum_realspace(power_law_matrix(50, 0.9, 1.0), 50.0);
    CHECK_THAT(sp.energies[0] / 50.0, WithinRel(0.989985456500, 1e-9));
    CHECK(sp.energies[0] / 50.0 < 1.0);
    CHECK(sp.energies.back() / 50.0 > 1.0);
}

TEST_CASE("critical field of the uniform chain is (n-1)/n", "[spinwave]") {
    // Soft mode of the collective model: omega^2 = b(b - (n-1)/n).
    const double bc = critical_field(uniform_matrix(51), 3.0, 1e-10);
    CHECK_THAT(bc, WithinAbs(50.0 / 51.0, 1e-9));
}

TEST_CASE("critical field of the power-law chain, frozen values", "[spinwave]") {
    struct Row {
        int n;
        double p;
        double bc;
        double lambda1;
    };
    const Row rows[] = {
        {50, 0.9, 0.996439795876, 0.624939444260},
        {100, 0.9, 1.004993654171, 0.586857898868},
        {50, 2.0, 1.004824551950, 0.248608260273},
        {100, 2.0, 1.006222048912, 0.175836089042},
    };
    for (const auto& r : rows) {
        const InteractionMatrix j = power_law_matrix(r.n, r.p, 1.0);
        const double bc = critical_field(j, 3.0, 1e-10);
        CHECK_THAT(bc, WithinAbs(r.bc, 1e-9));
        const BogoliubovSpectrum sp = spectrum_realspace(j, bc);
        // The next mode stays gapped where the softest one touches zero.
        CHECK(sp.energies[0] < 1e-4);
        CHECK_THAT(sp.lowest_two.second, WithinRel(r.lambda1, 1e-8));
    }
}

TEST_CASE("critical field is invariant under coupling rescaling", "[spinwave]") {
    // b is measured in units of the collective coupling, so scaling every
    // J_ij by a constant must not move the transition.
    const double bc1 = critical_field(power_law_matrix(40, 0.9, 1.0), 3.0, 1e-9);
    const double bc3 = critical_field(power_law_matrix(40, 0.9, 3.0), 3.0, 1e-9);
    CHECK_THAT(bc3, WithinRel(bc1, 1e-10));
}

TEST_CASE("critical field requires a sign change in the bracket", "[spinwave]") {
    CHECK_THROWS_AS(critical_field(uniform_matrix(51), 0.5), numerical_error);
    CHECK_THROWS_AS(critical_field(uniform_matrix(51), -1.0), contract_error);
    CHECK_THROWS_AS(critical_field(uniform_matrix(51), 3.0, 0.0), contract_error);
}

TEST_CASE("population deposited in a gapped mode by the quench", "[spinwave]") {
    // Matched frequencies: no excitation.
    CHECK(gapped_mode_population(0.75, 1.5) == 0.0);

    // n + 1/2 = (ratio + 1/ratio)/4; ratio 1/4 gives n = 9/16.
    CHECK(gapped_mode_population(1.0, 0.5) == 0.5625);

    // Symmetric under ratio inversion (ratios 1/4 and 4).
    CHECK(gapped_mode_population(2.0, 1.0) == gapped_mode_population(2.0, 16.0));

    CHECK_THROWS_AS(gapped_mode_population(0.0, 1.0), contract_error);
    CHECK_THROWS_AS(gapped_mode_population(1.0, 0.0), contract_error);
    CHECK_THROWS_AS(gapped_mode_population(-1.0, 1.0), contract_error);
}
