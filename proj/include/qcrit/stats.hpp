#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "qcrit/common.hpp"

namespace qcrit {

// Measurement record: R repetitions of an N-ion projective readout along one
// axis, entries 0 (down) / 1 (up).
struct ShotSet {
    std::vector<std::vector<std::uint8_t>> shots;
    std::string axis = "x";
    double time = 0.0;

    int repetitions() const { return static_cast<int>(shots.size()); }
    int ions() const { return shots.empty() ? 0 : static_cast<int>(shots[0].size()); }

    void validate() const {
        require(shots.size() >= 2, "shot set needs R >= 2 repetitions");
        const std::size_t n = shots[0].size();
        require(n >= 1, "shot set needs >= 1 ion");
        for (const auto& row : shots) {
            require(row.size() == n, "shot rows must have equal length");
            for (auto b : row) require(b == 0 || b == 1, "shot entries must be 0/1");
        }
    }
};

// Collective-spin value of one shot: sum_i (2 b_i - 1) / 2.
inline double shot_spin(const std::vector<std::uint8_t>& row) {
    double s = 0.0;
    for (auto b : row) s += b ? 0.5 : -0.5;
    return s;
}

// Net-correlator estimator: variance of the per-shot collective spin,
// mean(s^2) - mean(s)^2. Subtracting the squared mean removes any residual
// polarization offset.
inline double correlator_estimate(const ShotSet& set) {
    set.validate();
    double m1 = 0.0, m2 = 0.0;
    for (const auto& row : set.shots) {
        const double s = shot_spin(row);
        m1 += s;
        m2 += s * s;
    }
    const double r = static_cast<double>(set.repetitions());
    m1 /= r;
    m2 /= r;
    return m2 - m1 * m1;
}

// Leave-one-out jackknife standard error of an arbitrary estimator. The
// estimator is called exactly R times, once per omitted repetition, plus
// never on the full set. standard_factor selects the usual (R-1)/R jackknife
// variance; disabling it falls back to the raw variance of the leave-one-out
// estimates (exposed for comparison, not recommended).
inline double jackknife_error(const ShotSet& set,
                              const std::function<double(const ShotSet&)>& estimator,
                              bool standard_factor = true) {
    set.validate();
    const int r = set.repetitions();
    std::vector<double> theta(static_cast<std::size_t>(r));
    ShotSet loo;
    loo.axis = set.axis;
    loo.time = set.time;
    loo.shots.resize(static_cast<std::size_t>(r - 1));
    for (int omit = 0; omit < r; ++omit) {
        int k = 0;
        for (int i = 0; i < r; ++i)
            if (i != omit) loo.shots[static_cast<std::size_t>(k++)] = set.shots[static_cast<std::size_t>(i)];
        theta[static_cast<std::size_t>(omit)] = estimator(loo);
    }
    double mean = 0.0;
    for (double v : theta) mean += v;
    mean /= r;
    double var = 0.0;
    for (double v : theta) var += (v - mean) * (v - mean);
    if (standard_factor)
        var *= static_cast<double>(r - 1) / static_cast<double>(r);
    else
        var /= static_cast<double>(r);
    return std::sqrt(var);
}

// Convenience: correlator estimate plus its jackknife error.
struct EstimateWithError {
    double estimate = 0.0;
    double stderr_ = 0.0;
};

// For the correlator estimator, every leave-one-out value follows from the
// spin totals, so the jackknife runs in O(R) instead of O(R^2). Produces the
// same theta_(i) as the generic path up to summation roundoff.
inline EstimateWithError correlator_with_error(const ShotSet& set) {
    set.validate();
    const int r = set.repetitions();
    std::vector<double> spins(static_cast<std::size_t>(r));
    double s1 = 0.0, s2 = 0.0;
    for (int i = 0; i < r; ++i) {
        const double s = shot_spin(set.shots[static_cast<std::size_t>(i)]);
        spins[static_cast<std::size_t>(i)] = s;
        s1 += s;
        s2 += s * s;
    }
    std::vector<double> theta(static_cast<std::size_t>(r));
    const double rm1 = static_cast<double>(r - 1);
    for (int i = 0; i < r; ++i) {
        const double s = spins[static_cast<std::size_t>(i)];
        const double m1 = (s1 - s) / rm1;
        theta[static_cast<std::size_t>(i)] = (s2 - s * s) / rm1 - m1 * m1;
    }
    double mean = 0.0;
    for (double v : theta) mean += v;
    mean /= r;
    double var = 0.0;
    for (double v : theta) var += (v - mean) * (v - mean);
    var *= rm1 / static_cast<double>(r);

    EstimateWithError out;
    out.estimate = correlator_estimate(set);
    out.stderr_ = std::sqrt(var);
    return out;
}

}  // namespace qcrit
