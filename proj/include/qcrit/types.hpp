#pragma once

#include <string>
#include <vector>

#include "qcrit/common.hpp"

namespace qcrit {

enum class ObservableKind { Cx2, Cy2, Sx, energy };

inline const char* observable_label(ObservableKind k) {
    switch (k) {
        case ObservableKind::Cx2: return "Cx2";
        case ObservableKind::Cy2: return "Cy2";
        case ObservableKind::Sx: return "Sx";
        case ObservableKind::energy: return "energy";
    }
    return "unknown";
}

inline ObservableKind observable_from_label(const std::string& s) {
    if (s == "Cx2") return ObservableKind::Cx2;
    if (s == "Cy2") return ObservableKind::Cy2;
    if (s == "Sx") return ObservableKind::Sx;
    if (s == "energy") return ObservableKind::energy;
    throw contract_error("unknown observable label: " + s);
}

// Time series of one scalar observable for one system size.
// stderrs may be empty (exact simulation) or match values elementwise.
struct ObservableSeries {
    std::vector<double> times;
    std::vector<double> values;
    std::vector<double> stderrs;
    int n = 0;            // number of spins
    double kac = 1.0;     // coupling scale multiplying the time axis
    std::string label;
    bool shot_noise = false;  // values estimated from sampled measurements

    void validate() const {
        require(n >= 1, "series: n >= 1");
        require(times.size() == values.size() && times.size() >= 2,
                "series: times/values must match, length >= 2");
        require(stderrs.empty() || stderrs.size() == values.size(),
                "series: stderr length must match values");
        for (std::size_t i = 1; i < times.size(); ++i)
            require(times[i] > times[i - 1], "series: times strictly increasing");
    }
};

struct PeakInfo {
    int index = -1;
    double time = 0.0;
    double value = 0.0;
    bool is_local_max = false;   // strict 3-point maximum found
    bool at_boundary = false;    // fallback hit the first/last sample
};

// First strict 3-point local maximum. Falls back to the global maximum
// (flagged) when no interior peak exists; a boundary global maximum is
// flagged as such. Series carrying shot noise are median-filtered (width 3)
// before peak detection; exact series are scanned raw.
inline PeakInfo find_peak(const ObservableSeries& s) {
    s.validate();
    const std::size_t m = s.values.size();
    std::vector<double> v = s.values;
    if (s.shot_noise && m >= 3) {
        for (std::size_t i = 1; i + 1 < m; ++i) {
            double a = s.values[i - 1], b = s.values[i], c = s.values[i + 1];
            double lo = std::min(a, std::min(b, c));
            double hi = std::max(a, std::max(b, c));
            v[i] = a + b + c - lo - hi;
        }
    }
    PeakInfo out;
    for (std::size_t i = 1; i + 1 < m; ++i) {
        if (v[i] > v[i - 1] && v[i] > v[i + 1]) {
            out.index = static_cast<int>(i);
            out.is_local_max = true;
            break;
        }
    }
    if (!out.is_local_max) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < m; ++i)
            if (v[i] > v[best]) best = i;
        out.index = static_cast<int>(best);
        out.at_boundary = (best == 0 || best + 1 == m);
    }
    out.time = s.times[static_cast<std::size_t>(out.index)];
    out.value = s.values[static_cast<std::size_t>(out.index)];
    return out;
}

// Index one past the first local minimum that follows the first local
// maximum; returns the full length when the pattern is absent.
inline std::size_t first_min_after_first_max(const std::vector<double>& v) {
    std::size_t imax = 0;
    bool have_max = false;
    for (std::size_t i = 1; i + 1 < v.size(); ++i) {
        if (v[i] > v[i - 1] && v[i] > v[i + 1]) {
            imax = i;
            have_max = true;
            break;
        }
    }
    if (!have_max) return v.size();
    for (std::size_t i = imax + 1; i + 1 < v.size(); ++i)
        if (v[i] < v[i - 1] && v[i] < v[i + 1]) return i + 1;
    return v.size();
}

}  // namespace qcrit
