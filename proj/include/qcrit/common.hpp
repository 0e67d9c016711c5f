#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace qcrit {

inline constexpr const char* version_string = "0.1.0";

// Violated input contract: bad arguments, malformed files, domain errors.
// The CLI maps this to exit code 2.
struct contract_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Numerical failure: non-convergence, tolerance bust, singular system.
// The CLI maps this to exit code 3.
struct numerical_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw contract_error(msg);
}

inline void require_numeric(bool cond, const std::string& msg) {
    if (!cond) throw numerical_error(msg);
}

// Deterministic uniform doubles in [0,1) from the standard 64-bit Mersenne
// engine. std::uniform_real_distribution is implementation-defined, so the
// mapping is done by hand to keep output byte-identical across toolchains.
class SplitRng {
public:
    explicit SplitRng(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ULL) {}

    std::uint64_t next_u64() {
        // xorshift* keeps the stream splittable and trivially portable.
        std::uint64_t x = state_;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        state_ = x;
        return x * 0x2545F4914F6CDD1DULL;
    }

    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Derive an independent stream, e.g. one per sample index.
    SplitRng split(std::uint64_t key) const {
        std::uint64_t mixed = state_ ^ (key + 0x9e3779b97f4a7c15ULL + (state_ << 6) + (state_ >> 2));
        return SplitRng(mixed ? mixed : 1);
    }

private:
    std::uint64_t state_;
};

inline std::vector<double> linspace(double a, double b, int count) {
    require(count >= 2, "linspace needs at least two points");
    std::vector<double> out(static_cast<std::size_t>(count));
    const double step = (b - a) / (count - 1);
    for (int i = 0; i < count; ++i) out[static_cast<std::size_t>(i)] = a + step * i;
    out.back() = b;
    return out;
}

// Least-squares slope and intercept of y against x.
struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
};

inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    require(x.size() == y.size() && x.size() >= 2, "line fit needs >= 2 matched points");
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double det = n * sxx - sx * sx;
    require_numeric(std::abs(det) > 1e-300, "degenerate abscissae in line fit");
    LineFit f;
    f.slope = (n * sxy - sx * sy) / det;
    f.intercept = (sy * sxx - sx * sxy) / det;
    return f;
}

// FNV-1a, used for config fingerprints in run manifests.
inline std::uint64_t fnv1a(const std::string& data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace qcrit
