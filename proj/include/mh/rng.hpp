#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace mh {

/// Self-contained splitmix64 generator. Used instead of <random> so that
/// streams are bit-identical across standard libraries, which the
/// reproducibility contract of the scenario runner depends on.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    /// Standard normal via Box-Muller (always consumes two uniforms).
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    std::vector<double> normal_vec(int n) {
        std::vector<double> v(static_cast<std::size_t>(n));
        for (auto& x : v) x = normal();
        return v;
    }

    /// Uniform direction on the unit sphere in R^n.
    std::vector<double> unit_vec(int n) {
        for (;;) {
            std::vector<double> v = normal_vec(n);
            double s = 0;
            for (double x : v) s += x * x;
            if (s > 1e-12) {
                double inv = 1.0 / std::sqrt(s);
                for (double& x : v) x *= inv;
                return v;
            }
        }
    }

private:
    std::uint64_t state_;
};

}  // namespace mh
