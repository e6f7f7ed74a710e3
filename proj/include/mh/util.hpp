#pragma once

#include <cstdio>
#include <functional>
#include <string>
#include <thread>
#include <vector>

namespace mh {

/// Fixed 17-significant-digit formatting for reproducible numeric output.
inline std::string g17(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

inline std::string g17(const std::vector<double>& v) {
    std::string s = "(";
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ",";
        s += g17(v[i]);
    }
    s += ")";
    return s;
}

/// Chunked parallel loop. Results must be written to per-index slots so the
/// outcome does not depend on thread scheduling.
inline void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& fn) {
    if (workers <= 1 || count < 2) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    int w = std::min<int>(workers, static_cast<int>(count));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(w));
    std::size_t chunk = (count + static_cast<std::size_t>(w) - 1) / static_cast<std::size_t>(w);
    for (int t = 0; t < w; ++t) {
        std::size_t a = static_cast<std::size_t>(t) * chunk;
        std::size_t b = std::min(count, a + chunk);
        if (a >= b) break;
        pool.emplace_back([a, b, &fn] {
            for (std::size_t i = a; i < b; ++i) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace mh
