#include "smlab/multiplier.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace smlab {

namespace {

long floor_div(long a, long b)
{
    long q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0)))
        --q;
    return q;
}

}  // namespace

TilingSet tile(int N, std::vector<long> F, long window_lo, long window_hi)
{
    if (N < 0 || N > 12)
        throw std::invalid_argument("tiling level out of range");
    std::sort(F.begin(), F.end());
    F.erase(std::unique(F.begin(), F.end()), F.end());
    if (F.empty())
        throw std::invalid_argument("tiling needs a nonempty F");
    if (F.size() > (std::size_t{1} << N))
        throw std::invalid_argument("Car(F) exceeds 2^N");
    if (window_hi < window_lo)
        throw std::invalid_argument("empty tiling window");

    TilingSet t;
    t.N = N;
    t.F = F;
    t.period = 1L << (2 * (N + 1));
    t.window_lo = window_lo;
    t.window_hi = window_hi;
    t.i_lo = floor_div(window_lo, t.period) - 1;
    const long i_hi = floor_div(window_hi, t.period) + 1;

    std::vector<long> occupied;  // sorted
    for (long i = t.i_lo; i <= i_hi; ++i) {
        bool placed = false;
        for (long off = 0; off < t.period && !placed; ++off) {
            const long b = i * t.period + off;
            bool clash = false;
            for (long f : F)
                if (std::binary_search(occupied.begin(), occupied.end(), b + f)) {
                    clash = true;
                    break;
                }
            if (clash)
                continue;
            t.b.push_back(b);
            for (long f : F)
                occupied.insert(std::upper_bound(occupied.begin(), occupied.end(), b + f), b + f);
            placed = true;
        }
        if (!placed)
            throw std::runtime_error("no admissible tiling offset at i=" + std::to_string(i));
    }
    return t;
}

TilingViolations TilingSet::verify() const
{
    TilingViolations v;
    std::vector<long> pts;
    for (long b0 : b)
        for (long f : F)
            pts.push_back(b0 + f);
    std::sort(pts.begin(), pts.end());
    for (std::size_t i = 1; i < pts.size(); ++i)
        if (pts[i] == pts[i - 1])
            ++v.disjointness;

    std::vector<long> sorted_b = b;
    std::sort(sorted_b.begin(), sorted_b.end());
    for (long x = window_lo; x <= window_hi; ++x) {
        // Nearest b on either side.
        auto it = std::lower_bound(sorted_b.begin(), sorted_b.end(), x);
        long best = std::numeric_limits<long>::max();
        if (it != sorted_b.end())
            best = std::min(best, *it - x);
        if (it != sorted_b.begin())
            best = std::min(best, x - *std::prev(it));
        if (best > period)
            ++v.coverage;
    }

    for (std::size_t idx = 0; idx < b.size(); ++idx) {
        const long i = i_lo + static_cast<long>(idx);
        if (b[idx] < i * period || b[idx] >= (i + 1) * period)
            ++v.placement;
    }
    return v;
}

nlohmann::json TilingSet::to_json() const
{
    const TilingViolations v = verify();
    return {{"N", N},
            {"F", F},
            {"period", period},
            {"i_lo", i_lo},
            {"b", b},
            {"window", {window_lo, window_hi}},
            {"violations", {{"disjointness", v.disjointness}, {"coverage", v.coverage}, {"placement", v.placement}}}};
}

}  // namespace smlab
