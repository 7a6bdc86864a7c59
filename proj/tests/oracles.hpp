#pragma once

// Test-side landscapes and exhaustive reference classifiers for the
// post-optimization algorithms. Everything here works on a full table of f
// over all subsets, so it shares no code path with the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <tuple>
#include <utility>
#include <vector>

#include "evomir/postopt.hpp"
#include "evomir/rng.hpp"

namespace oracles {

using evomir::postopt::Cycles;
using evomir::postopt::Uid;
using evomir::postopt::UidSet;

// f over subsets of `uids` given as bit masks (bit k = uids[k]).
struct Landscape {
    std::vector<Uid> uids;
    double base = 10000;
    std::vector<double> gain;                           // additive cycle reduction per edit
    std::vector<std::tuple<int, int, double>> pairs;   // extra reduction when both present
    std::vector<std::pair<int, int>> requires_;        // (i, j): i without j fails

    Cycles at_mask(std::uint64_t m) const {
        for (auto [i, j] : requires_) {
            if ((m >> i & 1) && !(m >> j & 1)) return std::nullopt;
        }
        double v = base;
        for (std::size_t k = 0; k < gain.size(); ++k) {
            if (m >> k & 1) v -= gain[k];
        }
        for (auto [i, j, g] : pairs) {
            if ((m >> i & 1) && (m >> j & 1)) v -= g;
        }
        return v;
    }
    std::uint64_t mask_of(const UidSet& s) const {
        std::uint64_t m = 0;
        for (Uid u : s) {
            for (std::size_t k = 0; k < uids.size(); ++k) {
                if (uids[k] == u) m |= std::uint64_t{1} << k;
            }
        }
        return m;
    }
    Cycles operator()(const UidSet& s) const { return at_mask(mask_of(s)); }

    evomir::postopt::FitnessOracle oracle() const {
        return evomir::postopt::FitnessOracle([l = *this](const UidSet& s) { return l(s); });
    }

    std::vector<Cycles> table() const {
        std::vector<Cycles> t(std::size_t{1} << uids.size());
        for (std::uint64_t m = 0; m < t.size(); ++m) t[m] = at_mask(m);
        return t;
    }
};

inline Landscape additive(std::size_t n, evomir::Rng& rng, double max_share = 0.02) {
    Landscape l;
    for (std::size_t k = 0; k < n; ++k) {
        l.uids.push_back(10 + 3 * k);
        l.gain.push_back(l.base * max_share * (0.1 + 0.9 * rng.unit()));
    }
    return l;
}

// Random landscape with no-effect edits, interacting pairs and failures. The
// full set always succeeds.
inline Landscape random_landscape(std::size_t n, evomir::Rng& rng) {
    Landscape l;
    for (std::size_t k = 0; k < n; ++k) {
        l.uids.push_back(1 + 2 * k);
        const double r = rng.unit();
        l.gain.push_back(r < 0.3 ? 0.0 : l.base * 0.03 * rng.unit());
    }
    const int npairs = static_cast<int>(rng.below(3));
    for (int p = 0; p < npairs && n >= 2; ++p) {
        int i = static_cast<int>(rng.below(n)), j = static_cast<int>(rng.below(n));
        if (i != j) l.pairs.emplace_back(i, j, l.base * (rng.unit() * 0.06 - 0.02));
    }
    const int nreq = static_cast<int>(rng.below(3));
    for (int p = 0; p < nreq && n >= 2; ++p) {
        int i = static_cast<int>(rng.below(n)), j = static_cast<int>(rng.below(n));
        if (i != j) l.requires_.emplace_back(i, j);
    }
    return l;
}

inline double rel(double from, double to) { return (from - to) / from; }

// Weak-edit identification read directly off the exhaustive table.
inline UidSet reference_weaks(const std::vector<Cycles>& table, const std::vector<Uid>& uids,
                              const std::vector<Uid>& order, double theta) {
    auto bit = [&](Uid u) {
        for (std::size_t k = 0; k < uids.size(); ++k) {
            if (uids[k] == u) return std::uint64_t{1} << k;
        }
        return std::uint64_t{0};
    };
    const std::uint64_t all = (std::uint64_t{1} << uids.size()) - 1;
    std::uint64_t weak = 0;
    for (Uid e : order) {
        const auto with = table[all & ~weak];
        const auto without = table[all & ~weak & ~bit(e)];
        if (with && without && rel(*without, *with) < theta) weak |= bit(e);
    }
    UidSet out;
    for (std::size_t k = 0; k < uids.size(); ++k) {
        if (weak >> k & 1) out.push_back(uids[k]);
    }
    std::sort(out.begin(), out.end());
    return out;
}

inline UidSet reference_independent(const std::vector<Cycles>& table, const std::vector<Uid>& uids,
                                    const std::vector<Uid>& order, double tol) {
    auto bit = [&](Uid u) {
        for (std::size_t k = 0; k < uids.size(); ++k) {
            if (uids[k] == u) return std::uint64_t{1} << k;
        }
        return std::uint64_t{0};
    };
    const std::uint64_t all = (std::uint64_t{1} << uids.size()) - 1;
    std::uint64_t indep = 0;
    for (Uid e : order) {
        const auto alone = table[bit(e)];
        const auto rest = table[all & ~indep];
        const auto rest_without = table[all & ~indep & ~bit(e)];
        if (!alone || !rest || !rest_without) continue;
        const double incr = rel(*table[0], *alone);
        const double decr = rel(*rest_without, *rest);
        if (std::abs(incr - decr) <= tol) indep |= bit(e);
    }
    UidSet out;
    for (std::size_t k = 0; k < uids.size(); ++k) {
        if (indep >> k & 1) out.push_back(uids[k]);
    }
    std::sort(out.begin(), out.end());
    return out;
}

// Edits that never change f: f(T + e) == f(T) for every T.
inline UidSet no_effect_edits(const std::vector<Cycles>& table, const std::vector<Uid>& uids) {
    UidSet out;
    for (std::size_t k = 0; k < uids.size(); ++k) {
        const std::uint64_t b = std::uint64_t{1} << k;
        bool none = true;
        for (std::uint64_t m = 0; m < table.size(); ++m) {
            if (m & b) continue;
            if (table[m] != table[m | b]) none = false;
        }
        if (none) out.push_back(uids[k]);
    }
    std::sort(out.begin(), out.end());
    return out;
}

// Dependency edges straight from the definition: i -> j iff for every T that
// avoids i and j, adding i to T fails or gains less than theta, where a
// failing T rescued by i counts as an unbounded gain.
inline std::set<std::pair<Uid, Uid>> reference_dependencies(const std::vector<Cycles>& table,
                                                             const std::vector<Uid>& uids, double theta) {
    const std::size_t n = uids.size();
    auto perf = [&](std::uint64_t m) -> std::optional<double> {
        if (!table[m]) return std::nullopt;
        return rel(*table[0], *table[m]);
    };
    std::set<std::pair<Uid, Uid>> out;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            bool dep = true;
            for (std::uint64_t T = 0; T < table.size(); ++T) {
                if ((T >> i & 1) || (T >> j & 1)) continue;
                const auto with = perf(T | (std::uint64_t{1} << i));
                if (!with) continue;
                const auto without = perf(T);
                if (!without || *with - *without >= theta) dep = false;
            }
            if (dep) out.emplace(uids[i], uids[j]);
        }
    }
    return out;
}

}  // namespace oracles
