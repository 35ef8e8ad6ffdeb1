#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pruw/rational.hpp"

namespace pruw::planner {

enum class Parity { even, odd };

/// One directly-achievable storage/cost operating point: replicate each
/// section across r databases and code K submodel symbols together, giving
/// per-database storage fraction mu = r/(N*K) at total cost `cost`.
struct BasicPoint {
    int r = 0;
    int k = 0;
    Rational mu;
    Rational cost;
    Parity parity = Parity::even;
};

struct HullVertex {
    Rational mu;
    Rational cost;
    int r = 0;
    int k = 0;
};

/// Piecewise-linear lower envelope of achievable points, vertices strictly
/// increasing in mu with strictly convex turns (collinear vertices dropped).
struct HullCurve {
    std::vector<HullVertex> vertices;

    Rational min_mu() const { return vertices.front().mu; }
    Rational max_mu() const { return vertices.back().mu; }

    /// Linear interpolation between vertices; nullopt outside [min_mu, max_mu].
    std::optional<Rational> eval(const Rational& mu) const {
        if (vertices.empty() || mu < min_mu() || mu > max_mu()) return std::nullopt;
        for (std::size_t i = 0; i + 1 < vertices.size(); ++i) {
            const auto& a = vertices[i];
            const auto& b = vertices[i + 1];
            if (mu >= a.mu && mu <= b.mu) {
                Rational t = (mu - a.mu) / (b.mu - a.mu);
                return a.cost + t * (b.cost - a.cost);
            }
        }
        return vertices.back().cost;
    }
};

struct PlanPart {
    int r = 0;
    int k = 0;
    Rational fraction;
};

/// Hybrid storage decision for (N, mu): one scheme, or two adjacent hull
/// schemes memory-shared in proportions summing to 1.
struct AllocationPlan {
    int num_dbs = 0;
    Rational mu;
    std::vector<PlanPart> parts;
    Rational predicted_cost;
};

inline bool feasible(int r, int k) {
    if (k < 1 || r < 4) return false;
    const bool even = (r - k - 1) % 2 == 0;
    return even ? k <= r - 3 : k <= r - 4;
}

/// Storage-noise split for one scheme: returns (noise degree x, subpacketization y)
/// with r = y + x + K + 1 and x >= y >= 1.
inline std::pair<int, int> optimal_x(int r, int k) {
    if (!feasible(r, k))
        fail(Errc::infeasible_params, "no subpacketization >= 1 for r=" + std::to_string(r) + ", K=" + std::to_string(k));
    if ((r - k - 1) % 2 == 0) {
        int x = (r - k - 1) / 2;
        return {x, x};
    }
    int x = (r - k) / 2;
    return {x, x - 1};
}

inline Parity parity_of(int r, int k) { return (r - k - 1) % 2 == 0 ? Parity::even : Parity::odd; }

/// Total (read + write) cost of the single scheme at (r, K), normalized per
/// retrieved symbol.
inline Rational total_cost(int r, int k) {
    if (!feasible(r, k))
        fail(Errc::infeasible_params, "infeasible scheme r=" + std::to_string(r) + ", K=" + std::to_string(k));
    if (parity_of(r, k) == Parity::even) return Rational(4 * r, r - k - 1);
    return Rational(4 * r - 2, r - k - 2);
}

inline std::vector<BasicPoint> enumerate_basic_points(int num_dbs, bool include_odd) {
    if (num_dbs < 4) fail(Errc::too_few_databases, "need at least 4 databases, got " + std::to_string(num_dbs));
    std::vector<BasicPoint> pts;
    for (int r = 4; r <= num_dbs; ++r) {
        for (int k = 1; k <= r - 3; ++k) {
            if (!feasible(r, k)) continue;
            Parity p = parity_of(r, k);
            if (p == Parity::odd && !include_odd) continue;
            pts.push_back(BasicPoint{r, k, Rational(r, i128(num_dbs) * k), total_cost(r, k), p});
        }
    }
    return pts;
}

/// Lower convex hull over mu, exact rational arithmetic. Points sharing a mu
/// collapse to the cheapest one; collinear interior vertices are removed.
inline HullCurve lower_hull(std::vector<BasicPoint> points) {
    if (points.empty()) fail(Errc::bad_value, "lower_hull: empty point set");
    std::sort(points.begin(), points.end(), [](const BasicPoint& a, const BasicPoint& b) {
        if (a.mu != b.mu) return a.mu < b.mu;
        if (a.cost != b.cost) return a.cost < b.cost;
        return a.r > b.r;
    });
    std::vector<BasicPoint> uniq;
    for (const auto& p : points) {
        if (!uniq.empty() && uniq.back().mu == p.mu) continue;
        uniq.push_back(p);
    }
    // Monotone chain; pop the middle point whenever it is on or above the
    // chord of its neighbors (slope must strictly increase along the hull).
    std::vector<BasicPoint> hull;
    for (const auto& p : uniq) {
        while (hull.size() >= 2) {
            const auto& o = hull[hull.size() - 2];
            const auto& a = hull[hull.size() - 1];
            Rational cross = (a.mu - o.mu) * (p.cost - o.cost) - (a.cost - o.cost) * (p.mu - o.mu);
            if (cross > Rational(0)) break;
            hull.pop_back();
        }
        hull.push_back(p);
    }
    HullCurve c;
    c.vertices.reserve(hull.size());
    for (const auto& p : hull) c.vertices.push_back(HullVertex{p.mu, p.cost, p.r, p.k});
    return c;
}

/// Optimal hybrid allocation for storage fraction mu: the hull vertex at mu,
/// or the memory-shared mixture of the two neighboring vertices.
inline AllocationPlan plan(int num_dbs, const Rational& mu) {
    HullCurve hull = lower_hull(enumerate_basic_points(num_dbs, false));
    if (mu < hull.min_mu() || mu > hull.max_mu())
        fail(Errc::storage_out_of_range, "mu=" + mu.to_fraction_string() + " outside achievable range [" +
                                             hull.min_mu().to_fraction_string() + ", " +
                                             hull.max_mu().to_fraction_string() + "]");
    AllocationPlan p;
    p.num_dbs = num_dbs;
    p.mu = mu;
    for (std::size_t i = 0; i < hull.vertices.size(); ++i) {
        const auto& v = hull.vertices[i];
        if (mu == v.mu) {
            p.parts.push_back(PlanPart{v.r, v.k, Rational(1)});
            p.predicted_cost = v.cost;
            return p;
        }
        if (i + 1 < hull.vertices.size() && mu > v.mu && mu < hull.vertices[i + 1].mu) {
            const auto& w = hull.vertices[i + 1];
            Rational gamma = (w.mu - mu) / (w.mu - v.mu);
            p.parts.push_back(PlanPart{v.r, v.k, gamma});
            p.parts.push_back(PlanPart{w.r, w.k, Rational(1) - gamma});
            p.predicted_cost = gamma * v.cost + (Rational(1) - gamma) * w.cost;
            return p;
        }
    }
    fail(Errc::storage_out_of_range, "unreachable: mu not locatable on hull");
}

// ---------------------------------------------------------------------------
// Lower bounds on achievable total costs.

inline std::optional<Rational> lb_fixed_k(int num_dbs, int k, const Rational& mu) {
    if (mu > Rational(1, k)) return std::nullopt;
    Rational denom = Rational(num_dbs) * mu - Rational(1) - Rational(1, k);
    if (!(denom > Rational(0))) return std::nullopt;
    return Rational(4) * Rational(num_dbs) * mu / denom;
}

inline std::optional<Rational> lb_fixed_r(int num_dbs, int r, const Rational& mu) {
    if (mu > Rational(r, num_dbs)) return std::nullopt;
    Rational nmu = Rational(num_dbs) * mu;
    Rational denom = nmu - Rational(1) - nmu / Rational(r);
    if (!(denom > Rational(0))) return std::nullopt;
    return Rational(4) * nmu / denom;
}

inline std::optional<Rational> lb_divided(int num_dbs, const Rational& mu) {
    Rational denom = Rational(num_dbs) * mu - Rational(2);
    if (!(denom > Rational(0))) return std::nullopt;
    return Rational(4) * Rational(num_dbs) * mu / denom;
}

inline std::optional<Rational> lb_coded(int num_dbs, const Rational& mu) {
    Rational denom = Rational(num_dbs) * mu - Rational(1) - mu;
    if (!(denom > Rational(0))) return std::nullopt;
    return Rational(4) * Rational(num_dbs) * mu / denom;
}

struct LowerBounds {
    std::map<int, Rational> per_k; // k -> bound, only where defined
    std::map<int, Rational> per_r; // r -> bound, only where defined
    std::optional<Rational> divided;
    std::optional<Rational> coded;
};

inline LowerBounds lb_curves(int num_dbs, const Rational& mu) {
    if (num_dbs < 4) fail(Errc::too_few_databases, "need at least 4 databases");
    LowerBounds lb;
    for (int k = 1; k <= num_dbs - 3; ++k)
        if (auto v = lb_fixed_k(num_dbs, k, mu)) lb.per_k.emplace(k, *v);
    for (int r = 4; r <= num_dbs; ++r)
        if (auto v = lb_fixed_r(num_dbs, r, mu)) lb.per_r.emplace(r, *v);
    lb.divided = lb_divided(num_dbs, mu);
    lb.coded = lb_coded(num_dbs, mu);
    return lb;
}

// ---------------------------------------------------------------------------
// Computational verifiers.

/// For one odd-parity point: running the two nearest even-parity schemes at
/// the same storage budget, half the symbols each, beats the direct scheme.
struct OddMixtureEntry {
    int r = 0;
    int k = 0;
    Rational mu;
    Rational direct_cost;  // the odd-parity scheme itself
    Rational upper_cost;   // even scheme at (r-1, k)
    Rational lower_cost;   // even scheme at (r+1, k)
    Rational mixed_cost;   // equal-mu mixture of the two
    bool pass = false;
};

struct OddMixtureReport {
    int num_dbs = 0;
    std::vector<OddMixtureEntry> entries;
    bool all_pass = true;
};

inline OddMixtureReport verify_odd_vs_mixture(int num_dbs) {
    OddMixtureReport rep;
    rep.num_dbs = num_dbs;
    for (const auto& p : enumerate_basic_points(num_dbs, true)) {
        if (p.parity != Parity::odd) continue;
        OddMixtureEntry e;
        e.r = p.r;
        e.k = p.k;
        e.mu = p.mu;
        e.direct_cost = p.cost;
        e.upper_cost = total_cost(p.r - 1, p.k);
        e.lower_cost = total_cost(p.r + 1, p.k);
        // Equal-mu mixture: mu1 = (r-1)/(N k) and mu2 = (r+1)/(N k) average to mu,
        // so the blend weight is exactly 1/2.
        e.mixed_cost = (e.upper_cost + e.lower_cost) * Rational(1, 2);
        e.pass = e.lower_cost < e.mixed_cost && e.mixed_cost < e.upper_cost && e.upper_cost < e.direct_cost;
        rep.all_pass = rep.all_pass && e.pass;
        rep.entries.push_back(e);
    }
    return rep;
}

/// Checks the structure of the optimal envelope: the hull of every even-parity
/// point equals the hull of just the r in {N, N-1, N-2} points, and that hull
/// never exceeds the best divided-only or coded-only curves.
struct HullCompositionReport {
    int num_dbs = 0;
    HullCurve full_hull;
    HullCurve top3_hull;
    std::optional<HullCurve> divided_hull;
    std::optional<HullCurve> coded_hull;
    bool hulls_equal = false;
    bool bounded_by_families = false;
    std::size_t comparison_points = 0;
    bool pass = false;
};

inline HullCompositionReport verify_hull_composition(int num_dbs) {
    HullCompositionReport rep;
    rep.num_dbs = num_dbs;
    auto pts = enumerate_basic_points(num_dbs, false);
    rep.full_hull = lower_hull(pts);

    std::vector<BasicPoint> top3, divided, coded;
    for (const auto& p : pts) {
        if (p.r >= num_dbs - 2) top3.push_back(p);
        if (p.k == 1) divided.push_back(p);
        if (p.r == num_dbs) coded.push_back(p);
    }
    rep.top3_hull = lower_hull(top3);
    if (!divided.empty()) rep.divided_hull = lower_hull(divided);
    if (!coded.empty()) rep.coded_hull = lower_hull(coded);

    rep.hulls_equal = rep.full_hull.vertices.size() == rep.top3_hull.vertices.size();
    if (rep.hulls_equal)
        for (std::size_t i = 0; i < rep.full_hull.vertices.size(); ++i) {
            const auto& a = rep.full_hull.vertices[i];
            const auto& b = rep.top3_hull.vertices[i];
            if (a.mu != b.mu || a.cost != b.cost) {
                rep.hulls_equal = false;
                break;
            }
        }

    // Compare piecewise-linear curves at every vertex of every curve plus the
    // midpoints between consecutive evaluation points; for piecewise-linear
    // functions this decides the inequality everywhere.
    std::set<std::pair<i128, i128>> mu_keys;
    std::vector<Rational> mus;
    auto add_mu = [&](const Rational& m) {
        if (mu_keys.insert({m.num(), m.den()}).second) mus.push_back(m);
    };
    auto add_curve = [&](const HullCurve& c) {
        for (const auto& v : c.vertices) add_mu(v.mu);
    };
    add_curve(rep.full_hull);
    if (rep.divided_hull) add_curve(*rep.divided_hull);
    if (rep.coded_hull) add_curve(*rep.coded_hull);
    std::sort(mus.begin(), mus.end());
    std::vector<Rational> grid = mus;
    for (std::size_t i = 0; i + 1 < mus.size(); ++i) grid.push_back((mus[i] + mus[i + 1]) * Rational(1, 2));

    rep.bounded_by_families = true;
    for (const auto& m : grid) {
        auto h = rep.full_hull.eval(m);
        if (!h) continue;
        ++rep.comparison_points;
        if (rep.divided_hull)
            if (auto d = rep.divided_hull->eval(m); d && *h > *d) rep.bounded_by_families = false;
        if (rep.coded_hull)
            if (auto c = rep.coded_hull->eval(m); c && *h > *c) rep.bounded_by_families = false;
    }
    rep.pass = rep.hulls_equal && rep.bounded_by_families;
    return rep;
}

// ---------------------------------------------------------------------------
// External formats: CSV curve data and JSON plans.

namespace detail {

inline void csv_row(std::ostream& os, const Rational& mu, const Rational& cost, const std::string& series,
                    const std::string& extra = ",") {
    os << mu.to_decimal_string() << ',' << cost.to_decimal_string() << ',' << series << ',' << extra << ','
       << mu.to_fraction_string() << ',' << cost.to_fraction_string() << '\n';
}

} // namespace detail

inline void write_basic_points_csv(std::ostream& os, int num_dbs) {
    os << "mu,cost,series,r,K,mu_exact,cost_exact\n";
    for (const auto& p : enumerate_basic_points(num_dbs, true))
        detail::csv_row(os, p.mu, p.cost, p.parity == Parity::even ? "basic_even" : "basic_odd",
                        std::to_string(p.r) + "," + std::to_string(p.k));
}

inline void write_hull_csv(std::ostream& os, int num_dbs) {
    os << "mu,cost,series,r,K,mu_exact,cost_exact\n";
    for (const auto& v : lower_hull(enumerate_basic_points(num_dbs, false)).vertices)
        detail::csv_row(os, v.mu, v.cost, "hull", std::to_string(v.r) + "," + std::to_string(v.k));
}

inline void write_bounds_csv(std::ostream& os, int num_dbs, int grid_steps) {
    if (grid_steps < 1) fail(Errc::bad_value, "grid steps must be >= 1");
    os << "mu,cost,series,r,K,mu_exact,cost_exact\n";
    const Rational lo(1, num_dbs - 3);
    const Rational hi(1);
    for (int t = 0; t <= grid_steps; ++t) {
        Rational mu = lo + (hi - lo) * Rational(t, grid_steps);
        if (auto v = lb_divided(num_dbs, mu)) detail::csv_row(os, mu, *v, "LB_d");
        if (auto v = lb_coded(num_dbs, mu)) detail::csv_row(os, mu, *v, "LB_c");
        for (int r = 4; r <= num_dbs; ++r)
            if (auto v = lb_fixed_r(num_dbs, r, mu)) detail::csv_row(os, mu, *v, "LB_r=" + std::to_string(r), std::to_string(r) + ",");
        for (int k = 1; k <= num_dbs - 3; ++k)
            if (auto v = lb_fixed_k(num_dbs, k, mu)) detail::csv_row(os, mu, *v, "LB_K=" + std::to_string(k), "," + std::to_string(k));
    }
}

namespace detail {

inline std::int64_t to_i64(i128 x) {
    if (x > i128(INT64_MAX) || x < i128(INT64_MIN)) fail(Errc::overflow, "value exceeds 64-bit JSON range");
    return static_cast<std::int64_t>(x);
}

inline nlohmann::json rational_json(const Rational& r) {
    return {{"num", to_i64(r.num())}, {"den", to_i64(r.den())}, {"decimal", r.to_decimal_string()}};
}

} // namespace detail

inline nlohmann::json plan_to_json(const AllocationPlan& p) {
    nlohmann::json parts = nlohmann::json::array();
    for (const auto& part : p.parts)
        parts.push_back({{"r", part.r},
                         {"K", part.k},
                         {"fraction_num", detail::to_i64(part.fraction.num())},
                         {"fraction_den", detail::to_i64(part.fraction.den())}});
    return {{"N", p.num_dbs},
            {"mu", detail::rational_json(p.mu)},
            {"parts", parts},
            {"predicted_cost", detail::rational_json(p.predicted_cost)}};
}

} // namespace pruw::planner
