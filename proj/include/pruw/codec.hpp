#pragma once

#include <span>
#include <vector>

#include "pruw/field.hpp"
#include "pruw/planner.hpp"
#include "pruw/rng.hpp"

namespace pruw::codec {

/// One scheme instance over r databases.
///
///   r          databases holding (and serving) each subpacket
///   k          symbols coded together per stored slot
///   x          degree of the storage noise polynomial
///   y          subpacketization: blocks per subpacket, y symbols decoded per answer set
///   m_models   number of submodels M
///
/// r = y + x + k + 1 and x >= y >= 1 always hold. Every database n has its own
/// evaluation point db_points[n]; pole_points[i][l] are the rational-term
/// evaluation constants of block i, slot l; mute_points (size x - y) are the
/// db_points of the databases that receive no update traffic.
struct SchemeParams {
    FieldCtx field{FieldCtx::kDefaultModulus};
    int r = 0;
    int k = 0;
    int x = 0;
    int y = 0;
    int m_models = 0;
    FeVec db_points;
    std::vector<FeVec> pole_points;
    FeVec mute_points;

    int subpacket_len() const { return m_models * y; }     // encoded symbols per database
    int plain_symbols_per_model() const { return k * y; }  // plaintext symbols covered per submodel

    bool is_mute(int n) const {
        for (Fe f : mute_points)
            if (f == db_points[n]) return true;
        return false;
    }

    void validate() const {
        if (r != y + x + k + 1 || x < y || y < 1) fail(Errc::infeasible_params, "scheme shape violates r=y+x+K+1, x>=y>=1");
        if (static_cast<int>(db_points.size()) != r) fail(Errc::shape_mismatch, "db_points size != r");
        if (static_cast<int>(pole_points.size()) != y) fail(Errc::shape_mismatch, "pole_points rows != y");
        for (const auto& row : pole_points)
            if (static_cast<int>(row.size()) != k) fail(Errc::shape_mismatch, "pole_points cols != K");
        if (static_cast<int>(mute_points.size()) != x - y) fail(Errc::shape_mismatch, "mute set size != x-y");
        FeVec all = db_points;
        for (const auto& row : pole_points) all.insert(all.end(), row.begin(), row.end());
        for (std::size_t i = 0; i < all.size(); ++i)
            for (std::size_t j = i + 1; j < all.size(); ++j)
                if (all[i] == all[j]) fail(Errc::degenerate_constants, "evaluation constants not distinct");
    }
};

/// Builds params with constants supplied by the caller (the simulator assigns
/// a shared evaluation point per database across all sections).
inline SchemeParams make_params_with_constants(int r, int k, int m_models, const FieldCtx& field, FeVec db_points,
                                               std::vector<FeVec> pole_points, FeVec mute_points) {
    auto [x, y] = planner::optimal_x(r, k);
    SchemeParams p{field, r, k, x, y, m_models, std::move(db_points), std::move(pole_points), std::move(mute_points)};
    p.validate();
    return p;
}

/// Standalone constructor: draws distinct nonzero constants from a seeded
/// stream. The mute set is the (x - y) databases with the highest indices.
inline SchemeParams make_params(int r, int k, int m_models, const FieldCtx& field, u64 seed) {
    auto [x, y] = planner::optimal_x(r, k);
    const std::size_t needed = std::size_t(r) + std::size_t(y) * k;
    if (field.modulus() < needed + 1)
        fail(Errc::field_too_small, "need " + std::to_string(needed) + " distinct nonzero constants, field has " +
                                        std::to_string(field.modulus() - 1));
    SubRng rng(seed, {0x636f6e7374ull}); // "const"
    FeVec alphas = draw_distinct_nonzero(field, std::size_t(r), rng);
    FeVec flat = draw_distinct_nonzero(field, std::size_t(y) * k, rng, alphas);
    std::vector<FeVec> poles(y);
    for (int i = 0; i < y; ++i) poles[i] = FeVec(flat.begin() + std::size_t(i) * k, flat.begin() + std::size_t(i + 1) * k);
    FeVec mute(alphas.end() - (x - y), alphas.end());
    return make_params_with_constants(r, k, m_models, field, std::move(alphas), std::move(poles), std::move(mute));
}

/// Plaintext of one subpacket: w(m, i, l) is the slot-l symbol of block i of
/// submodel m (m in 0..M-1, i in 0..y-1, l in 0..K-1).
struct PlainSubpacket {
    int m_models = 0, y = 0, k = 0;
    FeVec w;

    PlainSubpacket() = default;
    PlainSubpacket(const SchemeParams& p) : m_models(p.m_models), y(p.y), k(p.k), w(std::size_t(p.m_models) * p.y * p.k) {}

    Fe& at(int m, int i, int l) { return w[(std::size_t(m) * y + i) * k + l]; }
    Fe at(int m, int i, int l) const { return w[(std::size_t(m) * y + i) * k + l]; }

    static PlainSubpacket random(const SchemeParams& p, SubRng& rng) {
        PlainSubpacket s(p);
        for (auto& e : s.w) e = rng.next_fe(p.field);
        return s;
    }
};

/// Storage noise: I(i, j) is a length-M vector, j = 0..x, one realization
/// shared by all databases of the subpacket.
struct StorageNoise {
    int m_models = 0, y = 0, x = 0;
    FeVec noise;

    StorageNoise() = default;
    StorageNoise(const SchemeParams& p) : m_models(p.m_models), y(p.y), x(p.x), noise(std::size_t(p.y) * (p.x + 1) * p.m_models) {}

    Fe& at(int i, int j, int m) { return noise[(std::size_t(i) * (x + 1) + j) * m_models + m]; }
    Fe at(int i, int j, int m) const { return noise[(std::size_t(i) * (x + 1) + j) * m_models + m]; }

    static StorageNoise zero(const SchemeParams& p) { return StorageNoise(p); }

    static StorageNoise random(const SchemeParams& p, SubRng& rng) {
        StorageNoise s(p);
        for (auto& e : s.noise) e = rng.next_fe(p.field);
        return s;
    }
};

/// Encoded subpacket held by one database: y blocks of M symbols. Block i is
///   sum_l w(:, i, l) / (pole(i,l) - alpha_n)  +  sum_{j=0..x} alpha_n^j * I(i, j).
using EncodedSubpacket = FeVec;

inline EncodedSubpacket encode_storage(const PlainSubpacket& plain, const StorageNoise& noise, const SchemeParams& p,
                                       int n) {
    if (n < 0 || n >= p.r) fail(Errc::bad_index, "database index out of range");
    if (plain.m_models != p.m_models || plain.y != p.y || plain.k != p.k) fail(Errc::shape_mismatch, "plaintext shape mismatch");
    if (noise.m_models != p.m_models || noise.y != p.y || noise.x != p.x) fail(Errc::shape_mismatch, "noise shape mismatch");
    const FieldCtx& f = p.field;
    const Fe alpha = p.db_points[n];
    EncodedSubpacket out(std::size_t(p.m_models) * p.y);
    for (int i = 0; i < p.y; ++i) {
        FeVec invdiff(p.k);
        for (int l = 0; l < p.k; ++l) invdiff[l] = f.inv(f.sub(p.pole_points[i][l], alpha));
        for (int m = 0; m < p.m_models; ++m) {
            Fe acc = f.zero();
            for (int l = 0; l < p.k; ++l) acc = f.add(acc, f.mul(invdiff[l], plain.at(m, i, l)));
            Fe pw = f.one();
            for (int j = 0; j <= p.x; ++j) {
                acc = f.add(acc, f.mul(pw, noise.at(i, j, m)));
                pw = f.mul(pw, alpha);
            }
            out[std::size_t(i) * p.m_models + m] = acc;
        }
    }
    return out;
}

/// Query noise: z[i*K + l] is the length-M masking vector of block i, slot l,
/// shared across databases. Test-only; never part of a transcript.
using QueryNoise = std::vector<FeVec>;

inline QueryNoise zero_query_noise(const SchemeParams& p) {
    return QueryNoise(std::size_t(p.y) * p.k, FeVec(p.m_models));
}

inline QueryNoise random_query_noise(const SchemeParams& p, SubRng& rng) {
    QueryNoise z = zero_query_noise(p);
    for (auto& vec : z)
        for (auto& e : vec) e = rng.next_fe(p.field);
    return z;
}

/// Query vector for one (database point, slot l): block i is
///   [ prod_{l' != l} (pole(i,l') - alpha) / prod_{l' != l} (pole(i,l') - pole(i,l)) ] * e_M(theta)
///   + prod_{l'} (pole(i,l') - alpha) * z(i, l).
inline FeVec query_for_point(const FieldCtx& f, int theta, int m_models, const std::vector<FeVec>& pole_points, int l,
                             Fe alpha, const QueryNoise& z) {
    const int y = static_cast<int>(pole_points.size());
    const int k = static_cast<int>(pole_points[0].size());
    FeVec out(std::size_t(m_models) * y);
    for (int i = 0; i < y; ++i) {
        Fe num = f.one(), den = f.one(), full = f.one();
        for (int l2 = 0; l2 < k; ++l2) {
            Fe d = f.sub(pole_points[i][l2], alpha);
            full = f.mul(full, d);
            if (l2 == l) continue;
            num = f.mul(num, d);
            den = f.mul(den, f.sub(pole_points[i][l2], pole_points[i][l]));
        }
        const Fe pick = f.div(num, den);
        const FeVec& zi = z[std::size_t(i) * k + l];
        for (int m = 0; m < m_models; ++m) {
            Fe e = f.mul(full, zi[m]);
            if (m == theta - 1) e = f.add(e, pick);
            out[std::size_t(i) * m_models + m] = e;
        }
    }
    return out;
}

/// Queries for all databases of a scheme, one vector per (database, slot).
struct QuerySet {
    std::vector<std::vector<FeVec>> q; // q[n][l], each of length M*y
    QueryNoise z;                      // shadow only
};

inline QuerySet gen_queries_with_noise(int theta, const SchemeParams& p, QueryNoise z) {
    if (theta < 1 || theta > p.m_models) fail(Errc::bad_index, "submodel index out of range");
    QuerySet qs;
    qs.z = std::move(z);
    qs.q.resize(p.r);
    for (int n = 0; n < p.r; ++n) {
        qs.q[n].reserve(p.k);
        for (int l = 0; l < p.k; ++l)
            qs.q[n].push_back(query_for_point(p.field, theta, p.m_models, p.pole_points, l, p.db_points[n], qs.z));
    }
    return qs;
}

inline QuerySet gen_queries(int theta, const SchemeParams& p, SubRng& rng) {
    return gen_queries_with_noise(theta, p, random_query_noise(p, rng));
}

/// A database's answer to one query: the inner product of its stored subpacket
/// with the query vector.
inline Fe answer(const FieldCtx& f, std::span<const Fe> store, std::span<const Fe> query) {
    return dot(f, store, query);
}

/// Recovers the y slot-l symbols of the queried submodel from all r answers by
/// solving the rational-plus-polynomial system; the x+K+1 trailing noise
/// unknowns are discarded.
inline FeVec decode(const FeVec& answers, int l, const SchemeParams& p) {
    if (static_cast<int>(answers.size()) != p.r) fail(Errc::incomplete, "decode needs exactly r answers");
    if (l < 0 || l >= p.k) fail(Errc::bad_index, "slot index out of range");
    FeVec poles(p.y);
    for (int i = 0; i < p.y; ++i) poles[i] = p.pole_points[i][l];
    FeMat m = cauchy_vandermonde(p.field, p.db_points, poles, std::size_t(p.k + p.x));
    FeVec sol = solve_linear(p.field, std::move(m), answers);
    return FeVec(sol.begin(), sol.begin() + p.y);
}

/// Update payload: u[n] holds the K scalars for database n, empty for mute
/// databases. zhat and deltas are shadow values for tests.
struct UpdatePacket {
    std::vector<FeVec> u;
    FeVec zhat;
    std::vector<FeVec> deltas;

    std::size_t scalar_count() const {
        std::size_t c = 0;
        for (const auto& v : u) c += v.size();
        return c;
    }
};

/// Deltas are indexed deltas[j][l], j in 0..y-1, l in 0..K-1.
inline UpdatePacket encode_update_with_noise(const std::vector<FeVec>& deltas, const SchemeParams& p, FeVec zhat) {
    if (static_cast<int>(deltas.size()) != p.y) fail(Errc::shape_mismatch, "delta rows != y");
    for (const auto& row : deltas)
        if (static_cast<int>(row.size()) != p.k) fail(Errc::shape_mismatch, "delta cols != K");
    if (static_cast<int>(zhat.size()) != p.k) fail(Errc::shape_mismatch, "zhat size != K");
    const FieldCtx& f = p.field;

    // scaled_delta[j][l]: delta * prod_{i != l} (pole(j,i) - pole(j,l)) / prod_{i != j} (pole(i,l) - pole(j,l))
    std::vector<FeVec> scaled(p.y, FeVec(p.k));
    for (int j = 0; j < p.y; ++j)
        for (int l = 0; l < p.k; ++l) {
            Fe num = f.one();
            for (int i = 0; i < p.k; ++i)
                if (i != l) num = f.mul(num, f.sub(p.pole_points[j][i], p.pole_points[j][l]));
            Fe den = f.one();
            for (int i = 0; i < p.y; ++i)
                if (i != j) den = f.mul(den, f.sub(p.pole_points[i][l], p.pole_points[j][l]));
            scaled[j][l] = f.mul(deltas[j][l], f.div(num, den));
        }

    UpdatePacket up;
    up.zhat = std::move(zhat);
    up.deltas = deltas;
    up.u.resize(p.r);
    for (int n = 0; n < p.r; ++n) {
        if (p.is_mute(n)) continue;
        const Fe alpha = p.db_points[n];
        FeVec scalars(p.k);
        for (int l = 0; l < p.k; ++l) {
            Fe acc = f.zero();
            Fe full = f.one();
            for (int j = 0; j < p.y; ++j) full = f.mul(full, f.sub(p.pole_points[j][l], alpha));
            for (int j = 0; j < p.y; ++j) {
                Fe prod = f.one();
                for (int i = 0; i < p.y; ++i)
                    if (i != j) prod = f.mul(prod, f.sub(p.pole_points[i][l], alpha));
                acc = f.add(acc, f.mul(prod, scaled[j][l]));
            }
            scalars[l] = f.add(acc, f.mul(full, up.zhat[l]));
        }
        up.u[n] = std::move(scalars);
    }
    return up;
}

inline UpdatePacket encode_update(const std::vector<FeVec>& deltas, const SchemeParams& p, SubRng& rng) {
    FeVec zhat(p.k);
    for (auto& e : zhat) e = rng.next_fe(p.field);
    return encode_update_with_noise(deltas, p, std::move(zhat));
}

/// Diagonal scaling that zeroes the incremental update at the mute databases:
/// block j value is prod_{f in mute} (f - alpha_n) / prod_{f in mute} (f - pole(j,l)).
/// All ones when the mute set is empty.
inline FeVec null_shaper(const SchemeParams& p, int n, int l) {
    if (n < 0 || n >= p.r) fail(Errc::bad_index, "database index out of range");
    if (l < 0 || l >= p.k) fail(Errc::bad_index, "slot index out of range");
    const FieldCtx& f = p.field;
    FeVec out(std::size_t(p.m_models) * p.y);
    for (int j = 0; j < p.y; ++j) {
        Fe num = f.one(), den = f.one();
        for (Fe mp : p.mute_points) {
            num = f.mul(num, f.sub(mp, p.db_points[n]));
            den = f.mul(den, f.sub(mp, p.pole_points[j][l]));
        }
        const Fe w = f.div(num, den);
        for (int m = 0; m < p.m_models; ++m) out[std::size_t(j) * p.m_models + m] = w;
    }
    return out;
}

/// Applies one subpacket's update at database n: for each slot l, rescale the
/// reading-phase query per block, shape it through the mute-set diagonal, and
/// add u[l] times the result to the store. Mute databases are a no-op by
/// construction (the shaper vanishes at their evaluation point).
inline void apply_update(std::span<Fe> store, std::span<const Fe> u_scalars,
                         std::span<const FeVec> session_queries, const SchemeParams& p, int n) {
    if (static_cast<int>(u_scalars.size()) != p.k || static_cast<int>(session_queries.size()) != p.k)
        fail(Errc::incomplete, "need one scalar and one cached query per slot");
    if (store.size() != std::size_t(p.m_models) * p.y) fail(Errc::shape_mismatch, "store length mismatch");
    const FieldCtx& f = p.field;
    const Fe alpha = p.db_points[n];
    for (int l = 0; l < p.k; ++l) {
        if (session_queries[l].size() != store.size()) fail(Errc::shape_mismatch, "query length mismatch");
        const FeVec shaper = null_shaper(p, n, l);
        for (int j = 0; j < p.y; ++j) {
            Fe full = f.one();
            for (int i = 0; i < p.k; ++i) full = f.mul(full, f.sub(p.pole_points[j][i], alpha));
            const Fe rescale = f.inv(full);
            for (int m = 0; m < p.m_models; ++m) {
                const std::size_t idx = std::size_t(j) * p.m_models + m;
                Fe incr = f.mul(f.mul(shaper[idx], u_scalars[l]), f.mul(rescale, session_queries[l][idx]));
                store[idx] = f.add(store[idx], incr);
            }
        }
    }
}

/// Result of fitting one subpacket's stores to the storage model: the number
/// of coordinates whose cross-database values do not fit (zero for a healthy
/// store) and, when everything fits, the plaintext implied by the rational
/// coefficients.
struct StorageFit {
    std::size_t residuals = 0;
    PlainSubpacket plain;
};

/// Cross-database structure audit. Every stored coordinate, viewed across the
/// r databases as a function of the evaluation point, must fit
/// (K rational terms) + (degree-x polynomial). The fit is solved on the first
/// K+x+1 databases and checked against the rest; the recovered rational
/// coefficients are exactly the plaintext symbols, giving a read path that
/// never touches queries or answers.
inline StorageFit storage_fit(const std::vector<EncodedSubpacket>& stores, const SchemeParams& p) {
    if (static_cast<int>(stores.size()) != p.r) fail(Errc::incomplete, "need the stores of all r databases");
    const FieldCtx& f = p.field;
    const std::size_t unknowns = std::size_t(p.k) + p.x + 1;
    StorageFit fit;
    fit.plain = PlainSubpacket(p);
    for (int j = 0; j < p.y; ++j) {
        FeVec poles = p.pole_points[j];
        FeMat m = cauchy_vandermonde(f, p.db_points, poles, std::size_t(p.x));
        for (int mdl = 0; mdl < p.m_models; ++mdl) {
            FeVec vals(p.r);
            for (int n = 0; n < p.r; ++n) vals[n] = stores[n][std::size_t(j) * p.m_models + mdl];
            FeMat head(unknowns, unknowns);
            FeVec rhs(unknowns);
            for (std::size_t rr = 0; rr < unknowns; ++rr) {
                for (std::size_t c = 0; c < unknowns; ++c) head.at(rr, c) = m.at(rr, c);
                rhs[rr] = vals[rr];
            }
            FeVec coef = solve_linear(f, std::move(head), std::move(rhs));
            for (int n = static_cast<int>(unknowns); n < p.r; ++n) {
                Fe pred = dot(f, std::span<const Fe>(m.a).subspan(std::size_t(n) * m.cols, m.cols), coef);
                if (pred != vals[n]) ++fit.residuals;
            }
            for (int l = 0; l < p.k; ++l) fit.plain.at(mdl, j, l) = coef[l];
        }
    }
    return fit;
}

inline std::size_t storage_fit_residuals(const std::vector<EncodedSubpacket>& stores, const SchemeParams& p) {
    return storage_fit(stores, p).residuals;
}

} // namespace pruw::codec
