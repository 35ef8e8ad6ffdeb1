#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "pruw/codec.hpp"

namespace pruw::privacy {

struct CheckOptions {
    bool zero_noise = false;        // sanity-inversion hook: enumerate only the all-zero noise
    u64 max_enumerations = 1ull << 26;
};

/// Exact empirical distribution: counts indexed by the radix-q encoding of the
/// observable tuple. Totals are realization counts, so identity is an integer
/// comparison, not a statistical one.
struct DistTable {
    std::vector<u64> counts;
    u64 total = 0;

    void bump(u64 idx) {
        ++counts[idx];
        ++total;
    }
};

inline u64 l1_distance(const DistTable& a, const DistTable& b) {
    u64 d = 0;
    for (std::size_t i = 0; i < a.counts.size(); ++i)
        d += a.counts[i] > b.counts[i] ? a.counts[i] - b.counts[i] : b.counts[i] - a.counts[i];
    return d;
}

struct CheckReport {
    std::string check;
    int r = 0, k = 0, m_models = 0;
    u64 modulus = 0;
    u64 enumerated = 0;   // noise realizations per compared scenario
    u64 max_distance = 0; // max L1 distance across databases
    bool pass = false;

    nlohmann::json to_json() const {
        return {{"check", check},
                {"params", {{"r", r}, {"K", k}, {"M", m_models}, {"q", modulus}}},
                {"enumerated", enumerated},
                {"distance", max_distance},
                {"pass", pass}};
    }
};

namespace detail {

inline u64 pow_checked(u64 base, u64 exp, u64 cap, const std::string& what) {
    u64 r = 1;
    for (u64 i = 0; i < exp; ++i) {
        if (__builtin_mul_overflow(r, base, &r) || r > cap)
            fail(Errc::too_large,
                 what + " needs " + std::to_string(base) + "^" + std::to_string(exp) + " enumerations (cap " +
                     std::to_string(cap) + ")");
    }
    return r;
}

/// Iterates all assignments of `dims` base-q digits (just the zero assignment
/// when zero_noise is set) and hands each to fn.
template <typename Fn>
u64 enumerate_digits(u64 q, std::size_t dims, bool zero_noise, Fn&& fn) {
    std::vector<u64> digits(dims, 0);
    u64 count = 0;
    for (;;) {
        fn(digits);
        ++count;
        if (zero_noise) return count;
        std::size_t i = 0;
        while (i < dims && ++digits[i] == q) digits[i++] = 0;
        if (i == dims) return count;
    }
}

inline CheckReport base_report(const std::string& check, const codec::SchemeParams& p) {
    CheckReport rep;
    rep.check = check;
    rep.r = p.r;
    rep.k = p.k;
    rep.m_models = p.m_models;
    rep.modulus = p.field.modulus();
    return rep;
}

} // namespace detail

/// Reading-phase index privacy: per database, the multiset of query tuples
/// over every masking-noise realization must be identical for the two
/// submodel indices. Distance must be exactly zero.
inline CheckReport check_query_privacy(const codec::SchemeParams& p, int theta_a, int theta_b,
                                       const CheckOptions& opt = {}) {
    const u64 q = p.field.modulus();
    const std::size_t noise_dims = std::size_t(p.y) * p.k * p.m_models;
    const std::size_t obs_dims = std::size_t(p.k) * p.m_models * p.y;
    detail::pow_checked(q, noise_dims, opt.max_enumerations, "query privacy check");
    const u64 table_size = detail::pow_checked(q, obs_dims, opt.max_enumerations, "query observable table");

    std::vector<DistTable> ta(p.r), tb(p.r);
    for (int n = 0; n < p.r; ++n) {
        ta[n].counts.assign(table_size, 0);
        tb[n].counts.assign(table_size, 0);
    }

    codec::QueryNoise z = codec::zero_query_noise(p);
    CheckReport rep = detail::base_report("query_privacy", p);
    rep.enumerated = detail::enumerate_digits(q, noise_dims, opt.zero_noise, [&](const std::vector<u64>& digits) {
        std::size_t d = 0;
        for (auto& vec : z)
            for (auto& e : vec) e.v = digits[d++];
        for (int n = 0; n < p.r; ++n) {
            u64 idx_a = 0, idx_b = 0;
            for (int l = 0; l < p.k; ++l) {
                FeVec qa = codec::query_for_point(p.field, theta_a, p.m_models, p.pole_points, l, p.db_points[n], z);
                FeVec qb = codec::query_for_point(p.field, theta_b, p.m_models, p.pole_points, l, p.db_points[n], z);
                for (std::size_t t = 0; t < qa.size(); ++t) {
                    idx_a = idx_a * q + qa[t].v;
                    idx_b = idx_b * q + qb[t].v;
                }
            }
            ta[n].bump(idx_a);
            tb[n].bump(idx_b);
        }
    });
    for (int n = 0; n < p.r; ++n) rep.max_distance = std::max(rep.max_distance, l1_distance(ta[n], tb[n]));
    rep.pass = rep.max_distance == 0;
    return rep;
}

/// Writing-phase value privacy: per non-mute database, the update scalars over
/// every zhat realization must be identically distributed for the two delta
/// payloads (the submodel indices tag the scenarios; the wire carries no
/// index dependence).
inline CheckReport check_update_privacy(const codec::SchemeParams& p, const std::vector<FeVec>& deltas_a,
                                        const std::vector<FeVec>& deltas_b, int theta_a, int theta_b,
                                        const CheckOptions& opt = {}) {
    (void)theta_a;
    (void)theta_b;
    const u64 q = p.field.modulus();
    const std::size_t noise_dims = std::size_t(p.k);
    detail::pow_checked(q, noise_dims, opt.max_enumerations, "update privacy check");
    const u64 table_size = detail::pow_checked(q, noise_dims, opt.max_enumerations, "update observable table");

    std::vector<DistTable> ta(p.r), tb(p.r);
    for (int n = 0; n < p.r; ++n) {
        ta[n].counts.assign(table_size, 0);
        tb[n].counts.assign(table_size, 0);
    }

    CheckReport rep = detail::base_report("update_privacy", p);
    FeVec zhat(p.k);
    rep.enumerated = detail::enumerate_digits(q, noise_dims, opt.zero_noise, [&](const std::vector<u64>& digits) {
        for (int l = 0; l < p.k; ++l) zhat[l].v = digits[l];
        codec::UpdatePacket ua = codec::encode_update_with_noise(deltas_a, p, zhat);
        codec::UpdatePacket ub = codec::encode_update_with_noise(deltas_b, p, zhat);
        for (int n = 0; n < p.r; ++n) {
            if (p.is_mute(n)) continue;
            u64 idx_a = 0, idx_b = 0;
            for (int l = 0; l < p.k; ++l) {
                idx_a = idx_a * q + ua.u[n][l].v;
                idx_b = idx_b * q + ub.u[n][l].v;
            }
            ta[n].bump(idx_a);
            tb[n].bump(idx_b);
        }
    });
    for (int n = 0; n < p.r; ++n)
        if (!p.is_mute(n)) rep.max_distance = std::max(rep.max_distance, l1_distance(ta[n], tb[n]));
    rep.pass = rep.max_distance == 0;
    return rep;
}

/// Storage security: per database, the encoded subpacket over every storage
/// noise realization must be identically distributed for the two plaintext
/// models. Uses encode linearity: enc(model, noise) = enc(model, 0) + enc(0, noise).
inline CheckReport check_storage_security(const codec::SchemeParams& p, const codec::PlainSubpacket& model_a,
                                          const codec::PlainSubpacket& model_b, const CheckOptions& opt = {}) {
    const u64 q = p.field.modulus();
    const std::size_t noise_dims = std::size_t(p.y) * (p.x + 1) * p.m_models;
    const std::size_t obs_dims = std::size_t(p.m_models) * p.y;
    detail::pow_checked(q, noise_dims, opt.max_enumerations, "storage security check");
    const u64 table_size = detail::pow_checked(q, obs_dims, opt.max_enumerations, "storage observable table");

    const codec::StorageNoise zero = codec::StorageNoise::zero(p);
    std::vector<codec::EncodedSubpacket> base_a(p.r), base_b(p.r);
    std::vector<FeVec> alpha_pows(p.r, FeVec(std::size_t(p.x) + 1));
    for (int n = 0; n < p.r; ++n) {
        base_a[n] = codec::encode_storage(model_a, zero, p, n);
        base_b[n] = codec::encode_storage(model_b, zero, p, n);
        Fe pw = p.field.one();
        for (int j = 0; j <= p.x; ++j) {
            alpha_pows[n][j] = pw;
            pw = p.field.mul(pw, p.db_points[n]);
        }
    }

    std::vector<DistTable> ta(p.r), tb(p.r);
    for (int n = 0; n < p.r; ++n) {
        ta[n].counts.assign(table_size, 0);
        tb[n].counts.assign(table_size, 0);
    }

    const FieldCtx& f = p.field;
    CheckReport rep = detail::base_report("storage_security", p);
    rep.enumerated = detail::enumerate_digits(q, noise_dims, opt.zero_noise, [&](const std::vector<u64>& digits) {
        for (int n = 0; n < p.r; ++n) {
            u64 idx_a = 0, idx_b = 0;
            for (int i = 0; i < p.y; ++i) {
                for (int m = 0; m < p.m_models; ++m) {
                    Fe np = f.zero();
                    for (int j = 0; j <= p.x; ++j) {
                        Fe nij{digits[(std::size_t(i) * (p.x + 1) + j) * p.m_models + m]};
                        np = f.add(np, f.mul(alpha_pows[n][j], nij));
                    }
                    const std::size_t pos = std::size_t(i) * p.m_models + m;
                    idx_a = idx_a * q + f.add(base_a[n][pos], np).v;
                    idx_b = idx_b * q + f.add(base_b[n][pos], np).v;
                }
            }
            ta[n].bump(idx_a);
            tb[n].bump(idx_b);
        }
    });
    for (int n = 0; n < p.r; ++n) rep.max_distance = std::max(rep.max_distance, l1_distance(ta[n], tb[n]));
    rep.pass = rep.max_distance == 0;
    return rep;
}

} // namespace pruw::privacy
