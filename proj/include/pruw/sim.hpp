#pragma once

#include <numeric>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>

#include <json.hpp>

#include "pruw/codec.hpp"

namespace pruw::sim {

/// Model geometry: M independent submodels of L symbols each, over F_q.
struct ModelSpec {
    int m_models = 0;
    u64 length = 0;
    u64 modulus = FieldCtx::kDefaultModulus;
};

struct Message {
    enum class Dir { to_db, from_db };
    enum class Kind { query, answer, update };
    Dir dir = Dir::to_db;
    Kind kind = Kind::query;
    int db = 0;
    int part = 0;
    int section = -1; // -1 for part-level messages (queries)
    u64 symbols = 0;
    bool counted = false;
};

/// Every message of one session phase. Downloads are counted symbols flowing
/// from databases, uploads counted symbols flowing to them; query traffic is
/// logged but never counted, matching the cost definitions.
struct Transcript {
    std::vector<Message> messages;

    u64 counted_download() const {
        u64 s = 0;
        for (const auto& m : messages)
            if (m.counted && m.dir == Message::Dir::from_db) s += m.symbols;
        return s;
    }

    u64 counted_upload() const {
        u64 s = 0;
        for (const auto& m : messages)
            if (m.counted && m.dir == Message::Dir::to_db) s += m.symbols;
        return s;
    }

    void write_jsonl(std::ostream& os) const {
        for (const auto& m : messages) {
            nlohmann::json j = {
                {"dir", m.dir == Message::Dir::to_db ? "to_db" : "from_db"},
                {"kind", m.kind == Message::Kind::query ? "query" : m.kind == Message::Kind::answer ? "answer" : "update"},
                {"db", m.db},
                {"part", m.part},
                {"section", m.section},
                {"symbols", m.symbols},
                {"counted", m.counted},
            };
            os << j.dump() << '\n';
        }
    }
};

/// One scheme instance bound to a section's holder set.
struct SectionScheme {
    std::vector<int> holders; // ascending database ids, size r
    codec::SchemeParams params;
};

struct PartState {
    planner::PlanPart part;
    int x = 0, y = 0;
    u64 length = 0;                 // symbols of every submodel stored under this part
    u64 offset = 0;                 // first submodel symbol index covered by this part
    u64 section_len = 0;            // length / N
    u64 subpackets_per_section = 0; // section_len / (K*y)
    std::vector<FeVec> pole_points; // y x K
    std::vector<SectionScheme> sections;
};

struct ActiveSession {
    int theta = 0;
    u64 id = 0;
    u64 writes_done = 0;
    std::vector<std::vector<std::vector<FeVec>>> queries; // [part][db][slot] -> M*y vector
    std::vector<codec::QueryNoise> query_noise;           // shadow, per part
};

/// Full system: N databases built from an allocation plan, plus the shadow
/// plaintext the simulator keeps for verification. One session at a time.
struct SystemState {
    int num_dbs = 0;
    ModelSpec spec;
    u64 seed = 0;
    u64 length_effective = 0;
    planner::AllocationPlan alloc;
    FieldCtx field{FieldCtx::kDefaultModulus};
    FeVec db_points;                   // evaluation point of each database, shared by all parts
    std::vector<PartState> parts;
    std::vector<std::vector<FeVec>> stores; // [db][part] flat: (window pos, subpacket, block, submodel)
    FeVec shadow_model;                // [m * L_eff + g], test/verification aid
    u64 session_counter = 0;
    std::optional<ActiveSession> session;
};

namespace detail {

// RNG stream ids.
constexpr u64 kConstStream = 1;
constexpr u64 kModelStream = 2;
constexpr u64 kStorageNoiseStream = 3;
constexpr u64 kSessionStream = 4;
constexpr u64 kReadPhase = 0;
constexpr u64 kWritePhase = 1;

inline u64 gcd_u64(u64 a, u64 b) {
    while (b) {
        u64 t = a % b;
        a = b;
        b = t;
    }
    return a;
}

inline u64 lcm_u64(u64 a, u64 b) { return a / gcd_u64(a, b) * b; }

/// Position of `section` within database `db`'s cyclic window, or -1.
inline int window_pos(int db, int section, int num_dbs, int r) {
    int d = section - db;
    if (d < 0) d += num_dbs;
    return d < r ? d : -1;
}

/// Flat submodel index of (part, section, subpacket, block, slot). Each part
/// owns a contiguous [offset, offset + length) range of every submodel; within
/// a part, section s covers [s * section_len, (s+1) * section_len); within a
/// section, subpacket t covers K*y symbols laid out block-major.
inline u64 symbol_index(const PartState& ps, int section, u64 t, int i, int l) {
    return ps.offset + u64(section) * ps.section_len + t * u64(ps.part.k) * ps.y + u64(i) * ps.part.k + u64(l);
}

inline std::span<Fe> subpacket_span(SystemState& st, int db, int p, int section, u64 t) {
    PartState& ps = st.parts[p];
    int w = window_pos(db, section, st.num_dbs, ps.part.r);
    const u64 stride = u64(st.spec.m_models) * ps.y;
    return std::span<Fe>(st.stores[db][p]).subspan((u64(w) * ps.subpackets_per_section + t) * stride, stride);
}

inline std::span<const Fe> subpacket_span(const SystemState& st, int db, int p, int section, u64 t) {
    const PartState& ps = st.parts[p];
    int w = window_pos(db, section, st.num_dbs, ps.part.r);
    const u64 stride = u64(st.spec.m_models) * ps.y;
    return std::span<const Fe>(st.stores[db][p]).subspan((u64(w) * ps.subpackets_per_section + t) * stride, stride);
}

} // namespace detail

/// Smallest submodel length >= requested that splits into N sections and whole
/// subpackets under every part's exact rational share.
inline u64 effective_length(int num_dbs, const planner::AllocationPlan& alloc, u64 requested) {
    u64 granule = 1;
    for (const auto& part : alloc.parts) {
        auto [x, y] = planner::optimal_x(part.r, part.k);
        u64 unit = u64(num_dbs) * u64(part.k) * u64(y);
        u64 den = u64(part.fraction.den());
        u64 num = u64(part.fraction.num());
        u64 d = den * unit / detail::gcd_u64(num, den * unit);
        granule = detail::lcm_u64(granule, d);
    }
    if (requested == 0) fail(Errc::bad_value, "submodel length must be >= 1");
    return (requested + granule - 1) / granule * granule;
}

inline SystemState build(int num_dbs, const Rational& mu, const ModelSpec& spec, u64 seed) {
    if (spec.m_models < 2) fail(Errc::bad_value, "need at least 2 submodels");
    SystemState st;
    st.num_dbs = num_dbs;
    st.spec = spec;
    st.seed = seed;
    st.field = field_new(spec.modulus);
    st.alloc = planner::plan(num_dbs, mu);
    st.length_effective = effective_length(num_dbs, st.alloc, spec.length);

    SubRng const_rng(seed, {detail::kConstStream});
    st.db_points = draw_distinct_nonzero(st.field, std::size_t(num_dbs), const_rng);

    FeVec avoid = st.db_points;
    u64 offset = 0;
    for (const auto& part : st.alloc.parts) {
        PartState ps;
        ps.part = part;
        auto [x, y] = planner::optimal_x(part.r, part.k);
        ps.x = x;
        ps.y = y;
        // fraction * L_eff is integral by construction of the effective length
        ps.length = u64((part.fraction * Rational(i128(st.length_effective))).num());
        ps.offset = offset;
        offset += ps.length;
        ps.section_len = ps.length / u64(num_dbs);
        ps.subpackets_per_section = ps.section_len / (u64(part.k) * u64(y));
        FeVec flat = draw_distinct_nonzero(st.field, std::size_t(y) * part.k, const_rng, avoid);
        avoid.insert(avoid.end(), flat.begin(), flat.end());
        ps.pole_points.resize(y);
        for (int i = 0; i < y; ++i)
            ps.pole_points[i] = FeVec(flat.begin() + std::size_t(i) * part.k, flat.begin() + std::size_t(i + 1) * part.k);
        for (int s = 0; s < num_dbs; ++s) {
            SectionScheme sec;
            for (int db = 0; db < num_dbs; ++db)
                if (detail::window_pos(db, s, num_dbs, part.r) >= 0) sec.holders.push_back(db);
            FeVec alphas;
            for (int db : sec.holders) alphas.push_back(st.db_points[db]);
            FeVec mute(alphas.end() - (x - y), alphas.end());
            sec.params = codec::make_params_with_constants(part.r, part.k, spec.m_models, st.field, std::move(alphas),
                                                           ps.pole_points, std::move(mute));
            ps.sections.push_back(std::move(sec));
        }
        st.parts.push_back(std::move(ps));
    }

    SubRng model_rng(seed, {detail::kModelStream});
    st.shadow_model.resize(u64(spec.m_models) * st.length_effective);
    for (auto& e : st.shadow_model) e = model_rng.next_fe(st.field);

    st.stores.assign(num_dbs, {});
    for (int db = 0; db < num_dbs; ++db)
        for (const auto& ps : st.parts)
            st.stores[db].emplace_back(u64(ps.part.r) * ps.subpackets_per_section * u64(spec.m_models) * ps.y);

    // Per-database budget: mu * M * L_eff encoded symbols, met with equality
    // because the plan's fractions satisfy the storage identity exactly.
    const Rational budget = mu * Rational(spec.m_models) * Rational(i128(st.length_effective));
    for (int db = 0; db < num_dbs; ++db) {
        u64 held = 0;
        for (const auto& v : st.stores[db]) held += v.size();
        if (Rational(i128(held)) > budget)
            fail(Errc::storage_out_of_range, "database " + std::to_string(db) + " would exceed its storage budget");
    }

    SubRng noise_rng(seed, {detail::kStorageNoiseStream});
    for (std::size_t p = 0; p < st.parts.size(); ++p) {
        PartState& ps = st.parts[p];
        for (int s = 0; s < num_dbs; ++s) {
            const SectionScheme& sec = ps.sections[s];
            for (u64 t = 0; t < ps.subpackets_per_section; ++t) {
                codec::PlainSubpacket plain(sec.params);
                for (int m = 0; m < spec.m_models; ++m)
                    for (int i = 0; i < ps.y; ++i)
                        for (int l = 0; l < ps.part.k; ++l)
                            plain.at(m, i, l) =
                                st.shadow_model[u64(m) * st.length_effective + detail::symbol_index(ps, s, t, i, l)];
                codec::StorageNoise noise = codec::StorageNoise::random(sec.params, noise_rng);
                for (std::size_t h = 0; h < sec.holders.size(); ++h) {
                    codec::EncodedSubpacket enc = codec::encode_storage(plain, noise, sec.params, int(h));
                    auto dst = detail::subpacket_span(st, sec.holders[h], int(p), s, t);
                    std::copy(enc.begin(), enc.end(), dst.begin());
                }
            }
        }
    }
    return st;
}

/// Encoded symbols held by one database.
inline u64 stored_symbols(const SystemState& st, int db) {
    u64 s = 0;
    for (const auto& v : st.stores[db]) s += v.size();
    return s;
}

struct ReadResult {
    FeVec submodel; // length_effective symbols
    Transcript transcript;
};

namespace detail {

inline std::vector<std::vector<std::vector<FeVec>>> session_queries(const SystemState& st, int theta,
                                                                    std::vector<codec::QueryNoise>& noise_out) {
    std::vector<std::vector<std::vector<FeVec>>> queries(st.parts.size());
    for (std::size_t p = 0; p < st.parts.size(); ++p) {
        const PartState& ps = st.parts[p];
        queries[p].resize(st.num_dbs);
        for (int db = 0; db < st.num_dbs; ++db) {
            queries[p][db].reserve(ps.part.k);
            for (int l = 0; l < ps.part.k; ++l)
                queries[p][db].push_back(codec::query_for_point(st.field, theta, st.spec.m_models, ps.pole_points, l,
                                                                st.db_points[db], noise_out[p]));
        }
    }
    return queries;
}

} // namespace detail

/// Full-model private read of submodel theta: per section, every holder answers
/// each slot query per subpacket; the decoded symbols reassemble the submodel.
inline ReadResult read(SystemState& st, int theta) {
    if (theta < 1 || theta > st.spec.m_models) fail(Errc::bad_index, "submodel index out of range");
    const u64 session_id = st.session_counter++;

    ActiveSession ses;
    ses.theta = theta;
    ses.id = session_id;
    SubRng read_rng(st.seed, {detail::kSessionStream, session_id, detail::kReadPhase});
    for (const auto& ps : st.parts) ses.query_noise.push_back(codec::random_query_noise(ps.sections[0].params, read_rng));
    ses.queries = detail::session_queries(st, theta, ses.query_noise);

    ReadResult res;
    res.submodel.assign(st.length_effective, st.field.zero());
    for (std::size_t p = 0; p < st.parts.size(); ++p) {
        const PartState& ps = st.parts[p];
        const u64 query_symbols = u64(ps.part.k) * u64(st.spec.m_models) * u64(ps.y);
        for (int db = 0; db < st.num_dbs; ++db)
            res.transcript.messages.push_back(
                {Message::Dir::to_db, Message::Kind::query, db, int(p), -1, query_symbols, false});
        for (int s = 0; s < st.num_dbs; ++s) {
            const SectionScheme& sec = ps.sections[s];
            for (u64 t = 0; t < ps.subpackets_per_section; ++t) {
                for (int l = 0; l < ps.part.k; ++l) {
                    FeVec answers(sec.holders.size());
                    for (std::size_t h = 0; h < sec.holders.size(); ++h)
                        answers[h] = codec::answer(st.field, detail::subpacket_span(st, sec.holders[h], int(p), s, t),
                                                   ses.queries[p][sec.holders[h]][l]);
                    FeVec symbols = codec::decode(answers, l, sec.params);
                    for (int i = 0; i < ps.y; ++i)
                        res.submodel[detail::symbol_index(ps, s, t, i, l)] = symbols[i];
                }
            }
            for (int holder : sec.holders)
                res.transcript.messages.push_back({Message::Dir::from_db, Message::Kind::answer, holder, int(p), s,
                                                   u64(ps.part.k) * ps.subpackets_per_section, true});
        }
    }
    st.session = std::move(ses);
    return res;
}

/// Private write of delta (length_effective symbols) onto submodel theta.
/// Requires the read session's queries for the same theta; mute databases of
/// each section receive nothing and keep their bytes unchanged.
inline Transcript write(SystemState& st, int theta, const FeVec& delta) {
    if (!st.session || st.session->theta != theta)
        fail(Errc::incomplete, "write requires a prior read session for the same submodel");
    if (delta.size() != st.length_effective) fail(Errc::shape_mismatch, "delta length != effective submodel length");
    ActiveSession& ses = *st.session;
    SubRng write_rng(st.seed, {detail::kSessionStream, ses.id, detail::kWritePhase, ses.writes_done});
    ++ses.writes_done;

    Transcript tr;
    for (std::size_t p = 0; p < st.parts.size(); ++p) {
        const PartState& ps = st.parts[p];
        for (int s = 0; s < st.num_dbs; ++s) {
            const SectionScheme& sec = ps.sections[s];
            for (u64 t = 0; t < ps.subpackets_per_section; ++t) {
                std::vector<FeVec> deltas(ps.y, FeVec(ps.part.k));
                for (int i = 0; i < ps.y; ++i)
                    for (int l = 0; l < ps.part.k; ++l)
                        deltas[i][l] = delta[detail::symbol_index(ps, s, t, i, l)];
                codec::UpdatePacket up = codec::encode_update(deltas, sec.params, write_rng);
                for (std::size_t h = 0; h < sec.holders.size(); ++h) {
                    if (up.u[h].empty()) continue;
                    codec::apply_update(detail::subpacket_span(st, sec.holders[h], int(p), s, t), up.u[h],
                                        ses.queries[p][sec.holders[h]], sec.params, int(h));
                }
            }
            for (std::size_t h = 0; h < sec.holders.size(); ++h) {
                if (sec.params.is_mute(int(h))) continue;
                tr.messages.push_back({Message::Dir::to_db, Message::Kind::update, sec.holders[h], int(p), s,
                                       u64(ps.part.k) * ps.subpackets_per_section, true});
            }
        }
    }
    for (u64 g = 0; g < st.length_effective; ++g) {
        Fe& slot = st.shadow_model[u64(theta - 1) * st.length_effective + g];
        slot = st.field.add(slot, delta[g]);
    }
    return tr;
}

struct PartCosts {
    int r = 0, k = 0;
    Rational fraction;
    Rational read_cost;  // contribution to C_R
    Rational write_cost; // contribution to C_W
};

struct CostReport {
    u64 length_requested = 0;
    u64 length_effective = 0;
    Rational read_cost, write_cost, total_cost;             // counted symbols / L_eff
    Rational analytic_read, analytic_write, analytic_total; // from the plan
    Rational total_cost_vs_requested;                       // counted symbols / requested L
    bool matches_plan = false;
    std::vector<PartCosts> parts;
};

inline CostReport measure(const SystemState& st, const Transcript& read_t, const Transcript& write_t) {
    CostReport rep;
    rep.length_requested = st.spec.length;
    rep.length_effective = st.length_effective;
    const Rational L(i128(st.length_effective));
    rep.read_cost = Rational(i128(read_t.counted_download())) / L;
    rep.write_cost = Rational(i128(write_t.counted_upload())) / L;
    rep.total_cost = rep.read_cost + rep.write_cost;
    for (const auto& ps : st.parts) {
        PartCosts pc;
        pc.r = ps.part.r;
        pc.k = ps.part.k;
        pc.fraction = ps.part.fraction;
        pc.read_cost = ps.part.fraction * Rational(ps.part.r, ps.y);
        pc.write_cost = ps.part.fraction * Rational(ps.part.r - (ps.x - ps.y), ps.y);
        rep.analytic_read += pc.read_cost;
        rep.analytic_write += pc.write_cost;
        rep.parts.push_back(pc);
    }
    rep.analytic_total = rep.analytic_read + rep.analytic_write;
    rep.total_cost_vs_requested =
        Rational(i128(read_t.counted_download() + write_t.counted_upload())) / Rational(i128(st.spec.length));
    rep.matches_plan = rep.total_cost == st.alloc.predicted_cost && rep.analytic_total == st.alloc.predicted_cost;
    return rep;
}

/// Post-write well-formedness: every stored coordinate of every subpacket must
/// still fit the rational-plus-polynomial form across its r holders. Returns
/// the number of violating coordinates (0 for a healthy system).
inline std::size_t storage_fit_violations(const SystemState& st) {
    std::size_t bad = 0;
    for (std::size_t p = 0; p < st.parts.size(); ++p) {
        const PartState& ps = st.parts[p];
        for (int s = 0; s < st.num_dbs; ++s) {
            const SectionScheme& sec = ps.sections[s];
            for (u64 t = 0; t < ps.subpackets_per_section; ++t) {
                std::vector<codec::EncodedSubpacket> stores;
                stores.reserve(sec.holders.size());
                for (int holder : sec.holders) {
                    auto sp = detail::subpacket_span(st, holder, int(p), s, t);
                    stores.emplace_back(sp.begin(), sp.end());
                }
                bad += codec::storage_fit_residuals(stores, sec.params);
            }
        }
    }
    return bad;
}

/// Stronger audit: fit every subpacket and compare the plaintext implied by
/// the rational coefficients against the shadow model. Reads the whole system
/// without a single query, so it cross-checks the protocol read path.
inline bool storage_matches_model(const SystemState& st) {
    for (std::size_t p = 0; p < st.parts.size(); ++p) {
        const PartState& ps = st.parts[p];
        for (int s = 0; s < st.num_dbs; ++s) {
            const SectionScheme& sec = ps.sections[s];
            for (u64 t = 0; t < ps.subpackets_per_section; ++t) {
                std::vector<codec::EncodedSubpacket> stores;
                stores.reserve(sec.holders.size());
                for (int holder : sec.holders) {
                    auto sp = detail::subpacket_span(st, holder, int(p), s, t);
                    stores.emplace_back(sp.begin(), sp.end());
                }
                codec::StorageFit fit = codec::storage_fit(stores, sec.params);
                if (fit.residuals != 0) return false;
                for (int m = 0; m < st.spec.m_models; ++m)
                    for (int i = 0; i < ps.y; ++i)
                        for (int l = 0; l < ps.part.k; ++l)
                            if (fit.plain.at(m, i, l) !=
                                st.shadow_model[u64(m) * st.length_effective + detail::symbol_index(ps, s, t, i, l)])
                                return false;
            }
        }
    }
    return true;
}

// ---------------------------------------------------------------------------
// Snapshots: versioned binary container, byte-identical for identical builds.

namespace detail {

constexpr char kMagic[4] = {'P', 'R', 'U', 'W'};
constexpr std::uint16_t kVersion = 1;

inline void put_u16(std::string& out, std::uint16_t v) {
    out.push_back(char(v & 0xff));
    out.push_back(char(v >> 8));
}

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}

inline void put_u64(std::string& out, u64 v) {
    for (int i = 0; i < 8; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}

struct ByteReader {
    std::string_view data;
    std::size_t pos = 0;

    void need(std::size_t n) const {
        if (pos + n > data.size()) fail(Errc::corrupt, "snapshot truncated");
    }
    std::uint16_t u16() {
        need(2);
        std::uint16_t v = std::uint16_t(std::uint8_t(data[pos])) | std::uint16_t(std::uint8_t(data[pos + 1])) << 8;
        pos += 2;
        return v;
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= std::uint32_t(std::uint8_t(data[pos + i])) << (8 * i);
        pos += 4;
        return v;
    }
    u64 u64v() {
        need(8);
        u64 v = 0;
        for (int i = 0; i < 8; ++i) v |= u64(std::uint8_t(data[pos + i])) << (8 * i);
        pos += 8;
        return v;
    }
    std::string_view bytes(std::size_t n) {
        need(n);
        auto s = data.substr(pos, n);
        pos += n;
        return s;
    }
};

} // namespace detail

inline std::string snapshot(const SystemState& st) {
    nlohmann::json meta;
    meta["N"] = st.num_dbs;
    meta["M"] = st.spec.m_models;
    meta["L"] = st.spec.length;
    meta["L_eff"] = st.length_effective;
    meta["seed"] = st.seed;
    meta["session_counter"] = st.session_counter;
    meta["plan"] = planner::plan_to_json(st.alloc);
    nlohmann::json dbp = nlohmann::json::array();
    for (Fe e : st.db_points) dbp.push_back(e.v);
    meta["db_points"] = dbp;
    nlohmann::json parts = nlohmann::json::array();
    for (const auto& ps : st.parts) {
        nlohmann::json poles = nlohmann::json::array();
        for (const auto& row : ps.pole_points) {
            nlohmann::json jr = nlohmann::json::array();
            for (Fe e : row) jr.push_back(e.v);
            poles.push_back(jr);
        }
        parts.push_back({{"r", ps.part.r}, {"K", ps.part.k}, {"x", ps.x}, {"y", ps.y}, {"poles", poles}});
    }
    meta["parts"] = parts;
    if (st.session)
        meta["session"] = {{"theta", st.session->theta}, {"id", st.session->id}, {"writes_done", st.session->writes_done}};
    else
        meta["session"] = nullptr;
    const std::string meta_str = meta.dump();

    std::string out;
    out.append(detail::kMagic, 4);
    detail::put_u16(out, detail::kVersion);
    detail::put_u64(out, st.field.modulus());
    detail::put_u32(out, std::uint32_t(meta_str.size()));
    out += meta_str;
    detail::put_u32(out, std::uint32_t(st.num_dbs) + 1);
    for (int db = 0; db < st.num_dbs; ++db) {
        u64 len = stored_symbols(st, db);
        detail::put_u64(out, len);
        for (const auto& partvec : st.stores[db])
            for (Fe e : partvec) detail::put_u64(out, e.v);
    }
    detail::put_u64(out, u64(st.shadow_model.size()));
    for (Fe e : st.shadow_model) detail::put_u64(out, e.v);
    return out;
}

inline SystemState restore(std::string_view bytes) {
    detail::ByteReader rd{bytes};
    auto magic = rd.bytes(4);
    if (std::string(magic) != std::string(detail::kMagic, 4)) fail(Errc::corrupt, "bad snapshot magic");
    if (rd.u16() != detail::kVersion) fail(Errc::corrupt, "unsupported snapshot version");
    const u64 q = rd.u64v();
    const auto meta_len = rd.u32();
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(rd.bytes(meta_len));
    } catch (const nlohmann::json::exception& e) {
        fail(Errc::corrupt, std::string("snapshot metadata unreadable: ") + e.what());
    }

    SystemState st;
    try {
        ModelSpec spec{meta.at("M").get<int>(), meta.at("L").get<u64>(), q};
        const auto& plan_j = meta.at("plan");
        Rational mu(plan_j.at("mu").at("num").get<std::int64_t>(), plan_j.at("mu").at("den").get<std::int64_t>());
        st = build(meta.at("N").get<int>(), mu, spec, meta.at("seed").get<u64>());
        if (st.length_effective != meta.at("L_eff").get<u64>()) fail(Errc::corrupt, "snapshot geometry mismatch");
        const auto& dbp = meta.at("db_points");
        if (dbp.size() != st.db_points.size()) fail(Errc::corrupt, "snapshot constant set mismatch");
        for (std::size_t i = 0; i < st.db_points.size(); ++i)
            if (dbp[i].get<u64>() != st.db_points[i].v) fail(Errc::corrupt, "snapshot constant set mismatch");
        const auto& parts_j = meta.at("parts");
        if (parts_j.size() != st.parts.size()) fail(Errc::corrupt, "snapshot part list mismatch");
        for (std::size_t i = 0; i < st.parts.size(); ++i)
            if (parts_j[i].at("r").get<int>() != st.parts[i].part.r || parts_j[i].at("K").get<int>() != st.parts[i].part.k)
                fail(Errc::corrupt, "snapshot part list mismatch");
        st.session_counter = meta.at("session_counter").get<u64>();
    } catch (const nlohmann::json::exception& e) {
        fail(Errc::corrupt, std::string("snapshot metadata incomplete: ") + e.what());
    }

    const auto array_count = rd.u32();
    if (int(array_count) != st.num_dbs + 1) fail(Errc::corrupt, "unexpected snapshot array count");
    for (int db = 0; db < st.num_dbs; ++db) {
        u64 len = rd.u64v();
        if (len != stored_symbols(st, db)) fail(Errc::corrupt, "database store length mismatch");
        for (auto& partvec : st.stores[db])
            for (Fe& e : partvec) {
                e.v = rd.u64v();
                if (e.v >= q) fail(Errc::corrupt, "stored symbol out of field range");
            }
    }
    u64 shadow_len = rd.u64v();
    if (shadow_len != st.shadow_model.size()) fail(Errc::corrupt, "shadow model length mismatch");
    for (Fe& e : st.shadow_model) {
        e.v = rd.u64v();
        if (e.v >= q) fail(Errc::corrupt, "model symbol out of field range");
    }
    if (rd.pos != bytes.size()) fail(Errc::corrupt, "trailing bytes after snapshot payload");

    if (!meta.at("session").is_null()) {
        ActiveSession ses;
        ses.theta = meta["session"].at("theta").get<int>();
        ses.id = meta["session"].at("id").get<u64>();
        ses.writes_done = meta["session"].at("writes_done").get<u64>();
        SubRng read_rng(st.seed, {detail::kSessionStream, ses.id, detail::kReadPhase});
        for (const auto& ps : st.parts)
            ses.query_noise.push_back(codec::random_query_noise(ps.sections[0].params, read_rng));
        ses.queries = detail::session_queries(st, ses.theta, ses.query_noise);
        st.session = std::move(ses);
    }
    return st;
}

} // namespace pruw::sim
