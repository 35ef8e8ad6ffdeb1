#include <doctest.h>

#include "pruw/codec.hpp"

using namespace pruw;
using namespace pruw::codec;

namespace {

// Minimal hand-buildable scheme: r=4, K=1, so x=y=1, no mute set. One submodel
// symbol per block, explicit constants over F_13.
SchemeParams tiny_scheme(int m_models = 1) {
    FieldCtx f(13);
    return make_params_with_constants(4, 1, m_models, f, FeVec{Fe{2}, Fe{3}, Fe{5}, Fe{7}}, {{FeVec{Fe{11}}}}, {});
}

FeVec read_via_protocol(const std::vector<EncodedSubpacket>& stores, const QuerySet& qs, const SchemeParams& p, int l) {
    FeVec answers(p.r);
    for (int n = 0; n < p.r; ++n) answers[n] = answer(p.field, stores[n], qs.q[n][l]);
    return decode(answers, l, p);
}

} // namespace

TEST_CASE("make_params shapes") {
    FieldCtx f13(13);

    auto p41 = make_params(4, 1, 2, f13, 1);
    CHECK(p41.x == 1);
    CHECK(p41.y == 1);
    CHECK(p41.mute_points.empty());

    auto p62 = make_params(6, 2, 2, f13, 1);
    CHECK(p62.x == 2);
    CHECK(p62.y == 1);
    CHECK(p62.mute_points.size() == 1);
    CHECK(p62.r == p62.y + p62.x + p62.k + 1);
    CHECK(p62.mute_points[0] == p62.db_points.back());

    auto p72 = make_params(7, 2, 3, FieldCtx(101), 1);
    CHECK(p72.x == 2);
    CHECK(p72.y == 2);

    // (10,5) needs 10 + 2*5 = 20 distinct nonzero constants; F_13 cannot supply them.
    CHECK_THROWS_AS(make_params(10, 5, 2, f13, 1), Error);
    try {
        make_params(10, 5, 2, f13, 1);
    } catch (const Error& e) {
        CHECK(e.code() == Errc::field_too_small);
    }
    CHECK_THROWS_AS(make_params(4, 2, 2, f13, 1), Error); // infeasible shape
}

TEST_CASE("storage encoding matches the hand-expanded form") {
    SchemeParams p = tiny_scheme();
    const FieldCtx& f = p.field;

    SUBCASE("all-zero plaintext and noise encode to zero") {
        PlainSubpacket plain(p);
        StorageNoise noise = StorageNoise::zero(p);
        for (int n = 0; n < p.r; ++n)
            for (Fe e : encode_storage(plain, noise, p, n)) CHECK(e == f.zero());
    }

    SUBCASE("M=1, y=1, K=1, x=1: store is w/(pole-alpha) + I0 + alpha*I1") {
        PlainSubpacket plain(p);
        plain.at(0, 0, 0) = Fe{9};
        StorageNoise noise(p);
        noise.at(0, 0, 0) = Fe{4};
        noise.at(0, 1, 0) = Fe{6};
        for (int n = 0; n < p.r; ++n) {
            Fe alpha = p.db_points[n];
            Fe expect = f.add(f.add(f.mul(Fe{9}, f.inv(f.sub(Fe{11}, alpha))), Fe{4}), f.mul(alpha, Fe{6}));
            FeVec enc = encode_storage(plain, noise, p, n);
            REQUIRE(enc.size() == 1);
            CHECK(enc[0] == expect);
        }
    }

    SUBCASE("encoding is linear: enc(w, I) = enc(w, 0) + enc(0, I)") {
        SubRng rng(5, {1});
        SchemeParams p62 = make_params(6, 2, 3, FieldCtx(101), 2);
        PlainSubpacket plain = PlainSubpacket::random(p62, rng);
        StorageNoise noise = StorageNoise::random(p62, rng);
        for (int n = 0; n < p62.r; ++n) {
            FeVec full = encode_storage(plain, noise, p62, n);
            FeVec only_w = encode_storage(plain, StorageNoise::zero(p62), p62, n);
            FeVec only_n = encode_storage(PlainSubpacket(p62), noise, p62, n);
            for (std::size_t i = 0; i < full.size(); ++i)
                REQUIRE(full[i] == p62.field.add(only_w[i], only_n[i]));
        }
    }
}

TEST_CASE("queries take the stated K=1 form") {
    SchemeParams p = tiny_scheme(2);
    const FieldCtx& f = p.field;
    QueryNoise z = zero_query_noise(p);
    z[0] = FeVec{Fe{3}, Fe{8}};

    QuerySet qs = gen_queries_with_noise(2, p, z);
    for (int n = 0; n < p.r; ++n) {
        Fe alpha = p.db_points[n];
        Fe mask = f.sub(Fe{11}, alpha); // prod over the single pole
        REQUIRE(qs.q[n][0].size() == 2);
        CHECK(qs.q[n][0][0] == f.mul(mask, Fe{3}));                 // no picked entry at m=1
        CHECK(qs.q[n][0][1] == f.add(f.one(), f.mul(mask, Fe{8}))); // picked entry at m=2 (theta)
    }

    SUBCASE("zero noise reveals the queried position") {
        QuerySet noiseless = gen_queries_with_noise(1, p, zero_query_noise(p));
        for (int n = 0; n < p.r; ++n) {
            CHECK(noiseless.q[n][0][0] != f.zero());
            CHECK(noiseless.q[n][0][1] == f.zero());
        }
    }

    CHECK_THROWS_AS(gen_queries_with_noise(0, p, zero_query_noise(p)), Error);
    CHECK_THROWS_AS(gen_queries_with_noise(3, p, zero_query_noise(p)), Error);
}

TEST_CASE("answers are inner products and expand symbolically") {
    SchemeParams p = tiny_scheme();
    const FieldCtx& f = p.field;

    SUBCASE("zero store answers zero") {
        FeVec store(1, f.zero());
        FeVec query{Fe{7}};
        CHECK(answer(f, store, query) == f.zero());
    }

    SUBCASE("M=1, y=1, K=1 hand expansion") {
        const Fe w{9}, i0{4}, i1{6}, zval{2};
        PlainSubpacket plain(p);
        plain.at(0, 0, 0) = w;
        StorageNoise noise(p);
        noise.at(0, 0, 0) = i0;
        noise.at(0, 1, 0) = i1;
        QueryNoise z = zero_query_noise(p);
        z[0][0] = zval;
        QuerySet qs = gen_queries_with_noise(1, p, z);
        for (int n = 0; n < p.r; ++n) {
            Fe alpha = p.db_points[n];
            FeVec store = encode_storage(plain, noise, p, n);
            // store = w/(pole-a) + i0 + a*i1; query = 1 + (pole-a)*z
            Fe s = f.add(f.add(f.mul(w, f.inv(f.sub(Fe{11}, alpha))), i0), f.mul(alpha, i1));
            Fe q = f.add(f.one(), f.mul(f.sub(Fe{11}, alpha), zval));
            CHECK(answer(f, store, qs.q[n][0]) == f.mul(s, q));
        }
    }

    CHECK_THROWS_AS(answer(FieldCtx(13), FeVec{Fe{1}, Fe{2}}, FeVec{Fe{1}}), Error);
}

TEST_CASE("read path round-trips across the feasible scheme grid") {
    FieldCtx big(2147483647ull);
    FieldCtx small(101);
    int cases = 0;
    for (auto [r, k] : {std::pair{4, 1}, {5, 1}, {5, 2}, {6, 1}, {6, 2}, {7, 2}, {7, 3}, {8, 3}, {9, 2}, {10, 3}}) {
        for (const FieldCtx* f : {&big, &small}) {
            SchemeParams p = make_params(r, k, 3, *f, u64(100 * r + k));
            SubRng rng(u64(r * 13 + k), {7});
            PlainSubpacket plain = PlainSubpacket::random(p, rng);
            StorageNoise noise = StorageNoise::random(p, rng);
            std::vector<EncodedSubpacket> stores;
            for (int n = 0; n < p.r; ++n) stores.push_back(encode_storage(plain, noise, p, n));
            for (int theta = 1; theta <= p.m_models; ++theta) {
                QuerySet qs = gen_queries(theta, p, rng);
                std::size_t downloaded = 0, recovered = 0;
                for (int l = 0; l < p.k; ++l) {
                    FeVec got = read_via_protocol(stores, qs, p, l);
                    downloaded += std::size_t(p.r); // one scalar answer per database per slot
                    recovered += got.size();
                    for (int i = 0; i < p.y; ++i) REQUIRE(got[i] == plain.at(theta - 1, i, l));
                }
                REQUIRE(downloaded == std::size_t(p.k) * p.r); // K*r symbols read per subpacket
                REQUIRE(recovered == std::size_t(p.k) * p.y);  // for K*y plaintext symbols
            }
            REQUIRE(storage_fit_residuals(stores, p) == 0);
            ++cases;
        }
    }
    CHECK(cases == 20);
}

TEST_CASE("decode rejects incomplete answer sets") {
    SchemeParams p = tiny_scheme();
    CHECK_THROWS_AS(decode(FeVec{Fe{1}, Fe{2}}, 0, p), Error);
    try {
        decode(FeVec{Fe{1}, Fe{2}}, 0, p);
    } catch (const Error& e) {
        CHECK(e.code() == Errc::incomplete);
    }
}

TEST_CASE("update encoding") {
    SUBCASE("y=1, K=1: scalar is delta + (pole-alpha)*zhat") {
        SchemeParams p = tiny_scheme();
        const FieldCtx& f = p.field;
        std::vector<FeVec> deltas{FeVec{Fe{5}}};
        UpdatePacket up = encode_update_with_noise(deltas, p, FeVec{Fe{3}});
        for (int n = 0; n < p.r; ++n) {
            REQUIRE(up.u[n].size() == 1);
            CHECK(up.u[n][0] == f.add(Fe{5}, f.mul(f.sub(Fe{11}, p.db_points[n]), Fe{3})));
        }
    }

    SUBCASE("zero deltas and zero zhat give all-zero scalars") {
        SchemeParams p = make_params(6, 2, 2, FieldCtx(101), 3);
        std::vector<FeVec> deltas(p.y, FeVec(p.k));
        UpdatePacket up = encode_update_with_noise(deltas, p, FeVec(p.k));
        for (int n = 0; n < p.r; ++n)
            for (Fe e : up.u[n]) CHECK(e == p.field.zero());
    }

    SUBCASE("mute databases receive no scalars and counts match the write cost") {
        SchemeParams p = make_params(6, 2, 2, FieldCtx(101), 3);
        SubRng rng(9, {1});
        std::vector<FeVec> deltas(p.y, FeVec(p.k));
        deltas[0][0] = Fe{7};
        UpdatePacket up = encode_update(deltas, p, rng);
        int receivers = 0;
        for (int n = 0; n < p.r; ++n) {
            if (p.is_mute(n)) {
                CHECK(up.u[n].empty());
            } else {
                CHECK(int(up.u[n].size()) == p.k);
                ++receivers;
            }
        }
        CHECK(receivers == p.r - (p.x - p.y));
        CHECK(up.scalar_count() == std::size_t(p.k) * (p.r - (p.x - p.y)));
    }
}

TEST_CASE("null shaper values") {
    SUBCASE("no mute set: all ones") {
        SchemeParams p = tiny_scheme(2);
        FeVec w = null_shaper(p, 1, 0);
        for (Fe e : w) CHECK(e == p.field.one());
    }

    SUBCASE("odd parity: zero at the mute database, hand value elsewhere") {
        SchemeParams p = make_params(6, 2, 2, FieldCtx(13), 4);
        const FieldCtx& f = p.field;
        const Fe mute = p.mute_points[0];
        for (int n = 0; n < p.r; ++n)
            for (int l = 0; l < p.k; ++l) {
                FeVec w = null_shaper(p, n, l);
                for (int j = 0; j < p.y; ++j) {
                    Fe expect = f.div(f.sub(mute, p.db_points[n]), f.sub(mute, p.pole_points[j][l]));
                    for (int m = 0; m < p.m_models; ++m) CHECK(w[std::size_t(j) * p.m_models + m] == expect);
                }
                if (p.is_mute(n))
                    for (Fe e : w) CHECK(e == f.zero());
            }
    }
}

TEST_CASE("write path: apply_update turns the store into the updated encoding") {
    for (auto [r, k] : {std::pair{4, 1}, {5, 1}, {6, 1}, {6, 2}, {7, 2}, {7, 3}, {9, 2}}) {
        FieldCtx f(2147483647ull);
        SchemeParams p = make_params(r, k, 3, f, u64(17 * r + k));
        SubRng rng(u64(31 * r + k), {11});
        PlainSubpacket plain = PlainSubpacket::random(p, rng);
        StorageNoise noise = StorageNoise::random(p, rng);
        std::vector<EncodedSubpacket> stores;
        for (int n = 0; n < p.r; ++n) stores.push_back(encode_storage(plain, noise, p, n));
        std::vector<EncodedSubpacket> before = stores;

        const int theta = 2;
        QuerySet qs = gen_queries(theta, p, rng);
        std::vector<FeVec> deltas(p.y, FeVec(p.k));
        for (auto& row : deltas)
            for (auto& e : row) e = rng.next_fe(f);
        UpdatePacket up = encode_update(deltas, p, rng);

        for (int n = 0; n < p.r; ++n) {
            if (up.u[n].empty()) continue;
            apply_update(stores[n], up.u[n], qs.q[n], p, n);
        }

        // Mute databases saw no traffic and keep their exact bytes.
        for (int n = 0; n < p.r; ++n)
            if (p.is_mute(n)) REQUIRE(stores[n] == before[n]);

        // Reading theta back (all r databases, mute included) returns w + delta.
        for (int l = 0; l < p.k; ++l) {
            FeVec got = read_via_protocol(stores, qs, p, l);
            for (int i = 0; i < p.y; ++i) REQUIRE(got[i] == f.add(plain.at(theta - 1, i, l), deltas[i][l]));
        }

        // Other submodels are untouched (fresh query set per index).
        for (int other : {1, 3}) {
            QuerySet qs2 = gen_queries(other, p, rng);
            for (int l = 0; l < p.k; ++l) {
                FeVec got = read_via_protocol(stores, qs2, p, l);
                for (int i = 0; i < p.y; ++i) REQUIRE(got[i] == plain.at(other - 1, i, l));
            }
        }

        // The updated stores are still a valid rational-plus-polynomial encoding.
        REQUIRE(storage_fit_residuals(stores, p) == 0);
    }
}

TEST_CASE("zero update scalars leave the store unchanged") {
    SchemeParams p = tiny_scheme(2);
    SubRng rng(2, {3});
    PlainSubpacket plain = PlainSubpacket::random(p, rng);
    StorageNoise noise = StorageNoise::random(p, rng);
    FeVec store = encode_storage(plain, noise, p, 0);
    FeVec before = store;
    QuerySet qs = gen_queries(1, p, rng);
    UpdatePacket up = encode_update_with_noise({FeVec{Fe{0}}}, p, FeVec{Fe{0}});
    apply_update(store, up.u[0], qs.q[0], p, 0);
    CHECK(store == before);
}

TEST_CASE("storage consistency check has power: corruption is detected") {
    FieldCtx f(101);
    SchemeParams p = make_params(6, 2, 2, f, 8);
    SubRng rng(4, {5});
    PlainSubpacket plain = PlainSubpacket::random(p, rng);
    StorageNoise noise = StorageNoise::random(p, rng);
    std::vector<EncodedSubpacket> stores;
    for (int n = 0; n < p.r; ++n) stores.push_back(encode_storage(plain, noise, p, n));
    REQUIRE(storage_fit_residuals(stores, p) == 0);
    stores[p.r - 1][0] = f.add(stores[p.r - 1][0], f.one());
    CHECK(storage_fit_residuals(stores, p) > 0);
}

TEST_CASE("the storage fit recovers the plaintext without any queries") {
    for (auto [r, k] : {std::pair{4, 1}, {6, 2}, {7, 2}, {8, 3}}) {
        FieldCtx f(2147483647ull);
        SchemeParams p = make_params(r, k, 3, f, u64(7 * r + k));
        SubRng rng(u64(r + 41 * k), {2});
        PlainSubpacket plain = PlainSubpacket::random(p, rng);
        StorageNoise noise = StorageNoise::random(p, rng);
        std::vector<EncodedSubpacket> stores;
        for (int n = 0; n < p.r; ++n) stores.push_back(encode_storage(plain, noise, p, n));

        StorageFit fit = storage_fit(stores, p);
        REQUIRE(fit.residuals == 0);
        REQUIRE(fit.plain.w == plain.w);

        // After a masked write the fit recovers plain + delta at theta and the
        // untouched symbols elsewhere.
        const int theta = 3;
        QuerySet qs = gen_queries(theta, p, rng);
        std::vector<FeVec> deltas(p.y, FeVec(p.k));
        for (auto& row : deltas)
            for (auto& e : row) e = rng.next_fe(f);
        UpdatePacket up = encode_update(deltas, p, rng);
        for (int n = 0; n < p.r; ++n)
            if (!up.u[n].empty()) apply_update(stores[n], up.u[n], qs.q[n], p, n);

        StorageFit after = storage_fit(stores, p);
        REQUIRE(after.residuals == 0);
        for (int m = 0; m < p.m_models; ++m)
            for (int i = 0; i < p.y; ++i)
                for (int l = 0; l < p.k; ++l) {
                    Fe expect = plain.at(m, i, l);
                    if (m == theta - 1) expect = f.add(expect, deltas[i][l]);
                    REQUIRE(after.plain.at(m, i, l) == expect);
                }
    }
}
