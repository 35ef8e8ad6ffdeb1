#pragma once

#include <cstdint>
#include <initializer_list>

#include "pruw/field.hpp"

namespace pruw {

/// Counter-based deterministic generator (splitmix64 finalizer over a keyed
/// counter). A stream is fully determined by (seed, stream ids), so any draw
/// sequence can be reproduced from scratch without serializing generator
/// internals.
class SubRng {
public:
    SubRng(u64 seed, std::initializer_list<u64> stream_ids) : key_(mix(seed ^ 0x8c63'd9c1'2b5f'37a1ull)) {
        for (u64 id : stream_ids) key_ = mix(key_ ^ (id + 0x9e37'79b9'7f4a'7c15ull));
    }

    u64 next_u64() { return mix(key_ + 0x9e37'79b9'7f4a'7c15ull * ++counter_); }

    /// Uniform field element via rejection sampling (no modulo bias).
    Fe next_fe(const FieldCtx& f) {
        const u64 q = f.modulus();
        const u64 threshold = (0 - q) % q; // 2^64 mod q
        for (;;) {
            u64 r = next_u64();
            if (r >= threshold) return Fe{r % q};
        }
    }

    /// Uniform nonzero field element.
    Fe next_nonzero_fe(const FieldCtx& f) {
        for (;;) {
            Fe e = next_fe(f);
            if (e.v != 0) return e;
        }
    }

private:
    static u64 mix(u64 x) {
        x += 0x9e37'79b9'7f4a'7c15ull;
        x = (x ^ (x >> 30)) * 0xbf58'476d'1ce4'e5b9ull;
        x = (x ^ (x >> 27)) * 0x94d0'49bb'1331'11ebull;
        return x ^ (x >> 31);
    }

    u64 key_;
    u64 counter_ = 0;
};

/// Draws `count` distinct field elements, skipping zero and anything in
/// `avoid`. Errors when the field cannot supply that many.
inline FeVec draw_distinct_nonzero(const FieldCtx& f, std::size_t count, SubRng& rng, const FeVec& avoid = {}) {
    if (f.modulus() < count + avoid.size() + 1)
        fail(Errc::field_too_small,
             "field of size " + std::to_string(f.modulus()) + " cannot supply " + std::to_string(count) +
                 " fresh distinct nonzero constants");
    FeVec out;
    out.reserve(count);
    auto taken = [&](Fe e) {
        for (Fe a : avoid)
            if (a == e) return true;
        for (Fe a : out)
            if (a == e) return true;
        return false;
    };
    while (out.size() < count) {
        Fe e = rng.next_nonzero_fe(f);
        if (!taken(e)) out.push_back(e);
    }
    return out;
}

} // namespace pruw
