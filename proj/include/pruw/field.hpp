#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pruw/errors.hpp"

namespace pruw {

using u64 = std::uint64_t;
using u128 = unsigned __int128;

/// One element of a prime field F_q. The modulus lives in FieldCtx; an Fe is
/// only meaningful together with the context it was produced by.
struct Fe {
    u64 v = 0;

    friend bool operator==(Fe a, Fe b) { return a.v == b.v; }
    friend bool operator!=(Fe a, Fe b) { return a.v != b.v; }
    friend bool operator<(Fe a, Fe b) { return a.v < b.v; }
};

using FeVec = std::vector<Fe>;

namespace detail {

inline u64 mulmod(u64 a, u64 b, u64 m) { return static_cast<u64>(u128(a) * b % m); }

inline u64 powmod(u64 a, u64 e, u64 m) {
    u64 r = 1 % m;
    a %= m;
    while (e) {
        if (e & 1) r = mulmod(r, a, m);
        a = mulmod(a, a, m);
        e >>= 1;
    }
    return r;
}

// Deterministic Miller-Rabin; the witness set below is exact for all 64-bit inputs.
inline bool is_prime_u64(u64 n) {
    if (n < 2) return false;
    for (u64 p : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
        if (n % p == 0) return n == p;
    }
    u64 d = n - 1;
    int s = 0;
    while ((d & 1) == 0) {
        d >>= 1;
        ++s;
    }
    for (u64 a : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
        u64 x = powmod(a, d, n);
        if (x == 1 || x == n - 1) continue;
        bool composite = true;
        for (int i = 0; i < s - 1; ++i) {
            x = mulmod(x, x, n);
            if (x == n - 1) {
                composite = false;
                break;
            }
        }
        if (composite) return false;
    }
    return true;
}

} // namespace detail

/// Prime field context. All arithmetic is mod q with canonical representatives
/// in [0, q). Cheap to copy; operations are pure.
class FieldCtx {
public:
    static constexpr u64 kDefaultModulus = 2147483647ull; // 2^31 - 1

    explicit FieldCtx(u64 q) : q_(q) {
        if (q < 2 || !detail::is_prime_u64(q)) fail(Errc::not_prime, "field modulus must be prime, got " + std::to_string(q));
        if (q >= (1ull << 63)) fail(Errc::bad_value, "field modulus must fit in 63 bits");
    }

    u64 modulus() const { return q_; }

    Fe zero() const { return Fe{0}; }
    Fe one() const { return Fe{1 % q_}; }
    Fe from_uint(u64 x) const { return Fe{x % q_}; }

    Fe add(Fe a, Fe b) const {
        u64 s = a.v + b.v;
        if (s >= q_) s -= q_;
        return Fe{s};
    }

    Fe sub(Fe a, Fe b) const { return Fe{a.v >= b.v ? a.v - b.v : a.v + q_ - b.v}; }

    Fe neg(Fe a) const { return Fe{a.v == 0 ? 0 : q_ - a.v}; }

    Fe mul(Fe a, Fe b) const { return Fe{detail::mulmod(a.v, b.v, q_)}; }

    Fe pow(Fe a, u64 e) const { return Fe{detail::powmod(a.v, e, q_)}; }

    // Fermat inverse; q is prime so a^(q-2) works for every nonzero a.
    Fe inv(Fe a) const {
        if (a.v == 0) fail(Errc::division_by_zero, "zero has no multiplicative inverse");
        return pow(a, q_ - 2);
    }

    Fe div(Fe a, Fe b) const { return mul(a, inv(b)); }

    bool operator==(const FieldCtx& o) const { return q_ == o.q_; }

private:
    u64 q_;
};

/// field_new per contract: validates primality and returns a usable context.
inline FieldCtx field_new(u64 q) { return FieldCtx(q); }

/// Dense row-major matrix over F_q.
struct FeMat {
    std::size_t rows = 0;
    std::size_t cols = 0;
    FeVec a;

    FeMat() = default;
    FeMat(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c) {}

    Fe& at(std::size_t r, std::size_t c) { return a[r * cols + c]; }
    Fe at(std::size_t r, std::size_t c) const { return a[r * cols + c]; }
};

inline Fe dot(const FieldCtx& f, std::span<const Fe> a, std::span<const Fe> b) {
    if (a.size() != b.size()) fail(Errc::shape_mismatch, "dot: length mismatch");
    Fe acc = f.zero();
    for (std::size_t i = 0; i < a.size(); ++i) acc = f.add(acc, f.mul(a[i], b[i]));
    return acc;
}

inline FeVec mat_vec(const FieldCtx& f, const FeMat& m, std::span<const Fe> x) {
    if (m.cols != x.size()) fail(Errc::shape_mismatch, "mat_vec: dimension mismatch");
    FeVec y(m.rows);
    for (std::size_t r = 0; r < m.rows; ++r)
        y[r] = dot(f, std::span<const Fe>(m.a).subspan(r * m.cols, m.cols), x);
    return y;
}

/// Solves A x = b by Gaussian elimination with first-nonzero pivoting.
/// Exact field arithmetic, so "first nonzero" is all the pivoting needed.
inline FeVec solve_linear(const FieldCtx& f, FeMat A, FeVec b) {
    if (A.rows != A.cols) fail(Errc::shape_mismatch, "solve_linear: matrix must be square");
    if (A.rows != b.size()) fail(Errc::shape_mismatch, "solve_linear: rhs length mismatch");
    const std::size_t n = A.rows;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        while (piv < n && A.at(piv, col).v == 0) ++piv;
        if (piv == n) fail(Errc::singular, "solve_linear: singular system");
        if (piv != col) {
            for (std::size_t c = 0; c < n; ++c) std::swap(A.at(piv, c), A.at(col, c));
            std::swap(b[piv], b[col]);
        }
        const Fe pinv = f.inv(A.at(col, col));
        for (std::size_t c = col; c < n; ++c) A.at(col, c) = f.mul(A.at(col, c), pinv);
        b[col] = f.mul(b[col], pinv);
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col || A.at(r, col).v == 0) continue;
            const Fe factor = A.at(r, col);
            for (std::size_t c = col; c < n; ++c)
                A.at(r, c) = f.sub(A.at(r, c), f.mul(factor, A.at(col, c)));
            b[r] = f.sub(b[r], f.mul(factor, b[col]));
        }
    }
    return b;
}

/// Rational-plus-polynomial evaluation matrix: row n is
///   [ 1/(fs[0]-alphas[n]), ..., 1/(fs[y-1]-alphas[n]), 1, alphas[n], ..., alphas[n]^d ].
/// With distinct, non-colliding points and rows = y + d + 1 the matrix is invertible,
/// which is what makes the decoder's linear system solvable.
inline FeMat cauchy_vandermonde(const FieldCtx& f, std::span<const Fe> alphas, std::span<const Fe> fs,
                                std::size_t noise_degree) {
    for (std::size_t i = 0; i < alphas.size(); ++i)
        for (std::size_t j = i + 1; j < alphas.size(); ++j)
            if (alphas[i] == alphas[j]) fail(Errc::degenerate_constants, "repeated alpha point");
    for (std::size_t i = 0; i < fs.size(); ++i)
        for (std::size_t j = i + 1; j < fs.size(); ++j)
            if (fs[i] == fs[j]) fail(Errc::degenerate_constants, "repeated pole point");
    for (Fe a : alphas)
        for (Fe p : fs)
            if (a == p) fail(Errc::degenerate_constants, "alpha collides with pole point");

    FeMat m(alphas.size(), fs.size() + noise_degree + 1);
    for (std::size_t r = 0; r < alphas.size(); ++r) {
        for (std::size_t j = 0; j < fs.size(); ++j)
            m.at(r, j) = f.inv(f.sub(fs[j], alphas[r]));
        Fe p = f.one();
        for (std::size_t t = 0; t <= noise_degree; ++t) {
            m.at(r, fs.size() + t) = p;
            p = f.mul(p, alphas[r]);
        }
    }
    return m;
}

} // namespace pruw
