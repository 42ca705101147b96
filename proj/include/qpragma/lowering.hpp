#pragma once

#include <cstdint>
#include <functional>
#include <numeric>
#include <vector>

#include "qpragma/qir.hpp"

namespace qpragma {

// A register is an ordered list of qubit addresses; index 0 is the
// least-significant bit. Displayed bitstrings put the most-significant bit
// leftmost, so quint<8> holding 12 renders "00001100".

constexpr double kPi = 3.14159265358979323846;

/// Supplies fresh qubit addresses for lowering-internal ancillas.
using AddrSupplier = std::function<std::uint32_t()>;

/// A lowered operator: IR with un-expanded ComputeBlocks plus the ancilla
/// addresses the sequence allocates (to be freed once it has executed).
struct Lowered {
    Sequence seq;
    std::vector<std::uint32_t> ancillas;
};

// ---------------------------------------------------------------------------
// State preparation / measurement casts
// ---------------------------------------------------------------------------

/// X gates on the qubits where the encoding bit of v is 1. `v` must already
/// be reduced to the register width (two's complement for signed values).
inline Sequence get_init(const std::vector<std::uint32_t>& reg, std::uint64_t v) {
    Sequence s;
    for (std::size_t k = 0; k < reg.size(); ++k)
        if ((v >> k) & 1) s.push_back(QInstr::make_gate(Gate::X, {reg[k]}));
    return s;
}

/// Unsigned value of a measured bitstring, bits[k] = bit of qubit k.
inline std::uint64_t bits_to_uint(const std::vector<int>& bits) {
    std::uint64_t v = 0;
    for (std::size_t k = 0; k < bits.size(); ++k)
        if (bits[k]) v |= std::uint64_t{1} << k;
    return v;
}

/// Two's complement interpretation over the bitstring's width.
inline std::int64_t bits_to_int(const std::vector<int>& bits) {
    std::uint64_t v = bits_to_uint(bits);
    const std::size_t n = bits.size();
    if (n < 64 && bits[n - 1]) v -= std::uint64_t{1} << n;
    return static_cast<std::int64_t>(v);
}

// ---------------------------------------------------------------------------
// QFT (Listing-style construction: H column with descending controlled phases;
// no terminal swaps, so the unitary is the DFT composed with bit reversal)
// ---------------------------------------------------------------------------

inline Sequence qft(const std::vector<std::uint32_t>& reg) {
    Sequence s;
    const std::size_t n = reg.size();
    for (std::size_t idx = 0; idx < n; ++idx) {
        s.push_back(QInstr::make_gate(Gate::H, {reg[idx]}));
        for (std::size_t ctr = idx + 1; ctr < n; ++ctr) {
            QInstr ph = QInstr::make_gate(Gate::PH, {reg[idx]},
                                          kPi / static_cast<double>(1ull << (ctr - idx)));
            ph.ctrls.push_back(reg[ctr]);
            s.push_back(ph);
        }
    }
    return s;
}

// ---------------------------------------------------------------------------
// Draper arithmetic
// ---------------------------------------------------------------------------

namespace detail {
/// The Fourier basis used by the adders: the QFT circuit run over the
/// reversed address list, so that a diagonal phase layer in bit order
/// implements addition.
inline Sequence add_basis(const std::vector<std::uint32_t>& reg) {
    return qft({reg.rbegin(), reg.rend()});
}
}  // namespace detail

/// |x⟩ ↦ |x + sign·c mod 2^n⟩. The basis change sits in a ComputeBlock so
/// controlled versions control only the phase layer.
inline Sequence lower_add_const(const std::vector<std::uint32_t>& reg, std::uint64_t c,
                                int sign) {
    const std::size_t n = reg.size();
    const std::uint64_t mask = n >= 64 ? ~0ull : ((std::uint64_t{1} << n) - 1);
    c &= mask;
    Sequence s;
    s.push_back(QInstr::make_compute(detail::add_basis(reg)));
    for (std::size_t k = 0; k < n; ++k) {
        double angle = sign * kPi * static_cast<double>(c) / static_cast<double>(1ull << k);
        angle = normalize_angle(angle);
        if (angle != 0.0) s.push_back(QInstr::make_gate(Gate::PH, {reg[k]}, angle));
    }
    return s;
}

/// |x⟩|y⟩ ↦ |x + sign·y mod 2^n⟩|y⟩ with src-controlled phases.
inline Sequence lower_add_quantum(const std::vector<std::uint32_t>& dst,
                                  const std::vector<std::uint32_t>& src, int sign) {
    for (auto d : dst)
        for (auto t : src)
            if (d == t) throw ExecError("quantum addition requires disjoint registers");
    Sequence s;
    s.push_back(QInstr::make_compute(detail::add_basis(dst)));
    for (std::size_t k = 0; k < dst.size(); ++k) {
        for (std::size_t j = 0; j <= k && j < src.size(); ++j) {
            QInstr ph = QInstr::make_gate(
                Gate::PH, {dst[k]}, sign * kPi / static_cast<double>(1ull << (k - j)));
            ph.ctrls.push_back(src[j]);
            s.push_back(ph);
        }
    }
    return s;
}

// ---------------------------------------------------------------------------
// XOR
// ---------------------------------------------------------------------------

inline Sequence lower_xor_const(const std::vector<std::uint32_t>& dst, std::uint64_t c) {
    Sequence s;
    for (std::size_t k = 0; k < dst.size(); ++k)
        if ((c >> k) & 1) s.push_back(QInstr::make_gate(Gate::X, {dst[k]}));
    return s;
}

inline Sequence lower_xor_quantum(const std::vector<std::uint32_t>& dst,
                                  const std::vector<std::uint32_t>& src) {
    if (dst.size() != src.size()) throw ExecError("bitwise XOR requires equal widths");
    Sequence s;
    for (std::size_t k = 0; k < dst.size(); ++k)
        s.push_back(QInstr::make_gate(Gate::CNOT, {src[k], dst[k]}));
    return s;
}

// ---------------------------------------------------------------------------
// Comparators
// ---------------------------------------------------------------------------

enum class CmpOp { eq, ne, lt, le, gt, ge };

namespace detail {

inline void flip_target(Sequence& s, std::uint32_t target) {
    s.push_back(QInstr::make_gate(Gate::X, {target}));
}

/// target ^= (region == c); compute/uncompute via a ComputeBlock.
inline void emit_eq(Sequence& s, const std::vector<std::uint32_t>& reg, std::uint64_t c,
                    std::uint32_t target) {
    const std::size_t n = reg.size();
    if (n < 64 && c >= (std::uint64_t{1} << n)) return;  // constant false
    Sequence prep;
    for (std::size_t k = 0; k < n; ++k)
        if (!((c >> k) & 1)) prep.push_back(QInstr::make_gate(Gate::X, {reg[k]}));
    if (!prep.empty()) s.push_back(QInstr::make_compute(std::move(prep)));
    QInstr mcx = QInstr::make_gate(Gate::X, {target});
    mcx.ctrls = reg;
    s.push_back(mcx);
}

/// target ^= (region < c), via a borrow ancilla extending the region: after
/// adding 2^(n+1) − c over the widened register, the extension qubit reads 1
/// exactly when the region value is below c.
inline void emit_lt(Lowered& out, const std::vector<std::uint32_t>& reg, std::uint64_t c,
                    std::uint32_t target, const AddrSupplier& fresh) {
    const std::size_t n = reg.size();
    if (c == 0) return;  // constant false
    if (n < 64 && c >= (std::uint64_t{1} << n)) {  // constant true
        flip_target(out.seq, target);
        return;
    }
    const std::uint32_t anc = fresh();
    out.ancillas.push_back(anc);
    QInstr alloc;
    alloc.op = QOp::alloc;
    alloc.targets = {anc};
    out.seq.push_back(alloc);
    std::vector<std::uint32_t> wide = reg;
    wide.push_back(anc);
    Sequence add = lower_add_const(wide, (std::uint64_t{1} << (n + 1)) - c, +1);
    out.seq.push_back(QInstr::make_compute(std::move(add)));
    out.seq.push_back(QInstr::make_gate(Gate::CNOT, {anc, target}));
}

}  // namespace detail

/// target ^= predicate(region value, c). Region state is restored by compute
/// expansion; any carry ancilla is listed in Lowered::ancillas.
inline Lowered lower_compare(const std::vector<std::uint32_t>& reg, CmpOp op, std::uint64_t c,
                             std::uint32_t target, const AddrSupplier& fresh) {
    Lowered out;
    const std::size_t n = reg.size();
    const std::uint64_t limit = n >= 64 ? 0 : (std::uint64_t{1} << n);  // 0 means "huge"
    auto in_range = [&](std::uint64_t v) { return limit == 0 || v < limit; };
    switch (op) {
        case CmpOp::eq:
            detail::emit_eq(out.seq, reg, c, target);
            break;
        case CmpOp::ne:
            detail::emit_eq(out.seq, reg, c, target);
            detail::flip_target(out.seq, target);
            break;
        case CmpOp::lt:
            detail::emit_lt(out, reg, c, target, fresh);
            break;
        case CmpOp::ge:  // v >= c ⇔ not (v < c)
            detail::emit_lt(out, reg, c, target, fresh);
            detail::flip_target(out.seq, target);
            break;
        case CmpOp::le:  // v <= c ⇔ v < c+1 (c+1 out of range ⇒ constant true)
            if (in_range(c))
                detail::emit_lt(out, reg, c + 1, target, fresh);
            else
                detail::flip_target(out.seq, target);
            break;
        case CmpOp::gt:  // v > c ⇔ not (v < c+1); constant false past the range
            if (in_range(c)) {
                detail::emit_lt(out, reg, c + 1, target, fresh);
                detail::flip_target(out.seq, target);
            }
            break;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Boolean combinators for quantum-condition evaluation
// ---------------------------------------------------------------------------

/// target ^= (a AND b)
inline Sequence lower_and(std::uint32_t a, std::uint32_t b, std::uint32_t target) {
    return {QInstr::make_gate(Gate::CCNOT, {a, b, target})};
}

/// target ^= (a OR b): X-conjugated Toffoli plus an unconditional flip.
inline Sequence lower_or(std::uint32_t a, std::uint32_t b, std::uint32_t target) {
    Sequence s;
    s.push_back(QInstr::make_compute(
        {QInstr::make_gate(Gate::X, {a}), QInstr::make_gate(Gate::X, {b})}));
    s.push_back(QInstr::make_gate(Gate::CCNOT, {a, b, target}));
    s.push_back(QInstr::make_gate(Gate::X, {target}));
    return s;
}

/// target ^= (a XOR b)
inline Sequence lower_xor_bool(std::uint32_t a, std::uint32_t b, std::uint32_t target) {
    return {QInstr::make_gate(Gate::CNOT, {a, target}),
            QInstr::make_gate(Gate::CNOT, {b, target})};
}

/// target ^= (NOT a)
inline Sequence lower_not(std::uint32_t a, std::uint32_t target) {
    return {QInstr::make_gate(Gate::CNOT, {a, target}),
            QInstr::make_gate(Gate::X, {target})};
}

// ---------------------------------------------------------------------------
// Walls
// ---------------------------------------------------------------------------

/// Apply a one-qubit gate to the K least-significant qubits.
inline Sequence wall(Gate g, std::size_t k, const std::vector<std::uint32_t>& reg) {
    if (k > reg.size()) throw ExecError("wall width exceeds register width");
    if (gate_arity(g) != 1 || gate_has_angle(g))
        throw ExecError("wall supports parameter-free one-qubit gates");
    Sequence s;
    for (std::size_t i = 0; i < k; ++i) s.push_back(QInstr::make_gate(g, {reg[i]}));
    return s;
}

// ---------------------------------------------------------------------------
// Modular exponentiation embedding
// ---------------------------------------------------------------------------

/// (x, y) ↦ (x, y XOR base^x mod modulus) as one self-inverse Perm.
inline QInstr lower_pow_mod(std::uint64_t base, const std::vector<std::uint32_t>& x,
                            const std::vector<std::uint32_t>& y, std::uint64_t modulus) {
    if (modulus == 0 || std::gcd(base, modulus) != 1)
        throw ExecError("pow requires the base to be coprime with the modulus");
    std::uint64_t need = 0;
    while ((modulus - 1) >> need) ++need;
    if (y.size() < need)
        throw ExecError("pow output register narrower than the modulus");
    PermSpec spec;
    spec.kind = PermKind::pow_mod_embed;
    spec.base = base;
    spec.modulus = modulus;
    spec.split = x.size();
    std::vector<std::uint32_t> targets = x;
    targets.insert(targets.end(), y.begin(), y.end());
    return QInstr::make_perm(spec, std::move(targets));
}

}  // namespace qpragma
