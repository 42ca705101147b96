#pragma once

#include <cmath>
#include <cstdint>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "qpragma/diagnostics.hpp"

namespace qpragma {

// ---------------------------------------------------------------------------
// Gates
// ---------------------------------------------------------------------------

enum class Gate { I, X, Y, Z, H, S, T, RX, RY, RZ, PH, CNOT, CCNOT, SWAP };

inline const char* gate_name(Gate g) {
    switch (g) {
        case Gate::I: return "I";
        case Gate::X: return "X";
        case Gate::Y: return "Y";
        case Gate::Z: return "Z";
        case Gate::H: return "H";
        case Gate::S: return "S";
        case Gate::T: return "T";
        case Gate::RX: return "RX";
        case Gate::RY: return "RY";
        case Gate::RZ: return "RZ";
        case Gate::PH: return "PH";
        case Gate::CNOT: return "CNOT";
        case Gate::CCNOT: return "CCNOT";
        case Gate::SWAP: return "SWAP";
    }
    return "?";
}

inline int gate_arity(Gate g) {
    switch (g) {
        case Gate::CNOT: return 2;
        case Gate::SWAP: return 2;
        case Gate::CCNOT: return 3;
        default: return 1;
    }
}

inline bool gate_has_angle(Gate g) {
    return g == Gate::RX || g == Gate::RY || g == Gate::RZ || g == Gate::PH;
}

inline bool gate_self_inverse(Gate g) {
    switch (g) {
        case Gate::I:
        case Gate::X:
        case Gate::Y:
        case Gate::Z:
        case Gate::H:
        case Gate::CNOT:
        case Gate::CCNOT:
        case Gate::SWAP:
            return true;
        default:
            return false;
    }
}

/// Normalize an angle into (−π, π].
inline double normalize_angle(double a) {
    constexpr double two_pi = 6.283185307179586476925286766559;
    a = std::fmod(a, two_pi);
    if (a <= -3.14159265358979323846) a += two_pi;
    if (a > 3.14159265358979323846) a -= two_pi;
    return a;
}

// ---------------------------------------------------------------------------
// Permutations (reversible classical bijections on basis indices)
// ---------------------------------------------------------------------------

enum class PermKind { add_const, sub_const, xor_const, pow_mod_embed };

struct PermSpec {
    PermKind kind = PermKind::add_const;
    std::uint64_t c = 0;        // addend / xor mask
    std::uint64_t base = 0;     // pow_mod_embed
    std::uint64_t modulus = 0;  // pow_mod_embed
    std::uint64_t split = 0;    // pow_mod_embed: width of the exponent sub-register

    bool operator==(const PermSpec&) const = default;
};

inline const char* perm_name(PermKind k) {
    switch (k) {
        case PermKind::add_const: return "add_const";
        case PermKind::sub_const: return "sub_const";
        case PermKind::xor_const: return "xor_const";
        case PermKind::pow_mod_embed: return "pow_mod_embed";
    }
    return "?";
}

inline std::uint64_t pow_mod(std::uint64_t b, std::uint64_t e, std::uint64_t m) {
    std::uint64_t r = 1 % m;
    b %= m;
    while (e) {
        if (e & 1) r = (r * b) % m;
        b = (b * b) % m;
        e >>= 1;
    }
    return r;
}

/// Image of basis value `v` (over `width` bits) under the bijection.
inline std::uint64_t perm_apply(const PermSpec& p, std::uint64_t v, unsigned width, bool dag) {
    const std::uint64_t mask = width >= 64 ? ~0ull : ((1ull << width) - 1);
    switch (p.kind) {
        case PermKind::add_const:
            return (dag ? v - p.c : v + p.c) & mask;
        case PermKind::sub_const:
            return (dag ? v + p.c : v - p.c) & mask;
        case PermKind::xor_const:
            return (v ^ p.c) & mask;
        case PermKind::pow_mod_embed: {
            const std::uint64_t x = v & ((1ull << p.split) - 1);
            std::uint64_t y = v >> p.split;
            y ^= pow_mod(p.base, x, p.modulus);
            return ((y << p.split) | x) & mask;
        }
    }
    return v;
}

// ---------------------------------------------------------------------------
// Instructions
// ---------------------------------------------------------------------------

enum class QOp {
    alloc,        // region allocation: region id, addresses
    free_region,  // region release
    gate,
    perm,
    measure,      // measure.reset selects measure-and-reset
    reset,
    compute,      // ComputeBlock wrapper: body
    ctrl_block,   // structured control wrapper: ctrls + body
    scope_begin,  // with-vars in vars
    scope_end,
    move_var,     // direction in dag? no — use move_to_device flag
    call,         // routine call: name, targets, body (already expanded)
};

struct QInstr {
    QOp op = QOp::gate;

    // gate
    Gate g = Gate::I;
    double angle = 0.0;

    // gate/perm/measure/reset/alloc/free targets, call target registers
    std::vector<std::uint32_t> targets;
    std::vector<std::uint32_t> ctrls;
    bool dag = false;

    // perm
    PermSpec perm;

    // alloc/free
    std::uint64_t region = 0;

    // measure
    bool with_reset = false;

    // compute: true once the block's uncomputation has been materialized, so
    // further expansion passes leave it alone (it stays a wrapper only for the
    // control exemption)
    bool expanded = false;

    // compute / ctrl_block / call body
    std::vector<QInstr> body;

    // call / move / scope
    std::string name;                 // routine name or variable name
    bool to_device = false;           // move direction
    std::vector<std::string> vars;    // scope-with variables

    static QInstr make_gate(Gate g, std::vector<std::uint32_t> tgts, double angle = 0.0) {
        QInstr i;
        i.op = QOp::gate;
        i.g = g;
        i.targets = std::move(tgts);
        i.angle = gate_has_angle(g) ? normalize_angle(angle) : 0.0;
        return i;
    }
    static QInstr make_perm(PermSpec spec, std::vector<std::uint32_t> tgts) {
        QInstr i;
        i.op = QOp::perm;
        i.perm = spec;
        i.targets = std::move(tgts);
        return i;
    }
    static QInstr make_compute(std::vector<QInstr> inner) {
        QInstr i;
        i.op = QOp::compute;
        i.body = std::move(inner);
        return i;
    }
};

using Sequence = std::vector<QInstr>;

inline bool structurally_equal(const QInstr& a, const QInstr& b) {
    if (a.op != b.op || a.g != b.g || a.targets != b.targets || a.ctrls != b.ctrls ||
        a.dag != b.dag || !(a.perm == b.perm) || a.region != b.region ||
        a.with_reset != b.with_reset || a.name != b.name || a.to_device != b.to_device ||
        a.vars != b.vars)
        return false;
    if (gate_has_angle(a.g) && std::abs(a.angle - b.angle) > 1e-12) return false;
    if (a.body.size() != b.body.size()) return false;
    for (size_t i = 0; i < a.body.size(); ++i)
        if (!structurally_equal(a.body[i], b.body[i])) return false;
    return true;
}

inline bool structurally_equal(const Sequence& a, const Sequence& b) {
    if (a.size() != b.size()) return false;
    for (size_t i = 0; i < a.size(); ++i)
        if (!structurally_equal(a[i], b[i])) return false;
    return true;
}

// ---------------------------------------------------------------------------
// Transforms
// ---------------------------------------------------------------------------

inline Sequence dagger(const Sequence& seq);

inline QInstr dagger(const QInstr& in) {
    QInstr out = in;
    switch (in.op) {
        case QOp::gate:
            if (gate_has_angle(in.g)) {
                out.angle = normalize_angle(-in.angle);
            } else if (in.g == Gate::S || in.g == Gate::T) {
                out.dag = !in.dag;
            }
            // self-inverse gates unchanged
            return out;
        case QOp::perm:
            if (in.perm.kind == PermKind::xor_const || in.perm.kind == PermKind::pow_mod_embed)
                return out;  // self-inverse
            out.dag = !in.dag;
            return out;
        case QOp::call:
            out.dag = !in.dag;
            out.body = dagger(in.body);
            return out;
        case QOp::compute:
        case QOp::ctrl_block:
            out.body = dagger(in.body);
            return out;
        case QOp::alloc:
            out.op = QOp::free_region;
            return out;
        case QOp::free_region:
            out.op = QOp::alloc;
            return out;
        default:
            throw ExecError(std::string("dagger: sequence is not pure quantum (contains ") +
                            (in.op == QOp::measure ? "a measurement"
                             : in.op == QOp::reset ? "a reset"
                                                   : "a host-side instruction") +
                            ")");
    }
}

inline Sequence dagger(const Sequence& seq) {
    Sequence out;
    out.reserve(seq.size());
    for (auto it = seq.rbegin(); it != seq.rend(); ++it) out.push_back(dagger(*it));
    return out;
}

inline Sequence control(const Sequence& seq, const std::vector<std::uint32_t>& ctrls);

inline QInstr control(const QInstr& in, const std::vector<std::uint32_t>& ctrls) {
    QInstr out = in;
    switch (in.op) {
        case QOp::gate:
        case QOp::perm:
            for (auto c : ctrls)
                for (auto t : in.targets)
                    if (c == t)
                        throw ExecError("control: control qubit overlaps a target qubit");
            out.ctrls.insert(out.ctrls.end(), ctrls.begin(), ctrls.end());
            return out;
        case QOp::call:
            out.ctrls.insert(out.ctrls.end(), ctrls.begin(), ctrls.end());
            out.body = control(in.body, ctrls);
            return out;
        case QOp::compute:
            return out;  // compute blocks are exempt from added controls
        case QOp::ctrl_block:
            out.ctrls.insert(out.ctrls.end(), ctrls.begin(), ctrls.end());
            out.body = control(in.body, ctrls);
            return out;
        case QOp::measure:
        case QOp::reset:
            throw ExecError("control: measurements cannot be controlled");
        default:
            return out;  // classical / structural instructions unchanged
    }
}

inline Sequence control(const Sequence& seq, const std::vector<std::uint32_t>& ctrls) {
    Sequence out;
    out.reserve(seq.size());
    for (const auto& i : seq) out.push_back(control(i, ctrls));
    return out;
}

namespace detail {
inline void collect_written(const QInstr& i, std::vector<std::uint32_t>& out) {
    for (auto t : i.targets) out.push_back(t);
    for (const auto& b : i.body) collect_written(b, out);
}
}  // namespace detail

/// Expand every ComputeBlock in `scope`: the block body runs in place and its
/// dagger is appended at the end of the scope, last computed first uncomputed.
inline Sequence expand_compute(const Sequence& scope) {
    Sequence out;
    std::vector<Sequence> pending;  // uncompute sequences, in computation order
    std::vector<std::uint32_t> written;
    for (const auto& i : scope) {
        if (i.op == QOp::compute && i.expanded) {
            QInstr copy = i;
            copy.body = expand_compute(i.body);
            out.push_back(std::move(copy));
            continue;
        }
        if (i.op == QOp::compute) {
            Sequence inner = expand_compute(i.body);
            for (const auto& b : inner) detail::collect_written(b, written);
            pending.push_back(dagger(inner));
            for (auto& b : inner) out.push_back(std::move(b));
            continue;
        }
        if (i.op == QOp::measure || i.op == QOp::reset) {
            for (auto t : i.targets)
                for (auto w : written)
                    if (t == w)
                        throw ExecError(
                            "measurement of a qubit written by a compute block before its "
                            "uncomputation");
        }
        QInstr copy = i;
        if (!copy.body.empty() && copy.op != QOp::call) copy.body = expand_compute(copy.body);
        out.push_back(std::move(copy));
    }
    for (auto it = pending.rbegin(); it != pending.rend(); ++it)
        for (auto& b : *it) out.push_back(std::move(b));
    return out;
}

/// Like expand_compute, but keeps the compute wrappers (marked expanded) so
/// later control() applications still see the exemption boundary. Every block
/// becomes a balanced pair: the body at its original position and its dagger
/// at the end of the enclosing scope.
inline Sequence expand_balanced(const Sequence& scope) {
    Sequence out;
    std::vector<QInstr> pending;
    for (const auto& i : scope) {
        if (i.op == QOp::compute && !i.expanded) {
            Sequence inner = expand_balanced(i.body);
            QInstr fwd = QInstr::make_compute(inner);
            fwd.expanded = true;
            QInstr bwd = QInstr::make_compute(dagger(inner));
            bwd.expanded = true;
            out.push_back(std::move(fwd));
            pending.push_back(std::move(bwd));
            continue;
        }
        QInstr copy = i;
        if (!copy.body.empty() && copy.op != QOp::call) copy.body = expand_balanced(copy.body);
        out.push_back(std::move(copy));
    }
    for (auto it = pending.rbegin(); it != pending.rend(); ++it) out.push_back(std::move(*it));
    return out;
}

// ---------------------------------------------------------------------------
// Textual dump
// ---------------------------------------------------------------------------

namespace detail {
inline std::string addr_list(const std::vector<std::uint32_t>& a) {
    std::string s;
    for (size_t i = 0; i < a.size(); ++i) {
        if (i) s += ',';
        s += 'q';
        s += std::to_string(a[i]);
    }
    return s;
}
inline std::string fmt_angle(double a) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(10) << a;
    return os.str();
}
}  // namespace detail

inline void dump_instr(const QInstr& i, std::ostringstream& os, int depth) {
    auto ind = [&] {
        for (int k = 0; k < depth; ++k) os << "  ";
    };
    auto tail = [&](const QInstr& x) {
        if (!x.ctrls.empty()) os << " ctrl " << detail::addr_list(x.ctrls);
        if (x.dag) os << " dag";
        os << "\n";
    };
    switch (i.op) {
        case QOp::gate:
            ind();
            os << "GATE " << gate_name(i.g);
            if (gate_has_angle(i.g)) os << "(" << detail::fmt_angle(i.angle) << ")";
            os << " " << detail::addr_list(i.targets);
            tail(i);
            break;
        case QOp::perm:
            ind();
            os << "PERM " << perm_name(i.perm.kind) << "(";
            if (i.perm.kind == PermKind::pow_mod_embed)
                os << i.perm.base << "," << i.perm.modulus;
            else
                os << i.perm.c;
            os << ") " << detail::addr_list(i.targets);
            tail(i);
            break;
        case QOp::alloc:
            ind();
            os << "ALLOC " << detail::addr_list(i.targets) << "\n";
            break;
        case QOp::free_region:
            ind();
            os << "FREE " << detail::addr_list(i.targets) << "\n";
            break;
        case QOp::measure:
            ind();
            os << "MEASURE " << detail::addr_list(i.targets) << (i.with_reset ? " reset" : "")
               << "\n";
            break;
        case QOp::reset:
            ind();
            os << "RESET " << detail::addr_list(i.targets) << "\n";
            break;
        case QOp::compute:
            ind();
            os << "COMPUTE_BEGIN\n";
            for (const auto& b : i.body) dump_instr(b, os, depth + 1);
            ind();
            os << "COMPUTE_END\n";
            break;
        case QOp::ctrl_block:
            ind();
            os << "CTRL_BEGIN " << detail::addr_list(i.ctrls) << "\n";
            for (const auto& b : i.body) dump_instr(b, os, depth + 1);
            ind();
            os << "CTRL_END\n";
            break;
        case QOp::scope_begin:
            ind();
            os << "SCOPE_BEGIN";
            for (const auto& v : i.vars) os << " " << v;
            os << "\n";
            break;
        case QOp::scope_end:
            ind();
            os << "SCOPE_END\n";
            break;
        case QOp::move_var:
            ind();
            os << "MOVE " << (i.to_device ? "toDevice" : "toHost") << " " << i.name << "\n";
            break;
        case QOp::call:
            ind();
            os << "CALL " << i.name << " " << detail::addr_list(i.targets);
            if (!i.ctrls.empty()) os << " ctrl " << detail::addr_list(i.ctrls);
            if (i.dag) os << " dag";
            os << "\n";
            for (const auto& b : i.body) dump_instr(b, os, depth + 1);
            break;
    }
}

inline std::string dump_ir(const Sequence& seq) {
    std::ostringstream os;
    for (const auto& i : seq) dump_instr(i, os, 0);
    return os.str();
}

}  // namespace qpragma
