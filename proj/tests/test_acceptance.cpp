// Acceptance gate: one pass/fail line per criterion. Run with no arguments
// for the full gate, or with a criterion number to run just that one.
// Exit code = number of failed criteria.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "qpragma/lowering.hpp"

using namespace qpragma;
using namespace qptest;

namespace {

int failures = 0;

void report(int n, const char* what, bool ok, const std::string& detail = "") {
    std::printf("%s criterion %2d: %s%s%s\n", ok ? "PASS" : "FAIL", n, what,
                detail.empty() ? "" : " -- ", detail.c_str());
    if (!ok) ++failures;
}

// --- criterion helpers ------------------------------------------------------

std::string prep_bits(const std::vector<std::string>& regs, std::uint64_t v) {
    std::string s;
    for (std::size_t i = 0; i < regs.size(); ++i)
        if ((v >> i) & 1) s += "    X(" + regs[i] + ");\n";
    return s;
}

void crit1() {
    RunResult r = run_file("listing10_routine.qpc");
    report(1, "Listing 10 costs exactly 7 requests", r.stats.requests == 7,
           "requests = " + std::to_string(r.stats.requests));
}

void crit2() {
    RunResult scoped = run_file("listing06_scope.qpc");
    RunResult host = run_file("listing06_noscope.qpc");
    report(2, "scope collapses the Bell loop to 1 request (vs > 100 without)",
           scoped.stats.requests == 1 && host.stats.requests > 100,
           "scoped = " + std::to_string(scoped.stats.requests) +
               ", host = " + std::to_string(host.stats.requests));
}

void crit3() {
    RunConfig cfg;
    cfg.check_uncompute = true;
    cfg.trace_ir = true;
    bool clean = true;
    std::string ir;
    try {
        RunResult r = run_file("listing01_uncompute.qpc", cfg);
        ir = r.ir;
    } catch (const std::exception&) {
        clean = false;
    }
    // the trailing inverse X before the release
    bool trailing = ir.find("GATE X q0\nGATE X q0\nFREE q0") != std::string::npos;
    report(3, "safe uncomputation restores |0> and emits the inverse X", clean && trailing);
}

void crit4() {
    RunConfig cfg;
    cfg.shots = 1000;
    RunResult r = run_file("listing02_cast.qpc", cfg);
    bool all12 = r.histogram.size() == 1 && r.histogram.count("00001100") &&
                 r.histogram.at("00001100") == 1000;
    bool exhaustive = true;
    for (std::uint64_t v = 0; v < 256 && exhaustive; ++v) {
        auto reg = std::vector<std::uint32_t>{0, 1, 2, 3, 4, 5, 6, 7};
        if (basis_out(get_init(reg, v), reg, 0) != v) exhaustive = false;
    }
    report(4, "quint<8> round-trip: 1000 shots of 12 and all 256 values", all12 && exhaustive);
}

void crit5() {
    bool ok = true;
    std::string why;
    auto reg4 = std::vector<std::uint32_t>{0, 1, 2, 3};
    // constant add/sub exhaustive
    for (std::uint64_t c = 0; c < 16 && ok; ++c)
        for (std::uint64_t v = 0; v < 16 && ok; ++v) {
            if (basis_out(lower_add_const(reg4, c, +1), reg4, v) != ((v + c) & 15) ||
                basis_out(lower_add_const(reg4, c, -1), reg4, v) != ((v - c) & 15) ||
                basis_out(lower_xor_const(reg4, c), reg4, v) != (v ^ c)) {
                ok = false;
                why = "const arithmetic width 4";
            }
        }
    // quantum-quantum add exhaustive at width 3
    auto dst = std::vector<std::uint32_t>{0, 1, 2};
    auto src = std::vector<std::uint32_t>{3, 4, 5};
    auto all6 = std::vector<std::uint32_t>{0, 1, 2, 3, 4, 5};
    for (std::uint64_t a = 0; a < 8 && ok; ++a)
        for (std::uint64_t b = 0; b < 8 && ok; ++b) {
            if (basis_out(lower_add_quantum(dst, src, +1), all6, a | (b << 3)) !=
                (((a + b) & 7) | (b << 3))) {
                ok = false;
                why = "register addition width 3";
            }
        }
    // comparators exhaustive at width 4
    auto cmp_expect = [](CmpOp op, std::uint64_t v, std::uint64_t c) {
        switch (op) {
            case CmpOp::eq: return v == c;
            case CmpOp::ne: return v != c;
            case CmpOp::lt: return v < c;
            case CmpOp::le: return v <= c;
            case CmpOp::gt: return v > c;
            default: return v >= c;
        }
    };
    auto run_cmp = [&](const std::vector<std::uint32_t>& reg, CmpOp op, std::uint64_t c,
                       std::uint64_t v) {
        const std::uint32_t target = static_cast<std::uint32_t>(reg.size());
        std::uint32_t next = 16;
        Lowered low = lower_compare(reg, op, c, target, [&] { return next++; });
        Sequence s = expand_compute(low.seq);
        for (auto a : low.ancillas) {
            QInstr f;
            f.op = QOp::free_region;
            f.targets = {a};
            s.push_back(f);
        }
        auto all = reg;
        all.push_back(target);
        std::uint64_t out = basis_out(s, all, v, 12);
        return ((out >> reg.size()) & 1) != 0;
    };
    for (int opi = 0; opi < 6 && ok; ++opi)
        for (std::uint64_t c = 0; c < 16 && ok; ++c)
            for (std::uint64_t v = 0; v < 16 && ok; ++v)
                if (run_cmp(reg4, static_cast<CmpOp>(opi), c, v) !=
                    cmp_expect(static_cast<CmpOp>(opi), v, c)) {
                    ok = false;
                    why = "comparator width 4";
                }
    // 1000 random cases at width 8
    auto reg8 = std::vector<std::uint32_t>{0, 1, 2, 3, 4, 5, 6, 7};
    std::mt19937_64 rng(99);
    for (int i = 0; i < 1000 && ok; ++i) {
        std::uint64_t v = rng() & 255, c = rng() & 255;
        switch (i % 3) {
            case 0:
                if (basis_out(lower_add_const(reg8, c, +1), reg8, v) != ((v + c) & 255)) {
                    ok = false;
                    why = "random add width 8";
                }
                break;
            case 1:
                if (basis_out(lower_xor_const(reg8, c), reg8, v) != (v ^ c)) {
                    ok = false;
                    why = "random xor width 8";
                }
                break;
            default: {
                CmpOp op = static_cast<CmpOp>(rng() % 6);
                if (run_cmp(reg8, op, c, v) != cmp_expect(op, v, c)) {
                    ok = false;
                    why = "random comparator width 8";
                }
            }
        }
    }
    report(5, "arithmetic and comparator oracles (exhaustive <= 4, random at 8)", ok, why);
}

void crit6() {
    auto reg = std::vector<std::uint32_t>{0, 1, 2, 3};
    Matrix m = unitary_of(qft(reg), 4);
    auto bitrev = [](std::size_t v) {
        std::size_t r = 0;
        for (int k = 0; k < 4; ++k)
            if ((v >> k) & 1) r |= std::size_t{1} << (3 - k);
        return r;
    };
    double delta = 0;
    for (std::size_t r = 0; r < 16; ++r)
        for (std::size_t c = 0; c < 16; ++c) {
            cplx expect =
                0.25 * std::polar(1.0, 2.0 * kPi * static_cast<double>(r * bitrev(c)) / 16.0);
            delta = std::max(delta, std::abs(m[r][c] - expect));
        }
    report(6, "width-4 qft equals DFT16 composed with bit reversal", delta < 1e-10,
           "max delta = " + std::to_string(delta));
}

void crit7() {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> angle(-3.0, 3.0);
    bool ok = true;
    for (int trial = 0; trial < 200 && ok; ++trial) {
        unsigned n = 1 + static_cast<unsigned>(rng() % 4);
        std::uniform_int_distribution<std::uint32_t> q(0, n - 1);
        Sequence s;
        for (int i = 0; i < 10; ++i) {
            switch (rng() % 5) {
                case 0: s.push_back(QInstr::make_gate(Gate::H, {q(rng)})); break;
                case 1: s.push_back(QInstr::make_gate(Gate::T, {q(rng)})); break;
                case 2: s.push_back(QInstr::make_gate(Gate::RY, {q(rng)}, angle(rng))); break;
                case 3: s.push_back(QInstr::make_gate(Gate::PH, {q(rng)}, angle(rng))); break;
                default: {
                    std::uint32_t a = q(rng), b = q(rng);
                    if (a != b) s.push_back(QInstr::make_gate(Gate::CNOT, {a, b}));
                }
            }
        }
        // U . dagger(U) = I
        Sequence round = s;
        for (auto& i : dagger(s)) round.push_back(i);
        if (max_entry_delta(unitary_of(round, n), identity(1u << n)) > 1e-10) ok = false;
        // ctrl(U) = |0><0| (x) I + |1><1| (x) U, control at bit n
        Matrix u = unitary_of(s, n);
        Matrix cu = unitary_of(control(s, {n}), n + 1);
        const std::size_t dim = std::size_t{1} << n;
        Matrix expect = identity(2 * dim);
        for (std::size_t r = 0; r < dim; ++r)
            for (std::size_t c = 0; c < dim; ++c) expect[dim + r][dim + c] = u[r][c];
        if (max_entry_delta(cu, expect) > 1e-10) ok = false;
    }
    report(7, "modifier algebra on 200 random routines (dagger inverse, ctrl block form)", ok);
}

void crit8() {
    const char* rzz_tpl = R"(
#pragma quantum routine (double angle)
void RZZ(qbool qb1, qbool qb2)
{
    qbool ancilla;
    {
        #pragma quantum compute
        {
            CCNOT(qb1, qb2, ancilla);
        }
        RZ(angle)(ancilla);
    }
}

int64 main()
{
    qbool c, a, b;
%PREP%    RZZ(0.7).ctrl(c, a, b);
    return 0;
}
)";
    const char* ref_tpl = R"(
int64 main()
{
    qbool c, a, b;
    qbool anc;
%PREP%    CCNOT(a, b, anc);
    RZ(0.7).ctrl(c, anc);
    CCNOT(a, b, anc);
    return 0;
}
)";
    auto column = [](std::string tpl, std::uint64_t v) {
        std::string prep = prep_bits({"c", "a", "b"}, v);
        tpl.replace(tpl.find("%PREP%"), 6, prep);
        return program_state(tpl);
    };
    double delta = 0;
    for (std::uint64_t v = 0; v < 8; ++v) {
        auto got = column(rzz_tpl, v);    // 3 live qubits
        auto ref = column(ref_tpl, v);    // 4 live qubits, anc = 0
        for (std::uint64_t u = 0; u < 8; ++u)
            delta = std::max(delta, std::abs(got[u] - ref[u]));
    }
    report(8, "controlled RZZ leaves compute/uncompute CCNOTs uncontrolled", delta < 1e-10,
           "max delta = " + std::to_string(delta));
}

void crit9() {
    RunConfig cfg;
    cfg.shots = 10000;
    cfg.seed = 20240824;
    RunResult r = run_file("uniform200.qpc", cfg);
    std::vector<std::uint64_t> bins(200, 0);
    std::uint64_t shots = 0;
    bool in_range = true;
    for (const auto& [key, count] : r.histogram) {
        // the accepted value is the final 8 bits of the measurement record
        std::string tail = key.substr(key.size() - 8);
        std::uint64_t v = std::stoull(tail, nullptr, 2);
        if (v >= 200) in_range = false;
        else bins[v] += count;
        shots += count;
    }
    double chi2 = 0;
    const double expect = static_cast<double>(shots) / 200.0;
    for (auto b : bins) chi2 += (b - expect) * (b - expect) / expect;
    // upper 0.001 quantile of chi-square with 199 degrees of freedom
    const double crit = 266.3859;
    report(9, "bounded uniform sampler: outcomes < 200 and chi-square uniform",
           in_range && shots == 10000 && chi2 < crit,
           "chi2 = " + std::to_string(chi2) + " (limit " + std::to_string(crit) + ")");
}

void crit10() {
    const char* tpl = R"(
#pragma quantum routine (uint64 bstate)
void solve<SIZE>(qbool head, quint<SIZE> tail)
{
    H(head);

    #pragma quantum ctrl (head)
    tail += (bstate >> 1UL);
}

int64 main()
{
    qarray<4> qreg;
    solve<3UL>(%B%UL)(qreg);
    return 0;
}
)";
    bool ok = true;
    std::string why;
    const double amp = 1.0 / std::sqrt(2.0);
    for (std::uint64_t b : {1ull, 5ull, 13ull}) {
        std::string src = tpl;
        src.replace(src.find("%B%"), 3, std::to_string(b));
        auto state = program_state(src);
        for (std::uint64_t v = 0; v < 16; ++v) {
            double mag = std::abs(state[v]);
            double want = (v == 0 || v == b) ? amp : 0.0;
            if (std::abs(mag - want) > 1e-10) {
                ok = false;
                why = "b = " + std::to_string(b) + ", v = " + std::to_string(v);
            }
        }
    }
    report(10, "superposition (|0> + |b>)/sqrt(2) for b in {1, 5, 13}", ok, why);
}

void crit11() {
    const char* tpl = R"(
#pragma quantum routine
void solve<LOG, SIZE = (1UL << LOG)>(quint<SIZE> qreg)
{
    quint<SIZE> anc;
    wall::H<LOG>(anc);

    for (uint64 idx = 0UL; idx < SIZE; ++idx) {
        qreg[idx] ^= (anc == idx);

        #pragma quantum ctrl (qreg == (1UL << idx))
        anc -= idx;
    }
}

int64 main()
{
    quint<%N%> qreg;
    solve<%LOG%UL>(qreg);
    return 0;
}
)";
    bool ok = true;
    std::string why;
    for (unsigned logn : {2u, 3u}) {
        unsigned n = 1u << logn;
        std::string src = tpl;
        src.replace(src.find("%N%"), 3, std::to_string(n));
        src.replace(src.find("%LOG%"), 5, std::to_string(logn));
        std::vector<std::uint32_t> addrs;
        auto state = program_state(src, &addrs);
        if (addrs.size() != n) {
            ok = false;
            why = "ancillas still live at N = " + std::to_string(n);
            continue;
        }
        const double amp = 1.0 / std::sqrt(static_cast<double>(n));
        for (std::uint64_t v = 0; v < (1ull << n); ++v) {
            bool onehot = v != 0 && (v & (v - 1)) == 0;
            double want = onehot ? amp : 0.0;
            if (std::abs(std::abs(state[v]) - want) > 1e-10) {
                ok = false;
                why = "N = " + std::to_string(n) + ", v = " + std::to_string(v);
            }
        }
    }
    report(11, "W state for N = 4 and 8 with clean ancillas", ok, why);
}

void crit12() {
    // independent classical period oracle for 7 mod 15
    std::uint64_t period = 1, acc = 7 % 15;
    while (acc != 1) {
        acc = (acc * 7) % 15;
        ++period;
    }
    RunConfig cfg;
    cfg.shots = 4096;
    cfg.seed = 31337;
    RunResult r = run_file("shor15.qpc", cfg);
    std::map<std::uint64_t, std::uint64_t> dist;
    std::uint64_t total = 0, mass = 0;
    for (const auto& [key, count] : r.histogram) {
        std::uint64_t v = std::stoull(key.substr(key.size() - 4), nullptr, 2);
        dist[v] += count;
        total += count;
        if (v % (16 / period) == 0) mass += count;
    }
    double frac = static_cast<double>(mass) / static_cast<double>(total);
    report(12, "period-finding mass concentrates on multiples of 16/period",
           period == 4 && frac >= 0.95,
           "period = " + std::to_string(period) + ", mass = " + std::to_string(frac));
}

void crit13() {
    const char* tpl = R"(
#pragma quantum routine
void solve<SIZE>(qarray<SIZE - 1> most, qbool tail)
{
    if constexpr (SIZE > 1UL) {
        wall::H<SIZE - 1>.ctrl(tail, most);
        solve<SIZE - 1>.ctrl((qbool) not tail, most);
    }
}

int64 main()
{
    qarray<3> qreg;
%PREP%    solve<3UL>(qreg);
    return 0;
}
)";
    // allowed blocks on the diagonal: {0}, {1}, {2,3}, {4..7}
    auto block = [](std::uint64_t v) { return v < 2 ? v : (v < 4 ? 2 : 3); };
    bool ok = true;
    std::string why;
    for (std::uint64_t col = 0; col < 8; ++col) {
        std::string src = tpl;
        src.replace(src.find("%PREP%"), 6, prep_bits({"qreg[0]", "qreg[1]", "qreg[2]"}, col));
        auto state = program_state(src);
        double inside = 0;
        for (std::uint64_t row = 0; row < 8; ++row) {
            double mag = std::abs(state[row]);
            if (block(row) != block(col) && mag > 1e-10) {
                ok = false;
                why = "entry (" + std::to_string(row) + ", " + std::to_string(col) + ")";
            }
            inside += mag * mag;
        }
        if (std::abs(inside - 1.0) > 1e-9) {
            ok = false;
            why = "column " + std::to_string(col) + " not normalized";
        }
    }
    report(13, "increasing-blocks unitary stays inside the block pattern", ok, why);
}

void crit14() {
    bool ok = true;
    std::string why;
    for (const char* name :
         {"bell.qpc", "uniform200.qpc", "shor15.qpc", "a2_b1.qpc", "a2_b5.qpc", "a2_b13.qpc",
          "a4_n4.qpc", "a4_n8.qpc", "d2_size3.qpc", "listing01_uncompute.qpc",
          "listing02_cast.qpc", "listing03_quint_ops.qpc", "listing04_formula.qpc",
          "listing06_scope.qpc", "listing06_noscope.qpc", "listing07_scope_with.qpc",
          "listing08_move.qpc", "listing09_ctrl.qpc", "listing10_routine.qpc",
          "listing11_qft.qpc", "listing12_param_routine.qpc", "listing13_routine_flex.qpc",
          "listing15_dynamic.qpc", "listing16_rzz.qpc"}) {
        if (!diagnose(read_file(qpc_path(name))).empty()) {
            ok = false;
            why = std::string(name) + " rejected";
        }
    }
    for (const char* name : {"fail_typed_mismatch.qpc", "fail_qvector_static.qpc"}) {
        if (diagnose(read_file(qpc_path(name))).empty()) {
            ok = false;
            why = std::string(name) + " accepted";
        }
    }
    report(14, "corpus check: all examples accepted, fail_ cases rejected", ok, why);
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<std::function<void()>> crits = {crit1, crit2, crit3,  crit4,  crit5,
                                                crit6, crit7, crit8,  crit9,  crit10,
                                                crit11, crit12, crit13, crit14};
    if (argc > 1) {
        int n = std::atoi(argv[1]);
        if (n < 1 || n > static_cast<int>(crits.size())) {
            std::fprintf(stderr, "criterion out of range\n");
            return 2;
        }
        crits[n - 1]();
    } else {
        for (auto& c : crits) c();
    }
    return failures;
}
