#pragma once

#include <cmath>
#include <complex>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "qpragma/driver.hpp"
#include "qpragma/elaborator.hpp"
#include "qpragma/parser.hpp"
#include "qpragma/runtime.hpp"

namespace qptest {

using namespace qpragma;

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline std::string qpc_path(const std::string& name) {
    return std::string(QPC_DIR) + "/" + name;
}

/// Parse + elaborate; throws on any diagnostic.
inline Program compile(const std::string& src) {
    Program p = parse(src);
    DiagnosticList d = check_program(p);
    if (d.has_errors()) throw std::runtime_error("diagnostics:\n" + d.format("<test>"));
    return p;
}

/// Collected error messages for a source expected to fail (empty = accepted).
inline std::string diagnose(const std::string& src) {
    try {
        Program p = parse(src);
        DiagnosticList d = check_program(p);
        return d.format("<test>");
    } catch (const CompileError& e) {
        return std::string("error: ") + e.what();
    }
}

inline RunResult run_src(const std::string& src, RunConfig cfg = {}) {
    Program p = compile(src);
    return run_program(p, cfg);
}

inline RunResult run_file(const std::string& name, RunConfig cfg = {}) {
    return run_src(read_file(qpc_path(name)), cfg);
}

// ---------------------------------------------------------------------------
// Unitary extraction from instruction sequences
// ---------------------------------------------------------------------------

/// Execute a sequence against a backend, expanding nested bodies and
/// honoring alloc/free for ancillas.
inline void apply_all(StateVector& sv, const Sequence& s, std::mt19937_64& rng) {
    for (const auto& i : s) {
        switch (i.op) {
            case QOp::gate:
            case QOp::perm:
                sv.apply(i);
                break;
            case QOp::alloc:
                sv.alloc(i.targets);
                break;
            case QOp::free_region:
                if (sv.release(i.targets, rng) < 1.0 - 1e-9)
                    throw std::runtime_error("ancilla released in a non-zero state");
                break;
            default:
                apply_all(sv, i.body, rng);
                break;
        }
    }
}

using Matrix = std::vector<std::vector<cplx>>;

/// Dense unitary realized by `s` on qubit addresses 0..n-1 (basis index has
/// address k at bit weight 2^k). Ancillas must return to |0>.
inline Matrix unitary_of(const Sequence& s, unsigned n) {
    const std::size_t dim = std::size_t{1} << n;
    Matrix m(dim, std::vector<cplx>(dim));
    std::vector<std::uint32_t> addrs;
    for (unsigned k = 0; k < n; ++k) addrs.push_back(k);
    std::mt19937_64 rng(12345);
    Sequence expanded = expand_compute(s);
    for (std::size_t v = 0; v < dim; ++v) {
        StateVector sv(n + 8);
        sv.alloc(addrs);
        for (unsigned k = 0; k < n; ++k)
            if ((v >> k) & 1) sv.flip_addr(k);
        apply_all(sv, expanded, rng);
        for (std::size_t u = 0; u < dim; ++u) m[u][v] = sv.amplitude(addrs, u);
    }
    return m;
}

inline double max_entry_delta(const Matrix& a, const Matrix& b) {
    double d = 0;
    for (std::size_t r = 0; r < a.size(); ++r)
        for (std::size_t c = 0; c < a.size(); ++c)
            d = std::max(d, std::abs(a[r][c] - b[r][c]));
    return d;
}

inline Matrix identity(std::size_t dim) {
    Matrix m(dim, std::vector<cplx>(dim));
    for (std::size_t i = 0; i < dim; ++i) m[i][i] = 1.0;
    return m;
}

/// Basis-state evolution: applies `s` to |v> and returns the unique output
/// basis value (requires the final state to be a basis state).
inline std::uint64_t basis_out(const Sequence& s, const std::vector<std::uint32_t>& addrs,
                               std::uint64_t v, unsigned extra_room = 8) {
    std::mt19937_64 rng(7);
    StateVector sv(static_cast<unsigned>(addrs.size()) + extra_room);
    sv.alloc(addrs);
    for (std::size_t k = 0; k < addrs.size(); ++k)
        if ((v >> k) & 1) sv.flip_addr(addrs[k]);
    apply_all(sv, expand_compute(s), rng);
    const std::size_t dim = std::size_t{1} << addrs.size();
    for (std::uint64_t u = 0; u < dim; ++u)
        if (std::abs(sv.amplitude(addrs, u)) > 0.99) return u;
    throw std::runtime_error("output is not a basis state");
}

/// Final-statevector columns of a whole program: `prep` is spliced in as
/// X-gate state preparation over the named register.
inline std::vector<cplx> program_state(const std::string& src,
                                       std::vector<std::uint32_t>* live_addrs = nullptr) {
    RunConfig cfg;
    cfg.capture_state = true;
    RunResult r = run_src(src, cfg);
    if (!r.has_state) throw std::runtime_error("no captured state");
    std::vector<std::uint32_t> addrs;
    for (const auto& [name, a] : r.live_regs) addrs.insert(addrs.end(), a.begin(), a.end());
    if (live_addrs) *live_addrs = addrs;
    const std::size_t dim = std::size_t{1} << addrs.size();
    std::vector<cplx> out(dim);
    for (std::size_t v = 0; v < dim; ++v) out[v] = r.state.amplitude(addrs, v);
    return out;
}

}  // namespace qptest
