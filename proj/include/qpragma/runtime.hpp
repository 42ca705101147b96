#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "qpragma/ast.hpp"
#include "qpragma/diagnostics.hpp"
#include "qpragma/elaborator.hpp"
#include "qpragma/lowering.hpp"
#include "qpragma/qir.hpp"
#include "qpragma/statevector.hpp"

namespace qpragma {

// ---------------------------------------------------------------------------
// Run configuration / results
// ---------------------------------------------------------------------------

struct RunConfig {
    std::uint64_t shots = 1;
    std::uint64_t seed = 0;
    unsigned max_qubits = 24;
    bool check_uncompute = false;
    bool trace_ir = false;       // record the executed host-side stream
    bool capture_state = false;  // snapshot the statevector at the end of main
};

struct NodeStats {
    std::uint64_t requests = 0;
    std::uint64_t remote_reads = 0;
    std::uint64_t remote_writes = 0;
    std::uint64_t transfers = 0;
    std::uint64_t gates = 0;
    std::uint64_t measures = 0;
};

struct RunResult {
    NodeStats stats;  // counted over the first shot
    std::map<std::string, std::uint64_t> histogram;
    std::vector<std::string> prints;  // first shot only
    std::string ir;                   // populated in trace mode
    bool has_state = false;
    StateVector state{1};  // debug snapshot (capture_state, first shot)
    std::vector<std::pair<std::string, std::vector<std::uint32_t>>> live_regs;
};

// ---------------------------------------------------------------------------
// Classical values
// ---------------------------------------------------------------------------

struct CVal {
    TypeKind kind = TypeKind::void_t;
    std::int64_t i = 0;  // bool / int64 / uint64 (bit pattern)
    double d = 0.0;
    std::vector<CVal> elems;  // carray

    static CVal of_int(std::int64_t v) { return {TypeKind::int_t, v, 0.0, {}}; }
    static CVal of_uint(std::uint64_t v) {
        return {TypeKind::uint_t, static_cast<std::int64_t>(v), 0.0, {}};
    }
    static CVal of_bool(bool v) { return {TypeKind::bool_t, v ? 1 : 0, 0.0, {}}; }
    static CVal of_double(double v) { return {TypeKind::double_t, 0, v, {}}; }

    bool truthy() const { return kind == TypeKind::double_t ? d != 0.0 : i != 0; }
    std::uint64_t as_uint() const {
        if (kind == TypeKind::double_t) return static_cast<std::uint64_t>(d);
        return static_cast<std::uint64_t>(i);
    }
    std::int64_t as_int() const {
        if (kind == TypeKind::double_t) return static_cast<std::int64_t>(d);
        return i;
    }
    double as_double() const {
        if (kind == TypeKind::double_t) return d;
        if (kind == TypeKind::uint_t) return static_cast<double>(as_uint());
        return static_cast<double>(i);
    }
    std::string str() const {
        switch (kind) {
            case TypeKind::bool_t: return i ? "true" : "false";
            case TypeKind::uint_t: return std::to_string(as_uint());
            case TypeKind::double_t: {
                std::ostringstream os;
                os.precision(10);
                os << d;
                return os.str();
            }
            default: return std::to_string(i);
        }
    }
};

// ---------------------------------------------------------------------------
// Machine: Host executor + QPU controller over one statevector backend
// ---------------------------------------------------------------------------

class Machine {
public:
    Machine(const Program& prog, RunConfig cfg)
        : prog_(prog), cfg_(cfg), rng_(cfg.seed) {
        for (const auto& r : prog_.routines) table_.add(r);
    }

    RunResult run() {
        RunResult res;
        for (std::uint64_t shot = 0; shot < cfg_.shots; ++shot) {
            count_stats_ = (shot == 0);
            record_ = (shot == 0 && cfg_.trace_ir);
            capture_armed_ = (shot == 0 && cfg_.capture_state);
            reset_shot_state();
            run_one_shot(res);
            if (!shot_key_.empty()) ++res.histogram[shot_key_];
            if (shot == 0) {
                res.stats = stats_;
                res.prints = prints_;
                res.ir = ir_.str();
            }
        }
        return res;
    }

private:
    // ------------------------------------------------------------------
    // State
    // ------------------------------------------------------------------

    struct QReg {
        Type type;
        std::vector<std::uint32_t> addrs;
    };

    struct Value {
        bool quantum = false;
        bool on_device = false;
        CVal c;
        QReg q;
    };

    struct Region {
        std::uint64_t id = 0;
        std::string name;
        std::vector<std::uint32_t> addrs;
        Sequence init;  // balanced; daggered at destruction unless measured
        bool measured = false;
    };

    struct Cleanup {
        enum Kind { destroy_region, uncompute } kind;
        std::uint64_t region = 0;
        Sequence seq;                         // uncompute payload (already daggered)
        std::vector<std::uint32_t> written;   // compute-written qubits (measure guard)
    };

    struct TraceFrame {
        Sequence* sink;
        std::size_t ctrl_base;
    };

    struct ReturnSignal {
        CVal value;
    };

    const Program& prog_;
    RunConfig cfg_;
    RoutineTable table_;

    // per shot
    StateVector sv_{1};
    std::mt19937_64 rng_;
    std::uint32_t next_addr_ = 0;
    std::uint64_t next_region_ = 1;
    std::map<std::uint64_t, Region> regions_;
    std::map<std::uint32_t, std::uint64_t> region_of_addr_;
    std::vector<std::map<std::string, Value>> env_;
    std::vector<std::size_t> frames_;  // index of the first scope of each frame
    std::vector<std::vector<Cleanup>> cleanups_;
    std::vector<std::uint32_t> ctrl_stack_;
    std::vector<TraceFrame> traces_;
    bool in_scope_ = false;
    int routine_depth_ = 0;
    int suppress_req_ = 0;
    std::string shot_key_;

    // results
    NodeStats stats_;
    std::vector<std::string> prints_;
    std::ostringstream ir_;
    int ir_depth_ = 0;
    bool count_stats_ = true;
    bool record_ = false;
    bool capture_armed_ = false;
    const Stmt* capture_block_ = nullptr;
    RunResult* result_ = nullptr;

    void reset_shot_state() {
        sv_ = StateVector(cfg_.max_qubits);
        next_addr_ = 0;
        next_region_ = 1;
        regions_.clear();
        region_of_addr_.clear();
        env_.clear();
        env_.emplace_back();  // globals
        frames_ = {0};
        cleanups_.clear();
        cleanups_.emplace_back();  // global cleanup level
        ctrl_stack_.clear();
        traces_.clear();
        in_scope_ = false;
        routine_depth_ = 0;
        suppress_req_ = 0;
        shot_key_.clear();
    }

    void run_one_shot(RunResult& res) {
        result_ = &res;
        const FunctionDecl* entry = find_function("main");
        capture_block_ = (capture_armed_ && entry) ? entry->body.get() : nullptr;
        for (const auto& g : prog_.globals) exec_stmt(*g);
        if (entry) call_function(*entry, {});
        unwind_level();  // global regions
        result_ = nullptr;
    }

    // ------------------------------------------------------------------
    // Helpers
    // ------------------------------------------------------------------

    void bump(std::uint64_t& c, std::uint64_t by = 1) {
        if (count_stats_) c += by;
    }
    bool host_counting() const { return !in_scope_ && suppress_req_ == 0; }
    bool tracing() const { return !traces_.empty(); }

    std::vector<std::uint32_t> active_ctrls() const {
        std::size_t base = traces_.empty() ? 0 : traces_.back().ctrl_base;
        return {ctrl_stack_.begin() + static_cast<std::ptrdiff_t>(base), ctrl_stack_.end()};
    }

    const FunctionDecl* find_function(const std::string& name) const {
        for (const auto& f : prog_.functions)
            if (f.name == name) return &f;
        return nullptr;
    }

    Value* find_var(const std::string& name) {
        std::size_t base = frames_.back();
        for (std::size_t i = env_.size(); i-- > base;) {
            auto it = env_[i].find(name);
            if (it != env_[i].end()) return &it->second;
        }
        if (base > 0) {
            auto it = env_[0].find(name);
            if (it != env_[0].end()) return &it->second;
        }
        return nullptr;
    }

    Value& lookup(const std::string& name, SourceLoc loc, bool write = false) {
        Value* v = find_var(name);
        if (!v) throw CompileError(loc, "unknown identifier '" + name + "'");
        const bool device_code = in_scope_ || routine_depth_ > 0;
        if (device_code && !v->on_device) {
            if (write)
                bump(stats_.remote_writes);
            else
                bump(stats_.remote_reads);
        }
        return *v;
    }

    void declare(const std::string& name, Value v) { env_.back()[name] = std::move(v); }

    std::uint32_t fresh_addr() { return next_addr_++; }
    AddrSupplier supplier() {
        return [this] { return fresh_addr(); };
    }

    static std::uint64_t width_mask(std::size_t n) {
        return n >= 64 ? ~0ull : ((std::uint64_t{1} << n) - 1);
    }

    // ------------------------------------------------------------------
    // IR recording
    // ------------------------------------------------------------------

    void record_instr(const QInstr& i) {
        if (!record_) return;
        dump_instr(i, ir_, ir_depth_);
    }
    void record_line(const std::string& s) {
        if (!record_) return;
        for (int k = 0; k < ir_depth_; ++k) ir_ << "  ";
        ir_ << s << "\n";
    }

    // ------------------------------------------------------------------
    // Instruction execution
    // ------------------------------------------------------------------

    /// Route a statement-level sequence: attach the active controls (unless
    /// exempt), balance compute blocks, then either append to the current
    /// trace or execute against the backend.
    void exec_sequence(Sequence s, bool ctrl_exempt = false) {
        auto ctrls = active_ctrls();
        if (!ctrl_exempt && !ctrls.empty()) s = control(s, ctrls);
        if (tracing()) {
            Sequence balanced = expand_balanced(s);
            auto& sink = *traces_.back().sink;
            for (auto& i : balanced) sink.push_back(std::move(i));
            return;
        }
        run_flat(expand_balanced(s));
    }

    void run_flat(const Sequence& s) {
        for (const auto& i : s) run_instr(i);
    }

    void run_instr(const QInstr& i) {
        switch (i.op) {
            case QOp::gate:
            case QOp::perm:
                if (host_counting()) bump(stats_.requests);
                bump(stats_.gates);
                sv_.apply(i);
                record_instr(i);
                return;
            case QOp::alloc:
                if (host_counting()) bump(stats_.requests);
                sv_.alloc(i.targets);
                record_instr(i);
                return;
            case QOp::free_region: {
                record_instr(i);
                double p = sv_.release(i.targets, rng_);
                if (cfg_.check_uncompute && p < 1.0 - 1e-9)
                    throw ExecError(
                        "safe uncomputation check failed: released qubits carry residual "
                        "state (|0...0> overlap " +
                        std::to_string(p) + ")");
                return;
            }
            case QOp::compute: {
                if (record_) {
                    record_line("COMPUTE_BEGIN");
                    ++ir_depth_;
                }
                ++suppress_req_;
                for (const auto& b : i.body) run_instr(b);
                --suppress_req_;
                if (record_) {
                    --ir_depth_;
                    record_line("COMPUTE_END");
                }
                return;
            }
            case QOp::call: {
                if (host_counting()) bump(stats_.requests);
                if (record_) {
                    QInstr hdr = i;
                    hdr.body.clear();
                    record_instr(hdr);
                    ++ir_depth_;
                }
                ++suppress_req_;
                for (const auto& b : i.body) run_instr(b);
                --suppress_req_;
                if (record_) --ir_depth_;
                return;
            }
            case QOp::ctrl_block:
                for (const auto& b : i.body) run_instr(b);
                return;
            default:
                throw ExecError("unexpected instruction in the execution stream");
        }
    }

    // ------------------------------------------------------------------
    // Quantum operand evaluation
    // ------------------------------------------------------------------

    QReg eval_qreg(const Expr& e) {
        switch (e.kind) {
            case ExprKind::ident: {
                Value& v = lookup(e.text, e.loc);
                if (!v.quantum)
                    throw CompileError(e.loc, "'" + e.text + "' is not a quantum register");
                return v.q;
            }
            case ExprKind::index: {
                QReg base = eval_qreg(*e.args[0]);
                std::uint64_t idx = eval_expr(*e.args[1]).as_uint();
                if (idx >= base.addrs.size())
                    throw ExecError("quantum index " + std::to_string(idx) +
                                    " out of range for width " +
                                    std::to_string(base.addrs.size()));
                return {{TypeKind::qbool, 1, TypeKind::invalid}, {base.addrs[idx]}};
            }
            default:
                throw CompileError(e.loc, "expected a quantum register");
        }
    }

    static bool is_quantum_expr_kind(const Expr& e, Machine& m) {
        switch (e.kind) {
            case ExprKind::ident: {
                Value* v = m.find_var(e.text);
                return v && v->quantum;
            }
            case ExprKind::index:
                return is_quantum_expr_kind(*e.args[0], m);
            case ExprKind::cast_qbool:
                return true;
            case ExprKind::unary:
                return is_quantum_expr_kind(*e.args[0], m);
            case ExprKind::binary:
                return is_quantum_expr_kind(*e.args[0], m) ||
                       is_quantum_expr_kind(*e.args[1], m);
            default:
                return false;
        }
    }
    bool is_quantum_expr(const Expr& e) { return is_quantum_expr_kind(e, *this); }

    /// True when the expression is directly a qubit place (no evaluation
    /// circuit needed to use it as a control).
    bool is_plain_qubit(const Expr& e) {
        if (e.kind == ExprKind::ident) {
            Value* v = find_var(e.text);
            return v && v->quantum && v->q.addrs.size() == 1;
        }
        if (e.kind == ExprKind::index) return is_quantum_expr(*e.args[0]);
        return false;
    }

    // ------------------------------------------------------------------
    // Quantum condition evaluation (target ^= predicate)
    // ------------------------------------------------------------------

    void build_cond(const Expr& e, std::uint32_t target, Lowered& out) {
        switch (e.kind) {
            case ExprKind::cast_qbool:
                build_cond(*e.args[0], target, out);
                return;
            case ExprKind::bool_lit:
            case ExprKind::int_lit:
                if (eval_expr(e).truthy())
                    out.seq.push_back(QInstr::make_gate(Gate::X, {target}));
                return;
            case ExprKind::ident:
            case ExprKind::index: {
                QReg r = eval_qreg(e);
                if (r.addrs.size() != 1)
                    throw CompileError(e.loc, "condition requires a single qubit here");
                out.seq.push_back(QInstr::make_gate(Gate::CNOT, {r.addrs[0], target}));
                return;
            }
            case ExprKind::unary: {
                if (e.text == "not" || e.text == "!") {
                    const Expr& inner = *e.args[0];
                    if (is_plain_qubit(inner)) {
                        QReg r = eval_qreg(inner);
                        Sequence s = lower_not(r.addrs[0], target);
                        for (auto& i : s) out.seq.push_back(std::move(i));
                    } else {
                        build_cond(inner, target, out);
                        out.seq.push_back(QInstr::make_gate(Gate::X, {target}));
                    }
                    return;
                }
                throw CompileError(e.loc, "unsupported quantum condition");
            }
            case ExprKind::binary: {
                const std::string& op = e.text;
                if (op == "==" || op == "!=" || op == "<" || op == "<=" || op == ">" ||
                    op == ">=") {
                    build_comparison(e, target, out);
                    return;
                }
                if (op == "|" || op == "&" || op == "^") {
                    std::uint32_t a = cond_operand(*e.args[0], out);
                    std::uint32_t b = cond_operand(*e.args[1], out);
                    Sequence s = op == "|"   ? lower_or(a, b, target)
                                 : op == "&" ? lower_and(a, b, target)
                                             : lower_xor_bool(a, b, target);
                    for (auto& i : s) out.seq.push_back(std::move(i));
                    return;
                }
                throw CompileError(e.loc, "unsupported quantum condition operator '" + op + "'");
            }
            default:
                throw CompileError(e.loc, "unsupported quantum condition");
        }
    }

    /// Qubit carrying the truth value of a condition operand; composite
    /// operands evaluate into a fresh ancilla recorded in `out`.
    std::uint32_t cond_operand(const Expr& e, Lowered& out) {
        if (is_plain_qubit(e)) return eval_qreg(e).addrs[0];
        std::uint32_t t = fresh_addr();
        out.ancillas.push_back(t);
        QInstr alloc;
        alloc.op = QOp::alloc;
        alloc.targets = {t};
        out.seq.push_back(alloc);
        build_cond(e, t, out);
        return t;
    }

    void build_comparison(const Expr& e, std::uint32_t target, Lowered& out) {
        const bool lq = is_quantum_expr(*e.args[0]);
        const bool rq = is_quantum_expr(*e.args[1]);
        if (lq == rq)
            throw CompileError(e.loc,
                               "comparisons take one quantum register and one classical value");
        const Expr& qe = lq ? *e.args[0] : *e.args[1];
        const Expr& ce = lq ? *e.args[1] : *e.args[0];
        std::string op = e.text;
        if (!lq) {  // constant on the left: mirror the operator
            if (op == "<") op = ">";
            else if (op == ">") op = "<";
            else if (op == "<=") op = ">=";
            else if (op == ">=") op = "<=";
        }
        QReg r = eval_qreg(qe);
        std::uint64_t c = eval_expr(ce).as_uint() & width_mask(r.addrs.size());
        CmpOp cmp = op == "==" ? CmpOp::eq
                    : op == "!=" ? CmpOp::ne
                    : op == "<"  ? CmpOp::lt
                    : op == "<=" ? CmpOp::le
                    : op == ">"  ? CmpOp::gt
                                 : CmpOp::ge;
        Lowered low = lower_compare(r.addrs, cmp, c, target, supplier());
        for (auto& i : low.seq) out.seq.push_back(std::move(i));
        for (auto a : low.ancillas) out.ancillas.push_back(a);
    }

    // A prepared control: the qubit address plus the (exempt) computation and
    // uncomputation wrappers to run around the controlled body.
    struct CondCtx {
        std::uint32_t addr = 0;
        Sequence pre, post;
    };

    CondCtx make_ctrl(const Expr& cond) {
        CondCtx cc;
        if (is_plain_qubit(cond)) {
            cc.addr = eval_qreg(cond).addrs[0];
            return cc;
        }
        const std::uint32_t t = fresh_addr();
        Lowered low;
        QInstr alloc;
        alloc.op = QOp::alloc;
        alloc.targets = {t};
        low.seq.push_back(alloc);
        build_cond(cond, t, low);
        Sequence fwd = expand_balanced(low.seq);
        QInstr c1 = QInstr::make_compute(fwd);
        c1.expanded = true;
        QInstr c2 = QInstr::make_compute(dagger(fwd));
        c2.expanded = true;
        cc.addr = t;
        cc.pre = {std::move(c1)};
        cc.post = {std::move(c2)};
        return cc;
    }

    // ------------------------------------------------------------------
    // Quantum arithmetic value construction (out-of-place XOR embedding)
    // ------------------------------------------------------------------

    /// Emit instructions computing the value of `e` into `dst` (assumed |0⟩).
    void compute_into(const Expr& e, const std::vector<std::uint32_t>& dst, Sequence& s) {
        if (!is_quantum_expr(e)) {
            std::uint64_t c = eval_expr(e).as_uint() & width_mask(dst.size());
            for (auto& i : lower_xor_const(dst, c)) s.push_back(std::move(i));
            return;
        }
        if (e.kind == ExprKind::ident || e.kind == ExprKind::index) {
            QReg r = eval_qreg(e);
            const std::size_t n = std::min(dst.size(), r.addrs.size());
            for (std::size_t k = 0; k < n; ++k)
                s.push_back(QInstr::make_gate(Gate::CNOT, {r.addrs[k], dst[k]}));
            return;
        }
        if (e.kind == ExprKind::binary &&
            (e.text == "+" || e.text == "-" || e.text == "^")) {
            compute_into(*e.args[0], dst, s);
            apply_operand(e.text, *e.args[1], dst, s);
            return;
        }
        throw CompileError(e.loc, "unsupported quantum arithmetic expression");
    }

    void apply_operand(const std::string& op, const Expr& e,
                       const std::vector<std::uint32_t>& dst, Sequence& s) {
        const int sign = op == "-" ? -1 : +1;
        if (!is_quantum_expr(e)) {
            std::uint64_t c = eval_expr(e).as_uint() & width_mask(dst.size());
            if (op == "^") {
                for (auto& i : lower_xor_const(dst, c)) s.push_back(std::move(i));
            } else {
                for (auto& i : lower_add_const(dst, c, sign)) s.push_back(std::move(i));
            }
            return;
        }
        std::vector<std::uint32_t> src;
        if (e.kind == ExprKind::ident || e.kind == ExprKind::index) {
            src = eval_qreg(e).addrs;
        } else {
            // nested expression: evaluate into a temporary inside a compute
            // block so it is uncomputed with the statement
            src.reserve(dst.size());
            for (std::size_t k = 0; k < dst.size(); ++k) src.push_back(fresh_addr());
            Sequence prep;
            QInstr alloc;
            alloc.op = QOp::alloc;
            alloc.targets = src;
            prep.push_back(alloc);
            compute_into(e, src, prep);
            s.push_back(QInstr::make_compute(std::move(prep)));
        }
        if (op == "^") {
            const std::size_t n = std::min(dst.size(), src.size());
            for (std::size_t k = 0; k < n; ++k)
                s.push_back(QInstr::make_gate(Gate::CNOT, {src[k], dst[k]}));
        } else {
            for (auto& i : lower_add_quantum(dst, src, sign)) s.push_back(std::move(i));
        }
    }

    // ------------------------------------------------------------------
    // Regions
    // ------------------------------------------------------------------

    std::uint64_t make_region(const std::string& name, std::vector<std::uint32_t> addrs,
                              Sequence init) {
        Region r;
        r.id = next_region_++;
        r.name = name;
        r.addrs = std::move(addrs);
        r.init = std::move(init);
        for (auto a : r.addrs) region_of_addr_[a] = r.id;
        std::uint64_t id = r.id;
        regions_[id] = std::move(r);
        cleanups_.back().push_back({Cleanup::destroy_region, id, {}, {}});
        return id;
    }

    void destroy_region(std::uint64_t id) {
        auto it = regions_.find(id);
        if (it == regions_.end()) return;
        Region r = std::move(it->second);
        regions_.erase(it);
        for (auto a : r.addrs) region_of_addr_.erase(a);

        QInstr free_i;
        free_i.op = QOp::free_region;
        free_i.targets = r.addrs;

        if (tracing()) {
            auto& sink = *traces_.back().sink;
            if (!r.init.empty())
                for (auto& i : dagger(r.init)) sink.push_back(std::move(i));
            sink.push_back(std::move(free_i));
            return;
        }
        if (!r.measured && !r.init.empty()) {
            if (host_counting()) bump(stats_.requests);  // one uncompute action
            ++suppress_req_;
            run_flat(dagger(r.init));
            --suppress_req_;
        }
        try {
            run_instr(free_i);
        } catch (const ExecError& err) {
            throw ExecError("region '" + r.name + "': " + err.what());
        }
    }

    // ------------------------------------------------------------------
    // Block / cleanup machinery
    // ------------------------------------------------------------------

    void unwind_level() {
        auto level = std::move(cleanups_.back());
        cleanups_.pop_back();
        for (auto it = level.rbegin(); it != level.rend(); ++it) {
            if (it->kind == Cleanup::destroy_region)
                destroy_region(it->region);
            else
                exec_sequence(it->seq, /*ctrl_exempt=*/true);
        }
    }

    void exec_block(const Stmt& s) {
        env_.emplace_back();
        cleanups_.emplace_back();
        try {
            for (const auto& t : s.stmts) exec_stmt(*t);
        } catch (ReturnSignal&) {
            if (&s == capture_block_) capture();
            unwind_level();
            env_.pop_back();
            throw;
        } catch (...) {
            cleanups_.pop_back();
            env_.pop_back();
            throw;
        }
        if (&s == capture_block_) capture();
        unwind_level();
        env_.pop_back();
    }

    void capture() {
        capture_block_ = nullptr;
        if (!result_) return;
        result_->has_state = true;
        result_->state = sv_;
        result_->live_regs.clear();
        for (const auto& [id, r] : regions_)
            result_->live_regs.emplace_back(r.name, r.addrs);
    }

    /// Pending compute-block writes that must not be measured yet.
    std::set<std::uint32_t> compute_pending_;

    // ------------------------------------------------------------------
    // Statements
    // ------------------------------------------------------------------

    void exec_stmt(const Stmt& s) {
        switch (s.kind) {
            case StmtKind::block: exec_block(s); return;
            case StmtKind::empty: return;
            case StmtKind::decl: exec_decl(s); return;
            case StmtKind::assign: exec_assign(s); return;
            case StmtKind::expr: eval_expr(*s.expr); return;
            case StmtKind::return_stmt: {
                ReturnSignal r;
                if (s.expr) r.value = eval_expr(*s.expr);
                throw r;
            }
            case StmtKind::for_loop: {
                env_.emplace_back();
                cleanups_.emplace_back();
                try {
                    if (s.init) exec_stmt(*s.init);
                    while (!s.cond || eval_expr(*s.cond).truthy()) {
                        exec_stmt(*s.body);
                        if (s.step) exec_stmt(*s.step);
                    }
                } catch (...) {
                    cleanups_.pop_back();
                    env_.pop_back();
                    throw;
                }
                unwind_level();
                env_.pop_back();
                return;
            }
            case StmtKind::do_while: {
                do {
                    exec_stmt(*s.body);
                } while (eval_expr(*s.cond).truthy());
                return;
            }
            case StmtKind::if_stmt: {
                if (eval_expr(*s.cond).truthy())
                    exec_stmt(*s.body);
                else if (s.else_body)
                    exec_stmt(*s.else_body);
                return;
            }
            case StmtKind::scope_pragma: exec_scope(s); return;
            case StmtKind::ctrl_pragma: exec_ctrl(s); return;
            case StmtKind::compute_pragma: exec_compute(s); return;
            case StmtKind::move_pragma: exec_move(s); return;
        }
    }

    void exec_scope(const Stmt& s) {
        if (in_scope_ || tracing())
            throw CompileError(s.loc, "quantum scopes cannot be nested");
        bump(stats_.requests);  // single scope-entry request
        if (record_) {
            std::string line = "SCOPE_BEGIN";
            for (const auto& v : s.pragma.scope_with) line += " " + v;
            record_line(line);
            ++ir_depth_;
        }
        std::vector<Value*> moved;
        for (const auto& name : s.pragma.scope_with) {
            Value& v = *find_var(name);
            v.on_device = true;
            moved.push_back(&v);
            bump(stats_.transfers);
        }
        in_scope_ = true;
        try {
            exec_stmt(*s.body);
        } catch (...) {
            in_scope_ = false;
            throw;
        }
        in_scope_ = false;
        for (Value* v : moved) {
            v->on_device = false;
            bump(stats_.transfers);
        }
        if (record_) {
            --ir_depth_;
            record_line("SCOPE_END");
        }
    }

    void exec_move(const Stmt& s) {
        if (!in_scope_)
            throw CompileError(s.loc, "move directives are only valid inside a quantum scope");
        for (const auto& clause : s.pragma.move_clauses) {
            for (const auto& name : clause.vars) {
                Value& v = *find_var(name);
                if (clause.to_device && v.on_device)
                    throw ExecError("variable '" + name + "' is already on the device");
                if (!clause.to_device && !v.on_device)
                    throw ExecError("toHost of host-resident variable '" + name + "'");
                v.on_device = clause.to_device;
                bump(stats_.transfers);
                record_line(std::string("MOVE ") +
                            (clause.to_device ? "toDevice " : "toHost ") + name);
            }
        }
    }

    void exec_ctrl(const Stmt& s) {
        CondCtx cc = make_ctrl(*s.pragma.ctrl_arg);
        if (!cc.pre.empty()) exec_sequence(cc.pre, /*ctrl_exempt=*/true);
        ctrl_stack_.push_back(cc.addr);
        try {
            exec_stmt(*s.body);
        } catch (...) {
            ctrl_stack_.pop_back();
            throw;
        }
        ctrl_stack_.pop_back();
        if (!cc.post.empty()) exec_sequence(cc.post, /*ctrl_exempt=*/true);
    }

    void exec_compute(const Stmt& s) {
        Sequence traced;
        traces_.push_back({&traced, ctrl_stack_.size()});
        try {
            exec_stmt(*s.body);
        } catch (...) {
            traces_.pop_back();
            throw;
        }
        traces_.pop_back();
        Sequence fwd = expand_balanced(traced);
        QInstr c1 = QInstr::make_compute(fwd);
        c1.expanded = true;
        QInstr c2 = QInstr::make_compute(dagger(fwd));
        c2.expanded = true;
        std::vector<std::uint32_t> written;
        for (const auto& i : fwd) detail::collect_written(i, written);
        exec_sequence({std::move(c1)}, /*ctrl_exempt=*/true);
        Cleanup cl{Cleanup::uncompute, 0, {std::move(c2)}, written};
        if (!tracing())
            for (auto a : written) compute_pending_.insert(a);
        cleanups_.back().push_back(std::move(cl));
    }

    // ------------------------------------------------------------------
    // Declarations
    // ------------------------------------------------------------------

    void exec_decl(const Stmt& s) {
        for (const auto& d : s.decls) {
            SizeEnv empty;
            Type t = resolve_runtime_type(s.dtype, d);
            if (t.is_quantum())
                exec_quantum_decl(t, d);
            else
                exec_classical_decl(t, s.dtype, d);
        }
    }

    Type resolve_runtime_type(const TypeSpec& ts, const Declarator& d) {
        Type t;
        t.kind = ts.kind;
        switch (ts.kind) {
            case TypeKind::qbool: t.width = 1; break;
            case TypeKind::quint:
            case TypeKind::qint:
            case TypeKind::qarray:
                t.width = eval_expr(*ts.width).as_uint();
                break;
            case TypeKind::qvector:
                t.width = d.ctor_arg ? eval_expr(*d.ctor_arg).as_uint() : 0;
                break;
            default: break;
        }
        return t;
    }

    void exec_classical_decl(Type t, const TypeSpec& ts, const Declarator& d) {
        Value v;
        v.quantum = false;
        v.on_device = in_scope_ || routine_depth_ > 0;
        if (d.array_size) {
            std::uint64_t n = eval_expr(*d.array_size).as_uint();
            v.c.kind = TypeKind::carray;
            CVal elem;
            elem.kind = ts.kind;
            v.c.elems.assign(n, elem);
        } else if (d.init) {
            v.c = convert(eval_expr(*d.init), ts.kind);
        } else {
            v.c.kind = ts.kind;
        }
        declare(d.name, std::move(v));
    }

    static CVal convert(CVal v, TypeKind to) {
        switch (to) {
            case TypeKind::bool_t: return CVal::of_bool(v.truthy());
            case TypeKind::int_t: return CVal::of_int(v.as_int());
            case TypeKind::uint_t: return CVal::of_uint(v.as_uint());
            case TypeKind::double_t: return CVal::of_double(v.as_double());
            default: return v;
        }
    }

    void exec_quantum_decl(const Type& t, const Declarator& d) {
        std::vector<std::uint32_t> addrs;
        addrs.reserve(t.width);
        for (std::uint64_t k = 0; k < t.width; ++k) addrs.push_back(fresh_addr());

        Sequence init_raw = build_init(t, d, addrs);
        Sequence init = expand_balanced(init_raw);

        QInstr alloc;
        alloc.op = QOp::alloc;
        alloc.targets = addrs;

        if (tracing()) {
            auto& sink = *traces_.back().sink;
            sink.push_back(std::move(alloc));
            for (auto& i : init) sink.push_back(i);
        } else {
            if (host_counting()) bump(stats_.requests);  // alloc + init: one request
            ++suppress_req_;
            run_instr(alloc);
            run_flat(init);
            --suppress_req_;
        }
        make_region(d.name, addrs, std::move(init));

        Value v;
        v.quantum = true;
        v.on_device = in_scope_ || routine_depth_ > 0;
        v.q = {t, std::move(addrs)};
        declare(d.name, std::move(v));
    }

    Sequence build_init(const Type& t, const Declarator& d,
                        const std::vector<std::uint32_t>& addrs) {
        if (!d.init) return {};
        const Expr& e = *d.init;

        // modular exponentiation embedding: quint<N> y = pow(base, x, mod)
        if (e.kind == ExprKind::call && e.text == "pow") {
            std::uint64_t base = eval_expr(*e.args[0]).as_uint();
            QReg x = eval_qreg(*e.args[1]);
            std::uint64_t mod = eval_expr(*e.args[2]).as_uint();
            return {lower_pow_mod(base, x.addrs, addrs, mod)};
        }

        if (!is_quantum_expr(e)) {
            std::uint64_t v = eval_expr(e).as_uint() & width_mask(addrs.size());
            return get_init(addrs, v);
        }

        if (t.kind == TypeKind::qbool) {
            Lowered low;
            build_cond(e, addrs[0], low);
            Sequence s = std::move(low.seq);
            for (auto a : low.ancillas) {
                QInstr f;
                f.op = QOp::free_region;
                f.targets = {a};
                s.push_back(std::move(f));
            }
            return s;
        }

        // register-valued initializer via XOR embedding
        Sequence s;
        compute_into(e, addrs, s);
        return s;
    }

    // ------------------------------------------------------------------
    // Assignments
    // ------------------------------------------------------------------

    void exec_assign(const Stmt& s) {
        if (is_quantum_expr(*s.lhs)) {
            exec_quantum_assign(s);
            return;
        }
        if (s.op == "++" || s.op == "--") {
            CVal& slot = classical_lvalue(*s.lhs);
            if (slot.kind == TypeKind::double_t)
                slot.d += (s.op == "++" ? 1.0 : -1.0);
            else
                slot.i += (s.op == "++" ? 1 : -1);
            return;
        }
        CVal rhs = eval_expr(*s.rhs);
        CVal& slot = classical_lvalue(*s.lhs);
        if (s.op == "=") {
            slot = convert(std::move(rhs), slot.kind);
            return;
        }
        std::string binop = s.op.substr(0, s.op.size() - 1);  // "+=" -> "+"
        slot = convert(classical_binary(binop, slot, rhs, s.loc), slot.kind);
    }

    CVal& classical_lvalue(const Expr& e) {
        if (e.kind == ExprKind::ident) {
            Value& v = lookup(e.text, e.loc, /*write=*/true);
            if (v.quantum) throw CompileError(e.loc, "expected a classical variable");
            return v.c;
        }
        if (e.kind == ExprKind::index) {
            CVal& base = classical_lvalue(*e.args[0]);
            std::uint64_t idx = eval_expr(*e.args[1]).as_uint();
            if (base.kind != TypeKind::carray || idx >= base.elems.size())
                throw ExecError("array index out of range");
            return base.elems[idx];
        }
        throw CompileError(e.loc, "expression is not assignable");
    }

    void exec_quantum_assign(const Stmt& s) {
        QReg dst = eval_qreg(*s.lhs);
        const Expr& rhs = *s.rhs;
        Sequence seq;
        std::vector<std::uint32_t> extra_frees;

        if (s.op == "^=") {
            if (dst.type.kind == TypeKind::qbool && is_quantum_expr(rhs) &&
                !(rhs.kind == ExprKind::ident || rhs.kind == ExprKind::index)) {
                Lowered low;
                build_cond(rhs, dst.addrs[0], low);
                seq = std::move(low.seq);
                extra_frees = std::move(low.ancillas);
            } else if (!is_quantum_expr(rhs)) {
                std::uint64_t c = eval_expr(rhs).as_uint() & width_mask(dst.addrs.size());
                seq = lower_xor_const(dst.addrs, c);
            } else if (rhs.kind == ExprKind::ident || rhs.kind == ExprKind::index) {
                QReg src = eval_qreg(rhs);
                seq = lower_xor_quantum(dst.addrs, src.addrs);
            } else {
                apply_operand("^", rhs, dst.addrs, seq);
            }
        } else if (s.op == "+=" || s.op == "-=") {
            const int sign = s.op == "+=" ? +1 : -1;
            if (!is_quantum_expr(rhs)) {
                std::int64_t c = eval_expr(rhs).as_int();
                std::uint64_t cu = static_cast<std::uint64_t>(c) & width_mask(dst.addrs.size());
                seq = lower_add_const(dst.addrs, cu, sign);
            } else if (rhs.kind == ExprKind::ident || rhs.kind == ExprKind::index) {
                QReg src = eval_qreg(rhs);
                seq = lower_add_quantum(dst.addrs, src.addrs, sign);
            } else {
                apply_operand(s.op.substr(0, 1), rhs, dst.addrs, seq);
            }
        } else {
            throw CompileError(s.loc, "operator " + s.op + " is not defined on quantum types");
        }

        for (auto a : extra_frees) {
            QInstr f;
            f.op = QOp::free_region;
            f.targets = {a};
            seq.push_back(std::move(f));
        }
        exec_sequence(std::move(seq));
    }

    // ------------------------------------------------------------------
    // Measurement
    // ------------------------------------------------------------------

    CVal do_measure(const Expr& arg, bool keep_value, SourceLoc loc) {
        if (tracing())
            throw CompileError(loc, "measurement-based operations are not allowed here");
        QReg r = eval_qreg(arg);
        for (auto a : r.addrs)
            if (compute_pending_.count(a))
                throw ExecError(
                    "measurement of a qubit written by a compute block before its "
                    "uncomputation");
        if (host_counting()) bump(stats_.requests);
        bump(stats_.measures);
        std::vector<int> bits = sv_.measure(r.addrs, rng_);
        for (std::size_t k = 0; k < bits.size(); ++k)
            if (bits[k]) sv_.flip_addr(r.addrs[k]);  // reset to |0...0>
        for (auto a : r.addrs) {
            auto it = region_of_addr_.find(a);
            if (it != region_of_addr_.end()) regions_[it->second].measured = true;
        }
        if (record_) {
            QInstr m;
            m.op = QOp::measure;
            m.targets = r.addrs;
            m.with_reset = true;
            record_instr(m);
        }
        if (!keep_value) return {};
        std::string chunk(bits.size(), '0');
        for (std::size_t k = 0; k < bits.size(); ++k)
            chunk[bits.size() - 1 - k] = bits[k] ? '1' : '0';  // MSB leftmost
        shot_key_ += chunk;
        switch (r.type.kind) {
            case TypeKind::qbool: return CVal::of_bool(bits[0] != 0);
            case TypeKind::qint: return CVal::of_int(bits_to_int(bits));
            default: return CVal::of_uint(bits_to_uint(bits));
        }
    }

    // ------------------------------------------------------------------
    // Expressions (classical evaluation + quantum statement calls)
    // ------------------------------------------------------------------

    CVal eval_expr(const Expr& e) {
        switch (e.kind) {
            case ExprKind::int_lit: return CVal::of_uint(e.int_val);
            case ExprKind::float_lit: return CVal::of_double(e.float_val);
            case ExprKind::bool_lit: return CVal::of_bool(e.bool_val);
            case ExprKind::ident: {
                if (e.text == "M_PI") return CVal::of_double(kPi);
                Value& v = lookup(e.text, e.loc);
                if (v.quantum)
                    throw CompileError(e.loc, "quantum register '" + e.text +
                                                  "' used where a classical value is required");
                return v.c;
            }
            case ExprKind::index: {
                CVal base = eval_expr(*e.args[0]);
                std::uint64_t idx = eval_expr(*e.args[1]).as_uint();
                if (base.kind != TypeKind::carray || idx >= base.elems.size())
                    throw ExecError("array index out of range");
                return base.elems[idx];
            }
            case ExprKind::unary: {
                CVal v = eval_expr(*e.args[0]);
                if (e.text == "-") {
                    if (v.kind == TypeKind::double_t) return CVal::of_double(-v.d);
                    return CVal::of_int(-v.as_int());
                }
                if (e.text == "~") return CVal::of_uint(~v.as_uint());
                return CVal::of_bool(!v.truthy());  // "not" / "!"
            }
            case ExprKind::binary:
                return classical_binary(e.text, eval_expr(*e.args[0]),
                                        eval_expr(*e.args[1]), e.loc);
            case ExprKind::call:
                return eval_call(e);
            case ExprKind::cast_qbool:
                throw CompileError(e.loc, "qbool cast outside a quantum context");
        }
        throw CompileError(e.loc, "unsupported expression");
    }

    static CVal classical_binary(const std::string& op, const CVal& a, const CVal& b,
                                 SourceLoc loc) {
        if (op == "&&") return CVal::of_bool(a.truthy() && b.truthy());
        if (op == "||") return CVal::of_bool(a.truthy() || b.truthy());
        const bool fp = a.kind == TypeKind::double_t || b.kind == TypeKind::double_t;
        if (fp) {
            double x = a.as_double(), y = b.as_double();
            if (op == "+") return CVal::of_double(x + y);
            if (op == "-") return CVal::of_double(x - y);
            if (op == "*") return CVal::of_double(x * y);
            if (op == "/") return CVal::of_double(x / y);
            if (op == "==") return CVal::of_bool(x == y);
            if (op == "!=") return CVal::of_bool(x != y);
            if (op == "<") return CVal::of_bool(x < y);
            if (op == "<=") return CVal::of_bool(x <= y);
            if (op == ">") return CVal::of_bool(x > y);
            if (op == ">=") return CVal::of_bool(x >= y);
            throw CompileError(loc, "operator " + op + " is not defined on double");
        }
        const bool u = a.kind == TypeKind::uint_t || b.kind == TypeKind::uint_t;
        if (u) {
            std::uint64_t x = a.as_uint(), y = b.as_uint();
            if (op == "+") return CVal::of_uint(x + y);
            if (op == "-") return CVal::of_uint(x - y);
            if (op == "*") return CVal::of_uint(x * y);
            if (op == "/") {
                if (!y) throw ExecError("division by zero");
                return CVal::of_uint(x / y);
            }
            if (op == "%") {
                if (!y) throw ExecError("division by zero");
                return CVal::of_uint(x % y);
            }
            if (op == "<<") return CVal::of_uint(x << (y & 63));
            if (op == ">>") return CVal::of_uint(x >> (y & 63));
            if (op == "&") return CVal::of_uint(x & y);
            if (op == "|") return CVal::of_uint(x | y);
            if (op == "^") return CVal::of_uint(x ^ y);
            if (op == "==") return CVal::of_bool(x == y);
            if (op == "!=") return CVal::of_bool(x != y);
            if (op == "<") return CVal::of_bool(x < y);
            if (op == "<=") return CVal::of_bool(x <= y);
            if (op == ">") return CVal::of_bool(x > y);
            if (op == ">=") return CVal::of_bool(x >= y);
        } else {
            std::int64_t x = a.as_int(), y = b.as_int();
            if (op == "+") return CVal::of_int(x + y);
            if (op == "-") return CVal::of_int(x - y);
            if (op == "*") return CVal::of_int(x * y);
            if (op == "/") {
                if (!y) throw ExecError("division by zero");
                return CVal::of_int(x / y);
            }
            if (op == "%") {
                if (!y) throw ExecError("division by zero");
                return CVal::of_int(x % y);
            }
            if (op == "<<") return CVal::of_int(x << (y & 63));
            if (op == ">>") return CVal::of_int(x >> (y & 63));
            if (op == "&") return CVal::of_int(x & y);
            if (op == "|") return CVal::of_int(x | y);
            if (op == "^") return CVal::of_int(x ^ y);
            if (op == "==") return CVal::of_bool(x == y);
            if (op == "!=") return CVal::of_bool(x != y);
            if (op == "<") return CVal::of_bool(x < y);
            if (op == "<=") return CVal::of_bool(x <= y);
            if (op == ">") return CVal::of_bool(x > y);
            if (op == ">=") return CVal::of_bool(x >= y);
        }
        throw CompileError(loc, "unsupported operator " + op);
    }

    CVal eval_call(const Expr& e) {
        if (e.is_wall) {
            exec_wall(e);
            return {};
        }
        Builtin b = builtin_by_name(e.text);
        if (builtin_is_gate(b)) {
            exec_gate(e, builtin_gate(b));
            return {};
        }
        switch (b) {
            case Builtin::measure_and_reset: return do_measure(*e.args[0], true, e.loc);
            case Builtin::reset: return do_measure(*e.args[0], false, e.loc);
            case Builtin::print_fn: {
                std::string line;
                for (std::size_t i = 0; i < e.args.size(); ++i) {
                    if (i) line += ' ';
                    line += eval_expr(*e.args[i]).str();
                }
                if (count_stats_) prints_.push_back(std::move(line));
                return {};
            }
            case Builtin::pow_fn:
                throw CompileError(e.loc,
                                   "pow is only valid as a quantum register initializer");
            default: break;
        }
        if (const FunctionDecl* f = find_function(e.text)) {
            std::vector<CVal> args;
            for (const auto& a : e.args) args.push_back(eval_expr(*a));
            return call_function(*f, std::move(args));
        }
        exec_routine_call(e);
        return {};
    }

    CVal call_function(const FunctionDecl& f, std::vector<CVal> args) {
        env_.emplace_back();
        frames_.push_back(env_.size() - 1);
        for (std::size_t i = 0; i < f.params.size(); ++i) {
            Value v;
            v.quantum = false;
            v.c = convert(std::move(args[i]), f.params[i].type.kind);
            declare(f.params[i].name, std::move(v));
        }
        CVal out;
        try {
            exec_stmt(*f.body);
        } catch (ReturnSignal& r) {
            out = std::move(r.value);
        }
        frames_.pop_back();
        env_.pop_back();
        return out;
    }

    // ------------------------------------------------------------------
    // Gate / wall / routine statements
    // ------------------------------------------------------------------

    struct SelCtx {
        bool dag = false;
        std::optional<CondCtx> ctrl;
        std::size_t first_arg = 0;
    };

    SelCtx resolve_selector(const Expr& e) {
        SelCtx sc;
        sc.dag = e.sel == RoutineSel::dag || e.sel == RoutineSel::ctrl_dag;
        if (e.sel == RoutineSel::ctrl || e.sel == RoutineSel::ctrl_dag) {
            if (e.args.empty())
                throw CompileError(e.loc, "ctrl call requires a control argument");
            sc.ctrl = make_ctrl(*e.args[0]);
            sc.first_arg = 1;
        }
        return sc;
    }

    void exec_with_selector(Sequence body, const SelCtx& sc) {
        if (sc.dag) body = dagger(body);
        Sequence final_seq;
        if (sc.ctrl) {
            body = control(body, {sc.ctrl->addr});
            for (auto& i : sc.ctrl->pre) final_seq.push_back(i);
        }
        for (auto& i : body) final_seq.push_back(std::move(i));
        if (sc.ctrl)
            for (auto& i : sc.ctrl->post) final_seq.push_back(i);
        exec_sequence(std::move(final_seq));
    }

    void exec_gate(const Expr& e, Gate g) {
        SelCtx sc = resolve_selector(e);
        double angle = 0.0;
        if (gate_has_angle(g)) {
            if (!e.has_binding || e.bound_args.size() != 1)
                throw CompileError(e.loc, std::string(gate_name(g)) + " takes one angle");
            angle = eval_expr(*e.bound_args[0]).as_double();
        }
        std::vector<std::uint32_t> targets;
        for (std::size_t i = sc.first_arg; i < e.args.size(); ++i) {
            QReg r = eval_qreg(*e.args[i]);
            if (r.addrs.size() != 1)
                throw CompileError(e.args[i]->loc, "gate targets must be single qubits");
            targets.push_back(r.addrs[0]);
        }
        if (targets.size() != static_cast<std::size_t>(gate_arity(g)))
            throw CompileError(e.loc, std::string(gate_name(g)) + " takes " +
                                          std::to_string(gate_arity(g)) + " target(s)");
        exec_with_selector({QInstr::make_gate(g, std::move(targets), angle)}, sc);
    }

    void exec_wall(const Expr& e) {
        SelCtx sc = resolve_selector(e);
        Gate g = wall_gate_by_name(e.wall_gate, e.loc);
        std::uint64_t k = eval_expr(*e.size_args[0]).as_uint();
        QReg r = eval_qreg(*e.args[sc.first_arg]);
        exec_with_selector(wall(g, static_cast<std::size_t>(k), r.addrs), sc);
    }

    void exec_routine_call(const Expr& e) {
        const RoutineDecl* decl = table_.find(e.text);
        if (!decl)
            throw CompileError(e.loc, "unknown routine or function '" + e.text + "'");
        std::vector<std::int64_t> size_vals;
        for (const auto& sa : e.size_args) size_vals.push_back(eval_expr(*sa).as_int());
        const ConcreteRoutine* cr = table_.instantiate(e.text, size_vals, e.loc);

        std::vector<CVal> bound;
        if (e.has_binding)
            for (const auto& a : e.bound_args) bound.push_back(eval_expr(*a));
        if (bound.size() != decl->pragma.bound_vars.size())
            throw CompileError(e.loc, "routine '" + cr->key + "' binds " +
                                          std::to_string(decl->pragma.bound_vars.size()) +
                                          " classical values");

        SelCtx sc = resolve_selector(e);

        std::vector<QReg> args;
        for (std::size_t i = sc.first_arg; i < e.args.size(); ++i)
            args.push_back(eval_qreg(*e.args[i]));

        // bind parameters
        std::vector<std::pair<std::string, Value>> params;
        std::vector<std::uint32_t> all_targets;
        if (cr->flag == RoutineFlag::typed || cr->flag == RoutineFlag::dynamic) {
            if (args.size() != cr->param_types.size())
                throw ExecError("routine '" + cr->key + "' expects " +
                                std::to_string(cr->param_types.size()) + " arguments");
            for (std::size_t i = 0; i < args.size(); ++i) {
                Type pt = cr->param_types[i];
                if (pt.kind == TypeKind::qvector) {
                    if (args[i].type.kind != TypeKind::qvector)
                        throw ExecError("argument " + std::to_string(i + 1) +
                                        " of routine '" + cr->key + "' must be qvector");
                } else if (!(pt == args[i].type)) {
                    throw ExecError("argument " + std::to_string(i + 1) + " of typed routine '" +
                                    cr->key + "' must be " + type_name(pt));
                }
                Value v;
                v.quantum = true;
                v.on_device = true;
                v.q = args[i];
                params.emplace_back(cr->decl->qparams[i].name, std::move(v));
                all_targets.insert(all_targets.end(), args[i].addrs.begin(),
                                   args[i].addrs.end());
            }
        } else {
            std::vector<std::uint32_t> flat;
            for (const auto& a : args)
                flat.insert(flat.end(), a.addrs.begin(), a.addrs.end());
            if (flat.size() != cr->total_width)
                throw ExecError("routine '" + cr->key + "' acts on " +
                                std::to_string(cr->total_width) + " qubits, call provides " +
                                std::to_string(flat.size()));
            std::size_t off = 0;
            for (std::size_t i = 0; i < cr->param_types.size(); ++i) {
                Type pt = cr->param_types[i];
                Value v;
                v.quantum = true;
                v.on_device = true;
                v.q.type = pt;
                v.q.addrs.assign(flat.begin() + static_cast<std::ptrdiff_t>(off),
                                 flat.begin() + static_cast<std::ptrdiff_t>(off + pt.width));
                off += pt.width;
                params.emplace_back(cr->decl->qparams[i].name, std::move(v));
            }
            all_targets = std::move(flat);
        }

        // trace the body
        Sequence traced;
        {
            RoutineTable::DepthGuard dg(table_);
            env_.emplace_back();
            frames_.push_back(env_.size() - 1);
            for (const auto& [name, val] : cr->size_env) {
                Value v;
                v.quantum = false;
                v.on_device = true;
                v.c = CVal::of_uint(static_cast<std::uint64_t>(val));
                declare(name, std::move(v));
            }
            for (std::size_t i = 0; i < bound.size(); ++i) {
                Value v;
                v.quantum = false;
                v.on_device = true;
                v.c = convert(std::move(bound[i]), decl->pragma.bound_vars[i].type);
                declare(decl->pragma.bound_vars[i].name, std::move(v));
            }
            for (auto& [name, v] : params) declare(name, std::move(v));
            traces_.push_back({&traced, ctrl_stack_.size()});
            ++routine_depth_;
            try {
                exec_stmt(*cr->decl->body);
            } catch (...) {
                --routine_depth_;
                traces_.pop_back();
                frames_.pop_back();
                env_.pop_back();
                throw;
            }
            --routine_depth_;
            traces_.pop_back();
            frames_.pop_back();
            env_.pop_back();
        }

        if (sc.dag) traced = dagger(traced);
        if (sc.ctrl) traced = control(traced, {sc.ctrl->addr});

        QInstr call;
        call.op = QOp::call;
        call.name = cr->key;
        call.targets = std::move(all_targets);
        call.dag = sc.dag;
        if (sc.ctrl) call.ctrls = {sc.ctrl->addr};
        call.body = std::move(traced);

        Sequence final_seq;
        if (sc.ctrl)
            for (auto& i : sc.ctrl->pre) final_seq.push_back(i);
        final_seq.push_back(std::move(call));
        if (sc.ctrl)
            for (auto& i : sc.ctrl->post) final_seq.push_back(i);
        exec_sequence(std::move(final_seq));
    }
};

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

inline RunResult run_program(const Program& prog, const RunConfig& cfg) {
    return Machine(prog, cfg).run();
}

}  // namespace qpragma
