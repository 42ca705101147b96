#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "qpragma/ast.hpp"
#include "qpragma/diagnostics.hpp"
#include "qpragma/qir.hpp"

namespace qpragma {

// ---------------------------------------------------------------------------
// Compile-time constant evaluation (integer arithmetic over size parameters
// and literal-initialized classical variables)
// ---------------------------------------------------------------------------

using SizeEnv = std::map<std::string, std::int64_t>;

inline std::optional<std::int64_t> eval_const(const Expr& e, const SizeEnv& env) {
    switch (e.kind) {
        case ExprKind::int_lit:
            return static_cast<std::int64_t>(e.int_val);
        case ExprKind::bool_lit:
            return e.bool_val ? 1 : 0;
        case ExprKind::ident: {
            auto it = env.find(e.text);
            if (it == env.end()) return std::nullopt;
            return it->second;
        }
        case ExprKind::unary: {
            auto v = eval_const(*e.args[0], env);
            if (!v) return std::nullopt;
            if (e.text == "-") return -*v;
            if (e.text == "~") return ~*v;
            if (e.text == "not" || e.text == "!") return *v ? 0 : 1;
            return std::nullopt;
        }
        case ExprKind::binary: {
            auto a = eval_const(*e.args[0], env);
            auto b = eval_const(*e.args[1], env);
            if (!a || !b) return std::nullopt;
            const std::string& op = e.text;
            if (op == "+") return *a + *b;
            if (op == "-") return *a - *b;
            if (op == "*") return *a * *b;
            if (op == "/") return *b ? std::optional<std::int64_t>(*a / *b) : std::nullopt;
            if (op == "%") return *b ? std::optional<std::int64_t>(*a % *b) : std::nullopt;
            if (op == "<<") return *a << *b;
            if (op == ">>") return *a >> *b;
            if (op == "&") return *a & *b;
            if (op == "|") return *a | *b;
            if (op == "^") return *a ^ *b;
            if (op == "==") return *a == *b;
            if (op == "!=") return *a != *b;
            if (op == "<") return *a < *b;
            if (op == "<=") return *a <= *b;
            if (op == ">") return *a > *b;
            if (op == ">=") return *a >= *b;
            if (op == "&&") return (*a && *b) ? 1 : 0;
            if (op == "||") return (*a || *b) ? 1 : 0;
            return std::nullopt;
        }
        default:
            return std::nullopt;
    }
}

// ---------------------------------------------------------------------------
// Routine table and monomorphization
// ---------------------------------------------------------------------------

struct ConcreteRoutine {
    const RoutineDecl* decl = nullptr;
    std::string key;          // e.g. "solve<3>"
    SizeEnv size_env;         // size parameters bound to constants
    RoutineFlag flag = RoutineFlag::none;
    std::vector<Type> param_types;  // concrete; qvector has width 0
    std::uint64_t total_width = 0;  // meaningless when a param is qvector
    bool has_qvector_param = false;
};

constexpr int kMonomorphizationDepthLimit = 64;

class RoutineTable {
public:
    void add(const RoutineDecl& r) {
        if (byname_.count(r.name))
            throw CompileError(r.loc, "routine '" + r.name + "' is defined twice");
        byname_[r.name] = &r;
    }

    const RoutineDecl* find(const std::string& name) const {
        auto it = byname_.find(name);
        return it == byname_.end() ? nullptr : it->second;
    }

    /// Resolve a TypeSpec against a size environment.
    static Type resolve_type(const TypeSpec& ts, const SizeEnv& env, SourceLoc loc) {
        Type t;
        t.kind = ts.kind;
        switch (ts.kind) {
            case TypeKind::qbool:
                t.width = 1;
                break;
            case TypeKind::quint:
            case TypeKind::qint:
            case TypeKind::qarray: {
                auto w = eval_const(*ts.width, env);
                if (!w)
                    throw CompileError(loc, "register width must be a compile-time constant");
                // qarray<0> is legal so recursive routines can bottom out
                if (*w < (ts.kind == TypeKind::qarray ? 0 : 1))
                    throw CompileError(loc, "register width must be at least 1");
                t.width = static_cast<std::uint64_t>(*w);
                break;
            }
            case TypeKind::qvector:
                t.width = 0;
                break;
            default:
                break;  // classical types carry no width
        }
        return t;
    }

    /// Monomorphize `name` with the given size arguments (missing trailing
    /// arguments are filled from declared defaults). Results are cached.
    const ConcreteRoutine* instantiate(const std::string& name,
                                       const std::vector<std::int64_t>& size_args,
                                       SourceLoc loc) const {
        const RoutineDecl* decl = find(name);
        if (!decl) throw CompileError(loc, "unknown routine '" + name + "'");
        if (size_args.size() > decl->size_params.size())
            throw CompileError(loc, "too many size arguments for routine '" + name + "'");

        if (depth_ >= kMonomorphizationDepthLimit)
            throw CompileError(loc, "monomorphization recursion depth limit (" +
                                        std::to_string(kMonomorphizationDepthLimit) +
                                        ") exceeded instantiating '" + name + "'");

        SizeEnv env;
        std::string key = name;
        if (!decl->size_params.empty()) key += '<';
        for (std::size_t i = 0; i < decl->size_params.size(); ++i) {
            const SizeParam& sp = decl->size_params[i];
            std::int64_t v;
            if (i < size_args.size()) {
                v = size_args[i];
            } else if (sp.default_value) {
                auto d = eval_const(*sp.default_value, env);
                if (!d)
                    throw CompileError(sp.loc, "default for size parameter '" + sp.name +
                                                   "' is not a compile-time constant");
                v = *d;
            } else {
                throw CompileError(loc, "missing size argument '" + sp.name +
                                            "' in call to routine '" + name + "'");
            }
            if (v < 0)
                throw CompileError(loc, "size parameter '" + sp.name + "' must be non-negative");
            env[sp.name] = v;
            key += (i ? "," : "") + std::to_string(v);
        }
        if (!decl->size_params.empty()) key += '>';

        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second.get();

        auto cr = std::make_unique<ConcreteRoutine>();
        cr->decl = decl;
        cr->key = key;
        cr->size_env = env;
        cr->flag = decl->pragma.flag;
        for (const auto& p : decl->qparams) {
            Type t = resolve_type(p.type, env, p.loc);
            if (!t.is_quantum())
                throw CompileError(p.loc, "routine parameters must be quantum types");
            if (t.kind == TypeKind::qvector) {
                if (cr->flag != RoutineFlag::dynamic)
                    throw CompileError(p.loc,
                                       "qvector parameters require a dynamic routine");
                cr->has_qvector_param = true;
            }
            cr->total_width += t.width;
            cr->param_types.push_back(t);
        }
        const ConcreteRoutine* out = cr.get();
        cache_[key] = std::move(cr);
        return out;
    }

    struct DepthGuard {
        const RoutineTable& t;
        explicit DepthGuard(const RoutineTable& tab) : t(tab) { ++t.depth_; }
        ~DepthGuard() { --t.depth_; }
    };

    const std::map<std::string, std::unique_ptr<ConcreteRoutine>>& cache() const {
        return cache_;
    }

private:
    std::map<std::string, const RoutineDecl*> byname_;
    mutable std::map<std::string, std::unique_ptr<ConcreteRoutine>> cache_;
    mutable int depth_ = 0;
};

// ---------------------------------------------------------------------------
// Call compatibility
// ---------------------------------------------------------------------------

/// Check one call against a concrete routine. `arg_types` are the concrete
/// quantum types of the call arguments (qvector width is its runtime size, or
/// 0 when unknown statically).
inline void check_call_compat(const ConcreteRoutine& r, const std::vector<Type>& arg_types,
                              SourceLoc loc) {
    if (r.flag == RoutineFlag::typed || r.flag == RoutineFlag::dynamic) {
        if (arg_types.size() != r.param_types.size())
            throw CompileError(loc, "routine '" + r.key + "' expects " +
                                        std::to_string(r.param_types.size()) +
                                        " arguments, got " + std::to_string(arg_types.size()));
        for (std::size_t i = 0; i < arg_types.size(); ++i) {
            const Type& want = r.param_types[i];
            const Type& got = arg_types[i];
            if (want.kind == TypeKind::qvector) {
                if (got.kind != TypeKind::qvector)
                    throw CompileError(loc, "argument " + std::to_string(i + 1) +
                                                " of routine '" + r.key + "' must be qvector, got " +
                                                type_name(got));
                continue;  // runtime-sized; width checked at run time
            }
            if (!(want == got))
                throw CompileError(loc, "argument " + std::to_string(i + 1) + " of typed routine '" +
                                            r.key + "' must be " + type_name(want) + ", got " +
                                            type_name(got));
        }
        return;
    }
    // untyped: total width equality; arguments may have any static shape
    std::uint64_t width = 0;
    for (const auto& t : arg_types) {
        if (t.kind == TypeKind::qvector)
            throw CompileError(loc, "qvector arguments require a dynamic routine");
        width += t.width;
    }
    if (width != r.total_width)
        throw CompileError(loc, "routine '" + r.key + "' acts on " +
                                    std::to_string(r.total_width) + " qubits, call provides " +
                                    std::to_string(width));
}

// ---------------------------------------------------------------------------
// Builtins
// ---------------------------------------------------------------------------

enum class Builtin {
    none = -1,
    gate_i,
    gate_x,
    gate_y,
    gate_z,
    gate_h,
    gate_s,
    gate_t,
    gate_rx,
    gate_ry,
    gate_rz,
    gate_ph,
    gate_cnot,
    gate_ccnot,
    gate_swap,
    measure_and_reset,
    reset,
    pow_fn,
    print_fn,
};

inline Builtin builtin_by_name(const std::string& n) {
    if (n == "I") return Builtin::gate_i;
    if (n == "X") return Builtin::gate_x;
    if (n == "Y") return Builtin::gate_y;
    if (n == "Z") return Builtin::gate_z;
    if (n == "H") return Builtin::gate_h;
    if (n == "S") return Builtin::gate_s;
    if (n == "T") return Builtin::gate_t;
    if (n == "RX") return Builtin::gate_rx;
    if (n == "RY") return Builtin::gate_ry;
    if (n == "RZ") return Builtin::gate_rz;
    if (n == "PH") return Builtin::gate_ph;
    if (n == "CNOT") return Builtin::gate_cnot;
    if (n == "CCNOT") return Builtin::gate_ccnot;
    if (n == "SWAP") return Builtin::gate_swap;
    if (n == "measure_and_reset") return Builtin::measure_and_reset;
    if (n == "reset") return Builtin::reset;
    if (n == "pow") return Builtin::pow_fn;
    if (n == "print") return Builtin::print_fn;
    return Builtin::none;
}

inline bool builtin_is_gate(Builtin b) {
    return b >= Builtin::gate_i && b <= Builtin::gate_swap;
}

inline Gate builtin_gate(Builtin b) {
    switch (b) {
        case Builtin::gate_i: return Gate::I;
        case Builtin::gate_x: return Gate::X;
        case Builtin::gate_y: return Gate::Y;
        case Builtin::gate_z: return Gate::Z;
        case Builtin::gate_h: return Gate::H;
        case Builtin::gate_s: return Gate::S;
        case Builtin::gate_t: return Gate::T;
        case Builtin::gate_rx: return Gate::RX;
        case Builtin::gate_ry: return Gate::RY;
        case Builtin::gate_rz: return Gate::RZ;
        case Builtin::gate_ph: return Gate::PH;
        case Builtin::gate_cnot: return Gate::CNOT;
        case Builtin::gate_ccnot: return Gate::CCNOT;
        case Builtin::gate_swap: return Gate::SWAP;
        default: throw ExecError("not a gate builtin");
    }
}

inline Gate wall_gate_by_name(const std::string& n, SourceLoc loc) {
    if (n == "H") return Gate::H;
    if (n == "X") return Gate::X;
    if (n == "Y") return Gate::Y;
    if (n == "Z") return Gate::Z;
    if (n == "S") return Gate::S;
    if (n == "T") return Gate::T;
    if (n == "I") return Gate::I;
    throw CompileError(loc, "unsupported wall gate '" + n + "'");
}

// ---------------------------------------------------------------------------
// Static checker
// ---------------------------------------------------------------------------

/// Type-checks the program, enforces routine purity, typed/dynamic call
/// rules, locality constraints, and instantiates every statically reachable
/// routine. Produces diagnostics; throws nothing on user errors.
class Elaborator {
public:
    explicit Elaborator(const Program& prog) : prog_(prog) {}

    DiagnosticList run() {
        try {
            for (const auto& r : prog_.routines) table_.add(r);
        } catch (const CompileError& e) {
            diags_.items.push_back(e.diag());
            return diags_;
        }
        for (const auto& r : prog_.routines) check_routine_signature(r);
        if (diags_.has_errors()) return diags_;

        // routines without size parameters are checked eagerly; templated
        // ones are checked per instantiation from their call sites
        for (const auto& r : prog_.routines) {
            if (!r.size_params.empty()) continue;
            guard([&] {
                const ConcreteRoutine* cr = table_.instantiate(r.name, {}, r.loc);
                check_routine_body(*cr);
            });
        }
        Ctx gctx;
        gctx.scopes.emplace_back();
        for (const auto& g : prog_.globals) guard([&] { check_stmt(*g, gctx); });
        globals_ = gctx.scopes.front();
        for (const auto& f : prog_.functions) check_function(f);
        return diags_;
    }

    const RoutineTable& table() const { return table_; }

private:
    struct VarInfo {
        Type type;
        std::optional<std::int64_t> const_val;
        bool on_device = false;
        std::uint64_t array_len = 0;
    };

    struct Ctx {
        bool in_scope = false;
        bool in_routine = false;
        bool in_ctrl = false;
        bool in_compute = false;
        SizeEnv sizes;
        std::vector<std::map<std::string, VarInfo>> scopes;

        VarInfo* lookup(const std::string& n) {
            for (auto it = scopes.rbegin(); it != scopes.rend(); ++it) {
                auto f = it->find(n);
                if (f != it->end()) return &f->second;
            }
            return nullptr;
        }
        void declare(const std::string& n, VarInfo v) { scopes.back()[n] = std::move(v); }
    };

    const Program& prog_;
    RoutineTable table_;
    DiagnosticList diags_;
    std::set<std::string> bodies_checked_;
    std::map<std::string, VarInfo> globals_;

    template <typename F>
    void guard(F&& f) {
        try {
            f();
        } catch (const CompileError& e) {
            diags_.items.push_back(e.diag());
        }
    }

    void check_routine_signature(const RoutineDecl& r) {
        guard([&] {
            if (r.qparams.empty())
                throw CompileError(r.loc, "routine '" + r.name +
                                              "' must take at least one quantum parameter");
            for (const auto& p : r.qparams) {
                switch (p.type.kind) {
                    case TypeKind::qbool:
                    case TypeKind::quint:
                    case TypeKind::qint:
                    case TypeKind::qarray:
                        break;
                    case TypeKind::qvector:
                        if (r.pragma.flag != RoutineFlag::dynamic)
                            throw CompileError(p.loc,
                                               "qvector parameters require a dynamic routine");
                        break;
                    default:
                        throw CompileError(p.loc, "routine '" + r.name +
                                                      "' takes only purely quantum parameters");
                }
            }
            for (const auto& bv : r.pragma.bound_vars)
                for (const auto& p : r.qparams)
                    if (bv.name == p.name)
                        throw CompileError(r.loc, "bound variable '" + bv.name +
                                                      "' shadows a quantum parameter");
        });
    }

    void check_function(const FunctionDecl& f) {
        guard([&] {
            Ctx ctx;
            ctx.scopes.push_back(globals_);
            ctx.scopes.emplace_back();
            for (const auto& p : f.params) {
                Type t = RoutineTable::resolve_type(p.type, ctx.sizes, p.loc);
                if (t.is_quantum())
                    throw CompileError(p.loc,
                                       "classical functions take only classical parameters");
                ctx.declare(p.name, {t, std::nullopt, false, 0});
            }
            check_stmt(*f.body, ctx);
        });
    }

    void check_routine_body(const ConcreteRoutine& cr) {
        if (bodies_checked_.count(cr.key)) return;
        bodies_checked_.insert(cr.key);
        RoutineTable::DepthGuard dg(table_);
        Ctx ctx;
        ctx.in_routine = true;
        ctx.sizes = cr.size_env;
        ctx.scopes.emplace_back();
        for (const auto& [name, val] : cr.size_env)
            ctx.declare(name, {{TypeKind::uint_t, 0, TypeKind::invalid}, val, false, 0});
        for (const auto& bv : cr.decl->pragma.bound_vars)
            ctx.declare(bv.name, {{bv.type, 0, TypeKind::invalid}, std::nullopt, false, 0});
        for (std::size_t i = 0; i < cr.decl->qparams.size(); ++i)
            ctx.declare(cr.decl->qparams[i].name, {cr.param_types[i], std::nullopt, true, 0});
        check_stmt(*cr.decl->body, ctx);
    }

    // ------------------------------------------------------------------
    // Statements
    // ------------------------------------------------------------------

    void check_stmt(const Stmt& s, Ctx& ctx) {
        switch (s.kind) {
            case StmtKind::block: {
                ctx.scopes.emplace_back();
                for (const auto& t : s.stmts) guard([&] { check_stmt(*t, ctx); });
                ctx.scopes.pop_back();
                return;
            }
            case StmtKind::decl:
                check_decl(s, ctx);
                return;
            case StmtKind::assign:
                check_assign(s, ctx);
                return;
            case StmtKind::expr:
                type_of(*s.expr, ctx);
                return;
            case StmtKind::return_stmt:
                if (ctx.in_routine && s.expr)
                    throw CompileError(s.loc, "a routine returns nothing");
                if (s.expr) require_classical(type_of(*s.expr, ctx), s.expr->loc);
                return;
            case StmtKind::for_loop: {
                ctx.scopes.emplace_back();
                if (s.init) check_stmt(*s.init, ctx);
                if (s.cond) require_classical(type_of(*s.cond, ctx), s.cond->loc);
                if (s.step) check_stmt(*s.step, ctx);
                check_stmt(*s.body, ctx);
                ctx.scopes.pop_back();
                return;
            }
            case StmtKind::do_while:
                ctx.scopes.emplace_back();
                check_stmt(*s.body, ctx);
                require_classical(type_of(*s.cond, ctx), s.cond->loc);
                ctx.scopes.pop_back();
                return;
            case StmtKind::if_stmt: {
                if (s.is_constexpr) {
                    auto v = const_of(*s.cond, ctx);
                    if (!v)
                        throw CompileError(s.cond->loc,
                                           "if constexpr condition must be a compile-time "
                                           "constant");
                    // fold: only the taken branch exists after monomorphization
                    if (*v)
                        check_stmt(*s.body, ctx);
                    else if (s.else_body)
                        check_stmt(*s.else_body, ctx);
                    return;
                }
                require_classical(type_of(*s.cond, ctx), s.cond->loc);
                check_stmt(*s.body, ctx);
                if (s.else_body) check_stmt(*s.else_body, ctx);
                return;
            }
            case StmtKind::scope_pragma: {
                if (ctx.in_routine)
                    throw CompileError(s.loc, "scope directives are not allowed in routines");
                if (ctx.in_scope)
                    throw CompileError(s.loc, "quantum scopes cannot be nested");
                for (const auto& v : s.pragma.scope_with) {
                    VarInfo* vi = ctx.lookup(v);
                    if (!vi)
                        throw CompileError(s.pragma.loc, "unknown variable '" + v +
                                                             "' in with clause");
                    vi->on_device = true;
                }
                Ctx inner = clone_ctx(ctx);
                inner.in_scope = true;
                check_stmt(*s.body, inner);
                for (const auto& v : s.pragma.scope_with) {
                    VarInfo* vi = ctx.lookup(v);
                    if (vi) vi->on_device = false;
                }
                return;
            }
            case StmtKind::ctrl_pragma: {
                Type t = type_of(*s.pragma.ctrl_arg, ctx);
                if (t.kind != TypeKind::qbool && t.kind != TypeKind::qcond)
                    throw CompileError(s.pragma.ctrl_arg->loc,
                                       "ctrl condition must be a qbool or a quantum condition");
                forbid_measure(*s.body, "quantum measurements are forbidden under ctrl");
                Ctx inner = clone_ctx(ctx);
                inner.in_ctrl = true;
                check_stmt(*s.body, inner);
                return;
            }
            case StmtKind::compute_pragma: {
                forbid_measure(*s.body,
                               "compute blocks contain pure quantum operations only");
                Ctx inner = clone_ctx(ctx);
                inner.in_compute = true;
                check_stmt(*s.body, inner);
                return;
            }
            case StmtKind::move_pragma: {
                if (!ctx.in_scope)
                    throw CompileError(s.loc,
                                       "move directives are only valid inside a quantum scope");
                for (const auto& clause : s.pragma.move_clauses) {
                    for (const auto& v : clause.vars) {
                        VarInfo* vi = ctx.lookup(v);
                        if (!vi)
                            throw CompileError(s.pragma.loc,
                                               "unknown variable '" + v + "' in move directive");
                        if (clause.to_device && vi->on_device)
                            throw CompileError(s.pragma.loc, "variable '" + v +
                                                                 "' is already on the device");
                        if (!clause.to_device && !vi->on_device)
                            throw CompileError(s.pragma.loc,
                                               "toHost of host-resident variable '" + v + "'");
                        vi->on_device = clause.to_device;
                    }
                }
                return;
            }
            case StmtKind::empty:
                return;
        }
    }

    static Ctx clone_ctx(Ctx& ctx) {
        // shares nothing; a lexically nested context with copied tables
        return ctx;
    }

    void check_decl(const Stmt& s, Ctx& ctx) {
        for (const auto& d : s.decls) {
            guard([&] {
                Type t = RoutineTable::resolve_type(s.dtype, ctx.sizes, d.loc);
                VarInfo vi;
                vi.type = t;
                vi.on_device = ctx.in_scope || ctx.in_routine;
                if (d.array_size) {
                    if (t.is_quantum())
                        throw CompileError(d.loc,
                                           "array declarators apply to classical types; use "
                                           "qarray<N> for quantum registers");
                    auto n = const_of(*d.array_size, ctx);
                    if (!n || *n < 1)
                        throw CompileError(d.loc, "array length must be a positive constant");
                    vi.type = {TypeKind::carray, static_cast<std::uint64_t>(*n), t.kind};
                }
                if (t.kind == TypeKind::qvector) {
                    if (ctx.in_routine)
                        throw CompileError(d.loc,
                                           "qvector locals are not allowed in routines");
                    if (!d.ctor_arg)
                        throw CompileError(d.loc, "qvector requires a size: qvector name(n)");
                    require_classical(type_of(*d.ctor_arg, ctx), d.ctor_arg->loc);
                } else if (d.ctor_arg) {
                    throw CompileError(d.loc, "constructor syntax is reserved for qvector");
                }
                if (d.init) {
                    Type it = type_of(*d.init, ctx);
                    if (t.is_quantum()) {
                        check_quantum_init(t, it, *d.init, ctx);
                    } else {
                        require_classical(it, d.init->loc);
                        vi.const_val = const_of(*d.init, ctx);
                    }
                }
                ctx.declare(d.name, std::move(vi));
            });
        }
    }

    void check_quantum_init(const Type& t, const Type& init, const Expr& e, Ctx& ctx) {
        if (init.is_classical_scalar()) {
            auto v = const_of(e, ctx);
            if (v) check_value_range(t, *v, e.loc);
            return;
        }
        switch (t.kind) {
            case TypeKind::qbool:
                if (init.kind != TypeKind::qcond && init.kind != TypeKind::qbool)
                    throw CompileError(e.loc,
                                       "qbool initializer must be classical or a quantum "
                                       "condition");
                return;
            case TypeKind::quint:
            case TypeKind::qint:
                if (init.kind == TypeKind::qval || init.kind == t.kind) {
                    if (init.width && init.width != t.width)
                        throw CompileError(e.loc, "initializer width " +
                                                      std::to_string(init.width) +
                                                      " does not match register width " +
                                                      std::to_string(t.width));
                    return;
                }
                throw CompileError(e.loc, "invalid quantum initializer for " + type_name(t));
            default:
                throw CompileError(e.loc, "invalid quantum initializer for " + type_name(t));
        }
    }

    static void check_value_range(const Type& t, std::int64_t v, SourceLoc loc) {
        if (t.width >= 64) return;
        switch (t.kind) {
            case TypeKind::qbool:
                if (v != 0 && v != 1)
                    throw CompileError(loc, "qbool initializer must be a boolean");
                return;
            case TypeKind::quint:
            case TypeKind::qarray:
                if (v < 0 || static_cast<std::uint64_t>(v) >= (std::uint64_t{1} << t.width))
                    throw CompileError(loc, "value " + std::to_string(v) +
                                                " is out of range for " + type_name(t));
                return;
            case TypeKind::qint: {
                const std::int64_t lim = std::int64_t{1} << (t.width - 1);
                if (v < -lim || v >= lim)
                    throw CompileError(loc, "value " + std::to_string(v) +
                                                " is out of range for " + type_name(t));
                return;
            }
            default:
                return;
        }
    }

    void check_assign(const Stmt& s, Ctx& ctx) {
        Type lt = type_of(*s.lhs, ctx);
        if (s.op == "++" || s.op == "--") {
            if (lt.is_quantum())
                throw CompileError(s.loc, "increment operators act on classical variables");
            mark_mutated(*s.lhs, ctx);
            return;
        }
        if (lt.is_quantum()) {
            if (lt.kind == TypeKind::qvector)
                throw CompileError(s.loc, "qvector has no in-place operators");
            if (s.op == "=")
                throw CompileError(s.loc,
                                   "quantum registers are initialized at declaration; use "
                                   "^=, += or -=");
            Type rt = type_of(*s.rhs, ctx);
            if (s.op == "^=") {
                if (lt.kind == TypeKind::qbool) {
                    if (!rt.is_classical_scalar() && rt.kind != TypeKind::qbool &&
                        rt.kind != TypeKind::qcond)
                        throw CompileError(s.rhs->loc, "invalid operand for qbool ^=");
                } else if (!rt.is_classical_scalar() && rt.width != lt.width) {
                    throw CompileError(s.rhs->loc, "bitwise XOR requires equal widths");
                }
                return;
            }
            if (s.op == "+=" || s.op == "-=") {
                if (lt.kind != TypeKind::quint && lt.kind != TypeKind::qint)
                    throw CompileError(s.loc, "arithmetic assignment needs a quantum integer");
                if (!rt.is_classical_scalar() && rt.is_quantum() && rt.width > lt.width)
                    throw CompileError(s.rhs->loc,
                                       "operand is wider than the destination register");
                if (!rt.is_classical_scalar() && !rt.is_quantum() && rt.kind != TypeKind::qval)
                    throw CompileError(s.rhs->loc, "invalid operand for quantum arithmetic");
                return;
            }
            throw CompileError(s.loc, "operator " + s.op + " is not defined on quantum types");
        }
        Type rt = type_of(*s.rhs, ctx);
        require_classical(rt, s.rhs->loc);
        mark_mutated(*s.lhs, ctx);
    }

    void mark_mutated(const Expr& lhs, Ctx& ctx) {
        if (lhs.kind == ExprKind::ident) {
            if (VarInfo* vi = ctx.lookup(lhs.text)) vi->const_val = std::nullopt;
        }
    }

    void forbid_measure(const Stmt& s, const char* msg) {
        walk_exprs(s, [&](const Expr& e) {
            if (e.kind == ExprKind::call) {
                Builtin b = builtin_by_name(e.text);
                if (b == Builtin::measure_and_reset || b == Builtin::reset)
                    throw CompileError(e.loc, msg);
            }
        });
    }

    template <typename F>
    void walk_exprs(const Stmt& s, const F& f) {
        auto we = [&](auto&& self, const Expr& e) -> void {
            f(e);
            for (const auto& a : e.args) self(self, *a);
            for (const auto& a : e.bound_args) self(self, *a);
        };
        auto visit = [&](const ExprP& e) {
            if (e) we(we, *e);
        };
        visit(s.expr);
        visit(s.lhs);
        visit(s.rhs);
        visit(s.cond);
        for (const auto& d : s.decls) {
            visit(d.init);
            visit(d.ctor_arg);
        }
        if (s.pragma.ctrl_arg) we(we, *s.pragma.ctrl_arg);
        if (s.init) walk_exprs(*s.init, f);
        if (s.step) walk_exprs(*s.step, f);
        if (s.body) walk_exprs(*s.body, f);
        if (s.else_body) walk_exprs(*s.else_body, f);
        for (const auto& t : s.stmts) walk_exprs(*t, f);
    }

    // ------------------------------------------------------------------
    // Expressions
    // ------------------------------------------------------------------

    static void require_classical(const Type& t, SourceLoc loc) {
        if (!t.is_classical_scalar() && t.kind != TypeKind::void_t)
            throw CompileError(loc, "classical value required, got " + type_name(t));
    }

    std::optional<std::int64_t> const_of(const Expr& e, Ctx& ctx) {
        SizeEnv env = ctx.sizes;
        for (const auto& scope : ctx.scopes)
            for (const auto& [name, vi] : scope)
                if (vi.const_val) env[name] = *vi.const_val;
        return eval_const(e, env);
    }

    Type type_of(const Expr& e, Ctx& ctx) {
        switch (e.kind) {
            case ExprKind::int_lit:
                return {TypeKind::int_t, 0, TypeKind::invalid};
            case ExprKind::float_lit:
                return {TypeKind::double_t, 0, TypeKind::invalid};
            case ExprKind::bool_lit:
                return {TypeKind::bool_t, 0, TypeKind::invalid};
            case ExprKind::ident: {
                if (e.text == "M_PI") return {TypeKind::double_t, 0, TypeKind::invalid};
                VarInfo* vi = ctx.lookup(e.text);
                if (!vi) throw CompileError(e.loc, "unknown identifier '" + e.text + "'");
                return vi->type;
            }
            case ExprKind::index: {
                Type base = type_of(*e.args[0], ctx);
                Type idx = type_of(*e.args[1], ctx);
                require_classical(idx, e.args[1]->loc);
                switch (base.kind) {
                    case TypeKind::quint:
                    case TypeKind::qint:
                    case TypeKind::qarray:
                    case TypeKind::qvector:
                        return {TypeKind::qbool, 1, TypeKind::invalid};
                    case TypeKind::carray:
                        return {base.elem, 0, TypeKind::invalid};
                    default:
                        throw CompileError(e.loc, "type " + type_name(base) +
                                                      " cannot be indexed");
                }
            }
            case ExprKind::cast_qbool: {
                Type t = type_of(*e.args[0], ctx);
                if (t.kind != TypeKind::qbool && t.kind != TypeKind::qcond &&
                    !t.is_classical_scalar())
                    throw CompileError(e.loc, "cannot cast " + type_name(t) + " to qbool");
                return {TypeKind::qcond, 1, TypeKind::invalid};
            }
            case ExprKind::unary: {
                Type t = type_of(*e.args[0], ctx);
                if (e.text == "not" || e.text == "!") {
                    if (t.kind == TypeKind::qbool || t.kind == TypeKind::qcond)
                        return {TypeKind::qcond, 1, TypeKind::invalid};
                    require_classical(t, e.loc);
                    return {TypeKind::bool_t, 0, TypeKind::invalid};
                }
                require_classical(t, e.loc);
                return t;
            }
            case ExprKind::binary:
                return type_of_binary(e, ctx);
            case ExprKind::call:
                return type_of_call(e, ctx);
        }
        throw CompileError(e.loc, "unsupported expression");
    }

    Type type_of_binary(const Expr& e, Ctx& ctx) {
        Type a = type_of(*e.args[0], ctx);
        Type b = type_of(*e.args[1], ctx);
        const std::string& op = e.text;
        const bool aq = a.is_quantum() || a.kind == TypeKind::qcond || a.kind == TypeKind::qval;
        const bool bq = b.is_quantum() || b.kind == TypeKind::qcond || b.kind == TypeKind::qval;
        if (!aq && !bq) {
            require_classical(a, e.args[0]->loc);
            require_classical(b, e.args[1]->loc);
            if (op == "==" || op == "!=" || op == "<" || op == "<=" || op == ">" ||
                op == ">=" || op == "&&" || op == "||")
                return {TypeKind::bool_t, 0, TypeKind::invalid};
            if (a.kind == TypeKind::double_t || b.kind == TypeKind::double_t)
                return {TypeKind::double_t, 0, TypeKind::invalid};
            return a.kind == TypeKind::uint_t || b.kind == TypeKind::uint_t
                       ? Type{TypeKind::uint_t, 0, TypeKind::invalid}
                       : Type{TypeKind::int_t, 0, TypeKind::invalid};
        }
        // quantum operand(s)
        if (op == "==" || op == "!=" || op == "<" || op == "<=" || op == ">" || op == ">=") {
            if (aq && bq)
                throw CompileError(e.loc,
                                   "comparisons take one quantum register and one classical "
                                   "value");
            const Type& q = aq ? a : b;
            if (q.kind != TypeKind::quint && q.kind != TypeKind::qint &&
                q.kind != TypeKind::qbool && q.kind != TypeKind::qarray)
                throw CompileError(e.loc, "cannot compare " + type_name(q));
            return {TypeKind::qcond, 1, TypeKind::invalid};
        }
        if (op == "|" || op == "&") {
            auto boolish = [](const Type& t) {
                return t.kind == TypeKind::qbool || t.kind == TypeKind::qcond;
            };
            if (boolish(a) && boolish(b)) return {TypeKind::qcond, 1, TypeKind::invalid};
            throw CompileError(e.loc, "operator " + op + " on quantum values takes qbools");
        }
        if (op == "+" || op == "-" || op == "^") {
            const Type& q = aq ? a : b;
            const Type& o = aq ? b : a;
            std::uint64_t width = q.width;
            if (q.kind == TypeKind::qcond)
                throw CompileError(e.loc, "conditions do not support arithmetic");
            if (aq && bq) {
                width = std::max(a.width, b.width);
            } else {
                require_classical(o, e.loc);
            }
            return {TypeKind::qval, width, TypeKind::invalid};
        }
        throw CompileError(e.loc, "operator " + op + " is not defined on quantum values");
    }

    Type type_of_call(const Expr& e, Ctx& ctx) {
        if (e.is_wall) return type_of_wall(e, ctx);
        Builtin b = builtin_by_name(e.text);
        if (b != Builtin::none) return type_of_builtin(e, b, ctx);

        // classical function call
        for (const auto& f : prog_.functions) {
            if (f.name != e.text) continue;
            if (e.args.size() != f.params.size())
                throw CompileError(e.loc, "function '" + f.name + "' expects " +
                                              std::to_string(f.params.size()) + " arguments");
            for (const auto& a : e.args) require_classical(type_of(*a, ctx), a->loc);
            return RoutineTable::resolve_type(f.ret, {}, f.loc);
        }

        // user routine call
        const RoutineDecl* decl = table_.find(e.text);
        if (!decl) throw CompileError(e.loc, "unknown routine or function '" + e.text + "'");
        std::vector<std::int64_t> size_args;
        for (const auto& sa : e.size_args) {
            auto v = const_of(*sa, ctx);
            if (!v)
                throw CompileError(sa->loc, "size arguments must be compile-time constants");
            size_args.push_back(*v);
        }
        const ConcreteRoutine* cr = table_.instantiate(e.text, size_args, e.loc);

        // classical bindings
        if (e.has_binding) {
            if (e.bound_args.size() != decl->pragma.bound_vars.size())
                throw CompileError(e.loc, "routine '" + cr->key + "' binds " +
                                              std::to_string(decl->pragma.bound_vars.size()) +
                                              " classical values, got " +
                                              std::to_string(e.bound_args.size()));
            for (const auto& a : e.bound_args)
                require_classical(type_of(*a, ctx), a->loc);
        } else if (!decl->pragma.bound_vars.empty()) {
            throw CompileError(e.loc, "routine '" + cr->key +
                                          "' requires a classical binding list");
        }

        // quantum arguments (first argument is the control for ctrl forms)
        std::size_t first = 0;
        if (e.sel == RoutineSel::ctrl || e.sel == RoutineSel::ctrl_dag) {
            if (e.args.empty())
                throw CompileError(e.loc, "ctrl call requires a control argument");
            Type ct = type_of(*e.args[0], ctx);
            if (ct.kind != TypeKind::qbool && ct.kind != TypeKind::qcond)
                throw CompileError(e.args[0]->loc,
                                   "control argument must be a qbool or quantum condition");
            first = 1;
        }
        std::vector<Type> arg_types;
        for (std::size_t i = first; i < e.args.size(); ++i) {
            Type t = type_of(*e.args[i], ctx);
            if (!t.is_quantum())
                throw CompileError(e.args[i]->loc,
                                   "routine arguments must be quantum registers");
            arg_types.push_back(t);
        }
        check_call_compat(*cr, arg_types, e.loc);
        check_routine_body(*cr);
        return {TypeKind::void_t, 0, TypeKind::invalid};
    }

    Type type_of_wall(const Expr& e, Ctx& ctx) {
        wall_gate_by_name(e.wall_gate, e.loc);
        auto k = const_of(*e.size_args[0], ctx);
        if (!k || *k < 0)
            throw CompileError(e.loc, "wall width must be a non-negative constant");
        std::size_t first = 0;
        if (e.sel == RoutineSel::ctrl || e.sel == RoutineSel::ctrl_dag) {
            if (e.args.empty())
                throw CompileError(e.loc, "ctrl call requires a control argument");
            Type ct = type_of(*e.args[0], ctx);
            if (ct.kind != TypeKind::qbool && ct.kind != TypeKind::qcond)
                throw CompileError(e.args[0]->loc,
                                   "control argument must be a qbool or quantum condition");
            first = 1;
        }
        if (e.args.size() != first + 1)
            throw CompileError(e.loc, "wall takes exactly one register argument");
        Type t = type_of(*e.args[first], ctx);
        if (!t.is_quantum())
            throw CompileError(e.args[first]->loc, "wall argument must be a quantum register");
        if (t.kind != TypeKind::qvector && static_cast<std::uint64_t>(*k) > t.width)
            throw CompileError(e.loc, "wall width exceeds the register width");
        return {TypeKind::void_t, 0, TypeKind::invalid};
    }

    Type type_of_builtin(const Expr& e, Builtin b, Ctx& ctx) {
        if (builtin_is_gate(b)) {
            Gate g = builtin_gate(b);
            // rotation gates bind their angle: RX(angle)(q) / RX(angle).ctrl(c, q)
            if (gate_has_angle(g)) {
                if (!e.has_binding || e.bound_args.size() != 1)
                    throw CompileError(e.loc, std::string(gate_name(g)) +
                                                  " takes one angle binding: " + gate_name(g) +
                                                  "(angle)(qubit)");
                require_classical(type_of(*e.bound_args[0], ctx), e.bound_args[0]->loc);
            } else if (e.has_binding) {
                throw CompileError(e.loc, std::string(gate_name(g)) + " takes no binding");
            }
            std::size_t first = 0;
            if (e.sel == RoutineSel::ctrl || e.sel == RoutineSel::ctrl_dag) {
                if (e.args.empty())
                    throw CompileError(e.loc, "ctrl call requires a control argument");
                Type ct = type_of(*e.args[0], ctx);
                if (ct.kind != TypeKind::qbool && ct.kind != TypeKind::qcond)
                    throw CompileError(e.args[0]->loc,
                                       "control argument must be a qbool or quantum condition");
                first = 1;
            }
            const std::size_t arity = static_cast<std::size_t>(gate_arity(g));
            if (e.args.size() != first + arity)
                throw CompileError(e.loc, std::string(gate_name(g)) + " takes " +
                                              std::to_string(arity) + " qubit argument(s)");
            for (std::size_t i = first; i < e.args.size(); ++i) {
                Type t = type_of(*e.args[i], ctx);
                if (t.kind != TypeKind::qbool)
                    throw CompileError(e.args[i]->loc,
                                       "gate targets must be single qubits (qbool)");
            }
            return {TypeKind::void_t, 0, TypeKind::invalid};
        }
        switch (b) {
            case Builtin::measure_and_reset:
            case Builtin::reset: {
                if (ctx.in_routine)
                    throw CompileError(e.loc,
                                       "measurement-based operations are not allowed in "
                                       "routines");
                if (ctx.in_ctrl)
                    throw CompileError(e.loc, "quantum measurements are forbidden under ctrl");
                if (ctx.in_compute)
                    throw CompileError(e.loc,
                                       "compute blocks contain pure quantum operations only");
                if (e.args.size() != 1)
                    throw CompileError(e.loc, e.text + " takes one quantum register");
                Type t = type_of(*e.args[0], ctx);
                if (!t.is_quantum())
                    throw CompileError(e.args[0]->loc, e.text +
                                                           " takes a quantum register, got " +
                                                           type_name(t));
                if (b == Builtin::reset) return {TypeKind::void_t, 0, TypeKind::invalid};
                switch (t.kind) {
                    case TypeKind::qbool: return {TypeKind::bool_t, 0, TypeKind::invalid};
                    case TypeKind::qint: return {TypeKind::int_t, 0, TypeKind::invalid};
                    default: return {TypeKind::uint_t, 0, TypeKind::invalid};
                }
            }
            case Builtin::pow_fn: {
                if (e.args.size() != 3)
                    throw CompileError(e.loc,
                                       "pow takes (base, exponent register, modulus)");
                require_classical(type_of(*e.args[0], ctx), e.args[0]->loc);
                Type x = type_of(*e.args[1], ctx);
                if (x.kind != TypeKind::quint)
                    throw CompileError(e.args[1]->loc, "pow exponent must be a quint");
                require_classical(type_of(*e.args[2], ctx), e.args[2]->loc);
                return {TypeKind::qval, 0, TypeKind::invalid};  // width set by initializer
            }
            case Builtin::print_fn: {
                for (const auto& a : e.args) type_of(*a, ctx);
                return {TypeKind::void_t, 0, TypeKind::invalid};
            }
            default:
                throw CompileError(e.loc, "unknown builtin '" + e.text + "'");
        }
    }
};

inline DiagnosticList check_program(const Program& prog) {
    return Elaborator(prog).run();
}

}  // namespace qpragma
