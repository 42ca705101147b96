#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "qpragma/diagnostics.hpp"

namespace qpragma {

// ---------------------------------------------------------------------------
// Semantic types
// ---------------------------------------------------------------------------

enum class TypeKind {
    invalid,
    void_t,
    bool_t,
    int_t,     // int64
    uint_t,    // uint64
    double_t,
    carray,    // classical fixed-size array
    qbool,
    quint,
    qint,
    qarray,    // fixed-size array of qbool
    qvector,   // runtime-sized vector of qbool
    qcond,     // quantum boolean condition value (expression level)
    qval,      // quantum arithmetic temporary (expression level), carries a width
};

struct Type {
    TypeKind kind = TypeKind::invalid;
    std::uint64_t width = 0;      // qubit count / carray element count
    TypeKind elem = TypeKind::invalid;  // carray element type

    bool operator==(const Type& o) const {
        return kind == o.kind && width == o.width && elem == o.elem;
    }
    bool is_quantum() const {
        switch (kind) {
            case TypeKind::qbool:
            case TypeKind::quint:
            case TypeKind::qint:
            case TypeKind::qarray:
            case TypeKind::qvector:
                return true;
            default:
                return false;
        }
    }
    bool is_classical_scalar() const {
        switch (kind) {
            case TypeKind::bool_t:
            case TypeKind::int_t:
            case TypeKind::uint_t:
            case TypeKind::double_t:
                return true;
            default:
                return false;
        }
    }
};

inline std::string type_name(const Type& t) {
    switch (t.kind) {
        case TypeKind::void_t: return "void";
        case TypeKind::bool_t: return "bool";
        case TypeKind::int_t: return "int64";
        case TypeKind::uint_t: return "uint64";
        case TypeKind::double_t: return "double";
        case TypeKind::carray: return "array";
        case TypeKind::qbool: return "qbool";
        case TypeKind::quint: return "quint<" + std::to_string(t.width) + ">";
        case TypeKind::qint: return "qint<" + std::to_string(t.width) + ">";
        case TypeKind::qarray: return "qarray<" + std::to_string(t.width) + ">";
        case TypeKind::qvector: return "qvector";
        case TypeKind::qcond: return "quantum-condition";
        case TypeKind::qval: return "quantum-value<" + std::to_string(t.width) + ">";
        default: return "<invalid>";
    }
}

// ---------------------------------------------------------------------------
// Expressions
// ---------------------------------------------------------------------------

struct Expr;
using ExprP = std::unique_ptr<Expr>;

enum class ExprKind {
    int_lit,
    float_lit,
    bool_lit,
    ident,
    binary,      // text = operator, args = [lhs, rhs]
    unary,       // text = operator ("not", "!", "-", "~"), args = [operand]
    index,       // args = [base, index]
    call,        // named call, possibly templated / bound / with selector
    cast_qbool,  // (qbool) expr
};

enum class RoutineSel { plain, dag, ctrl, ctrl_dag };

struct ConcreteRoutine;  // defined by the elaborator

struct Expr {
    ExprKind kind = ExprKind::int_lit;
    SourceLoc loc;
    std::string text;  // identifier name, operator spelling, or callee name
    std::uint64_t int_val = 0;
    double float_val = 0;
    bool bool_val = false;
    std::vector<ExprP> args;

    // call-specific syntax
    bool is_wall = false;          // wall::<gate><K>(reg)
    std::string wall_gate;
    std::vector<ExprP> size_args;  // f<expr, ...>
    bool has_binding = false;      // f(classical args)(quantum args)
    std::vector<ExprP> bound_args; // the classical binding list when has_binding
    RoutineSel sel = RoutineSel::plain;

    // elaboration annotations
    Type type;
    const ConcreteRoutine* resolved = nullptr;
    int builtin = -1;
};

inline ExprP clone(const ExprP& e);

inline ExprP clone_expr(const Expr& e) {
    auto c = std::make_unique<Expr>();
    c->kind = e.kind;
    c->loc = e.loc;
    c->text = e.text;
    c->int_val = e.int_val;
    c->float_val = e.float_val;
    c->bool_val = e.bool_val;
    for (const auto& a : e.args) c->args.push_back(clone(a));
    c->is_wall = e.is_wall;
    c->wall_gate = e.wall_gate;
    for (const auto& a : e.size_args) c->size_args.push_back(clone(a));
    c->has_binding = e.has_binding;
    for (const auto& a : e.bound_args) c->bound_args.push_back(clone(a));
    c->sel = e.sel;
    return c;
}

inline ExprP clone(const ExprP& e) { return e ? clone_expr(*e) : nullptr; }

// ---------------------------------------------------------------------------
// Pragma directives
// ---------------------------------------------------------------------------

enum class PragmaKind { scope, move, ctrl, routine, compute };
enum class RoutineFlag { none, typed, dynamic };

struct MoveClause {
    bool to_device = true;
    std::vector<std::string> vars;
};

struct BoundVar {
    TypeKind type = TypeKind::invalid;
    std::string name;
};

struct PragmaNode {
    PragmaKind kind = PragmaKind::compute;
    SourceLoc loc;
    std::vector<std::string> scope_with;   // kind == scope
    std::vector<MoveClause> move_clauses;  // kind == move
    ExprP ctrl_arg;                        // kind == ctrl
    RoutineFlag flag = RoutineFlag::none;  // kind == routine
    std::vector<BoundVar> bound_vars;      // kind == routine
};

inline PragmaNode clone(const PragmaNode& p) {
    PragmaNode c;
    c.kind = p.kind;
    c.loc = p.loc;
    c.scope_with = p.scope_with;
    c.move_clauses = p.move_clauses;
    c.ctrl_arg = clone(p.ctrl_arg);
    c.flag = p.flag;
    c.bound_vars = p.bound_vars;
    return c;
}

// ---------------------------------------------------------------------------
// Statements
// ---------------------------------------------------------------------------

struct Stmt;
using StmtP = std::unique_ptr<Stmt>;

enum class StmtKind {
    decl,
    assign,      // op in {"=", "+=", "-=", "^=", "++", "--"}
    expr,
    for_loop,
    do_while,
    if_stmt,     // is_constexpr marks the compile-time-constant form
    block,
    scope_pragma,
    ctrl_pragma,
    compute_pragma,
    move_pragma,
    return_stmt,
    empty,
};

enum class Locality { host, qpu };

/// Syntactic type annotation; width is an expression so templated routine
/// signatures can reference size parameters.
struct TypeSpec {
    TypeKind kind = TypeKind::invalid;
    ExprP width;  // quint<W>, qint<W>, qarray<W>
};

inline TypeSpec clone(const TypeSpec& t) { return {t.kind, clone(t.width)}; }

struct Declarator {
    std::string name;
    ExprP array_size;  // classical array suffix: name[expr]
    ExprP init;        // = expr
    ExprP ctor_arg;    // qvector name(expr)
    SourceLoc loc;
};

struct Stmt {
    StmtKind kind = StmtKind::empty;
    SourceLoc loc;

    // decl
    TypeSpec dtype;
    std::vector<Declarator> decls;

    // assign / expr / return
    std::string op;
    ExprP lhs, rhs;
    ExprP expr;

    // for / do-while / if
    StmtP init, step;
    ExprP cond;
    StmtP body;       // loop body, if-then, or pragma-annotated statement
    StmtP else_body;
    bool is_constexpr = false;

    // block
    std::vector<StmtP> stmts;

    // pragmas (scope/ctrl/move; compute has no payload)
    PragmaNode pragma;

    // elaboration annotations
    Locality tag = Locality::host;
};

inline StmtP clone(const StmtP& s);

inline StmtP clone_stmt(const Stmt& s) {
    auto c = std::make_unique<Stmt>();
    c->kind = s.kind;
    c->loc = s.loc;
    c->dtype = clone(s.dtype);
    for (const auto& d : s.decls)
        c->decls.push_back({d.name, clone(d.array_size), clone(d.init), clone(d.ctor_arg), d.loc});
    c->op = s.op;
    c->lhs = clone(s.lhs);
    c->rhs = clone(s.rhs);
    c->expr = clone(s.expr);
    c->init = clone(s.init);
    c->step = clone(s.step);
    c->cond = clone(s.cond);
    c->body = clone(s.body);
    c->else_body = clone(s.else_body);
    c->is_constexpr = s.is_constexpr;
    for (const auto& t : s.stmts) c->stmts.push_back(clone(t));
    c->pragma = clone(s.pragma);
    return c;
}

inline StmtP clone(const StmtP& s) { return s ? clone_stmt(*s) : nullptr; }

// ---------------------------------------------------------------------------
// Top-level items
// ---------------------------------------------------------------------------

struct SizeParam {
    std::string name;
    ExprP default_value;
    SourceLoc loc;
};

struct Param {
    TypeSpec type;
    std::string name;
    SourceLoc loc;
};

struct RoutineDecl {
    PragmaNode pragma;
    std::string name;
    std::vector<SizeParam> size_params;
    std::vector<Param> qparams;
    StmtP body;
    SourceLoc loc;
};

struct FunctionDecl {
    TypeSpec ret;
    std::string name;
    std::vector<Param> params;
    StmtP body;
    SourceLoc loc;
};

struct Program {
    std::vector<RoutineDecl> routines;
    std::vector<FunctionDecl> functions;
    std::vector<StmtP> globals;
};

}  // namespace qpragma
