#pragma once

#include <sstream>
#include <string>

#include "qpragma/ast.hpp"

namespace qpragma {

/// Canonical pretty-printer. Printing a parse tree and reparsing it yields an
/// identical tree, which the test suite uses as a round-trip check.
class Printer {
public:
    std::string print(const Program& p) {
        for (const auto& g : p.globals) stmt(*g, 0);
        for (const auto& f : p.functions) function(f);
        for (const auto& r : p.routines) routine(r);
        return os_.str();
    }

    std::string print(const Stmt& s) {
        stmt(s, 0);
        return os_.str();
    }

    std::string print(const Expr& e) {
        expr(e);
        return os_.str();
    }

private:
    std::ostringstream os_;

    void indent(int depth) {
        for (int i = 0; i < depth; ++i) os_ << "    ";
    }

    void type_spec(const TypeSpec& t) {
        switch (t.kind) {
            case TypeKind::void_t: os_ << "void"; break;
            case TypeKind::bool_t: os_ << "bool"; break;
            case TypeKind::int_t: os_ << "int64"; break;
            case TypeKind::uint_t: os_ << "uint64"; break;
            case TypeKind::double_t: os_ << "double"; break;
            case TypeKind::qbool: os_ << "qbool"; break;
            case TypeKind::qvector: os_ << "qvector"; break;
            case TypeKind::quint:
            case TypeKind::qint:
            case TypeKind::qarray:
                os_ << (t.kind == TypeKind::quint ? "quint"
                        : t.kind == TypeKind::qint ? "qint"
                                                   : "qarray")
                    << "<";
                expr(*t.width);
                os_ << ">";
                break;
            default: os_ << "<invalid>"; break;
        }
    }

    void pragma(const PragmaNode& p) {
        os_ << "#pragma quantum ";
        switch (p.kind) {
            case PragmaKind::scope:
                os_ << "scope";
                if (!p.scope_with.empty()) {
                    os_ << " with (";
                    for (size_t i = 0; i < p.scope_with.size(); ++i)
                        os_ << (i ? ", " : "") << p.scope_with[i];
                    os_ << ")";
                }
                break;
            case PragmaKind::move:
                os_ << "move";
                for (const auto& c : p.move_clauses) {
                    os_ << (c.to_device ? " toDevice (" : " toHost (");
                    for (size_t i = 0; i < c.vars.size(); ++i)
                        os_ << (i ? ", " : "") << c.vars[i];
                    os_ << ")";
                }
                break;
            case PragmaKind::ctrl:
                os_ << "ctrl (";
                expr(*p.ctrl_arg);
                os_ << ")";
                break;
            case PragmaKind::routine:
                os_ << "routine";
                if (p.flag == RoutineFlag::typed) os_ << " typed";
                if (p.flag == RoutineFlag::dynamic) os_ << " dynamic";
                if (!p.bound_vars.empty()) {
                    os_ << " (";
                    for (size_t i = 0; i < p.bound_vars.size(); ++i) {
                        if (i) os_ << ", ";
                        switch (p.bound_vars[i].type) {
                            case TypeKind::bool_t: os_ << "bool "; break;
                            case TypeKind::int_t: os_ << "int64 "; break;
                            case TypeKind::uint_t: os_ << "uint64 "; break;
                            case TypeKind::double_t: os_ << "double "; break;
                            default: os_ << "<invalid> "; break;
                        }
                        os_ << p.bound_vars[i].name;
                    }
                    os_ << ")";
                }
                break;
            case PragmaKind::compute:
                os_ << "compute";
                break;
        }
        os_ << "\n";
    }

    void routine(const RoutineDecl& r) {
        pragma(r.pragma);
        os_ << "void " << r.name;
        if (!r.size_params.empty()) {
            os_ << "<";
            for (size_t i = 0; i < r.size_params.size(); ++i) {
                if (i) os_ << ", ";
                os_ << r.size_params[i].name;
                if (r.size_params[i].default_value) {
                    os_ << " = ";
                    expr(*r.size_params[i].default_value);
                }
            }
            os_ << ">";
        }
        params(r.qparams);
        os_ << " ";
        stmt(*r.body, 0);
        os_ << "\n";
    }

    void function(const FunctionDecl& f) {
        type_spec(f.ret);
        os_ << " " << f.name;
        params(f.params);
        os_ << " ";
        stmt(*f.body, 0);
        os_ << "\n";
    }

    void params(const std::vector<Param>& ps) {
        os_ << "(";
        for (size_t i = 0; i < ps.size(); ++i) {
            if (i) os_ << ", ";
            type_spec(ps[i].type);
            os_ << " " << ps[i].name;
        }
        os_ << ")";
    }

    void assign_inline(const Stmt& s) {
        if (s.op == "++" || s.op == "--") {
            expr(*s.lhs);
            os_ << s.op;
            return;
        }
        expr(*s.lhs);
        os_ << " " << s.op << " ";
        expr(*s.rhs);
    }

    void decl_inline(const Stmt& s) {
        type_spec(s.dtype);
        os_ << " ";
        for (size_t i = 0; i < s.decls.size(); ++i) {
            if (i) os_ << ", ";
            const auto& d = s.decls[i];
            os_ << d.name;
            if (d.array_size) {
                os_ << "[";
                expr(*d.array_size);
                os_ << "]";
            }
            if (d.init) {
                os_ << " = ";
                expr(*d.init);
            } else if (d.ctor_arg) {
                os_ << "(";
                expr(*d.ctor_arg);
                os_ << ")";
            }
        }
    }

    void stmt(const Stmt& s, int depth) {
        switch (s.kind) {
            case StmtKind::decl:
                indent(depth);
                decl_inline(s);
                os_ << ";\n";
                break;
            case StmtKind::assign:
                indent(depth);
                assign_inline(s);
                os_ << ";\n";
                break;
            case StmtKind::expr:
                indent(depth);
                expr(*s.expr);
                os_ << ";\n";
                break;
            case StmtKind::return_stmt:
                indent(depth);
                os_ << "return";
                if (s.expr) {
                    os_ << " ";
                    expr(*s.expr);
                }
                os_ << ";\n";
                break;
            case StmtKind::for_loop:
                indent(depth);
                os_ << "for (";
                if (s.init) {
                    if (s.init->kind == StmtKind::decl) decl_inline(*s.init);
                    else assign_inline(*s.init);
                }
                os_ << "; ";
                if (s.cond) expr(*s.cond);
                os_ << "; ";
                if (s.step) assign_inline(*s.step);
                os_ << ") ";
                body_of(s, depth);
                break;
            case StmtKind::do_while:
                indent(depth);
                os_ << "do ";
                body_of(s, depth);
                // body_of ends with newline; re-open for while
                os_.seekp(-1, std::ios_base::end);
                os_ << " while (";
                expr(*s.cond);
                os_ << ");\n";
                break;
            case StmtKind::if_stmt:
                indent(depth);
                os_ << "if " << (s.is_constexpr ? "constexpr " : "") << "(";
                expr(*s.cond);
                os_ << ") ";
                body_of(s, depth);
                if (s.else_body) {
                    os_.seekp(-1, std::ios_base::end);
                    os_ << " else ";
                    if (s.else_body->kind == StmtKind::block) {
                        block_inline(*s.else_body, depth);
                    } else {
                        os_ << "\n";
                        stmt(*s.else_body, depth + 1);
                    }
                }
                break;
            case StmtKind::block:
                indent(depth);
                block_inline(s, depth);
                break;
            case StmtKind::scope_pragma:
            case StmtKind::ctrl_pragma:
            case StmtKind::compute_pragma:
                indent(depth);
                pragma(s.pragma);
                stmt(*s.body, depth);
                break;
            case StmtKind::move_pragma:
                indent(depth);
                pragma(s.pragma);
                break;
            case StmtKind::empty:
                indent(depth);
                os_ << ";\n";
                break;
        }
    }

    // Print s.body; if it is a block, inline the braces after the header.
    void body_of(const Stmt& s, int depth) {
        if (s.body->kind == StmtKind::block) {
            block_inline(*s.body, depth);
        } else {
            os_ << "\n";
            stmt(*s.body, depth + 1);
        }
    }

    void block_inline(const Stmt& b, int depth) {
        os_ << "{\n";
        for (const auto& t : b.stmts) stmt(*t, depth + 1);
        indent(depth);
        os_ << "}\n";
    }

    void expr(const Expr& e) {
        switch (e.kind) {
            case ExprKind::int_lit:
                os_ << (e.text.empty() ? std::to_string(e.int_val) : e.text);
                break;
            case ExprKind::float_lit:
                os_ << e.text;
                break;
            case ExprKind::bool_lit:
                os_ << (e.bool_val ? "true" : "false");
                break;
            case ExprKind::ident:
                os_ << e.text;
                break;
            case ExprKind::binary:
                os_ << "(";
                expr(*e.args[0]);
                os_ << " " << e.text << " ";
                expr(*e.args[1]);
                os_ << ")";
                break;
            case ExprKind::unary:
                os_ << "(" << e.text << (e.text == "not" ? " " : "");
                expr(*e.args[0]);
                os_ << ")";
                break;
            case ExprKind::index:
                expr(*e.args[0]);
                os_ << "[";
                expr(*e.args[1]);
                os_ << "]";
                break;
            case ExprKind::cast_qbool:
                os_ << "((qbool) ";
                expr(*e.args[0]);
                os_ << ")";
                break;
            case ExprKind::call:
                os_ << e.text;  // includes "wall::H" spelling for walls
                if (!e.size_args.empty()) {
                    os_ << "<";
                    for (size_t i = 0; i < e.size_args.size(); ++i) {
                        if (i) os_ << ", ";
                        expr(*e.size_args[i]);
                    }
                    os_ << ">";
                }
                if (e.has_binding) {
                    os_ << "(";
                    for (size_t i = 0; i < e.bound_args.size(); ++i) {
                        if (i) os_ << ", ";
                        expr(*e.bound_args[i]);
                    }
                    os_ << ")";
                }
                switch (e.sel) {
                    case RoutineSel::plain: break;
                    case RoutineSel::dag: os_ << ".dag"; break;
                    case RoutineSel::ctrl: os_ << ".ctrl"; break;
                    case RoutineSel::ctrl_dag: os_ << ".ctrl_dag"; break;
                }
                os_ << "(";
                for (size_t i = 0; i < e.args.size(); ++i) {
                    if (i) os_ << ", ";
                    expr(*e.args[i]);
                }
                os_ << ")";
                break;
        }
    }
};

inline std::string print(const Program& p) { return Printer().print(p); }

}  // namespace qpragma
