#pragma once

#include <string>
#include <utility>
#include <vector>

#include "qpragma/ast.hpp"
#include "qpragma/lexer.hpp"

namespace qpragma {

/// Recursive-descent parser for QPC. The five directives follow the published
/// grammars exactly; everything else is a conventional C-like surface.
class Parser {
public:
    explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

    Program parse_program() {
        Program prog;
        while (!at(TokKind::eof)) {
            if (at(TokKind::pragma_intro)) {
                SourceLoc ploc = cur().loc;
                PragmaNode p = parse_pragma();
                if (p.kind == PragmaKind::routine) {
                    if (at(TokKind::eof))
                        throw CompileError(ploc, "directive must be followed by a definition");
                    prog.routines.push_back(parse_routine_def(std::move(p)));
                } else {
                    throw CompileError(ploc,
                                       "only 'routine' directives may appear at file scope");
                }
                continue;
            }
            if (is_type_start(cur())) {
                size_t save = pos_;
                TypeSpec ts = parse_type_spec();
                if (at(TokKind::identifier) && peek(1).is_punct("(") &&
                    !ts.width /* classical function */) {
                    pos_ = save;
                    prog.functions.push_back(parse_function_def());
                } else {
                    pos_ = save;
                    prog.globals.push_back(parse_declaration());
                }
                continue;
            }
            throw CompileError(cur().loc, "expected a definition or declaration");
        }
        return prog;
    }

    /// Parse one directive starting at the current pragma-intro token.
    /// Consumes the whole directive line.
    PragmaNode parse_pragma() {
        const Token& intro = expect(TokKind::pragma_intro, "#pragma");
        const int line = intro.loc.line;
        PragmaNode node;
        node.loc = intro.loc;
        expect_on_line(line, "quantum");
        if (!cur().is_kw("quantum"))
            throw CompileError(cur().loc, "expected 'quantum' after '#pragma'");
        next();
        expect_on_line(line, "directive kind");
        if (cur().is_kw("scope")) {
            next();
            node.kind = PragmaKind::scope;
            if (on_line(line) && cur().is_kw("with")) {
                next();
                node.scope_with = parse_var_list(line);
                if (node.scope_with.empty())
                    throw CompileError(cur().loc, "'with' requires a non-empty variable list");
            }
        } else if (cur().is_kw("move")) {
            next();
            node.kind = PragmaKind::move;
            while (on_line(line) && (cur().is_kw("toDevice") || cur().is_kw("toHost"))) {
                MoveClause clause;
                clause.to_device = cur().is_kw("toDevice");
                next();
                clause.vars = parse_var_list(line);
                node.move_clauses.push_back(std::move(clause));
            }
            if (node.move_clauses.empty())
                throw CompileError(cur().loc,
                                   "move directive requires '(toDevice | toHost) (var, ...)'");
        } else if (cur().is_kw("ctrl")) {
            next();
            node.kind = PragmaKind::ctrl;
            expect_on_line(line, "'('");
            expect_punct("(");
            node.ctrl_arg = parse_expr();
            expect_punct(")");
        } else if (cur().is_kw("routine")) {
            next();
            node.kind = PragmaKind::routine;
            if (on_line(line) && (cur().is_kw("typed") || cur().is_kw("dynamic"))) {
                node.flag = cur().is_kw("dynamic") ? RoutineFlag::dynamic : RoutineFlag::typed;
                next();
            }
            if (on_line(line) && cur().is_punct("(")) {
                next();
                while (true) {
                    BoundVar bv;
                    bv.type = parse_classical_type_kw();
                    bv.name = expect(TokKind::identifier, "bound variable name").text;
                    node.bound_vars.push_back(std::move(bv));
                    if (cur().is_punct(",")) {
                        next();
                        continue;
                    }
                    break;
                }
                expect_punct(")");
            }
        } else if (cur().is_kw("compute")) {
            next();
            node.kind = PragmaKind::compute;
        } else {
            throw CompileError(cur().loc,
                               "unknown directive; expected scope, move, ctrl, routine or compute");
        }
        if (on_line(line) && !at(TokKind::eof))
            throw CompileError(cur().loc, "unexpected token after directive");
        return node;
    }

    // Exposed for tests.
    StmtP parse_statement() { return parse_stmt(); }
    ExprP parse_expression() { return parse_expr(); }

private:
    std::vector<Token> toks_;
    size_t pos_ = 0;

    const Token& cur() const { return toks_[pos_]; }
    const Token& peek(size_t k) const {
        return toks_[pos_ + k < toks_.size() ? pos_ + k : toks_.size() - 1];
    }
    void next() {
        if (pos_ + 1 < toks_.size()) ++pos_;
    }
    bool at(TokKind k) const { return cur().kind == k; }
    bool on_line(int line) const { return !at(TokKind::eof) && cur().loc.line == line; }
    void expect_on_line(int line, const char* what) {
        if (!on_line(line))
            throw CompileError(cur().loc, std::string("directive ended early; expected ") + what);
    }
    const Token& expect(TokKind k, const char* what) {
        if (!at(k)) throw CompileError(cur().loc, std::string("expected ") + what);
        const Token& t = cur();
        next();
        return t;
    }
    void expect_punct(const char* p) {
        if (!cur().is_punct(p))
            throw CompileError(cur().loc, std::string("expected '") + p + "'");
        next();
    }
    void expect_op(const char* p) {
        if (!cur().is_op(p)) throw CompileError(cur().loc, std::string("expected '") + p + "'");
        next();
    }
    void expect_kw(const char* p) {
        if (!cur().is_kw(p)) throw CompileError(cur().loc, std::string("expected '") + p + "'");
        next();
    }

    std::vector<std::string> parse_var_list(int line) {
        expect_on_line(line, "'('");
        expect_punct("(");
        std::vector<std::string> out;
        while (true) {
            out.push_back(expect(TokKind::identifier, "variable name").text);
            if (cur().is_punct(",")) { next(); continue; }
            break;
        }
        expect_punct(")");
        return out;
    }

    static bool is_type_start(const Token& t) {
        return t.is_kw("void") || t.is_kw("bool") || t.is_kw("int64") || t.is_kw("uint64") ||
               t.is_kw("double") || t.is_kw("qbool") || t.is_kw("quint") || t.is_kw("qint") ||
               t.is_kw("qarray") || t.is_kw("qvector");
    }

    TypeKind parse_classical_type_kw() {
        if (cur().is_kw("bool")) { next(); return TypeKind::bool_t; }
        if (cur().is_kw("int64")) { next(); return TypeKind::int_t; }
        if (cur().is_kw("uint64")) { next(); return TypeKind::uint_t; }
        if (cur().is_kw("double")) { next(); return TypeKind::double_t; }
        throw CompileError(cur().loc, "expected a classical type (bool, int64, uint64, double)");
    }

    TypeSpec parse_type_spec() {
        TypeSpec ts;
        if (cur().is_kw("void")) { ts.kind = TypeKind::void_t; next(); return ts; }
        if (cur().is_kw("bool")) { ts.kind = TypeKind::bool_t; next(); return ts; }
        if (cur().is_kw("int64")) { ts.kind = TypeKind::int_t; next(); return ts; }
        if (cur().is_kw("uint64")) { ts.kind = TypeKind::uint_t; next(); return ts; }
        if (cur().is_kw("double")) { ts.kind = TypeKind::double_t; next(); return ts; }
        if (cur().is_kw("qbool")) { ts.kind = TypeKind::qbool; next(); return ts; }
        if (cur().is_kw("qvector")) { ts.kind = TypeKind::qvector; next(); return ts; }
        if (cur().is_kw("quint") || cur().is_kw("qint") || cur().is_kw("qarray")) {
            ts.kind = cur().is_kw("quint")    ? TypeKind::quint
                      : cur().is_kw("qint")   ? TypeKind::qint
                                              : TypeKind::qarray;
            next();
            expect_op("<");
            ts.width = parse_template_arg();
            close_angle();
            return ts;
        }
        throw CompileError(cur().loc, "expected a type name");
    }

    void close_angle() {
        if (cur().is_op(">")) { next(); return; }
        throw CompileError(cur().loc, "expected '>'");
    }

    // ------------------------------------------------------------------
    // Top-level items
    // ------------------------------------------------------------------

    RoutineDecl parse_routine_def(PragmaNode pragma) {
        RoutineDecl r;
        r.pragma = std::move(pragma);
        r.loc = cur().loc;
        expect_kw("void");
        r.name = expect(TokKind::identifier, "routine name").text;
        if (cur().is_op("<")) {
            next();
            while (true) {
                SizeParam sp;
                sp.loc = cur().loc;
                sp.name = expect(TokKind::identifier, "size parameter name").text;
                if (cur().is_op("=")) {
                    next();
                    sp.default_value = parse_template_arg();
                }
                r.size_params.push_back(std::move(sp));
                if (cur().is_punct(",")) { next(); continue; }
                break;
            }
            close_angle();
        }
        expect_punct("(");
        if (!cur().is_punct(")")) {
            while (true) {
                Param p;
                p.loc = cur().loc;
                p.type = parse_type_spec();
                p.name = expect(TokKind::identifier, "parameter name").text;
                r.qparams.push_back(std::move(p));
                if (cur().is_punct(",")) { next(); continue; }
                break;
            }
        }
        expect_punct(")");
        r.body = parse_block();
        return r;
    }

    FunctionDecl parse_function_def() {
        FunctionDecl f;
        f.loc = cur().loc;
        f.ret = parse_type_spec();
        f.name = expect(TokKind::identifier, "function name").text;
        expect_punct("(");
        if (!cur().is_punct(")")) {
            while (true) {
                Param p;
                p.loc = cur().loc;
                p.type = parse_type_spec();
                p.name = expect(TokKind::identifier, "parameter name").text;
                f.params.push_back(std::move(p));
                if (cur().is_punct(",")) { next(); continue; }
                break;
            }
        }
        expect_punct(")");
        f.body = parse_block();
        return f;
    }

    // ------------------------------------------------------------------
    // Statements
    // ------------------------------------------------------------------

    StmtP parse_block() {
        auto s = std::make_unique<Stmt>();
        s->kind = StmtKind::block;
        s->loc = cur().loc;
        expect_punct("{");
        while (!cur().is_punct("}")) {
            if (at(TokKind::eof)) throw CompileError(cur().loc, "unterminated block");
            s->stmts.push_back(parse_stmt());
        }
        next();
        return s;
    }

    StmtP parse_stmt() {
        if (at(TokKind::pragma_intro)) {
            SourceLoc ploc = cur().loc;
            PragmaNode p = parse_pragma();
            auto s = std::make_unique<Stmt>();
            s->loc = ploc;
            switch (p.kind) {
                case PragmaKind::move:
                    s->kind = StmtKind::move_pragma;
                    s->pragma = std::move(p);
                    return s;
                case PragmaKind::scope:
                    s->kind = StmtKind::scope_pragma;
                    break;
                case PragmaKind::ctrl:
                    s->kind = StmtKind::ctrl_pragma;
                    break;
                case PragmaKind::compute:
                    s->kind = StmtKind::compute_pragma;
                    break;
                case PragmaKind::routine:
                    throw CompileError(ploc, "routine directives may only precede a definition");
            }
            s->pragma = std::move(p);
            if (at(TokKind::eof))
                throw CompileError(ploc, "directive must be followed by a statement or block");
            s->body = parse_stmt();
            return s;
        }
        if (cur().is_punct("{")) return parse_block();
        if (cur().is_punct(";")) {
            auto s = std::make_unique<Stmt>();
            s->kind = StmtKind::empty;
            s->loc = cur().loc;
            next();
            return s;
        }
        if (is_type_start(cur())) return parse_declaration();
        if (cur().is_kw("if")) return parse_if();
        if (cur().is_kw("for")) return parse_for();
        if (cur().is_kw("do")) return parse_do_while();
        if (cur().is_kw("return")) {
            auto s = std::make_unique<Stmt>();
            s->kind = StmtKind::return_stmt;
            s->loc = cur().loc;
            next();
            if (!cur().is_punct(";")) s->expr = parse_expr();
            expect_punct(";");
            return s;
        }
        return parse_expr_or_assign_stmt();
    }

    StmtP parse_declaration() {
        auto s = std::make_unique<Stmt>();
        s->kind = StmtKind::decl;
        s->loc = cur().loc;
        s->dtype = parse_type_spec();
        if (s->dtype.kind == TypeKind::void_t)
            throw CompileError(s->loc, "variables may not have type void");
        while (true) {
            Declarator d;
            d.loc = cur().loc;
            d.name = expect(TokKind::identifier, "variable name").text;
            if (cur().is_punct("[")) {
                next();
                d.array_size = parse_expr();
                expect_punct("]");
            }
            if (cur().is_op("=")) {
                next();
                d.init = parse_expr();
            } else if (cur().is_punct("(")) {
                next();
                d.ctor_arg = parse_expr();
                expect_punct(")");
            }
            s->decls.push_back(std::move(d));
            if (cur().is_punct(",")) { next(); continue; }
            break;
        }
        expect_punct(";");
        return s;
    }

    StmtP parse_if() {
        auto s = std::make_unique<Stmt>();
        s->kind = StmtKind::if_stmt;
        s->loc = cur().loc;
        expect_kw("if");
        if (cur().is_kw("constexpr")) {
            s->is_constexpr = true;
            next();
        }
        expect_punct("(");
        s->cond = parse_expr();
        expect_punct(")");
        s->body = parse_stmt();
        if (cur().is_kw("else")) {
            next();
            s->else_body = parse_stmt();
        }
        return s;
    }

    StmtP parse_for() {
        auto s = std::make_unique<Stmt>();
        s->kind = StmtKind::for_loop;
        s->loc = cur().loc;
        expect_kw("for");
        expect_punct("(");
        if (cur().is_punct(";")) {
            next();
        } else if (is_type_start(cur())) {
            s->init = parse_declaration();  // consumes ';'
        } else {
            s->init = parse_assign_no_semi();
            expect_punct(";");
        }
        if (!cur().is_punct(";")) s->cond = parse_expr();
        expect_punct(";");
        if (!cur().is_punct(")")) s->step = parse_assign_no_semi();
        expect_punct(")");
        s->body = parse_stmt();
        return s;
    }

    StmtP parse_do_while() {
        auto s = std::make_unique<Stmt>();
        s->kind = StmtKind::do_while;
        s->loc = cur().loc;
        expect_kw("do");
        s->body = parse_stmt();
        expect_kw("while");
        expect_punct("(");
        s->cond = parse_expr();
        expect_punct(")");
        expect_punct(";");
        return s;
    }

    StmtP parse_expr_or_assign_stmt() {
        StmtP s = parse_assign_no_semi();
        expect_punct(";");
        return s;
    }

    StmtP parse_assign_no_semi() {
        auto s = std::make_unique<Stmt>();
        s->loc = cur().loc;
        // prefix increment/decrement
        if (cur().is_op("++") || cur().is_op("--")) {
            s->kind = StmtKind::assign;
            s->op = cur().text;
            next();
            s->lhs = parse_expr();
            return s;
        }
        ExprP e = parse_expr();
        if (cur().is_op("=") || cur().is_op("+=") || cur().is_op("-=") || cur().is_op("^=")) {
            s->kind = StmtKind::assign;
            s->op = cur().text;
            next();
            s->lhs = std::move(e);
            s->rhs = parse_expr();
            return s;
        }
        if (cur().is_op("++") || cur().is_op("--")) {
            s->kind = StmtKind::assign;
            s->op = cur().text;
            next();
            s->lhs = std::move(e);
            return s;
        }
        s->kind = StmtKind::expr;
        s->expr = std::move(e);
        return s;
    }

    // ------------------------------------------------------------------
    // Expressions (precedence climbing)
    // ------------------------------------------------------------------

    // Template arguments exclude comparison operators so `>` closes the list;
    // parenthesize if a comparison is genuinely needed.
    ExprP parse_template_arg() { return parse_binary(lvl_shift); }

    enum Level {
        lvl_or = 0,     // ||
        lvl_and,        // &&
        lvl_bitor,      // |
        lvl_bitxor,     // ^
        lvl_bitand,     // &
        lvl_eq,         // == !=
        lvl_rel,        // < <= > >=
        lvl_shift,      // << >>
        lvl_add,        // + -
        lvl_mul,        // * / %
        lvl_unary,
    };

    static int op_level(const Token& t) {
        if (t.kind != TokKind::op) return -1;
        const std::string& s = t.text;
        if (s == "||") return lvl_or;
        if (s == "&&") return lvl_and;
        if (s == "|") return lvl_bitor;
        if (s == "^") return lvl_bitxor;
        if (s == "&") return lvl_bitand;
        if (s == "==" || s == "!=") return lvl_eq;
        if (s == "<" || s == "<=" || s == ">" || s == ">=") return lvl_rel;
        if (s == "<<" || s == ">>") return lvl_shift;
        if (s == "+" || s == "-") return lvl_add;
        if (s == "*" || s == "/" || s == "%") return lvl_mul;
        return -1;
    }

    ExprP parse_expr() { return parse_binary(lvl_or); }

    ExprP parse_binary(int min_level) {
        ExprP lhs = parse_unary();
        while (true) {
            int lvl = op_level(cur());
            if (lvl < min_level) break;
            auto e = std::make_unique<Expr>();
            e->kind = ExprKind::binary;
            e->loc = cur().loc;
            e->text = cur().text;
            next();
            ExprP rhs = parse_binary(lvl + 1);
            e->args.push_back(std::move(lhs));
            e->args.push_back(std::move(rhs));
            lhs = std::move(e);
        }
        return lhs;
    }

    ExprP parse_unary() {
        if (cur().is_kw("not") || cur().is_op("!") || cur().is_op("-") || cur().is_op("~")) {
            auto e = std::make_unique<Expr>();
            e->kind = ExprKind::unary;
            e->loc = cur().loc;
            e->text = cur().is_kw("not") ? "not" : cur().text;
            next();
            e->args.push_back(parse_unary());
            return e;
        }
        // (qbool) cast
        if (cur().is_punct("(") && peek(1).is_kw("qbool") && peek(2).is_punct(")")) {
            auto e = std::make_unique<Expr>();
            e->kind = ExprKind::cast_qbool;
            e->loc = cur().loc;
            next();
            next();
            next();
            e->args.push_back(parse_unary());
            return e;
        }
        return parse_postfix();
    }

    ExprP parse_postfix() {
        ExprP e = parse_primary();
        while (true) {
            if (cur().is_punct("[")) {
                auto idx = std::make_unique<Expr>();
                idx->kind = ExprKind::index;
                idx->loc = cur().loc;
                next();
                idx->args.push_back(std::move(e));
                idx->args.push_back(parse_expr());
                expect_punct("]");
                e = std::move(idx);
                continue;
            }
            if (cur().is_punct("(") && e->kind == ExprKind::ident) {
                e = make_call(std::move(e));
                continue;
            }
            if (cur().is_punct("(") && e->kind == ExprKind::call && !e->has_binding &&
                e->sel == RoutineSel::plain) {
                // second argument list: the first one was a classical binding
                e->bound_args = std::move(e->args);
                e->args.clear();
                e->has_binding = true;
                parse_args_into(e->args);
                continue;
            }
            if (cur().is_op(".") &&
                (e->kind == ExprKind::ident || e->kind == ExprKind::call)) {
                next();
                if (!at(TokKind::identifier) && !at(TokKind::keyword))
                    throw CompileError(cur().loc, "expected dag, ctrl or ctrl_dag");
                const Token selTok = cur();
                next();
                RoutineSel sel;
                if (selTok.text == "dag") sel = RoutineSel::dag;
                else if (selTok.text == "ctrl") sel = RoutineSel::ctrl;
                else if (selTok.text == "ctrl_dag") sel = RoutineSel::ctrl_dag;
                else throw CompileError(selTok.loc, "unknown routine selector '" + selTok.text + "'");
                if (e->kind == ExprKind::ident) {
                    auto c = std::make_unique<Expr>();
                    c->kind = ExprKind::call;
                    c->loc = e->loc;
                    c->text = e->text;
                    c->size_args = std::move(e->size_args);
                    c->is_wall = e->is_wall;
                    c->wall_gate = e->wall_gate;
                    e = std::move(c);
                } else if (!e->args.empty() && !e->has_binding) {
                    e->bound_args = std::move(e->args);
                    e->args.clear();
                    e->has_binding = true;
                }
                e->sel = sel;
                parse_args_into(e->args);
                continue;
            }
            break;
        }
        return e;
    }

    ExprP make_call(ExprP ident) {
        auto c = std::make_unique<Expr>();
        c->kind = ExprKind::call;
        c->loc = ident->loc;
        c->text = ident->text;
        c->size_args = std::move(ident->size_args);
        c->is_wall = ident->is_wall;
        c->wall_gate = ident->wall_gate;
        parse_args_into(c->args);
        return c;
    }

    void parse_args_into(std::vector<ExprP>& out) {
        expect_punct("(");
        if (!cur().is_punct(")")) {
            while (true) {
                out.push_back(parse_expr());
                if (cur().is_punct(",")) { next(); continue; }
                break;
            }
        }
        expect_punct(")");
    }

    ExprP parse_primary() {
        const Token& t = cur();
        auto e = std::make_unique<Expr>();
        e->loc = t.loc;
        if (t.is(TokKind::int_literal)) {
            e->kind = ExprKind::int_lit;
            e->text = t.text;
            e->int_val = std::stoull(t.text, nullptr, 0);
            next();
            return e;
        }
        if (t.is(TokKind::float_literal)) {
            e->kind = ExprKind::float_lit;
            e->text = t.text;
            e->float_val = std::stod(t.text);
            next();
            return e;
        }
        if (t.is_kw("true") || t.is_kw("false")) {
            e->kind = ExprKind::bool_lit;
            e->bool_val = t.is_kw("true");
            next();
            return e;
        }
        if (t.is_kw("wall")) {
            next();
            expect_op("::");
            std::string gate = expect(TokKind::identifier, "gate name after 'wall::'").text;
            expect_op("<");
            ExprP width = parse_template_arg();
            close_angle();
            auto id = std::make_unique<Expr>();
            id->kind = ExprKind::ident;
            id->loc = e->loc;
            id->text = "wall::" + gate;
            id->is_wall = true;
            id->wall_gate = gate;
            id->size_args.push_back(std::move(width));
            return id;  // postfix loop turns this into a call
        }
        if (t.is(TokKind::identifier)) {
            e->kind = ExprKind::ident;
            e->text = t.text;
            next();
            // possibly a templated call: ident '<' args '>' followed by ( or .
            if (cur().is_op("<")) {
                size_t save = pos_;
                try {
                    next();
                    std::vector<ExprP> sargs;
                    while (true) {
                        sargs.push_back(parse_template_arg());
                        if (cur().is_punct(",")) { next(); continue; }
                        break;
                    }
                    if (cur().is_op(">") && (peek(1).is_punct("(") || peek(1).is_op("."))) {
                        next();
                        e->size_args = std::move(sargs);
                        return e;
                    }
                    pos_ = save;
                } catch (const CompileError&) {
                    pos_ = save;
                }
            }
            return e;
        }
        if (t.is_punct("(")) {
            next();
            ExprP inner = parse_expr();
            expect_punct(")");
            return inner;
        }
        throw CompileError(t.loc, "expected an expression");
    }
};

inline Program parse(std::string_view source) {
    return Parser(tokenize(source)).parse_program();
}

}  // namespace qpragma
