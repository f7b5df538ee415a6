#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "jetvar/expr.hpp"

namespace jetvar {

// Declared names available to the parser. The field letters u, v and w all
// name the single dependent variable; `field` picks the letter used for output.
struct Decls {
    std::set<std::string> params;
    std::map<std::string, std::vector<JetCoord>> funcs;
    char field = 'u';
};

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& msg, std::size_t pos)
        : std::runtime_error(msg + " at offset " + std::to_string(pos)), pos_(pos) {}
    std::size_t pos() const { return pos_; }

private:
    std::size_t pos_;
};

struct Token {
    enum class Kind { Ident, Int, Sym, End };
    Kind kind;
    std::string text;
    std::size_t pos;
};

std::vector<Token> tokenize(std::string_view src);

// Parses a jet coordinate name such as u_txx, v or t; nullopt if not one.
std::optional<JetCoord> parse_coord_name(const std::string& name);

// Shared recursive-descent driver. The algebra supplies the value type and
// how identifiers, products, powers and '@' are interpreted.
template <class Alg>
class Parser {
public:
    using V = typename Alg::Value;

    Parser(std::vector<Token> toks, Decls& decls, Alg& alg) : toks_(std::move(toks)), decls_(decls), alg_(alg) {}

    // Leading `param a, b;` and `func R(t,x,u,u_x);` declarations.
    void declarations() {
        while (peek().kind == Token::Kind::Ident && (peek().text == "param" || peek().text == "func")) {
            std::string kw = next().text;
            if (kw == "param") {
                do {
                    decls_.params.insert(expect_ident());
                } while (accept(","));
            } else {
                std::string name = expect_ident();
                expect("(");
                std::vector<JetCoord> args;
                if (!accept(")")) {
                    do {
                        std::size_t p = peek().pos;
                        auto c = parse_coord_name(expect_ident());
                        if (!c) throw ParseError("function argument must be a coordinate", p);
                        args.push_back(*c);
                    } while (accept(","));
                    expect(")");
                }
                decls_.funcs[name] = args;
            }
            expect(";");
        }
    }

    V parse_all() {
        declarations();
        if (peek().kind == Token::Kind::End) throw ParseError("empty expression", peek().pos);
        V v = sum();
        if (peek().kind != Token::Kind::End) throw ParseError("unexpected '" + peek().text + "'", peek().pos);
        return v;
    }

private:
    const Token& peek() const { return toks_[k_]; }
    const Token& next() { return toks_[k_ < toks_.size() - 1 ? k_++ : k_]; }
    bool at(const char* s) const { return peek().kind == Token::Kind::Sym && peek().text == s; }
    bool accept(const char* s) {
        if (!at(s)) return false;
        ++k_;
        return true;
    }
    void expect(const char* s) {
        if (!accept(s)) throw ParseError(std::string("expected '") + s + "'", peek().pos);
    }
    std::string expect_ident() {
        if (peek().kind != Token::Kind::Ident) throw ParseError("expected identifier", peek().pos);
        return next().text;
    }
    long expect_int() {
        if (peek().kind != Token::Kind::Int) throw ParseError("expected integer", peek().pos);
        return std::stol(next().text);
    }

    V sum() {
        V v = composition();
        for (;;) {
            if (accept("+")) v = alg_.add(v, composition());
            else if (accept("-")) v = alg_.sub(v, composition());
            else return v;
        }
    }

    V composition() {
        V v = product();
        while (accept("@")) v = alg_.compose(v, product());
        return v;
    }

    V product() {
        V v = unary();
        for (;;) {
            std::size_t p = peek().pos;
            if (accept("*")) v = alg_.mul(v, unary(), p);
            else if (accept("/")) v = alg_.div(v, unary(), p);
            else return v;
        }
    }

    V unary() {
        if (accept("-")) return alg_.neg(unary());
        if (accept("+")) return unary();
        return power();
    }

    V power() {
        V base = primary();
        std::size_t p = peek().pos;
        if (accept("^")) return alg_.pow(base, unary(), p);
        return base;
    }

    V primary() {
        const Token& t = peek();
        if (t.kind == Token::Kind::Int) {
            next();
            return alg_.from_expr(Expr(mpq_class(t.text)));
        }
        if (accept("(")) {
            V v = sum();
            expect(")");
            return v;
        }
        if (t.kind != Token::Kind::Ident) throw ParseError("unexpected '" + t.text + "'", t.pos);
        std::string name = next().text;
        if (auto v = alg_.ident(name)) return *v;
        if (name == "sqrt") {
            expect("(");
            V v = sum();
            expect(")");
            return alg_.pow(v, alg_.from_expr(Expr(mpq_class(1, 2))), t.pos);
        }
        if ((name == "u" || name == "v" || name == "w") && accept("[")) {
            long a = expect_int();
            expect(",");
            long i = expect_int();
            expect("]");
            return alg_.from_expr(Expr::coord(JetCoord::u(static_cast<int>(a), static_cast<int>(i))));
        }
        if (auto c = parse_coord_name(name)) return alg_.from_expr(Expr::coord(*c));
        if (decls_.params.count(name)) return alg_.from_expr(Expr::param(name));
        auto fit = decls_.funcs.find(name);
        if (fit != decls_.funcs.end()) return alg_.from_expr(Expr::atom(func_atom(name, fit->second)));
        if (name.size() > 1 && name.back() == '_' && at("{")) {
            auto base = decls_.funcs.find(name.substr(0, name.size() - 1));
            if (base == decls_.funcs.end()) throw ParseError("undeclared function '" + name + "'", t.pos);
            next();
            std::vector<int> deriv;
            bool outside = false;
            do {
                std::size_t p = peek().pos;
                auto c = parse_coord_name(expect_ident());
                if (!c) throw ParseError("expected coordinate", p);
                auto& args = base->second;
                auto it = std::find(args.begin(), args.end(), *c);
                if (it == args.end()) outside = true;
                else deriv.push_back(static_cast<int>(it - args.begin()));
            } while (accept(","));
            expect("}");
            if (outside) return alg_.from_expr(Expr());
            return alg_.from_expr(Expr::atom(func_atom(base->first, base->second, deriv)));
        }
        throw ParseError("undeclared identifier '" + name + "'", t.pos);
    }

    std::vector<Token> toks_;
    std::size_t k_ = 0;
    Decls& decls_;
    Alg& alg_;
};

// Parses an expression, processing any leading declarations into decls.
Expr parse_expr(std::string_view src, Decls& decls);
Expr parse_expr(std::string_view src);

}  // namespace jetvar
