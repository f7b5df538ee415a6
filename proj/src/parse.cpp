#include "jetvar/parse.hpp"

#include <cctype>

namespace jetvar {

std::vector<Token> tokenize(std::string_view src) {
    std::vector<Token> out;
    std::size_t k = 0;
    while (k < src.size()) {
        char c = src[k];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++k;
            continue;
        }
        std::size_t start = k;
        if (std::isalpha(static_cast<unsigned char>(c))) {
            while (k < src.size() && (std::isalnum(static_cast<unsigned char>(src[k])) || src[k] == '_')) ++k;
            out.push_back({Token::Kind::Ident, std::string(src.substr(start, k - start)), start});
        } else if (std::isdigit(static_cast<unsigned char>(c))) {
            while (k < src.size() && std::isdigit(static_cast<unsigned char>(src[k]))) ++k;
            if (k < src.size() && (src[k] == '.' || src[k] == 'e' || src[k] == 'E'))
                throw ParseError("non-rational numeric literal", start);
            out.push_back({Token::Kind::Int, std::string(src.substr(start, k - start)), start});
        } else if (c == '.') {
            throw ParseError("non-rational numeric literal", start);
        } else if (std::string_view("+-*/^()[]{},;@").find(c) != std::string_view::npos) {
            out.push_back({Token::Kind::Sym, std::string(1, c), start});
            ++k;
        } else {
            throw ParseError(std::string("unexpected character '") + c + "'", start);
        }
    }
    out.push_back({Token::Kind::End, "end of input", src.size()});
    return out;
}

std::optional<JetCoord> parse_coord_name(const std::string& name) {
    if (name == "t") return JetCoord::t();
    if (name == "x") return JetCoord::x();
    if (name.empty() || (name[0] != 'u' && name[0] != 'v' && name[0] != 'w')) return std::nullopt;
    if (name.size() == 1) return JetCoord::u(0, 0);
    if (name[1] != '_' || name.size() < 3) return std::nullopt;
    int a = 0, i = 0;
    for (std::size_t k = 2; k < name.size(); ++k) {
        if (name[k] == 't') ++a;
        else if (name[k] == 'x') ++i;
        else return std::nullopt;
    }
    return JetCoord::u(a, i);
}

namespace {

struct ExprAlg {
    using Value = Expr;
    Value from_expr(const Expr& e) { return e; }
    std::optional<Value> ident(const std::string&) { return std::nullopt; }
    Value add(const Value& a, const Value& b) { return a + b; }
    Value sub(const Value& a, const Value& b) { return a - b; }
    Value neg(const Value& a) { return -a; }
    Value mul(const Value& a, const Value& b, std::size_t) { return a * b; }
    Value div(const Value& a, const Value& b, std::size_t pos) {
        if (b.is_zero()) throw ParseError("division by zero", pos);
        return a / b;
    }
    Value pow(const Value& a, const Value& b, std::size_t pos) {
        auto r = b.as_rational();
        if (!r) throw ParseError("exponent must be a rational constant", pos);
        try {
            return a.pow(Rat(mpz_class(r->get_num()).get_si(), mpz_class(r->get_den()).get_si()));
        } catch (const std::domain_error& e) {
            throw ParseError(e.what(), pos);
        }
    }
    Value compose(const Value&, const Value&) { throw ParseError("'@' needs operators", 0); }
};

}  // namespace

Expr parse_expr(std::string_view src, Decls& decls) {
    ExprAlg alg;
    Parser<ExprAlg> p(tokenize(src), decls, alg);
    return p.parse_all();
}

Expr parse_expr(std::string_view src) {
    Decls d;
    return parse_expr(src, d);
}

}  // namespace jetvar
