#include "jetvar/format.hpp"

#include <algorithm>

#include "poly.hpp"

namespace jetvar {

using namespace detail;

std::string format_rational(const mpq_class& q) { return q.get_str(); }

namespace {

std::string format_exponent(const Rat& e) {
    if (e == Rat(1)) return "";
    if (e.is_integer()) return "^" + e.str();
    return "^(" + e.str() + ")";
}

bool needs_parens(AtomKind k) { return k == AtomKind::Radical; }

std::string format_term(const Term& t, const FormatOptions& opt) {
    Monomial m = t.mono;
    std::sort(m.begin(), m.end(), [](const Factor& a, const Factor& b) { return structural_less(a.atom, b.atom); });
    std::string body;
    for (auto& f : m) {
        if (!body.empty()) body += "*";
        const AtomInfo& info = atom_info(f.atom);
        std::string a = format_atom(f.atom, opt);
        if (needs_parens(info.kind)) a = "(" + a + ")";
        body += a + format_exponent(f.exp);
    }
    if (body.empty()) return format_rational(t.coef);
    if (t.coef == 1) return body;
    if (t.coef == -1) return "-" + body;
    return format_rational(t.coef) + "*" + body;
}

}  // namespace

std::string format_atom(AtomId id, const FormatOptions& opt) {
    const AtomInfo& info = atom_info(id);
    switch (info.kind) {
    case AtomKind::Number: return info.number.get_str();
    case AtomKind::Param: return info.name;
    case AtomKind::Time:
    case AtomKind::Space:
    case AtomKind::Jet: return info.coord.name(opt.field);
    case AtomKind::Func: {
        if (info.deriv.empty()) return info.name;
        std::string s = info.name + "_{";
        for (std::size_t k = 0; k < info.deriv.size(); ++k) {
            if (k) s += ",";
            s += info.args[static_cast<std::size_t>(info.deriv[k])].name(opt.field);
        }
        return s + "}";
    }
    case AtomKind::Radical: return format_poly(info.radicand, opt);
    }
    return "?";
}

std::string format_poly(const Poly& p, const FormatOptions& opt) {
    if (p.empty()) return "0";
    std::string s;
    for (const Term* t : display_order(p)) {
        std::string ts = format_term(*t, opt);
        if (s.empty()) s = ts;
        else if (ts[0] == '-') s += " - " + ts.substr(1);
        else s += " + " + ts;
    }
    return s;
}

std::string Expr::str(const FormatOptions& opt) const {
    std::string n = format_poly(num(), opt);
    if (den().empty()) return n;
    std::string s;
    if (!(num().terms.size() == 1 && num().terms[0].mono.empty() && num().terms[0].coef == 1)) s = "(" + n + ")*";
    bool first = true;
    for (auto& d : den()) {
        if (!first) s += "*";
        first = false;
        s += "(" + format_poly(atom_info(d.atom).radicand, opt) + ")^" + std::to_string(-d.power);
    }
    return s;
}

}  // namespace jetvar
