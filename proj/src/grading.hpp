#pragma once
// Scaling grades shared by the inversion routines.

#include <compare>
#include <map>
#include <optional>

#include "jetvar/expr.hpp"
#include "poly.hpp"

namespace jetvar::detail {

// u-degree, x-weight (u_i weighs i, x weighs -1) and t-weight on the free space.
struct Grade {
    Rat d, wx, wt;
    friend auto operator<=>(const Grade& p, const Grade& q) {
        if (p.d != q.d) return p.d < q.d ? std::strong_ordering::less : std::strong_ordering::greater;
        if (p.wx != q.wx) return p.wx < q.wx ? std::strong_ordering::less : std::strong_ordering::greater;
        if (p.wt != q.wt) return p.wt < q.wt ? std::strong_ordering::less : std::strong_ordering::greater;
        return std::strong_ordering::equal;
    }
    friend bool operator==(const Grade&, const Grade&) = default;
    Grade operator+(const Grade& o) const { return {d + o.d, wx + o.wx, wt + o.wt}; }
    Grade operator*(const Rat& r) const { return {d * r, wx * r, wt * r}; }
};

struct Grader {
    bool free;
    std::map<AtomId, std::optional<Grade>> memo;

    std::optional<Grade> atom(AtomId id) {
        auto it = memo.find(id);
        if (it != memo.end()) return it->second;
        const AtomInfo& info = atom_info(id);
        std::optional<Grade> g;
        switch (info.kind) {
        case AtomKind::Jet: g = Grade{Rat(1), Rat(info.coord.i), Rat(free ? info.coord.a : 0)}; break;
        case AtomKind::Space: g = Grade{Rat(0), Rat(-1), Rat(0)}; break;
        case AtomKind::Time: g = Grade{Rat(0), Rat(0), Rat(free ? -1 : 0)}; break;
        case AtomKind::Func:
            if (info.deps.empty()) g = Grade{};
            break;
        case AtomKind::Radical: g = poly(info.radicand); break;
        default: g = Grade{};
        }
        memo.emplace(id, g);
        return g;
    }
    std::optional<Grade> mono(const Monomial& m) {
        Grade s{};
        for (auto& f : m) {
            auto a = atom(f.atom);
            if (!a) return std::nullopt;
            s = s + *a * f.exp;
        }
        return s;
    }
    std::optional<Grade> poly(const Poly& p) {
        std::optional<Grade> r;
        for (auto& t : p.terms) {
            auto m = mono(t.mono);
            if (!m || (r && !(*r == *m))) return std::nullopt;
            r = m;
        }
        return r ? r : Grade{};
    }
    // Homogeneous components of e keyed by grade.
    std::optional<std::map<Grade, Expr>> split(const Expr& e) {
        Grade dg{};
        for (auto& d : e.den()) {
            auto a = atom(d.atom);
            if (!a) return std::nullopt;
            dg = dg + *a * Rat(d.power);
        }
        std::map<Grade, Poly> parts;
        for (auto& t : e.num().terms) {
            auto m = mono(t.mono);
            if (!m) return std::nullopt;
            parts[*m + dg * Rat(-1)].terms.push_back(t);
        }
        std::map<Grade, Expr> out;
        Expr den = Expr::make(poly_const(1), e.den());
        for (auto& [g, p] : parts) out.emplace(g, Expr::make(p, {}) * den);
        return out;
    }
};

}  // namespace jetvar::detail
