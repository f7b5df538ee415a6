#include "jetvar/linsolve.hpp"

#include <map>
#include <stdexcept>

#include "poly.hpp"

namespace jetvar {

using namespace detail;

namespace {

// Field atoms depend on nothing but t (and parameters, which have no coordinates).
bool is_field_atom(AtomId id) {
    const AtomInfo& info = atom_info(id);
    if (info.kind == AtomKind::Func) return false;
    for (auto& c : info.deps)
        if (c.kind != JetCoord::Kind::T) return false;
    return true;
}

}  // namespace

LinearSystem::LinearSystem(std::vector<AtomId> unknowns) : unknowns_(std::move(unknowns)) {}

std::vector<AtomId> LinearSystem::make_unknowns(const std::string& prefix, std::size_t n) {
    std::vector<AtomId> v;
    for (std::size_t k = 0; k < n; ++k) v.push_back(param_atom(prefix + std::to_string(k)));
    return v;
}

void LinearSystem::add(const Expr& e) {
    if (e.is_zero()) return;
    std::map<AtomId, std::size_t> index;
    for (std::size_t k = 0; k < unknowns_.size(); ++k) index[unknowns_[k]] = k;
    // Field factor of the denominator is irrelevant: multiply through.
    std::map<Monomial, Row, bool (*)(const Monomial&, const Monomial&)> rows(mono_less);
    for (auto& t : e.num().terms) {
        Monomial basis, field;
        std::optional<std::size_t> which;
        for (auto& f : t.mono) {
            auto it = index.find(f.atom);
            if (it != index.end()) {
                if (which || f.exp != Rat(1)) throw std::invalid_argument("expression is not linear in the unknowns");
                which = it->second;
            } else if (is_field_atom(f.atom)) {
                field.push_back(f);
            } else {
                basis.push_back(f);
            }
        }
        auto [it, inserted] = rows.try_emplace(basis);
        if (inserted) it->second.coef.assign(unknowns_.size(), Expr());
        Expr c = Expr::make(Poly{{Term{field, t.coef}}}, {});
        if (which) it->second.coef[*which] += c;
        else it->second.rhs -= c;
    }
    for (auto& [m, row] : rows) rows_.push_back(std::move(row));
}

namespace {

struct Reduced {
    std::vector<std::vector<Expr>> a;
    std::vector<Expr> b;
    std::vector<std::size_t> pivot_col;  // per pivot row
    bool consistent = true;
};

Reduced eliminate(std::vector<std::vector<Expr>> a, std::vector<Expr> b, std::size_t n) {
    Reduced r;
    std::size_t row = 0;
    for (std::size_t col = 0; col < n && row < a.size(); ++col) {
        std::size_t p = row;
        // Prefer a rational pivot; fall back to any nonzero entry.
        std::optional<std::size_t> any;
        for (; p < a.size(); ++p) {
            if (a[p][col].is_zero()) continue;
            if (!any) any = p;
            if (a[p][col].as_rational()) break;
        }
        if (p == a.size()) {
            if (!any) continue;
            p = *any;
        }
        std::swap(a[p], a[row]);
        std::swap(b[p], b[row]);
        Expr inv = a[row][col].inverse();
        for (std::size_t c = col; c < n; ++c) a[row][c] = a[row][c] * inv;
        b[row] = b[row] * inv;
        for (std::size_t q = 0; q < a.size(); ++q) {
            if (q == row || a[q][col].is_zero()) continue;
            Expr f = a[q][col];
            for (std::size_t c = col; c < n; ++c)
                if (!a[row][c].is_zero()) a[q][c] -= f * a[row][c];
            b[q] -= f * b[row];
        }
        r.pivot_col.push_back(col);
        ++row;
    }
    for (std::size_t q = row; q < a.size(); ++q)
        if (!b[q].is_zero()) r.consistent = false;
    r.a = std::move(a);
    r.b = std::move(b);
    return r;
}

}  // namespace

std::optional<std::vector<Expr>> LinearSystem::solve() const {
    std::vector<std::vector<Expr>> a;
    std::vector<Expr> b;
    for (auto& r : rows_) {
        a.push_back(r.coef);
        b.push_back(r.rhs);
    }
    Reduced red = eliminate(std::move(a), std::move(b), unknowns_.size());
    if (!red.consistent) return std::nullopt;
    std::vector<Expr> x(unknowns_.size());
    for (std::size_t k = 0; k < red.pivot_col.size(); ++k) x[red.pivot_col[k]] = red.b[k];
    return x;
}

std::size_t LinearSystem::rank() const {
    std::vector<std::vector<Expr>> a;
    std::vector<Expr> b;
    for (auto& r : rows_) {
        a.push_back(r.coef);
        b.push_back(Expr());
    }
    return eliminate(std::move(a), std::move(b), unknowns_.size()).pivot_col.size();
}

Expr substitute_unknowns(const Expr& e, const std::vector<AtomId>& unknowns, const std::vector<Expr>& values) {
    // Unknowns are parameters, so substitute by rebuilding term by term.
    std::map<AtomId, Expr> val;
    for (std::size_t k = 0; k < unknowns.size(); ++k) val[unknowns[k]] = values[k];
    Expr r;
    for (auto& t : e.num().terms) {
        Monomial rest;
        Expr f(1);
        for (auto& fac : t.mono) {
            auto it = val.find(fac.atom);
            if (it != val.end()) f *= it->second.pow(fac.exp);
            else rest.push_back(fac);
        }
        r += f * Expr::make(Poly{{Term{rest, t.coef}}}, {});
    }
    return r * Expr::make(poly_const(1), e.den());
}

}  // namespace jetvar
