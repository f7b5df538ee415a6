#include "jetvar/forms.hpp"

#include <algorithm>
#include <random>
#include <regex>

#include "jetvar/linsolve.hpp"
#include "grading.hpp"
#include "poly.hpp"

namespace jetvar {

using namespace detail;

namespace {

Expr rat_expr(const Rat& r) { return Expr(mpq_class(mpz_class(r.num()), mpz_class(r.den()))); }

int max_r(Space s) { return s == Space::SemiBasic ? 1 : 2; }

bool has_t_jets(const Expr& e) {
    for (auto& c : e.coords())
        if (c.is_jet() && c.a > 0) return true;
    return false;
}

}  // namespace

std::string contact_name(Space space, const CIdx& c) {
    if (c.a > 0) return "zeta" + std::to_string(c.a) + "_" + std::to_string(c.i);
    return "th" + std::to_string(c.i) + (space == Space::SemiBasic ? "_E" : "");
}

Form Form::function(const Expr& f, Space space) {
    Form w(space, 0, 0);
    w.add(Basis{}, f);
    return w;
}

Form Form::dx(Space space) {
    Form w(space, 1, 0);
    w.add(Basis{false, true, {}}, Expr(1));
    return w;
}

Form Form::dt(Space space) {
    if (space == Space::SemiBasic) throw FormError("no dt on the semibasic space");
    Form w(space, 1, 0);
    w.add(Basis{true, false, {}}, Expr(1));
    return w;
}

Form Form::theta(Space space, int i, int a) {
    if (a > 0 && space != Space::Free) throw FormError("t-contact forms exist only on the free space");
    Form w(space, 0, 1);
    w.add(Basis{false, false, {CIdx{a, i}}}, Expr(1));
    return w;
}

Form Form::contact(Space space, const std::map<int, Expr>& coefs) {
    Form w(space, 0, 1);
    for (auto& [i, c] : coefs) w.add(Basis{false, false, {CIdx{0, i}}}, c);
    return w;
}

Expr Form::coef(const Basis& b) const {
    auto it = terms_.find(b);
    return it == terms_.end() ? Expr() : it->second;
}

void Form::add(const Basis& b, const Expr& c) {
    if (c.is_zero()) return;
    if (b.r() != r_ || b.s() != s_)
        throw FormError("grade mismatch: (" + std::to_string(b.r()) + "," + std::to_string(b.s()) + ") into (" +
                        std::to_string(r_) + "," + std::to_string(s_) + ")");
    if (space_ == Space::SemiBasic && b.dt) throw FormError("no dt on the semibasic space");
    if (space_ != Space::Free)
        for (auto& c2 : b.th)
            if (c2.a > 0) throw FormError("t-contact forms exist only on the free space");
    auto [it, inserted] = terms_.try_emplace(b, c);
    if (!inserted) {
        it->second += c;
        if (it->second.is_zero()) terms_.erase(it);
    }
}

void Form::add_unsorted(bool dt, bool dx, std::vector<CIdx> list, Expr c) {
    if (c.is_zero()) return;
    bool neg = false;
    for (std::size_t p = 0; p < list.size(); ++p)
        for (std::size_t q = 0; q + 1 < list.size() - p; ++q) {
            if (list[q] == list[q + 1]) return;
            if (list[q + 1] < list[q]) {
                std::swap(list[q], list[q + 1]);
                neg = !neg;
            }
        }
    for (std::size_t q = 0; q + 1 < list.size(); ++q)
        if (list[q] == list[q + 1]) return;
    add(Basis{dt, dx, std::move(list)}, neg ? -c : c);
}

void Form::check(const Form& o) const {
    if (o.space_ != space_) throw FormError("forms on different spaces");
}

Form Form::operator+(const Form& o) const {
    check(o);
    if (o.is_zero()) return *this;
    if (is_zero()) return o;
    Form r = *this;
    for (auto& [b, c] : o.terms_) r.add(b, c);
    return r;
}

Form Form::operator-() const {
    Form r(space_, r_, s_);
    for (auto& [b, c] : terms_) r.terms_.emplace(b, -c);
    return r;
}

Form Form::operator-(const Form& o) const { return *this + (-o); }

Form Form::scaled(const Expr& c) const {
    Form r(space_, r_, s_);
    for (auto& [b, d] : terms_) r.add(b, c * d);
    return r;
}

Form Form::map_coefs(const std::function<Expr(const Expr&)>& f) const {
    Form r(space_, r_, s_);
    for (auto& [b, d] : terms_) r.add(b, f(d));
    return r;
}

bool operator==(const Form& a, const Form& b) {
    if (a.space_ != b.space_ || a.terms_.size() != b.terms_.size()) return false;
    for (auto& [k, c] : a.terms_) {
        auto it = b.terms_.find(k);
        if (it == b.terms_.end() || !(it->second == c)) return false;
    }
    return true;
}

std::map<int, Expr> Form::contact_coefs() const {
    if (r_ != 0 || s_ != 1) throw FormError("not a contact 1-form");
    std::map<int, Expr> m;
    for (auto& [b, c] : terms_) {
        if (b.th[0].a != 0) throw FormError("contact form with t-index");
        m[b.th[0].i] = c;
    }
    return m;
}

Form Form::horizontal_part(bool dt, bool dx) const {
    Form r(space_, 0, s_);
    for (auto& [b, c] : terms_)
        if (b.dt == dt && b.dx == dx) r.add(Basis{false, false, b.th}, c);
    return r;
}

std::string Form::str(const FormatOptions& opt) const {
    if (terms_.empty()) return "0";
    std::string s;
    for (auto& [b, c] : terms_) {
        std::vector<std::string> parts;
        if (b.dt) parts.push_back("dt");
        if (b.dx) parts.push_back("dx");
        for (auto& k : b.th) parts.push_back(contact_name(space_, k));
        std::string basis;
        for (auto& p : parts) basis += (basis.empty() ? "" : "^") + p;
        std::string piece;
        if (basis.empty()) piece = "(" + c.str(opt) + ")";
        else if (c == Expr(1)) piece = basis;
        else if (c == Expr(-1)) piece = "-" + basis;
        else piece = basis + " * (" + c.str(opt) + ")";
        if (s.empty()) s = piece;
        else if (piece[0] == '-') s += " - " + piece.substr(1);
        else s += " + " + piece;
    }
    return s;
}

// ---------------------------------------------------------------------------

Form wedge(const Form& a, const Form& b) {
    if (a.space() != b.space()) throw FormError("wedge of forms on different spaces");
    int r = a.r() + b.r();
    if (r > max_r(a.space())) {
        if (a.is_zero() || b.is_zero()) return Form(a.space(), std::min(r, max_r(a.space())), a.s() + b.s());
        throw FormError("horizontal degree exceeds the space dimension");
    }
    Form out(a.space(), r, a.s() + b.s());
    for (auto& [ba, ca] : a.terms())
        for (auto& [bb, cb] : b.terms()) {
            if ((ba.dt && bb.dt) || (ba.dx && bb.dx)) continue;
            bool neg = (ba.s() * bb.r()) % 2 == 1;
            if (ba.dx && bb.dt) neg = !neg;
            std::vector<CIdx> list = ba.th;
            list.insert(list.end(), bb.th.begin(), bb.th.end());
            Expr c = ca * cb;
            out.add_unsorted(ba.dt || bb.dt, ba.dx || bb.dx, std::move(list), neg ? -c : c);
        }
    return out;
}

Form total_x(const Form& w) {
    Form out(w.space(), w.r(), w.s());
    for (auto& [b, c] : w.terms()) {
        out.add(b, Dx(c));
        for (std::size_t k = 0; k < b.th.size(); ++k) {
            std::vector<CIdx> list = b.th;
            list[k].i += 1;
            out.add_unsorted(b.dt, b.dx, std::move(list), c);
        }
    }
    return out;
}

Form total_t(const Form& w, const EqContext* ctx) {
    Form out(w.space(), w.r(), w.s());
    switch (w.space()) {
    case Space::SemiBasic: throw FormError("no T on the semibasic space");
    case Space::Free:
        for (auto& [b, c] : w.terms()) {
            out.add(b, Dt(c));
            for (std::size_t k = 0; k < b.th.size(); ++k) {
                std::vector<CIdx> list = b.th;
                list[k].a += 1;
                out.add_unsorted(b.dt, b.dx, std::move(list), c);
            }
        }
        return out;
    case Space::Eqn:
        if (!ctx) throw FormError("T on the equation manifold needs an equation context");
        for (auto& [b, c] : w.terms()) {
            out.add(b, ctx->T(c));
            for (std::size_t k = 0; k < b.th.size(); ++k)
                for (auto& [j, tc] : ctx->T_theta(b.th[k].i)) {
                    std::vector<CIdx> list = b.th;
                    list[k].i = j;
                    out.add_unsorted(b.dt, b.dx, std::move(list), c * tc);
                }
        }
        return out;
    }
    return out;
}

Form d_h(const Form& w, const EqContext* ctx) {
    if (w.r() + 1 > max_r(w.space())) throw FormError("d_H of a form of top horizontal degree");
    Form out = wedge(Form::dx(w.space()), total_x(w));
    if (w.space() != Space::SemiBasic) out = out + wedge(Form::dt(w.space()), total_t(w, ctx));
    if (out.is_zero()) return Form(w.space(), w.r() + 1, w.s());
    return out;
}

Form d_v(const Expr& f, Space space) {
    Form out(space, 0, 1);
    for (auto& c : f.coords()) {
        if (!c.is_jet()) continue;
        if (space != Space::Free && c.a > 0) throw FormError("t-jets are not coordinates off the free space");
        out.add(Basis{false, false, {CIdx{c.a, c.i}}}, partial(f, c));
    }
    return out;
}

Form d_v(const Form& w) {
    Form out(w.space(), w.r(), w.s() + 1);
    bool neg = w.r() % 2 == 1;
    for (auto& [b, c] : w.terms()) {
        for (auto& jc : c.coords()) {
            if (!jc.is_jet()) continue;
            if (w.space() != Space::Free && jc.a > 0) throw FormError("t-jets are not coordinates off the free space");
            Expr p = partial(c, jc);
            if (p.is_zero()) continue;
            std::vector<CIdx> list{CIdx{jc.a, jc.i}};
            list.insert(list.end(), b.th.begin(), b.th.end());
            out.add_unsorted(b.dt, b.dx, std::move(list), neg ? -p : p);
        }
    }
    return out;
}

Form interior(const CIdx& c, const Form& w) {
    if (w.s() == 0) return Form(w.space(), w.r(), 0);
    Form out(w.space(), w.r(), w.s() - 1);
    for (auto& [b, coef] : w.terms()) {
        auto it = std::find(b.th.begin(), b.th.end(), c);
        if (it == b.th.end()) continue;
        std::size_t k = static_cast<std::size_t>(it - b.th.begin());
        bool neg = (w.r() + static_cast<int>(k)) % 2 == 1;
        std::vector<CIdx> list = b.th;
        list.erase(list.begin() + static_cast<long>(k));
        out.add(Basis{b.dt, b.dx, std::move(list)}, neg ? -coef : coef);
    }
    return out;
}

Expr euler_lagrange(const Expr& L, Space space) {
    Expr r;
    for (auto& c : L.coords()) {
        if (!c.is_jet()) continue;
        if (space != Space::Free && c.a > 0) throw SpaceError("t-jets are not coordinates off the free space");
        Expr p = partial(L, c);
        for (int k = 0; k < c.a; ++k) p = -Dt(p);
        for (int k = 0; k < c.i; ++k) p = -Dx(p);
        r += p;
    }
    return r;
}

namespace {

std::vector<CIdx> contact_indices(const Form& w) {
    std::vector<CIdx> v;
    for (auto& [b, c] : w.terms()) v.insert(v.end(), b.th.begin(), b.th.end());
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

void check_top(const Form& w) {
    if (w.space() == Space::Eqn) throw FormError("interior Euler operator is defined on the free and semibasic spaces");
    if (w.r() != max_r(w.space())) throw FormError("interior Euler operator needs top horizontal degree");
    if (w.s() < 1) throw FormError("interior Euler operator needs vertical degree >= 1");
}

}  // namespace

Form interior_euler(const Form& w) {
    check_top(w);
    Form out(w.space(), w.r(), w.s() - 1);
    for (auto& c : contact_indices(w)) {
        Form p = interior(c, w);
        for (int k = 0; k < c.a; ++k) p = -total_t(p, nullptr);
        for (int k = 0; k < c.i; ++k) p = -total_x(p);
        out = out + p;
    }
    return out;
}

Form ibp(const Form& w) {
    check_top(w);
    Form j = interior_euler(w);
    return wedge(Form::theta(w.space(), 0), j).scaled(Expr(mpq_class(1, w.s())));
}

Form delta_v(const Form& w) {
    if (w.space() != Space::SemiBasic) throw FormError("delta_V is defined on the semibasic space");
    if (!(ibp(w) == w)) throw FormError("delta_V needs a functional form (I(w) = w)");
    return ibp(d_v(w));
}

Form project_sb(const Form& w) {
    if (w.space() != Space::Eqn) throw FormError("projection starts from the equation manifold");
    Form out(Space::SemiBasic, std::min(w.r(), 1), w.s());
    for (auto& [b, c] : w.terms())
        if (!b.dt) out.add(b, c);
    if (w.r() == 2) return Form(Space::SemiBasic, 1, w.s());
    return out;
}

Form apply(const DiffOperator& p, const Form& w, const EqContext* ctx) {
    if (p.space() != w.space()) throw FormError("operator and form on different spaces");
    Form out(w.space(), w.r(), w.s());
    int amax = 0;
    for (auto& [k, c] : p.terms()) amax = std::max(amax, k.first);
    Form base = w;
    for (int a = 0; a <= amax; ++a) {
        if (a > 0) base = total_t(base, ctx);
        Form d = base;
        int last = 0;
        for (auto& [k, c] : p.terms()) {
            if (k.first != a) continue;
            for (; last < k.second; ++last) d = total_x(d);
            out = out + d.scaled(c);
        }
    }
    return out;
}

Form linearization_adjoint(const EqContext& ctx, const Form& rho) {
    if (rho.space() != Space::Eqn) throw FormError("linearization acts on the equation manifold");
    Form out = -total_t(rho, &ctx);
    for (int i = 0; i <= ctx.order(); ++i) {
        Expr ki = ctx.K_i(i);
        if (ki.is_zero()) continue;
        Form d = rho.scaled(ki);
        for (int k = 0; k < i; ++k) d = -total_x(d);
        out = out - d;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Vertical homotopy

namespace {

using WeightMap = std::map<JetCoord, Rat>;

struct Weigher {
    const WeightMap& w;
    std::map<AtomId, std::optional<Rat>> memo;

    std::optional<Rat> atom(AtomId id) {
        auto it = memo.find(id);
        if (it != memo.end()) return it->second;
        const AtomInfo& info = atom_info(id);
        std::optional<Rat> r;
        switch (info.kind) {
        case AtomKind::Jet: {
            auto f = w.find(info.coord);
            r = f == w.end() ? Rat(0) : f->second;
            break;
        }
        case AtomKind::Func: {
            // Opaque symbols are homogeneous only when every argument has weight zero.
            bool weighted = false;
            for (auto& c : info.deps) {
                auto f = c.is_jet() ? w.find(c) : w.end();
                if (f != w.end() && !f->second.is_zero()) weighted = true;
            }
            if (!weighted) r = Rat(0);
            break;
        }
        case AtomKind::Radical: r = poly(info.radicand); break;
        default: r = Rat(0);
        }
        memo.emplace(id, r);
        return r;
    }

    std::optional<Rat> mono(const Monomial& m) {
        Rat s(0);
        for (auto& f : m) {
            auto a = atom(f.atom);
            if (!a) return std::nullopt;
            s += *a * f.exp;
        }
        return s;
    }

    // Common weight of all terms, if homogeneous.
    std::optional<Rat> poly(const Poly& p) {
        std::optional<Rat> r;
        for (auto& t : p.terms) {
            auto m = mono(t.mono);
            if (!m || (r && *r != *m)) return std::nullopt;
            r = m;
        }
        return r ? r : Rat(0);
    }

    std::optional<Rat> den(const Expr& e) {
        Rat s(0);
        for (auto& d : e.den()) {
            auto a = atom(d.atom);
            if (!a) return std::nullopt;
            s += *a * Rat(d.power);
        }
        return s;
    }
};

std::optional<Form> weighted_homotopy(const Form& w, const WeightMap& weights) {
    Weigher g{weights, {}};
    Form out(w.space(), w.r(), w.s() - 1);
    bool neg_h = w.r() % 2 == 1;
    for (auto& [b, c] : w.terms()) {
        auto dw = g.den(c);
        if (!dw) return std::nullopt;
        Rat cw(0);
        for (auto& k : b.th) {
            auto f = weights.find(k.coord());
            cw += f == weights.end() ? Rat(0) : f->second;
        }
        Expr den = Expr::make(poly_const(1), c.den());
        for (auto& t : c.num().terms) {
            auto mw = g.mono(t.mono);
            if (!mw) return std::nullopt;
            Rat W = *mw - *dw + cw;
            if (W.is_zero()) return std::nullopt;
            Expr piece = Expr::make(Poly{{t}}, {}) * den * rat_expr(Rat(1) / W);
            for (std::size_t k = 0; k < b.th.size(); ++k) {
                auto f = weights.find(b.th[k].coord());
                if (f == weights.end() || f->second.is_zero()) continue;
                std::vector<CIdx> list = b.th;
                list.erase(list.begin() + static_cast<long>(k));
                Expr v = piece * rat_expr(f->second) * Expr::coord(b.th[k].coord());
                bool neg = neg_h != (k % 2 == 1);
                out.add(Basis{b.dt, b.dx, std::move(list)}, neg ? -v : v);
            }
        }
    }
    return out;
}

std::vector<JetCoord> jets_of(const Form& w) {
    std::vector<JetCoord> v;
    for (auto& [b, c] : w.terms()) {
        for (auto& j : c.coords())
            if (j.is_jet()) v.push_back(j);
        for (auto& k : b.th) v.push_back(k.coord());
    }
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

Expr lambda_atom() { return Expr::param("lambda_"); }

// Integral over [0,1] in lambda of a polynomial in lambda.
std::optional<Expr> integrate_lambda(const Expr& e) {
    AtomId lam = param_atom("lambda_");
    for (auto& d : e.den())
        for (auto& t : atom_info(d.atom).radicand.terms)
            for (auto& f : t.mono)
                if (f.atom == lam) return std::nullopt;
    PolyBuilder pb;
    for (auto& t : e.num().terms) {
        Monomial m;
        Rat k(0);
        for (auto& f : t.mono) {
            if (f.atom == lam) k = f.exp;
            else if (atom_info(f.atom).kind == AtomKind::Radical) {
                for (auto& rt : atom_info(f.atom).radicand.terms)
                    for (auto& rf : rt.mono)
                        if (rf.atom == lam) return std::nullopt;
                m.push_back(f);
            } else {
                m.push_back(f);
            }
        }
        if (!k.is_integer() || k < Rat(0)) return std::nullopt;
        pb.add(std::move(m), t.coef / (k.num() + 1));
    }
    return Expr::make(pb.finish(), {}) * Expr::make(poly_const(1), e.den());
}

Form straight_line_homotopy(const Form& w, const std::map<JetCoord, Expr>& base) {
    Expr lam = lambda_atom();
    std::map<JetCoord, Expr> shift;
    auto jets = jets_of(w);
    for (auto& j : jets) {
        auto it = base.find(j);
        Expr u0 = it == base.end() ? Expr() : it->second;
        shift[j] = u0 + lam * (Expr::coord(j) - u0);
    }
    Form out(w.space(), w.r(), w.s() - 1);
    bool neg_h = w.r() % 2 == 1;
    for (auto& [b, c] : w.terms()) {
        Expr pulled;
        try {
            pulled = substitute(c, shift) * lam.pow(Rat(b.s() - 1));
        } catch (const std::domain_error&) {
            throw HomotopyError("homotopy failed: pull-back leaves the supported fragment; supply witness manually");
        }
        auto integral = integrate_lambda(pulled);
        if (!integral) throw HomotopyError("homotopy failed: lambda-integral has a pole or is not elementary; supply witness manually");
        for (std::size_t k = 0; k < b.th.size(); ++k) {
            JetCoord j = b.th[k].coord();
            auto it = base.find(j);
            Expr u0 = it == base.end() ? Expr() : it->second;
            std::vector<CIdx> list = b.th;
            list.erase(list.begin() + static_cast<long>(k));
            Expr v = *integral * (Expr::coord(j) - u0);
            bool neg = neg_h != (k % 2 == 1);
            out.add(Basis{b.dt, b.dx, std::move(list)}, neg ? -v : v);
        }
    }
    return out;
}

}  // namespace

Form vertical_homotopy(const Form& w, const HomotopyOptions& opt) {
    if (w.s() < 1) throw HomotopyError("vertical homotopy needs vertical degree >= 1");
    if (w.is_zero()) return Form(w.space(), w.r(), w.s() - 1);
    if (!opt.base.empty()) return straight_line_homotopy(w, opt.base);
    auto jets = jets_of(w);
    std::vector<WeightMap> candidates;
    auto make = [&](auto f) {
        WeightMap m;
        for (auto& j : jets) m[j] = Rat(f(j));
        candidates.push_back(std::move(m));
    };
    // x-scaling first: it leaves u-free coefficients untouched.
    make([](const JetCoord& j) { return j.i + 3 * j.a; });
    make([](const JetCoord&) { return 1; });
    make([](const JetCoord& j) { return 1 + j.i + j.a; });
    make([](const JetCoord& j) { return 2 + j.i + 2 * j.a; });
    std::mt19937 rng(12345);
    std::uniform_int_distribution<int> dist(1, 9);
    for (int k = 0; k < 300; ++k) make([&](const JetCoord&) { return dist(rng); });
    for (auto& c : candidates)
        if (auto h = weighted_homotopy(w, c)) return *h;
    throw HomotopyError("homotopy failed: no fiber scaling makes every term homogeneous of nonzero weight; supply witness manually");
}

// ---------------------------------------------------------------------------
// Inverting the Euler operator and total x-derivative

namespace {

// sum_k sum_{j<k} D^j(P) (-D)^{k-1-j} (dA/du_k) over x-jets.
Expr pairing(const Expr& A, const Expr& P) {
    Expr r;
    int n = A.x_order();
    std::vector<Expr> dp{P};
    for (int k = 1; k <= n; ++k) {
        Expr ak = partial(A, JetCoord::ux(k));
        if (ak.is_zero()) continue;
        while (static_cast<int>(dp.size()) < k) dp.push_back(Dx(dp.back()));
        Expr m = ak;
        // m = (-D)^{k-1-j} a_k for j = k-1 down to 0.
        for (int j = k - 1; j >= 0; --j) {
            r += dp[static_cast<std::size_t>(j)] * m;
            m = -Dx(m);
        }
    }
    return r;
}

}  // namespace

std::optional<Expr> lagrangian_of(const Expr& G, Space space) {
    if (G.is_zero()) return Expr();
    Grader g{space == Space::Free, {}};
    auto parts = g.split(G);
    if (!parts) return std::nullopt;
    Expr L;
    for (auto& [gr, part] : *parts) {
        if (gr.d != Rat(-1)) {
            Rat f = Rat(1) / (gr.d + Rat(1));
            L += Expr::coord(JetCoord::u(0, 0)) * part * rat_expr(f);
        } else if (gr.wx != Rat(1)) {
            Rat f = Rat(1) / (gr.wx - Rat(1));
            L += Expr::coord(JetCoord::x()) * Expr::coord(JetCoord::ux(1)) * part * rat_expr(f);
        } else if (space == Space::Free && gr.wt != Rat(1)) {
            Rat f = Rat(1) / (gr.wt - Rat(1));
            L += Expr::coord(JetCoord::t()) * Expr::coord(JetCoord::u(1, 0)) * part * rat_expr(f);
        } else {
            return std::nullopt;
        }
    }
    if (!(euler_lagrange(L, space) - G).is_zero()) return std::nullopt;
    return L;
}

std::optional<Expr> integrate_x(const Expr& A) {
    if (A.is_zero()) return Expr();
    if (has_t_jets(A)) return std::nullopt;
    Grader g{false, {}};
    auto parts = g.split(A);
    if (!parts) return std::nullopt;
    Expr f;
    for (auto& [gr, part] : *parts) {
        if (gr.d != Rat(0)) {
            Rat c = Rat(1) / gr.d;
            f += pairing(part, Expr::coord(JetCoord::u(0, 0))) * rat_expr(c);
        } else if (gr.wx != Rat(1)) {
            Rat c = Rat(1) / (gr.wx - Rat(1));
            Expr q = Expr::coord(JetCoord::x()) * Expr::coord(JetCoord::ux(1));
            f += (pairing(part, q) - Expr::coord(JetCoord::x()) * part) * rat_expr(c);
        } else {
            return std::nullopt;
        }
    }
    if (!(Dx(f) - A).is_zero()) return std::nullopt;
    return f;
}

std::optional<Expr> multiplicative_witness(const Expr& A, const Expr& B, const EqContext& ctx) {
    if (A.is_zero() && B.is_zero()) return Expr(1);
    // Candidate bases: coordinates and radicands occurring in A and B.
    std::vector<AtomId> bases;
    auto collect = [&](const Expr& e) {
        for (auto& t : e.num().terms)
            for (auto& f : t.mono) bases.push_back(f.atom);
        for (auto& d : e.den()) bases.push_back(d.atom);
    };
    collect(A);
    collect(B);
    std::sort(bases.begin(), bases.end());
    bases.erase(std::unique(bases.begin(), bases.end()), bases.end());
    std::vector<Expr> base_exprs;
    for (AtomId a : bases) {
        const AtomInfo& info = atom_info(a);
        if (info.kind == AtomKind::Time || info.kind == AtomKind::Space || info.kind == AtomKind::Jet)
            base_exprs.push_back(Expr::atom(a));
        else if (info.kind == AtomKind::Radical)
            base_exprs.push_back(Expr::make(info.radicand, {}));
    }
    auto unknowns = LinearSystem::make_unknowns("e_", base_exprs.size());
    Expr ex, et;
    for (std::size_t k = 0; k < base_exprs.size(); ++k) {
        Expr inv = base_exprs[k].inverse();
        Expr e = Expr::atom(unknowns[k]);
        ex += e * ctx.X(base_exprs[k]) * inv;
        et += e * ctx.T(base_exprs[k]) * inv;
    }
    LinearSystem sys(unknowns);
    sys.add(ex - A);
    sys.add(et - B);
    auto sol = sys.solve();
    if (!sol) return std::nullopt;
    Expr R(1);
    for (std::size_t k = 0; k < base_exprs.size(); ++k) {
        auto q = (*sol)[k].as_rational();
        if (!q) return std::nullopt;
        if (*q == 0) continue;
        R *= base_exprs[k].pow(Rat(mpz_class(q->get_num()).get_si(), mpz_class(q->get_den()).get_si()));
    }
    if (!(ctx.X(R) - A * R).is_zero() || !(ctx.T(R) - B * R).is_zero()) return std::nullopt;
    return R;
}

std::optional<Form> integrate_x_contact(const Form& alpha) {
    if (alpha.r() != 0) throw FormError("contact integration expects a form without horizontal part");
    Form xi(alpha.space(), 0, alpha.s());
    Form rem = alpha;
    auto revlex = [](const Basis& p, const Basis& q) {
        return std::lexicographical_compare(p.th.rbegin(), p.th.rend(), q.th.rbegin(), q.th.rend());
    };
    for (int iter = 0; !rem.is_zero(); ++iter) {
        if (iter > 10000) return std::nullopt;
        auto lead = rem.terms().begin();
        for (auto it = rem.terms().begin(); it != rem.terms().end(); ++it)
            if (revlex(lead->first, it->first)) lead = it;
        Basis b = lead->first;
        Expr c = lead->second;
        std::size_t s = b.th.size();
        if (b.th[s - 1].i == 0 || (s > 1 && b.th[s - 1].i - 1 == b.th[s - 2].i)) return std::nullopt;
        b.th[s - 1].i -= 1;
        Form piece(alpha.space(), 0, alpha.s());
        piece.add(b, c);
        xi = xi + piece;
        rem = rem - total_x(piece);
    }
    return xi;
}

// ---------------------------------------------------------------------------

namespace {

struct FormAlg {
    using Value = Form;
    Space space;

    Value from_expr(const Expr& e) { return Form::function(e, space); }
    std::optional<Value> ident(const std::string& n) {
        if (n == "dx") return Form::dx(space);
        if (n == "dt") return Form::dt(space);
        static const std::regex th("th([0-9]+)(_E)?");
        static const std::regex zeta("zeta([0-9]+)_([0-9]+)");
        std::smatch m;
        if (std::regex_match(n, m, th)) return Form::theta(space, std::stoi(m[1]));
        if (std::regex_match(n, m, zeta)) return Form::theta(space, std::stoi(m[2]), std::stoi(m[1]));
        return std::nullopt;
    }
    static std::optional<Expr> scalar(const Value& v) {
        if (v.r() != 0 || v.s() != 0) return std::nullopt;
        return v.coef(Basis{});
    }
    Value add(const Value& a, const Value& b) { return a + b; }
    Value sub(const Value& a, const Value& b) { return a - b; }
    Value neg(const Value& a) { return -a; }
    Value mul(const Value& a, const Value& b, std::size_t) { return wedge(a, b); }
    Value div(const Value& a, const Value& b, std::size_t pos) {
        auto s = scalar(b);
        if (!s) throw ParseError("can only divide by a function", pos);
        if (s->is_zero()) throw ParseError("division by zero", pos);
        return a.scaled(s->inverse());
    }
    Value pow(const Value& a, const Value& b, std::size_t pos) {
        auto sa = scalar(a), sb = scalar(b);
        if (sa && sb) {
            auto r = sb->as_rational();
            if (!r) throw ParseError("exponent must be a rational constant", pos);
            try {
                return from_expr(sa->pow(Rat(mpz_class(r->get_num()).get_si(), mpz_class(r->get_den()).get_si())));
            } catch (const std::domain_error& e) {
                throw ParseError(e.what(), pos);
            }
        }
        return wedge(a, b);
    }
    Value compose(const Value&, const Value&) { throw ParseError("'@' is not defined for forms", 0); }
};

}  // namespace

Form parse_form(std::string_view src, Decls& decls, Space space) {
    FormAlg alg{space};
    Parser<FormAlg> p(tokenize(src), decls, alg);
    return p.parse_all();
}

}  // namespace jetvar
