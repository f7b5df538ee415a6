#include "jetvar/jet.hpp"

#include <stdexcept>

namespace jetvar {

std::string to_string(Space s) {
    switch (s) {
    case Space::Free: return "free";
    case Space::Eqn: return "equation";
    case Space::SemiBasic: return "semibasic";
    }
    return "?";
}

namespace {

bool has_t_jets(const Expr& e) {
    for (auto& c : e.coords())
        if (c.is_jet() && c.a > 0) return true;
    return false;
}

Expr free_dx(const Expr& e) {
    return derive(e, [](const JetCoord& c) -> Expr {
        if (c.kind == JetCoord::Kind::X) return Expr(1);
        if (c.kind == JetCoord::Kind::T) return Expr();
        return Expr::coord(JetCoord::u(c.a, c.i + 1));
    });
}

Expr free_dt(const Expr& e) {
    return derive(e, [](const JetCoord& c) -> Expr {
        if (c.kind == JetCoord::Kind::T) return Expr(1);
        if (c.kind == JetCoord::Kind::X) return Expr();
        return Expr::coord(JetCoord::u(c.a + 1, c.i));
    });
}

mpz_class binom(int n, int k) {
    mpz_class r;
    mpz_bin_uiui(r.get_mpz_t(), static_cast<unsigned long>(n), static_cast<unsigned long>(k));
    return r;
}

}  // namespace

Expr Dx(const Expr& e) { return free_dx(e); }
Expr Dt(const Expr& e) { return free_dt(e); }
Expr Dx_pow(const Expr& e, int k) {
    Expr r = e;
    for (int j = 0; j < k; ++j) r = free_dx(r);
    return r;
}

// ---------------------------------------------------------------------------

EqContext::EqContext(Expr k) : k_(std::move(k)), cache_(std::make_shared<Cache>()) {
    if (has_t_jets(k_)) throw std::invalid_argument("right-hand side must not contain t-derivatives of u");
    n_ = k_.x_order();
    if (n_ < 0) throw std::invalid_argument("right-hand side must depend on u or its x-derivatives");
    for (int i = 0; i <= n_; ++i) ki_.push_back(partial(k_, JetCoord::ux(i)));
}

Expr EqContext::K_i(int i) const { return i >= 0 && i <= n_ ? ki_[static_cast<std::size_t>(i)] : Expr(); }

Expr EqContext::X(const Expr& e) const { return free_dx(e); }

Expr EqContext::XK(int i) const { return jet_value(1, i); }

Expr EqContext::jet_value(int a, int i) const {
    if (a == 0) return Expr::coord(JetCoord::ux(i));
    {
        std::lock_guard lock(cache_->mu);
        auto it = cache_->jets.find({a, i});
        if (it != cache_->jets.end()) return it->second;
    }
    Expr v;
    if (a == 1 && i == 0) v = k_;
    else if (i > 0) v = X(jet_value(a, i - 1));
    else v = T(jet_value(a - 1, 0));
    std::lock_guard lock(cache_->mu);
    return cache_->jets.emplace(std::make_pair(a, i), v).first->second;
}

Expr EqContext::T(const Expr& e) const {
    if (has_t_jets(e)) throw SpaceError("T applies to functions on the equation manifold (no t-jets)");
    return derive(e, [this](const JetCoord& c) -> Expr {
        if (c.kind == JetCoord::Kind::T) return Expr(1);
        if (c.kind == JetCoord::Kind::X) return Expr();
        return XK(c.i);
    });
}

Expr EqContext::XK_i(int k, int j) const {
    if (j < 0 || j > n_) return Expr();
    if (k == 0) return ki_[static_cast<std::size_t>(j)];
    {
        std::lock_guard lock(cache_->mu);
        auto it = cache_->xkj.find({k, j});
        if (it != cache_->xkj.end()) return it->second;
    }
    Expr v = X(XK_i(k - 1, j));
    std::lock_guard lock(cache_->mu);
    return cache_->xkj.emplace(std::make_pair(k, j), v).first->second;
}

std::map<int, Expr> EqContext::T_theta(int i) const {
    {
        std::lock_guard lock(cache_->mu);
        auto it = cache_->ttheta.find(i);
        if (it != cache_->ttheta.end()) return it->second;
    }
    std::map<int, Expr> out;
    for (int j = 0; j <= n_; ++j)
        for (int k = 0; k <= i; ++k) {
            Expr c = XK_i(k, j);
            if (c.is_zero()) continue;
            Expr& slot = out[j + i - k];
            slot += c * Expr(mpq_class(binom(i, k)));
            if (slot.is_zero()) out.erase(j + i - k);
        }
    std::lock_guard lock(cache_->mu);
    return cache_->ttheta.emplace(i, out).first->second;
}

Expr EqContext::restrict(const Expr& e) const {
    std::map<JetCoord, Expr> b;
    for (auto& c : e.coords())
        if (c.is_jet() && c.a > 0) b[c] = jet_value(c.a, c.i);
    return substitute(e, b);
}

Expr total_derivative(const Expr& e, Dir dir, Space space, const EqContext* ctx) {
    switch (space) {
    case Space::Free:
        if (ctx) throw SpaceError("no equation context on the free jet space");
        return dir == Dir::X ? free_dx(e) : free_dt(e);
    case Space::Eqn:
        if (has_t_jets(e)) throw SpaceError("t-jets are not coordinates on the equation manifold");
        if (dir == Dir::X) return free_dx(e);
        if (!ctx) throw SpaceError("T on the equation manifold needs an equation context");
        return ctx->T(e);
    case Space::SemiBasic:
        if (has_t_jets(e)) throw SpaceError("t-jets are not coordinates on the semibasic space");
        if (dir == Dir::T) throw SpaceError("no T on the semibasic space");
        return free_dx(e);
    }
    return Expr();
}

// ---------------------------------------------------------------------------

DiffOperator DiffOperator::mult(const Expr& c, Space s) {
    DiffOperator p(s);
    p.add_term(0, 0, c);
    return p;
}

DiffOperator DiffOperator::Dx(Space s, int k) {
    DiffOperator p(s);
    p.add_term(0, k, Expr(1));
    return p;
}

DiffOperator DiffOperator::Dt(Space s, int k) {
    if (s == Space::SemiBasic) throw SpaceError("no D_t on the semibasic space");
    DiffOperator p(s);
    p.add_term(k, 0, Expr(1));
    return p;
}

Expr DiffOperator::coef(int a, int i) const {
    auto it = terms_.find({a, i});
    return it == terms_.end() ? Expr() : it->second;
}

void DiffOperator::add_term(int a, int i, const Expr& c) {
    if (c.is_zero()) return;
    if (a > 0 && space_ == Space::SemiBasic) throw SpaceError("no D_t on the semibasic space");
    auto [it, inserted] = terms_.try_emplace({a, i}, c);
    if (!inserted) {
        it->second += c;
        if (it->second.is_zero()) terms_.erase(it);
    }
}

int DiffOperator::order() const {
    int m = -1;
    for (auto& [k, c] : terms_) m = std::max(m, k.first + k.second);
    return m;
}

std::optional<Expr> DiffOperator::as_scalar() const {
    if (order() > 0) return std::nullopt;
    return coef(0, 0);
}

Expr DiffOperator::apply(const Expr& e, const EqContext* ctx) const {
    Expr r;
    int amax = 0;
    for (auto& [k, c] : terms_) amax = std::max(amax, k.first);
    Expr base = e;
    for (int a = 0; a <= amax; ++a) {
        if (a > 0) base = total_derivative(base, Dir::T, space_, space_ == Space::Free ? nullptr : ctx);
        Expr d = base;
        int last = 0;
        for (auto& [k, c] : terms_) {
            if (k.first != a) continue;
            for (; last < k.second; ++last) d = free_dx(d);
            r += c * d;
        }
    }
    return r;
}

void DiffOperator::check_space(const DiffOperator& o) const {
    if (o.space_ != space_) throw SpaceError("operators on different spaces: " + to_string(space_) + " vs " + to_string(o.space_));
}

DiffOperator DiffOperator::operator+(const DiffOperator& o) const {
    check_space(o);
    DiffOperator r = *this;
    for (auto& [k, c] : o.terms_) r.add_term(k.first, k.second, c);
    return r;
}

DiffOperator DiffOperator::operator-() const {
    DiffOperator r(space_);
    for (auto& [k, c] : terms_) r.terms_.emplace(k, -c);
    return r;
}

DiffOperator DiffOperator::operator-(const DiffOperator& o) const { return *this + (-o); }

DiffOperator DiffOperator::scaled(const Expr& c) const {
    DiffOperator r(space_);
    for (auto& [k, d] : terms_) r.add_term(k.first, k.second, c * d);
    return r;
}

bool operator==(const DiffOperator& p, const DiffOperator& q) {
    if (p.space_ != q.space_ || p.terms_.size() != q.terms_.size()) return false;
    for (auto& [k, c] : p.terms_) {
        auto it = q.terms_.find(k);
        if (it == q.terms_.end() || !(it->second == c)) return false;
    }
    return true;
}

std::string DiffOperator::str(const FormatOptions& opt) const {
    if (terms_.empty()) return "0";
    std::vector<std::pair<Key, Expr>> v(terms_.begin(), terms_.end());
    std::stable_sort(v.begin(), v.end(), [](const auto& p, const auto& q) {
        int sp = p.first.first + p.first.second, sq = q.first.first + q.first.second;
        if (sp != sq) return sp > sq;
        return p.first.first > q.first.first;
    });
    std::string s;
    for (auto& [k, c] : v) {
        std::string d;
        if (k.first) d += k.first == 1 ? "Dt" : "Dt^" + std::to_string(k.first);
        if (k.second) {
            if (!d.empty()) d += "*";
            d += k.second == 1 ? "Dx" : "Dx^" + std::to_string(k.second);
        }
        std::string cs = c.str(opt);
        bool simple = c.den().empty() && c.term_count() == 1;
        std::string piece;
        if (d.empty()) piece = simple ? cs : "(" + cs + ")";
        else if (c == Expr(1)) piece = d;
        else if (c == Expr(-1)) piece = "-" + d;
        else piece = (simple ? cs : "(" + cs + ")") + "*" + d;
        if (s.empty()) s = piece;
        else if (piece[0] == '-') s += " - " + piece.substr(1);
        else s += " + " + piece;
    }
    return s;
}

DiffOperator compose(const DiffOperator& p, const DiffOperator& q) {
    if (p.space() != q.space()) throw SpaceError("composition of operators on different spaces");
    Space s = p.space();
    if (s != Space::Free)
        for (auto& [k, c] : p.terms())
            if (k.first > 0) throw SpaceError("composition with T on the equation manifold is not supported");
    DiffOperator r(s);
    for (auto& [qk, d] : q.terms()) {
        // Derivatives of d needed by p, memoized over (b, j).
        std::map<std::pair<int, int>, Expr> memo;
        auto deriv = [&](int b, int j) -> Expr {
            auto it = memo.find({b, j});
            if (it != memo.end()) return it->second;
            Expr v = d;
            for (int x = 0; x < b; ++x) v = free_dt(v);
            for (int x = 0; x < j; ++x) v = free_dx(v);
            return memo.emplace(std::make_pair(b, j), v).first->second;
        };
        for (auto& [pk, c] : p.terms()) {
            for (int b = 0; b <= pk.first; ++b)
                for (int j = 0; j <= pk.second; ++j) {
                    Expr dd = deriv(b, j);
                    if (dd.is_zero()) continue;
                    mpz_class w = binom(pk.first, b) * binom(pk.second, j);
                    r.add_term(pk.first - b + qk.first, pk.second - j + qk.second, c * dd * Expr(mpq_class(w)));
                }
        }
    }
    return r;
}

DiffOperator adjoint(const DiffOperator& p) {
    DiffOperator r(p.space());
    for (auto& [k, c] : p.terms()) {
        DiffOperator d(p.space());
        d.add_term(k.first, k.second, Expr((k.first + k.second) % 2 ? -1 : 1));
        r = r + compose(d, DiffOperator::mult(c, p.space()));
    }
    return r;
}

bool is_skew(const DiffOperator& p) { return (adjoint(p) + p).is_zero(); }
bool is_self_adjoint(const DiffOperator& p) { return (adjoint(p) - p).is_zero(); }

DiffOperator frechet(const Expr& p, Space space) {
    DiffOperator r(space);
    for (auto& c : p.coords()) {
        if (!c.is_jet()) continue;
        if (space != Space::Free && c.a > 0) throw SpaceError("t-jets are not coordinates off the free jet space");
        r.add_term(c.a, c.i, partial(p, c));
    }
    return r;
}

DiffOperator retag(const DiffOperator& p, Space s) {
    DiffOperator r(s);
    for (auto& [k, c] : p.terms()) {
        if (s != Space::Free && (k.first > 0 || has_t_jets(c)))
            throw SpaceError("operator involves t-derivatives; cannot move it to the " + to_string(s) + " space");
        r.add_term(k.first, k.second, c);
    }
    return r;
}

DiffOperator lift(const DiffOperator& p) {
    for (auto& [k, c] : p.terms())
        if (has_t_jets(c)) throw SpaceError("cannot lift: coefficient contains t-jets: " + c.str());
    return retag(p, Space::Free);
}

DiffOperator project(const DiffOperator& p, const EqContext& ctx) {
    DiffOperator r(Space::Eqn);
    for (auto& [k, c] : p.terms()) {
        if (k.first > 0) throw SpaceError("cannot project an operator containing D_t");
        r.add_term(0, k.second, ctx.restrict(c));
    }
    return r;
}

Expr Linearization::apply(const Expr& rho) const {
    Expr r = ctx->T(rho);
    Expr d = rho;
    for (int i = 0; i <= ctx->order(); ++i) {
        if (i) d = free_dx(d);
        r -= ctx->K_i(i) * d;
    }
    return r;
}

Expr Linearization::adjoint_apply(const Expr& rho) const {
    Expr r = -ctx->T(rho);
    for (int i = 0; i <= ctx->order(); ++i) {
        Expr d = ctx->K_i(i) * rho;
        for (int j = 0; j < i; ++j) d = -free_dx(d);
        r -= d;
    }
    return r;
}

Linearization linearization(const EqContext& ctx) { return Linearization{&ctx}; }

// ---------------------------------------------------------------------------

namespace {

struct OperatorAlg {
    using Value = DiffOperator;
    Space space;

    Value from_expr(const Expr& e) { return DiffOperator::mult(e, space); }
    std::optional<Value> ident(const std::string& n) {
        if (n == "Dx") return DiffOperator::Dx(space);
        if (n == "Dt") return DiffOperator::Dt(space);
        return std::nullopt;
    }
    Value add(const Value& a, const Value& b) { return a + b; }
    Value sub(const Value& a, const Value& b) { return a - b; }
    Value neg(const Value& a) { return -a; }
    Value mul(const Value& a, const Value& b, std::size_t) { return compose(a, b); }
    Value div(const Value& a, const Value& b, std::size_t pos) {
        auto s = b.as_scalar();
        if (!s) throw ParseError("can only divide by a function", pos);
        if (s->is_zero()) throw ParseError("division by zero", pos);
        return compose(a, DiffOperator::mult(s->inverse(), space));
    }
    Value pow(const Value& a, const Value& b, std::size_t pos) {
        auto e = b.as_scalar();
        std::optional<mpq_class> r;
        if (e) r = e->as_rational();
        if (!r) throw ParseError("exponent must be a rational constant", pos);
        if (auto s = a.as_scalar()) {
            try {
                return DiffOperator::mult(s->pow(Rat(mpz_class(r->get_num()).get_si(), mpz_class(r->get_den()).get_si())), space);
            } catch (const std::domain_error& err) {
                throw ParseError(err.what(), pos);
            }
        }
        if (r->get_den() != 1 || *r < 0) throw ParseError("operator powers must be non-negative integers", pos);
        Value out = DiffOperator::identity(space);
        for (long k = 0; k < mpz_class(r->get_num()).get_si(); ++k) out = compose(out, a);
        return out;
    }
    Value compose(const Value& a, const Value& b) { return jetvar::compose(a, b); }
};

}  // namespace

DiffOperator parse_operator(std::string_view src, Decls& decls, Space space) {
    OperatorAlg alg{space};
    Parser<OperatorAlg> p(tokenize(src), decls, alg);
    return p.parse_all();
}

}  // namespace jetvar
