#include "jetvar/cohomology.hpp"

#include <algorithm>

#include "poly.hpp"

namespace jetvar {

namespace {

Form neg_x_pow(Form w, int k) {
    for (int j = 0; j < k; ++j) w = -total_x(w);
    return w;
}

void require_contact1(const Form& rho) {
    if (rho.r() != 0 || rho.s() != 1) throw FormError("expected a contact 1-form");
}

}  // namespace

Form rho_adjoint(const Form& rho) {
    require_contact1(rho);
    Form out(rho.space(), 0, 1);
    for (auto& [i, c] : rho.contact_coefs()) out = out + neg_x_pow(Form::theta(rho.space(), 0).scaled(c), i);
    return out;
}

Form beta_form(const Form& rho, const EqContext& ctx) {
    if (rho.r() != 0 || rho.s() > 1) throw FormError("beta expects a function or a contact 1-form");
    Form out(rho.space(), 0, rho.s() + 1);
    for (int i = 1; i <= ctx.order(); ++i) {
        Expr ki = ctx.K_i(i);
        if (ki.is_zero()) continue;
        Form p = rho.scaled(ki);
        for (int a = 1; a <= i; ++a) {
            out = out + wedge(p, Form::theta(rho.space(), i - a));
            p = -total_x(p);
        }
    }
    return out;
}

Form omega_of(const Form& epsilon, const EqContext& ctx) {
    Space s = epsilon.space();
    return wedge(Form::dx(s), wedge(Form::theta(s, 0), epsilon)) - wedge(Form::dt(s), beta_form(epsilon, ctx));
}

CanonicalClass certify_class(const Form& epsilon, const EqContext& ctx) {
    CanonicalClass c;
    c.epsilon = epsilon;
    c.omega = omega_of(epsilon, ctx);
    c.skew_residual = rho_adjoint(epsilon) + epsilon;
    c.closure_residual = d_h(c.omega, &ctx);
    c.lin_residual = wedge(Form::theta(Space::Eqn, 0), linearization_adjoint(ctx, epsilon));
    return c;
}

CanonicalClass omega_from_operator(const DiffOperator& E, const EqContext& ctx) {
    for (auto& [k, c] : E.terms()) {
        if (k.first != 0) throw OperatorError("operator has D_t terms");
        if (c.t_order() > 0) throw OperatorError("operator coefficients depend on t-jets");
    }
    DiffOperator e = retag(E, Space::Eqn);
    if (!is_skew(e)) throw OperatorError("operator is not skew-adjoint");
    std::map<int, Expr> eps;
    for (auto& [k, c] : e.terms()) eps[k.second] = c * Expr::rational(-1, 2);
    return certify_class(Form::contact(Space::Eqn, eps), ctx);
}

CanonicalResult canonical_representative(const Form& omega, const EqContext& ctx) {
    if (omega.space() != Space::Eqn || omega.r() != 1 || omega.s() != 2)
        throw FormError("expected a (1,2)-form on the equation manifold");
    if (!d_h(omega, &ctx).is_zero()) throw FormError("input is not d_H-closed");
    // Push the dx-part to theta^0 ^ rho modulo X-exact terms.
    Form rem = omega.horizontal_part(false, true);
    for (;;) {
        auto it = rem.terms().end();
        for (auto j = rem.terms().begin(); j != rem.terms().end(); ++j)
            if (j->first.th[0].i > 0 && (it == rem.terms().end() || j->first.th[0].i > it->first.th[0].i)) it = j;
        if (it == rem.terms().end()) break;
        Basis b = it->first;
        b.th[0].i -= 1;
        Form piece(Space::Eqn, 0, 2);
        piece.add(b, it->second);
        rem = rem - total_x(piece);
    }
    std::map<int, Expr> rho;
    for (auto& [b, c] : rem.terms()) rho[b.th[1].i] = c;
    Form r = Form::contact(Space::Eqn, rho);
    Form eps = (r - rho_adjoint(r)).scaled(Expr::rational(1, 2));
    CanonicalResult out{certify_class(eps, ctx), std::nullopt};
    Form diff = omega - out.cls.omega;
    auto xi = integrate_x_contact(diff.horizontal_part(false, true));
    if (xi && (diff - d_h(*xi, &ctx)).is_zero()) out.xi = *xi;
    return out;
}

std::optional<ClosedCorrection> dv_closed_representative(const Form& omega_hat, const EqContext& ctx,
                                                         const HomotopyOptions& opt) {
    Form dv = d_v(omega_hat);
    ClosedCorrection c;
    if (dv.is_zero()) {
        c.xi = Form(Space::Eqn, 0, 3);
        c.zeta = Form(Space::Eqn, 0, 2);
        c.omega = omega_hat;
        return c;
    }
    auto xi = integrate_x_contact(dv.horizontal_part(false, true));
    if (!xi || !(d_h(*xi, &ctx) == dv)) return std::nullopt;
    c.xi = *xi;
    c.zeta = vertical_homotopy(c.xi, opt);
    if (!(d_v(c.zeta) == c.xi)) return std::nullopt;
    c.omega = omega_hat + d_h(c.zeta, &ctx);
    return c;
}

LambdaResult lambda_invariant(const Form& omega, const EqContext& ctx, const HomotopyOptions& opt) {
    if (!d_v(omega).is_zero()) throw FormError("lambda map needs a d_V-closed representative");
    return lambda_for_eta(vertical_homotopy(omega, opt), ctx, opt);
}

LambdaResult lambda_for_eta(const Form& eta, const EqContext& ctx, const HomotopyOptions& opt) {
    LambdaResult r;
    r.eta = eta;
    Form dh = d_h(r.eta, &ctx);
    r.lambda = dh.is_zero() ? Form(Space::Eqn, 2, 0) : vertical_homotopy(dh, opt);
    Basis top{true, true, {}};
    auto red = divergence_reduce(r.lambda.coef(top));
    if (!red.F.is_zero()) {
        // lambda + d_H(F dt) pairs with eta - d_V(F dt).
        Form f = Form::dt(Space::Eqn).scaled(red.F);
        r.lambda = r.lambda + d_h(f, &ctx);
        r.eta = r.eta - d_v(f);
        dh = d_h(r.eta, &ctx);
    }
    r.residual = d_v(r.lambda) - dh;
    return r;
}

namespace {

bool depends_on(AtomId a, const JetCoord& c) {
    if (a == c.atom()) return true;
    const auto& deps = atom_info(a).deps;
    return std::find(deps.begin(), deps.end(), c) != deps.end();
}

}  // namespace

DivergenceReduction divergence_reduce(const Expr& L) {
    DivergenceReduction out{L, Expr()};
    for (int guard = 0; guard < 64; ++guard) {
        const Expr& cur = out.reduced;
        int n = cur.x_order();
        if (n < 1 || cur.t_order() > 0) break;
        JetCoord top = JetCoord::ux(n), below = JetCoord::ux(n - 1);
        AtomId ta = top.atom(), ba = below.atom();
        bool blocked = false;
        for (auto& d : cur.den()) blocked |= depends_on(d.atom, top) || depends_on(d.atom, below);
        if (blocked) break;
        detail::PolyBuilder F;
        for (auto& t : cur.num().terms) {
            if (detail::exponent_of(t.mono, ta) != Rat(1)) continue;
            Monomial m = detail::mono_without(t.mono, ta);
            Rat k = detail::exponent_of(m, ba);
            bool ok = k != Rat(-1);
            for (auto& f : m)
                if (f.atom != ba && (depends_on(f.atom, top) || depends_on(f.atom, below))) ok = false;
            if (!ok) {
                blocked = true;
                break;
            }
            Rat k1 = k + Rat(1);
            m = detail::mono_mul(detail::mono_without(m, ba), Monomial{Factor{ba, k1}});
            F.add(m, t.coef * mpq_class(mpz_class(k1.den()), mpz_class(k1.num())));
        }
        if (blocked) break;
        Expr f = Expr::make(F.finish(), cur.den());
        if (f.is_zero()) break;
        out.reduced = cur - Dx(f);
        out.F += f;
    }
    return out;
}

bool same_lambda_class(const Form& a, const Form& b) {
    Expr d = (a - b).coef(Basis{true, true, {}});
    return euler_lagrange(d, Space::SemiBasic).is_zero();
}

std::string to_string(Triviality t) {
    switch (t) {
    case Triviality::NotClosed: return "not a conservation law";
    case Triviality::Trivial: return "trivial";
    case Triviality::Nontrivial: return "nontrivial";
    case Triviality::Undetermined: return "undetermined";
    }
    return "";
}

std::optional<Expr> integrate_t(const Expr& c) {
    if (!c.den().empty()) return std::nullopt;
    AtomId t = JetCoord::t().atom();
    Expr out;
    for (auto& term : c.num().terms) {
        Rat k(0);
        Expr rest(term.coef);
        for (auto& f : term.mono) {
            const AtomInfo& info = atom_info(f.atom);
            if (f.atom == t) k = f.exp;
            else if (info.deps.empty() && info.kind != AtomKind::Func) rest *= Expr::atom(f.atom, f.exp);
            else return std::nullopt;
        }
        if (k == Rat(-1)) return std::nullopt;
        Rat k1 = k + Rat(1);
        out += rest * Expr::atom(t, k1) * Expr(mpq_class(mpz_class(k1.den()), mpz_class(k1.num())));
    }
    return out;
}

ConservationVerdict conservation_characteristic(const Form& kappa, const EqContext& ctx) {
    if (kappa.space() != Space::Eqn || kappa.r() != 1 || kappa.s() != 0)
        throw FormError("expected a (1,0)-form on the equation manifold");
    ConservationVerdict v;
    Expr A = kappa.coef(Basis{false, true, {}});
    Expr B = kappa.coef(Basis{true, false, {}});
    v.dh_residual = d_h(kappa, &ctx);
    v.Q = euler_lagrange(A, Space::SemiBasic);
    if (!v.closed()) {
        v.trivial = Triviality::NotClosed;
        return v;
    }
    if (!v.Q.is_zero()) {
        v.trivial = Triviality::Nontrivial;
        return v;
    }
    if (auto f = integrate_x(A)) {
        Expr c = ctx.T(*f) - B;
        if (c.is_zero()) {
            v.f = *f;
        } else if (auto g = integrate_t(c)) {
            v.f = *f - *g;
        }
        if (v.f && (ctx.X(*v.f) - A).is_zero() && (ctx.T(*v.f) - B).is_zero()) {
            v.trivial = Triviality::Trivial;
            return v;
        }
        v.f.reset();
    }
    if (auto R = multiplicative_witness(A, B, ctx)) {
        v.R = *R;
        v.trivial = Triviality::Trivial;
    }
    return v;
}

HelmholtzVerdict helmholtz_and_lagrangian(const Expr& Q, Space space, const HomotopyOptions& opt) {
    HelmholtzVerdict v;
    DiffOperator f = frechet(Q, space);
    v.defect = f - adjoint(f);
    v.is_euler_image = v.defect.is_zero();
    if (!v.is_euler_image) return v;
    if (auto L = lagrangian_of(Q, space)) {
        v.A = *L;
        return v;
    }
    // Homotopy on the source form; the interior product passes the horizontal factor.
    try {
        Form src = space == Space::Free ? wedge(wedge(Form::dt(space), Form::dx(space)), Form::theta(space, 0)).scaled(Q)
                                        : wedge(Form::dx(space), Form::theta(space, 0)).scaled(Q);
        Form h = vertical_homotopy(src, opt);
        Expr A = space == Space::Free ? h.coef(Basis{true, true, {}}) : -h.coef(Basis{false, true, {}});
        if ((euler_lagrange(A, space) - Q).is_zero()) v.A = A;
    } catch (const HomotopyError&) {
    }
    return v;
}

}  // namespace jetvar
