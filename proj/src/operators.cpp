#include "jetvar/operators.hpp"

#include <unordered_set>

#include "grading.hpp"
#include "jetvar/linsolve.hpp"
#include "poly.hpp"

namespace jetvar {

using namespace detail;

namespace {

// x-jet operator on the t-semibasic space.
DiffOperator as_semibasic(const DiffOperator& E) {
    try {
        return retag(E, Space::SemiBasic);
    } catch (const SpaceError& e) {
        throw OperatorError(e.what());
    }
}

DiffOperator as_free(const DiffOperator& E) {
    if (E.space() == Space::Free) return E;
    try {
        return lift(E);
    } catch (const SpaceError& e) {
        throw OperatorError(e.what());
    }
}

Expr delta_free(const EqContext& ctx) { return Expr::coord(JetCoord::u(1, 0)) - ctx.K(); }

Expr u0() { return Expr::coord(JetCoord::ux(0)); }

DiffOperator skew_part_of_frechet(const Expr& P) {
    DiffOperator f = frechet(P, Space::SemiBasic);
    return (f - adjoint(f)).scaled(Expr::rational(1, 2));
}

// Factors of a term that carry x or jet dependence; constants, t and parameters drop out.
Expr jet_part(const Monomial& m) {
    Expr r(1);
    for (auto& f : m) {
        const AtomInfo& a = atom_info(f.atom);
        bool keep = a.kind == AtomKind::Jet || a.kind == AtomKind::Space ||
                    ((a.kind == AtomKind::Func || a.kind == AtomKind::Radical) && !a.deps.empty() &&
                     !(a.deps.size() == 1 && a.deps[0] == JetCoord::t()));
        if (keep) r *= Expr::atom(f.atom, f.exp);
    }
    return r;
}

// Each linear jet factor u_k (k >= 1) replaced by u_{k-1}.
std::vector<Expr> lowerings(const Expr& m) {
    std::vector<Expr> out;
    if (m.num().terms.size() != 1) return out;
    const Term& t = m.num().terms[0];
    Expr den = Expr::make(poly_const(1), m.den());
    for (auto& f : t.mono) {
        const AtomInfo& a = atom_info(f.atom);
        if (a.kind != AtomKind::Jet || a.coord.a != 0 || a.coord.i == 0 || f.exp != Rat(1)) continue;
        Monomial rest = mono_without(t.mono, f.atom);
        out.push_back(Expr::make(Poly{{Term{rest, mpq_class(1)}}}, {}) * den * Expr::coord(JetCoord::ux(a.coord.i - 1)));
    }
    return out;
}

}  // namespace

VariationalWitness verify_variational(const DiffOperator& E, const EqContext& ctx, const Expr& Q, const Expr& L) {
    VariationalWitness w;
    w.E = as_free(E);
    w.Q = Q;
    w.L = L;
    DiffOperator fq = frechet(Q, Space::Free);
    w.operator_defect = adjoint(fq) - fq - w.E;
    Expr d = delta_free(ctx);
    w.residual = w.E.apply(d) - euler_lagrange(Q * d + L, Space::Free);
    return w;
}

int default_order_bound(const DiffOperator& E) {
    int m = 0;
    for (auto& [k, c] : E.terms()) m = std::max(m, c.x_order());
    return std::max(1, E.order() + m);
}

Expr construct_Q(const DiffOperator& E, int order_bound) {
    DiffOperator S = as_semibasic(E);
    if (!is_skew(S)) throw OperatorError("operator is not skew-adjoint");
    if (S.is_zero()) return Expr();
    int bound = order_bound < 0 ? default_order_bound(S) : order_bound;

    // Seeds: jet parts of the coefficient terms, with their lowerings.
    std::vector<Expr> seeds;
    std::unordered_set<Expr> seen;
    auto push = [&](std::vector<Expr>& v, const Expr& e) {
        if (seen.insert(e).second) v.push_back(e);
    };
    for (auto& [k, c] : S.terms()) {
        Expr den = Expr::make(poly_const(1), c.den());
        for (auto& t : c.num().terms) push(seeds, jet_part(t.mono) * den);
    }
    for (std::size_t k = 0; k < seeds.size(); ++k)
        for (auto& l : lowerings(seeds[k]))
            if (l.x_order() + S.order() >= 0) push(seeds, l);
    seen.clear();
    std::vector<Expr> basis;
    for (auto& s : seeds)
        for (int j = 0; j <= bound; ++j) {
            Expr m = s * Expr::coord(JetCoord::ux(j));
            if (m.x_order() <= bound) push(basis, m);
        }

    auto unknowns = LinearSystem::make_unknowns("q_", basis.size());
    Expr Q;
    for (std::size_t k = 0; k < basis.size(); ++k) Q += Expr::atom(unknowns[k]) * basis[k];
    DiffOperator fq = frechet(Q, Space::SemiBasic);
    DiffOperator defect = adjoint(fq) - fq - S;
    LinearSystem sys(unknowns);
    for (auto& [k, c] : defect.terms()) sys.add(c);
    auto sol = sys.solve();
    if (!sol)
        throw AnsatzError("no Q found with order bound " + std::to_string(bound) +
                          ": increase order_bound or supply Q");
    Expr q = substitute_unknowns(Q, unknowns, *sol);
    DiffOperator f = frechet(q, Space::SemiBasic);
    if (!(adjoint(f) - f - S).is_zero()) throw AnsatzError("ansatz solution failed verification");
    return q;
}

VariationalSearch search_variational(const DiffOperator& E, const EqContext& ctx, int order_bound) {
    VariationalSearch s;
    try {
        s.Q = construct_Q(E, order_bound);
    } catch (const AnsatzError&) {
        return s;
    }
    Expr d = delta_free(ctx);
    s.source = as_free(E).apply(d) - euler_lagrange(*s.Q * d, Space::Free);
    if (s.source.t_order() > 0) throw OperatorError("source term depends on t-derivatives: " + s.source.str());
    s.helmholtz = helmholtz_and_lagrangian(s.source, Space::SemiBasic);
    if (s.helmholtz.A) {
        auto w = verify_variational(E, ctx, *s.Q, *s.helmholtz.A);
        if (w.ok()) s.witness = w;
    }
    return s;
}

std::optional<Expr> symplectic_potential(const DiffOperator& S0) {
    DiffOperator S = as_semibasic(S0);
    Grader g{false, {}};
    // Components keyed by (u-degree, x-weight of s_j theta^j).
    std::map<std::pair<Rat, Rat>, DiffOperator> parts;
    for (auto& [k, c] : S.terms()) {
        auto split = g.split(c);
        if (!split) return std::nullopt;
        for (auto& [gr, part] : *split) {
            auto key = std::make_pair(gr.d, gr.wx + Rat(k.second));
            auto it = parts.try_emplace(key, DiffOperator(Space::SemiBasic)).first;
            it->second.add_term(0, k.second, part);
        }
    }
    Expr P;
    Expr x_char = -Expr::coord(JetCoord::x()) * Expr::coord(JetCoord::ux(1));
    for (auto& [key, op] : parts) {
        // L_V of the 2-form scales it by c; P = 2 S(phi) / c.
        Rat cu = key.first + Rat(2);
        Rat cx = Rat(1) - key.second;
        if (cu != Rat(0))
            P += op.apply(u0()) * Expr(mpq_class(2 * cu.den(), cu.num()));
        else if (cx != Rat(0))
            P += op.apply(x_char) * Expr(mpq_class(2 * cx.den(), cx.num()));
        else
            return std::nullopt;
    }
    if (!(skew_part_of_frechet(P) == S)) return std::nullopt;
    return P;
}

SymplecticVerdict is_symplectic(const DiffOperator& S0, bool with_potential) {
    SymplecticVerdict v;
    DiffOperator S = as_semibasic(S0);
    v.skew_defect = S + adjoint(S);
    v.skew = v.skew_defect.is_zero();
    if (!v.skew) {
        v.reason = "not skew-adjoint";
        return v;
    }
    Space sb = Space::SemiBasic;
    Form omega = wedge(Form::dx(sb), wedge(Form::theta(sb, 0), apply(S, Form::theta(sb, 0))));
    v.closure_residual = delta_v(omega);
    v.closed = v.closure_residual.is_zero();
    if (!v.closed) {
        v.reason = "associated 2-form is not delta_V-closed";
        return v;
    }
    if (!with_potential) return v;
    v.P = symplectic_potential(S);
    if (v.P) {
        v.potential_route = "scaling homotopy";
        return v;
    }
    // Every scaling is resonant for some component; fall back to P = -2Q from the ansatz.
    try {
        Expr p = construct_Q(S) * Expr(-2);
        if (skew_part_of_frechet(p) == S) {
            v.P = p;
            v.potential_route = "ansatz";
        }
    } catch (const AnsatzError&) {
    }
    if (!v.P) v.reason = "symplectic; no potential found";
    return v;
}

HamiltonianVerdict hamiltonian_of(const DiffOperator& S0, const EqContext& ctx, const Expr& P) {
    DiffOperator S = as_semibasic(S0);
    if (!(skew_part_of_frechet(P) == S)) throw OperatorError("P is not a symplectic potential for S");
    HamiltonianVerdict h;
    h.G = partial(P, JetCoord::t()) * Expr::rational(1, 2) + S.apply(ctx.K());
    auto hv = helmholtz_and_lagrangian(h.G, Space::SemiBasic);
    if (!hv.is_euler_image)
        h.reason = "not Hamiltonian for S: 1/2 P_t + S(K) is not an Euler image";
    else if (!hv.A)
        h.reason = "1/2 P_t + S(K) is an Euler image but no Hamiltonian was reconstructed";
    else
        h.H = hv.A;
    return h;
}

std::string to_string(FotVerdict v) {
    switch (v) {
    case FotVerdict::NotClosed: return "no_operator_not_closed";
    case FotVerdict::Nontrivial: return "no_operator_nontrivial";
    case FotVerdict::OperatorFound: return "operator_found";
    case FotVerdict::Inconclusive: return "inconclusive";
    }
    return "";
}

FotResult fot_test(const EqContext& ctx) {
    if (ctx.order() != 3) throw OperatorError("first-order test needs a third-order equation");
    Expr k3 = ctx.K_i(3);
    if (k3.zero_test() != ZeroTest::NonZero) throw OperatorError("K_3 must be nonzero");
    FotResult r;
    Expr xk3 = ctx.X(k3);
    r.khat2 = (ctx.K_i(2) - xk3) * Expr::rational(2, 3) / k3;
    const Expr& h = r.khat2;
    Expr b = Expr(-2) * ctx.K_i(0) + ctx.K_i(1) * h - Expr::rational(1, 2) * (xk3 * h * h + k3 * h * h * h) +
             ctx.X(k3 * ctx.X(h));
    r.kappa = Form::dx(Space::Eqn).scaled(h) + Form::dt(Space::Eqn).scaled(b);
    r.conservation = conservation_characteristic(r.kappa, ctx);
    switch (r.conservation.trivial) {
    case Triviality::NotClosed: r.verdict = FotVerdict::NotClosed; return r;
    case Triviality::Nontrivial: r.verdict = FotVerdict::Nontrivial; return r;
    default: break;
    }
    if (r.conservation.R) {
        r.R = r.conservation.R;
    } else if (r.conservation.f && ctx.X(*r.conservation.f).is_zero() && ctx.T(*r.conservation.f).is_zero()) {
        r.R = Expr(1);
    } else if (auto R = multiplicative_witness(h, b, ctx)) {
        r.R = *R;
    }
    if (!r.R) return r;
    // kappa = d_H log R, checked directly.
    if (!(ctx.X(*r.R) - h * *r.R).is_zero() || !(ctx.T(*r.R) - b * *r.R).is_zero()) {
        r.R.reset();
        return r;
    }
    DiffOperator E(Space::Eqn);
    E.add_term(0, 1, Expr(2) * *r.R);
    E.add_term(0, 0, ctx.X(*r.R));
    r.E = E;
    try {
        r.closure_certificate = omega_from_operator(E, ctx).is_closed();
    } catch (const OperatorError&) {
    }
    r.verdict = r.closure_certificate == true ? FotVerdict::OperatorFound : FotVerdict::Inconclusive;
    return r;
}

std::vector<AnsatzCondition> ansatz_conditions(const EqContext& ctx, const Form& eps) {
    if (eps.r() != 0 || eps.s() != 1) throw FormError("expected a contact 1-form");
    Form w = wedge(Form::theta(Space::Eqn, 0), linearization_adjoint(ctx, eps));
    int top = 0;
    for (auto& [i, c] : eps.contact_coefs()) top = std::max(top, i);
    top += ctx.order() + 1;
    std::vector<AnsatzCondition> out;
    for (int i = top; i >= 1; --i) {
        Basis b{false, false, {CIdx{0, 0}, CIdx{0, i}}};
        out.push_back({i, -w.coef(b)});
    }
    return out;
}

Form first_order_skew_form(const Expr& R, const EqContext& ctx) {
    return Form::contact(Space::Eqn, {{1, -R}, {0, ctx.X(R) * Expr::rational(-1, 2)}});
}

}  // namespace jetvar
