#include "jetvar/hamiltonian.hpp"

#include "poly.hpp"

namespace jetvar {

namespace {

Expr euler_sb(const Expr& e) { return euler_lagrange(e, Space::SemiBasic); }

DiffOperator mult(const Expr& c) { return DiffOperator::mult(c, Space::SemiBasic); }

// Antiderivative in v = u of a polynomial in v whose other factors are constants.
std::optional<Expr> integrate_in_v(const Expr& f) {
    if (!f.den().empty()) return std::nullopt;
    AtomId v = JetCoord::ux(0).atom();
    Expr out;
    for (auto& t : f.num().terms) {
        Rat k(0);
        Expr rest(t.coef);
        for (auto& fa : t.mono) {
            const AtomInfo& a = atom_info(fa.atom);
            if (fa.atom == v) k = fa.exp;
            else if (a.deps.empty() && a.kind != AtomKind::Jet && a.kind != AtomKind::Space && a.kind != AtomKind::Time)
                rest *= Expr::atom(fa.atom, fa.exp);
            else return std::nullopt;
        }
        if (k == Rat(-1)) return std::nullopt;
        Rat k1 = k + Rat(1);
        out += rest * Expr::atom(v, k1) * Expr(mpq_class(mpz_class(k1.den()), mpz_class(k1.num())));
    }
    return out;
}

}  // namespace

Expr substitute_potential(const Expr& e, int depth) { return shift_jets(e, depth); }

DiffOperator substitute_potential(const DiffOperator& p, int depth) {
    DiffOperator r(p.space());
    for (auto& [k, c] : p.terms()) r.add_term(k.first, k.second, shift_jets(c, depth));
    return r;
}

HamiltonianPair hamiltonian_pair(const DiffOperator& D, const Expr& H) {
    return {D, H, D.apply(euler_sb(H))};
}

Expr euler_change_of_variables(const Expr& H, int depth) {
    if (depth < 1) throw std::invalid_argument("depth must be at least 1");
    Expr rhs = substitute_potential(euler_sb(H), depth);
    for (int k = 0; k < depth; ++k) rhs = -Dx(rhs);
    return euler_sb(substitute_potential(H, depth)) - rhs;
}

PotentialForm potentialize(const Expr& H1, int depth) {
    if (depth < 1) throw std::invalid_argument("depth must be at least 1");
    PotentialForm p;
    p.depth = depth;
    p.K = substitute_potential(euler_sb(H1), depth);
    p.change_of_variables_residual = euler_change_of_variables(H1, depth);
    if (depth % 2 == 1 && p.K.depends_on_jets()) {
        // D_x^d (u_t - K) = E(-1/2 u_d u_t + H1|), i.e. Q = -1/2 u_d and L = H1| + Q K.
        EqContext ctx(p.K);
        Expr q = Expr::coord(JetCoord::ux(depth)) * Expr::rational(-1, 2);
        auto w = verify_variational(DiffOperator::Dx(Space::Free, depth), ctx, q,
                                    substitute_potential(H1, depth) + q * p.K);
        p.witness = w;
    }
    return p;
}

Compatibility compatibility_H2(const DiffOperator& D0, const Expr& H1, int depth) {
    Compatibility c;
    c.depth = depth;
    c.G = retag(D0, Space::SemiBasic).apply(euler_sb(H1));
    // One x-integration per level, each certified.
    Expr cur = c.G;
    c.exactness_residual = euler_sb(cur);
    for (int k = 0; k < depth; ++k) {
        if (!euler_sb(cur).is_zero()) {
            c.verdict = "not compatible: D0(E(H1)) is not in the image of D_x^" + std::to_string(depth);
            return c;
        }
        auto f = integrate_x(cur);
        if (!f) {
            c.verdict = "inconclusive: x-integration outside the supported fragment";
            return c;
        }
        cur = *f;
    }
    c.F = cur;
    c.helmholtz = helmholtz_and_lagrangian(cur, Space::SemiBasic);
    if (!c.helmholtz.is_euler_image) {
        c.verdict = "not compatible: the x-antiderivative is not an Euler image";
        return c;
    }
    if (!c.helmholtz.A) {
        c.verdict = "inconclusive: Euler image but no H2 reconstructed";
        return c;
    }
    c.H2 = divergence_reduce(*c.helmholtz.A).reduced;
    c.verdict = "compatible";
    return c;
}

DiffOperator dorfman_operator(const Expr& h, const Expr& c1, const Expr& c2) {
    DiffOperator inner = DiffOperator::Dx(Space::SemiBasic, 3);
    Expr radicand = c1;
    if (!c2.is_zero()) {
        auto I = integrate_in_v(h.inverse());
        if (!I) throw OperatorError("antiderivative of 1/h is outside the supported fragment");
        radicand += c2 * *I;
    }
    if (!radicand.is_zero()) {
        Expr s = sqrt(radicand);
        inner = inner + compose(compose(mult(s), DiffOperator::Dx(Space::SemiBasic)), mult(s));
    }
    return compose(compose(mult(h), inner), mult(h));
}

DiffOperator pulled_back(const Expr& k1, const Expr& k2, const Expr& c1) {
    Expr v = Expr::coord(JetCoord::ux(0));
    DiffOperator d = dorfman_operator((k1 * v + k2).inverse(), c1, Expr(1));
    DiffOperator e = substitute_potential(d, 1);
    if (!is_skew(e)) throw OperatorError("pulled-back operator is not skew-adjoint");
    return e;
}

BihtResult biht_pipeline(const DiffOperator& D0, const Expr& H1, int depth) {
    BihtResult r;
    r.compat = compatibility_H2(D0, H1, depth);
    r.E = substitute_potential(retag(D0, Space::SemiBasic), depth);
    r.K = substitute_potential(euler_sb(H1), depth);
    if (!r.compat.ok()) {
        r.failure = r.compat.verdict;
        return r;
    }
    if (!r.K.depends_on_jets()) {
        r.failure = "potential flow does not depend on u";
        return r;
    }
    Expr h2 = substitute_potential(*r.compat.H2, depth);
    r.transfer_residual = r.E.apply(r.K) + euler_sb(h2);
    r.symplectic = is_symplectic(r.E, false);  // Q comes from construct_Q below
    if (!r.symplectic.symplectic()) {
        r.failure = "pulled-back operator is not symplectic: " + r.symplectic.reason;
        return r;
    }
    Expr q;
    try {
        q = construct_Q(r.E);
    } catch (const AnsatzError& e) {
        r.failure = e.what();
        return r;
    }
    EqContext ctx(r.K);
    auto w = verify_variational(r.E, ctx, q, h2 + q * r.K);
    if (!w.ok()) {
        r.failure = "variational identity has a nonzero residual";
        return r;
    }
    r.witness = w;
    return r;
}

CylindricalKdvReport cylindrical_kdv_experiment() {
    CylindricalKdvReport r;
    Expr w = Expr::coord(JetCoord::ux(0)), wx = Expr::coord(JetCoord::ux(1));
    Expr rt = sqrt(Expr::coord(JetCoord::t()));
    Expr cubic = w * w * w / (Expr(6) * rt);
    DiffOperator d1 = DiffOperator::Dx(Space::SemiBasic);
    DiffOperator d0 = DiffOperator::Dx(Space::SemiBasic, 3) +
                      compose(mult(Expr(2) * w / (Expr(3) * rt)), DiffOperator::Dx(Space::SemiBasic)) +
                      mult(wx / (Expr(3) * rt));
    Expr h0 = w * w * Expr::rational(1, 2);
    r.K_from_D0 = d0.apply(euler_sb(h0));
    r.K_from_D1 = d1.apply(euler_sb(wx * wx * Expr::rational(1, 2) + cubic));
    for (int s : {1, -1}) {
        Expr h1 = wx * wx * Expr::rational(s, 2) + cubic;
        if ((d1.apply(euler_sb(h1)) - r.K_from_D0).is_zero()) {
            r.sign = s;
            r.compat = compatibility_H2(d0, h1, 1);
        }
    }
    return r;
}

}  // namespace jetvar
