#include "corpus_data.hpp"
#include "support.hpp"

using namespace jetvar;
using namespace testing_support;

namespace {

DiffOperator S(const std::string& s) { return Op(s, Space::SemiBasic); }
DiffOperator Fr(const std::string& s) { return Op(s, Space::Free); }

}  // namespace

TEST_CASE("total derivatives") {
    EqContext kdv(P(corpus::kdv));
    CHECK(kdv.X(P("u*u_x")) == P("u_x^2 + u*u_xx"));
    CHECK(kdv.T(P("u")) == P(corpus::kdv));
    Expr e = P("u_x^2");
    CHECK(kdv.X(kdv.T(e)) == kdv.T(kdv.X(e)));
    CHECK(total_derivative(P("u*u_x"), Dir::X, Space::SemiBasic) == kdv.X(P("u*u_x")));
    CHECK(Dt(P("u_x")) == P("u_tx"));
    CHECK(kdv.order() == 3);
    CHECK(kdv.K_i(0) == P("u_x"));
    CHECK(kdv.jet_value(1, 1) == kdv.X(P(corpus::kdv)));
    CHECK(kdv.restrict(P("u_tt")) == kdv.T(P(corpus::kdv)));
    CHECK_THROWS(total_derivative(P("u"), Dir::T, Space::Eqn));
    CHECK_THROWS(total_derivative(P("u"), Dir::T, Space::Free, &kdv));
    CHECK_THROWS(EqContext(P("u_t + u_x")));
}

TEST_CASE("Frechet derivatives") {
    CHECK(frechet(P("u_t - u_xxx - u*u_x"), Space::Free) == Fr("Dt - Dx^3 - u*Dx - u_x"));
    CHECK(frechet(Expr::param("c1"), Space::Free).is_zero());
    CHECK(frechet(P("-1/2*t*u_x"), Space::Eqn) == Op("-1/2*t*Dx", Space::Eqn));
    DiffOperator f = frechet(P("-1/2*t*u_x"), Space::SemiBasic);
    CHECK(adjoint(f) - f == S("t*Dx"));
}

TEST_CASE("adjoints") {
    CHECK(adjoint(S("Dx")) == S("-Dx"));
    CHECK(adjoint(S("t*Dx")) == S("-t*Dx"));
    CHECK(is_skew(S("t*Dx")));
    CHECK(adjoint(S(corpus::e_hd3)) == -S(corpus::e_hd3));
    CHECK(adjoint(Fr("u*Dt")) == Fr("-u*Dt - u_t"));
    CHECK(is_self_adjoint(S("Dx^2")));
}

TEST_CASE("composition and application") {
    CHECK(S("u_x^(-1) @ Dx @ u_x^(-1)") == S("u_x^(-2)*Dx - u_xx*u_x^(-3)"));
    CHECK(S("(1/u_x) @ Dx @ (1/u_x)") == S(corpus::e1_schwarzian));
    DiffOperator p = S(corpus::e0_schwarzian);
    CHECK(compose(DiffOperator::identity(Space::SemiBasic), p) == p);
    CHECK(compose(p, DiffOperator::identity(Space::SemiBasic)) == p);
    Expr delta = P("u_t - u_xxx - 1/2*u_x^2 + u/(2*t)");
    CHECK(Fr("t*Dx").apply(delta) == P("t*u_tx - t*u_xxxx - t*u_x*u_xx + u_x/2"));
    CHECK_THROWS_AS(compose(S("Dx"), Fr("Dx")), SpaceError);
}

TEST_CASE("lifting and projecting operators") {
    EqContext kdv(P(corpus::kdv));
    DiffOperator e = S(corpus::e1_schwarzian);
    CHECK(lift(e).space() == Space::Free);
    CHECK(project(lift(e), kdv) == retag(e, Space::Eqn));
    CHECK_THROWS(lift(Op("u_t*Dx", Space::Free)));
    CHECK_THROWS(project(Fr("Dt"), kdv));
}

TEST_CASE("universal linearization") {
    EqContext hd(P(corpus::hd3));
    auto lin = linearization(hd);
    CHECK(lin.adjoint_apply(P("-2/3*u_x*u_xxx - 1/3*u*u_xxxx")).is_zero());
    CHECK(lin.apply(Expr()).is_zero());
    EqContext kdv(P(corpus::kdv));
    CHECK(linearization(kdv).apply(P("u_x")).is_zero());  // x-translation is a symmetry
    CHECK(linearization(kdv).apply(P("1")) == P("-u_x"));

    // Even order 2m: the top coefficient of L*(r theta^k) is -2 r K_2m on theta^{2m+k}.
    for (const char* k : {"u_xx", "u_xx*u + u_x^2", "u_xxxx + u*u_x"}) {
        EqContext ctx(P(k));
        int n = ctx.order();
        for (int idx = 0; idx <= 2; ++idx) {
            Expr r = P("u_x + x");
            Form rho = Form::contact(Space::Eqn, {{idx, r}});
            Form l = linearization_adjoint(ctx, rho);
            CHECK(l.contact_coefs()[n + idx] == Expr(-2) * r * ctx.K_i(n));
            for (auto& [i, c] : l.contact_coefs()) CHECK(i <= n + idx);
        }
    }
}

// ---------------------------------------------------------------------------
// Properties

TEST_CASE("property: [X,T] = 0 on the equation manifold") {
    Gen g(21);
    for (int k = 0; k < 200; ++k) {
        Expr K = g.poly(3, true, 3, 2) + Expr::coord(JetCoord::ux(g.uniform(1, 3)));
        if (!K.depends_on_jets()) continue;
        EqContext ctx(K);
        Expr e = g.rational(2);
        CHECK(ctx.X(ctx.T(e)) == ctx.T(ctx.X(e)));
    }
}

TEST_CASE("property: adjoint is an involutive anti-homomorphism") {
    Gen g(22);
    auto op = [&] {
        DiffOperator p(Space::SemiBasic);
        for (int i = 0, n = g.uniform(1, 3); i < n; ++i) p.add_term(0, g.uniform(0, 3), g.rational(2));
        return p;
    };
    for (int k = 0; k < 200; ++k) {
        DiffOperator p = op(), q = op();
        CHECK(adjoint(adjoint(p)) == p);
        CHECK(adjoint(compose(p, q)) == compose(adjoint(q), adjoint(p)));
        CHECK(adjoint(p + q) == adjoint(p) + adjoint(q));
    }
    for (int k = 0; k < 200; ++k) {
        DiffOperator p(Space::Free);
        for (int i = 0, n = g.uniform(1, 3); i < n; ++i) p.add_term(g.uniform(0, 1), g.uniform(0, 2), g.free_poly(2));
        CHECK(adjoint(adjoint(p)) == p);
    }
}

TEST_CASE("property: Frechet derivative obeys the product rule") {
    Gen g(23);
    for (int k = 0; k < 200; ++k) {
        Expr p = g.rational(3), q = g.rational(3), s = g.poly(2);
        DiffOperator lhs = frechet(p * q, Space::SemiBasic);
        DiffOperator rhs = frechet(q, Space::SemiBasic).scaled(p) + frechet(p, Space::SemiBasic).scaled(q);
        CHECK(lhs == rhs);
        CHECK(lhs.apply(s) == p * frechet(q, Space::SemiBasic).apply(s) + q * frechet(p, Space::SemiBasic).apply(s));
    }
}

TEST_CASE("property: adjoint pairing residual is X-exact") {
    Gen g(24);
    for (int k = 0; k < 200; ++k) {
        DiffOperator e(Space::SemiBasic);
        for (int i = 0, n = g.uniform(1, 3); i < n; ++i) e.add_term(0, g.uniform(0, 3), g.poly(2));
        Expr rho = g.poly(2), sigma = g.poly(2);
        Expr pairing = rho * e.apply(sigma) - adjoint(e).apply(rho) * sigma;
        CHECK(euler_lagrange(pairing, Space::SemiBasic).is_zero());
    }
}
