#include "doctest.h"
#include "jetvar/hamiltonian.hpp"
#include "support.hpp"

using namespace jetvar;
using namespace testing_support;

namespace {

DiffOperator S(const std::string& s) { return Op(s, Space::SemiBasic); }

bool same_lagrangian(const Expr& a, const Expr& b) { return euler_lagrange(a - b, Space::SemiBasic).is_zero(); }

}  // namespace

TEST_CASE("potential forms") {
    auto hd = potentialize(P("-1/2*v_x^2/v^3"));
    CHECK(hd.K == P("u_xxx/u_x^3 - 3/2*u_xx^2/u_x^4"));
    CHECK(hd.change_of_variables_residual.is_zero());
    REQUIRE(hd.witness.has_value());
    CHECK(hd.witness->ok());
    // The displayed witness: D_x(w_t - K) = E(-1/2 w_x w_t - 1/2 w_xx^2/w_x^3).
    EqContext ctx(hd.K);
    Expr d = P("u_t") - hd.K;
    CHECK((Op("Dx", Space::Free).apply(d) - euler_lagrange(P("-1/2*u_x*u_t - 1/2*u_xx^2/u_x^3"), Space::Free)).is_zero());

    auto tr = potentialize(P("1/2*v^2"));
    CHECK(tr.K == P("u_x"));
    REQUIRE(tr.witness.has_value());
    CHECK(tr.witness->ok());

    auto h3 = potentialize(P("2*sqrt(v)"), 3);
    CHECK(h3.K == P("u_xxx^(-1/2)"));
    REQUIRE(h3.witness.has_value());
    CHECK(h3.witness->ok());
    // D_x^3 (u_t - K) = E(-1/2 u_t u_xxx + 2 sqrt(u_xxx)).
    Expr d3 = P("u_t") - h3.K;
    CHECK((Op("Dx^3", Space::Free).apply(d3) - euler_lagrange(P("-1/2*u_t*u_xxx + 2*sqrt(u_xxx)"), Space::Free)).is_zero());

    CHECK_FALSE(potentialize(P("v_x^2"), 2).witness.has_value());
}

TEST_CASE("change of variables in the Euler operator") {
    CHECK(euler_change_of_variables(P("-1/2*v_x^2/v^3"), 1).is_zero());
    CHECK(euler_change_of_variables(P("2*sqrt(v)"), 3).is_zero());
    CHECK(euler_change_of_variables(P("7"), 2).is_zero());
}

TEST_CASE("Harry-Dym compatibility gives the second Hamiltonian") {
    DiffOperator d0 = compose(compose(S("v^(-1)"), S("Dx^3")), S("v^(-1)"));
    auto c = compatibility_H2(d0, P("-1/2*v_x^2/v^3"));
    CHECK(c.exactness_residual.is_zero());
    REQUIRE(c.H2.has_value());
    CHECK(c.verdict == "compatible");
    CHECK(same_lagrangian(*c.H2, P("1/2*v_xx^2/v^5 - 15/8*v_x^4/v^7")));
    CHECK(*c.H2 == P("1/2*v_xx^2/v^5 - 15/8*v_x^4/v^7"));
    // Any other power in the second term fails.
    CHECK_FALSE(same_lagrangian(*c.H2, P("1/2*v_xx^2/v^5 - 15/8*v_x^4/v^6")));
    CHECK(Dx(euler_lagrange(*c.H2, Space::SemiBasic)) == c.G);
}

TEST_CASE("compatibility special cases") {
    auto a = compatibility_H2(S("2*v*Dx + v_x"), P("2*sqrt(v)"), 3);
    CHECK(a.G.is_zero());
    REQUIRE(a.H2.has_value());
    CHECK(a.H2->is_zero());

    Expr h1 = P("v_x^2*v + x*v^3");
    auto b = compatibility_H2(S("Dx"), h1);
    REQUIRE(b.H2.has_value());
    CHECK(same_lagrangian(*b.H2, h1));

    auto n = compatibility_H2(S("v*Dx + 1/2*v_x"), P("v^3*v_xx"));
    CHECK_FALSE(n.ok());
}

TEST_CASE("Dorfman operators") {
    CHECK(dorfman_operator(Expr(1), Expr(), Expr()) == S("Dx^3"));
    Decls d;
    Expr k1 = parse_expr("param k1, k2, c1; k1", d), k2 = parse_expr("k2", d), c1 = parse_expr("c1", d);
    DiffOperator e = pulled_back(k1, k2, c1);
    // Displayed form: (k1 u_x + k2)^-1 (s D_x s + D_x^3) (k1 u_x + k2)^-1, s^2 = c1 + k1 u_x^2/2 + k2 u_x.
    Expr g = parse_expr("1/(k1*u_x + k2)", d);
    Expr s = parse_expr("sqrt(c1 + 1/2*k1*u_x^2 + k2*u_x)", d);
    DiffOperator mid = compose(compose(DiffOperator::mult(s, Space::SemiBasic), S("Dx")), DiffOperator::mult(s, Space::SemiBasic)) +
                       S("Dx^3");
    DiffOperator expect = compose(compose(DiffOperator::mult(g, Space::SemiBasic), mid), DiffOperator::mult(g, Space::SemiBasic));
    CHECK(e == expect);
    CHECK(is_skew(e));
    auto v = is_symplectic(e);
    CHECK(v.symplectic());
    // Harry-Dym's second operator is the k1 = 1, k2 = 0, c = 0 member.
    CHECK(dorfman_operator(P("1/v"), Expr(), Expr()) == compose(compose(S("v^(-1)"), S("Dx^3")), S("v^(-1)")));
    CHECK_THROWS_AS(dorfman_operator(P("v"), Expr(1), Expr(1)), OperatorError);
}

TEST_CASE("bi-Hamiltonian pipeline for Harry-Dym") {
    DiffOperator d0 = compose(compose(S("v^(-1)"), S("Dx^3")), S("v^(-1)"));
    auto r = biht_pipeline(d0, P("-1/2*v_x^2/v^3"));
    CHECK(r.failure.empty());
    CHECK(r.E == compose(compose(S("u_x^(-1)"), S("Dx^3")), S("u_x^(-1)")));
    CHECK(r.transfer_residual.is_zero());
    CHECK(r.symplectic.symplectic());
    REQUIRE(r.witness.has_value());
    CHECK(r.witness->ok());
    // The displayed identity with the closed-form Q.
    Expr q = P("(u_xx^2 - u_x*u_xxx)/(2*u_x^3)");
    Expr h2 = P("1/2*u_xxx^2/u_x^5 - 15/8*u_xx^4/u_x^7");
    Expr d = P("u_t") - r.K;
    CHECK((r.E.apply(d) - euler_lagrange(q * P("u_t") + h2, Space::Free)).is_zero());
}

TEST_CASE("bi-Hamiltonian pipeline for the third-order potential") {
    auto r = biht_pipeline(S("2*v*Dx + v_x"), P("2*sqrt(v)"), 3);
    CHECK(r.failure.empty());
    CHECK(r.E == S("2*u_xxx*Dx + u_xxxx"));
    REQUIRE(r.witness.has_value());
    CHECK(r.witness->ok());
    // Q u_t + L reduces to the displayed 1/2 u_xx^2 u_t up to a null Lagrangian.
    Expr lag = r.witness->Q * P("u_t") + r.witness->L - r.witness->Q * r.K;
    CHECK(euler_lagrange(lag - P("1/2*u_xx^2*u_t"), Space::Free).is_zero());
}

TEST_CASE("bi-Hamiltonian pipeline with D_x reduces to the potential witness") {
    Expr h1 = P("-1/2*v_x^2/v^3");
    auto r = biht_pipeline(S("Dx"), h1);
    REQUIRE(r.witness.has_value());
    auto p = potentialize(h1);
    REQUIRE(p.witness.has_value());
    CHECK(r.witness->Q == p.witness->Q);
    CHECK(r.K == p.K);
}

TEST_CASE("cylindrical KdV pair") {
    auto r = cylindrical_kdv_experiment();
    CHECK(r.K_from_D0 == P("u_xxx + u*u_x/sqrt(t)"));
    CHECK(r.K_from_D1 == P("-u_xxx + u*u_x/sqrt(t)"));
    CHECK(r.sign == -1);
}

// ---------------------------------------------------------------------------
// Properties

TEST_CASE("property: potential form differentiates back to the Hamiltonian flow") {
    Gen g(3001);
    for (int k = 0; k < 200; ++k) {
        Expr h1 = g.poly(2, k % 2 == 0, 3, 3);
        auto p = potentialize(h1);
        if (!p.K.depends_on_jets()) {
            CHECK_FALSE(p.witness.has_value());
            continue;
        }
        CHECK(shift_jets(Dx(p.K), -1) == Dx(euler_lagrange(h1, Space::SemiBasic)));
        REQUIRE(p.witness.has_value());
        CHECK(p.witness->ok());
    }
}

TEST_CASE("property: Euler change of variables") {
    Gen g(3002);
    for (int k = 0; k < 200; ++k) {
        Expr h = g.poly(2, k % 3 == 0, 3, 3);
        CHECK(euler_change_of_variables(h, 1 + k % 3).is_zero());
    }
}

TEST_CASE("property: the pipeline never emits an unverified witness") {
    Gen g(3003);
    for (int k = 0; k < 200; ++k) {
        Expr h1 = g.poly(2, false, 2, 3);
        auto r = biht_pipeline(S("Dx"), h1);
        if (r.witness) CHECK(r.witness->ok());
        else CHECK_FALSE(r.failure.empty());
    }
}
