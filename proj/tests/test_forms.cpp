#include "doctest.h"
#include "support.hpp"

using namespace jetvar;
using namespace testing_support;

namespace {

const char* kdv = "u_xxx + u*u_x";
const char* pckdv = "u_xxx + 1/2*u_x^2 - u/(2*t)";

const char* omega1 =
    "dx^th0^th1 * (-1/(2*u_x^2)) + dt^th0^th1 * ((4*u_xxx*u_x - 3*u_xx^2)/(4*u_x^4))"
    " + dt^th0^th2 * (u_xx/(2*u_x^3)) - dt^th0^th3 * (1/(2*u_x^2)) + dt^th1^th2 * (1/u_x^2)";
const char* eta1 =
    "dx^th0 * (1/(2*u_x)) + dt^th0 * ((u_xx^2 - 2*u_xxx*u_x)/(4*u_x^3))"
    " + dt^th1 * (u_xx/(2*u_x^2)) + dt^th2 * (1/(2*u_x))";

// c * dt^dx built directly, bypassing wedge.
Form top_form(const Expr& c, Space s) {
    Form w(s, 2, 0);
    w.add(Basis{true, true, {}}, c);
    return w;
}

}  // namespace

TEST_CASE("mass density and flux close on the KdV manifold") {
    EqContext ctx(P(kdv));
    Form k = F("dx * (u) + dt * (u_xx + 1/2*u^2)", Space::Eqn);
    CHECK(d_h(k, &ctx).is_zero());
}

TEST_CASE("d_H of -u_x dt on the KdV manifold") {
    EqContext ctx(P(kdv));
    Form k = F("dt * (-u_x)", Space::Eqn);
    // -u_xx dx^dt = u_xx dt^dx
    CHECK(d_h(k, &ctx) == top_form(P("u_xx"), Space::Eqn));
    CHECK(d_h(k, &ctx) == F("dx^dt * (-u_xx)", Space::Eqn));
}

TEST_CASE("d_H requires a context on the equation manifold and a free slot") {
    Form k = F("dt * (u)", Space::Eqn);
    CHECK_THROWS_AS(d_h(k, nullptr), FormError);
    CHECK_THROWS_AS(d_h(F("dx * (u)", Space::SemiBasic)), FormError);
    CHECK_THROWS_AS(Form::dt(Space::SemiBasic), FormError);
    CHECK_THROWS_AS(wedge(F("dx", Space::Eqn), F("dx^dt", Space::Eqn)), FormError);
}

TEST_CASE("d_V of u^2 dx") {
    Form w = F("dx * (u^2)", Space::SemiBasic);
    Form expect(Space::SemiBasic, 1, 1);
    expect.add(Basis{false, true, {CIdx{0, 0}}}, P("-2*u"));
    // th0 ^ dx ordering is absorbed into the sign
    CHECK(d_v(w) == expect);
    CHECK(d_v(w) == F("th0^dx * (2*u)", Space::SemiBasic));
}

TEST_CASE("Schwarzian representative is d_V-closed and d_V-exact") {
    Form w = F(omega1, Space::Eqn);
    Form e = F(eta1, Space::Eqn);
    CHECK(d_v(w).is_zero());
    CHECK(d_v(e) == w);
}

TEST_CASE("Euler-Lagrange expression of the potential cKdV Lagrangian") {
    Expr L = P("-1/2*t*u_x*u_t + 1/2*t*u_x*u_xxx + 1/6*t*u_x^3");
    Expr expect = P("t*u_tx - t*u_xxxx - t*u_x*u_xx + u_x/2");
    CHECK(euler_lagrange(L, Space::Free) == expect);
}

TEST_CASE("Euler-Lagrange expression in the v letter") {
    Decls d;
    d.field = 'v';
    Expr L = parse_expr("-1/2*v_x^2/v^3", d);
    Expr expect = parse_expr("v_xx/v^3 - 3/2*v_x^2/v^4", d);
    CHECK(euler_lagrange(L, Space::SemiBasic) == expect);
    CHECK(euler_lagrange(L, Space::SemiBasic).str({'v'}) == expect.str({'v'}));
}

TEST_CASE("Euler operator rejects t-jets off the free space") {
    CHECK_THROWS_AS(euler_lagrange(P("u_t*u"), Space::SemiBasic), SpaceError);
}

TEST_CASE("integration by parts operator on semibasic 2-forms") {
    // Hand expansion: J = dx^(u_xx th0 + 2 u_x th1), I = 1/2 th0 ^ J.
    Form w = F("dx^th0^th2 * (u)", Space::SemiBasic);
    CHECK(interior_euler(w) == F("dx^th0 * (u_xx) + dx^th1 * (2*u_x)", Space::SemiBasic));
    Form iw = ibp(w);
    CHECK(iw == F("dx^th0^th1 * (-u_x)", Space::SemiBasic));
    CHECK(ibp(iw) == iw);
    Form fixed = F("dx^th0^th1 * (u_x)", Space::SemiBasic);
    CHECK(ibp(fixed) == fixed);
}

TEST_CASE("source forms are fixed by I on the free space") {
    Expr L = P("u_t*u_x + u*u_xx^2 + t*x*u");
    Form src = F("dt^dx^th0", Space::Free).scaled(euler_lagrange(L, Space::Free));
    CHECK(ibp(src) == src);
}

TEST_CASE("delta_V on functional forms") {
    CHECK(delta_v(F("dx^th0^th1 * (u_x)", Space::SemiBasic)).is_zero());
    CHECK_FALSE(delta_v(F("dx^th0 * (u_x^2)", Space::SemiBasic)).is_zero());
    CHECK_THROWS_AS(delta_v(F("dx^th0^th2 * (u)", Space::SemiBasic)), FormError);
}

TEST_CASE("vertical homotopy round trip") {
    Form w = F("dx * (u^2)", Space::SemiBasic);
    CHECK(vertical_homotopy(d_v(w)) == w);
    HomotopyOptions zero;
    zero.base[JetCoord::ux(0)] = Expr();
    CHECK(vertical_homotopy(d_v(w), zero) == w);
}

TEST_CASE("vertical homotopy on the Schwarzian representative") {
    Form w = F(omega1, Space::Eqn);
    Form eta = vertical_homotopy(w);
    CHECK(d_v(eta) == w);
    CHECK(d_v(eta - F(eta1, Space::Eqn)).is_zero());
}

TEST_CASE("straight-line homotopy reports poles instead of guessing") {
    Form w = F(omega1, Space::Eqn);
    HomotopyOptions opt;
    opt.base[JetCoord::ux(1)] = Expr(1);
    CHECK_THROWS_AS(vertical_homotopy(w, opt), HomotopyError);
}

TEST_CASE("horizontal integration") {
    CHECK(integrate_x(P("u_x")) == P("u"));
    CHECK(integrate_x(P("u*u_x + 1")) == P("1/2*u^2 + x"));
    CHECK(integrate_x(P("u_xx/u_x")).has_value() == false);
    CHECK_FALSE(integrate_x(P("u^2")).has_value());
    auto f = integrate_x(P("u_xxx*u_x^(-1/2) - 1/2*u_xx^2*u_x^(-3/2) + x*u_x + u"));
    REQUIRE(f.has_value());
    CHECK(Dx(*f) == P("u_xxx*u_x^(-1/2) - 1/2*u_xx^2*u_x^(-3/2) + x*u_x + u"));
}

TEST_CASE("multiplicative witness for t^{-1} dt on the potential cKdV manifold") {
    EqContext ctx(P(pckdv));
    auto r = multiplicative_witness(Expr(), P("1/t"), ctx);
    REQUIRE(r.has_value());
    CHECK(*r == P("t"));
    CHECK_FALSE(multiplicative_witness(P("u"), Expr(), ctx).has_value());
}

TEST_CASE("Lagrangian of an Euler image") {
    Expr L = P("u_x^2*u + x*u_xx^2/u_x + t*u");
    Expr G = euler_lagrange(L, Space::SemiBasic);
    auto back = lagrangian_of(G, Space::SemiBasic);
    REQUIRE(back.has_value());
    CHECK(euler_lagrange(*back, Space::SemiBasic) == G);
    CHECK_FALSE(lagrangian_of(P("u_x^2"), Space::SemiBasic).has_value());
}

TEST_CASE("contact integration peels the top index") {
    Form xi = F("th0^th2 * (u) + th1^th3 * (u_x^2)", Space::SemiBasic);
    auto back = integrate_x_contact(total_x(xi));
    REQUIRE(back.has_value());
    CHECK(total_x(*back) == total_x(xi));
    CHECK_FALSE(integrate_x_contact(F("th0 * (1)", Space::SemiBasic)).has_value());
}

TEST_CASE("projection to the semibasic space") {
    Form w = F("dx^th0^th1 * (u) + dx^th0^th2 * (u_x) + dt^th1^th2 * (u_xxx)", Space::Eqn);
    CHECK(project_sb(w) == F("dx^th0_E^th1_E * (u) + dx^th0_E^th2_E * (u_x)", Space::SemiBasic));
    CHECK(project_sb(F("dt^th0 * (u)", Space::Eqn)).is_zero());
}

TEST_CASE("form text format") {
    Form w = F("dx^th0^th1 * (1/(2*u_x^2)) - dt^th0^th2", Space::Eqn);
    CHECK(w.str() == "dx^th0^th1 * (1/2*u_x^-2) - dt^th0^th2");
    CHECK(F("dx^th1_E * (u)", Space::SemiBasic).str() == "dx^th1_E * (u)");
    CHECK(F("dt^dx^zeta1_2", Space::Free).str() == "dt^dx^zeta1_2");
}

// ---------------------------------------------------------------------------
// Properties

TEST_CASE("property: d_H^2 = 0, d_V^2 = 0 and anticommutation on all spaces") {
    Gen g(101);
    EqContext ctx(P(kdv));
    for (int k = 0; k < 200; ++k) {
        Space sp = k % 3 == 0 ? Space::Free : (k % 3 == 1 ? Space::Eqn : Space::SemiBasic);
        int s = g.uniform(0, 2);
        Form w = g.form(sp, 0, s);
        const EqContext* c = sp == Space::Eqn ? &ctx : nullptr;
        if (sp != Space::SemiBasic) CHECK(d_h(d_h(w, c), c).is_zero());
        CHECK(d_v(d_v(w)).is_zero());
        CHECK((d_h(d_v(w), c) + d_v(d_h(w, c))).is_zero());
    }
}

TEST_CASE("property: Euler operator annihilates total derivatives") {
    Gen g(202);
    for (int k = 0; k < 200; ++k) {
        Expr f = g.rational(3);
        Expr L = g.rational(2);
        CHECK(euler_lagrange(Dx(f), Space::SemiBasic).is_zero());
        CHECK(euler_lagrange(L + Dx(f), Space::SemiBasic) == euler_lagrange(L, Space::SemiBasic));
    }
}

TEST_CASE("property: I is idempotent and kills d_H-exact forms") {
    Gen g(303);
    for (int k = 0; k < 200; ++k) {
        bool free = k % 2 == 0;
        Space sp = free ? Space::Free : Space::SemiBasic;
        int s = g.uniform(1, 2);
        Form eta = g.form(sp, free ? 1 : 0, s);
        CHECK(ibp(d_h(eta)).is_zero());
        Form w = g.form(sp, free ? 2 : 1, s);
        Form iw = ibp(w);
        CHECK(ibp(iw) == iw);
    }
}

TEST_CASE("property: delta_V squares to zero and kills Euler images") {
    Gen g(404);
    for (int k = 0; k < 200; ++k) {
        Expr L = g.poly(2, true, 3, 3);
        Form src = F("dx^th0", Space::SemiBasic).scaled(euler_lagrange(L, Space::SemiBasic));
        CHECK(delta_v(src).is_zero());
        Form w = ibp(g.form(Space::SemiBasic, 1, 1));
        CHECK(delta_v(delta_v(w)).is_zero());
    }
}

TEST_CASE("property: projection commutes with both differentials") {
    Gen g(505);
    EqContext ctx(P(kdv));
    for (int k = 0; k < 200; ++k) {
        Form w = g.form(Space::Eqn, 0, g.uniform(0, 2));
        CHECK(project_sb(d_h(w, &ctx)) == d_h(project_sb(w)));
        Form v = g.form(Space::Eqn, g.uniform(0, 1), g.uniform(0, 2));
        CHECK(project_sb(d_v(v)) == d_v(project_sb(v)));
    }
}

TEST_CASE("property: vertical homotopy inverts d_V") {
    Gen g(606);
    for (int k = 0; k < 200; ++k) {
        Form w = g.form(Space::SemiBasic, g.uniform(0, 1), g.uniform(0, 1), 3, 2, false);
        Form dw = d_v(w);
        if (dw.is_zero()) continue;
        Form h = vertical_homotopy(dw);
        CHECK(d_v(h) == dw);
    }
}

TEST_CASE("property: horizontal integration of total derivatives") {
    Gen g(707);
    for (int k = 0; k < 200; ++k) {
        Expr f = g.poly(2, true, 3, 3);
        auto back = integrate_x(Dx(f));
        REQUIRE(back.has_value());
        CHECK(Dx(*back) == Dx(f));
    }
}

TEST_CASE("property: Lagrangian inversion of Euler images") {
    Gen g(808);
    for (int k = 0; k < 200; ++k) {
        Expr L = g.poly(2, true, 3, 3);
        Expr G = euler_lagrange(L, Space::SemiBasic);
        auto back = lagrangian_of(G, Space::SemiBasic);
        REQUIRE(back.has_value());
        CHECK(euler_lagrange(*back, Space::SemiBasic) == G);
    }
}
