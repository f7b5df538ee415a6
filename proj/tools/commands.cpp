#include "commands.hpp"

#include <chrono>
#include <functional>
#include <sstream>

#include "jetvar/hamiltonian.hpp"
#include "jetvar/operators.hpp"
#include "jetvar/parse.hpp"

namespace jetvar::cli {

namespace {

class UsageError : public std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Parsed inputs of one command; all share one declaration scope.
class Inputs {
public:
    Inputs(const Options& o, Report& r) : o_(o), r_(r) {
        if (auto it = o.find("decls"); it != o.end()) {
            declare(d_, it->second);
            r.input("decls", it->second);
        }
    }

    bool has(const std::string& k) const { return o_.count(k) > 0; }

    const std::string& raw(const std::string& k) const {
        auto it = o_.find(k);
        if (it == o_.end()) throw UsageError("missing required option --" + k);
        return it->second;
    }

    Expr expr(const std::string& k) {
        Expr e = parse_expr(raw(k), d_);
        r_.input(k, e);
        return e;
    }
    DiffOperator op(const std::string& k, Space s = Space::SemiBasic) {
        DiffOperator p = parse_operator(raw(k), d_, s);
        r_.input(k, p);
        return p;
    }
    Form form(const std::string& k, Space s = Space::Eqn) {
        Form f = parse_form(raw(k), d_, s);
        r_.input(k, f);
        return f;
    }
    int integer(const std::string& k, int dflt) {
        if (!has(k)) return dflt;
        try {
            std::size_t used = 0;
            int v = std::stoi(raw(k), &used);
            if (used != raw(k).size()) throw std::invalid_argument(k);
            r_.input(k, std::to_string(v));
            return v;
        } catch (const std::logic_error&) {
            throw UsageError("--" + k + " expects an integer");
        }
    }
    bool flag(const std::string& k) const { return has(k) && raw(k) != "false"; }

    EqContext equation() {
        EqContext ctx(expr("K"));
        if (ctx.order() % 2 == 0)
            r_.warnings.push_back("even-order equation: first-order closure results do not carry over");
        return ctx;
    }

    HomotopyOptions homotopy() {
        HomotopyOptions h;
        if (!has("base-point")) return h;
        std::stringstream ss(raw("base-point"));
        std::string item;
        while (std::getline(ss, item, ',')) {
            auto eq = item.find('=');
            if (eq == std::string::npos) throw UsageError("--base-point expects name=value pairs");
            std::string name = trim(item.substr(0, eq));
            auto c = parse_coord_name(name);
            if (!c || !c->is_jet()) throw UsageError("--base-point: '" + name + "' is not a jet coordinate");
            h.base[*c] = parse_expr(item.substr(eq + 1), d_);
        }
        r_.input("base-point", raw("base-point"));
        return h;
    }

private:
    static std::string trim(std::string s) {
        auto b = s.find_first_not_of(" \t"), e = s.find_last_not_of(" \t");
        return b == std::string::npos ? "" : s.substr(b, e - b + 1);
    }

    const Options& o_;
    Report& r_;
    Decls d_;
};

void finish(Report& r, bool positive, const std::string& verdict) {
    r.verdict = verdict;
    if (!positive) r.exit_code = kFailure;
    else if (!r.all_ok()) r.exit_code = kInconclusive;
}

void inconclusive(Report& r, const std::string& why) {
    r.verdict = "inconclusive";
    r.error = why;
    r.exit_code = kInconclusive;
}

DiffOperator potential_defect(const DiffOperator& S, const Expr& P) {
    DiffOperator f = frechet(P, Space::SemiBasic);
    return retag(S, Space::SemiBasic) - (f - adjoint(f)).scaled(Expr::rational(1, 2));
}

// Symplectic-Hamiltonian route for a time-independent pair; nullopt if it cannot decide.
std::optional<bool> hamiltonian_route(const DiffOperator& S, const EqContext& ctx) {
    auto sym = is_symplectic(S);
    if (!sym.symplectic()) return false;
    if (!sym.P) return std::nullopt;
    auto h = hamiltonian_of(S, ctx, *sym.P);
    if (h.ok()) return true;
    if (h.reason.rfind("not Hamiltonian", 0) == 0) return false;
    return std::nullopt;
}

bool time_independent(const DiffOperator& E, const Expr& K) {
    auto t = JetCoord::t();
    if (!partial(K, t).is_zero()) return false;
    for (auto& [k, c] : E.terms())
        if (!partial(c, t).is_zero()) return false;
    return true;
}

std::string yes_no(std::optional<bool> b) { return b ? (*b ? "true" : "false") : "undecided"; }

void check_variational(Inputs& in, Report& r) {
    EqContext ctx = in.equation();
    DiffOperator E = in.op("E");
    int bound = in.integer("order-bound", -1);
    std::optional<bool> variational;
    if (in.has("Q")) {
        Expr q = in.expr("Q");
        Expr L;
        if (in.has("L")) {
            L = in.expr("L");
        } else {
            Space f = Space::Free;
            Expr d = Expr::coord(JetCoord::u(1, 0)) - ctx.K();
            Expr src = retag(E, f).apply(d) - euler_lagrange(q * d, f);
            auto hv = helmholtz_and_lagrangian(src, Space::SemiBasic);
            if (!hv.is_euler_image) {
                r.certify("source Helmholtz defect", hv.defect);
                r.witness("Q", q);
                finish(r, false, "not_variational");
                return;
            }
            if (!hv.A) return inconclusive(r, "source term is an Euler image but no Lagrangian was reconstructed");
            L = *hv.A;
        }
        auto w = verify_variational(E, ctx, q, L);
        r.certify("F_Q* - F_Q - E", w.operator_defect);
        r.certify("E(Delta) - E(Q Delta + L)", w.residual);
        r.witness("Q", q);
        r.witness("L", L);
        if (!w.ok()) {
            finish(r, false, "identity_fails");
            return;
        }
        variational = true;
    } else {
        VariationalSearch s;
        try {
            s = search_variational(E, ctx, bound);
        } catch (const AnsatzError& e) {
            return inconclusive(r, e.what());
        }
        if (!s.Q) {
            return inconclusive(r, "no Q found with order bound " +
                                       std::to_string(bound < 0 ? default_order_bound(E) : bound) +
                                       ": increase --order-bound or supply --Q");
        }
        r.witness("Q", *s.Q);
        r.certify("source Helmholtz defect", s.helmholtz.defect);
        if (!s.helmholtz.is_euler_image) {
            finish(r, false, "not_variational");
            variational = false;
        } else if (!s.witness) {
            return inconclusive(r, "source term is an Euler image but no Lagrangian was reconstructed");
        } else {
            r.witness("L", s.witness->L);
            r.certify("F_Q* - F_Q - E", s.witness->operator_defect);
            r.certify("E(Delta) - E(Q Delta + L)", s.witness->residual);
            variational = true;
        }
    }
    if (time_independent(E, ctx.K())) {
        auto ham = hamiltonian_route(E, ctx);
        r.detail("hamiltonian route", yes_no(ham));
        if (ham && variational && *ham != *variational) r.detail("routes", "disagree");
        else if (ham && variational) r.detail("routes", "agree");
    }
    if (r.verdict.empty()) finish(r, true, "variational");
}

void first_order(Inputs& in, Report& r) {
    EqContext ctx = in.equation();
    FotResult f = fot_test(ctx);
    r.witness("khat2", f.khat2);
    r.witness("kappa", f.kappa);
    r.certify("d_H kappa", f.conservation.dh_residual);
    if (f.verdict == FotVerdict::Nontrivial) r.witness("characteristic", f.conservation.Q);
    if (f.R) {
        Expr A = f.kappa.coef(Basis{false, true, {}}), B = f.kappa.coef(Basis{true, false, {}});
        r.witness("R", *f.R);
        r.certify("X(R) - khat2 R", ctx.X(*f.R) - A * *f.R);
        r.certify("T(R) - B R", ctx.T(*f.R) - B * *f.R);
    }
    if (f.E) {
        r.witness("E", *f.E);
        r.certify("d_H omega(E)", omega_from_operator(*f.E, ctx).closure_residual);
    }
    std::string v = to_string(f.verdict);
    switch (f.verdict) {
    case FotVerdict::OperatorFound: finish(r, true, v); break;
    case FotVerdict::NotClosed:
    case FotVerdict::Nontrivial: finish(r, false, v); break;
    case FotVerdict::Inconclusive: inconclusive(r, "kappa is closed and trivial but no multiplier R was found"); break;
    }
    r.verdict = v;
}

void symplectic(Inputs& in, Report& r) {
    DiffOperator S = in.op("S");
    auto v = is_symplectic(S);
    r.certify("S + S*", v.skew_defect);
    if (v.skew) r.certify("delta_V(dx th0 S(th0))", v.closure_residual);
    if (v.P) {
        r.witness("P", *v.P);
        r.certify("S - (F_P - F_P*)/2", potential_defect(S, *v.P));
        r.detail("potential route", v.potential_route);
    }
    if (!v.reason.empty()) r.detail("reason", v.reason);
    finish(r, v.symplectic(), v.symplectic() ? "symplectic" : "not_symplectic");
}

void hamiltonian(Inputs& in, Report& r) {
    EqContext ctx = in.equation();
    DiffOperator S = in.op("S");
    Expr P;
    if (in.has("P")) {
        P = in.expr("P");
    } else {
        auto v = is_symplectic(S);
        if (!v.symplectic()) {
            r.certify("S + S*", v.skew_defect);
            if (v.skew) r.certify("delta_V(dx th0 S(th0))", v.closure_residual);
            finish(r, false, "not_symplectic");
            return;
        }
        if (!v.P) return inconclusive(r, "no symplectic potential found: supply --P");
        P = *v.P;
    }
    r.witness("P", P);
    r.certify("S - (F_P - F_P*)/2", potential_defect(S, P));
    auto h = hamiltonian_of(S, ctx, P);
    r.witness("G", h.G);
    if (h.H) {
        r.witness("H", *h.H);
        r.certify("E(H) - G", euler_lagrange(*h.H, Space::SemiBasic) - h.G);
        finish(r, true, "hamiltonian");
        return;
    }
    auto hv = helmholtz_and_lagrangian(h.G, Space::SemiBasic);
    r.certify("F_G - F_G*", hv.defect);
    if (!hv.is_euler_image) finish(r, false, "not_hamiltonian");
    else inconclusive(r, h.reason);
}

void conservation(Inputs& in, Report& r) {
    EqContext ctx = in.equation();
    Form kappa = in.form("kappa");
    auto v = conservation_characteristic(kappa, ctx);
    r.certify("d_H kappa", v.dh_residual);
    r.witness("characteristic", v.Q);
    Expr A = kappa.coef(Basis{false, true, {}}), B = kappa.coef(Basis{true, false, {}});
    if (v.f) {
        r.witness("f", *v.f);
        r.certify("X(f) - A", ctx.X(*v.f) - A);
        r.certify("T(f) - B", ctx.T(*v.f) - B);
    }
    if (v.R) {
        r.witness("R", *v.R);
        r.certify("X(R) - A R", ctx.X(*v.R) - A * *v.R);
        r.certify("T(R) - B R", ctx.T(*v.R) - B * *v.R);
    }
    switch (v.trivial) {
    case Triviality::NotClosed: finish(r, false, "not_closed"); break;
    case Triviality::Trivial: finish(r, true, "trivial"); break;
    case Triviality::Nontrivial: finish(r, true, "nontrivial"); break;
    case Triviality::Undetermined: inconclusive(r, "closed with zero characteristic but no potential found"); break;
    }
}

void helmholtz(Inputs& in, Report& r) {
    Space s = Space::SemiBasic;
    if (in.has("space")) {
        const std::string& name = in.raw("space");
        if (name == "free") s = Space::Free;
        else if (name != "semibasic") throw UsageError("--space expects free or semibasic");
        r.input("space", name);
    }
    Expr Q = in.expr("Q");
    auto v = helmholtz_and_lagrangian(Q, s, in.homotopy());
    r.certify("F_Q - F_Q*", v.defect);
    if (!v.is_euler_image) return finish(r, false, "not_euler_image");
    if (!v.A) return inconclusive(r, "Euler image but no Lagrangian was reconstructed");
    r.witness("L", *v.A);
    r.certify("E(L) - Q", euler_lagrange(*v.A, s) - Q);
    finish(r, true, "euler_image");
}

void canonical_rep(Inputs& in, Report& r) {
    EqContext ctx = in.equation();
    Form omega = in.form("omega");
    auto c = canonical_representative(omega, ctx);
    r.witness("epsilon", c.cls.epsilon);
    r.witness("omega_c", c.cls.omega);
    r.certify("eps* + eps", c.cls.skew_residual);
    r.certify("d_H omega_c", c.cls.closure_residual);
    r.certify("th0 L*(eps)", c.cls.lin_residual);
    if (c.xi) {
        r.witness("xi", *c.xi);
        r.certify("omega - omega_c - d_H xi", omega - c.cls.omega - d_h(*c.xi, &ctx));
    } else {
        r.detail("xi", "not found");
    }
    if (c.xi && r.all_ok()) finish(r, true, "canonical");
    else if (!c.cls.is_skew() || !c.cls.lin_ok()) finish(r, false, "identity_fails");
    else inconclusive(r, "no xi with omega - omega_c = d_H xi was found");
}

void lambda(Inputs& in, Report& r) {
    EqContext ctx = in.equation();
    Form omega = in.form("omega");
    HomotopyOptions opt = in.homotopy();
    if (in.has("correction")) {
        Form zeta = in.form("correction");
        omega = omega + d_h(zeta, &ctx);
        r.witness("omega", omega);
    } else if (!d_v(omega).is_zero()) {
        auto c = dv_closed_representative(omega, ctx, opt);
        if (!c) return inconclusive(r, "no d_V-closed representative found");
        r.witness("zeta", c->zeta);
        omega = c->omega;
        r.witness("omega", omega);
    }
    r.certify("d_V omega", d_v(omega));
    LambdaResult res = in.has("eta") ? lambda_for_eta(in.form("eta"), ctx, opt) : lambda_invariant(omega, ctx, opt);
    r.witness("eta", res.eta);
    r.witness("lambda", res.lambda);
    r.certify("d_V eta - omega", d_v(res.eta) - omega);
    r.certify("d_V lambda - d_H eta", res.residual);
    if (in.has("lambda")) {
        Form given = in.form("lambda");
        // An x-divergence certifies the class; T-exact differences are not detected.
        bool same = same_lambda_class(res.lambda, given);
        r.detail("same class as given", same ? "true" : "not shown");
    }
    bool ok = true;
    for (auto& c : r.certificates) ok &= c.ok != false;
    finish(r, ok, ok ? "lambda" : "identity_fails");
}

void potentialize_cmd(Inputs& in, Report& r) {
    Expr h1 = in.expr("H1");
    int depth = in.integer("depth", 1);
    auto p = potentialize(h1, depth);
    r.witness("K", p.K);
    r.certify("Euler change of variables", p.change_of_variables_residual);
    if (p.witness) {
        r.witness("Q", p.witness->Q);
        r.witness("L", p.witness->L);
        r.certify("F_Q* - F_Q - E", p.witness->operator_defect);
        r.certify("E(Delta) - E(Q Delta + L)", p.witness->residual);
    } else {
        r.detail("variational witness", depth % 2 == 0 ? "none for even depth" : "flow does not depend on u");
    }
    finish(r, r.all_ok(), "potential_form");
}

void report_compat(const Compatibility& c, Report& r) {
    r.witness("G", c.G);
    r.certify("E(G)", c.exactness_residual);
    if (c.F) {
        r.witness("F", *c.F);
        r.certify("F_F - F_F*", c.helmholtz.defect);
    }
    if (c.H2) {
        r.witness("H2", *c.H2);
        r.certify("E(H2) - F", euler_lagrange(*c.H2, Space::SemiBasic) - *c.F);
    }
}

void compat(Inputs& in, Report& r) {
    if (in.has("experiment")) {
        if (in.raw("experiment") != "cylindrical-kdv") throw UsageError("unknown experiment " + in.raw("experiment"));
        r.input("experiment", in.raw("experiment"));
        auto e = cylindrical_kdv_experiment();
        r.witness("K from D0", e.K_from_D0);
        r.witness("K from D1", e.K_from_D1);
        r.detail("sign", std::to_string(e.sign));
        if (e.sign != 0) report_compat(e.compat, r);
        r.detail("compatibility", e.compat.verdict);
        r.verdict = "raw_certificates";
        return;
    }
    DiffOperator d0 = in.op("D0");
    Expr h1 = in.expr("H1");
    int depth = in.integer("depth", 1);
    if (!in.flag("pipeline")) {
        auto c = compatibility_H2(d0, h1, depth);
        report_compat(c, r);
        r.detail("verdict", c.verdict);
        if (c.ok()) finish(r, true, "compatible");
        else if (c.verdict.rfind("not compatible", 0) == 0) finish(r, false, "not_compatible");
        else inconclusive(r, c.verdict);
        return;
    }
    r.input("pipeline", "true");
    auto b = biht_pipeline(d0, h1, depth);
    report_compat(b.compat, r);
    if (!b.compat.ok()) {
        if (b.compat.verdict.rfind("not compatible", 0) == 0) finish(r, false, "not_compatible");
        else inconclusive(r, b.compat.verdict);
        return;
    }
    r.witness("E", b.E);
    r.witness("K", b.K);
    r.certify("E(K) + E(H2|)", b.transfer_residual);
    r.certify("E + E*", b.symplectic.skew_defect);
    if (b.symplectic.skew) r.certify("delta_V(dx th0 E(th0))", b.symplectic.closure_residual);
    if (b.witness) {
        r.witness("Q", b.witness->Q);
        r.witness("L", b.witness->L);
        r.certify("F_Q* - F_Q - E", b.witness->operator_defect);
        r.certify("E(Delta) - E(Q Delta + L)", b.witness->residual);
        finish(r, true, "bi_hamiltonian");
    } else if (!b.symplectic.symplectic()) {
        r.detail("failure", b.failure);
        finish(r, false, "not_symplectic");
    } else {
        inconclusive(r, b.failure);
    }
}

void dorfman(Inputs& in, Report& r) {
    Expr c1 = in.has("c1") ? in.expr("c1") : Expr();
    if (in.has("h")) {
        Expr h = in.expr("h");
        Expr c2 = in.has("c2") ? in.expr("c2") : Expr();
        DiffOperator D = dorfman_operator(h, c1, c2);
        r.witness("D", D);
        r.certify("D + D*", D + adjoint(D));
        finish(r, r.all_ok(), "skew_operator");
        return;
    }
    Expr k1 = in.expr("k1"), k2 = in.expr("k2");
    DiffOperator E = pulled_back(k1, k2, c1);
    r.witness("E", E);
    auto v = is_symplectic(E, false);
    r.certify("E + E*", v.skew_defect);
    if (v.skew) r.certify("delta_V(dx th0 E(th0))", v.closure_residual);
    finish(r, v.symplectic(), v.symplectic() ? "symplectic" : "not_symplectic");
}

using Handler = std::function<void(Inputs&, Report&)>;

const std::map<std::string, Handler>& handlers() {
    static const std::map<std::string, Handler> h{
        {"check-variational", check_variational}, {"first-order", first_order},
        {"symplectic", symplectic},               {"hamiltonian", hamiltonian},
        {"conservation", conservation},           {"helmholtz", helmholtz},
        {"canonical-rep", canonical_rep},         {"lambda", lambda},
        {"potentialize", potentialize_cmd},       {"compat", compat},
        {"dorfman", dorfman},
    };
    return h;
}

}  // namespace

void declare(Decls& d, const std::string& decls) {
    std::string s = decls;
    while (!s.empty() && (s.back() == ' ' || s.back() == ';')) s.pop_back();
    parse_expr(s + "; 0", d);
}

const std::vector<CommandSpec>& command_specs() {
    static const OptionSpec decls{"decls", "declarations, e.g. \"param c1, c2; func R(t,x,u,u_x)\""};
    static const OptionSpec K{"K", "right-hand side of u_t = K"};
    static const OptionSpec bound{"order-bound", "order bound for the Q ansatz"};
    static const OptionSpec base{"base-point", "homotopy base point, e.g. \"u_x=1\""};
    static const std::vector<CommandSpec> specs{
        {"check-variational", "verify or search for E(u_t - K) = E(Q(u_t - K) + L)",
         {K, {"E", "operator"}, {"Q", "multiplier (searched when absent)"}, {"L", "Lagrangian correction"}, bound, decls}},
        {"first-order", "first-order symplectic operator test for third-order K", {K, decls}},
        {"symplectic", "skewness, closure and potential of an operator", {{"S", "operator"}, decls}},
        {"hamiltonian", "Hamiltonian check 1/2 P_t + S(K) = E(H)",
         {K, {"S", "symplectic operator"}, {"P", "potential (found when absent)"}, decls}},
        {"conservation", "characteristic and triviality of a (1,0)-form", {K, {"kappa", "form A dx + B dt"}, decls}},
        {"helmholtz", "Euler-image test and Lagrangian", {{"Q", "source expression"}, {"space", "free or semibasic"}, base, decls}},
        {"canonical-rep", "skew canonical representative of a d_H-closed (1,2)-form", {K, {"omega", "form"}, decls}},
        {"lambda", "lambda invariant of a (1,2)-class",
         {K, {"omega", "form"}, {"correction", "zeta with omega + d_H zeta d_V-closed"}, {"eta", "supplied eta"},
          {"lambda", "expected lambda"}, base, decls}},
        {"potentialize", "potential form v = u_depth of v_t = D_x E(H1)", {{"H1", "Hamiltonian"}, {"depth", "depth"}, decls}},
        {"compat", "compatibility D0 E(H1) = D_x^depth E(H2)",
         {{"D0", "operator in v"}, {"H1", "Hamiltonian"}, {"depth", "depth"},
          {"pipeline", "also run the bi-Hamiltonian pipeline", true}, {"experiment", "cylindrical-kdv"}, decls}},
        {"dorfman", "Dorfman operator from h, or the pulled-back member from k1, k2",
         {{"h", "h(v)"}, {"k1", "k1"}, {"k2", "k2"}, {"c1", "c1"}, {"c2", "c2 (with --h)"}, decls}},
    };
    return specs;
}

Report run_command(const std::string& name, const Options& opts) {
    Report r;
    r.command = name;
    auto start = std::chrono::steady_clock::now();
    auto h = handlers().find(name);
    try {
        if (h == handlers().end()) throw UsageError("unknown command " + name);
        Inputs in(opts, r);
        h->second(in, r);
    } catch (const UsageError& e) {
        r.error = e.what();
        r.exit_code = kUsage;
    } catch (const ParseError& e) {
        r.error = std::string("parse error: ") + e.what();
        r.exit_code = kUsage;
    } catch (const HomotopyError& e) {
        r.error = e.what();
        r.exit_code = kInconclusive;
    } catch (const AnsatzError& e) {
        r.error = e.what();
        r.exit_code = kInconclusive;
    } catch (const std::logic_error& e) {
        // Precondition violations: wrong order, non-skew operator, wrong form degree.
        r.error = e.what();
        r.exit_code = kUsage;
    } catch (const std::exception& e) {
        r.error = e.what();
        r.exit_code = kInconclusive;
    }
    if (r.exit_code != kOk && r.verdict.empty()) r.verdict = r.exit_code == kUsage ? "error" : "inconclusive";
    r.timing_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return r;
}

}  // namespace jetvar::cli
