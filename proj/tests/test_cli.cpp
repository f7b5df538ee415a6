#include "corpus.hpp"
#include "corpus_data.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace jetvar;
using namespace jetvar::cli;
using testing_support::P;

namespace {

std::vector<Case> bundled() { return load_corpus(JETVAR_CORPUS_DIR); }

}  // namespace

TEST_CASE("dispatch examples") {
    auto kdv = run_command("first-order", {{"K", corpus::kdv}});
    CHECK(kdv.verdict == "no_operator_not_closed");
    CHECK(kdv.exit_code == kFailure);

    auto pc = run_command("first-order", {{"K", "u_xxx + (1/2)*u_x^2 - u/(2*t)"}});
    CHECK(pc.verdict == "operator_found");
    CHECK(pc.exit_code == kOk);
    REQUIRE(pc.find_witness("R"));
    CHECK(std::get<Expr>(pc.find_witness("R")->value) == P("t"));
    CHECK(pc.all_ok());
}

TEST_CASE("exit codes") {
    CHECK(run_command("first-order", {{"K", "u_xxx +"}}).exit_code == kUsage);
    CHECK(run_command("first-order", {}).exit_code == kUsage);
    CHECK(run_command("no-such-command", {}).exit_code == kUsage);
    CHECK(run_command("first-order", {{"K", corpus::heat}}).exit_code == kUsage);
    CHECK(run_command("symplectic", {{"S", "u_xx*Dx + 1/2*u_xxx"}}).exit_code == kFailure);
    CHECK(run_command("symplectic", {{"S", "u*Dx^2"}}).exit_code == kFailure);
    // Order bound 0 leaves the ansatz empty for D_x^3.
    auto nb = run_command("check-variational", {{"K", corpus::hd3}, {"E", "Dx^3"}, {"order-bound", "0"}});
    CHECK(nb.exit_code == kInconclusive);
    CHECK(nb.error.find("order bound") != std::string::npos);
    CHECK(run_command("check-variational", {{"K", corpus::hd3}, {"E", "Dx^3"}, {"order-bound", "x"}}).exit_code ==
          kUsage);
    CHECK(run_command("helmholtz", {{"Q", "u"}, {"space", "elsewhere"}}).exit_code == kUsage);
    CHECK(run_command("lambda", {{"K", corpus::schwarzian}, {"omega", corpus::omega1}, {"base-point", "t=1"}})
              .exit_code == kUsage);
}

TEST_CASE("even-order input warns") {
    auto r = run_command("check-variational", {{"K", corpus::heat}, {"E", "Dx"}});
    REQUIRE(r.warnings.size() == 1);
    CHECK(r.warnings[0].find("even-order") != std::string::npos);
    CHECK(run_command("check-variational", {{"K", corpus::kdv}, {"E", "Dx"}}).warnings.empty());
}

TEST_CASE("declarations are shared by all inputs") {
    auto r = run_command("first-order", {{"decls", "param c1, c2"}, {"K", "u_xxx + (c1*t + c2)^(-1/2)*u_x^2"}});
    CHECK(r.verdict == "operator_found");
    auto s = run_command("dorfman", {{"decls", "param k1, k2, c1;"}, {"k1", "k1"}, {"k2", "k2"}, {"c1", "c1"}});
    CHECK(s.verdict == "symplectic");
}

TEST_CASE("report certificates") {
    Report r;
    CHECK(r.certify("zero", Expr()).ok == true);
    CHECK(r.certify("nonzero", P("u")).ok == false);
    CHECK_FALSE(r.certify("undecided", P("sqrt(u^2 + 2*u + 1) - u - 1")).ok.has_value());
    CHECK(r.certify("zero form", Form(Space::Eqn, 1, 1)).residual == "0");
    CHECK_FALSE(r.all_ok());
    auto j = r.to_json(false);
    CHECK(j["certificates"]["undecided"]["ok"].is_null());
    CHECK(j["certificates"]["nonzero"]["ok"] == false);
    CHECK(j["engine_version"] == kEngineVersion);
    CHECK_FALSE(j.contains("timing_ms"));
}

TEST_CASE("report JSON shape") {
    auto r = run_command("symplectic", {{"S", corpus::e1_schwarzian}});
    auto j = r.to_json();
    for (auto key : {"command", "inputs", "certificates", "witnesses", "verdict", "exit_code", "timing_ms",
                     "engine_version"})
        CHECK(j.contains(key));
    CHECK(j["witnesses"]["P"] == "-u_x^-1");
    CHECK(j["inputs"]["S"] == DiffOperator(testing_support::Op(corpus::e1_schwarzian, Space::SemiBasic)).str());
}

TEST_CASE("case file format") {
    const char* text =
        "# comment\n"
        "[case] first\n"
        "[equation] K = u_xxx\n"
        "[form] kappa = dx * u\n"
        "    + dt * u_xx\n"
        "[run] conservation\n"
        "[expect]\n"
        "verdict = nontrivial\n"
        "witness.characteristic = 1\n"
        "\n"
        "[case] second\n"
        "[options]\n"
        "depth = 3\n"
        "[expr] H1 = 2*sqrt(v)\n"
        "[run]\n"
        "command = potentialize\n"
        "[expect] witness.K = u_xxx^(-1/2)\n";
    auto cs = parse_cases(text, "inline");
    REQUIRE(cs.size() == 2);
    CHECK(cs[0].name == "first");
    CHECK(cs[0].options.at("kappa") == "dx * u + dt * u_xx");
    CHECK(cs[0].command == "conservation");
    CHECK(cs[1].options.at("depth") == "3");
    CHECK(cs[1].command == "potentialize");
    for (auto& c : cs) CHECK(run_case(c).pass());

    auto bad = parse_cases("[case] x\n[equation] K = u_xxx\n", "inline");
    REQUIRE(bad.size() == 1);
    CHECK_FALSE(bad[0].load_error.empty());
    CHECK(parse_cases("K = u\n", "inline")[0].load_error.find("before the first") != std::string::npos);
}

TEST_CASE("failing cases are isolated and reported") {
    auto cs = parse_cases(
        "[case] wrong\n[equation] K = u_xxx + u*u_x\n[run] first-order\n[expect] verdict = operator_found\n"
        "[case] broken\n[equation] K = u_xxx +\n[run] first-order\n[expect] exit = 0\n"
        "[case] right\n[equation] K = u_xxx + u*u_x\n[run] first-order\n[expect] exit = 1\n",
        "inline");
    auto rs = run_corpus(cs, "", 3);
    REQUIRE(rs.size() == 3);
    CHECK_FALSE(rs[0].pass());
    CHECK_FALSE(rs[1].pass());
    CHECK(rs[1].report.exit_code == kUsage);
    CHECK(rs[2].pass());
}

TEST_CASE("bundled corpus") {
    auto cases = bundled();
    REQUIRE(cases.size() >= 30);
    auto results = run_corpus(cases, "", 4);
    for (auto& r : results) {
        INFO(r.name, ": ", corpus_text({r}));
        CHECK(r.pass());
    }
}

TEST_CASE("corpus filter") {
    auto cases = bundled();
    auto none = run_corpus(cases, "matches-nothing", 2);
    CHECK(none.empty());
    CHECK(corpus_json(none, "matches-nothing", false)["failed"] == 0);
    auto sch = run_corpus(cases, "schwarzian-omega", 2);
    REQUIRE_FALSE(sch.empty());
    for (auto& r : sch) {
        CHECK(r.name.find("schwarzian-omega") != std::string::npos);
        CHECK((r.report.command == "lambda" || r.report.command == "canonical-rep"));
    }
}

TEST_CASE("parallel and serial corpus runs are identical modulo timing") {
    auto cases = bundled();
    auto serial = corpus_json(run_corpus(cases, "", 1), "", false).dump();
    auto parallel = corpus_json(run_corpus(cases, "", 8), "", false).dump();
    CHECK(serial == parallel);
    CHECK(corpus_text(run_corpus(cases, "", 1)) == corpus_text(run_corpus(cases, "", 8)));
}

TEST_CASE("property: an all-ok report has only literally zero residuals") {
    testing_support::Gen g(4001);
    for (int k = 0; k < 200; ++k) {
        Expr q = g.poly(3, k % 2 == 0, 3, 3);
        Report r = run_command("helmholtz", {{"Q", q.str()}});
        if (r.all_ok()) {
            for (auto& c : r.certificates) CHECK(c.residual == "0");
            CHECK(r.exit_code == kOk);
        } else {
            CHECK(r.exit_code != kOk);
        }
    }
}
