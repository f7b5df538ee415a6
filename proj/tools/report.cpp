#include "report.hpp"

#include <sstream>

namespace jetvar::cli {

namespace {

std::optional<bool> combine(std::optional<bool> acc, ZeroTest z) {
    if (z == ZeroTest::NonZero) return false;
    if (z == ZeroTest::Inconclusive && acc == true) return std::nullopt;
    return acc;
}

}  // namespace

std::string show(const Value& v) {
    return std::visit([](const auto& x) { return x.str(); }, v);
}

std::optional<bool> zero_verdict(const Value& v) {
    std::optional<bool> ok = true;
    if (auto e = std::get_if<Expr>(&v)) return combine(ok, e->zero_test());
    if (auto op = std::get_if<DiffOperator>(&v)) {
        for (auto& [k, c] : op->terms()) {
            ok = combine(ok, c.zero_test());
            if (ok == false) break;
        }
        return ok;
    }
    for (auto& [b, c] : std::get<Form>(v).terms()) {
        ok = combine(ok, c.zero_test());
        if (ok == false) break;
    }
    return ok;
}

void Report::input(const std::string& name, const Value& v) { inputs.emplace_back(name, show(v)); }

const Certificate& Report::certify(const std::string& name, const Value& residual) {
    certificates.push_back({name, show(residual), zero_verdict(residual)});
    return certificates.back();
}

bool Report::all_ok() const {
    for (auto& c : certificates)
        if (c.ok != true) return false;
    return true;
}

const Witness* Report::find_witness(const std::string& name) const {
    for (auto& w : witnesses)
        if (w.name == name) return &w;
    return nullptr;
}

const Certificate* Report::find_certificate(const std::string& name) const {
    for (auto& c : certificates)
        if (c.name == name) return &c;
    return nullptr;
}

nlohmann::ordered_json Report::to_json(bool with_timing) const {
    using nlohmann::ordered_json;
    ordered_json j;
    j["command"] = command;
    ordered_json in = ordered_json::object();
    for (auto& [k, v] : inputs) in[k] = v;
    j["inputs"] = in;
    ordered_json certs = ordered_json::object();
    for (auto& c : certificates) {
        ordered_json e;
        e["residual"] = c.residual;
        e["ok"] = c.ok ? ordered_json(*c.ok) : ordered_json(nullptr);
        certs[c.name] = e;
    }
    j["certificates"] = certs;
    ordered_json wit = ordered_json::object();
    for (auto& w : witnesses) wit[w.name] = show(w.value);
    j["witnesses"] = wit;
    if (!details.empty()) {
        ordered_json d = ordered_json::object();
        for (auto& [k, v] : details) d[k] = v;
        j["details"] = d;
    }
    j["verdict"] = verdict;
    if (!warnings.empty()) j["warnings"] = warnings;
    if (!error.empty()) j["error"] = error;
    j["exit_code"] = exit_code;
    if (with_timing) j["timing_ms"] = timing_ms;
    j["engine_version"] = kEngineVersion;
    return j;
}

std::string Report::text() const {
    std::ostringstream os;
    os << command << ": " << (verdict.empty() ? "error" : verdict) << "\n";
    for (auto& w : warnings) os << "  warning: " << w << "\n";
    if (!error.empty()) os << "  error: " << error << "\n";
    for (auto& c : certificates)
        os << "  [" << (c.ok ? (*c.ok ? "ok" : "FAIL") : "??") << "] " << c.name << " = " << c.residual << "\n";
    for (auto& w : witnesses) os << "  " << w.name << " = " << show(w.value) << "\n";
    for (auto& [k, v] : details) os << "  " << k << ": " << v << "\n";
    return os.str();
}

}  // namespace jetvar::cli
