#include "corpus.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "jetvar/parse.hpp"

namespace jetvar::cli {

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r"), e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

const std::set<std::string> kInputSections{"equation", "operator", "expr", "form", "options"};

std::string show_ok(std::optional<bool> b) { return b ? (*b ? "true" : "false") : "null"; }

// Compares a witness with an expected literal parsed in the same space.
bool witness_matches(const Witness& w, const std::string& expected, Decls& d) {
    return std::visit(
        [&](const auto& actual) -> bool {
            using T = std::decay_t<decltype(actual)>;
            if constexpr (std::is_same_v<T, Expr>) return parse_expr(expected, d) == actual;
            else if constexpr (std::is_same_v<T, DiffOperator>)
                return parse_operator(expected, d, actual.space()) == actual;
            else return parse_form(expected, d, actual.space()) == actual;
        },
        w.value);
}

void check_expectations(const Case& c, CaseResult& out) {
    const Report& r = out.report;
    Decls d;
    if (auto it = c.options.find("decls"); it != c.options.end()) {
        try {
            declare(d, it->second);
        } catch (const std::exception& e) {
            out.mismatches.push_back(std::string("decls: ") + e.what());
            return;
        }
    }
    for (auto& [key, value] : c.expect) {
        try {
            if (key == "exit") {
                if (std::to_string(r.exit_code) != value)
                    out.mismatches.push_back("exit " + std::to_string(r.exit_code) + ", expected " + value);
            } else if (key == "verdict") {
                if (r.verdict != value) out.mismatches.push_back("verdict " + r.verdict + ", expected " + value);
            } else if (key == "ok") {
                if (value != "all") throw std::invalid_argument("ok expects 'all'");
                if (!r.all_ok()) out.mismatches.push_back("not every certificate is ok");
            } else if (key.rfind("ok.", 0) == 0) {
                auto cert = r.find_certificate(key.substr(3));
                if (!cert) out.mismatches.push_back("no certificate " + key.substr(3));
                else if (show_ok(cert->ok) != value)
                    out.mismatches.push_back(key + " = " + show_ok(cert->ok) + ", expected " + value);
            } else if (key.rfind("witness.", 0) == 0) {
                auto w = r.find_witness(key.substr(8));
                if (!w) out.mismatches.push_back("no witness " + key.substr(8));
                else if (!witness_matches(*w, value, d))
                    out.mismatches.push_back(key + " = " + show(w->value) + ", expected " + value);
            } else if (key.rfind("detail.", 0) == 0) {
                std::string k = key.substr(7);
                auto it = std::find_if(r.details.begin(), r.details.end(), [&](auto& p) { return p.first == k; });
                if (it == r.details.end()) out.mismatches.push_back("no detail " + k);
                else if (it->second != value) out.mismatches.push_back(key + " = " + it->second + ", expected " + value);
            } else if (key == "warning") {
                bool found = std::any_of(r.warnings.begin(), r.warnings.end(),
                                         [&](auto& w) { return w.find(value) != std::string::npos; });
                if (!found) out.mismatches.push_back("no warning containing '" + value + "'");
            } else {
                out.mismatches.push_back("unknown expectation key " + key);
            }
        } catch (const std::exception& e) {
            out.mismatches.push_back(key + ": " + e.what());
        }
    }
}

}  // namespace

std::vector<Case> parse_cases(const std::string& text, const std::string& file) {
    std::vector<Case> out;
    std::istringstream in(text);
    std::string line, section;
    std::string* last = nullptr;  // value an indented line continues
    int lineno = 0;
    auto fail = [&](const std::string& msg) {
        if (out.empty()) {
            out.push_back({});
            out.back().name = file;
        }
        if (out.back().load_error.empty()) out.back().load_error = file + ":" + std::to_string(lineno) + ": " + msg;
    };
    auto assign = [&](const std::string& kv) {
        auto eq = kv.find('=');
        if (eq == std::string::npos) return fail("expected key = value");
        std::string k = trim(kv.substr(0, eq)), v = trim(kv.substr(eq + 1));
        Case& c = out.back();
        if (section == "expect") {
            c.expect.emplace_back(k, v);
            last = &c.expect.back().second;
        } else if (section == "run" && k == "command") {
            c.command = v;
            last = nullptr;
        } else if (kInputSections.count(section)) {
            last = &(c.options[k] = v);
        } else {
            fail("key outside an input section");
        }
    };
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (t[0] == '[') {
            auto close = t.find(']');
            if (close == std::string::npos) {
                fail("unterminated section header");
                continue;
            }
            section = t.substr(1, close - 1);
            std::string rest = trim(t.substr(close + 1));
            last = nullptr;
            if (section == "case") {
                out.push_back({});
                out.back().name = rest;
                out.back().origin = file + ":" + std::to_string(lineno);
            } else if (out.empty()) {
                fail("section before the first [case]");
            } else if (section == "run" && !rest.empty() && rest.find('=') == std::string::npos) {
                out.back().command = rest;
            } else if (!rest.empty()) {
                assign(rest);
            } else if (!kInputSections.count(section) && section != "expect" && section != "run") {
                fail("unknown section " + section);
            }
            continue;
        }
        if (out.empty()) {
            fail("content before the first [case]");
            continue;
        }
        if (line[0] == ' ' || line[0] == '\t') {
            if (!last) fail("indented line continues nothing");
            else *last += " " + t;
            continue;
        }
        assign(t);
    }
    for (auto& c : out)
        if (c.load_error.empty() && c.command.empty()) c.load_error = c.origin + ": case has no [run] command";
    return out;
}

std::vector<Case> load_corpus(const std::string& dir) {
    namespace fs = std::filesystem;
    std::vector<fs::path> files;
    for (auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".case") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::vector<Case> out;
    for (auto& f : files) {
        std::ifstream in(f);
        std::stringstream ss;
        ss << in.rdbuf();
        auto cs = parse_cases(ss.str(), f.filename().string());
        out.insert(out.end(), cs.begin(), cs.end());
    }
    return out;
}

CaseResult run_case(const Case& c) {
    CaseResult out;
    out.name = c.name;
    if (!c.load_error.empty()) {
        out.report.command = c.command;
        out.report.error = c.load_error;
        out.report.exit_code = kUsage;
        out.mismatches.push_back(c.load_error);
        return out;
    }
    out.report = run_command(c.command, c.options);
    if (c.expect.empty()) out.mismatches.push_back("case has no expectations");
    check_expectations(c, out);
    return out;
}

std::vector<CaseResult> run_corpus(const std::vector<Case>& cases, const std::string& filter, unsigned jobs) {
    std::vector<const Case*> picked;
    for (auto& c : cases)
        if (c.name.find(filter) != std::string::npos) picked.push_back(&c);
    std::vector<CaseResult> results(picked.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next++) < picked.size();) results[i] = run_case(*picked[i]);
    };
    jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(picked.size())));
    std::vector<std::thread> pool;
    for (unsigned k = 1; k < jobs; ++k) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    return results;
}

nlohmann::ordered_json corpus_json(const std::vector<CaseResult>& results, const std::string& filter,
                                   bool with_timing) {
    using nlohmann::ordered_json;
    ordered_json j;
    j["command"] = "corpus run";
    j["filter"] = filter;
    ordered_json cases = ordered_json::array();
    std::size_t passed = 0;
    for (auto& r : results) {
        ordered_json c;
        c["name"] = r.name;
        c["pass"] = r.pass();
        c["mismatches"] = r.mismatches;
        c["report"] = r.report.to_json(with_timing);
        cases.push_back(c);
        passed += r.pass();
    }
    j["cases"] = cases;
    j["passed"] = passed;
    j["failed"] = results.size() - passed;
    j["engine_version"] = kEngineVersion;
    return j;
}

std::string corpus_text(const std::vector<CaseResult>& results) {
    std::ostringstream os;
    std::size_t passed = 0;
    for (auto& r : results) {
        os << (r.pass() ? "PASS " : "FAIL ") << r.name << " (" << r.report.verdict << ")\n";
        for (auto& m : r.mismatches) os << "    " << m << "\n";
        passed += r.pass();
    }
    os << passed << "/" << results.size() << " cases passed\n";
    return os.str();
}

}  // namespace jetvar::cli
