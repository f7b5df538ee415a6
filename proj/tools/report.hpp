#pragma once

#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "jetvar/forms.hpp"
#include "jetvar/jet.hpp"
#include "json.hpp"

namespace jetvar::cli {

inline constexpr const char* kEngineVersion = "0.1.0";

enum Exit { kOk = 0, kFailure = 1, kInconclusive = 2, kUsage = 64 };

using Value = std::variant<Expr, DiffOperator, Form>;

struct Certificate {
    std::string name;
    std::string residual;
    std::optional<bool> ok;  // null when the zero test is inconclusive
};

struct Witness {
    std::string name;
    Value value;
};

struct Report {
    std::string command;
    std::vector<std::pair<std::string, std::string>> inputs;
    std::vector<Certificate> certificates;
    std::vector<Witness> witnesses;
    std::vector<std::pair<std::string, std::string>> details;
    std::vector<std::string> warnings;
    std::string verdict;
    std::string error;
    int exit_code = kOk;
    double timing_ms = 0;

    void input(const std::string& name, const Value& v);
    void input(const std::string& name, const std::string& v) { inputs.emplace_back(name, v); }
    // ok = true only for a literally zero residual.
    const Certificate& certify(const std::string& name, const Value& residual);
    void witness(const std::string& name, const Value& v) { witnesses.push_back({name, v}); }
    void detail(const std::string& k, const std::string& v) { details.emplace_back(k, v); }

    bool all_ok() const;
    const Witness* find_witness(const std::string& name) const;
    const Certificate* find_certificate(const std::string& name) const;

    nlohmann::ordered_json to_json(bool with_timing = true) const;
    std::string text() const;
};

std::string show(const Value& v);
std::optional<bool> zero_verdict(const Value& v);

}  // namespace jetvar::cli
