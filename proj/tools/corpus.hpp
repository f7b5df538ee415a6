#pragma once

#include <string>
#include <utility>
#include <vector>

#include "commands.hpp"

namespace jetvar::cli {

struct Case {
    std::string name;
    std::string origin;  // file:line
    std::string command;
    Options options;
    std::vector<std::pair<std::string, std::string>> expect;
    std::string load_error;
};

struct CaseResult {
    std::string name;
    Report report;
    std::vector<std::string> mismatches;
    bool pass() const { return mismatches.empty(); }
};

// Sectioned text: `[case] name`, then `[equation] K = ...`, `[operator] E = ...`, `[form] omega = ...`,
// `[expr] ...`, `[options] ...`, `[run] command`, `[expect] key = value`. Keys start in column 0;
// indented lines continue the previous value.
std::vector<Case> parse_cases(const std::string& text, const std::string& file);
std::vector<Case> load_corpus(const std::string& dir);

// Cases whose name contains the filter, run on `jobs` threads; results keep the input order.
std::vector<CaseResult> run_corpus(const std::vector<Case>& cases, const std::string& filter, unsigned jobs);

CaseResult run_case(const Case& c);

nlohmann::ordered_json corpus_json(const std::vector<CaseResult>& results, const std::string& filter,
                                   bool with_timing = true);
std::string corpus_text(const std::vector<CaseResult>& results);

}  // namespace jetvar::cli
