#pragma once

#include <map>
#include <string>
#include <vector>

#include "jetvar/parse.hpp"
#include "report.hpp"

namespace jetvar::cli {

using Options = std::map<std::string, std::string>;

struct OptionSpec {
    std::string name;
    std::string help;
    bool flag = false;
};

struct CommandSpec {
    std::string name;
    std::string help;
    std::vector<OptionSpec> options;
};

// Applies a declaration list such as "param c1, c2; func R(t,x,u)".
void declare(Decls& d, const std::string& decls);

// Every engine subcommand with its options; `corpus` is handled by the corpus runner.
const std::vector<CommandSpec>& command_specs();

// Runs one engine subcommand; never throws.
Report run_command(const std::string& name, const Options& opts);

}  // namespace jetvar::cli
