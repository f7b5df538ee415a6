#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "commands.hpp"
#include "corpus.hpp"

#ifndef JETVAR_CORPUS_DIR
#define JETVAR_CORPUS_DIR "corpus"
#endif

using namespace jetvar::cli;

int main(int argc, char** argv) {
    CLI::App app{"jetvar: variational bicomplex engine for scalar evolution equations"};
    app.require_subcommand(1);
    bool json = false;
    app.add_flag("--json", json, "emit the report as JSON");
    app.set_version_flag("--version", kEngineVersion);

    struct Bound {
        const CommandSpec* spec;
        CLI::App* sub;
        std::map<std::string, std::string> values;
        std::map<std::string, bool> flags;
    };
    std::vector<Bound> bound;
    bound.reserve(command_specs().size());
    for (auto& spec : command_specs()) {
        bound.push_back({&spec, app.add_subcommand(spec.name, spec.help), {}, {}});
        Bound& b = bound.back();
        b.sub->fallthrough();
        b.sub->set_help_flag("--help", "print this help message and exit");  // frees -h for --h
        for (auto& o : spec.options) {
            if (o.flag) b.sub->add_flag("--" + o.name, b.flags[o.name], o.help);
            else b.sub->add_option("--" + o.name, b.values[o.name], o.help);
        }
    }

    auto* corpus = app.add_subcommand("corpus", "bundled example corpus");
    corpus->require_subcommand(1);
    corpus->fallthrough();
    std::string filter, data_dir = JETVAR_CORPUS_DIR;
    bool serial = false;
    unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
    auto* run = corpus->add_subcommand("run", "run every case whose name contains the filter");
    run->fallthrough();
    run->add_option("--filter", filter, "name substring");
    run->add_flag("--serial", serial, "run on one thread");
    run->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
    auto* list = corpus->add_subcommand("list", "list case names");
    list->fallthrough();
    for (auto* s : {run, list}) s->add_option("--data-dir", data_dir, "directory of .case files");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    if (corpus->parsed()) {
        std::vector<Case> cases;
        try {
            cases = load_corpus(data_dir);
        } catch (const std::exception& e) {
            std::cerr << "cannot read corpus directory " << data_dir << ": " << e.what() << "\n";
            return kUsage;
        }
        if (list->parsed()) {
            for (auto& c : cases) std::cout << c.name << "\n";
            return kOk;
        }
        auto results = run_corpus(cases, filter, serial ? 1 : jobs);
        if (json) std::cout << corpus_json(results, filter).dump(2) << "\n";
        else std::cout << corpus_text(results);
        for (auto& r : results)
            if (!r.pass()) return kFailure;
        return kOk;
    }

    for (auto& b : bound) {
        if (!b.sub->parsed()) continue;
        Options opts;
        for (auto& [k, v] : b.values)
            if (b.sub->count("--" + k)) opts[k] = v;
        for (auto& [k, v] : b.flags)
            if (v) opts[k] = "true";
        Report r = run_command(b.spec->name, opts);
        if (json) {
            for (auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
            std::cout << r.to_json().dump(2) << "\n";
        } else {
            std::cout << r.text();
        }
        return r.exit_code;
    }
    return kUsage;
}
