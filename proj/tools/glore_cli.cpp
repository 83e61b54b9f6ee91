// Command-line front end: one subcommand per pipeline stage plus `run`.
//
// Every subcommand reads a flat key = value config (--config) and applies
// --set key=value overrides on top. Failures print a single line
//   error: <category>: <message>
// to stderr and exit with a category-specific nonzero status.

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "glore/glore.hpp"

namespace {

using glore::ErrorCategory;

int exit_code(ErrorCategory c) {
    switch (c) {
    case ErrorCategory::Usage: return 2;
    case ErrorCategory::Config: return 3;
    case ErrorCategory::Io: return 4;
    case ErrorCategory::Parse: return 5;
    case ErrorCategory::Data: return 6;
    case ErrorCategory::Numeric: return 7;
    }
    return 1;
}

int fail(std::string_view category, const std::string& message, int code) {
    std::string line = message;
    for (char& ch : line)
        if (ch == '\n')
            ch = ' ';
    std::cerr << "error: " << category << ": " << line << '\n';
    return code;
}

struct CommonOptions {
    std::string config;
    std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
    cmd->add_option("-c,--config", opts.config, "key = value config file");
    cmd->add_option("-s,--set", opts.overrides, "override a config key (key=value)")
        ->allow_extra_args(false);
}

glore::PipelineConfig load_config(const CommonOptions& opts) {
    glore::KeyValueConfig kv;
    if (!opts.config.empty())
        kv = glore::KeyValueConfig::load(opts.config);
    for (const auto& o : opts.overrides)
        kv.apply_override(o);
    return glore::PipelineConfig::from(kv);
}

/// Runs a single stage after checking the inputs that stage needs.
void single_stage(const glore::PipelineConfig& base, const std::string& stage) {
    auto cfg = base;
    cfg.skip_stages.clear();
    for (const auto& s : glore::pipeline::stage_order())
        if (s != stage)
            cfg.skip_stages.insert(s);
    glore::pipeline::check_inputs(cfg);
    glore::pipeline::run_stage(cfg, stage);
    glore::pipeline::write_manifest(base);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Relation embedding from global co-occurrence statistics"};
    app.require_subcommand(1);

    struct Command {
        const char* name;
        const char* stage;   // nullptr for non-stage commands
        const char* help;
    };
    const std::vector<Command> commands = {
        {"build-graph", "graph", "count co-occurrences and write the normalized relation graph"},
        {"train", "train", "train GloRE (and LoRE) embeddings on the graph"},
        {"score", "score", "score candidate facts with the trained embeddings"},
        {"merge", "merge", "learn the merge weights and rescore test candidates"},
        {"eval", "eval", "held-out PR curves and precision at N"},
        {"report", "report", "text, CSV and SVG summary of the evaluation"},
        {"run", nullptr, "all stages in order"},
        {"synth", nullptr, "write a synthetic benchmark to synth.output_dir"},
        {"show-config", nullptr, "print the effective configuration"},
    };
    std::vector<CommonOptions> opts(commands.size());
    std::vector<CLI::App*> subs;
    for (std::size_t i = 0; i < commands.size(); ++i) {
        auto* sub = app.add_subcommand(commands[i].name, commands[i].help);
        add_common(sub, opts[i]);
        subs.push_back(sub);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail("usage", e.what(), exit_code(ErrorCategory::Usage));
    }

    try {
        for (std::size_t i = 0; i < commands.size(); ++i) {
            if (!subs[i]->parsed())
                continue;
            const auto cfg = load_config(opts[i]);
            const std::string name = commands[i].name;
            if (commands[i].stage) {
                single_stage(cfg, commands[i].stage);
                if (name == "report")
                    std::cout << glore::tsv::read_file(glore::pipeline::Paths{cfg.output_dir}.report());
            } else if (name == "run") {
                glore::pipeline::run_pipeline(cfg);
                if (!cfg.skip_stages.contains("report"))
                    std::cout << glore::tsv::read_file(glore::pipeline::Paths{cfg.output_dir}.report());
            } else if (name == "synth") {
                const auto files = glore::pipeline::run_synth(cfg);
                std::cout << "corpus\t" << files.corpus.string() << "\nkb\t" << files.kb.string()
                          << "\ntruth\t" << files.truth.string() << '\n';
            } else {
                std::cout << cfg.canonical();
            }
        }
    } catch (const glore::Error& e) {
        return fail(glore::to_string(e.category()), e.what(), exit_code(e.category()));
    } catch (const std::exception& e) {
        return fail("internal", e.what(), 1);
    }
    return 0;
}
