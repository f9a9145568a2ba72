#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hypobench/cli/pipeline.hpp"
#include "hypobench/common/alloc.hpp"
#include "hypobench/common/errors.hpp"

namespace cli = hypobench::cli;

namespace {

struct Options {
    std::string config;
    std::string out;
    std::vector<std::string> models;
    std::uint64_t seed = 0;
    bool seed_given = false;
    bool quiet = false;
};

cli::RunConfig resolve(const Options& o) {
    cli::RunConfig config = o.config.empty() ? cli::RunConfig{} : cli::load_run_config(o.config);
    if (!o.out.empty()) {
        config.output_dir = o.out;
    } else if (const char* env = std::getenv("HYPOBENCH_OUT"); env != nullptr && *env != '\0') {
        config.output_dir = env;
    }
    if (o.seed_given) cli::apply_seed(config, o.seed);
    return config;
}

std::vector<hypobench::models::Architecture> parse_models(const std::vector<std::string>& tags) {
    std::vector<hypobench::models::Architecture> out;
    for (const auto& t : tags) {
        if (t == "all") return {};
        out.push_back(hypobench::models::parse_architecture(t));
    }
    return out;
}

void print_bench(const cli::BenchResult& r) {
    for (const auto& t : r.training) {
        double eval = 0.0;
        for (const auto& e : r.evaluations) {
            if (e.architecture == t.architecture) eval = e.seconds;
        }
        std::fprintf(stderr, "bench %s: train %.1fs, evaluate %.1fs\n",
                     std::string(hypobench::models::architecture_tag(t.architecture)).c_str(), t.seconds, eval);
    }
}

}  // namespace

int main(int argc, char** argv) {
    hypobench::tune_allocator();
    CLI::App app{"Hypoxia forecasting benchmark: synthetic data, four sequence models, metrics and McNemar tests"};
    app.require_subcommand(1);
    app.set_version_flag("--version", cli::version_string());

    Options o;
    const char* descriptions[] = {
        "Generate the synthetic hindcast into data/",
        "Split, scale and window the hindcast into prepared/",
        "Train models and write checkpoints into models/",
        "Score trained models on each test period into eval/",
        "Pairwise McNemar tests into compare/ and report.txt",
        "Run synth, prepare, train, evaluate and compare in order",
    };
    std::vector<CLI::App*> subs;
    for (std::size_t i = 0; i < std::size(cli::kCommands); ++i) {
        const std::string name = cli::kCommands[i];
        auto* sub = app.add_subcommand(name, descriptions[i]);
        sub->add_option("-c,--config", o.config, "JSON run config (defaults to the bundled benchmark)")
            ->check(CLI::ExistingFile);
        sub->add_option("-o,--out", o.out, "Output directory (overrides HYPOBENCH_OUT and the config)");
        sub->add_option("--seed", o.seed, "Seed for data generation and training")->each([&](const std::string&) {
            o.seed_given = true;
        });
        sub->add_flag("-q,--quiet", o.quiet, "Print errors only");
        if (name == "train" || name == "evaluate") {
            sub->add_option("-m,--model", o.models, "bilstm, tcn, medformer, sttransformer or all (repeatable)");
        }
        subs.push_back(sub);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : static_cast<int>(hypobench::ExitCode::kUsage);
    }

    std::string command;
    for (auto* sub : subs) {
        if (sub->parsed()) command = sub->get_name();
    }
    const cli::Log log = o.quiet ? cli::Log{} : cli::Log{[](const std::string& m) { std::cerr << m << '\n'; }};
    try {
        const auto config = resolve(o);
        const auto result = cli::run_command(command, config, parse_models(o.models), log);
        if (command == "bench" && !o.quiet) print_bench(result);
        if (!o.quiet) std::cerr << "outputs in " << config.output_dir.string() << '\n';
        return 0;
    } catch (const hypobench::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return static_cast<int>(e.exit_code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return static_cast<int>(hypobench::ExitCode::kData);
    }
}
