// endow-opt: price | strategy | simulate | verify | sweep
//
// Exit codes: 0 success, 1 validation or config error, 2 check failure,
// 3 I/O error, 4 overflow.

#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "endow_opt/commands.hpp"

namespace {

struct Flags {
    std::string config;
    std::optional<std::string> out;
    std::string format = "json";
    unsigned threads = 0;
    std::optional<std::uint64_t> seed;
    std::optional<double> lambda_scale;
};

void add_common(CLI::App* sub, Flags& flags) {
    sub->add_option("--config", flags.config, "JSON run configuration")->required();
    sub->add_option("--out", flags.out, "write output here instead of stdout");
    sub->add_option("--format", flags.format, "output format")->check(CLI::IsMember({"json", "csv"}));
    sub->add_option("--threads", flags.threads, "worker threads (default: ENDOW_OPT_THREADS, then all cores)");
    sub->add_option("--seed", flags.seed, "override grid.seed");
}

void emit(const std::string& text, const std::optional<std::string>& path) {
    if (!path) {
        std::cout << text << std::flush;
        return;
    }
    std::ofstream out(*path, std::ios::binary);
    if (!out) throw endow_opt::Error(endow_opt::ErrorCode::IoError, "cannot open output file " + *path);
    out << text;
    out.flush();
    if (!out) throw endow_opt::Error(endow_opt::ErrorCode::IoError, "write failed for " + *path);
}

}  // namespace

int main(int argc, char** argv) {
    using namespace endow_opt;

    CLI::App app{"Optimal investment with random endowment: closed forms and Monte Carlo checks"};
    app.require_subcommand(1);
    Flags flags;
    std::map<std::string, CLI::App*> subs;
    for (const char* name : {"price", "strategy", "simulate", "verify", "sweep"}) {
        subs[name] = app.add_subcommand(name);
        add_common(subs[name], flags);
    }
    subs["price"]->description("endowment price table P_t over [0, T]");
    subs["strategy"]->description("optimal risky fraction over times and endowment-to-wealth ratios");
    subs["simulate"]->description("simulate the configured strategy; summary plus optional path dump");
    subs["verify"]->description("full check battery; exit 2 if any check fails");
    subs["sweep"]->description("long-format parameter sweep");
    subs["verify"]
        ->add_option("--lambda-scale", flags.lambda_scale, "debug: multiply lambda* by this factor")
        ->group("");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        RunConfig config = load_config(flags.config);
        if (flags.seed) config.grid.seed = *flags.seed;
        if (flags.lambda_scale) config.verify.lagrange_scale = *flags.lambda_scale;
        const OutputFormat format = flags.format == "csv" ? OutputFormat::Csv : OutputFormat::Json;
        ExecutionOptions exec;
        exec.threads = flags.threads;

        CommandOutput result;
        if (subs["price"]->parsed()) result = cmd_price(config, format);
        else if (subs["strategy"]->parsed()) result = cmd_strategy(config, format);
        else if (subs["simulate"]->parsed()) result = cmd_simulate(config, format, exec);
        else if (subs["verify"]->parsed()) result = cmd_verify(config, format, exec);
        else result = cmd_sweep(config, format, exec);

        emit(result.text, flags.out);
        if (!result.pass) {
            std::cerr << "endow-opt: one or more checks failed\n";
            return 2;
        }
        return 0;
    } catch (const Error& e) {
        std::cerr << "endow-opt: " << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << "endow-opt: " << e.what() << "\n";
        return 1;
    }
}
