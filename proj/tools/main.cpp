#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "qpragma/driver.hpp"

int main(int argc, char** argv) {
    CLI::App app{"qpragma: compiler and simulator for directive-based "
                 "hybrid quantum-classical programs"};
    app.require_subcommand(1);

    qpragma::CliConfig cli;
    std::string format = "text";

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("input", cli.input, "QPC source file")
            ->required()
            ->check(CLI::ExistingFile);
    };
    auto add_run_flags = [&](CLI::App* sub) {
        sub->add_option("--shots", cli.run.shots, "Number of shots")
            ->check(CLI::PositiveNumber);
        sub->add_option("--seed", cli.run.seed, "RNG seed");
        sub->add_option("--max-qubits", cli.run.max_qubits, "Backend qubit budget")
            ->check(CLI::PositiveNumber);
        sub->add_flag("--check-uncompute", cli.run.check_uncompute,
                      "Verify released registers are restored to |0...0>");
        sub->add_option("--format", format, "Output format")
            ->check(CLI::IsMember({"text", "json"}));
    };

    CLI::App* run = app.add_subcommand("run", "Execute a program and report stats");
    add_common(run);
    add_run_flags(run);

    CLI::App* check = app.add_subcommand("check", "Check a program and emit diagnostics");
    add_common(check);

    CLI::App* dump = app.add_subcommand("dump-ir", "Print the host-side instruction stream");
    add_common(dump);
    add_run_flags(dump);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return 2;
    }

    cli.json_output = (format == "json");
    qpragma::apply_env_seed(cli.run);

    try {
        if (run->parsed()) return qpragma::cmd_run(cli);
        if (check->parsed()) return qpragma::cmd_check(cli);
        if (dump->parsed()) return qpragma::cmd_dump_ir(cli);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
