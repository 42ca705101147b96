#pragma once

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "qpragma/elaborator.hpp"
#include "qpragma/parser.hpp"
#include "qpragma/runtime.hpp"

namespace qpragma {

/// Load and fully check a source file. Diagnostics (including parse errors)
/// are collected into `diags`; returns the program when parsing succeeded.
inline std::optional<Program> compile_file(const std::string& path, DiagnosticList& diags) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open '" + path + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        Program prog = parse(buf.str());
        DiagnosticList d = check_program(prog);
        for (auto& item : d.items) diags.items.push_back(std::move(item));
        return prog;
    } catch (const CompileError& e) {
        diags.error(e.loc(), e.what());
        return std::nullopt;
    }
}

inline std::string json_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            default: out += c;
        }
    }
    return out;
}

/// Stats JSON with a stable key order.
inline std::string stats_json(const RunResult& r) {
    std::ostringstream os;
    os << "{\"requests\": " << r.stats.requests
       << ", \"remote_reads\": " << r.stats.remote_reads
       << ", \"remote_writes\": " << r.stats.remote_writes
       << ", \"transfers\": " << r.stats.transfers
       << ", \"gates\": " << r.stats.gates
       << ", \"histogram\": {";
    bool first = true;
    for (const auto& [key, count] : r.histogram) {
        if (!first) os << ", ";
        first = false;
        os << '"' << json_escape(key) << "\": " << count;
    }
    os << "}}";
    return os.str();
}

inline std::string stats_text(const RunResult& r) {
    std::ostringstream os;
    os << "requests: " << r.stats.requests << "\n"
       << "remote_reads: " << r.stats.remote_reads << "\n"
       << "remote_writes: " << r.stats.remote_writes << "\n"
       << "transfers: " << r.stats.transfers << "\n"
       << "gates: " << r.stats.gates << "\n"
       << "histogram:\n";
    for (const auto& [key, count] : r.histogram)
        os << "  " << key << ": " << count << "\n";
    return os.str();
}

struct CliConfig {
    std::string input;
    RunConfig run;
    bool json_output = false;
};

/// Apply QPRAGMA_SEED if present in the environment.
inline void apply_env_seed(RunConfig& cfg) {
    if (const char* env = std::getenv("QPRAGMA_SEED")) {
        char* end = nullptr;
        unsigned long long v = std::strtoull(env, &end, 10);
        if (end && *end == '\0') cfg.seed = v;
    }
}

inline int cmd_check(const CliConfig& cli) {
    DiagnosticList diags;
    compile_file(cli.input, diags);
    if (!diags.items.empty()) std::cerr << diags.format(cli.input);
    return diags.has_errors() ? 1 : 0;
}

inline int cmd_run(const CliConfig& cli) {
    DiagnosticList diags;
    std::optional<Program> prog = compile_file(cli.input, diags);
    if (!diags.items.empty()) std::cerr << diags.format(cli.input);
    if (diags.has_errors() || !prog) return 1;
    try {
        RunResult r = run_program(*prog, cli.run);
        for (const auto& line : r.prints) std::cout << line << "\n";
        std::cout << (cli.json_output ? stats_json(r) + "\n" : stats_text(r));
        return 0;
    } catch (const CompileError& e) {
        std::cerr << e.diag().format(cli.input) << "\n";
        return 1;
    } catch (const ExecError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

inline int cmd_dump_ir(const CliConfig& cli) {
    DiagnosticList diags;
    std::optional<Program> prog = compile_file(cli.input, diags);
    if (!diags.items.empty()) std::cerr << diags.format(cli.input);
    if (diags.has_errors() || !prog) return 1;
    RunConfig cfg = cli.run;
    cfg.shots = 1;
    cfg.trace_ir = true;
    try {
        RunResult r = run_program(*prog, cfg);
        std::cout << r.ir;
        return 0;
    } catch (const CompileError& e) {
        std::cerr << e.diag().format(cli.input) << "\n";
        return 1;
    } catch (const ExecError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace qpragma
