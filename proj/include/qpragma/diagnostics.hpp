#pragma once

#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace qpragma {

struct SourceLoc {
    int line = 0;   // 1-based
    int col = 0;    // 1-based
};

enum class Severity { error, warning, note };

inline const char* to_string(Severity s) {
    switch (s) {
        case Severity::error: return "error";
        case Severity::warning: return "warning";
        default: return "note";
    }
}

struct Diagnostic {
    Severity severity = Severity::error;
    SourceLoc loc;
    std::string message;

    std::string format(const std::string& file) const {
        std::ostringstream os;
        os << file << ':' << loc.line << ':' << loc.col << ": "
           << to_string(severity) << ": " << message;
        return os.str();
    }
};

/// Thrown by the frontend/elaborator on an unrecoverable error. The driver
/// converts it into a Diagnostic.
class CompileError : public std::runtime_error {
public:
    CompileError(SourceLoc loc, std::string msg)
        : std::runtime_error(msg), loc_(loc), msg_(std::move(msg)) {}

    SourceLoc loc() const { return loc_; }
    Diagnostic diag() const { return {Severity::error, loc_, msg_}; }

private:
    SourceLoc loc_;
    std::string msg_;
};

/// Thrown by the runtime (node/backend layers).
class ExecError : public std::runtime_error {
public:
    explicit ExecError(std::string msg) : std::runtime_error(std::move(msg)) {}
};

struct DiagnosticList {
    std::vector<Diagnostic> items;

    void error(SourceLoc loc, std::string msg) {
        items.push_back({Severity::error, loc, std::move(msg)});
    }
    bool has_errors() const {
        for (const auto& d : items)
            if (d.severity == Severity::error) return true;
        return false;
    }
    std::string format(const std::string& file) const {
        std::string out;
        for (const auto& d : items) {
            out += d.format(file);
            out += '\n';
        }
        return out;
    }
};

}  // namespace qpragma
