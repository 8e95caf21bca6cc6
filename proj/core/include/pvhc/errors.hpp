#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace pvhc {

/// Malformed input document. `context` names the file, key path or line.
class ParseError : public std::runtime_error {
public:
    ParseError(std::string context, const std::string& message)
        : std::runtime_error(context + ": " + message), context_(std::move(context)) {}
    const std::string& context() const { return context_; }

private:
    std::string context_;
};

/// Well-formed input that fails semantic checks; carries every failure found.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(std::vector<std::string> failures)
        : std::runtime_error(join(failures)), failures_(std::move(failures)) {}
    const std::vector<std::string>& failures() const { return failures_; }

private:
    static std::string join(const std::vector<std::string>& f) {
        std::string s = "validation failed";
        for (const auto& x : f) s += "\n  " + x;
        return s;
    }
    std::vector<std::string> failures_;
};

}  // namespace pvhc
