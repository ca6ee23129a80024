#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace narrisk {

/// Malformed input text (TextGrid, manifest, lexicon, model files).
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t line)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// One or more corpus-level rule violations, reported together.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(std::vector<std::string> violations)
        : std::runtime_error(join(violations)), violations_(std::move(violations)) {}

    const std::vector<std::string>& violations() const noexcept { return violations_; }

private:
    static std::string join(const std::vector<std::string>& items) {
        std::string out;
        for (const auto& item : items) {
            if (!out.empty()) out += '\n';
            out += item;
        }
        return out;
    }

    std::vector<std::string> violations_;
};

/// A quantity is undefined on its input (no utterances, a missing class, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// The solver hit its iteration budget or could not make progress.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double optimality, int iterations)
        : std::runtime_error(what), optimality_(optimality), iterations_(iterations) {}

    double optimality() const noexcept { return optimality_; }
    int iterations() const noexcept { return iterations_; }

private:
    double optimality_;
    int iterations_;
};

/// Missing files or unreadable input.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace narrisk
