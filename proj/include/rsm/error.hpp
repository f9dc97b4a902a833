#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace rsm {

enum class ErrorCode {
    invalid_node,
    invariant_violation,
    dimension,
    parameter,
    format,
    missing_class,
    degenerate_task,
    alignment,
    stratification,
    missing_label,
    parse,
    reference,
    stale_state,
    domain,
    not_found,
    cancelled,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Base exception for every library failure. The code is stable and is what
/// the CLI and the service map to exit codes / status codes.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string &message);

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// Malformed input file line.
class ParseError : public Error {
public:
    ParseError(std::string file, std::size_t line, const std::string &message);

    const std::string &file() const noexcept { return file_; }
    std::size_t line() const noexcept { return line_; }

private:
    std::string file_;
    std::size_t line_;
};

} // namespace rsm
