#include <rsm/error.hpp>

namespace rsm {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::invalid_node: return "invalid-node";
    case ErrorCode::invariant_violation: return "invariant-violation";
    case ErrorCode::dimension: return "dimension";
    case ErrorCode::parameter: return "parameter";
    case ErrorCode::format: return "format";
    case ErrorCode::missing_class: return "missing-class";
    case ErrorCode::degenerate_task: return "degenerate-task";
    case ErrorCode::alignment: return "alignment";
    case ErrorCode::stratification: return "stratification";
    case ErrorCode::missing_label: return "missing-label";
    case ErrorCode::parse: return "parse";
    case ErrorCode::reference: return "reference";
    case ErrorCode::stale_state: return "stale-state";
    case ErrorCode::domain: return "domain";
    case ErrorCode::not_found: return "not-found";
    case ErrorCode::cancelled: return "cancelled";
    }
    return "unknown";
}

Error::Error(ErrorCode code, const std::string &message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

ParseError::ParseError(std::string file, std::size_t line, const std::string &message)
    : Error(ErrorCode::parse, file + ":" + std::to_string(line) + ": " + message),
      file_(std::move(file)), line_(line) {}

} // namespace rsm
