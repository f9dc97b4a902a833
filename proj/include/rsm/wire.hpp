#pragma once

#include <rsm/engine.hpp>
#include <rsm/error.hpp>
#include <rsm/graph.hpp>

#include <json.hpp>

namespace rsm::wire {

using json = nlohmann::ordered_json;

json to_json(const Hyperparams &hp);
/// Overlays the keys present in `j` on `base` and validates the result.
/// Unknown keys are rejected.
Hyperparams hyperparams_from_json(const json &j, Hyperparams base = {});

json to_json(const Mutation &m, const AttributedGraph &g);
/// Classes may be given by index or by name.
Mutation mutation_from_json(const json &j, const AttributedGraph &g);

json to_json(const NodePrediction &p);

/// HTTP status for an error code.
int http_status(ErrorCode code) noexcept;
json error_body(const Error &e);
json error_body(std::string_view code, std::string_view message);

} // namespace rsm::wire
