#pragma once

#include <string>

#include <json.hpp>

#include "umre/tensor.hpp"

namespace umre {

// name -> {shape, row-major data}; doubles survive the JSON round trip
// bit-exactly (shortest round-trip decimal form).
nlohmann::ordered_json params_to_json(const ParamRefs& params);

// Shapes must match the registered parameters; unknown/missing names error.
void params_from_json(const nlohmann::json& j, const ParamRefs& params);

void write_json_file(const std::string& path, const nlohmann::ordered_json& j);
nlohmann::json read_json_file(const std::string& path);

}  // namespace umre
