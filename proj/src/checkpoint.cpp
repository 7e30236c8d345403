#include "umre/checkpoint.hpp"

#include <fstream>
#include <stdexcept>

namespace umre {

nlohmann::ordered_json params_to_json(const ParamRefs& params) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const Parameter* p : params) {
    nlohmann::ordered_json entry;
    entry["shape"] = {p->value.rows, p->value.cols};
    entry["data"] = p->value.data;
    j[p->name] = std::move(entry);
  }
  return j;
}

void params_from_json(const nlohmann::json& j, const ParamRefs& params) {
  for (Parameter* p : params) {
    if (!j.contains(p->name))
      throw std::runtime_error("checkpoint: missing parameter " + p->name);
    const auto& entry = j.at(p->name);
    const auto shape = entry.at("shape").get<std::vector<int>>();
    if (shape.size() != 2 || shape[0] != p->value.rows || shape[1] != p->value.cols)
      throw std::runtime_error("checkpoint: shape mismatch for " + p->name);
    auto data = entry.at("data").get<std::vector<double>>();
    if (data.size() != p->value.data.size())
      throw std::runtime_error("checkpoint: data length mismatch for " + p->name);
    p->value.data = std::move(data);
  }
}

void write_json_file(const std::string& path, const nlohmann::ordered_json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  nlohmann::json j;
  in >> j;
  return j;
}

}  // namespace umre
