#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "solar/env.hpp"
#include "solar/grid.hpp"

namespace solar::codec {

/// Key order is insertion order, which is the documented field order.
using Json = nlohmann::ordered_json;

class CodecError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline Json grid_to_json(const Grid& g) {
  Json rows = Json::array();
  for (int r = 0; r < g.rows(); ++r) {
    Json row = Json::array();
    for (int c = 0; c < g.cols(); ++c) row.push_back(static_cast<int>(g.at(r, c)));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Grid grid_from_json(const Json& j) {
  if (!j.is_array() || j.empty()) throw CodecError("grid must be a non-empty array of rows");
  const std::size_t cols = j.front().is_array() ? j.front().size() : 0;
  if (cols == 0) throw CodecError("grid rows must be non-empty arrays");
  std::vector<Cell> cells;
  cells.reserve(j.size() * cols);
  for (const auto& row : j) {
    if (!row.is_array() || row.size() != cols) throw CodecError("grid rows must have equal length");
    for (const auto& v : row) {
      if (!v.is_number_integer()) throw CodecError("grid cell is not an integer");
      const auto x = v.get<long long>();
      if (x < 0 || x > kPadColor) throw CodecError("grid cell outside 0..10");
      cells.push_back(static_cast<Cell>(x));
    }
  }
  return Grid(static_cast<int>(j.size()), static_cast<int>(cols), std::move(cells));
}

inline Json optional_grid_to_json(const std::optional<Grid>& g) { return g ? grid_to_json(*g) : Json(nullptr); }

inline std::optional<Grid> optional_grid_from_json(const Json& j) {
  if (j.is_null()) return std::nullopt;
  return grid_from_json(j);
}

inline Json selection_to_json(const Selection& s) { return Json::array({s.x, s.y, s.h, s.w}); }

inline Selection selection_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 4) throw CodecError("selection must be [x,y,h,w]");
  int v[4];
  for (std::size_t i = 0; i < 4; ++i) {
    if (!j[i].is_number_integer()) throw CodecError("selection component is not an integer");
    const auto x = j[i].get<long long>();
    if (x < -1000000 || x > 1000000) throw CodecError("selection component out of range");
    v[i] = static_cast<int>(x);
  }
  return {v[0], v[1], v[2], v[3]};
}

inline Json action_to_json(const Action& a) {
  Json j = Json::object();
  j["op"] = op_code(a.op);
  j["sel"] = selection_to_json(a.sel);
  return j;
}

inline Op op_from_json(const Json& j) {
  if (!j.is_number_integer()) throw CodecError("op must be an integer");
  const auto code = j.get<long long>();
  if (code < 0 || code >= kNumOps) throw CodecError("op outside 0..35");
  return static_cast<Op>(code);
}

inline Action action_from_json(const Json& j) {
  if (!j.is_object()) throw CodecError("action must be an object");
  return {op_from_json(j.at("op")), selection_from_json(j.at("sel"))};
}

template <typename T>
T get_as(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw CodecError(std::string("missing key '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw CodecError(std::string("wrong type for key '") + key + "'");
  }
}

inline const Json& member(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw CodecError(std::string("missing key '") + key + "'");
  return j.at(key);
}

}  // namespace solar::codec
