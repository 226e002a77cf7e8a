#pragma once

#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "chainkit/errors.hpp"
#include "chainkit/model.hpp"

namespace chainkit {

/// Parsed form of a model file:
///   {"kind": "...", "params": {...}, "gamma": [[state-tuple, prob], ...]}
/// with explicit kinds additionally carrying
///   "rows": [[state-tuple, [[target-tuple, weight], ...]], ...].
/// Unknown fields are rejected.
struct ModelSpec {
  std::string kind;
  std::map<std::string, double> scalar_params;
  std::map<std::string, std::vector<double>> vector_params;
  SparseDistribution gamma;
  std::map<StateKey, TransitionRow> rows;
};

namespace detail {

inline StateKey parse_state(const nlohmann::json& node, const std::string& where) {
  if (!node.is_array() || node.empty()) {
    throw ValidationError(where + ": a state must be a nonempty array of integers");
  }
  std::vector<std::int64_t> coords;
  for (const auto& c : node) {
    if (!c.is_number_integer()) {
      throw ValidationError(where + ": state coordinates must be integers");
    }
    coords.push_back(c.get<std::int64_t>());
  }
  return StateKey(std::move(coords));
}

inline nlohmann::json state_to_json(const StateKey& key) {
  nlohmann::json out = nlohmann::json::array();
  for (std::int64_t c : key) out.push_back(c);
  return out;
}

}  // namespace detail

inline ModelSpec parse_model_spec(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ValidationError("model file: top level must be an object");
  for (const auto& [key, value] : doc.items()) {
    if (key != "kind" && key != "params" && key != "gamma" && key != "rows") {
      throw ValidationError("model file: unknown field \"" + key + "\"");
    }
  }
  ModelSpec spec;
  if (!doc.contains("kind") || !doc["kind"].is_string()) {
    throw ValidationError("model file: field \"kind\" (string) is required");
  }
  spec.kind = doc["kind"].get<std::string>();

  if (doc.contains("params")) {
    if (!doc["params"].is_object()) throw ValidationError("model file: \"params\" must be an object");
    for (const auto& [key, value] : doc["params"].items()) {
      if (value.is_number()) {
        spec.scalar_params[key] = value.get<double>();
      } else if (value.is_array()) {
        std::vector<double> entries;
        for (const auto& v : value) {
          if (!v.is_number()) {
            throw ValidationError("model file: params." + key + " must hold numbers");
          }
          entries.push_back(v.get<double>());
        }
        spec.vector_params[key] = std::move(entries);
      } else {
        throw ValidationError("model file: params." + key + " must be a number or number array");
      }
    }
  }

  if (!doc.contains("gamma") || !doc["gamma"].is_array() || doc["gamma"].empty()) {
    throw ValidationError("model file: field \"gamma\" (nonempty array of [state, mass]) is required");
  }
  for (const auto& entry : doc["gamma"]) {
    if (!entry.is_array() || entry.size() != 2 || !entry[1].is_number()) {
      throw ValidationError("model file: gamma entries must be [state-tuple, mass]");
    }
    spec.gamma.add(detail::parse_state(entry[0], "gamma"), entry[1].get<double>());
  }

  bool is_explicit = spec.kind == "explicit-dt" || spec.kind == "explicit-ct";
  if (doc.contains("rows")) {
    if (!is_explicit) {
      throw ValidationError("model file: only explicit models may carry \"rows\"");
    }
    if (!doc["rows"].is_array()) throw ValidationError("model file: \"rows\" must be an array");
    for (const auto& entry : doc["rows"]) {
      if (!entry.is_array() || entry.size() != 2 || !entry[1].is_array()) {
        throw ValidationError("model file: rows entries must be [state-tuple, [[target, weight], ...]]");
      }
      StateKey source = detail::parse_state(entry[0], "rows");
      TransitionRow row;
      for (const auto& target : entry[1]) {
        if (!target.is_array() || target.size() != 2 || !target[1].is_number()) {
          throw ValidationError("model file: row targets must be [target-tuple, weight]");
        }
        row.entries.push_back({detail::parse_state(target[0], "rows"), target[1].get<double>()});
      }
      if (!spec.rows.emplace(source, std::move(row)).second) {
        throw ValidationError("model file: duplicate row for state " + source.to_string());
      }
    }
  } else if (is_explicit) {
    throw ValidationError("model file: explicit models require \"rows\"");
  }
  return spec;
}

inline nlohmann::json model_spec_to_json(const ModelSpec& spec) {
  nlohmann::json doc;
  doc["kind"] = spec.kind;
  nlohmann::json params = nlohmann::json::object();
  for (const auto& [key, value] : spec.scalar_params) params[key] = value;
  for (const auto& [key, value] : spec.vector_params) params[key] = value;
  if (!params.empty()) doc["params"] = params;
  nlohmann::json gamma = nlohmann::json::array();
  for (const auto& [state, mass] : spec.gamma) {
    gamma.push_back({detail::state_to_json(state), mass});
  }
  doc["gamma"] = gamma;
  if (!spec.rows.empty()) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& [source, row] : spec.rows) {
      nlohmann::json targets = nlohmann::json::array();
      for (const auto& [target, weight] : row.entries) {
        targets.push_back({detail::state_to_json(target), weight});
      }
      rows.push_back({detail::state_to_json(source), targets});
    }
    doc["rows"] = rows;
  }
  return doc;
}

namespace detail {

inline double require_scalar(const ModelSpec& spec, const std::string& name) {
  auto it = spec.scalar_params.find(name);
  if (it == spec.scalar_params.end()) {
    throw ValidationError("model \"" + spec.kind + "\" requires params." + name);
  }
  return it->second;
}

inline std::function<double(std::int64_t)> birth_death_rate(const ModelSpec& spec,
                                                            const std::string& side) {
  auto coeffs = spec.vector_params.find(side + "_coeffs");
  auto table = spec.vector_params.find(side + "_table");
  if ((coeffs != spec.vector_params.end()) == (table != spec.vector_params.end())) {
    throw ValidationError("birth-death requires exactly one of params." + side + "_coeffs or params." +
                          side + "_table");
  }
  if (coeffs != spec.vector_params.end()) {
    std::vector<double> c = coeffs->second;
    return [c](std::int64_t x) { return polynomial(c, static_cast<double>(x)); };
  }
  std::vector<double> t = table->second;
  return [t](std::int64_t x) {
    return (x >= 0 && x < static_cast<std::int64_t>(t.size())) ? t[std::size_t(x)] : 0.0;
  };
}

}  // namespace detail

/// Instantiates a model family from its parsed description.
inline ChainModel build_model(const ModelSpec& spec) {
  if (spec.kind == "gambler") {
    double capital = detail::require_scalar(spec, "K");
    return make_gambler(detail::require_scalar(spec, "a"), static_cast<std::int64_t>(capital),
                        spec.gamma);
  }
  if (spec.kind == "pure-birth-geometric") {
    return make_pure_birth_geometric(detail::require_scalar(spec, "base"), spec.gamma);
  }
  if (spec.kind == "miller") {
    return make_miller(spec.gamma);
  }
  if (spec.kind == "two-state") {
    return make_two_state(detail::require_scalar(spec, "a"), detail::require_scalar(spec, "b"),
                          spec.gamma);
  }
  if (spec.kind == "birth-death") {
    return make_birth_death(detail::birth_death_rate(spec, "birth"),
                            detail::birth_death_rate(spec, "death"), spec.gamma);
  }
  if (spec.kind == "explicit-dt" || spec.kind == "explicit-ct") {
    return make_explicit(spec.kind == "explicit-dt" ? ChainKind::Discrete : ChainKind::Continuous,
                         spec.rows, spec.gamma);
  }
  throw ValidationError("unknown model kind \"" + spec.kind + "\"");
}

inline ChainModel load_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open model file " + path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& err) {
    throw ValidationError("model file " + path + ": " + err.what());
  }
  return build_model(parse_model_spec(doc));
}

}  // namespace chainkit
