#pragma once

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "dspkit/error.hpp"
#include "dspkit/genericity.hpp"
#include "dspkit/jnf.hpp"
#include "dspkit/realization.hpp"
#include "dspkit/scalar.hpp"

namespace dspkit {

using json = nlohmann::ordered_json;

inline constexpr const char* schema_version = "1";

using AdditiveSpecs = std::vector<AdditiveSpec>;
using MultiplicativeSpecs = std::vector<MultiplicativeSpec>;

/// One problem file: a mode, the JNF tuple, and (optionally) exact eigenvalues.
struct ProblemInput {
  Mode mode = Mode::additive;
  JnfTuple tuple;
  std::optional<std::variant<AdditiveSpecs, MultiplicativeSpecs>> specs;

  bool has_eigenvalues() const { return specs.has_value(); }

  friend bool operator==(const ProblemInput&, const ProblemInput&) = default;
};

namespace detail {

/// "eigenvalues", or the singular "eigenvalue" accepted as an alias.
inline const json* eigenvalue_field(const json& cls) {
  const bool plural = cls.contains("eigenvalues"), singular = cls.contains("eigenvalue");
  if (plural && singular) throw Error(ErrorCode::invalid_input, "give either 'eigenvalues' or 'eigenvalue', not both");
  if (plural) return &cls.at("eigenvalues");
  if (singular) return &cls.at("eigenvalue");
  return nullptr;
}

inline Partition parse_partition(const json& j) {
  if (!j.is_array() || j.empty()) throw Error(ErrorCode::invalid_input, "each slot must be a non-empty list of block sizes");
  std::vector<int> parts;
  for (const auto& b : j) {
    if (!b.is_number_integer() || b.get<long long>() <= 0)
      throw Error(ErrorCode::invalid_input, "block sizes must be positive integers");
    parts.push_back(b.get<int>());
  }
  return Partition(std::move(parts));
}

inline std::string scalar_text(const json& j) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number_integer()) return std::to_string(j.get<long long>());
  if (j.is_object()) {
    std::string s = "{";
    bool first = true;
    for (const auto& [k, v] : j.items()) {
      if (!first) s += ", ";
      first = false;
      s += k + ": " + scalar_text(v);
    }
    return s + "}";
  }
  throw Error(ErrorCode::invalid_input, "eigenvalues must be strings, integers or {mod, arg} objects");
}

template <EigenScalar S>
S parse_scalar(const json& j) {
  const std::string text = scalar_text(j);
  const bool looks_multiplicative = text.find('{') != std::string::npos;
  if constexpr (scalar_traits<S>::mode == Mode::additive) {
    if (looks_multiplicative) throw Error(ErrorCode::invalid_input, "multiplicative scalar in an additive problem");
    return AdditiveScalar::parse(text);
  } else {
    if (!looks_multiplicative) throw Error(ErrorCode::invalid_input, "additive scalar in a multiplicative problem");
    return MultiplicativeScalar::parse(text);
  }
}

template <EigenScalar S>
std::vector<ClassSpec<S>> parse_specs(const json& classes, const std::vector<Jnf>& jnfs) {
  std::vector<ClassSpec<S>> out;
  for (std::size_t j = 0; j < jnfs.size(); ++j) {
    const json* field = eigenvalue_field(classes[j]);
    if (!field) throw Error(ErrorCode::invalid_input, "class " + std::to_string(j) + " has no eigenvalues");
    const json& ev = *field;
    if (!ev.is_array() || ev.size() != jnfs[j].slot_count())
      throw Error(ErrorCode::invalid_input, "class " + std::to_string(j) + ": one eigenvalue per slot is required");
    std::vector<S> values;
    for (const auto& v : ev) values.push_back(parse_scalar<S>(v));
    out.emplace_back(jnfs[j], std::move(values));
  }
  return out;
}

}  // namespace detail

inline ProblemInput parse_problem(const json& doc) {
  try {
    if (!doc.is_object()) throw Error(ErrorCode::invalid_input, "problem must be a JSON object");
    ProblemInput in;
    if (doc.contains("mode")) {
      const std::string mode = doc.at("mode").get<std::string>();
      if (mode == "additive")
        in.mode = Mode::additive;
      else if (mode == "multiplicative")
        in.mode = Mode::multiplicative;
      else
        throw Error(ErrorCode::invalid_input, "mode must be 'additive' or 'multiplicative'");
    }
    const json& classes = doc.at("classes");
    if (!classes.is_array()) throw Error(ErrorCode::invalid_input, "'classes' must be a list");
    std::vector<Jnf> jnfs;
    std::size_t with_ev = 0;
    for (const auto& c : classes) {
      if (!c.is_object()) throw Error(ErrorCode::invalid_input, "each class must be an object");
      const json& blocks = c.at("blocks");
      if (!blocks.is_array() || blocks.empty()) throw Error(ErrorCode::invalid_input, "'blocks' must be a non-empty list");
      std::vector<Partition> slots;
      for (const auto& s : blocks) slots.push_back(detail::parse_partition(s));
      jnfs.emplace_back(std::move(slots));
      if (detail::eigenvalue_field(c)) ++with_ev;
    }
    in.tuple = JnfTuple(jnfs);
    if (with_ev != 0 && with_ev != jnfs.size())
      throw Error(ErrorCode::invalid_input, "either every class or no class carries eigenvalues");
    if (with_ev) {
      if (in.mode == Mode::additive)
        in.specs = detail::parse_specs<AdditiveScalar>(classes, jnfs);
      else
        in.specs = detail::parse_specs<MultiplicativeScalar>(classes, jnfs);
    }
    return in;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::invalid_input, e.what());
  }
}

inline ProblemInput parse_problem_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::invalid_input, e.what());
  }
  return parse_problem(doc);
}

inline json read_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::invalid_input, "cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  try {
    return json::parse(ss.str());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::invalid_input, path + ": " + e.what());
  }
}

inline json to_json(const Partition& p) { return json(std::vector<int>(p.parts().begin(), p.parts().end())); }

inline json to_json(const Jnf& jnf) {
  json out = json::array();
  for (const auto& s : jnf.slots()) out.push_back(to_json(s));
  return out;
}

inline json to_json(const JnfTuple& tuple) {
  json out = json::array();
  for (const auto& e : tuple.entries()) out.push_back(to_json(e));
  return out;
}

/// Normalized echo of a problem; parse_problem(echo(x)) == x.
inline json echo(const ProblemInput& in) {
  json out;
  out["mode"] = std::string(to_string(in.mode));
  out["classes"] = json::array();
  for (std::size_t j = 0; j < in.tuple.count(); ++j) {
    json c;
    c["blocks"] = to_json(in.tuple[j]);
    if (in.specs)
      std::visit(
          [&](const auto& specs) {
            c["eigenvalues"] = json::array();
            for (const auto& v : specs[j].eigenvalues()) c["eigenvalues"].push_back(v.to_string());
          },
          *in.specs);
    out["classes"].push_back(std::move(c));
  }
  return out;
}

/// Row-major array of [re, im] pairs.
inline json matrix_to_json(const CMatrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back({m(r, c).real(), m(r, c).imag()});
    rows.push_back(std::move(row));
  }
  return rows;
}

inline CMatrix matrix_from_json(const json& j) {
  try {
    if (!j.is_array() || j.empty()) throw Error(ErrorCode::invalid_input, "matrix must be a non-empty list of rows");
    const auto n = static_cast<Eigen::Index>(j.size());
    CMatrix m(n, n);
    for (Eigen::Index r = 0; r < n; ++r) {
      const json& row = j[static_cast<std::size_t>(r)];
      if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n)
        throw Error(ErrorCode::invalid_input, "matrix must be square");
      for (Eigen::Index c = 0; c < n; ++c) {
        const json& e = row[static_cast<std::size_t>(c)];
        if (e.is_number())
          m(r, c) = e.get<double>();
        else
          m(r, c) = Complex(e.at(0).get<double>(), e.at(1).get<double>());
      }
    }
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::invalid_input, e.what());
  }
}

}  // namespace dspkit
