#pragma once

#include <nlohmann/json.hpp>

#include <fstream>
#include <initializer_list>
#include <istream>
#include <set>
#include <sstream>
#include <string>

#include "brepmatch/brep.hpp"
#include "brepmatch/validate.hpp"

namespace brepmatch {

using json = nlohmann::json;

namespace io_detail {

inline void require_object(const json& j, const std::string& path,
                           std::initializer_list<const char*> required,
                           std::initializer_list<const char*> optional = {}) {
  if (!j.is_object()) throw SchemaError(path + ": expected object");
  std::set<std::string> allowed;
  for (const char* k : required) {
    allowed.insert(k);
    if (!j.contains(k)) throw SchemaError(path + ": missing field '" + k + "'");
  }
  for (const char* k : optional) allowed.insert(k);
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) throw SchemaError(path + ": unknown field '" + it.key() + "'");
}

inline double real(const json& j, const std::string& path) {
  if (!j.is_number()) throw SchemaError(path + ": expected number");
  return j.get<double>();
}

inline std::size_t index(const json& j, const std::string& path) {
  if (!j.is_number_integer() || j.get<long long>() < 0)
    throw SchemaError(path + ": expected non-negative integer");
  return j.get<std::size_t>();
}

inline const json& array(const json& j, const std::string& path) {
  if (!j.is_array()) throw SchemaError(path + ": expected array");
  return j;
}

inline Vec3 point(const json& j, const std::string& path) {
  array(j, path);
  if (j.size() != 3) throw SchemaError(path + ": expected 3 coordinates");
  return {real(j[0], path + "[0]"), real(j[1], path + "[1]"), real(j[2], path + "[2]")};
}

inline json point_json(const Vec3& p) { return json::array({p.x(), p.y(), p.z()}); }

inline void read_geometry(const json& j, const std::string& path, GeometrySignature& g) {
  const json& geom = j.at("geom");
  require_object(geom, path + ".geom", {"kind", "params"});
  if (!geom["kind"].is_string()) throw SchemaError(path + ".geom.kind: expected string");
  try {
    g.kind = geom_kind_from_name(geom["kind"].get<std::string>());
  } catch (const SchemaError& e) {
    throw SchemaError(path + ".geom.kind: " + e.what());
  }
  const json& params = array(geom["params"], path + ".geom.params");
  if (params.size() != kParamCount)
    throw SchemaError(path + ".geom.params: expected " + std::to_string(kParamCount) + " values");
  for (std::size_t i = 0; i < kParamCount; ++i)
    g.params[i] = real(params[i], path + ".geom.params[" + std::to_string(i) + "]");
  const json& samples = array(j.at("samples"), path + ".samples");
  g.samples.clear();
  for (std::size_t i = 0; i < samples.size(); ++i)
    g.samples.push_back(point(samples[i], path + ".samples[" + std::to_string(i) + "]"));
  const json& weights = array(j.at("weights"), path + ".weights");
  g.weights.clear();
  for (std::size_t i = 0; i < weights.size(); ++i)
    g.weights.push_back(real(weights[i], path + ".weights[" + std::to_string(i) + "]"));
}

inline void write_geometry(json& j, const GeometrySignature& g) {
  json params = json::array();
  for (double p : g.params) params.push_back(p);
  j["geom"] = {{"kind", std::string(geom_kind_name(g.kind))}, {"params", params}};
  json samples = json::array();
  for (const auto& s : g.samples) samples.push_back(point_json(s));
  j["samples"] = samples;
  j["weights"] = g.weights;
}

}  // namespace io_detail

// Parses the exchange JSON without validating invariants (only the schema).
inline BRepGraph brep_from_json(const json& j) {
  using namespace io_detail;
  require_object(j, "$", {"model_id", "bbox", "vertices", "edges", "loops", "faces"});
  BRepGraph b;
  if (!j["model_id"].is_string()) throw SchemaError("$.model_id: expected string");
  b.model_id = j["model_id"].get<std::string>();
  require_object(j["bbox"], "$.bbox", {"min", "max"});
  b.bbox_min = point(j["bbox"]["min"], "$.bbox.min");
  b.bbox_max = point(j["bbox"]["max"], "$.bbox.max");

  const json& vs = array(j["vertices"], "$.vertices");
  for (std::size_t i = 0; i < vs.size(); ++i) {
    const std::string path = "$.vertices[" + std::to_string(i) + "]";
    require_object(vs[i], path, {"pos"});
    b.vertices.push_back({point(vs[i]["pos"], path + ".pos")});
  }
  const json& es = array(j["edges"], "$.edges");
  for (std::size_t i = 0; i < es.size(); ++i) {
    const std::string path = "$.edges[" + std::to_string(i) + "]";
    require_object(es[i], path, {"geom", "samples", "weights", "vertices"});
    Edge e;
    read_geometry(es[i], path, e.geom);
    const json& ev = array(es[i]["vertices"], path + ".vertices");
    if (ev.size() == 2) {
      e.vertices = std::array<std::size_t, 2>{index(ev[0], path + ".vertices[0]"),
                                              index(ev[1], path + ".vertices[1]")};
    } else if (!ev.empty()) {
      throw SchemaError(path + ".vertices: expected 0 or 2 indices");
    }
    b.edges.push_back(std::move(e));
  }
  const json& ls = array(j["loops"], "$.loops");
  for (std::size_t i = 0; i < ls.size(); ++i) {
    const std::string path = "$.loops[" + std::to_string(i) + "]";
    require_object(ls[i], path, {"outer", "edges"});
    Loop l;
    if (!ls[i]["outer"].is_boolean()) throw SchemaError(path + ".outer: expected boolean");
    l.outer = ls[i]["outer"].get<bool>();
    const json& le = array(ls[i]["edges"], path + ".edges");
    for (std::size_t k = 0; k < le.size(); ++k) {
      const std::string p = path + ".edges[" + std::to_string(k) + "]";
      require_object(le[k], p, {"edge", "reversed"});
      if (!le[k]["reversed"].is_boolean()) throw SchemaError(p + ".reversed: expected boolean");
      l.edges.push_back({index(le[k]["edge"], p + ".edge"), le[k]["reversed"].get<bool>()});
    }
    b.loops.push_back(std::move(l));
  }
  const json& fs = array(j["faces"], "$.faces");
  for (std::size_t i = 0; i < fs.size(); ++i) {
    const std::string path = "$.faces[" + std::to_string(i) + "]";
    require_object(fs[i], path, {"geom", "samples", "weights", "loops"});
    Face f;
    read_geometry(fs[i], path, f.geom);
    const json& fl = array(fs[i]["loops"], path + ".loops");
    for (std::size_t k = 0; k < fl.size(); ++k)
      f.loops.push_back(index(fl[k], path + ".loops[" + std::to_string(k) + "]"));
    b.faces.push_back(std::move(f));
  }
  b.finalize();
  return b;
}

inline json brep_to_json(const BRepGraph& b) {
  using namespace io_detail;
  json j;
  j["model_id"] = b.model_id;
  j["bbox"] = {{"min", point_json(b.bbox_min)}, {"max", point_json(b.bbox_max)}};
  json vs = json::array();
  for (const auto& v : b.vertices) vs.push_back({{"pos", point_json(v.pos)}});
  j["vertices"] = vs;
  json es = json::array();
  for (const auto& e : b.edges) {
    json je;
    write_geometry(je, e.geom);
    je["vertices"] = e.vertices ? json::array({(*e.vertices)[0], (*e.vertices)[1]}) : json::array();
    es.push_back(std::move(je));
  }
  j["edges"] = es;
  json ls = json::array();
  for (const auto& l : b.loops) {
    json le = json::array();
    for (const auto& u : l.edges) le.push_back({{"edge", u.edge}, {"reversed", u.reversed}});
    ls.push_back({{"outer", l.outer}, {"edges", le}});
  }
  j["loops"] = ls;
  json fs = json::array();
  for (const auto& f : b.faces) {
    json jf;
    write_geometry(jf, f.geom);
    jf["loops"] = f.loops;
    fs.push_back(std::move(jf));
  }
  j["faces"] = fs;
  return j;
}

// Reads, schema-checks and validates a B-rep. Throws ParseError, SchemaError
// or ValidationError.
inline BRepGraph load_brep(std::istream& in) {
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(e.what());
  }
  BRepGraph b = brep_from_json(j);
  const auto violations = validate(b);
  if (!violations.empty()) {
    std::string msg = violations.front();
    for (std::size_t i = 1; i < violations.size(); ++i) msg += "; " + violations[i];
    throw ValidationError(msg);
  }
  return b;
}

inline BRepGraph load_brep_string(const std::string& text) {
  std::istringstream in(text);
  return load_brep(in);
}

inline BRepGraph load_brep_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  return load_brep(in);
}

inline std::string serialize_brep(const BRepGraph& b) { return brep_to_json(b).dump() + "\n"; }

inline void save_brep_file(const BRepGraph& b, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write '" + path + "'");
  out << serialize_brep(b);
}

}  // namespace brepmatch
