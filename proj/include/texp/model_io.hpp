#ifndef TEXP_MODEL_IO_HPP
#define TEXP_MODEL_IO_HPP

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "texp/errors.hpp"
#include "texp/model.hpp"

namespace texp {

/**
 * Converts a JSON number to an exact rational. Floating-point values are
 * recovered through the shortest decimal that round-trips the double, so a
 * model file containing `0.42762` yields exactly 42762/100000. Strings are
 * also accepted and parsed as exact decimals.
 */
inline Rat json_to_rat(const nlohmann::json& j) {
  if (j.is_number_integer()) return Rat(j.get<std::int64_t>());
  if (j.is_number_float()) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), j.get<double>());
    return Rat::from_decimal(std::string(buf, res.ptr));
  }
  if (j.is_string()) return Rat::from_decimal(j.get<std::string>());
  throw ParseError("expected a number, got " + std::string(j.type_name()));
}

namespace detail {

inline int find_feature(const Ensemble& e, const nlohmann::json& ref) {
  if (ref.is_number_integer()) {
    int idx = ref.get<int>();
    if (idx < 0 || idx >= e.num_features())
      throw ParseError("feature index " + std::to_string(idx) + " out of range");
    return idx;
  }
  if (ref.is_string()) {
    const std::string name = ref.get<std::string>();
    for (int i = 0; i < e.num_features(); ++i)
      if (e.features[i].name == name) return i;
    throw ParseError("unknown feature '" + name + "'");
  }
  throw ParseError("feature reference must be a name or an index");
}

inline int find_category(const Feature& f, const nlohmann::json& ref) {
  if (ref.is_number_integer()) {
    int idx = ref.get<int>();
    if (idx < 0 || idx >= static_cast<int>(f.cats.size()))
      throw ParseError("category index " + std::to_string(idx) + " out of range for '" +
                       f.name + "'");
    return idx;
  }
  if (ref.is_string()) {
    const std::string name = ref.get<std::string>();
    for (std::size_t i = 0; i < f.cats.size(); ++i)
      if (f.cats[i] == name) return static_cast<int>(i);
    throw ParseError("unknown category '" + name + "' of feature '" + f.name + "'");
  }
  throw ParseError("category reference must be a name or an index");
}

inline int parse_node(const Ensemble& e, const nlohmann::json& j, Tree& tree) {
  if (!j.is_object()) throw ParseError("tree node must be an object");
  const int idx = static_cast<int>(tree.nodes.size());
  tree.nodes.emplace_back();
  if (j.contains("leaf")) {
    const nlohmann::json& w = j.at("leaf");
    if (!w.is_array()) throw ParseError("leaf weights must be an array");
    for (const nlohmann::json& item : w) tree.nodes[idx].weights.push_back(json_to_rat(item));
    return idx;
  }
  if (!j.contains("feature") || !j.contains("op"))
    throw ParseError("decision node needs 'feature' and 'op'");
  const int feat = find_feature(e, j.at("feature"));
  const Feature& f = e.features[feat];
  const std::string op = j.at("op").get<std::string>();
  Node n;
  n.feature = feat;
  if (op == "<" || op == "<=") {
    if (f.kind != FeatureKind::real_num)
      throw ParseError("threshold test on non-numeric feature '" + f.name + "'");
    n.le = (op == "<=");
    n.threshold = json_to_rat(j.at("threshold"));
  } else if (op == "in") {
    if (f.kind != FeatureKind::categorical)
      throw ParseError("membership test on non-categorical feature '" + f.name + "'");
    if (!j.contains("set") || !j.at("set").is_array())
      throw ParseError("membership test needs a 'set' array");
    for (const nlohmann::json& item : j.at("set")) n.cat_set.push_back(find_category(f, item));
    std::sort(n.cat_set.begin(), n.cat_set.end());
    n.cat_set.erase(std::unique(n.cat_set.begin(), n.cat_set.end()), n.cat_set.end());
  } else if (op == "=1") {
    if (f.kind != FeatureKind::binary)
      throw ParseError("'=1' test on non-binary feature '" + f.name + "'");
  } else {
    throw ParseError("unknown test op '" + op + "'");
  }
  if (!j.contains("true") || !j.contains("false"))
    throw ParseError("decision node needs 'true' and 'false' branches");
  tree.nodes[idx] = n;
  const int yes = parse_node(e, j.at("true"), tree);
  const int no = parse_node(e, j.at("false"), tree);
  tree.nodes[idx].yes = yes;
  tree.nodes[idx].no = no;
  return idx;
}

}  // namespace detail

/** Parses a model from JSON text. Throws ParseError / ValidationError. */
inline Ensemble load_model(std::istream& in) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& ex) {
    throw ParseError(std::string("model JSON: ") + ex.what());
  }
  try {
    Ensemble e;
    const std::string variant = j.at("variant").get<std::string>();
    if (variant == "rfmv")
      e.variant = Variant::rfmv;
    else if (variant == "rfwv")
      e.variant = Variant::rfwv;
    else if (variant == "bt")
      e.variant = Variant::bt;
    else
      throw ParseError("unknown variant '" + variant + "'");
    for (const nlohmann::json& c : j.at("classes")) e.classes.push_back(c.get<std::string>());
    for (const nlohmann::json& fj : j.at("features")) {
      Feature f;
      f.name = fj.at("name").get<std::string>();
      const std::string kind = fj.at("kind").get<std::string>();
      if (kind == "real") {
        f.kind = FeatureKind::real_num;
        const nlohmann::json& dom = fj.at("domain");
        if (!dom.is_array() || dom.size() != 2)
          throw ParseError("real feature '" + f.name + "' needs a [lo, hi] domain");
        f.lo = json_to_rat(dom[0]);
        f.hi = json_to_rat(dom[1]);
      } else if (kind == "categorical") {
        f.kind = FeatureKind::categorical;
        for (const nlohmann::json& c : fj.at("domain")) f.cats.push_back(c.get<std::string>());
      } else if (kind == "binary") {
        f.kind = FeatureKind::binary;
      } else {
        throw ParseError("unknown feature kind '" + kind + "'");
      }
      e.features.push_back(std::move(f));
    }
    for (const nlohmann::json& tj : j.at("trees")) {
      Tree t;
      detail::parse_node(e, tj, t);
      e.trees.push_back(std::move(t));
    }
    e.validate();
    return e;
  } catch (const nlohmann::json::exception& ex) {
    throw ParseError(std::string("model JSON: ") + ex.what());
  }
}

inline Ensemble load_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open model file '" + path + "'");
  return load_model(in);
}

inline Ensemble load_model_text(const std::string& text) {
  std::istringstream in(text);
  return load_model(in);
}

namespace detail {

/** Rational as a JSON value: exact decimal as a number, otherwise a string. */
inline nlohmann::json rat_to_json(const Rat& r) {
  const std::string s = r.to_string();
  if (s.find('/') != std::string::npos) return s;
  const double d = std::strtod(s.c_str(), nullptr);
  char buf[64];
  auto back = std::to_chars(buf, buf + sizeof(buf), d);
  if (Rat::from_decimal(std::string(buf, back.ptr)) == r) return d;
  return s;  // decimal that does not survive a double round-trip
}

inline nlohmann::json node_to_json(const Ensemble& e, const Tree& t, int idx) {
  const Node& n = t.nodes[idx];
  nlohmann::json j;
  if (n.is_leaf()) {
    nlohmann::json w = nlohmann::json::array();
    for (const Rat& r : n.weights) w.push_back(rat_to_json(r));
    j["leaf"] = std::move(w);
    return j;
  }
  const Feature& f = e.features[n.feature];
  j["feature"] = f.name;
  switch (f.kind) {
    case FeatureKind::real_num:
      j["op"] = n.le ? "<=" : "<";
      j["threshold"] = rat_to_json(n.threshold);
      break;
    case FeatureKind::categorical: {
      j["op"] = "in";
      nlohmann::json set = nlohmann::json::array();
      for (int c : n.cat_set) set.push_back(f.cats[c]);
      j["set"] = std::move(set);
      break;
    }
    default:
      j["op"] = "=1";
  }
  j["true"] = node_to_json(e, t, n.yes);
  j["false"] = node_to_json(e, t, n.no);
  return j;
}

}  // namespace detail

inline void write_model(std::ostream& out, const Ensemble& e) {
  nlohmann::json j;
  j["variant"] = variant_name(e.variant);
  j["classes"] = e.classes;
  nlohmann::json feats = nlohmann::json::array();
  for (const Feature& f : e.features) {
    nlohmann::json fj;
    fj["name"] = f.name;
    switch (f.kind) {
      case FeatureKind::real_num:
        fj["kind"] = "real";
        fj["domain"] = {detail::rat_to_json(f.lo), detail::rat_to_json(f.hi)};
        break;
      case FeatureKind::categorical:
        fj["kind"] = "categorical";
        fj["domain"] = f.cats;
        break;
      default:
        fj["kind"] = "binary";
    }
    feats.push_back(std::move(fj));
  }
  j["features"] = std::move(feats);
  nlohmann::json trees = nlohmann::json::array();
  for (const Tree& t : e.trees) trees.push_back(detail::node_to_json(e, t, 0));
  j["trees"] = std::move(trees);
  out << j.dump(2) << '\n';
}

inline std::string model_to_text(const Ensemble& e) {
  std::ostringstream out;
  write_model(out, e);
  return out.str();
}

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace detail

/**
 * Parses a comma-separated instance, one field per feature in model order.
 * Real fields are exact decimals, categorical fields are category names (or
 * indices when numeric), binary fields are 0/1.
 */
inline Instance parse_instance(const Ensemble& e, const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  fields.push_back(cur);
  if (static_cast<int>(fields.size()) != e.num_features())
    throw ParseError("instance has " + std::to_string(fields.size()) + " fields, expected " +
                     std::to_string(e.num_features()));
  Instance x;
  for (int i = 0; i < e.num_features(); ++i) {
    const Feature& f = e.features[i];
    const std::string tok = detail::trim(fields[i]);
    if (tok.empty()) throw ParseError("empty field for feature '" + f.name + "'");
    switch (f.kind) {
      case FeatureKind::real_num:
        x.emplace_back(Rat::from_decimal(tok));
        break;
      case FeatureKind::categorical: {
        int idx = -1;
        for (std::size_t c = 0; c < f.cats.size(); ++c)
          if (f.cats[c] == tok) idx = static_cast<int>(c);
        if (idx < 0) {
          bool digits = !tok.empty() && tok.find_first_not_of("0123456789") == std::string::npos;
          if (digits) idx = std::stoi(tok);
          if (idx < 0 || idx >= static_cast<int>(f.cats.size()))
            throw ParseError("unknown category '" + tok + "' for feature '" + f.name + "'");
        }
        x.emplace_back(idx);
        break;
      }
      default:
        if (tok != "0" && tok != "1")
          throw ParseError("feature '" + f.name + "' expects 0 or 1, got '" + tok + "'");
        x.emplace_back(tok == "1" ? 1 : 0);
    }
  }
  validate_instance(e, x);
  return x;
}

inline std::string value_to_string(const Feature& f, const Value& v) {
  switch (f.kind) {
    case FeatureKind::real_num: return std::get<Rat>(v).to_string();
    case FeatureKind::categorical: return f.cats[std::get<int>(v)];
    default: return std::get<int>(v) ? "1" : "0";
  }
}

inline std::string instance_to_string(const Ensemble& e, const Instance& x) {
  std::string out;
  for (int i = 0; i < e.num_features(); ++i) {
    if (i) out += ',';
    out += value_to_string(e.features[i], x[i]);
  }
  return out;
}

}  // namespace texp

#endif  // TEXP_MODEL_IO_HPP
