#include "infbranch/model_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "infbranch/errors.hpp"
#include "infbranch/report.hpp"
#include "json.hpp"

namespace infbranch {

namespace {

using nlohmann::json;

class SchemaError : public std::runtime_error {
 public:
  SchemaError(std::string where, const std::string& what)
      : std::runtime_error(what), where_(std::move(where)) {}
  const std::string& where() const { return where_; }

 private:
  std::string where_;
};

std::string child(const std::string& ptr, std::string_view key) {
  std::string k(key);
  std::string escaped;
  for (char ch : k) {
    if (ch == '~') escaped += "~0";
    else if (ch == '/') escaped += "~1";
    else escaped += ch;
  }
  return ptr + "/" + escaped;
}

std::string child(const std::string& ptr, std::size_t index) { return ptr + "/" + std::to_string(index); }

const json& field(const json& obj, const std::string& ptr, std::string_view key) {
  if (!obj.is_object()) throw SchemaError(ptr, "expected an object");
  const auto it = obj.find(std::string(key));
  if (it == obj.end()) throw SchemaError(ptr, "missing field '" + std::string(key) + "'");
  return *it;
}

double number(const json& v, const std::string& ptr) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    try {
      return parse_rational(v.get<std::string>());
    } catch (const ModelError& e) {
      throw SchemaError(ptr, e.what());
    }
  }
  throw SchemaError(ptr, "expected a number or a \"p/q\" string");
}

int integer(const json& v, const std::string& ptr) {
  if (v.is_number_integer()) return v.get<int>();
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    int out = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec == std::errc() && p == s.data() + s.size()) return out;
  }
  throw SchemaError(ptr, "expected an integer");
}

void check_keys(const json& obj, const std::string& ptr, std::initializer_list<std::string_view> allowed) {
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) throw SchemaError(child(ptr, key), "unknown field");
  }
}

ProgenyLaw parse_law(const json& events, const std::string& ptr) {
  if (!events.is_array()) throw SchemaError(ptr, "expected an array of events");
  std::vector<OffspringEvent> out;
  for (std::size_t e = 0; e < events.size(); ++e) {
    const std::string ep = child(ptr, e);
    const json& ev = events[e];
    if (!ev.is_object()) throw SchemaError(ep, "expected an object");
    check_keys(ev, ep, {"counts", "prob"});
    const json& counts = field(ev, ep, "counts");
    const std::string cp = child(ep, "counts");
    if (!counts.is_object()) throw SchemaError(cp, "expected an object mapping type to count");
    std::vector<std::pair<TypeIndex, int>> c;
    for (const auto& [key, value] : counts.items()) {
      const std::string kp = child(cp, key);
      int type = 0;
      const auto [p, ec] = std::from_chars(key.data(), key.data() + key.size(), type);
      if (ec != std::errc() || p != key.data() + key.size()) throw SchemaError(kp, "type key must be an integer");
      c.emplace_back(type, integer(value, kp));
    }
    const double prob = number(field(ev, ep, "prob"), child(ep, "prob"));
    try {
      out.emplace_back(std::move(c), prob);
    } catch (const ModelError& err) {
      throw SchemaError(ep, err.what());
    }
  }
  try {
    return ProgenyLaw(std::move(out));
  } catch (const ModelError& err) {
    throw SchemaError(ptr, err.what());
  }
}

ModelSpec build(const json& doc) {
  if (!doc.is_object()) throw SchemaError("", "expected a JSON object");
  check_keys(doc, "", {"name", "tail_rule", "overrides", "metadata"});
  const json& name = field(doc, "", "name");
  if (!name.is_string()) throw SchemaError("/name", "expected a string");

  const json& rule = field(doc, "", "tail_rule");
  const json& family = field(rule, "/tail_rule", "family");
  if (!family.is_string()) throw SchemaError("/tail_rule/family", "expected a string");
  const auto fam = family.get<std::string>();
  TailRule tail;
  if (fam == "tridiagonal") {
    check_keys(rule, "/tail_rule", {"family", "a", "b", "c"});
    tail = TridiagonalRule{number(field(rule, "/tail_rule", "a"), "/tail_rule/a"),
                           number(field(rule, "/tail_rule", "b"), "/tail_rule/b"),
                           number(field(rule, "/tail_rule", "c"), "/tail_rule/c")};
  } else if (fam == "super_diagonal") {
    check_keys(rule, "/tail_rule", {"family", "b", "c"});
    tail = SuperDiagonalRule{number(field(rule, "/tail_rule", "b"), "/tail_rule/b"),
                             number(field(rule, "/tail_rule", "c"), "/tail_rule/c")};
  } else if (fam == "explicit") {
    check_keys(rule, "/tail_rule", {"family"});
    tail = ExplicitFinite{};
  } else {
    throw SchemaError("/tail_rule/family",
                      "unknown family '" + fam + "' (tridiagonal, super_diagonal, explicit)");
  }

  std::map<TypeIndex, ProgenyLaw> overrides;
  if (const auto it = doc.find("overrides"); it != doc.end()) {
    if (!it->is_array()) throw SchemaError("/overrides", "expected an array");
    for (std::size_t i = 0; i < it->size(); ++i) {
      const std::string op = child("/overrides", i);
      const json& o = (*it)[i];
      if (!o.is_object()) throw SchemaError(op, "expected an object");
      check_keys(o, op, {"type", "events"});
      const int type = integer(field(o, op, "type"), child(op, "type"));
      if (type < 1) throw SchemaError(child(op, "type"), "type must be >= 1");
      if (overrides.count(type)) throw SchemaError(child(op, "type"), "type overridden twice");
      overrides.emplace(type, parse_law(field(o, op, "events"), child(op, "events")));
    }
  }

  bool dichotomy = false;
  std::string notes;
  if (const auto it = doc.find("metadata"); it != doc.end()) {
    if (!it->is_object()) throw SchemaError("/metadata", "expected an object");
    check_keys(*it, "/metadata", {"dichotomy_asserted", "notes"});
    if (const auto d = it->find("dichotomy_asserted"); d != it->end()) {
      if (!d->is_boolean()) throw SchemaError("/metadata/dichotomy_asserted", "expected true or false");
      dichotomy = d->get<bool>();
    }
    if (const auto n = it->find("notes"); n != it->end()) {
      if (!n->is_string()) throw SchemaError("/metadata/notes", "expected a string");
      notes = n->get<std::string>();
    }
  }

  try {
    return ModelSpec(name.get<std::string>(), tail, std::move(overrides), dichotomy, notes);
  } catch (const ModelError& e) {
    throw SchemaError("", e.what());
  }
}

std::pair<std::size_t, std::size_t> line_col(std::string_view text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace

double parse_rational(std::string_view text) {
  const auto parse = [&](std::string_view s) {
    double v = 0.0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || p != s.data() + s.size())
      throw ModelError("not a number: '" + std::string(text) + "'");
    return v;
  };
  const auto slash = text.find('/');
  if (slash == std::string_view::npos) return parse(text);
  const double q = parse(text.substr(slash + 1));
  if (q == 0.0) throw ModelError("zero denominator in '" + std::string(text) + "'");
  return parse(text.substr(0, slash)) / q;
}

ModelSpec parse_model(std::string_view text, std::string_view source) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_col(text, e.byte);
    std::string msg = e.what();
    if (const auto p = msg.find("syntax error"); p != std::string::npos) msg = msg.substr(p);
    throw ModelError(std::string(source) + ":" + std::to_string(line) + ":" + std::to_string(col) +
                     ": " + msg);
  }
  try {
    return build(doc);
  } catch (const SchemaError& e) {
    throw ModelError(std::string(source) + ": " + (e.where().empty() ? "/" : e.where()) + ": " + e.what());
  }
}

ModelSpec load_model(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ModelError("cannot open model file " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_model(ss.str(), file.string());
}

std::string model_to_json(const ModelSpec& model) {
  nlohmann::ordered_json doc;
  doc["name"] = model.name();
  nlohmann::ordered_json rule;
  rule["family"] = family_name(model.tail());
  if (const auto* t = std::get_if<TridiagonalRule>(&model.tail())) {
    rule["a"] = t->a;
    rule["b"] = t->b;
    rule["c"] = t->c;
  } else if (const auto* s = std::get_if<SuperDiagonalRule>(&model.tail())) {
    rule["b"] = s->b;
    rule["c"] = s->c;
  }
  doc["tail_rule"] = rule;
  doc["overrides"] = nlohmann::ordered_json::array();
  for (const auto& [type, law] : model.overrides()) {
    nlohmann::ordered_json o;
    o["type"] = type;
    o["events"] = nlohmann::ordered_json::array();
    for (const auto& e : law.events()) {
      nlohmann::ordered_json counts = nlohmann::ordered_json::object();
      for (const auto& [t, c] : e.counts) counts[std::to_string(t)] = c;
      o["events"].push_back({{"counts", counts}, {"prob", e.probability}});
    }
    doc["overrides"].push_back(o);
  }
  doc["metadata"] = {{"dichotomy_asserted", model.dichotomy_asserted()}, {"notes", model.notes()}};
  return doc.dump(2) + "\n";
}

InitialDistribution load_initial_distribution(const std::filesystem::path& file) {
  const CsvTable t = read_csv_file(file);
  std::size_t tc, pc;
  try {
    tc = t.column("type");
    pc = t.column("probability");
  } catch (const std::out_of_range&) {
    throw ModelError(file.string() + ": initial distribution needs columns type,probability");
  }
  std::map<TypeIndex, double> w;
  double total = 0.0;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const double type = t.rows[r][tc];
    if (type < 1 || type != std::floor(type))
      throw ModelError(file.string() + ": row " + std::to_string(r + 1) + ": bad type");
    w[static_cast<TypeIndex>(type)] += t.rows[r][pc];
    total += t.rows[r][pc];
  }
  InitialDistribution d;
  TypeIndex last = w.empty() ? 0 : w.rbegin()->first;
  d.weights.assign(static_cast<std::size_t>(last), 0.0);
  for (const auto& [type, p] : w) d.weights[static_cast<std::size_t>(type - 1)] = p;
  d.tail_deficit = std::max(0.0, 1.0 - total);
  try {
    d.validate();
  } catch (const ModelError& e) {
    throw ModelError(file.string() + ": " + e.what());
  }
  return d;
}

}  // namespace infbranch
