#include "s3/rst.hpp"

#include <fstream>
#include <functional>
#include <sstream>

#include <json.hpp>

#include "s3/error.hpp"

namespace s3 {

using json = nlohmann::json;

std::size_t Document::token_count() const {
  std::size_t n = 0;
  for (const auto& e : edus) n += e.tokens.size();
  return n;
}

std::vector<std::size_t> Document::token_offsets() const {
  std::vector<std::size_t> out;
  std::size_t n = 0;
  for (const auto& e : edus) {
    out.push_back(n);
    n += e.tokens.size();
  }
  return out;
}

char nuclearity_code(Nuclearity n) { return n == Nuclearity::Nucleus ? 'N' : 'S'; }

std::size_t RstTree::leaf_count() const {
  if (is_leaf()) return 1;
  std::size_t n = 0;
  for (const auto& c : children) n += c.leaf_count();
  return n;
}

std::vector<std::size_t> RstTree::leaves() const {
  std::vector<std::size_t> out;
  std::function<void(const RstTree&)> walk = [&](const RstTree& t) {
    if (t.is_leaf()) {
      out.push_back(*t.edu);
      return;
    }
    for (const auto& c : t.children) walk(c);
  };
  walk(*this);
  return out;
}

RstTree RstTree::leaf(std::size_t edu_id) {
  RstTree t;
  t.edu = edu_id;
  return t;
}

RstTree RstTree::internal(std::string relation, std::array<Nuclearity, 2> nuclearity,
                          RstTree left, RstTree right) {
  RstTree t;
  t.relation = std::move(relation);
  t.nuclearity = nuclearity;
  t.children.push_back(std::move(left));
  t.children.push_back(std::move(right));
  return t;
}

namespace {

Nuclearity parse_nuclearity(const json& j, const std::string& path) {
  if (!j.is_string()) throw ValidationError(path + ": nuclearity entries must be \"N\" or \"S\"");
  auto s = j.get<std::string>();
  if (s == "N") return Nuclearity::Nucleus;
  if (s == "S") return Nuclearity::Satellite;
  throw ValidationError(path + ": nuclearity entries must be \"N\" or \"S\", got \"" + s + "\"");
}

RstTree tree_from_json(const json& j, const std::string& path) {
  if (!j.is_object()) throw ValidationError(path + ": node must be an object");
  if (j.contains("edu")) {
    if (j.contains("children")) throw ValidationError(path + ": leaf cannot have children");
    const auto& e = j["edu"];
    if (!e.is_number_integer() || e.get<long long>() < 0) {
      throw ValidationError(path + ": edu must be a nonnegative integer");
    }
    return RstTree::leaf(e.get<std::size_t>());
  }
  if (!j.contains("children") || !j["children"].is_array()) {
    throw ValidationError(path + ": internal node needs a children array");
  }
  const auto& ch = j["children"];
  if (ch.size() != 2) {
    throw ValidationError(path + ": node has " + std::to_string(ch.size()) +
                          " children; trees must be binary");
  }
  if (!j.contains("relation") || !j["relation"].is_string()) {
    throw ValidationError(path + ": missing relation");
  }
  if (!j.contains("nuclearity") || !j["nuclearity"].is_array() ||
      j["nuclearity"].size() != 2) {
    throw ValidationError(path + ": nuclearity must be a pair");
  }
  RstTree t;
  t.relation = j["relation"].get<std::string>();
  t.nuclearity = {parse_nuclearity(j["nuclearity"][0], path),
                  parse_nuclearity(j["nuclearity"][1], path)};
  t.children.push_back(tree_from_json(ch[0], path + ".children[0]"));
  t.children.push_back(tree_from_json(ch[1], path + ".children[1]"));
  return t;
}

json tree_to_json(const RstTree& t) {
  if (t.is_leaf()) return json{{"edu", *t.edu}};
  return json{{"relation", t.relation},
              {"nuclearity",
               {std::string(1, nuclearity_code(t.nuclearity[0])),
                std::string(1, nuclearity_code(t.nuclearity[1]))}},
              {"children", {tree_to_json(t.children[0]), tree_to_json(t.children[1])}}};
}

void validate_node(const RstTree& t, const std::string& path,
                   std::vector<std::pair<std::size_t, std::string>>& leaves) {
  if (t.is_leaf()) {
    if (!t.children.empty()) throw ValidationError(path + ": leaf cannot have children");
    leaves.emplace_back(*t.edu, path);
    return;
  }
  if (t.children.size() != 2) {
    throw ValidationError(path + ": node has " + std::to_string(t.children.size()) +
                          " children; trees must be binary");
  }
  if (t.relation.empty()) throw ValidationError(path + ": empty relation label");
  if (t.nuclearity[0] == Nuclearity::Satellite && t.nuclearity[1] == Nuclearity::Satellite) {
    throw ValidationError(path + ": nuclearity (S,S) is not allowed");
  }
  validate_node(t.children[0], path + ".children[0]", leaves);
  validate_node(t.children[1], path + ".children[1]", leaves);
}

}  // namespace

void validate_rst(const RstTree& t) {
  std::vector<std::pair<std::size_t, std::string>> leaves;
  validate_node(t, "root", leaves);
  std::vector<int> seen(leaves.size(), -1);
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    auto [id, path] = leaves[i];
    if (id >= leaves.size()) {
      throw ValidationError(path + ": edu " + std::to_string(id) +
                            " out of range; expected ids 0.." +
                            std::to_string(leaves.size() - 1));
    }
    if (seen[id] >= 0) {
      throw ValidationError(path + ": duplicate edu id " + std::to_string(id));
    }
    seen[id] = static_cast<int>(i);
  }
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    if (leaves[i].first != i) {
      throw ValidationError(leaves[i].second + ": leaves out of order; edu " +
                            std::to_string(leaves[i].first) + " at position " +
                            std::to_string(i));
    }
  }
}

RstTree parse_rst(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("invalid RST record: ") + e.what(), e.byte);
  }
  RstTree t = tree_from_json(j, "root");
  validate_rst(t);
  return t;
}

std::string serialize_rst(const RstTree& t) { return tree_to_json(t).dump(); }

std::vector<RstSpan> enumerate_spans(const RstTree& t) {
  std::vector<RstSpan> out;
  std::function<std::pair<std::size_t, std::size_t>(const RstTree&)> walk =
      [&](const RstTree& n) -> std::pair<std::size_t, std::size_t> {
    if (n.is_leaf()) return {*n.edu, *n.edu};
    auto l = walk(n.children[0]);
    auto r = walk(n.children[1]);
    RstSpan s;
    s.span_id = out.size();
    s.first_edu = std::min(l.first, r.first);
    s.last_edu = std::max(l.second, r.second);
    s.relation = n.relation;
    s.nuclearity = n.nuclearity;
    out.push_back(s);
    return {s.first_edu, s.last_edu};
  };
  walk(t);
  return out;
}

void validate_against(const RstTree& t, const Document& d) {
  auto leaves = t.leaf_count();
  if (leaves != d.edus.size()) {
    throw ValidationError("RST tree for document " + d.id + " has " +
                          std::to_string(leaves) + " leaves but the document has " +
                          std::to_string(d.edus.size()) + " EDUs");
  }
}

namespace {

std::vector<std::string> string_list(const json& j, const std::string& where) {
  if (!j.is_array()) throw ValidationError(where + " must be an array of strings");
  std::vector<std::string> out;
  for (const auto& v : j) {
    if (!v.is_string()) throw ValidationError(where + " must be an array of strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

Document doc_from_json(const json& j, const std::string& where) {
  if (!j.is_object()) throw ValidationError(where + ": record must be an object");
  for (const char* key : {"id", "edus", "headline", "headline_tokens"}) {
    if (!j.contains(key)) throw ValidationError(where + ": missing field '" + key + "'");
  }
  Document d;
  if (!j["id"].is_string()) throw ValidationError(where + ": field 'id' must be a string");
  d.id = j["id"].get<std::string>();
  if (!j["headline"].is_string()) {
    throw ValidationError(where + ": field 'headline' must be a string");
  }
  d.headline = j["headline"].get<std::string>();
  d.headline_tokens = string_list(j["headline_tokens"], where + ": field 'headline_tokens'");
  if (d.headline_tokens.empty()) {
    throw ValidationError(where + ": field 'headline_tokens' must be nonempty");
  }
  if (!j["edus"].is_array() || j["edus"].empty()) {
    throw ValidationError(where + ": field 'edus' must be a nonempty array");
  }
  for (std::size_t i = 0; i < j["edus"].size(); ++i) {
    const auto& e = j["edus"][i];
    std::string ew = where + ": field 'edus[" + std::to_string(i) + "]'";
    if (!e.is_object() || !e.contains("tokens")) {
      throw ValidationError(ew + " needs 'tokens'");
    }
    Edu edu;
    edu.id = i;
    edu.text = e.value("text", std::string{});
    edu.tokens = string_list(e["tokens"], ew + ".tokens");
    if (edu.tokens.empty()) throw ValidationError(ew + ".tokens must be nonempty");
    d.edus.push_back(std::move(edu));
  }
  return d;
}

}  // namespace

std::vector<Document> parse_docs_lines(std::string_view text,
                                       const std::string& source_name) {
  std::vector<Document> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::string where = source_name + ":" + std::to_string(line_no);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(where + ": " + e.what(), e.byte);
    }
    out.push_back(doc_from_json(j, where));
  }
  return out;
}

std::vector<Document> read_docs_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read documents file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_docs_lines(ss.str(), path);
}

std::string serialize_doc(const Document& d) {
  json edus = json::array();
  for (const auto& e : d.edus) edus.push_back({{"text", e.text}, {"tokens", e.tokens}});
  json j{{"id", d.id},
         {"edus", edus},
         {"headline", d.headline},
         {"headline_tokens", d.headline_tokens}};
  return j.dump();
}

RstTree read_rst_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read RST file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_rst(ss.str());
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what(), e.offset());
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

}  // namespace s3
