#include "s3/s3_graph.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "s3/error.hpp"

namespace s3 {

using json = nlohmann::json;

std::string_view to_string(NodeType t) {
  switch (t) {
    case NodeType::TextSpan: return "A";
    case NodeType::Edu: return "B";
    case NodeType::Word: return "C_Word";
    case NodeType::Dummy: return "C_Dummy";
  }
  return "?";
}

std::string_view to_string(EdgeOrigin o) {
  switch (o) {
    case EdgeOrigin::Rst: return "RST";
    case EdgeOrigin::Amr: return "AMR";
    case EdgeOrigin::RstAmr: return "RST_AMR";
    case EdgeOrigin::Reverse: return "REVERSE";
    case EdgeOrigin::Self: return "SELF";
  }
  return "?";
}

std::optional<std::size_t> S3Graph::position(std::size_t id) const {
  auto it = std::lower_bound(nodes.begin(), nodes.end(), id,
                             [](const S3Node& n, std::size_t v) { return n.id < v; });
  if (it == nodes.end() || it->id != id) return std::nullopt;
  return static_cast<std::size_t>(it - nodes.begin());
}

const S3Node& S3Graph::node(std::size_t id) const {
  auto p = position(id);
  if (!p) throw IntegrityError("no node with id " + std::to_string(id));
  return nodes[*p];
}

std::size_t S3Graph::count(NodeType t) const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [t](const S3Node& n) { return n.type == t; }));
}

// ---- construction ---------------------------------------------------------

S3Graph build_s3(const Document& d, const RstTree& t, const std::vector<AmrGraph>& amrs) {
  validate_against(t, d);
  if (amrs.size() != d.edus.size()) {
    throw ValidationError("document " + d.id + " has " + std::to_string(d.edus.size()) +
                          " EDUs but " + std::to_string(amrs.size()) + " AMR graphs");
  }
  const std::size_t n_edus = d.edus.size();
  const auto offsets = d.token_offsets();

  S3Graph g;
  g.doc_id = d.id;

  auto spans = enumerate_spans(t);
  for (const auto& s : spans) {
    S3Node node;
    node.id = g.nodes.size();
    node.type = NodeType::TextSpan;
    node.label = s.relation;
    node.span = std::make_pair(s.first_edu, s.last_edu);
    g.nodes.push_back(std::move(node));
  }
  const std::size_t edu_base = g.nodes.size();
  for (std::size_t e = 0; e < n_edus; ++e) {
    S3Node node;
    node.id = g.nodes.size();
    node.type = NodeType::Edu;
    node.label = "edu-" + std::to_string(e);
    node.edu = e;
    g.nodes.push_back(std::move(node));
  }
  g.root = spans.empty() ? edu_base : spans.size() - 1;

  // RST edges: walk in post-order again so span ids line up.
  {
    std::size_t next_span = 0;
    std::function<std::size_t(const RstTree&)> walk = [&](const RstTree& n) -> std::size_t {
      if (n.is_leaf()) return edu_base + *n.edu;
      std::size_t left = walk(n.children[0]);
      std::size_t right = walk(n.children[1]);
      std::size_t self = next_span++;
      for (int c = 0; c < 2; ++c) {
        S3Edge e;
        e.src = self;
        e.dst = c == 0 ? left : right;
        e.label = n.relation + "/" + nuclearity_code(n.nuclearity[c]);
        e.origin = EdgeOrigin::Rst;
        g.edges.push_back(std::move(e));
      }
      return self;
    };
    walk(t);
  }

  std::vector<bool> covered(d.token_count(), false);
  for (std::size_t e = 0; e < n_edus; ++e) {
    const AmrGraph& amr = amrs[e];
    const std::size_t n_tokens = d.edus[e].tokens.size();
    auto words = word_nodes(amr);  // throws on alignment conflicts
    for (const auto& [tok, var] : words) {
      if (tok >= n_tokens) {
        throw ValidationError("document " + d.id + ", EDU " + std::to_string(e) +
                              ": AMR node " + var + " aligned to token " +
                              std::to_string(tok) + " but the EDU has " +
                              std::to_string(n_tokens) + " tokens");
      }
      std::size_t global = offsets[e] + tok;
      if (covered[global]) {
        throw ValidationError("document " + d.id + ": token " + std::to_string(global) +
                              " covered twice");
      }
      covered[global] = true;
    }
    std::unordered_map<std::string, std::size_t> var_id;
    const std::size_t first_amr_node = g.nodes.size();
    // A parser with nothing to say about an EDU emits "(x / amr-empty)";
    // the EDU then contributes rest words only.
    const bool placeholder = amr.nodes.size() == 1 && amr.edges.empty() &&
                             amr.nodes[0].kind == AmrNodeKind::Dummy &&
                             amr.nodes[0].concept_label == kEmptyAmrConcept;
    for (const auto& var : placeholder ? std::vector<std::string>{} : serialization_order(amr)) {
      const AmrNode* an = amr.find(var);
      S3Node node;
      node.id = g.nodes.size();
      node.label = an->concept_label;
      node.edu = e;
      node.amr_var = var;
      if (an->kind == AmrNodeKind::WordAligned) {
        node.type = NodeType::Word;
        node.token = offsets[e] + *an->token_index;
      } else {
        node.type = NodeType::Dummy;
      }
      var_id[var] = node.id;
      g.nodes.push_back(std::move(node));
    }
    for (const auto& ae : amr.edges) {
      g.edges.push_back({var_id.at(ae.source), var_id.at(ae.target), ae.role, EdgeOrigin::Amr});
    }
    for (std::size_t id = first_amr_node; id < g.nodes.size(); ++id) {
      if (g.nodes[id].type == NodeType::Word) {
        g.edges.push_back({edu_base + e, id, std::string(kRstAmrLabel), EdgeOrigin::RstAmr});
      }
    }
  }

  for (std::size_t e = 0; e < n_edus; ++e) {
    for (std::size_t k = 0; k < d.edus[e].tokens.size(); ++k) {
      std::size_t global = offsets[e] + k;
      if (covered[global]) continue;
      S3Node node;
      node.id = g.nodes.size();
      node.type = NodeType::Word;
      node.label = d.edus[e].tokens[k];
      node.edu = e;
      node.token = global;
      node.rest_word = true;
      g.edges.push_back({edu_base + e, node.id, std::string(kRstAmrLabel), EdgeOrigin::RstAmr});
      g.nodes.push_back(std::move(node));
    }
  }

  if (!is_anchored(g)) {
    throw IntegrityError("built graph for document " + d.id + " is not connected");
  }
  return g;
}

// ---- reachability -------------------------------------------------------

std::vector<std::size_t> orphan_amr_nodes(const S3Graph& g) {
  const std::size_t n = g.nodes.size();
  std::vector<std::vector<std::size_t>> amr_adj(n);
  for (const auto& e : g.edges) {
    if (e.origin != EdgeOrigin::Amr) continue;
    auto s = g.position(e.src), t = g.position(e.dst);
    if (!s || !t) continue;
    amr_adj[*s].push_back(*t);
    amr_adj[*t].push_back(*s);
  }
  std::vector<bool> seen(n, false);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& node = g.nodes[i];
    bool amr_node = (node.type == NodeType::Word && !node.rest_word) ||
                    node.type == NodeType::Dummy;
    if (seen[i] || !amr_node) continue;
    std::vector<std::size_t> comp, stack{i};
    seen[i] = true;
    bool has_word = false;
    while (!stack.empty()) {
      auto v = stack.back();
      stack.pop_back();
      comp.push_back(v);
      has_word = has_word || g.nodes[v].type == NodeType::Word;
      for (auto w : amr_adj[v]) {
        if (!seen[w]) {
          seen[w] = true;
          stack.push_back(w);
        }
      }
    }
    if (has_word) continue;
    for (auto v : comp) out.push_back(g.nodes[v].id);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<bool> anchored_nodes(const S3Graph& g, const std::vector<std::size_t>& orphans) {
  const std::size_t n = g.nodes.size();
  std::vector<bool> out(n, false);
  auto root = g.position(g.root);
  if (!root) return out;
  std::vector<std::vector<std::size_t>> adj(n);
  for (const auto& e : g.edges) {
    auto s = g.position(e.src), t = g.position(e.dst);
    if (!s || !t) continue;
    adj[*s].push_back(*t);
    adj[*t].push_back(*s);
  }
  auto flood = [&](std::size_t start) {
    if (out[start]) return;
    out[start] = true;
    std::vector<std::size_t> stack{start};
    while (!stack.empty()) {
      auto v = stack.back();
      stack.pop_back();
      for (auto w : adj[v]) {
        if (!out[w]) {
          out[w] = true;
          stack.push_back(w);
        }
      }
    }
  };
  flood(*root);

  std::unordered_map<std::size_t, std::size_t> edu_pos;
  for (std::size_t i = 0; i < n; ++i) {
    if (g.nodes[i].type == NodeType::Edu) edu_pos[*g.nodes[i].edu] = i;
  }
  for (auto id : orphans) {
    auto p = g.position(id);
    if (!p || out[*p] || !g.nodes[*p].edu) continue;
    auto it = edu_pos.find(*g.nodes[*p].edu);
    if (it != edu_pos.end() && out[it->second]) flood(*p);
  }
  return out;
}

std::vector<bool> anchored_nodes(const S3Graph& g) {
  return anchored_nodes(g, orphan_amr_nodes(g));
}

bool is_anchored(const S3Graph& g) {
  auto a = anchored_nodes(g);
  return std::all_of(a.begin(), a.end(), [](bool b) { return b; });
}

// ---- adjacency ------------------------------------------------------------

AdjacencyView to_adjacency(const S3Graph& g) {
  AdjacencyView adj;
  const std::size_t n = g.nodes.size();
  adj.n = n;
  adj.mask.assign(n * n, 0);
  adj.label_index.assign(n * n, -1);
  std::map<std::string, int> ids;
  auto label_id = [&](const std::string& label) {
    auto [it, inserted] = ids.emplace(label, static_cast<int>(adj.labels.size()));
    if (inserted) adj.labels.push_back(label);
    return it->second;
  };
  auto set = [&](std::size_t i, std::size_t j, int label) {
    if (adj.mask[i * n + j]) return;
    adj.mask[i * n + j] = 1;
    adj.label_index[i * n + j] = label;
  };
  const int self = label_id(std::string(kSelfLabel));
  for (std::size_t i = 0; i < n; ++i) set(i, i, self);
  for (const auto& e : g.edges) {
    auto s = g.position(e.src), t = g.position(e.dst);
    if (!s || !t) throw IntegrityError("edge references a missing node");
    if (*s == *t) continue;
    set(*s, *t, label_id(e.label));
    set(*t, *s, label_id(std::string(kReversePrefix) + e.label));
  }
  adj.neighbors.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (adj.mask[i * n + j]) adj.neighbors[i].emplace_back(j, adj.label_index[i * n + j]);
    }
  }
  return adj;
}

// ---- statistics ---------------------------------------------------------

NodeStats node_stats(const S3Graph& g) {
  if (g.nodes.empty()) throw ValidationError("node_stats: empty graph");
  NodeStats s;
  for (const auto& n : g.nodes) {
    switch (n.type) {
      case NodeType::TextSpan: s.text_span += 1; break;
      case NodeType::Edu: s.edu += 1; break;
      case NodeType::Word: (n.rest_word ? s.rest_word : s.amr_word) += 1; break;
      case NodeType::Dummy: s.dummy += 1; break;
    }
  }
  double total = static_cast<double>(g.nodes.size());
  s.text_span /= total;
  s.edu /= total;
  s.amr_word /= total;
  s.rest_word /= total;
  s.dummy /= total;
  return s;
}

// ---- serialization --------------------------------------------------------

namespace {

NodeType parse_node_type(const std::string& s, const std::string& where) {
  if (s == "A") return NodeType::TextSpan;
  if (s == "B") return NodeType::Edu;
  if (s == "C_Word") return NodeType::Word;
  if (s == "C_Dummy") return NodeType::Dummy;
  throw ValidationError(where + ": unknown ntype '" + s + "'");
}

EdgeOrigin parse_origin(const std::string& s, const std::string& where) {
  for (auto o : {EdgeOrigin::Rst, EdgeOrigin::Amr, EdgeOrigin::RstAmr, EdgeOrigin::Reverse,
                 EdgeOrigin::Self}) {
    if (to_string(o) == s) return o;
  }
  throw ValidationError(where + ": unknown edge origin '" + s + "'");
}

}  // namespace

std::string serialize_s3(const S3Graph& g) {
  json nodes = json::array();
  for (const auto& n : g.nodes) {
    json j{{"id", n.id}, {"ntype", std::string(to_string(n.type))}, {"label", n.label}};
    if (n.edu) j["edu"] = *n.edu;
    if (n.token) j["token"] = *n.token;
    if (n.span) j["span"] = {n.span->first, n.span->second};
    if (n.rest_word) j["rest"] = true;
    if (!n.amr_var.empty()) j["var"] = n.amr_var;
    nodes.push_back(std::move(j));
  }
  json edges = json::array();
  for (const auto& e : g.edges) {
    edges.push_back({{"src", e.src},
                     {"dst", e.dst},
                     {"label", e.label},
                     {"origin", std::string(to_string(e.origin))}});
  }
  json j{{"doc_id", g.doc_id}, {"root", g.root}, {"nodes", nodes}, {"edges", edges}};
  return j.dump();
}

S3Graph parse_s3(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("invalid S3 record: ") + e.what(), e.byte);
  }
  S3Graph g;
  try {
    g.doc_id = j.at("doc_id").get<std::string>();
    g.root = j.at("root").get<std::size_t>();
    std::size_t idx = 0;
    for (const auto& jn : j.at("nodes")) {
      std::string where = "nodes[" + std::to_string(idx++) + "]";
      S3Node n;
      n.id = jn.at("id").get<std::size_t>();
      n.type = parse_node_type(jn.at("ntype").get<std::string>(), where);
      n.label = jn.at("label").get<std::string>();
      if (jn.contains("edu")) n.edu = jn["edu"].get<std::size_t>();
      if (jn.contains("token")) n.token = jn["token"].get<std::size_t>();
      if (jn.contains("span")) {
        n.span = std::make_pair(jn["span"].at(0).get<std::size_t>(),
                                jn["span"].at(1).get<std::size_t>());
      }
      n.rest_word = jn.value("rest", false);
      n.amr_var = jn.value("var", std::string{});
      if (!g.nodes.empty() && g.nodes.back().id >= n.id) {
        throw ValidationError(where + ": node ids must be strictly increasing");
      }
      g.nodes.push_back(std::move(n));
    }
    idx = 0;
    for (const auto& je : j.at("edges")) {
      std::string where = "edges[" + std::to_string(idx++) + "]";
      S3Edge e;
      e.src = je.at("src").get<std::size_t>();
      e.dst = je.at("dst").get<std::size_t>();
      e.label = je.at("label").get<std::string>();
      e.origin = parse_origin(je.at("origin").get<std::string>(), where);
      if (!g.position(e.src) || !g.position(e.dst)) {
        throw ValidationError(where + ": references an unknown node");
      }
      g.edges.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed S3 record: ") + e.what());
  }
  if (!g.position(g.root)) throw ValidationError("S3 record root is not a node");
  return g;
}

std::vector<S3Graph> read_s3_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read graph file: " + path);
  std::vector<S3Graph> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(parse_s3(line));
    } catch (const ParseError& e) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": " + e.what(), e.offset());
    } catch (const ValidationError& e) {
      throw ValidationError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void write_s3_file(const std::string& path, const std::vector<S3Graph>& graphs) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write graph file: " + path);
  for (const auto& g : graphs) out << serialize_s3(g) << "\n";
}

}  // namespace s3
