#include "s3/amr.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "s3/error.hpp"

namespace s3 {

const AmrNode* AmrGraph::find(std::string_view variable) const {
  for (const auto& n : nodes) {
    if (n.variable == variable) return &n;
  }
  return nullptr;
}

namespace {

bool is_inverted_role(const std::string& role) {
  static const std::unordered_set<std::string> kNotInverted = {
      ":consist-of", ":prep-out-of", ":prep-on-behalf-of"};
  return role.size() > 3 && role.ends_with("-of") && !kNotInverted.count(role);
}

/// A leaf target that is either a reference to a variable or a constant.
struct Atom {
  std::string text;
  bool quoted = false;
  std::optional<std::size_t> alignment;
  std::size_t offset = 0;
};

/// One entry of the textual node order: a node definition or an atom.
struct OrderEntry {
  bool is_atom = false;
  std::size_t index = 0;  // into defs or atoms
};

struct PendingEdge {
  std::string source;
  std::string role;
  bool target_is_atom = false;
  std::string target_var;
  std::size_t atom = 0;
};

class PenmanParser {
 public:
  explicit PenmanParser(std::string_view text) : text_(text) {}

  AmrGraph parse(std::size_t edu_id) {
    skip_ws();
    if (at_end()) throw ParseError("empty AMR expression", pos_);
    if (peek() != '(') throw ParseError("expected '('", pos_);
    std::string root = parse_node();
    skip_ws();
    if (!at_end()) throw ParseError("trailing content after AMR expression", pos_);
    return resolve(root, edu_id);
  }

 private:
  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return text_[pos_]; }
  void skip_ws() {
    while (!at_end() && std::isspace(static_cast<unsigned char>(peek()))) ++pos_;
  }
  static bool is_delim(char c) {
    return std::isspace(static_cast<unsigned char>(c)) || c == '(' || c == ')';
  }

  std::string read_symbol() {
    std::size_t start = pos_;
    while (!at_end() && !is_delim(peek())) ++pos_;
    return std::string(text_.substr(start, pos_ - start));
  }

  // Splits "boy~1" / "boy~e.1" into text and alignment.
  static std::pair<std::string, std::optional<std::size_t>> split_alignment(
      const std::string& raw, std::size_t offset) {
    auto tilde = raw.rfind('~');
    if (tilde == std::string::npos || tilde == 0) return {raw, std::nullopt};
    std::string suffix = raw.substr(tilde + 1);
    if (suffix.rfind("e.", 0) == 0) suffix = suffix.substr(2);
    if (suffix.empty() ||
        !std::all_of(suffix.begin(), suffix.end(),
                     [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
      throw ParseError("malformed alignment '" + raw + "'", offset);
    }
    return {raw.substr(0, tilde), std::stoull(suffix)};
  }

  Atom read_atom() {
    Atom atom;
    atom.offset = pos_;
    if (peek() == '"') {
      std::size_t start = pos_++;
      while (true) {
        if (at_end()) throw ParseError("unterminated string literal", pos_);
        char c = text_[pos_++];
        if (c == '\\') {
          if (at_end()) throw ParseError("unterminated string literal", pos_);
          ++pos_;
        } else if (c == '"') {
          break;
        }
      }
      atom.text = std::string(text_.substr(start, pos_ - start));
      atom.quoted = true;
      std::string rest = read_symbol();
      if (!rest.empty()) {
        auto [extra, align] = split_alignment("x" + rest, atom.offset);
        if (extra != "x") throw ParseError("unexpected text after string literal", pos_);
        atom.alignment = align;
      }
    } else {
      std::string raw = read_symbol();
      if (raw.empty()) throw ParseError("expected a concept or constant", pos_);
      auto [t, align] = split_alignment(raw, atom.offset);
      atom.text = t;
      atom.alignment = align;
    }
    return atom;
  }

  std::string parse_node() {
    ++pos_;  // '('
    skip_ws();
    if (at_end()) throw ParseError("unexpected end of input: expected variable", pos_);
    std::size_t var_offset = pos_;
    std::string var = read_symbol();
    if (var.empty()) throw ParseError("expected a variable", pos_);
    skip_ws();
    if (at_end()) throw ParseError("unexpected end of input: expected '/'", pos_);
    if (peek() != '/') throw ParseError("expected '/' after variable " + var, pos_);
    ++pos_;
    skip_ws();
    if (at_end()) throw ParseError("unexpected end of input: expected concept", pos_);
    if (peek() == '(' || peek() == ')') throw ParseError("expected concept", pos_);
    Atom concept_atom = read_atom();
    if (defined_.count(var)) {
      throw ParseError("duplicate concept definition for variable " + var, var_offset);
    }
    defined_.insert(var);
    AmrNode node;
    node.variable = var;
    node.concept_label = concept_atom.text;
    node.token_index = concept_atom.alignment;
    node.kind = node.token_index ? AmrNodeKind::WordAligned : AmrNodeKind::Dummy;
    order_.push_back({false, defs_.size()});
    defs_.push_back(std::move(node));

    while (true) {
      skip_ws();
      if (at_end()) throw ParseError("unexpected end of input: unbalanced parentheses", pos_);
      char c = peek();
      if (c == ')') {
        ++pos_;
        return var;
      }
      if (c != ':') throw ParseError("expected a role or ')'", pos_);
      std::size_t role_offset = pos_;
      std::string role = read_symbol();
      if (role.size() < 2) throw ParseError("empty role", role_offset);
      skip_ws();
      if (at_end() || peek() == ')') {
        throw ParseError("role " + role + " has no target", role_offset);
      }
      PendingEdge edge;
      edge.source = var;
      edge.role = role;
      if (peek() == '(') {
        edge.target_var = parse_node();
      } else if (peek() == ':') {
        throw ParseError("role " + role + " has no target", role_offset);
      } else {
        edge.target_is_atom = true;
        edge.atom = atoms_.size();
        order_.push_back({true, atoms_.size()});
        atoms_.push_back(read_atom());
      }
      pending_.push_back(std::move(edge));
    }
  }

  AmrGraph resolve(const std::string& root, std::size_t edu_id) {
    AmrGraph g;
    g.root = root;
    g.edu_id = edu_id;
    std::unordered_set<std::string> used_names = defined_;
    std::vector<std::string> atom_var(atoms_.size());
    std::size_t counter = 0;
    for (const auto& entry : order_) {
      if (!entry.is_atom) {
        g.nodes.push_back(defs_[entry.index]);
        continue;
      }
      const Atom& atom = atoms_[entry.index];
      if (!atom.quoted && defined_.count(atom.text)) {
        atom_var[entry.index] = atom.text;  // reentrancy
        continue;
      }
      std::string fresh;
      do {
        fresh = "lit" + std::to_string(++counter);
      } while (used_names.count(fresh));
      used_names.insert(fresh);
      atom_var[entry.index] = fresh;
      AmrNode node;
      node.variable = fresh;
      node.concept_label = atom.text;
      node.token_index = atom.alignment;
      node.kind = node.token_index ? AmrNodeKind::WordAligned : AmrNodeKind::Dummy;
      g.nodes.push_back(std::move(node));
    }
    for (const auto& p : pending_) {
      std::string target = p.target_is_atom ? atom_var[p.atom] : p.target_var;
      if (is_inverted_role(p.role)) {
        g.edges.push_back({target, p.source, p.role.substr(0, p.role.size() - 3)});
      } else {
        g.edges.push_back({p.source, target, p.role});
      }
    }
    return g;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::unordered_set<std::string> defined_;
  std::vector<AmrNode> defs_;
  std::vector<Atom> atoms_;
  std::vector<OrderEntry> order_;
  std::vector<PendingEdge> pending_;
};

void check_reachable(const AmrGraph& g) {
  std::unordered_map<std::string, std::vector<std::string>> adj;
  for (const auto& e : g.edges) {
    adj[e.source].push_back(e.target);
    adj[e.target].push_back(e.source);
  }
  std::unordered_set<std::string> seen{g.root};
  std::vector<std::string> stack{g.root};
  while (!stack.empty()) {
    auto v = stack.back();
    stack.pop_back();
    for (const auto& w : adj[v]) {
      if (seen.insert(w).second) stack.push_back(w);
    }
  }
  for (const auto& n : g.nodes) {
    if (!seen.count(n.variable)) {
      throw IntegrityError("AMR node " + n.variable + " is not reachable from root " + g.root);
    }
  }
}

// Walks the graph in canonical order; `on_define` fires once per node and
// `emit` receives the text pieces when non-null.
void canonical_walk(const AmrGraph& g, std::string* out,
                    std::vector<std::string>* order) {
  std::unordered_map<std::string, const AmrNode*> by_var;
  for (const auto& n : g.nodes) by_var[n.variable] = &n;
  if (!by_var.count(g.root)) throw IntegrityError("AMR root is not a node: " + g.root);
  for (const auto& e : g.edges) {
    if (!by_var.count(e.source) || !by_var.count(e.target)) {
      throw IntegrityError("AMR edge references an unknown variable");
    }
  }

  // Nodes reachable from the root along edge direction.
  std::unordered_set<std::string> directed{g.root};
  {
    std::vector<std::string> stack{g.root};
    while (!stack.empty()) {
      auto v = stack.back();
      stack.pop_back();
      for (const auto& e : g.edges) {
        if (e.source == v && directed.insert(e.target).second) stack.push_back(e.target);
      }
    }
  }

  std::vector<bool> used(g.edges.size(), false);
  std::unordered_set<std::string> defined;

  struct Candidate {
    std::string role;
    std::string other;
    std::size_t edge;
  };

  std::function<void(const std::string&)> visit = [&](const std::string& var) {
    defined.insert(var);
    if (order) order->push_back(var);
    const AmrNode& node = *by_var.at(var);
    if (out) {
      *out += "(" + var + " / " + node.concept_label;
      if (node.token_index) *out += "~" + std::to_string(*node.token_index);
    }
    std::vector<Candidate> cands;
    for (std::size_t i = 0; i < g.edges.size(); ++i) {
      const auto& e = g.edges[i];
      if (e.source == var) {
        cands.push_back({e.role, e.target, i});
      } else if (e.target == var && !directed.count(e.source)) {
        cands.push_back({e.role + "-of", e.source, i});
      }
    }
    std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
      if (a.role != b.role) return a.role < b.role;
      if (a.other != b.other) return a.other < b.other;
      return a.edge < b.edge;
    });
    for (const auto& c : cands) {
      if (used[c.edge]) continue;
      used[c.edge] = true;
      if (out) *out += " " + c.role + " ";
      if (defined.count(c.other)) {
        if (out) *out += c.other;
      } else {
        visit(c.other);
      }
    }
    if (out) *out += ")";
  };
  visit(g.root);

  for (const auto& n : g.nodes) {
    if (!defined.count(n.variable)) {
      throw IntegrityError("AMR node " + n.variable + " is not reachable from root " + g.root);
    }
  }
}

}  // namespace

AmrGraph parse_penman(std::string_view text, std::size_t edu_id) {
  AmrGraph g = PenmanParser(text).parse(edu_id);
  check_reachable(g);
  return g;
}

std::string serialize_penman(const AmrGraph& g) {
  std::string out;
  canonical_walk(g, &out, nullptr);
  return out;
}

std::vector<std::string> serialization_order(const AmrGraph& g) {
  std::vector<std::string> order;
  canonical_walk(g, nullptr, &order);
  return order;
}

std::map<std::size_t, std::string> word_nodes(const AmrGraph& g) {
  std::map<std::size_t, std::string> out;
  for (const auto& n : g.nodes) {
    if (n.kind != AmrNodeKind::WordAligned) continue;
    auto [it, inserted] = out.emplace(*n.token_index, n.variable);
    if (!inserted) {
      throw ValidationError("alignment conflict in EDU " + std::to_string(g.edu_id) +
                            ": token " + std::to_string(*n.token_index) +
                            " aligned to both " + it->second + " and " + n.variable);
    }
  }
  return out;
}

bool isomorphic(const AmrGraph& a, const AmrGraph& b) {
  if (a.root != b.root || a.nodes.size() != b.nodes.size() ||
      a.edges.size() != b.edges.size()) {
    return false;
  }
  std::map<std::string, const AmrNode*> na, nb;
  for (const auto& n : a.nodes) na[n.variable] = &n;
  for (const auto& n : b.nodes) nb[n.variable] = &n;
  if (na.size() != nb.size()) return false;
  for (const auto& [var, node] : na) {
    auto it = nb.find(var);
    if (it == nb.end() || !(*node == *it->second)) return false;
  }
  std::multiset<AmrEdge> ea(a.edges.begin(), a.edges.end());
  std::multiset<AmrEdge> eb(b.edges.begin(), b.edges.end());
  return ea == eb;
}

std::vector<AmrGraph> parse_amr_lines(std::string_view text,
                                      const std::string& source_name) {
  std::vector<AmrGraph> out;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    ++line_no;
    start = end + 1;
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string_view::npos || line[first] == '#') {
      if (end == text.size()) break;
      continue;
    }
    try {
      out.push_back(parse_penman(line, out.size()));
    } catch (const ParseError& e) {
      throw ParseError(source_name + ":" + std::to_string(line_no) + ": " + e.what(),
                       e.offset());
    } catch (const Error& e) {
      throw ValidationError(source_name + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (end == text.size()) break;
  }
  return out;
}

std::vector<AmrGraph> read_amr_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read AMR file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_amr_lines(ss.str(), path);
}

}  // namespace s3
