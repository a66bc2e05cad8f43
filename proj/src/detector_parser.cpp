// Copyright 2026 The simtrace Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <map>
#include <sstream>

#include "simtrace/detector.hpp"

namespace simtrace {

std::string_view to_string(DType type) {
  switch (type) {
    case DType::Bool: return "bool";
    case DType::Num: return "number";
    case DType::Str: return "string";
    case DType::Dict: return "dict";
  }
  return "?";
}

DetectorError::DetectorError(int line, int column, const std::string& message)
    : Error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + message),
      line_(line),
      column_(column) {}

namespace {

std::string join(const std::vector<std::string>& items, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? sep : "") + items[i];
  return out;
}

}  // namespace

DetectorSyntaxError::DetectorSyntaxError(int line, int column, std::vector<std::string> expected, std::string found)
    : DetectorError(line, column, "expected " + join(expected, " or ") + ", found " + found),
      expected_(std::move(expected)),
      found_(std::move(found)) {}

UnknownPrimitiveError::UnknownPrimitiveError(int line, int column, const std::string& name)
    : DetectorError(line, column, "unknown primitive '" + name + "'"), name_(name) {}

namespace {

struct Signature {
  std::vector<DType> args;
  std::size_t optional = 0;  // trailing optional arguments
  DType result;
};

const std::map<std::string, Signature>& primitives() {
  using enum DType;
  static const std::map<std::string, Signature> table{
      {"contact", {{Num, Num}, 0, Bool}},
      {"speed", {{Num}, 0, Num}},
      {"pos_x", {{Num}, 0, Num}},
      {"pos_y", {{Num}, 0, Num}},
      {"vel_x", {{Num}, 0, Num}},
      {"vel_y", {{Num}, 0, Num}},
      {"angle", {{Num}, 0, Num}},
      {"distance", {{Num, Num}, 0, Num}},
      {"grid_cell", {{Num, Num}, 0, Num}},
      {"is_static", {{Num}, 0, Bool}},
      {"event_active", {{Str, Dict}, 1, Bool}},
      {"frame_time", {{}, 0, Num}},
      {"delta", {{Num}, 0, Num}},
      {"sign_flip", {{Num}, 0, Bool}},
      {"rising_edge", {{Bool}, 0, Bool}},
      {"sustained", {{Bool, Num}, 0, Bool}},
      {"within_after", {{Bool, Bool, Num}, 0, Bool}},
      {"count_since", {{Bool, Num}, 0, Num}},
      {"variance", {{Num, Num}, 0, Num}},
      {"abs", {{Num}, 0, Num}},
      {"min", {{Num, Num}, 0, Num}},
      {"max", {{Num, Num}, 0, Num}},
  };
  return table;
}

const std::set<std::string> kParamTypes{"int", "float", "bool", "str", "list"};

enum class Tok { Ident, Number, String, Punct, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  double number = 0.0;
  int line = 1;
  int column = 1;

  std::string describe() const {
    switch (kind) {
      case Tok::End: return "end of input";
      case Tok::String: return "string \"" + text + "\"";
      default: return "'" + text + "'";
    }
  }
};

std::vector<Token> lex(std::string_view src) {
  std::vector<Token> out;
  int line = 1;
  int col = 1;
  std::size_t i = 0;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n && i < src.size(); ++k, ++i) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };
  while (i < src.size()) {
    const char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    if (c == '#') {
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }
    Token t;
    t.line = line;
    t.column = col;
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_')) ++j;
      t.kind = Tok::Ident;
      t.text = std::string(src.substr(i, j - i));
      advance(j - i);
    } else if (std::isdigit(static_cast<unsigned char>(c)) ||
               (c == '.' && i + 1 < src.size() && std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
      std::size_t j = i;
      while (j < src.size() && (std::isdigit(static_cast<unsigned char>(src[j])) || src[j] == '.')) ++j;
      if (j < src.size() && (src[j] == 'e' || src[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < src.size() && (src[k] == '+' || src[k] == '-')) ++k;
        if (k < src.size() && std::isdigit(static_cast<unsigned char>(src[k]))) {
          j = k;
          while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
        }
      }
      t.kind = Tok::Number;
      t.text = std::string(src.substr(i, j - i));
      const auto res = std::from_chars(t.text.data(), t.text.data() + t.text.size(), t.number);
      if (res.ec != std::errc() || res.ptr != t.text.data() + t.text.size())
        throw DetectorSyntaxError(line, col, {"number"}, "'" + t.text + "'");
      advance(j - i);
    } else if (c == '"' || c == '\'') {
      const char quote = c;
      std::size_t j = i + 1;
      std::string value;
      while (j < src.size() && src[j] != quote) {
        if (src[j] == '\\' && j + 1 < src.size()) ++j;
        if (src[j] == '\n') break;
        value += src[j++];
      }
      if (j >= src.size() || src[j] != quote) throw DetectorSyntaxError(line, col, {"closing quote"}, "end of line");
      t.kind = Tok::String;
      t.text = value;
      advance(j + 1 - i);
    } else {
      static const char* two[] = {"<=", ">=", "==", "!="};
      t.kind = Tok::Punct;
      bool matched = false;
      for (const char* op : two)
        if (src.substr(i, 2) == op) {
          t.text = op;
          matched = true;
        }
      if (!matched) {
        if (std::string_view("(){},:<>+-*/").find(c) == std::string_view::npos)
          throw DetectorSyntaxError(line, col, {"token"}, std::string("'") + c + "'");
        t.text = std::string(1, c);
      }
      advance(t.text.size());
    }
    out.push_back(std::move(t));
  }
  Token end;
  end.line = line;
  end.column = col;
  out.push_back(end);
  return out;
}

const std::set<std::string> kReserved{"DETECT", "PARAMS", "WHERE", "EMIT", "and", "or", "not", "true", "false"};

class Parser {
 public:
  explicit Parser(std::string_view src) : toks_(lex(src)) {}

  DetectorProgram program() {
    DetectorProgram p;
    expect_word("DETECT");
    p.name = ident("detector name");
    if (accept_word("PARAMS")) {
      expect_punct("{");
      if (!peek_punct("}")) {
        do {
          const Token& at = cur();
          ParamDecl d;
          d.name = ident("parameter name");
          expect_punct(":");
          const Token& ty = cur();
          d.type = ident("parameter type");
          if (!kParamTypes.contains(d.type))
            throw DetectorSyntaxError(ty.line, ty.column, {"int", "float", "bool", "str", "list"}, ty.describe());
          for (const ParamDecl& prev : p.params)
            if (prev.name == d.name) throw DetectorError(at.line, at.column, "duplicate parameter '" + d.name + "'");
          p.params.push_back(d);
        } while (accept_punct(","));
      }
      expect_punct("}");
    }
    expect_word("WHERE");
    p.where = expr();
    if (accept_word("EMIT")) {
      expect_punct("{");
      if (!peek_punct("}")) {
        do {
          const Token& at = cur();
          std::string key = ident("parameter name");
          expect_punct(":");
          DNode value = expr();
          const bool declared =
              std::any_of(p.params.begin(), p.params.end(), [&](const ParamDecl& d) { return d.name == key; });
          if (!declared)
            throw UndeclaredParameterError(at.line, at.column, "EMIT key '" + key + "' is not declared in PARAMS");
          for (const auto& [k, v] : p.emit)
            if (k == key) throw DetectorError(at.line, at.column, "duplicate EMIT key '" + key + "'");
          p.emit.emplace_back(std::move(key), std::move(value));
        } while (accept_punct(","));
      }
      expect_punct("}");
    }
    if (cur().kind != Tok::End) throw DetectorSyntaxError(cur().line, cur().column, {"EMIT", "end of input"}, cur().describe());
    return p;
  }

 private:
  const Token& cur() const { return toks_[pos_]; }
  const Token& next() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }

  bool peek_punct(const char* p) const { return cur().kind == Tok::Punct && cur().text == p; }
  bool accept_punct(const char* p) {
    if (!peek_punct(p)) return false;
    next();
    return true;
  }
  void expect_punct(const char* p) {
    if (!accept_punct(p)) throw DetectorSyntaxError(cur().line, cur().column, {std::string("'") + p + "'"}, cur().describe());
  }
  bool peek_word(const char* w) const { return cur().kind == Tok::Ident && cur().text == w; }
  bool accept_word(const char* w) {
    if (!peek_word(w)) return false;
    next();
    return true;
  }
  void expect_word(const char* w) {
    if (!accept_word(w)) throw DetectorSyntaxError(cur().line, cur().column, {w}, cur().describe());
  }
  std::string ident(const char* what) {
    if (cur().kind != Tok::Ident || kReserved.contains(cur().text))
      throw DetectorSyntaxError(cur().line, cur().column, {what}, cur().describe());
    return next().text;
  }

  static DNode make(DNode::Kind kind, const Token& at) {
    DNode n;
    n.kind = kind;
    n.line = at.line;
    n.column = at.column;
    return n;
  }

  DNode expr() { return disjunction(); }

  DNode disjunction() {
    DNode lhs = conjunction();
    while (peek_word("or")) {
      const Token at = next();
      DNode n = make(DNode::Kind::Binary, at);
      n.text = "or";
      n.children = {std::move(lhs), conjunction()};
      lhs = std::move(n);
    }
    return lhs;
  }

  DNode conjunction() {
    DNode lhs = negation();
    while (peek_word("and")) {
      const Token at = next();
      DNode n = make(DNode::Kind::Binary, at);
      n.text = "and";
      n.children = {std::move(lhs), negation()};
      lhs = std::move(n);
    }
    return lhs;
  }

  DNode negation() {
    if (peek_word("not")) {
      const Token at = next();
      DNode n = make(DNode::Kind::Unary, at);
      n.text = "not";
      n.children = {negation()};
      return n;
    }
    return comparison();
  }

  DNode comparison() {
    DNode lhs = sum();
    for (const char* op : {"<=", ">=", "==", "!=", "<", ">"}) {
      if (peek_punct(op)) {
        const Token at = next();
        DNode n = make(DNode::Kind::Binary, at);
        n.text = op;
        n.children = {std::move(lhs), sum()};
        return n;
      }
    }
    return lhs;
  }

  DNode sum() {
    DNode lhs = product();
    while (peek_punct("+") || peek_punct("-")) {
      const Token at = next();
      DNode n = make(DNode::Kind::Binary, at);
      n.text = at.text;
      n.children = {std::move(lhs), product()};
      lhs = std::move(n);
    }
    return lhs;
  }

  DNode product() {
    DNode lhs = unary();
    while (peek_punct("*") || peek_punct("/")) {
      const Token at = next();
      DNode n = make(DNode::Kind::Binary, at);
      n.text = at.text;
      n.children = {std::move(lhs), unary()};
      lhs = std::move(n);
    }
    return lhs;
  }

  DNode unary() {
    if (peek_punct("-")) {
      const Token at = next();
      DNode inner = unary();
      if (inner.kind == DNode::Kind::Num) {
        inner.number = -inner.number;
        inner.line = at.line;
        inner.column = at.column;
        return inner;
      }
      DNode n = make(DNode::Kind::Unary, at);
      n.text = "-";
      n.children = {std::move(inner)};
      return n;
    }
    return atom();
  }

  DNode dict() {
    DNode n = make(DNode::Kind::Dict, cur());
    expect_punct("{");
    if (!peek_punct("}")) {
      do {
        std::string key;
        if (cur().kind == Tok::String) {
          key = next().text;
        } else {
          key = ident("key");
        }
        expect_punct(":");
        n.keys.push_back(std::move(key));
        n.children.push_back(expr());
      } while (accept_punct(","));
    }
    expect_punct("}");
    return n;
  }

  DNode atom() {
    const Token& at = cur();
    switch (at.kind) {
      case Tok::Number: {
        DNode n = make(DNode::Kind::Num, at);
        n.number = next().number;
        return n;
      }
      case Tok::String: {
        DNode n = make(DNode::Kind::Str, at);
        n.text = next().text;
        return n;
      }
      case Tok::Punct:
        if (accept_punct("(")) {
          DNode inner = expr();
          expect_punct(")");
          return inner;
        }
        if (peek_punct("{")) return dict();
        break;
      case Tok::Ident: {
        if (at.text == "true" || at.text == "false") {
          DNode n = make(DNode::Kind::Bool, at);
          n.boolean = next().text == "true";
          return n;
        }
        if (kReserved.contains(at.text)) break;
        const Token name = next();
        if (!accept_punct("(")) {
          DNode n = make(DNode::Kind::Var, name);
          n.text = name.text;
          return n;
        }
        if (name.text == "exists_object" || name.text == "forall_object") return quantifier(name);
        DNode n = make(DNode::Kind::Call, name);
        n.text = name.text;
        if (!peek_punct(")")) {
          do n.children.push_back(expr());
          while (accept_punct(","));
        }
        expect_punct(")");
        return n;
      }
      case Tok::End: break;
    }
    throw DetectorSyntaxError(at.line, at.column, {"expression"}, at.describe());
  }

  DNode quantifier(const Token& name) {
    DNode n = make(DNode::Kind::Quant, name);
    n.text = name.text;
    n.binder = ident("variable name");
    expect_punct(",");
    const Token& f = cur();
    n.filter = ident("object filter");
    const auto& filters = detector_filters();
    if (std::find(filters.begin(), filters.end(), n.filter) == filters.end())
      throw DetectorSyntaxError(f.line, f.column, filters, f.describe());
    expect_punct(",");
    n.children.push_back(expr());
    expect_punct(")");
    return n;
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

void check(DNode& n, std::vector<std::string>& scope, std::set<std::string>& deps) {
  using K = DNode::Kind;
  auto require = [&](const DNode& child, DType want, const std::string& where) {
    if (child.type != want)
      throw ArityError(child.line, child.column,
                       where + " expects " + std::string(to_string(want)) + ", got " + std::string(to_string(child.type)));
  };
  switch (n.kind) {
    case K::Bool: n.type = DType::Bool; return;
    case K::Num: n.type = DType::Num; return;
    case K::Str: n.type = DType::Str; return;
    case K::Var:
      if (std::find(scope.begin(), scope.end(), n.text) == scope.end())
        throw UndeclaredParameterError(n.line, n.column, "reference to unbound variable '" + n.text + "'");
      n.type = DType::Num;
      return;
    case K::Dict:
      for (DNode& c : n.children) check(c, scope, deps);
      n.type = DType::Dict;
      return;
    case K::Unary:
      check(n.children[0], scope, deps);
      if (n.text == "not") {
        require(n.children[0], DType::Bool, "'not'");
        n.type = DType::Bool;
      } else {
        require(n.children[0], DType::Num, "unary '-'");
        n.type = DType::Num;
      }
      return;
    case K::Binary: {
      check(n.children[0], scope, deps);
      check(n.children[1], scope, deps);
      const std::string& op = n.text;
      if (op == "and" || op == "or") {
        require(n.children[0], DType::Bool, "'" + op + "'");
        require(n.children[1], DType::Bool, "'" + op + "'");
        n.type = DType::Bool;
      } else if (op == "==" || op == "!=") {
        if (n.children[0].type != n.children[1].type || n.children[0].type == DType::Dict)
          throw ArityError(n.line, n.column, "'" + op + "' needs operands of one comparable type");
        n.type = DType::Bool;
      } else if (op == "<" || op == "<=" || op == ">" || op == ">=") {
        require(n.children[0], DType::Num, "'" + op + "'");
        require(n.children[1], DType::Num, "'" + op + "'");
        n.type = DType::Bool;
      } else {
        require(n.children[0], DType::Num, "'" + op + "'");
        require(n.children[1], DType::Num, "'" + op + "'");
        n.type = DType::Num;
      }
      return;
    }
    case K::Call: {
      auto it = primitives().find(n.text);
      if (it == primitives().end()) throw UnknownPrimitiveError(n.line, n.column, n.text);
      const Signature& sig = it->second;
      const std::size_t max_args = sig.args.size();
      const std::size_t min_args = max_args - sig.optional;
      if (n.children.size() < min_args || n.children.size() > max_args)
        throw ArityError(n.line, n.column,
                         n.text + " takes " +
                             (min_args == max_args ? std::to_string(max_args)
                                                   : std::to_string(min_args) + " to " + std::to_string(max_args)) +
                             " argument(s), got " + std::to_string(n.children.size()));
      for (std::size_t i = 0; i < n.children.size(); ++i) {
        check(n.children[i], scope, deps);
        require(n.children[i], sig.args[i], "argument " + std::to_string(i + 1) + " of " + n.text);
      }
      if (n.text == "event_active") {
        if (n.children[0].kind != K::Str)
          throw ArityError(n.children[0].line, n.children[0].column, "event_active needs a string literal uid");
        deps.insert(n.children[0].text);
      }
      n.type = sig.result;
      return;
    }
    case K::Quant:
      scope.push_back(n.binder);
      check(n.children[0], scope, deps);
      scope.pop_back();
      require(n.children[0], DType::Bool, n.text + " body");
      n.type = DType::Bool;
      return;
  }
}

int count_nodes(const DNode& n) {
  int total = 1;
  for (const DNode& c : n.children) total += count_nodes(c);
  return total;
}

std::string format_number(double v) {
  if (v == std::floor(v) && std::abs(v) < 1e15) {
    std::ostringstream os;
    os << static_cast<long long>(v);
    return os.str();
  }
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

int precedence(const DNode& n) {
  if (n.kind == DNode::Kind::Binary) {
    if (n.text == "or") return 1;
    if (n.text == "and") return 2;
    if (n.text == "+" || n.text == "-") return 5;
    if (n.text == "*" || n.text == "/") return 6;
    return 4;  // comparisons
  }
  if (n.kind == DNode::Kind::Unary) return n.text == "not" ? 3 : 7;
  if (n.kind == DNode::Kind::Num && n.number < 0) return 7;
  return 8;
}

std::string print(const DNode& n) {
  using K = DNode::Kind;
  auto wrap = [](const DNode& c, int min_prec) {
    const std::string s = print(c);
    return precedence(c) < min_prec ? "(" + s + ")" : s;
  };
  switch (n.kind) {
    case K::Bool: return n.boolean ? "true" : "false";
    case K::Num: return format_number(n.number);
    case K::Str: return quote(n.text);
    case K::Var: return n.text;
    case K::Dict: {
      std::string out = "{";
      for (std::size_t i = 0; i < n.children.size(); ++i)
        out += (i ? ", " : "") + n.keys[i] + ": " + print(n.children[i]);
      return out + "}";
    }
    case K::Unary:
      if (n.text == "not") return "not " + wrap(n.children[0], 3);
      return "-" + wrap(n.children[0], 8);
    case K::Binary: {
      const int p = precedence(n);
      // Comparisons do not chain; arithmetic and logic are left-associative.
      const int left_min = p == 4 ? 5 : p;
      const int right_min = p == 4 ? 5 : p + 1;
      return wrap(n.children[0], left_min) + " " + n.text + " " + wrap(n.children[1], right_min);
    }
    case K::Call: {
      std::string out = n.text + "(";
      for (std::size_t i = 0; i < n.children.size(); ++i) out += (i ? ", " : "") + print(n.children[i]);
      return out + ")";
    }
    case K::Quant: return n.text + "(" + n.binder + ", " + n.filter + ", " + print(n.children[0]) + ")";
  }
  return "";
}

}  // namespace

const std::vector<std::string>& detector_filters() {
  static const std::vector<std::string> filters{"any",   "body",  "dynamic", "static", "wall", "floor",
                                                "red",   "green", "blue",    "black",  "circle", "bar",
                                                "jar",   "standingsticks"};
  return filters;
}

std::vector<std::string> detector_primitives() {
  std::vector<std::string> out;
  for (const auto& [name, sig] : primitives()) out.push_back(name);
  out.push_back("exists_object");
  out.push_back("forall_object");
  std::sort(out.begin(), out.end());
  return out;
}

DetectorProgram parse_detector(std::string_view source) {
  Parser parser(source);
  DetectorProgram p = parser.program();
  p.source = std::string(source);
  std::vector<std::string> scope;
  std::set<std::string> deps;
  check(p.where, scope, deps);
  if (p.where.type != DType::Bool)
    throw ArityError(p.where.line, p.where.column, "WHERE expects bool, got " + std::string(to_string(p.where.type)));
  // EMIT sees the variables bound by the leading quantifier chain.
  const DNode* chain = &p.where;
  while (chain->kind == DNode::Kind::Quant && chain->text == "exists_object") {
    scope.push_back(chain->binder);
    chain = &chain->children[0];
  }
  for (auto& [key, value] : p.emit) check(value, scope, deps);
  p.depends_on.assign(deps.begin(), deps.end());
  p.node_count = count_nodes(p.where);
  for (const auto& [key, value] : p.emit) p.node_count += count_nodes(value);
  return p;
}

std::string print_expr(const DNode& node) { return print(node); }

std::string print_detector(const DetectorProgram& p) {
  std::string out = "DETECT " + p.name;
  if (!p.params.empty()) {
    out += " PARAMS {";
    for (std::size_t i = 0; i < p.params.size(); ++i) out += (i ? ", " : "") + p.params[i].name + ": " + p.params[i].type;
    out += "}";
  }
  out += "\nWHERE " + print(p.where);
  if (!p.emit.empty()) {
    out += "\nEMIT {";
    for (std::size_t i = 0; i < p.emit.size(); ++i) out += (i ? ", " : "") + p.emit[i].first + ": " + print(p.emit[i].second);
    out += "}";
  }
  return out;
}

int program_length(const DetectorProgram& program) { return std::max(1, program.node_count); }

std::string_view detector_grammar() {
  return R"EBNF(program    = "DETECT" name [ "PARAMS" "{" decl { "," decl } "}" ] "WHERE" expr
             [ "EMIT" "{" name ":" expr { "," name ":" expr } "}" ] ;
decl       = name ":" ( "int" | "float" | "bool" | "str" | "list" ) ;
expr       = conj { "or" conj } ;
conj       = neg { "and" neg } ;
neg        = "not" neg | cmp ;
cmp        = sum [ ( "<" | "<=" | ">" | ">=" | "==" | "!=" ) sum ] ;
sum        = prod { ( "+" | "-" ) prod } ;
prod       = unary { ( "*" | "/" ) unary } ;
unary      = "-" unary | atom ;
atom       = number | string | "true" | "false" | variable | "(" expr ")"
           | primitive "(" [ expr { "," expr } ] ")"
           | ( "exists_object" | "forall_object" ) "(" variable "," filter "," expr ")"
           | "{" [ key ":" expr { "," key ":" expr } ] "}" ;
filter     = "any" | "body" | "dynamic" | "static" | "wall" | "floor"
           | "red" | "green" | "blue" | "black" | "circle" | "bar" | "jar" | "standingsticks" ;
primitive  = "contact" | "speed" | "pos_x" | "pos_y" | "vel_x" | "vel_y" | "angle" | "distance"
           | "grid_cell" | "is_static" | "event_active" | "frame_time" | "delta" | "sign_flip"
           | "rising_edge" | "sustained" | "within_after" | "count_since" | "variance"
           | "abs" | "min" | "max" ;
comment    = "#" { any character } end-of-line ;
)EBNF";
}

}  // namespace simtrace
