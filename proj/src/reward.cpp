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

#include "simtrace/reward.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>

#include "simtrace/trace_io.hpp"

namespace simtrace {

namespace {

enum class Arg { Uid, Expr, Params, Number, ObjRef, Str };

struct ParamSpec {
  const char* name;
  Arg kind;
  bool required;
};

struct Signature {
  const char* name;
  std::vector<ParamSpec> params;
  bool variadic = false;  // AND/OR: any number of Expr
  bool boolean = true;
};

const std::vector<Signature>& signatures() {
  static const std::vector<Signature> sigs = {
      {"EVENT", {{"uid", Arg::Uid, true}, {"params", Arg::Params, false}}},
      {"AND", {{"expr", Arg::Expr, true}}, true},
      {"OR", {{"expr", Arg::Expr, true}}, true},
      {"NOT", {{"expr", Arg::Expr, true}}},
      {"AFTER",
       {{"uid_a", Arg::Uid, true},
        {"uid_b", Arg::Uid, true},
        {"min_delta", Arg::Number, false},
        {"max_delta", Arg::Number, false},
        {"first_params", Arg::Params, false},
        {"second_params", Arg::Params, false}}},
      {"WITHIN",
       {{"uid_a", Arg::Uid, true},
        {"uid_b", Arg::Uid, true},
        {"window", Arg::Number, true},
        {"event_params", Arg::Params, false},
        {"reference_params", Arg::Params, false}}},
      {"COUNT", {{"uid", Arg::Uid, true}, {"count", Arg::Number, true}, {"params", Arg::Params, false}}},
      {"GT", {{"uid", Arg::Uid, true}, {"count", Arg::Number, true}, {"params", Arg::Params, false}}},
      {"LT", {{"uid", Arg::Uid, true}, {"count", Arg::Number, true}, {"params", Arg::Params, false}}},
      {"NEARBY_AT",
       {{"obj_id", Arg::ObjRef, true},
        {"x", Arg::Number, true},
        {"y", Arg::Number, true},
        {"t", Arg::Number, true},
        {"threshold_strength", Arg::Number, false}}},
      {"OBJECT_ID", {{"color", Arg::Str, true}, {"shape", Arg::Str, true}}, false, false},
  };
  return sigs;
}

const Signature* find_signature(std::string_view name) {
  for (const Signature& s : signatures())
    if (s.name == name) return &s;
  return nullptr;
}

std::string signature_text(const Signature& s) {
  std::string out = std::string(s.name) + "(";
  if (s.variadic) return out + "expr1, expr2, ...)";
  for (std::size_t i = 0; i < s.params.size(); ++i) {
    if (i) out += ", ";
    out += s.params[i].name;
    if (!s.params[i].required) out += std::string(s.name) == "NEARBY_AT" ? "=0.1" : "=None";
  }
  return out + ")";
}

std::string predicate_list() {
  std::string out;
  for (const Signature& s : signatures()) out += (out.empty() ? "" : ", ") + std::string(s.name);
  return out;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string strip_comments(std::string_view src) {
  std::string out;
  char quote = 0;
  for (std::size_t i = 0; i < src.size(); ++i) {
    const char c = src[i];
    if (quote) {
      out += c;
      if (c == '\\' && i + 1 < src.size()) out += src[++i];
      else if (c == quote) quote = 0;
    } else if (c == '"' || c == '\'') {
      quote = c;
      out += c;
    } else if (c == '#') {
      while (i < src.size() && src[i] != '\n') ++i;
      if (i < src.size()) out += '\n';
    } else {
      out += c;
    }
  }
  return out;
}

enum class Tok { Ident, String, Number, Punct, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  double number = 0.0;
  int line = 1;
  int column = 1;
};

std::string describe(const Token& t) {
  switch (t.kind) {
    case Tok::End: return "end of input";
    case Tok::String: return "string \"" + t.text + "\"";
    case Tok::Number: return "number " + t.text;
    default: return "'" + t.text + "'";
  }
}

class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src) { lex(); }

  std::shared_ptr<RNode> program() {
    auto root = call_or_literal();
    if (root->kind != RKind::Call) fail(*root, "predicate call", "a literal value", "wrap the goal in a predicate such as AND(...)");
    if (!find_signature(root->name)->boolean)
      fail(*root, "boolean predicate", root->name, "OBJECT_ID returns an id; use it inside NEARBY_AT or params");
    if (peek().kind != Tok::End) fail(peek(), "end of input", "remove trailing text after the expression");
    return root;
  }

 private:
  std::string_view src_;
  std::vector<Token> toks_;
  std::size_t pos_ = 0;

  [[noreturn]] void fail(const Token& at, std::string expected, std::string hint) {
    throw RewardSyntaxError(at.line, at.column, std::move(expected), describe(at), std::move(hint));
  }
  [[noreturn]] void fail(const RNode& at, std::string expected, std::string found, std::string hint) {
    throw RewardSyntaxError(at.line, at.column, std::move(expected), std::move(found), std::move(hint));
  }

  void lex() {
    int line = 1, col = 1;
    std::size_t i = 0;
    auto advance = [&](std::size_t n) {
      for (std::size_t k = 0; k < n; ++k, ++i) {
        if (src_[i] == '\n') {
          ++line;
          col = 1;
        } else {
          ++col;
        }
      }
    };
    while (i < src_.size()) {
      const char c = src_[i];
      if (std::isspace(static_cast<unsigned char>(c))) {
        advance(1);
        continue;
      }
      Token t;
      t.line = line;
      t.column = col;
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        std::size_t j = i;
        while (j < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[j])) || src_[j] == '_')) ++j;
        t.kind = Tok::Ident;
        t.text = std::string(src_.substr(i, j - i));
        advance(j - i);
      } else if (c == '"' || c == '\'') {
        std::size_t j = i + 1;
        std::string text;
        while (j < src_.size() && src_[j] != c) {
          if (src_[j] == '\\' && j + 1 < src_.size()) ++j;
          text += src_[j++];
        }
        if (j >= src_.size()) {
          t.kind = Tok::End;
          throw RewardSyntaxError(line, col, "closing quote", "end of input", "terminate the string literal");
        }
        t.kind = Tok::String;
        t.text = text;
        advance(j + 1 - i);
      } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '.' ||
                 ((c == '-' || c == '+') && i + 1 < src_.size() &&
                  (std::isdigit(static_cast<unsigned char>(src_[i + 1])) || src_[i + 1] == '.'))) {
        const char* begin = src_.data() + i;
        char* end = nullptr;
        const std::string tmp(src_.substr(i, std::min<std::size_t>(64, src_.size() - i)));
        t.number = std::strtod(tmp.c_str(), &end);
        const auto n = static_cast<std::size_t>(end - tmp.c_str());
        if (n == 0) throw RewardSyntaxError(line, col, "number", std::string(1, c), "check the numeric literal");
        t.kind = Tok::Number;
        t.text = std::string(begin, n);
        advance(n);
      } else if (std::string_view("()[]{},:=").find(c) != std::string_view::npos) {
        t.kind = Tok::Punct;
        t.text = std::string(1, c);
        advance(1);
      } else {
        throw RewardSyntaxError(line, col, "expression", "'" + std::string(1, c) + "'",
                                "only predicate calls, strings, numbers, lists and dicts are allowed");
      }
      toks_.push_back(std::move(t));
    }
    Token end;
    end.line = line;
    end.column = col;
    toks_.push_back(end);
  }

  const Token& peek(std::size_t k = 0) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
  bool punct(char c, std::size_t k = 0) const { return peek(k).kind == Tok::Punct && peek(k).text[0] == c; }
  void expect(char c, const char* hint) {
    if (!punct(c)) fail(peek(), std::string("'") + c + "'", hint);
    ++pos_;
  }

  // Values: literals, lists, dicts, tuples (as lists), or calls.
  std::shared_ptr<RNode> call_or_literal() {
    const Token& t = peek();
    auto node = std::make_shared<RNode>();
    node->line = t.line;
    node->column = t.column;
    if (t.kind == Tok::Ident) {
      const std::string& w = t.text;
      if (w == "None" || w == "null") return ++pos_, node->value = nullptr, node;
      if (w == "True" || w == "true") return ++pos_, node->value = true, node;
      if (w == "False" || w == "false") return ++pos_, node->value = false, node;
      return call();
    }
    if (t.kind == Tok::String) return ++pos_, node->value = t.text, node;
    if (t.kind == Tok::Number) {
      ++pos_;
      const bool integral = t.text.find_first_of(".eE") == std::string::npos && std::fabs(t.number) < 9e15;
      node->value = integral ? Json(static_cast<std::int64_t>(t.number)) : Json(t.number);
      return node;
    }
    if (punct('[') || punct('(')) {
      const char close = punct('[') ? ']' : ')';
      ++pos_;
      node->value = Json::array();
      while (!punct(close)) {
        auto item = call_or_literal();
        embed(*node, "/" + std::to_string(node->value.size()), item);
        if (!punct(close)) expect(',', "separate list items with commas");
      }
      ++pos_;
      return node;
    }
    if (punct('{')) {
      ++pos_;
      node->value = Json::object();
      while (!punct('}')) {
        const Token& key = peek();
        if (key.kind != Tok::String && key.kind != Tok::Ident) fail(key, "dict key", "keys are quoted strings");
        ++pos_;
        expect(':', "write dict entries as \"key\": value");
        auto item = call_or_literal();
        embed(*node, "/" + key.text, item);
        if (!punct('}')) expect(',', "separate dict entries with commas");
      }
      ++pos_;
      return node;
    }
    fail(t, "expression", "expected a predicate call or a literal value");
  }

  static void embed(RNode& container, const std::string& pointer, const std::shared_ptr<RNode>& item) {
    Json::json_pointer ptr(pointer);
    if (item->kind == RKind::Call) {
      container.value[ptr] = nullptr;
      container.embedded.emplace_back(pointer, item);
    } else {
      container.value[ptr] = item->value;
      for (const auto& [p, call] : item->embedded) container.embedded.emplace_back(pointer + p, call);
    }
  }

  std::shared_ptr<RNode> call() {
    const Token name = peek();
    ++pos_;
    const std::string upper = [&] {
      std::string u = name.text;
      for (char& c : u) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
      return u;
    }();
    const Signature* sig = find_signature(upper);
    if (!sig) fail(name, "predicate", "unknown predicate; valid predicates: " + predicate_list());
    auto node = std::make_shared<RNode>();
    node->kind = RKind::Call;
    node->name = upper;
    node->line = name.line;
    node->column = name.column;
    expect('(', ("call as " + signature_text(*sig)).c_str());

    std::vector<std::shared_ptr<RNode>> positional;
    std::map<std::string, std::shared_ptr<RNode>> keyword;
    std::vector<Token> keyword_tokens;
    while (!punct(')')) {
      if (peek().kind == Tok::Ident && punct('=', 1)) {
        const Token key = peek();
        pos_ += 2;
        if (sig->variadic) fail(key, "expression", std::string(sig->name) + " takes only positional expressions");
        bool known = false;
        for (const ParamSpec& p : sig->params) known = known || key.text == p.name;
        if (!known) fail(key, "keyword of " + signature_text(*sig), "unknown keyword '" + key.text + "'");
        if (keyword.contains(key.text)) fail(key, "distinct keywords", "keyword '" + key.text + "' given twice");
        keyword[key.text] = call_or_literal();
        keyword_tokens.push_back(key);
      } else {
        if (!keyword.empty()) fail(peek(), "keyword argument", "positional arguments must come before keywords");
        positional.push_back(call_or_literal());
      }
      if (!punct(')')) expect(',', "separate arguments with commas");
    }
    const Token close = peek();
    ++pos_;

    if (sig->variadic) {
      if (positional.empty()) fail(close, "at least one expression", "call as " + signature_text(*sig));
      for (auto& a : positional) check_kind(*sig, sig->params[0], *a);
      node->args = std::move(positional);
      return node;
    }
    if (positional.size() > sig->params.size())
      fail(*positional[sig->params.size()], "at most " + std::to_string(sig->params.size()) + " arguments",
           std::to_string(positional.size()) + " arguments", "call as " + signature_text(*sig));
    node->args.resize(sig->params.size());
    for (std::size_t i = 0; i < positional.size(); ++i) node->args[i] = positional[i];
    for (std::size_t i = 0; i < sig->params.size(); ++i) {
      auto it = keyword.find(sig->params[i].name);
      if (it != keyword.end()) {
        if (node->args[i]) fail(close, "one value per parameter", std::string(sig->params[i].name) + " given twice");
        node->args[i] = it->second;
      }
      if (node->args[i] && node->args[i]->kind == RKind::Literal && node->args[i]->value.is_null())
        node->args[i] = nullptr;  // explicit None
      if (!node->args[i]) {
        if (sig->params[i].required)
          fail(close, std::string("argument '") + sig->params[i].name + "'", "missing argument; call as " + signature_text(*sig));
        continue;
      }
      check_kind(*sig, sig->params[i], *node->args[i]);
    }
    return node;
  }

  [[noreturn]] void bad_arg(const Signature& sig, const ParamSpec& p, const RNode& arg, const char* expected) {
    std::string found = arg.kind == RKind::Call ? arg.name + "(...)" : arg.value.dump();
    fail(arg, std::string(expected) + " for '" + p.name + "'", found, "call as " + signature_text(sig));
  }

  void check_kind(const Signature& sig, const ParamSpec& p, const RNode& arg) {
    const bool call = arg.kind == RKind::Call;
    switch (p.kind) {
      case Arg::Expr:
        if (!call || !find_signature(arg.name)->boolean) bad_arg(sig, p, arg, "boolean expression");
        break;
      case Arg::Uid:
      case Arg::Str:
        if (call || !arg.value.is_string()) bad_arg(sig, p, arg, "string");
        break;
      case Arg::Number:
        if (call || !arg.value.is_number()) bad_arg(sig, p, arg, "number");
        break;
      case Arg::Params:
        if (call || !arg.value.is_object()) bad_arg(sig, p, arg, "dict");
        break;
      case Arg::ObjRef:
        if (call ? arg.name != "OBJECT_ID" : !(arg.value.is_number() || arg.value.is_string()))
          bad_arg(sig, p, arg, "object id, OBJECT_ID(...) or \"<color> <shape>\"");
        break;
    }
  }
};

std::string format_number(double v) {
  if (v == std::floor(v) && std::fabs(v) < 1e15) return std::to_string(static_cast<long long>(v));
  return canonical_dump(Json(v));
}

void print_value(const Json& v, std::string& out) { out += canonical_dump(v); }

}  // namespace

RewardSyntaxError::RewardSyntaxError(int line, int column, std::string expected, std::string found, std::string hint)
    : Error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": expected " + expected +
            ", found " + found + " (hint: " + hint + ")"),
      line_(line), column_(column), expected_(std::move(expected)), found_(std::move(found)), hint_(std::move(hint)) {}

RewardProgram parse_reward(std::string_view source) {
  RewardProgram p;
  p.source = std::string(source);
  Parser parser(strip_comments(source));
  p.root = parser.program();
  return p;
}

RewardProgram binary_reward(RewardProgram program) {
  program.binary = true;
  return program;
}

std::vector<std::string> reward_predicates() {
  std::vector<std::string> out;
  for (const Signature& s : signatures()) out.push_back(signature_text(s));
  return out;
}

std::string print_reward(const RNode& node) {
  if (node.kind == RKind::Literal) {
    Json v = node.value;
    std::string out;
    if (node.embedded.empty()) {
      if (v.is_number()) return format_number(v.get<double>());
      print_value(v, out);
      return out;
    }
    // Splice printed calls over their placeholders.
    std::map<std::string, std::string> calls;
    for (std::size_t i = 0; i < node.embedded.size(); ++i) {
      const std::string tag = "@@call" + std::to_string(i) + "@@";
      v[Json::json_pointer(node.embedded[i].first)] = tag;
      calls["\"" + tag + "\""] = print_reward(*node.embedded[i].second);
    }
    out = canonical_dump(v);
    for (const auto& [tag, text] : calls) out.replace(out.find(tag), tag.size(), text);
    return out;
  }
  const Signature& sig = *find_signature(node.name);
  std::string out = node.name + "(";
  bool first = true;
  bool skipped = false;
  for (std::size_t i = 0; i < node.args.size(); ++i) {
    if (!node.args[i]) {
      skipped = true;
      continue;
    }
    if (!first) out += ", ";
    first = false;
    if (skipped && !sig.variadic) out += std::string(sig.params[i].name) + "=";
    out += print_reward(*node.args[i]);
  }
  return out + ")";
}

std::string print_reward(const RewardProgram& program) { return print_reward(*program.root); }

// ---------------------------------------------------------------------------
// Evaluation

EvalContext EvalContext::make(const Trace& trace, const AnnotationMatrix& matrix, const PatternLibrary* library) {
  EvalContext ctx;
  ctx.trace = &trace;
  ctx.events = matrix.events;
  std::stable_sort(ctx.events.begin(), ctx.events.end(),
                   [](const AnnotatedEvent& a, const AnnotatedEvent& b) { return a.time < b.time; });
  if (library) {
    for (const PatternDetector& d : library->detectors) ctx.known.emplace_back(d.uid, d.label);
  } else {
    for (std::size_t j = 0; j < matrix.uids.size(); ++j) ctx.known.emplace_back(matrix.uids[j], matrix.labels[j]);
  }
  return ctx;
}

namespace {

bool match_value(const Json& have, const Json& want) {
  if (want.is_string()) return have.is_string() && lower(have.get<std::string>()) == lower(want.get<std::string>());
  if (want.is_boolean()) return have.is_boolean() && have.get<bool>() == want.get<bool>();
  if (want.is_number())
    return have.is_number() && !have.is_boolean() && std::fabs(have.get<double>() - want.get<double>()) <= 1e-9;
  if (want.is_array()) {
    if (!have.is_array() || have.size() != want.size()) return false;
    for (std::size_t i = 0; i < want.size(); ++i)
      if (!match_value(have[i], want[i])) return false;
    return true;
  }
  if (want.is_object()) {
    if (!have.is_object()) return false;
    for (const auto& [k, v] : want.items())
      if (!have.contains(k) || !match_value(have[k], v)) return false;
    return true;
  }
  return have.is_null();
}

}  // namespace

bool match_params(const Params& event, const Json& query) {
  if (query.is_null()) return true;
  for (const auto& [k, v] : query.items()) {
    auto it = event.find(k);
    if (it == event.end() || !match_value(it->second, v)) return false;
  }
  return true;
}

bool match_event(const AnnotatedEvent& event, std::string_view uid_or_label, const Json& params) {
  const bool named = event.uid == uid_or_label || lower(event.label) == lower(uid_or_label);
  return named && match_params(event.parameters, params);
}

double nearby_grade(double distance, double threshold) {
  const double excess = std::max(0.0, distance - threshold);
  return std::clamp(1.0 - std::log1p(excess) / std::log(1.0 + kSceneExtent), 0.0, 1.0);
}

double count_grade(double deviation) {
  return std::clamp(1.0 - std::log1p(std::fabs(deviation)) / std::log(11.0), 0.0, 1.0);
}

namespace {

struct Evaluator {
  const EvalContext& ctx;

  [[noreturn]] void unknown(const std::string& id) const {
    std::string known = "CollisionStart, CollisionEnd, TaskComplete";
    for (const auto& [uid, label] : ctx.known) known += ", " + uid + " (\"" + label + "\")";
    throw RewardValidationError("unknown event identifier '" + id + "'; known identifiers: " + known);
  }

  void check_uid(const std::string& id) const {
    if (is_builtin_uid(id)) return;
    for (const auto& [uid, label] : ctx.known)
      if (uid == id || lower(label) == lower(id)) return;
    unknown(id);
  }

  int object_id(const RNode& n) const {
    if (n.kind == RKind::Call) {
      const std::string color = lower(n.args[0]->value.get<std::string>());
      std::string shape = lower(n.args[1]->value.get<std::string>());
      if (shape == "ball") shape = "circle";
      try {
        return object_lookup(scene(), color, shape);
      } catch (const NotFoundError& e) {
        throw RewardValidationError(e.what());
      }
    }
    if (n.value.is_number()) return static_cast<int>(std::llround(n.value.get<double>()));
    // "green ball", "red circle", ...
    std::istringstream words(lower(n.value.get<std::string>()));
    std::string color, shape;
    words >> color >> shape;
    if (shape.empty() || shape == "ball" || shape == "object") shape = shape == "object" ? "any" : "circle";
    try {
      return object_lookup(scene(), color, shape);
    } catch (const NotFoundError&) {
      throw RewardValidationError("cannot resolve object reference '" + n.value.get<std::string>() +
                                  "'; use an id or OBJECT_ID(color, shape)");
    }
  }

  const std::vector<SceneObject>& scene() const {
    if (!ctx.trace) throw RewardValidationError("object references need the simulation trace");
    return ctx.trace->scene;
  }

  Json params(const std::shared_ptr<RNode>& n) const {
    if (!n) return Json();
    Json v = n->value;
    for (const auto& [ptr, call] : n->embedded) v[Json::json_pointer(ptr)] = object_id(*call);
    return v;
  }

  static double number(const std::shared_ptr<RNode>& n, double fallback) {
    return n ? n->value.get<double>() : fallback;
  }

  std::size_t count(const std::string& id, const Json& p) const {
    std::size_t c = 0;
    for (const AnnotatedEvent& e : ctx.events) c += match_event(e, id, p);
    return c;
  }

  Vec2 position_at(int id, double t, bool& found) const {
    const Trace& tr = *ctx.trace;
    found = false;
    if (tr.frames.empty()) return {};
    const double f = std::clamp(t, 0.0, 1.0) * static_cast<double>(tr.frames.size() - 1);
    const auto i0 = static_cast<std::size_t>(std::floor(f));
    const auto i1 = std::min(i0 + 1, tr.frames.size() - 1);
    const SceneObject* a = tr.frames[i0].find(id);
    const SceneObject* b = tr.frames[i1].find(id);
    if (a && b) {
      found = true;
      return lerp(a->position(), b->position(), f - static_cast<double>(i0));
    }
    if (a || b) {
      found = true;
      return (a ? a : b)->position();
    }
    if (const SceneObject* s = tr.find_object(id)) {
      found = true;
      return s->position();
    }
    return {};
  }

  // Distance from the NEARBY_AT target, infinite when the object is unknown.
  double nearby_distance(const RNode& n) const {
    if (!ctx.trace) throw RewardValidationError("NEARBY_AT needs the simulation trace");
    const double t = n.args[3]->value.get<double>();
    if (t < 0.0 || t > 1.0) throw RewardValidationError("NEARBY_AT time must lie in [0, 1]");
    bool found = false;
    const Vec2 p = position_at(object_id(*n.args[0]), t, found);
    if (!found) return std::numeric_limits<double>::infinity();
    return distance(p, {n.args[1]->value.get<double>(), n.args[2]->value.get<double>()});
  }

  static double nearby_threshold(const RNode& n) {
    const double s = number(n.args[4], 0.1);
    if (s <= 0.0) throw RewardValidationError("threshold_strength must be positive");
    return s * kSceneExtent;
  }

  bool after(const std::string& a, const std::string& b, const Json& pa, const Json& pb, double min_delta,
             double max_delta) const {
    if (min_delta < 0.0 || max_delta < 0.0) throw RewardValidationError("time bounds must be non-negative");
    for (const AnnotatedEvent& ea : ctx.events) {
      if (!match_event(ea, a, pa)) continue;
      for (const AnnotatedEvent& eb : ctx.events) {
        if (!match_event(eb, b, pb)) continue;
        const double d = ctx.swap_after ? eb.time - ea.time : ea.time - eb.time;
        if (d > 0.0 && d >= min_delta && d <= max_delta) return true;
      }
    }
    return false;
  }

  long long target_count(const RNode& n) const {
    const double c = n.args[1]->value.get<double>();
    if (c < 0.0) throw RewardValidationError(n.name + " count must be non-negative");
    return std::llround(c);
  }

  bool eval(const RNode& n) const {
    const auto str = [&](std::size_t i) { return n.args[i]->value.get<std::string>(); };
    const double inf = std::numeric_limits<double>::infinity();
    if (n.name == "AND") {
      bool all = true;
      for (const auto& c : n.args) all = eval(*c) && all;  // evaluate all for validation
      return all;
    }
    if (n.name == "OR") {
      bool any = false;
      for (const auto& c : n.args) any = eval(*c) || any;
      return any;
    }
    if (n.name == "NOT") return !eval(*n.args[0]);
    if (n.name == "EVENT") {
      check_uid(str(0));
      return count(str(0), params(n.args[1])) > 0;
    }
    if (n.name == "AFTER") {
      check_uid(str(0));
      check_uid(str(1));
      return after(str(0), str(1), params(n.args[4]), params(n.args[5]), number(n.args[2], 0.0), number(n.args[3], inf));
    }
    if (n.name == "WITHIN") {
      check_uid(str(0));
      check_uid(str(1));
      return after(str(0), str(1), params(n.args[3]), params(n.args[4]), 0.0, n.args[2]->value.get<double>());
    }
    if (n.name == "COUNT" || n.name == "GT" || n.name == "LT") {
      check_uid(str(0));
      const auto have = static_cast<long long>(count(str(0), params(n.args[2])));
      const long long want = target_count(n);
      return n.name == "COUNT" ? have == want : n.name == "GT" ? have > want : have < want;
    }
    if (n.name == "NEARBY_AT") return nearby_distance(n) <= nearby_threshold(n);
    throw RewardValidationError(n.name + " is not a boolean predicate");
  }

  // Graded score of one clause.
  double grade(const RNode& n) const {
    if (eval(n)) return 1.0;
    if (n.name == "NEARBY_AT") return nearby_grade(nearby_distance(n), nearby_threshold(n));
    if (n.name == "COUNT" || n.name == "GT" || n.name == "LT") {
      const auto have = static_cast<long long>(count(n.args[0]->value.get<std::string>(), params(n.args[2])));
      const long long want = target_count(n);
      double dev = 0.0;
      if (n.name == "COUNT") dev = static_cast<double>(std::llabs(have - want));
      else if (n.name == "GT") dev = static_cast<double>(want + 1 - have);
      else dev = static_cast<double>(have - want + 1);
      return count_grade(dev);
    }
    return 0.0;
  }
};

}  // namespace

void validate_reward(const RewardProgram& program, const EvalContext& ctx) { Evaluator{ctx}.eval(*program.root); }

void validate_identifiers(const RewardProgram& program, const std::vector<std::pair<std::string, std::string>>& known) {
  EvalContext ctx;
  ctx.known = known;
  const Evaluator ev{ctx};
  std::function<void(const RNode&)> walk = [&](const RNode& n) {
    if (n.kind != RKind::Call) return;
    if (n.name == "EVENT" || n.name == "COUNT" || n.name == "GT" || n.name == "LT") {
      ev.check_uid(n.args[0]->value.get<std::string>());
    } else if (n.name == "AFTER" || n.name == "WITHIN") {
      ev.check_uid(n.args[0]->value.get<std::string>());
      ev.check_uid(n.args[1]->value.get<std::string>());
    }
    for (const auto& a : n.args)
      if (a) walk(*a);
  };
  walk(*program.root);
}

bool eval_bool(const RewardProgram& program, const EvalContext& ctx) { return Evaluator{ctx}.eval(*program.root); }

RewardResult evaluate_reward(const RewardProgram& program, const EvalContext& ctx) {
  Evaluator ev{ctx};
  RewardResult r;
  const RNode& root = *program.root;
  std::vector<const RNode*> clauses;
  if (root.name == "AND") {
    for (const auto& c : root.args) clauses.push_back(c.get());
  } else {
    clauses.push_back(&root);
  }
  double total = 0.0;
  for (const RNode* c : clauses) {
    ClauseScore s;
    s.text = print_reward(*c);
    s.satisfied = ev.eval(*c);
    s.score = s.satisfied ? 1.0 : ev.grade(*c);
    total += s.score;
    r.clauses.push_back(std::move(s));
  }
  r.satisfied = std::all_of(r.clauses.begin(), r.clauses.end(), [](const ClauseScore& c) { return c.satisfied; });
  r.score = program.binary ? (r.satisfied ? 1.0 : 0.0) : total / static_cast<double>(clauses.size());
  if (r.satisfied) r.score = 1.0;
  return r;
}

double eval_partial(const RewardProgram& program, const EvalContext& ctx) { return evaluate_reward(program, ctx).score; }

Json RewardResult::to_json() const {
  Json clauses_json = Json::array();
  for (const ClauseScore& c : clauses)
    clauses_json.push_back(Json{{"clause", c.text}, {"satisfied", c.satisfied}, {"score", canonical_double(c.score)}});
  return Json{{"bool", satisfied}, {"score", canonical_double(score)}, {"per_clause", clauses_json}};
}

}  // namespace simtrace
