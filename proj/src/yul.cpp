#include "yulverify/yul.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <sstream>

namespace yulverify::yul {

using spec::Directive;
using spec::SpecItem;

YExprPtr make_yexpr(decltype(YExpr::node) node, Span span) {
  return std::make_shared<const YExpr>(YExpr{std::move(node), span});
}

YStmtPtr make_ystmt(decltype(YStmt::node) node, Span span, std::vector<SpecItem> specs) {
  return std::make_shared<const YStmt>(YStmt{std::move(node), span, std::move(specs)});
}

bool YulFunction::has_check(spec::Pattern p) const {
  return std::any_of(specs.begin(), specs.end(),
                     [&](const SpecItem& s) { return s.kind == Directive::Check && s.pattern == p; });
}

bool is_opcode(std::string_view name) {
  static const std::set<std::string, std::less<>> ops = {
      "add",          "sub",           "mul",          "div",          "mod",       "lt",
      "gt",           "eq",            "iszero",       "and",          "or",        "not",
      "sload",        "sstore",        "mload",        "mstore",       "caller",    "callvalue",
      "address",      "timestamp",     "revert",       "call",         "mapping_load", "mapping_store",
      "array_load",   "array_store",   "array_length", "array_push",   "pop"};
  return ops.count(name) > 0;
}

// ---------------------------------------------------------------- types & layout

std::string TypeDesc::str() const {
  switch (kind) {
    case Elementary: return name;
    case Mapping: return "mapping(" + key->str() + " => " + value->str() + ")";
    case Array: return value->str() + "[]";
  }
  return "?";
}

namespace {

struct TypeParser {
  std::string_view s;
  size_t pos = 0;
  Span span;

  void ws() {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
  }
  [[noreturn]] void fail(const std::string& m) {
    throw Error(ErrorKind::SyntaxError, "type: " + m + " in '" + std::string(s) + "'", span);
  }
  std::string word() {
    ws();
    size_t b = pos;
    while (pos < s.size() && (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_')) ++pos;
    if (b == pos) fail("expected type name");
    return std::string(s.substr(b, pos - b));
  }
  bool lit(std::string_view t) {
    ws();
    if (s.substr(pos, t.size()) == t) {
      pos += t.size();
      return true;
    }
    return false;
  }
  TypeDesc type() {
    TypeDesc out;
    std::string w = word();
    if (w == "mapping") {
      if (!lit("(")) fail("expected '('");
      out.kind = TypeDesc::Mapping;
      out.key = std::make_shared<const TypeDesc>(type());
      if (!lit("=>")) fail("expected '=>'");
      out.value = std::make_shared<const TypeDesc>(type());
      if (!lit(")")) fail("expected ')'");
    } else {
      out.kind = TypeDesc::Elementary;
      out.name = w;
    }
    while (lit("[")) {
      if (!lit("]")) fail("only dynamic arrays T[] are supported");
      TypeDesc arr;
      arr.kind = TypeDesc::Array;
      arr.value = std::make_shared<const TypeDesc>(out);
      out = arr;
    }
    return out;
  }
};

int mapping_depth(const TypeDesc& t) {
  return t.kind == TypeDesc::Mapping ? 1 + mapping_depth(*t.value) : 0;
}

}  // namespace

TypeDesc parse_type(std::string_view text, Span span) {
  TypeParser p{text, 0, span};
  TypeDesc t = p.type();
  p.ws();
  if (p.pos != text.size()) p.fail("trailing characters");
  return t;
}

std::string StateVarLayout::symbol() const {
  switch (kind) {
    case spec::StateKind::Scalar: return "storage";
    case spec::StateKind::Mapping: return "map_" + hex_slot(id);
    case spec::StateKind::DynArray: return "arr_" + hex_slot(id);
  }
  return "storage";
}

std::vector<StateVarLayout> build_storage_map(const std::vector<std::pair<std::string, TypeDesc>>& decls) {
  std::vector<StateVarLayout> out;
  Word next = 0;
  for (const auto& [name, type] : decls) {
    StateVarLayout l;
    l.source_name = name;
    l.id = next;
    l.type = type;
    next += 1;
    switch (type.kind) {
      case TypeDesc::Elementary:
        l.kind = spec::StateKind::Scalar;
        l.reader = {"sload", 1};
        l.writer = {"sstore", 2};
        break;
      case TypeDesc::Mapping: {
        int depth = mapping_depth(type);
        if (depth > 2)
          throw Error(ErrorKind::UnsupportedType, name + " : " + type.str() + " (mapping depth " +
                                                      std::to_string(depth) + ")");
        const TypeDesc* leaf = &type;
        while (leaf->kind == TypeDesc::Mapping) leaf = leaf->value.get();
        if (leaf->kind != TypeDesc::Elementary)
          throw Error(ErrorKind::UnsupportedType, name + " : " + type.str());
        l.kind = spec::StateKind::Mapping;
        l.depth = depth;
        l.reader = {"mapping_load", 1 + depth};
        l.writer = {"mapping_store", 2 + depth};
        break;
      }
      case TypeDesc::Array:
        if (type.value->kind != TypeDesc::Elementary)
          throw Error(ErrorKind::UnsupportedType, name + " : " + type.str());
        l.kind = spec::StateKind::DynArray;
        l.reader = {"array_load", 2};
        l.writer = {"array_store", 3};
        l.meta = AccessorDesc{"array_length", 1};
        break;
    }
    out.push_back(std::move(l));
  }
  return out;
}

const YulFunction* YulUnit::find(std::string_view fn) const {
  for (const auto& f : functions)
    if (f.name == fn) return &f;
  return nullptr;
}

const StateVarLayout* YulUnit::layout(std::string_view var) const {
  for (const auto& l : state_vars)
    if (l.source_name == var) return &l;
  return nullptr;
}

bool YulUnit::is_public(const YulFunction& f) const {
  return !f.name.empty() && f.name[0] != '_' && !internal.count(f.name);
}

namespace {

void collect_lets(const Block& b, std::set<std::string>& out) {
  for (const auto& s : b.stmts) {
    std::visit(
        [&](const auto& n) {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, Let>) out.insert(n.name);
          else if constexpr (std::is_same_v<T, Block>) collect_lets(n, out);
          else if constexpr (std::is_same_v<T, If>) collect_lets(n.body, out);
          else if constexpr (std::is_same_v<T, Switch>) {
            for (const auto& c : n.cases) collect_lets(c.body, out);
            if (n.default_body) collect_lets(*n.default_body, out);
          } else if constexpr (std::is_same_v<T, For>) {
            collect_lets(n.init, out);
            collect_lets(n.body, out);
            collect_lets(n.post, out);
          }
        },
        s->node);
  }
}

}  // namespace

std::set<std::string> declared_locals(const YulFunction& f) {
  std::set<std::string> out;
  collect_lets(f.body, out);
  if (f.ret) out.insert(*f.ret);
  return out;
}

spec::Scope YulUnit::scope_for(const YulFunction* f) const {
  spec::Scope s;
  for (const auto& l : state_vars) s.state[l.source_name] = {l.kind, l.depth};
  s.symbols = predicates;
  for (const auto& fn : functions) s.symbols.insert(fn.name);
  if (f) {
    s.params.insert(f->params.begin(), f->params.end());
    s.locals = declared_locals(*f);
    s.has_result = f->ret.has_value();
  }
  return s;
}

// ---------------------------------------------------------------- lexer

namespace {

struct Comment {
  std::string text;
  Span span;
};

struct Tok {
  enum Kind { Ident, Number, String, Punct, End } kind;
  std::string text;
  Span span;
  std::vector<Comment> comments;  // annotation comments immediately before this token
};

std::vector<Tok> lex_yul(std::string_view src) {
  std::vector<Tok> out;
  std::vector<Comment> pending;
  size_t i = 0;
  int line = 1, col = 1;
  auto adv = [&]() {
    if (src[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
    ++i;
  };
  auto ident_start = [](char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '$'; };
  auto ident_char = [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$' || c == '.';
  };
  while (i < src.size()) {
    char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      adv();
      continue;
    }
    Span start{line, col};
    if (src.compare(i, 2, "//") == 0) {
      size_t b = i;
      while (i < src.size() && src[i] != '\n') adv();
      std::string text(src.substr(b, i - b));
      if (text.find('@') != std::string::npos) pending.push_back({text, start});
      continue;
    }
    if (src.compare(i, 2, "/*") == 0) {
      size_t b = i;
      adv();
      adv();
      while (i < src.size() && src.compare(i, 2, "*/") != 0) adv();
      if (i >= src.size()) throw Error(ErrorKind::SyntaxError, "unterminated comment", start);
      adv();
      adv();
      std::string text(src.substr(b, i - b));
      if (text.find('@') != std::string::npos) pending.push_back({text, start});
      continue;
    }
    Tok t;
    t.span = start;
    if (ident_start(c)) {
      size_t b = i;
      while (i < src.size() && ident_char(src[i])) adv();
      t.kind = Tok::Ident;
      t.text = std::string(src.substr(b, i - b));
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      size_t b = i;
      while (i < src.size() && (std::isalnum(static_cast<unsigned char>(src[i])) || src[i] == '_')) adv();
      t.kind = Tok::Number;
      t.text = std::string(src.substr(b, i - b));
    } else if (c == '"') {
      size_t b = i;
      adv();
      while (i < src.size() && src[i] != '"') adv();
      if (i >= src.size()) throw Error(ErrorKind::SyntaxError, "unterminated string", start);
      adv();
      t.kind = Tok::String;
      t.text = std::string(src.substr(b, i - b));
    } else if (src.compare(i, 2, ":=") == 0 || src.compare(i, 2, "->") == 0) {
      t.kind = Tok::Punct;
      t.text = std::string(src.substr(i, 2));
      adv();
      adv();
    } else if (std::string_view("{}(),:").find(c) != std::string_view::npos) {
      t.kind = Tok::Punct;
      t.text = std::string(1, c);
      adv();
    } else {
      throw Error(ErrorKind::SyntaxError, std::string("unexpected character '") + c + "'", start);
    }
    t.comments = std::move(pending);
    pending.clear();
    out.push_back(std::move(t));
  }
  Tok end;
  end.kind = Tok::End;
  end.span = {line, col};
  end.comments = std::move(pending);
  out.push_back(std::move(end));
  return out;
}

// ---------------------------------------------------------------- parser

const std::set<std::string, std::less<>> kPragmas = {"storage", "predicate", "internal", "width", "contract"};

class Parser {
 public:
  explicit Parser(std::vector<Tok> toks, std::string name) : toks_(std::move(toks)) { unit_.name = std::move(name); }

  YulUnit run() {
    while (cur().kind != Tok::End) {
      std::vector<SpecItem> fn_specs = take_comments(cur(), Site::Function);
      if (!is_kw("function")) fail("expected function definition");
      parse_function(std::move(fn_specs));
    }
    auto leftover = take_comments(cur(), Site::UnitEnd);
    (void)leftover;
    finish();
    return std::move(unit_);
  }

 private:
  enum class Site { Function, Statement, Loop, UnitEnd };

  std::vector<Tok> toks_;
  size_t pos_ = 0;
  YulUnit unit_;
  std::vector<std::pair<std::string, TypeDesc>> storage_decls_;
  std::vector<Span> storage_spans_;
  int loop_depth_ = 0;
  int function_depth_ = 0;

  const Tok& cur() const { return toks_[pos_]; }
  const Tok& ahead(size_t k) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
  bool is_kw(std::string_view s) const { return cur().kind == Tok::Ident && cur().text == s; }
  bool is_p(std::string_view s) const { return cur().kind == Tok::Punct && cur().text == s; }
  [[noreturn]] void fail(const std::string& m) const {
    std::string got = cur().kind == Tok::End ? "end of input" : "'" + cur().text + "'";
    throw Error(ErrorKind::SyntaxError, m + ", got " + got, cur().span);
  }
  void expect(std::string_view s) {
    if (!is_p(s)) fail("expected '" + std::string(s) + "'");
    ++pos_;
  }
  std::string ident() {
    if (cur().kind != Tok::Ident) fail("expected identifier");
    std::string s = cur().text;
    ++pos_;
    return s;
  }

  void pragma(const spec::DirectiveSegment& seg) {
    std::istringstream in(seg.payload);
    if (seg.tag == "storage") {
      auto colon = seg.payload.find(':');
      if (colon == std::string::npos) throw Error(ErrorKind::SyntaxError, "@storage name : type", seg.span);
      std::string name = seg.payload.substr(0, colon);
      name.erase(0, name.find_first_not_of(" \t\r\n"));
      name.erase(name.find_last_not_of(" \t\r\n") + 1);
      std::string ty = seg.payload.substr(colon + 1);
      ty.erase(0, ty.find_first_not_of(" \t\r\n"));
      ty.erase(ty.find_last_not_of(" \t\r\n;") + 1);
      storage_decls_.emplace_back(name, parse_type(ty, seg.span));
      storage_spans_.push_back(seg.span);
    } else if (seg.tag == "predicate") {
      std::string w;
      while (in >> w) unit_.predicates.insert(w);
    } else if (seg.tag == "internal") {
      std::string w;
      while (in >> w) unit_.internal.insert(w);
    } else if (seg.tag == "width") {
      std::string var, ty;
      in >> var >> ty;
      Width wd;
      std::string digits;
      if (ty.rfind("uint", 0) == 0) digits = ty.substr(4);
      else if (ty.rfind("int", 0) == 0) {
        digits = ty.substr(3);
        wd.is_signed = true;
      } else {
        throw Error(ErrorKind::SyntaxError, "@width expects uintN or intN", seg.span);
      }
      wd.bits = digits.empty() ? 256 : static_cast<unsigned>(std::stoul(digits));
      if (wd.bits == 0 || wd.bits > 256) throw Error(ErrorKind::SyntaxError, "@width out of range", seg.span);
      unit_.widths[var] = wd;
    } else if (seg.tag == "contract") {
      std::string w;
      if (in >> w) unit_.name = w;
    }
  }

  std::vector<SpecItem> take_comments(const Tok& t, Site site) {
    std::vector<SpecItem> out;
    for (const auto& c : t.comments) {
      for (const auto& seg : spec::split_directives(c.text, c.span)) {
        if (kPragmas.count(seg.tag)) {
          if (site == Site::Statement || site == Site::Loop)
            throw Error(ErrorKind::SyntaxError, "@" + seg.tag + " is only allowed at unit level", seg.span);
          pragma(seg);
          continue;
        }
        SpecItem item = spec::parse_directive(seg);
        if (item.kind == Directive::Meta) {
          unit_.meta_specs.push_back(item);
          continue;
        }
        check_placement(item, site);
        out.push_back(std::move(item));
      }
    }
    return out;
  }

  static void check_placement(const SpecItem& item, Site site) {
    auto bad = [&](const std::string& where) {
      throw Error(ErrorKind::SyntaxError,
                  "@" + std::string(spec::to_string(item.kind)) + " cannot be attached to " + where, item.span);
    };
    switch (site) {
      case Site::UnitEnd: bad("the end of the unit"); break;
      case Site::Function:
        if (item.kind != Directive::Pre && item.kind != Directive::Post && item.kind != Directive::Check)
          bad("a function");
        break;
      case Site::Statement:
        if (item.kind != Directive::Assume && item.kind != Directive::Assert) bad("a non-loop statement");
        break;
      case Site::Loop:
        if (item.kind == Directive::Pre || item.kind == Directive::Check) bad("a loop");
        if (item.kind == Directive::Post && item.deferred) bad("a loop (deferred)");
        break;
    }
  }

  void parse_function(std::vector<SpecItem> specs) {
    Span s = cur().span;
    ++pos_;  // function
    YulFunction f;
    f.span = s;
    f.specs = std::move(specs);
    f.name = ident();
    expect("(");
    if (!is_p(")")) {
      f.params.push_back(ident());
      while (is_p(",")) {
        ++pos_;
        f.params.push_back(ident());
      }
    }
    expect(")");
    if (is_p("->")) {
      ++pos_;
      f.ret = ident();
      if (is_p(",")) throw Error(ErrorKind::UnsupportedConstruct, "multiple return variables", cur().span);
    }
    if (is_p(":")) throw Error(ErrorKind::UnsupportedConstruct, "typed Yul", cur().span);
    int saved_loop = loop_depth_;
    loop_depth_ = 0;
    ++function_depth_;
    f.body = block();
    --function_depth_;
    loop_depth_ = saved_loop;
    for (const auto& g : unit_.functions)
      if (g.name == f.name) throw Error(ErrorKind::SyntaxError, "duplicate function '" + f.name + "'", s);
    unit_.functions.push_back(std::move(f));
  }

  Block block() {
    expect("{");
    Block b;
    while (!is_p("}")) {
      if (cur().kind == Tok::End) fail("unterminated block");
      if (auto st = statement()) b.stmts.push_back(st);
    }
    // Annotations before the closing brace bind to an empty block statement.
    if (!cur().comments.empty()) {
      auto specs = take_comments(cur(), Site::Statement);
      if (!specs.empty()) b.stmts.push_back(make_ystmt(Block{}, cur().span, std::move(specs)));
    }
    expect("}");
    return b;
  }

  YStmtPtr statement() {
    const Tok& t = cur();
    Span s = t.span;
    bool is_loop = is_kw("for");
    if (is_kw("function")) {
      auto specs = take_comments(t, Site::Function);
      parse_function(std::move(specs));
      return nullptr;
    }
    std::vector<SpecItem> specs = take_comments(t, is_loop ? Site::Loop : Site::Statement);
    if (is_p("{")) return make_ystmt(block(), s, std::move(specs));
    if (t.kind == Tok::Ident) {
      const std::string& kw = t.text;
      if (kw == "let") {
        ++pos_;
        std::string name = ident();
        if (is_p(",")) throw Error(ErrorKind::UnsupportedConstruct, "multi-variable let", cur().span);
        YExprPtr init;
        if (is_p(":=")) {
          ++pos_;
          init = expr();
        }
        return make_ystmt(Let{name, init}, s, std::move(specs));
      }
      if (kw == "if") {
        ++pos_;
        YExprPtr c = expr();
        Block b = block();
        return make_ystmt(If{c, std::move(b)}, s, std::move(specs));
      }
      if (kw == "switch") return switch_stmt(s, std::move(specs));
      if (kw == "for") return for_stmt(s, std::move(specs));
      if (kw == "break") {
        if (loop_depth_ == 0) throw Error(ErrorKind::SyntaxError, "'break' outside a for-loop body", s);
        ++pos_;
        return make_ystmt(Break{}, s, std::move(specs));
      }
      if (kw == "continue") throw Error(ErrorKind::UnsupportedConstruct, "'continue'", s);
      if (kw == "leave") {
        if (function_depth_ == 0) throw Error(ErrorKind::SyntaxError, "'leave' outside a function", s);
        ++pos_;
        return make_ystmt(Leave{}, s, std::move(specs));
      }
      if (ahead(1).kind == Tok::Punct && ahead(1).text == ":=") {
        std::string name = ident();
        ++pos_;
        return make_ystmt(Assign{name, expr()}, s, std::move(specs));
      }
      if (ahead(1).kind == Tok::Punct && ahead(1).text == ",")
        throw Error(ErrorKind::UnsupportedConstruct, "multi-variable assignment", s);
      YExprPtr e = expr();
      if (!std::holds_alternative<CallExpr>(e->node)) throw Error(ErrorKind::SyntaxError, "expression statement must be a call", s);
      return make_ystmt(ExprStmt{e}, s, std::move(specs));
    }
    fail("expected statement");
  }

  Word literal() {
    Span s = cur().span;
    if (cur().kind == Tok::Number) {
      Word w = parse_word_or_throw(cur().text, s);
      ++pos_;
      return w;
    }
    if (is_kw("true") || is_kw("false")) {
      Word w = is_kw("true") ? 1 : 0;
      ++pos_;
      return w;
    }
    if (cur().kind == Tok::String) throw Error(ErrorKind::UnsupportedConstruct, "string literal", s);
    fail("expected literal");
  }

  YStmtPtr switch_stmt(Span s, std::vector<SpecItem> specs) {
    ++pos_;
    Switch sw;
    sw.scrutinee = expr();
    while (is_kw("case")) {
      Span cs = cur().span;
      ++pos_;
      Word lit = literal();
      for (const auto& c : sw.cases)
        if (c.literal == lit) throw Error(ErrorKind::SyntaxError, "duplicate case literal " + lit.get_str(), cs);
      Block b = block();
      sw.cases.push_back({lit, std::move(b), cs});
    }
    if (is_kw("default")) {
      ++pos_;
      sw.default_body = block();
    }
    if (sw.cases.empty() && !sw.default_body) fail("switch needs at least one case");
    return make_ystmt(std::move(sw), s, std::move(specs));
  }

  YStmtPtr for_stmt(Span s, std::vector<SpecItem> specs) {
    ++pos_;
    For f;
    int saved = loop_depth_;
    loop_depth_ = 0;
    f.init = block();
    f.cond = expr();
    f.post = block();
    loop_depth_ = saved + 1;
    f.body = block();
    loop_depth_ = saved;
    return make_ystmt(std::move(f), s, std::move(specs));
  }

  YExprPtr expr() {
    Span s = cur().span;
    if (cur().kind == Tok::Number || is_kw("true") || is_kw("false") || cur().kind == Tok::String)
      return make_yexpr(Lit{literal()}, s);
    std::string name = ident();
    if (is_p("(")) {
      ++pos_;
      CallExpr c{name, {}};
      if (!is_p(")")) {
        c.args.push_back(expr());
        while (is_p(",")) {
          ++pos_;
          c.args.push_back(expr());
        }
      }
      expect(")");
      return make_yexpr(std::move(c), s);
    }
    return make_yexpr(VarRef{name}, s);
  }

  void finish() {
    unit_.state_vars = build_storage_map(storage_decls_);
    std::set<std::string> names;
    for (size_t i = 0; i < unit_.state_vars.size(); ++i)
      if (!names.insert(unit_.state_vars[i].source_name).second)
        throw Error(ErrorKind::SyntaxError, "duplicate state variable '" + unit_.state_vars[i].source_name + "'",
                    storage_spans_[i]);
    spec::Scope meta_scope = unit_.scope_for(nullptr);
    for (auto& m : unit_.meta_specs) m = spec::resolve_identifiers(m, meta_scope);
    for (auto& f : unit_.functions) {
      spec::Scope sc = unit_.scope_for(&f);
      for (auto& item : f.specs) item = spec::resolve_identifiers(item, sc);
      f.body = resolve_block(f.body, sc);
    }
  }

  Block resolve_block(const Block& b, const spec::Scope& sc) {
    Block out;
    for (const auto& st : b.stmts) out.stmts.push_back(resolve_stmt(st, sc));
    return out;
  }

  YStmtPtr resolve_stmt(const YStmtPtr& st, const spec::Scope& sc) {
    std::vector<SpecItem> specs;
    for (const auto& item : st->specs) specs.push_back(spec::resolve_identifiers(item, sc));
    auto node = std::visit(
        [&](const auto& n) -> decltype(YStmt::node) {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, Block>) return resolve_block(n, sc);
          else if constexpr (std::is_same_v<T, If>) return If{n.cond, resolve_block(n.body, sc)};
          else if constexpr (std::is_same_v<T, Switch>) {
            Switch sw{n.scrutinee, {}, std::nullopt};
            for (const auto& c : n.cases) sw.cases.push_back({c.literal, resolve_block(c.body, sc), c.span});
            if (n.default_body) sw.default_body = resolve_block(*n.default_body, sc);
            return sw;
          } else if constexpr (std::is_same_v<T, For>) {
            return For{resolve_block(n.init, sc), n.cond, resolve_block(n.post, sc), resolve_block(n.body, sc)};
          } else {
            return n;
          }
        },
        st->node);
    return make_ystmt(std::move(node), st->span, std::move(specs));
  }
};

}  // namespace

YulUnit parse_yul(std::string_view text, std::string unit_name) {
  Parser p(lex_yul(text), std::move(unit_name));
  return p.run();
}

// ---------------------------------------------------------------- lowering

spec::SpecItem lower_spec_accessors(const spec::SpecItem& item, const std::vector<StateVarLayout>& layout) {
  using namespace spec;
  if (!item.form) return item;
  auto find = [&](const std::string& n) -> const StateVarLayout* {
    for (const auto& l : layout)
      if (l.source_name == n) return &l;
    return nullptr;
  };
  SpecItem out = item;
  out.form = rewrite_exprs(item.form, [&](const ExprPtr& e) -> ExprPtr {
    if (auto* id = std::get_if<Ident>(&e->node)) {
      if (id->binding == Binding::State || (id->binding == Binding::Unresolved && find(id->name))) {
        const StateVarLayout* l = find(id->name);
        if (!l) throw Error(ErrorKind::NoLayout, "'" + id->name + "'", e->span);
        Accessor a;
        a.kind = AccessorKind::Read;
        a.state = l->kind;
        a.slot = l->id;
        a.source_name = l->source_name;
        a.old = id->old;
        return make_expr(std::move(a), e->span);
      }
      if (id->binding == Binding::Env && id->name == "this") return make_expr(EnvRef{EnvVar::Address}, e->span);
      return e;
    }
    if (auto* ix = std::get_if<Index>(&e->node)) {
      auto* a = std::get_if<Accessor>(&ix->base->node);
      if (!a || a->kind != AccessorKind::Read) return e;
      int max_args = a->state == StateKind::Mapping ? find(a->source_name) ? find(a->source_name)->depth : 1
                     : a->state == StateKind::DynArray ? 1
                                                       : 0;
      if (static_cast<int>(a->args.size()) >= max_args)
        throw Error(ErrorKind::UnsupportedConstruct, "too many indices on '" + a->source_name + "'", e->span);
      Accessor b = *a;
      b.args.push_back(ix->index);
      return make_expr(std::move(b), e->span);
    }
    if (auto* fld = std::get_if<Field>(&e->node)) {
      if (auto* a = std::get_if<Accessor>(&fld->base->node)) {
        if (fld->name == "length" && a->state == StateKind::DynArray && a->args.empty() &&
            a->kind == AccessorKind::Read) {
          Accessor b = *a;
          b.kind = AccessorKind::Meta;
          return make_expr(std::move(b), e->span);
        }
        throw Error(ErrorKind::UnsupportedConstruct, "field '" + fld->name + "' on '" + a->source_name + "'", e->span);
      }
      if (auto* base = std::get_if<Ident>(&fld->base->node)) {
        if (base->name == "msg" && fld->name == "sender") return make_expr(EnvRef{EnvVar::Caller}, e->span);
        if (base->name == "msg" && fld->name == "value") return make_expr(EnvRef{EnvVar::CallValue}, e->span);
        if (base->name == "block" && fld->name == "timestamp") return make_expr(EnvRef{EnvVar::Timestamp}, e->span);
        if (base->binding == Binding::Env)
          throw Error(ErrorKind::UnsupportedConstruct, base->name + "." + fld->name, e->span);
      }
      return e;
    }
    return e;
  });
  return out;
}

namespace {

Block lower_block(const Block& b, const std::vector<StateVarLayout>& layout);

YStmtPtr lower_stmt(const YStmtPtr& st, const std::vector<StateVarLayout>& layout) {
  std::vector<SpecItem> specs;
  for (const auto& item : st->specs) specs.push_back(lower_spec_accessors(item, layout));
  auto node = std::visit(
      [&](const auto& n) -> decltype(YStmt::node) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Block>) return lower_block(n, layout);
        else if constexpr (std::is_same_v<T, If>) return If{n.cond, lower_block(n.body, layout)};
        else if constexpr (std::is_same_v<T, Switch>) {
          Switch sw{n.scrutinee, {}, std::nullopt};
          for (const auto& c : n.cases) sw.cases.push_back({c.literal, lower_block(c.body, layout), c.span});
          if (n.default_body) sw.default_body = lower_block(*n.default_body, layout);
          return sw;
        } else if constexpr (std::is_same_v<T, For>) {
          return For{lower_block(n.init, layout), n.cond, lower_block(n.post, layout), lower_block(n.body, layout)};
        } else {
          return n;
        }
      },
      st->node);
  return make_ystmt(std::move(node), st->span, std::move(specs));
}

Block lower_block(const Block& b, const std::vector<StateVarLayout>& layout) {
  Block out;
  for (const auto& s : b.stmts) out.stmts.push_back(lower_stmt(s, layout));
  return out;
}

}  // namespace

YulUnit lower_unit_specs(const YulUnit& unit) {
  YulUnit out = unit;
  for (auto& m : out.meta_specs) m = lower_spec_accessors(m, unit.state_vars);
  for (auto& f : out.functions) {
    for (auto& item : f.specs) item = lower_spec_accessors(item, unit.state_vars);
    f.body = lower_block(f.body, unit.state_vars);
  }
  return out;
}

// ---------------------------------------------------------------- printing

std::string print_expr(const YExprPtr& e) {
  return std::visit(
      [](const auto& n) -> std::string {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, VarRef>) {
          return n.name;
        } else if constexpr (std::is_same_v<T, Lit>) {
          return n.value >= 65536 ? "0x" + n.value.get_str(16) : n.value.get_str();
        } else {
          std::string out = n.callee + "(";
          for (size_t i = 0; i < n.args.size(); ++i) {
            if (i) out += ", ";
            out += print_expr(n.args[i]);
          }
          return out + ")";
        }
      },
      e->node);
}

namespace {

void print_specs(std::ostream& out, const std::vector<SpecItem>& specs, const std::string& ind) {
  if (specs.empty()) return;
  out << ind << "/*\n";
  for (const auto& s : specs) out << ind << " * " << spec::print(s) << "\n";
  out << ind << " */\n";
}

void print_block(std::ostream& out, const Block& b, const std::string& ind);

void print_stmt(std::ostream& out, const YStmtPtr& st, const std::string& ind) {
  print_specs(out, st->specs, ind);
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Block>) {
          out << ind;
          print_block(out, n, ind);
          out << "\n";
        } else if constexpr (std::is_same_v<T, Break>) {
          out << ind << "break\n";
        } else if constexpr (std::is_same_v<T, Leave>) {
          out << ind << "leave\n";
        } else if constexpr (std::is_same_v<T, ExprStmt>) {
          out << ind << print_expr(n.expr) << "\n";
        } else if constexpr (std::is_same_v<T, If>) {
          out << ind << "if " << print_expr(n.cond) << " ";
          print_block(out, n.body, ind);
          out << "\n";
        } else if constexpr (std::is_same_v<T, Let>) {
          out << ind << "let " << n.name;
          if (n.init) out << " := " << print_expr(n.init);
          out << "\n";
        } else if constexpr (std::is_same_v<T, Assign>) {
          out << ind << n.name << " := " << print_expr(n.value) << "\n";
        } else if constexpr (std::is_same_v<T, Switch>) {
          out << ind << "switch " << print_expr(n.scrutinee) << "\n";
          for (const auto& c : n.cases) {
            out << ind << "case " << (c.literal >= 65536 ? "0x" + c.literal.get_str(16) : c.literal.get_str()) << " ";
            print_block(out, c.body, ind);
            out << "\n";
          }
          if (n.default_body) {
            out << ind << "default ";
            print_block(out, *n.default_body, ind);
            out << "\n";
          }
        } else if constexpr (std::is_same_v<T, For>) {
          out << ind << "for ";
          print_block(out, n.init, ind);
          out << " " << print_expr(n.cond) << " ";
          print_block(out, n.post, ind);
          out << " ";
          print_block(out, n.body, ind);
          out << "\n";
        }
      },
      st->node);
}

void print_block(std::ostream& out, const Block& b, const std::string& ind) {
  if (b.stmts.empty()) {
    out << "{ }";
    return;
  }
  out << "{\n";
  for (const auto& s : b.stmts) print_stmt(out, s, ind + "  ");
  out << ind << "}";
}

}  // namespace

std::string print_unit(const YulUnit& unit) {
  std::ostringstream out;
  out << "/*\n * @contract " << unit.name << "\n";
  for (const auto& l : unit.state_vars) out << " * @storage " << l.source_name << " : " << l.type.str() << "\n";
  for (const auto& p : unit.predicates) out << " * @predicate " << p << "\n";
  for (const auto& p : unit.internal) out << " * @internal " << p << "\n";
  for (const auto& [v, w] : unit.widths)
    out << " * @width " << v << " " << (w.is_signed ? "int" : "uint") << w.bits << "\n";
  for (const auto& m : unit.meta_specs) out << " * " << spec::print(m) << "\n";
  out << " */\n\n";
  for (const auto& f : unit.functions) {
    print_specs(out, f.specs, "");
    out << "function " << f.name << "(";
    for (size_t i = 0; i < f.params.size(); ++i) out << (i ? ", " : "") << f.params[i];
    out << ")";
    if (f.ret) out << " -> " << *f.ret;
    out << " ";
    print_block(out, f.body, "");
    out << "\n\n";
  }
  return out.str();
}

// ---------------------------------------------------------------- equality

namespace {

bool eq_expr(const YExprPtr& a, const YExprPtr& b) {
  if (!a || !b) return a == b;
  if (a->node.index() != b->node.index()) return false;
  if (auto* x = std::get_if<VarRef>(&a->node)) return x->name == std::get<VarRef>(b->node).name;
  if (auto* x = std::get_if<Lit>(&a->node)) return x->value == std::get<Lit>(b->node).value;
  const auto& x = std::get<CallExpr>(a->node);
  const auto& y = std::get<CallExpr>(b->node);
  if (x.callee != y.callee || x.args.size() != y.args.size()) return false;
  for (size_t i = 0; i < x.args.size(); ++i)
    if (!eq_expr(x.args[i], y.args[i])) return false;
  return true;
}

bool eq_specs(const std::vector<SpecItem>& a, const std::vector<SpecItem>& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i)
    if (!spec::equal(a[i], b[i])) return false;
  return true;
}

bool eq_block(const Block& a, const Block& b);

bool eq_stmt(const YStmtPtr& a, const YStmtPtr& b) {
  if (a->node.index() != b->node.index() || !eq_specs(a->specs, b->specs)) return false;
  return std::visit(
      [&](const auto& x) -> bool {
        using T = std::decay_t<decltype(x)>;
        const T& y = std::get<T>(b->node);
        if constexpr (std::is_same_v<T, Block>) return eq_block(x, y);
        else if constexpr (std::is_same_v<T, Break> || std::is_same_v<T, Leave>) return true;
        else if constexpr (std::is_same_v<T, ExprStmt>) return eq_expr(x.expr, y.expr);
        else if constexpr (std::is_same_v<T, If>) return eq_expr(x.cond, y.cond) && eq_block(x.body, y.body);
        else if constexpr (std::is_same_v<T, Let>) return x.name == y.name && eq_expr(x.init, y.init);
        else if constexpr (std::is_same_v<T, Assign>) return x.name == y.name && eq_expr(x.value, y.value);
        else if constexpr (std::is_same_v<T, Switch>) {
          if (!eq_expr(x.scrutinee, y.scrutinee) || x.cases.size() != y.cases.size()) return false;
          for (size_t i = 0; i < x.cases.size(); ++i)
            if (x.cases[i].literal != y.cases[i].literal || !eq_block(x.cases[i].body, y.cases[i].body)) return false;
          if (x.default_body.has_value() != y.default_body.has_value()) return false;
          return !x.default_body || eq_block(*x.default_body, *y.default_body);
        } else {
          return eq_block(x.init, y.init) && eq_expr(x.cond, y.cond) && eq_block(x.post, y.post) &&
                 eq_block(x.body, y.body);
        }
      },
      a->node);
}

bool eq_block(const Block& a, const Block& b) {
  if (a.stmts.size() != b.stmts.size()) return false;
  for (size_t i = 0; i < a.stmts.size(); ++i)
    if (!eq_stmt(a.stmts[i], b.stmts[i])) return false;
  return true;
}

}  // namespace

bool equal(const YulUnit& a, const YulUnit& b) {
  if (a.name != b.name || a.functions.size() != b.functions.size() || a.state_vars.size() != b.state_vars.size())
    return false;
  if (a.predicates != b.predicates || a.internal != b.internal || !eq_specs(a.meta_specs, b.meta_specs)) return false;
  if (a.widths.size() != b.widths.size()) return false;
  for (const auto& [k, w] : a.widths) {
    auto it = b.widths.find(k);
    if (it == b.widths.end() || it->second.bits != w.bits || it->second.is_signed != w.is_signed) return false;
  }
  for (size_t i = 0; i < a.state_vars.size(); ++i) {
    const auto& x = a.state_vars[i];
    const auto& y = b.state_vars[i];
    if (x.source_name != y.source_name || x.id != y.id || x.kind != y.kind || x.depth != y.depth) return false;
  }
  for (size_t i = 0; i < a.functions.size(); ++i) {
    const auto& f = a.functions[i];
    const auto& g = b.functions[i];
    if (f.name != g.name || f.params != g.params || f.ret != g.ret || !eq_specs(f.specs, g.specs) ||
        !eq_block(f.body, g.body))
      return false;
  }
  return true;
}

}  // namespace yulverify::yul
