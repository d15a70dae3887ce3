#include "yulverify/annotations.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace yulverify::spec {

bool is_comparison(BinOp op) {
  switch (op) {
    case BinOp::Eq:
    case BinOp::Ne:
    case BinOp::Lt:
    case BinOp::Le:
    case BinOp::Gt:
    case BinOp::Ge: return true;
    default: return false;
  }
}

std::string_view to_string(BinOp op) {
  switch (op) {
    case BinOp::Add: return "+";
    case BinOp::Sub: return "-";
    case BinOp::Mul: return "*";
    case BinOp::Div: return "/";
    case BinOp::Mod: return "%";
    case BinOp::Eq: return "=";
    case BinOp::Ne: return "!=";
    case BinOp::Lt: return "<";
    case BinOp::Le: return "<=";
    case BinOp::Gt: return ">";
    case BinOp::Ge: return ">=";
  }
  return "?";
}

std::string_view to_string(EnvVar v) {
  switch (v) {
    case EnvVar::Caller: return "caller";
    case EnvVar::CallValue: return "callvalue";
    case EnvVar::Timestamp: return "timestamp";
    case EnvVar::Address: return "address";
  }
  return "?";
}

std::string_view to_string(Directive d) {
  switch (d) {
    case Directive::Pre: return "pre";
    case Directive::Post: return "post";
    case Directive::Meta: return "meta";
    case Directive::Inv: return "inv";
    case Directive::Assume: return "assume";
    case Directive::Assert: return "assert";
    case Directive::Check: return "check";
    case Directive::Learn: return "learn";
  }
  return "?";
}

std::string_view to_string(Pattern p) {
  switch (p) {
    case Pattern::Overflow: return "overflow";
    case Pattern::Reentrancy: return "reentrancy";
    case Pattern::Timestamp: return "timestamp";
  }
  return "?";
}

ExprPtr make_expr(decltype(Expr::node) node, Span span) {
  return std::make_shared<const Expr>(Expr{std::move(node), span});
}
ExprPtr num(const Word& v, Span span) { return make_expr(Num{v}, span); }
ExprPtr ident(std::string name, bool old, Span span) {
  return make_expr(Ident{std::move(name), old, Binding::Unresolved}, span);
}
ExprPtr binary(BinOp op, ExprPtr lhs, ExprPtr rhs, Span span) {
  return make_expr(Binary{op, std::move(lhs), std::move(rhs)}, span);
}
FormPtr make_form(decltype(Form::node) node, Span span) {
  return std::make_shared<const Form>(Form{std::move(node), span});
}
FormPtr expr_form(ExprPtr e) {
  Span s = e->span;
  return make_form(ExprForm{std::move(e)}, s);
}
FormPtr status_form(Status s, Span span) { return make_form(StatusForm{s}, span); }
FormPtr make_not(FormPtr f, Span span) { return make_form(Not{std::move(f)}, span); }
FormPtr make_and(FormPtr a, FormPtr b, Span span) {
  return make_form(And{std::move(a), std::move(b)}, span);
}
FormPtr make_or(FormPtr a, FormPtr b, Span span) {
  return make_form(Or{std::move(a), std::move(b)}, span);
}
FormPtr make_implies(FormPtr a, FormPtr b, Span span) {
  return make_form(Implies{std::move(a), std::move(b)}, span);
}

namespace {

const std::set<std::string, std::less<>> kSpecDirectives = {"pre",    "post",  "meta",  "inv",
                                                            "assume", "assert", "check", "learn"};

const std::set<std::string, std::less<>> kSorts = {"address", "uint256", "bool", "int"};

// Casts such as address(0) are the identity on words.
const std::set<std::string, std::less<>> kCasts = {"address", "uint256", "uint", "int256",
                                                   "int",     "bool",    "payable"};

struct Token {
  enum Kind { Ident, Number, Op, End } kind;
  std::string text;
  Span span;
};

bool ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '$';
}
bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$';
}

// Tracks line/column while walking cleaned payload text.
struct Cursor {
  std::string_view text;
  size_t pos = 0;
  int line = 1;
  int col = 1;

  char peek(size_t k = 0) const { return pos + k < text.size() ? text[pos + k] : '\0'; }
  void advance() {
    if (text[pos] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
    ++pos;
  }
  Span span() const { return {line, col}; }
};

std::vector<Token> lex(std::string_view text, Span origin) {
  static const char* kOps[] = {"==>", "->", "=>", "/\\", "\\/", "&&", "||", "==", "!=", "<=",
                               ">=",  "<",  ">",  "=",   "!",   "+",  "-",  "*",  "/",  "%",
                               "(",   ")",  "[",  "]",   "{",   "}",  ",",  ":",  ";",  "."};
  std::vector<Token> out;
  Cursor c{text, 0, origin.line, origin.col};
  while (c.pos < text.size()) {
    char ch = c.peek();
    if (std::isspace(static_cast<unsigned char>(ch))) {
      c.advance();
      continue;
    }
    Span start = c.span();
    if (ident_start(ch)) {
      std::string s;
      while (c.pos < text.size() && ident_char(c.peek())) {
        s.push_back(c.peek());
        c.advance();
      }
      out.push_back({Token::Ident, s, start});
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(ch))) {
      std::string s;
      while (c.pos < text.size() && (std::isalnum(static_cast<unsigned char>(c.peek())) || c.peek() == '_')) {
        s.push_back(c.peek());
        c.advance();
      }
      out.push_back({Token::Number, s, start});
      continue;
    }
    bool matched = false;
    for (const char* op : kOps) {
      std::string_view o(op);
      if (text.substr(c.pos, o.size()) == o) {
        for (size_t i = 0; i < o.size(); ++i) c.advance();
        out.push_back({Token::Op, std::string(o), start});
        matched = true;
        break;
      }
    }
    if (!matched)
      throw Error(ErrorKind::SyntaxError, std::string("unexpected character '") + ch + "'", start);
  }
  out.push_back({Token::End, "", c.span()});
  return out;
}

class FormParser {
 public:
  FormParser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  FormPtr parse_all() {
    FormPtr f = form();
    if (cur().kind != Token::End) fail("unexpected '" + cur().text + "'");
    return f;
  }

 private:
  std::vector<Token> toks_;
  size_t pos_ = 0;

  const Token& cur() const { return toks_[pos_]; }
  const Token& ahead(size_t k) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
  bool is_op(std::string_view s) const { return cur().kind == Token::Op && cur().text == s; }
  bool is_kw(std::string_view s) const { return cur().kind == Token::Ident && cur().text == s; }
  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(ErrorKind::SyntaxError, msg.empty() ? "malformed formula" : msg, cur().span);
  }
  void expect(std::string_view s) {
    if (!is_op(s)) fail("expected '" + std::string(s) + "'" + (cur().kind == Token::End ? " at end of formula" : " before '" + cur().text + "'"));
    ++pos_;
  }
  bool accept(std::string_view s) {
    if (is_op(s)) {
      ++pos_;
      return true;
    }
    return false;
  }

  bool at_implies() const { return is_op("->") || is_op("=>") || is_op("==>"); }
  bool at_or() const { return is_op("\\/") || is_op("||"); }
  bool at_and() const { return is_op("/\\") || is_op("&&"); }

  FormPtr form() {
    Span s = cur().span;
    FormPtr lhs = disjunction();
    if (at_implies()) {
      ++pos_;
      FormPtr rhs = form();
      return make_implies(lhs, rhs, s);
    }
    return lhs;
  }

  FormPtr disjunction() {
    Span s = cur().span;
    FormPtr lhs = conjunction();
    while (at_or()) {
      ++pos_;
      lhs = make_or(lhs, conjunction(), s);
    }
    return lhs;
  }

  FormPtr conjunction() {
    Span s = cur().span;
    FormPtr lhs = negation();
    while (at_and()) {
      ++pos_;
      lhs = make_and(lhs, negation(), s);
    }
    return lhs;
  }

  FormPtr negation() {
    Span s = cur().span;
    if (is_op("!")) {
      ++pos_;
      return make_not(negation(), s);
    }
    return atom_form();
  }

  FormPtr atom_form() {
    Span s = cur().span;
    if (is_kw("forall") || is_kw("exists")) return quantifier();
    if (is_kw("revert")) {
      ++pos_;
      return status_form(Status::Revert, s);
    }
    if (is_kw("return")) {
      ++pos_;
      return status_form(Status::Return, s);
    }
    if (is_op("(")) {
      size_t save = pos_;
      try {
        return comparison();
      } catch (const Error&) {
        pos_ = save;
      }
      expect("(");
      FormPtr inner = form();
      expect(")");
      return inner;
    }
    return comparison();
  }

  FormPtr quantifier() {
    Span s = cur().span;
    QuantKind kind = cur().text == "forall" ? QuantKind::Forall : QuantKind::Exists;
    ++pos_;
    std::vector<Binder> binders;
    do {
      if (cur().kind != Token::Ident) fail("expected binder name");
      std::string name = cur().text;
      ++pos_;
      expect(":");
      if (cur().kind != Token::Ident || !kSorts.count(cur().text))
        fail("unknown binder sort '" + cur().text + "'");
      binders.push_back({name, cur().text});
      ++pos_;
      expect(",");
    } while (cur().kind == Token::Ident && ahead(1).kind == Token::Op && ahead(1).text == ":");
    FormPtr body = form();
    return make_form(Quant{kind, std::move(binders), body}, s);
  }

  static std::optional<BinOp> comparison_op(const Token& t) {
    if (t.kind != Token::Op) return std::nullopt;
    if (t.text == "=" || t.text == "==") return BinOp::Eq;
    if (t.text == "!=") return BinOp::Ne;
    if (t.text == "<") return BinOp::Lt;
    if (t.text == "<=") return BinOp::Le;
    if (t.text == ">") return BinOp::Gt;
    if (t.text == ">=") return BinOp::Ge;
    return std::nullopt;
  }

  // e, or a comparison chain e1 op e2 op e3 desugared into a conjunction.
  FormPtr comparison() {
    Span s = cur().span;
    ExprPtr lhs = additive();
    FormPtr result;
    while (auto op = comparison_op(cur())) {
      ++pos_;
      ExprPtr rhs = additive();
      FormPtr cmp = expr_form(binary(*op, lhs, rhs, lhs->span));
      result = result ? make_and(result, cmp, s) : cmp;
      lhs = rhs;
    }
    return result ? result : expr_form(lhs);
  }

  ExprPtr additive() {
    ExprPtr lhs = multiplicative();
    while (is_op("+") || is_op("-")) {
      BinOp op = cur().text == "+" ? BinOp::Add : BinOp::Sub;
      ++pos_;
      lhs = binary(op, lhs, multiplicative(), lhs->span);
    }
    return lhs;
  }

  ExprPtr multiplicative() {
    ExprPtr lhs = unary();
    while (is_op("*") || is_op("/") || is_op("%")) {
      BinOp op = cur().text == "*" ? BinOp::Mul : cur().text == "/" ? BinOp::Div : BinOp::Mod;
      ++pos_;
      lhs = binary(op, lhs, unary(), lhs->span);
    }
    return lhs;
  }

  ExprPtr unary() {
    Span s = cur().span;
    if (is_op("-")) {
      ++pos_;
      return make_expr(Neg{unary()}, s);
    }
    return postfix(primary());
  }

  ExprPtr postfix(ExprPtr e) {
    for (;;) {
      Span s = cur().span;
      if (accept("[")) {
        ExprPtr idx = additive();
        expect("]");
        e = make_expr(Index{e, idx}, e->span);
      } else if (is_op(".") && ahead(1).kind == Token::Ident) {
        ++pos_;
        e = make_expr(Field{e, cur().text}, e->span);
        ++pos_;
      } else {
        (void)s;
        return e;
      }
    }
  }

  bool starts_atom() const {
    if (cur().kind == Token::Number) return true;
    if (cur().kind == Token::Ident)
      return !(is_kw("revert") || is_kw("return") || is_kw("forall") || is_kw("exists"));
    return false;
  }

  static ExprPtr mark_old(const ExprPtr& e) {
    return rewrite(e, [](const ExprPtr& x) -> ExprPtr {
      if (auto* id = std::get_if<Ident>(&x->node)) {
        if (id->old) return x;
        Ident copy = *id;
        copy.old = true;
        return make_expr(copy, x->span);
      }
      return x;
    });
  }

  ExprPtr primary() {
    Span s = cur().span;
    if (cur().kind == Token::Number) {
      Word w = parse_word_or_throw(cur().text, s);
      ++pos_;
      return num(w, s);
    }
    if (accept("(")) {
      ExprPtr e = additive();
      expect(")");
      return e;
    }
    if (cur().kind != Token::Ident) fail(cur().kind == Token::End ? "unexpected end of formula" : "unexpected '" + cur().text + "'");
    std::string name = cur().text;
    if (name == "revert" || name == "return" || name == "forall" || name == "exists")
      fail("'" + name + "' is reserved");
    ++pos_;
    if (name == "true") return num(1, s);
    if (name == "false") return num(0, s);
    if (name == "old") {
      if (is_op("(")) {
        ++pos_;
        ExprPtr inner = additive();
        expect(")");
        return mark_old(inner);
      }
      if (cur().kind != Token::Ident) fail("expected identifier after 'old'");
      Span is = cur().span;
      std::string target = cur().text;
      ++pos_;
      return ident(target, true, is);
    }
    if (is_op("(")) {
      ++pos_;
      std::vector<ExprPtr> args;
      if (!is_op(")")) {
        args.push_back(additive());
        while (accept(",")) args.push_back(additive());
      }
      expect(")");
      if (kCasts.count(name) && args.size() == 1) return args[0];
      return make_expr(Apply{name, std::move(args)}, s);
    }
    // ML-style application: `sorted_doubly_linked_list stakers`.
    if (starts_atom()) {
      std::vector<ExprPtr> args;
      while (starts_atom()) args.push_back(postfix(primary()));
      return make_expr(Apply{name, std::move(args)}, s);
    }
    return ident(name, false, s);
  }
};

// Replaces comment markers and leading `*` decoration with spaces so that
// columns in the cleaned text match the source.
std::string clean_comment(std::string_view text) {
  std::string out(text);
  size_t i = 0;
  bool line_start = true;
  while (i < out.size()) {
    char c = out[i];
    if (c == '\n') {
      line_start = true;
      ++i;
      continue;
    }
    if (out.compare(i, 2, "/*") == 0 || out.compare(i, 2, "*/") == 0 || out.compare(i, 2, "//") == 0) {
      out[i] = out[i + 1] = ' ';
      i += 2;
      continue;
    }
    if (line_start && c == '*') {
      out[i] = ' ';
      ++i;
      continue;
    }
    if (!std::isspace(static_cast<unsigned char>(c))) line_start = false;
    ++i;
  }
  return out;
}

std::string trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace

bool is_spec_directive(std::string_view tag) { return kSpecDirectives.count(tag) > 0; }

std::vector<DirectiveSegment> split_directives(std::string_view text, Span origin) {
  std::string cleaned = clean_comment(text);
  std::vector<DirectiveSegment> out;
  Cursor c{cleaned, 0, origin.line, origin.col};
  bool pending_coq = false;
  Span coq_span;
  DirectiveSegment* open = nullptr;
  size_t payload_begin = 0;

  auto close_open = [&](size_t end) {
    if (!open) return;
    open->payload = std::string(std::string_view(cleaned).substr(payload_begin, end - payload_begin));
    open = nullptr;
  };

  while (c.pos < cleaned.size()) {
    if (c.peek() == '@' && ident_start(c.peek(1)) &&
        (c.pos == 0 || !ident_char(cleaned[c.pos - 1]))) {
      Span at = c.span();
      size_t tag_start = c.pos;
      c.advance();
      std::string tag;
      while (c.pos < cleaned.size() && ident_char(c.peek())) {
        tag.push_back(c.peek());
        c.advance();
      }
      close_open(tag_start);
      if (tag == "coq") {
        if (pending_coq) throw Error(ErrorKind::SyntaxError, "duplicate @coq prefix", at);
        pending_coq = true;
        coq_span = at;
        continue;
      }
      bool old_prefix = false;
      if (!out.empty()) {
        // A trailing bare `old` before a directive is the prefix of that directive.
        std::string& prev = out.back().payload;
        std::string t = trim(prev);
        if (t == "old" || (t.size() > 4 && t.compare(t.size() - 3, 3, "old") == 0 &&
                           std::isspace(static_cast<unsigned char>(t[t.size() - 4])))) {
          size_t cut = prev.rfind("old");
          prev.erase(cut);
          old_prefix = true;
        }
      }
      DirectiveSegment seg;
      seg.tag = tag;
      seg.coq = pending_coq;
      seg.old_prefix = old_prefix;
      seg.span = pending_coq ? coq_span : at;
      seg.payload_span = c.span();
      pending_coq = false;
      out.push_back(seg);
      open = &out.back();
      payload_begin = c.pos;
      continue;
    }
    if (!open && !std::isspace(static_cast<unsigned char>(c.peek()))) {
      // Leading `old` before the first directive.
      if (cleaned.compare(c.pos, 3, "old") == 0 && !ident_char(c.peek(3))) {
        size_t save = c.pos;
        for (int k = 0; k < 3; ++k) c.advance();
        size_t p = c.pos;
        while (p < cleaned.size() && std::isspace(static_cast<unsigned char>(cleaned[p]))) ++p;
        if (p < cleaned.size() && cleaned[p] == '@') {
          DirectiveSegment marker;
          marker.tag = "";
          out.push_back(marker);
          out.back().payload = "old";
          continue;
        }
        (void)save;
      }
      // Free text outside any directive is not an annotation; ignore it.
    }
    c.advance();
  }
  close_open(cleaned.size());
  if (pending_coq) throw Error(ErrorKind::SyntaxError, "@coq must prefix a directive", coq_span);
  // Drop the placeholder segments used to carry a leading `old`.
  out.erase(std::remove_if(out.begin(), out.end(), [](const DirectiveSegment& s) { return s.tag.empty(); }),
            out.end());
  return out;
}

namespace {

std::string strip_payload(std::string payload, Span& span) {
  (void)span;
  std::string t = trim(payload);
  while (!t.empty() && t.back() == ';') t = trim(t.substr(0, t.size() - 1));
  return t;
}

// Removes one pair of enclosing braces `{ form }` while keeping column offsets.
std::string unbrace(const std::string& payload) {
  std::string t = payload;
  size_t b = t.find_first_not_of(" \t\r\n");
  size_t e = t.find_last_not_of(" \t\r\n;");
  if (b == std::string::npos || t[b] != '{' || t[e] != '}') return t;
  t[b] = ' ';
  t[e] = ' ';
  return t;
}

}  // namespace

FormPtr parse_form(std::string_view text, Span origin) {
  FormParser p(lex(text, origin));
  return p.parse_all();
}

SpecItem parse_directive(const DirectiveSegment& seg) {
  SpecItem item;
  item.span = seg.span;
  item.deferred = seg.coq;
  item.old_prefix = seg.old_prefix;
  const std::string& tag = seg.tag;
  if (tag == "pre") item.kind = Directive::Pre;
  else if (tag == "post") item.kind = Directive::Post;
  else if (tag == "meta") item.kind = Directive::Meta;
  else if (tag == "inv") item.kind = Directive::Inv;
  else if (tag == "assume") item.kind = Directive::Assume;
  else if (tag == "assert") item.kind = Directive::Assert;
  else if (tag == "check") item.kind = Directive::Check;
  else if (tag == "learn") item.kind = Directive::Learn;
  else throw Error(ErrorKind::UnknownDirective, "@" + tag, seg.span);

  if (seg.coq && !(item.kind == Directive::Pre || item.kind == Directive::Post || item.kind == Directive::Meta))
    throw Error(ErrorKind::IllegalDeferred, "@coq cannot prefix @" + tag, seg.span);

  Span ps = seg.payload_span;
  std::string body = unbrace(seg.payload);
  if (item.kind == Directive::Check) {
    std::string t = strip_payload(body, ps);
    if (t == "overflow") item.pattern = Pattern::Overflow;
    else if (t == "reentrancy") item.pattern = Pattern::Reentrancy;
    else if (t == "timestamp") item.pattern = Pattern::Timestamp;
    else throw Error(ErrorKind::SyntaxError, "unknown check pattern '" + t + "'", ps);
    return item;
  }
  if (item.kind == Directive::Learn) {
    auto toks = lex(body, ps);
    for (const Token& t : toks) {
      if (t.kind == Token::End) break;
      if (t.kind == Token::Op && (t.text == "," || t.text == ";")) continue;
      if (t.kind != Token::Ident) throw Error(ErrorKind::SyntaxError, "@learn expects identifiers", t.span);
      item.watched.push_back(t.text);
    }
    if (item.watched.empty()) throw Error(ErrorKind::SyntaxError, "@learn needs at least one identifier", ps);
    return item;
  }
  std::string t = body;
  size_t e = t.find_last_not_of(" \t\r\n");
  while (e != std::string::npos && t[e] == ';') {
    t[e] = ' ';
    e = t.find_last_not_of(" \t\r\n");
  }
  if (e == std::string::npos) throw Error(ErrorKind::SyntaxError, "@" + tag + " needs a formula", ps);
  item.form = parse_form(t, ps);
  return item;
}

std::vector<SpecItem> parse_annotation_block(std::string_view text, Span origin) {
  std::vector<SpecItem> out;
  for (const auto& seg : split_directives(text, origin)) out.push_back(parse_directive(seg));
  return out;
}

// ---------------------------------------------------------------- printing

namespace {

int expr_prec(const ExprPtr& e) {
  if (auto* b = std::get_if<Binary>(&e->node)) {
    if (is_comparison(b->op)) return 1;
    if (b->op == BinOp::Add || b->op == BinOp::Sub) return 2;
    return 3;
  }
  if (std::holds_alternative<Neg>(e->node)) return 4;
  if (auto* n = std::get_if<Num>(&e->node); n && sgn(n->value) < 0) return 4;
  return 5;
}

std::string print_num(const Word& w) {
  if (sgn(w) < 0) return "-" + print_num(-w);
  if (w >= 65536) return "0x" + w.get_str(16);
  return w.get_str();
}

std::string print_expr(const ExprPtr& e, int need);

std::string paren_if(const ExprPtr& e, int need) {
  std::string s = print_expr(e, 0);
  return expr_prec(e) < need ? "(" + s + ")" : s;
}

std::string print_args(const std::vector<ExprPtr>& args) {
  std::string out;
  for (size_t i = 0; i < args.size(); ++i) {
    if (i) out += ", ";
    out += print_expr(args[i], 0);
  }
  return out;
}

std::string print_expr(const ExprPtr& e, int) {
  return std::visit(
      [&](const auto& n) -> std::string {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Num>) {
          return print_num(n.value);
        } else if constexpr (std::is_same_v<T, Ident>) {
          return n.old ? "old " + n.name : n.name;
        } else if constexpr (std::is_same_v<T, Index>) {
          return paren_if(n.base, 5) + "[" + print_expr(n.index, 0) + "]";
        } else if constexpr (std::is_same_v<T, Field>) {
          return paren_if(n.base, 5) + "." + n.name;
        } else if constexpr (std::is_same_v<T, Neg>) {
          return "-" + paren_if(n.operand, 4);
        } else if constexpr (std::is_same_v<T, Binary>) {
          int p = expr_prec(e);
          int lneed = p == 1 ? 2 : p;
          int rneed = p == 1 ? 2 : p + 1;
          return paren_if(n.lhs, lneed) + " " + std::string(to_string(n.op)) + " " + paren_if(n.rhs, rneed);
        } else if constexpr (std::is_same_v<T, Apply>) {
          return n.fn + "(" + print_args(n.args) + ")";
        } else if constexpr (std::is_same_v<T, Accessor>) {
          std::string prefix = n.old ? "old " : "";
          if (n.kind == AccessorKind::Meta) return prefix + "array_length(arr_" + hex_slot(n.slot) + ")";
          switch (n.state) {
            case StateKind::Scalar: return prefix + "sload(" + hex_slot(n.slot) + ")";
            case StateKind::Mapping:
              if (n.args.empty()) return prefix + "map_" + hex_slot(n.slot);
              return prefix + "map_get(map_" + hex_slot(n.slot) + ", " + print_args(n.args) + ")";
            case StateKind::DynArray:
              if (n.args.empty()) return prefix + "arr_" + hex_slot(n.slot);
              return prefix + "array_get(arr_" + hex_slot(n.slot) + ", " + print_args(n.args) + ")";
          }
          return "?";
        } else {
          return std::string(to_string(n.var));
        }
      },
      e->node);
}

int form_prec(const FormPtr& f) {
  return std::visit(
      [](const auto& n) -> int {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Implies>) return 1;
        else if constexpr (std::is_same_v<T, Or>) return 2;
        else if constexpr (std::is_same_v<T, And>) return 3;
        else if constexpr (std::is_same_v<T, Not>) return 4;
        else if constexpr (std::is_same_v<T, Quant>) return 0;
        else return 5;
      },
      f->node);
}

std::string print_form(const FormPtr& f);

std::string fparen(const FormPtr& f, int need) {
  std::string s = print_form(f);
  return form_prec(f) < need ? "(" + s + ")" : s;
}

std::string print_form(const FormPtr& f) {
  return std::visit(
      [&](const auto& n) -> std::string {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, ExprForm>) {
          // A bare parenthesised expression that would otherwise be read as a form.
          return print_expr(n.expr, 0);
        } else if constexpr (std::is_same_v<T, StatusForm>) {
          return n.status == Status::Revert ? "revert" : "return";
        } else if constexpr (std::is_same_v<T, Not>) {
          return "!" + fparen(n.operand, 4);
        } else if constexpr (std::is_same_v<T, Implies>) {
          return fparen(n.lhs, 2) + " -> " + fparen(n.rhs, 1);
        } else if constexpr (std::is_same_v<T, Or>) {
          return fparen(n.lhs, 2) + " \\/ " + fparen(n.rhs, 3);
        } else if constexpr (std::is_same_v<T, And>) {
          return fparen(n.lhs, 3) + " /\\ " + fparen(n.rhs, 4);
        } else {
          std::string out = n.kind == QuantKind::Forall ? "forall " : "exists ";
          for (const auto& b : n.binders) out += b.name + ": " + b.sort + ", ";
          return out + print_form(n.body);
        }
      },
      f->node);
}

}  // namespace

std::string print(const ExprPtr& e) { return print_expr(e, 0); }
std::string print(const FormPtr& f) { return print_form(f); }

std::string print(const SpecItem& item) {
  std::string out;
  if (item.deferred) out += "@coq ";
  if (item.old_prefix) out += "old ";
  out += "@" + std::string(to_string(item.kind));
  if (item.kind == Directive::Check) return out + " " + std::string(to_string(item.pattern));
  if (item.kind == Directive::Learn) {
    for (const auto& w : item.watched) out += " " + w;
    return out;
  }
  if (item.form) out += " " + print(item.form);
  return out;
}

// ---------------------------------------------------------------- equality

bool equal(const ExprPtr& a, const ExprPtr& b) {
  if (!a || !b) return a == b;
  if (a->node.index() != b->node.index()) return false;
  return std::visit(
      [&](const auto& x) -> bool {
        using T = std::decay_t<decltype(x)>;
        const T& y = std::get<T>(b->node);
        if constexpr (std::is_same_v<T, Num>) {
          return x.value == y.value;
        } else if constexpr (std::is_same_v<T, Ident>) {
          return x.name == y.name && x.old == y.old && x.binding == y.binding;
        } else if constexpr (std::is_same_v<T, Index>) {
          return equal(x.base, y.base) && equal(x.index, y.index);
        } else if constexpr (std::is_same_v<T, Field>) {
          return x.name == y.name && equal(x.base, y.base);
        } else if constexpr (std::is_same_v<T, Neg>) {
          return equal(x.operand, y.operand);
        } else if constexpr (std::is_same_v<T, Binary>) {
          return x.op == y.op && equal(x.lhs, y.lhs) && equal(x.rhs, y.rhs);
        } else if constexpr (std::is_same_v<T, Apply>) {
          if (x.fn != y.fn || x.args.size() != y.args.size()) return false;
          for (size_t i = 0; i < x.args.size(); ++i)
            if (!equal(x.args[i], y.args[i])) return false;
          return true;
        } else if constexpr (std::is_same_v<T, Accessor>) {
          if (x.kind != y.kind || x.state != y.state || x.slot != y.slot || x.old != y.old ||
              x.args.size() != y.args.size())
            return false;
          for (size_t i = 0; i < x.args.size(); ++i)
            if (!equal(x.args[i], y.args[i])) return false;
          return true;
        } else {
          return x.var == y.var;
        }
      },
      a->node);
}

bool equal(const FormPtr& a, const FormPtr& b) {
  if (!a || !b) return a == b;
  if (a->node.index() != b->node.index()) return false;
  return std::visit(
      [&](const auto& x) -> bool {
        using T = std::decay_t<decltype(x)>;
        const T& y = std::get<T>(b->node);
        if constexpr (std::is_same_v<T, ExprForm>) {
          return equal(x.expr, y.expr);
        } else if constexpr (std::is_same_v<T, StatusForm>) {
          return x.status == y.status;
        } else if constexpr (std::is_same_v<T, Not>) {
          return equal(x.operand, y.operand);
        } else if constexpr (std::is_same_v<T, Quant>) {
          if (x.kind != y.kind || x.binders.size() != y.binders.size()) return false;
          for (size_t i = 0; i < x.binders.size(); ++i)
            if (x.binders[i].name != y.binders[i].name || x.binders[i].sort != y.binders[i].sort)
              return false;
          return equal(x.body, y.body);
        } else {
          return equal(x.lhs, y.lhs) && equal(x.rhs, y.rhs);
        }
      },
      a->node);
}

bool equal(const SpecItem& a, const SpecItem& b) {
  if (a.kind != b.kind || a.deferred != b.deferred || a.old_prefix != b.old_prefix) return false;
  if (a.kind == Directive::Check) return a.pattern == b.pattern;
  if (a.kind == Directive::Learn) return a.watched == b.watched;
  return equal(a.form, b.form);
}

// ---------------------------------------------------------------- traversal

ExprPtr rewrite(const ExprPtr& e, const std::function<ExprPtr(const ExprPtr&)>& fn) {
  ExprPtr rebuilt = std::visit(
      [&](const auto& n) -> ExprPtr {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Index>) {
          return make_expr(Index{rewrite(n.base, fn), rewrite(n.index, fn)}, e->span);
        } else if constexpr (std::is_same_v<T, Field>) {
          return make_expr(Field{rewrite(n.base, fn), n.name}, e->span);
        } else if constexpr (std::is_same_v<T, Neg>) {
          return make_expr(Neg{rewrite(n.operand, fn)}, e->span);
        } else if constexpr (std::is_same_v<T, Binary>) {
          return make_expr(Binary{n.op, rewrite(n.lhs, fn), rewrite(n.rhs, fn)}, e->span);
        } else if constexpr (std::is_same_v<T, Apply>) {
          Apply a{n.fn, {}};
          for (const auto& x : n.args) a.args.push_back(rewrite(x, fn));
          return make_expr(std::move(a), e->span);
        } else if constexpr (std::is_same_v<T, Accessor>) {
          Accessor a = n;
          for (auto& x : a.args) x = rewrite(x, fn);
          return make_expr(std::move(a), e->span);
        } else {
          return e;
        }
      },
      e->node);
  return fn(rebuilt);
}

FormPtr rewrite_exprs(const FormPtr& f, const std::function<ExprPtr(const ExprPtr&)>& fn) {
  return std::visit(
      [&](const auto& n) -> FormPtr {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, ExprForm>) {
          return make_form(ExprForm{rewrite(n.expr, fn)}, f->span);
        } else if constexpr (std::is_same_v<T, StatusForm>) {
          return f;
        } else if constexpr (std::is_same_v<T, Not>) {
          return make_form(Not{rewrite_exprs(n.operand, fn)}, f->span);
        } else if constexpr (std::is_same_v<T, Quant>) {
          return make_form(Quant{n.kind, n.binders, rewrite_exprs(n.body, fn)}, f->span);
        } else {
          return make_form(T{rewrite_exprs(n.lhs, fn), rewrite_exprs(n.rhs, fn)}, f->span);
        }
      },
      f->node);
}

void visit_expr(const ExprPtr& e, const std::function<void(const Expr&)>& fn) {
  fn(*e);
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Index>) {
          visit_expr(n.base, fn);
          visit_expr(n.index, fn);
        } else if constexpr (std::is_same_v<T, Field>) {
          visit_expr(n.base, fn);
        } else if constexpr (std::is_same_v<T, Neg>) {
          visit_expr(n.operand, fn);
        } else if constexpr (std::is_same_v<T, Binary>) {
          visit_expr(n.lhs, fn);
          visit_expr(n.rhs, fn);
        } else if constexpr (std::is_same_v<T, Apply> || std::is_same_v<T, Accessor>) {
          for (const auto& x : n.args) visit_expr(x, fn);
        }
      },
      e->node);
}

void visit_exprs(const FormPtr& f, const std::function<void(const Expr&)>& fn) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, ExprForm>) {
          visit_expr(n.expr, fn);
        } else if constexpr (std::is_same_v<T, Not>) {
          visit_exprs(n.operand, fn);
        } else if constexpr (std::is_same_v<T, Quant>) {
          visit_exprs(n.body, fn);
        } else if constexpr (!std::is_same_v<T, StatusForm>) {
          visit_exprs(n.lhs, fn);
          visit_exprs(n.rhs, fn);
        }
      },
      f->node);
}

bool mentions_env(const FormPtr& f, EnvVar var) {
  bool found = false;
  visit_exprs(f, [&](const Expr& e) {
    if (auto* r = std::get_if<EnvRef>(&e.node); r && r->var == var) found = true;
    if (auto* fld = std::get_if<Field>(&e.node)) {
      if (auto* base = std::get_if<Ident>(&fld->base->node); base && base->name == "msg" &&
                                                             fld->name == "sender" && var == EnvVar::Caller)
        found = true;
    }
  });
  return found;
}

bool mentions_status(const FormPtr& f) {
  return std::visit(
      [&](const auto& n) -> bool {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, StatusForm>) return true;
        else if constexpr (std::is_same_v<T, ExprForm>) return false;
        else if constexpr (std::is_same_v<T, Not>) return mentions_status(n.operand);
        else if constexpr (std::is_same_v<T, Quant>) return mentions_status(n.body);
        else return mentions_status(n.lhs) || mentions_status(n.rhs);
      },
      f->node);
}

// ---------------------------------------------------------------- resolution

namespace {

const std::set<std::string, std::less<>> kEnvNames = {"msg", "block", "tx", "this"};

struct Resolver {
  const Scope& scope;
  Directive kind;
  bool old_prefix;
  std::vector<std::set<std::string>> binders;

  bool bound_by_quant(const std::string& n) const {
    for (const auto& s : binders)
      if (s.count(n)) return true;
    return false;
  }

  ExprPtr expr(const ExprPtr& e) {
    return std::visit(
        [&](const auto& n) -> ExprPtr {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, Ident>) {
            Ident id = n;
            if (bound_by_quant(id.name)) id.binding = Binding::Binder;
            else if (id.name == "result") id.binding = Binding::Result;
            else if (scope.locals.count(id.name)) id.binding = Binding::Local;
            else if (scope.params.count(id.name)) id.binding = Binding::Param;
            else if (scope.state.count(id.name)) id.binding = Binding::State;
            else if (kEnvNames.count(id.name)) id.binding = Binding::Env;
            else if (scope.symbols.count(id.name)) id.binding = Binding::Symbol;
            else throw Error(ErrorKind::UnboundIdentifier, "'" + id.name + "'", e->span);

            if (id.binding == Binding::Result) {
              if (kind != Directive::Post) throw Error(ErrorKind::ResultOutsidePost, "'result'", e->span);
              if (!scope.has_result)
                throw Error(ErrorKind::UnboundIdentifier, "'result' in a function without return value", e->span);
            }
            bool stateful = id.binding == Binding::State || id.binding == Binding::Param;
            if (old_prefix && stateful) id.old = true;
            if (id.old) {
              if (kind == Directive::Pre || kind == Directive::Meta)
                throw Error(ErrorKind::OldOutsidePost, "'old " + id.name + "'", e->span);
              if (!stateful)
                throw Error(ErrorKind::UnboundIdentifier,
                            "'old' applies only to state variables and parameters, not '" + id.name + "'", e->span);
            }
            return make_expr(id, e->span);
          } else if constexpr (std::is_same_v<T, Apply>) {
            if (!scope.symbols.count(n.fn)) throw Error(ErrorKind::UnboundIdentifier, "'" + n.fn + "'", e->span);
            Apply a{n.fn, {}};
            for (const auto& x : n.args) a.args.push_back(expr(x));
            return make_expr(std::move(a), e->span);
          } else if constexpr (std::is_same_v<T, Index>) {
            return make_expr(Index{expr(n.base), expr(n.index)}, e->span);
          } else if constexpr (std::is_same_v<T, Field>) {
            return make_expr(Field{expr(n.base), n.name}, e->span);
          } else if constexpr (std::is_same_v<T, Neg>) {
            return make_expr(Neg{expr(n.operand)}, e->span);
          } else if constexpr (std::is_same_v<T, Binary>) {
            return make_expr(Binary{n.op, expr(n.lhs), expr(n.rhs)}, e->span);
          } else if constexpr (std::is_same_v<T, Accessor>) {
            Accessor a = n;
            for (auto& x : a.args) x = expr(x);
            return make_expr(std::move(a), e->span);
          } else {
            return e;
          }
        },
        e->node);
  }

  FormPtr form(const FormPtr& f) {
    return std::visit(
        [&](const auto& n) -> FormPtr {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, ExprForm>) {
            return make_form(ExprForm{expr(n.expr)}, f->span);
          } else if constexpr (std::is_same_v<T, StatusForm>) {
            return f;
          } else if constexpr (std::is_same_v<T, Not>) {
            return make_form(Not{form(n.operand)}, f->span);
          } else if constexpr (std::is_same_v<T, Quant>) {
            if (n.binders.empty()) throw Error(ErrorKind::SyntaxError, "quantifier without binders", f->span);
            std::set<std::string> names;
            for (const auto& b : n.binders) names.insert(b.name);
            binders.push_back(names);
            FormPtr body = form(n.body);
            binders.pop_back();
            return make_form(Quant{n.kind, n.binders, body}, f->span);
          } else {
            return make_form(T{form(n.lhs), form(n.rhs)}, f->span);
          }
        },
        f->node);
  }
};

}  // namespace

SpecItem resolve_identifiers(const SpecItem& item, const Scope& scope) {
  SpecItem out = item;
  if (item.kind == Directive::Learn) {
    for (const auto& w : item.watched)
      if (!scope.locals.count(w) && !scope.params.count(w))
        throw Error(ErrorKind::UnboundIdentifier, "@learn variable '" + w + "'", item.span);
    return out;
  }
  if (!item.form) return out;
  if (item.old_prefix && (item.kind == Directive::Pre || item.kind == Directive::Meta))
    throw Error(ErrorKind::OldOutsidePost, "'old' prefix on @" + std::string(to_string(item.kind)), item.span);
  Resolver r{scope, item.kind, item.old_prefix, {}};
  out.form = r.form(item.form);
  return out;
}

}  // namespace yulverify::spec
