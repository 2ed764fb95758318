#include "refine/parser.hpp"

#include "refine/typing.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <map>
#include <optional>
#include <vector>

namespace refine {

ParseError::ParseError(std::string code_, const std::string& msg, int line_, int col_)
    : std::runtime_error(std::to_string(line_) + ":" + std::to_string(col_) + ": " + code_ + ": " + msg),
      code(std::move(code_)),
      line(line_),
      col(col_) {}

namespace {

enum class Tok { Ident, Int, Punct, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  int line = 1;
  int col = 1;
};

// Longest-match punctuation table. Unicode notation maps onto ASCII spellings.
const std::vector<std::pair<std::string, std::string>>& punctuation() {
  static const std::vector<std::pair<std::string, std::string>> table = {
      {"\xE2\x86\xA6", "|->"}, {"\xE2\x88\x97", "**"},  {"\xE2\x88\xA7", "&&"},  {"\xE2\x88\xA8", "||"},
      {"\xC2\xAC", "!"},       {"\xE2\x87\x92", "==>"}, {"\xE2\x89\xA4", "<="},  {"\xE2\x89\xA5", ">="},
      {"\xE2\x89\xA0", "!="},  {"|->", "|->"},          {"--*", "--*"},          {"==>", "==>"},
      {"**", "**"},            {"&&", "&&"},            {"||", "||"},            {":=", ":="},
      {"==", "=="},            {"!=", "!="},            {"<=", "<="},            {">=", ">="},
      {"++", "++"},            {"(", "("},              {")", ")"},              {"{", "{"},
      {"}", "}"},              {"[", "["},              {"]", "]"},              {",", ","},
      {";", ";"},              {":", ":"},              {".", "."},              {"=", "=="},
      {"<", "<"},              {">", ">"},              {"+", "+"},              {"-", "-"},
      {"*", "*"},              {"/", "/"},              {"!", "!"},
  };
  return table;
}

std::vector<Token> lex(const std::string& text) {
  std::vector<Token> out;
  std::size_t i = 0;
  int line = 1;
  int col = 1;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else if ((static_cast<unsigned char>(text[i]) & 0xC0) != 0x80) {
        ++col;
      }
      ++i;
    }
  };
  while (i < text.size()) {
    char ch = text[i];
    if (std::isspace(static_cast<unsigned char>(ch))) {
      advance(1);
      continue;
    }
    if (ch == '/' && i + 1 < text.size() && text[i + 1] == '/') {
      while (i < text.size() && text[i] != '\n') advance(1);
      continue;
    }
    Token t;
    t.line = line;
    t.col = col;
    if (std::isalpha(static_cast<unsigned char>(ch)) || ch == '_') {
      std::size_t j = i;
      while (j < text.size() && (std::isalnum(static_cast<unsigned char>(text[j])) || text[j] == '_')) ++j;
      while (j < text.size() && text[j] == '\'') ++j;
      t.kind = Tok::Ident;
      t.text = text.substr(i, j - i);
      advance(j - i);
      out.push_back(t);
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(ch))) {
      std::size_t j = i;
      while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
      t.kind = Tok::Int;
      t.text = text.substr(i, j - i);
      advance(j - i);
      out.push_back(t);
      continue;
    }
    bool matched = false;
    for (const auto& [spelling, canon] : punctuation()) {
      if (text.compare(i, spelling.size(), spelling) == 0) {
        t.kind = Tok::Punct;
        t.text = canon;
        advance(spelling.size());
        out.push_back(t);
        matched = true;
        break;
      }
    }
    if (!matched) throw ParseError("SyntaxError", std::string("unexpected character '") + ch + "'", line, col);
  }
  Token end;
  end.kind = Tok::End;
  end.line = line;
  end.col = col;
  out.push_back(end);
  return out;
}

const std::set<std::string>& keywords() {
  static const std::set<std::string> kw = {
      "skip", "if",    "else",   "while", "inv",    "par",     "lock",   "with",   "when",  "init",
      "next", "print", "new",    "free",  "ghost",  "requires", "ensures", "true",  "false", "emp",
      "exists", "forall", "len", "addr",  "acc",    "alloc",   "apt",    "bigsep", "vars",  "within",
  };
  return kw;
}

std::optional<Type> type_from_name(const std::string& s) {
  if (s == "int") return Type::Int;
  if (s == "bool") return Type::Bool;
  if (s == "seq") return Type::Seq;
  if (s == "addr") return Type::Addr;
  return std::nullopt;
}

class Parser {
 public:
  Parser(const std::string& text, ParseContext ctx) : toks_(lex(text)), ctx_(std::move(ctx)) {}

  // ---- token helpers ------------------------------------------------------

  const Token& peek(std::size_t ahead = 0) const {
    std::size_t k = std::min(pos_ + ahead, toks_.size() - 1);
    return toks_[k];
  }
  bool is(const std::string& punct, std::size_t ahead = 0) const {
    const Token& t = peek(ahead);
    return t.kind == Tok::Punct && t.text == punct;
  }
  bool is_kw(const std::string& kw, std::size_t ahead = 0) const {
    const Token& t = peek(ahead);
    return t.kind == Tok::Ident && t.text == kw;
  }
  bool at_end() const { return peek().kind == Tok::End; }
  const Token& next() {
    const Token& t = toks_[pos_];
    if (pos_ + 1 < toks_.size()) ++pos_;
    return t;
  }
  [[noreturn]] void fail(const std::string& code, const std::string& msg, const Token& at) const {
    throw ParseError(code, msg, at.line, at.col);
  }
  [[noreturn]] void fail(const std::string& msg) const { fail("SyntaxError", msg, peek()); }
  void expect(const std::string& punct) {
    if (!is(punct)) fail("expected '" + punct + "' but found '" + describe(peek()) + "'");
    next();
  }
  void expect_kw(const std::string& kw) {
    if (!is_kw(kw)) fail("expected '" + kw + "' but found '" + describe(peek()) + "'");
    next();
  }
  static std::string describe(const Token& t) { return t.kind == Tok::End ? "end of input" : t.text; }
  std::string ident(const std::string& what) {
    const Token& t = peek();
    if (t.kind != Tok::Ident || keywords().count(t.text)) fail("expected " + what + " but found '" + describe(t) + "'");
    next();
    return t.text;
  }
  SourcePos here() const { return SourcePos{peek().line, peek().col}; }
  void finish() {
    if (!at_end()) fail("unexpected '" + describe(peek()) + "'");
  }

  ParseContext& ctx() { return ctx_; }
  std::size_t position() const { return pos_; }
  void rewind(std::size_t p) { pos_ = p; }

  // ---- expressions --------------------------------------------------------

  ExprPtr name_ref(const Token& t) {
    if (ctx_.ghosts.count(t.text)) return e_ghost(t.text);
    if (on_ident_) on_ident_(t);
    return e_var(t.text);
  }

  ExprPtr expr() { return expr_implies(); }

  ExprPtr expr_implies() {
    ExprPtr l = expr_or();
    if (is("==>")) {
      next();
      return e_binary(Op::Implies, l, expr_implies());
    }
    return l;
  }
  ExprPtr expr_or() {
    ExprPtr l = expr_and();
    while (is("||")) {
      next();
      l = e_binary(Op::Or, l, expr_and());
    }
    return l;
  }
  ExprPtr expr_and() {
    ExprPtr l = expr_cmp();
    while (is("&&")) {
      next();
      l = e_binary(Op::And, l, expr_cmp());
    }
    return l;
  }
  std::optional<Op> cmp_op() const {
    static const std::map<std::string, Op> ops = {{"==", Op::Eq}, {"!=", Op::Ne}, {"<", Op::Lt},
                                                  {"<=", Op::Le}, {">", Op::Gt},  {">=", Op::Ge}};
    if (peek().kind != Tok::Punct) return std::nullopt;
    auto it = ops.find(peek().text);
    if (it == ops.end()) return std::nullopt;
    return it->second;
  }
  ExprPtr expr_cmp() { return cmp_tail(expr_app()); }
  ExprPtr cmp_tail(ExprPtr l) {
    if (auto op = cmp_op()) {
      next();
      ExprPtr r = expr_app();
      if (cmp_op()) fail("comparison operators do not associate; add parentheses");
      return e_binary(*op, l, r);
    }
    return l;
  }
  ExprPtr expr_app() {
    ExprPtr l = expr_cat();
    if (is(":")) {
      next();
      return e_binary(Op::Append, l, expr_app());
    }
    return l;
  }
  ExprPtr expr_cat() {
    ExprPtr l = expr_add();
    while (is("++")) {
      next();
      l = e_binary(Op::Concat, l, expr_add());
    }
    return l;
  }
  ExprPtr expr_add() {
    ExprPtr l = expr_mul();
    while (is("+") || is("-")) {
      Op op = is("+") ? Op::Add : Op::Sub;
      next();
      l = e_binary(op, l, expr_mul());
    }
    return l;
  }
  ExprPtr expr_mul() {
    ExprPtr l = expr_unary();
    while (is("*")) {
      next();
      l = e_binary(Op::Mul, l, expr_unary());
    }
    return l;
  }
  ExprPtr expr_unary() {
    if (is("-")) {
      next();
      if (peek().kind == Tok::Int && !is("[", 1)) {
        const Token& t = next();
        return e_int(-parse_int(t));
      }
      return e_unary(Op::Neg, expr_unary());
    }
    if (is("!")) {
      next();
      return e_unary(Op::Not, expr_unary());
    }
    return expr_postfix();
  }
  ExprPtr expr_postfix() {
    ExprPtr e = expr_primary();
    while (is("[")) {
      next();
      ExprPtr idx = expr();
      expect("]");
      e = e_binary(Op::Index, e, idx);
    }
    return e;
  }
  std::int64_t parse_int(const Token& t) const {
    try {
      return std::stoll(t.text);
    } catch (const std::exception&) {
      fail("SyntaxError", "integer literal out of range", t);
    }
  }
  ExprPtr expr_primary() {
    const Token& t = peek();
    if (t.kind == Tok::Int) {
      next();
      return e_int(parse_int(t));
    }
    if (is("(")) {
      next();
      ExprPtr e = expr();
      expect(")");
      return e;
    }
    if (is("[")) {
      next();
      std::vector<ExprPtr> items;
      if (!is("]")) {
        items.push_back(expr());
        while (is(",")) {
          next();
          items.push_back(expr());
        }
      }
      expect("]");
      return e_seq(std::move(items));
    }
    if (t.kind == Tok::Ident) {
      if (t.text == "true" || t.text == "false") {
        next();
        return e_bool(t.text == "true");
      }
      if (t.text == "len") {
        next();
        expect("(");
        ExprPtr e = expr();
        expect(")");
        return e_unary(Op::Len, e);
      }
      if (t.text == "addr") {
        next();
        expect("(");
        const Token& n = peek();
        if (n.kind != Tok::Int) fail("expected address index");
        next();
        expect(")");
        return e_const(Value::address(Address::ordinary(parse_int(n))));
      }
      if (keywords().count(t.text)) fail("unexpected keyword '" + t.text + "'");
      next();
      return name_ref(t);
    }
    fail("expected expression but found '" + describe(t) + "'");
  }

  // ---- assertions ---------------------------------------------------------

  AssertionPtr assertion() { return a_implies_level(); }

  AssertionPtr a_implies_level() {
    AssertionPtr l = a_or_level();
    if (is("==>")) {
      next();
      return a_implies(l, a_implies_level());
    }
    return l;
  }
  AssertionPtr a_or_level() {
    AssertionPtr l = a_and_level();
    while (is("||")) {
      next();
      l = a_or(l, a_and_level());
    }
    return l;
  }
  AssertionPtr a_and_level() {
    AssertionPtr l = a_wand_level();
    while (is("&&")) {
      next();
      l = a_and(l, a_wand_level());
    }
    return l;
  }
  AssertionPtr a_wand_level() {
    AssertionPtr l = a_sep_level();
    if (is("--*")) {
      next();
      return a_wand(l, a_wand_level());
    }
    return l;
  }
  AssertionPtr a_sep_level() {
    AssertionPtr l = a_unary();
    while (is("**")) {
      next();
      l = a_sep(l, a_unary());
    }
    return l;
  }
  AssertionPtr a_unary() {
    if (is("!")) {
      next();
      return a_not(a_unary());
    }
    return a_atom();
  }

  Perm perm_literal() {
    const Token& t = peek();
    if (t.kind != Tok::Int) fail("expected permission literal");
    next();
    std::int64_t num = parse_int(t);
    std::int64_t den = 1;
    if (is("/")) {
      next();
      const Token& d = peek();
      if (d.kind != Tok::Int) fail("expected permission denominator");
      next();
      den = parse_int(d);
      if (den == 0) fail("SyntaxError", "zero denominator", d);
    }
    Perm p(num, den);
    if (p <= Perm(0) || p > Perm(1)) fail("SyntaxError", "permission must lie in (0, 1]", t);
    return p;
  }

  std::string fresh_wild() { return "_w" + std::to_string(++wild_); }

  ExprPtr value_or_wild(std::optional<std::string>* wild) {
    if (is_kw("_")) {
      next();
      *wild = fresh_wild();
      return e_var(**wild);
    }
    return expr_app();
  }

  // `[n]` or `[n/m]` after the arrow is a permission when a value follows it;
  // otherwise it is a sequence literal value.
  bool permission_follows() const {
    if (!is("[") || peek(1).kind != Tok::Int) return false;
    std::size_t close = is("/", 2) ? 4 : 2;
    if (close == 4 && peek(3).kind != Tok::Int) return false;
    if (!is("]", close)) return false;
    const Token& after = peek(close + 1);
    if (after.kind == Tok::Ident || after.kind == Tok::Int) return true;
    return after.kind == Tok::Punct && (after.text == "(" || after.text == "[" || after.text == "-");
  }

  AssertionPtr points_to_tail(ExprPtr addr) {
    expect("|->");
    Perm p{1};
    if (permission_follows()) {
      next();
      p = perm_literal();
      expect("]");
    }
    std::optional<std::string> wild;
    ExprPtr val = value_or_wild(&wild);
    AssertionPtr a = a_pts(addr, p, val);
    return wild ? a_exists(*wild, a) : a;
  }

  Type binder_type() {
    if (!is(":")) return Type::Unknown;
    next();
    const Token& t = peek();
    auto ty = t.kind == Tok::Ident ? type_from_name(t.text) : std::nullopt;
    if (!ty) fail("expected type name");
    next();
    return *ty;
  }

  AssertionPtr quantifier(bool exists) {
    next();
    std::vector<std::pair<std::string, Type>> binders;
    do {
      if (!binders.empty()) next();
      std::string v = ident("bound variable");
      binders.emplace_back(v, binder_type());
    } while (is(","));
    expect(".");
    for (const auto& b : binders) bound_.push_back(b.first);
    AssertionPtr body = assertion();
    for (std::size_t i = 0; i < binders.size(); ++i) bound_.pop_back();
    for (auto it = binders.rbegin(); it != binders.rend(); ++it) {
      body = exists ? a_exists(it->first, body, it->second) : a_forall(it->first, body, it->second);
    }
    return body;
  }

  bool expression_operator_follows() const {
    static const std::set<std::string> ops = {"+", "-", "*", "++", ":", "==", "!=", "<", "<=", ">", ">=", "|->", "["};
    return peek().kind == Tok::Punct && ops.count(peek().text);
  }

  AssertionPtr a_atom() {
    const Token& t = peek();
    if (t.kind == Tok::Ident) {
      if (t.text == "emp") {
        next();
        return a_emp();
      }
      if (t.text == "exists" || t.text == "forall") return quantifier(t.text == "exists");
      if (t.text == "acc" || t.text == "alloc" || t.text == "apt") {
        bool apt = t.text == "apt";
        next();
        expect("(");
        ExprPtr addr = expr_app();
        Perm p{1};
        if (is(",")) {
          next();
          p = perm_literal();
        }
        if (apt) {
          expect(",");
          std::optional<std::string> wild;
          ExprPtr val = value_or_wild(&wild);
          expect(")");
          AssertionPtr a = a_apt(addr, p, val);
          return wild ? a_exists(*wild, a) : a;
        }
        expect(")");
        return a_acc(addr, p);
      }
      if (t.text == "bigsep") {
        next();
        expect("(");
        std::vector<AssertionPtr> parts;
        if (!is(")")) {
          parts.push_back(assertion());
          while (is(",")) {
            next();
            parts.push_back(assertion());
          }
        }
        expect(")");
        return a_iter_sep(std::move(parts));
      }
    }
    if (is("(")) {
      std::size_t save = pos_;
      try {
        next();
        AssertionPtr inner = assertion();
        expect(")");
        if (!expression_operator_follows()) return inner;
      } catch (const ParseError&) {
      }
      rewind(save);
    }
    ExprPtr e = expr_app();
    if (is("|->")) return points_to_tail(e);
    return a_pure(cmp_tail(e));
  }

  // ---- commands -----------------------------------------------------------

  CommandPtr block() {
    expect("{");
    CommandPtr body = statements("}");
    expect("}");
    return body;
  }

  CommandPtr statements(const std::string& terminator) {
    std::vector<CommandPtr> items;
    while (!at_end() && !is(terminator)) {
      items.push_back(statement());
      if (is(";")) {
        next();
        continue;
      }
      if (!at_end() && !is(terminator)) fail("expected ';' between statements but found '" + describe(peek()) + "'");
    }
    if (items.empty()) return c_skip();
    CommandPtr acc = items.back();
    for (std::size_t i = items.size() - 1; i-- > 0;) {
      acc = with_pos(c_seq(items[i], acc), items[i]->pos);
    }
    return acc;
  }

  std::string stack_target(const Token& t) {
    if (ctx_.ghosts.count(t.text)) {
      fail("SyntaxError", "ghost variable '" + t.text + "' can only be assigned with 'ghost'", t);
    }
    return t.text;
  }

  CommandPtr statement() {
    SourcePos pos = here();
    const Token& t = peek();
    if (is("{")) return block();
    if (t.kind == Tok::Ident) {
      const std::string& kw = t.text;
      if (kw == "skip") {
        next();
        return with_pos(c_skip(), pos);
      }
      if (kw == "within") fail("InternalFormInSource", "'within' is an internal form and cannot appear in source", t);
      if (kw == "if") {
        next();
        ExprPtr cond = expr();
        CommandPtr a = block();
        CommandPtr b = c_skip();
        if (is_kw("else")) {
          next();
          b = is_kw("if") ? statement() : block();
        }
        return with_pos(c_ite(cond, a, b), pos);
      }
      if (kw == "while") {
        next();
        ExprPtr cond = expr();
        AssertionPtr inv;
        if (is_kw("inv")) {
          next();
          inv = assertion();
        }
        return with_pos(c_while(cond, block(), inv), pos);
      }
      if (kw == "par") {
        next();
        CommandPtr a = block();
        CommandPtr b = block();
        return with_pos(c_par(a, b), pos);
      }
      if (kw == "lock") {
        next();
        const Token& lt = peek();
        std::string lock = ident("lock name");
        if (ctx_.ghosts.count(lock)) fail("SyntaxError", "lock name clashes with a ghost variable", lt);
        AssertionPtr inv;
        if (is_kw("inv")) {
          next();
          inv = assertion();
        }
        locks_.push_back(lock);
        CommandPtr body = block();
        locks_.pop_back();
        return with_pos(c_lock(lock, body, inv), pos);
      }
      if (kw == "with") {
        next();
        const Token& lt = peek();
        std::string lock = ident("lock name");
        if (!ctx_.allow_free_locks && std::find(locks_.begin(), locks_.end(), lock) == locks_.end()) {
          fail("UnknownIdentifier", "lock '" + lock + "' is not declared by an enclosing 'lock'", lt);
        }
        ExprPtr cond = e_bool(true);
        if (is_kw("when")) {
          next();
          cond = expr();
        }
        return with_pos(c_with(lock, cond, block()), pos);
      }
      if (kw == "init") {
        next();
        AssertionPtr inv;
        if (is_kw("inv")) {
          next();
          inv = assertion();
        }
        return with_pos(c_init(block(), inv), pos);
      }
      if (kw == "next") {
        next();
        return with_pos(c_next(block()), pos);
      }
      if (kw == "print") {
        next();
        expect("(");
        ExprPtr e = expr();
        expect(")");
        return with_pos(c_print(e), pos);
      }
      if (kw == "free") {
        next();
        expect("(");
        ExprPtr e = expr();
        expect(")");
        return with_pos(c_free(e), pos);
      }
      if (kw == "new") {
        next();
        expect("(");
        const Token& xt = peek();
        std::string x = stack_target(xt);
        ident("variable");
        expect(",");
        ExprPtr e = expr();
        expect(")");
        return with_pos(c_alloc(x, e), pos);
      }
      if (kw == "ghost") {
        next();
        const Token& gt = peek();
        std::string g = ident("ghost variable");
        if (!ctx_.ghosts.count(g)) fail("UnknownIdentifier", "'" + g + "' is not a declared ghost variable", gt);
        expect(":=");
        return with_pos(c_ghost_assign(g, expr()), pos);
      }
      if (!keywords().count(kw) && is(":=", 1)) {
        const Token& xt = next();
        std::string x = stack_target(xt);
        next();
        if (is("[")) {
          std::size_t save = pos_;
          next();
          ExprPtr addr = expr();
          if (is("]") && (is(";", 1) || is("}", 1) || peek(1).kind == Tok::End)) {
            next();
            return with_pos(c_read(x, addr), pos);
          }
          rewind(save);
        }
        return with_pos(c_assign(x, expr()), pos);
      }
    }
    if (is("[")) {
      next();
      ExprPtr addr = expr();
      expect("]");
      expect(":=");
      return with_pos(c_write(addr, expr()), pos);
    }
    fail("expected statement but found '" + describe(t) + "'");
  }

  std::function<void(const Token&)> on_ident_;
  std::vector<std::string> bound_;

 private:
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  ParseContext ctx_;
  std::vector<std::string> locks_;
  int wild_ = 0;
};

void rethrow_type_error(const TypeCheckError& e) {
  throw ParseError("TypeError", e.what(), e.pos.line, e.pos.col);
}

void collect_warnings(const CommandPtr& c, std::vector<std::string>& out) {
  if (!c) return;
  auto ghost_reads = [](const ExprPtr& e) { return e ? !expr_ghosts(e).empty() : false; };
  auto where = [&](const char* what) {
    return std::to_string(c->pos.line) + ":" + std::to_string(c->pos.col) + ": " + what;
  };
  switch (c->kind) {
    case CmdKind::Ite:
    case CmdKind::While:
    case CmdKind::With:
      if (ghost_reads(c->e1)) out.push_back(where("GhostFlowsToControl: guard reads ghost state"));
      break;
    case CmdKind::GhostAssign: break;
    default:
      if (ghost_reads(c->e1) || ghost_reads(c->e2)) {
        out.push_back(where("GhostReadInNonGhostCode: expression reads ghost state"));
      }
  }
  collect_warnings(c->c1, out);
  collect_warnings(c->c2, out);
}

}  // namespace

ParseContext program_context(const Program& p) {
  ParseContext ctx;
  for (const auto& g : p.ghosts) ctx.ghosts.insert(g.name);
  return ctx;
}

Program parse_program(const std::string& text) {
  Program prog;
  prog.ghosts.push_back(GhostDecl{kStdOut, Type::Seq});
  ParseContext ctx;
  ctx.ghosts.insert(kStdOut);

  // The header is parsed first so that ghost names are known to the body.
  std::size_t body_start = 0;
  {
    Parser header(text, ctx);
    while (header.is_kw("ghost") && header.peek(1).kind == Tok::Ident && header.is(":", 2)) {
      header.next();
      do {
        if (header.is(",")) header.next();
        const Token& nt = header.peek();
        std::string name = header.ident("ghost variable");
        header.expect(":");
        const Token& tt = header.peek();
        auto ty = tt.kind == Tok::Ident ? type_from_name(tt.text) : std::nullopt;
        if (!ty) header.fail("expected type name");
        header.next();
        if (prog.is_ghost(name)) header.fail("RepeatedVar", "ghost '" + name + "' declared twice", nt);
        prog.ghosts.push_back(GhostDecl{name, *ty});
        ctx.ghosts.insert(name);
      } while (header.is(","));
      header.expect(";");
    }
    body_start = header.position();
  }

  Parser p(text, ctx);
  p.rewind(body_start);
  if (p.is_kw("requires")) {
    p.next();
    prog.requires_ = p.assertion();
    p.expect(";");
  }
  if (p.is_kw("ensures")) {
    p.next();
    prog.ensures_ = p.assertion();
    p.expect(";");
  }
  prog.body = p.statements("");
  p.finish();

  try {
    TypeEnv env = infer_program_types(prog);
    if (prog.requires_) prog.requires_ = annotate_assertion(prog.requires_, env);
    if (prog.ensures_) prog.ensures_ = annotate_assertion(prog.ensures_, env);
  } catch (const TypeCheckError& e) {
    rethrow_type_error(e);
  }
  collect_warnings(prog.body, prog.warnings);
  return prog;
}

AtsSpec parse_ats(const std::string& text) {
  AtsSpec spec;
  Parser p(text, {});
  p.expect_kw("vars");
  std::set<std::string> seen;
  do {
    if (p.is(",")) p.next();
    const Token& nt = p.peek();
    std::string name = p.ident("variable name");
    if (name.find('\'') != std::string::npos) p.fail("SyntaxError", "declared variables cannot be primed", nt);
    Type ty = Type::Int;
    if (p.is(":")) {
      p.next();
      const Token& tt = p.peek();
      auto parsed = tt.kind == Tok::Ident ? type_from_name(tt.text) : std::nullopt;
      if (!parsed) p.fail("expected type name");
      p.next();
      ty = *parsed;
    }
    if (!seen.insert(name).second) p.fail("RepeatedVar", "variable '" + name + "' declared twice", nt);
    spec.vars.push_back(name);
    spec.types.push_back(ty);
  } while (p.is(","));
  p.expect(";");

  auto formula = [&](const std::string& section, bool allow_primed) {
    p.expect_kw(section);
    p.expect(":");
    p.on_ident_ = [&](const Token& t) {
      if (std::find(p.bound_.begin(), p.bound_.end(), t.text) != p.bound_.end()) return;
      std::string base = t.text;
      bool primed = false;
      while (!base.empty() && base.back() == '\'') {
        base.pop_back();
        primed = true;
      }
      if (primed && !allow_primed && seen.count(base)) {
        p.fail("PrimedInInit", "primed variable '" + t.text + "' in init formula", t);
      }
      if (!seen.count(base) || (primed && base.size() + 1 != t.text.size())) {
        p.fail("UnknownIdentifier", "'" + t.text + "' is not a declared variable", t);
      }
    };
    SourcePos at = p.here();
    AssertionPtr a = p.assertion();
    p.on_ident_ = nullptr;
    if (!is_fol(a)) p.fail("NonFOLFormula", section + " formula must be heap-independent", Token{Tok::Ident, section, at.line, at.col});
    p.expect(";");
    return a;
  };
  spec.init = formula("init", false);
  spec.next = formula("next", true);
  p.finish();

  for (std::size_t i = 0; i < spec.vars.size(); ++i) {
    spec.ghost_addr[spec.vars[i]] = i == 0 ? kStdOut : spec.vars[i];
  }
  TypeEnv env;
  for (std::size_t i = 0; i < spec.vars.size(); ++i) {
    env.vars[spec.vars[i]] = spec.types[i];
    env.vars[spec.vars[i] + "'"] = spec.types[i];
  }
  try {
    auto annotated = annotate_assertions({spec.init, spec.next}, env);
    spec.init = annotated[0];
    spec.next = annotated[1];
  } catch (const TypeCheckError& e) {
    throw ParseError("TypeError", e.what(), 1, 1);
  }
  return spec;
}

AssertionPtr parse_assertion(const std::string& text, const ParseContext& ctx) {
  Parser p(text, ctx);
  AssertionPtr a = p.assertion();
  p.finish();
  return a;
}

ExprPtr parse_expr(const std::string& text, const ParseContext& ctx) {
  Parser p(text, ctx);
  ExprPtr e = p.expr();
  p.finish();
  return e;
}

CommandPtr parse_command(const std::string& text, const ParseContext& ctx) {
  Parser p(text, ctx);
  CommandPtr c = p.statements("");
  p.finish();
  return c;
}

InitShape check_continuously_initialized(const CommandPtr& c) {
  auto has_init = [](const CommandPtr& x) {
    return command_any(x, [](const Command& n) { return n.kind == CmdKind::Init; });
  };
  InitShape shape;
  if (!has_init(c)) {
    shape.ok = true;
    shape.no_init = true;
    return shape;
  }
  std::vector<CommandPtr> chain;
  std::function<void(const CommandPtr&)> flatten = [&](const CommandPtr& x) {
    if (x->kind == CmdKind::Seq) {
      flatten(x->c1);
      flatten(x->c2);
    } else {
      chain.push_back(x);
    }
  };
  flatten(c);
  if (chain.back()->kind != CmdKind::Init) return shape;
  for (std::size_t i = 0; i + 1 < chain.size(); ++i) {
    if (has_init(chain[i])) return shape;
  }
  shape.ok = true;
  return shape;
}

}  // namespace refine
