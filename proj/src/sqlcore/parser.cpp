#include "seqsql/sqlcore/parser.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>

#include "seqsql/sqlcore/errors.hpp"

namespace seqsql {
namespace {

enum class Tok {
  Ident,     // bare identifier (lowercased) or keyword
  Integer,
  Real,
  String,    // unquoted text
  Symbol,    // punctuation / operator
  PrevQuery,   // PREV_QUERY{i}
  PrevResult,  // PREV_RESULT{i}
  End,
};

struct Token {
  Tok type = Tok::End;
  std::string text;   // identifiers lowercased, symbols as-is
  std::string upper;  // uppercased identifier for keyword checks
  int token_index = 0;  // for PrevQuery/PrevResult
  size_t pos = 0;
};

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

std::vector<Token> lex(const std::string& s) {
  std::vector<Token> out;
  size_t i = 0;
  while (i < s.size()) {
    char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    Token t;
    t.pos = i;
    if (is_ident_start(c)) {
      size_t j = i;
      while (j < s.size() && (is_ident_char(s[j]))) ++j;
      std::string word = s.substr(i, j - i);
      std::string up = word;
      std::transform(up.begin(), up.end(), up.begin(),
                     [](unsigned char ch) { return std::toupper(ch); });
      if (up.rfind("PREV_QUERY", 0) == 0 && up.size() > 10 &&
          std::all_of(up.begin() + 10, up.end(), ::isdigit)) {
        t.type = Tok::PrevQuery;
        t.token_index = std::atoi(up.c_str() + 10);
      } else if (up.rfind("PREV_RESULT", 0) == 0 && up.size() > 11 &&
                 std::all_of(up.begin() + 11, up.end(), ::isdigit)) {
        t.type = Tok::PrevResult;
        t.token_index = std::atoi(up.c_str() + 11);
      } else {
        t.type = Tok::Ident;
        std::transform(word.begin(), word.end(), word.begin(),
                       [](unsigned char ch) { return std::tolower(ch); });
        t.text = word;
        t.upper = up;
      }
      i = j;
    } else if (std::isdigit(static_cast<unsigned char>(c)) ||
               (c == '.' && i + 1 < s.size() &&
                std::isdigit(static_cast<unsigned char>(s[i + 1])))) {
      size_t j = i;
      bool real = false;
      while (j < s.size() &&
             (std::isdigit(static_cast<unsigned char>(s[j])) || s[j] == '.')) {
        if (s[j] == '.') real = true;
        ++j;
      }
      t.type = real ? Tok::Real : Tok::Integer;
      t.text = s.substr(i, j - i);
      i = j;
    } else if (c == '\'') {
      std::string val;
      size_t j = i + 1;
      for (;;) {
        if (j >= s.size()) throw ParseError("unterminated string literal", i);
        if (s[j] == '\'') {
          if (j + 1 < s.size() && s[j + 1] == '\'') {
            val.push_back('\'');
            j += 2;
            continue;
          }
          ++j;
          break;
        }
        val.push_back(s[j]);
        ++j;
      }
      t.type = Tok::String;
      t.text = val;
      i = j;
    } else {
      static const char* two[] = {"<=", ">=", "!=", "<>"};
      std::string sym(1, c);
      for (const char* d : two) {
        if (s.compare(i, 2, d) == 0) {
          sym = d;
          break;
        }
      }
      t.type = Tok::Symbol;
      t.text = sym == "<>" ? "!=" : sym;
      i += sym.size();
    }
    out.push_back(std::move(t));
  }
  Token end;
  end.pos = s.size();
  out.push_back(end);
  return out;
}

class Parser {
 public:
  explicit Parser(const std::string& text) : toks_(lex(text)) {}

  SqlAst parse_statement() {
    SqlAst ast;
    if (peek().type == Tok::PrevQuery) {
      ast.stmt = parse_extension();
    } else if (is_kw("SELECT")) {
      ast.stmt = parse_select();
    } else if (peek().type == Tok::Ident) {
      // name the construct for common non-SELECT statements
      static const char* stmts[] = {"INSERT", "UPDATE", "DELETE", "CREATE",
                                    "DROP",   "ALTER",  "WITH",   "PRAGMA"};
      for (const char* k : stmts)
        if (peek().upper == k) throw UnsupportedConstructError(k);
      throw ParseError("expected SELECT or PREV_QUERY", peek().pos);
    } else {
      throw ParseError("expected SELECT or PREV_QUERY", peek().pos);
    }
    if (peek().type != Tok::End) throw ParseError("trailing input after statement", peek().pos);
    return ast;
  }

 private:
  std::vector<Token> toks_;
  size_t at_ = 0;

  const Token& peek(size_t ahead = 0) const {
    size_t i = at_ + ahead;
    return i < toks_.size() ? toks_[i] : toks_.back();
  }
  Token next() { return toks_[std::min(at_++, toks_.size() - 1)]; }
  bool is_kw(const char* kw, size_t ahead = 0) const {
    return peek(ahead).type == Tok::Ident && peek(ahead).upper == kw;
  }
  bool accept_kw(const char* kw) {
    if (!is_kw(kw)) return false;
    next();
    return true;
  }
  void expect_kw(const char* kw) {
    if (!accept_kw(kw))
      throw ParseError(std::string("expected ") + kw, peek().pos);
  }
  bool accept_sym(const char* sym) {
    if (peek().type == Tok::Symbol && peek().text == sym) {
      next();
      return true;
    }
    return false;
  }
  void expect_sym(const char* sym) {
    if (!accept_sym(sym))
      throw ParseError(std::string("expected '") + sym + "'", peek().pos);
  }

  PrevExtension parse_extension() {
    PrevExtension ext;
    Token base = next();
    ext.base = TokenRef{TokenKind::Query, base.token_index};
    if (accept_kw("AND")) {
      ext.kind = ExtClauseKind::AndPred;
      ext.pred = parse_or();
    } else if (accept_kw("WHERE")) {
      ext.kind = ExtClauseKind::WherePred;
      ext.pred = parse_or();
    } else if (accept_kw("HAVING")) {
      ext.kind = ExtClauseKind::HavingPred;
      ext.pred = parse_or();
    } else if (is_kw("ORDER") || is_kw("LIMIT")) {
      ext.kind = ExtClauseKind::OrderLimit;
      if (accept_kw("ORDER")) {
        expect_kw("BY");
        ext.order_by = parse_order_items();
      }
      if (accept_kw("LIMIT")) ext.limit = parse_limit_value();
    } else {
      throw ParseError("expected AND, WHERE, HAVING, ORDER BY or LIMIT after PREV_QUERY",
                       peek().pos);
    }
    return ext;
  }

  SelectPtr parse_select() {
    expect_kw("SELECT");
    SelectStmt sel;
    sel.distinct = accept_kw("DISTINCT");
    sel.items.push_back(parse_select_item());
    while (accept_sym(",")) sel.items.push_back(parse_select_item());
    if (accept_kw("FROM")) {
      sel.from = parse_table_ref();
      while (accept_kw("JOIN")) {
        JoinClause j;
        j.table = parse_table_ref();
        expect_kw("ON");
        j.on = parse_or();
        sel.joins.push_back(std::move(j));
      }
    }
    if (accept_kw("WHERE")) sel.where = parse_or();
    if (accept_kw("GROUP")) {
      expect_kw("BY");
      sel.group_by.push_back(parse_additive());
      while (accept_sym(",")) sel.group_by.push_back(parse_additive());
    }
    if (accept_kw("HAVING")) sel.having = parse_or();
    if (accept_kw("ORDER")) {
      expect_kw("BY");
      sel.order_by = parse_order_items();
    }
    if (accept_kw("LIMIT")) sel.limit = parse_limit_value();
    return make_select(std::move(sel));
  }

  long long parse_limit_value() {
    if (peek().type != Tok::Integer) throw ParseError("expected integer LIMIT", peek().pos);
    return std::atoll(next().text.c_str());
  }

  std::vector<OrderItem> parse_order_items() {
    std::vector<OrderItem> items;
    do {
      OrderItem it;
      it.expr = parse_additive();
      if (accept_kw("DESC"))
        it.desc = true;
      else
        accept_kw("ASC");
      items.push_back(std::move(it));
    } while (accept_sym(","));
    return items;
  }

  SelectItem parse_select_item() {
    SelectItem item;
    item.expr = parse_or();
    if (accept_kw("AS")) {
      if (peek().type != Tok::Ident) throw ParseError("expected alias", peek().pos);
      item.alias = next().text;
    }
    return item;
  }

  TableRef parse_table_ref() {
    TableRef ref;
    if (accept_sym("(")) {
      if (peek().type == Tok::PrevQuery) {
        Token tok = next();
        ref.derived = TokenRef{TokenKind::Query, tok.token_index};
      } else if (is_kw("SELECT")) {
        ref.derived = parse_select();
      } else {
        throw ParseError("expected SELECT or PREV_QUERY in derived table", peek().pos);
      }
      expect_sym(")");
      expect_kw("AS");
      if (peek().type != Tok::Ident) throw ParseError("expected derived-table alias", peek().pos);
      ref.alias = next().text;
    } else {
      if (peek().type != Tok::Ident) throw ParseError("expected table name", peek().pos);
      ref.table = next().text;
      if (accept_kw("AS")) {
        if (peek().type != Tok::Ident) throw ParseError("expected alias", peek().pos);
        ref.alias = next().text;
      }
    }
    return ref;
  }

  // precedence: OR < AND < NOT/predicate < additive < multiplicative < factor
  ExprPtr parse_or() {
    ExprPtr lhs = parse_and();
    while (accept_kw("OR"))
      lhs = make_expr(Expr{Binary{BinaryOp::Or, lhs, parse_and()}});
    return lhs;
  }

  ExprPtr parse_and() {
    ExprPtr lhs = parse_predicate();
    while (accept_kw("AND"))
      lhs = make_expr(Expr{Binary{BinaryOp::And, lhs, parse_predicate()}});
    return lhs;
  }

  ExprPtr parse_predicate() {
    ExprPtr lhs = parse_additive();
    if (is_kw("IS")) {
      next();
      IsNullPred p;
      p.operand = lhs;
      p.negated = accept_kw("NOT");
      expect_kw("NULL");
      return make_expr(Expr{std::move(p)});
    }
    bool negated = false;
    if (is_kw("NOT") && is_kw("IN", 1)) {
      next();
      negated = true;
    }
    if (accept_kw("IN")) {
      InPred p;
      p.lhs = lhs;
      p.negated = negated;
      expect_sym("(");
      if (peek().type == Tok::PrevResult) {
        Token tok = next();
        p.rhs = TokenRef{TokenKind::Result, tok.token_index};
      } else if (is_kw("SELECT")) {
        p.rhs = parse_select();
      } else {
        std::vector<ExprPtr> list;
        list.push_back(parse_additive());
        while (accept_sym(",")) list.push_back(parse_additive());
        p.rhs = std::move(list);
      }
      expect_sym(")");
      return make_expr(Expr{std::move(p)});
    }
    struct {
      const char* sym;
      BinaryOp op;
    } cmps[] = {{"=", BinaryOp::Eq}, {"!=", BinaryOp::Ne}, {"<=", BinaryOp::Le},
                {">=", BinaryOp::Ge}, {"<", BinaryOp::Lt}, {">", BinaryOp::Gt}};
    for (auto& c : cmps) {
      if (accept_sym(c.sym))
        return make_expr(Expr{Binary{c.op, lhs, parse_additive()}});
    }
    return lhs;
  }

  ExprPtr parse_additive() {
    ExprPtr lhs = parse_multiplicative();
    for (;;) {
      if (accept_sym("+"))
        lhs = make_expr(Expr{Binary{BinaryOp::Add, lhs, parse_multiplicative()}});
      else if (accept_sym("-"))
        lhs = make_expr(Expr{Binary{BinaryOp::Sub, lhs, parse_multiplicative()}});
      else
        break;
    }
    return lhs;
  }

  ExprPtr parse_multiplicative() {
    ExprPtr lhs = parse_factor();
    for (;;) {
      if (accept_sym("*"))
        lhs = make_expr(Expr{Binary{BinaryOp::Mul, lhs, parse_factor()}});
      else if (accept_sym("/"))
        lhs = make_expr(Expr{Binary{BinaryOp::Div, lhs, parse_factor()}});
      else
        break;
    }
    return lhs;
  }

  ExprPtr parse_factor() {
    const Token& t = peek();
    switch (t.type) {
      case Tok::Integer:
        return make_expr(Expr{Literal{LiteralType::Integer, next().text}});
      case Tok::Real:
        return make_expr(Expr{Literal{LiteralType::Real, next().text}});
      case Tok::String:
        return make_expr(Expr{Literal{LiteralType::Text, next().text}});
      case Tok::PrevResult: {
        Token tok = next();
        return make_expr(Expr{TokenExpr{TokenRef{TokenKind::Result, tok.token_index}}});
      }
      case Tok::PrevQuery:
        throw ParseError("PREV_QUERY is only valid as a derived table or statement base",
                         t.pos);
      case Tok::Symbol:
        if (t.text == "(") {
          next();
          ExprPtr inner;
          if (is_kw("SELECT")) {
            inner = make_expr(Expr{Subquery{parse_select()}});
          } else if (peek().type == Tok::PrevResult) {
            Token tok = next();
            inner = make_expr(
                Expr{TokenExpr{TokenRef{TokenKind::Result, tok.token_index}}});
          } else {
            inner = parse_or();
          }
          expect_sym(")");
          return inner;
        }
        if (t.text == "*") {
          next();
          return make_expr(Expr{Star{}});
        }
        if (t.text == "-") {
          // negative numeric literal
          next();
          if (peek().type == Tok::Integer)
            return make_expr(Expr{Literal{LiteralType::Integer, "-" + next().text}});
          if (peek().type == Tok::Real)
            return make_expr(Expr{Literal{LiteralType::Real, "-" + next().text}});
          throw ParseError("expected number after '-'", peek().pos);
        }
        throw ParseError("unexpected symbol '" + t.text + "'", t.pos);
      case Tok::Ident:
        break;
      case Tok::End:
        throw ParseError("unexpected end of input", t.pos);
    }
    if (t.upper == "NULL") {
      next();
      return make_expr(Expr{Literal{LiteralType::Null, "NULL"}});
    }
    static const char* unsupported[] = {"CASE", "EXISTS", "CAST", "BETWEEN", "LIKE"};
    for (const char* k : unsupported)
      if (t.upper == k) throw UnsupportedConstructError(k);
    static const char* reserved[] = {"SELECT", "FROM",  "WHERE", "GROUP", "BY",
                                     "HAVING", "ORDER", "LIMIT", "AND",   "OR",
                                     "NOT",    "IN",    "IS",    "JOIN",  "ON",
                                     "AS",     "DISTINCT", "ASC", "DESC", "OVER"};
    for (const char* k : reserved)
      if (t.upper == k)
        throw ParseError("unexpected keyword " + t.upper, t.pos);

    Token name = next();
    if (accept_sym("(")) return parse_call(name);
    ColumnRef col;
    if (accept_sym(".")) {
      if (peek().type != Tok::Ident) throw ParseError("expected column name", peek().pos);
      col.qualifier = name.text;
      col.column = next().text;
    } else {
      col.column = name.text;
    }
    return make_expr(Expr{std::move(col)});
  }

  ExprPtr parse_call(const Token& name) {
    FuncCall call;
    call.name = name.upper;
    if (accept_sym("*")) {
      call.star = true;
    } else if (peek().type != Tok::Symbol || peek().text != ")") {
      call.distinct = accept_kw("DISTINCT");
      call.args.push_back(parse_additive());
      while (accept_sym(",")) call.args.push_back(parse_additive());
    }
    expect_sym(")");
    if (is_kw("OVER")) {
      next();
      expect_sym("(");
      expect_kw("ORDER");
      expect_kw("BY");
      WindowFunc win;
      win.func = std::move(call);
      win.order_expr = parse_additive();
      if (accept_kw("DESC"))
        win.order_desc = true;
      else {
        accept_kw("ASC");
        win.order_desc = false;
      }
      expect_sym(")");
      return make_expr(Expr{std::move(win)});
    }
    return make_expr(Expr{std::move(call)});
  }
};

}  // namespace

SqlAst parse_sql(const std::string& text) {
  if (text.find_first_not_of(" \t\r\n") == std::string::npos)
    throw ParseError("empty statement", 0);
  Parser p(text);
  return p.parse_statement();
}

}  // namespace seqsql
