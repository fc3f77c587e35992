#include "mfg/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>

#include "mfg/errors.hpp"

namespace mfg {

namespace {

constexpr int kMaxDepth = 64;

struct Token {
  enum Kind {
    kNumber,
    kIdent,
    kPlus,
    kMinus,
    kStar,
    kSlash,
    kLParen,
    kRParen,
    kComma,
    kEnd
  };
  Kind kind = kEnd;
  double value = 0.0;
  std::string text;
  int offset = 0;  // zero-based offset into the input
};

const char* token_name(Token::Kind k) {
  switch (k) {
    case Token::kNumber: return "number";
    case Token::kIdent: return "identifier";
    case Token::kPlus: return "'+'";
    case Token::kMinus: return "'-'";
    case Token::kStar: return "'*'";
    case Token::kSlash: return "'/'";
    case Token::kLParen: return "'('";
    case Token::kRParen: return "')'";
    case Token::kComma: return "','";
    case Token::kEnd: return "end of expression";
  }
  return "?";
}

class Parser {
 public:
  Parser(const std::string& text, int k, int line, int col0)
      : text_(text), k_(k), line_(line), col0_(col0) {
    tokenize();
  }

  Expression parse() {
    int root = parse_sum(0);
    expect(Token::kEnd);
    return Expression::from_nodes(std::move(nodes_), root);
  }

 private:
  [[noreturn]] void fail(int offset, const std::string& msg) const {
    throw ParseError(line_, col0_ + offset, msg);
  }

  void tokenize() {
    size_t i = 0;
    while (i < text_.size()) {
      char c = text_[i];
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++i;
        continue;
      }
      Token tok;
      tok.offset = static_cast<int>(i);
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
        size_t j = i;
        while (j < text_.size() &&
               std::isdigit(static_cast<unsigned char>(text_[j])))
          ++j;
        if (j < text_.size() && text_[j] == '.') {
          ++j;
          while (j < text_.size() &&
                 std::isdigit(static_cast<unsigned char>(text_[j])))
            ++j;
        }
        if (j < text_.size() && (text_[j] == 'e' || text_[j] == 'E')) {
          size_t e = j + 1;
          if (e < text_.size() && (text_[e] == '+' || text_[e] == '-')) ++e;
          if (e < text_.size() &&
              std::isdigit(static_cast<unsigned char>(text_[e]))) {
            ++e;
            while (e < text_.size() &&
                   std::isdigit(static_cast<unsigned char>(text_[e])))
              ++e;
            j = e;
          }
        }
        std::string span = text_.substr(i, j - i);
        if (span == ".") fail(tok.offset, "malformed number '.'");
        tok.kind = Token::kNumber;
        tok.value = std::strtod(span.c_str(), nullptr);
        i = j;
      } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        size_t j = i;
        while (j < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[j])) ||
                text_[j] == '_'))
          ++j;
        tok.kind = Token::kIdent;
        tok.text = text_.substr(i, j - i);
        i = j;
      } else {
        switch (c) {
          case '+': tok.kind = Token::kPlus; break;
          case '-': tok.kind = Token::kMinus; break;
          case '*': tok.kind = Token::kStar; break;
          case '/': tok.kind = Token::kSlash; break;
          case '(': tok.kind = Token::kLParen; break;
          case ')': tok.kind = Token::kRParen; break;
          case ',': tok.kind = Token::kComma; break;
          default:
            fail(tok.offset, std::string("unexpected character '") + c + "'");
        }
        ++i;
      }
      tokens_.push_back(std::move(tok));
    }
    Token end;
    end.kind = Token::kEnd;
    end.offset = static_cast<int>(text_.size());
    tokens_.push_back(end);
  }

  const Token& peek() const { return tokens_[pos_]; }
  Token take() { return tokens_[pos_++]; }

  void expect(Token::Kind kind) {
    if (peek().kind != kind)
      fail(peek().offset, std::string("expected ") + token_name(kind) +
                              ", found " + token_name(peek().kind));
    ++pos_;
  }

  int add(Expression::Node n) {
    nodes_.push_back(n);
    return static_cast<int>(nodes_.size()) - 1;
  }

  void check_depth(int depth, int offset) const {
    if (depth >= kMaxDepth)
      fail(offset, "expression nests deeper than 64 levels");
  }

  int parse_sum(int depth) {
    check_depth(depth, peek().offset);
    int lhs = parse_product(depth + 1);
    while (peek().kind == Token::kPlus || peek().kind == Token::kMinus) {
      Token op = take();
      int rhs = parse_product(depth + 1);
      Expression::Node n;
      n.op = op.kind == Token::kPlus ? Expression::Op::Add
                                     : Expression::Op::Sub;
      n.a = lhs;
      n.b = rhs;
      lhs = add(n);
    }
    return lhs;
  }

  int parse_product(int depth) {
    check_depth(depth, peek().offset);
    int lhs = parse_unary(depth + 1);
    while (peek().kind == Token::kStar || peek().kind == Token::kSlash) {
      Token op = take();
      int rhs = parse_unary(depth + 1);
      Expression::Node n;
      n.op = op.kind == Token::kStar ? Expression::Op::Mul
                                     : Expression::Op::Div;
      n.a = lhs;
      n.b = rhs;
      lhs = add(n);
    }
    return lhs;
  }

  int parse_unary(int depth) {
    check_depth(depth, peek().offset);
    if (peek().kind == Token::kMinus) {
      take();
      int child = parse_unary(depth + 1);
      Expression::Node n;
      n.op = Expression::Op::Neg;
      n.a = child;
      return add(n);
    }
    return parse_atom(depth + 1);
  }

  int parse_atom(int depth) {
    check_depth(depth, peek().offset);
    const Token& tok = peek();
    switch (tok.kind) {
      case Token::kNumber: {
        Token t = take();
        Expression::Node n;
        n.op = Expression::Op::Literal;
        n.value = t.value;
        return add(n);
      }
      case Token::kLParen: {
        take();
        int inner = parse_sum(depth + 1);
        expect(Token::kRParen);
        return inner;
      }
      case Token::kIdent: {
        Token t = take();
        if (t.text == "t") {
          Expression::Node n;
          n.op = Expression::Op::VarT;
          return add(n);
        }
        if (t.text == "exp") return parse_call(Expression::Op::Exp, 1, depth);
        if (t.text == "min") return parse_call(Expression::Op::Min, 2, depth);
        if (t.text == "max") return parse_call(Expression::Op::Max, 2, depth);
        if (t.text.size() > 1 && t.text[0] == 'x') {
          bool digits = true;
          for (size_t c = 1; c < t.text.size(); ++c)
            digits = digits &&
                     std::isdigit(static_cast<unsigned char>(t.text[c]));
          if (digits) {
            long idx = std::strtol(t.text.c_str() + 1, nullptr, 10);
            if (idx < 1 || idx > k_)
              fail(t.offset, "variable " + t.text +
                                 " is out of range for a model with k = " +
                                 std::to_string(k_) + " states (valid: x1..x" +
                                 std::to_string(k_) + ")");
            Expression::Node n;
            n.op = Expression::Op::VarX;
            n.var = static_cast<int>(idx) - 1;
            return add(n);
          }
        }
        fail(t.offset, "unknown identifier '" + t.text +
                           "' (expected t, x1..x" + std::to_string(k_) +
                           ", exp, min, max)");
      }
      default:
        fail(tok.offset, std::string("expected number, variable, function, "
                                     "'(' or '-', found ") +
                             token_name(tok.kind));
    }
  }

  int parse_call(Expression::Op op, int arity, int depth) {
    expect(Token::kLParen);
    int a = parse_sum(depth + 1);
    int b = -1;
    if (arity == 2) {
      expect(Token::kComma);
      b = parse_sum(depth + 1);
    }
    expect(Token::kRParen);
    Expression::Node n;
    n.op = op;
    n.a = a;
    n.b = b;
    return add(n);
  }

  const std::string& text_;
  int k_;
  int line_;
  int col0_;
  std::vector<Token> tokens_;
  size_t pos_ = 0;
  std::vector<Expression::Node> nodes_;
};

int precedence(Expression::Op op) {
  switch (op) {
    case Expression::Op::Add:
    case Expression::Op::Sub: return 1;
    case Expression::Op::Mul:
    case Expression::Op::Div: return 2;
    case Expression::Op::Neg: return 3;
    default: return 4;
  }
}

std::string format_literal(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

Expression::Expression() {
  nodes_.push_back(Node{});
  root_ = 0;
}

Expression Expression::literal(double v) {
  Expression e;
  e.nodes_[0].value = v;
  return e;
}

Expression Expression::from_nodes(std::vector<Node> nodes, int root) {
  Expression e;
  e.nodes_ = std::move(nodes);
  e.root_ = root;
  if (root < 0 || root >= static_cast<int>(e.nodes_.size()))
    throw DomainError("expression root out of range");
  if (e.depth() > kMaxDepth)
    throw DomainError("expression tree deeper than 64 levels");
  return e;
}

double Expression::eval(double t, const Eigen::VectorXd& x) const {
  std::function<double(int)> go = [&](int id) -> double {
    const Node& n = nodes_[id];
    switch (n.op) {
      case Op::Literal: return n.value;
      case Op::VarT: return t;
      case Op::VarX: return x(n.var);
      case Op::Add: return go(n.a) + go(n.b);
      case Op::Sub: return go(n.a) - go(n.b);
      case Op::Mul: return go(n.a) * go(n.b);
      case Op::Div: return go(n.a) / go(n.b);
      case Op::Neg: return -go(n.a);
      case Op::Exp: return std::exp(go(n.a));
      case Op::Min: return std::fmin(go(n.a), go(n.b));
      case Op::Max: return std::fmax(go(n.a), go(n.b));
    }
    return 0.0;
  };
  return go(root_);
}

std::string Expression::to_string() const {
  std::function<std::string(int)> go = [&](int id) -> std::string {
    const Node& n = nodes_[id];
    auto wrap = [&](int child, bool parens) {
      std::string s = go(child);
      return parens ? "(" + s + ")" : s;
    };
    int p = precedence(n.op);
    switch (n.op) {
      case Op::Literal: return format_literal(n.value);
      case Op::VarT: return "t";
      case Op::VarX: return "x" + std::to_string(n.var + 1);
      case Op::Add:
      case Op::Sub:
      case Op::Mul:
      case Op::Div: {
        const char* sym = n.op == Op::Add   ? " + "
                          : n.op == Op::Sub ? " - "
                          : n.op == Op::Mul ? " * "
                                            : " / ";
        return wrap(n.a, precedence(nodes_[n.a].op) < p) + sym +
               wrap(n.b, precedence(nodes_[n.b].op) <= p);
      }
      case Op::Neg:
        return "-" + wrap(n.a, precedence(nodes_[n.a].op) < p);
      case Op::Exp: return "exp(" + go(n.a) + ")";
      case Op::Min: return "min(" + go(n.a) + ", " + go(n.b) + ")";
      case Op::Max: return "max(" + go(n.a) + ", " + go(n.b) + ")";
    }
    return "";
  };
  return go(root_);
}

int Expression::depth() const {
  std::function<int(int)> go = [&](int id) -> int {
    const Node& n = nodes_[id];
    int d = 1;
    if (n.a >= 0) d = std::max(d, 1 + go(n.a));
    if (n.b >= 0) d = std::max(d, 1 + go(n.b));
    return d;
  };
  return go(root_);
}

int Expression::max_var_index() const {
  int best = -1;
  std::function<void(int)> go = [&](int id) {
    const Node& n = nodes_[id];
    if (n.op == Op::VarX) best = std::max(best, n.var);
    if (n.a >= 0) go(n.a);
    if (n.b >= 0) go(n.b);
  };
  go(root_);
  return best;
}

bool Expression::operator==(const Expression& other) const {
  std::function<bool(int, int)> eq = [&](int a, int b) -> bool {
    const Node& na = nodes_[a];
    const Node& nb = other.nodes_[b];
    if (na.op != nb.op) return false;
    if (na.op == Op::Literal && na.value != nb.value) return false;
    if (na.op == Op::VarX && na.var != nb.var) return false;
    if ((na.a >= 0) != (nb.a >= 0) || (na.b >= 0) != (nb.b >= 0)) return false;
    if (na.a >= 0 && !eq(na.a, nb.a)) return false;
    if (na.b >= 0 && !eq(na.b, nb.b)) return false;
    return true;
  };
  return eq(root_, other.root_);
}

Expression parse_expression(const std::string& text, int k, int line,
                            int col0) {
  Parser p(text, k, line, col0);
  return p.parse();
}

}  // namespace mfg
