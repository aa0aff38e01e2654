#include "rulewise/rules/expression.hpp"

#include "rulewise/common/error.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>

namespace rulewise::rules {

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;
using Node = Expression::Node;

constexpr std::array<const char*, 7> kFunctions = {"sin", "cos", "tanh", "exp", "log", "sqrt", "abs"};

bool is_function(const std::string& name) {
  return std::find_if(kFunctions.begin(), kFunctions.end(), [&](const char* f) { return name == f; }) !=
         kFunctions.end();
}

struct Token {
  enum class Type { Number, Ident, Symbol, End };
  Type type = Type::End;
  std::string text;
  double number = 0.0;
  std::size_t pos = 0;
};

std::vector<Token> tokenize(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    Token t;
    t.pos = i;
    if (std::isdigit(static_cast<unsigned char>(c)) || (c == '.' && i + 1 < s.size() && std::isdigit(static_cast<unsigned char>(s[i + 1])))) {
      std::size_t j = i;
      while (j < s.size() && (std::isdigit(static_cast<unsigned char>(s[j])) || s[j] == '.')) ++j;
      if (j < s.size() && (s[j] == 'e' || s[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < s.size() && (s[k] == '+' || s[k] == '-')) ++k;
        if (k < s.size() && std::isdigit(static_cast<unsigned char>(s[k]))) {
          j = k;
          while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
        }
      }
      std::string text(s.substr(i, j - i));
      if (text.front() == '.') text.insert(text.begin(), '0');
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
      if (ec != std::errc() || ptr != text.data() + text.size())
        throw ConfigError("bad number '" + text + "' at column " + std::to_string(i + 1));
      t.type = Token::Type::Number;
      t.number = v;
      t.text = std::move(text);
      i = j;
    } else if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '_')) ++j;
      t.type = Token::Type::Ident;
      t.text = std::string(s.substr(i, j - i));
      i = j;
    } else if (std::string_view("+-*/^(),=@").find(c) != std::string_view::npos) {
      t.type = Token::Type::Symbol;
      t.text = std::string(1, c);
      ++i;
    } else {
      throw ConfigError(std::string("unexpected character '") + c + "' at column " + std::to_string(i + 1));
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
  explicit Parser(std::string_view text) : text_(text), toks_(tokenize(text)) {}

  NodePtr parse_all() {
    auto n = sum();
    if (peek().type != Token::Type::End) fail("unexpected '" + peek().text + "'");
    return n;
  }

 private:
  const Token& peek() const { return toks_[pos_]; }
  bool accept(const char* sym) {
    if (peek().type == Token::Type::Symbol && peek().text == sym) {
      ++pos_;
      return true;
    }
    return false;
  }
  void expect(const char* sym) {
    if (!accept(sym)) fail(std::string("expected '") + sym + "'");
  }
  [[noreturn]] void fail(const std::string& msg) const {
    throw ConfigError("in expression '" + std::string(text_) + "' at column " + std::to_string(peek().pos + 1) +
                      ": " + msg);
  }

  static NodePtr binary(const std::string& op, NodePtr a, NodePtr b) {
    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::Binary;
    n->name = op;
    n->children = {std::move(a), std::move(b)};
    return n;
  }

  NodePtr sum() {
    auto lhs = product();
    while (true) {
      if (accept("+")) lhs = binary("+", lhs, product());
      else if (accept("-")) lhs = binary("-", lhs, product());
      else return lhs;
    }
  }

  NodePtr product() {
    auto lhs = unary();
    while (true) {
      if (accept("*")) lhs = binary("*", lhs, unary());
      else if (accept("/")) lhs = binary("/", lhs, unary());
      else return lhs;
    }
  }

  NodePtr unary() {
    if (accept("-")) {
      auto n = std::make_shared<Node>();
      n->kind = Node::Kind::Negate;
      n->children = {unary()};
      return n;
    }
    if (accept("+")) return unary();
    return power();
  }

  NodePtr power() {
    auto base = atom();
    if (accept("^")) return binary("^", base, unary());
    return base;
  }

  NodePtr atom() {
    const Token t = peek();
    if (t.type == Token::Type::Number) {
      ++pos_;
      auto n = std::make_shared<Node>();
      n->kind = Node::Kind::Number;
      n->number = t.number;
      return n;
    }
    if (t.type == Token::Type::Ident) {
      ++pos_;
      if (accept("(")) {
        if (!is_function(t.text)) fail("unknown function '" + t.text + "'");
        auto n = std::make_shared<Node>();
        n->kind = Node::Kind::Call;
        n->name = t.text;
        n->children = {sum()};
        expect(")");
        return n;
      }
      auto name = std::make_shared<Node>();
      name->kind = Node::Kind::Name;
      name->name = t.text;
      if (!accept("@")) return name;
      auto site = std::make_shared<Node>();
      site->kind = Node::Kind::Site;
      site->children = {name};
      expect("(");
      do {
        if (peek().type != Token::Type::Ident) fail("expected a coordinate name");
        std::string coord = peek().text;
        ++pos_;
        expect("=");
        const double v = constant(sum());
        site->fixed.emplace_back(std::move(coord), v);
      } while (accept(","));
      expect(")");
      std::sort(site->fixed.begin(), site->fixed.end());
      return site;
    }
    if (accept("(")) {
      auto n = sum();
      expect(")");
      return n;
    }
    fail(t.type == Token::Type::End ? "unexpected end of expression" : "unexpected '" + t.text + "'");
  }

  // Site coordinates must be constant expressions.
  double constant(const NodePtr& n) {
    switch (n->kind) {
      case Node::Kind::Number: return n->number;
      case Node::Kind::Name:
        if (n->name == "pi") return std::numbers::pi;
        if (n->name == "e") return std::numbers::e;
        fail("site coordinate must be a constant");
      case Node::Kind::Negate: return -constant(n->children[0]);
      case Node::Kind::Binary: {
        const double a = constant(n->children[0]), b = constant(n->children[1]);
        if (n->name == "+") return a + b;
        if (n->name == "-") return a - b;
        if (n->name == "*") return a * b;
        if (n->name == "/") return a / b;
        return std::pow(a, b);
      }
      default: fail("site coordinate must be a constant");
    }
  }

  std::string_view text_;
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

std::string number_text(double v) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  (void)ec;
  return std::string(buf.data(), ptr);
}

int precedence(const Node& n) {
  switch (n.kind) {
    case Node::Kind::Binary:
      if (n.name == "+" || n.name == "-") return 1;
      if (n.name == "*" || n.name == "/") return 2;
      return 4;
    case Node::Kind::Negate: return 3;
    case Node::Kind::Number: return n.number < 0 ? 3 : 5;
    default: return 5;
  }
}

void print(const Node& n, std::string& out);

void print_child(const Node& child, bool parens, std::string& out) {
  if (parens) out += '(';
  print(child, out);
  if (parens) out += ')';
}

void print(const Node& n, std::string& out) {
  switch (n.kind) {
    case Node::Kind::Number: out += number_text(n.number); return;
    case Node::Kind::Name: out += n.name; return;
    case Node::Kind::Call:
      out += n.name + "(";
      print(*n.children[0], out);
      out += ')';
      return;
    case Node::Kind::Negate:
      out += '-';
      print_child(*n.children[0], precedence(*n.children[0]) < 3, out);
      return;
    case Node::Kind::Site:
      print(*n.children[0], out);
      out += "@(";
      for (std::size_t i = 0; i < n.fixed.size(); ++i) {
        if (i) out += ", ";
        out += n.fixed[i].first + "=" + number_text(n.fixed[i].second);
      }
      out += ')';
      return;
    case Node::Kind::Binary: {
      const int p = precedence(n);
      const auto& a = *n.children[0];
      const auto& b = *n.children[1];
      if (n.name == "^") {
        print_child(a, precedence(a) <= 4, out);
        out += '^';
        print_child(b, precedence(b) < 3, out);
        return;
      }
      print_child(a, precedence(a) < p, out);
      out += ' ' + n.name + ' ';
      print_child(b, precedence(b) <= p, out);
      return;
    }
  }
}

}  // namespace

Expression Expression::parse(std::string_view text) { return Expression(Parser(text).parse_all()); }

std::string Expression::canonical() const {
  std::string out;
  print(*root_, out);
  return out;
}

std::vector<Statement> parse_statements(std::string_view text) {
  std::vector<Statement> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find(';', start);
    if (end == std::string_view::npos) end = text.size();
    const auto piece = text.substr(start, end - start);
    start = end + 1;
    if (piece.find_first_not_of(" \t\r\n") == std::string_view::npos) {
      if (end == text.size()) break;
      continue;
    }
    int depth = 0;
    std::size_t rel = std::string_view::npos, rel_len = 1;
    Relation relation = Relation::Equal;
    for (std::size_t i = 0; i < piece.size(); ++i) {
      const char c = piece[i];
      if (c == '(') ++depth;
      else if (c == ')') --depth;
      else if (depth == 0 && (c == '=' || c == '<' || c == '>')) {
        if (rel != std::string_view::npos) throw ConfigError("more than one relation in '" + std::string(piece) + "'");
        rel = i;
        relation = c == '=' ? Relation::Equal : (c == '>' ? Relation::Greater : Relation::Less);
        rel_len = (c != '=' && i + 1 < piece.size() && piece[i + 1] == '=') ? 2 : 1;
        i += rel_len - 1;
      }
    }
    if (rel == std::string_view::npos)
      throw ConfigError("rule statement '" + std::string(piece) + "' has no '=', '<' or '>'");
    out.push_back({Expression::parse(piece.substr(0, rel)), relation, Expression::parse(piece.substr(rel + rel_len))});
    if (end == text.size()) break;
  }
  if (out.empty()) throw ConfigError("empty rule");
  return out;
}

std::string canonical(const std::vector<Statement>& statements) {
  std::string out;
  for (std::size_t i = 0; i < statements.size(); ++i) {
    if (i) out += "; ";
    const auto& s = statements[i];
    out += s.lhs.canonical();
    out += s.relation == Relation::Equal ? " = " : (s.relation == Relation::Greater ? " > " : " < ");
    out += s.rhs.canonical();
  }
  return out;
}

Points SiteSpec::apply(const Points& points) const {
  Points p = points;
  for (const auto& [axis, v] : fixed) p.row(static_cast<Eigen::Index>(axis)).setConstant(v);
  return p;
}

CompiledResidual::CompiledResidual(const std::vector<Statement>& statements, const Symbols& symbols)
    : symbols_(symbols) {
  if (statements.empty()) throw ConfigError("empty rule");
  sites_.push_back(SiteSpec{});
  inequality_ = statements.front().relation != Relation::Equal;
  for (const auto& s : statements) {
    if ((s.relation != Relation::Equal) != inequality_)
      throw ConfigError("a rule cannot mix equalities and inequalities");
    const int l = emit(s.lhs.root());
    const int r = emit(s.rhs.root());
    roots_.push_back(s.relation == Relation::Less ? push({Op::Sub, r, l}) : push({Op::Sub, l, r}));
  }
}

int CompiledResidual::push(Instr ins) {
  tape_.push_back(ins);
  return static_cast<int>(tape_.size() - 1);
}

std::size_t CompiledResidual::leaf_index(std::size_t site, std::size_t output, const ad::MultiIndex& alpha) {
  for (std::size_t i = 0; i < leaves_.size(); ++i) {
    if (leaves_[i].site == site && leaves_[i].output == output && leaves_[i].alpha == alpha) return i;
  }
  leaves_.push_back({site, output, alpha});
  return leaves_.size() - 1;
}

int CompiledResidual::emit(const Expression::Node& node) {
  const auto& in = symbols_.inputs;
  const auto& outs = symbols_.outputs;
  auto find = [](const std::vector<std::string>& v, const std::string& n) {
    return static_cast<std::size_t>(std::find(v.begin(), v.end(), n) - v.begin());
  };
  // Resolves a field name such as u, u_x, u_xxt into (output, alpha); false when not a field.
  auto field = [&](const std::string& name, std::size_t& output, ad::MultiIndex& alpha) {
    alpha.assign(in.size(), 0);
    if ((output = find(outs, name)) < outs.size()) return true;
    const auto us = name.find('_');
    if (us == std::string::npos || (output = find(outs, name.substr(0, us))) >= outs.size()) return false;
    std::string rest = name.substr(us + 1);
    if (rest.empty()) return false;
    while (!rest.empty()) {
      std::size_t best = in.size(), best_len = 0;
      for (std::size_t k = 0; k < in.size(); ++k) {
        if (rest.compare(0, in[k].size(), in[k]) == 0 && in[k].size() > best_len) {
          best = k;
          best_len = in[k].size();
        }
      }
      if (best == in.size()) return false;
      ++alpha[best];
      rest.erase(0, best_len);
    }
    if (ad::total_order(alpha) > ad::kMaxDerivativeOrder)
      throw ConfigError("derivative '" + name + "' exceeds order " + std::to_string(ad::kMaxDerivativeOrder));
    return true;
  };

  switch (node.kind) {
    case Node::Kind::Number: return push({Op::Const, -1, -1, node.number});
    case Node::Kind::Name: {
      std::size_t output = 0;
      ad::MultiIndex alpha;
      if (const auto k = find(in, node.name); k < in.size()) {
        Instr ins{Op::Input};
        ins.leaf = k;
        return push(ins);
      }
      if (field(node.name, output, alpha)) {
        Instr ins{Op::Leaf};
        ins.leaf = leaf_index(0, output, alpha);
        return push(ins);
      }
      if (node.name == "pi") return push({Op::Const, -1, -1, std::numbers::pi});
      if (node.name == "e") return push({Op::Const, -1, -1, std::numbers::e});
      throw ConfigError("unknown name '" + node.name + "' in rule");
    }
    case Node::Kind::Site: {
      std::size_t output = 0;
      ad::MultiIndex alpha;
      const auto& name = node.children[0]->name;
      if (!field(name, output, alpha)) throw ConfigError("'" + name + "@' must name an output or derivative");
      SiteSpec spec;
      for (const auto& [coord, v] : node.fixed) {
        const auto k = find(in, coord);
        if (k >= in.size()) throw ConfigError("unknown coordinate '" + coord + "' in site reference");
        spec.fixed.emplace_back(k, v);
      }
      std::sort(spec.fixed.begin(), spec.fixed.end());
      auto it = std::find(sites_.begin(), sites_.end(), spec);
      const auto site = static_cast<std::size_t>(it - sites_.begin());
      if (it == sites_.end()) sites_.push_back(spec);
      Instr ins{Op::Leaf};
      ins.leaf = leaf_index(site, output, alpha);
      return push(ins);
    }
    case Node::Kind::Negate: return push({Op::Neg, emit(*node.children[0])});
    case Node::Kind::Call: {
      const int a = emit(*node.children[0]);
      static const std::array<std::pair<const char*, Op>, 7> ops = {{{"sin", Op::Sin},
                                                                      {"cos", Op::Cos},
                                                                      {"tanh", Op::Tanh},
                                                                      {"exp", Op::Exp},
                                                                      {"log", Op::Log},
                                                                      {"sqrt", Op::Sqrt},
                                                                      {"abs", Op::Abs}}};
      for (const auto& [n, op] : ops) {
        if (node.name == n) return push({op, a});
      }
      throw ConfigError("unknown function '" + node.name + "'");
    }
    case Node::Kind::Binary: {
      const int a = emit(*node.children[0]);
      const int b = emit(*node.children[1]);
      const char c = node.name[0];
      const Op op = c == '+' ? Op::Add : c == '-' ? Op::Sub : c == '*' ? Op::Mul : c == '/' ? Op::Div : Op::Pow;
      return push({op, a, b});
    }
  }
  throw ConfigError("malformed expression");
}

unsigned CompiledResidual::max_order() const {
  unsigned m = 0;
  for (const auto& l : leaves_) m = std::max(m, ad::total_order(l.alpha));
  return m;
}

std::vector<ad::MultiIndex> CompiledResidual::site_requests(std::size_t site) const {
  std::vector<ad::MultiIndex> req;
  for (const auto& l : leaves_) {
    if (l.site == site) req.push_back(l.alpha);
  }
  return req;
}

void CompiledResidual::forward(const Points& points, const std::vector<Eigen::ArrayXd>& leaf_values,
                               std::vector<Eigen::ArrayXd>& vals) const {
  const auto n = points.cols();
  vals.resize(tape_.size());
  for (std::size_t i = 0; i < tape_.size(); ++i) {
    const auto& ins = tape_[i];
    auto& v = vals[i];
    switch (ins.op) {
      case Op::Const: v.setConstant(n, ins.value); break;
      case Op::Input: v = points.row(static_cast<Eigen::Index>(ins.leaf)).transpose().array(); break;
      case Op::Leaf: v = leaf_values[ins.leaf]; break;
      case Op::Add: v = vals[ins.a] + vals[ins.b]; break;
      case Op::Sub: v = vals[ins.a] - vals[ins.b]; break;
      case Op::Mul: v = vals[ins.a] * vals[ins.b]; break;
      case Op::Div: v = vals[ins.a] / vals[ins.b]; break;
      case Op::Pow:
        if (tape_[ins.b].op == Op::Const) v = vals[ins.a].pow(tape_[ins.b].value);
        else v = vals[ins.a].pow(vals[ins.b]);
        break;
      case Op::Neg: v = -vals[ins.a]; break;
      case Op::Sin: v = vals[ins.a].sin(); break;
      case Op::Cos: v = vals[ins.a].cos(); break;
      case Op::Tanh: v = vals[ins.a].tanh(); break;
      case Op::Exp: v = vals[ins.a].exp(); break;
      case Op::Log: v = vals[ins.a].log(); break;
      case Op::Sqrt: v = vals[ins.a].sqrt(); break;
      case Op::Abs: v = vals[ins.a].abs(); break;
    }
  }
}

void CompiledResidual::reverse(const std::vector<Eigen::ArrayXd>& vals, std::vector<Eigen::ArrayXd>& adj) const {
  for (std::size_t i = tape_.size(); i-- > 0;) {
    const auto& ins = tape_[i];
    const auto& g = adj[i];
    if (ins.op == Op::Const || ins.op == Op::Input || ins.op == Op::Leaf) continue;
    const auto& y = vals[i];
    switch (ins.op) {
      case Op::Add:
        adj[ins.a] += g;
        adj[ins.b] += g;
        break;
      case Op::Sub:
        adj[ins.a] += g;
        adj[ins.b] -= g;
        break;
      case Op::Mul:
        adj[ins.a] += g * vals[ins.b];
        adj[ins.b] += g * vals[ins.a];
        break;
      case Op::Div:
        adj[ins.a] += g / vals[ins.b];
        adj[ins.b] -= g * y / vals[ins.b];
        break;
      case Op::Pow:
        if (tape_[ins.b].op == Op::Const) {
          const double p = tape_[ins.b].value;
          adj[ins.a] += g * p * vals[ins.a].pow(p - 1.0);
        } else {
          adj[ins.a] += g * vals[ins.b] * vals[ins.a].pow(vals[ins.b] - 1.0);
          adj[ins.b] += g * y * vals[ins.a].log();
        }
        break;
      case Op::Neg: adj[ins.a] -= g; break;
      case Op::Sin: adj[ins.a] += g * vals[ins.a].cos(); break;
      case Op::Cos: adj[ins.a] -= g * vals[ins.a].sin(); break;
      case Op::Tanh: adj[ins.a] += g * (1.0 - y.square()); break;
      case Op::Exp: adj[ins.a] += g * y; break;
      case Op::Log: adj[ins.a] += g / vals[ins.a]; break;
      case Op::Sqrt: adj[ins.a] += 0.5 * g / y; break;
      case Op::Abs: adj[ins.a] += g * vals[ins.a].sign(); break;
      default: break;
    }
  }
}

Eigen::MatrixXd CompiledResidual::residuals(const FieldProvider& field, const Points& points) const {
  std::vector<Eigen::ArrayXd> leaf_values;
  for (const auto& l : leaves_) leaf_values.push_back(field(sites_[l.site].apply(points), l.output, l.alpha));
  std::vector<Eigen::ArrayXd> vals;
  forward(points, leaf_values, vals);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(roots_.size()), points.cols());
  for (std::size_t c = 0; c < roots_.size(); ++c) out.row(static_cast<Eigen::Index>(c)) = vals[roots_[c]].matrix().transpose();
  return out;
}

Eigen::MatrixXd CompiledResidual::residuals(const ad::Network& net, const Points& points) const {
  ad::check_points(points, symbols_.inputs.size());
  if (net.spec().input_dim != symbols_.inputs.size() || net.spec().output_dim != symbols_.outputs.size())
    throw std::invalid_argument("network shape does not match the rule's symbols");
  std::vector<ad::OutputJets> jets;
  std::vector<ad::JetPlan> plans;
  for (std::size_t s = 0; s < sites_.size(); ++s) plans.emplace_back(symbols_.inputs.size(), site_requests(s));
  for (std::size_t s = 0; s < sites_.size(); ++s) {
    ad::JetEvaluator ev(net, plans[s]);
    jets.push_back(ev.forward(sites_[s].apply(points), false));
  }
  std::vector<Eigen::ArrayXd> leaf_values;
  const auto n = static_cast<std::size_t>(points.cols());
  for (const auto& l : leaves_) {
    const auto j = plans[l.site].index_of(l.alpha);
    leaf_values.push_back(ad::multi_factorial(l.alpha) *
                          jets[l.site].coefficients.row(static_cast<Eigen::Index>(l.output))
                              .segment(static_cast<Eigen::Index>(j * n), static_cast<Eigen::Index>(n))
                              .transpose()
                              .array());
  }
  std::vector<Eigen::ArrayXd> vals;
  forward(points, leaf_values, vals);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(roots_.size()), points.cols());
  for (std::size_t c = 0; c < roots_.size(); ++c) out.row(static_cast<Eigen::Index>(c)) = vals[roots_[c]].matrix().transpose();
  return out;
}

ad::LossTerm CompiledResidual::make_term(const Points& points, double scale) const {
  if (points.rows() != static_cast<Eigen::Index>(symbols_.inputs.size()))
    throw std::invalid_argument("collocation points do not match the rule's inputs");
  ad::LossTerm term;
  term.scale = scale;
  for (std::size_t s = 0; s < sites_.size(); ++s)
    term.sites.push_back({sites_[s].apply(points), ad::JetPlan(symbols_.inputs.size(), site_requests(s))});
  struct LeafRef {
    std::size_t site, output, index;
    double factor;
  };
  std::vector<LeafRef> refs;
  for (const auto& l : leaves_)
    refs.push_back({l.site, l.output, term.sites[l.site].plan.index_of(l.alpha), ad::multi_factorial(l.alpha)});
  term.kernel = [self = *this, refs, points](std::span<const ad::OutputJets> jets, std::size_t begin,
                                              std::size_t end, std::span<Eigen::MatrixXd> adjoints) {
    const auto m = static_cast<Eigen::Index>(end - begin);
    std::vector<Eigen::ArrayXd> leaf_values;
    leaf_values.reserve(refs.size());
    for (const auto& r : refs) {
      leaf_values.push_back(r.factor * jets[r.site].coefficients.row(static_cast<Eigen::Index>(r.output))
                                           .segment(static_cast<Eigen::Index>(r.index) * m, m)
                                           .transpose()
                                           .array());
    }
    const Points chunk = points.middleCols(static_cast<Eigen::Index>(begin), m);
    std::vector<Eigen::ArrayXd> vals;
    self.forward(chunk, leaf_values, vals);
    std::vector<Eigen::ArrayXd> adj(vals.size());
    for (auto& a : adj) a.setZero(m);
    double sum = 0.0;
    for (int root : self.roots_) {
      const auto& g = vals[root];
      if (self.inequality_) {
        const Eigen::ArrayXd h = (-g).max(0.0);
        sum += h.square().sum();
        adj[root] += -2.0 * h;
      } else {
        sum += g.square().sum();
        adj[root] += 2.0 * g;
      }
    }
    self.reverse(vals, adj);
    for (std::size_t i = 0; i < self.tape_.size(); ++i) {
      const auto& ins = self.tape_[i];
      if (ins.op != Op::Leaf) continue;
      const auto& r = refs[ins.leaf];
      adjoints[r.site].row(static_cast<Eigen::Index>(r.output)).segment(static_cast<Eigen::Index>(r.index) * m, m) +=
          r.factor * adj[i].matrix().transpose();
    }
    return sum;
  };
  return term;
}

}  // namespace rulewise::rules
