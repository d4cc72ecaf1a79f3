#include "renorm/symbols.hpp"

#include <algorithm>
#include <memory>
#include <mutex>
#include <unordered_map>

namespace renorm::sym {

namespace {

std::mutex g_intern_mutex;
std::unordered_map<std::string, std::unique_ptr<Node>>& intern_table() {
  static std::unordered_map<std::string, std::unique_ptr<Node>> table;
  return table;
}

Symbol intern(Node&& n) {
  std::lock_guard<std::mutex> lock(g_intern_mutex);
  auto& table = intern_table();
  auto it = table.find(n.text);
  if (it != table.end()) return Symbol(it->second.get());
  auto owned = std::make_unique<Node>(std::move(n));
  const Node* raw = owned.get();
  table.emplace(raw->text, std::move(owned));
  return Symbol(raw);
}

Symbol make_leaf(Kind kind, const std::string& text, int n_xi, int n_xidot) {
  Node n;
  n.kind = kind;
  n.text = text;
  n.n_xi = n_xi;
  n.n_xidot = n_xidot;
  return intern(std::move(n));
}

}  // namespace

Symbol one() {
  static Symbol s = make_leaf(Kind::One, "1", 0, 0);
  return s;
}

Symbol xi() {
  static Symbol s = make_leaf(Kind::Xi, "Xi", 1, 0);
  return s;
}

Symbol xidot() {
  static Symbol s = make_leaf(Kind::XiDot, "XiD", 0, 1);
  return s;
}

Symbol poly(const MultiIndex& k) {
  if (k.is_zero()) return one();
  Node n;
  n.kind = Kind::Poly;
  n.mi = k;
  n.text = "X^" + multiindex_to_string(k);
  n.poly_order_total = k.order();
  return intern(std::move(n));
}

Symbol planted(const MultiIndex& k, const Symbol& child) {
  Node n;
  n.kind = Kind::Planted;
  n.mi = k;
  n.child = child;
  n.text = k.is_zero() ? "I(" + child->text + ")"
                       : "I_" + multiindex_to_string(k) + "(" + child->text + ")";
  n.n_xi = child->n_xi;
  n.n_xidot = child->n_xidot;
  n.n_edges = child->n_edges + 1;
  n.poly_order_total = child->poly_order_total;
  n.deco_order_total = child->deco_order_total + k.order();
  n.node_count = child->node_count + 1;
  return intern(std::move(n));
}

std::vector<Symbol> root_factors(const Symbol& s) {
  if (s->kind == Kind::One) return {};
  if (s->kind == Kind::Product) return s->factors;
  return {s};
}

Symbol product(std::vector<Symbol> factors) {
  std::vector<Symbol> flat;
  MultiIndex poly_sum;
  bool have_poly = false;
  for (const Symbol& f : factors) {
    for (const Symbol& g : root_factors(f)) {
      if (g->kind == Kind::Poly) {
        poly_sum = have_poly ? poly_sum + g->mi : g->mi;
        have_poly = true;
      } else {
        flat.push_back(g);
      }
    }
  }
  if (have_poly && !poly_sum.is_zero()) flat.push_back(poly(poly_sum));
  if (flat.empty()) return one();
  if (flat.size() == 1) return flat[0];
  // Canonical factor order: noises, then the monomial, then planted factors.
  auto rank = [](const Symbol& s) {
    switch (s->kind) {
      case Kind::Xi: return 0;
      case Kind::XiDot: return 1;
      case Kind::Poly: return 2;
      default: return 3;
    }
  };
  std::sort(flat.begin(), flat.end(), [&](const Symbol& a, const Symbol& b) {
    int ra = rank(a), rb = rank(b);
    if (ra != rb) return ra < rb;
    return a->text < b->text;
  });
  Node n;
  n.kind = Kind::Product;
  n.factors = flat;
  for (size_t i = 0; i < flat.size(); ++i) {
    if (i) n.text += '*';
    n.text += flat[i]->text;
    n.n_xi += flat[i]->n_xi;
    n.n_xidot += flat[i]->n_xidot;
    n.n_edges += flat[i]->n_edges;
    n.poly_order_total += flat[i]->poly_order_total;
    n.deco_order_total += flat[i]->deco_order_total;
    n.node_count += flat[i]->node_count;
  }
  return intern(std::move(n));
}

Symbol power(const Symbol& s, int n) {
  std::vector<Symbol> fs(static_cast<size_t>(n), s);
  return product(std::move(fs));
}

namespace {

struct Parser {
  const std::string& text;
  int dim;
  size_t pos = 0;

  char peek() const { return pos < text.size() ? text[pos] : '\0'; }
  void skip_ws() {
    while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t')) ++pos;
  }
  bool consume(char c) {
    skip_ws();
    if (peek() == c) {
      ++pos;
      return true;
    }
    return false;
  }
  bool consume_word(const char* w) {
    skip_ws();
    size_t n = std::char_traits<char>::length(w);
    if (text.compare(pos, n, w) == 0) {
      pos += n;
      return true;
    }
    return false;
  }

  MultiIndex parse_mi() {
    skip_ws();
    size_t start = pos;
    if (peek() != '[') throw ParseError("expected '['", pos);
    size_t close = text.find(']', pos);
    if (close == std::string::npos) throw ParseError("unterminated multiindex", start);
    auto mi = parse_multiindex(text.substr(pos, close - pos + 1));
    if (!mi) throw ParseError("malformed multiindex", start);
    if (mi->dim != dim)
      throw ParseError("multiindex length " + std::to_string(mi->dim) +
                           " does not match dimension " + std::to_string(dim),
                       start);
    for (int i = 0; i < mi->dim; ++i)
      if (mi->k[i] < 0) throw ParseError("negative multiindex entry", start);
    pos = close + 1;
    return *mi;
  }

  // Order matters: "XiD" is tried before "Xi", "I_" before "I(".
  Symbol parse_term() {
    skip_ws();
    size_t start = pos;
    if (consume_word("1")) return one();
    if (consume_word("XiD")) return xidot();
    if (consume_word("Xi")) return xi();
    if (consume_word("X^")) return poly(parse_mi());
    if (consume_word("I_")) {
      MultiIndex k = parse_mi();
      if (!consume('(')) throw ParseError("expected '('", pos);
      Symbol inner = parse_expr();
      if (!consume(')')) throw ParseError("expected ')'", pos);
      return planted(k, inner);
    }
    if (consume_word("I(")) {
      Symbol inner = parse_expr();
      if (!consume(')')) throw ParseError("expected ')'", pos);
      return planted(MultiIndex(dim), inner);
    }
    throw ParseError("expected symbol term", start);
  }

  Symbol parse_expr() {
    std::vector<Symbol> factors{parse_term()};
    while (consume('*')) factors.push_back(parse_term());
    return product(std::move(factors));
  }
};

}  // namespace

Symbol parse_symbol(const std::string& text, int dim) {
  Parser p{text, dim};
  Symbol s = p.parse_expr();
  p.skip_ws();
  if (p.pos != text.size()) throw ParseError("trailing input", p.pos);
  return s;
}

Symbol parse_symbol(const std::string& text, const DegreeParams& params) {
  return parse_symbol(text, params.d);
}

Stats statistics(const Symbol& s) { return {s->n_xi, s->n_xidot, s->n_edges}; }

Degree degree_with_xidot(const Symbol& s, const DegreeParams& params, const Degree& xidot_deg) {
  Degree deg;
  deg.xi_mult = Rational(s->n_xi) + xidot_deg.xi_mult * Rational(s->n_xidot);
  deg.constant = Rational(s->poly_order_total) + Rational(s->n_edges) * params.kernel_gain -
                 Rational(s->deco_order_total) + xidot_deg.constant * Rational(s->n_xidot);
  return deg;
}

Degree degree_exact(const Symbol& s, const DegreeParams& params) {
  Degree xd = params.xidot_mode == XiDotMode::Classic ? Degree{Rational(1), Rational(0)}
                                                      : Degree{Rational(0), params.theta};
  return degree_with_xidot(s, params, xd);
}

Rational degree_value(const Symbol& s, const DegreeParams& params) {
  return degree_exact(s, params).value(params.alpha0);
}

std::strong_ordering preorder_cmp(const Symbol& a, const Symbol& b, const DegreeParams& params) {
  if (a->n_xi != b->n_xi) return a->n_xi <=> b->n_xi;
  if (a->n_edges != b->n_edges) return a->n_edges <=> b->n_edges;
  Rational ra = degree_value(a, params), rb = degree_value(b, params);
  if (ra != rb) return ra < rb ? std::strong_ordering::less : std::strong_ordering::greater;
  return a->text.compare(b->text) <=> 0;
}

void SymLin::add(const Symbol& s, long long c) {
  if (c == 0) return;
  auto it = std::lower_bound(terms.begin(), terms.end(), s,
                             [](const auto& t, const Symbol& x) { return t.first->text < x->text; });
  if (it != terms.end() && it->first == s) {
    it->second += c;
    if (it->second == 0) terms.erase(it);
  } else {
    terms.insert(it, {s, c});
  }
}

SymLin& SymLin::operator+=(const SymLin& o) {
  for (const auto& [s, c] : o.terms) add(s, c);
  return *this;
}

SymLin malliavin_D(const Symbol& s) {
  if (s->n_xidot > 0) throw std::invalid_argument("malliavin_D: input contains XiD");
  SymLin out;
  switch (s->kind) {
    case Kind::One:
    case Kind::Poly:
    case Kind::XiDot:
      break;
    case Kind::Xi:
      out.add(xidot(), 1);
      break;
    case Kind::Planted:
      for (const auto& [t, c] : malliavin_D(s->child).terms) out.add(planted(s->mi, t), c);
      break;
    case Kind::Product:
      for (size_t i = 0; i < s->factors.size(); ++i) {
        SymLin di = malliavin_D(s->factors[i]);
        for (const auto& [t, c] : di.terms) {
          std::vector<Symbol> fs = s->factors;
          fs[i] = t;
          out.add(product(std::move(fs)), c);
        }
      }
      break;
  }
  return out;
}

std::vector<Symbol> extended_basis(const std::vector<Symbol>& basis) {
  std::vector<Symbol> out;
  for (const Symbol& s : basis)
    for (const auto& [t, c] : malliavin_D(s).terms) out.push_back(t);
  std::sort(out.begin(), out.end(), SymbolTextLess{});
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace renorm::sym
