#include "renorm/multiindex.hpp"

#include <sstream>

#include "renorm/rational.hpp"

namespace renorm {

std::string rational_to_string(const Rational& q) {
  std::ostringstream os;
  os << q.numerator();
  if (q.denominator() != 1) os << '/' << q.denominator();
  return os.str();
}

std::optional<Rational> parse_rational(const std::string& text) {
  std::string s = text;
  if (s.empty()) return std::nullopt;
  auto slash = s.find('/');
  try {
    if (slash != std::string::npos) {
      long long num = std::stoll(s.substr(0, slash));
      long long den = std::stoll(s.substr(slash + 1));
      if (den == 0) return std::nullopt;
      return Rational(num, den);
    }
    auto dot = s.find('.');
    if (dot == std::string::npos) return Rational(std::stoll(s));
    std::string ip = s.substr(0, dot), fp = s.substr(dot + 1);
    bool neg = !ip.empty() && ip[0] == '-';
    long long whole = ip.empty() || ip == "-" ? 0 : std::stoll(ip);
    long long den = 1;
    for (size_t i = 0; i < fp.size(); ++i) den *= 10;
    long long frac = fp.empty() ? 0 : std::stoll(fp);
    Rational r = Rational(std::llabs(whole)) + Rational(frac, den);
    return neg || whole < 0 ? -r : r;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

std::string degree_to_string(const Degree& deg) {
  std::ostringstream os;
  if (deg.xi_mult != 0) {
    os << rational_to_string(deg.xi_mult) << "*a0";
    if (deg.constant > 0) os << "+" << rational_to_string(deg.constant);
    if (deg.constant < 0) os << rational_to_string(deg.constant);
  } else {
    os << rational_to_string(deg.constant);
  }
  return os.str();
}

double factorial(int n) {
  double r = 1.0;
  for (int i = 2; i <= n; ++i) r *= i;
  return r;
}

double multi_factorial(const MultiIndex& k) {
  double r = 1.0;
  for (int i = 0; i < k.dim; ++i) r *= factorial(k.k[i]);
  return r;
}

double multi_binomial(const MultiIndex& j, const MultiIndex& i) {
  if (!j.dominates(i)) return 0.0;
  double r = 1.0;
  for (int c = 0; c < kMaxDim; ++c)
    r *= factorial(j.k[c]) / (factorial(i.k[c]) * factorial(j.k[c] - i.k[c]));
  return r;
}

static void enumerate_rec(int dim, int pos, int remaining, MultiIndex& cur,
                          std::vector<MultiIndex>& out, bool exact) {
  if (pos == dim) {
    if (!exact || remaining == 0) out.push_back(cur);
    return;
  }
  for (int v = 0; v <= remaining; ++v) {
    cur.k[pos] = v;
    enumerate_rec(dim, pos + 1, remaining - v, cur, out, exact);
  }
  cur.k[pos] = 0;
}

std::vector<MultiIndex> multiindices_up_to(int dim, int max_order) {
  std::vector<MultiIndex> out;
  MultiIndex cur(dim);
  enumerate_rec(dim, 0, max_order, cur, out, false);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<MultiIndex> multiindices_of_order(int dim, int order) {
  std::vector<MultiIndex> out;
  MultiIndex cur(dim);
  enumerate_rec(dim, 0, order, cur, out, true);
  std::sort(out.begin(), out.end());
  return out;
}

std::string multiindex_to_string(const MultiIndex& k) {
  std::ostringstream os;
  os << '[';
  for (int i = 0; i < k.dim; ++i) {
    if (i) os << ',';
    os << k.k[i];
  }
  os << ']';
  return os.str();
}

std::optional<MultiIndex> parse_multiindex(const std::string& text) {
  if (text.size() < 2 || text.front() != '[' || text.back() != ']') return std::nullopt;
  std::string body = text.substr(1, text.size() - 2);
  MultiIndex k(0);
  if (body.empty()) return std::nullopt;
  std::istringstream is(body);
  std::string item;
  int i = 0;
  while (std::getline(is, item, ',')) {
    if (i >= kMaxDim) return std::nullopt;
    try {
      k.k[i++] = std::stoi(item);
    } catch (const std::exception&) {
      return std::nullopt;
    }
  }
  k.dim = i;
  return k;
}

}  // namespace renorm
