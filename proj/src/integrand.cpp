#include "renorm/integrand.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace renorm::integrand {

std::pair<Factor, int> make_kernel(const std::string& name, int edge, const MultiIndex& deriv,
                                   int a, int b, int slice) {
  Factor f;
  f.kind = FactorKind::Kernel;
  f.name = name;
  f.slice = slice;
  f.edge = edge;
  f.deriv = deriv;
  f.a = a;
  f.b = b;
  int sign = 1;
  if (f.a > f.b) {
    std::swap(f.a, f.b);
    if (deriv.order() % 2 == 1) sign = -1;
  }
  return {f, sign};
}

std::pair<Factor, int> make_mono(const MultiIndex& expo, int a, int b) {
  Factor f;
  f.kind = FactorKind::Mono;
  f.name.clear();
  f.deriv = expo;
  f.a = a;
  f.b = b;
  int sign = 1;
  if (f.a > f.b) {
    std::swap(f.a, f.b);
    if (expo.order() % 2 == 1) sign = -1;
  }
  return {f, sign};
}

Factor make_test(const std::string& name, int a, double lambda, const MultiIndex& deriv) {
  Factor f;
  f.kind = FactorKind::Test;
  f.name = name;
  f.deriv = deriv;
  f.a = a;
  f.b = -1;
  f.lambda = lambda;
  return f;
}

void canonicalize(Integrand& I) {
  std::vector<Term> out;
  for (Term& t : I.terms) {
    if (t.coeff == 0) continue;
    bool zero = false;
    std::vector<Factor> fs;
    for (const Factor& f : t.factors) {
      if (f.kind == FactorKind::Mono) {
        if (f.deriv.order() == 0) continue;
        if (f.a == f.b) {
          zero = true;
          break;
        }
      } else if (f.kind == FactorKind::Kernel) {
        // even kernel: odd derivatives vanish at coinciding arguments
        if (f.a == f.b && f.deriv.order() % 2 == 1) {
          zero = true;
          break;
        }
      }
      fs.push_back(f);
    }
    if (zero) continue;
    std::sort(fs.begin(), fs.end());
    out.push_back({t.coeff, std::move(fs)});
  }
  std::sort(out.begin(), out.end(),
            [](const Term& x, const Term& y) { return x.factors < y.factors; });
  std::vector<Term> merged;
  for (Term& t : out) {
    if (!merged.empty() && merged.back().factors == t.factors)
      merged.back().coeff += t.coeff;
    else
      merged.push_back(std::move(t));
  }
  std::erase_if(merged, [](const Term& t) { return t.coeff == 0; });
  I.terms = std::move(merged);
}

namespace {

void require_same_vars(const Integrand& x, const Integrand& y) {
  if (x.n_ext != y.n_ext || x.n_vars != y.n_vars)
    throw IntegrandError("integrand arithmetic over mismatched variable tables");
}

}  // namespace

Integrand operator+(const Integrand& x, const Integrand& y) {
  require_same_vars(x, y);
  Integrand out = x;
  out.terms.insert(out.terms.end(), y.terms.begin(), y.terms.end());
  canonicalize(out);
  return out;
}

Integrand operator-(const Integrand& x, const Integrand& y) {
  return x + Rational(-1) * y;
}

Integrand operator*(const Rational& c, const Integrand& x) {
  Integrand out = x;
  for (Term& t : out.terms) t.coeff *= c;
  canonicalize(out);
  return out;
}

Integrand graph_integrand(const graphs::FeynGraph& G) {
  Integrand I;
  I.n_ext = G.n_ext();
  I.n_vars = G.n_vertices();
  Term t;
  for (size_t e = 0; e < G.edges.size(); ++e) {
    const graphs::Edge& ed = G.edges[e];
    auto [f, sign] = make_kernel(ed.kernel, static_cast<int>(e), ed.deriv, ed.u, ed.v);
    t.coeff *= sign;
    t.factors.push_back(f);
  }
  I.terms.push_back(std::move(t));
  canonicalize(I);
  return I;
}

std::string to_sexpr(const Integrand& I0) {
  Integrand I = I0;
  canonicalize(I);
  std::map<int, int> rename;
  auto var_label = [&](int v) -> std::string {
    if (v < I.n_ext) return "z" + std::to_string(v);
    auto it = rename.find(v);
    if (it == rename.end()) it = rename.emplace(v, static_cast<int>(rename.size())).first;
    return "y" + std::to_string(it->second);
  };
  std::ostringstream os;
  os << "(integrand :ext " << I.n_ext << " :int " << I.n_vars - I.n_ext;
  for (const Term& t : I.terms) {
    os << "\n  (term " << rational_to_string(t.coeff);
    for (const Factor& f : t.factors) {
      switch (f.kind) {
        case FactorKind::Kernel:
          os << " (K " << f.name << ' ';
          if (f.slice == kNoSlice)
            os << '_';
          else
            os << f.slice;
          os << ' ' << multiindex_to_string(f.deriv) << ' ' << var_label(f.a) << ' '
             << var_label(f.b) << ')';
          break;
        case FactorKind::Mono:
          os << " (X " << multiindex_to_string(f.deriv) << ' ' << var_label(f.a) << ' '
             << var_label(f.b) << ')';
          break;
        case FactorKind::Test: {
          std::ostringstream lam;
          lam.precision(17);
          lam << f.lambda;
          os << " (phi " << f.name << ' ' << multiindex_to_string(f.deriv) << ' '
             << var_label(f.a) << ' ' << lam.str() << ')';
          break;
        }
      }
    }
    os << ')';
  }
  os << ")";
  return os.str();
}

namespace {

double wrap(double t, double box) {
  t = std::fmod(t, box);
  if (t < -box / 2) t += box;
  if (t >= box / 2) t -= box;
  return t;
}

struct PointSource {
  const EvalMethod& m;
  std::vector<std::array<double, 4>> pos;  // by var id

  explicit PointSource(const Integrand& I, const EvalMethod& method) : m(method) {
    pos.assign(I.n_vars, {0, 0, 0, 0});
    for (size_t v = 0; v < m.ext_positions.size() && v < static_cast<size_t>(I.n_ext); ++v)
      pos[v] = m.ext_positions[v];
  }
};

double eval_term(const Term& t, const std::vector<std::array<double, 4>>& pos,
                 const std::map<std::string, Callable>& bindings, const EvalMethod& m) {
  double prod = to_double(t.coeff);
  for (const Factor& f : t.factors) {
    std::array<double, 4> z{0, 0, 0, 0};
    if (f.kind == FactorKind::Test) {
      z = pos[f.a];
    } else {
      for (int i = 0; i < m.d; ++i) {
        double dz = pos[f.a][i] - pos[f.b][i];
        z[i] = m.periodic ? wrap(dz, m.box) : dz;
      }
    }
    if (f.kind == FactorKind::Mono) {
      for (int i = 0; i < m.d; ++i)
        for (int p = 0; p < f.deriv[i]; ++p) prod *= z[i];
      continue;
    }
    auto it = bindings.find(f.name);
    if (it == bindings.end()) throw IntegrandError("unbound kernel: " + f.name);
    prod *= it->second(f.slice, f.deriv, z, f.lambda);
  }
  return prod;
}

}  // namespace

EvalResult evaluate(const Integrand& I, const std::map<std::string, Callable>& bindings,
                    const EvalMethod& method) {
  int n_int = I.n_vars - I.n_ext;
  PointSource ps(I, method);
  if (I.terms.empty()) return {0.0, 0.0};

  if (method.kind == EvalMethod::Kind::MonteCarlo) {
    std::mt19937_64 rng(method.seed);
    std::uniform_real_distribution<double> u(0.0, method.box);
    double vol = std::pow(method.box, method.d * n_int);
    double sum = 0, comp = 0, sumsq = 0;
    for (int s = 0; s < method.n; ++s) {
      for (int v = I.n_ext; v < I.n_vars; ++v)
        for (int i = 0; i < method.d; ++i) ps.pos[v][i] = u(rng);
      double val = 0;
      for (const Term& t : I.terms) val += eval_term(t, ps.pos, bindings, method);
      double y = val - comp;
      double tmp = sum + y;
      comp = (tmp - sum) - y;
      sum = tmp;
      sumsq += val * val;
    }
    double mean = sum / method.n;
    double var = std::max(0.0, sumsq / method.n - mean * mean);
    return {mean * vol, std::sqrt(var / method.n) * vol};
  }

  long long per_var = 1;
  for (int i = 0; i < method.d; ++i) per_var *= method.n;
  double cells = std::pow(static_cast<double>(per_var), n_int);
  if (cells > (1 << 27)) throw IntegrandError("grid quadrature too large");
  double h = method.box / method.n;
  double cell = std::pow(h, method.d * n_int);
  double shift = method.midpoint ? 0.5 : 0.0;
  long long total = 1;
  for (int v = 0; v < n_int; ++v) total *= per_var;
  double sum = 0, comp = 0;
  for (long long idx = 0; idx < total; ++idx) {
    long long rest = idx;
    for (int v = 0; v < n_int; ++v) {
      long long cellv = rest % per_var;
      rest /= per_var;
      for (int i = 0; i < method.d; ++i) {
        ps.pos[I.n_ext + v][i] = (cellv % method.n + shift) * h;
        cellv /= method.n;
      }
    }
    double val = 0;
    for (const Term& t : I.terms) val += eval_term(t, ps.pos, bindings, method);
    double y = val * cell - comp;
    double tmp = sum + y;
    comp = (tmp - sum) - y;
    sum = tmp;
  }
  return {sum, 0.0};
}

EvalResult evaluate_refined(const Integrand& I, const std::map<std::string, Callable>& bindings,
                            const EvalMethod& method, double growth_ratio) {
  EvalMethod m = method;
  double prev = 0;
  EvalResult r{};
  int grows = 0;
  for (int step = 0; step < 3; ++step) {
    r = evaluate(I, bindings, m);
    if (step > 0 && std::abs(r.value) > growth_ratio * std::abs(prev)) ++grows;
    prev = r.value;
    m.n *= 2;
  }
  if (grows == 2) throw SingularityError("value keeps growing under grid refinement");
  return r;
}

}  // namespace renorm::integrand
