#include "getzler/symbols.hpp"

#include <cmath>
#include <functional>
#include <mutex>
#include <sstream>
#include <stdexcept>

namespace getzler {

namespace {

using Term = PolyExpr::Term;

PolyExpr xi_pow(const Multi& a) {
  Monomial m;
  for (int k = 0; k < kMaxDim; ++k) m.xi[k] = uint8_t(a[k]);
  return PolyExpr::monomial(m, 1);
}

Scalar factorial(int k) {
  Scalar r(1);
  for (int i = 2; i <= k; ++i) r *= Scalar(i);
  return r;
}

Scalar multi_factorial(const Multi& a) {
  Scalar r(1);
  for (int v : a) r *= factorial(v);
  return r;
}

// all alpha in N^n with |alpha| = k
std::vector<Multi> multis_of_order(int n, int k) {
  std::vector<Multi> out;
  Multi a{};
  std::function<void(int, int)> rec = [&](int pos, int left) {
    if (pos == n - 1) {
      a[pos] = left;
      out.push_back(a);
      a[pos] = 0;
      return;
    }
    for (int v = left; v >= 0; --v) {
      a[pos] = v;
      rec(pos + 1, left - v);
    }
    a[pos] = 0;
  };
  if (n == 0) {
    if (k == 0) out.push_back(a);
    return out;
  }
  rec(0, k);
  return out;
}

SymMatrix scaled(const SymMatrix& m, const PolyExpr& f) {
  return m.map([&](const PolyExpr& p) { return p * f; });
}

void merge(std::vector<HomogTerm>& v, const HomogTerm& t) {
  if (t.coeff.is_zero()) return;
  for (auto it = v.begin(); it != v.end(); ++it)
    if (it->norm_power == t.norm_power && it->z_coef == t.z_coef) {
      it->coeff += t.coeff;
      if (it->coeff.is_zero()) v.erase(it);
      return;
    }
  v.push_back(t);
}

std::vector<HomogTerm> dxi(const std::vector<HomogTerm>& ts, int k) {
  std::vector<HomogTerm> out;
  PolyExpr xk = PolyExpr::xi(k);
  for (const auto& t : ts) {
    merge(out, {t.coeff.map([&](const PolyExpr& p) { return p.dxi(k); }), t.norm_power, t.z_coef});
    // d/dxi_k |xi|^e = e xi_k |xi|^{e-2}
    PolyExpr e = PolyExpr(t.norm_power) + PolyExpr::zvar() * Scalar(t.z_coef);
    if (!e.is_zero()) merge(out, {scaled(t.coeff, xk * e), t.norm_power - 2, t.z_coef});
  }
  return out;
}

std::vector<HomogTerm> dx(const std::vector<HomogTerm>& ts, int k) {
  std::vector<HomogTerm> out;
  for (const auto& t : ts) merge(out, {t.coeff.map([&](const PolyExpr& p) { return p.dx(k); }), t.norm_power, t.z_coef});
  return out;
}

template <class T, class D>
T derive(T v, const Multi& a, D&& d) {
  for (int k = 0; k < kMaxDim; ++k)
    for (int r = 0; r < a[k]; ++r) v = d(v, k + 1);
  return v;
}

RComponent dxi_r(const RComponent& c, int k) {
  RComponent out;
  PolyExpr xk = PolyExpr::xi(k);
  auto put = [&](int m, const SymMatrix& v) {
    if (v.is_zero()) return;
    auto it = out.find(m);
    if (it == out.end())
      out.emplace(m, v);
    else
      it->second += v;
  };
  for (const auto& [m, M] : c) {
    put(m, M.map([&](const PolyExpr& p) { return p.dxi(k); }));
    // d/dxi_k r^m = -2 m xi_k r^{m+1}
    if (m) put(m + 1, scaled(M, xk * Scalar(-2 * m)));
  }
  for (auto it = out.begin(); it != out.end();) it = it->second.is_zero() ? out.erase(it) : std::next(it);
  return out;
}

void add_r(RComponent& dst, int m, const SymMatrix& v) {
  if (v.is_zero()) return;
  auto it = dst.find(m);
  if (it == dst.end()) {
    dst.emplace(m, v);
    return;
  }
  it->second += v;
  if (it->second.is_zero()) dst.erase(it);
}

PolyExpr sphere_reduce(const PolyExpr& p, int n) {
  if (n == 0) return p;
  PolyExpr out, work = p;
  while (!work.is_zero()) {
    std::vector<Term> keep;
    PolyExpr next;
    for (const auto& [m, c] : work.terms()) {
      if (m.xi[n - 1] < 2) {
        keep.emplace_back(m, c);
        continue;
      }
      Monomial mm = m;
      mm.xi[n - 1] -= 2;
      PolyExpr base = PolyExpr::monomial(mm, c);
      next += base;
      for (int i = 1; i < n; ++i) next -= base * PolyExpr::xi(i) * PolyExpr::xi(i);
    }
    out += PolyExpr::from_terms(std::move(keep));
    work = next;
  }
  return out;
}

int xi_degree_ok(const PolyExpr& p, int want, std::string* why) {
  for (const auto& [m, c] : p.terms())
    if (m.xideg() != want) {
      if (why) *why = "monomial " + monomial_str(m) + " has xi-degree " + std::to_string(m.xideg());
      return false;
    }
  return true;
}

void check_laplace_type(const PhgSymbol& P) {
  if (P.order != 2 || P.order_z != 0) throw std::invalid_argument("Laplace-type operator of order 2 expected");
  if (P.known != INT_MAX) throw std::invalid_argument("differential operator symbol expected");
  for (const auto& [j, ts] : P.comps)
    for (const auto& t : ts)
      if (t.norm_power != 0 || t.z_coef != 0) throw std::invalid_argument("polynomial symbol expected");
  PolyExpr r2;
  for (int k = 1; k <= P.n; ++k) r2 += PolyExpr::xi(k) * PolyExpr::xi(k);
  const auto& lead = P.component(0);
  if (lead.size() != 1 || !(lead[0].coeff == SymMatrix::identity(P.fiber_n, r2)))
    throw std::invalid_argument("leading symbol is not |xi|^2 Id");
}

}  // namespace

// ---------------------------------------------------------------- PhgSymbol

void PhgSymbol::add(int j, const HomogTerm& t) {
  if (t.coeff.is_zero()) return;
  auto& v = comps[j];
  merge(v, t);
  if (v.empty()) comps.erase(j);
}

const std::vector<HomogTerm>& PhgSymbol::component(int j) const {
  static const std::vector<HomogTerm> empty;
  if (j >= known) throw std::domain_error("symbol component " + std::to_string(j) + " not available");
  auto it = comps.find(j);
  return it == comps.end() ? empty : it->second;
}

bool PhgSymbol::homogeneous(std::string* why) const {
  for (const auto& [j, ts] : comps)
    for (const auto& t : ts) {
      if (t.z_coef != order_z) {
        if (why) *why = "component " + std::to_string(j) + " has the wrong z-dependence";
        return false;
      }
      for (const auto& e : t.coeff.m)
        if (!xi_degree_ok(e, order - j - t.norm_power, why)) return false;
    }
  return true;
}

SymMatrix on_sphere(const std::vector<HomogTerm>& comp, int n) {
  if (comp.empty()) return SymMatrix();
  SymMatrix s(comp.front().coeff.n);
  for (const auto& t : comp) s += t.coeff;
  return s.map([&](const PolyExpr& p) { return sphere_reduce(p, n); });
}

bool same_components(const PhgSymbol& a, const PhgSymbol& b, int depth) {
  if (a.n != b.n || a.fiber_n != b.fiber_n || a.order != b.order || a.order_z != b.order_z) return false;
  for (int j = 0; j < depth; ++j) {
    SymMatrix x = on_sphere(a.component(j), a.n), y = on_sphere(b.component(j), b.n);
    bool zx = x.m.empty() || x.is_zero(), zy = y.m.empty() || y.is_zero();
    if (zx && zy) continue;
    if (zx != zy || !(x == y)) return false;
  }
  return true;
}

PhgSymbol symbol_of(const FormOperator& P) {
  int m = -1;
  for (const auto& [g, c] : P.terms)
    if (!c.is_zero()) m = std::max(m, multi_order(g));
  PhgSymbol s(P.n, P.fiber_n, std::max(m, 0));
  Scalar i = Scalar::i();
  for (const auto& [g, c] : P.terms) {
    int k = multi_order(g);
    s.add(s.order - k, {scaled(c, xi_pow(g) * i.pow(k)), 0, 0});
  }
  return s;
}

PhgSymbol star_product(const PhgSymbol& a, const PhgSymbol& b, int depth) {
  if (a.n != b.n || a.fiber_n != b.fiber_n) throw std::invalid_argument("symbol dimension mismatch");
  if (depth > std::min(a.known, b.known)) throw std::invalid_argument("insufficient symbol components");
  int n = a.n;
  PhgSymbol r(n, a.fiber_n, a.order + b.order, a.order_z + b.order_z);
  r.known = depth;
  std::map<std::pair<int, Multi>, std::vector<HomogTerm>> acache, bcache;
  Scalar mi = -Scalar::i();
  for (int j = 0; j < depth; ++j)
    for (int j1 = 0; j1 <= j; ++j1)
      for (int j2 = 0; j1 + j2 <= j; ++j2) {
        int k = j - j1 - j2;
        const auto& A = a.component(j1);
        const auto& B = b.component(j2);
        if (A.empty() || B.empty()) continue;
        for (const Multi& al : multis_of_order(n, k)) {
          auto ia = acache.find({j1, al});
          if (ia == acache.end())
            ia = acache.emplace(std::make_pair(j1, al), derive(A, al, [](const auto& v, int q) { return dxi(v, q); })).first;
          auto ib = bcache.find({j2, al});
          if (ib == bcache.end())
            ib = bcache.emplace(std::make_pair(j2, al), derive(B, al, [](const auto& v, int q) { return dx(v, q); })).first;
          if (ia->second.empty() || ib->second.empty()) continue;
          Scalar f = mi.pow(k) / multi_factorial(al);
          for (const auto& ta : ia->second)
            for (const auto& tb : ib->second) {
              SymMatrix c = ta.coeff * tb.coeff;
              if (!f.is_one()) c = c.map([&](const PolyExpr& p) { return p * f; });
              r.add(j, {c, ta.norm_power + tb.norm_power, ta.z_coef + tb.z_coef});
            }
        }
      }
  return r;
}

// ---------------------------------------------------------------- resolvent

bool ResolventSymbol::homogeneous(std::string* why) const {
  for (size_t j = 0; j < b.size(); ++j)
    for (const auto& [m, M] : b[j])
      for (const auto& e : M.m)
        if (!xi_degree_ok(e, 2 * m - 2 - int(j), why)) return false;
  return true;
}

ResolventSymbol resolvent_symbol(const PhgSymbol& P, int depth) {
  check_laplace_type(P);
  if (depth < 1) throw std::invalid_argument("depth must be positive");
  int n = P.n;
  ResolventSymbol R;
  R.n = n;
  R.fiber_n = P.fiber_n;
  R.b.resize(depth);
  R.b[0][1] = SymMatrix::identity(P.fiber_n, PolyExpr(1));
  std::array<SymMatrix, 3> a;
  for (int k = 1; k <= 2; ++k) {
    a[k] = SymMatrix(P.fiber_n);
    for (const auto& t : P.component(k)) a[k] += t.coeff;
  }
  std::map<std::pair<int, Multi>, RComponent> bcache;
  Scalar mi = -Scalar::i();
  for (int N = 1; N < depth; ++N) {
    RComponent S;
    for (int j = 0; j < N; ++j)
      for (int k = 1; k <= 2; ++k) {
        int ord = N - j - k;
        if (ord < 0 || a[k].is_zero()) continue;
        for (const Multi& al : multis_of_order(n, ord)) {
          SymMatrix da = a[k].map([&](const PolyExpr& p) {
            return derive(p, al, [](const PolyExpr& q, int i) { return q.dx(i); });
          });
          if (da.is_zero()) continue;
          auto it = bcache.find({j, al});
          if (it == bcache.end())
            it = bcache.emplace(std::make_pair(j, al), derive(R.b[j], al, [](const RComponent& c, int i) { return dxi_r(c, i); })).first;
          Scalar f = mi.pow(ord) / multi_factorial(al);
          for (const auto& [m, M] : it->second) add_r(S, m, (M * da).map([&](const PolyExpr& p) { return p * f; }));
        }
      }
    // b_N (|xi|^2 - mu) = -S
    for (const auto& [m, M] : S) add_r(R.b[N], m + 1, -M);
  }
  return R;
}

std::vector<RComponent> resolvent_identity_residual(const ResolventSymbol& R, const PhgSymbol& P, int depth) {
  check_laplace_type(P);
  if (depth > int(R.b.size())) throw std::invalid_argument("insufficient resolvent components");
  int n = R.n;
  std::vector<RComponent> out(depth);
  Scalar mi = -Scalar::i();
  std::array<SymMatrix, 3> a;
  a[0] = SymMatrix::identity(P.fiber_n, PolyExpr(1));  // times r^{-1}
  for (int k = 1; k <= 2; ++k) {
    a[k] = SymMatrix(P.fiber_n);
    for (const auto& t : P.component(k)) a[k] += t.coeff;
  }
  for (int N = 0; N < depth; ++N) {
    for (int j = 0; j <= N; ++j)
      for (int k = 0; k <= 2; ++k) {
        int ord = N - j - k;
        if (ord < 0) continue;
        if (k == 0 && ord > 0) continue;  // r^{-1} Id has no x-dependence
        for (const Multi& al : multis_of_order(n, ord)) {
          SymMatrix da = a[k].map([&](const PolyExpr& p) {
            return derive(p, al, [](const PolyExpr& q, int i) { return q.dx(i); });
          });
          if (da.is_zero()) continue;
          RComponent db = derive(R.b[j], al, [](const RComponent& c, int i) { return dxi_r(c, i); });
          Scalar f = mi.pow(ord) / multi_factorial(al);
          for (const auto& [m, M] : db)
            add_r(out[N], k == 0 ? m - 1 : m, (M * da).map([&](const PolyExpr& p) { return p * f; }));
        }
      }
  }
  add_r(out[0], 0, -SymMatrix::identity(R.fiber_n, PolyExpr(1)));
  return out;
}

// ---------------------------------------------------------------- powers and logarithms

PolyExpr contour_coefficient(int k) {
  if (k < 1) throw std::invalid_argument("contour power k must be >= 1");
  // (-1)^{k-1} binom(z, k-1)
  PolyExpr p(1);
  for (int i = 0; i < k - 1; ++i) p = p * (PolyExpr::zvar() - PolyExpr(i));
  Scalar c = Scalar(k % 2 ? 1 : -1) / factorial(k - 1);
  return p * c;
}

std::complex<double> contour_coefficient_value(int k, std::complex<double> z) {
  if (k < 1) throw std::invalid_argument("contour power k must be >= 1");
  std::complex<double> p = 1;
  for (int i = 0; i < k - 1; ++i) p *= (z - double(i)) / double(i + 1);
  return k % 2 ? p : -p;
}

PolyExpr shift_z(const PolyExpr& p, int s) {
  if (s == 0) return p;
  PolyExpr out;
  PolyExpr zs = PolyExpr::zvar() + PolyExpr(s);
  for (const auto& [m, c] : p.terms()) {
    Monomial mm = m;
    mm.z = 0;
    PolyExpr t = PolyExpr::monomial(mm, c);
    for (int e = 0; e < m.z; ++e) t = t * zs;
    out += t;
  }
  return out;
}

PhgSymbol complex_power_symbol(const ResolventSymbol& R, int shift) {
  PhgSymbol s(R.n, R.fiber_n, 2 * shift, 2);
  s.known = int(R.b.size());
  for (size_t j = 0; j < R.b.size(); ++j)
    for (const auto& [m, M] : R.b[j]) {
      PolyExpr C = shift_z(contour_coefficient(m), shift);
      s.add(int(j), {scaled(M, C), 2 * shift - 2 * m + 2, 2});
    }
  return s;
}

PhgSymbol power_symbol_at(const ResolventSymbol& R, int e) {
  PhgSymbol s(R.n, R.fiber_n, 2 * e, 0);
  s.known = int(R.b.size());
  for (size_t j = 0; j < R.b.size(); ++j)
    for (const auto& [m, M] : R.b[j]) {
      Scalar C = contour_coefficient(m).subst_z(Scalar(e)).constant_term();
      if (C.is_zero()) continue;
      s.add(int(j), {M.map([&](const PolyExpr& p) { return p * C; }), 2 * e - 2 * m + 2, 0});
    }
  return s;
}

std::vector<HomogTerm> log_symbol_component(const ResolventSymbol& R, int j) {
  if (j < 0 || j >= int(R.b.size())) throw std::domain_error("resolvent depth too small for this log component");
  std::vector<HomogTerm> out;
  for (const auto& [m, M] : R.b[j]) {
    // d/dz [C(z,m) |xi|^{2z+2-2m}] at z = 0; the log|xi| part is collected in the marker
    Scalar d = contour_coefficient(m).dz().subst_z(0).constant_term();
    if (!d.is_zero()) merge(out, {M.map([&](const PolyExpr& p) { return p * d; }), 2 - 2 * m, 0});
  }
  return out;
}

PhgSymbol log_symbol(const ResolventSymbol& R) {
  PhgSymbol s(R.n, R.fiber_n, 0, 0);
  s.known = int(R.b.size());
  SymMatrix marker(R.fiber_n);
  for (size_t j = 0; j < R.b.size(); ++j) {
    for (const auto& t : log_symbol_component(R, int(j))) s.add(int(j), t);
    for (const auto& [m, M] : R.b[j]) {
      Scalar c0 = contour_coefficient(m).subst_z(0).constant_term();
      if (c0.is_zero()) continue;
      if (j != 0) throw std::logic_error("log|xi| term below the leading component");
      marker += M.map([&](const PolyExpr& p) { return p * (c0 * Scalar(2)); });
    }
  }
  s.log_marker = marker;
  return s;
}

// ---------------------------------------------------------------- densities

std::string DensityValue::exact() const {
  if (coeff.is_zero()) return "0";
  std::string c = coeff.str();
  if (coeff.size() > 1 || (coeff.is_constant() && coeff.constant_term().is_compound())) c = "(" + c + ")";
  if (pi_half == 0) return c;
  std::string p = pi_half % 2 ? "pi^(" + std::to_string(pi_half) + "/2)" : "pi^" + std::to_string(pi_half / 2);
  if (pi_half == 2) p = "pi";
  if (c == "1") return p;
  if (c == "-1") return "-" + p;
  return c + " * " + p;
}

std::optional<std::complex<double>> DensityValue::to_complex() const {
  if (coeff.is_zero()) return std::complex<double>(0);
  if (!coeff.is_constant()) return std::nullopt;
  return coeff.constant_term().to_complex() * std::pow(M_PI, pi_half / 2.0);
}

DensityValue DensityValue::at_origin() const {
  DensityValue d = *this;
  d.coeff = coeff.at_origin();
  return d;
}

DensityValue DensityValue::times(const PolyExpr& f) const {
  DensityValue d = *this;
  d.coeff = coeff * f;
  return d;
}

bool operator==(const DensityValue& a, const DensityValue& b) {
  if (a.coeff.is_zero() || b.coeff.is_zero()) return a.coeff.is_zero() && b.coeff.is_zero();
  return a.coeff == b.coeff && a.pi_half == b.pi_half;
}

DensityValue sphere_integrate(const PolyExpr& p, int n) {
  if (n < 1) throw std::invalid_argument("sphere dimension must be >= 1");
  // int xi^alpha = 2 prod Gamma((a_i+1)/2) / Gamma((n+|alpha|)/2), all a_i even
  // Gamma((a+1)/2) = (a-1)!! / 2^{a/2} sqrt(pi); each factor carries one sqrt(pi)
  auto dfact = [](int k) {
    Scalar r(1);
    for (int i = k; i > 1; i -= 2) r *= Scalar(i);
    return r;
  };
  DensityValue d;
  d.pi_half = n % 2 ? n - 1 : n;
  std::vector<Term> out;
  for (const auto& [m, c] : p.terms()) {
    bool odd = false;
    int tot = 0;
    Scalar num(2);
    for (int k = 0; k < n; ++k) {
      int a = m.xi[k];
      if (a % 2) odd = true;
      tot += a;
      num *= dfact(a - 1) / Scalar(2).pow(a / 2);
    }
    for (int k = n; k < kMaxDim; ++k)
      if (m.xi[k]) throw std::invalid_argument("covector index beyond the sphere dimension");
    if (odd) continue;
    int s = n + tot;  // Gamma(s/2)
    Scalar den = s % 2 == 0 ? factorial(s / 2 - 1) : dfact(s - 2) / Scalar(2).pow((s - 1) / 2);
    Monomial mm = m;
    mm.xi = {};
    out.emplace_back(mm, c * num / den);
  }
  d.coeff = PolyExpr::from_terms(std::move(out));
  return d;
}

DensityValue sphere_volume(int n) { return sphere_integrate(PolyExpr(1), n); }

std::string to_string(TraceMode m) {
  switch (m) {
    case TraceMode::Str:
      return "str";
    case TraceMode::Berezin:
      return "berezin";
    default:
      return "tr";
  }
}

TraceMode trace_mode_from_string(const std::string& s) {
  if (s == "tr") return TraceMode::Tr;
  if (s == "str") return TraceMode::Str;
  if (s == "berezin") return TraceMode::Berezin;
  throw std::invalid_argument("unknown trace mode: " + s);
}

namespace {

const std::vector<Scalar>& spinor_word_supertraces(int n) {
  static std::mutex mu;
  static std::map<int, std::vector<Scalar>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  SpinorRep rep = build_spinor_rep(n);
  std::vector<Scalar> v(size_t(1) << n);
  for (Subset I = 0; I < v.size(); ++I) v[I] = supertrace(CliffordElement<Scalar>::basis(n, I, Scalar(1)), rep);
  return cache.emplace(n, std::move(v)).first->second;
}

PolyExpr fiber_trace(const SymMatrix& M, TraceMode mode, Grading g) {
  PolyExpr t;
  switch (mode) {
    case TraceMode::Tr:
      for (size_t I = 0; I < M.dim; ++I) t += M(I, I);
      break;
    case TraceMode::Str:
      if (g == Grading::Spinors) {
        if (M.n % 2) throw std::invalid_argument("spinor supertrace needs even n");
        const auto& st = spinor_word_supertraces(M.n);
        // c^g(a) 1 = sum a_I e^I
        for (size_t I = 0; I < M.dim; ++I)
          if (!st[I].is_zero() && !M(I, 0).is_zero()) t += M(I, 0) * st[I];
      } else {
        for (size_t I = 0; I < M.dim; ++I) t += subset_size(Subset(I)) % 2 ? -M(I, I) : M(I, I);
      }
      break;
    case TraceMode::Berezin:
      t = M(M.dim - 1, 0);
      break;
  }
  return t;
}

}  // namespace

DensityValue residue_density(const PhgSymbol& Q, TraceMode mode, Grading g, const PolyExpr* jacobian) {
  if (Q.order_z != 0) throw std::invalid_argument("residue density needs a symbol of fixed order");
  int n = Q.n;
  int j = Q.order + n;
  DensityValue d;
  d.form_label = mode == TraceMode::Tr ? "Res" : mode == TraceMode::Str ? "sRes" : "tildeRes";
  d.pi_half = (n % 2 ? n - 1 : n) - 2 * n;
  if (j < 0) return d;
  if (j >= Q.known) throw std::domain_error("missing sigma_{-n}: increase the symbol depth");
  if (mode == TraceMode::Berezin && Q.fiber_n != n) throw std::invalid_argument("Berezin mode needs End(Lambda V) symbols");
  PolyExpr integrand;
  for (const auto& t : Q.component(j)) integrand += fiber_trace(t.coeff, mode, g);  // |xi|^s = 1 on the sphere
  if (mode == TraceMode::Berezin && jacobian) integrand = integrand * *jacobian;
  DensityValue s = sphere_integrate(integrand, n);
  d.coeff = s.coeff * (Scalar(1) / Scalar(2).pow(n));
  d.pi_half = s.pi_half - 2 * n;
  return d;
}

PhgSymbol pullback_symbol(const PhgSymbol& Q) {
  if (Q.order_z != 0) throw std::invalid_argument("pullback of z-dependent symbols is not supported");
  PhgSymbol r(Q.n, Q.fiber_n, Q.order, 0);
  r.known = Q.known;
  // the log marker m log|xi| also produces -m log(lambda) Id, a differential
  // operator with no residue; it is not tracked
  r.log_marker = Q.log_marker;
  for (const auto& [j, ts] : Q.comps)
    for (const auto& t : ts)
      r.add(j, {t.coeff.map([&](const PolyExpr& p) { return p.scale_lambda(1, -1).times_lambda(-t.norm_power); }),
                t.norm_power, 0});
  return r;
}

PhgSymbol getzler_symbol_conjugate(const PhgSymbol& Q) {
  PhgSymbol r(Q.n, Q.fiber_n, Q.order, Q.order_z);
  r.known = Q.known;
  r.log_marker = Q.log_marker;
  for (const auto& [j, ts] : Q.comps)
    for (const auto& t : ts) r.add(j, {getzler_conjugate_inline(t.coeff), t.norm_power, t.z_coef});
  return r;
}

DensityValue compose_contraction(const DensityValue& d) {
  DensityValue r = d;
  r.coeff = d.coeff.scale_lambda(1, 0);
  return r;
}

// ---------------------------------------------------------------- localization

std::string to_string(LocalizationVariant v) {
  switch (v) {
    case LocalizationVariant::Forms:
      return "forms";
    case LocalizationVariant::Spinors:
      return "spinors";
    default:
      return "scalar";
  }
}

LocalizationVariant localization_variant_from_string(const std::string& s) {
  if (s == "scalar") return LocalizationVariant::Scalar;
  if (s == "forms") return LocalizationVariant::Forms;
  if (s == "spinors") return LocalizationVariant::Spinors;
  throw std::invalid_argument("unknown localization variant: " + s);
}

FormOperator frozen_at_origin(const FormOperator& P) {
  int m = -1;
  for (const auto& [g, c] : P.terms)
    if (!c.is_zero()) m = std::max(m, multi_order(g));
  FormOperator r(P.n, P.fiber_n);
  for (const auto& [g, c] : P.terms)
    if (multi_order(g) == m) r.terms.emplace(g, c.map([](const PolyExpr& p) { return p.at_origin(); }));
  r.prune();
  return r;
}

LocalizationReport localization_check(const FormOperator& P, LocalizationVariant v, const FormOperator* limit) {
  LocalizationReport rep;
  rep.variant = v;
  int n = P.n;
  int depth = n + 1;
  auto log_of = [&](const FormOperator& op) { return log_symbol(resolvent_symbol(symbol_of(op), depth)); };
  PolyExpr lam_n = PolyExpr::lambda(n);
  auto line = [&](const std::string& s) { rep.ledger.push_back(s); };

  if (v == LocalizationVariant::Scalar) {
    if (P.fiber_n != 0) throw std::invalid_argument("scalar variant needs a scalar operator");
    PhgSymbol Q = log_of(P);
    DensityValue w = residue_density(Q, TraceMode::Tr);
    rep.left = w.at_origin();
    rep.left_family = residue_density(pullback_symbol(Q), TraceMode::Tr);
    DensityValue cov = compose_contraction(w).times(lam_n);
    FormOperator frozen = frozen_at_origin(P);
    DensityValue wf = residue_density(log_of(frozen), TraceMode::Tr);
    rep.right = wf.at_origin();
    rep.agree = rep.left == rep.right;
    rep.asserted = false;
    line("omega_log(P)(p) = " + rep.left.exact());
    line("log(lambda^2 f_lambda^# P) = 2 log(lambda) Id + log(f_lambda^# P); Id has no residue");
    line("omega_log(f_lambda^# P)(x) = " + rep.left_family.exact());
    line("lambda^n omega_log(P)(lambda x) = " + cov.exact() + (cov == rep.left_family ? " (equal)" : " (differs)"));
    line("family at x = 0: " + rep.left_family.at_origin().exact() + ", dx-coefficient carries lambda^" +
         std::to_string(n) + " from dy = lambda^n dx");
    line("lambda -> 0 keeping the Jacobian: 0; dropping it: omega_log(P)(p)");
    line("omega_log(P|_p)(x) = " + wf.exact());
    line(std::string("left vs right: ") + (rep.agree ? "agree" : "differ") + " (reported, not asserted)");
    return rep;
  }

  if (P.fiber_n != n) throw std::invalid_argument("forms and spinors variants act on Lambda V");
  if (!limit) throw std::invalid_argument("the rescaled limit operator is required");
  PhgSymbol Q = log_of(P);
  DensityValue w = residue_density(Q, TraceMode::Berezin);
  rep.left = w.at_origin();
  rep.left_family = residue_density(getzler_symbol_conjugate(pullback_symbol(Q)), TraceMode::Berezin);
  DensityValue via_f = residue_density(pullback_symbol(Q), TraceMode::Berezin);
  DensityValue via_u = residue_density(getzler_symbol_conjugate(Q), TraceMode::Berezin);
  DensityValue wl = residue_density(log_of(*limit), TraceMode::Berezin);
  rep.right = wl.at_origin();
  rep.agree = rep.left == rep.right;
  rep.asserted = true;
  line("tilde-omega_log(P)(p) = " + rep.left.exact());
  line("U_lambda^#: " + via_u.exact() + " = lambda^-" + std::to_string(n) + " tilde-omega_log(P)" +
       (via_u == w.times(PolyExpr::lambda(-n)) ? " (equal)" : " (differs)"));
  line("f_lambda^#: " + via_f.exact() + " = lambda^" + std::to_string(n) + " tilde-omega_log(P)(lambda x)" +
       (via_f == compose_contraction(w).times(lam_n) ? " (equal)" : " (differs)"));
  line("U_lambda^# f_lambda^#: " + rep.left_family.exact() + " = tilde-omega_log(P)(lambda x)" +
       (rep.left_family == compose_contraction(w) ? " (equal)" : " (differs)"));
  line("lambda -> 0: tilde-omega_log(P)(p) = " + rep.left.exact());
  line("tilde-omega_log(P_lim)(x) = " + wl.exact());
  if (v == LocalizationVariant::Spinors) {
    DensityValue s = rep.left.times(PolyExpr(minus_two_i_power(n / 2)));
    s.form_label = "sRes";
    line("omega^sRes(p) = (-2i)^(n/2) tilde-omega(p) / j_g(p) = " + s.exact() + ", j_g(p) = 1");
  }
  line(std::string("left vs right: ") + (rep.agree ? "agree" : "differ"));
  return rep;
}

}  // namespace getzler
