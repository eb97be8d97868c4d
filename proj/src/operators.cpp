#include "getzler/operators.hpp"

#include <algorithm>
#include <functional>
#include <mutex>
#include <sstream>
#include <stdexcept>

namespace getzler {

std::string to_string(Bundle b) {
  switch (b) {
    case Bundle::Forms:
      return "forms";
    case Bundle::Spinors:
      return "spinors";
    default:
      return "scalar";
  }
}

Bundle bundle_from_string(const std::string& s) {
  if (s == "forms") return Bundle::Forms;
  if (s == "spinors") return Bundle::Spinors;
  if (s == "scalar") return Bundle::Scalar;
  throw std::invalid_argument("unknown bundle: " + s);
}

int multi_order(const Multi& g) {
  int s = 0;
  for (int v : g) s += v;
  return s;
}

Multi unit_multi(int k) {
  if (k < 1 || k > kMaxDim) throw std::out_of_range("direction out of range");
  Multi g{};
  g[k - 1] = 1;
  return g;
}

Multi operator+(const Multi& a, const Multi& b) {
  Multi r{};
  for (int k = 0; k < kMaxDim; ++k) r[k] = a[k] + b[k];
  return r;
}

std::string multi_str(const Multi& g) {
  std::string s;
  for (int k = 0; k < kMaxDim; ++k) {
    if (!g[k]) continue;
    if (!s.empty()) s += " ";
    s += "d_" + std::to_string(k + 1);
    if (g[k] > 1) s += "^" + std::to_string(g[k]);
  }
  return s.empty() ? "1" : s;
}

size_t fiber_size(Bundle b, int n) {
  switch (b) {
    case Bundle::Forms:
      return size_t(1) << (2 * n);
    case Bundle::Spinors:
      return size_t(1) << n;
    default:
      return 1;
  }
}

namespace {

bool all_zero(const std::vector<GeomPoly>& v) {
  for (const auto& c : v)
    if (!c.is_zero()) return false;
  return true;
}

std::vector<GeomPoly> fiber_mul(Bundle b, int n, const std::vector<GeomPoly>& x, const std::vector<GeomPoly>& y) {
  std::vector<GeomPoly> r(x.size());
  switch (b) {
    case Bundle::Scalar:
      r[0] = x[0] * y[0];
      break;
    case Bundle::Spinors:
      for (size_t I = 0; I < x.size(); ++I) {
        if (x[I].is_zero()) continue;
        for (size_t J = 0; J < y.size(); ++J) {
          if (y[J].is_zero()) continue;
          GeomPoly p = x[I] * y[J];
          if (clifford_sign(Subset(I), Subset(J)) < 0) p = -p;
          r[I ^ J] += p;
        }
      }
      break;
    case Bundle::Forms: {
      size_t d = size_t(1) << n;
      for (size_t i = 0; i < d; ++i)
        for (size_t k = 0; k < d; ++k) {
          const GeomPoly& a = x[i * d + k];
          if (a.is_zero()) continue;
          for (size_t j = 0; j < d; ++j) {
            const GeomPoly& c = y[k * d + j];
            if (!c.is_zero()) r[i * d + j] += a * c;
          }
        }
      break;
    }
  }
  return r;
}

// all beta <= gamma componentwise
void for_each_sub(const Multi& g, const std::function<void(const Multi&)>& f) {
  Multi b{};
  std::function<void(int)> rec = [&](int k) {
    if (k == kMaxDim) {
      f(b);
      return;
    }
    for (int v = 0; v <= g[k]; ++v) {
      b[k] = v;
      rec(k + 1);
    }
    b[k] = 0;
  };
  rec(0);
}

long binom(int n, int k) {
  long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

long multi_binom(const Multi& g, const Multi& b) {
  long r = 1;
  for (int k = 0; k < kMaxDim; ++k) r *= binom(g[k], b[k]);
  return r;
}

Multi minus(const Multi& a, const Multi& b) {
  Multi r{};
  for (int k = 0; k < kMaxDim; ++k) r[k] = a[k] - b[k];
  return r;
}

template <class T, class D>
T apply_derivatives(T v, const Multi& b, D&& dx) {
  for (int k = 0; k < kMaxDim; ++k)
    for (int r = 0; r < b[k]; ++r) v = dx(v, k + 1);
  return v;
}

const EndoMatrix<Scalar>& wedge_contract(int n, int j, int k) {
  // dx^j ^ (d/dx^k _|), cached per dimension
  static std::mutex mu;
  static std::map<std::array<int, 3>, EndoMatrix<Scalar>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::array<int, 3>{n, j, k};
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, wedge_basis_matrix(n, j) * contraction_matrix(n, k)).first;
  return it->second;
}

std::vector<GeomPoly> constant_fiber(const EndoMatrix<Scalar>& m) {
  std::vector<GeomPoly> v(m.m.size());
  for (size_t a = 0; a < m.m.size(); ++a)
    if (!m.m[a].is_zero()) v[a] = GeomPoly(m.m[a]);
  return v;
}

std::vector<GeomPoly> identity_fiber(Bundle b, int n) {
  std::vector<GeomPoly> v(fiber_size(b, n));
  if (b == Bundle::Forms) {
    size_t d = size_t(1) << n;
    for (size_t k = 0; k < d; ++k) v[k * d + k] = GeomPoly(1);
  } else {
    v[0] = GeomPoly(1);
  }
  return v;
}

std::vector<GeomPoly> scale_fiber(std::vector<GeomPoly> v, const GeomPoly& f) {
  for (auto& c : v)
    if (!c.is_zero()) c = f * c;
  return v;
}

GeomDiffOp left_multiply(const GeomPoly& f, const GeomDiffOp& P, int extra_weight) {
  GeomDiffOp r = zero_operator(P.bundle, P.jets, P.order + extra_weight);
  for (const auto& [g, v] : P.terms) r.terms.emplace(g, scale_fiber(v, f));
  r.prune();
  return r;
}

// sum_{s != t} Gamma~(d_i; e_s, e_t) e^s e^t as Clifford words, Gamma~(d_i) = sum_l a_i^l Gamma~_l
std::vector<GeomPoly> spin_words(const GeometricJets& J, int i) {
  int n = J.n();
  std::vector<GeomPoly> w(size_t(1) << n);
  for (int s = 1; s <= n; ++s)
    for (int t = 1; t <= n; ++t) {
      if (s == t) continue;
      GeomPoly c;
      for (int l = 1; l <= n; ++l)
        if (!J.a(i, l).is_zero()) c += J.a(i, l) * J.Tilde(l, s, t);
      if (c.is_zero()) continue;
      if (clifford_sign(single(s), single(t)) < 0) c = -c;
      w[single(s) | single(t)] += c;
    }
  return w;
}

std::vector<GeomPoly> scaled_fiber(std::vector<GeomPoly> v, const Scalar& s) {
  for (auto& c : v)
    if (!c.is_zero()) c = c * s;
  return v;
}

void add_to(std::vector<GeomPoly>& dst, const std::vector<GeomPoly>& src) {
  for (size_t a = 0; a < src.size(); ++a)
    if (!src[a].is_zero()) dst[a] += src[a];
}

}  // namespace

// ---------------------------------------------------------------- GeomDiffOp

std::vector<GeomPoly>& GeomDiffOp::coef(const Multi& g) {
  auto it = terms.find(g);
  if (it == terms.end()) it = terms.emplace(g, std::vector<GeomPoly>(fiber())).first;
  return it->second;
}

const std::vector<GeomPoly>* GeomDiffOp::find(const Multi& g) const {
  auto it = terms.find(g);
  return it == terms.end() ? nullptr : &it->second;
}

void GeomDiffOp::prune() {
  for (auto it = terms.begin(); it != terms.end();) it = all_zero(it->second) ? terms.erase(it) : std::next(it);
}

bool GeomDiffOp::is_zero() const {
  for (const auto& [g, v] : terms)
    if (!all_zero(v)) return false;
  return true;
}

int GeomDiffOp::max_derivative() const {
  int m = -1;
  for (const auto& [g, v] : terms)
    if (!all_zero(v)) m = std::max(m, multi_order(g));
  return m;
}

GeomDiffOp& GeomDiffOp::operator+=(const GeomDiffOp& o) {
  if (o.bundle != bundle || o.n() != n()) throw std::invalid_argument("bundle mismatch");
  if (o.order != order) throw std::invalid_argument("order mismatch in operator sum");
  for (const auto& [g, v] : o.terms) add_to(coef(g), v);
  prune();
  return *this;
}

GeomDiffOp GeomDiffOp::scaled(const Scalar& s) const {
  GeomDiffOp r = *this;
  for (auto& [g, v] : r.terms) v = scaled_fiber(v, s);
  r.prune();
  return r;
}

std::shared_ptr<const GeometricJets> operator_jets(JetContext ctx) {
  if (ctx.theta_cap < 0) ctx.theta_cap = ctx.n;
  return build_geometric_jets(ctx);
}

GeomDiffOp zero_operator(Bundle b, std::shared_ptr<const GeometricJets> jets, int order) {
  if (!jets) throw std::invalid_argument("jets required");
  if (b == Bundle::Spinors && jets->n() % 2) throw std::invalid_argument("spinor operators need even n");
  GeomDiffOp P;
  P.bundle = b;
  P.jets = std::move(jets);
  P.order = order;
  return P;
}

GeomDiffOp partial_operator(Bundle b, std::shared_ptr<const GeometricJets> jets, const Multi& g) {
  GeomDiffOp P = zero_operator(b, jets, multi_order(g));
  P.terms.emplace(g, identity_fiber(b, P.n()));
  return P;
}

GeomDiffOp multiplication(Bundle b, std::shared_ptr<const GeometricJets> jets, std::vector<GeomPoly> c, int order) {
  GeomDiffOp P = zero_operator(b, jets, order);
  if (c.size() != P.fiber()) throw std::invalid_argument("coefficient has wrong fiber size");
  P.terms.emplace(Multi{}, std::move(c));
  P.prune();
  return P;
}

GeomDiffOp scalar_multiplication(Bundle b, std::shared_ptr<const GeometricJets> jets, const GeomPoly& f, int order) {
  GeomDiffOp P = zero_operator(b, jets, order);
  P.terms.emplace(Multi{}, scale_fiber(identity_fiber(b, P.n()), f));
  P.prune();
  return P;
}

GeomDiffOp compose(const GeomDiffOp& P, const GeomDiffOp& Q) {
  if (P.bundle != Q.bundle || P.n() != Q.n()) throw std::invalid_argument("bundle mismatch in compose");
  if (P.jets->ctx.K != Q.jets->ctx.K) throw std::invalid_argument("truncation mismatch in compose");
  GeomDiffOp R = zero_operator(P.bundle, P.jets, P.order + Q.order);
  int n = P.n();
  std::map<std::pair<Multi, Multi>, std::vector<GeomPoly>> dcache;
  for (const auto& [g, A] : P.terms)
    for (const auto& [d, B] : Q.terms)
      for_each_sub(g, [&](const Multi& g1) {
        auto key = std::make_pair(d, g1);
        auto it = dcache.find(key);
        if (it == dcache.end()) {
          std::vector<GeomPoly> DB = B;
          for (auto& c : DB) c = apply_derivatives(c, g1, [](const GeomPoly& p, int k) { return p.dx(k); });
          it = dcache.emplace(key, std::move(DB)).first;
        }
        if (all_zero(it->second)) return;
        auto prod = fiber_mul(P.bundle, n, A, it->second);
        long bc = multi_binom(g, g1);
        if (bc != 1) prod = scaled_fiber(prod, Scalar(bc));
        add_to(R.coef(minus(g, g1) + d), prod);
      });
  R.prune();
  return R;
}

GeometricCheck check_geometric(const GeomDiffOp& P) {
  GeometricCheck c;
  int top = P.max_derivative();
  if (top > P.order) {
    c.ok = false;
    c.detail = "declared weight " + std::to_string(P.order) + " below the highest derivative " + std::to_string(top);
    return c;
  }
  for (const auto& [g, v] : P.terms)
    for (size_t a = 0; a < v.size(); ++a) {
      const GeomPoly& e = v[a];
      if (e.is_zero() || e.gilkey == GeomPoly::kZeroOrder) continue;
      int want = P.order - multi_order(g);
      if (e.gilkey != want) {
        c.ok = false;
        c.detail = "coefficient of " + multi_str(g) + " entry " + std::to_string(a) + " has Gilkey order " +
                   (e.gilkey == GeomPoly::kUnknownOrder ? std::string("unknown") : std::to_string(e.gilkey)) +
                   ", expected " + std::to_string(want);
        return c;
      }
    }
  return c;
}

bool agree_mod_truncation(const GeomDiffOp& a, const GeomDiffOp& b, std::string* why) {
  if (a.bundle != b.bundle || a.n() != b.n()) {
    if (why) *why = "bundle mismatch";
    return false;
  }
  std::vector<Multi> keys;
  for (const auto& t : a.terms) keys.push_back(t.first);
  for (const auto& t : b.terms) keys.push_back(t.first);
  std::vector<GeomPoly> zero(a.fiber());
  for (const auto& g : keys) {
    const auto* va = a.find(g);
    const auto* vb = b.find(g);
    const auto& x = va ? *va : zero;
    const auto& y = vb ? *vb : zero;
    for (size_t k = 0; k < x.size(); ++k)
      if (!x[k].jet.agrees_with(y[k].jet)) {
        if (why) *why = "differ at " + multi_str(g) + " entry " + std::to_string(k);
        return false;
      }
  }
  return true;
}

// ---------------------------------------------------------------- builders

GeomDiffOp build_covariant_derivative(Bundle b, std::shared_ptr<const GeometricJets> jets, int i) {
  int n = jets->n();
  if (i < 1 || i > n) throw std::out_of_range("direction out of range");
  GeomDiffOp P = partial_operator(b, jets, unit_multi(i));
  const auto& J = *jets;
  if (b == Bundle::Forms) {
    // nabla_i dx^k = -Gamma^k_{ij} dx^j: the derivation dx^j ^ (d/dx^k _|)
    std::vector<GeomPoly> A(P.fiber());
    for (int j = 1; j <= n; ++j)
      for (int k = 1; k <= n; ++k) {
        const GeomPoly& G = J.Gamma(k, i, j);
        if (G.is_zero()) continue;
        const auto& M = wedge_contract(n, j, k);
        for (size_t a = 0; a < M.m.size(); ++a)
          if (!M.m[a].is_zero()) A[a] += G * (-M.m[a]);
      }
    if (!all_zero(A)) P.terms.emplace(Multi{}, std::move(A));
  } else if (b == Bundle::Spinors) {
    auto w = scaled_fiber(spin_words(J, i), Scalar::frac(1, 4));
    if (!all_zero(w)) P.terms.emplace(Multi{}, std::move(w));
  }
  return P;
}

GeomDiffOp wedge_dx(std::shared_ptr<const GeometricJets> jets, int i) {
  int n = jets->n();
  return multiplication(Bundle::Forms, jets, constant_fiber(wedge_basis_matrix(n, i)));
}

GeomDiffOp contraction_dx(std::shared_ptr<const GeometricJets> jets, int i) {
  int n = jets->n();
  return multiplication(Bundle::Forms, jets, constant_fiber(contraction_matrix(n, i)));
}

GeomDiffOp clifford_dx(std::shared_ptr<const GeometricJets> jets, int i) {
  int n = jets->n();
  std::vector<GeomPoly> w(size_t(1) << n);
  for (int l = 1; l <= n; ++l) w[single(l)] = jets->b(l, i);
  return multiplication(Bundle::Spinors, jets, std::move(w));
}

GeomPoly scalar_curvature_jet(const GeometricJets& J) {
  int n = J.n();
  // R(d_i, d_j) d_k = R^l_{ijk} d_l; Ric_{jk} = sum_i R^i_{ijk}; Scal = g^{jk} Ric_{jk}
  GeomPoly scal;
  for (int j = 1; j <= n; ++j)
    for (int k = 1; k <= n; ++k) {
      if (J.ginv(j, k).is_zero()) continue;
      GeomPoly ric;
      for (int i = 1; i <= n; ++i) {
        ric += J.Gamma(i, j, k).dx(i) - J.Gamma(i, i, k).dx(j);
        for (int m = 1; m <= n; ++m)
          ric += J.Gamma(m, j, k) * J.Gamma(i, i, m) - J.Gamma(m, i, k) * J.Gamma(i, j, m);
      }
      scal += J.ginv(j, k) * ric;
    }
  return scal;
}

GeomDiffOp connection_laplacian(Bundle b, std::shared_ptr<const GeometricJets> jets) {
  int n = jets->n();
  const auto& J = *jets;
  std::vector<GeomDiffOp> N;
  for (int i = 1; i <= n; ++i) N.push_back(build_covariant_derivative(b, jets, i));
  GeomDiffOp out = zero_operator(b, jets, 2);
  for (int i = 1; i <= n; ++i)
    for (int j = 1; j <= n; ++j) {
      if (J.ginv(i, j).is_zero()) continue;
      out += left_multiply(-J.ginv(i, j), compose(N[i - 1], N[j - 1]), 0);
    }
  for (int k = 1; k <= n; ++k) {
    GeomPoly c;
    for (int i = 1; i <= n; ++i)
      for (int j = 1; j <= n; ++j)
        if (!J.ginv(i, j).is_zero()) c += J.ginv(i, j) * J.Gamma(k, i, j);
    if (!c.is_zero()) out += left_multiply(c, N[k - 1], 1);
  }
  return out;
}

GeomDiffOp bochner_term(std::shared_ptr<const GeometricJets> jets) {
  int n = jets->n();
  const auto& J = *jets;
  std::vector<GeomDiffOp> N;
  for (int i = 1; i <= n; ++i) N.push_back(build_covariant_derivative(Bundle::Forms, jets, i));
  GeomDiffOp W = zero_operator(Bundle::Forms, jets, 2);
  std::vector<GeomPoly> acc(W.fiber());
  for (int c = 1; c <= n; ++c)
    for (int bb = 1; bb <= n; ++bb) {
      if (c == bb) continue;
      GeomDiffOp F = compose(N[c - 1], N[bb - 1]) - compose(N[bb - 1], N[c - 1]);
      for (const auto& [g, v] : F.terms)
        if (multi_order(g) > 0)
          for (const auto& e : v)
            if (!e.jet.is_zero()) throw std::logic_error("curvature of the form connection is not zero order");
      const auto* Fc = F.find(Multi{});
      if (!Fc) continue;
      for (int a = 1; a <= n; ++a) {
        if (J.ginv(a, c).is_zero()) continue;
        auto lhs = scale_fiber(constant_fiber(wedge_contract(n, bb, a)), J.ginv(a, c));
        add_to(acc, fiber_mul(Bundle::Forms, n, lhs, *Fc));
      }
    }
  if (!all_zero(acc)) W.terms.emplace(Multi{}, std::move(acc));
  return W;
}

GeomDiffOp dirac_direct(std::shared_ptr<const GeometricJets> jets) {
  int n = jets->n();
  const auto& J = *jets;
  GeomDiffOp D = zero_operator(Bundle::Spinors, jets, 1);
  // sum_i e^i . nabla_{e_i}, e_i = b_i^j d_j
  for (int j = 1; j <= n; ++j) {
    auto& c = D.coef(unit_multi(j));
    for (int i = 1; i <= n; ++i) c[single(i)] = J.b(i, j);
  }
  auto& z = D.coef(Multi{});
  for (int i = 1; i <= n; ++i)
    for (int s = 1; s <= n; ++s)
      for (int t = 1; t <= n; ++t) {
        if (s == t) continue;
        const GeomPoly& G = J.Tilde(i, s, t);
        if (G.is_zero()) continue;
        Subset st = single(s) | single(t);
        int sign = clifford_sign(single(s), single(t)) * clifford_sign(single(i), st);
        z[single(i) ^ st] += G * Scalar::frac(sign, 4);
      }
  D.prune();
  return D;
}

GeomDiffOp dirac_via_connection(std::shared_ptr<const GeometricJets> jets) {
  GeomDiffOp D = zero_operator(Bundle::Spinors, jets, 1);
  for (int i = 1; i <= jets->n(); ++i)
    D += compose(clifford_dx(jets, i), build_covariant_derivative(Bundle::Spinors, jets, i));
  return D;
}

std::array<GeomDiffOp, 6> lichnerowicz_terms(std::shared_ptr<const GeometricJets> jets) {
  int n = jets->n();
  const auto& J = *jets;
  std::array<GeomDiffOp, 6> T;
  for (auto& t : T) t = zero_operator(Bundle::Spinors, jets, 2);
  std::vector<std::vector<GeomPoly>> C;
  for (int i = 1; i <= n; ++i) C.push_back(spin_words(J, i));
  for (int i = 1; i <= n; ++i)
    for (int j = 1; j <= n; ++j) {
      const GeomPoly& gij = J.ginv(i, j);
      if (gij.is_zero()) continue;
      T[0].coef(unit_multi(i) + unit_multi(j))[0] += -gij;
      std::vector<GeomPoly> dC = C[j - 1];
      for (auto& c : dC) c = c.dx(i);
      add_to(T[1].coef(Multi{}), scale_fiber(scaled_fiber(dC, Scalar::frac(-1, 4)), gij));
      add_to(T[2].coef(unit_multi(i)), scale_fiber(scaled_fiber(C[j - 1], Scalar::frac(-1, 2)), gij));
      add_to(T[3].coef(Multi{}),
             scale_fiber(scaled_fiber(fiber_mul(Bundle::Spinors, n, C[i - 1], C[j - 1]), Scalar::frac(-1, 16)), gij));
    }
  for (int k = 1; k <= n; ++k) {
    GeomPoly c;
    for (int i = 1; i <= n; ++i)
      for (int j = 1; j <= n; ++j)
        if (!J.ginv(i, j).is_zero()) c += J.ginv(i, j) * J.Gamma(k, i, j);
    if (c.is_zero()) continue;
    T[4].coef(unit_multi(k))[0] += c;
    add_to(T[4].coef(Multi{}), scale_fiber(scaled_fiber(C[k - 1], Scalar::frac(1, 4)), c));
  }
  T[5].coef(Multi{})[0] = scalar_curvature_jet(J) * Scalar::frac(1, 4);
  for (auto& t : T) t.prune();
  return T;
}

GeomDiffOp dirac_squared_lichnerowicz(std::shared_ptr<const GeometricJets> jets) {
  auto T = lichnerowicz_terms(jets);
  GeomDiffOp s = T[0];
  for (int k = 1; k < 6; ++k) s += T[k];
  return s;
}

const std::vector<std::string>& named_operators() {
  static const std::vector<std::string> names = {"d",
                                                 "delta",
                                                 "hodge_laplacian",
                                                 "dirac",
                                                 "dirac_squared",
                                                 "connection_laplacian_forms",
                                                 "connection_laplacian_spinors",
                                                 "scalar_laplacian"};
  return names;
}

GeomDiffOp build_named(const std::string& name, std::shared_ptr<const GeometricJets> jets) {
  int n = jets->n();
  auto d_op = [&] {
    GeomDiffOp d = zero_operator(Bundle::Forms, jets, 1);
    for (int j = 1; j <= n; ++j) d += compose(wedge_dx(jets, j), build_covariant_derivative(Bundle::Forms, jets, j));
    return d;
  };
  auto delta_op = [&] {
    // delta = -g^{ij} (d/dx^i _|) nabla_j
    GeomDiffOp s = zero_operator(Bundle::Forms, jets, 1);
    for (int j = 1; j <= n; ++j) {
      GeomDiffOp left = zero_operator(Bundle::Forms, jets, 0);
      for (int i = 1; i <= n; ++i)
        if (!jets->ginv(i, j).is_zero()) left += left_multiply(-jets->ginv(i, j), contraction_dx(jets, i), 0);
      s += compose(left, build_covariant_derivative(Bundle::Forms, jets, j));
    }
    return s;
  };
  auto need_even = [&] {
    if (n % 2) throw std::invalid_argument("spinor operators need even n");
  };
  if (name == "d") return d_op();
  if (name == "delta") return delta_op();
  if (name == "hodge_laplacian") {
    GeomDiffOp d = d_op(), dl = delta_op();
    return compose(d, dl) + compose(dl, d);
  }
  if (name == "dirac") return need_even(), dirac_direct(jets);
  // the Lichnerowicz form loses one fewer jet order than D o D; the two are
  // checked against each other in the tests
  if (name == "dirac_squared") return need_even(), dirac_squared_lichnerowicz(jets);
  if (name == "connection_laplacian_forms") return connection_laplacian(Bundle::Forms, jets);
  if (name == "connection_laplacian_spinors") return need_even(), connection_laplacian(Bundle::Spinors, jets);
  if (name == "scalar_laplacian") return connection_laplacian(Bundle::Scalar, jets);
  throw std::invalid_argument("unknown operator: " + name);
}

// ---------------------------------------------------------------- FormOperator

EndoMatrix<PolyExpr>& FormOperator::coef(const Multi& g) {
  auto it = terms.find(g);
  if (it == terms.end()) it = terms.emplace(g, EndoMatrix<PolyExpr>(fiber_n)).first;
  return it->second;
}

void FormOperator::prune() {
  for (auto it = terms.begin(); it != terms.end();) it = it->second.is_zero() ? terms.erase(it) : std::next(it);
}

bool FormOperator::is_zero() const {
  for (const auto& t : terms)
    if (!t.second.is_zero()) return false;
  return true;
}

FormOperator& FormOperator::operator+=(const FormOperator& o) {
  if (o.n != n || o.fiber_n != fiber_n) throw std::invalid_argument("dimension mismatch");
  for (const auto& [g, m] : o.terms) coef(g) += m;
  prune();
  return *this;
}

FormOperator& FormOperator::operator-=(const FormOperator& o) { return *this += -o; }

FormOperator FormOperator::operator-() const {
  FormOperator r(n, fiber_n);
  for (const auto& [g, m] : terms) r.terms.emplace(g, -m);
  return r;
}

bool operator==(const FormOperator& a, const FormOperator& b) {
  if (a.n != b.n || a.fiber_n != b.fiber_n) return false;
  FormOperator d = a - b;
  return d.is_zero();
}

FormOperator FormOperator::instantiate(const CurvatureTensor& t) const {
  return map([&](const PolyExpr& p) { return p.instantiate(t); });
}

FormOperator FormOperator::reduced(int dim) const {
  return map([&](const PolyExpr& p) { return reduce_bianchi(p, dim); });
}

std::optional<std::map<Multi, FormElement<PolyExpr>>> FormOperator::wedge_coefficients() const {
  std::map<Multi, FormElement<PolyExpr>> out;
  for (const auto& [g, m] : terms) {
    FormElement<PolyExpr> w(fiber_n);
    for (size_t J = 0; J < m.dim; ++J) w.c[J] = m(J, 0);
    if (!(wedge_matrix(w) == m)) return std::nullopt;
    if (!w.is_zero()) out.emplace(g, std::move(w));
  }
  return out;
}

namespace {

bool term_before(const Multi& a, const Multi& b) {
  int oa = multi_order(a), ob = multi_order(b);
  if (oa != ob) return oa > ob;
  return a > b;
}

void append_term(std::string& out, const PolyExpr& c, const std::string& tail) {
  std::string cs = c.str();
  bool neg = false;
  if (c.size() == 1 && !cs.empty() && cs[0] == '-') {
    neg = true;
    cs = cs.substr(1);
  }
  std::string body;
  if (tail.empty())
    body = cs;
  else if (cs == "1")
    body = tail;
  else if (c.size() == 1)
    body = cs + " " + tail;
  else
    body = "(" + cs + ") " + tail;
  if (out.empty())
    out = neg ? "-" + body : body;
  else
    out += (neg ? " - " : " + ") + body;
}

}  // namespace

std::string FormOperator::pretty() const {
  std::vector<Multi> keys;
  for (const auto& t : terms) keys.push_back(t.first);
  std::sort(keys.begin(), keys.end(), term_before);
  std::string out;
  auto wc = wedge_coefficients();
  for (const auto& g : keys) {
    std::string d = multi_order(g) ? multi_str(g) : "";
    if (wc) {
      auto it = wc->find(g);
      if (it == wc->end()) continue;
      for (Subset I : basis_order(fiber_n)) {
        const PolyExpr& c = it->second.c[I];
        if (c.is_zero()) continue;
        std::string tail = I ? subset_label(I) + "^" : "";
        if (!d.empty()) tail += (tail.empty() ? "" : " ") + d;
        append_term(out, c, tail);
      }
    } else {
      const auto& m = terms.at(g);
      for (size_t r = 0; r < m.dim; ++r)
        for (size_t c = 0; c < m.dim; ++c) {
          if (m(r, c).is_zero()) continue;
          std::string tail = "E[" + subset_label(Subset(r)) + "<-" + subset_label(Subset(c)) + "]";
          if (!d.empty()) tail += " " + d;
          append_term(out, m(r, c), tail);
        }
    }
  }
  return out.empty() ? "0" : out;
}

FormOperator compose(const FormOperator& A, const FormOperator& B) {
  if (A.n != B.n || A.fiber_n != B.fiber_n) throw std::invalid_argument("dimension mismatch in compose");
  FormOperator R(A.n, A.fiber_n);
  for (const auto& [g, a] : A.terms)
    for (const auto& [d, b] : B.terms)
      for_each_sub(g, [&](const Multi& g1) {
        auto db = b.map([&](const PolyExpr& p) {
          return apply_derivatives(p, g1, [](const PolyExpr& q, int k) { return q.dx(k); });
        });
        if (db.is_zero()) return;
        auto prod = a * db;
        long bc = multi_binom(g, g1);
        if (bc != 1) prod = prod.map([&](const PolyExpr& p) { return p * Scalar(bc); });
        R.coef(minus(g, g1) + d) += prod;
      });
  R.prune();
  return R;
}

FormOperator wedge_term(int n, const Multi& g, const FormElement<PolyExpr>& w) {
  FormOperator r(n, w.n);
  r.terms.emplace(g, wedge_matrix(w));
  r.prune();
  return r;
}

FormOperator scalar_term(int n, int fiber_n, const Multi& g, const PolyExpr& c) {
  FormOperator r(n, fiber_n);
  r.terms.emplace(g, EndoMatrix<PolyExpr>::identity(fiber_n, c));
  r.prune();
  return r;
}

// ---------------------------------------------------------------- rescaling

const FormOperator* GradedOperator::at(int d) const {
  auto it = comps.find(d);
  return it == comps.end() ? nullptr : &it->second;
}

namespace {

struct Part {
  size_t row, col;
  Scalar value;
  int shift;
};

// fiber entry -> matrix entries on Lambda V with their U_lambda weights
std::vector<Part> parts_of(Bundle b, int n, size_t entry, bool getzler) {
  std::vector<Part> out;
  switch (b) {
    case Bundle::Scalar:
      out.push_back({0, 0, Scalar(1), 0});
      break;
    case Bundle::Forms: {
      size_t d = size_t(1) << n;
      size_t r = entry / d, c = entry % d;
      int e = getzler ? subset_size(Subset(c)) - subset_size(Subset(r)) : 0;
      out.push_back({r, c, Scalar(1), e});
      break;
    }
    case Bundle::Spinors: {
      Subset I = Subset(entry);
      for (Subset J = 0; J < (Subset(1) << n); ++J) {
        Subset r = I ^ J;
        int e = getzler ? subset_size(J) - subset_size(r) : 0;
        out.push_back({r, J, Scalar(clifford_sign(I, J)), e});
      }
      break;
    }
  }
  return out;
}

GradedOperator rescale_impl(const GeomDiffOp& P, bool getzler) {
  int n = P.n();
  int fn = P.bundle == Bundle::Scalar ? 0 : n;
  GradedOperator G;
  G.bundle = P.bundle;
  G.n = n;
  G.order = P.order;
  for (const auto& [g, v] : P.terms) {
    int base = P.order - multi_order(g);
    for (size_t a = 0; a < v.size(); ++a) {
      const GeomPoly& c = v[a];
      if (c.is_zero()) continue;
      auto parts = parts_of(P.bundle, n, a, getzler);
      int min_shift = INT_MAX;
      for (const auto& p : parts) min_shift = std::min(min_shift, p.shift);
      if (!c.jet.is_exact()) G.reliable_through = std::min(G.reliable_through, base + c.jet.prec + min_shift);
      const PolyExpr& poly = c.jet.p;
      if (poly.is_zero()) continue;
      for (int d = *poly.min_xdeg(); d <= poly.max_xdeg(); ++d) {
        PolyExpr pd = poly.x_homogeneous(d);
        if (pd.is_zero()) continue;
        for (const auto& p : parts) {
          int deg = base + d + p.shift;
          auto it = G.comps.find(deg);
          if (it == G.comps.end()) it = G.comps.emplace(deg, FormOperator(n, fn)).first;
          it->second.coef(g)(p.row, p.col) += p.value == Scalar(1) ? pd : pd * p.value;
        }
      }
    }
  }
  for (auto it = G.comps.begin(); it != G.comps.end();) {
    it->second.prune();
    it = it->second.is_zero() ? G.comps.erase(it) : std::next(it);
  }
  return G;
}

}  // namespace

GradedOperator getzler_rescale(const GeomDiffOp& P) {
  auto chk = check_geometric(P);
  if (!chk.ok) throw std::invalid_argument("non-geometric input: " + chk.detail);
  return rescale_impl(P, true);
}

GradedOperator frozen_rescale(const GeomDiffOp& P) { return rescale_impl(P, false); }

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Rescalable:
      return "rescalable";
    case Verdict::NotRescalable:
      return "not_rescalable";
    default:
      return "indeterminate";
  }
}

std::string Witness::str() const {
  std::ostringstream s;
  s << "gamma=" << multi_str(gamma) << " I=" << subset_label(I);
  if (J) s << " J=" << subset_label(*J);
  s << " needed=" << needed;
  s << " theta=" << (theta ? std::to_string(*theta) : std::string("?"));
  if (lambda_degree) s << " lambda_degree=" << *lambda_degree;
  return s.str();
}

bool operator<(const Witness& a, const Witness& b) {
  auto key = [](const Witness& w) { return std::make_tuple(w.gamma, w.I, w.J.value_or(Subset(-1))); };
  return key(a) < key(b);
}

RescaleReport rescalability(const GeomDiffOp& P) {
  RescaleReport rep;
  GradedOperator G = getzler_rescale(P);
  rep.reliable_through = G.reliable_through;
  if (G.has_negative())
    rep.verdict = Verdict::NotRescalable;
  else if (G.reliable_through >= -1)
    rep.verdict = Verdict::Rescalable;
  else
    rep.verdict = Verdict::Indeterminate;

  int n = P.n();
  size_t dim = size_t(1) << n;
  bool theta_fail = false, theta_unknown = false;
  for (const auto& [g, v] : P.terms) {
    int base = P.order - multi_order(g);
    for (size_t a = 0; a < v.size(); ++a) {
      const GeomPoly& c = v[a];
      if (c.is_zero()) continue;
      Witness w;
      w.gamma = g;
      int min_shift = 0;
      switch (P.bundle) {
        case Bundle::Scalar:
          w.needed = 0;
          break;
        case Bundle::Forms:
          w.I = Subset(a % dim);
          w.J = Subset(a / dim);
          w.needed = subset_size(*w.J) - subset_size(w.I);
          min_shift = -w.needed;
          break;
        case Bundle::Spinors:
          w.I = Subset(a);
          w.needed = subset_size(w.I);
          min_shift = -w.needed;
          break;
      }
      bool bad_theta = false;
      if (!c.has_formal) {
        theta_unknown = true;
      } else if (auto mt = c.formal.min_theta()) {
        w.theta = *mt;
        bad_theta = *mt < w.needed;
      } else if (c.formal.pruned) {
        w.theta = c.formal.cap;  // every monomial was at or above the cap
        bad_theta = c.formal.cap < w.needed;
      }
      theta_fail = theta_fail || bad_theta;
      auto lo = c.jet.p.min_xdeg();
      bool bad_lambda = false;
      if (lo) {
        int deg = base + *lo + min_shift;
        if (deg < 0) {
          w.lambda_degree = deg;
          bad_lambda = true;
        }
      }
      if (bad_theta || bad_lambda) rep.witnesses.push_back(w);
    }
  }
  std::sort(rep.witnesses.begin(), rep.witnesses.end());
  rep.theta_verdict = theta_fail ? Verdict::NotRescalable : theta_unknown ? Verdict::Indeterminate : Verdict::Rescalable;
  rep.decomposition_flag = rep.verdict != Verdict::Indeterminate && rep.theta_verdict != Verdict::Indeterminate &&
                           rep.verdict != rep.theta_verdict;
  if (rep.decomposition_flag)
    rep.note = "Theta criterion and lambda-grading disagree for this decomposition";
  if (rep.verdict == Verdict::Rescalable) {
    if (G.reliable_through >= 0) {
      const FormOperator* z = G.at(0);
      rep.limit = z ? *z : FormOperator(n, P.bundle == Bundle::Scalar ? 0 : n);
      if (P.bundle == Bundle::Spinors && !rep.limit->wedge_coefficients())
        throw std::logic_error("spinor limit does not act by wedge products");
    } else {
      rep.note += (rep.note.empty() ? "" : "; ") + std::string("truncation too low to extract the limit");
    }
  } else if (rep.verdict == Verdict::Indeterminate) {
    rep.note += (rep.note.empty() ? "" : "; ") + std::string("negative degrees not certified by the truncated jets");
  }
  return rep;
}

FormOperator limit_operator(const GeomDiffOp& P) {
  RescaleReport rep = rescalability(P);
  if (rep.verdict != Verdict::Rescalable) {
    std::string msg = "operator is " + to_string(rep.verdict);
    for (const auto& w : rep.witnesses) msg += "; " + w.str();
    throw std::domain_error(msg);
  }
  if (!rep.limit) throw std::domain_error(rep.note);
  return *rep.limit;
}

FormOperator frozen_limit(const GeomDiffOp& P) {
  GradedOperator G = frozen_rescale(P);
  if (G.has_negative()) throw std::domain_error("frozen family has negative lambda-degrees");
  if (G.reliable_through < 0) throw std::domain_error("truncation too low for the frozen limit");
  const FormOperator* z = G.at(0);
  return z ? *z : FormOperator(P.n(), P.bundle == Bundle::Scalar ? 0 : P.n());
}

// ---------------------------------------------------------------- Dirac square limit

namespace {

FormElement<PolyExpr> two_form(int n, const std::function<PolyExpr(int, int)>& f) {
  FormElement<PolyExpr> w(n);
  for (int s = 1; s <= n; ++s)
    for (int t = 1; t <= n; ++t) {
      if (s == t) continue;
      PolyExpr c = f(s, t);
      if (c.is_zero()) continue;
      if (s > t) c = -c;  // e^s ^ e^t = -e^t ^ e^s
      w.c[single(s) | single(t)] += c;
    }
  return w;
}

FormElement<PolyExpr> scaled_form(const FormElement<PolyExpr>& w, const Scalar& s) {
  return w.map([&](const PolyExpr& p) { return p * s; });
}

// sum_{j,s,t} R_{i j s t} x^j e^s ^ e^t
FormElement<PolyExpr> curvature_form(const JetContext& ctx, int i) {
  int n = ctx.n;
  return two_form(n, [&](int s, int t) {
    PolyExpr c;
    for (int j = 1; j <= n; ++j) c += ctx.R(i, j, s, t) * PolyExpr::x(j);
    return c;
  });
}

}  // namespace

FormOperator dirac_square_limit_expected(const JetContext& ctx) {
  int n = ctx.n;
  FormOperator sum(n, n);
  for (int i = 1; i <= n; ++i) {
    FormOperator op = scalar_term(n, n, unit_multi(i), PolyExpr(1));
    op -= wedge_term(n, Multi{}, scaled_form(curvature_form(ctx, i), Scalar::frac(1, 8)));
    sum += compose(op, op);
  }
  return -sum;
}

LimitSquareExpansion expand_limit_square(const FormOperator& L, std::shared_ptr<const GeometricJets> jets) {
  const JetContext& ctx = jets->ctx;
  int n = ctx.n;
  LimitSquareExpansion E;
  auto same = [n](const FormOperator& a, const FormOperator& b) { return a.reduced(n) == b.reduced(n); };

  // (I) -sum d_i^2
  E.displayed[0] = FormOperator(n, n);
  for (int i = 1; i <= n; ++i) E.displayed[0] += scalar_term(n, n, unit_multi(i) + unit_multi(i), PolyExpr(-1));
  // (II) 1/8 sum_i R_{iist} e^s ^ e^t
  E.displayed[1] = wedge_term(n, Multi{}, two_form(n, [&](int s, int t) {
                                PolyExpr c;
                                for (int i = 1; i <= n; ++i) c += ctx.R(i, i, s, t);
                                return c * Scalar::frac(1, 8);
                              }));
  // (III) 1/4 sum R_{jkst} x^k e^s ^ e^t d_j, and the inner limit -1/2 (...)
  E.displayed[2] = FormOperator(n, n);
  E.inner_III_displayed = FormOperator(n, n);
  for (int j = 1; j <= n; ++j) {
    auto w = curvature_form(ctx, j);
    E.displayed[2] += wedge_term(n, unit_multi(j), scaled_form(w, Scalar::frac(1, 4)));
    E.inner_III_displayed += wedge_term(n, unit_multi(j), scaled_form(w, Scalar::frac(-1, 2)));
  }
  // (IV) -1/64 sum R_{iqkl} R_{irst} x^q x^r e^k ^ e^l ^ e^s ^ e^t
  FormElement<PolyExpr> four(n);
  for (int i = 1; i <= n; ++i) {
    auto w = curvature_form(ctx, i);
    four += FormElement<PolyExpr>::wedge(w, w);
  }
  E.displayed[3] = wedge_term(n, Multi{}, scaled_form(four, Scalar::frac(-1, 64)));

  auto terms = lichnerowicz_terms(jets);
  for (int k = 0; k < 6; ++k) {
    GradedOperator G = getzler_rescale(terms[k]);
    if (G.has_negative()) throw std::logic_error("Lichnerowicz summand with negative lambda-degree");
    const FormOperator* z = G.at(0);
    E.rescaled[k] = z ? *z : FormOperator(n, n);
  }
  for (int k = 0; k < 4; ++k) E.term_matches[k] = same(E.rescaled[k], E.displayed[k]);
  E.inner_III = E.rescaled[2].map([](const PolyExpr& p) { return p * Scalar(-2); });
  E.inner_III_matches = same(E.inner_III, E.inner_III_displayed);
  E.rest_vanishes = E.rescaled[4].is_zero() && E.rescaled[5].is_zero();
  E.square = dirac_square_limit_expected(ctx);
  FormOperator sum(n, n);
  for (const auto& d : E.displayed) sum += d;
  E.displayed_sum_matches = same(sum, E.square);
  E.limit_matches = same(L, E.square);
  return E;
}

}  // namespace getzler
