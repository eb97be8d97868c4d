#include "getzler/jets.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace getzler {

// ---------------------------------------------------------------- context

JetContext JetContext::symbolic(int n, int K) {
  JetContext c;
  c.n = n;
  c.K = K;
  c.validate();
  return c;
}

JetContext JetContext::flat(int n, int K) {
  JetContext c = symbolic(n, K);
  c.mode = CurvatureMode::Flat;
  return c;
}

JetContext JetContext::numeric(const CurvatureTensor& t, int K) {
  JetContext c = symbolic(t.n, K);
  c.mode = CurvatureMode::Numeric;
  c.tensor = t;
  return c;
}

void JetContext::validate() const {
  if (n < 1 || n > kMaxDim) throw std::invalid_argument("dimension must be in 1..6");
  if (K < 2) throw std::invalid_argument("truncation order K must be at least 2");
  if (K > 3) throw std::invalid_argument("truncation order K > 3 is unsupported (no printed jets beyond order 3)");
  if (mode == CurvatureMode::Numeric && (!tensor || tensor->n != n))
    throw std::invalid_argument("numeric curvature tensor missing or of wrong dimension");
}

PolyExpr JetContext::R(int i, int j, int k, int l) const {
  switch (mode) {
    case CurvatureMode::Flat:
      return {};
    case CurvatureMode::Numeric:
      return PolyExpr(tensor->at(i, j, k, l));
    default: {
      PolyExpr r = PolyExpr::curvature(i, j, k, l, 0, n);
      return bianchi ? reduce_bianchi(r, n) : r;
    }
  }
}

PolyExpr JetContext::dR(int i, int j, int k, int l, int m) const {
  if (mode == CurvatureMode::Flat) return {};
  if (mode == CurvatureMode::Numeric && tensor->has_derivative())
    return PolyExpr(tensor->d_at(i, j, k, l, m));
  PolyExpr r = PolyExpr::curvature(i, j, k, l, m, n);
  return bianchi ? reduce_bianchi(r, n) : r;
}

// ---------------------------------------------------------------- Jet

Jet::Jet(PolyExpr poly, int precision) : p(std::move(poly)), prec(std::min(precision, kExact)) {
  if (prec < kExact) p = p.truncate_x(prec);
}

int Jet::low() const {
  if (is_exact() && p.is_zero()) return kExact;
  auto m = p.min_xdeg();
  return m ? *m : prec + 1;
}

Jet& Jet::operator+=(const Jet& o) {
  int np = std::min(prec, o.prec);
  p += o.p;
  if (np < prec) p = p.truncate_x(np);
  prec = np;
  return *this;
}

Jet& Jet::operator-=(const Jet& o) { return *this += -o; }

Jet operator*(const Jet& a, const Jet& b) {
  long pa = a.prec, pb = b.prec;
  long prec = std::min<long>(pa + b.low(), pb + a.low());
  prec = std::min<long>(prec, kExact);
  Jet r;
  r.prec = int(prec);
  r.p = PolyExpr::mul(a.p, b.p, r.prec < kExact ? r.prec : -1);
  return r;
}

Jet Jet::dx(int k) const { return Jet(p.dx(k), is_exact() ? kExact : prec - 1); }

bool Jet::agrees_with(const Jet& o) const {
  int c = std::min(prec, o.prec);
  if (c >= kExact) return p == o.p;
  return p.truncate_x(c) == o.p.truncate_x(c);
}

Valuation valuation(const Jet& j) {
  Valuation v;
  if (j.is_exact() && j.p.is_zero()) {
    v.infinite = true;
    return v;
  }
  return valuation(j.p, j.prec);
}

// ---------------------------------------------------------------- provenance

uint64_t VielbeinFactor::code() const {
  uint64_t c = uint64_t(kind) | uint64_t(i - 1) << 1 | uint64_t(t - 1) << 4 | uint64_t(std::min(val, 31)) << 7;
  for (int k = 0; k < kMaxDim; ++k) {
    if (beta[k] > 15) throw std::overflow_error("derivative order too large");
    c |= uint64_t(beta[k]) << (12 + 4 * k);
  }
  return c;
}

VielbeinFactor VielbeinFactor::from_code(uint64_t c) {
  VielbeinFactor f;
  f.kind = int(c & 1);
  f.i = int((c >> 1) & 7) + 1;
  f.t = int((c >> 4) & 7) + 1;
  f.val = int((c >> 7) & 31);
  for (int k = 0; k < kMaxDim; ++k) f.beta[k] = int((c >> (12 + 4 * k)) & 15);
  return f;
}

int VielbeinFactor::order() const { return std::accumulate(beta.begin(), beta.end(), 0); }

std::string VielbeinFactor::str() const {
  std::string d;
  for (int k = 0; k < kMaxDim; ++k)
    for (int r = 0; r < beta[k]; ++r) d += "D" + std::to_string(k + 1);
  std::string base = std::string(kind ? "b~[" : "a~[") + std::to_string(i) + "," + std::to_string(t) + "]";
  return d.empty() ? base : d + "(" + base + ")";
}

int theta_of(const FormalMonomial& m) {
  int s = 0;
  for (auto c : m) s += VielbeinFactor::from_code(c).theta();
  return s;
}

int gilkey_of(const FormalMonomial& m) {
  int s = 0;
  for (auto c : m) s += VielbeinFactor::from_code(c).order();
  return s;
}

void FormalPoly::add(const FormalMonomial& m, const Scalar& c) {
  if (c.is_zero()) return;
  if (cap >= 0 && theta_of(m) >= cap) {
    pruned = true;
    return;
  }
  auto [it, fresh] = terms.try_emplace(m, c);
  if (!fresh) {
    it->second += c;
    if (it->second.is_zero()) terms.erase(it);
  }
}

namespace {
int merge_cap(int a, int b) {
  if (a < 0) return b;
  if (b < 0) return a;
  return std::min(a, b);
}
}  // namespace

FormalPoly& FormalPoly::operator+=(const FormalPoly& o) {
  cap = merge_cap(cap, o.cap);
  pruned = pruned || o.pruned;
  for (const auto& [m, c] : o.terms) add(m, c);
  return *this;
}

FormalPoly FormalPoly::operator-() const { return scaled(Scalar(-1)); }

FormalPoly FormalPoly::scaled(const Scalar& s) const {
  FormalPoly r;
  r.cap = cap;
  r.pruned = pruned;
  if (s.is_zero()) return r;
  for (const auto& [m, c] : terms) r.terms.emplace(m, c * s);
  return r;
}

FormalPoly operator*(const FormalPoly& a, const FormalPoly& b) {
  FormalPoly r;
  r.cap = merge_cap(a.cap, b.cap);
  r.pruned = a.pruned || b.pruned;
  for (const auto& [ma, ca] : a.terms) {
    int ta = theta_of(ma);
    for (const auto& [mb, cb] : b.terms) {
      if (r.cap >= 0 && ta + theta_of(mb) >= r.cap) {
        r.pruned = true;
        continue;
      }
      FormalMonomial m(ma.size() + mb.size());
      std::merge(ma.begin(), ma.end(), mb.begin(), mb.end(), m.begin());
      r.add(m, ca * cb);
    }
  }
  return r;
}

FormalPoly FormalPoly::dx(int k) const {
  FormalPoly r;
  r.cap = cap;
  r.pruned = pruned;
  for (const auto& [m, c] : terms) {
    for (size_t p = 0; p < m.size(); ++p) {
      if (p > 0 && m[p] == m[p - 1]) continue;  // repeated factor handled by multiplicity
      auto f = VielbeinFactor::from_code(m[p]);
      int mult = int(std::count(m.begin(), m.end(), m[p]));
      ++f.beta[k - 1];
      FormalMonomial nm = m;
      nm.erase(nm.begin() + p);
      nm.insert(std::upper_bound(nm.begin(), nm.end(), f.code()), f.code());
      r.add(nm, c * Scalar(mult));
    }
  }
  return r;
}

std::optional<int> FormalPoly::min_theta() const {
  std::optional<int> r;
  for (const auto& t : terms) {
    int th = theta_of(t.first);
    if (!r || th < *r) r = th;
  }
  return r;
}

std::string FormalPoly::str() const {
  if (terms.empty()) return pruned ? "(pruned)" : "0";
  std::string s;
  for (const auto& [m, c] : terms) {
    if (!s.empty()) s += " + ";
    s += "(" + c.str() + ")";
    for (auto f : m) s += "*" + VielbeinFactor::from_code(f).str();
  }
  return s;
}

// ---------------------------------------------------------------- GeomPoly

GeomPoly::GeomPoly(const Scalar& c) : jet(Jet::exact(PolyExpr(c))) {
  if (c.is_zero()) return;
  gilkey = 0;
  has_formal = true;
  formal.add({}, c);
}

GeomPoly GeomPoly::leaf(const Jet& jet_full, const Jet& nonconst, const VielbeinFactor& f,
                        const Scalar& delta, int cap, bool track) {
  GeomPoly g;
  g.jet = jet_full;
  g.gilkey = 0;
  g.has_formal = track;
  if (track) {
    g.formal.cap = cap;
    g.formal.add({}, delta);
    if (!(nonconst.is_exact() && nonconst.is_zero())) g.formal.add({f.code()}, Scalar(1));
  }
  if (g.jet.is_exact() && g.jet.is_zero()) g.gilkey = kZeroOrder;
  return g;
}

GeomPoly GeomPoly::untracked(const Jet& j, int gil) {
  GeomPoly g;
  g.jet = j;
  g.gilkey = (j.is_exact() && j.is_zero()) ? kZeroOrder : gil;
  return g;
}

GeomPoly& GeomPoly::operator+=(const GeomPoly& o) {
  if (o.is_zero()) return *this;
  if (is_zero()) return *this = o;
  if (gilkey == kZeroOrder)
    gilkey = o.gilkey;
  else if (o.gilkey != kZeroOrder && o.gilkey != gilkey)
    gilkey = kUnknownOrder;
  jet += o.jet;
  if (has_formal && o.has_formal)
    formal += o.formal;
  else if (has_formal || o.has_formal) {
    has_formal = false;
    formal = {};
  }
  if (jet.is_exact() && jet.is_zero() && (!has_formal || formal.empty())) *this = GeomPoly();
  return *this;
}

GeomPoly GeomPoly::operator-() const {
  GeomPoly r = *this;
  r.jet = -jet;
  r.formal = -formal;
  return r;
}

GeomPoly operator*(const GeomPoly& a, const GeomPoly& b) {
  if (a.is_zero() || b.is_zero()) return GeomPoly();
  GeomPoly r;
  r.jet = a.jet * b.jet;
  if (a.gilkey == GeomPoly::kUnknownOrder || b.gilkey == GeomPoly::kUnknownOrder)
    r.gilkey = GeomPoly::kUnknownOrder;
  else if (a.gilkey == GeomPoly::kZeroOrder || b.gilkey == GeomPoly::kZeroOrder)
    r.gilkey = a.gilkey == GeomPoly::kZeroOrder ? b.gilkey : a.gilkey;
  else
    r.gilkey = a.gilkey + b.gilkey;
  r.has_formal = a.has_formal && b.has_formal;
  if (r.has_formal) r.formal = a.formal * b.formal;
  return r;
}

GeomPoly operator*(const GeomPoly& a, const Scalar& s) {
  if (s.is_zero() || a.is_zero()) return GeomPoly();
  GeomPoly r = a;
  r.jet = a.jet * s;
  r.formal = a.formal.scaled(s);
  return r;
}

GeomPoly GeomPoly::dx(int k) const {
  if (is_zero()) return GeomPoly();
  GeomPoly r;
  r.jet = jet.dx(k);
  r.gilkey = (gilkey >= 0) ? gilkey + 1 : gilkey;
  r.has_formal = has_formal;
  if (has_formal) r.formal = formal.dx(k);
  if (r.jet.is_exact() && r.jet.is_zero() && (!has_formal || r.formal.empty())) return GeomPoly();
  return r;
}

std::optional<int> GeomPoly::min_theta() const {
  if (!has_formal) throw std::logic_error("provenance missing: Theta is decomposition-dependent");
  return formal.min_theta();
}

// ---------------------------------------------------------------- printed jets

namespace {

int prec_of(const JetContext& ctx) { return ctx.exact_jets() ? kExact : ctx.K; }

Jet delta_jet(int i, int j) { return Jet::exact(PolyExpr(i == j ? 1 : 0)); }

PolyExpr xx(int a, int b) { return PolyExpr::x(a) * PolyExpr::x(b); }

// a~_i^l, the nonconstant part of the printed vielbein
Jet a_nonconst(const JetContext& ctx, int i, int l) {
  int n = ctx.n;
  PolyExpr p;
  for (int j = 1; j <= n; ++j)
    for (int k = 1; k <= n; ++k) {
      p += Scalar::frac(-1, 6) * ctx.R(i, j, k, l) * xx(j, k);
      if (ctx.K >= 3)
        for (int t = 1; t <= n; ++t)
          p += Scalar::frac(-1, 12) * ctx.dR(i, j, k, l, t) * xx(j, k) * PolyExpr::x(t);
    }
  return Jet(p, prec_of(ctx));
}

// b~_l^i
Jet b_nonconst(const JetContext& ctx, int l, int i) {
  int n = ctx.n;
  PolyExpr p;
  for (int j = 1; j <= n; ++j)
    for (int k = 1; k <= n; ++k) {
      p += Scalar::frac(1, 6) * ctx.R(l, j, k, i) * xx(j, k);
      if (ctx.K >= 3)
        for (int t = 1; t <= n; ++t)
          p += Scalar::frac(1, 12) * ctx.dR(l, j, k, i, t) * xx(j, k) * PolyExpr::x(t);
    }
  return Jet(p, prec_of(ctx));
}

}  // namespace

MetricJet metric_expansion(const JetContext& ctx) {
  ctx.validate();
  int n = ctx.n;
  MetricJet m{SquareMat<Jet>(n), SquareMat<Jet>(n), {}};
  for (int i = 1; i <= n; ++i)
    for (int j = 1; j <= n; ++j) {
      PolyExpr g = i == j ? 1 : 0, gi = i == j ? 1 : 0;
      for (int k = 1; k <= n; ++k)
        for (int l = 1; l <= n; ++l) {
          PolyExpr r = ctx.R(i, k, l, j) * xx(k, l);
          g += Scalar::frac(-1, 3) * r;
          gi += Scalar::frac(1, 3) * r;
          if (ctx.K >= 3)
            for (int q = 1; q <= n; ++q) {
              PolyExpr d = ctx.dR(i, k, l, j, q) * xx(k, l) * PolyExpr::x(q);
              g += Scalar::frac(-1, 6) * d;
              gi += Scalar::frac(1, 6) * d;
            }
        }
      m.g(i, j) = Jet(g, prec_of(ctx));
      m.g_inv(i, j) = Jet(gi, prec_of(ctx));
    }
  m.j_g = sqrt_det(m.g);
  return m;
}

VielbeinJet vielbein_expansion(const JetContext& ctx) {
  ctx.validate();
  int n = ctx.n;
  VielbeinJet v{SquareMat<Jet>(n), SquareMat<Jet>(n)};
  for (int i = 1; i <= n; ++i)
    for (int l = 1; l <= n; ++l) {
      v.a(i, l) = delta_jet(i, l) + a_nonconst(ctx, i, l);
      v.b(l, i) = delta_jet(l, i) + b_nonconst(ctx, l, i);
    }
  return v;
}

SquareMat<Jet> neumann_inverse(const SquareMat<Jet>& g, int K) {
  int n = g.n;
  SquareMat<Jet> h(n), term(n), sum(n);
  for (int i = 1; i <= n; ++i)
    for (int j = 1; j <= n; ++j) {
      h(i, j) = g(i, j) - delta_jet(i, j);
      term(i, j) = delta_jet(i, j);
      sum(i, j) = delta_jet(i, j);
    }
  // h has valuation >= 2, so (-h)^k vanishes mod degree K+1 once 2k > K
  for (int k = 1; 2 * k <= K; ++k) {
    SquareMat<Jet> next(n);
    for (int i = 1; i <= n; ++i)
      for (int j = 1; j <= n; ++j) {
        Jet s;
        for (int m = 1; m <= n; ++m) s -= term(i, m) * h(m, j);
        next(i, j) = s;
      }
    term = next;
    for (int i = 1; i <= n; ++i)
      for (int j = 1; j <= n; ++j) sum(i, j) += term(i, j);
  }
  return sum;
}

Jet sqrt_det(const SquareMat<Jet>& g) {
  int n = g.n;
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 1);
  Jet det;
  do {
    int inv = 0;
    for (int a = 0; a < n; ++a)
      for (int b = a + 1; b < n; ++b)
        if (perm[a] > perm[b]) ++inv;
    Jet prod = Jet::exact(PolyExpr(inv % 2 ? -1 : 1));
    for (int a = 0; a < n && !(prod.is_exact() && prod.is_zero()); ++a) prod = prod * g(a + 1, perm[a]);
    det += prod;
  } while (std::next_permutation(perm.begin(), perm.end()));
  // sqrt(1+u) = sum binom(1/2, k) u^k
  Jet u = det - Jet::exact(PolyExpr(1));
  Jet out = Jet::exact(PolyExpr(1)), power = Jet::exact(PolyExpr(1));
  Scalar coef(1);
  int low = u.low();
  if (low <= 0) throw std::domain_error("metric determinant must be 1 at the origin");
  int cutoff = u.is_exact() ? 64 : u.prec;
  for (int k = 1; k * low <= cutoff && !(u.is_exact() && u.is_zero()); ++k) {
    coef = coef * (Scalar::frac(1, 2) - Scalar(k - 1)) / Scalar(k);
    power = power * u;
    out += power * coef;
  }
  return out;
}

// ---------------------------------------------------------------- geometric jets

std::shared_ptr<const GeometricJets> build_geometric_jets(const JetContext& ctx) {
  ctx.validate();
  int n = ctx.n;
  auto J = std::make_shared<GeometricJets>();
  J->ctx = ctx;
  J->a = SquareMat<GeomPoly>(n);
  J->b = SquareMat<GeomPoly>(n);
  for (int i = 1; i <= n; ++i)
    for (int t = 1; t <= n; ++t) {
      Jet an = a_nonconst(ctx, i, t), bn = b_nonconst(ctx, i, t);
      VielbeinFactor fa, fb;
      fa.kind = 0, fa.i = i, fa.t = t, fa.val = std::min(an.low(), 31);
      fb.kind = 1, fb.i = i, fb.t = t, fb.val = std::min(bn.low(), 31);
      Scalar d(i == t ? 1 : 0);
      J->a(i, t) = GeomPoly::leaf(delta_jet(i, t) + an, an, fa, d, ctx.theta_cap, ctx.track_provenance);
      J->b(i, t) = GeomPoly::leaf(delta_jet(i, t) + bn, bn, fb, d, ctx.theta_cap, ctx.track_provenance);
    }
  J->g = SquareMat<GeomPoly>(n);
  J->ginv = SquareMat<GeomPoly>(n);
  for (int i = 1; i <= n; ++i)
    for (int j = 1; j <= n; ++j) {
      GeomPoly s, si;
      for (int l = 1; l <= n; ++l) {
        s += J->a(i, l) * J->a(j, l);
        si += J->b(l, i) * J->b(l, j);
      }
      J->g(i, j) = s;
      J->ginv(i, j) = si;
    }
  J->dg.assign(n, SquareMat<GeomPoly>(n));
  for (int k = 1; k <= n; ++k)
    for (int i = 1; i <= n; ++i)
      for (int j = 1; j <= n; ++j) J->dg[k - 1](i, j) = J->g(i, j).dx(k);

  // lowered symbols Gamma_{ik,m} = (d_i g_km + d_k g_im - d_m g_ik) / 2
  std::vector<GeomPoly> low(size_t(n) * n * n);
  auto L = [&](int i, int k, int m) -> GeomPoly& { return low[(size_t(i - 1) * n + (k - 1)) * n + (m - 1)]; };
  Scalar half = Scalar::frac(1, 2);
  for (int i = 1; i <= n; ++i)
    for (int k = 1; k <= n; ++k)
      for (int m = 1; m <= n; ++m)
        L(i, k, m) = (J->dg[i - 1](k, m) + J->dg[k - 1](i, m) - J->dg[m - 1](i, k)) * half;

  J->christoffel.assign(size_t(n) * n * n, GeomPoly());
  for (int k = 1; k <= n; ++k)
    for (int i = 1; i <= n; ++i)
      for (int j = 1; j <= n; ++j) {
        GeomPoly s;
        for (int m = 1; m <= n; ++m) s += J->ginv(k, m) * L(i, j, m);
        J->christoffel[(size_t(k - 1) * n + (i - 1)) * n + (j - 1)] = s;
      }

  // Gamma~_{ls}^t = g(nabla_{e_l} e_s, e_t) with e_s = b_s^k d_k
  std::vector<GeomPoly> W(size_t(n) * n * n);  // W(s,i,m) = g(nabla_i e_s, d_m)
  for (int s = 1; s <= n; ++s)
    for (int i = 1; i <= n; ++i)
      for (int m = 1; m <= n; ++m) {
        GeomPoly w;
        for (int k = 1; k <= n; ++k) w += J->b(s, k).dx(i) * J->g(k, m) + J->b(s, k) * L(i, k, m);
        W[(size_t(s - 1) * n + (i - 1)) * n + (m - 1)] = w;
      }
  J->frame.assign(size_t(n) * n * n, GeomPoly());
  for (int l = 1; l <= n; ++l)
    for (int s = 1; s <= n; ++s)
      for (int t = 1; t <= n; ++t) {
        GeomPoly acc;
        for (int i = 1; i <= n; ++i) {
          if (J->b(l, i).is_zero()) continue;
          GeomPoly inner;
          for (int m = 1; m <= n; ++m) inner += J->b(t, m) * W[(size_t(s - 1) * n + (i - 1)) * n + (m - 1)];
          acc += J->b(l, i) * inner;
        }
        J->frame[(size_t(l - 1) * n + (s - 1)) * n + (t - 1)] = acc;
      }
  return J;
}

namespace {

JetContext untracked(JetContext ctx) {
  ctx.track_provenance = false;
  return ctx;
}

}  // namespace

std::vector<Jet> christoffel(const JetContext& ctx) {
  // Koszul on the printed metric and its printed inverse
  auto m = metric_expansion(ctx);
  int n = ctx.n;
  std::vector<Jet> out(size_t(n) * n * n);
  Scalar half = Scalar::frac(1, 2);
  for (int k = 1; k <= n; ++k)
    for (int i = 1; i <= n; ++i)
      for (int j = 1; j <= n; ++j) {
        Jet s;
        for (int l = 1; l <= n; ++l)
          s += m.g_inv(k, l) * (m.g(j, l).dx(i) + m.g(i, l).dx(j) - m.g(i, j).dx(l)) * half;
        out[(size_t(k - 1) * n + (i - 1)) * n + (j - 1)] = s;
      }
  return out;
}

std::vector<Jet> christoffel_frame(const JetContext& ctx) {
  auto J = build_geometric_jets(untracked(ctx));
  std::vector<Jet> out;
  for (const auto& g : J->frame) out.push_back(g.jet);
  return out;
}

std::vector<Jet> christoffel_frame_cartan(const JetContext& ctx) {
  auto v = vielbein_expansion(ctx);
  int n = ctx.n;
  // C^t_{pq} = de^t(e_p, e_q), e^t = a_j^t dx^j, e_p = b_p^i d_i
  std::vector<Jet> C(size_t(n) * n * n);
  auto Cx = [&](int t, int p, int q) -> Jet& { return C[(size_t(t - 1) * n + (p - 1)) * n + (q - 1)]; };
  for (int t = 1; t <= n; ++t)
    for (int p = 1; p <= n; ++p)
      for (int q = 1; q <= n; ++q) {
        Jet s;
        for (int i = 1; i <= n; ++i)
          for (int j = 1; j <= n; ++j) {
            Jet curl = v.a(j, t).dx(i) - v.a(i, t).dx(j);
            if (curl.is_zero() && curl.is_exact()) continue;
            s += curl * v.b(p, i) * v.b(q, j);
          }
        Cx(t, p, q) = s;
      }
  std::vector<Jet> out(size_t(n) * n * n);
  Scalar half = Scalar::frac(1, 2);
  for (int p = 1; p <= n; ++p)
    for (int q = 1; q <= n; ++q)
      for (int t = 1; t <= n; ++t)
        out[(size_t(p - 1) * n + (q - 1)) * n + (t - 1)] = (Cx(p, q, t) - Cx(t, p, q) - Cx(q, t, p)) * half;
  return out;
}

PolyExpr christoffel_leading_printed(const JetContext& ctx, int k, int i, int j) {
  PolyExpr p;
  for (int l = 1; l <= ctx.n; ++l)
    p += Scalar::frac(1, 3) * (ctx.R(i, k, l, j) + ctx.R(i, l, k, j)) * PolyExpr::x(l);
  return p;
}

PolyExpr frame_leading_printed(const JetContext& ctx, int l, int s, int t) {
  PolyExpr p;
  for (int i = 1; i <= ctx.n; ++i) p += Scalar::frac(-1, 2) * ctx.R(l, i, s, t) * PolyExpr::x(i);
  return p;
}

PolyExpr ricci_at_p(const JetContext& ctx, int k, int l) {
  PolyExpr s;
  for (int i = 1; i <= ctx.n; ++i) s += ctx.R(i, k, l, i);
  return s;
}

PolyExpr scalar_curvature_at_p(const JetContext& ctx) {
  PolyExpr s;
  for (int i = 1; i <= ctx.n; ++i) s += ricci_at_p(ctx, i, i);
  return s;
}

// ---------------------------------------------------------------- scaling

PullbackResult pullback_flambda(const GeomPoly& s) {
  if (!s.is_geometric()) throw std::invalid_argument("pullback requires a geometric polynomial");
  PullbackResult r;
  r.gilkey = s.gilkey == GeomPoly::kZeroOrder ? 0 : s.gilkey;
  r.lambda_shift = r.gilkey;
  r.graded = lambda_substitute(s.jet.p, r.gilkey);
  return r;
}

PolyExpr evaluate_provenance_scaled(const GeomPoly& s, const GeometricJets& jets) {
  if (!s.has_formal || s.formal.pruned) throw std::logic_error("complete provenance required");
  const auto& ctx = jets.ctx;
  PolyExpr out;
  for (const auto& [m, c] : s.formal.terms) {
    PolyExpr prod(c);
    for (auto code : m) {
      auto f = VielbeinFactor::from_code(code);
      Jet base = f.kind == 0 ? a_nonconst(ctx, f.i, f.t) : b_nonconst(ctx, f.i, f.t);
      PolyExpr d = base.p;
      for (int k = 0; k < kMaxDim; ++k)
        for (int r = 0; r < f.beta[k]; ++r) d = d.dx(k + 1);
      // D^beta [h(lambda x)] = lambda^{|beta|} (D^beta h)(lambda x)
      prod = prod * d.scale_lambda(1).times_lambda(f.order());
    }
    out += prod;
  }
  return out;
}

std::string to_string(LimitVerdict v) {
  switch (v) {
    case LimitVerdict::Diverges:
      return "diverges";
    case LimitVerdict::Zero:
      return "zero";
    case LimitVerdict::Finite:
      return "finite";
    default:
      return "indeterminate";
  }
}

LimitResult valuation_limit(const PolyExpr& h, const std::array<int, kMaxDim>& gamma, int theta, int prec) {
  int g = 0;
  PolyExpr d = h;
  for (int k = 0; k < kMaxDim; ++k)
    for (int r = 0; r < gamma[k]; ++r) d = d.dx(k + 1), ++g;
  int dprec = prec >= kExact ? kExact : prec - g;  // D^gamma h known through this degree
  if (dprec < kExact) d = d.truncate_x(dprec);
  // lambda^{-theta} D^gamma(h o f_lambda) = sum_d lambda^{g + d - theta} (D^gamma h)_d(x)
  LimitResult r;
  auto lo = d.min_xdeg();
  int need = theta - g;  // degree that survives at lambda^0
  if (lo && *lo < need) {
    r.verdict = LimitVerdict::Diverges;
    r.reason = "term of degree " + std::to_string(*lo) + " < theta - |gamma| = " + std::to_string(need);
    return r;
  }
  if (need > dprec) {
    r.verdict = LimitVerdict::Indeterminate;
    r.reason = "truncation order too low to see degree " + std::to_string(need);
    return r;
  }
  r.value = need >= 0 ? d.x_homogeneous(need) : PolyExpr();
  r.verdict = r.value.is_zero() ? LimitVerdict::Zero : LimitVerdict::Finite;
  return r;
}

}  // namespace getzler
