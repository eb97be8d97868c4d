#include "getzler/poly.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_map>

namespace getzler {

int Monomial::xdeg() const {
  int d = 0;
  for (auto e : x) d += e;
  return d;
}

int Monomial::xideg() const {
  int d = 0;
  for (auto e : xi) d += e;
  return d;
}

size_t MonomialHash::operator()(const Monomial& m) const {
  uint64_t h = 1469598103934665603ull;
  auto mix = [&h](uint64_t v) {
    h ^= v;
    h *= 1099511628211ull;
  };
  for (int k = 0; k < kMaxDim; ++k) mix(m.x[k] | (uint64_t(m.xi[k]) << 8));
  mix(m.z | (uint64_t(uint8_t(m.lam)) << 8));
  for (int k = 0; k < m.nc; ++k) mix(m.c[k]);
  return h;
}

namespace {

uint8_t add_exp(uint8_t a, uint8_t b) {
  unsigned s = unsigned(a) + b;
  if (s > 255) throw std::overflow_error("monomial exponent overflow");
  return static_cast<uint8_t>(s);
}

}  // namespace

Monomial operator*(const Monomial& a, const Monomial& b) {
  Monomial r;
  for (int k = 0; k < kMaxDim; ++k) {
    r.x[k] = add_exp(a.x[k], b.x[k]);
    r.xi[k] = add_exp(a.xi[k], b.xi[k]);
  }
  r.z = add_exp(a.z, b.z);
  int lam = int(a.lam) + b.lam;
  if (lam < -128 || lam > 127) throw std::overflow_error("lambda exponent overflow");
  r.lam = static_cast<int8_t>(lam);
  if (a.nc + b.nc > kMaxDim) throw std::overflow_error("too many curvature factors");
  std::merge(a.c.begin(), a.c.begin() + a.nc, b.c.begin(), b.c.begin() + b.nc, r.c.begin());
  r.nc = a.nc + b.nc;
  return r;
}

PolyExpr::PolyExpr(const Scalar& c) {
  if (!c.is_zero()) terms_.emplace_back(Monomial{}, c);
}

PolyExpr PolyExpr::monomial(const Monomial& m, const Scalar& c) {
  PolyExpr p;
  if (!c.is_zero()) p.terms_.emplace_back(m, c);
  return p;
}

PolyExpr PolyExpr::x(int k) {
  if (k < 1 || k > kMaxDim) throw std::out_of_range("coordinate index");
  Monomial m;
  m.x[k - 1] = 1;
  return monomial(m, 1);
}

PolyExpr PolyExpr::xi(int k) {
  if (k < 1 || k > kMaxDim) throw std::out_of_range("covector index");
  Monomial m;
  m.xi[k - 1] = 1;
  return monomial(m, 1);
}

PolyExpr PolyExpr::zvar() {
  Monomial m;
  m.z = 1;
  return monomial(m, 1);
}

PolyExpr PolyExpr::lambda(int e) {
  Monomial m;
  m.lam = static_cast<int8_t>(e);
  return monomial(m, 1);
}

PolyExpr PolyExpr::curvature(int i, int j, int k, int l, int m, int n) {
  std::vector<int> d;
  if (m) d.push_back(m);
  auto c = canonicalize_curvature(i, j, k, l, d, n);
  if (c.sign == 0) return {};
  Monomial mon;
  mon.nc = 1;
  mon.c[0] = c.r.code();
  return monomial(mon, c.sign);
}

PolyExpr PolyExpr::from_terms(std::vector<Term> terms) {
  std::sort(terms.begin(), terms.end(),
            [](const Term& a, const Term& b) { return a.first < b.first; });
  PolyExpr p;
  p.terms_.reserve(terms.size());
  for (auto& t : terms) {
    if (!p.terms_.empty() && p.terms_.back().first == t.first) {
      p.terms_.back().second += t.second;
    } else {
      if (!p.terms_.empty() && p.terms_.back().second.is_zero()) p.terms_.pop_back();
      p.terms_.push_back(std::move(t));
    }
  }
  if (!p.terms_.empty() && p.terms_.back().second.is_zero()) p.terms_.pop_back();
  return p;
}

bool PolyExpr::is_constant() const {
  return terms_.empty() || (terms_.size() == 1 && terms_[0].first == Monomial{});
}

Scalar PolyExpr::constant_term() const {
  if (!terms_.empty() && terms_[0].first == Monomial{}) return terms_[0].second;
  return {};
}

namespace {

template <class Combine>
std::vector<PolyExpr::Term> merge_terms(const std::vector<PolyExpr::Term>& a,
                                        const std::vector<PolyExpr::Term>& b, Combine sgn) {
  std::vector<PolyExpr::Term> out;
  out.reserve(a.size() + b.size());
  size_t i = 0, j = 0;
  while (i < a.size() || j < b.size()) {
    if (j == b.size() || (i < a.size() && a[i].first < b[j].first)) {
      out.push_back(a[i++]);
    } else if (i == a.size() || b[j].first < a[i].first) {
      out.emplace_back(b[j].first, sgn(b[j].second));
      ++j;
    } else {
      Scalar s = a[i].second + sgn(b[j].second);
      if (!s.is_zero()) out.emplace_back(a[i].first, std::move(s));
      ++i, ++j;
    }
  }
  return out;
}

}  // namespace

PolyExpr& PolyExpr::operator+=(const PolyExpr& o) {
  if (o.terms_.empty()) return *this;
  if (terms_.empty()) return *this = o;
  terms_ = merge_terms(terms_, o.terms_, [](const Scalar& s) { return s; });
  return *this;
}

PolyExpr& PolyExpr::operator-=(const PolyExpr& o) {
  if (o.terms_.empty()) return *this;
  terms_ = merge_terms(terms_, o.terms_, [](const Scalar& s) { return -s; });
  return *this;
}

PolyExpr& PolyExpr::operator*=(const Scalar& s) {
  if (s.is_zero()) {
    terms_.clear();
    return *this;
  }
  if (s.is_one()) return *this;
  for (auto& t : terms_) t.second *= s;
  return *this;
}

PolyExpr PolyExpr::operator-() const {
  PolyExpr r = *this;
  for (auto& t : r.terms_) t.second = -t.second;
  return r;
}

PolyExpr PolyExpr::mul(const PolyExpr& a, const PolyExpr& b, int max_xdeg) {
  if (a.is_zero() || b.is_zero()) return {};
  if (a.is_constant() && max_xdeg < 0) return b * a.terms_[0].second;
  if (b.is_constant() && max_xdeg < 0) return a * b.terms_[0].second;
  std::unordered_map<Monomial, Scalar, MonomialHash> acc;
  acc.reserve(a.size() * b.size());
  std::vector<int> bdeg(b.size());
  for (size_t j = 0; j < b.size(); ++j) bdeg[j] = b.terms_[j].first.xdeg();
  for (const auto& [ma, ca] : a.terms_) {
    int da = max_xdeg >= 0 ? ma.xdeg() : 0;
    if (max_xdeg >= 0 && da > max_xdeg) continue;
    for (size_t j = 0; j < b.size(); ++j) {
      if (max_xdeg >= 0 && da + bdeg[j] > max_xdeg) continue;
      const auto& [mb, cb] = b.terms_[j];
      auto [it, fresh] = acc.try_emplace(ma * mb);
      if (fresh)
        it->second = ca * cb;
      else
        it->second += ca * cb;
    }
  }
  std::vector<Term> out;
  out.reserve(acc.size());
  for (auto& kv : acc)
    if (!kv.second.is_zero()) out.emplace_back(kv.first, std::move(kv.second));
  std::sort(out.begin(), out.end(), [](const Term& x, const Term& y) { return x.first < y.first; });
  PolyExpr p;
  p.terms_ = std::move(out);
  return p;
}

PolyExpr PolyExpr::truncate_x(int max_xdeg) const {
  PolyExpr p;
  for (const auto& t : terms_)
    if (t.first.xdeg() <= max_xdeg) p.terms_.push_back(t);
  return p;
}

PolyExpr PolyExpr::x_homogeneous(int d) const {
  PolyExpr p;
  for (const auto& t : terms_)
    if (t.first.xdeg() == d) p.terms_.push_back(t);
  return p;
}

std::optional<int> PolyExpr::min_xdeg() const {
  std::optional<int> r;
  for (const auto& t : terms_) {
    int d = t.first.xdeg();
    if (!r || d < *r) r = d;
  }
  return r;
}

int PolyExpr::max_xdeg() const {
  int r = -1;
  for (const auto& t : terms_) r = std::max(r, t.first.xdeg());
  return r;
}

PolyExpr PolyExpr::dx(int k) const {
  std::vector<Term> out;
  for (const auto& [m, c] : terms_) {
    if (!m.x[k - 1]) continue;
    Monomial mm = m;
    Scalar cc = c * Scalar(int(mm.x[k - 1]));
    --mm.x[k - 1];
    out.emplace_back(mm, std::move(cc));
  }
  return from_terms(std::move(out));
}

PolyExpr PolyExpr::dxi(int k) const {
  std::vector<Term> out;
  for (const auto& [m, c] : terms_) {
    if (!m.xi[k - 1]) continue;
    Monomial mm = m;
    Scalar cc = c * Scalar(int(mm.xi[k - 1]));
    --mm.xi[k - 1];
    out.emplace_back(mm, std::move(cc));
  }
  return from_terms(std::move(out));
}

PolyExpr PolyExpr::dz() const {
  std::vector<Term> out;
  for (const auto& [m, c] : terms_) {
    if (!m.z) continue;
    Monomial mm = m;
    Scalar cc = c * Scalar(int(mm.z));
    --mm.z;
    out.emplace_back(mm, std::move(cc));
  }
  return from_terms(std::move(out));
}

PolyExpr PolyExpr::subst_z(const Scalar& v) const {
  std::vector<Term> out;
  for (const auto& [m, c] : terms_) {
    if (m.z && v.is_zero()) continue;
    Monomial mm = m;
    mm.z = 0;
    out.emplace_back(mm, m.z ? c * v.pow(m.z) : c);
  }
  return from_terms(std::move(out));
}

PolyExpr PolyExpr::subst_x(const std::vector<Scalar>& pt) const {
  std::vector<Term> out;
  for (const auto& [m, c] : terms_) {
    Monomial mm = m;
    Scalar cc = c;
    for (size_t k = 0; k < kMaxDim; ++k) {
      if (!mm.x[k]) continue;
      if (k >= pt.size()) throw std::out_of_range("point has too few coordinates");
      cc *= pt[k].pow(mm.x[k]);
      mm.x[k] = 0;
    }
    if (!cc.is_zero()) out.emplace_back(mm, std::move(cc));
  }
  return from_terms(std::move(out));
}

PolyExpr PolyExpr::scale_lambda(int wx, int wxi) const {
  std::vector<Term> out;
  out.reserve(terms_.size());
  for (const auto& [m, c] : terms_) {
    Monomial mm = m;
    int lam = int(mm.lam) + wx * m.xdeg() + wxi * m.xideg();
    if (lam < -128 || lam > 127) throw std::overflow_error("lambda exponent overflow");
    mm.lam = static_cast<int8_t>(lam);
    out.emplace_back(mm, c);
  }
  return from_terms(std::move(out));
}

PolyExpr PolyExpr::times_lambda(int e) const { return *this * lambda(e); }

PolyExpr PolyExpr::lambda_coefficient(int e) const {
  std::vector<Term> out;
  for (const auto& [m, c] : terms_) {
    if (m.lam != e) continue;
    Monomial mm = m;
    mm.lam = 0;
    out.emplace_back(mm, c);
  }
  return from_terms(std::move(out));
}

std::optional<std::pair<int, int>> PolyExpr::lambda_range() const {
  if (terms_.empty()) return std::nullopt;
  int lo = 127, hi = -128;
  for (const auto& t : terms_) lo = std::min(lo, int(t.first.lam)), hi = std::max(hi, int(t.first.lam));
  return std::pair(lo, hi);
}

bool PolyExpr::has_curvature() const {
  for (const auto& t : terms_)
    if (t.first.nc) return true;
  return false;
}

PolyExpr PolyExpr::instantiate(const CurvatureTensor& T) const {
  std::vector<Term> out;
  for (const auto& [m, c] : terms_) {
    Monomial mm = m;
    mm.nc = 0;
    mm.c = {};
    Scalar cc = c;
    for (int a = 0; a < m.nc; ++a) {
      auto r = CurvatureIndeterminate::from_code(m.c[a]);
      if (r.i > T.n || r.j > T.n || r.k > T.n || r.l > T.n)
        throw std::out_of_range("curvature index exceeds tensor dimension");
      if (!r.m) {
        cc *= T.at(r.i, r.j, r.k, r.l);
      } else if (T.has_derivative()) {
        cc *= T.d_at(r.i, r.j, r.k, r.l, r.m);
      } else {
        mm.c[mm.nc++] = m.c[a];  // stays symbolic
      }
      if (cc.is_zero()) break;
    }
    if (!cc.is_zero()) out.emplace_back(mm, std::move(cc));
  }
  return from_terms(std::move(out));
}

std::string monomial_str(const Monomial& m) {
  std::vector<std::string> f;
  auto pw = [](std::string b, int e) { return e == 1 ? b : b + "^" + std::to_string(e); };
  for (int a = 0; a < m.nc;) {
    int b = a;
    while (b < m.nc && m.c[b] == m.c[a]) ++b;
    f.push_back(pw(CurvatureIndeterminate::from_code(m.c[a]).str(), b - a));
    a = b;
  }
  for (int k = 0; k < kMaxDim; ++k)
    if (m.x[k]) f.push_back(pw("x" + std::to_string(k + 1), m.x[k]));
  for (int k = 0; k < kMaxDim; ++k)
    if (m.xi[k]) f.push_back(pw("xi" + std::to_string(k + 1), m.xi[k]));
  if (m.z) f.push_back(pw("z", m.z));
  if (m.lam) f.push_back(m.lam == 1 ? "lambda" : "lambda^" + std::to_string(m.lam));
  std::string s;
  for (size_t a = 0; a < f.size(); ++a) s += (a ? "*" : "") + f[a];
  return s;
}

std::string PolyExpr::str() const {
  if (terms_.empty()) return "0";
  // display order: by x-degree, then canonical monomial order
  std::vector<const Term*> order;
  for (const auto& t : terms_) order.push_back(&t);
  std::stable_sort(order.begin(), order.end(), [](const Term* a, const Term* b) {
    return a->first.xdeg() < b->first.xdeg();
  });
  std::string s;
  bool first = true;
  for (const Term* t : order) {
    std::string mon = monomial_str(t->first);
    const Scalar& c = t->second;
    std::string coef;
    bool neg = false;
    if (c.is_real()) {
      neg = sgn(c.re()) < 0;
      mpq_class a = abs(c.re());
      coef = (a == 1 && !mon.empty()) ? "" : rational_str(a);
    } else if (c.is_compound()) {
      coef = "(" + c.str() + ")";
    } else {
      neg = sgn(c.im()) < 0;
      coef = neg ? (-c).str() : c.str();
    }
    std::string body = coef.empty() ? mon : (mon.empty() ? coef : coef + "*" + mon);
    if (first)
      s += neg ? "-" + body : body;
    else
      s += neg ? " - " + body : " + " + body;
    first = false;
  }
  return s;
}

std::string Valuation::str() const {
  if (infinite) return truncation_limited ? ">=" + std::to_string(value) + " (truncation-limited)" : "inf";
  return std::to_string(value);
}

Valuation valuation(const PolyExpr& p, int prec) {
  Valuation v;
  auto lo = p.truncate_x(prec).min_xdeg();
  if (lo) {
    v.value = *lo;
    return v;
  }
  v.infinite = true;
  v.truncation_limited = true;
  v.value = prec + 1;
  return v;
}

}  // namespace getzler
