#include <map>
#include <memory>
#include <mutex>
#include <set>

#include "getzler/poly.hpp"

namespace getzler {

namespace {

using Row = std::map<uint16_t, Scalar>;

// Row reduction over canonical curvature codes. Each pivot (the largest code
// of its relation) is rewritten in terms of smaller, free codes.
class Reducer {
 public:
  explicit Reducer(int n) : n_(n) {
    for (int m = 0; m <= n; ++m) {
      for (int i = 1; i <= n; ++i)
        for (int j = 1; j <= n; ++j)
          for (int k = 1; k <= n; ++k)
            for (int l = 1; l <= n; ++l) {
              insert(row({{i, j, k, l, m}, {j, k, i, l, m}, {k, i, j, l, m}}));
              if (m) insert(row({{i, j, k, l, m}, {j, m, k, l, i}, {m, i, k, l, j}}));
            }
    }
    for (int m = 0; m <= n; ++m)
      for (int i = 1; i <= n; ++i)
        for (int j = 1; j <= n; ++j)
          for (int k = 1; k <= n; ++k)
            for (int l = 1; l <= n; ++l) {
              auto c = canonicalize_curvature(i, j, k, l, m ? std::vector<int>{m} : std::vector<int>{}, n);
              if (!c.sign || pivots_.count(c.r.code())) continue;
              (m ? free_d_ : free_r_).insert(c.r.code());
            }
    for (const auto& [p, img] : pivots_) {
      PolyExpr e;
      for (const auto& [code, coef] : img) e += single(code) * coef;
      images_.emplace(p, std::move(e));
    }
  }

  const PolyExpr* image(uint16_t code) const {
    auto it = images_.find(code);
    return it == images_.end() ? nullptr : &it->second;
  }
  int free_r() const { return int(free_r_.size()); }
  int free_d() const { return int(free_d_.size()); }

 private:
  int n_;
  std::map<uint16_t, Row> pivots_;  // pivot -> combination of free codes
  std::set<uint16_t> free_r_, free_d_;
  std::map<uint16_t, PolyExpr> images_;

  static PolyExpr single(uint16_t code) {
    Monomial mon;
    mon.nc = 1;
    mon.c[0] = code;
    return PolyExpr::monomial(mon, 1);
  }

  Row row(std::initializer_list<std::array<int, 5>> entries) const {
    Row r;
    for (const auto& e : entries) {
      auto c = canonicalize_curvature(e[0], e[1], e[2], e[3], e[4] ? std::vector<int>{e[4]} : std::vector<int>{}, n_);
      if (!c.sign) continue;
      auto& v = r[c.r.code()];
      v += Scalar(c.sign);
      if (v.is_zero()) r.erase(c.r.code());
    }
    return r;
  }

  void substitute(Row& r) const {
    Row out;
    for (const auto& [code, coef] : r) {
      auto it = pivots_.find(code);
      if (it == pivots_.end()) {
        out[code] += coef;
      } else {
        for (const auto& [c2, v2] : it->second) out[c2] += coef * v2;
      }
    }
    for (auto it = out.begin(); it != out.end();)
      it = it->second.is_zero() ? out.erase(it) : std::next(it);
    r = std::move(out);
  }

  void insert(Row r) {
    substitute(r);
    if (r.empty()) return;
    auto last = std::prev(r.end());
    uint16_t p = last->first;
    Scalar inv = Scalar(-1) / last->second;
    r.erase(last);
    for (auto& [c, v] : r) v *= inv;
    // keep existing images free of the new pivot
    for (auto& [q, img] : pivots_) {
      auto it = img.find(p);
      if (it == img.end()) continue;
      Scalar f = it->second;
      img.erase(it);
      for (const auto& [c, v] : r) {
        auto& t = img[c];
        t += f * v;
        if (t.is_zero()) img.erase(c);
      }
    }
    pivots_.emplace(p, std::move(r));
  }
};

const Reducer& reducer(int n) {
  static std::mutex mu;
  static std::array<std::unique_ptr<Reducer>, kMaxDim + 1> cache;
  if (n < 1 || n > kMaxDim) throw std::out_of_range("dimension out of range");
  std::lock_guard<std::mutex> lock(mu);
  if (!cache[n]) cache[n] = std::make_unique<Reducer>(n);
  return *cache[n];
}

}  // namespace

PolyExpr reduce_bianchi(const PolyExpr& p, int n) {
  const Reducer& red = reducer(n);
  std::vector<PolyExpr::Term> kept;
  PolyExpr expanded;
  for (const auto& [m, c] : p.terms()) {
    bool hit = false;
    for (int a = 0; a < m.nc && !hit; ++a) hit = red.image(m.c[a]) != nullptr;
    if (!hit) {
      kept.emplace_back(m, c);
      continue;
    }
    Monomial rest = m;
    rest.nc = 0;
    rest.c = {};
    PolyExpr prod = PolyExpr::monomial(rest, c);
    for (int a = 0; a < m.nc; ++a) {
      if (const PolyExpr* img = red.image(m.c[a])) {
        prod = prod * *img;
      } else {
        Monomial f;
        f.nc = 1;
        f.c[0] = m.c[a];
        prod = prod * PolyExpr::monomial(f, 1);
      }
    }
    expanded += prod;
  }
  return PolyExpr::from_terms(std::move(kept)) + expanded;
}

std::pair<int, int> bianchi_free_counts(int n) {
  const Reducer& red = reducer(n);
  return {red.free_r(), red.free_d()};
}

}  // namespace getzler
