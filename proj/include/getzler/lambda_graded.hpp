#pragma once

#include <map>
#include <utility>

#include "getzler/poly.hpp"

namespace getzler {

// Finitely supported map lambda-degree -> coefficient. T needs +=, *, is_zero().
template <class T>
struct LambdaGraded {
  std::map<int, T> comps;

  void add(int deg, const T& v) {
    auto it = comps.find(deg);
    if (it == comps.end()) {
      if (!is_zero_value(v)) comps.emplace(deg, v);
      return;
    }
    it->second += v;
    if (is_zero_value(it->second)) comps.erase(it);
  }

  const T* at(int deg) const {
    auto it = comps.find(deg);
    return it == comps.end() ? nullptr : &it->second;
  }
  bool empty() const { return comps.empty(); }
  int min_degree() const { return comps.begin()->first; }
  int max_degree() const { return comps.rbegin()->first; }
  bool has_negative() const { return !comps.empty() && comps.begin()->first < 0; }

  LambdaGraded& operator+=(const LambdaGraded& o) {
    for (const auto& [d, v] : o.comps) add(d, v);
    return *this;
  }
  friend bool operator==(const LambdaGraded& a, const LambdaGraded& b) { return a.comps == b.comps; }

  template <class Mul>
  static LambdaGraded convolve(const LambdaGraded& a, const LambdaGraded& b, Mul mul) {
    LambdaGraded r;
    for (const auto& [da, va] : a.comps)
      for (const auto& [db, vb] : b.comps) r.add(da + db, mul(va, vb));
    return r;
  }

 private:
  template <class U>
  static bool is_zero_value(const U& v) {
    return v.is_zero();
  }
};

// x -> lambda x: monomial of coordinate degree d lands in degree d + extra_weight.
// Any lambda already present in p adds to the degree.
LambdaGraded<PolyExpr> lambda_substitute(const PolyExpr& p, int extra_weight, int coordinate_weight = 1);

// Moves the formal lambda variable of p into the grading.
LambdaGraded<PolyExpr> split_lambda(const PolyExpr& p);
PolyExpr join_lambda(const LambdaGraded<PolyExpr>& g);

LambdaGraded<PolyExpr> graded_product(const LambdaGraded<PolyExpr>& a, const LambdaGraded<PolyExpr>& b);

}  // namespace getzler
