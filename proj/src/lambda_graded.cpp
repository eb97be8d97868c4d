#include "getzler/lambda_graded.hpp"

namespace getzler {

LambdaGraded<PolyExpr> split_lambda(const PolyExpr& p) {
  std::map<int, std::vector<PolyExpr::Term>> buckets;
  for (const auto& [m, c] : p.terms()) {
    Monomial mm = m;
    mm.lam = 0;
    buckets[m.lam].emplace_back(mm, c);
  }
  LambdaGraded<PolyExpr> g;
  for (auto& [d, ts] : buckets) g.add(d, PolyExpr::from_terms(std::move(ts)));
  return g;
}

PolyExpr join_lambda(const LambdaGraded<PolyExpr>& g) {
  PolyExpr out;
  for (const auto& [d, v] : g.comps) out += v.times_lambda(d);
  return out;
}

LambdaGraded<PolyExpr> lambda_substitute(const PolyExpr& p, int extra_weight, int coordinate_weight) {
  return split_lambda(p.scale_lambda(coordinate_weight).times_lambda(extra_weight));
}

LambdaGraded<PolyExpr> graded_product(const LambdaGraded<PolyExpr>& a, const LambdaGraded<PolyExpr>& b) {
  return LambdaGraded<PolyExpr>::convolve(a, b, [](const PolyExpr& x, const PolyExpr& y) { return x * y; });
}

}  // namespace getzler
