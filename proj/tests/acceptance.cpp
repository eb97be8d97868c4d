// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "generators.hpp"
#include "getzler/getzler.h"
#include "getzler/symbols.hpp"
#include "json.hpp"

using namespace getzler;
using cd = std::complex<double>;

namespace {

struct Result {
  bool ok = true;
  std::string detail;
};

FormOperator neg_laplacian(int n, int fn) {
  FormOperator r(n, fn);
  for (int i = 1; i <= n; ++i) r += scalar_term(n, fn, unit_multi(i) + unit_multi(i), PolyExpr(-1));
  return r;
}

CliffordElement<Scalar> random_clifford(std::mt19937_64& rng, int n) {
  CliffordElement<Scalar> a(n);
  for (auto& c : a.c)
    if (rng() % 2) c = gen::small_rational(rng, true);
  return a;
}

FormOperator random_laplace_type(std::mt19937_64& rng, int n, int fn) {
  FormOperator P = neg_laplacian(n, fn);
  auto mat = [&] {
    EndoMatrix<PolyExpr> m(fn);
    for (auto& e : m.m)
      if (rng() % 3 == 0) e = gen::poly(rng, n, 2, 2, false, true);
    return m;
  };
  for (int k = 1; k <= n; ++k) P.coef(unit_multi(k)) += mat();
  P.coef(Multi{}) += mat();
  P.prune();
  return P;
}

// (i / 2 pi) times the hairpin integral around the negative axis, t = e^s, Simpson
cd hairpin(int k, double r, cd z) {
  const double S = 120;
  const int N = 240000;
  const double h = 2 * S / N;
  auto f = [&](double s) { return std::exp((z + 1.0) * s) / std::pow(r + std::exp(s), k); };
  cd acc = f(-S) + f(S);
  for (int q = 1; q < N; ++q) acc += f(-S + q * h) * (q % 2 ? 4.0 : 2.0);
  const cd i(0, 1);
  return i / (2 * M_PI) * (std::exp(-i * M_PI * z) - std::exp(i * M_PI * z)) * (acc * h / 3.0);
}

Result c1_supertrace() {
  std::mt19937_64 rng(101);
  int count = 0;
  for (int n : {2, 4, 6}) {
    SpinorRep rep = build_spinor_rep(n);
    Scalar f = minus_two_i_power(n / 2);
    for (int s = 0; s < 100; ++s) {
      auto a = random_clifford(rng, n);
      Scalar lhs = supertrace(a, rep);
      Scalar rhs = f * berezin(symbol_map(a));
      if (!(lhs == rhs)) return {false, "n=" + std::to_string(n) + " sample " + std::to_string(s) + ": " + lhs.str() + " vs " + rhs.str()};
      ++count;
    }
  }
  return {true, std::to_string(count) + " samples, n = 2, 4, 6"};
}

Result c2_limit_lemma() {
  int count = 0;
  for (int n = 1; n <= 6; ++n)
    for (Subset I = 0; I < (Subset(1) << n); ++I) {
      auto g = getzler_conjugate(clifford_map(CliffordElement<Scalar>::basis(n, I, Scalar(1))));
      int k = subset_size(I);
      if (!g.empty() && g.min_degree() + k < 0) return {false, "negative degree for I=" + subset_label(I)};
      const auto* zero = g.at(-k);
      auto wedge = wedge_matrix(FormElement<Scalar>::basis(n, I, Scalar(1)));
      if (!zero || !(*zero == wedge)) return {false, "lambda^0 part differs for I=" + subset_label(I)};
      ++count;
    }
  return {true, std::to_string(count) + " subsets, n = 1..6"};
}

Result c3_jets() {
  for (int n : {2, 3, 4}) {
    std::string cfg = R"({"command": "jets", "K": 3, "n": )" + std::to_string(n) + "}";
    getzler_config* c = nullptr;
    if (getzler_config_parse(cfg.c_str(), &c) != GETZLER_OK) return {false, getzler_last_error()};
    getzler_report* r = nullptr;
    getzler_status s = getzler_run(c, &r);
    getzler_config_free(c);
    if (!r) return {false, getzler_last_error()};
    auto j = nlohmann::json::parse(getzler_report_json(r));
    getzler_report_free(r);
    for (const auto& reg : j["results"]["regressions"])
      if (reg["result"] == "fail") return {false, "n=" + std::to_string(n) + " " + reg["name"].get<std::string>()};
    if (s != GETZLER_OK) return {false, "n=" + std::to_string(n) + " report negative"};
  }
  return {true, "metric -1/3, inverse +1/3, cubic -1/6, vielbein -/+1/6 and -/+1/12, Christoffel 1/3, frame -1/2; n = 2, 3, 4"};
}

Result c4_hodge() {
  for (int n : {2, 3, 4}) {
    FormOperator L = limit_operator(build_named("hodge_laplacian", operator_jets(JetContext::symbolic(n))));
    if (!(L == neg_laplacian(n, n))) return {false, "n=" + std::to_string(n) + ": " + L.pretty()};
  }
  return {true, "-sum d_i^2 on forms, n = 2, 3, 4"};
}

Result c5_dirac() {
  std::ostringstream d;
  for (int n : {2, 4}) {
    auto J = operator_jets(JetContext::symbolic(n));
    for (const char* name : {"d", "dirac"}) {
      auto rep = rescalability(build_named(name, J));
      bool witness = false;
      for (const auto& w : rep.witnesses) witness = witness || (w.needed == 1 && w.theta && *w.theta == 0);
      if (rep.verdict != Verdict::NotRescalable || rep.theta_verdict != Verdict::NotRescalable || !witness)
        return {false, std::string(name) + " at n=" + std::to_string(n) + " not refused with a witness"};
    }
    auto rep = rescalability(build_named("dirac_squared", J));
    if (rep.verdict != Verdict::Rescalable || !rep.limit) return {false, "D^2 not rescalable at n=" + std::to_string(n)};
    if (!(rep.limit->reduced(n) == dirac_square_limit_expected(J->ctx).reduced(n)))
      return {false, "D^2 limit differs symbolically at n=" + std::to_string(n)};
    for (uint64_t seed = 1; seed <= 20; ++seed) {
      auto T = random_curvature(n, seed);
      if (!(rep.limit->instantiate(T) == dirac_square_limit_expected(JetContext::numeric(T))))
        return {false, "D^2 limit differs on tensor seed " + std::to_string(seed)};
    }
  }
  return {true, "d, D refused (needed 1, Theta 0); D^2 limit equals the harmonic oscillator, symbolic and 20 tensors, n = 2, 4"};
}

Result c6_symbols() {
  for (int n : {2, 3, 4}) {
    auto R = resolvent_symbol(symbol_of(neg_laplacian(n, 0)), 5);
    auto Pz = complex_power_symbol(R);
    const auto& c0 = Pz.component(0);
    if (c0.size() != 1 || c0[0].norm_power != 0 || c0[0].z_coef != 2 || !(c0[0].coeff(0, 0) == PolyExpr(1)))
      return {false, "leading term of (-Delta)^z"};
    for (int j = 1; j < 5; ++j)
      if (!Pz.component(j).empty()) return {false, "nonzero correction " + std::to_string(j)};
  }
  std::string vals;
  for (int n : {2, 4}) {
    auto R = resolvent_symbol(symbol_of(neg_laplacian(n, 0)), n + 1);
    DensityValue d = residue_density(power_symbol_at(R, -n / 2), TraceMode::Tr);
    DensityValue vol = sphere_volume(n);
    DensityValue want = vol.times(PolyExpr(Scalar(1) / Scalar(2).pow(n)));
    want.pi_half -= 2 * n;
    if (!(d == want)) return {false, "density " + d.exact() + " vs " + want.exact()};
    vals += (vals.empty() ? "" : ", ") + d.exact();
  }
  return {true, "corrections vanish through depth 4; densities " + vals};
}

Result c7_contour() {
  std::mt19937_64 rng(107);
  std::uniform_real_distribution<double> re(-0.7, -0.3), im(-1.5, 1.5), rr(0.5, 3.0);
  double orientation = 0, worst = 0;
  for (int s = 0; s < 5; ++s) {
    cd z(re(rng), im(rng));
    double r = rr(rng);
    for (int k = 1; k <= 3; ++k) {
      cd num = hairpin(k, r, z);
      cd expect = contour_coefficient_value(k, z) * std::pow(cd(r), z - double(k) + 1.0);
      if (orientation == 0) orientation = std::real(num / expect) > 0 ? 1 : -1;
      double rel = std::abs(orientation * num - expect) / std::abs(expect);
      worst = std::max(worst, rel);
      if (rel > 1e-8) return {false, "k=" + std::to_string(k) + " relative error " + std::to_string(rel)};
    }
  }
  PolyExpr V = PolyExpr::x(1) * PolyExpr::x(2) * Scalar(3) - PolyExpr::x(2) + PolyExpr(Scalar::frac(2, 7));
  FormOperator P = neg_laplacian(2, 0) + scalar_term(2, 0, Multi{}, V);
  DensityValue d = residue_density(log_symbol(resolvent_symbol(symbol_of(P), 3)), TraceMode::Tr);
  DensityValue want;
  want.coeff = V * Scalar::frac(1, 2);
  want.pi_half = -2;
  if (!(d == want)) return {false, "Schroedinger density " + d.exact()};
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1e", worst);
  return {true, std::string("worst relative error ") + buf + "; log density +V(x)/(2 pi) exactly"};
}

Result c8_scaling() {
  std::mt19937_64 rng(108);
  int n = 2;
  for (int t = 0; t < 20; ++t) {
    FormOperator P = random_laplace_type(rng, n, n);
    PhgSymbol Q = power_symbol_at(resolvent_symbol(symbol_of(P), n + 1), -1);
    DensityValue r = residue_density(Q, TraceMode::Tr);
    DensityValue b = residue_density(Q, TraceMode::Berezin);
    if (!(residue_density(pullback_symbol(Q), TraceMode::Tr) == compose_contraction(r).times(PolyExpr::lambda(n))))
      return {false, "f_lambda law, sample " + std::to_string(t)};
    if (!(residue_density(getzler_symbol_conjugate(Q), TraceMode::Berezin) == b.times(PolyExpr::lambda(-n))))
      return {false, "U_lambda law, sample " + std::to_string(t)};
    if (!(residue_density(getzler_symbol_conjugate(pullback_symbol(Q)), TraceMode::Berezin) == compose_contraction(b)))
      return {false, "combined law, sample " + std::to_string(t)};
  }
  return {true, "3 identities on 20 random Laplace-type symbols, n = 2"};
}

Result c9_bridge() {
  std::mt19937_64 rng(109);
  for (int n : {2, 4}) {
    PolyExpr jg = metric_expansion(JetContext::numeric(random_curvature(n, 9))).j_g.p;
    for (int t = 0; t < 20; ++t) {
      PhgSymbol Q(n, n, -n);
      for (int d = 0; d <= 2; ++d) {
        CliffordElement<PolyExpr> a(n);
        for (size_t I = 0; I < a.c.size(); ++I) {
          if (subset_size(Subset(I)) % 2 || rng() % 2) continue;
          PolyExpr xi(1);
          for (int q = 0; q < d; ++q) xi = xi * PolyExpr::xi(int(rng() % n) + 1);
          a.c[I] = gen::poly(rng, n, 2, 1, false, true) * xi;
        }
        Q.add(0, {clifford_map(a), -n - d, 0});
      }
      DensityValue s = residue_density(Q, TraceMode::Str, Grading::Spinors);
      DensityValue b = residue_density(Q, TraceMode::Berezin, Grading::Forms, &jg);
      Scalar f = Scalar(1) / minus_two_i_power(n / 2);
      if (!(b == s.times(jg * f))) return {false, "n=" + std::to_string(n) + " sample " + std::to_string(t)};
    }
  }
  return {true, "berezin = j_g (-2i)^(-n/2) str on 20 samples each, n = 2, 4"};
}

Result c10_closure() {
  std::mt19937_64 rng(110);
  std::map<std::pair<int, uint64_t>, std::shared_ptr<const GeometricJets>> jets;
  int min_rel = INT_MAX;
  for (int t = 0; t < 20; ++t) {
    int n = t % 4 == 3 ? 4 : 2;
    uint64_t seed = 1 + rng() % 3;
    auto& J = jets[{n, seed}];
    if (!J) J = operator_jets(JetContext::numeric(random_curvature(n, seed)));
    int kind = int(rng() % 3);
    Bundle b = kind == 0 ? Bundle::Forms : kind == 1 ? Bundle::Spinors : Bundle::Scalar;
    const char* base = kind == 0 ? "hodge_laplacian" : kind == 1 ? "dirac_squared" : "scalar_laplacian";
    GeomPoly scal = scalar_curvature_jet(*J);
    auto gen_op = [&] {
      Scalar c = gen::small_rational(rng);
      return build_named(base, J) + scalar_multiplication(b, J, scal * c, 2);
    };
    GeomDiffOp P = gen_op(), Q = gen_op();
    auto rep = rescalability(compose(P, Q));
    if (rep.verdict != Verdict::Rescalable) return {false, "pair " + std::to_string(t) + " not rescalable"};
    if (!rep.limit) return {false, "pair " + std::to_string(t) + ": " + rep.note};
    min_rel = std::min(min_rel, rep.reliable_through);
    FormOperator LP = limit_operator(P), LQ = limit_operator(Q);
    if (!(rep.limit->reduced(n) == compose(LP, LQ).reduced(n)))
      return {false, "pair " + std::to_string(t) + " (" + base + ", n=" + std::to_string(n) + "): limits do not compose"};
  }
  return {true, "20 pairs from {Hodge, D^2, scalar Laplace-type} + c Scal, n = 2 and 4, K = 3, reliable through >= " +
                    std::to_string(min_rel)};
}

Result c11_localization() {
  std::string detail;
  // flat cases
  for (int n : {2, 4}) {
    FormOperator L = neg_laplacian(n, n);
    for (auto v : {LocalizationVariant::Forms, LocalizationVariant::Spinors}) {
      auto rep = localization_check(L, v, &L);
      if (!rep.asserted || !rep.agree || rep.ledger.size() < 7) return {false, "flat " + to_string(v)};
    }
  }
  // curved harmonic oscillators with positive-weight perturbations
  for (int n : {2, 4}) {
    FormOperator L = dirac_square_limit_expected(JetContext::numeric(random_curvature(n, 3)));
    FormElement<PolyExpr> F(n);
    F.c[3] = PolyExpr(Scalar(2));
    L += wedge_term(n, Multi{}, F);
    FormOperator P = L + wedge_term(n, unit_multi(1), FormElement<PolyExpr>::basis(n, 2, PolyExpr::x(1) * PolyExpr::x(2))) +
                     scalar_term(n, n, Multi{}, PolyExpr::x(2) * Scalar(5));
    for (auto v : {LocalizationVariant::Forms, LocalizationVariant::Spinors}) {
      auto rep = localization_check(P, v, &L);
      if (!rep.agree) return {false, "curved " + to_string(v) + " n=" + std::to_string(n)};
      if (v == LocalizationVariant::Spinors) detail += " n=" + std::to_string(n) + ": " + rep.left.exact() + ";";
    }
  }
  // scalar tension case: reported, not asserted
  PolyExpr V = PolyExpr(Scalar::frac(1, 3)) + PolyExpr::x(1);
  auto rep = localization_check(neg_laplacian(2, 0) + scalar_term(2, 0, Multi{}, V), LocalizationVariant::Scalar);
  if (rep.asserted || rep.ledger.size() < 8) return {false, "scalar ledger incomplete"};
  detail += " scalar n=2 reported: left " + rep.left.exact() + ", right " + rep.right.exact() + " (" +
            (rep.agree ? "agree" : "differ") + ")";
  return {true, "flat cases agree;" + detail};
}

}  // namespace

int main() {
  using clock = std::chrono::steady_clock;
  struct Crit {
    int id;
    const char* name;
    std::function<Result()> f;
    double budget;  // seconds
  };
  const Crit crits[] = {
      {1, "supertrace identity", c1_supertrace, 10},
      {2, "Getzler limit lemma", c2_limit_lemma, 5},
      {3, "jet regressions", c3_jets, 30},
      {4, "Hodge limit", c4_hodge, 300},
      {5, "Dirac analysis", c5_dirac, 120},
      {6, "symbol pipeline", c6_symbols, 300},
      {7, "contour oracle", c7_contour, 300},
      {8, "scaling laws", c8_scaling, 300},
      {9, "Berezin bridge", c9_bridge, 300},
      {10, "subalgebra closure", c10_closure, 300},
      {11, "localization reports", c11_localization, 300},
  };
  auto t_all = clock::now();
  int failed = 0;
  for (const auto& c : crits) {
    auto t0 = clock::now();
    Result r;
    try {
      r = c.f();
    } catch (const std::exception& e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    double s = std::chrono::duration<double>(clock::now() - t0).count();
    if (r.ok && s > c.budget) r = {false, r.detail + "; over the " + std::to_string(int(c.budget)) + " s budget"};
    failed += !r.ok;
    std::printf("criterion %2d %-22s %s (%.2f s) %s\n", c.id, c.name, r.ok ? "PASS" : "FAIL", s, r.detail.c_str());
    std::fflush(stdout);
  }
  double total = std::chrono::duration<double>(clock::now() - t_all).count();
  bool in_time = total < 300;
  std::printf("total %.1f s (%s)\n", total, in_time ? "within 5 min" : "over 5 min");
  return failed || !in_time ? 1 : 0;
}
