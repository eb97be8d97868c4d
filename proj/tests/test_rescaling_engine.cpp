#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <chrono>
#include <cstdio>
#include <random>

#include "generators.hpp"
#include "getzler/operators.hpp"

using namespace getzler;

namespace {

std::shared_ptr<const GeometricJets> sym(int n, int K = 3) { return operator_jets(JetContext::symbolic(n, K)); }
std::shared_ptr<const GeometricJets> flat(int n) { return operator_jets(JetContext::flat(n)); }

FormOperator neg_flat_laplacian(int n, int fiber_n) {
  FormOperator r(n, fiber_n);
  for (int i = 1; i <= n; ++i) r += scalar_term(n, fiber_n, unit_multi(i) + unit_multi(i), PolyExpr(-1));
  return r;
}

bool has_witness_with_negative_degree(const RescaleReport& r) {
  for (const auto& w : r.witnesses)
    if (w.lambda_degree && *w.lambda_degree < 0) return true;
  return false;
}

}  // namespace

TEST_CASE("multi-index helpers") {
  Multi g = unit_multi(1) + unit_multi(1) + unit_multi(3);
  CHECK(multi_order(g) == 3);
  CHECK(multi_str(g) == "d_1^2 d_3");
  CHECK(multi_str(Multi{}) == "1");
  CHECK(fiber_size(Bundle::Forms, 3) == 64);
  CHECK(fiber_size(Bundle::Spinors, 4) == 16);
  CHECK(bundle_from_string("spinors") == Bundle::Spinors);
  CHECK_THROWS(bundle_from_string("vectors"));
}

TEST_CASE("composition follows the Leibniz rule") {
  auto J = sym(2);
  // d_1 o (x^1 f) with f = g_11: coefficient check on the scalar bundle
  GeomPoly f = J->g(1, 1);
  GeomDiffOp M = scalar_multiplication(Bundle::Scalar, J, f, 0);
  GeomDiffOp D = partial_operator(Bundle::Scalar, J, unit_multi(1));
  GeomDiffOp DM = compose(D, M);
  CHECK(DM.order == 1);
  CHECK(DM.find(unit_multi(1))->at(0).jet.agrees_with(f.jet));
  CHECK(DM.find(Multi{})->at(0).jet.p == f.dx(1).jet.p);
  // d_1^2 o f = f d_1^2 + 2 f_1 d_1 + f_11
  GeomDiffOp D2 = partial_operator(Bundle::Scalar, J, unit_multi(1) + unit_multi(1));
  GeomDiffOp C = compose(D2, M);
  CHECK(C.find(unit_multi(1))->at(0).jet.p == (f.dx(1) * Scalar(2)).jet.p);
  CHECK(C.find(Multi{})->at(0).jet.p == f.dx(1).dx(1).jet.p);
}

TEST_CASE("gilkey order is additive under composition on random pairs") {
  std::mt19937_64 rng(11);
  auto J = sym(3);
  std::vector<GeomDiffOp> pool;
  for (int i = 1; i <= 3; ++i) {
    pool.push_back(build_covariant_derivative(Bundle::Forms, J, i));
    pool.push_back(wedge_dx(J, i));
    pool.push_back(contraction_dx(J, i));
  }
  pool.push_back(build_named("d", J));
  pool.push_back(build_named("delta", J));
  for (int t = 0; t < 100; ++t) {
    const auto& A = pool[rng() % pool.size()];
    const auto& B = pool[rng() % pool.size()];
    GeomDiffOp C = compose(A, B);
    CHECK(C.order == A.order + B.order);
    auto chk = check_geometric(C);
    CHECK_MESSAGE(chk.ok, chk.detail);
  }
}

TEST_CASE("non-geometric coefficients are rejected") {
  auto J = sym(2);
  GeomPoly bad = GeomPoly::untracked(Jet::exact(PolyExpr::x(1)));
  GeomDiffOp P = scalar_multiplication(Bundle::Scalar, J, bad, 1);
  P += partial_operator(Bundle::Scalar, J, unit_multi(1));
  CHECK_FALSE(check_geometric(P).ok);
  CHECK_THROWS_AS(rescalability(P), std::invalid_argument);
  // wrong declared order
  GeomDiffOp Q = partial_operator(Bundle::Scalar, J, unit_multi(1));
  Q.order = 2;
  CHECK_FALSE(check_geometric(Q).ok);
}

TEST_CASE("builders produce geometric operators") {
  for (int n : {2, 3, 4}) {
    auto J = sym(n);
    for (int i = 1; i <= n; ++i) {
      CHECK(check_geometric(build_covariant_derivative(Bundle::Forms, J, i)).ok);
      CHECK(check_geometric(build_covariant_derivative(Bundle::Scalar, J, i)).ok);
    }
    for (const char* name : {"d", "delta", "hodge_laplacian", "connection_laplacian_forms", "scalar_laplacian"}) {
      auto chk = check_geometric(build_named(name, J));
      CHECK_MESSAGE(chk.ok, name << " n=" << n << ": " << chk.detail);
    }
  }
  for (int n : {2, 4}) {
    auto J = sym(n);
    for (const char* name : {"dirac", "dirac_squared", "connection_laplacian_spinors"}) {
      auto chk = check_geometric(build_named(name, J));
      CHECK_MESSAGE(chk.ok, name << " n=" << n << ": " << chk.detail);
    }
  }
  CHECK_THROWS(build_named("dirac", sym(3)));
  CHECK_THROWS(build_named("curl", sym(2)));
}

TEST_CASE("flat covariant derivatives are coordinate derivatives") {
  for (int n : {2, 3}) {
    auto J = flat(n);
    for (Bundle b : {Bundle::Scalar, Bundle::Forms}) {
      for (int i = 1; i <= n; ++i) {
        GeomDiffOp N = build_covariant_derivative(b, J, i);
        CHECK(agree_mod_truncation(N, partial_operator(b, J, unit_multi(i))));
      }
    }
  }
  auto J = flat(2);
  CHECK(agree_mod_truncation(build_covariant_derivative(Bundle::Spinors, J, 1),
                             partial_operator(Bundle::Spinors, J, unit_multi(1))));
  // flat Hodge Laplacian is -sum d_i^2 on every degree
  GeomDiffOp H = build_named("hodge_laplacian", flat(3));
  GeomDiffOp E = zero_operator(Bundle::Forms, flat(3), 2);
  for (int i = 1; i <= 3; ++i) E -= partial_operator(Bundle::Forms, flat(3), unit_multi(i) + unit_multi(i));
  std::string why;
  CHECK_MESSAGE(agree_mod_truncation(H, E, &why), why);
}

TEST_CASE("curved connection on forms has the Christoffel zero-order part") {
  auto J = sym(2);
  GeomDiffOp N = build_covariant_derivative(Bundle::Forms, J, 1);
  // nabla_1 dx^2 = -Gamma^2_{1j} dx^j; entry (row {j}, col {2})
  const auto* z = N.find(Multi{});
  REQUIRE(z);
  size_t d = 4;
  CHECK(z->at(single(1) * d + single(2)).jet.p == (-J->Gamma(2, 1, 1)).jet.p);
  CHECK(z->at(single(2) * d + single(2)).jet.p == (-J->Gamma(2, 1, 2)).jet.p);
  // acts on functions and top forms through the trace only
  CHECK(z->at(0).is_zero());
}

TEST_CASE("two constructions of the Dirac operator agree") {
  for (int n : {2, 4}) {
    auto J = sym(n);
    std::string why;
    CHECK_MESSAGE(agree_mod_truncation(dirac_direct(J), dirac_via_connection(J), &why), why);
  }
}

TEST_CASE("Hodge Laplacian splits as connection Laplacian plus curvature term") {
  for (int n : {2, 3}) {
    auto J = sym(n);
    GeomDiffOp H = build_named("hodge_laplacian", J);
    GeomDiffOp B = connection_laplacian(Bundle::Forms, J) + bochner_term(J);
    std::string why;
    CHECK_MESSAGE(agree_mod_truncation(H, B, &why), "n=" << n << " " << why);
  }
  // on 1-forms the curvature term is Ricci at p
  auto J = sym(3);
  GeomDiffOp W = bochner_term(J);
  const auto* z = W.find(Multi{});
  REQUIRE(z);
  size_t d = 8;
  for (int k = 1; k <= 3; ++k)
    for (int l = 1; l <= 3; ++l)
      CHECK(z->at(single(k) * d + single(l)).jet.p.at_origin() == ricci_at_p(J->ctx, k, l));
}

TEST_CASE("Dirac square agrees with the Lichnerowicz formula") {
  for (int n : {2, 4}) {
    auto t0 = std::chrono::steady_clock::now();
    auto J = sym(n);
    GeomDiffOp D = dirac_direct(J);
    GeomDiffOp D2 = compose(D, D);
    GeomDiffOp L = build_named("dirac_squared", J);
    std::string why;
    CHECK_MESSAGE(agree_mod_truncation(D2, L, &why), "n=" << n << " " << why);
    double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    MESSAGE("n=" << n << " D^2 two ways: " << s << " s");
  }
}

TEST_CASE("scalar curvature jet starts with the curvature at p") {
  for (int n : {2, 3, 4}) {
    auto J = sym(n);
    GeomPoly s = scalar_curvature_jet(*J);
    CHECK(s.gilkey == 2);
    CHECK(s.jet.p.at_origin() == scalar_curvature_at_p(J->ctx));
  }
}

TEST_CASE("first-order operators are not rescalable") {
  for (int n : {2, 3}) {
    auto rep = rescalability(build_named("d", sym(n)));
    CHECK(rep.verdict == Verdict::NotRescalable);
    CHECK(rep.theta_verdict == Verdict::NotRescalable);
    CHECK_FALSE(rep.decomposition_flag);
    CHECK(has_witness_with_negative_degree(rep));
    // d maps I to I + {j}: degree -1 from the leading symbol
    bool found = false;
    for (const auto& w : rep.witnesses)
      if (multi_order(w.gamma) == 1 && w.lambda_degree == -1) found = true;
    CHECK(found);
    CHECK_THROWS_AS(limit_operator(build_named("d", sym(n))), std::domain_error);
  }
  for (int n : {2, 4}) {
    auto rep = rescalability(build_named("dirac", sym(n)));
    CHECK(rep.verdict == Verdict::NotRescalable);
    CHECK(rep.theta_verdict == Verdict::NotRescalable);
    REQUIRE_FALSE(rep.witnesses.empty());
    // e^i d_i: word of size 1 with Theta 0
    bool found = false;
    for (const auto& w : rep.witnesses)
      if (multi_order(w.gamma) == 1 && subset_size(w.I) == 1 && w.theta == 0) found = true;
    CHECK(found);
  }
}

TEST_CASE("delta lowers degree and rescales to zero") {
  for (int n : {2, 3}) {
    auto rep = rescalability(build_named("delta", sym(n)));
    CHECK(rep.verdict == Verdict::Rescalable);
    CHECK(rep.theta_verdict == Verdict::Rescalable);
    REQUIRE(rep.limit);
    CHECK(rep.limit->is_zero());
  }
}

TEST_CASE("Hodge Laplacian rescales to the flat Laplacian") {
  for (int n : {2, 3, 4}) {
    auto J = sym(n);
    GeomDiffOp H = build_named("hodge_laplacian", J);
    auto rep = rescalability(H);
    CHECK(rep.verdict == Verdict::Rescalable);
    CHECK(rep.theta_verdict == Verdict::Rescalable);
    CHECK_FALSE(rep.decomposition_flag);
    REQUIRE(rep.limit);
    CHECK(*rep.limit == neg_flat_laplacian(n, n));
  }
}

TEST_CASE("Dirac square rescales to the harmonic-oscillator limit") {
  for (int n : {2, 4}) {
    auto t0 = std::chrono::steady_clock::now();
    auto J = sym(n);
    GeomDiffOp D2 = build_named("dirac_squared", J);
    auto rep = rescalability(D2);
    CHECK(rep.verdict == Verdict::Rescalable);
    CHECK(rep.theta_verdict == Verdict::Rescalable);
    REQUIRE(rep.limit);
    FormOperator L = *rep.limit;
    FormOperator expected = dirac_square_limit_expected(J->ctx);
    CHECK(L.reduced(n) == expected.reduced(n));
    CHECK(L.wedge_coefficients().has_value());
    // instantiate on random algebraic curvature tensors
    for (uint64_t seed = 1; seed <= 20; ++seed) {
      auto T = random_curvature(n, seed);
      FormOperator num = dirac_square_limit_expected(JetContext::numeric(T));
      CHECK(L.instantiate(T) == num);
    }
    // D o D gives the same verdict; at n = 4 its top Clifford words need one
    // more jet order than K = 3 provides, so the limit is only checked at n = 2
    GeomDiffOp D = dirac_direct(J);
    auto rep2 = rescalability(compose(D, D));
    CHECK(rep2.verdict == Verdict::Rescalable);
    if (n == 2) {
      REQUIRE(rep2.limit);
      CHECK(rep2.limit->reduced(n) == L.reduced(n));
    } else {
      CHECK(rep2.reliable_through == -1);
      CHECK_FALSE(rep2.limit.has_value());
    }
    double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    MESSAGE("n=" << n << " limit: " << s << " s");
  }
}

TEST_CASE("term-by-term limits of the Lichnerowicz summands") {
  for (int n : {2, 4}) {
    auto J = sym(n);
    auto L = limit_operator(dirac_squared_lichnerowicz(J));
    auto E = expand_limit_square(L, J);
    CHECK(E.term_matches[0]);
    CHECK(E.term_matches[1]);
    CHECK(E.displayed[1].is_zero());  // R_{iist} = 0
    CHECK(E.term_matches[2]);
    CHECK(E.inner_III_matches);
    CHECK(E.term_matches[3]);
    CHECK(E.rest_vanishes);
    CHECK(E.displayed_sum_matches);
    CHECK(E.limit_matches);
  }
}

TEST_CASE("lambda-degrees of the rescaled family") {
  // every component of a rescalable operator sits in degrees >= 0
  auto J = sym(2);
  GradedOperator G = getzler_rescale(build_named("dirac_squared", J));
  CHECK_FALSE(G.has_negative());
  CHECK(G.reliable_through >= 0);
  CHECK(G.at(0) != nullptr);
  // the leading symbol of d sits at degree -1 with the dx^j raising the form degree
  GradedOperator Gd = getzler_rescale(build_named("d", J));
  REQUIRE(Gd.has_negative());
  CHECK(Gd.comps.begin()->first == -1);
}

TEST_CASE("frozen rescaling of a Schroedinger operator") {
  for (int n : {1, 2, 3}) {
    auto J = sym(n);
    GeomDiffOp P = connection_laplacian(Bundle::Scalar, J);
    // V x^1 + 3 with no geometric origin
    PolyExpr v = PolyExpr(3) + PolyExpr::x(1) * Scalar(5);
    P += multiplication(Bundle::Scalar, J, {GeomPoly::untracked(Jet::exact(v))}, 2);
    CHECK_FALSE(check_geometric(P).ok);
    FormOperator F = frozen_limit(P);
    CHECK(F == neg_flat_laplacian(n, 0));
  }
}

TEST_CASE("limits of compositions stay in the rescalable class") {
  // products of rescalable operators are rescalable and the limit is the product of limits
  std::mt19937_64 rng(5);
  auto J = sym(2);
  std::vector<GeomDiffOp> pool = {build_named("hodge_laplacian", J), build_named("delta", J),
                                  connection_laplacian(Bundle::Forms, J)};
  for (int i = 1; i <= 2; ++i) pool.push_back(contraction_dx(J, i));
  for (int t = 0; t < 8; ++t) {
    const auto& A = pool[rng() % pool.size()];
    const auto& B = pool[rng() % pool.size()];
    if (A.order + B.order > 3) continue;
    auto ra = rescalability(A), rb = rescalability(B);
    REQUIRE(ra.limit);
    REQUIRE(rb.limit);
    auto rc = rescalability(compose(A, B));
    CHECK(rc.verdict == Verdict::Rescalable);
    REQUIRE(rc.limit);
    CHECK(rc.limit->reduced(2) == compose(*ra.limit, *rb.limit).reduced(2));
  }
}

TEST_CASE("the two verdicts agree on the builders") {
  for (int n : {2, 3}) {
    auto J = sym(n);
    for (const char* name : {"d", "delta", "hodge_laplacian", "connection_laplacian_forms"}) {
      auto rep = rescalability(build_named(name, J));
      CHECK_MESSAGE(!rep.decomposition_flag, name);
      std::printf("n=%d %-28s lambda=%s theta=%s\n", n, name, to_string(rep.verdict).c_str(),
                  to_string(rep.theta_verdict).c_str());
    }
  }
  auto J = sym(2);
  for (const char* name : {"dirac", "dirac_squared", "connection_laplacian_spinors"}) {
    auto rep = rescalability(build_named(name, J));
    CHECK_MESSAGE(!rep.decomposition_flag, name);
    std::printf("n=2 %-28s lambda=%s theta=%s\n", name, to_string(rep.verdict).c_str(),
                to_string(rep.theta_verdict).c_str());
  }
}

TEST_CASE("pretty printing") {
  CHECK(neg_flat_laplacian(2, 0).pretty() == "-d_1^2 - d_2^2");
  auto L = dirac_square_limit_expected(JetContext::symbolic(2));
  std::string s = L.pretty();
  CHECK(s.find("-d_1^2") == 0);
  CHECK(s.find("e1^e2") != std::string::npos);
}

TEST_CASE("leading structure of the named operators") {
  auto J = sym(3);
  size_t d = 8;
  // d on functions: column {} of the d_j coefficient is dx^j with coefficient 1
  GeomDiffOp dd = build_named("d", J);
  for (int j = 1; j <= 3; ++j) {
    const auto* c = dd.find(unit_multi(j));
    REQUIRE(c);
    CHECK(c->at(single(j) * d + 0).jet.p == PolyExpr(1));
  }
  // Hodge Laplacian: -g^{ij} on the diagonal of the second-order part
  GeomDiffOp H = build_named("hodge_laplacian", J);
  for (int i = 1; i <= 3; ++i)
    for (int j = i; j <= 3; ++j) {
      const auto* c = H.find(unit_multi(i) + unit_multi(j));
      REQUIRE(c);
      GeomPoly want = i == j ? -J->ginv(i, i) : -(J->ginv(i, j) * Scalar(2));
      for (Subset I : {Subset(0), single(2), single(1) | single(3)})
        CHECK(c->at(I * d + I).jet.agrees_with(want.jet));
    }
  // nabla on functions is d_i: the zero-order part has an empty degree-0 column
  for (int i = 1; i <= 3; ++i) {
    GeomDiffOp N = build_covariant_derivative(Bundle::Forms, J, i);
    const auto* z = N.find(Multi{});
    REQUIRE(z);
    for (size_t r = 0; r < d; ++r) CHECK(z->at(r * d + 0).is_zero());
  }
  // Dirac: the d_j coefficient is sum_l b_l^j e^l
  auto J4 = sym(4);
  GeomDiffOp D = build_named("dirac", J4);
  for (int j = 1; j <= 4; ++j)
    for (int l = 1; l <= 4; ++l) CHECK(D.find(unit_multi(j))->at(single(l)).jet.p == J4->b(l, j).jet.p);
  // spinor connection: 1/4 Gamma~ e^s e^t, so the e^1 e^2 word carries 1/2 Gamma~(d_1; e_1, e_2)
  auto J2 = sym(2);
  GeomDiffOp S = build_covariant_derivative(Bundle::Spinors, J2, 1);
  const auto* z = S.find(Multi{});
  REQUIRE(z);
  GeomPoly w;
  for (int l = 1; l <= 2; ++l) w += J2->a(1, l) * J2->Tilde(l, 1, 2);
  CHECK(z->at(single(1) | single(2)).jet.agrees_with((w * Scalar::frac(1, 2)).jet));
}

TEST_CASE("rescaling a coordinate derivative and the curvature term") {
  auto J = sym(2);
  GradedOperator G = getzler_rescale(partial_operator(Bundle::Scalar, J, unit_multi(1)));
  REQUIRE(G.comps.size() == 1);
  REQUIRE(G.at(0));
  CHECK(*G.at(0) == scalar_term(2, 0, unit_multi(1), PolyExpr(1)));
  // W preserves form degree and has Gilkey order 2 coefficients, so its
  // rescaled family starts at lambda^2 and drops out of the limit
  for (int n : {2, 3}) {
    GradedOperator W = getzler_rescale(bochner_term(sym(n)));
    REQUIRE_FALSE(W.comps.empty());
    CHECK(W.comps.begin()->first == 2);
  }
}
