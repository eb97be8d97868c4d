#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "generators.hpp"
#include "getzler/curvature.hpp"
#include "getzler/lambda_graded.hpp"
#include "getzler/poly.hpp"
#include "getzler/scalar.hpp"

using namespace getzler;

TEST_CASE("scalar arithmetic is exact and canonical") {
  Scalar a = Scalar::frac(2, -4);
  CHECK(a.str() == "-1/2");
  CHECK((Scalar::i() * Scalar::i()).str() == "-1");
  Scalar m2i = Scalar(-2) * Scalar::i();
  CHECK(m2i.str() == "-2*i");
  CHECK(m2i.pow(2).str() == "-4");
  CHECK(m2i.pow(-1).str() == "1/2*i");
  CHECK((Scalar::frac(1, 3) + Scalar::frac(1, 6)).str() == "1/2");
  CHECK((Scalar(1) + Scalar::i() * Scalar::frac(-3, 2)).str() == "1-3/2*i");
  for (auto s : {"0", "-1/3", "i", "-i", "-2*i", "1/2-3*i", "5+i"})
    CHECK(Scalar::parse(s).str() == s);
  CHECK_THROWS(Scalar(1) / Scalar(0));
}

TEST_CASE("curvature canonicalization examples") {
  auto c = canonicalize_curvature(2, 1, 3, 4, {}, 4);
  CHECK(c.sign == -1);
  CHECK(c.r.str() == "R[1,2,3,4]");
  CHECK(canonicalize_curvature(1, 1, 3, 4, {}, 4).sign == 0);
  c = canonicalize_curvature(3, 4, 1, 2, {}, 4);
  CHECK(c.sign == 1);
  CHECK(c.r.str() == "R[1,2,3,4]");
  c = canonicalize_curvature(4, 3, 2, 1, {2}, 4);
  CHECK(c.sign == 1);
  CHECK(c.r.str() == "R[1,2,3,4;2]");
  CHECK_THROWS(canonicalize_curvature(0, 1, 2, 3, {}, 4));
  CHECK_THROWS(canonicalize_curvature(1, 2, 3, 5, {}, 4));
  CHECK_THROWS(canonicalize_curvature(1, 2, 3, 4, {1, 2}, 4));
}

TEST_CASE("canonicalization is idempotent and sign-consistent") {
  int n = 4;
  for (int i = 1; i <= n; ++i)
    for (int j = 1; j <= n; ++j)
      for (int k = 1; k <= n; ++k)
        for (int l = 1; l <= n; ++l) {
          auto c = canonicalize_curvature(i, j, k, l, {}, n);
          if (c.sign == 0) {
            CHECK((i == j || k == l));
            continue;
          }
          auto again = canonicalize_curvature(c.r.i, c.r.j, c.r.k, c.r.l, {}, n);
          CHECK(again.sign == 1);
          CHECK(again.r == c.r);
          // sign agrees with the monoterm relations
          CHECK(PolyExpr::curvature(j, i, k, l, 0, n) == -PolyExpr::curvature(i, j, k, l, 0, n));
          CHECK(PolyExpr::curvature(k, l, i, j, 0, n) == PolyExpr::curvature(i, j, k, l, 0, n));
        }
}

TEST_CASE("random curvature tensors") {
  CHECK_THROWS(random_curvature(3, 1));
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    auto t2 = random_curvature(2, seed);
    CHECK(has_monoterm_symmetries(t2));
    // one independent component in 2d
    CHECK(t2.at(1, 2, 1, 2) == t2.at(2, 1, 2, 1));
    CHECK(t2.at(1, 2, 1, 2) == -t2.at(2, 1, 1, 2));
    for (int n : {4, 6}) {
      auto t = random_curvature(n, seed);
      CHECK(has_monoterm_symmetries(t));
      CHECK(satisfies_bianchi(t));
      CHECK((t.at(1, 2, 3, 4) + t.at(1, 3, 4, 2) + t.at(1, 4, 2, 3)).is_zero());
    }
  }
  auto t3 = random_curvature_any_dim(3, 7);
  CHECK(satisfies_bianchi(t3));
  // deterministic in the seed
  CHECK(random_curvature(4, 11).R == random_curvature(4, 11).R);
}

TEST_CASE("PolyExpr ring axioms on random triples") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    int n = 2 + int(rng() % 3);
    PolyExpr a = gen::poly(rng, n), b = gen::poly(rng, n), c = gen::poly(rng, n);
    REQUIRE((a + b) + c == a + (b + c));
    REQUIRE(a + b == b + a);
    REQUIRE((a * b) * c == a * (b * c));
    REQUIRE(a * b == b * a);
    REQUIRE(a * (b + c) == a * b + a * c);
    REQUIRE((a - a).is_zero());
    REQUIRE(a * PolyExpr(1) == a);
    for (const auto& t : (a * b).terms()) REQUIRE(!t.second.is_zero());
  }
}

TEST_CASE("truncated multiplication drops exactly the high-degree part") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    PolyExpr a = gen::poly(rng, 3, 5, 3), b = gen::poly(rng, 3, 5, 3);
    CHECK(PolyExpr::mul(a, b, 3) == (a * b).truncate_x(3));
  }
}

TEST_CASE("derivatives obey Leibniz") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    PolyExpr a = gen::poly(rng, 3), b = gen::poly(rng, 3);
    for (int k = 1; k <= 3; ++k) CHECK((a * b).dx(k) == a.dx(k) * b + a * b.dx(k));
  }
}

TEST_CASE("lambda_substitute examples") {
  auto g = lambda_substitute(PolyExpr(1), 0);
  REQUIRE(g.comps.size() == 1);
  CHECK(g.comps.at(0) == PolyExpr(1));
  auto x1x2 = PolyExpr::x(1) * PolyExpr::x(2);
  g = lambda_substitute(x1x2, -1);
  REQUIRE(g.comps.size() == 1);
  CHECK(g.comps.at(1) == x1x2);
  // delta term plus a quadratic curvature term
  PolyExpr q = Scalar::frac(-1, 3) * PolyExpr::curvature(1, 2, 2, 1, 0, 2) * PolyExpr::x(2) * PolyExpr::x(2);
  g = lambda_substitute(PolyExpr(1) + q, 0);
  CHECK(g.comps.size() == 2);
  CHECK(g.comps.at(0) == PolyExpr(1));
  CHECK(g.comps.at(2) == q);
}

TEST_CASE("lambda_substitute is multiplicative") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 300; ++trial) {
    PolyExpr a = gen::poly(rng, 3, 4, 3), b = gen::poly(rng, 3, 4, 3);
    int ea = int(rng() % 5) - 2, eb = int(rng() % 5) - 2;
    auto lhs = lambda_substitute(a * b, ea + eb);
    auto rhs = graded_product(lambda_substitute(a, ea), lambda_substitute(b, eb));
    CHECK(lhs == rhs);
    CHECK(join_lambda(split_lambda(a.scale_lambda(1))) == a.scale_lambda(1));
  }
}

TEST_CASE("valuation") {
  PolyExpr h = PolyExpr::x(1) * PolyExpr::x(2) + PolyExpr::x(1) * PolyExpr::x(1) * PolyExpr::x(3);
  CHECK(valuation(h, 3).value == 2);
  CHECK(!valuation(h, 3).infinite);
  auto z = valuation(PolyExpr(), 3);
  CHECK(z.infinite);
  CHECK(z.truncation_limited);
  CHECK(z.value == 4);
  // terms beyond the truncation order do not count
  CHECK(valuation(PolyExpr::x(1) * PolyExpr::x(1) * PolyExpr::x(1) * PolyExpr::x(1), 3).infinite);
}

TEST_CASE("instantiation substitutes R but leaves nabla R symbolic") {
  auto t = random_curvature(2, 3);
  PolyExpr p = PolyExpr::curvature(1, 2, 1, 2, 0, 2) * PolyExpr::x(1) + PolyExpr::curvature(1, 2, 1, 2, 1, 2);
  PolyExpr q = p.instantiate(t);
  CHECK(q == PolyExpr(t.at(1, 2, 1, 2)) * PolyExpr::x(1) + PolyExpr::curvature(1, 2, 1, 2, 1, 2));
}

TEST_CASE("canonical text") {
  PolyExpr p = PolyExpr(1) - Scalar::frac(1, 3) * PolyExpr::curvature(2, 1, 1, 2, 0, 2) * PolyExpr::x(2) * PolyExpr::x(2);
  CHECK(p.str() == "1 + 1/3*R[1,2,1,2]*x2^2");
  CHECK((PolyExpr(Scalar::i()) * PolyExpr::xi(1)).str() == "i*xi1");
  CHECK((PolyExpr(-Scalar::i() * Scalar(2)) * PolyExpr::xi(1)).str() == "-2*i*xi1");
}

TEST_CASE("bianchi normal form") {
  // independent components of R and nabla R: n^2(n^2-1)/12 and n^2(n^2-1)(n+2)/24
  for (int n = 1; n <= 6; ++n) {
    auto [fr, fd] = bianchi_free_counts(n);
    CHECK(fr == n * n * (n * n - 1) / 12);
    CHECK(fd == n * n * (n * n - 1) * (n + 2) / 24);
  }
  int n = 4;
  // first Bianchi
  PolyExpr b = PolyExpr::curvature(1, 2, 3, 4, 0, n) + PolyExpr::curvature(2, 3, 1, 4, 0, n) +
               PolyExpr::curvature(3, 1, 2, 4, 0, n);
  CHECK(!b.is_zero());
  CHECK(reduce_bianchi(b, n).is_zero());
  // second Bianchi
  PolyExpr s = PolyExpr::curvature(1, 2, 3, 4, 1, n) + PolyExpr::curvature(2, 1, 3, 4, 1, n);
  CHECK(reduce_bianchi(s, n).is_zero());
  PolyExpr s2 = PolyExpr::curvature(1, 2, 1, 3, 4, n) + PolyExpr::curvature(2, 4, 1, 3, 1, n) +
                PolyExpr::curvature(4, 1, 1, 3, 2, n);
  CHECK(!s2.is_zero());
  CHECK(reduce_bianchi(s2, n).is_zero());
  // idempotent, multiplicative, and invisible to tensors satisfying Bianchi
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    PolyExpr p = gen::poly(rng, n, 4, 2, true, false);
    PolyExpr q = gen::poly(rng, n, 4, 2, true, false);
    PolyExpr rp = reduce_bianchi(p, n);
    CHECK(reduce_bianchi(rp, n) == rp);
    CHECK(reduce_bianchi(p * q, n) == reduce_bianchi(rp * reduce_bianchi(q, n), n));
    auto T = random_curvature(n, 100 + trial);
    CHECK(rp.instantiate(T) == p.instantiate(T));
  }
}
