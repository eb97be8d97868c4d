#pragma once

#include <array>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "getzler/curvature.hpp"
#include "getzler/lambda_graded.hpp"
#include "getzler/poly.hpp"

namespace getzler {

enum class CurvatureMode { Symbolic, Numeric, Flat };

struct JetContext {
  int n = 2;
  int K = 3;
  CurvatureMode mode = CurvatureMode::Symbolic;
  std::optional<CurvatureTensor> tensor;  // Numeric mode
  // provenance monomials with Theta >= theta_cap are dropped; < 0 keeps all
  int theta_cap = -1;
  bool track_provenance = true;
  // symbolic curvature in Bianchi normal form; off leaves monoterm symmetries only
  bool bianchi = true;

  static JetContext symbolic(int n, int K = 3);
  static JetContext flat(int n, int K = 3);
  static JetContext numeric(const CurvatureTensor& t, int K = 3);
  void validate() const;

  PolyExpr R(int i, int j, int k, int l) const;
  PolyExpr dR(int i, int j, int k, int l, int m) const;
  bool exact_jets() const { return mode == CurvatureMode::Flat; }
};

constexpr int kExact = 1 << 20;

// Polynomial known exactly through coordinate degree prec (kExact: exact).
struct Jet {
  PolyExpr p;
  int prec = kExact;

  Jet() = default;
  Jet(PolyExpr poly, int precision);
  static Jet exact(PolyExpr poly) { return Jet(std::move(poly), kExact); }

  bool is_zero() const { return p.is_zero(); }
  bool is_exact() const { return prec >= kExact; }
  int low() const;  // lower bound for the valuation of the true function

  Jet& operator+=(const Jet& o);
  Jet& operator-=(const Jet& o);
  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator*(const Jet& a, const Jet& b);
  friend Jet operator*(Jet a, const Scalar& s) {
    a.p *= s;
    if (s.is_zero()) a.prec = kExact;
    return a;
  }
  Jet operator-() const { return Jet(-p, prec); }
  Jet dx(int k) const;
  // equality on the common range of validity
  bool agrees_with(const Jet& o) const;
  friend bool operator==(const Jet& a, const Jet& b) { return a.p == b.p && a.prec == b.prec; }
};

Valuation valuation(const Jet& j);

// ---- provenance: products of derivatives of nonconstant vielbein parts ----
//
// A factor is D^beta(a~_i^t) or D^beta(b~_l^i) where a = delta + a~, b = delta + b~.
// Codes pack kind, the two indices, the valuation of the underived part and beta.
struct VielbeinFactor {
  int kind = 0;  // 0: a, 1: b
  int i = 1, t = 1;
  int val = 2;   // valuation of the underived nonconstant part
  std::array<int, kMaxDim> beta{};
  uint64_t code() const;
  static VielbeinFactor from_code(uint64_t c);
  int order() const;
  int theta() const { return std::max(order(), val); }
  std::string str() const;  // "D1D1(a~[1,2])"
};

using FormalMonomial = std::vector<uint64_t>;  // sorted factor codes

int theta_of(const FormalMonomial& m);
int gilkey_of(const FormalMonomial& m);

class FormalPoly {
 public:
  std::map<FormalMonomial, Scalar> terms;
  int cap = -1;        // pruning threshold on Theta; < 0 keeps all
  bool pruned = false; // some monomial was dropped by the cap

  bool empty() const { return terms.empty(); }
  void add(const FormalMonomial& m, const Scalar& c);
  FormalPoly& operator+=(const FormalPoly& o);
  FormalPoly operator-() const;
  FormalPoly scaled(const Scalar& s) const;
  friend FormalPoly operator*(const FormalPoly& a, const FormalPoly& b);
  // Leibniz rule; factors whose derivative is known to vanish exactly are skipped
  FormalPoly dx(int k) const;
  std::optional<int> min_theta() const;
  std::string str() const;
};

// Geometric polynomial: a truncated jet together with its Gilkey order and
// a product-of-vielbein-jets provenance.
class GeomPoly {
 public:
  static constexpr int kZeroOrder = -1000;     // zero element, order unconstrained
  static constexpr int kUnknownOrder = -2000;  // not built from vielbein jets

  Jet jet;
  int gilkey = kZeroOrder;
  FormalPoly formal;
  bool has_formal = false;

  GeomPoly() = default;
  GeomPoly(const Scalar& c);
  GeomPoly(int c) : GeomPoly(Scalar(c)) {}
  static GeomPoly leaf(const Jet& jet_full, const Jet& nonconst, const VielbeinFactor& f,
                       const Scalar& delta, int cap, bool track);
  static GeomPoly untracked(const Jet& j, int gilkey = kUnknownOrder);

  bool is_zero() const { return jet.is_zero() && (!has_formal || formal.empty()) && jet.is_exact(); }
  bool is_geometric() const { return gilkey != kUnknownOrder; }

  GeomPoly& operator+=(const GeomPoly& o);
  GeomPoly& operator-=(const GeomPoly& o) { return *this += -o; }
  friend GeomPoly operator+(GeomPoly a, const GeomPoly& b) { return a += b; }
  friend GeomPoly operator-(GeomPoly a, const GeomPoly& b) { return a += -b; }
  GeomPoly operator-() const;
  friend GeomPoly operator*(const GeomPoly& a, const GeomPoly& b);
  friend GeomPoly operator*(const GeomPoly& a, const Scalar& s);
  friend GeomPoly operator*(const Scalar& s, const GeomPoly& a) { return a * s; }
  GeomPoly dx(int k) const;
  friend bool operator==(const GeomPoly& a, const GeomPoly& b) { return a.jet == b.jet; }

  std::optional<int> min_theta() const;  // nullopt: no surviving monomial
};

template <class T>
struct SquareMat {
  int n = 0;
  std::vector<T> v;
  SquareMat() = default;
  explicit SquareMat(int nn) : n(nn), v(size_t(nn) * nn) {}
  T& operator()(int i, int j) { return v[size_t(i - 1) * n + (j - 1)]; }  // 1-based
  const T& operator()(int i, int j) const { return v[size_t(i - 1) * n + (j - 1)]; }
};

struct MetricJet {
  SquareMat<Jet> g, g_inv;
  Jet j_g;
};

struct VielbeinJet {
  SquareMat<Jet> a;  // a(i, l) = a_i^l
  SquareMat<Jet> b;  // b(l, i) = b_l^i
};

// printed expansions
MetricJet metric_expansion(const JetContext& ctx);
VielbeinJet vielbein_expansion(const JetContext& ctx);
SquareMat<Jet> neumann_inverse(const SquareMat<Jet>& g, int K);
Jet sqrt_det(const SquareMat<Jet>& g);

// Everything derived from the vielbein leaves, with provenance.
struct GeometricJets {
  JetContext ctx;
  SquareMat<GeomPoly> a, b;     // leaves
  SquareMat<GeomPoly> g, ginv;  // A A^t and B^t B
  std::vector<SquareMat<GeomPoly>> dg;  // dg[k-1](i,j) = d_k g_ij
  std::vector<GeomPoly> christoffel;    // Gamma^k_{ij} at [(k-1)*n*n + (i-1)*n + (j-1)]
  std::vector<GeomPoly> frame;          // Gamma~_{ls}^t at [(l-1)*n*n + (s-1)*n + (t-1)]

  int n() const { return ctx.n; }
  const GeomPoly& Gamma(int k, int i, int j) const {
    return christoffel[size_t(k - 1) * n() * n() + size_t(i - 1) * n() + (j - 1)];
  }
  const GeomPoly& Tilde(int l, int s, int t) const {
    return frame[size_t(l - 1) * n() * n() + size_t(s - 1) * n() + (t - 1)];
  }
};

std::shared_ptr<const GeometricJets> build_geometric_jets(const JetContext& ctx);

// Koszul formula on plain jets (no provenance)
std::vector<Jet> christoffel(const JetContext& ctx);
// orthonormal-frame symbols through the Cartan structure constants of the coframe
std::vector<Jet> christoffel_frame_cartan(const JetContext& ctx);
std::vector<Jet> christoffel_frame(const JetContext& ctx);

// leading terms as printed
PolyExpr christoffel_leading_printed(const JetContext& ctx, int k, int i, int j);
PolyExpr frame_leading_printed(const JetContext& ctx, int l, int s, int t);

// Ricci and scalar curvature of the curvature data at p
PolyExpr ricci_at_p(const JetContext& ctx, int k, int l);
PolyExpr scalar_curvature_at_p(const JetContext& ctx);

// s(., g_lambda)(x) = lambda^{ord} s(lambda x, g); the graded jet of s(., g_lambda)
struct PullbackResult {
  LambdaGraded<PolyExpr> graded;  // s(., g_lambda)
  int gilkey = 0;
  int lambda_shift = 0;  // f_lambda^* s = lambda^{-shift} s(., g_lambda)
};
PullbackResult pullback_flambda(const GeomPoly& s);

// Re-evaluates the provenance with leaves taken from g_lambda; used to check
// the scaling law without trusting the stored jet.
PolyExpr evaluate_provenance_scaled(const GeomPoly& s, const GeometricJets& jets);

enum class LimitVerdict { Diverges, Zero, Finite, Indeterminate };
struct LimitResult {
  LimitVerdict verdict = LimitVerdict::Indeterminate;
  PolyExpr value;
  std::string reason;
};
std::string to_string(LimitVerdict v);

// lambda^{-theta} D^gamma (h o f_lambda) as lambda -> 0; h known through degree prec
LimitResult valuation_limit(const PolyExpr& h, const std::array<int, kMaxDim>& gamma, int theta,
                            int prec);

}  // namespace getzler
