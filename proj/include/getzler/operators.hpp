#pragma once

#include <array>
#include <climits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "getzler/exterior.hpp"
#include "getzler/jets.hpp"

namespace getzler {

enum class Bundle { Scalar, Forms, Spinors };
std::string to_string(Bundle b);
Bundle bundle_from_string(const std::string& s);

// multi-index gamma, gamma[k-1] = number of d/dx^k
using Multi = std::array<int, kMaxDim>;
int multi_order(const Multi& g);
Multi unit_multi(int k);
Multi operator+(const Multi& a, const Multi& b);
std::string multi_str(const Multi& g);  // "d_1^2 d_3", "1" for the empty index

// Coefficient layout per bundle: Scalar one entry; Spinors 2^n Clifford words
// (frame e^I); Forms 4^n entries, index row * 2^n + col, in the coordinate
// basis dx^I (row = output J, col = input I).
size_t fiber_size(Bundle b, int n);

// P = sum_gamma P_gamma D^gamma. `order` is the weight m used for Gilkey
// bookkeeping; for builder outputs it equals the differential order.
struct GeomDiffOp {
  Bundle bundle = Bundle::Scalar;
  std::shared_ptr<const GeometricJets> jets;
  int order = 0;
  std::map<Multi, std::vector<GeomPoly>> terms;

  int n() const { return jets->n(); }
  size_t fiber() const { return fiber_size(bundle, n()); }
  std::vector<GeomPoly>& coef(const Multi& g);
  const std::vector<GeomPoly>* find(const Multi& g) const;
  void prune();
  bool is_zero() const;
  int max_derivative() const;

  GeomDiffOp& operator+=(const GeomDiffOp& o);
  GeomDiffOp& operator-=(const GeomDiffOp& o) { return *this += o.scaled(Scalar(-1)); }
  friend GeomDiffOp operator+(GeomDiffOp a, const GeomDiffOp& b) { return a += b; }
  friend GeomDiffOp operator-(GeomDiffOp a, const GeomDiffOp& b) { return a -= b; }
  GeomDiffOp scaled(const Scalar& s) const;
};

// jets for operator work: provenance pruned at Theta >= n, which never hides a witness
std::shared_ptr<const GeometricJets> operator_jets(JetContext ctx);

GeomDiffOp zero_operator(Bundle b, std::shared_ptr<const GeometricJets> jets, int order);
// D^gamma tensor identity
GeomDiffOp partial_operator(Bundle b, std::shared_ptr<const GeometricJets> jets, const Multi& g);
// order-0 multiplication by a fiber coefficient, declared with weight `order`
GeomDiffOp multiplication(Bundle b, std::shared_ptr<const GeometricJets> jets, std::vector<GeomPoly> c,
                          int order = 0);
GeomDiffOp scalar_multiplication(Bundle b, std::shared_ptr<const GeometricJets> jets, const GeomPoly& f,
                                 int order = 0);

GeomDiffOp compose(const GeomDiffOp& P, const GeomDiffOp& Q);

struct GeometricCheck {
  bool ok = true;
  std::string detail;
};
GeometricCheck check_geometric(const GeomDiffOp& P);

// entrywise agreement on the common range of validity of the jets
bool agree_mod_truncation(const GeomDiffOp& a, const GeomDiffOp& b, std::string* why = nullptr);

// ---- builders ----
GeomDiffOp build_covariant_derivative(Bundle b, std::shared_ptr<const GeometricJets> jets, int i);
GeomDiffOp wedge_dx(std::shared_ptr<const GeometricJets> jets, int i);        // forms, dx^i ^
GeomDiffOp contraction_dx(std::shared_ptr<const GeometricJets> jets, int i);  // forms, d/dx^i _|
GeomDiffOp clifford_dx(std::shared_ptr<const GeometricJets> jets, int i);     // spinors, dx^i . = b_l^i e^l

GeomPoly scalar_curvature_jet(const GeometricJets& J);
// -g^{ij}(nabla_i nabla_j - Gamma^k_ij nabla_k)
GeomDiffOp connection_laplacian(Bundle b, std::shared_ptr<const GeometricJets> jets);
// W = sum g^{ac} dx^b ^ (d/dx^a _| R(d_c, d_b)) on forms
GeomDiffOp bochner_term(std::shared_ptr<const GeometricJets> jets);
GeomDiffOp dirac_direct(std::shared_ptr<const GeometricJets> jets);
GeomDiffOp dirac_via_connection(std::shared_ptr<const GeometricJets> jets);

// Lichnerowicz summands: (I)..(V) and Scal/4 at index 5
std::array<GeomDiffOp, 6> lichnerowicz_terms(std::shared_ptr<const GeometricJets> jets);
GeomDiffOp dirac_squared_lichnerowicz(std::shared_ptr<const GeometricJets> jets);

// d, delta, hodge_laplacian, dirac, dirac_squared, connection_laplacian_forms,
// connection_laplacian_spinors, scalar_laplacian
const std::vector<std::string>& named_operators();
GeomDiffOp build_named(const std::string& name, std::shared_ptr<const GeometricJets> jets);

// ---- operators on Lambda V (or on functions, fiber_n = 0) with exact coefficients ----
struct FormOperator {
  int n = 0;
  int fiber_n = 0;
  std::map<Multi, EndoMatrix<PolyExpr>> terms;

  FormOperator() = default;
  FormOperator(int nn, int fn) : n(nn), fiber_n(fn) {}
  EndoMatrix<PolyExpr>& coef(const Multi& g);
  void prune();
  bool is_zero() const;
  FormOperator& operator+=(const FormOperator& o);
  FormOperator& operator-=(const FormOperator& o);
  friend FormOperator operator+(FormOperator a, const FormOperator& b) { return a += b; }
  friend FormOperator operator-(FormOperator a, const FormOperator& b) { return a -= b; }
  FormOperator operator-() const;
  friend bool operator==(const FormOperator& a, const FormOperator& b);
  template <class F>
  FormOperator map(F&& f) const {
    FormOperator r(n, fiber_n);
    for (const auto& [g, m] : terms) r.terms.emplace(g, m.map(f));
    r.prune();
    return r;
  }
  FormOperator instantiate(const CurvatureTensor& t) const;
  FormOperator reduced(int dim) const;  // Bianchi normal form of every coefficient
  // coefficient words if every term is left wedge multiplication
  std::optional<std::map<Multi, FormElement<PolyExpr>>> wedge_coefficients() const;
  std::string pretty() const;
};

FormOperator compose(const FormOperator& A, const FormOperator& B);
FormOperator wedge_term(int n, const Multi& g, const FormElement<PolyExpr>& w);
FormOperator scalar_term(int n, int fiber_n, const Multi& g, const PolyExpr& c);

// ---- rescaling ----
struct GradedOperator {
  Bundle bundle = Bundle::Scalar;
  int n = 0;
  int order = 0;
  std::map<int, FormOperator> comps;
  int reliable_through = INT_MAX;  // components of degree <= this are exact
  const FormOperator* at(int d) const;
  bool has_negative() const { return !comps.empty() && comps.begin()->first < 0; }
};

// lambda^m f_lambda^# U_lambda^# (c^g) P
GradedOperator getzler_rescale(const GeomDiffOp& P);
// lambda^m f_lambda^# P without U_lambda (frozen-coefficient family)
GradedOperator frozen_rescale(const GeomDiffOp& P);

enum class Verdict { Rescalable, NotRescalable, Indeterminate };
std::string to_string(Verdict v);

struct Witness {
  Multi gamma{};
  Subset I = 0;                    // input subset (forms) or Clifford word (spinors)
  std::optional<Subset> J;         // output subset (forms only)
  std::optional<int> lambda_degree;  // lowest lambda-degree when negative
  std::optional<int> theta;        // Theta of the coefficient (min over monomials)
  int needed = 0;                  // |J| - |I| (forms) or |I| (spinors)
  std::string str() const;
  friend bool operator<(const Witness& a, const Witness& b);
};

struct RescaleReport {
  Verdict verdict = Verdict::Indeterminate;        // from the lambda-grading
  Verdict theta_verdict = Verdict::Indeterminate;  // from the Theta criterion
  bool decomposition_flag = false;                 // the two disagree
  int reliable_through = INT_MAX;
  std::vector<Witness> witnesses;  // sorted
  std::optional<FormOperator> limit;
  std::string note;
};

RescaleReport rescalability(const GeomDiffOp& P);
FormOperator limit_operator(const GeomDiffOp& P);
// lambda^0 part of the frozen family; needs no geometric structure
FormOperator frozen_limit(const GeomDiffOp& P);

// ---- the Dirac square limit ----
// -sum_i (d_i - 1/8 sum R_{ijst} x^j e^s ^ e^t ^)^2, composed exactly
FormOperator dirac_square_limit_expected(const JetContext& ctx);

struct LimitSquareExpansion {
  std::array<FormOperator, 4> displayed;  // (I)..(IV) as printed
  std::array<FormOperator, 6> rescaled;   // lambda^0 of the Lichnerowicz summands
  FormOperator square;                    // the composed square
  FormOperator inner_III;  // lim lambda^{-2} g^{ij} Gamma~_{js}^t e^s ^ e^t ^ d_i
  FormOperator inner_III_displayed;
  std::array<bool, 4> term_matches{};
  bool inner_III_matches = false;
  bool rest_vanishes = false;       // (V) and Scal/4
  bool displayed_sum_matches = false;
  bool limit_matches = false;       // L equals the square
};
LimitSquareExpansion expand_limit_square(const FormOperator& L, std::shared_ptr<const GeometricJets> jets);

}  // namespace getzler
