#pragma once

#include <utility>
#include <vector>

#include "starforge/hochschild.hpp"
#include "starforge/hseries.hpp"
#include "starforge/polyvector.hpp"
#include "starforge/profile.hpp"
#include "starforge/weyl.hpp"

namespace starforge {

// Flat-connection machinery on the Weyl bundle chart: the contracting
// homotopy, the fiberwise deformed products, curvature, the flatness
// recursions with their certificates, flat-section and cochain lifts, and
// the two star products they induce.
//
// Window discipline: operations that construct lifts or state fields work on
// an enlarged internal profile (see work_profile) and return their results
// at that resolution, so that downstream residuals close exactly; residual
// and certificate operations, and every HSeries-valued result, are reduced
// to the caller's profile.

// --- contracting homotopy -------------------------------------------------

// dx^i /\ d/dy^i.
WeylElement delta(const WeylElement& a);

// Normalized homotopy: a monomial of y-degree p and dx-degree q > 0 maps to
// 1/(p+q) sum_k y^k i_{dx^k}; dx-degree 0 maps to zero.  delta_inv o
// delta_inv = 0, and a = sigma(a) + delta(delta_inv a) + delta_inv(delta a).
WeylElement delta_inv(const WeylElement& a);

// Restriction to y = dx = 0, kept as an element.
WeylElement sigma(const WeylElement& a);

// --- fiberwise products ---------------------------------------------------

// Product exponent: antisymmetric matrix of coefficient series, entry (i, j)
// multiplying d/dy^i (x) d/dy^j.  Entries must start at order h so that
// truncated exponentials terminate.  Indices are 0-based here (plain matrix
// storage); the 1-based convention applies to generators only.
using SeriesMatrix = std::vector<std::vector<HSeries>>;

// a1 exp(pi^{ij} <-d/dy^i ->d/dy^j) a2, reduced within pr.
// Throws NotAntisymmetric / ZerothOrderViolation on a bad exponent.
WeylElement diamond(const WeylElement& a1, const WeylElement& a2,
                    const SeriesMatrix& pi, const TruncationProfile& pr);

// Graded commutator of diamond with respect to dx-degree.
WeylElement diamond_bracket(const WeylElement& a1, const WeylElement& a2,
                            const SeriesMatrix& pi, const TruncationProfile& pr);

// 2 pi^{kl} (d/dy^k a1)(d/dy^l a2).  The doubled normalization makes the
// bracket agree with the diamond commutator through order h^2 and makes
// delta an inner derivation with no stray factor.
WeylElement fiber_poisson(const WeylElement& a1, const WeylElement& a2,
                          const SeriesMatrix& pi, const TruncationProfile& pr);

// h times the h^1 coefficient of pi: the exponent of the undeformed product.
SeriesMatrix leading_matrix(const SeriesMatrix& pi);

// Dictionary between the symplectic matrix and the product exponent.  The
// symplectic series is stored multiplied by h (entries start at h^0) and is
// normalized so that w * pi = (h/2) id; then delta = (1/h)[dx^i w_ij y^j, .]
// under diamond, exactly.  Throws DegenerateOmega on a singular constant
// block.
SeriesMatrix pi_matrix_from_omega(const SeriesMatrix& w, const TruncationProfile& pr);

// The same symplectic series read off a bivector field with invertible
// leading matrix: half of the 2-form series of the gauge dictionary.
SeriesMatrix omega_matrix_from_field(const PolyVectorField& pi,
                                     const TruncationProfile& pr);

// --- connections ----------------------------------------------------------

// Torsion-free connection data: Christoffel series gamma^k_{ij}, symmetric
// in (i, j), plus an optional vector-field tail A = sum_j tail[j-1] d/dy^j
// with dx-degree-1, y-degree >= 2 coefficients.  The tail feeds the
// geometric lifts only; the flatness recursions use the bare connection.
struct ConnectionData {
    int dim = 0;
    std::vector<HSeries> gamma;      // ((k-1)*dim + (i-1))*dim + (j-1)
    std::vector<WeylElement> tail;   // empty or dim entries

    ConnectionData() = default;
    explicit ConnectionData(int d);

    HSeries& christoffel(int k, int i, int j);              // 1-based
    const HSeries& christoffel(int k, int i, int j) const;
    // Writes both (i, j) and (j, i).
    void set_christoffel(int k, int i, int j, const HSeries& s);
};

// dx^i /\ (d/dx^i a - gamma^k_{ij} y^j d/dy^k a), reduced within pr.
WeylElement nabla(const WeylElement& a, const ConnectionData& c,
                  const TruncationProfile& pr);

// Action of the tail: sum_j tail[j-1] * d/dy^j a (zero for an empty tail).
WeylElement tail_action(const ConnectionData& c, const WeylElement& a,
                        const TruncationProfile& pr);

// Curvature element R = 1/2 dx^i dx^j rho_{ij,kl} y^k y^l with rho the
// commutator curvature of the connection lowered with w, normalized so that
// nabla^2 a = (1/h)[R, a] under diamond.  Checks the compatibility of the
// connection with the derived product exponent first and throws
// IncompatibleConnection on a nonzero residual.
WeylElement curvature(const ConnectionData& c, const SeriesMatrix& w,
                      const TruncationProfile& pr);

// --- flatness recursion ---------------------------------------------------

enum class FedosovMode { quantum, classical };

// Converged recursion data.  r and b are carried at the enlarged internal
// window (work); w and pi are the symplectic series and product exponent at
// the same resolution.  target is the profile the state was built for.
struct FedosovState {
    FedosovMode mode = FedosovMode::quantum;
    ConnectionData conn;
    SeriesMatrix w;
    SeriesMatrix pi;
    WeylElement r;
    WeylElement b;   // r - dx^i w_ij y^j
    TruncationProfile target;
    TruncationProfile work;
};

// Iterates r = delta_inv(R + nabla r + (1/2h)[r, r]) to its fixed point,
// with the diamond bracket in quantum mode and the doubled fiber Poisson
// bracket in classical mode.  Throws DegenerateOmega, IncompatibleConnection,
// NoConvergence (guard; indicates a profile or precondition bug).
FedosovState fedosov_recursion(const ConnectionData& c, const SeriesMatrix& w,
                               FedosovMode mode, const TruncationProfile& pr);

// Residual of R + nabla r - delta r + (1/2h)[r, r], reduced to target.
WeylElement flatness_certificate(const FedosovState& st);

// The assembled differential nabla - delta + (1/h)[r, .], returned on the
// work window so that iterated applications stay exact.
WeylElement state_differential(const FedosovState& st, const WeylElement& a);

// Residual of the characteristic-class equation with one power of h
// cleared: R + nabla b + (1/2h)[b, b] + sum_{i<j} w_ij dx^i dx^j, reduced
// to target.  Identically zero for a converged state.
WeylElement class_residual(const FedosovState& st);

// --- flat-section lifts ---------------------------------------------------

// The unique flat extension of f: iterates tau = f + delta_inv(nabla tau +
// (1/h)[r, tau]) with the mode's bracket.  Returned on the work window.
WeylElement flat_lift(const FedosovState& st, const HSeries& f);

// Geometric lift against connection data alone: tau = f + delta_inv(
// nabla tau + A tau).  Flatness of the geometric differential is a property
// of the data, not of the iteration; pair with geometric_differential.
WeylElement geometric_lift(const ConnectionData& c, const HSeries& f,
                           const TruncationProfile& pr);

// nabla - delta + tail action, on the work window of pr.
WeylElement geometric_differential(const ConnectionData& c, const WeylElement& a,
                                   const TruncationProfile& pr);

// --- fiberwise cochains ---------------------------------------------------

// Polydifferential cochain on the Weyl chart: sum of terms
// c (d/dy)^{b_1} (x) ... (x) (d/dy)^{b_k} with monomial coefficients c in
// (h, x, y, dx), keyed by the coefficient monomial and the slot orders.
struct FiberCochain {
    int arity = 0;
    std::map<std::pair<WeylKey, std::vector<MIdx>>, CRational> terms;

    FiberCochain() = default;
    explicit FiberCochain(int k) : arity(k) {}

    // Reads a function-level operator as a fiber cochain: coefficients kept
    // in (h, x), slot derivatives turned into y-derivatives.
    static FiberCochain from_operator(const PolyDiffOp& p);

    bool is_zero() const { return terms.empty(); }
    void add_term(const WeylKey& c, const std::vector<MIdx>& slots,
                  const CRational& v);

    // True when no coefficient carries y or dx.
    bool is_delta_flat() const;

    FiberCochain operator-() const;
    FiberCochain& operator+=(const FiberCochain& o);
    FiberCochain& operator-=(const FiberCochain& o);
    friend FiberCochain operator+(FiberCochain a, const FiberCochain& b) { return a += b; }
    friend FiberCochain operator-(FiberCochain a, const FiberCochain& b) { return a -= b; }

    friend bool operator==(const FiberCochain& a, const FiberCochain& b) {
        return a.arity == b.arity && a.terms == b.terms;
    }

    std::string str(int dim) const;
};

FiberCochain reduce(const FiberCochain& p, const TruncationProfile& pr);

// Evaluation on arguments; throws ArityMismatch on a wrong count.
WeylElement apply_cochain(const FiberCochain& p, const std::vector<WeylElement>& args,
                          const TruncationProfile& pr);

// Lift of a cochain with y-independent coefficients to the flat cochain
// rho(P) = P + delta_inv(nabla rho(P) + [A, rho(P)]): the covariant
// derivative acts on the coefficient and corrects each slot by the
// Christoffel terms, the tail acts by the operator commutator.  Throws
// NotDeltaFlat on y-dependent input.  Returned on the work window.
FiberCochain lift_cochain(const FiberCochain& p, const ConnectionData& c,
                          const TruncationProfile& pr);
FiberCochain lift_cochain(const PolyDiffOp& p, const ConnectionData& c,
                          const TruncationProfile& pr);

// P(tau f_1, ..., tau f_k) restricted to y = dx = 0, reduced within pr.
HSeries nu_eval(const FiberCochain& p, const std::vector<HSeries>& args,
                const ConnectionData& c, const TruncationProfile& pr);

// The function-level operator induced by evaluation on geometric lifts,
// recovered by triangular interpolation over slot degrees up to pr.x_degree.
PolyDiffOp descend_cochain(const FiberCochain& p, const ConnectionData& c,
                           const TruncationProfile& pr);

// Inverse direction: the y-independent cochain whose evaluation on lifts
// reproduces q.  descend_cochain o ascend_operator is the identity on
// operators within the window, and ascend_operator o descend_cochain is the
// identity on y-independent cochains.
FiberCochain ascend_operator(const PolyDiffOp& q, const ConnectionData& c,
                             const TruncationProfile& pr);

// --- star products --------------------------------------------------------

// sigma(tau(f1) diamond tau(f2)) for a quantum-mode state, reduced to target.
HSeries star_modified(const FedosovState& st, const HSeries& f1, const HSeries& f2);

// Fiberwise normalizer to the undeformed product: the staged substitution
// P = ... P_3 P_2, stage m scaling y by exp(h^{m-1} chi_m) with
// chi_m = (1/2) pi_1^{-1} pi_m, which removes the h^m coefficient of the
// product exponent.  P(a) diamond_F P(b) = P(a diamond b) exactly.
struct OriginalFrame {
    FedosovState state;
    std::vector<std::pair<int, SeriesMatrix>> stages;  // (m, chi_m), applied front first
    SeriesMatrix pi_flat;                              // h pi_1
    WeylElement pb;                                    // P(b)
    WeylElement rf;                                    // P(b) + dx^i w_ij y^j
};

// Builds the frame for a quantum-mode state; throws DegeneratePi1 when the
// leading exponent matrix is singular at the origin.
OriginalFrame original_frame(const FedosovState& st);

WeylElement frame_apply(const OriginalFrame& of, const WeylElement& a);
WeylElement frame_apply_inverse(const OriginalFrame& of, const WeylElement& a);

// P nabla P^{-1}, on the work window.
WeylElement nabla_zero(const OriginalFrame& of, const WeylElement& a);

// The conjugated differential nabla_zero + (1/h)[P(b), .] under the
// undeformed product; kills the original lifts.
WeylElement original_differential(const OriginalFrame& of, const WeylElement& a);

// Flat lift of f in the original frame, P(tau(f)) (the bridge between the
// two lift recursions); see tests for the fixed-point cross-check.
WeylElement original_lift(const OriginalFrame& of, const HSeries& f);

// Class residual in the original frame, one power of h cleared:
// P(R) + nabla_zero P(b) + (1/2h)[P(b), P(b)]_F + sum_{i<j} w_ij dx^i dx^j.
WeylElement original_class_residual(const OriginalFrame& of);

// sigma(tau_F(f1) diamond_F tau_F(f2)); asserts agreement with
// star_modified term-for-term and a zero original-frame class residual.
HSeries star_original(const OriginalFrame& of, const HSeries& f1, const HSeries& f2);

// --- windows ----------------------------------------------------------------

// The enlarged internal window: extra h headroom for the exact h-divisions,
// extra y and x room so that no truncated tail can re-enter the caller's
// window through the recursions.
TruncationProfile work_profile(const TruncationProfile& pr);

}  // namespace starforge
