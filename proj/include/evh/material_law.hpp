#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "evh/types.hpp"

namespace evh {

/// Default series truncation order: coefficients z^0..z^8.
inline constexpr int kDefaultTruncation = 8;

/// Operator-valued Laurent series
///   M(z) = pole * z^{-1} + sum_{n=0}^{K} coeffs[n] * z^n
/// understood as a holomorphic (resp. meromorphic with one simple pole at 0)
/// function on the disc B(0, eps). Stored truncations are treated as the exact
/// object: all algebra below is exact polynomial/Laurent arithmetic up to the
/// retained order.
///
/// Coefficients may be rectangular when the law is used as an off-diagonal
/// transformation factor; every operation that needs a square law checks.
struct MaterialLaw {
  std::vector<Matrix> coeffs;    // z^0 .. z^K, all the same shape
  std::optional<Matrix> pole;    // z^{-1} coefficient
  double eps = 1.0;              // analyticity radius
  double declared_sup = 0.0;     // user-declared sup bound; 0 = derive by sampling

  Index rows() const { return coeffs.empty() ? 0 : coeffs.front().rows(); }
  Index cols() const { return coeffs.empty() ? 0 : coeffs.front().cols(); }
  bool square() const { return rows() == cols(); }
  int truncation() const { return static_cast<int>(coeffs.size()) - 1; }
  bool has_pole() const;

  /// coeffs[n], or a zero matrix for n > K.
  Matrix coeff(int n) const;
  Matrix derivative_at_zero() const { return coeff(1); }

  static MaterialLaw constant(const Matrix& c, double eps, int trunc = 0);
  static MaterialLaw from_coeffs(std::vector<Matrix> coeffs, double eps);
  static MaterialLaw zero(Index rows, Index cols, double eps, int trunc);

  /// Throws DimensionMismatch / StructureViolation on inconsistent shapes or
  /// non-finite entries.
  void validate() const;
};

/// M(z). Throws EvalOutsideDisc for |z| >= eps and PoleAtZero when z = 0 and a
/// pole coefficient is present.
Matrix evaluate(const MaterialLaw& m, Complex z);

/// Sup bound used by the Cauchy estimates: the declared value when present,
/// otherwise the maximum of ||M(z)|| over 256 equispaced points on the circle
/// |z| = eps/2 (a valid H-infinity bound for that disc by the maximum
/// principle). Laws with a pole must declare a bound.
double sup_bound(const MaterialLaw& m);
bool sup_bound_is_estimated(const MaterialLaw& m);

/// Cauchy coefficient bound  sup * (2/eps)^n. Requires a pole-free law.
double coeff_bound(const MaterialLaw& m, int n);

/// Uniform tail bound  ||sum_{n>=k} z^{n-k} M_n|| <= 2 * sup * (2/eps)^k  on
/// B(0, eps/4).
double tail_bound(const MaterialLaw& m, int k);

/// Verifies ||M_n|| <= coeff_bound(m, n) * (1 + rel_tol) for every stored
/// coefficient; throws BoundViolated naming the first offending index.
void check_cif_consistency(const MaterialLaw& m, double rel_tol = 1e-8);

/// Spectral data of M(0) plus the definiteness constant of Re M'(0) on the
/// nullspace of M(0).
struct ZeroOrderCheck {
  bool selfadjoint = false;
  bool psd = false;
  double d = 0.0;        // min eigenvalue of M(0) above the rank cut; +inf if range empty
  double c_prime = 0.0;  // min eigenvalue of Re M'(0) compressed to the nullspace; +inf if empty
  Matrix range_basis;    // orthonormal columns spanning R(M(0))
  Matrix null_basis;     // orthonormal columns spanning N(M(0))
  double rank_tol = 0.0; // absolute eigenvalue cut that was applied
};

/// Checks that M(0) is selfadjoint positive semidefinite and splits the space.
/// Throws NotSelfadjoint / NotPSD when the zeroth coefficient fails the test
/// (tolerance tol on ||M0 - M0*|| resp. on negative eigenvalues). rank_tol = 0
/// selects the default 1e-9 * ||M0||.
ZeroOrderCheck check_zero_order(const MaterialLaw& m, double tol = 1e-10, double rank_tol = 0.0);

/// Output of certify(): constants realizing the positive-definiteness of
/// Re z^{-1} M(z) >= c_out on the disc B(r, r).
struct PositivityCertificate {
  double c = 0.0;         // claimed definiteness of Re M'(0) on N(M(0))
  double d = 0.0;         // claimed definiteness of M(0) on R(M(0))
  double nu1 = 0.0;       // (1/d)(2c/3 + (3/c)(sup*2/eps)^2 + (2/eps)*sup)
  double delta_hat = 0.0; // min{ (eps/2)^2 * c / (6*sup), eps/4 }
  double r = 0.0;         // 1 / (2 * max{nu1, 1/delta_hat})
  double c_out = 0.0;     // = c/3
  double sup_used = 0.0;
  bool sup_estimated = false;
};

/// Derives the certified disc B(r, r) from the structural constants (c, d).
/// Preconditions: check_zero_order passes and its measured constants dominate
/// the claimed ones (PrereqFailed otherwise); the law is pole-free.
PositivityCertificate certify(const MaterialLaw& m, double c, double d);

struct PositivitySample {
  bool ok = false;
  double min_real = 0.0;  // smallest eigenvalue of Re z^{-1}M(z) seen
  Complex witness{0.0, 0.0};
  int samples = 0;
};

/// Monte-Carlo check of Re z^{-1} M(z) >= cert.c_out - tol over num_samples
/// points drawn uniformly from B(cert.r, cert.r). Deterministic for a fixed
/// seed regardless of thread count.
PositivitySample sample_positivity(const MaterialLaw& m, const PositivityCertificate& cert,
                                   int num_samples, std::uint64_t seed, double tol = 1e-9);

enum class SubsequencePolicy {
  strict,            // throw NoConvergence when the full sequence does not settle
  even_subsequence,  // on a 2-cluster split, return the even-position limit, flagged
};

struct SeriesLimit {
  MaterialLaw limit;
  bool converged = false;         // full-sequence convergence
  bool subsequence_used = false;  // limit taken over positions 2, 4, ...
  bool extrapolated = false;      // linear-in-1/n Richardson step applied
  int clusters = 1;
  double final_residual = 0.0;    // last successive difference (max over coefficients)
  std::optional<MaterialLaw> second_cluster;  // odd-position limit when clusters == 2
};

/// Coefficient-wise limit of a sequence of laws sharing shape, pole structure,
/// and radius. Convergence is declared when successive differences fall below
/// probe_tol (absolute, max over coefficients); a linear-in-1/n Richardson
/// step sharpens O(1/n) sequences (using `indices` as the n-values when given,
/// 1-based positions otherwise) and is skipped on constant tails so that
/// eventually-constant sequences are reproduced exactly. Sequences that split
/// into exactly two settling clusters by position parity are reported as such;
/// under the strict policy this throws NoConvergence.
SeriesLimit series_limit(std::span<const MaterialLaw> laws, double probe_tol,
                         SubsequencePolicy policy = SubsequencePolicy::strict,
                         std::span<const double> indices = {});

// --- exact truncated Laurent algebra -------------------------------------

MaterialLaw add(const MaterialLaw& a, const MaterialLaw& b);
MaterialLaw subtract(const MaterialLaw& a, const MaterialLaw& b);
MaterialLaw scale(Complex s, const MaterialLaw& a);

/// Cauchy product, keeping orders z^{-1}..z^{out_trunc} (default: min of the
/// operand truncations). The z^{-2} coefficient must cancel (both operands
/// carrying a pole is rejected unless the product pole*pole vanishes).
MaterialLaw multiply(const MaterialLaw& a, const MaterialLaw& b, int out_trunc = -1);

/// Series inverse of a pole-free law with invertible zeroth coefficient, by
/// the Neumann recursion; exact coefficients up to out_trunc.
MaterialLaw inverse_analytic(const MaterialLaw& a, int out_trunc = -1);

/// z * a  (the pole coefficient, if any, becomes the zeroth coefficient).
MaterialLaw shift_up(const MaterialLaw& a);

/// a / z. Requires a(0) = 0 (within abs_tol, which is asserted) so no z^{-2}
/// term appears; coefficient n of the result is coefficient n+1 of a.
MaterialLaw shift_down(const MaterialLaw& a, double abs_tol);

/// Extract the block law  rows [r0, r0+nr) x cols [c0, c0+nc).
MaterialLaw block(const MaterialLaw& a, Index r0, Index c0, Index nr, Index nc);

/// Assemble a 2x2 block law; shapes must be conformal. Any operand may lack a
/// pole (treated as zero).
MaterialLaw assemble_blocks(const MaterialLaw& a11, const MaterialLaw& a12,
                            const MaterialLaw& a21, const MaterialLaw& a22);

/// U* a U for a constant matrix U (columns form the new coordinate frame).
MaterialLaw conjugate(const MaterialLaw& a, const Matrix& u);

/// Truncate (or zero-extend) to the given order.
MaterialLaw retrunc(const MaterialLaw& a, int trunc);

}  // namespace evh
