#pragma once

#include <functional>
#include <vector>

#include "evh/block_decomposition.hpp"
#include "evh/material_law.hpp"

namespace evh {

// ---------------------------------------------------------------------------
// Periodic coefficient fields
// ---------------------------------------------------------------------------

/// Piecewise-constant 1-periodic coefficient on [0,1): equal-width cells, each
/// holding a square matrix value (scalars are 1x1). alpha/beta are the declared
/// spectral bounds: alpha <= Re-part eigenvalues and ||value|| <= beta on every
/// piece.
struct PeriodicField {
  std::vector<Matrix> pieces;
  double alpha = 0.0;
  double beta = 0.0;

  Index dim() const { return pieces.empty() ? 0 : pieces.front().rows(); }
  int count() const { return static_cast<int>(pieces.size()); }
  void validate() const;
  /// 1-periodic lookup (piece containing frac(x)).
  const Matrix& value_at(double x) const;
};

PeriodicField scalar_field(const std::vector<Complex>& values, double alpha, double beta);

/// Exact cell mean (pieces have equal width, so this is the arithmetic mean).
Matrix cell_average(const PeriodicField& f);

/// Pointwise inverse field; throws SingularPiece. Bounds become
/// (alpha/beta^2, 1/alpha), valid whenever Re f >= alpha > 0 and ||f|| <= beta.
PeriodicField pointwise_inverse(const PeriodicField& f);

/// f + z0 * I on every piece (bounds adjusted conservatively).
PeriodicField pointwise_shift(const PeriodicField& f, Complex z0);

/// (cell mean of the pointwise inverse)^{-1}: the 1-D homogenized coefficient.
Matrix harmonic_mean(const PeriodicField& f);

/// Multiplication operator by x |-> f(n x) on the uniform m-cell midpoint grid
/// of [0,1): block diagonal, size m*dim. Requires the oscillation period to
/// resolve exactly: m must be a positive multiple of n * count() (AliasError),
/// so each grid cell lies inside one piece and cell averages are exact.
Matrix sample_operator(const PeriodicField& f, int n, int m);

// ---------------------------------------------------------------------------
// Weak-operator limits at finite scale
// ---------------------------------------------------------------------------

/// Convergence record of one extrapolated sequence: successive probe residuals
/// along the ladder plus the flags propagated from series_limit.
struct LadderDiagnostics {
  std::vector<double> indices;
  std::vector<double> residuals;
  bool subsequence_used = false;
  bool extrapolated = false;
};

/// G-limit of a ladder of laws with no spatial operator: inverts each law on
/// the common range/null split of M_1(0), takes the coefficientwise limit of
/// the Laurent inverses, and re-inverts. The limit preserves R(M_1(0))
/// (RangeChanged otherwise). `indices` are the ladder labels (oscillation
/// counts) used for Richardson extrapolation; defaults to positions.
MaterialLaw homogenize_ode(const std::vector<MaterialLaw>& laws, double probe_tol = 1e-6,
                           SubsequencePolicy policy = SubsequencePolicy::even_subsequence,
                           std::vector<double> indices = {},
                           LadderDiagnostics* diagnostics = nullptr);

struct HomogenizationResult {
  MaterialLaw limit;             // N, in the coordinates of the input laws
  MaterialLaw eta1, eta2, eta3, eta4;  // eta2 is the Laurent limit of the (2,2) inverses
  MaterialLaw eta2_inverse;      // re-inverted eta2 (analytic), used in the assembly
  std::vector<LadderDiagnostics> diagnostics;  // one entry per eta sequence
  Matrix frame;                  // relabelling isometry (identity for split-index input)
  bool range_preserved = false;
  bool flagged_subsequence = false;
  double d_prime = 0.0;          // certified range constant of N(0)
  double c_prime = 0.0;          // certified nullspace constant of Re N'(0)
  PositivityCertificate certificate;
};

/// Block G-limit for laws on H1 (+) H2 (split at `split_index`) with a
/// skew-Hermitian operator acting on H1 only. Checks the range condition and
/// the mixed-derivative compatibility condition on every law, forms the four
/// Schur expression sequences, extrapolates each, assembles
///   N = [[eta1 + eta4*inv(eta2)*eta3, eta4*inv(eta2)], [inv(eta2)*eta3, inv(eta2)]],
/// verifies R(N(0)) = R(M_1(0)), and certifies N through the triangular
/// congruence onto diag(eta1, inv(eta2)).
HomogenizationResult homogenize_p2(const std::vector<MaterialLaw>& laws, const Matrix& a_skew,
                                   Index split_index, double probe_tol = 1e-6,
                                   SubsequencePolicy policy = SubsequencePolicy::even_subsequence,
                                   std::vector<double> indices = {});

/// Splits H along the nullspace of the skew-Hermitian A (P onto N(A)^perp, Q
/// onto N(A)), relabels the laws into that 2x2 structure, and delegates to
/// homogenize_p2 with the compression of A onto N(A)^perp. The returned limit
/// is recombined back to the original coordinates; the etas and the
/// relabelling frame [P-basis | Q-basis] are reported as computed.
HomogenizationResult homogenize_nullsplit(const std::vector<MaterialLaw>& laws,
                                          const Matrix& a_skew, double rank_tol = 0.0,
                                          double probe_tol = 1e-6,
                                          SubsequencePolicy policy = SubsequencePolicy::even_subsequence,
                                          std::vector<double> indices = {});

// ---------------------------------------------------------------------------
// 1-D heat limit system
// ---------------------------------------------------------------------------

/// The three-block limit system of the 1-D heat ladder on a uniform grid of m
/// cells: variables (theta, q1, q2) of sizes (m-1, m-1, 1), where q1 lives on
/// the mean-zero flux subspace R(grad0) and q2 on the constants N(div).
struct HeatLimitSystem {
  MaterialLaw law;     // M(z) = diag(I,0,0) + z * (limit middle matrix)
  Matrix a_op;         // [[0, div P*, 0], [P grad0, 0, 0], [0, 0, 0]]
  Matrix p_frame;      // m x (m-1) orthonormal basis of the mean-zero flux subspace
  Matrix q_frame;      // m x 1 normalized constant vector
  std::vector<int> levels;
  std::vector<double> correction_raw;    // operator norm of the correction term, per level
  std::vector<double> correction_probe;  // probe-compressed norm, per level
  std::vector<double> keff_level;        // per-level probe estimate of K_eff
  double keff = 0.0;                     // Richardson extrapolation of the last two levels
  double keff_exact = 0.0;               // fast path: harmonic mean of the field
  double grid_h = 0.0;
};

/// Builds the limit system for the field kappa on an m-cell grid using the
/// alias-free prefix of `levels` (default {4,8,16,32,64}). Real SPD fields
/// only. The per-level middle matrix uses the finite-n expressions
///   T1 = P K^{-1} P* - P K^{-1} Q^*(Q K^{-1} Q*)^{-1} Q K^{-1} P*,  etc.;
/// the returned law freezes the extrapolated limits.
HeatLimitSystem heat_limit_system(const PeriodicField& kappa, int m,
                                  std::vector<int> levels = {4, 8, 16, 32, 64},
                                  int probe_count = 6);

// ---------------------------------------------------------------------------
// G-convergence probe checker
// ---------------------------------------------------------------------------

using SolveMap = std::function<Vector(const Vector&)>;
using ApplyMap = std::function<Vector(const Vector&)>;

struct GConvergenceProbe {
  double implied_minus_candidate = 0.0;  // weak statistic: probe-implied vs candidate action
  double equation_residual = 0.0;        // strong statistic: ||B u_n - f|| / ||u_n|| at the last level
  double moment_drift = 0.0;             // residual of the probe-moment extrapolation
};

struct GConvergenceReport {
  std::vector<GConvergenceProbe> probes;
  double max_weak_residual = 0.0;
  double max_equation_residual = 0.0;
  double max_moment_drift = 0.0;
  int slowest_probe = -1;  // argmax of the moment drift
  bool accepted = false;   // max_weak_residual <= tol
};

/// For each probe f: runs every solver and extrapolates probe moments along
/// the ladder (one Richardson step over the last two levels, assuming a
/// geometric ladder). Scores the candidate by
///   weak:    || lim <phi, B u_n> - <phi, f> || / || lim <phi, u_n> ||
///            (the weak form of the equation, measured through the probes);
///   strong:  || B u_last - f || / ||u_last||   (coefficient-modulus mismatch
///            against the finest solver, reported as rejection magnitude).
/// The candidate is accepted when every weak residual is <= tol. Report-only:
/// never throws on rejection.
GConvergenceReport check_g_convergence(const std::vector<SolveMap>& solvers,
                                       const ApplyMap& candidate_apply,
                                       const std::vector<Vector>& probes, double tol = 1e-6);

}  // namespace evh
