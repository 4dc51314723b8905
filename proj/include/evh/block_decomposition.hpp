#pragma once

#include <array>

#include "evh/material_law.hpp"

namespace evh {

/// Orthogonal four-way splitting of H1 (+) H2 adapted to the zeroth
/// coefficient of a block material law:
///   G1 = range of the H1-compression of M(0),  G2 = its nullspace,
///   G3 = range of the H2-compression of M(0),  G4 = its nullspace.
/// In these coordinates M(0) is supported on the (G1, G3) rows/columns only
/// and its two diagonal range blocks are strictly positive.
struct BlockDecomposition {
  Index n1 = 0, n2 = 0;         // ambient split sizes
  std::array<Index, 4> dim{};   // |G1|, |G2|, |G3|, |G4|
  Matrix frame;                 // unitary; columns ordered G1, G2, G3, G4
  double d = 0.0;               // min positive eigenvalue of the two range blocks
  double rank_tol = 0.0;        // absolute eigenvalue cut applied to the compressions

  /// 0-based column offset of block j (1-based j in 1..4).
  Index offset(int j) const;
  /// Columns of `frame` spanning G_j.
  Matrix basis(int j) const;

  /// Change of coordinates: G-coordinates law = frame* m frame, and back.
  MaterialLaw to_g(const MaterialLaw& m) const;
  MaterialLaw from_g(const MaterialLaw& mg) const;

  /// Block (j, k) of a matrix already expressed in G-coordinates.
  Matrix g_block(const Matrix& a, int j, int k) const;
};

/// Computes the splitting for a square law over a two-block space whose first
/// block has size n1. Requires the zeroth coefficient selfadjoint positive
/// semidefinite (NotSelfadjoint / NotPSD) and checks the implied zero pattern
/// of M(0) in G-coordinates to relative tolerance tol (StructureViolation).
/// rank_tol = 0 selects 1e-9 * ||M(0)||.
BlockDecomposition four_block(const MaterialLaw& m, Index n1, double tol = 1e-9,
                              double rank_tol = 0.0);

/// Result of inverting a law in "regular form"
///   M_I(z) = [[A, 0], [0, 0]] + z M1(z),   A >= d on the first block,
///   Re M1_22(0) >= c,
/// where the partition (n1 | rest) is supplied by the caller. The inverse is
/// a Laurent law with its pole supported in the (2,2) block:
///   M_I(z)^{-1} = [[B(z), -B M1_12 S], [-S M1_21 B, S M1_21 B M1_12 S + z^{-1} S]]
/// with S = M1_22^{-1} and B = (A + z (M1_11 - M1_12 S M1_21))^{-1}.
struct InverseResult {
  MaterialLaw inverse;  // valid on B(0, inverse.eps); eps is a conservative radius
  double d = 0.0;       // measured lambda_min of the regular block
  double c = 0.0;       // measured lambda_min of Re M1_22(0); +inf if that block is empty
};

/// Inverts a regular-form law. Checks: no pole; zero-order blocks outside
/// (1,1) vanish to tol * ||M(0)|| (StructureViolation); the regular block is
/// selfadjoint (NotSelfadjoint) and strictly positive, and Re M1_22(0) is
/// strictly positive (DegenerateBlock otherwise). Output truncation defaults
/// to the input's; intermediates carry two orders of headroom.
InverseResult invert_regular(const MaterialLaw& m, Index n1, int out_trunc = -1,
                             double tol = 1e-9);

/// Inverts a law in "degenerate hat form"
///   \hat M(z) = [[A + z W11(z), W12(z)], [W21(z), z^{-1} W22(z)]],
/// i.e. a Laurent law whose pole is supported in the (2,2) block, with
/// A >= d and Re W22(0) >= c. The inverse is analytic:
///   [[B, -z B W12 T], [-z T W21 B, z^2 T W21 B W12 T + z T]]
/// with T = W22^{-1} and B = (A + z(W11 - z W12 T W21))^{-1}. This is the
/// two-sided companion of invert_regular: each undoes the other.
InverseResult invert_degenerate_hat(const MaterialLaw& m, Index n1, int out_trunc = -1,
                                    double tol = 1e-9);

/// Removes a structurally cancelled pole: requires ||pole|| <= tol * scale
/// (StructureViolation otherwise) and returns the analytic part.
MaterialLaw drop_pole(const MaterialLaw& m, double tol = 1e-9);

/// Off-diagonal factors for a Gauss transformation in G-coordinates. Both are
/// rectangular laws: `upper` maps G3 (+) G4 -> G1 (+) G2 and `lower` maps
/// G1 (+) G2 -> G3 (+) G4. Admissibility (checked): at z = 0 the (G2, G3)
/// block of `upper` and the (G3, G2) block of `lower` vanish, the (G3, G1)
/// block of `lower` is the adjoint of the (G1, G3) block of `upper`, and the
/// (G4, G2) block of `lower` is the adjoint of the (G2, G4) block of `upper`.
struct GaussFactors {
  MaterialLaw upper;
  MaterialLaw lower;
};

struct GaussResult {
  MaterialLaw transformed;  // [[1, s U], [0, 1]] M [[1, 0], [s L, 1]] in G-coordinates
  double d_prime = 0.0;     // guaranteed positivity of the transformed M(0) on its range
  double c_prime = 0.0;     // guaranteed positivity of Re M'(0) on the new nullspace
  ZeroOrderCheck measured;  // a-posteriori spectral data of the transformed law
};

/// Congruence-type Gauss transformation of a law given in G-coordinates. The
/// claimed constants (c, d) of the input law are verified against measured
/// values (PrereqFailed) and propagate as
///   d' = d / (1 + ||U13(0)|| + ||U13(0)||^2),
///   c' = c / (1 + ||U24(0)|| + ||U24(0)||^2),
/// independent of the sign s in {+1, -1}. The transformation preserves the
/// range of M(0); this is checked to tolerance tol.
GaussResult gauss_transform(const MaterialLaw& mg, const BlockDecomposition& dec,
                            const GaussFactors& factors, double sign, double c, double d,
                            double tol = 1e-8);

/// Residual of the mixed-block compatibility condition
///   (D44^{-1} D42)^* = D24 D44^{-1},   D_jk = (G_j block) M'(0) (G_k block),
/// which legitimizes the Gauss factors built from Schur data. Returns 0 when
/// G2 or G4 is trivial; throws SingularBlock when D44 is not invertible.
double compatibility_residual(const MaterialLaw& m, const BlockDecomposition& dec);

struct DiagonalizeResult {
  MaterialLaw transformed;    // G-coordinates; off-diagonal H-blocks vanish
  MaterialLaw factor_upper;   // M12 M22^{-1} with the cancelled pole removed
  MaterialLaw factor_lower;   // M22^{-1} M21, likewise analytic
  double d_prime = 0.0;
  double c_prime = 0.0;
  double offdiag_residual = 0.0;  // max coefficient norm of the two off-diagonal blocks
  double compat_residual = 0.0;
};

/// Block-diagonalization of a law in G-coordinates via the Gauss
/// transformation with factors -M12 M22^{-1} and -M22^{-1} M21: the result is
/// diag(M11 - M12 M22^{-1} M21, M22) up to truncation effects. Requires the
/// compatibility residual <= compat_tol (CompatibilityViolated) and claimed
/// constants (c, d) as in gauss_transform.
DiagonalizeResult diagonalize(const MaterialLaw& mg, const BlockDecomposition& dec, double c,
                              double d, double compat_tol = 1e-8, double tol = 1e-8);

}  // namespace evh
