#include "evh/block_decomposition.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace evh {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Analytic part of a law whose pole has already been checked (or is absent).
MaterialLaw analytic_part(const MaterialLaw& a) {
  MaterialLaw out = a;
  out.pole.reset();
  out.declared_sup = 0.0;
  return out;
}

double law_magnitude(const MaterialLaw& a) {
  double s = 0.0;
  if (a.pole && a.pole->size() > 0) s = std::max(s, a.pole->cwiseAbs().maxCoeff());
  for (const auto& c : a.coeffs)
    if (c.size() > 0) s = std::max(s, c.cwiseAbs().maxCoeff());
  return s;
}

// (m - m(0)) / z, exact: the constant term cancels bitwise.
MaterialLaw first_order_part(const MaterialLaw& m) {
  return shift_down(subtract(m, MaterialLaw::constant(m.coeff(0), m.eps, 0)), 0.0);
}

struct EigenSplit {
  Matrix range, null;   // orthonormal columns, range first when re-assembled
  double min_range = kInf;  // smallest retained eigenvalue
};

EigenSplit split_psd(const Matrix& a, double cut) {
  EigenSplit out;
  if (a.size() == 0) {
    out.range = out.null = Matrix(a.rows(), 0);
    return out;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitian_part(a));
  const RealVector& ev = es.eigenvalues();
  Index null_dim = 0;
  while (null_dim < ev.size() && ev(null_dim) <= cut) ++null_dim;
  out.null = es.eigenvectors().leftCols(null_dim);
  out.range = es.eigenvectors().rightCols(ev.size() - null_dim);
  if (null_dim < ev.size()) out.min_range = ev(null_dim);
  return out;
}

}  // namespace

Index BlockDecomposition::offset(int j) const {
  require(j >= 1 && j <= 4, Err::IndexOutOfRange, "block index must be 1..4");
  Index off = 0;
  for (int i = 1; i < j; ++i) off += dim[i - 1];
  return off;
}

Matrix BlockDecomposition::basis(int j) const {
  return frame.middleCols(offset(j), dim[j - 1]);
}

MaterialLaw BlockDecomposition::to_g(const MaterialLaw& m) const { return conjugate(m, frame); }

MaterialLaw BlockDecomposition::from_g(const MaterialLaw& mg) const {
  return conjugate(mg, Matrix(frame.adjoint()));
}

Matrix BlockDecomposition::g_block(const Matrix& a, int j, int k) const {
  return a.block(offset(j), offset(k), dim[j - 1], dim[k - 1]);
}

BlockDecomposition four_block(const MaterialLaw& m, Index n1, double tol, double rank_tol) {
  m.validate();
  require(m.square(), Err::DimensionMismatch, "four-block splitting needs a square law");
  require(n1 >= 0 && n1 <= m.rows(), Err::IndexOutOfRange, "first block size out of range");

  const Matrix a = m.coeff(0);
  const double norm0 = operator_norm(a);
  check_zero_order(m, tol * std::max(1.0, norm0));

  BlockDecomposition dec;
  dec.n1 = n1;
  dec.n2 = m.rows() - n1;
  dec.rank_tol = rank_tol > 0.0 ? rank_tol : 1e-9 * norm0;

  const EigenSplit s1 = split_psd(a.topLeftCorner(n1, n1), dec.rank_tol);
  const EigenSplit s2 = split_psd(a.bottomRightCorner(dec.n2, dec.n2), dec.rank_tol);
  dec.dim = {s1.range.cols(), s1.null.cols(), s2.range.cols(), s2.null.cols()};
  dec.frame = Matrix::Zero(m.rows(), m.rows());
  dec.frame.block(0, 0, n1, s1.range.cols()) = s1.range;
  dec.frame.block(0, s1.range.cols(), n1, s1.null.cols()) = s1.null;
  dec.frame.block(n1, n1, dec.n2, s2.range.cols()) = s2.range;
  dec.frame.block(n1, n1 + s2.range.cols(), dec.n2, s2.null.cols()) = s2.null;
  dec.d = std::min(s1.min_range, s2.min_range);

  // The zeroth coefficient must vanish on every row/column touching a
  // nullspace block; this is implied by positive semidefiniteness and is
  // re-checked here to validate the numerical splitting.
  const Matrix ag = dec.frame.adjoint() * a * dec.frame;
  const double cut = tol * std::max(1.0, norm0);
  for (int j = 1; j <= 4; ++j)
    for (int k = 1; k <= 4; ++k) {
      if (j != 2 && j != 4 && k != 2 && k != 4) continue;
      const double off = dec.g_block(ag, j, k).norm();
      require(off <= cut, Err::StructureViolation,
              "zeroth coefficient has a (" + std::to_string(j) + "," + std::to_string(k) +
                  ") block of norm " + std::to_string(off));
    }
  return dec;
}

InverseResult invert_regular(const MaterialLaw& m, Index n1, int out_trunc, double tol) {
  m.validate();
  require(m.square(), Err::DimensionMismatch, "regular-form inverse needs a square law");
  require(!m.has_pole(), Err::StructureViolation, "regular form is analytic");
  require(n1 >= 0 && n1 <= m.rows(), Err::IndexOutOfRange, "regular block size out of range");
  const Index n2 = m.rows() - n1;
  const int kout = out_trunc >= 0 ? out_trunc : m.truncation();
  const int kint = kout + 2;

  const Matrix m0 = m.coeff(0);
  const double scale0 = std::max(1.0, operator_norm(m0));
  const double off = std::max({n2 ? m0.bottomRightCorner(n2, n2).norm() : 0.0,
                               (n1 && n2) ? m0.topRightCorner(n1, n2).norm() : 0.0,
                               (n1 && n2) ? m0.bottomLeftCorner(n2, n1).norm() : 0.0});
  require(off <= tol * scale0, Err::StructureViolation,
          "zeroth coefficient leaks outside the regular block (norm " + std::to_string(off) + ")");

  const Matrix a = m0.topLeftCorner(n1, n1);
  require(operator_norm(a - a.adjoint()) <= tol * scale0, Err::NotSelfadjoint,
          "regular block of M(0) is not selfadjoint");
  InverseResult res;
  res.d = smallest_eigenvalue(a);
  require(res.d > tol * scale0, Err::DegenerateBlock,
          "regular block of M(0) is not strictly positive");

  const MaterialLaw m1 = first_order_part(m);
  const MaterialLaw w11 = block(m1, 0, 0, n1, n1);
  const MaterialLaw w12 = block(m1, 0, n1, n1, n2);
  const MaterialLaw w21 = block(m1, n1, 0, n2, n1);
  const MaterialLaw w22 = block(m1, n1, n1, n2, n2);

  res.c = smallest_eigenvalue(w22.coeff(0));
  require(n2 == 0 || res.c > 0.0, Err::DegenerateBlock,
          "Re M'(0) is not strictly positive on the degenerate block");

  const MaterialLaw s = inverse_analytic(w22, kint);
  const MaterialLaw middle = subtract(w11, multiply(w12, multiply(s, w21, kint), kint));
  const MaterialLaw arg = add(MaterialLaw::constant(a, m.eps, 0), shift_up(middle));
  const MaterialLaw b = inverse_analytic(arg, kint);

  const MaterialLaw b12 = scale(-1.0, multiply(b, multiply(w12, s, kint), kint));
  const MaterialLaw b21 = scale(-1.0, multiply(s, multiply(w21, b, kint), kint));
  MaterialLaw b22 =
      add(multiply(s, multiply(w21, multiply(b, multiply(w12, s, kint), kint), kint), kint),
          shift_down(subtract(s, MaterialLaw::constant(s.coeff(0), s.eps, 0)), 0.0));
  if (n2 > 0 && s.coeff(0).norm() > 0.0) b22.pole = s.coeff(0);

  MaterialLaw out = assemble_blocks(retrunc(b, kout), retrunc(b12, kout), retrunc(b21, kout),
                                    retrunc(b22, kout));

  // Conservative radius on which the expansion is valid: both Neumann series
  // (for M1_22^{-1} and for the Schur factor) contract by at least 1/2.
  const double s1 = m.rows() ? sup_bound(m1) : 0.0;
  double radius = m.eps / 4.0;
  if (n2 > 0 && s1 > 0.0) radius = std::min(radius, res.c * m.eps / (8.0 * s1));
  if (n1 > 0 && s1 > 0.0) {
    const double xbar = 2.0 * s1 + (n2 > 0 ? 8.0 * s1 * s1 / res.c : 0.0);
    radius = std::min(radius, res.d / (2.0 * xbar));
  }
  out.eps = radius;
  res.inverse = std::move(out);
  return res;
}

InverseResult invert_degenerate_hat(const MaterialLaw& m, Index n1, int out_trunc, double tol) {
  m.validate();
  require(m.square(), Err::DimensionMismatch, "hat-form inverse needs a square law");
  require(n1 >= 0 && n1 <= m.rows(), Err::IndexOutOfRange, "regular block size out of range");
  const Index n2 = m.rows() - n1;
  const int kout = out_trunc >= 0 ? out_trunc : m.truncation();
  const int kint = kout + 2;

  if (m.has_pole()) {
    const Matrix& p = *m.pole;
    const double pn = std::max(1.0, p.norm());
    const double leak = std::max({n1 ? p.topLeftCorner(n1, n1).norm() : 0.0,
                                  (n1 && n2) ? p.topRightCorner(n1, n2).norm() : 0.0,
                                  (n1 && n2) ? p.bottomLeftCorner(n2, n1).norm() : 0.0});
    require(leak <= tol * pn, Err::StructureViolation,
            "pole leaks outside the degenerate block (norm " + std::to_string(leak) + ")");
  }

  const MaterialLaw mh11 = analytic_part(block(m, 0, 0, n1, n1));
  const MaterialLaw w12 = analytic_part(block(m, 0, n1, n1, n2));
  const MaterialLaw w21 = analytic_part(block(m, n1, 0, n2, n1));
  const MaterialLaw w22 = shift_up(block(m, n1, n1, n2, n2));

  const Matrix a = mh11.coeff(0);
  require(operator_norm(a - a.adjoint()) <= tol * std::max(1.0, operator_norm(a)),
          Err::NotSelfadjoint, "regular block of the hat law is not selfadjoint");
  InverseResult res;
  res.d = smallest_eigenvalue(a);
  require(res.d > tol * std::max(1.0, operator_norm(a)), Err::DegenerateBlock,
          "regular block of the hat law is not strictly positive");
  res.c = smallest_eigenvalue(w22.coeff(0));
  require(n2 == 0 || res.c > 0.0, Err::DegenerateBlock,
          "the z^{-1} coefficient is not strictly positive on the degenerate block");

  const MaterialLaw w11 = first_order_part(mh11);
  const MaterialLaw t = inverse_analytic(w22, kint);
  // Schur complement of the z^{-1}W22 block: inverting it contributes exactly
  // one factor of z to the coupling term, so it joins W11 at the same order.
  const MaterialLaw inner = subtract(w11, multiply(w12, multiply(t, w21, kint), kint));
  const MaterialLaw arg = add(MaterialLaw::constant(a, m.eps, 0), shift_up(inner));
  const MaterialLaw b = inverse_analytic(arg, kint);

  const MaterialLaw b12 = scale(-1.0, shift_up(multiply(b, multiply(w12, t, kint), kint)));
  const MaterialLaw b21 = scale(-1.0, shift_up(multiply(t, multiply(w21, b, kint), kint)));
  const MaterialLaw b22 =
      add(shift_up(shift_up(multiply(
              t, multiply(w21, multiply(b, multiply(w12, t, kint), kint), kint), kint))),
          shift_up(t));

  MaterialLaw out = assemble_blocks(retrunc(b, kout), retrunc(b12, kout), retrunc(b21, kout),
                                    retrunc(b22, kout));

  const double s11 = n1 ? sup_bound(w11) : 0.0;
  const double s12 = (n1 && n2) ? sup_bound(w12) : 0.0;
  const double s21 = (n1 && n2) ? sup_bound(w21) : 0.0;
  const double s22 = n2 ? sup_bound(w22) : 0.0;
  double radius = m.eps / 4.0;
  if (n2 > 0 && s22 > 0.0) radius = std::min(radius, res.c * m.eps / (8.0 * s22));
  if (n1 > 0) {
    const double xbar = 2.0 * s11 + (n2 > 0 ? 3.0 * s12 * s21 / res.c : 0.0);
    if (xbar > 0.0) radius = std::min(radius, res.d / (2.0 * xbar));
  }
  out.eps = radius;
  res.inverse = std::move(out);
  return res;
}

MaterialLaw drop_pole(const MaterialLaw& m, double tol) {
  if (!m.has_pole()) return analytic_part(m);
  const double mag = std::max(1.0, law_magnitude(m));
  require(m.pole->norm() <= tol * mag, Err::StructureViolation,
          "pole of norm " + std::to_string(m.pole->norm()) + " is not negligible");
  return analytic_part(m);
}

double compatibility_residual(const MaterialLaw& m, const BlockDecomposition& dec) {
  require(m.rows() == dec.n1 + dec.n2, Err::DimensionMismatch,
          "law does not match the decomposition");
  if (dec.dim[1] == 0 || dec.dim[3] == 0) return 0.0;
  const Matrix w = dec.frame.adjoint() * m.derivative_at_zero() * dec.frame;
  const Matrix d44 = dec.g_block(w, 4, 4);
  const Matrix d42 = dec.g_block(w, 4, 2);
  const Matrix d24 = dec.g_block(w, 2, 4);
  Eigen::FullPivLU<Matrix> lu(d44);
  require(lu.isInvertible(), Err::SingularBlock, "derivative block on G4 is singular");
  const Matrix left = (lu.solve(d42)).adjoint();
  const Matrix right = d24 * lu.inverse();
  return operator_norm(left - right);
}

GaussResult gauss_transform(const MaterialLaw& mg, const BlockDecomposition& dec,
                            const GaussFactors& factors, double sign, double c, double d,
                            double tol) {
  require(sign == 1.0 || sign == -1.0, Err::ConfigError, "sign must be +1 or -1");
  require(!mg.has_pole(), Err::StructureViolation, "Gauss transformation expects an analytic law");
  const Index g1 = dec.dim[0], g2 = dec.dim[1], g3 = dec.dim[2], g4 = dec.dim[3];
  const Index h1 = g1 + g2, h2 = g3 + g4;
  require(mg.square() && mg.rows() == h1 + h2, Err::DimensionMismatch,
          "law does not match the decomposition");
  require(factors.upper.rows() == h1 && factors.upper.cols() == h2 &&
              factors.lower.rows() == h2 && factors.lower.cols() == h1,
          Err::DimensionMismatch, "factor shapes do not match the splitting");

  const ZeroOrderCheck before = check_zero_order(mg, tol * std::max(1.0, operator_norm(mg.coeff(0))));
  const double slack = 1e-12 * std::max({1.0, c, d});
  require(before.d + slack >= d, Err::PrereqFailed,
          "claimed d = " + std::to_string(d) + " exceeds measured " + std::to_string(before.d));
  require(before.c_prime + slack >= c, Err::PrereqFailed,
          "claimed c = " + std::to_string(c) + " exceeds measured " +
              std::to_string(before.c_prime));

  const Matrix u0 = factors.upper.coeff(0);
  const Matrix l0 = factors.lower.coeff(0);
  const double fscale = std::max({1.0, u0.size() ? u0.norm() : 0.0, l0.size() ? l0.norm() : 0.0});
  const Matrix u13 = u0.block(0, 0, g1, g3), u24 = u0.block(g1, g3, g2, g4);
  const Matrix u23 = u0.block(g1, 0, g2, g3);
  const Matrix l31 = l0.block(0, 0, g3, g1), l32 = l0.block(0, g1, g3, g2);
  const Matrix l42 = l0.block(g3, g1, g4, g2);
  require(u23.norm() <= tol * fscale, Err::StructureViolation,
          "upper factor couples G3 into G2 at z = 0");
  require(l32.norm() <= tol * fscale, Err::StructureViolation,
          "lower factor couples G2 into G3 at z = 0");
  require((l31 - u13.adjoint()).norm() <= tol * fscale, Err::StructureViolation,
          "(G3,G1) block of the lower factor is not the adjoint of the (G1,G3) block");
  require((l42 - u24.adjoint()).norm() <= tol * fscale, Err::StructureViolation,
          "(G4,G2) block of the lower factor is not the adjoint of the (G2,G4) block");

  const double feps = std::min(factors.upper.eps, factors.lower.eps);
  const MaterialLaw uf = assemble_blocks(
      MaterialLaw::constant(Matrix::Identity(h1, h1), feps, 0), scale(sign, factors.upper),
      MaterialLaw::zero(h2, h1, feps, 0), MaterialLaw::constant(Matrix::Identity(h2, h2), feps, 0));
  const MaterialLaw lf = assemble_blocks(
      MaterialLaw::constant(Matrix::Identity(h1, h1), feps, 0), MaterialLaw::zero(h1, h2, feps, 0),
      scale(sign, factors.lower), MaterialLaw::constant(Matrix::Identity(h2, h2), feps, 0));

  GaussResult out;
  out.transformed = multiply(multiply(uf, mg, mg.truncation()), lf, mg.truncation());
  out.d_prime = d / (1.0 + operator_norm(u13) + std::pow(operator_norm(u13), 2));
  out.c_prime = c / (1.0 + operator_norm(u24) + std::pow(operator_norm(u24), 2));
  out.measured =
      check_zero_order(out.transformed, tol * std::max(1.0, operator_norm(mg.coeff(0))));

  const double range_shift = subspace_distance(before.range_basis, out.measured.range_basis);
  require(range_shift <= tol, Err::RangeChanged,
          "transformation moved the range of M(0) by " + std::to_string(range_shift));
  require(out.measured.d >= out.d_prime * (1.0 - 1e-7) - slack, Err::BoundViolated,
          "transformed law undercuts the guaranteed range constant");
  require(out.measured.c_prime >= out.c_prime * (1.0 - 1e-7) - slack, Err::BoundViolated,
          "transformed law undercuts the guaranteed nullspace constant");
  return out;
}

DiagonalizeResult diagonalize(const MaterialLaw& mg, const BlockDecomposition& dec, double c,
                              double d, double compat_tol, double tol) {
  const Index h1 = dec.dim[0] + dec.dim[1], h2 = dec.dim[2] + dec.dim[3];
  require(mg.square() && mg.rows() == h1 + h2, Err::DimensionMismatch,
          "law does not match the decomposition");
  DiagonalizeResult out;
  out.compat_residual = compatibility_residual(mg, dec);
  require(out.compat_residual <= compat_tol, Err::CompatibilityViolated,
          "mixed derivative blocks are incompatible (residual " +
              std::to_string(out.compat_residual) + ")");

  const int k = mg.truncation();
  const MaterialLaw m12 = block(mg, 0, h1, h1, h2);
  const MaterialLaw m21 = block(mg, h1, 0, h2, h1);
  const MaterialLaw m22 = block(mg, h1, h1, h2, h2);
  const InverseResult inv22 = invert_regular(m22, dec.dim[2], k + 2, tol);

  out.factor_upper = drop_pole(multiply(m12, inv22.inverse, k + 1), tol);
  out.factor_lower = drop_pole(multiply(inv22.inverse, m21, k + 1), tol);

  const GaussResult g =
      gauss_transform(mg, dec, {out.factor_upper, out.factor_lower}, -1.0, c, d, tol);
  out.transformed = g.transformed;
  out.d_prime = g.d_prime;
  out.c_prime = g.c_prime;

  const MaterialLaw r12 = block(out.transformed, 0, h1, h1, h2);
  const MaterialLaw r21 = block(out.transformed, h1, 0, h2, h1);
  out.offdiag_residual = std::max(law_magnitude(r12), law_magnitude(r21));
  return out;
}

}  // namespace evh
