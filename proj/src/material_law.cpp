#include "evh/material_law.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "evh/parallel.hpp"

namespace evh {

namespace {

constexpr int kSupSamples = 256;

double law_scale(const MaterialLaw& m) {
  double s = 0.0;
  if (m.pole) s = std::max(s, m.pole->cwiseAbs().maxCoeff());
  for (const auto& c : m.coeffs)
    if (c.size() > 0) s = std::max(s, c.cwiseAbs().maxCoeff());
  return s;
}

// Max-over-coefficients Frobenius distance, including the pole coefficient.
double law_distance(const MaterialLaw& a, const MaterialLaw& b) {
  double dist = 0.0;
  const int k = std::max(a.truncation(), b.truncation());
  for (int n = 0; n <= k; ++n) dist = std::max(dist, (a.coeff(n) - b.coeff(n)).norm());
  if (a.pole || b.pole) {
    const Matrix pa = a.pole ? *a.pole : Matrix(Matrix::Zero(a.rows(), a.cols()));
    const Matrix pb = b.pole ? *b.pole : Matrix(Matrix::Zero(b.rows(), b.cols()));
    dist = std::max(dist, (pa - pb).norm());
  }
  return dist;
}

MaterialLaw combine(const MaterialLaw& a, const MaterialLaw& b, Complex sb) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), Err::DimensionMismatch,
          "operand shapes differ in law addition");
  MaterialLaw out;
  out.eps = std::min(a.eps, b.eps);
  const int k = std::max(a.truncation(), b.truncation());
  out.coeffs.reserve(k + 1);
  for (int n = 0; n <= k; ++n) out.coeffs.push_back(a.coeff(n) + sb * b.coeff(n));
  if (a.pole || b.pole) {
    Matrix p = Matrix::Zero(a.rows(), a.cols());
    if (a.pole) p += *a.pole;
    if (b.pole) p += sb * *b.pole;
    out.pole = std::move(p);
  }
  return out;
}

// Limit of a sub-sequence: exact last element on a constant tail, otherwise a
// linear-in-1/n Richardson step over the final two entries.
struct TailLimit {
  MaterialLaw value;
  bool converged = false;
  bool extrapolated = false;
  double last_diff = 0.0;
};

TailLimit tail_limit(const std::vector<const MaterialLaw*>& seq, std::vector<double> idx,
                     double probe_tol) {
  TailLimit out{*seq.back(), false, false, 0.0};
  if (seq.size() == 1) {
    out.converged = true;
    return out;
  }
  const MaterialLaw& xn = *seq[seq.size() - 1];
  const MaterialLaw& xp = *seq[seq.size() - 2];
  out.last_diff = law_distance(xn, xp);
  if (out.last_diff > probe_tol) return out;
  out.converged = true;
  const double mag = std::max(law_scale(xn), 1.0);
  if (out.last_diff <= 1e-14 * mag) return out;  // constant tail: exact
  const double n1 = idx[idx.size() - 2], n2 = idx[idx.size() - 1];
  const Complex w2 = n2 / (n2 - n1), w1 = -n1 / (n2 - n1);
  out.value = combine(scale(w2, xn), scale(w1, xp), 1.0);
  out.extrapolated = true;
  return out;
}

}  // namespace

MaterialLaw scale(Complex s, const MaterialLaw& a) {
  MaterialLaw out = a;
  out.declared_sup = 0.0;
  for (auto& c : out.coeffs) c *= s;
  if (out.pole) *out.pole *= s;
  return out;
}

bool MaterialLaw::has_pole() const { return pole && pole->size() > 0 && pole->norm() > 0.0; }

Matrix MaterialLaw::coeff(int n) const {
  if (n >= 0 && n < static_cast<int>(coeffs.size())) return coeffs[n];
  return Matrix::Zero(rows(), cols());
}

MaterialLaw MaterialLaw::constant(const Matrix& c, double eps, int trunc) {
  MaterialLaw m;
  m.eps = eps;
  m.coeffs.assign(1, c);
  for (int n = 1; n <= trunc; ++n) m.coeffs.push_back(Matrix::Zero(c.rows(), c.cols()));
  m.validate();
  return m;
}

MaterialLaw MaterialLaw::from_coeffs(std::vector<Matrix> coeffs, double eps) {
  MaterialLaw m;
  m.eps = eps;
  m.coeffs = std::move(coeffs);
  m.validate();
  return m;
}

MaterialLaw MaterialLaw::zero(Index rows, Index cols, double eps, int trunc) {
  MaterialLaw m;
  m.eps = eps;
  m.coeffs.assign(static_cast<std::size_t>(trunc) + 1, Matrix::Zero(rows, cols));
  return m;
}

void MaterialLaw::validate() const {
  require(!coeffs.empty(), Err::StructureViolation, "law has no coefficients");
  require(eps > 0.0 && std::isfinite(eps), Err::StructureViolation, "radius must be positive");
  const Index r = coeffs.front().rows(), c = coeffs.front().cols();
  for (const auto& m : coeffs) {
    require(m.rows() == r && m.cols() == c, Err::DimensionMismatch,
            "coefficients must share one shape");
    require(all_finite(m), Err::StructureViolation, "non-finite coefficient entry");
  }
  if (pole) {
    require(pole->rows() == r && pole->cols() == c, Err::DimensionMismatch,
            "pole shape differs from coefficients");
    require(all_finite(*pole), Err::StructureViolation, "non-finite pole entry");
  }
}

Matrix evaluate(const MaterialLaw& m, Complex z) {
  require(std::abs(z) < m.eps, Err::EvalOutsideDisc,
          "|z| = " + std::to_string(std::abs(z)) + " outside B(0, " + std::to_string(m.eps) + ")");
  if (z == Complex(0.0, 0.0)) {
    require(!m.has_pole(), Err::PoleAtZero, "law has a z^{-1} part");
    return m.coeff(0);
  }
  // Horner evaluation of the polynomial part.
  Matrix acc = m.coeffs.back();
  for (int n = m.truncation() - 1; n >= 0; --n) acc = m.coeffs[n] + z * acc;
  if (m.has_pole()) acc += *m.pole / z;
  return acc;
}

double sup_bound(const MaterialLaw& m) {
  if (m.declared_sup > 0.0) return m.declared_sup;
  const double radius = m.eps / 2.0;
  double best = 0.0;
  for (int j = 0; j < kSupSamples; ++j) {
    const double phi = 2.0 * std::numbers::pi * j / kSupSamples;
    best = std::max(best, operator_norm(evaluate(m, radius * Complex(std::cos(phi), std::sin(phi)))));
  }
  return best;
}

bool sup_bound_is_estimated(const MaterialLaw& m) { return m.declared_sup <= 0.0; }

double coeff_bound(const MaterialLaw& m, int n) {
  require(n >= 0, Err::IndexOutOfRange, "coefficient index negative");
  require(!m.has_pole(), Err::PoleAtZero, "Cauchy bounds require a pole-free law");
  return sup_bound(m) * std::pow(2.0 / m.eps, n);
}

double tail_bound(const MaterialLaw& m, int k) {
  require(k >= 0, Err::IndexOutOfRange, "tail index negative");
  require(!m.has_pole(), Err::PoleAtZero, "Cauchy bounds require a pole-free law");
  return 2.0 * sup_bound(m) * std::pow(2.0 / m.eps, k);
}

void check_cif_consistency(const MaterialLaw& m, double rel_tol) {
  for (int n = 0; n <= m.truncation(); ++n) {
    const double norm = operator_norm(m.coeff(n));
    const double bound = coeff_bound(m, n);
    if (norm > bound * (1.0 + rel_tol))
      fail(Err::BoundViolated, "coefficient " + std::to_string(n) + " has norm " +
                                   std::to_string(norm) + " > Cauchy bound " + std::to_string(bound));
  }
}

ZeroOrderCheck check_zero_order(const MaterialLaw& m, double tol, double rank_tol) {
  require(m.square(), Err::DimensionMismatch, "zero-order check needs a square law");
  const Matrix m0 = m.coeff(0);
  ZeroOrderCheck out;
  const double asym = operator_norm(m0 - m0.adjoint());
  require(asym <= tol, Err::NotSelfadjoint,
          "||M(0) - M(0)*|| = " + std::to_string(asym) + " > " + std::to_string(tol));
  out.selfadjoint = true;

  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitian_part(m0));
  const RealVector& ev = es.eigenvalues();
  const double norm0 = m0.size() == 0 ? 0.0 : std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
  require(ev.size() == 0 || ev(0) >= -tol, Err::NotPSD,
          "M(0) has eigenvalue " + std::to_string(ev.size() ? ev(0) : 0.0) + " < -tol");
  out.psd = true;

  out.rank_tol = rank_tol > 0.0 ? rank_tol : 1e-9 * norm0;
  Index null_dim = 0;
  while (null_dim < ev.size() && ev(null_dim) <= out.rank_tol) ++null_dim;
  const Index range_dim = ev.size() - null_dim;
  out.null_basis = es.eigenvectors().leftCols(null_dim);
  out.range_basis = es.eigenvectors().rightCols(range_dim);
  out.d = range_dim == 0 ? std::numeric_limits<double>::infinity() : ev(null_dim);
  out.c_prime = null_dim == 0
                    ? std::numeric_limits<double>::infinity()
                    : smallest_eigenvalue(out.null_basis.adjoint() * m.derivative_at_zero() *
                                          out.null_basis);
  return out;
}

PositivityCertificate certify(const MaterialLaw& m, double c, double d) {
  require(c > 0.0 && d > 0.0, Err::PrereqFailed, "claimed constants must be positive");
  require(!m.has_pole(), Err::PrereqFailed, "certification requires a pole-free law");
  const ZeroOrderCheck zo = check_zero_order(m);
  const double slack = 1e-12 * std::max({1.0, c, d});
  require(zo.d + slack >= d, Err::PrereqFailed,
          "claimed d = " + std::to_string(d) + " exceeds measured " + std::to_string(zo.d));
  require(zo.c_prime + slack >= c, Err::PrereqFailed,
          "claimed c = " + std::to_string(c) + " exceeds measured " + std::to_string(zo.c_prime));

  PositivityCertificate cert;
  cert.c = c;
  cert.d = d;
  cert.sup_used = sup_bound(m);
  cert.sup_estimated = sup_bound_is_estimated(m);
  const double eps = m.eps, sup = cert.sup_used;
  cert.nu1 = ((3.0 / c) * std::pow(sup * 2.0 / eps, 2) + (2.0 / eps) * sup + 2.0 * c / 3.0) / d;
  cert.delta_hat = std::min(std::pow(eps / 2.0, 2) * c / (6.0 * sup), eps / 4.0);
  // r = 1 / (2 max{nu1, 1/delta_hat}), written reciprocal-free so halving stays exact.
  cert.r = std::min(1.0 / (2.0 * cert.nu1), cert.delta_hat / 2.0);
  cert.r = std::min(cert.r, 0.499 * eps);  // keep the certified disc inside B(0, eps)
  cert.c_out = c / 3.0;
  return cert;
}

PositivitySample sample_positivity(const MaterialLaw& m, const PositivityCertificate& cert,
                                   int num_samples, std::uint64_t seed, double tol) {
  require(num_samples > 0, Err::ConfigError, "need at least one sample");
  require(2.0 * cert.r < m.eps, Err::PrereqFailed, "certified disc leaves the analyticity disc");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Complex> points(static_cast<std::size_t>(num_samples));
  for (auto& z : points) {
    const double rho = cert.r * std::sqrt(unit(rng));
    const double phi = 2.0 * std::numbers::pi * unit(rng);
    z = cert.r + rho * Complex(std::cos(phi), std::sin(phi));
  }
  std::vector<double> mins(points.size());
  parallel_for(points.size(), [&](std::size_t i) {
    const Complex z = points[i];
    mins[i] = smallest_eigenvalue(evaluate(m, z) / z);
  });
  PositivitySample out;
  out.samples = num_samples;
  out.min_real = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (mins[i] < out.min_real) {
      out.min_real = mins[i];
      out.witness = points[i];
    }
  }
  out.ok = out.min_real >= cert.c_out - tol;
  return out;
}

SeriesLimit series_limit(std::span<const MaterialLaw> laws, double probe_tol,
                         SubsequencePolicy policy, std::span<const double> indices) {
  require(!laws.empty(), Err::ConfigError, "empty sequence");
  require(indices.empty() || indices.size() == laws.size(), Err::ConfigError,
          "index list must match the sequence length");
  const Index r = laws.front().rows(), c = laws.front().cols();
  const bool pole = laws.front().has_pole();
  for (const auto& m : laws) {
    require(m.rows() == r && m.cols() == c, Err::DimensionMismatch,
            "sequence members must share one shape");
    require(m.has_pole() == pole, Err::StructureViolation,
            "sequence members must share the pole structure");
  }

  std::vector<double> idx(laws.size());
  for (std::size_t i = 0; i < laws.size(); ++i)
    idx[i] = indices.empty() ? static_cast<double>(i + 1) : indices[i];

  std::vector<const MaterialLaw*> full(laws.size());
  for (std::size_t i = 0; i < laws.size(); ++i) full[i] = &laws[i];
  const TailLimit whole = tail_limit(full, idx, probe_tol);

  SeriesLimit out;
  out.final_residual = whole.last_diff;
  if (whole.converged) {
    out.limit = whole.value;
    out.converged = true;
    out.extrapolated = whole.extrapolated;
    return out;
  }

  // Parity split: positions 2, 4, ... (even) vs 1, 3, ... (odd).
  std::vector<const MaterialLaw*> even, odd;
  std::vector<double> even_idx, odd_idx;
  for (std::size_t i = 0; i < laws.size(); ++i) {
    if (i % 2 == 1) {
      even.push_back(&laws[i]);
      even_idx.push_back(idx[i]);
    } else {
      odd.push_back(&laws[i]);
      odd_idx.push_back(idx[i]);
    }
  }
  if (!even.empty() && !odd.empty()) {
    const TailLimit le = tail_limit(even, even_idx, probe_tol);
    const TailLimit lo = tail_limit(odd, odd_idx, probe_tol);
    if (le.converged && lo.converged) {
      const double split = law_distance(le.value, lo.value);
      if (split <= probe_tol) {  // decaying oscillation: both clusters agree
        out.limit = le.value;
        out.converged = true;
        out.extrapolated = le.extrapolated;
        return out;
      }
      out.clusters = 2;
      out.second_cluster = lo.value;
      if (policy == SubsequencePolicy::strict) {
        std::ostringstream msg;
        msg << "sequence splits into two clusters (distance " << split << ")";
        if (r == 1 && c == 1)
          msg << ": even limit " << le.value.coeff(0)(0, 0) << ", odd limit "
              << lo.value.coeff(0)(0, 0);
        fail(Err::NoConvergence, msg.str());
      }
      out.limit = le.value;
      out.converged = false;
      out.subsequence_used = true;
      out.extrapolated = le.extrapolated;
      return out;
    }
  }
  fail(Err::NoConvergence, "successive differences stay above probe_tol = " +
                               std::to_string(probe_tol) + " (last " +
                               std::to_string(whole.last_diff) + ")");
}

MaterialLaw add(const MaterialLaw& a, const MaterialLaw& b) { return combine(a, b, 1.0); }
MaterialLaw subtract(const MaterialLaw& a, const MaterialLaw& b) { return combine(a, b, -1.0); }

MaterialLaw multiply(const MaterialLaw& a, const MaterialLaw& b, int out_trunc) {
  require(a.cols() == b.rows(), Err::DimensionMismatch, "inner dimensions differ in law product");
  const int k = out_trunc >= 0 ? out_trunc : std::min(a.truncation(), b.truncation());
  MaterialLaw out;
  out.eps = std::min(a.eps, b.eps);
  if (a.has_pole() && b.has_pole()) {
    const Matrix second = *a.pole * *b.pole;
    const double scale = std::max(1.0, std::max(law_scale(a), law_scale(b)));
    require(second.cwiseAbs().maxCoeff() <= 1e-12 * scale, Err::StructureViolation,
            "product would carry a z^{-2} term");
  }
  Matrix p = Matrix::Zero(a.rows(), b.cols());
  if (a.has_pole()) p += *a.pole * b.coeff(0);
  if (b.has_pole()) p += a.coeff(0) * *b.pole;
  if (p.norm() > 0.0) out.pole = p;
  out.coeffs.reserve(k + 1);
  for (int n = 0; n <= k; ++n) {
    Matrix cn = Matrix::Zero(a.rows(), b.cols());
    for (int j = 0; j <= n; ++j) cn += a.coeff(j) * b.coeff(n - j);
    if (a.has_pole()) cn += *a.pole * b.coeff(n + 1);
    if (b.has_pole()) cn += a.coeff(n + 1) * *b.pole;
    out.coeffs.push_back(std::move(cn));
  }
  return out;
}

MaterialLaw inverse_analytic(const MaterialLaw& a, int out_trunc) {
  require(a.square(), Err::DimensionMismatch, "series inverse needs a square law");
  require(!a.has_pole(), Err::PoleAtZero, "series inverse needs a pole-free law");
  const int k = out_trunc >= 0 ? out_trunc : a.truncation();
  Eigen::FullPivLU<Matrix> lu(a.coeff(0));
  require(a.rows() == 0 || lu.isInvertible(), Err::SingularBlock,
          "zeroth coefficient is not invertible");
  const Matrix b0 = a.rows() == 0 ? Matrix(0, 0) : Matrix(lu.inverse());
  MaterialLaw out;
  out.eps = a.eps;
  out.coeffs.reserve(k + 1);
  out.coeffs.push_back(b0);
  for (int n = 1; n <= k; ++n) {
    Matrix acc = Matrix::Zero(a.rows(), a.cols());
    for (int j = 1; j <= n; ++j) acc += a.coeff(j) * out.coeffs[n - j];
    out.coeffs.push_back(-b0 * acc);
  }
  return out;
}

MaterialLaw shift_up(const MaterialLaw& a) {
  MaterialLaw out;
  out.eps = a.eps;
  out.coeffs.reserve(a.coeffs.size() + 1);
  out.coeffs.push_back(a.pole ? *a.pole : Matrix(Matrix::Zero(a.rows(), a.cols())));
  for (const auto& c : a.coeffs) out.coeffs.push_back(c);
  return out;
}

MaterialLaw shift_down(const MaterialLaw& a, double abs_tol) {
  require(!a.has_pole(), Err::StructureViolation, "division by z would create a double pole");
  const double head = a.coeff(0).size() == 0 ? 0.0 : a.coeff(0).cwiseAbs().maxCoeff();
  require(head <= abs_tol, Err::StructureViolation,
          "law is not divisible by z: |a(0)| = " + std::to_string(head));
  MaterialLaw out;
  out.eps = a.eps;
  if (a.truncation() >= 1)
    out.coeffs.assign(a.coeffs.begin() + 1, a.coeffs.end());
  else
    out.coeffs.assign(1, Matrix::Zero(a.rows(), a.cols()));
  return out;
}

MaterialLaw block(const MaterialLaw& a, Index r0, Index c0, Index nr, Index nc) {
  require(r0 >= 0 && c0 >= 0 && r0 + nr <= a.rows() && c0 + nc <= a.cols(),
          Err::IndexOutOfRange, "block exceeds law shape");
  MaterialLaw out;
  out.eps = a.eps;
  out.coeffs.reserve(a.coeffs.size());
  for (const auto& c : a.coeffs) out.coeffs.push_back(c.block(r0, c0, nr, nc));
  if (a.has_pole()) {
    Matrix p = a.pole->block(r0, c0, nr, nc);
    if (p.norm() > 0.0) out.pole = std::move(p);
  }
  return out;
}

MaterialLaw assemble_blocks(const MaterialLaw& a11, const MaterialLaw& a12,
                            const MaterialLaw& a21, const MaterialLaw& a22) {
  require(a11.rows() == a12.rows() && a21.rows() == a22.rows() && a11.cols() == a21.cols() &&
              a12.cols() == a22.cols(),
          Err::DimensionMismatch, "block shapes are not conformal");
  const Index r1 = a11.rows(), r2 = a21.rows(), c1 = a11.cols(), c2 = a12.cols();
  const int k = std::max(std::max(a11.truncation(), a12.truncation()),
                         std::max(a21.truncation(), a22.truncation()));
  MaterialLaw out;
  out.eps = std::min(std::min(a11.eps, a12.eps), std::min(a21.eps, a22.eps));
  out.coeffs.reserve(k + 1);
  for (int n = 0; n <= k; ++n) {
    Matrix cn(r1 + r2, c1 + c2);
    cn.topLeftCorner(r1, c1) = a11.coeff(n);
    cn.topRightCorner(r1, c2) = a12.coeff(n);
    cn.bottomLeftCorner(r2, c1) = a21.coeff(n);
    cn.bottomRightCorner(r2, c2) = a22.coeff(n);
    out.coeffs.push_back(std::move(cn));
  }
  if (a11.has_pole() || a12.has_pole() || a21.has_pole() || a22.has_pole()) {
    Matrix p = Matrix::Zero(r1 + r2, c1 + c2);
    if (a11.has_pole()) p.topLeftCorner(r1, c1) = *a11.pole;
    if (a12.has_pole()) p.topRightCorner(r1, c2) = *a12.pole;
    if (a21.has_pole()) p.bottomLeftCorner(r2, c1) = *a21.pole;
    if (a22.has_pole()) p.bottomRightCorner(r2, c2) = *a22.pole;
    out.pole = std::move(p);
  }
  return out;
}

MaterialLaw conjugate(const MaterialLaw& a, const Matrix& u) {
  require(a.square() && a.rows() == u.rows(), Err::DimensionMismatch,
          "conjugation frame does not match the law");
  MaterialLaw out;
  out.eps = a.eps;
  out.coeffs.reserve(a.coeffs.size());
  for (const auto& c : a.coeffs) out.coeffs.push_back(u.adjoint() * c * u);
  if (a.has_pole()) out.pole = u.adjoint() * *a.pole * u;
  return out;
}

MaterialLaw retrunc(const MaterialLaw& a, int trunc) {
  require(trunc >= 0, Err::IndexOutOfRange, "negative truncation");
  MaterialLaw out;
  out.eps = a.eps;
  out.pole = a.pole;
  out.declared_sup = 0.0;
  out.coeffs.reserve(trunc + 1);
  for (int n = 0; n <= trunc; ++n) out.coeffs.push_back(a.coeff(n));
  return out;
}

}  // namespace evh
