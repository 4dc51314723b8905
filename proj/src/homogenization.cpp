#include "evh/homogenization.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace evh {

namespace {

// Max coefficient-wise Frobenius gap, pole included.
double law_gap(const MaterialLaw& a, const MaterialLaw& b) {
  double g = 0.0;
  const int k = std::max(a.truncation(), b.truncation());
  for (int n = 0; n <= k; ++n) g = std::max(g, (a.coeff(n) - b.coeff(n)).norm());
  if (a.has_pole() || b.has_pole()) {
    const Matrix zp = Matrix::Zero(a.rows(), a.cols());
    g = std::max(g, ((a.has_pole() ? *a.pole : zp) - (b.has_pole() ? *b.pole : zp)).norm());
  }
  return g;
}

std::vector<double> resolve_indices(std::size_t count, const std::vector<double>& given) {
  require(given.empty() || given.size() == count, Err::ConfigError,
          "index list must match the ladder length");
  std::vector<double> idx(count);
  for (std::size_t i = 0; i < count; ++i) idx[i] = given.empty() ? double(i + 1) : given[i];
  return idx;
}

LadderDiagnostics ladder_diag(const std::vector<MaterialLaw>& seq, const std::vector<double>& idx,
                              const SeriesLimit& lim) {
  LadderDiagnostics d;
  d.indices = idx;
  for (std::size_t i = 0; i + 1 < seq.size(); ++i) d.residuals.push_back(law_gap(seq[i], seq[i + 1]));
  d.subsequence_used = lim.subsequence_used;
  d.extrapolated = lim.extrapolated;
  return d;
}

// lt^* a rt coefficientwise: a rectangular congruence factor between frames.
MaterialLaw frame_compress(const MaterialLaw& a, const Matrix& lt, const Matrix& rt) {
  MaterialLaw out;
  out.eps = a.eps;
  out.coeffs.reserve(a.coeffs.size());
  for (const auto& c : a.coeffs) out.coeffs.push_back(lt.adjoint() * c * rt);
  if (a.has_pole()) {
    Matrix p = lt.adjoint() * *a.pole * rt;
    if (p.norm() > 0.0) out.pole = std::move(p);
  }
  return out;
}

double finite_or(double x, double fallback) { return std::isfinite(x) ? x : fallback; }

}  // namespace

// ---------------------------------------------------------------------------
// Periodic coefficient fields
// ---------------------------------------------------------------------------

void PeriodicField::validate() const {
  require(!pieces.empty(), Err::ConfigError, "field has no pieces");
  const Index d = pieces.front().rows();
  for (const auto& p : pieces) {
    require(p.rows() == d && p.cols() == d, Err::DimensionMismatch,
            "field pieces must be square and share one size");
    require(all_finite(p), Err::StructureViolation, "non-finite field entry");
  }
  require(std::isfinite(alpha) && std::isfinite(beta) && beta > 0.0 && alpha <= beta,
          Err::ConfigError, "field bounds must satisfy alpha <= beta, beta > 0");
}

const Matrix& PeriodicField::value_at(double x) const {
  double frac = x - std::floor(x);
  if (frac >= 1.0) frac = 0.0;  // guard the rounding edge frac == 1
  auto idx = static_cast<std::size_t>(frac * count());
  if (idx >= pieces.size()) idx = pieces.size() - 1;
  return pieces[idx];
}

PeriodicField scalar_field(const std::vector<Complex>& values, double alpha, double beta) {
  PeriodicField f;
  f.alpha = alpha;
  f.beta = beta;
  f.pieces.reserve(values.size());
  for (const Complex v : values) f.pieces.push_back(Matrix::Constant(1, 1, v));
  f.validate();
  return f;
}

Matrix cell_average(const PeriodicField& f) {
  f.validate();
  Matrix acc = Matrix::Zero(f.dim(), f.dim());
  for (const auto& p : f.pieces) acc += p;
  return acc / double(f.count());
}

PeriodicField pointwise_inverse(const PeriodicField& f) {
  f.validate();
  require(f.alpha > 0.0, Err::PrereqFailed,
          "pointwise inverse needs a lower bound separating the field from 0");
  PeriodicField out;
  out.pieces.reserve(f.pieces.size());
  for (const auto& p : f.pieces) {
    Eigen::FullPivLU<Matrix> lu(p);
    require(lu.isInvertible(), Err::SingularPiece, "field piece is singular");
    out.pieces.push_back(lu.inverse());
  }
  // Valid for any piece with Re p >= alpha, ||p|| <= beta: ||p^{-1}|| <= 1/alpha
  // and Re p^{-1} >= alpha / beta^2.
  out.alpha = f.alpha / (f.beta * f.beta);
  out.beta = 1.0 / f.alpha;
  return out;
}

PeriodicField pointwise_shift(const PeriodicField& f, Complex z0) {
  f.validate();
  PeriodicField out = f;
  const Matrix eye = Matrix::Identity(f.dim(), f.dim());
  for (auto& p : out.pieces) p += z0 * eye;
  out.alpha = f.alpha + z0.real();
  out.beta = f.beta + std::abs(z0);
  return out;
}

Matrix harmonic_mean(const PeriodicField& f) {
  const Matrix avg = cell_average(pointwise_inverse(f));
  Eigen::FullPivLU<Matrix> lu(avg);
  require(lu.isInvertible(), Err::SingularBlock, "mean of the inverse field is singular");
  return lu.inverse();
}

Matrix sample_operator(const PeriodicField& f, int n, int m) {
  f.validate();
  require(n >= 1 && m >= 1, Err::ConfigError, "need positive oscillation count and grid size");
  const int period_cells = n * f.count();
  require(m % period_cells == 0, Err::AliasError,
          "grid of " + std::to_string(m) + " cells does not resolve " + std::to_string(n) +
              " oscillations of a " + std::to_string(f.count()) + "-piece field");
  const Index d = f.dim();
  Matrix out = Matrix::Zero(m * d, m * d);
  for (int j = 0; j < m; ++j) {
    const double x = (j + 0.5) / m;
    out.block(j * d, j * d, d, d) = f.value_at(n * x);
  }
  return out;
}

// ---------------------------------------------------------------------------
// G-limit with no spatial operator
// ---------------------------------------------------------------------------

MaterialLaw homogenize_ode(const std::vector<MaterialLaw>& laws, double probe_tol,
                           SubsequencePolicy policy, std::vector<double> indices,
                           LadderDiagnostics* diagnostics) {
  require(!laws.empty(), Err::ConfigError, "empty ladder");
  const std::vector<double> idx = resolve_indices(laws.size(), indices);
  const MaterialLaw& first = laws.front();
  require(first.square(), Err::DimensionMismatch, "laws must be square");

  const ZeroOrderCheck zo1 = check_zero_order(first);
  const Index rank = zo1.range_basis.cols();
  Matrix frame(first.rows(), first.rows());
  frame << zo1.range_basis, zo1.null_basis;

  int kmax = 0;
  for (const auto& m : laws) kmax = std::max(kmax, m.truncation());

  std::vector<MaterialLaw> inverses;
  inverses.reserve(laws.size());
  for (std::size_t i = 0; i < laws.size(); ++i) {
    const auto& m = laws[i];
    require(m.rows() == first.rows() && m.cols() == first.cols(), Err::DimensionMismatch,
            "ladder members must share one shape");
    const ZeroOrderCheck zo = check_zero_order(m);
    require(subspace_distance(zo.range_basis, zo1.range_basis) <= 1e-8, Err::HypothesisViolated,
            "zero-order range changes along the ladder (law " + std::to_string(i) + ")");
    inverses.push_back(invert_regular(conjugate(m, frame), rank, kmax + 2, 1e-8).inverse);
  }

  const SeriesLimit lim = series_limit(inverses, probe_tol, policy, idx);
  if (diagnostics) *diagnostics = ladder_diag(inverses, idx, lim);

  const MaterialLaw mu_g = invert_degenerate_hat(lim.limit, rank, kmax).inverse;
  const MaterialLaw mu = conjugate(mu_g, Matrix(frame.adjoint()));

  const double scale = std::max(1.0, operator_norm(mu.coeff(0)));
  const ZeroOrderCheck zmu = check_zero_order(mu, 1e-9 * scale);
  require(subspace_distance(zmu.range_basis, zo1.range_basis) <= 1e-8, Err::RangeChanged,
          "limit law does not preserve the zero-order range");
  return mu;
}

// ---------------------------------------------------------------------------
// Block G-limit (split supplied by the caller)
// ---------------------------------------------------------------------------

HomogenizationResult homogenize_p2(const std::vector<MaterialLaw>& laws, const Matrix& a_skew,
                                   Index split_index, double probe_tol, SubsequencePolicy policy,
                                   std::vector<double> indices) {
  require(!laws.empty(), Err::ConfigError, "empty ladder");
  const std::vector<double> idx = resolve_indices(laws.size(), indices);
  const MaterialLaw& first = laws.front();
  require(first.square(), Err::DimensionMismatch, "laws must be square");
  const Index h1 = split_index, h2 = first.rows() - split_index;
  require(h1 >= 0 && h2 >= 0, Err::IndexOutOfRange, "split index exceeds the law size");
  require(a_skew.rows() == h1 && a_skew.cols() == h1, Err::DimensionMismatch,
          "operator must act on the first block");
  const double askew_scale = std::max(1.0, operator_norm(a_skew));
  require(operator_norm(a_skew + a_skew.adjoint()) <= 1e-9 * askew_scale, Err::HypothesisViolated,
          "operator must be skew-Hermitian");

  // Hypothesis (i): one common zero-order range, uniformly positive on it.
  const ZeroOrderCheck zo1 = check_zero_order(first);
  int kmax = 0;
  for (std::size_t i = 0; i < laws.size(); ++i) {
    const auto& m = laws[i];
    require(m.rows() == first.rows() && m.cols() == first.cols(), Err::DimensionMismatch,
            "ladder members must share one shape");
    kmax = std::max(kmax, m.truncation());
    const ZeroOrderCheck zo = check_zero_order(m);
    require(subspace_distance(zo.range_basis, zo1.range_basis) <= 1e-8, Err::HypothesisViolated,
            "(i): zero-order range changes along the ladder (law " + std::to_string(i) + ")");
  }

  const BlockDecomposition dec = four_block(first, h1);
  const Index g3 = dec.dim[2];
  const Matrix f1 = dec.frame.topLeftCorner(h1, h1);
  const Matrix f2 = dec.frame.bottomRightCorner(h2, h2);

  // Hypothesis (ii): mixed-derivative compatibility on every ladder member.
  for (std::size_t i = 0; i < laws.size(); ++i) {
    const double fscale = std::max(1.0, operator_norm(laws[i].coeff(1)));
    const double res = compatibility_residual(laws[i], dec);
    require(res <= 1e-8 * fscale, Err::HypothesisViolated,
            "(ii): compatibility residual " + std::to_string(res) + " on law " + std::to_string(i));
  }

  // Per-law Schur expressions, kept in the input coordinates throughout.
  const int kf = kmax + 4;
  std::vector<MaterialLaw> mu1, mu2, mu3, mu4;
  mu1.reserve(laws.size());
  mu2.reserve(laws.size());
  mu3.reserve(laws.size());
  mu4.reserve(laws.size());
  for (const auto& m : laws) {
    const MaterialLaw m11 = block(m, 0, 0, h1, h1);
    const MaterialLaw m12 = block(m, 0, h1, h1, h2);
    const MaterialLaw m21 = block(m, h1, 0, h2, h1);
    const MaterialLaw m22 = block(m, h1, h1, h2, h2);
    const InverseResult ir = invert_regular(conjugate(m22, f2), g3, kf, 1e-8);
    const MaterialLaw inv22 = conjugate(ir.inverse, Matrix(f2.adjoint()));
    const double pscale = 1e-7;
    // The poles cancel structurally: M(0) vanishes on the nullspace columns
    // that carry the z^{-1} part of the inverse.
    const MaterialLaw m12inv = drop_pole(multiply(m12, inv22, kmax + 1), pscale);
    const MaterialLaw invm21 = drop_pole(multiply(inv22, m21, kmax + 1), pscale);
    mu4.push_back(m12inv);
    mu3.push_back(invm21);
    mu1.push_back(subtract(retrunc(m11, kmax), multiply(m12inv, m21, kmax)));
    mu2.push_back(inv22);
  }

  HomogenizationResult out;
  const SeriesLimit l1 = series_limit(mu1, probe_tol, policy, idx);
  const SeriesLimit l2 = series_limit(mu2, probe_tol, policy, idx);
  const SeriesLimit l3 = series_limit(mu3, probe_tol, policy, idx);
  const SeriesLimit l4 = series_limit(mu4, probe_tol, policy, idx);
  out.eta1 = l1.limit;
  out.eta2 = l2.limit;
  out.eta3 = l3.limit;
  out.eta4 = l4.limit;
  out.diagnostics = {ladder_diag(mu1, idx, l1), ladder_diag(mu2, idx, l2),
                     ladder_diag(mu3, idx, l3), ladder_diag(mu4, idx, l4)};
  out.flagged_subsequence =
      l1.subsequence_used || l2.subsequence_used || l3.subsequence_used || l4.subsequence_used;

  // Re-invert the Laurent limit of the (2,2) inverses.
  const InverseResult ih = invert_degenerate_hat(conjugate(out.eta2, f2), g3, kmax + 2);
  out.eta2_inverse = conjugate(ih.inverse, Matrix(f2.adjoint()));

  // N = [[eta1 + eta4 inv(eta2) eta3, eta4 inv(eta2)], [inv(eta2) eta3, inv(eta2)]].
  const MaterialLaw cross21 = multiply(out.eta2_inverse, out.eta3, kmax);
  const MaterialLaw n11 = add(retrunc(out.eta1, kmax), multiply(out.eta4, cross21, kmax));
  const MaterialLaw n12 = multiply(out.eta4, out.eta2_inverse, kmax);
  const MaterialLaw n22 = retrunc(out.eta2_inverse, kmax);
  out.limit = assemble_blocks(n11, n12, cross21, n22);
  out.frame = Matrix::Identity(first.rows(), first.rows());

  const double nscale = std::max(1.0, operator_norm(out.limit.coeff(0)));
  const ZeroOrderCheck zon = check_zero_order(out.limit, 1e-8 * nscale);
  out.range_preserved = subspace_distance(zon.range_basis, zo1.range_basis) <= 1e-8;

  // Certification: N is congruent to diag(eta1, inv(eta2)) through the
  // triangular factors (eta4, eta3); propagate that diagonal's constants.
  const MaterialLaw mid_h =
      assemble_blocks(retrunc(out.eta1, kmax), MaterialLaw::zero(h1, h2, first.eps, 0),
                      MaterialLaw::zero(h2, h1, first.eps, 0), n22);
  const MaterialLaw mid_g = dec.to_g(mid_h);
  const double mscale = std::max(1.0, operator_norm(mid_g.coeff(0)));
  const ZeroOrderCheck zom = check_zero_order(mid_g, 1e-8 * mscale);
  const double c_mid = finite_or(zom.c_prime, 1.0);
  const double d_mid = finite_or(zom.d, 1.0);
  GaussFactors factors{frame_compress(out.eta4, f1, f2), frame_compress(out.eta3, f2, f1)};
  const GaussResult g = gauss_transform(mid_g, dec, factors, 1.0, c_mid, d_mid);
  out.d_prime = g.d_prime;
  out.c_prime = g.c_prime;
  out.certificate =
      certify(g.transformed, finite_or(g.c_prime, 1.0), finite_or(g.d_prime, 1.0));
  return out;
}

// ---------------------------------------------------------------------------
// Split along the nullspace of a skew-Hermitian operator
// ---------------------------------------------------------------------------

HomogenizationResult homogenize_nullsplit(const std::vector<MaterialLaw>& laws,
                                          const Matrix& a_skew, double rank_tol, double probe_tol,
                                          SubsequencePolicy policy, std::vector<double> indices) {
  require(!laws.empty(), Err::ConfigError, "empty ladder");
  const Index n = laws.front().rows();
  require(a_skew.rows() == n && a_skew.cols() == n, Err::DimensionMismatch,
          "operator does not match the law size");
  const double ascale = std::max(1.0, operator_norm(a_skew));
  require(operator_norm(a_skew + a_skew.adjoint()) <= 1e-9 * ascale, Err::HypothesisViolated,
          "operator must be skew-Hermitian");

  // i A is Hermitian; its kernel is N(A).
  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitian_part(Complex(0.0, 1.0) * a_skew));
  const RealVector& ev = es.eigenvalues();
  const double cut = rank_tol > 0.0 ? rank_tol : 1e-9 * ascale;
  std::vector<int> keep, drop;
  for (int j = 0; j < ev.size(); ++j) (std::abs(ev(j)) > cut ? keep : drop).push_back(j);
  if (!keep.empty() && !drop.empty()) {
    double amax = 0.0, kmin = std::numeric_limits<double>::infinity();
    for (int j : drop) amax = std::max(amax, std::abs(ev(j)));
    for (int j : keep) kmin = std::min(kmin, std::abs(ev(j)));
    require(amax == 0.0 || kmin >= 10.0 * amax, Err::AmbiguousRank,
            "no clear spectral gap at the nullspace cut (" + std::to_string(amax) + " vs " +
                std::to_string(kmin) + ")");
  }
  const Index h1 = static_cast<Index>(keep.size());
  Matrix u(n, n);
  for (std::size_t j = 0; j < keep.size(); ++j) u.col(Index(j)) = es.eigenvectors().col(keep[j]);
  for (std::size_t j = 0; j < drop.size(); ++j)
    u.col(h1 + Index(j)) = es.eigenvectors().col(drop[j]);

  std::vector<MaterialLaw> relabelled;
  relabelled.reserve(laws.size());
  for (const auto& m : laws) relabelled.push_back(conjugate(m, u));
  const Matrix a_rel = u.leftCols(h1).adjoint() * a_skew * u.leftCols(h1);

  HomogenizationResult out =
      homogenize_p2(relabelled, a_rel, h1, probe_tol, policy, std::move(indices));
  out.limit = conjugate(out.limit, Matrix(u.adjoint()));
  out.frame = u;
  return out;
}

// ---------------------------------------------------------------------------
// 1-D heat limit system
// ---------------------------------------------------------------------------

HeatLimitSystem heat_limit_system(const PeriodicField& kappa, int m, std::vector<int> levels,
                                  int probe_count) {
  kappa.validate();
  require(kappa.dim() == 1, Err::ConfigError, "scalar conductivity fields only");
  require(kappa.alpha > 0.0, Err::HypothesisViolated, "conductivity must be uniformly positive");
  for (const auto& p : kappa.pieces)
    require(std::abs(p(0, 0).imag()) <= 1e-12 * std::abs(p(0, 0)) && p(0, 0).real() > 0.0,
            Err::HypothesisViolated, "conductivity must be real and positive");
  require(m >= 2, Err::GridTooCoarse, "need at least two grid cells");
  require(probe_count >= 1, Err::ConfigError, "need at least one probe");

  HeatLimitSystem sys;
  sys.grid_h = 1.0 / m;

  // Alias-free prefix of the requested ladder.
  for (const int n : levels) {
    if (n < 1 || m % (n * kappa.count()) != 0) break;
    sys.levels.push_back(n);
  }
  require(sys.levels.size() >= 2, Err::GridTooCoarse,
          "grid resolves fewer than two ladder levels without aliasing");

  // Flux-space frames: constants and their orthogonal (mean-zero) complement.
  Matrix q = Matrix::Constant(m, 1, Complex(1.0 / std::sqrt(double(m)), 0.0));
  Eigen::HouseholderQR<Matrix> qr(q);
  const Matrix full = qr.householderQ() * Matrix::Identity(m, m);
  sys.q_frame = q;
  sys.p_frame = full.rightCols(m - 1);

  // Dirichlet gradient on interior nodes; the divergence is minus its adjoint.
  Matrix grad0 = Matrix::Zero(m, m - 1);
  for (int i = 0; i < m; ++i) {
    if (i <= m - 2) grad0(i, i) = Complex(m, 0.0);
    if (i >= 1) grad0(i, i - 1) = Complex(-m, 0.0);
  }
  const Matrix div = -grad0.adjoint().eval();
  const Index t = m - 1;  // sizes: theta (m-1), q1 (m-1), q2 (1)
  Matrix a_op = Matrix::Zero(2 * t + 1, 2 * t + 1);
  const Matrix a21 = sys.p_frame.adjoint() * grad0;
  a_op.block(t, 0, t, t) = a21;
  a_op.block(0, t, t, t) = -a21.adjoint();
  const Matrix a31 = sys.q_frame.adjoint() * grad0;
  a_op.block(2 * t, 0, 1, t) = a31;
  a_op.block(0, 2 * t, t, 1) = -a31.adjoint();
  sys.a_op = a_op;

  // Smooth mean-zero probes: monomials compressed onto the mean-zero frame.
  const int pc = std::min<int>(probe_count, m - 1);
  Matrix v = Matrix::Zero(m, pc);
  for (int j = 0; j < m; ++j) {
    const double x = (j + 0.5) / m;
    for (int k = 0; k < pc; ++k) v(j, k) = Complex(std::pow(x, k + 1), 0.0);
  }
  Eigen::ColPivHouseholderQR<Matrix> pqr(Matrix(sys.p_frame.adjoint() * v));
  const Index pr = std::max<Index>(pqr.rank(), 1);
  const Matrix probes = pqr.householderQ() * Matrix::Identity(m - 1, pr);

  const PeriodicField kinv = pointwise_inverse(kappa);
  for (const int n : sys.levels) {
    const Matrix ki = sample_operator(kinv, n, m);
    const Matrix pk = sys.p_frame.adjoint() * ki * sys.p_frame;
    const Matrix pq = sys.p_frame.adjoint() * ki * sys.q_frame;
    const Complex qq = (sys.q_frame.adjoint() * ki * sys.q_frame)(0, 0);
    const Matrix corr = pq * pq.adjoint() / qq;
    const Matrix t1 = pk - corr;
    sys.correction_raw.push_back(operator_norm(corr));
    sys.correction_probe.push_back((probes.adjoint() * corr * probes).norm());
    const Matrix compressed = probes.adjoint() * t1 * probes;
    double mean = 0.0;
    for (Index k = 0; k < pr; ++k) mean += compressed(k, k).real();
    mean /= double(pr);
    sys.keff_level.push_back(1.0 / mean);
  }

  const std::size_t last = sys.keff_level.size() - 1;
  const double n2 = sys.levels[last], n1 = sys.levels[last - 1];
  sys.keff = (n2 * sys.keff_level[last] - n1 * sys.keff_level[last - 1]) / (n2 - n1);
  sys.keff_exact = harmonic_mean(kappa)(0, 0).real();

  // Limit law: the constant-flux block keeps the harmonic mean exactly, the
  // mean-zero block carries the cell average of the inverse.
  const double kinv_mean = cell_average(kinv)(0, 0).real();
  Matrix m0 = Matrix::Zero(2 * t + 1, 2 * t + 1);
  m0.topLeftCorner(t, t) = Matrix::Identity(t, t);
  Matrix mid = Matrix::Zero(2 * t + 1, 2 * t + 1);
  mid.block(t, t, t, t) = kinv_mean * Matrix::Identity(t, t);
  mid(2 * t, 2 * t) = Complex(sys.keff_exact, 0.0);
  sys.law = MaterialLaw::from_coeffs({std::move(m0), std::move(mid)}, 2.0);
  return sys;
}

// ---------------------------------------------------------------------------
// G-convergence probe checker
// ---------------------------------------------------------------------------

GConvergenceReport check_g_convergence(const std::vector<SolveMap>& solvers,
                                       const ApplyMap& candidate_apply,
                                       const std::vector<Vector>& probes, double tol) {
  require(!solvers.empty(), Err::ConfigError, "need at least one solver");
  require(!probes.empty(), Err::ConfigError, "need at least one probe");
  const Index m = probes.front().size();
  require(m > 0, Err::ConfigError, "empty probe");
  Matrix pmat(m, Index(probes.size()));
  for (std::size_t j = 0; j < probes.size(); ++j) {
    require(probes[j].size() == m, Err::DimensionMismatch, "probes must share one length");
    pmat.col(Index(j)) = probes[j];
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(pmat);
  const Index r = std::max<Index>(qr.rank(), 1);
  const Matrix phi = qr.householderQ() * Matrix::Identity(m, r);

  GConvergenceReport rep;
  rep.probes.resize(probes.size());
  rep.slowest_probe = 0;
  for (std::size_t j = 0; j < probes.size(); ++j) {
    const Vector& f = probes[j];
    Vector u_last, u_prev;
    for (std::size_t s = 0; s < solvers.size(); ++s) {
      Vector u = solvers[s](f);
      require(u.size() == m, Err::DimensionMismatch, "solver output does not match the probe");
      u_prev = std::move(u_last);
      u_last = std::move(u);
    }
    const Vector y_last = phi.adjoint() * u_last;
    const Vector w_last = phi.adjoint() * candidate_apply(u_last);
    GConvergenceProbe& p = rep.probes[j];
    Vector y_inf = y_last, w_inf = w_last;
    if (solvers.size() >= 2) {
      // Geometric ladder: one Richardson step over the last two solvers.
      y_inf = 2.0 * y_last - Vector(phi.adjoint() * u_prev);
      w_inf = 2.0 * w_last - Vector(phi.adjoint() * candidate_apply(u_prev));
      p.moment_drift = (y_last - phi.adjoint() * u_prev).norm();
    }
    const double yn = std::max(y_inf.norm(), 1e-300);
    p.implied_minus_candidate = (w_inf - phi.adjoint() * f).norm() / yn;
    const double un = std::max(u_last.norm(), 1e-300);
    p.equation_residual = (candidate_apply(u_last) - f).norm() / un;

    rep.max_weak_residual = std::max(rep.max_weak_residual, p.implied_minus_candidate);
    rep.max_equation_residual = std::max(rep.max_equation_residual, p.equation_residual);
    if (p.moment_drift > rep.max_moment_drift) {
      rep.max_moment_drift = p.moment_drift;
      rep.slowest_probe = int(j);
    }
  }
  rep.accepted = rep.max_weak_residual <= tol;
  return rep;
}

}  // namespace evh
