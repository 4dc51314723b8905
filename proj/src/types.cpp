#include "evh/types.hpp"

#include <Eigen/SVD>
#include <algorithm>

namespace evh {

const char* to_string(Err code) noexcept {
  switch (code) {
    case Err::EvalOutsideDisc: return "EvalOutsideDisc";
    case Err::PoleAtZero: return "PoleAtZero";
    case Err::BoundViolated: return "BoundViolated";
    case Err::NotSelfadjoint: return "NotSelfadjoint";
    case Err::NotPSD: return "NotPSD";
    case Err::NoConvergence: return "NoConvergence";
    case Err::PrereqFailed: return "PrereqFailed";
    case Err::StructureViolation: return "StructureViolation";
    case Err::DegenerateBlock: return "DegenerateBlock";
    case Err::RangeChanged: return "RangeChanged";
    case Err::CompatibilityViolated: return "CompatibilityViolated";
    case Err::SingularBlock: return "SingularBlock";
    case Err::HypothesisViolated: return "HypothesisViolated";
    case Err::SingularFrequency: return "SingularFrequency";
    case Err::GridTooCoarse: return "GridTooCoarse";
    case Err::AliasError: return "AliasError";
    case Err::IndexOutOfRange: return "IndexOutOfRange";
    case Err::ConditionViolated: return "ConditionViolated";
    case Err::SingularPiece: return "SingularPiece";
    case Err::AmbiguousRank: return "AmbiguousRank";
    case Err::DimensionMismatch: return "DimensionMismatch";
    case Err::ConfigError: return "ConfigError";
    case Err::IoError: return "IoError";
  }
  return "UnknownError";
}

bool is_hypothesis_violation(Err code) noexcept {
  switch (code) {
    case Err::EvalOutsideDisc:
    case Err::PoleAtZero:
    case Err::BoundViolated:
    case Err::NotSelfadjoint:
    case Err::NotPSD:
    case Err::NoConvergence:
    case Err::PrereqFailed:
    case Err::StructureViolation:
    case Err::DegenerateBlock:
    case Err::RangeChanged:
    case Err::CompatibilityViolated:
    case Err::SingularBlock:
    case Err::HypothesisViolated:
    case Err::SingularFrequency:
    case Err::AliasError:
    case Err::ConditionViolated:
    case Err::SingularPiece:
    case Err::AmbiguousRank:
      return true;
    case Err::GridTooCoarse:
    case Err::IndexOutOfRange:
    case Err::DimensionMismatch:
    case Err::ConfigError:
    case Err::IoError:
      return false;
  }
  return false;
}

Matrix hermitian_part(const Matrix& x) { return 0.5 * (x + x.adjoint()); }

double operator_norm(const Matrix& x) {
  if (x.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(x);
  return svd.singularValues()(0);
}

double smallest_eigenvalue(const Matrix& hermitian) {
  if (hermitian.size() == 0) return std::numeric_limits<double>::infinity();
  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitian_part(hermitian), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

bool all_finite(const Matrix& x) { return x.allFinite(); }

double subspace_distance(const Matrix& u, const Matrix& v) {
  if (u.cols() != v.cols()) return 1.0;
  if (u.cols() == 0) return 0.0;
  // For equal-dimensional subspaces with orthonormal columns,
  // sin(theta_max) = ||(I - V V*) U||_2; unlike sqrt(1 - sigma_min^2) this
  // form keeps full precision for nearly coincident subspaces.
  return operator_norm(u - v * (v.adjoint() * u));
}

}  // namespace evh
