#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>

namespace evh {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Failure categories. Hypothesis violations describe inputs that break a
/// mathematical precondition (the CLI maps them to exit code 2); the rest are
/// configuration or internal errors (exit code 1).
enum class Err {
  EvalOutsideDisc,
  PoleAtZero,
  BoundViolated,
  NotSelfadjoint,
  NotPSD,
  NoConvergence,
  PrereqFailed,
  StructureViolation,
  DegenerateBlock,
  RangeChanged,
  CompatibilityViolated,
  SingularBlock,
  HypothesisViolated,
  SingularFrequency,
  GridTooCoarse,
  AliasError,
  IndexOutOfRange,
  ConditionViolated,
  SingularPiece,
  AmbiguousRank,
  DimensionMismatch,
  ConfigError,
  IoError,
};

const char* to_string(Err code) noexcept;
bool is_hypothesis_violation(Err code) noexcept;

class Error : public std::runtime_error {
public:
  Error(Err code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
  Err code() const noexcept { return code_; }

private:
  Err code_;
};

[[noreturn]] inline void fail(Err code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, Err code, const std::string& what) {
  if (!cond) fail(code, what);
}

/// (X + X*)/2.
Matrix hermitian_part(const Matrix& x);

/// Spectral norm (largest singular value). Exact SVD; intended for dense
/// operator blocks at desk scale.
double operator_norm(const Matrix& x);

/// Smallest eigenvalue of a Hermitian matrix (input is symmetrized first).
double smallest_eigenvalue(const Matrix& hermitian);

bool all_finite(const Matrix& x);

/// Distance between the subspaces spanned by the orthonormal columns of u and
/// v, measured as sin of the largest principal angle. Returns 1 when the
/// dimensions differ; 0 when both are empty.
double subspace_distance(const Matrix& u, const Matrix& v);

}  // namespace evh
