#pragma once

#include <string>
#include <vector>

#include "evh/evolution.hpp"
#include "evh/homogenization.hpp"
#include "evh/material_law.hpp"
#include "evh/types.hpp"

namespace evh {

// ---------------------------------------------------------------------------
// Discrete spatial operators
// ---------------------------------------------------------------------------

/// 1-D forward-difference gradient with Dirichlet ends and its exact negative
/// adjoint, assembled into the skew-Hermitian first-order block operator
///   A = [[0, div], [grad0, 0]]
/// acting on (temperature, flux) = (cells-1, cells) coordinates.
struct SpatialOperatorPair {
  Matrix grad0;    // cells x (cells-1), entries +-1/h
  Matrix div;      // (cells-1) x cells, == -grad0^* bit for bit
  Matrix a_block;  // [[0, div], [grad0, 0]], skew-Hermitian by construction
  double h = 0.0;  // grid spacing length / cells
};

SpatialOperatorPair build_grad_div_1d(int cells, double length = 1.0);

// ---------------------------------------------------------------------------
// Nullspace splitting of a skew-Hermitian operator
// ---------------------------------------------------------------------------

/// Orthonormal frames splitting the space along N(A): p spans N(A)^perp (the
/// range of A), q spans N(A). Satisfies p^*q = 0 and p p^* + q q^* = I.
struct ProjectionPair {
  Matrix p;
  Matrix q;
  double rank_tol = 0.0;  // absolute eigenvalue cut that was applied
};

/// Splits along the kernel of a skew-Hermitian A via the spectrum of i*A.
/// rank_tol = 0 selects 1e-9 * max(1, ||A||); a spectral gap of less than one
/// decade around the cut throws AmbiguousRank, mirroring the limit machinery.
ProjectionPair nullspace_projections(const Matrix& a, double rank_tol = 0.0);

// ---------------------------------------------------------------------------
// Finite-scale counterexample presets
// ---------------------------------------------------------------------------

/// Oscillating zero-order problem: A = i*I on an m-point grid and
/// M_n(z) = z * a(n x) with a the two-phase field taking values 1 and 2.
/// The frequency symbol collapses to a(x) + i independently of the weight, so
/// the solution is (a(n x) + i)^{-1} f pointwise and the spatial mean of u/f
/// equals mean((a+i)^{-1}) = (9-7i)/20 for every admissible n: the limit of
/// the solution operators is a multiplication operator again, but its
/// coefficient is not the mean of a shifted by i.
EvolutionProblem preset_counterexample_compactness(int n, int grid);

/// Scalar ladder M_n(z) = z/n: every member is strictly positive for fixed n,
/// but the constants collapse and the solution norms grow like n * ||f||.
MaterialLaw preset_counterexample_positivity(int n);

/// Rank-one instantaneous law M_n(z) = P_n + z (I - P_n) with P_n the
/// orthogonal projector onto the n-th basis vector (1-based; IndexOutOfRange
/// when n exceeds dim). Along the ladder the range of M_n(0) rotates, so no
/// common splitting exists; against any fixed probe phi_m with m < n the
/// solution satisfies <u_n, phi_m> = <f, phi_m> exactly. Finite-dimensional
/// illustration only: the rotation is an artifact of the changing frame.
MaterialLaw preset_counterexample_range(Index dim, Index n);

// ---------------------------------------------------------------------------
// 1-D heat law with a sharp certificate
// ---------------------------------------------------------------------------

struct HeatPreset {
  SpatialOperatorPair ops;
  MaterialLaw law;  // diag(I_{m-1}, z * kappa(n x)^{-1}) on the midpoint grid
  PositivityCertificate cert;
};

/// Fine-scale heat law at oscillation count n on an m-cell grid, with the
/// sharp hand-built certificate: Re z^{-1} M(z) splits into Re(z^{-1}) on the
/// temperature block and Re kappa^{-1} on the flux block, so on B(r, r) the
/// law is a (min(1/(2r), 1/beta))-law for every 2r < eps. The stored
/// certificate fixes r = 1/2, giving c_out = min(1, 1/beta) and the natural
/// time weight 1.25 instead of the generic machinery's much smaller radius.
HeatPreset preset_heat_1d(const PeriodicField& kappa, int n, int m);

// ---------------------------------------------------------------------------
// Coupled thermo-electro-magneto-elastic law
// ---------------------------------------------------------------------------

/// Coefficient blocks of the coupled law on (velocity, stress, electric
/// field, magnetic field, temperature, heat flux). The temperature and flux
/// blocks share alpha and kappa, so they must have the same size dth.
struct ThermopiezoBlocks {
  Matrix rho0;          // mass density            (dv x dv)
  Matrix stiffness;     // elasticity C            (dT x dT)
  Matrix permittivity;  // dielectric constant     (dE x dE)
  Matrix permeability;  // magnetic constant       (dH x dH)
  Matrix q0;            // instantaneous conduction (dth x dth)
  Matrix q1;            // relaxed conduction       (dth x dth)
  Matrix alpha;         // thermal capacity        (dth x dth)
  Matrix kappa;         // conductivity            (dth x dth)
  Matrix d;             // piezoelectric coupling   (dT x dE)
  Matrix lambda;        // thermoelastic coupling   (dT x dth)
  Matrix p;             // pyroelectric coupling    (dE x dth)
};

/// All blocks identity, couplings zero (satisfies condition one).
ThermopiezoBlocks identity_thermopiezo(Index dv, Index dt, Index de, Index dh, Index dth);

/// The two admissible coefficient regimes. Condition one asks q0 to be
/// selfadjoint strictly positive; condition two instead asks q1 > 0 with
/// q1 kappa^{-1} = kappa^{-1} q1 and q0 = 0, which moves the flux block from
/// the instantaneous range into the first-order nullspace part.
enum class TpzCondition { one, two };

struct ThermopiezoLaw {
  MaterialLaw law;
  PositivityCertificate cert;
  Index split = 0;  // rows of the instantaneous (v,T,E,H,theta) block
};

/// Assembles the full law
///   M(z) = diag(M11, q0 + sum_{k>=1} (-1)^{k-1} z^k q1 (kappa^{-1} alpha)^{k-1} kappa^{-1})
/// where M11 is the z-independent coupled block, and certifies it through the
/// triangular congruence M11 = L diag(rho0, C^{-1}, eps, mu, alpha - p* eps^{-1} p) L*.
/// Throws ConditionViolated naming the first coefficient block that breaks
/// the selected condition.
ThermopiezoLaw build_thermopiezo_law(const ThermopiezoBlocks& b, TpzCondition cond);

// ---------------------------------------------------------------------------
// Preset catalog
// ---------------------------------------------------------------------------

struct PresetInfo {
  std::string id;
  std::string summary;
};

/// Ids understood by the command line runner.
std::vector<PresetInfo> preset_catalog();

/// Two-phase scalar conductivity alternating 1 and hi.
PeriodicField preset_two_phase(double hi);

}  // namespace evh
