#pragma once

#include <string>
#include <vector>

#include <evh/homogenization.hpp>
#include <evh/material_law.hpp>
#include <evh/types.hpp>

namespace evh {

/// Default exponential weight for a law with analyticity radius eps and a
/// positivity certificate on B(r, r):  max{ 2/eps, 1.25/(2r) }.  The first
/// term keeps every evaluation point 1/(i xi + nu) well inside B(0, eps); the
/// second keeps the whole line { Re z^{-1} = nu } inside the certified disc
/// with a 25% margin.  Certificates with r = 0 contribute nothing.
double default_weight(const MaterialLaw& m, const PositivityCertificate& cert);

/// One evolution equation  (d/dt) M(d/dt^{-1}) u + A u = f  posed on a uniform
/// periodic time grid t_k = t0 + k dt, dt = (t1 - t0)/num_samples.  The grid
/// window must be wide enough that the weighted forcing e^{-nu t} f(t) decays
/// to numerical zero at both ends; the periodic transform then commits no
/// wrap-around crime.
struct EvolutionProblem {
  Matrix a_op;                 // skew-hermitian spatial part
  MaterialLaw m;               // material law; evaluated at z = 1/(i xi + nu)
  PositivityCertificate cert;  // optional; r > 0 arms the nu > 1/(2r) gate
  double nu = 0.0;             // weight; 0 = default_weight(m, cert)
  double t0 = 0.0;
  double t1 = 1.0;
  int num_samples = 0;         // even, >= 8
  std::vector<Vector> f;       // forcing samples, one per grid point

  /// Effective weight (nu or the default when nu == 0).
  double weight() const;

  /// Structural gates: square matching dims, ||A + A*|| <= 1e-12 ||A||
  /// (HypothesisViolated), even num_samples >= 8 and t1 > t0 (ConfigError),
  /// nu * eps > 1 and nu * 2r > 1 when certified (PrereqFailed), and relative
  /// end decay of e^{-nu t} f below 1e-10 (GridTooCoarse).
  void validate() const;
};

struct SolutionReport {
  std::vector<Vector> u;      // solution samples (unweighted coordinates)
  std::vector<double> times;  // matching grid points
  double nu = 0.0;            // weight actually used
  double op_norm_est = 0.0;   // ||u||_nu / ||f||_nu for this forcing
  double causal_residual = 0.0;  // midpoint truncation probe, relative
  double frequency_conditioning = 0.0;  // worst per-bin condition estimate
  double max_freq_residual = 0.0;  // worst bin residual, relative to the
                                   // largest bin amplitude of the data
  double nyquist_fraction = 0.0;   // Nyquist-bin share of the data energy
};

/// Weighted l2 norm  sqrt( dt * sum_k e^{-2 nu t_k} |v_k|^2 )  matching the
/// continuous H_nu inner product on the grid.
double weighted_norm(const std::vector<Vector>& v, double nu, double t0, double dt);

/// Causal frequency-domain solve: weight the forcing by e^{-nu t}, transform,
/// solve  ((i xi + nu) M(1/(i xi + nu)) + A) u^ = g^  densely per bin with one
/// step of iterative refinement, transform back and unweight.  Bins are
/// processed in parallel with a deterministic layout.  Throws
/// SingularFrequency when some bin's condition estimate exceeds 1e12 and
/// GridTooCoarse when the Nyquist bin carries more than 1e-6 of the data
/// energy (aliasing) or the weighted forcing fails to decay at the ends.
SolutionReport solve(const EvolutionProblem& p);

/// Causality probe: solves with f and with f zeroed on t >= a, and returns
/// the weighted-norm difference of the two solutions restricted to t < a,
/// relative to the weighted norm of the full solution.  Vanishes (to solver
/// accuracy) for any admissible problem since the solution map is causal.
/// Requires t0 < a < t1 (IndexOutOfRange).  The auxiliary truncated solve is
/// exempt from the aliasing gate: a cutoff mid-support legitimately excites
/// high frequencies.
double check_causality(const EvolutionProblem& p, double a);

/// Solves the first-order heat system on (0,1) with coefficient kappa(n x)
/// for each n in the ladder: variables (theta, q) on a staggered grid with m
/// cells, M_n(z) = diag(I, z kappa_n^{-1}), A the Dirichlet grad/div pair.
/// f_theta holds the temperature forcing (dimension m-1 per sample); the flux
/// block is unforced.  All runs share the sharp heat certificate (r = 1/2,
/// c_out = min(1, 1/kappa.beta)) and one weight, so the reports are
/// comparable.  AliasError when m is not a multiple of n * kappa.count().
std::vector<SolutionReport> fine_scale_sweep(const PeriodicField& kappa,
                                             const std::vector<int>& n_ladder, int m, double t0,
                                             double t1, int num_samples,
                                             const std::vector<Vector>& f_theta, double nu = 0.0);

/// Fast path for one rung of the heat ladder: per frequency bin the flux row
/// is eliminated exactly (q = -kappa grad0 theta), leaving the tridiagonal
/// system (w I + grad0* kappa grad0) theta = g solved by the Thomas recursion
/// with one refinement pass -- O(m) per bin instead of a dense factorization.
/// Matches the dense route bit-for-roundoff and fills the same report; the
/// conditioning field holds an analytic worst-bin bound (|w| + 4 m^2
/// max kappa) / nu rather than a factorization estimate, and Re w = nu > 0
/// makes a singular bin impossible.  The implied certificate is the sharp
/// heat preset one (r = 1/2), so the default weight is 1.25.
SolutionReport solve_heat_fast(const PeriodicField& kappa, int n, int m, double t0, double t1,
                               int num_samples, const std::vector<Vector>& f_theta,
                               double nu = 0.0);

/// Plain-text export, one row per (sample, component): t,component,re,im.
void write_solution_csv(const std::string& path, const SolutionReport& rep);

/// Binary export: magic "EVH1", then num_samples and dim as 64-bit unsigned,
/// then the time grid and the interleaved (re, im) sample data as IEEE
/// doubles, all little-endian.
void write_solution_evh1(const std::string& path, const SolutionReport& rep);

/// Reads the binary format back (u and times only). IoError on a bad file.
SolutionReport read_solution_evh1(const std::string& path);

}  // namespace evh
