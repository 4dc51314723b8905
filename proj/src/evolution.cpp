#include <evh/evolution.hpp>

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <mutex>
#include <numbers>
#include <vector>

#include <evh/models.hpp>
#include <evh/parallel.hpp>

namespace evh {

namespace {

constexpr double kTau = 2.0 * std::numbers::pi;

// FFTW planning is not thread safe; execution on private buffers is.
std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

/// In-place 1-D transforms of dim interleaved series of length n stored
/// sample-major (buf[k * dim + i]).  FFTW_ESTIMATE never touches the data
/// while planning, so planning on the live buffer is fine.
void dft_many(std::vector<Complex>& buf, int n, Index dim, int sign) {
  auto* data = reinterpret_cast<fftw_complex*>(buf.data());
  fftw_plan plan = nullptr;
  {
    std::lock_guard<std::mutex> lock(plan_mutex());
    int size = n;
    plan = fftw_plan_many_dft(1, &size, static_cast<int>(dim), data, nullptr,
                              static_cast<int>(dim), 1, data, nullptr, static_cast<int>(dim), 1,
                              sign, FFTW_ESTIMATE);
  }
  require(plan != nullptr, Err::ConfigError, "fftw refused the transform size");
  fftw_execute(plan);
  {
    std::lock_guard<std::mutex> lock(plan_mutex());
    fftw_destroy_plan(plan);
  }
}

struct CoreResult {
  std::vector<Vector> u;      // unweighted primary solution
  std::vector<Vector> u_aux;  // unweighted solution of the cut forcing
  double conditioning = 0.0;
  double residual = 0.0;  // worst bin, relative to the largest bin amplitude
  double nyquist = 0.0;
};

/// Shared frequency-domain pipeline.  cut_index >= 0 adds a second right-hand
/// side with the weighted forcing zeroed from that sample on; it reuses the
/// per-bin factorizations and is exempt from the aliasing gate (a cutoff in
/// mid-support legitimately excites high frequencies).
CoreResult solve_core(const EvolutionProblem& p, double nu, int cut_index) {
  const int n = p.num_samples;
  const Index dim = p.a_op.rows();
  const double dt = (p.t1 - p.t0) / n;
  const bool with_aux = cut_index >= 0;

  std::vector<Complex> g(static_cast<std::size_t>(n) * dim);
  for (int k = 0; k < n; ++k) {
    const double w = std::exp(-nu * (p.t0 + k * dt));
    for (Index i = 0; i < dim; ++i) g[k * dim + i] = w * p.f[k](i);
  }
  std::vector<Complex> g_aux;
  if (with_aux) {
    g_aux = g;
    std::fill(g_aux.begin() + static_cast<std::size_t>(cut_index) * dim, g_aux.end(),
              Complex(0.0, 0.0));
  }

  dft_many(g, n, dim, FFTW_FORWARD);
  if (with_aux) dft_many(g_aux, n, dim, FFTW_FORWARD);

  CoreResult out;
  double total = 0.0, nyq = 0.0, peak = 0.0;
  for (int j = 0; j < n; ++j) {
    double e = 0.0;
    for (Index i = 0; i < dim; ++i) e += std::norm(g[j * dim + i]);
    total += e;
    if (j == n / 2) nyq = e;
    peak = std::max(peak, e);
  }
  out.nyquist = total > 0.0 ? nyq / total : 0.0;
  const double amp = std::sqrt(peak);

  std::vector<double> conds(n, 0.0), resids(n, 0.0);
  std::vector<Complex> uh(g.size()), uh_aux(with_aux ? g_aux.size() : 0);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t j) {
    const double bin = j <= static_cast<std::size_t>(n) / 2 ? static_cast<double>(j)
                                                            : static_cast<double>(j) - n;
    const Complex w(nu, kTau * bin / (n * dt));
    const Matrix b = w * evaluate(p.m, 1.0 / w) + p.a_op;
    const Eigen::PartialPivLU<Matrix> lu(b);
    conds[j] = 1.0 / std::max(lu.rcond(), 1e-300);
    if (conds[j] > 1e12) return;  // reported after the join
    const auto refine = [&](const Complex* src, Complex* dst) {
      const Eigen::Map<const Vector> rhs(src, dim);
      Vector x = lu.solve(rhs);
      x += lu.solve((rhs - b * x).eval());
      resids[j] = std::max(resids[j], (rhs - b * x).norm());
      Eigen::Map<Vector>(dst, dim) = x;
    };
    refine(&g[j * dim], &uh[j * dim]);
    if (with_aux) refine(&g_aux[j * dim], &uh_aux[j * dim]);
  });

  for (int j = 0; j < n; ++j) {
    if (conds[j] > 1e12) {
      const double bin = j <= n / 2 ? j : j - n;
      fail(Err::SingularFrequency, "symbol near-singular at xi = " +
                                       std::to_string(kTau * bin / (n * dt)) +
                                       " (condition estimate " + std::to_string(conds[j]) + ")");
    }
    out.conditioning = std::max(out.conditioning, conds[j]);
    out.residual = std::max(out.residual, resids[j]);
  }
  out.residual = amp > 0.0 ? out.residual / amp : 0.0;

  const auto to_time = [&](std::vector<Complex>& buf) {
    dft_many(buf, n, dim, FFTW_BACKWARD);
    std::vector<Vector> series(n);
    for (int k = 0; k < n; ++k) {
      const double w = std::exp(nu * (p.t0 + k * dt)) / n;
      series[k] = w * Eigen::Map<const Vector>(&buf[k * dim], dim);
    }
    return series;
  };
  out.u = to_time(uh);
  if (with_aux) out.u_aux = to_time(uh_aux);
  return out;
}

/// Weighted-norm gap of two solutions on the samples before cut_index,
/// relative to the weighted norm of the first over the whole window.
double causal_gap(const std::vector<Vector>& u, const std::vector<Vector>& v, int cut_index,
                  double nu, double t0, double dt) {
  double num = 0.0;
  for (int k = 0; k < cut_index; ++k) {
    const double w = std::exp(-2.0 * nu * (t0 + k * dt));
    num += w * (u[k] - v[k]).squaredNorm();
  }
  const double den = weighted_norm(u, nu, t0, dt);
  return den > 0.0 ? std::sqrt(dt * num) / den : 0.0;
}

SolutionReport run(const EvolutionProblem& p, int cut_index) {
  p.validate();
  const double nu = p.weight();
  const double dt = (p.t1 - p.t0) / p.num_samples;
  const CoreResult core = solve_core(p, nu, cut_index);
  require(core.nyquist <= 1e-6, Err::GridTooCoarse,
          "Nyquist bin carries " + std::to_string(core.nyquist) +
              " of the forcing energy; refine the time grid");

  SolutionReport rep;
  rep.u = core.u;
  rep.times.resize(p.num_samples);
  for (int k = 0; k < p.num_samples; ++k) rep.times[k] = p.t0 + k * dt;
  rep.nu = nu;
  const double fw = weighted_norm(p.f, nu, p.t0, dt);
  rep.op_norm_est = fw > 0.0 ? weighted_norm(rep.u, nu, p.t0, dt) / fw : 0.0;
  rep.causal_residual = causal_gap(core.u, core.u_aux, cut_index, nu, p.t0, dt);
  rep.frequency_conditioning = core.conditioning;
  rep.max_freq_residual = core.residual;
  rep.nyquist_fraction = core.nyquist;
  return rep;
}

void put_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

void put_f64(std::ostream& out, double x) {
  std::uint64_t bits;
  std::memcpy(&bits, &x, 8);
  put_u64(out, bits);
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  require(in.good(), Err::IoError, "truncated EVH1 payload");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

double get_f64(std::istream& in) {
  const std::uint64_t bits = get_u64(in);
  double x;
  std::memcpy(&x, &bits, 8);
  return x;
}

}  // namespace

double default_weight(const MaterialLaw& m, const PositivityCertificate& cert) {
  require(m.eps > 0.0, Err::ConfigError, "law has no analyticity radius");
  double nu = 2.0 / m.eps;
  if (cert.r > 0.0) nu = std::max(nu, 1.25 / (2.0 * cert.r));
  return nu;
}

double EvolutionProblem::weight() const { return nu > 0.0 ? nu : default_weight(m, cert); }

void EvolutionProblem::validate() const {
  const Index dim = a_op.rows();
  require(a_op.cols() == dim && m.rows() == dim && m.cols() == dim, Err::DimensionMismatch,
          "spatial operator and law disagree");
  require(num_samples >= 8 && num_samples % 2 == 0, Err::ConfigError,
          "need an even number of samples, at least 8");
  require(t1 > t0, Err::ConfigError, "empty time window");
  require(static_cast<int>(f.size()) == num_samples, Err::DimensionMismatch,
          "one forcing sample per grid point required");
  for (const Vector& fk : f)
    require(fk.size() == dim, Err::DimensionMismatch, "forcing sample of wrong dimension");
  require(operator_norm(a_op + a_op.adjoint()) <= 1e-12 * operator_norm(a_op),
          Err::HypothesisViolated, "spatial operator is not skew-hermitian");

  const double w = weight();
  require(w * m.eps > 1.0, Err::PrereqFailed,
          "weight too small for the analyticity radius: need nu * eps > 1");
  if (cert.r > 0.0)
    require(2.0 * w * cert.r > 1.0, Err::PrereqFailed,
            "weight does not reach the certified half-plane: need nu > 1/(2r)");

  const double dt = (t1 - t0) / num_samples;
  double gmax = 0.0;
  for (int k = 0; k < num_samples; ++k)
    gmax = std::max(gmax, std::exp(-w * (t0 + k * dt)) * f[k].norm());
  const double ends = std::max(std::exp(-w * t0) * f.front().norm(),
                               std::exp(-w * (t0 + (num_samples - 1) * dt)) * f.back().norm());
  require(ends <= 1e-10 * gmax, Err::GridTooCoarse,
          "weighted forcing does not decay at the window ends");
}

double weighted_norm(const std::vector<Vector>& v, double nu, double t0, double dt) {
  double acc = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k)
    acc += std::exp(-2.0 * nu * (t0 + k * dt)) * v[k].squaredNorm();
  return std::sqrt(dt * acc);
}

SolutionReport solve(const EvolutionProblem& p) { return run(p, p.num_samples / 2); }

double check_causality(const EvolutionProblem& p, double a) {
  require(a > p.t0 && a < p.t1, Err::IndexOutOfRange, "cut must lie inside the window");
  const double dt = (p.t1 - p.t0) / p.num_samples;
  const int cut = static_cast<int>(std::ceil((a - p.t0) / dt));
  return run(p, std::clamp(cut, 1, p.num_samples - 1)).causal_residual;
}

std::vector<SolutionReport> fine_scale_sweep(const PeriodicField& kappa,
                                             const std::vector<int>& n_ladder, int m, double t0,
                                             double t1, int num_samples,
                                             const std::vector<Vector>& f_theta, double nu) {
  require(!n_ladder.empty(), Err::ConfigError, "empty scale ladder");

  const HeatPreset first = preset_heat_1d(kappa, n_ladder.front(), m);
  const Index t = m - 1;

  EvolutionProblem p;
  p.a_op = first.ops.a_block;
  p.m = first.law;
  // One certificate covers the whole ladder: alias-free sampling reshuffles
  // the same coefficient values, so the structural constants do not move.
  p.cert = first.cert;
  p.nu = nu > 0.0 ? nu : default_weight(p.m, p.cert);
  p.t0 = t0;
  p.t1 = t1;
  p.num_samples = num_samples;
  require(static_cast<int>(f_theta.size()) == num_samples, Err::DimensionMismatch,
          "one temperature forcing sample per grid point required");
  p.f.resize(f_theta.size());
  for (std::size_t k = 0; k < f_theta.size(); ++k) {
    require(f_theta[k].size() == t, Err::DimensionMismatch,
            "temperature forcing must live on the m-1 interior nodes");
    p.f[k] = Vector::Zero(t + m);
    p.f[k].head(t) = f_theta[k];
  }

  std::vector<SolutionReport> out;
  out.reserve(n_ladder.size());
  for (const int n : n_ladder) {
    p.m = preset_heat_1d(kappa, n, m).law;
    out.push_back(solve(p));
  }
  return out;
}

SolutionReport solve_heat_fast(const PeriodicField& kappa, int n, int m, double t0, double t1,
                               int num_samples, const std::vector<Vector>& f_theta, double nu) {
  kappa.validate();
  require(kappa.dim() == 1, Err::ConfigError, "conductivity must be scalar valued");
  for (const Matrix& piece : kappa.pieces)
    require(std::abs(piece(0, 0).imag()) == 0.0 && piece(0, 0).real() > 0.0,
            Err::HypothesisViolated, "conductivity must be real and positive");
  require(n >= 1 && m >= 2, Err::ConfigError, "need a positive scale and at least two cells");
  require(m % (n * kappa.count()) == 0, Err::AliasError,
          "m must be a positive multiple of n * count()");
  require(num_samples >= 8 && num_samples % 2 == 0, Err::ConfigError,
          "need an even number of samples, at least 8");
  require(t1 > t0, Err::ConfigError, "empty time window");
  require(static_cast<int>(f_theta.size()) == num_samples, Err::DimensionMismatch,
          "one temperature forcing sample per grid point required");

  // Same certified disc as preset_heat_1d (r = 1/2, eps = 2), so the same
  // weight gates apply without materializing the dense law.
  const double weight = nu > 0.0 ? nu : 1.25;
  require(weight > 1.0, Err::PrereqFailed,
          "weight does not reach the certified half-plane: need nu > 1/(2r)");

  const Index t = m - 1;
  const Index dim = t + m;
  const std::size_t ns = static_cast<std::size_t>(num_samples);
  const double dt = (t1 - t0) / num_samples;
  std::vector<double> kv(m);
  for (int c = 0; c < m; ++c) kv[c] = kappa.value_at(n * (c + 0.5) / m)(0, 0).real();

  // Weighted forcing on the temperature block; flux forcing is zero.
  std::vector<Complex> ghat(ns * t);
  double fnorm2 = 0.0, gmax = 0.0;
  for (std::size_t k = 0; k < ns; ++k) {
    require(f_theta[k].size() == t, Err::DimensionMismatch,
            "temperature forcing must live on the m-1 interior nodes");
    const double w = std::exp(-weight * (t0 + k * dt));
    for (Index i = 0; i < t; ++i) ghat[k * t + i] = w * f_theta[k](i);
    const double gk = f_theta[k].norm() * w;
    fnorm2 += gk * gk * dt;
    gmax = std::max(gmax, gk);
  }
  const double edge = std::max(f_theta.front().norm() * std::exp(-weight * t0),
                               f_theta.back().norm() * std::exp(-weight * (t0 + (ns - 1) * dt)));
  require(gmax == 0.0 || edge <= 1e-10 * gmax, Err::GridTooCoarse,
          "weighted forcing does not decay at the window ends");

  const std::size_t cut = ns / 2;
  std::vector<Complex> ghat_aux(ghat.begin(), ghat.begin() + cut * t);
  ghat_aux.resize(ns * t, Complex(0.0, 0.0));
  dft_many(ghat, num_samples, t, FFTW_FORWARD);
  dft_many(ghat_aux, num_samples, t, FFTW_FORWARD);

  double total = 0.0, top = 0.0, amp = 0.0;
  for (std::size_t k = 0; k < ns; ++k) {
    double e = 0.0;
    for (Index i = 0; i < t; ++i) e += std::norm(ghat[k * t + i]);
    total += e;
    if (k == cut) top = e;
    amp = std::max(amp, std::sqrt(e));
  }
  require(total == 0.0 || top / total <= 1e-6, Err::GridTooCoarse,
          "Nyquist bin carries a non-negligible share of the forcing energy");

  // Per frequency: eliminate the flux row q = -kappa grad0 theta and solve the
  // remaining tridiagonal (w I + grad0* kappa grad0) theta = g by the Thomas
  // recursion; Re w = nu > 0 keeps the system uniformly regular, so unlike the
  // dense route no singular-frequency detection is needed.
  std::vector<Complex> uhat(ns * dim), uhat_aux(ns * dim);
  std::vector<double> residuals(ns, 0.0);
  const double s2 = static_cast<double>(m) * m;
  double kmax = 0.0;
  for (int c = 0; c < m; ++c) kmax = std::max(kmax, kv[c]);
  parallel_for(ns, [&](std::size_t j) {
    const double bin = j <= ns / 2 ? static_cast<double>(j) : static_cast<double>(j) - ns;
    const Complex w(weight, kTau * bin / (num_samples * dt));
    std::vector<Complex> diag(t), lower(t), upper(t);
    for (Index i = 0; i < t; ++i) {
      diag[i] = w + s2 * (kv[i] + kv[i + 1]);
      upper[i] = i + 1 < t ? Complex(-s2 * kv[i + 1]) : Complex(0.0);
      lower[i] = i > 0 ? Complex(-s2 * kv[i]) : Complex(0.0);
    }
    const auto thomas = [&](const Complex* rhs, Complex* x) {
      std::vector<Complex> cp(t), dp(t);
      cp[0] = upper[0] / diag[0];
      dp[0] = rhs[0] / diag[0];
      for (Index i = 1; i < t; ++i) {
        const Complex den = diag[i] - lower[i] * cp[i - 1];
        cp[i] = upper[i] / den;
        dp[i] = (rhs[i] - lower[i] * dp[i - 1]) / den;
      }
      x[t - 1] = dp[t - 1];
      for (Index i = t - 2; i >= 0; --i) x[i] = dp[i] - cp[i] * x[i + 1];
    };
    const auto apply = [&](const Complex* x, Complex* y) {
      for (Index i = 0; i < t; ++i)
        y[i] = diag[i] * x[i] + (i > 0 ? lower[i] * x[i - 1] : Complex(0.0)) +
               (i + 1 < t ? upper[i] * x[i + 1] : Complex(0.0));
    };
    const auto solve_refined = [&](const Complex* rhs, Complex* theta) {
      thomas(rhs, theta);
      std::vector<Complex> res(t), corr(t);
      apply(theta, res.data());
      for (Index i = 0; i < t; ++i) res[i] = rhs[i] - res[i];
      thomas(res.data(), corr.data());
      for (Index i = 0; i < t; ++i) theta[i] += corr[i];
      apply(theta, res.data());
      double r2 = 0.0;
      for (Index i = 0; i < t; ++i) r2 += std::norm(rhs[i] - res[i]);
      return std::sqrt(r2);
    };
    const auto flux = [&](const Complex* theta, Complex* q) {
      for (int c = 0; c < m; ++c) {
        const Complex hi = c < t ? theta[c] : Complex(0.0);
        const Complex lo = c > 0 ? theta[c - 1] : Complex(0.0);
        q[c] = -kv[c] * static_cast<double>(m) * (hi - lo);
      }
    };
    std::vector<Complex> theta(t);
    residuals[j] = solve_refined(&ghat[j * t], theta.data());
    std::copy(theta.begin(), theta.end(), &uhat[j * dim]);
    flux(theta.data(), &uhat[j * dim + t]);
    residuals[j] = std::max(residuals[j], solve_refined(&ghat_aux[j * t], theta.data()));
    std::copy(theta.begin(), theta.end(), &uhat_aux[j * dim]);
    flux(theta.data(), &uhat_aux[j * dim + t]);
  });

  dft_many(uhat, num_samples, dim, FFTW_BACKWARD);
  dft_many(uhat_aux, num_samples, dim, FFTW_BACKWARD);

  SolutionReport rep;
  rep.nu = weight;
  rep.frequency_conditioning = (std::abs(Complex(weight, kTau * 0.5 / dt)) + 4.0 * s2 * kmax) / weight;
  rep.max_freq_residual = amp == 0.0 ? 0.0 : *std::max_element(residuals.begin(), residuals.end()) / amp;
  rep.nyquist_fraction = total == 0.0 ? 0.0 : top / total;
  rep.u.resize(ns);
  rep.times.resize(ns);
  std::vector<Vector> u_aux(ns);
  double unorm2 = 0.0, gap2 = 0.0;
  for (std::size_t k = 0; k < ns; ++k) {
    rep.times[k] = t0 + k * dt;
    const double w = std::exp(weight * rep.times[k]);
    rep.u[k] = Vector(dim);
    u_aux[k] = Vector(dim);
    for (Index i = 0; i < dim; ++i) {
      rep.u[k](i) = uhat[k * dim + i] / static_cast<double>(ns) * w;
      u_aux[k](i) = uhat_aux[k * dim + i] / static_cast<double>(ns) * w;
    }
    const double wk = std::exp(-weight * rep.times[k]);
    const double nk = rep.u[k].norm() * wk;
    unorm2 += nk * nk * dt;
    if (k < cut) {
      const double gk = (rep.u[k] - u_aux[k]).norm() * wk;
      gap2 += gk * gk * dt;
    }
  }
  rep.op_norm_est = fnorm2 == 0.0 ? 0.0 : std::sqrt(unorm2 / fnorm2);
  rep.causal_residual = unorm2 == 0.0 ? 0.0 : std::sqrt(gap2 / unorm2);
  return rep;
}

void write_solution_csv(const std::string& path, const SolutionReport& rep) {
  std::ofstream out(path);
  require(out.good(), Err::IoError, "cannot open " + path);
  out.precision(17);
  out << "t,component,re,im\n";
  for (std::size_t k = 0; k < rep.u.size(); ++k)
    for (Index i = 0; i < rep.u[k].size(); ++i)
      out << rep.times[k] << ',' << i << ',' << rep.u[k](i).real() << ',' << rep.u[k](i).imag()
          << '\n';
  require(out.good(), Err::IoError, "short write on " + path);
}

void write_solution_evh1(const std::string& path, const SolutionReport& rep) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), Err::IoError, "cannot open " + path);
  out.write("EVH1", 4);
  const Index dim = rep.u.empty() ? 0 : rep.u.front().size();
  put_u64(out, rep.u.size());
  put_u64(out, static_cast<std::uint64_t>(dim));
  for (const double tk : rep.times) put_f64(out, tk);
  for (const Vector& uk : rep.u)
    for (Index i = 0; i < dim; ++i) {
      put_f64(out, uk(i).real());
      put_f64(out, uk(i).imag());
    }
  require(out.good(), Err::IoError, "short write on " + path);
}

SolutionReport read_solution_evh1(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), Err::IoError, "cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  require(in.good() && std::memcmp(magic, "EVH1", 4) == 0, Err::IoError,
          "not an EVH1 file: " + path);
  const std::uint64_t n = get_u64(in);
  const std::uint64_t dim = get_u64(in);
  SolutionReport rep;
  rep.times.resize(n);
  for (std::uint64_t k = 0; k < n; ++k) rep.times[k] = get_f64(in);
  rep.u.assign(n, Vector(dim));
  for (std::uint64_t k = 0; k < n; ++k)
    for (std::uint64_t i = 0; i < dim; ++i) {
      const double re = get_f64(in);
      const double im = get_f64(in);
      rep.u[k](i) = Complex(re, im);
    }
  return rep;
}

}  // namespace evh
