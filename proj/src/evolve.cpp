#include "ocmsfem/evolve.hpp"

#include <fftw3.h>

#include <chrono>
#include <cmath>
#include <fstream>
#include <mutex>
#include <stdexcept>

namespace ocmsfem {

namespace {
using Clock = std::chrono::steady_clock;

std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

Eigen::VectorXcd solve_spd_complex(const Eigen::LDLT<Eigen::MatrixXd>& ldlt,
                                   const Eigen::VectorXcd& rhs) {
  Eigen::VectorXcd out(rhs.size());
  out.real() = ldlt.solve(rhs.real());
  out.imag() = ldlt.solve(rhs.imag());
  return out;
}
}  // namespace

EvolutionConfig make_evolution_config(double T, double dt, double epsilon, int log_stride) {
  if (dt <= 0.0) throw std::invalid_argument("make_evolution_config: dt must be positive");
  if (T <= 0.0) throw std::invalid_argument("make_evolution_config: T must be positive");
  const int n = static_cast<int>(std::llround(T / dt));
  if (n < 1 || std::abs(n * dt - T) > 1e-9 * std::max(T, 1.0))
    throw std::invalid_argument("make_evolution_config: T is not an integer multiple of dt");
  if (log_stride < 1) log_stride = 1;
  return EvolutionConfig{dt, n, T, epsilon, log_stride};
}

GalerkinSpace GalerkinSpace::p1(const FineOperators& ops) {
  GalerkinSpace s;
  s.tag_ = SpaceTag::coarse_p1;
  s.sparse_r_ = true;
  s.r_sparse_ = ops.prolongation;
  SparseMat pm = SparseMat(ops.prolongation.transpose() * ops.mass * ops.prolongation);
  SparseMat pa = SparseMat(ops.prolongation.transpose() * ops.hamiltonian * ops.prolongation);
  s.mass_ = Eigen::MatrixXd(pm);
  s.a_ = Eigen::MatrixXd(pa);
  return s;
}

GalerkinSpace GalerkinSpace::multiscale(MultiscaleBasis basis, const FineOperators& ops) {
  GalerkinSpace s;
  s.tag_ = SpaceTag::multiscale;
  MsOperators ms = assemble_ms_operators(basis, ops);
  s.mass_ = std::move(ms.mass);
  s.a_ = std::move(ms.a);
  if (basis.kind() == BasisKind::localized) {
    s.sparse_r_ = true;
    s.r_sparse_ = basis.take_sparse();
  } else {
    s.sparse_r_ = false;
    s.r_dense_ = basis.take_dense();
  }
  return s;
}

Eigen::VectorXcd GalerkinSpace::prolong(const Eigen::VectorXcd& coeffs) const {
  return sparse_r_ ? Eigen::VectorXcd(r_sparse_ * coeffs) : Eigen::VectorXcd(r_dense_ * coeffs);
}

Eigen::VectorXcd GalerkinSpace::restrict_transpose(const Eigen::VectorXcd& v) const {
  return sparse_r_ ? Eigen::VectorXcd(r_sparse_.transpose() * v)
                   : Eigen::VectorXcd(r_dense_.transpose() * v);
}

StationarySolution stationary_solve(const GalerkinSpace& space, const WaveFunction& f,
                                    const FineOperators& ops) {
  if (f.space != SpaceTag::fine_nodal)
    throw std::invalid_argument("stationary_solve: f must be fine-nodal");
  Eigen::LDLT<Eigen::MatrixXd> ldlt(space.a());
  if (ldlt.info() != Eigen::Success)
    throw std::runtime_error("stationary_solve: space operator factorisation failed");
  const Eigen::VectorXcd rhs = space.restrict_transpose(ops.mass * f.coeffs);
  StationarySolution sol;
  sol.space_coeffs = solve_spd_complex(ldlt, rhs);
  sol.fine.space = SpaceTag::fine_nodal;
  sol.fine.coeffs = space.prolong(sol.space_coeffs);
  return sol;
}

Eigen::VectorXcd elliptic_project(const Eigen::VectorXcd& v_fine, const GalerkinSpace& space,
                                  const FineOperators& ops) {
  Eigen::LDLT<Eigen::MatrixXd> ldlt(space.a());
  if (ldlt.info() != Eigen::Success)
    throw std::runtime_error("elliptic_project: space operator factorisation failed");
  const Eigen::VectorXcd rhs = space.restrict_transpose(ops.hamiltonian * v_fine);
  return solve_spd_complex(ldlt, rhs);
}

TrajectoryResult cn_evolve(const Eigen::MatrixXd& mass, const Eigen::MatrixXd& a,
                           const Eigen::VectorXcd& u0, const EvolutionConfig& cfg) {
  const auto t0 = Clock::now();
  const int n = static_cast<int>(mass.rows());
  if (a.rows() != n || u0.size() != n)
    throw std::invalid_argument("cn_evolve: dimension mismatch");

  const std::complex<double> ie(0.0, cfg.epsilon);
  Eigen::MatrixXcd lhs = ie * mass - (0.5 * cfg.dt) * a;
  Eigen::MatrixXcd rhs_op = ie * mass + (0.5 * cfg.dt) * a;
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(std::move(lhs));

  TrajectoryResult res;
  res.log_stride = cfg.log_stride;
  res.final_state = u0;

  auto log_state = [&](int step) {
    const Eigen::VectorXcd mu = mass * res.final_state;
    const Eigen::VectorXcd au = a * res.final_state;
    res.step_log.push_back(step);
    res.mass_log.push_back(std::sqrt(std::abs(std::real(res.final_state.dot(mu)))));
    res.energy_log.push_back(std::real(res.final_state.dot(au)));
  };
  log_state(0);

  Eigen::VectorXcd rhs(n);
  for (int step = 1; step <= cfg.n_steps; ++step) {
    rhs.noalias() = rhs_op * res.final_state;
    res.final_state = lu.solve(rhs);
    if (step % cfg.log_stride == 0 || step == cfg.n_steps) log_state(step);
  }
  res.wall_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  return res;
}

TrajectoryResult cn_evolve(const GalerkinSpace& space, const Eigen::VectorXcd& u0,
                           const EvolutionConfig& cfg) {
  return cn_evolve(space.mass(), space.a(), u0, cfg);
}

TrajectoryResult fem_cn_evolve(const FineOperators& ops, const Eigen::VectorXcd& u0_fine,
                               const EvolutionConfig& cfg, Eigen::VectorXcd* final_fine) {
  const GalerkinSpace space = GalerkinSpace::p1(ops);
  const Eigen::VectorXcd u0 = elliptic_project(u0_fine, space, ops);
  TrajectoryResult res = cn_evolve(space, u0, cfg);
  if (final_fine) *final_fine = space.prolong(res.final_state);
  return res;
}

TrajectoryResult tssp_evolve(const Eigen::VectorXcd& u0, const Eigen::VectorXd& v_nodes,
                             const EvolutionConfig& cfg) {
  const auto t0 = Clock::now();
  const int n = static_cast<int>(u0.size());
  if (n < 4 || n % 2 != 0)
    throw std::invalid_argument("tssp_evolve: sample count must be even and >= 4");
  if (v_nodes.size() != n)
    throw std::invalid_argument("tssp_evolve: potential must be sampled at the same nodes");

  Eigen::VectorXcd half_pot(n), kinetic(n);
  for (int i = 0; i < n; ++i)
    half_pot[i] = std::polar(1.0, -cfg.dt * v_nodes[i] / (2.0 * cfg.epsilon));
  for (int i = 0; i < n; ++i) {
    const double k = i < n / 2 ? i : i - n;
    kinetic[i] = std::polar(1.0, -cfg.epsilon * cfg.dt * k * k / 2.0);
  }

  Eigen::VectorXcd u = u0;
  fftw_plan fwd, bwd;
  {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    auto* buf = reinterpret_cast<fftw_complex*>(u.data());
    fwd = fftw_plan_dft_1d(n, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
    bwd = fftw_plan_dft_1d(n, buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  if (!fwd || !bwd) throw std::runtime_error("tssp_evolve: FFT plan creation failed");

  const double h = kDomainLength / n;
  const double inv_n = 1.0 / n;
  TrajectoryResult res;
  res.log_stride = cfg.log_stride;
  res.step_log.push_back(0);
  res.mass_log.push_back(std::sqrt(h) * u.norm());
  for (int step = 1; step <= cfg.n_steps; ++step) {
    u.array() *= half_pot.array();
    fftw_execute(fwd);
    u.array() *= kinetic.array() * inv_n;
    fftw_execute(bwd);
    u.array() *= half_pot.array();
    if (step % cfg.log_stride == 0 || step == cfg.n_steps) {
      res.step_log.push_back(step);
      res.mass_log.push_back(std::sqrt(h) * u.norm());
    }
  }
  {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(bwd);
  }
  res.final_state = std::move(u);
  res.wall_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  return res;
}

void write_trajectory_csv(const TrajectoryResult& traj, double dt, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_trajectory_csv: cannot open " + path);
  out.precision(17);
  out << "step,time,mass,energy\n";
  for (std::size_t i = 0; i < traj.step_log.size(); ++i) {
    out << traj.step_log[i] << "," << traj.step_log[i] * dt << "," << traj.mass_log[i] << ",";
    if (i < traj.energy_log.size()) out << traj.energy_log[i];
    out << "\n";
  }
}

Eigen::VectorXcd trig_resample(const Eigen::VectorXcd& samples, int n_out) {
  const int n = static_cast<int>(samples.size());
  if (n_out == n) return samples;
  if (n_out < 1) throw std::invalid_argument("trig_resample: bad output size");

  if (n % n_out == 0) {
    // the interpolant passes through the samples; the coarser nodes are a subset
    Eigen::VectorXcd out(n_out);
    const int stride = n / n_out;
    for (int i = 0; i < n_out; ++i) out[i] = samples[i * stride];
    return out;
  }

  // Fourier coefficients, modes k = -n/2 .. n/2 - 1
  Eigen::VectorXcd c = samples;
  {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    auto* buf = reinterpret_cast<fftw_complex*>(c.data());
    fftw_plan p = fftw_plan_dft_1d(n, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
    fftw_execute(p);
    fftw_destroy_plan(p);
  }
  c /= static_cast<double>(n);

  if (n_out % n == 0) {
    // zero-padded spectrum on the finer grid
    Eigen::VectorXcd cz = Eigen::VectorXcd::Zero(n_out);
    for (int i = 0; i < n; ++i) {
      const int k = i < n / 2 ? i : i - n;
      cz[(k + n_out) % n_out] = c[i];
    }
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    auto* buf = reinterpret_cast<fftw_complex*>(cz.data());
    fftw_plan p = fftw_plan_dft_1d(n_out, buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
    fftw_execute(p);
    fftw_destroy_plan(p);
    return cz;
  }

  // direct evaluation at incommensurate nodes via a phase recurrence
  Eigen::VectorXcd out(n_out);
  const double h_out = kDomainLength / n_out;
  for (int i = 0; i < n_out; ++i) {
    const double x = i * h_out;
    const std::complex<double> w = std::polar(1.0, x);
    std::complex<double> phase = std::polar(1.0, -(n / 2) * x);
    std::complex<double> acc(0.0, 0.0);
    for (int t = 0; t < n; ++t) {
      const int idx = (t - n / 2 + n) % n;  // mode t - n/2 lives at this FFT bin
      acc += c[idx] * phase;
      phase *= w;
    }
    out[i] = acc;
  }
  return out;
}

Eigen::VectorXcd p1_resample(const Eigen::VectorXcd& nodal, int n_out) {
  const int n = static_cast<int>(nodal.size());
  if (n_out == n) return nodal;
  Eigen::VectorXcd out(n_out);
  for (int i = 0; i < n_out; ++i) {
    const double pos = static_cast<double>(i) * n / n_out;  // in units of source h
    const int e = static_cast<int>(pos) % n;
    const double t = pos - std::floor(pos);
    out[i] = (1.0 - t) * nodal[e] + t * nodal[(e + 1) % n];
  }
  return out;
}

}  // namespace ocmsfem
