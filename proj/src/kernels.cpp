#include "qsage/kernels.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <random>

#include "qsage/error.hpp"

namespace qsage {

namespace {

double vec_norm(std::span<const cplx> v) {
  double acc = 0.0;
  for (const auto &a : v) acc += std::norm(a);
  return std::sqrt(acc);
}

cplx vec_dot(std::span<const cplx> a, std::span<const cplx> b) {
  cplx acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::conj(a[i]) * b[i];
  return acc;
}

void axpy(cplx alpha, std::span<const cplx> x, std::span<cplx> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

bool finite(std::span<const cplx> v) {
  return std::all_of(v.begin(), v.end(), [](const cplx &a) {
    return std::isfinite(a.real()) && std::isfinite(a.imag());
  });
}

} // namespace

MatVec make_matvec(const PauliSum &h) {
  return [h](std::span<const cplx> in, std::span<cplx> out) { apply(h, in, out); };
}

// ---------------------------------------------------------------------------
// SectorOperator

SectorOperator::SectorOperator(const PauliSum &h, std::vector<std::uint64_t> basis)
    : h_(h), basis_(std::move(basis)) {
  if (basis_.empty()) throw Error(ErrorCode::InvalidArgument, "empty sector");
  if (!std::is_sorted(basis_.begin(), basis_.end()))
    throw Error(ErrorCode::InvalidArgument, "sector basis must be sorted");
  if (basis_.back() >= h_.dimension())
    throw Error(ErrorCode::InvalidArgument, "sector basis index outside register");
}

void SectorOperator::operator()(std::span<const cplx> in, std::span<cplx> out) const {
  if (in.size() != basis_.size() || out.size() != basis_.size())
    throw Error(ErrorCode::InvalidArgument, "sector vector dimension mismatch");
  std::fill(out.begin(), out.end(), cplx{0.0});
  for (const auto &t : h_.terms()) {
    const std::uint64_t x = t.string.x_mask();
    const std::uint64_t z = t.string.z_mask();
    cplx scaled = t.coefficient;
    for (int k = 0; k < t.string.y_count(); ++k) scaled *= cplx{0.0, 1.0};
    for (std::size_t c = 0; c < basis_.size(); ++c) {
      const std::uint64_t b = basis_[c];
      const std::uint64_t target = b ^ x;
      std::size_t r = c;
      if (x != 0) {
        auto it = std::lower_bound(basis_.begin(), basis_.end(), target);
        if (it == basis_.end() || *it != target) continue;
        r = static_cast<std::size_t>(it - basis_.begin());
      }
      const bool odd = std::popcount(b & z) & 1;
      out[r] += (odd ? -scaled : scaled) * in[c];
    }
  }
}

StateVector SectorOperator::embed(std::span<const cplx> sector_vector) const {
  if (sector_vector.size() != basis_.size())
    throw Error(ErrorCode::InvalidArgument, "sector vector dimension mismatch");
  StateVector full(h_.n_qubits());
  for (std::size_t i = 0; i < basis_.size(); ++i) full[basis_[i]] = sector_vector[i];
  return full;
}

double SectorOperator::leakage(std::span<const cplx> sector_vector) const {
  const StateVector full = embed(sector_vector);
  const StateVector image = apply(h_, full);
  double outside = 0.0;
  std::size_t next = 0;
  for (std::uint64_t b = 0; b < image.dimension(); ++b) {
    if (next < basis_.size() && basis_[next] == b) {
      ++next;
      continue;
    }
    outside = std::max(outside, std::abs(image[b]));
  }
  return outside;
}

// ---------------------------------------------------------------------------
// Lanczos

LanczosResult lanczos_ground_state(const MatVec &matvec, std::size_t dim,
                                   const LanczosOptions &options) {
  if (dim == 0) throw Error(ErrorCode::InvalidArgument, "Lanczos dimension must be >= 1");
  if (options.max_iter == 0) throw Error(ErrorCode::InvalidArgument, "max_iter must be >= 1");

  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal;
  std::vector<std::vector<cplx>> basis;
  basis.reserve(std::min(dim, options.max_iter) + 1);

  std::vector<cplx> v(dim);
  for (auto &a : v) a = {normal(rng), normal(rng)};
  {
    const double n = vec_norm(v);
    for (auto &a : v) a /= n;
  }
  basis.push_back(std::move(v));

  std::vector<double> alphas, betas;
  std::vector<cplx> w(dim);
  LanczosResult result;

  const std::size_t krylov_cap = std::min(dim, options.max_iter);
  for (std::size_t k = 0; k < krylov_cap; ++k) {
    const auto &vk = basis[k];
    matvec(vk, w);
    if (!finite(w)) throw ConvergenceError("Lanczos breakdown: non-finite matvec output");

    const double alpha = vec_dot(vk, w).real();
    alphas.push_back(alpha);
    axpy(-alpha, vk, w);
    if (k > 0) axpy(-betas.back(), basis[k - 1], w);
    // Full reorthogonalization, two passes.
    for (int pass = 0; pass < 2; ++pass)
      for (const auto &q : basis) axpy(-vec_dot(q, w), q, w);
    const double beta = vec_norm(w);
    if (!std::isfinite(beta)) throw ConvergenceError("Lanczos breakdown: non-finite beta");

    const std::size_t m = alphas.size();
    const bool invariant = beta <= 1e-13 * std::max(1.0, std::abs(alpha));
    const bool last = (m == krylov_cap);
    const bool check = invariant || last || m < 64 || m % 8 == 0;
    if (check) {
      Eigen::VectorXd diag = Eigen::Map<const Eigen::VectorXd>(alphas.data(), m);
      Eigen::VectorXd sub(std::max<std::size_t>(m, 1) - 1);
      for (std::size_t i = 0; i + 1 < m; ++i) sub[static_cast<Eigen::Index>(i)] = betas[i];
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri;
      tri.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
      const double theta = tri.eigenvalues()[0];
      const Eigen::VectorXd s = tri.eigenvectors().col(0);
      const double estimate = beta * std::abs(s[static_cast<Eigen::Index>(m - 1)]);
      const double threshold = options.tol * std::max(1.0, std::abs(theta));

      if (estimate <= threshold || invariant || last) {
        std::vector<cplx> ritz(dim, cplx{0.0});
        for (std::size_t i = 0; i < m; ++i) axpy(s[static_cast<Eigen::Index>(i)], basis[i], ritz);
        const double rn = vec_norm(ritz);
        for (auto &a : ritz) a /= rn;
        std::vector<cplx> hv(dim);
        matvec(ritz, hv);
        axpy(-theta, ritz, hv);
        const double residual = vec_norm(hv);
        if (!std::isfinite(residual)) throw ConvergenceError("Lanczos breakdown: non-finite residual");
        if (residual <= threshold || invariant || m == dim) {
          result.energy = theta;
          result.vector = std::move(ritz);
          result.iterations = m;
          result.residual = residual;
          if (residual > threshold)
            throw ConvergenceError("Lanczos exhausted the space with residual " +
                                   std::to_string(residual));
          return result;
        }
        if (last) break;
      }
    }

    betas.push_back(beta);
    std::vector<cplx> next(w);
    for (auto &a : next) a /= beta;
    basis.push_back(std::move(next));
  }
  throw ConvergenceError("Lanczos did not converge within " +
                         std::to_string(options.max_iter) + " iterations");
}

// ---------------------------------------------------------------------------
// Dense routes

Eigensystem dense_eigh(const DenseMatrix &m) {
  if (m.rows() != m.cols()) throw Error(ErrorCode::InvalidArgument, "matrix is not square");
  Eigen::SelfAdjointEigenSolver<DenseMatrix> solver(m);
  if (solver.info() != Eigen::Success)
    throw ConvergenceError("dense eigendecomposition failed");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

double dense_ground_energy(const DenseMatrix &m) {
  if (m.rows() != m.cols()) throw Error(ErrorCode::InvalidArgument, "matrix is not square");
  Eigen::SelfAdjointEigenSolver<DenseMatrix> solver(m, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success)
    throw ConvergenceError("dense eigendecomposition failed");
  return solver.eigenvalues()[0];
}

ExactPropagator::ExactPropagator(const PauliSum &h, std::size_t max_qubits)
    : n_qubits_(h.n_qubits()), eig_(dense_eigh(to_dense(h, max_qubits))) {}

StateVector ExactPropagator::evolve(const StateVector &psi0, double time) const {
  if (psi0.n_qubits() != n_qubits_)
    throw Error(ErrorCode::InvalidArgument,
                "dimension mismatch: propagator on " + std::to_string(n_qubits_) +
                    " qubits, state on " + std::to_string(psi0.n_qubits()));
  if (time == 0.0) return psi0;
  const auto dim = static_cast<Eigen::Index>(psi0.dimension());
  Eigen::Map<const Eigen::VectorXcd> in(psi0.amplitudes().data(), dim);
  Eigen::VectorXcd coeffs = eig_.vectors.adjoint() * in;
  for (Eigen::Index i = 0; i < dim; ++i)
    coeffs[i] *= std::exp(cplx{0.0, -eig_.values[i] * time});
  Eigen::VectorXcd out = eig_.vectors * coeffs;
  return StateVector(n_qubits_, std::vector<cplx>(out.data(), out.data() + dim));
}

StateVector evolve_exact(const PauliSum &h, const StateVector &psi0, double time,
                         std::size_t max_qubits) {
  if (h.n_qubits() != psi0.n_qubits())
    throw Error(ErrorCode::InvalidArgument,
                "dimension mismatch: " + std::to_string(h.n_qubits()) +
                    "-qubit Hamiltonian, " + std::to_string(psi0.n_qubits()) +
                    "-qubit state");
  return ExactPropagator(h, max_qubits).evolve(psi0, time);
}

} // namespace qsage
