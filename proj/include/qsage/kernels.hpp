#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "qsage/operators.hpp"

namespace qsage {

/// Matrix-free Hermitian operator: writes A*in into out (no aliasing).
using MatVec = std::function<void(std::span<const cplx>, std::span<cplx>)>;

MatVec make_matvec(const PauliSum &h);

/// H restricted to a subspace spanned by computational basis states. The
/// operator must leave the subspace invariant (conserved quantum numbers);
/// vectors are indexed by position in `basis`, which must be sorted.
class SectorOperator {
public:
  SectorOperator(const PauliSum &h, std::vector<std::uint64_t> basis);

  std::size_t dimension() const noexcept { return basis_.size(); }
  const std::vector<std::uint64_t> &basis() const noexcept { return basis_; }
  void operator()(std::span<const cplx> in, std::span<cplx> out) const;
  /// Embed a sector vector into the full register.
  StateVector embed(std::span<const cplx> sector_vector) const;
  /// Largest amplitude weight a full-register matvec leaks out of the sector
  /// when applied to `sector_vector`. Zero for a genuinely conserved sector.
  double leakage(std::span<const cplx> sector_vector) const;

private:
  PauliSum h_;
  std::vector<std::uint64_t> basis_;
};

struct LanczosOptions {
  double tol = 1e-10;
  std::size_t max_iter = 500;
  std::uint64_t seed = 7;
};

struct LanczosResult {
  double energy = 0.0;
  std::vector<cplx> vector; ///< normalized ground-state vector
  std::size_t iterations = 0;
  double residual = 0.0; ///< ||Av - Ev||
};

/// Lowest eigenpair of a Hermitian operator by Lanczos with full
/// reorthogonalization. Converged when ||Av - Ev|| <= tol * max(1, |E|).
/// Throws ConvergenceError on budget exhaustion or non-finite breakdown.
LanczosResult lanczos_ground_state(const MatVec &matvec, std::size_t dim,
                                   const LanczosOptions &options = {});

struct Eigensystem {
  Eigen::VectorXd values; ///< ascending
  DenseMatrix vectors;    ///< columns are eigenvectors
};

/// Full Hermitian eigendecomposition of a dense matrix.
Eigensystem dense_eigh(const DenseMatrix &m);
double dense_ground_energy(const DenseMatrix &m);

/// Exact propagation e^{-iHt}|psi0> through a dense eigendecomposition.
/// Throws when n_qubits exceeds `max_qubits`.
StateVector evolve_exact(const PauliSum &h, const StateVector &psi0,
                         double time, std::size_t max_qubits = 12);

/// Reusable propagator for repeated times on the same Hamiltonian.
class ExactPropagator {
public:
  explicit ExactPropagator(const PauliSum &h, std::size_t max_qubits = 12);

  StateVector evolve(const StateVector &psi0, double time) const;
  std::size_t n_qubits() const noexcept { return n_qubits_; }

private:
  std::size_t n_qubits_;
  Eigensystem eig_;
};

} // namespace qsage
