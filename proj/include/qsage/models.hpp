#pragma once

// Hamiltonians and classical ground-state / dynamics solvers for the five
// problem families: Fermi-Hubbard, transverse-field Ising, MaxCut, the
// massive Schwinger model, and molecular electronic structure (FCI).

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "qsage/kernels.hpp"
#include "qsage/operators.hpp"

namespace qsage {

enum class SolveRoute { Auto, Lanczos, Dense };

struct GroundState {
  double energy = 0.0;
  StateVector state;
  std::size_t iterations = 0; ///< Lanczos steps; 0 for the dense route
  SolveRoute route = SolveRoute::Dense;
};

/// Auto picks dense diagonalization up to this dimension, Lanczos above.
inline constexpr std::size_t kAutoDenseLimit = 256;

GroundState ground_state(const PauliSum &h, SolveRoute route = SolveRoute::Auto,
                         const LanczosOptions &lanczos = {});

/// Ground state restricted to a conserved sector of computational basis
/// states. Throws Solver if the converged vector leaks out of the sector.
GroundState ground_state_in_sector(const PauliSum &h, std::vector<std::uint64_t> basis,
                                   SolveRoute route = SolveRoute::Auto,
                                   const LanczosOptions &lanczos = {});

// --- transverse-field Ising ------------------------------------------------

/// H = -J sum_i Z_i Z_{i+1} - h sum_i X_i on an open chain of L spins.
PauliSum tfim_hamiltonian(std::size_t L, double J, double h);

// --- Fermi-Hubbard ----------------------------------------------------------

/// Spin-orbital index of (site, spin); spin 0 is up, 1 is down.
constexpr std::size_t spin_orbital(std::size_t site, std::size_t spin) {
  return 2 * site + spin;
}

/// Computational basis states with n_up electrons on even modes and n_down on
/// odd modes of a 2*n_spatial register, sorted ascending.
std::vector<std::uint64_t> spin_sector_basis(std::size_t n_spatial, std::size_t n_up,
                                             std::size_t n_down);

struct SpinSector {
  std::size_t n_up = 0;
  std::size_t n_down = 0;
};

/// One electron per site, n_up = ceil(L/2), n_down = floor(L/2).
SpinSector half_filling(std::size_t L);

/// Jordan-Wigner image of -t sum_<ij>,s (c+_is c_js + h.c.) + U sum_i n_iu n_id
/// on an open chain of L sites (2L qubits).
PauliSum hubbard_hamiltonian(std::size_t L, double t, double U);

GroundState hubbard_ground_state(std::size_t L, double t, double U, SpinSector sector,
                                 SolveRoute route = SolveRoute::Auto);

// --- MaxCut -----------------------------------------------------------------

struct WeightedEdge {
  std::size_t u = 0;
  std::size_t v = 0;
  double weight = 1.0;

  friend bool operator==(const WeightedEdge &, const WeightedEdge &) = default;
};

struct WeightedGraph {
  std::size_t n_vertices = 0;
  std::vector<WeightedEdge> edges;

  /// Throws Validation on self-loops, out-of-range endpoints, or duplicate
  /// undirected edges.
  void validate() const;
  double total_weight() const;

  friend bool operator==(const WeightedGraph &, const WeightedGraph &) = default;
};

inline constexpr std::size_t kMaxCutExhaustiveCap = 24;

struct MaxCutSolution {
  double cut_value = 0.0;
  std::vector<std::uint8_t> partition; ///< side (0/1) per vertex
};

double cut_value(const WeightedGraph &g, std::span<const std::uint8_t> partition);

/// Exhaustive search over all bipartitions (N <= kMaxCutExhaustiveCap).
MaxCutSolution maxcut_bruteforce(const WeightedGraph &g);

/// Diagonal Ising form H = sum_(u,v) w_uv Z_u Z_v; cut = (W_total - H) / 2.
PauliSum maxcut_ising(const WeightedGraph &g);

/// Maximum cut through the Ising spectrum: (W_total - E0) / 2.
double maxcut_via_ising(const WeightedGraph &g);

// --- massive Schwinger model ------------------------------------------------

struct SchwingerParams {
  std::size_t L = 4;
  double hopping = 1.0; ///< h in the hopping term h sum (s+_n s-_{n+1} + h.c.)
  double coupling = 1.0; ///< g, electric energy g sum_n L_n^2
  double mass = 0.5;
};

/// Staggered-fermion spin Hamiltonian with the gauge field eliminated on an
/// open chain (L even):
///   H = h sum_{n<L-1} (s+_n s-_{n+1} + h.c.)
///     + (m/2) sum_n (-1)^n Z_n
///     + g sum_{n<L-1} L_n^2,   L_n = sum_{k<=n} (Z_k + (-1)^k) / 2.
PauliSum schwinger_hamiltonian(const SchwingerParams &p);

/// Basis index of the staggered vacuum (even sites occupied: Z = -1).
std::uint64_t schwinger_vacuum_index(std::size_t L);

/// "vacuum" or an explicit bitstring such as "1010" (character n = qubit n).
StateVector schwinger_initial_state(std::size_t L, std::string_view spec);

/// Observable selectors: "particle_number" (default), "energy",
/// "vacuum_persistence" (|<psi0|psi(T)>|^2).
enum class SchwingerObservable { ParticleNumber, Energy, VacuumPersistence };
SchwingerObservable parse_schwinger_observable(std::string_view name);
std::string_view to_string(SchwingerObservable o);

/// (1/L) sum_n (Z_n (-1)^n + 1) / 2
PauliSum schwinger_particle_number(std::size_t L);

struct SchwingerEvolution {
  double value = 0.0;
  double norm_drift = 0.0;   ///< | ||psi(T)|| - 1 |
  double energy_drift = 0.0; ///< | <H>_T - <H>_0 |
};

SchwingerEvolution schwinger_evolve(const SchwingerParams &p, std::string_view psi0,
                                    double T,
                                    SchwingerObservable observable =
                                        SchwingerObservable::ParticleNumber);

// --- molecular electronic structure ---------------------------------------

/// Spatial-orbital integrals in chemist's notation with 8-fold symmetry.
class IntegralSet {
public:
  IntegralSet() = default;
  IntegralSet(std::size_t n_orbitals, std::size_t n_electrons, int ms2 = 0);

  std::size_t n_orbitals() const noexcept { return n_orb_; }
  std::size_t n_electrons() const noexcept { return n_elec_; }
  int ms2() const noexcept { return ms2_; }
  double core_energy() const noexcept { return core_; }
  void set_core_energy(double e) { core_ = e; }

  double one_body(std::size_t p, std::size_t q) const { return h1_[p * n_orb_ + q]; }
  double two_body(std::size_t p, std::size_t q, std::size_t r, std::size_t s) const {
    return h2_[((p * n_orb_ + q) * n_orb_ + r) * n_orb_ + s];
  }
  /// Sets h_pq and h_qp.
  void set_one_body(std::size_t p, std::size_t q, double v);
  /// Sets (pq|rs) and its symmetry images.
  void set_two_body(std::size_t p, std::size_t q, std::size_t r, std::size_t s, double v);
  /// Sets one entry only (no symmetry fill); for building test fixtures.
  void set_two_body_raw(std::size_t p, std::size_t q, std::size_t r, std::size_t s, double v);

  /// Throws Validation when symmetry relations fail beyond `tol`.
  void validate(double tol = 1e-10) const;

  /// Relabels spatial orbitals: new orbital i is old orbital perm[i].
  IntegralSet permuted(std::span<const std::size_t> perm) const;

private:
  void check_index(std::size_t p) const;

  std::size_t n_orb_ = 0;
  std::size_t n_elec_ = 0;
  int ms2_ = 0;
  double core_ = 0.0;
  std::vector<double> h1_;
  std::vector<double> h2_;
};

/// FCIDUMP text: namelist header (NORB, NELEC, MS2) followed by
/// `value i j k l` lines, 1-based, zeros marking one-body and core entries.
IntegralSet parse_fcidump(std::string_view text);
IntegralSet read_fcidump(const std::filesystem::path &path);

/// Second-quantized molecular Hamiltonian (Jordan-Wigner image, interleaved
/// spin orbitals 2p + spin) including the core energy.
PauliSum molecular_hamiltonian(const IntegralSet &ints);

struct FciResult {
  double energy = 0.0;
  double reference_energy = 0.0; ///< lowest-orbital closed-shell determinant
  std::size_t n_determinants = 0;
};

inline constexpr std::size_t kFciQubitCap = 12;

FciResult fci_ground_state(const IntegralSet &ints, SolveRoute route = SolveRoute::Auto);

} // namespace qsage
