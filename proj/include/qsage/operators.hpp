#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace qsage {

using cplx = std::complex<double>;
using DenseMatrix = Eigen::MatrixXcd;

/// Maximum register width any operator in this library may address.
inline constexpr std::size_t kMaxQubits = 30;

/// Tensor product of single-qubit Paulis. Letter i acts on qubit i, and
/// qubit i is bit i of a computational-basis index.
class PauliString {
public:
  PauliString() = default;
  /// Identity on n qubits.
  explicit PauliString(std::size_t n_qubits);
  /// Parses a letter string such as "XIZY" (letter 0 = qubit 0).
  explicit PauliString(std::string_view letters);

  /// Sparse form, e.g. {{0,'Z'},{3,'X'}} on n qubits.
  static PauliString from_ops(std::size_t n_qubits,
                              std::initializer_list<std::pair<std::size_t, char>> ops);

  std::size_t n_qubits() const noexcept { return letters_.size(); }
  const std::string &letters() const noexcept { return letters_; }
  char at(std::size_t qubit) const { return letters_.at(qubit); }
  void set(std::size_t qubit, char letter);

  std::uint64_t x_mask() const noexcept { return x_mask_; }
  std::uint64_t z_mask() const noexcept { return z_mask_; }
  int y_count() const noexcept { return y_count_; }
  bool is_identity() const noexcept { return x_mask_ == 0 && z_mask_ == 0; }
  /// Diagonal in the computational basis (only I and Z letters).
  bool is_diagonal() const noexcept { return x_mask_ == 0; }

  /// Human-readable sparse form, "Z_0 X_3"; "I" for the identity.
  std::string to_string() const;

  friend bool operator==(const PauliString &a, const PauliString &b) {
    return a.letters_ == b.letters_;
  }
  friend auto operator<=>(const PauliString &a, const PauliString &b) {
    return a.letters_ <=> b.letters_;
  }

private:
  void refresh_masks();

  std::string letters_;
  std::uint64_t x_mask_ = 0;
  std::uint64_t z_mask_ = 0;
  int y_count_ = 0;
};

/// Product of two strings: returns (phase, string) with a*b = phase*string.
std::pair<cplx, PauliString> multiply(const PauliString &a,
                                      const PauliString &b);

struct PauliTerm {
  cplx coefficient;
  PauliString string;
};

/// Weighted sum of Pauli strings over a fixed register. Construction always
/// canonicalizes: terms sorted by letter string, duplicates merged, and
/// coefficients below kDropTolerance in magnitude removed.
class PauliSum {
public:
  static constexpr double kDropTolerance = 1e-14;

  PauliSum() = default;
  explicit PauliSum(std::size_t n_qubits) : n_qubits_(n_qubits) {}
  PauliSum(std::size_t n_qubits, std::vector<PauliTerm> terms);

  static PauliSum identity(std::size_t n_qubits, cplx coefficient = 1.0);
  static PauliSum single(cplx coefficient, PauliString string);

  std::size_t n_qubits() const noexcept { return n_qubits_; }
  std::size_t dimension() const noexcept { return std::size_t{1} << n_qubits_; }
  const std::vector<PauliTerm> &terms() const noexcept { return terms_; }
  bool empty() const noexcept { return terms_.empty(); }

  /// Coefficient of a given string, zero when absent.
  cplx coefficient(const PauliString &s) const;
  /// True when every coefficient is real (the sum is then Hermitian).
  bool is_hermitian(double tol = 1e-12) const;
  bool is_diagonal() const;

  PauliSum &operator+=(const PauliSum &other);
  PauliSum &operator-=(const PauliSum &other);
  PauliSum &operator*=(cplx scalar);

  friend PauliSum operator+(PauliSum a, const PauliSum &b) { return a += b; }
  friend PauliSum operator-(PauliSum a, const PauliSum &b) { return a -= b; }
  friend PauliSum operator*(PauliSum a, cplx s) { return a *= s; }
  friend PauliSum operator*(cplx s, PauliSum a) { return a *= s; }
  friend PauliSum operator*(const PauliSum &a, const PauliSum &b);

  /// Structural equality within a coefficient tolerance.
  bool approx_equal(const PauliSum &other, double tol = 1e-12) const;

  std::string to_string() const;

private:
  void canonicalize();

  std::size_t n_qubits_ = 0;
  std::vector<PauliTerm> terms_;
};

/// One ladder operator inside a fermionic product.
struct LadderOp {
  std::size_t mode;
  bool dagger;
};

/// coefficient * (ordered product of ladder operators). An empty ladder is
/// the constant term.
struct FermionTerm {
  cplx coefficient = 1.0;
  std::vector<LadderOp> ladder;
};

/// Jordan-Wigner image with the parity string on lower modes:
/// a_j -> Z_0 ... Z_{j-1} (X_j + iY_j)/2.
PauliSum jordan_wigner(const FermionTerm &term, std::size_t n_modes);
PauliSum jordan_wigner(std::span<const FermionTerm> terms, std::size_t n_modes);

/// Amplitudes over 2^n computational basis states.
class StateVector {
public:
  StateVector() = default;
  explicit StateVector(std::size_t n_qubits);
  StateVector(std::size_t n_qubits, std::vector<cplx> amplitudes);

  static StateVector basis(std::size_t n_qubits, std::uint64_t index);

  std::size_t n_qubits() const noexcept { return n_qubits_; }
  std::size_t dimension() const noexcept { return amplitudes_.size(); }
  std::span<const cplx> amplitudes() const noexcept { return amplitudes_; }
  std::span<cplx> amplitudes() noexcept { return amplitudes_; }
  cplx operator[](std::size_t i) const { return amplitudes_[i]; }
  cplx &operator[](std::size_t i) { return amplitudes_[i]; }

  double norm() const;
  void normalize();
  cplx inner(const StateVector &other) const; ///< <this|other>

private:
  std::size_t n_qubits_ = 0;
  std::vector<cplx> amplitudes_;
};

/// out = H in, matrix-free. `out` must not alias `in`.
void apply(const PauliSum &h, std::span<const cplx> in, std::span<cplx> out);
StateVector apply(const PauliSum &h, const StateVector &psi);

/// <psi|H|psi>
cplx expectation(const PauliSum &h, const StateVector &psi);

/// Dense 2^n x 2^n matrix. Throws when n_qubits exceeds `max_qubits`.
DenseMatrix to_dense(const PauliSum &h, std::size_t max_qubits = 12);

/// Dense matrix of H restricted to the span of the given basis indices,
/// entry (r, c) = <basis[r]|H|basis[c]>.
DenseMatrix to_dense(const PauliSum &h, std::span<const std::uint64_t> basis);

/// Diagonal of H in the computational basis (exact for any PauliSum).
std::vector<double> diagonal(const PauliSum &h);

} // namespace qsage
