#include "qsage/operators.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <sstream>

#include "qsage/error.hpp"

namespace qsage {

namespace {

constexpr cplx kI{0.0, 1.0};

bool valid_letter(char c) { return c == 'I' || c == 'X' || c == 'Y' || c == 'Z'; }

// i^k for k in 0..3
cplx i_power(int k) {
  switch (k & 3) {
  case 0: return {1.0, 0.0};
  case 1: return {0.0, 1.0};
  case 2: return {-1.0, 0.0};
  default: return {0.0, -1.0};
  }
}

// Single-qubit product a*b = phase * letter.
std::pair<cplx, char> multiply_letters(char a, char b) {
  if (a == 'I') return {1.0, b};
  if (b == 'I') return {1.0, a};
  if (a == b) return {1.0, 'I'};
  if (a == 'X' && b == 'Y') return {kI, 'Z'};
  if (a == 'Y' && b == 'X') return {-kI, 'Z'};
  if (a == 'Y' && b == 'Z') return {kI, 'X'};
  if (a == 'Z' && b == 'Y') return {-kI, 'X'};
  if (a == 'Z' && b == 'X') return {kI, 'Y'};
  return {-kI, 'Y'}; // X*Z
}

// <b ^ x| P |b> for a string with the given masks.
inline cplx string_phase(std::uint64_t b, std::uint64_t z_mask, cplx y_phase) {
  return (std::popcount(b & z_mask) & 1) ? -y_phase : y_phase;
}

std::string format_coefficient(cplx c) {
  std::ostringstream os;
  os.precision(10);
  if (std::abs(c.imag()) < 1e-15)
    os << c.real();
  else if (std::abs(c.real()) < 1e-15)
    os << c.imag() << "i";
  else
    os << "(" << c.real() << (c.imag() < 0 ? "" : "+") << c.imag() << "i)";
  return os.str();
}

} // namespace

// ---------------------------------------------------------------------------
// PauliString

PauliString::PauliString(std::size_t n_qubits) : letters_(n_qubits, 'I') {
  if (n_qubits > kMaxQubits)
    throw Error(ErrorCode::InvalidArgument, "register too wide: " + std::to_string(n_qubits));
}

PauliString::PauliString(std::string_view letters) : letters_(letters) {
  if (letters_.size() > kMaxQubits)
    throw Error(ErrorCode::InvalidArgument, "register too wide: " + std::to_string(letters_.size()));
  for (char c : letters_)
    if (!valid_letter(c))
      throw Error(ErrorCode::InvalidArgument,
                  std::string("invalid Pauli letter '") + c + "'");
  refresh_masks();
}

PauliString PauliString::from_ops(
    std::size_t n_qubits,
    std::initializer_list<std::pair<std::size_t, char>> ops) {
  PauliString s(n_qubits);
  for (auto [q, c] : ops)
    s.set(q, c);
  return s;
}

void PauliString::set(std::size_t qubit, char letter) {
  if (qubit >= letters_.size())
    throw Error(ErrorCode::InvalidArgument,
                "qubit " + std::to_string(qubit) + " outside register of " +
                    std::to_string(letters_.size()));
  if (!valid_letter(letter))
    throw Error(ErrorCode::InvalidArgument,
                std::string("invalid Pauli letter '") + letter + "'");
  letters_[qubit] = letter;
  refresh_masks();
}

void PauliString::refresh_masks() {
  x_mask_ = z_mask_ = 0;
  y_count_ = 0;
  for (std::size_t q = 0; q < letters_.size(); ++q) {
    const std::uint64_t bit = std::uint64_t{1} << q;
    switch (letters_[q]) {
    case 'X': x_mask_ |= bit; break;
    case 'Y': x_mask_ |= bit; z_mask_ |= bit; ++y_count_; break;
    case 'Z': z_mask_ |= bit; break;
    default: break;
    }
  }
}

std::string PauliString::to_string() const {
  std::string out;
  for (std::size_t q = 0; q < letters_.size(); ++q) {
    if (letters_[q] == 'I') continue;
    if (!out.empty()) out += ' ';
    out += letters_[q];
    out += '_';
    out += std::to_string(q);
  }
  return out.empty() ? "I" : out;
}

std::pair<cplx, PauliString> multiply(const PauliString &a,
                                      const PauliString &b) {
  if (a.n_qubits() != b.n_qubits())
    throw Error(ErrorCode::InvalidArgument, "Pauli string width mismatch");
  cplx phase = 1.0;
  std::string letters(a.n_qubits(), 'I');
  for (std::size_t q = 0; q < letters.size(); ++q) {
    auto [p, c] = multiply_letters(a.at(q), b.at(q));
    phase *= p;
    letters[q] = c;
  }
  return {phase, PauliString(letters)};
}

// ---------------------------------------------------------------------------
// PauliSum

PauliSum::PauliSum(std::size_t n_qubits, std::vector<PauliTerm> terms)
    : n_qubits_(n_qubits), terms_(std::move(terms)) {
  for (const auto &t : terms_) {
    if (t.string.n_qubits() != n_qubits_)
      throw Error(ErrorCode::InvalidArgument,
                  "term '" + t.string.letters() + "' does not span " +
                      std::to_string(n_qubits_) + " qubits");
    if (!std::isfinite(t.coefficient.real()) || !std::isfinite(t.coefficient.imag()))
      throw Error(ErrorCode::InvalidArgument, "non-finite coefficient");
  }
  canonicalize();
}

PauliSum PauliSum::identity(std::size_t n_qubits, cplx coefficient) {
  return PauliSum(n_qubits, {{coefficient, PauliString(n_qubits)}});
}

PauliSum PauliSum::single(cplx coefficient, PauliString string) {
  const auto n = string.n_qubits();
  return PauliSum(n, {{coefficient, std::move(string)}});
}

void PauliSum::canonicalize() {
  std::sort(terms_.begin(), terms_.end(),
            [](const PauliTerm &a, const PauliTerm &b) { return a.string < b.string; });
  std::vector<PauliTerm> merged;
  merged.reserve(terms_.size());
  for (auto &t : terms_) {
    if (!merged.empty() && merged.back().string == t.string)
      merged.back().coefficient += t.coefficient;
    else
      merged.push_back(std::move(t));
  }
  std::erase_if(merged, [](const PauliTerm &t) {
    return std::abs(t.coefficient) < kDropTolerance;
  });
  terms_ = std::move(merged);
}

cplx PauliSum::coefficient(const PauliString &s) const {
  auto it = std::lower_bound(
      terms_.begin(), terms_.end(), s,
      [](const PauliTerm &t, const PauliString &key) { return t.string < key; });
  if (it != terms_.end() && it->string == s) return it->coefficient;
  return 0.0;
}

bool PauliSum::is_hermitian(double tol) const {
  return std::all_of(terms_.begin(), terms_.end(), [tol](const PauliTerm &t) {
    return std::abs(t.coefficient.imag()) <= tol;
  });
}

bool PauliSum::is_diagonal() const {
  return std::all_of(terms_.begin(), terms_.end(),
                     [](const PauliTerm &t) { return t.string.is_diagonal(); });
}

PauliSum &PauliSum::operator+=(const PauliSum &other) {
  if (terms_.empty() && n_qubits_ == 0) n_qubits_ = other.n_qubits_;
  if (other.n_qubits_ != n_qubits_ && !other.terms_.empty())
    throw Error(ErrorCode::InvalidArgument, "PauliSum width mismatch");
  terms_.insert(terms_.end(), other.terms_.begin(), other.terms_.end());
  canonicalize();
  return *this;
}

PauliSum &PauliSum::operator-=(const PauliSum &other) {
  return *this += other * cplx{-1.0};
}

PauliSum &PauliSum::operator*=(cplx scalar) {
  for (auto &t : terms_) t.coefficient *= scalar;
  canonicalize();
  return *this;
}

PauliSum operator*(const PauliSum &a, const PauliSum &b) {
  if (a.n_qubits() != b.n_qubits())
    throw Error(ErrorCode::InvalidArgument, "PauliSum width mismatch");
  std::vector<PauliTerm> out;
  out.reserve(a.terms().size() * b.terms().size());
  for (const auto &ta : a.terms())
    for (const auto &tb : b.terms()) {
      auto [phase, s] = multiply(ta.string, tb.string);
      out.push_back({ta.coefficient * tb.coefficient * phase, std::move(s)});
    }
  return PauliSum(a.n_qubits(), std::move(out));
}

bool PauliSum::approx_equal(const PauliSum &other, double tol) const {
  if (n_qubits_ != other.n_qubits_) return false;
  // Both sides are canonical, so a merge-walk compares term by term.
  std::size_t i = 0, j = 0;
  while (i < terms_.size() || j < other.terms_.size()) {
    if (j == other.terms_.size() ||
        (i < terms_.size() && terms_[i].string < other.terms_[j].string)) {
      if (std::abs(terms_[i].coefficient) > tol) return false;
      ++i;
    } else if (i == terms_.size() || other.terms_[j].string < terms_[i].string) {
      if (std::abs(other.terms_[j].coefficient) > tol) return false;
      ++j;
    } else {
      if (std::abs(terms_[i].coefficient - other.terms_[j].coefficient) > tol)
        return false;
      ++i;
      ++j;
    }
  }
  return true;
}

std::string PauliSum::to_string() const {
  if (terms_.empty()) return "0";
  std::string out;
  for (const auto &t : terms_) {
    if (!out.empty()) out += " + ";
    out += format_coefficient(t.coefficient) + "*" + t.string.to_string();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Jordan-Wigner

PauliSum jordan_wigner(const FermionTerm &term, std::size_t n_modes) {
  PauliSum result = PauliSum::identity(n_modes, term.coefficient);
  for (const auto &op : term.ladder) {
    if (op.mode >= n_modes)
      throw Error(ErrorCode::InvalidArgument,
                  "mode index " + std::to_string(op.mode) +
                      " out of range for " + std::to_string(n_modes) + " modes");
    PauliString x(n_modes), y(n_modes);
    for (std::size_t k = 0; k < op.mode; ++k) {
      x.set(k, 'Z');
      y.set(k, 'Z');
    }
    x.set(op.mode, 'X');
    y.set(op.mode, 'Y');
    const cplx y_coeff = op.dagger ? -0.5 * kI : 0.5 * kI;
    PauliSum image(n_modes, {{0.5, x}, {y_coeff, y}});
    result = result * image;
  }
  return result;
}

PauliSum jordan_wigner(std::span<const FermionTerm> terms, std::size_t n_modes) {
  std::vector<PauliTerm> all;
  for (const auto &t : terms) {
    auto image = jordan_wigner(t, n_modes);
    all.insert(all.end(), image.terms().begin(), image.terms().end());
  }
  return PauliSum(n_modes, std::move(all));
}

// ---------------------------------------------------------------------------
// StateVector

StateVector::StateVector(std::size_t n_qubits)
    : n_qubits_(n_qubits), amplitudes_(std::size_t{1} << n_qubits, cplx{0.0}) {
  if (n_qubits > kMaxQubits)
    throw Error(ErrorCode::InvalidArgument, "register too wide");
}

StateVector::StateVector(std::size_t n_qubits, std::vector<cplx> amplitudes)
    : n_qubits_(n_qubits), amplitudes_(std::move(amplitudes)) {
  if (n_qubits > kMaxQubits || amplitudes_.size() != (std::size_t{1} << n_qubits))
    throw Error(ErrorCode::InvalidArgument,
                "state length " + std::to_string(amplitudes_.size()) +
                    " is not 2^" + std::to_string(n_qubits));
}

StateVector StateVector::basis(std::size_t n_qubits, std::uint64_t index) {
  StateVector s(n_qubits);
  if (index >= s.dimension())
    throw Error(ErrorCode::InvalidArgument, "basis index out of range");
  s.amplitudes_[index] = 1.0;
  return s;
}

double StateVector::norm() const {
  double acc = 0.0;
  for (const auto &a : amplitudes_) acc += std::norm(a);
  return std::sqrt(acc);
}

void StateVector::normalize() {
  const double n = norm();
  if (n == 0.0) throw Error(ErrorCode::InvalidArgument, "cannot normalize zero state");
  for (auto &a : amplitudes_) a /= n;
}

cplx StateVector::inner(const StateVector &other) const {
  if (other.dimension() != dimension())
    throw Error(ErrorCode::InvalidArgument, "state dimension mismatch");
  cplx acc = 0.0;
  for (std::size_t i = 0; i < amplitudes_.size(); ++i)
    acc += std::conj(amplitudes_[i]) * other.amplitudes_[i];
  return acc;
}

// ---------------------------------------------------------------------------
// Matrix-free action and dense forms

void apply(const PauliSum &h, std::span<const cplx> in, std::span<cplx> out) {
  const std::size_t dim = h.dimension();
  if (in.size() != dim || out.size() != dim)
    throw Error(ErrorCode::InvalidArgument,
                "dimension mismatch: operator acts on " + std::to_string(dim) +
                    " amplitudes, got " + std::to_string(in.size()));
  std::fill(out.begin(), out.end(), cplx{0.0});
  for (const auto &t : h.terms()) {
    const std::uint64_t x = t.string.x_mask();
    const std::uint64_t z = t.string.z_mask();
    const cplx scaled = t.coefficient * i_power(t.string.y_count());
    for (std::uint64_t b = 0; b < dim; ++b)
      out[b ^ x] += string_phase(b, z, scaled) * in[b];
  }
}

StateVector apply(const PauliSum &h, const StateVector &psi) {
  if (h.n_qubits() != psi.n_qubits())
    throw Error(ErrorCode::InvalidArgument,
                "dimension mismatch: " + std::to_string(h.n_qubits()) +
                    "-qubit operator on " + std::to_string(psi.n_qubits()) +
                    "-qubit state");
  StateVector out(psi.n_qubits());
  apply(h, psi.amplitudes(), out.amplitudes());
  return out;
}

cplx expectation(const PauliSum &h, const StateVector &psi) {
  return psi.inner(apply(h, psi));
}

DenseMatrix to_dense(const PauliSum &h, std::size_t max_qubits) {
  if (h.n_qubits() > max_qubits)
    throw Error(ErrorCode::InvalidArgument,
                "dense form capped at " + std::to_string(max_qubits) +
                    " qubits, operator has " + std::to_string(h.n_qubits()));
  const std::size_t dim = h.dimension();
  DenseMatrix m = DenseMatrix::Zero(dim, dim);
  for (const auto &t : h.terms()) {
    const std::uint64_t x = t.string.x_mask();
    const std::uint64_t z = t.string.z_mask();
    const cplx scaled = t.coefficient * i_power(t.string.y_count());
    for (std::uint64_t b = 0; b < dim; ++b)
      m(static_cast<Eigen::Index>(b ^ x), static_cast<Eigen::Index>(b)) +=
          string_phase(b, z, scaled);
  }
  return m;
}

DenseMatrix to_dense(const PauliSum &h, std::span<const std::uint64_t> basis) {
  if (!std::is_sorted(basis.begin(), basis.end()))
    throw Error(ErrorCode::InvalidArgument, "sector basis must be sorted");
  const auto n = static_cast<Eigen::Index>(basis.size());
  DenseMatrix m = DenseMatrix::Zero(n, n);
  for (const auto &t : h.terms()) {
    const std::uint64_t x = t.string.x_mask();
    const std::uint64_t z = t.string.z_mask();
    const cplx scaled = t.coefficient * i_power(t.string.y_count());
    for (Eigen::Index c = 0; c < n; ++c) {
      const std::uint64_t b = basis[static_cast<std::size_t>(c)];
      auto it = std::lower_bound(basis.begin(), basis.end(), b ^ x);
      if (it == basis.end() || *it != (b ^ x)) continue;
      m(it - basis.begin(), c) += string_phase(b, z, scaled);
    }
  }
  return m;
}

std::vector<double> diagonal(const PauliSum &h) {
  std::vector<double> d(h.dimension(), 0.0);
  for (const auto &t : h.terms()) {
    if (!t.string.is_diagonal()) continue;
    const std::uint64_t z = t.string.z_mask();
    const double c = t.coefficient.real();
    for (std::uint64_t b = 0; b < d.size(); ++b)
      d[b] += (std::popcount(b & z) & 1) ? -c : c;
  }
  return d;
}

} // namespace qsage
