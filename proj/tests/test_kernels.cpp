#include <gtest/gtest.h>

#include <random>

#include "qsage/error.hpp"
#include "qsage/kernels.hpp"
#include "qsage/models.hpp"

using namespace qsage;

namespace {

PauliSum random_hermitian(std::mt19937 &rng, std::size_t n) {
  std::uniform_int_distribution<int> letter(0, 3);
  std::uniform_int_distribution<int> count(1, 24);
  std::normal_distribution<double> coef;
  std::vector<PauliTerm> terms;
  const int k = count(rng);
  for (int t = 0; t < k; ++t) {
    std::string s(n, 'I');
    for (auto &c : s) c = "IXYZ"[letter(rng)];
    terms.push_back({coef(rng), PauliString(s)});
  }
  return PauliSum(n, terms);
}

} // namespace

TEST(Lanczos, AgreesWithDenseOnRandomHermitianSums) {
  std::mt19937 rng(2024);
  std::uniform_int_distribution<std::size_t> width(1, 8);
  for (int trial = 0; trial < 100; ++trial) {
    const auto h = random_hermitian(rng, width(rng));
    const double dense = dense_ground_energy(to_dense(h));
    const auto lz = lanczos_ground_state(make_matvec(h), h.dimension());
    EXPECT_NEAR(lz.energy, dense, 1e-8) << "trial " << trial << ": " << h.to_string();
  }
}

TEST(Lanczos, ReturnsNormalizedEigenvector) {
  const auto h = tfim_hamiltonian(6, 1.0, 0.7);
  const auto r = lanczos_ground_state(make_matvec(h), h.dimension());
  double norm2 = 0.0;
  for (auto a : r.vector) norm2 += std::norm(a);
  EXPECT_NEAR(norm2, 1.0, 1e-10);
  StateVector psi(6, r.vector);
  EXPECT_NEAR(expectation(h, psi).real(), r.energy, 1e-9);
  EXPECT_LE(r.residual, 1e-10 * std::max(1.0, std::abs(r.energy)));
}

TEST(Lanczos, DeterministicForFixedSeed) {
  const auto h = tfim_hamiltonian(5, 1.0, 1.3);
  const auto a = lanczos_ground_state(make_matvec(h), h.dimension());
  const auto b = lanczos_ground_state(make_matvec(h), h.dimension());
  EXPECT_EQ(a.energy, b.energy);
  EXPECT_EQ(a.iterations, b.iterations);
}

TEST(Lanczos, DiagonalOperatorTerminatesEarly) {
  const PauliSum h(3, {{1.0, PauliString("ZII")}, {0.5, PauliString("IZZ")}});
  const auto r = lanczos_ground_state(make_matvec(h), h.dimension());
  EXPECT_NEAR(r.energy, -1.5, 1e-12);
}

TEST(SectorOperator, MatchesDenseSubmatrix) {
  const auto h = hubbard_hamiltonian(3, 1.0, 4.0);
  const auto basis = spin_sector_basis(3, 2, 1);
  SectorOperator op(h, basis);
  const DenseMatrix sub = to_dense(h, basis);
  std::vector<cplx> v(basis.size()), w(basis.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = cplx(std::sin(i + 1.0), std::cos(2.0 * i));
  op(v, w);
  Eigen::VectorXcd ev(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) ev[i] = v[i];
  const Eigen::VectorXcd ew = sub * ev;
  for (std::size_t i = 0; i < w.size(); ++i) EXPECT_LT(std::abs(w[i] - ew[i]), 1e-12);
  EXPECT_LT(op.leakage(v), 1e-12);
}

TEST(Dense, EighIsAscendingAndOrthonormal) {
  const auto h = tfim_hamiltonian(4, 1.0, 0.5);
  const auto e = dense_eigh(to_dense(h));
  for (Eigen::Index i = 1; i < e.values.size(); ++i) EXPECT_LE(e.values[i - 1], e.values[i]);
  const auto n = e.vectors.cols();
  EXPECT_LT((e.vectors.adjoint() * e.vectors - DenseMatrix::Identity(n, n)).norm(), 1e-10);
  EXPECT_THROW(to_dense(tfim_hamiltonian(13, 1.0, 1.0)), Error);
}

TEST(Evolution, UnitaryAndConsistent) {
  const auto h = tfim_hamiltonian(4, 1.0, 0.8);
  const auto psi0 = StateVector::basis(4, 0);
  ExactPropagator prop(h);
  const auto a = prop.evolve(psi0, 1.3);
  const auto b = evolve_exact(h, psi0, 1.3);
  EXPECT_NEAR(a.norm(), 1.0, 1e-12);
  for (std::size_t i = 0; i < a.dimension(); ++i) EXPECT_LT(std::abs(a[i] - b[i]), 1e-12);
  // composing two half steps equals one full step
  const auto c = prop.evolve(prop.evolve(psi0, 0.65), 0.65);
  for (std::size_t i = 0; i < a.dimension(); ++i) EXPECT_LT(std::abs(a[i] - c[i]), 1e-10);
  const auto z = prop.evolve(psi0, 0.0);
  for (std::size_t i = 0; i < z.dimension(); ++i) EXPECT_LT(std::abs(z[i] - psi0[i]), 1e-14);
}
