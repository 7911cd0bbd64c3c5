#include "qsage/models.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include "qsage/error.hpp"

namespace qsage {

namespace {

constexpr double kSectorLeakageTol = 1e-8;

StateVector to_state(std::size_t n_qubits, const Eigen::VectorXcd &v) {
  return StateVector(n_qubits, std::vector<cplx>(v.data(), v.data() + v.size()));
}

SolveRoute resolve(SolveRoute route, std::size_t dim) {
  if (route != SolveRoute::Auto) return route;
  return dim <= kAutoDenseLimit ? SolveRoute::Dense : SolveRoute::Lanczos;
}

FermionTerm ladder(cplx c, std::initializer_list<LadderOp> ops) {
  return FermionTerm{c, std::vector<LadderOp>(ops)};
}

} // namespace

// ---------------------------------------------------------------------------
// Generic ground-state drivers

GroundState ground_state(const PauliSum &h, SolveRoute route, const LanczosOptions &lanczos) {
  const std::size_t dim = h.dimension();
  GroundState gs;
  gs.route = resolve(route, dim);
  if (gs.route == SolveRoute::Dense) {
    const auto eig = dense_eigh(to_dense(h));
    gs.energy = eig.values[0];
    gs.state = to_state(h.n_qubits(), eig.vectors.col(0));
    return gs;
  }
  auto res = lanczos_ground_state(make_matvec(h), dim, lanczos);
  gs.energy = res.energy;
  gs.iterations = res.iterations;
  gs.state = StateVector(h.n_qubits(), std::move(res.vector));
  return gs;
}

GroundState ground_state_in_sector(const PauliSum &h, std::vector<std::uint64_t> basis,
                                   SolveRoute route, const LanczosOptions &lanczos) {
  SectorOperator op(h, std::move(basis));
  GroundState gs;
  gs.route = resolve(route, op.dimension());
  std::vector<cplx> vec;
  if (gs.route == SolveRoute::Dense) {
    const auto eig = dense_eigh(to_dense(h, std::span<const std::uint64_t>(op.basis())));
    gs.energy = eig.values[0];
    vec.assign(eig.vectors.col(0).data(), eig.vectors.col(0).data() + eig.vectors.rows());
  } else {
    auto res = lanczos_ground_state(
        [&op](std::span<const cplx> in, std::span<cplx> out) { op(in, out); },
        op.dimension(), lanczos);
    gs.energy = res.energy;
    gs.iterations = res.iterations;
    vec = std::move(res.vector);
  }
  const double leak = op.leakage(vec);
  if (leak > kSectorLeakageTol)
    throw Error(ErrorCode::Solver, "ground state leaks out of the particle sector (" +
                                       std::to_string(leak) + ")");
  gs.state = op.embed(vec);
  return gs;
}

// ---------------------------------------------------------------------------
// TFIM

PauliSum tfim_hamiltonian(std::size_t L, double J, double h) {
  if (L == 0) throw Error(ErrorCode::InvalidArgument, "TFIM needs L >= 1");
  std::vector<PauliTerm> terms;
  for (std::size_t i = 0; i + 1 < L; ++i)
    terms.push_back({-J, PauliString::from_ops(L, {{i, 'Z'}, {i + 1, 'Z'}})});
  for (std::size_t i = 0; i < L; ++i)
    terms.push_back({-h, PauliString::from_ops(L, {{i, 'X'}})});
  return PauliSum(L, std::move(terms));
}

// ---------------------------------------------------------------------------
// Hubbard

std::vector<std::uint64_t> spin_sector_basis(std::size_t n_spatial, std::size_t n_up,
                                             std::size_t n_down) {
  if (2 * n_spatial > kMaxQubits) throw Error(ErrorCode::InvalidArgument, "register too wide");
  std::uint64_t up_mask = 0;
  for (std::size_t p = 0; p < n_spatial; ++p) up_mask |= std::uint64_t{1} << spin_orbital(p, 0);
  const std::uint64_t down_mask = up_mask << 1;
  std::vector<std::uint64_t> basis;
  const std::uint64_t dim = std::uint64_t{1} << (2 * n_spatial);
  for (std::uint64_t b = 0; b < dim; ++b)
    if (static_cast<std::size_t>(std::popcount(b & up_mask)) == n_up &&
        static_cast<std::size_t>(std::popcount(b & down_mask)) == n_down)
      basis.push_back(b);
  return basis;
}

SpinSector half_filling(std::size_t L) { return {(L + 1) / 2, L / 2}; }

PauliSum hubbard_hamiltonian(std::size_t L, double t, double U) {
  if (L == 0) throw Error(ErrorCode::InvalidArgument, "Hubbard chain needs L >= 1");
  const std::size_t modes = 2 * L;
  if (modes > kMaxQubits) throw Error(ErrorCode::InvalidArgument, "Hubbard chain too long");
  std::vector<FermionTerm> terms;
  for (std::size_t i = 0; i + 1 < L; ++i)
    for (std::size_t s = 0; s < 2; ++s) {
      const auto a = spin_orbital(i, s), b = spin_orbital(i + 1, s);
      terms.push_back(ladder(-t, {{a, true}, {b, false}}));
      terms.push_back(ladder(-t, {{b, true}, {a, false}}));
    }
  for (std::size_t i = 0; i < L; ++i) {
    const auto up = spin_orbital(i, 0), dn = spin_orbital(i, 1);
    terms.push_back(ladder(U, {{up, true}, {up, false}, {dn, true}, {dn, false}}));
  }
  return jordan_wigner(terms, modes);
}

GroundState hubbard_ground_state(std::size_t L, double t, double U, SpinSector sector,
                                 SolveRoute route) {
  if (sector.n_up > L || sector.n_down > L)
    throw Error(ErrorCode::InvalidArgument, "particle sector exceeds lattice");
  return ground_state_in_sector(hubbard_hamiltonian(L, t, U),
                                spin_sector_basis(L, sector.n_up, sector.n_down), route);
}

// ---------------------------------------------------------------------------
// MaxCut

void WeightedGraph::validate() const {
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const auto &e : edges) {
    if (e.u == e.v)
      throw Error(ErrorCode::Validation, "self-loop on vertex " + std::to_string(e.u));
    if (e.u >= n_vertices || e.v >= n_vertices)
      throw Error(ErrorCode::Validation, "edge (" + std::to_string(e.u) + ", " +
                                             std::to_string(e.v) + ") outside " +
                                             std::to_string(n_vertices) + " vertices");
    if (!std::isfinite(e.weight))
      throw Error(ErrorCode::Validation, "non-finite edge weight");
    if (!seen.insert(std::minmax(e.u, e.v)).second)
      throw Error(ErrorCode::Validation, "duplicate edge (" + std::to_string(e.u) + ", " +
                                             std::to_string(e.v) + ")");
  }
}

double WeightedGraph::total_weight() const {
  double w = 0.0;
  for (const auto &e : edges) w += e.weight;
  return w;
}

double cut_value(const WeightedGraph &g, std::span<const std::uint8_t> partition) {
  if (partition.size() != g.n_vertices)
    throw Error(ErrorCode::InvalidArgument, "partition size mismatch");
  double cut = 0.0;
  for (const auto &e : g.edges)
    if (partition[e.u] != partition[e.v]) cut += e.weight;
  return cut;
}

MaxCutSolution maxcut_bruteforce(const WeightedGraph &g) {
  g.validate();
  if (g.n_vertices > kMaxCutExhaustiveCap)
    throw Error(ErrorCode::InvalidArgument,
                "exhaustive MaxCut capped at " + std::to_string(kMaxCutExhaustiveCap) +
                    " vertices, graph has " + std::to_string(g.n_vertices));
  MaxCutSolution best;
  best.partition.assign(g.n_vertices, 0);
  if (g.n_vertices < 2) return best;
  // The last vertex stays on side 0: complementing a partition keeps its cut.
  const std::uint64_t count = std::uint64_t{1} << (g.n_vertices - 1);
  std::uint64_t best_mask = 0;
  for (std::uint64_t mask = 1; mask < count; ++mask) {
    double cut = 0.0;
    for (const auto &e : g.edges)
      if (((mask >> e.u) ^ (mask >> e.v)) & 1) cut += e.weight;
    if (cut > best.cut_value) {
      best.cut_value = cut;
      best_mask = mask;
    }
  }
  for (std::size_t v = 0; v < g.n_vertices; ++v)
    best.partition[v] = static_cast<std::uint8_t>((best_mask >> v) & 1);
  return best;
}

PauliSum maxcut_ising(const WeightedGraph &g) {
  g.validate();
  if (g.n_vertices == 0) throw Error(ErrorCode::InvalidArgument, "empty graph");
  std::vector<PauliTerm> terms;
  for (const auto &e : g.edges)
    terms.push_back({e.weight, PauliString::from_ops(g.n_vertices, {{e.u, 'Z'}, {e.v, 'Z'}})});
  return PauliSum(g.n_vertices, std::move(terms));
}

double maxcut_via_ising(const WeightedGraph &g) {
  if (g.n_vertices < 2) return 0.0;
  const auto d = diagonal(maxcut_ising(g));
  const double e0 = *std::min_element(d.begin(), d.end());
  return (g.total_weight() - e0) / 2.0;
}

// ---------------------------------------------------------------------------
// Schwinger

PauliSum schwinger_hamiltonian(const SchwingerParams &p) {
  const std::size_t L = p.L;
  if (L < 2 || L % 2 != 0)
    throw Error(ErrorCode::InvalidArgument,
                "Schwinger chain needs an even L >= 2, got " + std::to_string(L));
  std::vector<PauliTerm> terms;
  // s+ s- + h.c. = (XX + YY) / 2
  for (std::size_t n = 0; n + 1 < L; ++n) {
    terms.push_back({p.hopping / 2.0, PauliString::from_ops(L, {{n, 'X'}, {n + 1, 'X'}})});
    terms.push_back({p.hopping / 2.0, PauliString::from_ops(L, {{n, 'Y'}, {n + 1, 'Y'}})});
  }
  for (std::size_t n = 0; n < L; ++n) {
    const double sign = (n % 2 == 0) ? 1.0 : -1.0;
    terms.push_back({p.mass / 2.0 * sign, PauliString::from_ops(L, {{n, 'Z'}})});
  }
  PauliSum h(L, std::move(terms));

  PauliSum field = PauliSum(L);
  for (std::size_t n = 0; n + 1 < L; ++n) {
    const double sign = (n % 2 == 0) ? 1.0 : -1.0;
    field += PauliSum(L, {{0.5, PauliString::from_ops(L, {{n, 'Z'}})},
                          {0.5 * sign, PauliString(L)}});
    h += p.coupling * (field * field);
  }
  return h;
}

std::uint64_t schwinger_vacuum_index(std::size_t L) {
  std::uint64_t idx = 0;
  for (std::size_t n = 0; n < L; n += 2) idx |= std::uint64_t{1} << n;
  return idx;
}

StateVector schwinger_initial_state(std::size_t L, std::string_view spec) {
  if (spec.empty() || spec == "vacuum") return StateVector::basis(L, schwinger_vacuum_index(L));
  if (spec.size() != L)
    throw Error(ErrorCode::InvalidArgument,
                "initial bitstring '" + std::string(spec) + "' does not have " +
                    std::to_string(L) + " sites");
  std::uint64_t idx = 0;
  for (std::size_t n = 0; n < L; ++n) {
    if (spec[n] == '1')
      idx |= std::uint64_t{1} << n;
    else if (spec[n] != '0')
      throw Error(ErrorCode::InvalidArgument, "initial state must be 'vacuum' or a bitstring");
  }
  return StateVector::basis(L, idx);
}

SchwingerObservable parse_schwinger_observable(std::string_view name) {
  if (name.empty() || name == "particle_number") return SchwingerObservable::ParticleNumber;
  if (name == "energy") return SchwingerObservable::Energy;
  if (name == "vacuum_persistence") return SchwingerObservable::VacuumPersistence;
  throw Error(ErrorCode::InvalidArgument, "unknown observable '" + std::string(name) + "'");
}

std::string_view to_string(SchwingerObservable o) {
  switch (o) {
  case SchwingerObservable::ParticleNumber: return "particle_number";
  case SchwingerObservable::Energy: return "energy";
  case SchwingerObservable::VacuumPersistence: return "vacuum_persistence";
  }
  return "particle_number";
}

PauliSum schwinger_particle_number(std::size_t L) {
  std::vector<PauliTerm> terms;
  const double scale = 1.0 / static_cast<double>(L);
  for (std::size_t n = 0; n < L; ++n) {
    const double sign = (n % 2 == 0) ? 1.0 : -1.0;
    terms.push_back({0.5 * scale * sign, PauliString::from_ops(L, {{n, 'Z'}})});
  }
  terms.push_back({0.5, PauliString(L)});
  return PauliSum(L, std::move(terms));
}

SchwingerEvolution schwinger_evolve(const SchwingerParams &p, std::string_view psi0_spec,
                                    double T, SchwingerObservable observable) {
  if (!std::isfinite(T)) throw Error(ErrorCode::InvalidArgument, "evolution time must be finite");
  const PauliSum h = schwinger_hamiltonian(p);
  const StateVector psi0 = schwinger_initial_state(p.L, psi0_spec);
  const ExactPropagator propagator(h);
  const StateVector psi = propagator.evolve(psi0, T);

  SchwingerEvolution out;
  out.norm_drift = std::abs(psi.norm() - 1.0);
  out.energy_drift = std::abs(expectation(h, psi).real() - expectation(h, psi0).real());
  switch (observable) {
  case SchwingerObservable::ParticleNumber:
    out.value = expectation(schwinger_particle_number(p.L), psi).real();
    break;
  case SchwingerObservable::Energy:
    out.value = expectation(h, psi).real();
    break;
  case SchwingerObservable::VacuumPersistence:
    out.value = std::norm(psi0.inner(psi));
    break;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Integrals and FCI

IntegralSet::IntegralSet(std::size_t n_orbitals, std::size_t n_electrons, int ms2)
    : n_orb_(n_orbitals), n_elec_(n_electrons), ms2_(ms2),
      h1_(n_orbitals * n_orbitals, 0.0),
      h2_(n_orbitals * n_orbitals * n_orbitals * n_orbitals, 0.0) {
  if (n_orbitals == 0) throw Error(ErrorCode::Validation, "integral set needs >= 1 orbital");
}

void IntegralSet::check_index(std::size_t p) const {
  if (p >= n_orb_)
    throw Error(ErrorCode::Validation, "orbital index " + std::to_string(p + 1) +
                                           " exceeds NORB=" + std::to_string(n_orb_));
}

void IntegralSet::set_one_body(std::size_t p, std::size_t q, double v) {
  check_index(p);
  check_index(q);
  h1_[p * n_orb_ + q] = v;
  h1_[q * n_orb_ + p] = v;
}

void IntegralSet::set_two_body_raw(std::size_t p, std::size_t q, std::size_t r, std::size_t s,
                                   double v) {
  check_index(p);
  check_index(q);
  check_index(r);
  check_index(s);
  h2_[((p * n_orb_ + q) * n_orb_ + r) * n_orb_ + s] = v;
}

void IntegralSet::set_two_body(std::size_t p, std::size_t q, std::size_t r, std::size_t s,
                               double v) {
  for (auto [a, b, c, d] : {std::array{p, q, r, s}, std::array{q, p, r, s},
                            std::array{p, q, s, r}, std::array{q, p, s, r},
                            std::array{r, s, p, q}, std::array{s, r, p, q},
                            std::array{r, s, q, p}, std::array{s, r, q, p}})
    set_two_body_raw(a, b, c, d, v);
}

void IntegralSet::validate(double tol) const {
  const auto n = n_orb_;
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t q = 0; q < n; ++q) {
      if (!std::isfinite(one_body(p, q)))
        throw Error(ErrorCode::Validation, "non-finite one-body integral");
      if (std::abs(one_body(p, q) - one_body(q, p)) > tol)
        throw Error(ErrorCode::Validation, "one-body integrals are not symmetric at (" +
                                               std::to_string(p + 1) + "," +
                                               std::to_string(q + 1) + ")");
    }
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t q = 0; q < n; ++q)
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t s = 0; s < n; ++s) {
          const double v = two_body(p, q, r, s);
          if (!std::isfinite(v)) throw Error(ErrorCode::Validation, "non-finite two-body integral");
          for (double image : {two_body(q, p, r, s), two_body(p, q, s, r), two_body(r, s, p, q)})
            if (std::abs(v - image) > tol)
              throw Error(ErrorCode::Validation,
                          "two-body integrals break 8-fold symmetry at (" +
                              std::to_string(p + 1) + std::to_string(q + 1) + "|" +
                              std::to_string(r + 1) + std::to_string(s + 1) + ")");
        }
  if (n_elec_ > 2 * n_orb_)
    throw Error(ErrorCode::Validation, "more electrons than spin orbitals");
}

IntegralSet IntegralSet::permuted(std::span<const std::size_t> perm) const {
  if (perm.size() != n_orb_) throw Error(ErrorCode::InvalidArgument, "permutation size mismatch");
  IntegralSet out(n_orb_, n_elec_, ms2_);
  out.core_ = core_;
  for (std::size_t p = 0; p < n_orb_; ++p)
    for (std::size_t q = 0; q < n_orb_; ++q) {
      out.h1_[p * n_orb_ + q] = one_body(perm[p], perm[q]);
      for (std::size_t r = 0; r < n_orb_; ++r)
        for (std::size_t s = 0; s < n_orb_; ++s)
          out.set_two_body_raw(p, q, r, s, two_body(perm[p], perm[q], perm[r], perm[s]));
    }
  return out;
}

IntegralSet parse_fcidump(std::string_view text) {
  const std::string content(text);
  std::size_t header_end = std::string::npos;
  for (const char *marker : {"&END", "&end", "/\n", "/\r\n"}) {
    const auto pos = content.find(marker);
    if (pos != std::string::npos && pos < header_end) header_end = pos;
  }
  if (header_end == std::string::npos)
    throw Error(ErrorCode::Parse, "FCIDUMP header terminator (&END or /) not found");
  const std::string header = content.substr(0, header_end);
  const auto body_start = content.find('\n', header_end);
  const std::string body = body_start == std::string::npos ? "" : content.substr(body_start + 1);

  auto header_int = [&](const char *key, bool required, long fallback) -> long {
    std::smatch m;
    const std::regex re(std::string(key) + R"(\s*=\s*(-?\d+))", std::regex::icase);
    if (std::regex_search(header, m, re)) return std::stol(m[1].str());
    if (required) throw Error(ErrorCode::Parse, std::string("FCIDUMP header lacks ") + key);
    return fallback;
  };
  const long norb = header_int("NORB", true, 0);
  const long nelec = header_int("NELEC", true, 0);
  const long ms2 = header_int("MS2", false, 0);
  if (norb <= 0 || nelec < 0) throw Error(ErrorCode::Parse, "FCIDUMP NORB/NELEC out of range");

  IntegralSet ints(static_cast<std::size_t>(norb), static_cast<std::size_t>(nelec),
                   static_cast<int>(ms2));
  std::vector<bool> seen1(static_cast<std::size_t>(norb * norb), false);
  std::vector<bool> seen2(static_cast<std::size_t>(norb * norb * norb * norb), false);
  constexpr double kConflictTol = 1e-10;

  std::istringstream in(body);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::replace(line.begin(), line.end(), 'D', 'E');
    std::replace(line.begin(), line.end(), 'd', 'e');
    std::istringstream ls(line);
    double value;
    long i, j, k, l;
    if (!(ls >> value >> i >> j >> k >> l))
      throw Error(ErrorCode::Parse, "FCIDUMP body line " + std::to_string(line_no) +
                                        " is not 'value i j k l'");
    auto idx_ok = [norb](long x) { return x >= 0 && x <= norb; };
    if (!idx_ok(i) || !idx_ok(j) || !idx_ok(k) || !idx_ok(l))
      throw Error(ErrorCode::Validation,
                  "FCIDUMP index out of range on body line " + std::to_string(line_no));
    if (i == 0 && j == 0 && k == 0 && l == 0) {
      ints.set_core_energy(value);
    } else if (k == 0 && l == 0) {
      if (i == 0 || j == 0) throw Error(ErrorCode::Parse, "malformed one-body entry");
      const auto p = static_cast<std::size_t>(i - 1), q = static_cast<std::size_t>(j - 1);
      const auto n = static_cast<std::size_t>(norb);
      for (auto key : {p * n + q, q * n + p})
        if (seen1[key] && std::abs(ints.one_body(key / n, key % n) - value) > kConflictTol)
          throw Error(ErrorCode::Validation, "malformed integral symmetry: conflicting h(" +
                                                 std::to_string(i) + "," + std::to_string(j) + ")");
      ints.set_one_body(p, q, value);
      seen1[p * n + q] = seen1[q * n + p] = true;
    } else {
      if (i == 0 || j == 0 || k == 0 || l == 0)
        throw Error(ErrorCode::Parse, "malformed two-body entry");
      const auto p = static_cast<std::size_t>(i - 1), q = static_cast<std::size_t>(j - 1),
                 r = static_cast<std::size_t>(k - 1), s = static_cast<std::size_t>(l - 1);
      const auto n = static_cast<std::size_t>(norb);
      const auto flat = [n](std::size_t a, std::size_t b, std::size_t c, std::size_t d) {
        return ((a * n + b) * n + c) * n + d;
      };
      const std::array<std::array<std::size_t, 4>, 8> images{
          std::array{p, q, r, s}, std::array{q, p, r, s}, std::array{p, q, s, r}, std::array{q, p, s, r},
          std::array{r, s, p, q}, std::array{s, r, p, q}, std::array{r, s, q, p}, std::array{s, r, q, p}};
      for (auto [a, b, c, d] : images)
        if (seen2[flat(a, b, c, d)] && std::abs(ints.two_body(a, b, c, d) - value) > kConflictTol)
          throw Error(ErrorCode::Validation, "malformed integral symmetry: conflicting (" +
                                                 std::to_string(i) + std::to_string(j) + "|" +
                                                 std::to_string(k) + std::to_string(l) + ")");
      for (auto [a, b, c, d] : images) seen2[flat(a, b, c, d)] = true;
      ints.set_two_body(p, q, r, s, value);
    }
  }
  ints.validate();
  return ints;
}

IntegralSet read_fcidump(const std::filesystem::path &path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::Io, "cannot open integral file " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_fcidump(ss.str());
}

PauliSum molecular_hamiltonian(const IntegralSet &ints) {
  const std::size_t n = ints.n_orbitals();
  const std::size_t modes = 2 * n;
  if (modes > kMaxQubits) throw Error(ErrorCode::InvalidArgument, "too many orbitals");
  constexpr double kSkip = 1e-14;
  std::vector<FermionTerm> terms;
  terms.push_back({ints.core_energy(), {}});
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t q = 0; q < n; ++q) {
      const double v = ints.one_body(p, q);
      if (std::abs(v) < kSkip) continue;
      for (std::size_t s = 0; s < 2; ++s)
        terms.push_back(ladder(v, {{spin_orbital(p, s), true}, {spin_orbital(q, s), false}}));
    }
  // 1/2 sum (pq|rs) a+_{p s} a+_{r t} a_{s t} a_{q s}
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t q = 0; q < n; ++q)
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t s = 0; s < n; ++s) {
          const double v = ints.two_body(p, q, r, s);
          if (std::abs(v) < kSkip) continue;
          for (std::size_t sig = 0; sig < 2; ++sig)
            for (std::size_t tau = 0; tau < 2; ++tau) {
              const auto ps = spin_orbital(p, sig), qs = spin_orbital(q, sig);
              const auto rt = spin_orbital(r, tau), st = spin_orbital(s, tau);
              if (ps == rt || qs == st) continue;
              terms.push_back(ladder(0.5 * v, {{ps, true}, {rt, true}, {st, false}, {qs, false}}));
            }
        }
  return jordan_wigner(terms, modes);
}

FciResult fci_ground_state(const IntegralSet &ints, SolveRoute route) {
  ints.validate();
  const std::size_t n = ints.n_orbitals();
  if (2 * n > kFciQubitCap)
    throw Error(ErrorCode::InvalidArgument, "FCI capped at " + std::to_string(kFciQubitCap) +
                                                " spin orbitals");
  const long ne = static_cast<long>(ints.n_electrons());
  if ((ne + ints.ms2()) % 2 != 0 || ne + ints.ms2() < 0 || ne - ints.ms2() < 0)
    throw Error(ErrorCode::Validation, "determinant sector is empty (NELEC/MS2 parity)");
  const auto n_alpha = static_cast<std::size_t>((ne + ints.ms2()) / 2);
  const auto n_beta = static_cast<std::size_t>((ne - ints.ms2()) / 2);
  if (n_alpha > n || n_beta > n)
    throw Error(ErrorCode::Validation, "determinant sector is empty");

  const PauliSum h = molecular_hamiltonian(ints);
  auto basis = spin_sector_basis(n, n_alpha, n_beta);
  FciResult out;
  out.n_determinants = basis.size();

  std::uint64_t ref = 0;
  for (std::size_t p = 0; p < n_alpha; ++p) ref |= std::uint64_t{1} << spin_orbital(p, 0);
  for (std::size_t p = 0; p < n_beta; ++p) ref |= std::uint64_t{1} << spin_orbital(p, 1);
  out.reference_energy = expectation(h, StateVector::basis(h.n_qubits(), ref)).real();

  out.energy = ground_state_in_sector(h, std::move(basis), route).energy;
  return out;
}

} // namespace qsage
