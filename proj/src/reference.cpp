#include "qsage/reference.hpp"

#include <chrono>
#include <cmath>

#include "qsage/error.hpp"

namespace qsage {

namespace {

ReferenceResult dispatch(const ProblemInstance &in) {
  const auto &d = in.descriptor;
  ReferenceResult r;
  if (d == "condensedmatter/tfim") {
    const auto gs = ground_state(tfim_hamiltonian(in.integer("L"), in.number("J"), in.number("h")),
                                 SolveRoute::Lanczos);
    r.value = gs.energy;
    r.iterations = gs.iterations;
    r.solver = "lanczos";
  } else if (d == "condensedmatter/hubbard") {
    const std::size_t L = in.integer("L");
    SpinSector sector = half_filling(L);
    if (in.has("n_up")) sector.n_up = in.integer("n_up");
    if (in.has("n_down")) sector.n_down = in.integer("n_down");
    const auto gs = hubbard_ground_state(L, in.number("t"), in.number("U"), sector,
                                         SolveRoute::Lanczos);
    r.value = gs.energy;
    r.iterations = gs.iterations;
    r.solver = "sector-lanczos";
  } else if (d == "optimization/maxcut") {
    const WeightedGraph g{in.integer("N"), in.edges("E")};
    r.value = maxcut_bruteforce(g).cut_value;
    r.iterations = g.n_vertices > 0 ? (std::size_t{1} << (g.n_vertices - 1)) : 0;
    r.solver = "exhaustive-maxcut";
  } else if (d == "gauge/schwinger") {
    SchwingerParams p;
    p.L = in.integer("L");
    p.hopping = in.number("h");
    p.coupling = in.number("g");
    p.mass = in.has("m") ? in.number("m") : 0.5;
    const double T = in.has("T") ? in.number("T") : 1.0;
    const std::string psi0 = in.has("initial_state") ? in.text("initial_state") : "vacuum";
    const auto obs = parse_schwinger_observable(in.has("observable") ? in.text("observable")
                                                                     : "particle_number");
    r.value = schwinger_evolve(p, psi0, T, obs).value;
    r.solver = "exact-evolution";
  } else if (d == "chem/h2") {
    if (!in.has("integrals"))
      throw Error(ErrorCode::Validation, "instance '" + in.id + "' has no integral file");
    r.value = fci_ground_state(read_fcidump(in.text("integrals"))).energy;
    r.solver = "fci";
  } else {
    throw Error(ErrorCode::UnknownFamily, "unknown family '" + d + "'");
  }
  if (!std::isfinite(r.value))
    throw Error(ErrorCode::Solver, "reference solver produced a non-finite value");
  return r;
}

} // namespace

ReferenceResult solve_reference(const ProblemInstance &instance) {
  if (!find_family(instance.descriptor))
    throw Error(ErrorCode::UnknownFamily, "unknown family '" + instance.descriptor + "'");
  const auto start = std::chrono::steady_clock::now();
  ReferenceResult r = dispatch(instance);
  r.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

ReferenceResult ReferenceCache::get(const ProblemInstance &instance) {
  const std::string key = content_hash(instance);
  {
    std::shared_lock lock(mutex_);
    if (auto it = entries_.find(key); it != entries_.end()) return it->second;
  }
  ReferenceResult r = solve_reference(instance);
  std::unique_lock lock(mutex_);
  auto [it, inserted] = entries_.emplace(key, std::move(r));
  if (inserted) ++solves_;
  return it->second;
}

std::size_t ReferenceCache::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

std::size_t ReferenceCache::solves() const {
  std::shared_lock lock(mutex_);
  return solves_;
}

} // namespace qsage
