#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>

#include "qsage/registry.hpp"

namespace qsage {

struct ReferenceResult {
  double value = 0.0;
  std::string solver;
  double wall_time_s = 0.0;
  std::size_t iterations = 0;
};

/// Dispatches an instance to its family's classical solver.
ReferenceResult solve_reference(const ProblemInstance &instance);

/// Per-campaign memo keyed by instance content hash. Concurrent readers;
/// a miss computes outside the lock and the first insertion wins.
class ReferenceCache {
public:
  ReferenceResult get(const ProblemInstance &instance);
  std::size_t size() const;
  std::size_t solves() const;

private:
  mutable std::shared_mutex mutex_;
  std::map<std::string, ReferenceResult> entries_;
  std::size_t solves_ = 0;
};

} // namespace qsage
