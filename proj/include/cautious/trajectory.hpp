#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cautious/vec.hpp"

namespace cautious {

// One recorded point of a discrete run. mask_ratio, effective_lr and u
// describe the step proposed *at* this point (for the final point they come
// from a dry-run step that is not applied).
struct TrajectoryPoint {
  Vec w;
  double loss = 0.0;
  double hamiltonian = 0.0;
  double mask_ratio = 1.0;
  double effective_lr = 0.0;
  Vec u;  // proposed negative update direction at this point
};

struct Trajectory {
  std::vector<TrajectoryPoint> points;  // length n_steps+1 unless aborted
  std::string config_fingerprint;
  std::uint64_t seed = 0;
  std::optional<std::size_t> abort_step;  // first step with non-finite values
  std::string abort_reason;

  std::size_t n_steps() const { return points.empty() ? 0 : points.size() - 1; }
  const TrajectoryPoint& back() const { return points.back(); }
  double final_loss() const { return points.back().loss; }
};

}  // namespace cautious
