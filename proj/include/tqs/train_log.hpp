#pragma once

#include <cstdint>
#include <vector>

#include "tqs/common.hpp"

namespace tqs {

// Per-epoch training record. Losses are full-corpus teacher-forced
// cross-entropy in eval mode (dropout off), measured after each epoch, so a
// resumed run can verify it continues exactly from the logged value.
struct TrainLog {
  uint64_t seed = 0;
  std::vector<Real> epoch_loss;
  Real final_loss = 0;
};

}  // namespace tqs
