// gradcheck.hpp -- central finite-difference validation of analytic gradients.
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rebmkit/param.hpp"

namespace rebmkit {

struct GradCheckEntry {
  std::string block;
  double max_rel_err = 0.0;
  double analytic = 0.0;  // at the worst coordinate
  double numeric = 0.0;
  int row = -1;
  int col = -1;
  int checked = 0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_rel_err() const;
  const GradCheckEntry* worst() const;
};

// loss(accumulate) must be a deterministic scalar function of the blocks'
// values; with accumulate=true it must leave fresh gradients in the blocks.
// Checks a seeded sample of coordinates per block (all of them when the block
// is smaller than samples_per_block).
GradCheckReport grad_check(const std::function<double(bool)>& loss,
                           const std::vector<ParamBlock*>& blocks, double h = 1e-5,
                           int samples_per_block = 8, uint64_t seed = 17);

}  // namespace rebmkit
