// param.hpp -- named parameter blocks with paired gradient accumulators and
// the Adam optimizer state.
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rebmkit/matrix.hpp"
#include "rebmkit/rng.hpp"

namespace rebmkit {

struct ParamBlock {
  std::string name;
  RealMatrix value;
  RealMatrix grad;
  RealMatrix adam_m;
  RealMatrix adam_v;
  long adam_t = 0;

  ParamBlock() = default;
  ParamBlock(std::string n, int rows, int cols)
      : name(std::move(n)), value(rows, cols), grad(rows, cols), adam_m(rows, cols),
        adam_v(rows, cols) {}

  void zero_grad() { grad.fill(0.0); }
  void reset_adam();
  size_t size() const { return value.data.size(); }
};

struct AdamConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam update in place; increments adam_t, zeroes grad after.
// Throws TrainingError naming the block on non-finite gradient entries.
void adam_step(ParamBlock& p, const AdamConfig& cfg = {});

double global_grad_norm(std::span<ParamBlock* const> blocks);
// Scales all gradients so the global L2 norm is at most max_norm.
void clip_global_norm(std::span<ParamBlock* const> blocks, double max_norm);

// uniform(-a, a), a = sqrt(6 / (fan_in + fan_out)); fan_out = rows, fan_in = cols
void init_glorot_uniform(ParamBlock& p, Rng& rng);

// FNV-1a over the raw value bytes of every block, in block order.
uint64_t params_digest(std::span<ParamBlock* const> blocks);

}  // namespace rebmkit
