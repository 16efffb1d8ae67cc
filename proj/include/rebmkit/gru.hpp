// gru.hpp -- gated recurrent cell with hand-derived backward pass.
//
//   z = sigmoid(Wz x + Uz h + bz)
//   r = sigmoid(Wr x + Ur h + br)
//   hc = tanh(Wh x + Uh (r*h) + bh)
//   h' = (1-z)*h + z*hc
#pragma once

#include <span>
#include <string>
#include <vector>

#include "rebmkit/param.hpp"

namespace rebmkit {

struct GruStepCache {
  std::vector<double> x, h_prev, z, r, rh, hc;
};

struct GruCell {
  ParamBlock wz, uz, bz;
  ParamBlock wr, ur, br;
  ParamBlock wh, uh, bh;

  GruCell() = default;
  GruCell(const std::string& prefix, int input, int hidden, Rng& rng);

  int hidden() const { return wz.value.rows; }
  int input() const { return wz.value.cols; }
  bool empty() const { return wz.value.rows == 0; }

  std::vector<ParamBlock*> blocks();

  std::vector<double> forward(std::span<const double> x, std::span<const double> h_prev,
                              GruStepCache* cache = nullptr) const;

  // Accumulates parameter gradients; adds the input/state gradients into
  // dx (resized if empty) and dh_prev.
  void backward(const GruStepCache& cache, std::span<const double> dh, std::vector<double>& dx,
                std::vector<double>& dh_prev);
};

// Runs a cell over a sequence (rows of xs), optionally reversed, returning
// one hidden state per row in row order.
std::vector<std::vector<double>> gru_run(const GruCell& cell, const RealMatrix& xs, bool reversed,
                                         std::vector<GruStepCache>* caches = nullptr);

// Backward over a full run; dstates holds one gradient per row (row order).
// Input gradients are accumulated into dxs when non-null.
void gru_run_backward(GruCell& cell, const std::vector<GruStepCache>& caches,
                      const std::vector<std::vector<double>>& dstates, bool reversed,
                      RealMatrix* dxs);

}  // namespace rebmkit
