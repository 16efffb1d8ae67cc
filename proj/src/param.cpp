#include "rebmkit/param.hpp"

#include <cmath>
#include <cstring>

#include "rebmkit/errors.hpp"

namespace rebmkit {

void ParamBlock::reset_adam() {
  adam_m.fill(0.0);
  adam_v.fill(0.0);
  adam_t = 0;
}

void adam_step(ParamBlock& p, const AdamConfig& cfg) {
  for (double g : p.grad.data) {
    if (!std::isfinite(g)) {
      throw TrainingError("adam_step: non-finite gradient in block '" + p.name + "'");
    }
  }
  p.adam_t += 1;
  double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(p.adam_t));
  double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(p.adam_t));
  for (size_t i = 0; i < p.value.data.size(); ++i) {
    double g = p.grad.data[i];
    double m = p.adam_m.data[i] = cfg.beta1 * p.adam_m.data[i] + (1.0 - cfg.beta1) * g;
    double v = p.adam_v.data[i] = cfg.beta2 * p.adam_v.data[i] + (1.0 - cfg.beta2) * g * g;
    double m_hat = m / bc1;
    double v_hat = v / bc2;
    p.value.data[i] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
  }
  p.zero_grad();
}

double global_grad_norm(std::span<ParamBlock* const> blocks) {
  double sq = 0.0;
  for (const ParamBlock* p : blocks) {
    for (double g : p->grad.data) sq += g * g;
  }
  return std::sqrt(sq);
}

void clip_global_norm(std::span<ParamBlock* const> blocks, double max_norm) {
  double norm = global_grad_norm(blocks);
  if (norm <= max_norm || norm == 0.0) return;
  double scale = max_norm / norm;
  for (ParamBlock* p : blocks) {
    for (double& g : p->grad.data) g *= scale;
  }
}

void init_glorot_uniform(ParamBlock& p, Rng& rng) {
  double a = std::sqrt(6.0 / (p.value.rows + p.value.cols));
  for (double& v : p.value.data) v = rng.uniform(-a, a);
}

uint64_t params_digest(std::span<ParamBlock* const> blocks) {
  uint64_t h = 0xcbf29ce484222325ull;
  auto feed = [&h](const void* ptr, size_t n) {
    const unsigned char* b = static_cast<const unsigned char*>(ptr);
    for (size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 0x100000001b3ull;
    }
  };
  for (const ParamBlock* p : blocks) {
    feed(p->name.data(), p->name.size());
    feed(p->value.data.data(), p->value.data.size() * sizeof(double));
  }
  return h;
}

}  // namespace rebmkit
