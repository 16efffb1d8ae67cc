#include "rebmkit/gru.hpp"

#include <cmath>

#include "rebmkit/errors.hpp"
#include "rebmkit/matrix.hpp"
#include "rebmkit/ops.hpp"

namespace rebmkit {

GruCell::GruCell(const std::string& prefix, int input, int hidden, Rng& rng)
    : wz(prefix + ".wz", hidden, input), uz(prefix + ".uz", hidden, hidden),
      bz(prefix + ".bz", hidden, 1), wr(prefix + ".wr", hidden, input),
      ur(prefix + ".ur", hidden, hidden), br(prefix + ".br", hidden, 1),
      wh(prefix + ".wh", hidden, input), uh(prefix + ".uh", hidden, hidden),
      bh(prefix + ".bh", hidden, 1) {
  for (ParamBlock* p : {&wz, &uz, &wr, &ur, &wh, &uh}) init_glorot_uniform(*p, rng);
}

std::vector<ParamBlock*> GruCell::blocks() {
  return {&wz, &uz, &bz, &wr, &ur, &br, &wh, &uh, &bh};
}

std::vector<double> GruCell::forward(std::span<const double> x, std::span<const double> h_prev,
                                     GruStepCache* cache) const {
  int h = hidden();
  std::vector<double> z = matvec(wz.value, x);
  std::vector<double> r = matvec(wr.value, x);
  std::vector<double> uzh = matvec(uz.value, h_prev);
  std::vector<double> urh = matvec(ur.value, h_prev);
  for (int i = 0; i < h; ++i) {
    z[i] = stable_sigmoid(z[i] + uzh[i] + bz.value.data[i]);
    r[i] = stable_sigmoid(r[i] + urh[i] + br.value.data[i]);
  }
  std::vector<double> rh(h);
  for (int i = 0; i < h; ++i) rh[i] = r[i] * h_prev[i];
  std::vector<double> hc = matvec(wh.value, x);
  std::vector<double> uhrh = matvec(uh.value, rh);
  for (int i = 0; i < h; ++i) hc[i] = std::tanh(hc[i] + uhrh[i] + bh.value.data[i]);
  std::vector<double> h_new(h);
  for (int i = 0; i < h; ++i) h_new[i] = (1.0 - z[i]) * h_prev[i] + z[i] * hc[i];
  if (cache) {
    cache->x.assign(x.begin(), x.end());
    cache->h_prev.assign(h_prev.begin(), h_prev.end());
    cache->z = z;
    cache->r = r;
    cache->rh = rh;
    cache->hc = hc;
  }
  return h_new;
}

void GruCell::backward(const GruStepCache& cache, std::span<const double> dh,
                       std::vector<double>& dx, std::vector<double>& dh_prev) {
  int h = hidden();
  if (static_cast<int>(dh.size()) != h) {
    throw DimensionError("gru backward: dh has length " + std::to_string(dh.size()) +
                         ", hidden is " + std::to_string(h));
  }
  std::vector<double> dz(h), dhc(h), dah(h);
  if (dh_prev.empty()) dh_prev.assign(h, 0.0);
  for (int i = 0; i < h; ++i) {
    dz[i] = dh[i] * (cache.hc[i] - cache.h_prev[i]) * cache.z[i] * (1.0 - cache.z[i]);
    dhc[i] = dh[i] * cache.z[i];
    dah[i] = dhc[i] * (1.0 - cache.hc[i] * cache.hc[i]);
    dh_prev[i] += dh[i] * (1.0 - cache.z[i]);
  }

  add_outer(wh.grad, dah, cache.x);
  add_outer(uh.grad, dah, cache.rh);
  add_scaled(std::span<double>(bh.grad.data), dah, 1.0);
  std::vector<double> drh = matvec_transposed(uh.value, dah);
  std::vector<double> dar(h);
  for (int i = 0; i < h; ++i) {
    double dr = drh[i] * cache.h_prev[i];
    dh_prev[i] += drh[i] * cache.r[i];
    dar[i] = dr * cache.r[i] * (1.0 - cache.r[i]);
  }

  add_outer(wz.grad, dz, cache.x);
  add_outer(uz.grad, dz, cache.h_prev);
  add_scaled(std::span<double>(bz.grad.data), dz, 1.0);
  add_outer(wr.grad, dar, cache.x);
  add_outer(ur.grad, dar, cache.h_prev);
  add_scaled(std::span<double>(br.grad.data), dar, 1.0);

  std::vector<double> duz = matvec_transposed(uz.value, dz);
  std::vector<double> dur = matvec_transposed(ur.value, dar);
  for (int i = 0; i < h; ++i) dh_prev[i] += duz[i] + dur[i];

  if (dx.empty()) dx.assign(input(), 0.0);
  std::vector<double> t = matvec_transposed(wh.value, dah);
  add_scaled(dx, t, 1.0);
  t = matvec_transposed(wz.value, dz);
  add_scaled(dx, t, 1.0);
  t = matvec_transposed(wr.value, dar);
  add_scaled(dx, t, 1.0);
}

std::vector<std::vector<double>> gru_run(const GruCell& cell, const RealMatrix& xs, bool reversed,
                                         std::vector<GruStepCache>* caches) {
  int t_len = xs.rows;
  std::vector<std::vector<double>> states(t_len);
  if (caches) caches->assign(t_len, {});
  std::vector<double> h(cell.hidden(), 0.0);
  for (int step = 0; step < t_len; ++step) {
    int t = reversed ? t_len - 1 - step : step;
    h = cell.forward(xs.row(t), h, caches ? &(*caches)[t] : nullptr);
    states[t] = h;
  }
  return states;
}

void gru_run_backward(GruCell& cell, const std::vector<GruStepCache>& caches,
                      const std::vector<std::vector<double>>& dstates, bool reversed,
                      RealMatrix* dxs) {
  int t_len = static_cast<int>(caches.size());
  std::vector<double> carry(cell.hidden(), 0.0);
  for (int step = t_len - 1; step >= 0; --step) {
    int t = reversed ? t_len - 1 - step : step;
    std::vector<double> dh = dstates[t];
    for (size_t i = 0; i < dh.size(); ++i) dh[i] += carry[i];
    std::vector<double> dx;
    carry.clear();
    cell.backward(caches[t], dh, dx, carry);
    if (dxs) add_scaled(dxs->row(t), dx, 1.0);
  }
}

}  // namespace rebmkit
