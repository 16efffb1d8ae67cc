#include "rebmkit/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "rebmkit/rng.hpp"

namespace rebmkit {

double GradCheckReport::max_rel_err() const {
  double m = 0.0;
  for (const auto& e : entries) m = std::max(m, e.max_rel_err);
  return m;
}

const GradCheckEntry* GradCheckReport::worst() const {
  const GradCheckEntry* w = nullptr;
  for (const auto& e : entries) {
    if (!w || e.max_rel_err > w->max_rel_err) w = &e;
  }
  return w;
}

GradCheckReport grad_check(const std::function<double(bool)>& loss,
                           const std::vector<ParamBlock*>& blocks, double h,
                           int samples_per_block, uint64_t seed) {
  for (ParamBlock* p : blocks) p->zero_grad();
  loss(true);
  std::vector<std::vector<double>> analytic;
  analytic.reserve(blocks.size());
  for (ParamBlock* p : blocks) analytic.push_back(p->grad.data);

  GradCheckReport report;
  Rng rng(seed);
  for (size_t bi = 0; bi < blocks.size(); ++bi) {
    ParamBlock* p = blocks[bi];
    GradCheckEntry entry;
    entry.block = p->name;
    size_t n = p->value.data.size();
    std::vector<size_t> coords;
    if (n <= static_cast<size_t>(samples_per_block)) {
      for (size_t i = 0; i < n; ++i) coords.push_back(i);
    } else {
      for (int s = 0; s < samples_per_block; ++s) coords.push_back(rng.uniform_int(n));
      std::sort(coords.begin(), coords.end());
      coords.erase(std::unique(coords.begin(), coords.end()), coords.end());
    }
    for (size_t i : coords) {
      double saved = p->value.data[i];
      p->value.data[i] = saved + h;
      double lp = loss(false);
      p->value.data[i] = saved - h;
      double lm = loss(false);
      p->value.data[i] = saved;
      double numeric = (lp - lm) / (2.0 * h);
      double a = analytic[bi][i];
      double denom = std::max(std::abs(a) + std::abs(numeric), 1e-8);
      double rel = std::abs(a - numeric) / denom;
      entry.checked += 1;
      if (rel > entry.max_rel_err) {
        entry.max_rel_err = rel;
        entry.analytic = a;
        entry.numeric = numeric;
        entry.row = static_cast<int>(i / p->value.cols);
        entry.col = static_cast<int>(i % p->value.cols);
      }
    }
    report.entries.push_back(entry);
  }
  // leave the analytic gradients in place for the caller
  for (size_t bi = 0; bi < blocks.size(); ++bi) blocks[bi]->grad.data = analytic[bi];
  return report;
}

}  // namespace rebmkit
