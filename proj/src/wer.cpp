#include "rebmkit/wer.hpp"

#include "rebmkit/errors.hpp"

namespace rebmkit {

EditStats edit_distance(std::span<const int> ref, std::span<const int> hyp) {
  if (ref.empty()) throw PreconditionError("edit_distance: empty reference");
  size_t r = ref.size(), h = hyp.size();
  std::vector<std::vector<int>> cost(r + 1, std::vector<int>(h + 1, 0));
  for (size_t i = 0; i <= r; ++i) cost[i][0] = static_cast<int>(i);
  for (size_t j = 0; j <= h; ++j) cost[0][j] = static_cast<int>(j);
  for (size_t i = 1; i <= r; ++i) {
    for (size_t j = 1; j <= h; ++j) {
      int diag = cost[i - 1][j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      int insert = cost[i][j - 1] + 1;   // hyp has an extra token
      int erase = cost[i - 1][j] + 1;    // hyp dropped a token
      cost[i][j] = std::min(diag, std::min(insert, erase));
    }
  }

  EditStats stats;
  stats.n_ref = static_cast<long>(r);
  size_t i = r, j = h;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 &&
        cost[i][j] == cost[i - 1][j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1)) {
      if (ref[i - 1] != hyp[j - 1]) stats.sub += 1;
      --i;
      --j;
    } else if (j > 0 && cost[i][j] == cost[i][j - 1] + 1) {
      stats.ins += 1;
      --j;
    } else {
      stats.del += 1;
      --i;
    }
  }
  return stats;
}

EditStats corpus_wer(const std::vector<std::pair<std::vector<int>, std::vector<int>>>& pairs) {
  EditStats total;
  for (const auto& [ref, hyp] : pairs) total += edit_distance(ref, hyp);
  return total;
}

}  // namespace rebmkit
