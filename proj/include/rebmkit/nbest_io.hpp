// nbest_io.hpp -- on-disk n-best dump: one CSV row per hypothesis plus a
// binary sidecar holding the per-step feature matrix keyed by (utt_id, rank).
#pragma once

#include <string>
#include <vector>

#include "rebmkit/beam.hpp"
#include "rebmkit/matrix.hpp"

namespace rebmkit {

// feats[i][r] belongs to lists[i].hyps[r].
void save_nbest(const std::string& csv_path, const std::string& feats_path,
                const std::vector<NBestList>& lists,
                const std::vector<std::vector<RealMatrix>>& feats, uint64_t config_digest);

struct LoadedNBest {
  std::vector<NBestList> lists;  // traces are not persisted; hypotheses carry scores only
  std::vector<std::vector<RealMatrix>> feats;
};

LoadedNBest load_nbest(const std::string& csv_path, const std::string& feats_path,
                       uint64_t expect_digest);

struct RefScore {
  std::string utt_id;
  double logp = 0.0;
  std::vector<int> tokens;
  RealMatrix feats;
};

void save_refscores(const std::string& csv_path, const std::string& feats_path,
                    const std::vector<RefScore>& refs, uint64_t config_digest);
std::vector<RefScore> load_refscores(const std::string& csv_path, const std::string& feats_path,
                                     uint64_t expect_digest);

}  // namespace rebmkit
