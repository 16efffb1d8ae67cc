// beam.hpp -- beam search over the generator with optional shallow fusion,
// terminated n-best lists, and length-normalized reranking.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rebmkit/generator.hpp"
#include "rebmkit/lm.hpp"

namespace rebmkit {

struct Hypothesis {
  std::vector<int> tokens;  // content tokens, BOS/EOS markers excluded
  double logp = 0.0;        // generator log-likelihood including the EOS step
  double ln_score = 0.0;    // logp / max(1, |tokens|)
  DecoderTrace trace;       // |tokens| + 1 steps
  std::optional<double> energy;
  std::optional<double> joint;
};

enum class RankKey { logp, ln_score, joint };

struct NBestList {
  std::string utt_id;
  std::vector<Hypothesis> hyps;  // sorted descending by the ranking key
  RankKey key = RankKey::logp;
  bool short_list = false;  // fewer terminated hypotheses than requested
};

struct SearchConfig {
  int beam = 32;
  int n = 32;
  int max_len = 24;
  double lm_lambda = 0.0;
};

// Fusion steers the search only; the returned ranking key is the raw
// generator log-likelihood. Hypotheses still alive at max_len are terminated
// with a scored EOS step. Requires 1 <= n <= beam.
NBestList beam_search(const GenParams& params, const RealMatrix& frames, const SearchConfig& cfg,
                      const BigramLM* lm = nullptr, const std::string& utt_id = "");

// Re-sorts descending by ln_score; sets the ranking key accordingly.
void ln_rank(NBestList& list);

double length_normalized(double logp, size_t len);

}  // namespace rebmkit
