// lm.hpp -- add-one smoothed bigram language model for shallow fusion.
#pragma once

#include <span>
#include <vector>

#include "rebmkit/matrix.hpp"

namespace rebmkit {

struct BigramLM {
  int vocab = 0;
  RealMatrix logp;  // vocab x vocab; row = history token, col = next token

  double log_prob(int prev, int next) const { return logp.at(prev, next); }
  // BOS -> y_1 -> ... -> y_n -> EOS
  double sequence_logprob(std::span<const int> tokens) const;
};

// Conditionals over the full token alphabet (BOS/EOS included) with add-one
// smoothing, counted from BOS-prefixed, EOS-terminated references.
BigramLM fit_bigram_lm(const std::vector<std::vector<int>>& references, int vocab);

// exp of the mean negative log-likelihood per scored transition
double perplexity(const BigramLM& lm, const std::vector<std::vector<int>>& references);

// gen_logprob + lambda * lm_logprob; lambda must be >= 0.
double fused_step_score(double gen_logprob, double lm_logprob, double lambda);

}  // namespace rebmkit
