#include "rebmkit/lm.hpp"

#include <cmath>

#include "rebmkit/errors.hpp"

namespace rebmkit {

double BigramLM::sequence_logprob(std::span<const int> tokens) const {
  int prev = 0;  // BOS
  double total = 0.0;
  for (int t : tokens) {
    total += log_prob(prev, t);
    prev = t;
  }
  total += log_prob(prev, 1);  // EOS
  return total;
}

BigramLM fit_bigram_lm(const std::vector<std::vector<int>>& references, int vocab) {
  if (references.empty()) throw PreconditionError("fit_bigram_lm: empty reference corpus");
  RealMatrix counts(vocab, vocab);
  for (const auto& ref : references) {
    int prev = 0;
    for (int t : ref) {
      counts.at(prev, t) += 1.0;
      prev = t;
    }
    counts.at(prev, 1) += 1.0;
  }
  BigramLM lm;
  lm.vocab = vocab;
  lm.logp = RealMatrix(vocab, vocab);
  for (int i = 0; i < vocab; ++i) {
    double row_total = 0.0;
    for (int j = 0; j < vocab; ++j) row_total += counts.at(i, j);
    double denom = std::log(row_total + vocab);
    for (int j = 0; j < vocab; ++j) {
      lm.logp.at(i, j) = std::log(counts.at(i, j) + 1.0) - denom;
    }
  }
  return lm;
}

double perplexity(const BigramLM& lm, const std::vector<std::vector<int>>& references) {
  double total = 0.0;
  long transitions = 0;
  for (const auto& ref : references) {
    total += lm.sequence_logprob(ref);
    transitions += static_cast<long>(ref.size()) + 1;
  }
  return std::exp(-total / static_cast<double>(transitions));
}

double fused_step_score(double gen_logprob, double lm_logprob, double lambda) {
  if (lambda < 0.0) throw PreconditionError("fused_step_score: lambda must be >= 0");
  return gen_logprob + lambda * lm_logprob;
}

}  // namespace rebmkit
