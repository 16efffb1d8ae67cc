#include "rebmkit/beam.hpp"

#include <algorithm>
#include <cmath>

#include "rebmkit/errors.hpp"
#include "rebmkit/ops.hpp"

namespace rebmkit {

namespace {

struct BeamItem {
  std::vector<int> tokens;
  double gen_logp = 0.0;
  double search_logp = 0.0;  // fused score when an LM is attached
  std::vector<double> state;
  int prev = 0;  // BOS at the root
  DecoderTrace trace;
};

struct Expansion {
  std::vector<double> state;
  std::vector<double> context;
  std::vector<double> logprobs;
  std::vector<std::pair<int, double>> topk;
};

struct Candidate {
  int item = 0;
  int token = 0;
  double gen_logp = 0.0;
  double search_logp = 0.0;
};

Hypothesis finish(const BeamItem& item, const Expansion& ex, double eos_logp) {
  Hypothesis hyp;
  hyp.tokens = item.tokens;
  hyp.logp = item.gen_logp + eos_logp;
  hyp.ln_score = length_normalized(hyp.logp, hyp.tokens.size());
  hyp.trace = item.trace;
  hyp.trace.push_back(TraceStep{ex.state, ex.context, 1, ex.topk, eos_logp});
  return hyp;
}

}  // namespace

double length_normalized(double logp, size_t len) {
  return logp / static_cast<double>(std::max<size_t>(len, 1));
}

NBestList beam_search(const GenParams& params, const RealMatrix& frames, const SearchConfig& cfg,
                      const BigramLM* lm, const std::string& utt_id) {
  if (cfg.n < 1 || cfg.n > cfg.beam) {
    throw PreconditionError("beam_search: need 1 <= n <= beam, got n=" + std::to_string(cfg.n) +
                            ", beam=" + std::to_string(cfg.beam));
  }
  if (cfg.max_len < 1) throw PreconditionError("beam_search: max_len must be >= 1");
  if (cfg.lm_lambda < 0.0) throw PreconditionError("beam_search: lm_lambda must be >= 0");

  RealMatrix enc_states = encode(params, frames);
  const int vocab = params.cfg.vocab;
  const int eos = 1;

  std::vector<BeamItem> active(1);
  active[0].state.assign(params.cfg.dec_hidden, 0.0);
  std::vector<Hypothesis> pool;

  std::vector<double> logprobs(vocab);
  for (int depth = 0; depth < cfg.max_len && !active.empty(); ++depth) {
    std::vector<Expansion> expansions(active.size());
    std::vector<Candidate> candidates;
    candidates.reserve(active.size() * static_cast<size_t>(vocab - 1));
    for (size_t i = 0; i < active.size(); ++i) {
      BeamItem& item = active[i];
      DecodeStepOut out = decode_step(params, item.state, item.prev, enc_states);
      Expansion& ex = expansions[i];
      ex.logprobs.resize(vocab);
      log_softmax_row(out.logits, ex.logprobs);
      std::vector<double> probs(vocab);
      softmax_row(out.logits, probs);
      ex.topk = top_k_probs(probs, params.cfg.topk);
      ex.state = std::move(out.state);
      ex.context = std::move(out.context);

      for (int v = 0; v < vocab; ++v) {
        double step_lm = lm ? lm->log_prob(item.prev, v) : 0.0;
        double step_search = fused_step_score(ex.logprobs[v], step_lm, lm ? cfg.lm_lambda : 0.0);
        if (v == eos) {
          pool.push_back(finish(item, ex, ex.logprobs[v]));
        } else {
          candidates.push_back(Candidate{static_cast<int>(i), v,
                                         item.gen_logp + ex.logprobs[v],
                                         item.search_logp + step_search});
        }
      }
    }

    if (static_cast<int>(pool.size()) >= cfg.beam) {
      active.clear();
      break;
    }

    std::sort(candidates.begin(), candidates.end(), [&](const Candidate& a, const Candidate& b) {
      if (a.search_logp != b.search_logp) return a.search_logp > b.search_logp;
      const auto& ta = active[a.item].tokens;
      const auto& tb = active[b.item].tokens;
      if (ta != tb) return ta < tb;
      return a.token < b.token;
    });
    if (static_cast<int>(candidates.size()) > cfg.beam) candidates.resize(cfg.beam);

    std::vector<BeamItem> next;
    next.reserve(candidates.size());
    for (const Candidate& c : candidates) {
      const BeamItem& parent = active[c.item];
      const Expansion& ex = expansions[c.item];
      BeamItem item;
      item.tokens = parent.tokens;
      item.tokens.push_back(c.token);
      item.gen_logp = c.gen_logp;
      item.search_logp = c.search_logp;
      item.state = ex.state;
      item.prev = c.token;
      item.trace = parent.trace;
      item.trace.push_back(
          TraceStep{ex.state, ex.context, c.token, ex.topk, ex.logprobs[c.token]});
      next.push_back(std::move(item));
    }
    active = std::move(next);
  }

  // depth limit reached: terminate survivors with a scored EOS step
  for (BeamItem& item : active) {
    DecodeStepOut out = decode_step(params, item.state, item.prev, enc_states);
    Expansion ex;
    ex.logprobs.resize(vocab);
    log_softmax_row(out.logits, ex.logprobs);
    std::vector<double> probs(vocab);
    softmax_row(out.logits, probs);
    ex.topk = top_k_probs(probs, params.cfg.topk);
    ex.state = std::move(out.state);
    ex.context = std::move(out.context);
    pool.push_back(finish(item, ex, ex.logprobs[eos]));
  }

  // merge duplicate token sequences, keeping the higher logp
  std::sort(pool.begin(), pool.end(), [](const Hypothesis& a, const Hypothesis& b) {
    if (a.tokens != b.tokens) return a.tokens < b.tokens;
    return a.logp > b.logp;
  });
  std::vector<Hypothesis> unique;
  for (Hypothesis& h : pool) {
    if (unique.empty() || unique.back().tokens != h.tokens) unique.push_back(std::move(h));
  }
  std::sort(unique.begin(), unique.end(), [](const Hypothesis& a, const Hypothesis& b) {
    if (a.logp != b.logp) return a.logp > b.logp;
    return a.tokens < b.tokens;
  });

  NBestList list;
  list.utt_id = utt_id;
  list.key = RankKey::logp;
  if (static_cast<int>(unique.size()) > cfg.n) unique.resize(cfg.n);
  list.short_list = static_cast<int>(unique.size()) < cfg.n;
  list.hyps = std::move(unique);
  return list;
}

void ln_rank(NBestList& list) {
  if (list.hyps.empty()) throw PreconditionError("ln_rank: empty n-best list");
  std::sort(list.hyps.begin(), list.hyps.end(), [](const Hypothesis& a, const Hypothesis& b) {
    if (a.ln_score != b.ln_score) return a.ln_score > b.ln_score;
    if (a.logp != b.logp) return a.logp > b.logp;
    return a.tokens < b.tokens;
  });
  list.key = RankKey::ln_score;
}

}  // namespace rebmkit
