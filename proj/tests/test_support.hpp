// test_support.hpp -- independent oracles shared by the test suites:
// exhaustive sequence enumeration, brute-force edit distance, and small
// fixture builders. These deliberately re-derive results step by step instead
// of calling the higher-level library paths they are used to check.
#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "rebmkit/generator.hpp"
#include "rebmkit/ops.hpp"

namespace rebmkit::testsupport {

struct EnumeratedSeq {
  std::vector<int> tokens;  // content tokens, EOS excluded
  double logp = 0.0;        // includes the terminating EOS step
};

struct Enumeration {
  std::vector<EnumeratedSeq> terminated;
  double residual_mass = 0.0;  // probability of depth-limited unterminated prefixes

  double terminated_mass() const {
    double m = 0.0;
    for (const auto& s : terminated) m += std::exp(s.logp);
    return m;
  }
};

// Walks the full autoregressive tree to depth max_len. With force_terminate,
// depth-limited prefixes receive a scored EOS step (the beam search
// convention); otherwise their probability mass is reported as residual.
inline Enumeration enumerate_sequences(const GenParams& params, const RealMatrix& frames,
                                       int max_len, bool force_terminate) {
  Enumeration result;
  RealMatrix enc_states = encode(params, frames);
  const int vocab = params.cfg.vocab;
  const int eos = 1;

  struct Walker {
    const GenParams& params;
    const RealMatrix& enc_states;
    int max_len;
    bool force;
    Enumeration& out;

    void walk(const std::vector<double>& state, int prev, std::vector<int>& prefix, double logp,
              int depth) {
      if (depth == max_len && !force) {
        out.residual_mass += std::exp(logp);
        return;
      }
      DecodeStepOut step = decode_step(params, state, prev, enc_states);
      std::vector<double> lp(step.logits.size());
      log_softmax_row(step.logits, lp);
      if (depth == max_len) {  // forced EOS only
        out.terminated.push_back({prefix, logp + lp[1]});
        return;
      }
      for (int v = 0; v < static_cast<int>(lp.size()); ++v) {
        if (v == 1) {
          out.terminated.push_back({prefix, logp + lp[v]});
        } else {
          prefix.push_back(v);
          walk(step.state, v, prefix, logp + lp[v], depth + 1);
          prefix.pop_back();
        }
      }
    }
  };

  (void)vocab;
  (void)eos;
  std::vector<double> state(params.cfg.dec_hidden, 0.0);
  std::vector<int> prefix;
  Walker{params, enc_states, max_len, force_terminate, result}.walk(state, 0, prefix, 0.0, 0);
  std::sort(result.terminated.begin(), result.terminated.end(),
            [](const EnumeratedSeq& a, const EnumeratedSeq& b) {
              if (a.logp != b.logp) return a.logp > b.logp;
              return a.tokens < b.tokens;
            });
  return result;
}

// Plain exponential-time recursion, the textbook definition.
inline int recursive_edit_cost(std::span<const int> ref, std::span<const int> hyp) {
  if (ref.empty()) return static_cast<int>(hyp.size());
  if (hyp.empty()) return static_cast<int>(ref.size());
  int match = recursive_edit_cost(ref.subspan(1), hyp.subspan(1)) + (ref[0] == hyp[0] ? 0 : 1);
  int del = recursive_edit_cost(ref.subspan(1), hyp) + 1;
  int ins = recursive_edit_cost(ref, hyp.subspan(1)) + 1;
  return std::min(match, std::min(del, ins));
}

inline GenParams small_gen(int vocab = 6, int frame_dim = 4, uint64_t seed = 7) {
  GenConfig cfg;
  cfg.vocab = vocab;
  cfg.frame_dim = frame_dim;
  cfg.embed = 5;
  cfg.enc_hidden = 6;
  cfg.dec_hidden = 6;
  cfg.topk = 3;
  return GenParams::init(cfg, seed);
}

inline RealMatrix random_frames(int t, int d, uint64_t seed) {
  Rng rng(seed);
  RealMatrix x(t, d);
  for (double& v : x.data) v = rng.gaussian();
  return x;
}

// Pushes the generator away from the uniform zero-head starting point so
// enumeration and search tests see distinct probabilities.
inline void randomize_head(GenParams& params, uint64_t seed, double scale = 0.6) {
  Rng rng(seed);
  for (double& v : params.out_w.value.data) v = scale * rng.gaussian();
  for (double& v : params.out_b.value.data) v = scale * rng.gaussian();
}

}  // namespace rebmkit::testsupport
