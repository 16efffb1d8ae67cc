// generator.hpp -- locally normalized attention encoder-decoder.
//
// Bidirectional recurrent encoder over frames, single recurrent decoder with
// dot-product attention, trained with teacher forcing by maximum likelihood.
// Every scored sequence also yields the per-step trace the residual scorer
// consumes.
#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "rebmkit/corpus.hpp"
#include "rebmkit/gru.hpp"

namespace rebmkit {

struct GenConfig {
  int vocab = 24;
  int frame_dim = 16;
  int embed = 16;
  int enc_hidden = 32;
  int dec_hidden = 32;
  int topk = 4;
};

struct GenParams {
  GenConfig cfg;
  ParamBlock embedding;  // V x e
  GruCell enc_fwd;       // d -> h_e
  GruCell enc_bwd;
  GruCell dec;           // e -> h_d
  ParamBlock attn_w;     // 2h_e x h_d, query projection
  ParamBlock out_w;      // V x (h_d + 2h_e), zero-initialized
  ParamBlock out_b;      // V x 1, zero-initialized

  static GenParams init(const GenConfig& cfg, uint64_t seed);
  std::vector<ParamBlock*> blocks();
  std::vector<const ParamBlock*> blocks() const;
  uint64_t digest() const;
  void zero_grads();
};

struct TraceStep {
  std::vector<double> state;    // decoder hidden state s_t
  std::vector<double> context;  // attention context c_t
  int token = -1;               // emitted token y_t (EOS on the final step)
  std::vector<std::pair<int, double>> topk;  // softmax probs, descending
  double logprob = 0.0;         // log P(y_t | y_<t, X)
};

// One entry per emitted token including the EOS step: length |y| + 1.
using DecoderTrace = std::vector<TraceStep>;

struct EncodeCache {
  std::vector<GruStepCache> fwd, bwd;
};

// Concatenated forward/backward states per frame: T x 2h_e.
RealMatrix encode(const GenParams& params, const RealMatrix& frames,
                  EncodeCache* cache = nullptr);

struct DecodeStepCache {
  GruStepCache gru;
  std::vector<double> dropout_mask;  // empty when dropout is off
  int prev_token = -1;
  std::vector<double> state, q, attn, context, u, probs;
  int target = -1;
};

struct DecodeStepOut {
  std::vector<double> state;
  std::vector<double> context;
  std::vector<double> logits;
};

DecodeStepOut decode_step(const GenParams& params, std::span<const double> prev_state,
                          int prev_token, const RealMatrix& enc_states,
                          DecodeStepCache* cache = nullptr,
                          const std::vector<double>* dropout_mask = nullptr);

std::vector<std::pair<int, double>> top_k_probs(std::span<const double> probs, int k);

// Teacher-forced pass over BOS . y . EOS; logp includes the EOS step.
std::pair<double, DecoderTrace> log_prob_with_trace(const GenParams& params,
                                                    const RealMatrix& frames,
                                                    std::span<const int> reference);

struct MleOptions {
  bool accumulate = true;
  bool augment = false;
  int num_masks = 0;
  int mask_width = 1;
  double dropout = 0.0;
  uint64_t seed = 0;
};

// loss = -(sum logp) / (sum (|y|+1)); gradients accumulate into all blocks
// when opts.accumulate. TrainingError naming the utterance on non-finite loss.
double mle_loss_and_grads(GenParams& params, std::span<const Utterance* const> batch,
                          const MleOptions& opts);

std::vector<int> greedy_decode(const GenParams& params, const RealMatrix& frames, int max_len);

struct GenTrainConfig {
  int epochs = 30;
  int batch = 8;
  AdamConfig adam;
  double clip = 5.0;
  double dropout = 0.1;
  bool augment = true;
  int num_masks = 2;
  int mask_width = 2;
  int max_len = 24;  // greedy dev decoding
  uint64_t seed = 0;
};

struct GenCurveRow {
  int epoch = 0;
  double train_loss = 0.0;
  double dev_loss = 0.0;
  double dev_wer = 0.0;
};

struct GenTrainResult {
  std::vector<GenCurveRow> curve;
  int best_epoch = -1;  // by dev loss
  bool diverged = false;
};

// Params end at the best-dev epoch (also on divergence: last good checkpoint).
GenTrainResult train_generator(GenParams& params, const Corpus& corpus,
                               const GenTrainConfig& cfg);

// Forward-only mean NLL per token over a whole split (no dropout, no masks).
double dataset_loss(const GenParams& params, std::span<const Utterance> utts);

}  // namespace rebmkit
