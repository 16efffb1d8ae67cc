#include "rebmkit/generator.hpp"

#include <algorithm>
#include <cmath>

#include "rebmkit/errors.hpp"
#include "rebmkit/ops.hpp"
#include "rebmkit/wer.hpp"

namespace rebmkit {

namespace {

void check_token(int token, int vocab, const char* who) {
  if (token < 0 || token >= vocab) {
    throw PreconditionError(std::string(who) + ": token " + std::to_string(token) +
                            " outside vocabulary of size " + std::to_string(vocab));
  }
}

std::vector<double> dropout_mask(int n, double p, Rng& rng) {
  std::vector<double> mask(n);
  double keep = 1.0 / (1.0 - p);
  for (double& m : mask) m = rng.uniform01() < p ? 0.0 : keep;
  return mask;
}

}  // namespace

GenParams GenParams::init(const GenConfig& cfg, uint64_t seed) {
  Rng rng(derive_seed(seed, "gen-init"));
  GenParams p;
  p.cfg = cfg;
  p.embedding = ParamBlock("embedding", cfg.vocab, cfg.embed);
  init_glorot_uniform(p.embedding, rng);
  p.enc_fwd = GruCell("enc_fwd", cfg.frame_dim, cfg.enc_hidden, rng);
  p.enc_bwd = GruCell("enc_bwd", cfg.frame_dim, cfg.enc_hidden, rng);
  p.dec = GruCell("dec", cfg.embed, cfg.dec_hidden, rng);
  p.attn_w = ParamBlock("attn_w", 2 * cfg.enc_hidden, cfg.dec_hidden);
  init_glorot_uniform(p.attn_w, rng);
  // zero-initialized head: the untrained model is exactly uniform per step
  p.out_w = ParamBlock("out_w", cfg.vocab, cfg.dec_hidden + 2 * cfg.enc_hidden);
  p.out_b = ParamBlock("out_b", cfg.vocab, 1);
  return p;
}

std::vector<ParamBlock*> GenParams::blocks() {
  std::vector<ParamBlock*> out{&embedding};
  for (GruCell* cell : {&enc_fwd, &enc_bwd, &dec}) {
    auto b = cell->blocks();
    out.insert(out.end(), b.begin(), b.end());
  }
  out.push_back(&attn_w);
  out.push_back(&out_w);
  out.push_back(&out_b);
  return out;
}

std::vector<const ParamBlock*> GenParams::blocks() const {
  auto mutable_blocks = const_cast<GenParams*>(this)->blocks();
  return {mutable_blocks.begin(), mutable_blocks.end()};
}

uint64_t GenParams::digest() const {
  auto bs = const_cast<GenParams*>(this)->blocks();
  return params_digest(bs);
}

void GenParams::zero_grads() {
  for (ParamBlock* p : blocks()) p->zero_grad();
}

RealMatrix encode(const GenParams& params, const RealMatrix& frames, EncodeCache* cache) {
  if (frames.rows < 1) throw PreconditionError("encode: empty frame matrix");
  if (!frames.all_finite()) throw PreconditionError("encode: non-finite frames");
  auto fwd = gru_run(params.enc_fwd, frames, false, cache ? &cache->fwd : nullptr);
  auto bwd = gru_run(params.enc_bwd, frames, true, cache ? &cache->bwd : nullptr);
  int h = params.cfg.enc_hidden;
  RealMatrix states(frames.rows, 2 * h);
  for (int t = 0; t < frames.rows; ++t) {
    for (int i = 0; i < h; ++i) {
      states.at(t, i) = fwd[t][i];
      states.at(t, h + i) = bwd[t][i];
    }
  }
  return states;
}

DecodeStepOut decode_step(const GenParams& params, std::span<const double> prev_state,
                          int prev_token, const RealMatrix& enc_states, DecodeStepCache* cache,
                          const std::vector<double>* mask) {
  check_token(prev_token, params.cfg.vocab, "decode_step");
  std::vector<double> x(params.embedding.value.row(prev_token).begin(),
                        params.embedding.value.row(prev_token).end());
  if (mask) {
    for (size_t i = 0; i < x.size(); ++i) x[i] *= (*mask)[i];
  }

  std::vector<double> state = params.dec.forward(x, prev_state, cache ? &cache->gru : nullptr);

  // dot-product attention against the projected state
  std::vector<double> q = matvec(params.attn_w.value, state);
  std::vector<double> scores(enc_states.rows);
  for (int t = 0; t < enc_states.rows; ++t) scores[t] = dot(enc_states.row(t), q);
  std::vector<double> attn(enc_states.rows);
  softmax_row(scores, attn);
  std::vector<double> context(enc_states.cols, 0.0);
  for (int t = 0; t < enc_states.rows; ++t) add_scaled(context, enc_states.row(t), attn[t]);

  std::vector<double> u = concat(state, context);
  std::vector<double> logits = affine(params.out_w, params.out_b, u);

  if (cache) {
    cache->dropout_mask = mask ? *mask : std::vector<double>{};
    cache->prev_token = prev_token;
    cache->state = state;
    cache->q = q;
    cache->attn = attn;
    cache->context = context;
    cache->u = u;
  }
  return DecodeStepOut{std::move(state), std::move(context), std::move(logits)};
}

std::vector<std::pair<int, double>> top_k_probs(std::span<const double> probs, int k) {
  std::vector<std::pair<int, double>> all(probs.size());
  for (size_t i = 0; i < probs.size(); ++i) all[i] = {static_cast<int>(i), probs[i]};
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  all.resize(std::min<size_t>(all.size(), static_cast<size_t>(k)));
  return all;
}

std::pair<double, DecoderTrace> log_prob_with_trace(const GenParams& params,
                                                    const RealMatrix& frames,
                                                    std::span<const int> reference) {
  if (reference.empty()) throw PreconditionError("log_prob_with_trace: empty reference");
  for (int t : reference) check_token(t, params.cfg.vocab, "log_prob_with_trace");

  RealMatrix enc_states = encode(params, frames);
  std::vector<double> state(params.cfg.dec_hidden, 0.0);
  int prev = 0;  // BOS
  double total = 0.0;
  DecoderTrace trace;
  trace.reserve(reference.size() + 1);
  size_t steps = reference.size() + 1;
  std::vector<double> logprobs(params.cfg.vocab);
  std::vector<double> probs(params.cfg.vocab);
  for (size_t t = 0; t < steps; ++t) {
    int target = t < reference.size() ? reference[t] : 1;  // EOS
    DecodeStepOut out = decode_step(params, state, prev, enc_states);
    log_softmax_row(out.logits, logprobs);
    softmax_row(out.logits, probs);
    double lp = logprobs[target];
    trace.push_back(TraceStep{out.state, out.context, target,
                              top_k_probs(probs, params.cfg.topk), lp});
    total += lp;
    state = out.state;
    prev = target;
  }
  return {total, std::move(trace)};
}

namespace {

// Cached forward pass of one teacher-forced utterance plus its backward.
struct UttWork {
  RealMatrix frames;
  EncodeCache enc_cache;
  RealMatrix enc_states;
  std::vector<DecodeStepCache> steps;
  double logp = 0.0;
};

void forward_utterance(const GenParams& params, const RealMatrix& frames,
                       std::span<const int> reference, double dropout, Rng* dropout_rng,
                       UttWork& work) {
  work.frames = frames;
  work.enc_states = encode(params, frames, &work.enc_cache);
  size_t steps = reference.size() + 1;
  work.steps.assign(steps, {});
  std::vector<double> state(params.cfg.dec_hidden, 0.0);
  int prev = 0;  // BOS
  std::vector<double> logprobs(params.cfg.vocab);
  for (size_t t = 0; t < steps; ++t) {
    int target = t < reference.size() ? reference[t] : 1;
    DecodeStepCache& cache = work.steps[t];
    std::vector<double> mask;
    if (dropout > 0.0) mask = dropout_mask(params.cfg.embed, dropout, *dropout_rng);
    DecodeStepOut out =
        decode_step(params, state, prev, work.enc_states, &cache, dropout > 0.0 ? &mask : nullptr);
    log_softmax_row(out.logits, logprobs);
    cache.probs.resize(params.cfg.vocab);
    softmax_row(out.logits, cache.probs);
    cache.target = target;
    work.logp += logprobs[target];
    state = out.state;
    prev = target;
  }
}

void backward_utterance(GenParams& params, UttWork& work, double weight) {
  int dec_hidden = params.cfg.dec_hidden;
  int enc_cols = work.enc_states.cols;
  RealMatrix denc(work.enc_states.rows, enc_cols);
  std::vector<double> carry(dec_hidden, 0.0);

  for (int t = static_cast<int>(work.steps.size()) - 1; t >= 0; --t) {
    DecodeStepCache& cache = work.steps[t];

    // d(-w * logp) / dlogits = w * (probs - onehot(target))
    std::vector<double> dlogits = cache.probs;
    for (double& v : dlogits) v *= weight;
    dlogits[cache.target] -= weight;

    std::vector<double> du = affine_backward(params.out_w, params.out_b, cache.u, dlogits);
    std::vector<double> dstate(du.begin(), du.begin() + dec_hidden);
    std::vector<double> dcontext(du.begin() + dec_hidden, du.end());
    add_scaled(dstate, carry, 1.0);

    // context = sum_t attn_t * H_t
    std::vector<double> dattn(work.enc_states.rows);
    for (int j = 0; j < work.enc_states.rows; ++j) {
      dattn[j] = dot(work.enc_states.row(j), dcontext);
      add_scaled(denc.row(j), dcontext, cache.attn[j]);
    }
    // softmax backward
    double inner = dot(cache.attn, dattn);
    std::vector<double> dscores(work.enc_states.rows);
    for (int j = 0; j < work.enc_states.rows; ++j) {
      dscores[j] = cache.attn[j] * (dattn[j] - inner);
    }
    // scores_j = H_j . q
    std::vector<double> dq(enc_cols, 0.0);
    for (int j = 0; j < work.enc_states.rows; ++j) {
      if (dscores[j] == 0.0) continue;
      add_scaled(dq, work.enc_states.row(j), dscores[j]);
      add_scaled(denc.row(j), cache.q, dscores[j]);
    }
    // q = attn_w * state
    add_outer(params.attn_w.grad, dq, cache.state);
    std::vector<double> ds_attn = matvec_transposed(params.attn_w.value, dq);
    add_scaled(dstate, ds_attn, 1.0);

    std::vector<double> dx;
    carry.clear();
    params.dec.backward(cache.gru, dstate, dx, carry);

    if (!cache.dropout_mask.empty()) {
      for (size_t i = 0; i < dx.size(); ++i) dx[i] *= cache.dropout_mask[i];
    }
    add_scaled(params.embedding.grad.row(cache.prev_token), dx, 1.0);
  }

  // split dH into the two encoder directions
  int enc_hidden = params.cfg.enc_hidden;
  std::vector<std::vector<double>> dfwd(denc.rows), dbwd(denc.rows);
  for (int t = 0; t < denc.rows; ++t) {
    auto row = denc.row(t);
    dfwd[t].assign(row.begin(), row.begin() + enc_hidden);
    dbwd[t].assign(row.begin() + enc_hidden, row.end());
  }
  gru_run_backward(params.enc_fwd, work.enc_cache.fwd, dfwd, false, nullptr);
  gru_run_backward(params.enc_bwd, work.enc_cache.bwd, dbwd, true, nullptr);
}

}  // namespace

double mle_loss_and_grads(GenParams& params, std::span<const Utterance* const> batch,
                          const MleOptions& opts) {
  if (batch.empty()) throw PreconditionError("mle_loss_and_grads: empty batch");
  long total_tokens = 0;
  for (const Utterance* u : batch) total_tokens += static_cast<long>(u->reference.size()) + 1;

  double total_logp = 0.0;
  double weight = 1.0 / static_cast<double>(total_tokens);
  for (size_t i = 0; i < batch.size(); ++i) {
    const Utterance& utt = *batch[i];
    RealMatrix frames = opts.augment
                            ? mask_augment(utt.frames, opts.num_masks, opts.mask_width,
                                           derive_seed(opts.seed, "mle-mask", i))
                            : utt.frames;
    Rng dropout_rng(derive_seed(opts.seed, "mle-dropout", i));
    UttWork work;
    forward_utterance(params, frames, utt.reference, opts.dropout, &dropout_rng, work);
    if (!std::isfinite(work.logp)) {
      throw TrainingError("mle_loss_and_grads: non-finite loss on utterance " + utt.id);
    }
    total_logp += work.logp;
    if (opts.accumulate) backward_utterance(params, work, weight);
  }
  return -total_logp * weight;
}

std::vector<int> greedy_decode(const GenParams& params, const RealMatrix& frames, int max_len) {
  RealMatrix enc_states = encode(params, frames);
  std::vector<double> state(params.cfg.dec_hidden, 0.0);
  int prev = 0;
  std::vector<int> tokens;
  for (int t = 0; t < max_len; ++t) {
    DecodeStepOut out = decode_step(params, state, prev, enc_states);
    int best = 0;
    for (int v = 1; v < params.cfg.vocab; ++v) {
      if (out.logits[v] > out.logits[best]) best = v;
    }
    if (best == 1) break;  // EOS
    tokens.push_back(best);
    state = out.state;
    prev = best;
  }
  return tokens;
}

double dataset_loss(const GenParams& params, std::span<const Utterance> utts) {
  double total_logp = 0.0;
  long total_tokens = 0;
  for (const Utterance& u : utts) {
    total_logp += log_prob_with_trace(params, u.frames, u.reference).first;
    total_tokens += static_cast<long>(u.reference.size()) + 1;
  }
  return -total_logp / static_cast<double>(total_tokens);
}

GenTrainResult train_generator(GenParams& params, const Corpus& corpus,
                               const GenTrainConfig& cfg) {
  if (corpus.train.empty() || corpus.dev.empty()) {
    throw PreconditionError("train_generator: needs non-empty train and dev splits");
  }
  GenTrainResult result;
  auto blocks = params.blocks();
  params.zero_grads();

  std::vector<RealMatrix> best_values;
  double best_dev = 0.0;
  auto snapshot = [&]() {
    best_values.clear();
    for (ParamBlock* p : blocks) best_values.push_back(p->value);
  };
  auto restore = [&]() {
    if (best_values.empty()) return;
    for (size_t i = 0; i < blocks.size(); ++i) blocks[i]->value = best_values[i];
  };

  std::vector<size_t> order(corpus.train.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng shuffle_rng(derive_seed(cfg.seed, "shuffle", epoch));
    shuffle_rng.shuffle(order);

    double epoch_loss = 0.0;
    int batches = 0;
    try {
      for (size_t start = 0; start < order.size(); start += cfg.batch) {
        std::vector<const Utterance*> batch;
        for (size_t k = start; k < std::min(order.size(), start + cfg.batch); ++k) {
          batch.push_back(&corpus.train[order[k]]);
        }
        MleOptions opts;
        opts.accumulate = true;
        opts.augment = cfg.augment;
        opts.num_masks = cfg.num_masks;
        opts.mask_width = cfg.mask_width;
        opts.dropout = cfg.dropout;
        opts.seed = derive_seed(cfg.seed, "mle", static_cast<uint64_t>(epoch) * 1000003 + start);
        epoch_loss += mle_loss_and_grads(params, batch, opts);
        batches += 1;
        clip_global_norm(blocks, cfg.clip);
        for (ParamBlock* p : blocks) adam_step(*p, cfg.adam);
      }
    } catch (const TrainingError&) {
      restore();
      result.diverged = true;
      return result;
    }

    GenCurveRow row;
    row.epoch = epoch;
    row.train_loss = epoch_loss / std::max(1, batches);
    row.dev_loss = dataset_loss(params, corpus.dev);
    std::vector<std::pair<std::vector<int>, std::vector<int>>> pairs;
    pairs.reserve(corpus.dev.size());
    for (const Utterance& u : corpus.dev) {
      pairs.emplace_back(u.reference, greedy_decode(params, u.frames, cfg.max_len));
    }
    row.dev_wer = corpus_wer(pairs).wer();
    result.curve.push_back(row);

    if (result.best_epoch < 0 || row.dev_loss < best_dev) {
      best_dev = row.dev_loss;
      result.best_epoch = epoch;
      snapshot();
    }
  }
  restore();
  return result;
}

}  // namespace rebmkit
