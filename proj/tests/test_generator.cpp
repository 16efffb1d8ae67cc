#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "rebmkit/errors.hpp"
#include "rebmkit/generator.hpp"
#include "rebmkit/gradcheck.hpp"
#include "rebmkit/ops.hpp"
#include "test_support.hpp"

using namespace rebmkit;
using namespace rebmkit::testsupport;

TEST_CASE("encode yields one state row per frame") {
  GenParams params = small_gen();
  RealMatrix x = random_frames(1, 4, 3);
  RealMatrix states = encode(params, x);
  CHECK(states.rows == 1);
  CHECK(states.cols == 2 * params.cfg.enc_hidden);
  RealMatrix x5 = random_frames(5, 4, 3);
  CHECK(encode(params, x5).rows == 5);
}

TEST_CASE("encode with zero weights and saturated update gate gives tanh(bias) rows") {
  GenParams params = small_gen();
  for (GruCell* cell : {&params.enc_fwd, &params.enc_bwd}) {
    for (ParamBlock* p : cell->blocks()) p->value.fill(0.0);
    cell->bz.value.fill(30.0);  // z ~= 1: state jumps straight to tanh(bh)
    cell->bh.value.fill(0.7);
  }
  RealMatrix x = random_frames(4, 4, 9);
  RealMatrix states = encode(params, x);
  for (int t = 0; t < states.rows; ++t) {
    for (int j = 0; j < states.cols; ++j) {
      CHECK(states.at(t, j) == doctest::Approx(std::tanh(0.7)).epsilon(1e-9));
    }
  }
}

TEST_CASE("reversing input with mirrored encoder cells mirrors the states") {
  GenParams params = small_gen();
  // make both directions share one set of weights
  auto fwd_blocks = params.enc_fwd.blocks();
  auto bwd_blocks = params.enc_bwd.blocks();
  for (size_t i = 0; i < fwd_blocks.size(); ++i) bwd_blocks[i]->value = fwd_blocks[i]->value;

  RealMatrix x = random_frames(6, 4, 21);
  RealMatrix rev(x.rows, x.cols);
  for (int t = 0; t < x.rows; ++t) {
    for (int j = 0; j < x.cols; ++j) rev.at(t, j) = x.at(x.rows - 1 - t, j);
  }
  RealMatrix a = encode(params, x);
  RealMatrix b = encode(params, rev);
  int h = params.cfg.enc_hidden;
  for (int t = 0; t < x.rows; ++t) {
    for (int i = 0; i < h; ++i) {
      CHECK(b.at(t, i) == doctest::Approx(a.at(x.rows - 1 - t, h + i)).epsilon(1e-12));
      CHECK(b.at(t, h + i) == doctest::Approx(a.at(x.rows - 1 - t, i)).epsilon(1e-12));
    }
  }
}

TEST_CASE("single-frame attention is forced to weight one") {
  GenParams params = small_gen();
  RealMatrix x = random_frames(1, 4, 5);
  RealMatrix enc_states = encode(params, x);
  std::vector<double> state(params.cfg.dec_hidden, 0.0);
  DecodeStepCache cache;
  DecodeStepOut out = decode_step(params, state, 0, enc_states, &cache);
  REQUIRE(cache.attn.size() == 1);
  CHECK(cache.attn[0] == 1.0);
  for (int j = 0; j < enc_states.cols; ++j) {
    CHECK(out.context[j] == doctest::Approx(enc_states.at(0, j)).epsilon(1e-15));
  }
}

TEST_CASE("attention weights always sum to one") {
  GenParams params = small_gen();
  RealMatrix x = random_frames(7, 4, 6);
  RealMatrix enc_states = encode(params, x);
  std::vector<double> state(params.cfg.dec_hidden, 0.3);
  for (int prev = 0; prev < params.cfg.vocab; ++prev) {
    DecodeStepCache cache;
    decode_step(params, state, prev, enc_states, &cache);
    double sum = 0.0;
    for (double a : cache.attn) sum += a;
    CHECK(std::abs(sum - 1.0) < 1e-12);
  }
}

TEST_CASE("zero-initialized head decodes uniformly") {
  GenParams params = small_gen();
  RealMatrix x = random_frames(3, 4, 8);
  RealMatrix enc_states = encode(params, x);
  std::vector<double> state(params.cfg.dec_hidden, 0.0);
  DecodeStepOut out = decode_step(params, state, 0, enc_states);
  std::vector<double> lp(out.logits.size());
  log_softmax_row(out.logits, lp);
  for (double v : lp) CHECK(v == doctest::Approx(-std::log(params.cfg.vocab)).epsilon(1e-12));
}

TEST_CASE("decode_step rejects out-of-vocabulary previous tokens") {
  GenParams params = small_gen();
  RealMatrix x = random_frames(2, 4, 8);
  RealMatrix enc_states = encode(params, x);
  std::vector<double> state(params.cfg.dec_hidden, 0.0);
  CHECK_THROWS_AS(decode_step(params, state, params.cfg.vocab, enc_states), PreconditionError);
  CHECK_THROWS_AS(decode_step(params, state, -1, enc_states), PreconditionError);
}

TEST_CASE("teacher-forced log probability is never positive") {
  GenParams params = small_gen();
  randomize_head(params, 13);
  RealMatrix x = random_frames(5, 4, 10);
  std::vector<int> y{2, 4, 3};
  auto [logp, trace] = log_prob_with_trace(params, x, y);
  CHECK(logp <= 0.0);
  CHECK(trace.size() == y.size() + 1);
  CHECK(trace.back().token == 1);  // EOS step present
  for (const TraceStep& step : trace) {
    REQUIRE(step.topk.size() == static_cast<size_t>(params.cfg.topk));
    for (size_t k = 1; k < step.topk.size(); ++k) {
      CHECK(step.topk[k - 1].second >= step.topk[k].second);
    }
    for (const auto& [id, p] : step.topk) {
      CHECK(p > 0.0);
      CHECK(p <= 1.0);
    }
  }
}

TEST_CASE("zero-initialized head scores every sequence uniformly") {
  GenParams params = small_gen();
  RealMatrix x = random_frames(4, 4, 11);
  std::vector<int> y{2, 3, 5, 2};
  auto [logp, trace] = log_prob_with_trace(params, x, y);
  CHECK(logp ==
        doctest::Approx(-(static_cast<double>(y.size()) + 1) * std::log(params.cfg.vocab))
            .epsilon(1e-12));
  CHECK(trace.size() == y.size() + 1);
}

TEST_CASE("terminated mass plus residual beam mass telescopes to one") {
  GenParams params = small_gen(3, 4);  // V=3: BOS, EOS, one content token
  randomize_head(params, 23);
  RealMatrix x = random_frames(4, 4, 12);
  Enumeration en = enumerate_sequences(params, x, 3, false);
  CHECK(std::abs(en.terminated_mass() + en.residual_mass - 1.0) < 1e-9);

  // teacher-forced scores agree with the enumeration walk
  for (const auto& seq : en.terminated) {
    if (seq.tokens.empty()) continue;
    auto [logp, trace] = log_prob_with_trace(params, x, seq.tokens);
    CHECK(logp == doctest::Approx(seq.logp).epsilon(1e-12));
  }
}

TEST_CASE("forced termination covers the whole space") {
  GenParams params = small_gen(4, 4);
  randomize_head(params, 29);
  RealMatrix x = random_frames(3, 4, 14);
  Enumeration en = enumerate_sequences(params, x, 2, true);
  // 1 empty + 3 length-1 + 9 length-2 sequences over the 3 non-EOS tokens
  CHECK(en.terminated.size() == 13);
  CHECK(en.residual_mass == 0.0);
}

TEST_CASE("mle loss of the zero-initialized model is log V") {
  GenParams params = small_gen();
  CorpusConfig ccfg;
  ccfg.vocab = params.cfg.vocab;
  ccfg.frame_dim = params.cfg.frame_dim;
  ccfg.n_train = 4;
  ccfg.n_dev = 1;
  ccfg.n_test = 1;
  ccfg.len_min = 2;
  ccfg.len_max = 5;
  Corpus corpus = synth_corpus(ccfg);
  std::vector<const Utterance*> batch{&corpus.train[0], &corpus.train[1]};
  MleOptions opts;
  opts.accumulate = false;
  double loss = mle_loss_and_grads(params, batch, opts);
  CHECK(loss == doctest::Approx(std::log(params.cfg.vocab)).epsilon(1e-12));
}

TEST_CASE("duplicating an utterance in the batch leaves the loss unchanged") {
  GenParams params = small_gen();
  randomize_head(params, 31);
  RealMatrix x = random_frames(5, 4, 15);
  Utterance u{"u0", x, {2, 3, 4}, Split::train};
  MleOptions opts;
  opts.accumulate = false;
  std::vector<const Utterance*> once{&u};
  std::vector<const Utterance*> twice{&u, &u};
  CHECK(mle_loss_and_grads(params, once, opts) ==
        doctest::Approx(mle_loss_and_grads(params, twice, opts)).epsilon(1e-12));
}

TEST_CASE("full mle gradients match finite differences") {
  GenParams params = small_gen();
  randomize_head(params, 37, 0.3);
  RealMatrix xa = random_frames(4, 4, 16);
  RealMatrix xb = random_frames(6, 4, 17);
  Utterance ua{"a", xa, {2, 5, 3}, Split::train};
  Utterance ub{"b", xb, {4, 2}, Split::train};
  std::vector<const Utterance*> batch{&ua, &ub};

  SUBCASE("plain teacher forcing") {
    auto loss = [&](bool accumulate) {
      MleOptions opts;
      opts.accumulate = accumulate;
      return mle_loss_and_grads(params, batch, opts);
    };
    auto report = grad_check(loss, params.blocks(), 1e-5, 6, 101);
    CHECK(report.max_rel_err() < 1e-4);
  }

  SUBCASE("with dropout and mask augmentation active") {
    auto loss = [&](bool accumulate) {
      MleOptions opts;
      opts.accumulate = accumulate;
      opts.augment = true;
      opts.num_masks = 1;
      opts.mask_width = 2;
      opts.dropout = 0.1;
      opts.seed = 404;  // fixed seed keeps the loss deterministic
      return mle_loss_and_grads(params, batch, opts);
    };
    auto report = grad_check(loss, params.blocks(), 1e-5, 6, 102);
    CHECK(report.max_rel_err() < 1e-4);
  }
}

TEST_CASE("training for zero epochs leaves parameters untouched") {
  GenParams params = small_gen();
  CorpusConfig ccfg;
  ccfg.vocab = params.cfg.vocab;
  ccfg.frame_dim = params.cfg.frame_dim;
  ccfg.n_train = 6;
  ccfg.n_dev = 2;
  ccfg.n_test = 2;
  ccfg.len_min = 2;
  ccfg.len_max = 4;
  Corpus corpus = synth_corpus(ccfg);
  uint64_t before = params.digest();
  GenTrainConfig tcfg;
  tcfg.epochs = 0;
  train_generator(params, corpus, tcfg);
  CHECK(params.digest() == before);
}

TEST_CASE("training is deterministic and beats the uniform baseline") {
  CorpusConfig ccfg;
  ccfg.seed = 5;
  ccfg.vocab = 8;
  ccfg.frame_dim = 5;
  ccfg.n_train = 40;
  ccfg.n_dev = 10;
  ccfg.n_test = 2;
  ccfg.len_min = 2;
  ccfg.len_max = 5;
  ccfg.noise_sigma = 0.3;
  Corpus corpus = synth_corpus(ccfg);

  GenConfig gcfg;
  gcfg.vocab = 8;
  gcfg.frame_dim = 5;
  gcfg.embed = 6;
  gcfg.enc_hidden = 8;
  gcfg.dec_hidden = 8;
  gcfg.topk = 3;

  GenTrainConfig tcfg;
  tcfg.epochs = 8;
  tcfg.batch = 8;
  tcfg.seed = 900;
  tcfg.num_masks = 1;
  tcfg.mask_width = 1;
  tcfg.max_len = 8;

  GenParams a = GenParams::init(gcfg, 42);
  GenTrainResult ra = train_generator(a, corpus, tcfg);
  GenParams b = GenParams::init(gcfg, 42);
  GenTrainResult rb = train_generator(b, corpus, tcfg);

  REQUIRE(ra.curve.size() == rb.curve.size());
  for (size_t i = 0; i < ra.curve.size(); ++i) {
    CHECK(ra.curve[i].train_loss == rb.curve[i].train_loss);
    CHECK(ra.curve[i].dev_loss == rb.curve[i].dev_loss);
    CHECK(ra.curve[i].dev_wer == rb.curve[i].dev_wer);
  }
  CHECK(a.digest() == b.digest());
  CHECK(!ra.diverged);
  CHECK(ra.curve.back().dev_loss < std::log(8.0));
}
