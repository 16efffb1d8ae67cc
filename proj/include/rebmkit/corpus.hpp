// corpus.hpp -- synthetic noisy-channel corpus: token sequences from a seeded
// Markov source, rendered as duration-jittered codebook rows plus noise.
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "rebmkit/matrix.hpp"

namespace rebmkit {

struct Vocab {
  int size = 0;  // V, ids dense in [0, V); includes BOS and EOS
  int bos_id = 0;
  int eos_id = 1;
  std::vector<std::string> tokens;

  static Vocab make(int v);  // ConfigError if v < 3
  int num_content() const { return size - 2; }
  bool is_special(int id) const { return id == bos_id || id == eos_id; }
};

enum class Split { train, dev, test };

const char* split_name(Split s);

struct Utterance {
  std::string id;
  RealMatrix frames;           // T x d
  std::vector<int> reference;  // token ids, excludes BOS/EOS
  Split split = Split::train;
};

struct CorpusConfig {
  uint64_t seed = 1234;
  int vocab = 24;
  int frame_dim = 16;
  int n_train = 600;
  int n_dev = 150;
  int n_test = 150;
  int len_min = 4;
  int len_max = 16;
  int rep_min = 1;
  int rep_max = 3;
  double noise_sigma = 0.9;
  double markov_temp = 1.5;

  void validate() const;  // ConfigError naming the offending field
};

struct Corpus {
  Vocab vocab;
  RealMatrix codebook;  // V x d, frozen rendering table
  std::vector<Utterance> train;
  std::vector<Utterance> dev;
  std::vector<Utterance> test;

  const std::vector<Utterance>& split(Split s) const;
  std::vector<Utterance>& split(Split s);
};

// Deterministic in cfg; the three splits carry disjoint id prefixes.
Corpus synth_corpus(const CorpusConfig& cfg);

// Zeroes num_masks contiguous frame spans of width uniform in [1, max_width],
// clipped at the matrix boundary. X itself is left unmodified.
RealMatrix mask_augment(const RealMatrix& x, int num_masks, int max_width, uint64_t seed);

// Partition by seeded shuffle; a strictly positive fraction that rounds to an
// empty split is a ConfigError. Fractions must sum to 1.
Corpus split_corpus(const Corpus& corpus, const std::array<double, 3>& fractions, uint64_t seed);

// Directory layout: manifest.csv, refs.tsv, frames_<split>.bin (little-endian
// records of {u32 T, u32 d, f64[T*d]} behind a small file header).
void save_corpus(const Corpus& corpus, const std::string& dir, uint64_t config_digest);
Corpus load_corpus(const std::string& dir, int vocab_size, uint64_t expect_digest);

}  // namespace rebmkit
