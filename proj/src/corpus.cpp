#include "rebmkit/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <sstream>

#include "rebmkit/errors.hpp"
#include "rebmkit/ioutil.hpp"
#include "rebmkit/ops.hpp"
#include "rebmkit/rng.hpp"

namespace rebmkit {

namespace {

constexpr uint32_t kFramesMagic = 0x464b4252;  // "RBKF"
constexpr uint32_t kFramesVersion = 1;

std::string utt_id(Split s, int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s-%06d", split_name(s), index);
  return buf;
}

// Token sampler over content ids with softmax(logits / temp) rows.
struct MarkovSource {
  int vocab;                 // full V; content ids are [2, V)
  std::vector<double> init;  // cumulative over content ids
  RealMatrix trans;          // content x content, cumulative per row

  MarkovSource(int v, double temp, Rng& rng) : vocab(v) {
    int c = v - 2;
    std::vector<double> logits(c);
    for (double& l : logits) l = rng.gaussian();
    init = cumulative(logits, temp);
    trans = RealMatrix(c, c);
    for (int i = 0; i < c; ++i) {
      for (double& l : logits) l = rng.gaussian();
      logits[i] = -1e30;  // no self-transitions: keeps sigma=0 rendering invertible
      auto cum = cumulative(logits, temp);
      for (int j = 0; j < c; ++j) trans.at(i, j) = cum[j];
    }
  }

  static std::vector<double> cumulative(const std::vector<double>& logits, double temp) {
    std::vector<double> scaled(logits.size());
    for (size_t i = 0; i < logits.size(); ++i) scaled[i] = logits[i] / temp;
    std::vector<double> probs(logits.size());
    softmax_row(scaled, probs);
    double acc = 0.0;
    for (double& p : probs) {
      acc += p;
      p = acc;
    }
    probs.back() = 1.0;
    return probs;
  }

  static int pick(std::span<const double> cum, double u) {
    return static_cast<int>(std::lower_bound(cum.begin(), cum.end(), u) - cum.begin());
  }

  int first(Rng& rng) const { return 2 + pick(init, rng.uniform01()); }
  int next(int prev, Rng& rng) const { return 2 + pick(trans.row(prev - 2), rng.uniform01()); }
};

Utterance make_utterance(const CorpusConfig& cfg, const RealMatrix& codebook,
                         const MarkovSource& source, Split split, int index) {
  Rng rng(derive_seed(cfg.seed, std::string(split_name(split)) + "-utt", index));
  int len = rng.uniform_in(cfg.len_min, cfg.len_max);
  std::vector<int> ref(len);
  ref[0] = source.first(rng);
  for (int k = 1; k < len; ++k) ref[k] = source.next(ref[k - 1], rng);

  std::vector<int> reps(len);
  int total = 0;
  for (int k = 0; k < len; ++k) {
    reps[k] = rng.uniform_in(cfg.rep_min, cfg.rep_max);
    total += reps[k];
  }
  RealMatrix frames(total, cfg.frame_dim);
  int t = 0;
  for (int k = 0; k < len; ++k) {
    for (int r = 0; r < reps[k]; ++r, ++t) {
      for (int j = 0; j < cfg.frame_dim; ++j) {
        frames.at(t, j) = codebook.at(ref[k], j) + cfg.noise_sigma * rng.gaussian();
      }
    }
  }
  return Utterance{utt_id(split, index), std::move(frames), std::move(ref), split};
}

}  // namespace

const char* split_name(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::dev: return "dev";
    case Split::test: return "test";
  }
  return "?";
}

Vocab Vocab::make(int v) {
  if (v < 3) throw ConfigError("vocab: must be at least 3, got " + std::to_string(v));
  Vocab vocab;
  vocab.size = v;
  vocab.tokens.reserve(v);
  vocab.tokens.push_back("<s>");
  vocab.tokens.push_back("</s>");
  for (int i = 2; i < v; ++i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "u%02d", i);
    vocab.tokens.push_back(buf);
  }
  return vocab;
}

void CorpusConfig::validate() const {
  if (vocab < 3) throw ConfigError("corpus.vocab: must be >= 3");
  if (frame_dim < 1) throw ConfigError("corpus.frame_dim: must be >= 1");
  if (n_train < 1) throw ConfigError("corpus.train: must be >= 1");
  if (n_dev < 1) throw ConfigError("corpus.dev: must be >= 1");
  if (n_test < 1) throw ConfigError("corpus.test: must be >= 1");
  if (len_min < 1) throw ConfigError("corpus.len_min: must be >= 1");
  if (len_max < len_min) throw ConfigError("corpus.len_max: must be >= len_min");
  if (rep_min < 1) throw ConfigError("corpus.rep_min: must be >= 1");
  if (rep_max < rep_min) throw ConfigError("corpus.rep_max: must be >= rep_min");
  if (noise_sigma < 0.0) throw ConfigError("corpus.noise_sigma: must be >= 0");
  if (markov_temp <= 0.0) throw ConfigError("corpus.markov_temp: must be > 0");
}

const std::vector<Utterance>& Corpus::split(Split s) const {
  switch (s) {
    case Split::train: return train;
    case Split::dev: return dev;
    default: return test;
  }
}

std::vector<Utterance>& Corpus::split(Split s) {
  switch (s) {
    case Split::train: return train;
    case Split::dev: return dev;
    default: return test;
  }
}

Corpus synth_corpus(const CorpusConfig& cfg) {
  cfg.validate();
  Corpus corpus;
  corpus.vocab = Vocab::make(cfg.vocab);

  Rng codebook_rng(derive_seed(cfg.seed, "codebook"));
  corpus.codebook = RealMatrix(cfg.vocab, cfg.frame_dim);
  for (double& v : corpus.codebook.data) v = codebook_rng.gaussian();

  Rng markov_rng(derive_seed(cfg.seed, "markov"));
  MarkovSource source(cfg.vocab, cfg.markov_temp, markov_rng);

  auto fill = [&](Split s, int count) {
    auto& utts = corpus.split(s);
    utts.reserve(count);
    for (int i = 0; i < count; ++i) utts.push_back(make_utterance(cfg, corpus.codebook, source, s, i));
  };
  fill(Split::train, cfg.n_train);
  fill(Split::dev, cfg.n_dev);
  fill(Split::test, cfg.n_test);
  return corpus;
}

RealMatrix mask_augment(const RealMatrix& x, int num_masks, int max_width, uint64_t seed) {
  if (max_width < 1) throw PreconditionError("mask_augment: max_width must be >= 1");
  RealMatrix y = x;
  if (x.rows == 0) return y;
  Rng rng(seed);
  for (int m = 0; m < num_masks; ++m) {
    int width = rng.uniform_in(1, max_width);
    int start = rng.uniform_in(0, x.rows - 1);
    int end = std::min(start + width, x.rows);
    for (int t = start; t < end; ++t) {
      for (int j = 0; j < x.cols; ++j) y.at(t, j) = 0.0;
    }
  }
  return y;
}

Corpus split_corpus(const Corpus& corpus, const std::array<double, 3>& fractions, uint64_t seed) {
  double sum = fractions[0] + fractions[1] + fractions[2];
  if (std::abs(sum - 1.0) > 1e-9) {
    throw ConfigError("split fractions must sum to 1, got " + fmt_double(sum));
  }
  std::vector<Utterance> all;
  for (Split s : {Split::train, Split::dev, Split::test}) {
    const auto& utts = corpus.split(s);
    all.insert(all.end(), utts.begin(), utts.end());
  }
  Rng rng(derive_seed(seed, "split"));
  rng.shuffle(all);

  long n = static_cast<long>(all.size());
  long c1 = std::lround(fractions[0] * n);
  long c2 = std::lround((fractions[0] + fractions[1]) * n);
  c1 = std::clamp(c1, 0L, n);
  c2 = std::clamp(c2, c1, n);

  Corpus out;
  out.vocab = corpus.vocab;
  out.codebook = corpus.codebook;
  std::array<std::pair<long, long>, 3> ranges{{{0, c1}, {c1, c2}, {c2, n}}};
  std::array<Split, 3> splits{Split::train, Split::dev, Split::test};
  for (int i = 0; i < 3; ++i) {
    auto [lo, hi] = ranges[i];
    if (fractions[i] > 0.0 && hi == lo) {
      throw ConfigError(std::string("split '") + split_name(splits[i]) +
                        "' would be empty at fraction " + fmt_double(fractions[i]));
    }
    auto& utts = out.split(splits[i]);
    for (long k = lo; k < hi; ++k) {
      utts.push_back(all[k]);
      utts.back().split = splits[i];
    }
    std::sort(utts.begin(), utts.end(),
              [](const Utterance& a, const Utterance& b) { return a.id < b.id; });
  }
  return out;
}

void save_corpus(const Corpus& corpus, const std::string& dir, uint64_t config_digest) {
  std::filesystem::create_directories(dir);

  auto manifest = open_output(dir + "/manifest.csv");
  manifest << "# config_digest=" << digest_hex(config_digest) << "\n";
  manifest << "id,split,ref_len,frames\n";
  auto refs = open_output(dir + "/refs.tsv");
  refs << "# config_digest=" << digest_hex(config_digest) << "\n";

  for (Split s : {Split::train, Split::dev, Split::test}) {
    const auto& utts = corpus.split(s);
    auto frames = open_output(dir + "/frames_" + split_name(s) + ".bin");
    write_u32(frames, kFramesMagic);
    write_u32(frames, kFramesVersion);
    write_u64(frames, config_digest);
    write_u32(frames, static_cast<uint32_t>(utts.size()));
    for (const Utterance& u : utts) {
      manifest << u.id << "," << split_name(s) << "," << u.reference.size() << ","
               << u.frames.rows << "\n";
      refs << u.id << "\t";
      for (size_t k = 0; k < u.reference.size(); ++k) {
        if (k > 0) refs << " ";
        refs << u.reference[k];
      }
      refs << "\n";
      write_u32(frames, static_cast<uint32_t>(u.frames.rows));
      write_u32(frames, static_cast<uint32_t>(u.frames.cols));
      write_f64_span(frames, u.frames.data);
    }
  }
}

Corpus load_corpus(const std::string& dir, int vocab_size, uint64_t expect_digest) {
  Corpus corpus;
  corpus.vocab = Vocab::make(vocab_size);

  std::map<std::string, std::vector<int>> refs;
  for (const std::string& line : read_lines(dir + "/refs.tsv")) {
    if (line.empty() || line[0] == '#') continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos) throw CorruptArtifactError("refs.tsv: missing tab: " + line);
    std::vector<int> ids;
    std::istringstream ss(line.substr(tab + 1));
    int v;
    while (ss >> v) ids.push_back(v);
    refs[line.substr(0, tab)] = std::move(ids);
  }

  std::map<std::string, std::ifstream> frame_files;
  std::map<std::string, uint32_t> remaining;
  for (Split s : {Split::train, Split::dev, Split::test}) {
    std::string path = dir + "/frames_" + split_name(s) + ".bin";
    auto is = open_input(path);
    if (read_u32(is, path) != kFramesMagic) throw VersionMismatchError(path + ": bad magic");
    if (read_u32(is, path) != kFramesVersion) throw VersionMismatchError(path + ": bad version");
    uint64_t digest = read_u64(is, path);
    if (expect_digest != 0 && digest != expect_digest) {
      throw DigestMismatchError(path + ": config digest " + digest_hex(digest) +
                                " does not match current config " + digest_hex(expect_digest));
    }
    remaining[split_name(s)] = read_u32(is, path);
    frame_files[split_name(s)] = std::move(is);
  }

  auto lines = read_lines(dir + "/manifest.csv");
  for (const std::string& line : lines) {
    if (line.empty() || line[0] == '#' || line.rfind("id,", 0) == 0) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != 4) throw CorruptArtifactError("manifest.csv: bad row: " + line);
    const std::string& id = fields[0];
    const std::string& split_str = fields[1];
    auto it = frame_files.find(split_str);
    if (it == frame_files.end()) throw CorruptArtifactError("manifest.csv: bad split: " + line);
    if (remaining[split_str] == 0) {
      throw CorruptArtifactError("frames_" + split_str + ".bin: fewer records than manifest rows");
    }
    remaining[split_str] -= 1;

    std::string ctx = "frames_" + split_str + ".bin";
    uint32_t t = read_u32(it->second, ctx);
    uint32_t d = read_u32(it->second, ctx);
    Utterance u;
    u.id = id;
    u.frames = RealMatrix(static_cast<int>(t), static_cast<int>(d));
    read_f64_span(it->second, u.frames.data, ctx);
    auto rit = refs.find(id);
    if (rit == refs.end()) throw CorruptArtifactError("refs.tsv: missing id " + id);
    u.reference = rit->second;
    u.split = split_str == "train" ? Split::train : (split_str == "dev" ? Split::dev : Split::test);
    corpus.split(u.split).push_back(std::move(u));
  }
  return corpus;
}

}  // namespace rebmkit
