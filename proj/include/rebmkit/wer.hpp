// wer.hpp -- Levenshtein alignment and pooled word error rate statistics.
#pragma once

#include <span>
#include <vector>

namespace rebmkit {

struct EditStats {
  long n_ref = 0;
  long sub = 0;
  long ins = 0;
  long del = 0;

  long errors() const { return sub + ins + del; }
  double wer() const { return n_ref == 0 ? 0.0 : static_cast<double>(errors()) / n_ref; }
  EditStats& operator+=(const EditStats& o) {
    n_ref += o.n_ref;
    sub += o.sub;
    ins += o.ins;
    del += o.del;
    return *this;
  }
  bool operator==(const EditStats&) const = default;
};

// Unit-cost alignment; backtrace ties prefer substitution, then insertion,
// then deletion. PreconditionError on an empty reference.
EditStats edit_distance(std::span<const int> ref, std::span<const int> hyp);

// Pooled over utterances: WER is the ratio of summed counts, not the mean of
// per-utterance rates.
EditStats corpus_wer(const std::vector<std::pair<std::vector<int>, std::vector<int>>>& pairs);

}  // namespace rebmkit
