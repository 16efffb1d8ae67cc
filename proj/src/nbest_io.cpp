#include "rebmkit/nbest_io.hpp"

#include <sstream>

#include "rebmkit/errors.hpp"
#include "rebmkit/ioutil.hpp"

namespace rebmkit {

namespace {

constexpr uint32_t kFeatsMagic = 0x464e4252;  // "RBNF"
constexpr uint32_t kFeatsVersion = 1;

std::string join_tokens(const std::vector<int>& tokens) {
  std::string out;
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) out.push_back(' ');
    out += std::to_string(tokens[i]);
  }
  return out;
}

std::vector<int> parse_tokens(const std::string& field) {
  std::vector<int> tokens;
  std::istringstream ss(field);
  int v;
  while (ss >> v) tokens.push_back(v);
  return tokens;
}

void write_feat_record(std::ostream& os, const std::string& id, uint32_t rank,
                       const RealMatrix& m) {
  write_string(os, id);
  write_u32(os, rank);
  write_u32(os, static_cast<uint32_t>(m.rows));
  write_u32(os, static_cast<uint32_t>(m.cols));
  write_f64_span(os, m.data);
}

struct FeatReader {
  std::ifstream is;
  std::string path;
  uint32_t remaining = 0;

  FeatReader(const std::string& p, uint64_t expect_digest) : is(open_input(p)), path(p) {
    if (read_u32(is, path) != kFeatsMagic) throw VersionMismatchError(path + ": bad magic");
    if (read_u32(is, path) != kFeatsVersion) throw VersionMismatchError(path + ": bad version");
    uint64_t digest = read_u64(is, path);
    if (expect_digest != 0 && digest != expect_digest) {
      throw DigestMismatchError(path + ": config digest " + digest_hex(digest) +
                                " does not match current config " + digest_hex(expect_digest));
    }
    remaining = read_u32(is, path);
  }

  RealMatrix next(const std::string& want_id, uint32_t want_rank) {
    if (remaining == 0) throw CorruptArtifactError(path + ": feature records exhausted");
    remaining -= 1;
    std::string id = read_string(is, path);
    uint32_t rank = read_u32(is, path);
    if (id != want_id || rank != want_rank) {
      throw CorruptArtifactError(path + ": feature record (" + id + "," + std::to_string(rank) +
                                 ") does not match CSV row (" + want_id + "," +
                                 std::to_string(want_rank) + ")");
    }
    uint32_t rows = read_u32(is, path);
    uint32_t cols = read_u32(is, path);
    RealMatrix m(static_cast<int>(rows), static_cast<int>(cols));
    read_f64_span(is, m.data, path);
    return m;
  }
};

}  // namespace

void save_nbest(const std::string& csv_path, const std::string& feats_path,
                const std::vector<NBestList>& lists,
                const std::vector<std::vector<RealMatrix>>& feats, uint64_t config_digest) {
  if (lists.size() != feats.size()) {
    throw ContractError("save_nbest: lists and feature groups differ in length");
  }
  auto csv = open_output(csv_path);
  csv << "# config_digest=" << digest_hex(config_digest) << "\n";
  csv << "utt_id,rank,logp,ln_score,len,tokens\n";
  uint32_t records = 0;
  for (const auto& group : feats) records += static_cast<uint32_t>(group.size());
  auto bin = open_output(feats_path);
  write_u32(bin, kFeatsMagic);
  write_u32(bin, kFeatsVersion);
  write_u64(bin, config_digest);
  write_u32(bin, records);
  for (size_t i = 0; i < lists.size(); ++i) {
    const NBestList& list = lists[i];
    if (list.hyps.size() != feats[i].size()) {
      throw ContractError("save_nbest: hypothesis/feature count mismatch for " + list.utt_id);
    }
    for (size_t r = 0; r < list.hyps.size(); ++r) {
      const Hypothesis& hyp = list.hyps[r];
      csv << list.utt_id << "," << r << "," << fmt_double(hyp.logp) << ","
          << fmt_double(hyp.ln_score) << "," << hyp.tokens.size() << ","
          << join_tokens(hyp.tokens) << "\n";
      write_feat_record(bin, list.utt_id, static_cast<uint32_t>(r), feats[i][r]);
    }
  }
}

LoadedNBest load_nbest(const std::string& csv_path, const std::string& feats_path,
                       uint64_t expect_digest) {
  LoadedNBest out;
  FeatReader reader(feats_path, expect_digest);
  for (const std::string& line : read_lines(csv_path)) {
    if (line.empty() || line[0] == '#' || line.rfind("utt_id,", 0) == 0) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != 6) throw CorruptArtifactError(csv_path + ": bad row: " + line);
    const std::string& id = fields[0];
    uint32_t rank = static_cast<uint32_t>(std::stoul(fields[1]));
    if (out.lists.empty() || out.lists.back().utt_id != id) {
      out.lists.push_back(NBestList{id, {}, RankKey::logp, false});
      out.feats.emplace_back();
    }
    if (rank != out.lists.back().hyps.size()) {
      throw CorruptArtifactError(csv_path + ": non-contiguous rank in row: " + line);
    }
    Hypothesis hyp;
    hyp.logp = std::stod(fields[2]);
    hyp.ln_score = std::stod(fields[3]);
    hyp.tokens = parse_tokens(fields[5]);
    if (hyp.tokens.size() != std::stoul(fields[4])) {
      throw CorruptArtifactError(csv_path + ": token count mismatch in row: " + line);
    }
    out.feats.back().push_back(reader.next(id, rank));
    out.lists.back().hyps.push_back(std::move(hyp));
  }
  return out;
}

void save_refscores(const std::string& csv_path, const std::string& feats_path,
                    const std::vector<RefScore>& refs, uint64_t config_digest) {
  auto csv = open_output(csv_path);
  csv << "# config_digest=" << digest_hex(config_digest) << "\n";
  csv << "utt_id,logp,len,tokens\n";
  auto bin = open_output(feats_path);
  write_u32(bin, kFeatsMagic);
  write_u32(bin, kFeatsVersion);
  write_u64(bin, config_digest);
  write_u32(bin, static_cast<uint32_t>(refs.size()));
  for (const RefScore& ref : refs) {
    csv << ref.utt_id << "," << fmt_double(ref.logp) << "," << ref.tokens.size() << ","
        << join_tokens(ref.tokens) << "\n";
    write_feat_record(bin, ref.utt_id, 0, ref.feats);
  }
}

std::vector<RefScore> load_refscores(const std::string& csv_path, const std::string& feats_path,
                                     uint64_t expect_digest) {
  std::vector<RefScore> out;
  FeatReader reader(feats_path, expect_digest);
  for (const std::string& line : read_lines(csv_path)) {
    if (line.empty() || line[0] == '#' || line.rfind("utt_id,", 0) == 0) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != 4) throw CorruptArtifactError(csv_path + ": bad row: " + line);
    RefScore ref;
    ref.utt_id = fields[0];
    ref.logp = std::stod(fields[1]);
    ref.tokens = parse_tokens(fields[3]);
    if (ref.tokens.size() != std::stoul(fields[2])) {
      throw CorruptArtifactError(csv_path + ": token count mismatch in row: " + line);
    }
    ref.feats = reader.next(ref.utt_id, 0);
    out.push_back(std::move(ref));
  }
  return out;
}

}  // namespace rebmkit
