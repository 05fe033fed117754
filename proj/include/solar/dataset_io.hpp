#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <openssl/evp.h>

#include "solar/codec.hpp"
#include "solar/generator.hpp"
#include "solar/grid_maker.hpp"

// On-disk layout of a dataset directory (format_version 1):
//
//   episodes.jsonl    one Episode per line
//   segments.jsonl    one Segment per line
//   quarantine.jsonl  one rejected plan per line (may be empty)
//   manifest.json     one line, written last
//
// All files are UTF-8, "\n"-terminated, compact JSON with keys in the order the
// encoders below emit them. Grids are nested integer arrays, row-major. Padding
// entries in segments store full MaxH x MaxW grids of color 10.
//
// The manifest "digest" is "sha256:<hex>" over, in order, for each data file:
// name, NUL, decimal byte length, NUL, bytes; then "manifest", NUL and the
// manifest line itself with the "digest" key removed.

namespace solar {

inline constexpr int kFormatVersion = 1;
inline constexpr const char* kEpisodesFile = "episodes.jsonl";
inline constexpr const char* kSegmentsFile = "segments.jsonl";
inline constexpr const char* kQuarantineFile = "quarantine.jsonl";
inline constexpr const char* kManifestFile = "manifest.json";

class DatasetError : public std::runtime_error {
 public:
  enum class Kind { IoFailure, SerializationFailure, DigestMismatch, UnsupportedVersion, ParseError, CountMismatch };

  DatasetError(Kind kind, const std::string& detail, std::string file = {}, std::size_t line = 0)
      : std::runtime_error(detail), kind_(kind), file_(std::move(file)), line_(line) {}

  Kind kind() const noexcept { return kind_; }
  const std::string& file() const noexcept { return file_; }
  /// 1-based line number for ParseError, 0 otherwise.
  std::size_t line() const noexcept { return line_; }

 private:
  Kind kind_;
  std::string file_;
  std::size_t line_;
};

struct DatasetParams {
  std::size_t problems = 0;
  std::size_t episodes_per_problem = 0;
  std::size_t gold_per_problem = 0;
  int demos = 3;
  Dims max_dims{10, 10};
  std::size_t horizon = 5;
  std::uint64_t seed = 0;
  int nonoptimal_len = 10;
  int nonoptimal_jitter = 2;

  friend bool operator==(const DatasetParams&, const DatasetParams&) = default;
};

struct DatasetCounts {
  std::size_t episodes = 0;
  std::size_t gold = 0;
  std::size_t segments = 0;
  std::size_t quarantined = 0;

  friend bool operator==(const DatasetCounts&, const DatasetCounts&) = default;
};

struct DatasetManifest {
  int format_version = kFormatVersion;
  std::string task;
  DatasetParams params;
  DatasetCounts counts;
  std::string digest;

  friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

struct Dataset {
  DatasetManifest manifest;
  std::vector<Episode> episodes;
  std::vector<Segment> segments;
  std::vector<QuarantineRecord> quarantine;
};

struct SolarFileSet {
  std::filesystem::path manifest;
  std::filesystem::path episodes;
  std::filesystem::path segments;
  std::filesystem::path quarantine;

  static SolarFileSet in(const std::filesystem::path& dir) {
    return {dir / kManifestFile, dir / kEpisodesFile, dir / kSegmentsFile, dir / kQuarantineFile};
  }
};

namespace io {

using codec::Json;

inline Json demos_to_json(const std::vector<DemoPair>& demos) {
  Json arr = Json::array();
  for (const auto& d : demos) {
    Json j = Json::object();
    j["input"] = codec::grid_to_json(d.input);
    j["output"] = codec::grid_to_json(d.output);
    arr.push_back(std::move(j));
  }
  return arr;
}

inline std::vector<DemoPair> demos_from_json(const Json& j) {
  if (!j.is_array()) throw codec::CodecError("demonstrations must be an array");
  std::vector<DemoPair> out;
  for (const auto& d : j) {
    out.push_back({codec::grid_from_json(codec::member(d, "input")), codec::grid_from_json(codec::member(d, "output"))});
  }
  return out;
}

inline TrajectoryKind kind_from_string(const std::string& s) {
  if (s == kGoldTag) return TrajectoryKind::GoldStandard;
  if (s == kNonOptimalTag) return TrajectoryKind::NonOptimal;
  throw codec::CodecError("unknown trajectory kind '" + s + "'");
}

inline Json episode_to_json(const Episode& ep) {
  Json j = Json::object();
  j["trajectory_id"] = ep.trajectory_id;
  j["task"] = ep.task;
  j["problem_index"] = ep.problem_index;
  j["episode_index"] = ep.episode_index;
  j["kind"] = kind_tag(ep.kind);
  j["demonstrations"] = demos_to_json(ep.demonstrations);
  j["test_input"] = codec::grid_to_json(ep.test_input);
  j["test_output"] = codec::grid_to_json(ep.test_output);
  Json steps = Json::array();
  for (std::size_t t = 0; t < ep.steps.size(); ++t) {
    const Step& s = ep.steps[t];
    Json js = Json::object();
    js["t"] = t;
    js["current"] = codec::grid_to_json(s.current);
    js["clipboard"] = codec::optional_grid_to_json(s.clipboard);
    js["action"] = codec::action_to_json(s.action);
    js["reward"] = s.reward;
    js["terminated"] = s.terminated;
    steps.push_back(std::move(js));
  }
  j["steps"] = std::move(steps);
  return j;
}

inline Episode episode_from_json(const Json& j) {
  using codec::get_as;
  using codec::member;
  Episode ep;
  ep.trajectory_id = get_as<std::string>(j, "trajectory_id");
  ep.task = get_as<std::string>(j, "task");
  ep.problem_index = get_as<std::size_t>(j, "problem_index");
  ep.episode_index = get_as<std::size_t>(j, "episode_index");
  ep.kind = kind_from_string(get_as<std::string>(j, "kind"));
  ep.demonstrations = demos_from_json(member(j, "demonstrations"));
  ep.test_input = codec::grid_from_json(member(j, "test_input"));
  ep.test_output = codec::grid_from_json(member(j, "test_output"));
  const Json& steps = member(j, "steps");
  if (!steps.is_array()) throw codec::CodecError("steps must be an array");
  for (const auto& js : steps) {
    if (get_as<std::size_t>(js, "t") != ep.steps.size()) throw codec::CodecError("step index out of sequence");
    ep.steps.push_back({codec::grid_from_json(member(js, "current")),
                        codec::optional_grid_from_json(member(js, "clipboard")),
                        codec::action_from_json(member(js, "action")), get_as<double>(js, "reward"),
                        get_as<bool>(js, "terminated")});
  }
  return ep;
}

inline Json segment_to_json(const Segment& seg) {
  Json j = Json::object();
  j["trajectory_id"] = seg.trajectory_id;
  j["start_t"] = seg.start_t;
  Json states = Json::array();
  for (const auto& s : seg.states) {
    Json js = Json::object();
    js["input"] = codec::grid_to_json(s.input);
    js["current"] = codec::grid_to_json(s.current);
    js["clipboard"] = codec::optional_grid_to_json(s.clipboard);
    states.push_back(std::move(js));
  }
  j["states"] = std::move(states);
  Json actions = Json::array();
  for (const auto& a : seg.actions) actions.push_back(codec::action_to_json(a));
  j["actions"] = std::move(actions);
  j["rewards"] = seg.rewards;
  Json terms = Json::array();
  for (bool b : seg.terminateds) terms.push_back(b);
  j["terminateds"] = std::move(terms);
  return j;
}

inline Segment segment_from_json(const Json& j) {
  using codec::get_as;
  using codec::member;
  Segment seg;
  seg.trajectory_id = get_as<std::string>(j, "trajectory_id");
  seg.start_t = get_as<std::size_t>(j, "start_t");
  for (const auto& js : member(j, "states")) {
    seg.states.push_back({codec::grid_from_json(member(js, "input")), codec::grid_from_json(member(js, "current")),
                          codec::optional_grid_from_json(member(js, "clipboard"))});
  }
  for (const auto& ja : member(j, "actions")) seg.actions.push_back(codec::action_from_json(ja));
  seg.rewards = get_as<std::vector<double>>(j, "rewards");
  for (const auto& b : member(j, "terminateds")) {
    if (!b.is_boolean()) throw codec::CodecError("terminateds entries must be booleans");
    seg.terminateds.push_back(b.get<bool>());
  }
  const std::size_t h = seg.actions.size();
  if (seg.states.size() != h || seg.rewards.size() != h || seg.terminateds.size() != h) {
    throw codec::CodecError("segment arrays differ in length");
  }
  return seg;
}

inline Json quarantine_to_json(const QuarantineRecord& q) {
  Json j = Json::object();
  j["trajectory_id"] = q.planned.trajectory_id;
  j["task"] = q.task;
  j["problem_index"] = q.problem_index;
  j["episode_index"] = q.episode_index;
  j["kind"] = kind_tag(q.planned.kind);
  j["reason"] = q.reason;
  j["failed_step"] = q.failed_step ? Json(*q.failed_step) : Json(nullptr);
  j["problem_id"] = q.planned.problem.problem_id;
  j["demonstrations"] = demos_to_json(q.planned.problem.demonstrations);
  j["test_input"] = codec::grid_to_json(q.planned.problem.test_input);
  j["test_output"] = codec::grid_to_json(q.planned.problem.test_output);
  Json ops = Json::array();
  for (Op op : q.planned.operations) ops.push_back(op_code(op));
  j["operations"] = std::move(ops);
  Json sels = Json::array();
  for (const auto& s : q.planned.selections) sels.push_back(codec::selection_to_json(s));
  j["selections"] = std::move(sels);
  return j;
}

inline QuarantineRecord quarantine_from_json(const Json& j) {
  using codec::get_as;
  using codec::member;
  QuarantineRecord q;
  q.planned.trajectory_id = get_as<std::string>(j, "trajectory_id");
  q.task = get_as<std::string>(j, "task");
  q.problem_index = get_as<std::size_t>(j, "problem_index");
  q.episode_index = get_as<std::size_t>(j, "episode_index");
  q.planned.kind = kind_from_string(get_as<std::string>(j, "kind"));
  q.reason = get_as<std::string>(j, "reason");
  const Json& failed = member(j, "failed_step");
  if (!failed.is_null()) q.failed_step = failed.get<std::size_t>();
  q.planned.problem.problem_id = get_as<std::string>(j, "problem_id");
  q.planned.problem.demonstrations = demos_from_json(member(j, "demonstrations"));
  q.planned.problem.test_input = codec::grid_from_json(member(j, "test_input"));
  q.planned.problem.test_output = codec::grid_from_json(member(j, "test_output"));
  for (const auto& o : member(j, "operations")) q.planned.operations.push_back(codec::op_from_json(o));
  for (const auto& s : member(j, "selections")) q.planned.selections.push_back(codec::selection_from_json(s));
  return q;
}

inline Json manifest_body_to_json(const DatasetManifest& m) {
  Json j = Json::object();
  j["format_version"] = m.format_version;
  j["task"] = m.task;
  Json p = Json::object();
  p["problems"] = m.params.problems;
  p["episodes_per_problem"] = m.params.episodes_per_problem;
  p["gold_per_problem"] = m.params.gold_per_problem;
  p["demos"] = m.params.demos;
  p["max_h"] = m.params.max_dims.rows;
  p["max_w"] = m.params.max_dims.cols;
  p["horizon"] = m.params.horizon;
  p["seed"] = m.params.seed;
  p["nonoptimal_len"] = m.params.nonoptimal_len;
  p["nonoptimal_jitter"] = m.params.nonoptimal_jitter;
  j["params"] = std::move(p);
  Json c = Json::object();
  c["episodes"] = m.counts.episodes;
  c["gold"] = m.counts.gold;
  c["segments"] = m.counts.segments;
  c["quarantined"] = m.counts.quarantined;
  j["counts"] = std::move(c);
  Json f = Json::object();
  f["episodes"] = kEpisodesFile;
  f["segments"] = kSegmentsFile;
  f["quarantine"] = kQuarantineFile;
  j["files"] = std::move(f);
  return j;
}

inline DatasetManifest manifest_from_json(const Json& j) {
  using codec::get_as;
  using codec::member;
  DatasetManifest m;
  m.format_version = get_as<int>(j, "format_version");
  m.task = get_as<std::string>(j, "task");
  const Json& p = member(j, "params");
  m.params.problems = get_as<std::size_t>(p, "problems");
  m.params.episodes_per_problem = get_as<std::size_t>(p, "episodes_per_problem");
  m.params.gold_per_problem = get_as<std::size_t>(p, "gold_per_problem");
  m.params.demos = get_as<int>(p, "demos");
  m.params.max_dims = {get_as<int>(p, "max_h"), get_as<int>(p, "max_w")};
  m.params.horizon = get_as<std::size_t>(p, "horizon");
  m.params.seed = get_as<std::uint64_t>(p, "seed");
  m.params.nonoptimal_len = get_as<int>(p, "nonoptimal_len");
  m.params.nonoptimal_jitter = get_as<int>(p, "nonoptimal_jitter");
  const Json& c = member(j, "counts");
  m.counts.episodes = get_as<std::size_t>(c, "episodes");
  m.counts.gold = get_as<std::size_t>(c, "gold");
  m.counts.segments = get_as<std::size_t>(c, "segments");
  m.counts.quarantined = get_as<std::size_t>(c, "quarantined");
  m.digest = get_as<std::string>(j, "digest");
  return m;
}

/// Incremental SHA-256 over OpenSSL's EVP interface.
class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new()) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr) != 1) {
      throw DatasetError(DatasetError::Kind::SerializationFailure, "sha256 init failed");
    }
  }
  ~Sha256() { EVP_MD_CTX_free(ctx_); }
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  void update(std::string_view data) { EVP_DigestUpdate(ctx_, data.data(), data.size()); }

  std::string hex() {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx_, md, &len);
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
      out.push_back(kHex[md[i] >> 4]);
      out.push_back(kHex[md[i] & 0xf]);
    }
    return out;
  }

 private:
  EVP_MD_CTX* ctx_;
};

inline std::string compute_digest(std::string_view episodes, std::string_view segments, std::string_view quarantine,
                                  std::string_view manifest_body) {
  Sha256 sha;
  auto part = [&](std::string_view name, std::string_view bytes) {
    sha.update(name);
    sha.update(std::string_view("\0", 1));
    sha.update(std::to_string(bytes.size()));
    sha.update(std::string_view("\0", 1));
    sha.update(bytes);
  };
  part(kEpisodesFile, episodes);
  part(kSegmentsFile, segments);
  part(kQuarantineFile, quarantine);
  sha.update("manifest");
  sha.update(std::string_view("\0", 1));
  sha.update(manifest_body);
  return "sha256:" + sha.hex();
}

template <typename Range, typename Encode>
std::string encode_lines(const Range& items, Encode encode) {
  std::string out;
  for (const auto& item : items) {
    out += encode(item).dump();
    out += '\n';
  }
  return out;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw DatasetError(DatasetError::Kind::IoFailure, "cannot open " + p.string(), p.filename().string());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_file(const std::filesystem::path& p, std::string_view bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw DatasetError(DatasetError::Kind::IoFailure, "cannot write " + p.string(), p.filename().string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw DatasetError(DatasetError::Kind::IoFailure, "write failed for " + p.string(), p.filename().string());
}

template <typename T, typename Decode>
std::vector<T> decode_lines(const std::string& bytes, const std::string& file, Decode decode) {
  std::vector<T> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    ++line_no;
    const std::size_t end = bytes.find('\n', pos);
    if (end == std::string::npos) {
      throw DatasetError(DatasetError::Kind::ParseError,
                         file + ":" + std::to_string(line_no) + ": record not terminated by newline", file, line_no);
    }
    const std::string_view line(bytes.data() + pos, end - pos);
    try {
      out.push_back(decode(Json::parse(line)));
    } catch (const std::exception& e) {
      throw DatasetError(DatasetError::Kind::ParseError, file + ":" + std::to_string(line_no) + ": " + e.what(), file,
                         line_no);
    }
    pos = end + 1;
  }
  return out;
}

}  // namespace io

/// Serialized bytes of a dataset: data files plus the final manifest line.
struct EncodedDataset {
  std::string episodes;
  std::string segments;
  std::string quarantine;
  std::string manifest;
  DatasetManifest final_manifest;
};

/// Fills counts and digest from the content and renders every file.
inline EncodedDataset encode_dataset(const Dataset& ds) {
  EncodedDataset enc;
  try {
    enc.episodes = io::encode_lines(ds.episodes, io::episode_to_json);
    enc.segments = io::encode_lines(ds.segments, io::segment_to_json);
    enc.quarantine = io::encode_lines(ds.quarantine, io::quarantine_to_json);
  } catch (const nlohmann::json::exception& e) {
    throw DatasetError(DatasetError::Kind::SerializationFailure, e.what());
  }
  DatasetManifest m = ds.manifest;
  m.format_version = kFormatVersion;
  m.counts.episodes = ds.episodes.size();
  m.counts.gold = static_cast<std::size_t>(
      std::count_if(ds.episodes.begin(), ds.episodes.end(), [](const Episode& e) { return e.gold(); }));
  m.counts.segments = ds.segments.size();
  m.counts.quarantined = ds.quarantine.size();
  io::Json body = io::manifest_body_to_json(m);
  m.digest = io::compute_digest(enc.episodes, enc.segments, enc.quarantine, body.dump());
  body["digest"] = m.digest;
  enc.manifest = body.dump() + "\n";
  enc.final_manifest = m;
  return enc;
}

/// Writes the data files, then the manifest. Creates the directory if needed.
inline SolarFileSet write_dataset(const Dataset& ds, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DatasetError(DatasetError::Kind::IoFailure, "cannot create " + dir.string() + ": " + ec.message());
  const EncodedDataset enc = encode_dataset(ds);
  const SolarFileSet files = SolarFileSet::in(dir);
  io::write_file(files.episodes, enc.episodes);
  io::write_file(files.segments, enc.segments);
  io::write_file(files.quarantine, enc.quarantine);
  io::write_file(files.manifest, enc.manifest);
  return files;
}

/// Raw bytes of the four files of a dataset directory.
struct RawDataset {
  std::string manifest;
  std::string episodes;
  std::string segments;
  std::string quarantine;
};

/// Parses and fully checks dataset bytes: canonical manifest, version, every
/// record, digest, and counts.
inline Dataset parse_dataset(const RawDataset& raw) {
  const std::string& manifest_raw = raw.manifest;
  io::Json manifest_json;
  try {
    if (manifest_raw.empty() || manifest_raw.back() != '\n') throw std::runtime_error("manifest not newline-terminated");
    manifest_json = io::Json::parse(std::string_view(manifest_raw).substr(0, manifest_raw.size() - 1));
  } catch (const std::exception& e) {
    throw DatasetError(DatasetError::Kind::ParseError, std::string("manifest.json:1: ") + e.what(), kManifestFile, 1);
  }
  if (!manifest_json.is_object() || !manifest_json.contains("format_version") ||
      !manifest_json["format_version"].is_number_integer()) {
    throw DatasetError(DatasetError::Kind::ParseError, "manifest.json:1: missing format_version", kManifestFile, 1);
  }
  if (manifest_json["format_version"].get<long long>() != kFormatVersion) {
    throw DatasetError(DatasetError::Kind::UnsupportedVersion,
                       "unsupported format_version " + manifest_json["format_version"].dump(), kManifestFile);
  }
  if (manifest_json.dump() + "\n" != manifest_raw) {
    throw DatasetError(DatasetError::Kind::DigestMismatch, "manifest.json is not in canonical form", kManifestFile);
  }

  Dataset ds;
  try {
    ds.manifest = io::manifest_from_json(manifest_json);
  } catch (const std::exception& e) {
    throw DatasetError(DatasetError::Kind::ParseError, std::string("manifest.json:1: ") + e.what(), kManifestFile, 1);
  }

  ds.episodes = io::decode_lines<Episode>(raw.episodes, kEpisodesFile, io::episode_from_json);
  ds.segments = io::decode_lines<Segment>(raw.segments, kSegmentsFile, io::segment_from_json);
  ds.quarantine = io::decode_lines<QuarantineRecord>(raw.quarantine, kQuarantineFile, io::quarantine_from_json);

  io::Json body = manifest_json;
  body.erase("digest");
  const std::string digest = io::compute_digest(raw.episodes, raw.segments, raw.quarantine, body.dump());
  if (digest != ds.manifest.digest) {
    throw DatasetError(DatasetError::Kind::DigestMismatch,
                       "digest mismatch: manifest says " + ds.manifest.digest + ", content is " + digest, kManifestFile);
  }
  const auto gold = static_cast<std::size_t>(
      std::count_if(ds.episodes.begin(), ds.episodes.end(), [](const Episode& e) { return e.gold(); }));
  const DatasetCounts actual{ds.episodes.size(), gold, ds.segments.size(), ds.quarantine.size()};
  if (actual != ds.manifest.counts) {
    throw DatasetError(DatasetError::Kind::CountMismatch, "manifest counts do not match file contents", kManifestFile);
  }
  return ds;
}

inline RawDataset read_raw_dataset(const std::filesystem::path& dir) {
  const SolarFileSet files = SolarFileSet::in(dir);
  RawDataset raw;
  raw.manifest = io::read_file(files.manifest);
  raw.episodes = io::read_file(files.episodes);
  raw.segments = io::read_file(files.segments);
  if (std::filesystem::exists(files.quarantine)) raw.quarantine = io::read_file(files.quarantine);
  return raw;
}

inline Dataset read_dataset(const std::filesystem::path& dir) { return parse_dataset(read_raw_dataset(dir)); }

/// Generates, segments and packages a dataset for one task.
inline Dataset make_dataset(Task task, const TaskParams& params, const GenerateOptions& opts, std::size_t horizon) {
  GenerationResult gen = generate(task, params, opts);
  Dataset ds;
  ds.manifest.task = task_name(task);
  ds.manifest.params = DatasetParams{opts.n_problems,      opts.episodes_per_problem, opts.gold_per_problem,
                                     params.demos_per_problem, params.max_dims,          horizon,
                                     params.rng_seed,      params.nonoptimal_len,     params.nonoptimal_jitter};
  ds.segments = segment_dataset(gen.episodes, horizon, params.max_dims);
  ds.episodes = std::move(gen.episodes);
  ds.quarantine = std::move(gen.quarantine);
  ds.manifest.counts = {ds.episodes.size(), 0, ds.segments.size(), ds.quarantine.size()};
  return ds;
}

inline DatasetExpectations expectations_for(const DatasetManifest& m) {
  return {m.params.problems, m.params.episodes_per_problem, m.params.gold_per_problem, EnvConfig{m.params.max_dims, 1}};
}

/// verify_dataset plus segment consistency against the manifest horizon.
inline VerifyReport verify_full(const Dataset& ds) {
  VerifyReport report = verify_dataset(ds.episodes, expectations_for(ds.manifest));
  verify_segments(ds.episodes, ds.segments, ds.manifest.params.horizon, ds.manifest.params.max_dims, report);
  return report;
}

}  // namespace solar
