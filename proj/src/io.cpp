#include "sylseg/io.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace sylseg {

namespace {

using json = nlohmann::ordered_json;

constexpr std::uint32_t kSylfVersion = 1;
constexpr std::uint32_t kCodebookVersion = 1;

template <typename T>
void write_le(std::ostream& os, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::array<unsigned char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(bytes.begin(), bytes.end());
  }
  os.write(reinterpret_cast<const char*>(bytes.data()), sizeof(T));
}

template <typename T>
T read_le(std::istream& is) {
  std::array<unsigned char, sizeof(T)> bytes;
  is.read(reinterpret_cast<char*>(bytes.data()), sizeof(T));
  if (!is) {
    throw ValidationError("unexpected end of file");
  }
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(bytes.begin(), bytes.end());
  }
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode) {
  std::ofstream os(path, mode);
  if (!os) {
    throw ValidationError("cannot open for writing: " + path.string());
  }
  return os;
}

std::ifstream open_in(const std::filesystem::path& path, std::ios::openmode mode) {
  std::ifstream is(path, mode);
  if (!is) {
    throw ValidationError("cannot open for reading: " + path.string());
  }
  return is;
}

void write_magic(std::ostream& os, const char* magic) { os.write(magic, 4); }

bool check_magic(std::istream& is, const char* magic) {
  char buf[4] = {};
  is.read(buf, 4);
  return is && std::memcmp(buf, magic, 4) == 0;
}

void write_sylf_payload(std::ostream& os, const Matrix& m, double rate) {
  write_magic(os, "SYLF");
  write_le<std::uint32_t>(os, kSylfVersion);
  write_le<std::uint32_t>(os, static_cast<std::uint32_t>(m.rows()));
  write_le<std::uint32_t>(os, static_cast<std::uint32_t>(m.cols()));
  write_le<double>(os, rate);
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) {
      write_le<float>(os, static_cast<float>(m(r, c)));
    }
  }
}

std::pair<Matrix, double> read_sylf_payload(std::istream& is, const std::string& origin) {
  const auto version = read_le<std::uint32_t>(is);
  if (version != kSylfVersion) {
    throw ValidationError("unsupported SYLF version in " + origin);
  }
  const auto t = read_le<std::uint32_t>(is);
  const auto d = read_le<std::uint32_t>(is);
  if (t == 0 || d == 0 || static_cast<std::uint64_t>(t) * d > (1ull << 31)) {
    throw ValidationError("implausible SYLF dimensions in " + origin);
  }
  const double rate = read_le<double>(is);
  Matrix m(t, d);
  for (std::uint32_t r = 0; r < t; ++r) {
    for (std::uint32_t c = 0; c < d; ++c) {
      m(r, c) = read_le<float>(is);
    }
  }
  return {std::move(m), rate};
}

std::pair<Matrix, double> read_text_features(std::istream& is, const std::string& origin) {
  std::string line;
  if (!std::getline(is, line)) {
    throw ValidationError("empty feature file: " + origin);
  }
  std::istringstream header(line);
  Index t = 0, d = 0;
  double rate = 0.0;
  if (!(header >> t >> d >> rate)) {
    throw ValidationError("bad text feature header in " + origin + " (expected: T D rate)");
  }
  Matrix m(t, d);
  for (Index r = 0; r < t; ++r) {
    if (!std::getline(is, line)) {
      throw ValidationError("truncated feature rows in " + origin);
    }
    std::istringstream row(line);
    for (Index c = 0; c < d; ++c) {
      if (!(row >> m(r, c))) {
        throw ValidationError("bad feature value at row " + std::to_string(r + 1) + " of " +
                              origin);
      }
    }
  }
  return {std::move(m), rate};
}

}  // namespace

void write_sylf(const std::filesystem::path& path, const FeatureSequence& feats) {
  auto os = open_out(path, std::ios::binary);
  write_sylf_payload(os, feats.frames(), feats.frame_rate_hz());
}

void write_sylf_text(const std::filesystem::path& path, const FeatureSequence& feats) {
  auto os = open_out(path, std::ios::out);
  os.precision(17);
  os << feats.num_frames() << ' ' << feats.num_dims() << ' ' << feats.frame_rate_hz() << '\n';
  for (Index r = 0; r < feats.frames().rows(); ++r) {
    for (Index c = 0; c < feats.frames().cols(); ++c) {
      os << (c ? " " : "") << feats.frames()(r, c);
    }
    os << '\n';
  }
}

FeatureSequence read_features(const std::filesystem::path& path) {
  auto is = open_in(path, std::ios::binary);
  auto [m, rate] = check_magic(is, "SYLF")
                       ? read_sylf_payload(is, path.string())
                       : (is.clear(), is.seekg(0), read_text_features(is, path.string()));
  return FeatureSequence(std::move(m), rate);
}

void write_matrix_sylf(const std::filesystem::path& path, const Matrix& m,
                       double frame_rate_hz) {
  auto os = open_out(path, std::ios::binary);
  write_sylf_payload(os, m, frame_rate_hz);
}

std::vector<MaskProbabilityRecord> read_records(const std::filesystem::path& path) {
  auto is = open_in(path, std::ios::in);
  std::vector<MaskProbabilityRecord> records;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    MaskProbabilityRecord rec;
    if (!(ss >> rec.mask_start >> rec.mask_end)) {
      throw ValidationError("bad record at " + path.string() + ":" + std::to_string(line_no));
    }
    std::string pair;
    while (ss >> pair) {
      const auto colon = pair.find(':');
      if (colon == std::string::npos) {
        throw ValidationError("bad t:p pair at " + path.string() + ":" +
                              std::to_string(line_no));
      }
      try {
        std::size_t t_end = 0, p_end = 0;
        const std::string t_str = pair.substr(0, colon);
        const std::string p_str = pair.substr(colon + 1);
        const int t = std::stoi(t_str, &t_end);
        const double p = std::stod(p_str, &p_end);
        if (t_end != t_str.size() || p_end != p_str.size()) {
          throw std::invalid_argument("trailing characters");
        }
        if (!rec.probs.emplace(t, p).second) {
          throw ValidationError("duplicate timestep in record");
        }
      } catch (const ValidationError&) {
        throw;
      } catch (const std::exception&) {
        throw ValidationError("bad t:p pair at " + path.string() + ":" +
                              std::to_string(line_no));
      }
    }
    records.push_back(std::move(rec));
  }
  return records;
}

void write_records(const std::filesystem::path& path,
                   const std::vector<MaskProbabilityRecord>& records) {
  auto os = open_out(path, std::ios::out);
  os.precision(17);
  for (const auto& rec : records) {
    os << rec.mask_start << ' ' << rec.mask_end;
    for (const auto& [t, p] : rec.probs) {
      os << ' ' << t << ':' << p;
    }
    os << '\n';
  }
}

void write_segmentation(const std::filesystem::path& path, const SegmentationRecord& rec) {
  json j;
  j["utterance"] = rec.utterance;
  j["frame_rate_hz"] = rec.frame_rate_hz;
  j["T"] = rec.seg.total_frames();
  j["k"] = rec.seg.num_groups();
  j["boundaries"] = rec.seg.boundaries();
  j["total_cost"] = rec.total_cost;
  if (rec.objective) {
    j["objective"] = *rec.objective;
  }
  if (!rec.per_frame_loss.empty()) {
    j["per_frame_loss"] = rec.per_frame_loss;
  }
  auto os = open_out(path, std::ios::out);
  os << j.dump(2) << '\n';
}

SegmentationRecord read_segmentation(const std::filesystem::path& path) {
  auto is = open_in(path, std::ios::in);
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw ValidationError("bad segmentation file " + path.string() + ": " + e.what());
  }
  try {
    SegmentationRecord rec{j.at("utterance").get<std::string>(),
                           j.at("frame_rate_hz").get<double>(),
                           Segmentation(j.at("boundaries").get<std::vector<int>>(),
                                        j.at("T").get<int>()),
                           j.at("total_cost").get<double>(),
                           std::nullopt,
                           {}};
    if (j.contains("objective")) rec.objective = j["objective"].get<double>();
    if (j.contains("per_frame_loss")) {
      rec.per_frame_loss = j["per_frame_loss"].get<std::vector<double>>();
    }
    return rec;
  } catch (const json::exception& e) {
    throw ValidationError("bad segmentation file " + path.string() + ": " + e.what());
  }
}

void write_codebook(const std::filesystem::path& path, const Codebook& codebook) {
  codebook.validate();
  auto os = open_out(path, std::ios::binary);
  write_magic(os, "SYLC");
  write_le<std::uint32_t>(os, kCodebookVersion);
  write_le<std::uint32_t>(os, static_cast<std::uint32_t>(codebook.num_centroids()));
  write_le<std::uint32_t>(os, static_cast<std::uint32_t>(codebook.dim()));
  write_le<std::uint32_t>(os, static_cast<std::uint32_t>(codebook.num_units));
  write_le<std::uint64_t>(os, codebook.rng_seed);
  for (Index r = 0; r < codebook.centroids.rows(); ++r) {
    for (Index c = 0; c < codebook.centroids.cols(); ++c) {
      write_le<double>(os, codebook.centroids(r, c));
    }
  }
  for (int m : codebook.agglomeration_map) {
    write_le<std::uint32_t>(os, static_cast<std::uint32_t>(m));
  }
}

Codebook read_codebook(const std::filesystem::path& path) {
  auto is = open_in(path, std::ios::binary);
  if (!check_magic(is, "SYLC")) {
    throw ValidationError("not a codebook file: " + path.string());
  }
  if (read_le<std::uint32_t>(is) != kCodebookVersion) {
    throw ValidationError("unsupported codebook version in " + path.string());
  }
  const auto k = read_le<std::uint32_t>(is);
  const auto d = read_le<std::uint32_t>(is);
  const auto u = read_le<std::uint32_t>(is);
  Codebook cb;
  cb.num_units = static_cast<int>(u);
  cb.rng_seed = read_le<std::uint64_t>(is);
  cb.centroids.resize(k, d);
  for (std::uint32_t r = 0; r < k; ++r) {
    for (std::uint32_t c = 0; c < d; ++c) {
      cb.centroids(r, c) = read_le<double>(is);
    }
  }
  cb.agglomeration_map.resize(k);
  for (std::uint32_t i = 0; i < k; ++i) {
    cb.agglomeration_map[i] = static_cast<int>(read_le<std::uint32_t>(is));
  }
  cb.validate();
  return cb;
}

void write_units(const std::filesystem::path& path, const std::vector<UtteranceUnits>& all,
                 double frame_rate_hz) {
  auto os = open_out(path, std::ios::out);
  os.precision(17);
  os << "# frame_rate_hz " << frame_rate_hz << '\n';
  for (const auto& [utt, units] : all) {
    os << utt;
    for (const auto& span : units.units()) {
      os << ' ' << span.unit_id << '@' << span.start_frame << ':' << span.end_frame;
    }
    os << '\n';
  }
}

std::vector<UtteranceUnits> read_units(const std::filesystem::path& path,
                                       double fallback_rate_hz) {
  auto is = open_in(path, std::ios::in);
  std::vector<UtteranceUnits> all;
  double rate = fallback_rate_hz;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream ss(line.substr(1));
      std::string key;
      double value = 0.0;
      if (ss >> key >> value && key == "frame_rate_hz") rate = value;
      continue;
    }
    std::istringstream ss(line);
    std::string utt, triple;
    ss >> utt;
    std::vector<UnitSpan> spans;
    while (ss >> triple) {
      UnitSpan span;
      int consumed = 0;
      if (std::sscanf(triple.c_str(), "%d@%d:%d%n", &span.unit_id, &span.start_frame,
                      &span.end_frame, &consumed) != 3 ||
          consumed != static_cast<int>(triple.size())) {
        throw ValidationError("bad unit triple at " + path.string() + ":" +
                              std::to_string(line_no));
      }
      spans.push_back(span);
    }
    if (spans.empty()) {
      throw ValidationError("utterance with no units at " + path.string() + ":" +
                            std::to_string(line_no));
    }
    all.push_back({std::move(utt), UnitSequence(std::move(spans), rate)});
  }
  return all;
}

ReferenceAlignment read_alignment(const std::filesystem::path& path) {
  auto is = open_in(path, std::ios::in);
  std::vector<LabeledInterval> intervals;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    LabeledInterval iv;
    if (!(ss >> iv.start_sec >> iv.end_sec)) {
      throw ValidationError("bad alignment line at " + path.string() + ":" +
                            std::to_string(line_no));
    }
    std::getline(ss, iv.label);
    const auto first = iv.label.find_first_not_of(" \t");
    iv.label = first == std::string::npos ? "" : iv.label.substr(first);
    if (iv.label.empty()) {
      throw ValidationError("missing label at " + path.string() + ":" +
                            std::to_string(line_no));
    }
    intervals.push_back(std::move(iv));
  }
  return ReferenceAlignment(std::move(intervals));
}

void write_alignment(const std::filesystem::path& path, const ReferenceAlignment& ref) {
  auto os = open_out(path, std::ios::out);
  os.precision(17);
  for (const auto& iv : ref.intervals()) {
    os << iv.start_sec << '\t' << iv.end_sec << '\t' << iv.label << '\n';
  }
}

}  // namespace sylseg
