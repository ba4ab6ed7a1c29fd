#ifndef SYLSEG_IO_HPP
#define SYLSEG_IO_HPP

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sylseg/eval.hpp"
#include "sylseg/losspred.hpp"
#include "sylseg/quantize.hpp"
#include "sylseg/types.hpp"

namespace sylseg {

// SYLF feature container: magic "SYLF", u32 version, u32 T, u32 D,
// f64 frame_rate, then T*D little-endian f32 row-major. A text variant with
// header line "T D rate" followed by one whitespace-separated row per frame
// is accepted too; readers sniff the magic.

void write_sylf(const std::filesystem::path& path, const FeatureSequence& feats);
void write_sylf_text(const std::filesystem::path& path, const FeatureSequence& feats);
FeatureSequence read_features(const std::filesystem::path& path);

/// Loss matrices travel as SYLF payloads with D = T.
void write_matrix_sylf(const std::filesystem::path& path, const Matrix& m, double frame_rate_hz);

// Mask-record files: one record per line, "mask_start mask_end t1:p1 t2:p2 ...".
// Blank lines and lines starting with '#' are skipped.
std::vector<MaskProbabilityRecord> read_records(const std::filesystem::path& path);
void write_records(const std::filesystem::path& path,
                   const std::vector<MaskProbabilityRecord>& records);

struct SegmentationRecord {
  std::string utterance;
  double frame_rate_hz = 0.0;
  Segmentation seg;
  double total_cost = 0.0;           // sylboost objective (sum of group costs)
  std::optional<double> objective;   // mincut objective, when applicable
  std::vector<double> per_frame_loss;  // optional
};

void write_segmentation(const std::filesystem::path& path, const SegmentationRecord& rec);
SegmentationRecord read_segmentation(const std::filesystem::path& path);

// Codebook container: magic "SYLC", u32 version, u32 K, u32 D, u32 U,
// u64 seed, K*D little-endian f64 centroids, K u32 map entries.
void write_codebook(const std::filesystem::path& path, const Codebook& codebook);
Codebook read_codebook(const std::filesystem::path& path);

// Unit sequences: one utterance per line, "utt id@start:end id@start:end ...",
// frame indices 1-based with half-open spans. A "# frame_rate_hz <r>" header
// records the rate.
struct UtteranceUnits {
  std::string utterance;
  UnitSequence units;
};

void write_units(const std::filesystem::path& path, const std::vector<UtteranceUnits>& all,
                 double frame_rate_hz);
std::vector<UtteranceUnits> read_units(const std::filesystem::path& path,
                                       double fallback_rate_hz = 50.0);

// Alignments: tab-separated "start_sec end_sec label" per line.
ReferenceAlignment read_alignment(const std::filesystem::path& path);
void write_alignment(const std::filesystem::path& path, const ReferenceAlignment& ref);

}  // namespace sylseg

#endif  // SYLSEG_IO_HPP
