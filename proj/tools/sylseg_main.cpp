// sylseg: batch driver for loss-matrix assembly, boundary extraction,
// unit quantization, and segmentation scoring over corpora of utterances.

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sylseg/eval.hpp"
#include "sylseg/extraction.hpp"
#include "sylseg/io.hpp"
#include "sylseg/losspred.hpp"
#include "sylseg/quantize.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace sylseg;

namespace {

// ---------------------------------------------------------------------------
// Shared plumbing

struct InputStatus {
  std::string path;
  std::string error;  // empty means success

  bool ok() const { return error.empty(); }
};

int resolve_workers(int flag_value) {
  if (flag_value > 0) return flag_value;
  if (const char* env = std::getenv("SYLSEG_WORKERS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

// Fan out fn(i) over a worker pool. Work items must only touch their own
// slots; result order is fixed by index, so worker count never changes output.
template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
  workers = std::max(1, std::min<int>(workers, static_cast<int>(n)));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < n;) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

bool is_pipeline_metadata(const fs::path& p) {
  const auto name = p.filename().string();
  return name == "manifest.json" || name == "summary.json" || name == "bitrate.json";
}

std::vector<fs::path> list_input_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw ValidationError("not a directory: " + dir.string());
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().filename().string().front() != '.' &&
        !is_pipeline_metadata(entry.path())) {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  return files;
}

int write_manifest_and_exit(const fs::path& out_dir, const std::string& command,
                            const std::vector<InputStatus>& statuses) {
  json entries = json::array();
  std::size_t ok = 0;
  for (const auto& s : statuses) {
    json e;
    e["path"] = s.path;
    e["status"] = s.ok() ? "ok" : "failed";
    if (!s.ok()) e["error"] = s.error;
    entries.push_back(std::move(e));
    ok += s.ok();
  }
  json manifest;
  manifest["command"] = command;
  manifest["num_ok"] = ok;
  manifest["num_failed"] = statuses.size() - ok;
  manifest["inputs"] = std::move(entries);
  std::ofstream os(out_dir / "manifest.json");
  os << manifest.dump(2) << '\n';

  if (statuses.empty()) {
    std::cerr << command << ": no input files\n";
    return 1;
  }
  for (const auto& s : statuses) {
    if (!s.ok()) std::cerr << command << ": " << s.path << ": " << s.error << '\n';
  }
  std::cerr << command << ": " << ok << "/" << statuses.size() << " inputs ok\n";
  return ok == statuses.size() ? 0 : 1;
}

// ---------------------------------------------------------------------------
// assemble

struct AssembleOpts {
  std::string records_dir;
  std::string out_dir;
  int span = 50;
  double frame_rate = 50.0;
  int workers = 0;
};

int cmd_assemble(const AssembleOpts& opt) {
  const auto inputs = list_input_files(opt.records_dir);
  fs::create_directories(opt.out_dir);
  std::vector<InputStatus> statuses(inputs.size());

  parallel_for(inputs.size(), resolve_workers(opt.workers), [&](std::size_t i) {
    statuses[i].path = inputs[i].string();
    try {
      const auto records = read_records(inputs[i]);
      if (records.empty()) {
        throw ValidationError("no records in file");
      }
      // The matrix spans the largest masked frame; a full sliding export
      // always reaches the final frame of the utterance.
      int total_frames = 0;
      for (const auto& rec : records) {
        total_frames = std::max(total_frames, rec.mask_end);
      }
      const auto matrix = assemble_loss_matrix(records, total_frames, opt.span);
      write_matrix_sylf(fs::path(opt.out_dir) / (inputs[i].stem().string() + ".sylf"),
                        matrix.values, opt.frame_rate);
    } catch (const std::exception& e) {
      statuses[i].error = e.what();
    }
  });
  return write_manifest_and_exit(opt.out_dir, "assemble", statuses);
}

// ---------------------------------------------------------------------------
// calibrate

struct CalibrateOpts {
  std::string input_dir;
  std::string out_file;
  double target_hz = 0.0;
  double quantile = 0.75;
  int group_max = 50;
  double tol_hz = 0.05;
  bool per_utterance_mean = false;
};

json run_calibration(const std::vector<fs::path>& files, const CalibrateOpts& opt) {
  std::vector<FeatureSequence> corpus;
  corpus.reserve(files.size());
  for (const auto& f : files) {
    corpus.push_back(read_features(f));
  }
  const auto mode = opt.per_utterance_mean ? CorpusRateMode::kPerUtteranceMean
                                           : CorpusRateMode::kTotalOverTotal;
  const auto cal =
      calibrate_delta(corpus, opt.target_hz, opt.quantile, opt.group_max, opt.tol_hz, mode);
  json j;
  j["target_hz"] = opt.target_hz;
  j["delta"] = cal.delta;
  j["achieved_hz"] = cal.achieved_hz;
  j["floor_hz"] = cal.floor_hz;
  j["ceiling_hz"] = cal.ceiling_hz;
  j["iterations"] = cal.iterations;
  j["quantile"] = opt.quantile;
  j["group_max"] = opt.group_max;
  j["rate_mode"] = opt.per_utterance_mean ? "per_utterance_mean" : "total_over_total";
  return j;
}

int cmd_calibrate(const CalibrateOpts& opt) {
  const auto inputs = list_input_files(opt.input_dir);
  if (inputs.empty()) {
    std::cerr << "calibrate: no input files\n";
    return 1;
  }
  try {
    const json j = run_calibration(inputs, opt);
    std::cout << j.dump(2) << '\n';
    if (!opt.out_file.empty()) {
      std::ofstream os(opt.out_file);
      os << j.dump(2) << '\n';
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "calibrate: " << e.what() << '\n';
    return 1;
  }
}

// ---------------------------------------------------------------------------
// segment

struct SegmentOpts {
  std::string input_dir;
  std::string out_dir;
  std::string mode = "sylboost";
  std::string calibration_dir;
  int fixed_k = 0;
  double k_per_second = 0.0;
  double delta = -1.0;
  double target_hz = 0.0;
  double quantile = 0.75;
  int group_max = 50;
  double tol_hz = 0.05;
  bool per_utterance_mean = false;
  bool emit_loss = false;
  int workers = 0;
};

int pick_fixed_group_count(const SegmentOpts& opt, const FeatureSequence& feats) {
  if (opt.fixed_k > 0) return opt.fixed_k;
  const int t = feats.num_frames();
  const int g = std::min(opt.group_max, t);
  const int k_min = (t + g - 1) / g;
  const int k = static_cast<int>(std::lround(opt.k_per_second * feats.duration_sec()));
  return std::clamp(k, k_min, t);
}

int cmd_segment(const SegmentOpts& opt) {
  const auto inputs = list_input_files(opt.input_dir);
  fs::create_directories(opt.out_dir);
  std::vector<InputStatus> statuses(inputs.size());

  // A corpus-level rate target resolves to a single delta up front.
  double delta = opt.delta;
  std::optional<json> calibration;
  if (opt.target_hz > 0.0) {
    CalibrateOpts cal_opt;
    cal_opt.target_hz = opt.target_hz;
    cal_opt.quantile = opt.quantile;
    cal_opt.group_max = opt.group_max;
    cal_opt.tol_hz = opt.tol_hz;
    cal_opt.per_utterance_mean = opt.per_utterance_mean;
    try {
      const auto cal_files =
          opt.calibration_dir.empty() ? inputs : list_input_files(opt.calibration_dir);
      calibration = run_calibration(cal_files, cal_opt);
      delta = (*calibration)["delta"].get<double>();
    } catch (const std::exception& e) {
      std::cerr << "segment: calibration failed: " << e.what() << '\n';
      return 1;
    }
  }

  struct PerUtt {
    int k = 0;
    double duration = 0.0;
    double rate = 0.0;
  };
  std::vector<PerUtt> results(inputs.size());

  parallel_for(inputs.size(), resolve_workers(opt.workers), [&](std::size_t i) {
    statuses[i].path = inputs[i].string();
    try {
      const auto feats = read_features(inputs[i]);
      SegmentationRecord rec{inputs[i].stem().string(), feats.frame_rate_hz(),
                             Segmentation({1, feats.num_frames() + 1}, feats.num_frames()),
                             0.0, std::nullopt, {}};
      if (opt.mode == "mincut") {
        if (feats.num_frames() != feats.num_dims()) {
          throw ValidationError("mincut input must be a square loss matrix");
        }
        rec.seg = normalized_mincut(feats.frames(), pick_fixed_group_count(opt, feats));
        rec.objective = mincut_objective(feats.frames(), rec.seg);
      } else {
        ExtractionResult res =
            delta >= 0.0 ? select_k(feats, delta, opt.quantile, opt.group_max)
                         : extract_boundaries(feats, pick_fixed_group_count(opt, feats),
                                              opt.group_max);
        rec.total_cost = res.total_cost;
        if (opt.emit_loss) {
          rec.per_frame_loss.assign(res.per_frame_loss.begin(), res.per_frame_loss.end());
        }
        rec.seg = std::move(res.seg);
      }
      write_segmentation(fs::path(opt.out_dir) / (inputs[i].stem().string() + ".seg.json"),
                         rec);
      results[i] = {rec.seg.num_groups(), feats.duration_sec(),
                    rec.seg.num_groups() / feats.duration_sec()};
    } catch (const std::exception& e) {
      statuses[i].error = e.what();
    }
  });

  double total_units = 0.0, total_dur = 0.0, rate_acc = 0.0;
  std::size_t ok = 0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (!statuses[i].ok()) continue;
    total_units += results[i].k;
    total_dur += results[i].duration;
    rate_acc += results[i].rate;
    ++ok;
  }
  json summary;
  summary["mode"] = opt.mode;
  summary["group_max"] = opt.group_max;
  summary["num_utterances"] = ok;
  summary["total_units"] = total_units;
  summary["total_duration_sec"] = total_dur;
  summary["mean_rate_hz"] = ok > 0 && total_dur > 0 ? total_units / total_dur : 0.0;
  summary["per_utterance_mean_rate_hz"] = ok > 0 ? rate_acc / ok : 0.0;
  if (delta >= 0.0) summary["delta"] = delta;
  if (opt.fixed_k > 0) summary["k"] = opt.fixed_k;
  if (opt.k_per_second > 0) summary["k_per_second"] = opt.k_per_second;
  if (calibration) summary["calibration"] = *calibration;
  std::ofstream os(fs::path(opt.out_dir) / "summary.json");
  os << summary.dump(2) << '\n';

  return write_manifest_and_exit(opt.out_dir, "segment", statuses);
}

// ---------------------------------------------------------------------------
// tokenize

struct TokenizeOpts {
  std::string features_dir;
  std::string segs_dir;
  std::string out_dir;
  std::string codebook_file;
  int kmeans_k = 0;  // 0: defaults to 2 * units
  int units = 4096;
  std::uint64_t seed = 0;
  long sample_cap = 500000;
  int max_iters = 100;
  int workers = 0;
};

int cmd_tokenize(const TokenizeOpts& opt) {
  const auto inputs = list_input_files(opt.features_dir);
  fs::create_directories(opt.out_dir);
  std::vector<InputStatus> statuses(inputs.size());

  struct PerUtt {
    std::string utt;
    std::optional<FeatureSequence> feats;
    std::optional<Segmentation> seg;
    Matrix pooled;
  };
  std::vector<PerUtt> utts(inputs.size());

  parallel_for(inputs.size(), resolve_workers(opt.workers), [&](std::size_t i) {
    statuses[i].path = inputs[i].string();
    utts[i].utt = inputs[i].stem().string();
    try {
      const fs::path seg_path = fs::path(opt.segs_dir) / (utts[i].utt + ".seg.json");
      if (!fs::exists(seg_path)) {
        throw ValidationError("missing segmentation: " + seg_path.string());
      }
      auto feats = read_features(inputs[i]);
      auto rec = read_segmentation(seg_path);
      if (rec.seg.total_frames() != feats.num_frames()) {
        throw ValidationError("segmentation frame count does not match features");
      }
      utts[i].pooled = pool_segments(feats, rec.seg);
      utts[i].feats = std::move(feats);
      utts[i].seg = std::move(rec.seg);
    } catch (const std::exception& e) {
      statuses[i].error = e.what();
    }
  });

  // One frame rate per corpus; stragglers become per-file failures.
  double frame_rate = 0.0;
  for (std::size_t i = 0; i < utts.size(); ++i) {
    if (!statuses[i].ok()) continue;
    if (frame_rate == 0.0) {
      frame_rate = utts[i].feats->frame_rate_hz();
    } else if (utts[i].feats->frame_rate_hz() != frame_rate) {
      statuses[i].error = "frame rate differs from the rest of the corpus";
    }
  }

  Codebook codebook;
  try {
    if (!opt.codebook_file.empty()) {
      codebook = read_codebook(opt.codebook_file);
    } else {
      long total_rows = 0;
      int dims = -1;
      for (std::size_t i = 0; i < utts.size(); ++i) {
        if (!statuses[i].ok()) continue;
        total_rows += utts[i].pooled.rows();
        if (dims < 0) dims = static_cast<int>(utts[i].pooled.cols());
      }
      if (total_rows == 0) {
        return write_manifest_and_exit(opt.out_dir, "tokenize", statuses);
      }
      Matrix all(total_rows, dims);
      long row = 0;
      for (std::size_t i = 0; i < utts.size(); ++i) {
        if (!statuses[i].ok()) continue;
        all.middleRows(row, utts[i].pooled.rows()) = utts[i].pooled;
        row += utts[i].pooled.rows();
      }

      // Seeded subsampling keeps corpus-scale fits bounded and reproducible.
      if (total_rows > opt.sample_cap) {
        std::mt19937_64 rng(opt.seed);
        std::vector<long> idx(total_rows);
        std::iota(idx.begin(), idx.end(), 0);
        for (long i = 0; i < opt.sample_cap; ++i) {
          const long j = i + static_cast<long>(rng() % (total_rows - i));
          std::swap(idx[i], idx[j]);
        }
        idx.resize(opt.sample_cap);
        std::sort(idx.begin(), idx.end());
        Matrix sample(opt.sample_cap, dims);
        for (long i = 0; i < opt.sample_cap; ++i) sample.row(i) = all.row(idx[i]);
        all = std::move(sample);
      }

      const int k = opt.kmeans_k > 0 ? opt.kmeans_k : 2 * opt.units;
      if (k > all.rows()) {
        throw ValidationError("K-Means size " + std::to_string(k) + " exceeds the " +
                              std::to_string(all.rows()) + " pooled segments");
      }
      const auto km = kmeans_fit(all, k, opt.seed, opt.max_iters);
      std::vector<double> weights(k, 0.0);
      for (int a : km.assignments) weights[a] += 1.0;
      for (double& w : weights) w = std::max(w, 1.0);
      const auto agg = agglomerate(km.centroids, weights, opt.units);
      if (!agg.monotone_merges) {
        std::cerr << "tokenize: note: centroid-linkage merge distances were "
                     "not monotone on this input\n";
      }
      codebook = Codebook{km.centroids, agg.map, opt.units, opt.seed};
      write_codebook(fs::path(opt.out_dir) / "codebook.sylc", codebook);
    }
  } catch (const std::exception& e) {
    std::cerr << "tokenize: codebook: " << e.what() << '\n';
    return 1;
  }

  std::vector<std::optional<UnitSequence>> deduped(utts.size());
  std::atomic<long> pre_dedup_count{0};
  parallel_for(utts.size(), resolve_workers(opt.workers), [&](std::size_t i) {
    if (!statuses[i].ok()) return;
    try {
      const auto raw = assign_units(*utts[i].feats, *utts[i].seg, codebook);
      pre_dedup_count += static_cast<long>(raw.size());
      deduped[i] = dedup(raw);
    } catch (const std::exception& e) {
      statuses[i].error = e.what();
    }
  });

  std::vector<UtteranceUnits> all_units;
  double total_dur = 0.0;
  long post_count = 0;
  for (std::size_t i = 0; i < utts.size(); ++i) {
    if (!statuses[i].ok() || !deduped[i]) continue;
    all_units.push_back({utts[i].utt, *deduped[i]});
    total_dur += utts[i].feats->duration_sec();
    post_count += static_cast<long>(deduped[i]->size());
  }
  if (!all_units.empty()) {
    write_units(fs::path(opt.out_dir) / "units.txt", all_units, frame_rate);

    const double pre_rate = pre_dedup_count / total_dur;
    const double post_rate = post_count / total_dur;
    json report;
    report["num_units"] = codebook.num_units;
    report["frame_rate_hz"] = frame_rate;
    report["total_duration_sec"] = total_dur;
    report["pre_dedup"] = {{"units", pre_dedup_count.load()},
                           {"rate_hz", pre_rate},
                           {"bps", bitrate(pre_rate, codebook.num_units)}};
    report["post_dedup"] = {{"units", post_count},
                            {"rate_hz", post_rate},
                            {"bps", bitrate(post_rate, codebook.num_units)}};
    std::ofstream os(fs::path(opt.out_dir) / "bitrate.json");
    os << report.dump(2) << '\n';
  }
  return write_manifest_and_exit(opt.out_dir, "tokenize", statuses);
}

// ---------------------------------------------------------------------------
// eval

struct EvalOpts {
  std::string units_file;
  std::string segs_dir;
  std::string alignments_dir;
  std::string out_file;
  std::vector<double> tolerances{0.02, 0.05};
  double frame_rate = 50.0;
  bool per_utterance_mean = false;
  bool keep_edges = false;
  bool frame_weighted = false;
};

int cmd_eval(const EvalOpts& opt) {
  struct Hyp {
    std::string utt;
    std::vector<double> boundaries;
    std::optional<UnitSequence> units;
  };
  std::vector<Hyp> hyps;
  try {
    if (!opt.units_file.empty()) {
      for (auto& [utt, units] : read_units(opt.units_file, opt.frame_rate)) {
        Hyp h{utt, {}, std::nullopt};
        const auto& spans = units.units();
        const double rate = units.frame_rate_hz();
        if (opt.keep_edges) {
          h.boundaries.push_back((spans.front().start_frame - 1) / rate);
        }
        for (std::size_t i = 1; i < spans.size(); ++i) {
          h.boundaries.push_back((spans[i].start_frame - 1) / rate);
        }
        if (opt.keep_edges) {
          h.boundaries.push_back((spans.back().end_frame - 1) / rate);
        }
        h.units = std::move(units);
        hyps.push_back(std::move(h));
      }
    } else {
      for (const auto& path : list_input_files(opt.segs_dir)) {
        if (path.extension() != ".json") continue;
        const auto rec = read_segmentation(path);
        Hyp h{rec.utterance, rec.seg.internal_boundary_times(rec.frame_rate_hz), std::nullopt};
        if (opt.keep_edges) {
          h.boundaries.insert(h.boundaries.begin(), 0.0);
          h.boundaries.push_back(rec.seg.total_frames() / rec.frame_rate_hz);
        }
        hyps.push_back(std::move(h));
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "eval: " << e.what() << '\n';
    return 1;
  }
  if (hyps.empty()) {
    std::cerr << "eval: no hypotheses found\n";
    return 1;
  }

  std::map<std::string, fs::path> alignment_of;
  try {
    for (const auto& path : list_input_files(opt.alignments_dir)) {
      alignment_of.emplace(path.stem().string(), path);
    }
  } catch (const std::exception& e) {
    std::cerr << "eval: " << e.what() << '\n';
    return 1;
  }

  struct PerTol {
    long hits = 0, num_ref = 0, num_hyp = 0;
    double p_acc = 0.0, r_acc = 0.0, f_acc = 0.0, rv_acc = 0.0;
    long scored = 0;
  };
  std::vector<PerTol> pooled(opt.tolerances.size());
  PurityCounts purity_pool;
  bool have_units = false;
  std::vector<InputStatus> statuses;
  json excluded = json::array();

  for (auto& hyp : hyps) {
    InputStatus status;
    status.path = hyp.utt;
    const auto it = alignment_of.find(hyp.utt);
    if (it == alignment_of.end()) {
      status.error = "missing alignment";
      excluded.push_back({{"utterance", hyp.utt}, {"reason", "missing alignment"}});
      statuses.push_back(std::move(status));
      continue;
    }
    try {
      const auto ref = read_alignment(it->second);
      auto ref_bounds = ref.boundary_times();
      if (!opt.keep_edges) ref_bounds = strip_edge_boundaries(std::move(ref_bounds));
      for (std::size_t ti = 0; ti < opt.tolerances.size(); ++ti) {
        const long hits = match_boundaries(ref_bounds, hyp.boundaries, opt.tolerances[ti]);
        pooled[ti].hits += hits;
        pooled[ti].num_ref += static_cast<long>(ref_bounds.size());
        pooled[ti].num_hyp += static_cast<long>(hyp.boundaries.size());
        if (!ref_bounds.empty()) {
          const auto s =
              boundary_score_from_counts(hits, static_cast<long>(ref_bounds.size()),
                                         static_cast<long>(hyp.boundaries.size()),
                                         opt.tolerances[ti]);
          pooled[ti].p_acc += s.precision;
          pooled[ti].r_acc += s.recall;
          pooled[ti].f_acc += s.f1;
          pooled[ti].rv_acc += s.r_value;
          ++pooled[ti].scored;
        }
      }
      if (hyp.units) {
        purity_pool.merge(purity_counts(*hyp.units, ref, opt.frame_weighted));
        have_units = true;
      }
    } catch (const std::exception& e) {
      status.error = e.what();
      excluded.push_back({{"utterance", hyp.utt}, {"reason", e.what()}});
    }
    statuses.push_back(std::move(status));
  }

  json report;
  report["num_utterances"] = hyps.size();
  report["num_excluded"] = excluded.size();
  report["aggregation"] = opt.per_utterance_mean ? "per_utterance_mean" : "corpus_pooled";
  try {
    json tol_entries = json::array();
    for (std::size_t ti = 0; ti < opt.tolerances.size(); ++ti) {
      json e;
      e["tolerance_sec"] = opt.tolerances[ti];
      if (opt.per_utterance_mean) {
        const long n = std::max(1L, pooled[ti].scored);
        e["precision"] = pooled[ti].p_acc / n;
        e["recall"] = pooled[ti].r_acc / n;
        e["f1"] = pooled[ti].f_acc / n;
        e["r_value"] = pooled[ti].rv_acc / n;
      } else {
        const auto s = boundary_score_from_counts(pooled[ti].hits, pooled[ti].num_ref,
                                                  pooled[ti].num_hyp, opt.tolerances[ti]);
        e["precision"] = s.precision;
        e["recall"] = s.recall;
        e["f1"] = s.f1;
        e["r_value"] = s.r_value;
      }
      e["hits"] = pooled[ti].hits;
      e["num_ref"] = pooled[ti].num_ref;
      e["num_hyp"] = pooled[ti].num_hyp;
      tol_entries.push_back(std::move(e));
    }
    report["tolerances"] = std::move(tol_entries);
    if (have_units) {
      const auto p = purity_pool.purity();
      report["cluster_purity"] = p.cluster_purity;
      report["syllable_purity"] = p.syllable_purity;
      report["purity_weighting"] = opt.frame_weighted ? "frame" : "segment";
    }
  } catch (const std::exception& e) {
    std::cerr << "eval: " << e.what() << '\n';
    return 1;
  }
  report["excluded"] = std::move(excluded);

  std::cout << report.dump(2) << '\n';
  if (!opt.out_file.empty()) {
    const fs::path out(opt.out_file);
    if (!out.parent_path().empty()) fs::create_directories(out.parent_path());
    std::ofstream os(out);
    os << report.dump(2) << '\n';
    return write_manifest_and_exit(out.parent_path().empty() ? fs::path(".")
                                                             : out.parent_path(),
                                   "eval", statuses);
  }
  bool all_ok = !statuses.empty();
  for (const auto& s : statuses) all_ok = all_ok && s.ok();
  return all_ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Unit discovery for speech features: loss-matrix assembly, min-cut and "
               "interval-cover segmentation, vector-quantized unit codebooks, and "
               "boundary/purity evaluation"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Declarative config file (INI/TOML; flags override)");

  AssembleOpts assemble_opts;
  auto* assemble = app.add_subcommand(
      "assemble", "Build loss-prediction matrices from mask probability records");
  assemble->add_option("--records", assemble_opts.records_dir, "Directory of record files")
      ->required();
  assemble->add_option("--out", assemble_opts.out_dir, "Output directory")->required();
  assemble->add_option("--span", assemble_opts.span, "Mask span in frames (even)")
      ->capture_default_str();
  assemble->add_option("--frame-rate", assemble_opts.frame_rate, "Frame rate stored in outputs")
      ->capture_default_str();
  assemble->add_option("--workers", assemble_opts.workers,
                       "Worker threads (default: SYLSEG_WORKERS or hardware)");

  SegmentOpts segment_opts;
  auto* segment = app.add_subcommand(
      "segment", "Extract boundaries from features (sylboost) or loss matrices (mincut)");
  segment->add_option("--input", segment_opts.input_dir, "Directory of feature/matrix files")
      ->required();
  segment->add_option("--out", segment_opts.out_dir, "Output directory")->required();
  segment->add_option("--mode", segment_opts.mode, "sylboost | mincut")
      ->check(CLI::IsMember({"sylboost", "mincut"}))
      ->capture_default_str();
  auto* rate_group = segment->add_option_group("rate control", "Exactly one must be given");
  rate_group->add_option("--k", segment_opts.fixed_k, "Fixed group count per utterance");
  rate_group->add_option("--k-per-second", segment_opts.k_per_second,
                         "Groups per second of audio");
  rate_group->add_option("--delta", segment_opts.delta, "Per-frame loss threshold");
  rate_group->add_option("--target-hz", segment_opts.target_hz,
                         "Calibrate delta to this corpus unit rate");
  rate_group->require_option(1);
  segment->add_option("--quantile", segment_opts.quantile, "Fraction of frames below delta")
      ->capture_default_str();
  segment->add_option("--group-max", segment_opts.group_max, "Max group length G in frames")
      ->capture_default_str();
  segment->add_option("--tol-hz", segment_opts.tol_hz, "Calibration tolerance")
      ->capture_default_str();
  segment->add_option("--calibration-dir", segment_opts.calibration_dir,
                      "Corpus for delta calibration (default: --input)");
  segment->add_flag("--per-utterance-mean", segment_opts.per_utterance_mean,
                    "Calibrate on the mean of per-utterance rates");
  segment->add_flag("--emit-loss", segment_opts.emit_loss,
                    "Include per-frame losses in segmentation files");
  segment->add_option("--workers", segment_opts.workers, "Worker threads");

  TokenizeOpts tokenize_opts;
  auto* tokenize = app.add_subcommand(
      "tokenize", "Pool segments, fit or apply a codebook, emit deduplicated units");
  tokenize->add_option("--features", tokenize_opts.features_dir, "Directory of feature files")
      ->required();
  tokenize->add_option("--segs", tokenize_opts.segs_dir, "Directory of segmentation files")
      ->required();
  tokenize->add_option("--out", tokenize_opts.out_dir, "Output directory")->required();
  tokenize->add_option("--codebook", tokenize_opts.codebook_file,
                       "Existing codebook to apply (skips fitting)");
  tokenize->add_option("--units", tokenize_opts.units, "Final unit count U")
      ->capture_default_str();
  tokenize->add_option("--kmeans-k", tokenize_opts.kmeans_k,
                       "Intermediate K-Means size (default 2*U)");
  tokenize->add_option("--seed", tokenize_opts.seed, "RNG seed")->capture_default_str();
  tokenize->add_option("--sample-cap", tokenize_opts.sample_cap,
                       "Max pooled vectors used for fitting")
      ->capture_default_str();
  tokenize->add_option("--max-iters", tokenize_opts.max_iters, "Lloyd iteration cap")
      ->capture_default_str();
  tokenize->add_option("--workers", tokenize_opts.workers, "Worker threads");

  EvalOpts eval_opts;
  auto* evalc = app.add_subcommand(
      "eval", "Score boundaries and cluster purity against reference alignments");
  auto* eval_src = evalc->add_option_group("hypothesis source", "Exactly one must be given");
  eval_src->add_option("--units", eval_opts.units_file, "Units file from tokenize");
  eval_src->add_option("--segs", eval_opts.segs_dir, "Directory of segmentation files");
  eval_src->require_option(1);
  evalc->add_option("--alignments", eval_opts.alignments_dir, "Directory of alignment files")
      ->required();
  evalc->add_option("--tolerance", eval_opts.tolerances, "Boundary tolerances in seconds")
      ->capture_default_str();
  evalc->add_option("--frame-rate", eval_opts.frame_rate,
                    "Fallback frame rate for unit files without a header")
      ->capture_default_str();
  evalc->add_flag("--per-utterance-mean", eval_opts.per_utterance_mean,
                  "Average per-utterance metrics instead of pooling counts");
  evalc->add_flag("--keep-edges", eval_opts.keep_edges,
                  "Keep utterance-edge boundaries in both lists");
  evalc->add_flag("--frame-weighted", eval_opts.frame_weighted,
                  "Weight purity counts by overlap duration");
  evalc->add_option("--out", eval_opts.out_file, "Write the report JSON here too");

  CalibrateOpts calibrate_opts;
  auto* calibrate = app.add_subcommand(
      "calibrate", "Find the delta matching a target corpus unit rate");
  calibrate->add_option("--input", calibrate_opts.input_dir, "Directory of feature files")
      ->required();
  calibrate->add_option("--target-hz", calibrate_opts.target_hz, "Desired unit rate")
      ->required();
  calibrate->add_option("--quantile", calibrate_opts.quantile, "Fraction of frames below delta")
      ->capture_default_str();
  calibrate->add_option("--group-max", calibrate_opts.group_max, "Max group length G")
      ->capture_default_str();
  calibrate->add_option("--tol-hz", calibrate_opts.tol_hz, "Rate tolerance")
      ->capture_default_str();
  calibrate->add_flag("--per-utterance-mean", calibrate_opts.per_utterance_mean,
                      "Match the mean of per-utterance rates");
  calibrate->add_option("--out", calibrate_opts.out_file, "Write calibration JSON here");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*assemble) return cmd_assemble(assemble_opts);
    if (*segment) {
      if (segment_opts.mode == "mincut" &&
          (segment_opts.delta >= 0.0 || segment_opts.target_hz > 0.0)) {
        std::cerr << "segment: mincut mode takes --k or --k-per-second; delta-based rate "
                     "control needs per-frame losses, which only the feature path defines\n";
        return 2;
      }
      return cmd_segment(segment_opts);
    }
    if (*tokenize) return cmd_tokenize(tokenize_opts);
    if (*evalc) return cmd_eval(eval_opts);
    if (*calibrate) return cmd_calibrate(calibrate_opts);
  } catch (const std::exception& e) {
    std::cerr << "sylseg: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
