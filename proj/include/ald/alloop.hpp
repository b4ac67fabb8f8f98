#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ald/augment.hpp"
#include "ald/heuristics.hpp"
#include "ald/metrics.hpp"
#include "ald/model.hpp"
#include "ald/scan_io.hpp"
#include "ald/synth.hpp"

namespace ald {

enum class Heuristic { Bald, Entropy, Random };
Heuristic heuristic_from_name(const std::string& name);
std::string heuristic_name(Heuristic h);

// Disjoint labeled/unlabeled partition over manifest sample ids.
struct PoolState {
    int64_t step = 0; // completed queries
    std::vector<int64_t> labeled;   // sorted
    std::vector<int64_t> unlabeled; // sorted
    std::vector<std::vector<int64_t>> history; // per query, in rank order
    uint64_t seed = 0;
    uint64_t rng_state = 0;

    void check_partition(int64_t dataset_size, int64_t init_size, int64_t budget) const;
};

PoolState init_pool(const DatasetManifest& manifest, int64_t init_size, uint64_t seed);

// state.bin round-trips the pool exactly; a checksum rejects tampered files.
void save_state(const PoolState& pool, int64_t records_done, uint64_t config_hash,
                const std::filesystem::path& dir);
struct SavedState {
    PoolState pool;
    int64_t records_done = 0;
    uint64_t config_hash = 0;
};
SavedState load_state(const std::filesystem::path& dir);

struct ExperimentConfig {
    std::string manifest_path;
    std::string test_manifest_path;
    SensorConfig sensor;
    ChannelSet channels = ChannelSet::XYRI;

    std::vector<int> hidden;   // conv3x3 widths
    double dropout = 0.2;
    double input_scale = 0.04; // metric channels; remission is unscaled
    uint64_t model_seed = 0;   // 0 = derive from seed

    TrainConfig train;

    int64_t init_size = 0;
    int64_t budget = 0;
    int64_t max_steps = 0; // recorded steps cap; 0 = run until the pool empties
    int mc_iterations = 8;
    Heuristic heuristic = Heuristic::Bald;
    AggregationSpec aggregation;
    bool dump_scores = false;

    bool augment_enabled = false;
    AugPolicy augment;

    uint64_t seed = 1;
    int threads = 0; // 0 = hardware
    std::string out_root = "out";
    std::string name; // defaults to heuristic (+"+da")

    [[nodiscard]] std::string method_name() const;
    void validate() const;
};

// Step records double as learning-curve points; wall time never enters
// curves.csv so resumed runs stay byte-identical.
struct StepRecord {
    int64_t step = 0;
    int64_t n_labeled = 0;
    double test_miou = 0.0;
    std::vector<double> class_iou;
    double wall_time_s = 0.0;
    uint64_t init_param_hash = 0;
    std::vector<int64_t> selected;                      // rank order; empty on the final record
    std::vector<std::pair<int64_t, double>> pool_scores; // (sample id, aggregated score)
};

// Samples projected once up front; scans stay on disk otherwise.
struct LoadedDataset {
    std::vector<TrainSample> samples; // indexed by sample id
    int class_count = 0;
};
LoadedDataset load_dataset(const DatasetManifest& manifest, const SensorConfig& sensor,
                           ChannelSet channels, int threads);

// One AL step: weight reset, train on L, evaluate, score U, select top budget.
// Requires a non-empty unlabeled pool.
StepRecord query_step(PoolState& pool, const LoadedDataset& train_pool,
                      const LoadedDataset& test_set, const ExperimentConfig& cfg);

// Trains and evaluates without selecting; used for the terminal record.
StepRecord eval_step(const PoolState& pool, const LoadedDataset& train_pool,
                     const LoadedDataset& test_set, const ExperimentConfig& cfg);

struct RunOptions {
    int64_t stop_after_records = 0; // 0 = run to completion; used to exercise resume
    std::ostream* progress = nullptr;
};

struct RunResult {
    std::vector<StepRecord> records;
    LearningCurve curve;
    std::filesystem::path out_dir;
    bool finished = false;
};

// Full experiment: init or resume pool, loop steps, persist per-step
// artifacts, rebuild curves.csv from the step files.
RunResult run_experiment(const ExperimentConfig& cfg, const RunOptions& options = {});

// Step-count rule: 1 initial record + ceil((|D| - init) / B) queries.
int64_t planned_steps(int64_t dataset_size, int64_t init_size, int64_t budget);

uint64_t config_hash(const ExperimentConfig& cfg);
std::string config_snapshot(const ExperimentConfig& cfg);

} // namespace ald
