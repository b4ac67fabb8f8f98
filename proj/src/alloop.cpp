#include "ald/alloop.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

#include "ald/errors.hpp"
#include "ald/hash.hpp"
#include "ald/parallel.hpp"
#include "ald/rng.hpp"

namespace fs = std::filesystem;

namespace ald {

namespace {

constexpr uint64_t kTagPoolInit = 0x504f4f4cull;  // "POOL"
constexpr uint64_t kTagModel = 0x4d4f444cull;     // "MODL"
constexpr uint64_t kTagTrain = 0x5452414eull;     // "TRAN"
constexpr uint64_t kTagScore = 0x53434f52ull;     // "SCOR"
constexpr uint64_t kTagRandom = 0x524e4448ull;    // "RNDH"

} // namespace

Heuristic heuristic_from_name(const std::string& name) {
    if (name == "bald") return Heuristic::Bald;
    if (name == "entropy") return Heuristic::Entropy;
    if (name == "random") return Heuristic::Random;
    throw ConfigError("unknown heuristic: '" + name + "'");
}

std::string heuristic_name(Heuristic h) {
    switch (h) {
        case Heuristic::Bald: return "bald";
        case Heuristic::Entropy: return "entropy";
        case Heuristic::Random: return "random";
    }
    return "?";
}

void PoolState::check_partition(int64_t dataset_size, int64_t init_size, int64_t budget) const {
    std::set<int64_t> l(labeled.begin(), labeled.end());
    std::set<int64_t> u(unlabeled.begin(), unlabeled.end());
    if (static_cast<int64_t>(l.size() + u.size()) != dataset_size)
        throw NumericError("pool partition broken: |L|+|U| != |D|");
    for (int64_t id : u)
        if (l.count(id)) throw NumericError("pool partition broken: L and U intersect");
    int64_t expect = std::min(dataset_size, init_size + step * budget);
    if (static_cast<int64_t>(l.size()) != expect)
        throw NumericError("pool partition broken: |L| = " + std::to_string(l.size()) +
                           ", expected " + std::to_string(expect));
}

PoolState init_pool(const DatasetManifest& manifest, int64_t init_size, uint64_t seed) {
    int64_t n = static_cast<int64_t>(manifest.size());
    if (init_size > n)
        throw ConfigError("init_size " + std::to_string(init_size) + " exceeds pool size " +
                          std::to_string(n));
    Rng rng(mix_seed({seed, kTagPoolInit}));
    PoolState pool;
    pool.seed = seed;
    pool.labeled = rng.sample_without_replacement(n, init_size);
    std::sort(pool.labeled.begin(), pool.labeled.end());
    std::set<int64_t> chosen(pool.labeled.begin(), pool.labeled.end());
    for (int64_t i = 0; i < n; ++i)
        if (!chosen.count(i)) pool.unlabeled.push_back(i);
    pool.rng_state = rng.state();
    return pool;
}

LoadedDataset load_dataset(const DatasetManifest& manifest, const SensorConfig& sensor,
                           ChannelSet channels, int threads) {
    LoadedDataset ds;
    ds.class_count = manifest.class_count();
    ds.samples.resize(manifest.size());
    parallel_for(manifest.size(), threads, [&](size_t i) {
        LabeledPointCloud cloud = load_scan(manifest.scan_file(i));
        load_labels(manifest.label_file(i), cloud);
        TrainSample s;
        s.image = project(cloud, sensor, channels);
        s.content_hash = manifest.entries[i].content_hash;
        s.sample_id = manifest.entries[i].sample_id;
        ds.samples[i] = std::move(s);
    });
    return ds;
}

namespace {

ArchSpec arch_from_config(const ExperimentConfig& cfg, int class_count) {
    ArchSpec arch;
    arch.in_channels = channel_count(cfg.channels);
    for (int width : cfg.hidden) arch.layers.push_back({LayerKind::Conv3x3, width, true});
    arch.layers.push_back({LayerKind::Conv1x1, class_count, false});
    arch.dropout_p = cfg.dropout;
    arch.input_scale.assign(static_cast<size_t>(arch.in_channels), cfg.input_scale);
    arch.input_scale.back() = 1.0; // remission
    return arch;
}

std::vector<TrainSample> gather(const LoadedDataset& ds, const std::vector<int64_t>& ids) {
    std::vector<TrainSample> out;
    out.reserve(ids.size());
    for (int64_t id : ids) out.push_back(ds.samples[static_cast<size_t>(id)]);
    return out;
}

IouResult evaluate(const ModelParams& params, const LoadedDataset& test, int threads) {
    std::vector<ConfusionMatrix> parts(test.samples.size(), ConfusionMatrix(test.class_count));
    parallel_for(test.samples.size(), threads, [&](size_t i) {
        ProbMap probs = forward(params, test.samples[i].image, ForwardMode::Eval, 0);
        auto pred = predict_labels(probs);
        parts[i] = confusion_matrix(pred, test.samples[i].image.labels,
                                    test.samples[i].image.valid, test.class_count);
    });
    ConfusionMatrix total(test.class_count);
    for (const auto& p : parts) total.merge(p);
    return iou(total);
}

// Trains a freshly seeded model on the current labeled set and evaluates it.
StepRecord train_and_eval(const PoolState& pool, const LoadedDataset& train_pool,
                          const LoadedDataset& test_set, const ExperimentConfig& cfg,
                          ModelParams* trained_out) {
    auto t0 = std::chrono::steady_clock::now();
    StepRecord rec;
    rec.step = pool.step;
    rec.n_labeled = static_cast<int64_t>(pool.labeled.size());

    ArchSpec arch = arch_from_config(cfg, train_pool.class_count);
    uint64_t model_seed_base = cfg.model_seed ? cfg.model_seed : cfg.seed;
    ModelParams init = init_model(
        arch, mix_seed({model_seed_base, kTagModel, static_cast<uint64_t>(pool.step)}));
    rec.init_param_hash = init.content_hash();

    TrainConfig tc = cfg.train;
    tc.seed = mix_seed({cfg.seed, kTagTrain, static_cast<uint64_t>(pool.step)});
    auto labeled = gather(train_pool, pool.labeled);
    auto [params, log] = train(init, labeled, cfg.augment_enabled ? &cfg.augment : nullptr, tc,
                               cfg.threads);

    IouResult r = evaluate(params, test_set, cfg.threads);
    rec.test_miou = r.miou;
    rec.class_iou = r.class_iou;
    if (trained_out) *trained_out = std::move(params);
    rec.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rec;
}

std::vector<std::pair<int64_t, double>> score_pool(const PoolState& pool,
                                                   const LoadedDataset& ds,
                                                   const ModelParams& params,
                                                   const ExperimentConfig& cfg) {
    std::vector<std::pair<int64_t, double>> scores(pool.unlabeled.size());
    if (cfg.heuristic == Heuristic::Random) {
        auto vals = random_scores(pool.unlabeled.size(),
                                  mix_seed({cfg.seed, kTagRandom,
                                            static_cast<uint64_t>(pool.step)}));
        for (size_t i = 0; i < pool.unlabeled.size(); ++i)
            scores[i] = {pool.unlabeled[i], vals[i]};
        return scores;
    }
    uint64_t score_seed = mix_seed({cfg.seed, kTagScore, static_cast<uint64_t>(pool.step)});
    parallel_for(pool.unlabeled.size(), cfg.threads, [&](size_t i) {
        const TrainSample& s = ds.samples[static_cast<size_t>(pool.unlabeled[i])];
        McScoreAccumulator acc(s.image.w, s.image.h, params.arch.class_count(), s.image.valid);
        for (int t = 0; t < cfg.mc_iterations; ++t)
            acc.add(forward(params, s.image, ForwardMode::Mc,
                            mix_seed({score_seed, s.content_hash, static_cast<uint64_t>(t)})));
        ScoreImage img =
            cfg.heuristic == Heuristic::Bald ? acc.bald() : acc.predictive_entropy();
        const std::vector<uint16_t> cmap =
            cfg.aggregation.method == Aggregation::WeightedMean
                ? acc.mean_class_map()
                : std::vector<uint16_t>{};
        scores[i] = {s.sample_id, aggregate(img, cfg.aggregation, cmap.empty() ? nullptr : &cmap)};
    });
    return scores;
}

} // namespace

StepRecord query_step(PoolState& pool, const LoadedDataset& train_pool,
                      const LoadedDataset& test_set, const ExperimentConfig& cfg,
                      ModelParams* model_out) {
    if (pool.unlabeled.empty()) throw ConfigError("query_step: unlabeled pool is empty");
    ModelParams params;
    StepRecord rec = train_and_eval(pool, train_pool, test_set, cfg, &params);
    auto t0 = std::chrono::steady_clock::now();

    rec.pool_scores = score_pool(pool, train_pool, params, cfg);
    auto ranked = rank_pool(rec.pool_scores);
    int64_t take = std::min<int64_t>(cfg.budget, static_cast<int64_t>(ranked.size()));
    rec.selected.assign(ranked.begin(), ranked.begin() + take);

    std::set<int64_t> moved(rec.selected.begin(), rec.selected.end());
    std::vector<int64_t> remaining;
    remaining.reserve(pool.unlabeled.size() - moved.size());
    for (int64_t id : pool.unlabeled)
        if (!moved.count(id)) remaining.push_back(id);
    pool.unlabeled = std::move(remaining);
    pool.labeled.insert(pool.labeled.end(), rec.selected.begin(), rec.selected.end());
    std::sort(pool.labeled.begin(), pool.labeled.end());
    pool.history.push_back(rec.selected);
    pool.step += 1;
    pool.rng_state = mix_seed({pool.rng_state, static_cast<uint64_t>(pool.step)});

    rec.wall_time_s +=
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    pool.check_partition(static_cast<int64_t>(train_pool.samples.size()), cfg.init_size,
                         cfg.budget);
    if (model_out) *model_out = std::move(params);
    return rec;
}

StepRecord eval_step(const PoolState& pool, const LoadedDataset& train_pool,
                     const LoadedDataset& test_set, const ExperimentConfig& cfg,
                     ModelParams* model_out) {
    return train_and_eval(pool, train_pool, test_set, cfg, model_out);
}

int64_t planned_steps(int64_t dataset_size, int64_t init_size, int64_t budget) {
    if (budget < 1 || init_size < 0 || init_size > dataset_size)
        throw ConfigError("planned_steps: invalid pool arithmetic");
    int64_t remaining = dataset_size - init_size;
    return 1 + (remaining + budget - 1) / budget;
}

std::string ExperimentConfig::method_name() const {
    if (!name.empty()) return name;
    return heuristic_name(heuristic) + (augment_enabled ? "+da" : "");
}

void ExperimentConfig::validate() const {
    if (manifest_path.empty()) throw ConfigError("config: [data] manifest is required");
    if (init_size < 1) throw ConfigError("config: [al] init_size must be >= 1");
    if (budget < 1) throw ConfigError("config: [al] budget must be >= 1");
    if (mc_iterations < 1) throw ConfigError("config: [al] mc_iterations must be >= 1");
    if (max_steps < 0) throw ConfigError("config: [al] max_steps must be >= 0");
    if (sensor.width < 1 || sensor.height < 1 || sensor.fov() <= 0.0)
        throw ConfigError("config: invalid [sensor] geometry");
    if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("config: [model] dropout in [0,1)");
    train.validate();
    if (aggregation.method == Aggregation::WeightedMean) {
        if (aggregation.class_weights.empty())
            throw ConfigError("config: weighted_mean aggregation needs [al] class_weights");
        bool any = false;
        for (double w : aggregation.class_weights) {
            if (w < 0.0) throw ConfigError("config: class weights must be >= 0");
            any = any || w > 0.0;
        }
        if (!any) throw ConfigError("config: class weights must not all be zero");
    }
}

// ---------------------------------------------------------------------------
// persistence

namespace {

void append_u64(std::vector<unsigned char>& buf, uint64_t v) {
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFF));
}

uint64_t take_u64(const std::vector<unsigned char>& buf, size_t& pos) {
    if (pos + 8 > buf.size()) throw DataFormatError("state file truncated");
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(buf[pos + i]) << (8 * i);
    pos += 8;
    return v;
}

void append_ids(std::vector<unsigned char>& buf, const std::vector<int64_t>& ids) {
    append_u64(buf, ids.size());
    for (int64_t id : ids) append_u64(buf, static_cast<uint64_t>(id));
}

std::vector<int64_t> take_ids(const std::vector<unsigned char>& buf, size_t& pos) {
    uint64_t n = take_u64(buf, pos);
    if (n > (1ull << 32)) throw DataFormatError("state file corrupt: absurd id count");
    std::vector<int64_t> ids(n);
    for (auto& id : ids) id = static_cast<int64_t>(take_u64(buf, pos));
    return ids;
}

constexpr char kStateMagic[8] = {'A', 'L', 'D', 'S', 'T', 'A', 'T', '1'};

} // namespace

void save_state(const PoolState& pool, int64_t records_done, uint64_t config_hash,
                const fs::path& dir) {
    std::vector<unsigned char> buf(kStateMagic, kStateMagic + 8);
    append_u64(buf, config_hash);
    append_u64(buf, static_cast<uint64_t>(pool.step));
    append_u64(buf, static_cast<uint64_t>(records_done));
    append_u64(buf, pool.seed);
    append_u64(buf, pool.rng_state);
    append_ids(buf, pool.labeled);
    append_ids(buf, pool.unlabeled);
    append_u64(buf, pool.history.size());
    for (const auto& h : pool.history) append_ids(buf, h);
    append_u64(buf, fnv1a64(buf.data(), buf.size()));
    std::ofstream out(dir / "state.bin", std::ios::binary | std::ios::trunc);
    if (!out) throw DataFormatError("cannot write state file in " + dir.string());
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!out) throw DataFormatError("short write: state.bin");
}

SavedState load_state(const fs::path& dir) {
    fs::path file = dir / "state.bin";
    if (!fs::exists(file)) throw DataFormatError("no state file in " + dir.string());
    auto buf = read_file_bytes(file);
    if (buf.size() < 16 || !std::equal(kStateMagic, kStateMagic + 8, buf.begin()))
        throw DataFormatError("not a state file: " + file.string());
    uint64_t stored = 0;
    for (int i = 0; i < 8; ++i)
        stored |= static_cast<uint64_t>(buf[buf.size() - 8 + i]) << (8 * i);
    if (fnv1a64(buf.data(), buf.size() - 8) != stored)
        throw DataFormatError("state file checksum mismatch (corrupt or tampered): " +
                              file.string());
    size_t pos = 8;
    SavedState s;
    s.config_hash = take_u64(buf, pos);
    s.pool.step = static_cast<int64_t>(take_u64(buf, pos));
    s.records_done = static_cast<int64_t>(take_u64(buf, pos));
    s.pool.seed = take_u64(buf, pos);
    s.pool.rng_state = take_u64(buf, pos);
    s.pool.labeled = take_ids(buf, pos);
    s.pool.unlabeled = take_ids(buf, pos);
    uint64_t hn = take_u64(buf, pos);
    for (uint64_t i = 0; i < hn; ++i) s.pool.history.push_back(take_ids(buf, pos));
    return s;
}

// ---------------------------------------------------------------------------
// experiment driver

namespace {

std::string step_dir_name(int64_t step) {
    return "step_" + std::to_string(step);
}

void write_step_artifacts(const fs::path& dir, const StepRecord& rec, const LearningCurve& asCurve,
                          const ExperimentConfig& cfg, const ModelParams* model) {
    fs::create_directories(dir);
    {
        std::ofstream sel(dir / "selected.txt", std::ios::trunc);
        for (int64_t id : rec.selected) sel << id << '\n';
    }
    {
        std::ofstream met(dir / "metrics.csv", std::ios::trunc);
        met << "method,step,n_labeled,pct_labeled,miou";
        for (size_t i = 0; i < rec.class_iou.size(); ++i) met << ",ciou_" << i;
        met << ",wall_time_s\n";
        char buf[64];
        met << format_curve_row(asCurve, 0);
        std::snprintf(buf, sizeof(buf), ",%.3f", rec.wall_time_s);
        met << buf << '\n';
    }
    if (cfg.dump_scores && !rec.pool_scores.empty()) {
        std::ofstream sc(dir / "scores.csv", std::ios::trunc);
        sc << "sample_id,score\n";
        char buf[64];
        for (const auto& [id, score] : rec.pool_scores) {
            std::snprintf(buf, sizeof(buf), "%lld,%.17g\n", static_cast<long long>(id), score);
            sc << buf;
        }
    }
    if (model) save_checkpoint(*model, rec.step, dir / "model.ckpt");
}

LearningCurve record_as_curve(const StepRecord& rec, const ExperimentConfig& cfg,
                              int64_t dataset_size) {
    LearningCurve c;
    c.method = cfg.method_name();
    CurvePoint p;
    p.n_labeled = rec.n_labeled;
    p.pct_labeled = 100.0 * static_cast<double>(rec.n_labeled) /
                    static_cast<double>(dataset_size);
    p.miou = rec.test_miou;
    p.class_iou = rec.class_iou;
    c.points.push_back(std::move(p));
    return c;
}

// curves.csv is rebuilt from the per-step metrics files by string slicing, so
// fresh and resumed runs emit identical bytes.
void rebuild_curves(const fs::path& out_dir, int64_t records_done) {
    std::vector<std::string> rows;
    std::string header;
    for (int64_t s = 0; s < records_done; ++s) {
        std::ifstream met(out_dir / step_dir_name(s) / "metrics.csv");
        if (!met)
            throw DataFormatError("missing step metrics: " +
                                  (out_dir / step_dir_name(s) / "metrics.csv").string());
        std::string h, row;
        std::getline(met, h);
        std::getline(met, row);
        size_t cut = h.rfind(",wall_time_s");
        if (cut == std::string::npos || row.rfind(',') == std::string::npos)
            throw DataFormatError("malformed step metrics at step " + std::to_string(s));
        header = h.substr(0, cut);
        rows.push_back(row.substr(0, row.rfind(',')));
    }
    std::ofstream out(out_dir / "curves.csv", std::ios::trunc);
    out << header << '\n';
    for (const auto& r : rows) out << r << '\n';
    if (!out) throw DataFormatError("short write: curves.csv");
}

} // namespace

RunResult run_experiment(const ExperimentConfig& cfg, const RunOptions& options) {
    cfg.validate();
    if (cfg.test_manifest_path.empty())
        throw ConfigError("config: [data] test_manifest is required for al-run");

    DatasetManifest manifest = load_manifest(cfg.manifest_path);
    DatasetManifest test_manifest = load_manifest(cfg.test_manifest_path);
    int64_t n = static_cast<int64_t>(manifest.size());
    if (cfg.init_size + cfg.budget > n)
        throw ConfigError("config: init_size + budget exceeds pool size " + std::to_string(n));

    RunResult result;
    result.out_dir = fs::path(cfg.out_root) / cfg.method_name();
    fs::create_directories(result.out_dir);
    if (!fs::is_directory(result.out_dir))
        throw DataFormatError("cannot create output dir " + result.out_dir.string());

    uint64_t chash = config_hash(cfg);
    fs::path snap_file = result.out_dir / "config.snapshot";
    PoolState pool;
    int64_t records_done = 0;
    if (fs::exists(result.out_dir / "state.bin")) {
        SavedState saved = load_state(result.out_dir);
        if (saved.config_hash != chash)
            throw ConfigError("resume-state mismatch: config hash differs from " +
                              snap_file.string());
        pool = std::move(saved.pool);
        records_done = saved.records_done;
    } else {
        pool = init_pool(manifest, cfg.init_size, cfg.seed);
        std::ofstream snap(snap_file, std::ios::trunc);
        snap << config_snapshot(cfg);
        save_state(pool, 0, chash, result.out_dir);
    }

    LoadedDataset train_pool = load_dataset(manifest, cfg.sensor, cfg.channels, cfg.threads);
    LoadedDataset test_set = load_dataset(test_manifest, cfg.sensor, cfg.channels, cfg.threads);

    int64_t cap = cfg.max_steps > 0 ? cfg.max_steps : planned_steps(n, cfg.init_size, cfg.budget);
    while (records_done < cap) {
        if (options.stop_after_records > 0 && records_done >= options.stop_after_records) {
            result.finished = false;
            rebuild_curves(result.out_dir, records_done);
            return result;
        }
        bool final_record = pool.unlabeled.empty() || records_done + 1 == cap;
        StepRecord rec;
        ModelParams model;
        if (!final_record) {
            rec = query_step(pool, train_pool, test_set, cfg, &model);
        } else {
            rec = eval_step(pool, train_pool, test_set, cfg, &model);
        }
        LearningCurve one = record_as_curve(rec, cfg, n);
        write_step_artifacts(result.out_dir / step_dir_name(records_done), rec, one, cfg,
                             &model);
        ++records_done;
        save_state(pool, records_done, chash, result.out_dir);
        if (options.progress) {
            *options.progress << "step " << rec.step << ": |L|=" << rec.n_labeled
                              << " test mIoU=" << rec.test_miou << " (" << rec.wall_time_s
                              << " s)\n";
        }
        result.records.push_back(std::move(rec));
        if (final_record) break;
    }
    rebuild_curves(result.out_dir, records_done);

    result.curve = parse_curves_csv(result.out_dir / "curves.csv").front();
    result.finished = true;
    return result;
}

} // namespace ald
