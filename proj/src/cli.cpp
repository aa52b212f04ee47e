#include "rrl/cli.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "rrl/archive.hpp"
#include "rrl/encoder.hpp"
#include "rrl/error.hpp"
#include "rrl/graph.hpp"
#include "rrl/manifest.hpp"
#include "rrl/metrics.hpp"
#include "rrl/rng.hpp"
#include "rrl/synthgen.hpp"
#include "rrl/textio.hpp"
#include "rrl/trainer.hpp"

namespace fs = std::filesystem;

namespace rrl::cli {

namespace {

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

WeightMode parse_mode(const std::string& mode) {
    if (mode == "binary") return WeightMode::binary;
    if (mode == "literal") return WeightMode::literal;
    if (mode == "scaled") return WeightMode::scaled;
    throw DataError("unknown weight mode: " + mode);
}

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write output file: " + path);
    return out;
}

std::vector<TrainExample> to_examples(LoadedArchive&& archive) {
    std::vector<TrainExample> dataset;
    dataset.reserve(archive.ids.size());
    for (std::size_t i = 0; i < archive.ids.size(); ++i)
        dataset.push_back({std::move(archive.images[i]), std::move(archive.maps[i])});
    return dataset;
}

std::vector<ArchiveImage> to_archive_images(const LoadedArchive& archive) {
    LabelSet ls{archive.num_classes, {}};
    std::vector<ArchiveImage> items;
    items.reserve(archive.ids.size());
    for (std::size_t i = 0; i < archive.ids.size(); ++i)
        items.push_back({archive.ids[i], archive.images[i], labels_present(archive.maps[i], ls)});
    return items;
}

// synth subcommand state and execution.
struct SynthCmd {
    std::string out_dir;
    int images = 0;
    std::string size;
    int classes = 0;
    int sites = 0;
    int channels = 3;
    double noise = 0.05;
    std::uint64_t seed = 0;

    int execute() const {
        Timer timer;
        int h = 0, w = 0;
        {
            auto x = size.find('x');
            if (x == std::string::npos)
                throw DataError("--size expects HxW, got '" + size + "'");
            h = static_cast<int>(parse_int(std::string_view(size).substr(0, x), "height"));
            w = static_cast<int>(parse_int(std::string_view(size).substr(x + 1), "width"));
        }
        SynthConfig cfg{images, h, w, classes, sites, channels, noise, seed};
        auto archive = generate(cfg);
        write_archive(out_dir, archive, channels);

        RunManifest manifest;
        manifest.subcommand = "synth";
        manifest.flags = {{"out", out_dir},
                          {"images", std::to_string(images)},
                          {"size", size},
                          {"classes", std::to_string(classes)},
                          {"sites", std::to_string(sites)},
                          {"channels", std::to_string(channels)},
                          {"noise", format_double(noise)}};
        manifest.seeds = {{"seed", seed}};
        manifest.outputs = {out_dir + "/manifest.tsv"};
        manifest.wall_seconds = timer.seconds();
        write_manifest((fs::path(out_dir) / "run.manifest.json").string(), manifest);
        std::cerr << "synth: wrote " << archive.size() << " images to " << out_dir << "\n";
        return 0;
    }
};

struct GraphCmd {
    std::string archive_dir;
    std::string out_path;
    std::string mode = "scaled";
    bool no_self_edges = false;
    double size_norm = 0.0;
    double dist_norm = 0.0;
    double target_scale = 0.0;

    WeightConfig weight_config() const {
        WeightConfig cfg;
        cfg.mode = parse_mode(mode);
        cfg.self_edges = !no_self_edges;
        if (size_norm > 0.0) cfg.size_norm = size_norm;
        if (dist_norm > 0.0) cfg.dist_norm = dist_norm;
        if (target_scale > 0.0) cfg.target_scale = target_scale;
        return cfg;
    }

    int execute() const {
        Timer timer;
        LoadedArchive archive = load_archive(archive_dir);
        WeightConfig cfg = weight_config();

        auto out = open_output(out_path);
        out << "image_id,p,q,weight\n";
        for (std::size_t i = 0; i < archive.ids.size(); ++i) {
            RegionGraph g = build_graph(archive.maps[i], cfg);
            for (const auto& e : g.edges)
                if (e.weight != 0.0)
                    out << archive.ids[i] << ',' << e.p << ',' << e.q << ','
                        << format_double(e.weight) << '\n';
        }

        RunManifest manifest;
        manifest.subcommand = "graph";
        manifest.flags = {{"archive", archive_dir},
                          {"out", out_path},
                          {"mode", mode},
                          {"self-edges", no_self_edges ? "false" : "true"}};
        manifest.inputs = {archive_dir + "/manifest.tsv"};
        manifest.outputs = {out_path};
        manifest.wall_seconds = timer.seconds();
        write_manifest(out_path + ".manifest.json", manifest);
        return 0;
    }
};

struct TrainCmd {
    std::string archive_dir;
    int epochs = 100;
    int batch = 16;
    double lr = 1e-3;
    std::uint64_t seed = 0;
    std::string mode = "scaled";
    std::string out_path;
    std::string log_path;
    int gamma = 128;
    std::vector<int> blocks = {8, 16, 32};
    int threads = 1;

    int execute() const {
        Timer timer;
        LoadedArchive archive = load_archive(archive_dir);

        EncoderConfig encoder_cfg;
        encoder_cfg.input_channels = archive.channels;
        encoder_cfg.input_height = archive.height;
        encoder_cfg.input_width = archive.width;
        encoder_cfg.block_widths = blocks;
        encoder_cfg.gamma = gamma;
        encoder_cfg.num_classes = archive.num_classes;
        encoder_cfg.seed = derive_seed(seed, 1);

        TrainConfig train_cfg;
        train_cfg.epochs = epochs;
        train_cfg.batch_size = batch;
        train_cfg.learning_rate = lr;
        train_cfg.shuffle_seed = derive_seed(seed, 2);
        train_cfg.weight_config.mode = parse_mode(mode);
        train_cfg.threads = threads;

        auto dataset = to_examples(std::move(archive));
        TrainReport report = train(dataset, encoder_cfg, train_cfg);
        for (std::size_t e = 0; e < report.epoch_mean_loss.size(); ++e)
            std::cerr << "epoch " << (e + 1) << ": mean loss "
                      << format_double(report.epoch_mean_loss[e]) << "\n";

        save_checkpoint(out_path, encoder_cfg, report.final_params);
        if (!log_path.empty()) {
            auto log = open_output(log_path);
            log << "epoch,mean_loss\n";
            for (std::size_t e = 0; e < report.epoch_mean_loss.size(); ++e)
                log << (e + 1) << ',' << format_double(report.epoch_mean_loss[e]) << '\n';
        }

        RunManifest manifest;
        manifest.subcommand = "train";
        manifest.flags = {{"archive", archive_dir},
                          {"epochs", std::to_string(epochs)},
                          {"batch", std::to_string(batch)},
                          {"lr", format_double(lr)},
                          {"mode", mode},
                          {"out", out_path},
                          {"log", log_path},
                          {"gamma", std::to_string(gamma)},
                          {"threads", std::to_string(threads)}};
        {
            std::string joined;
            for (int b : blocks) joined += (joined.empty() ? "" : ",") + std::to_string(b);
            manifest.flags["blocks"] = joined;
        }
        manifest.seeds = {{"seed", seed},
                          {"encoder_seed", encoder_cfg.seed},
                          {"shuffle_seed", train_cfg.shuffle_seed}};
        manifest.inputs = {archive_dir + "/manifest.tsv"};
        manifest.outputs = {out_path};
        if (!log_path.empty()) manifest.outputs.push_back(log_path);
        manifest.wall_seconds = timer.seconds();
        write_manifest(out_path + ".manifest.json", manifest);
        return 0;
    }
};

struct ExtractCmd {
    std::string archive_dir;
    std::string model_path;
    std::string out_path;
    std::string ids_path;
    int threads = 1;

    int execute() const {
        Timer timer;
        Checkpoint ckpt = load_checkpoint(model_path);
        std::optional<std::vector<std::string>> subset;
        if (!ids_path.empty()) subset = read_id_file(ids_path);
        LoadedArchive archive = load_archive(archive_dir, subset);
        auto items = to_archive_images(archive);
        DescriptorStore store = extract_descriptors(ckpt.params, ckpt.config, items, threads);
        write_desc_file(out_path, store);

        RunManifest manifest;
        manifest.subcommand = "extract";
        manifest.flags = {{"archive", archive_dir},
                          {"model", model_path},
                          {"out", out_path},
                          {"ids", ids_path},
                          {"threads", std::to_string(threads)}};
        manifest.inputs = {archive_dir + "/manifest.tsv", model_path};
        if (!ids_path.empty()) manifest.inputs.push_back(ids_path);
        manifest.outputs = {out_path};
        manifest.wall_seconds = timer.seconds();
        write_manifest(out_path + ".manifest.json", manifest);
        return 0;
    }
};

struct QueryCmd {
    std::string store_path;
    std::string query_id;
    int k = 10;

    int execute() const {
        DescriptorStore store = read_desc_file(store_path);
        if (k < 1) throw DataError("--k must be >= 1");
        RankedResult ranked = query_by_id(store, query_id, static_cast<std::size_t>(k));
        std::cout << "rank,id,distance\n";
        for (std::size_t r = 0; r < ranked.size(); ++r)
            std::cout << (r + 1) << ',' << ranked[r].id << ','
                      << format_double(ranked[r].distance) << '\n';
        return 0;
    }
};

struct EvalCmd {
    std::string store_path;
    std::string queries_path;
    std::string query_store_path;
    int k_max = 100;
    std::string out_path;
    std::string gain = "linear";
    int threads = 1;

    int execute() const {
        Timer timer;
        DescriptorStore store = read_desc_file(store_path);
        DescriptorStore query_source =
            query_store_path.empty() ? store : read_desc_file(query_store_path);
        auto ids = read_id_file(queries_path);

        std::vector<QueryItem> queries;
        queries.reserve(ids.size());
        for (const auto& id : ids) {
            const DescriptorEntry* e = query_source.find(id);
            if (!e) throw DataError("query id " + id + " not found in " +
                                    (query_store_path.empty() ? store_path : query_store_path));
            queries.push_back({e->id, e->descriptor, e->labels});
        }
        if (k_max < 1) throw DataError("--k-max must be >= 1");
        GainPolicy policy = gain == "exponential" ? GainPolicy::exponential : GainPolicy::linear;
        EvalCurve curve =
            evaluate(store, queries, static_cast<std::size_t>(k_max), policy, threads);

        auto out = open_output(out_path);
        out << "k,map,acg,ndcg\n";
        for (std::size_t k = 0; k < curve.map.size(); ++k)
            out << (k + 1) << ',' << format_double(curve.map[k]) << ','
                << format_double(curve.acg[k]) << ',' << format_double(curve.ndcg[k]) << '\n';

        RunManifest manifest;
        manifest.subcommand = "eval";
        manifest.flags = {{"store", store_path},
                          {"queries", queries_path},
                          {"query-store", query_store_path},
                          {"k-max", std::to_string(k_max)},
                          {"gain", gain},
                          {"out", out_path},
                          {"threads", std::to_string(threads)}};
        manifest.inputs = {store_path, queries_path};
        if (!query_store_path.empty()) manifest.inputs.push_back(query_store_path);
        manifest.outputs = {out_path};
        manifest.wall_seconds = timer.seconds();
        write_manifest(out_path + ".manifest.json", manifest);
        return 0;
    }
};

struct BaselineCmd {
    std::string archive_dir;
    int gamma = 128;
    std::uint64_t seed = 0;
    std::string out_path;

    int execute() const {
        Timer timer;
        LoadedArchive archive = load_archive(archive_dir);
        LabelSet ls{archive.num_classes, {}};
        std::vector<LabeledId> items;
        items.reserve(archive.ids.size());
        for (std::size_t i = 0; i < archive.ids.size(); ++i)
            items.push_back({archive.ids[i], labels_present(archive.maps[i], ls)});
        DescriptorStore store = make_baseline_store(items, gamma, seed);
        write_desc_file(out_path, store);

        RunManifest manifest;
        manifest.subcommand = "baseline";
        manifest.flags = {{"archive", archive_dir},
                          {"gamma", std::to_string(gamma)},
                          {"out", out_path}};
        manifest.seeds = {{"seed", seed}};
        manifest.inputs = {archive_dir + "/manifest.tsv"};
        manifest.outputs = {out_path};
        manifest.wall_seconds = timer.seconds();
        write_manifest(out_path + ".manifest.json", manifest);
        return 0;
    }
};

}  // namespace

DescriptorStore make_baseline_store(const std::vector<LabeledId>& items, int gamma,
                                    std::uint64_t seed) {
    if (gamma < 1) throw DataError("gamma must be >= 1");
    std::size_t label_width = items.empty() ? 0 : items.front().labels.bits.size();
    DescriptorStore store(gamma, static_cast<int>(label_width));
    for (const auto& item : items) {
        SplitMix64 rng(derive_seed(seed, fnv1a64(item.id)));
        std::vector<double> descriptor(static_cast<std::size_t>(gamma));
        for (auto& v : descriptor) v = rng.next_double();
        store.add({item.id, std::move(descriptor), item.labels});
    }
    return store;
}

int run(int argc, const char* const* argv) {
    CLI::App app{"region co-occurrence representation learning toolkit"};
    app.require_subcommand(1);

    SynthCmd synth_cmd;
    auto* synth = app.add_subcommand("synth", "generate a paired (image, label map) archive");
    synth->add_option("--out", synth_cmd.out_dir, "output archive directory")->required();
    synth->add_option("--images", synth_cmd.images, "number of images")->required();
    synth->add_option("--size", synth_cmd.size, "image size as HxW")->required();
    synth->add_option("--classes", synth_cmd.classes, "number of classes")->required();
    synth->add_option("--sites", synth_cmd.sites, "Voronoi sites per image")->required();
    synth->add_option("--channels", synth_cmd.channels, "image channels");
    synth->add_option("--noise", synth_cmd.noise, "per-channel noise scale");
    synth->add_option("--seed", synth_cmd.seed, "master seed");

    GraphCmd graph_cmd;
    auto* graph = app.add_subcommand("graph", "emit region-graph edges for an archive");
    graph->add_option("--archive", graph_cmd.archive_dir, "archive directory")->required();
    graph->add_option("--out", graph_cmd.out_path, "output CSV path")->required();
    graph->add_option("--mode", graph_cmd.mode, "weight mode")
        ->check(CLI::IsMember({"scaled", "literal", "binary"}));
    graph->add_flag("--no-self-edges", graph_cmd.no_self_edges, "drop p == q edges");
    graph->add_option("--size-norm", graph_cmd.size_norm, "override n_s");
    graph->add_option("--dist-norm", graph_cmd.dist_norm, "override n_d");
    graph->add_option("--target-scale", graph_cmd.target_scale, "override the scaled-mode factor");

    TrainCmd train_cmd;
    auto* train = app.add_subcommand("train", "train the encoder on an archive");
    train->add_option("--archive", train_cmd.archive_dir, "archive directory")->required();
    train->add_option("--epochs", train_cmd.epochs, "training epochs");
    train->add_option("--batch", train_cmd.batch, "mini-batch size");
    train->add_option("--lr", train_cmd.lr, "Adam learning rate");
    train->add_option("--seed", train_cmd.seed, "master seed (init + shuffling)");
    train->add_option("--mode", train_cmd.mode, "target weight mode")
        ->check(CLI::IsMember({"scaled", "literal", "binary"}));
    train->add_option("--out", train_cmd.out_path, "checkpoint output path")->required();
    train->add_option("--log", train_cmd.log_path, "per-epoch loss CSV path");
    train->add_option("--gamma", train_cmd.gamma, "descriptor width");
    train->add_option("--blocks", train_cmd.blocks, "conv block widths")->delimiter(',');
    train->add_option("--threads", train_cmd.threads, "worker threads");

    ExtractCmd extract_cmd;
    auto* extract = app.add_subcommand("extract", "compute archive descriptors with a checkpoint");
    extract->add_option("--archive", extract_cmd.archive_dir, "archive directory")->required();
    extract->add_option("--model", extract_cmd.model_path, "checkpoint path")->required();
    extract->add_option("--out", extract_cmd.out_path, "descriptor store output path")->required();
    extract->add_option("--ids", extract_cmd.ids_path, "restrict to ids listed in this file");
    extract->add_option("--threads", extract_cmd.threads, "worker threads");

    QueryCmd query_cmd;
    auto* query = app.add_subcommand("query", "rank a store against one stored descriptor");
    query->add_option("--store", query_cmd.store_path, "descriptor store path")->required();
    query->add_option("--query", query_cmd.query_id, "query image id")->required();
    query->add_option("--k", query_cmd.k, "results to return")->required();

    EvalCmd eval_cmd;
    auto* eval = app.add_subcommand("eval", "retrieval metrics versus retrieved-count");
    eval->add_option("--store", eval_cmd.store_path, "descriptor store path")->required();
    eval->add_option("--queries", eval_cmd.queries_path, "file of query ids")->required();
    eval->add_option("--query-store", eval_cmd.query_store_path,
                     "separate store holding query descriptors");
    eval->add_option("--k-max", eval_cmd.k_max, "largest retrieval depth");
    eval->add_option("--out", eval_cmd.out_path, "output CSV path")->required();
    eval->add_option("--gain", eval_cmd.gain, "gain policy for ACG/NDCG")
        ->check(CLI::IsMember({"linear", "exponential"}));
    eval->add_option("--threads", eval_cmd.threads, "worker threads");

    BaselineCmd baseline_cmd;
    auto* baseline = app.add_subcommand("baseline", "seeded random descriptor store");
    baseline->add_option("--archive", baseline_cmd.archive_dir, "archive directory")->required();
    baseline->add_option("--gamma", baseline_cmd.gamma, "descriptor width");
    baseline->add_option("--seed", baseline_cmd.seed, "baseline seed");
    baseline->add_option("--out", baseline_cmd.out_path, "descriptor store output path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (synth->parsed()) return synth_cmd.execute();
        if (graph->parsed()) return graph_cmd.execute();
        if (train->parsed()) return train_cmd.execute();
        if (extract->parsed()) return extract_cmd.execute();
        if (query->parsed()) return query_cmd.execute();
        if (eval->parsed()) return eval_cmd.execute();
        if (baseline->parsed()) return baseline_cmd.execute();
    } catch (const std::exception& e) {
        std::cerr << "rrl: error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}

}  // namespace rrl::cli
