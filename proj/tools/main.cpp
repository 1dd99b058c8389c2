#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "gip/checkpoint.hpp"
#include "gip/explain.hpp"
#include "gip/synthetic.hpp"
#include "gip/tu_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// exit codes: 0 ok, 1 usage, 2 data error, 3 numeric divergence
constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

struct GenArgs {
    std::string kind = "graphcycle";
    int n = 2000;
    uint64_t seed = 0;
    std::string out;
    std::string name;
    int communities_min = 8, communities_max = 15;
    int size_min = 10, size_max = 200;
};

struct TrainArgs {
    std::string data_dir;
    std::string dataset_name;
    std::string config_path;
    std::string out_dir;
    std::vector<std::string> overrides;
    int64_t seed = -1;
};

struct EvalArgs {
    std::string data_dir;
    std::string dataset_name;
    std::string model_path;
    std::string out_dir;
    std::vector<std::string> overrides;
};

struct ExplainArgs : EvalArgs {};

struct KernelArgs {
    std::string graph_a, graph_b;
    int steps = 3;
    bool normalized = false;
};

std::string infer_dataset_name(const std::string& dir, const std::string& given) {
    if (!given.empty()) return given;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string fname = entry.path().filename().string();
        const auto pos = fname.find("_graph_labels.txt");
        if (pos != std::string::npos) return fname.substr(0, pos);
    }
    throw gip::DataError("no *_graph_labels.txt found in " + dir + "; pass --name");
}

void write_history(const std::vector<gip::EpochStats>& history, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw gip::DataError("cannot write history: " + path);
    for (const auto& e : history) {
        json j;
        j["epoch"] = e.epoch;
        j["ce"] = e.loss.ce;
        j["clu"] = e.loss.clu;
        j["bal"] = e.loss.bal;
        j["mul"] = e.loss.mul;
        j["div"] = e.loss.div;
        j["total"] = e.loss.total;
        j["val_acc"] = e.val_accuracy;
        out << j.dump() << "\n";
    }
}

int run_gen(const GenArgs& args) {
    gip::SyntheticConfig cfg;
    cfg.communities_min = args.communities_min;
    cfg.communities_max = args.communities_max;
    cfg.community_size_min = args.size_min;
    cfg.community_size_max = args.size_max;

    gip::GraphDataset ds;
    if (args.kind == "graphcycle")
        ds = gip::generate_graphcycle(args.n, args.seed, cfg);
    else if (args.kind == "graphfive")
        ds = gip::generate_graphfive(args.n, args.seed, cfg);
    else
        throw gip::DataError("unknown generator kind: " + args.kind + " (graphcycle|graphfive)");
    if (!args.name.empty()) ds.name = args.name;

    gip::write_tu_dataset(ds, args.out);
    std::ofstream echo(fs::path(args.out) / "config_resolved");
    echo << "command = gen-data\nkind = " << args.kind << "\nn = " << args.n
         << "\nseed = " << args.seed << "\nname = " << ds.name
         << "\ncommunities_min = " << cfg.communities_min
         << "\ncommunities_max = " << cfg.communities_max
         << "\ncommunity_size_min = " << cfg.community_size_min
         << "\ncommunity_size_max = " << cfg.community_size_max << "\n";
    std::cout << "wrote " << ds.graphs.size() << " graphs (" << ds.num_classes << " classes, d="
              << ds.feature_dim << ") to " << args.out << "\n";
    return kExitOk;
}

int run_train(const TrainArgs& args) {
    gip::TrainConfig cfg =
        args.config_path.empty() ? gip::TrainConfig{} : gip::TrainConfig::from_file(args.config_path);
    cfg.apply_overrides(args.overrides);
    if (args.seed >= 0) cfg.seed = static_cast<uint64_t>(args.seed);
    cfg.validate();

    const std::string name = infer_dataset_name(args.data_dir, args.dataset_name);
    gip::GraphDataset ds = gip::parse_tu_dataset(args.data_dir, name, cfg.degree_onehot_cap);
    gip::SplitSpec split =
        gip::split_dataset(ds, cfg.train_ratio, cfg.val_ratio, cfg.test_ratio, cfg.seed);

    fs::create_directories(args.out_dir);
    cfg.write_file((fs::path(args.out_dir) / "config_resolved").string());

    gip::TrainResult result = gip::train(ds, split, cfg);
    gip::save_checkpoint(result.model, cfg.to_text(), (fs::path(args.out_dir) / "checkpoint.bin").string());
    write_history(result.history, (fs::path(args.out_dir) / "history.jsonl").string());

    auto [acc, f1] = gip::eval_accuracy_f1(result.model, ds, split.test, cfg);
    std::cout << "best val acc " << result.best_val_accuracy << " at epoch " << result.best_epoch
              << "; test acc " << acc << ", macro-F1 " << f1 << "\n";
    std::cout << "checkpoint: " << (fs::path(args.out_dir) / "checkpoint.bin").string() << "\n";
    return kExitOk;
}

int run_eval(const EvalArgs& args) {
    gip::LoadedCheckpoint loaded = gip::load_checkpoint(args.model_path);
    loaded.config.apply_overrides(args.overrides);
    const std::string name = infer_dataset_name(args.data_dir, args.dataset_name);
    gip::GraphDataset ds = gip::parse_tu_dataset(args.data_dir, name, loaded.config.degree_onehot_cap);
    gip::SplitSpec split = gip::split_dataset(ds, loaded.config.train_ratio, loaded.config.val_ratio,
                                              loaded.config.test_ratio, loaded.config.seed);

    fs::create_directories(args.out_dir);
    loaded.config.write_file((fs::path(args.out_dir) / "config_resolved").string());
    gip::MetricReport report = gip::evaluate(loaded.model, ds, split, loaded.config);
    gip::write_metric_report(report, (fs::path(args.out_dir) / "metrics.json").string());
    std::cout << "accuracy " << report.accuracy << ", macro-F1 " << report.macro_f1
              << ", explanation_accuracy " << report.explanation_accuracy;
    if (report.consistency) std::cout << ", consistency " << *report.consistency;
    std::cout << ", silhouette " << report.silhouette << "\n";
    return kExitOk;
}

int run_explain(const ExplainArgs& args) {
    gip::LoadedCheckpoint loaded = gip::load_checkpoint(args.model_path);
    loaded.config.apply_overrides(args.overrides);
    const std::string name = infer_dataset_name(args.data_dir, args.dataset_name);
    gip::GraphDataset ds = gip::parse_tu_dataset(args.data_dir, name, loaded.config.degree_onehot_cap);
    gip::SplitSpec split = gip::split_dataset(ds, loaded.config.train_ratio, loaded.config.val_ratio,
                                              loaded.config.test_ratio, loaded.config.seed);

    fs::create_directories(args.out_dir);
    loaded.config.write_file((fs::path(args.out_dir) / "config_resolved").string());
    gip::export_patterns(loaded.model, (fs::path(args.out_dir) / "patterns").string());

    std::ofstream out(fs::path(args.out_dir) / "explanations.jsonl");
    for (int gi : split.test) {
        gip::Explanation ex = gip::explain_instance(loaded.model, ds.graphs[gi], loaded.config, gi);
        json j;
        j["graph"] = ex.graph_id;
        j["predicted"] = ex.predicted;
        j["ranking"] = json::array();
        for (const auto& e : ex.ranking)
            j["ranking"].push_back(
                {{"pattern", e.pattern_id}, {"sim", e.sim}, {"normalized_sim", e.normalized_sim}});
        out << j.dump() << "\n";
    }
    std::cout << "wrote explanations for " << split.test.size() << " test graphs and "
              << loaded.model.bank.size() << " pattern files to " << args.out_dir << "\n";
    return kExitOk;
}

int run_kernel(const KernelArgs& args) {
    gip::AttributedGraph a = gip::read_graph_json(args.graph_a);
    gip::AttributedGraph b = gip::read_graph_json(args.graph_b);
    gip::KernelConfig cfg;
    cfg.max_steps = args.steps;
    const double k = gip::rw_kernel(a, b, cfg);
    std::cout << k << "\n";
    if (args.normalized) std::cout << gip::normalized_similarity(a, b, cfg) << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Global interactive pattern learning for graph classification"};
    app.require_subcommand(1);

    GenArgs gen;
    auto* cmd_gen = app.add_subcommand("gen-data", "Generate a synthetic dataset in TU layout");
    cmd_gen->add_option("--kind", gen.kind, "graphcycle | graphfive");
    cmd_gen->add_option("--n", gen.n, "number of graphs")->required();
    cmd_gen->add_option("--seed", gen.seed, "generator seed");
    cmd_gen->add_option("--out", gen.out, "output directory")->required();
    cmd_gen->add_option("--name", gen.name, "dataset name override");
    cmd_gen->add_option("--communities-min", gen.communities_min, "min communities per graph");
    cmd_gen->add_option("--communities-max", gen.communities_max, "max communities per graph");
    cmd_gen->add_option("--size-min", gen.size_min, "min community size");
    cmd_gen->add_option("--size-max", gen.size_max, "max community size");

    TrainArgs tr;
    auto* cmd_train = app.add_subcommand("train", "Train a model on a TU-layout dataset");
    cmd_train->add_option("--data", tr.data_dir, "dataset directory")->required();
    cmd_train->add_option("--name", tr.dataset_name, "dataset name (inferred when unique)");
    cmd_train->add_option("--config", tr.config_path, "key=value config file");
    cmd_train->add_option("--out", tr.out_dir, "output directory")->required();
    cmd_train->add_option("--seed", tr.seed, "seed override");
    cmd_train->add_option("--set", tr.overrides, "config override key=value (repeatable)");

    EvalArgs ev;
    auto* cmd_eval = app.add_subcommand("eval", "Evaluate a checkpoint");
    cmd_eval->add_option("--data", ev.data_dir, "dataset directory")->required();
    cmd_eval->add_option("--name", ev.dataset_name, "dataset name");
    cmd_eval->add_option("--model", ev.model_path, "checkpoint file")->required();
    cmd_eval->add_option("--out", ev.out_dir, "output directory")->required();
    cmd_eval->add_option("--set", ev.overrides, "config override key=value (repeatable)");

    ExplainArgs ex;
    auto* cmd_explain = app.add_subcommand("explain", "Export pattern and instance explanations");
    cmd_explain->add_option("--data", ex.data_dir, "dataset directory")->required();
    cmd_explain->add_option("--name", ex.dataset_name, "dataset name");
    cmd_explain->add_option("--model", ex.model_path, "checkpoint file")->required();
    cmd_explain->add_option("--out", ex.out_dir, "output directory")->required();
    cmd_explain->add_option("--set", ex.overrides, "config override key=value (repeatable)");

    KernelArgs kr;
    auto* cmd_kernel = app.add_subcommand("kernel", "Random-walk kernel between two graph files");
    cmd_kernel->add_option("graph_a", kr.graph_a, "first graph JSON file")->required();
    cmd_kernel->add_option("graph_b", kr.graph_b, "second graph JSON file")->required();
    cmd_kernel->add_option("--R", kr.steps, "walk length bound");
    cmd_kernel->add_flag("--normalized", kr.normalized, "also print normalized similarity");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*cmd_gen) return run_gen(gen);
        if (*cmd_train) return run_train(tr);
        if (*cmd_eval) return run_eval(ev);
        if (*cmd_explain) return run_explain(ex);
        if (*cmd_kernel) return run_kernel(kr);
    } catch (const gip::DivergenceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const gip::NonFiniteError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const gip::DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}
