#include "gip/explain.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "gip/synthetic.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace gip {

namespace {

AttributedGraph binarize(const AttributedGraph& g, double threshold) {
    AttributedGraph out = g;
    for (double& v : out.adjacency.data()) v = v > threshold ? 1.0 : 0.0;
    return out;
}

AttributedGraph with_unit_features(const AttributedGraph& g) {
    AttributedGraph out;
    out.adjacency = g.adjacency;
    out.features = Tensor::ones(g.num_nodes(), 1);
    return out;
}

}  // namespace

std::vector<AttributedGraph> materialize_patterns(const ModelState& model) {
    Tape tape;
    MlpBinding topo = bind(tape, model.topology_mlp, false);
    std::vector<AttributedGraph> out;
    for (size_t t = 0; t < model.bank.features.size(); ++t) {
        Value x = tape.constant(model.bank.features[t]);
        Value a = generate_pattern_adjacency(tape, x, topo);
        out.push_back(AttributedGraph{x.val(), a.val(), model.bank.class_of[t]});
    }
    return out;
}

AttributedGraph coarsen_graph(const ModelState& model, const AttributedGraph& graph,
                              const TrainConfig& cfg) {
    Tape tape;
    std::vector<CompressionBlockBinding> blocks;
    for (size_t l = 0; l < model.encoders.size(); ++l)
        blocks.push_back(CompressionBlockBinding{bind(tape, model.encoders[l], false),
                                                 bind(tape, model.assign_mlps[l], false)});
    CoarsenedGraph cg = compress(tape, tape.constant(graph.features), tape.constant(graph.adjacency),
                                 blocks, cfg.compression);
    AttributedGraph out = cg.detach();
    out.label = graph.label;
    return out;
}

Explanation explain_instance(const ModelState& model, const AttributedGraph& graph,
                             const TrainConfig& cfg, int graph_id) {
    Explanation ex;
    ex.graph_id = graph_id;
    ex.predicted = predict(model, graph, cfg).label;

    const AttributedGraph cg = coarsen_graph(model, graph, cfg);
    const auto patterns = materialize_patterns(model);
    for (size_t t = 0; t < patterns.size(); ++t) {
        if (model.bank.class_of[t] != ex.predicted) continue;
        Explanation::Entry e;
        e.pattern_id = static_cast<int>(t);
        e.sim = rw_kernel(cg, patterns[t], cfg.kernel);
        e.normalized_sim = normalized_similarity(cg, patterns[t], cfg.kernel);
        ex.ranking.push_back(e);
    }
    std::stable_sort(ex.ranking.begin(), ex.ranking.end(),
                     [](const auto& a, const auto& b) { return a.sim > b.sim; });
    return ex;
}

std::pair<double, double> eval_accuracy_f1(const ModelState& model, const GraphDataset& dataset,
                                           const std::vector<int>& indices, const TrainConfig& cfg) {
    if (indices.empty()) throw DataError("eval: empty split");
    const int C = dataset.num_classes;
    std::vector<int> preds(indices.size());
    parallel_for(static_cast<int>(indices.size()), cfg.resolved_threads(), [&](int i) {
        preds[i] = predict(model, dataset.graphs[indices[i]], cfg).label;
    });
    std::vector<std::vector<int>> confusion(C, std::vector<int>(C, 0));
    int correct = 0;
    for (size_t i = 0; i < indices.size(); ++i) {
        const int truth = *dataset.graphs[indices[i]].label;
        confusion[truth][preds[i]] += 1;
        if (truth == preds[i]) ++correct;
    }
    double f1_sum = 0.0;
    for (int c = 0; c < C; ++c) {
        int tp = confusion[c][c], fp = 0, fn = 0;
        for (int o = 0; o < C; ++o)
            if (o != c) {
                fp += confusion[o][c];
                fn += confusion[c][o];
            }
        const int denom = 2 * tp + fp + fn;
        f1_sum += denom == 0 ? 0.0 : 2.0 * tp / static_cast<double>(denom);
    }
    return {static_cast<double>(correct) / indices.size(), f1_sum / C};
}

namespace {

Value probe_forward(Tape& tape, const AttributedGraph& g, const GcnBinding& gcn, Value fc_w,
                    Value fc_b) {
    Value a_norm = tape.constant(normalize_adjacency(g.adjacency));
    Value z = gcn_forward(tape, tape.constant(g.features), a_norm, gcn);
    const int n = g.num_nodes();
    Value pooled = tape.mul_scalar(tape.matmul(tape.constant(Tensor::ones(1, n)), z), 1.0 / n);
    Value logits = tape.add(tape.matmul(pooled, fc_w), fc_b);
    return tape.row_softmax(logits);
}

}  // namespace

ProbeModel train_probe(const ModelState& model, const GraphDataset& dataset,
                       const std::vector<int>& train_indices, const TrainConfig& cfg) {
    if (train_indices.empty()) throw DataError("probe: empty training split");
    std::vector<AttributedGraph> coarse(train_indices.size());
    parallel_for(static_cast<int>(train_indices.size()), cfg.resolved_threads(), [&](int i) {
        coarse[i] = coarsen_graph(model, dataset.graphs[train_indices[i]], cfg);
    });

    Rng rng(cfg.probe_seed);
    ProbeModel probe;
    probe.num_classes = dataset.num_classes;
    const int h = cfg.probe_hidden;
    probe.gcn = GcnParams::glorot({cfg.embed_dim, h, h, h}, rng);
    probe.fc_weight = Tensor(h, dataset.num_classes);
    probe.fc_bias = Tensor(1, dataset.num_classes);

    std::vector<std::pair<std::string, Tensor*>> params;
    for (size_t i = 0; i < probe.gcn.weights.size(); ++i)
        params.emplace_back("gcn.w" + std::to_string(i), &probe.gcn.weights[i]);
    params.emplace_back("fc.w", &probe.fc_weight);
    params.emplace_back("fc.b", &probe.fc_bias);
    Adam optimizer(cfg.probe_lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);

    const int threads = cfg.resolved_threads();
    const double inv_m = 1.0 / static_cast<double>(coarse.size());
    for (int epoch = 0; epoch < cfg.probe_epochs; ++epoch) {
        std::vector<std::vector<Tensor>> slot_grads(coarse.size());
        parallel_for(static_cast<int>(coarse.size()), threads, [&](int i) {
            Tape tape;
            GcnBinding gcn = bind(tape, probe.gcn, true);
            Value fw = tape.param(probe.fc_weight);
            Value fb = tape.param(probe.fc_bias);
            Value probs = probe_forward(tape, coarse[i], gcn, fw, fb);
            const int y = *coarse[i].label;
            Value ce = tape.mul_scalar(tape.log(tape.slice(probs, 0, 1, y, y + 1)), -inv_m);
            tape.backward(ce);
            auto& grads = slot_grads[i];
            for (const Value& w : gcn.weights) grads.push_back(tape.grad(w));
            grads.push_back(tape.grad(fw));
            grads.push_back(tape.grad(fb));
        });
        std::vector<Tensor> merged;
        for (auto& [name, p] : params) merged.emplace_back(p->rows(), p->cols());
        for (const auto& grads : slot_grads)
            for (size_t p = 0; p < params.size(); ++p)
                for (int j = 0; j < merged[p].size(); ++j) merged[p][j] += grads[p][j];
        optimizer.step(params, merged);
    }
    return probe;
}

std::vector<double> probe_confidence(const ProbeModel& probe, const AttributedGraph& graph) {
    Tape tape;
    GcnBinding gcn = bind(tape, probe.gcn, false);
    Value probs = probe_forward(tape, graph, gcn, tape.constant(probe.fc_weight),
                                tape.constant(probe.fc_bias));
    return probs.val().data();
}

double eval_explanation_accuracy(const ModelState& model, const ProbeModel& probe,
                                 const TrainConfig& cfg) {
    (void)cfg;
    const auto patterns = materialize_patterns(model);
    if (patterns.empty()) throw DataError("explanation accuracy: empty pattern bank");
    double sum = 0.0;
    for (size_t t = 0; t < patterns.size(); ++t) {
        const auto probs = probe_confidence(probe, binarize(patterns[t], 0.5));
        sum += probs[model.bank.class_of[t]];
    }
    return sum / static_cast<double>(patterns.size());
}

double eval_consistency(const ModelState& model, const GraphDataset& dataset, const TrainConfig& cfg) {
    if (!dataset.has_ground_truth())
        throw DataError("consistency: dataset has no super-graph metadata");
    const int C = dataset.num_classes;

    // class layout + median community count from the stored metadata
    std::vector<std::string> layout(C);
    std::vector<std::vector<int>> ks(C);
    for (size_t g = 0; g < dataset.graphs.size(); ++g) {
        const int c = *dataset.graphs[g].label;
        layout[c] = dataset.super_graphs[g].layout;
        ks[c].push_back(dataset.super_graphs[g].num_communities);
    }
    std::vector<AttributedGraph> motifs;
    for (int c = 0; c < C; ++c) {
        if (ks[c].empty()) throw DataError("consistency: class " + std::to_string(c) + " absent");
        std::sort(ks[c].begin(), ks[c].end());
        const int median_k = ks[c][(ks[c].size() - 1) / 2];
        motifs.push_back(canonical_motif(layout[c], median_k));
    }

    const auto patterns = materialize_patterns(model);
    double macro = 0.0;
    for (int c = 0; c < C; ++c) {
        double sum = 0.0;
        int count = 0;
        for (size_t t = 0; t < patterns.size(); ++t) {
            if (model.bank.class_of[t] != c) continue;
            const AttributedGraph p = with_unit_features(binarize(patterns[t], 0.5));
            sum += normalized_similarity(p, motifs[c], cfg.kernel);
            ++count;
        }
        macro += sum / count;
    }
    return macro / C;
}

double eval_silhouette(const ModelState& model, const GraphDataset& dataset,
                       const std::vector<int>& indices, const TrainConfig& cfg) {
    const auto patterns = materialize_patterns(model);
    if (patterns.size() < 2) throw DataError("silhouette: need at least 2 patterns");
    const int n = static_cast<int>(indices.size());
    if (n < 2) throw DataError("silhouette: need at least 2 graphs");

    std::vector<AttributedGraph> coarse(n);
    parallel_for(n, cfg.resolved_threads(), [&](int i) {
        coarse[i] = coarsen_graph(model, dataset.graphs[indices[i]], cfg);
    });

    std::vector<int> cluster(n);
    parallel_for(n, cfg.resolved_threads(), [&](int i) {
        int best = 0;
        double best_d = kernel_distance(coarse[i], patterns[0], cfg.kernel);
        for (size_t t = 1; t < patterns.size(); ++t) {
            const double d = kernel_distance(coarse[i], patterns[t], cfg.kernel);
            if (d < best_d) {
                best_d = d;
                best = static_cast<int>(t);
            }
        }
        cluster[i] = best;
    });

    std::vector<int> occupied;
    for (size_t t = 0; t < patterns.size(); ++t)
        if (std::count(cluster.begin(), cluster.end(), static_cast<int>(t)) > 0)
            occupied.push_back(static_cast<int>(t));
    if (occupied.size() < 2)
        throw DegenerateClusteringError("silhouette: all graphs fell into one cluster");

    Tensor dist(n, n);
    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
    std::vector<double> pair_d(pairs.size());
    parallel_for(static_cast<int>(pairs.size()), cfg.resolved_threads(), [&](int p) {
        pair_d[p] = kernel_distance(coarse[pairs[p].first], coarse[pairs[p].second], cfg.kernel);
    });
    for (size_t p = 0; p < pairs.size(); ++p) {
        dist.at(pairs[p].first, pairs[p].second) = pair_d[p];
        dist.at(pairs[p].second, pairs[p].first) = pair_d[p];
    }

    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        int same = 0;
        double a = 0.0;
        std::vector<double> other_sum(patterns.size(), 0.0);
        std::vector<int> other_count(patterns.size(), 0);
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            if (cluster[j] == cluster[i]) {
                a += dist.at(i, j);
                ++same;
            } else {
                other_sum[cluster[j]] += dist.at(i, j);
                other_count[cluster[j]] += 1;
            }
        }
        if (same == 0) continue;  // singleton cluster scores 0
        a /= same;
        double b = std::numeric_limits<double>::infinity();
        for (size_t t = 0; t < patterns.size(); ++t)
            if (other_count[t] > 0) b = std::min(b, other_sum[t] / other_count[t]);
        if (!std::isfinite(b)) continue;  // no other occupied cluster from i's view
        const double denom = std::max(a, b);
        total += denom > 0.0 ? (b - a) / denom : 0.0;
    }
    return total / n;
}

void export_patterns(const ModelState& model, const std::string& out_dir) {
    fs::create_directories(out_dir);
    const auto patterns = materialize_patterns(model);
    for (size_t t = 0; t < patterns.size(); ++t) {
        const auto& p = patterns[t];
        json j;
        j["pattern_id"] = t;
        j["class"] = model.bank.class_of[t];
        j["num_nodes"] = p.num_nodes();
        j["adjacency"] = json::array();
        for (int i = 0; i < p.num_nodes(); ++i) {
            json row = json::array();
            for (int k = 0; k < p.num_nodes(); ++k) row.push_back(p.adjacency.at(i, k));
            j["adjacency"].push_back(std::move(row));
        }
        j["features"] = json::array();
        for (int i = 0; i < p.num_nodes(); ++i) {
            json row = json::array();
            for (int k = 0; k < p.feature_dim(); ++k) row.push_back(p.features.at(i, k));
            j["features"].push_back(std::move(row));
        }
        j["edges"] = json::array();
        for (int i = 0; i < p.num_nodes(); ++i)
            for (int k = i + 1; k < p.num_nodes(); ++k)
                if (p.adjacency.at(i, k) > 0.5) j["edges"].push_back({i, k});

        char suffix[32];
        std::snprintf(suffix, sizeof suffix, "pattern_%02zu", t);
        std::ofstream rec(fs::path(out_dir) / (std::string(suffix) + ".json"));
        if (!rec) throw DataError("export_patterns: cannot write to " + out_dir);
        rec << j.dump(1) << "\n";

        std::ofstream dot(fs::path(out_dir) / (std::string(suffix) + ".dot"));
        dot << "graph " << suffix << " {\n";
        dot << "  label=\"class " << model.bank.class_of[t] << "\";\n";
        for (int i = 0; i < p.num_nodes(); ++i) dot << "  n" << i << ";\n";
        for (int i = 0; i < p.num_nodes(); ++i)
            for (int k = i + 1; k < p.num_nodes(); ++k)
                if (p.adjacency.at(i, k) > 0.5)
                    dot << "  n" << i << " -- n" << k << " [weight=" << p.adjacency.at(i, k) << "];\n";
        dot << "}\n";
    }
}

PatternRecord read_pattern_record(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open pattern record: " + path);
    json j;
    in >> j;
    PatternRecord rec;
    rec.pattern_id = j.at("pattern_id").get<int>();
    rec.class_id = j.at("class").get<int>();
    const int n = j.at("num_nodes").get<int>();
    rec.adjacency = Tensor(n, n);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) rec.adjacency.at(i, k) = j.at("adjacency").at(i).at(k).get<double>();
    const int d = static_cast<int>(j.at("features").at(0).size());
    rec.features = Tensor(n, d);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < d; ++k) rec.features.at(i, k) = j.at("features").at(i).at(k).get<double>();
    for (const auto& e : j.at("edges")) rec.edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
    return rec;
}

MetricReport evaluate(const ModelState& model, const GraphDataset& dataset, const SplitSpec& split,
                      const TrainConfig& cfg) {
    MetricReport report;
    auto [acc, f1] = eval_accuracy_f1(model, dataset, split.test, cfg);
    report.accuracy = acc;
    report.macro_f1 = f1;
    const ProbeModel probe = train_probe(model, dataset, split.train, cfg);
    report.explanation_accuracy = eval_explanation_accuracy(model, probe, cfg);
    if (dataset.has_ground_truth()) report.consistency = eval_consistency(model, dataset, cfg);
    report.silhouette = eval_silhouette(model, dataset, split.test, cfg);
    return report;
}

void write_metric_report(const MetricReport& report, const std::string& path) {
    json j;
    j["accuracy"] = report.accuracy;
    j["macro_f1"] = report.macro_f1;
    j["explanation_accuracy"] = report.explanation_accuracy;
    j["consistency"] = report.consistency ? json(*report.consistency) : json(nullptr);
    j["silhouette"] = report.silhouette;
    std::ofstream out(path);
    if (!out) throw DataError("cannot write metric report: " + path);
    out << j.dump(1) << "\n";
}

}  // namespace gip
