#pragma once

#include <optional>

#include "gip/model.hpp"

namespace gip {

/// Silhouette needs at least two occupied clusters.
struct DegenerateClusteringError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Instance-level explanation: the predicted class's patterns ranked by raw
/// kernel similarity to the coarsened input.
struct Explanation {
    int graph_id = -1;
    int predicted = 0;
    struct Entry {
        int pattern_id;
        double sim;
        double normalized_sim;
    };
    std::vector<Entry> ranking;  // non-increasing in sim
};

Explanation explain_instance(const ModelState& model, const AttributedGraph& graph,
                             const TrainConfig& cfg, int graph_id = -1);

/// Patterns as plain graphs (soft adjacency regenerated from the features).
std::vector<AttributedGraph> materialize_patterns(const ModelState& model);

/// Coarsened representation of one graph, detached from any tape.
AttributedGraph coarsen_graph(const ModelState& model, const AttributedGraph& graph,
                              const TrainConfig& cfg);

std::pair<double, double> eval_accuracy_f1(const ModelState& model, const GraphDataset& dataset,
                                           const std::vector<int>& indices, const TrainConfig& cfg);

/// Independent GCN classifier scoring pattern graphs: three conv layers,
/// mean-pool readout, linear head. Trained on the model's coarsened training
/// graphs so that patterns (which live in coarsened space) are in-domain.
struct ProbeModel {
    GcnParams gcn;
    Tensor fc_weight, fc_bias;
    int num_classes = 0;
};

ProbeModel train_probe(const ModelState& model, const GraphDataset& dataset,
                       const std::vector<int>& train_indices, const TrainConfig& cfg);

/// Softmax class probabilities the probe assigns to a graph.
std::vector<double> probe_confidence(const ProbeModel& probe, const AttributedGraph& graph);

/// Mean probe confidence for each pattern's own class, patterns binarized
/// at 0.5.
double eval_explanation_accuracy(const ModelState& model, const ProbeModel& probe,
                                 const TrainConfig& cfg);

/// Macro-mean over classes of the mean normalized kernel similarity between
/// each class's patterns (binarized, unit features) and the class's
/// ground-truth motif at the median community count.
double eval_consistency(const ModelState& model, const GraphDataset& dataset, const TrainConfig& cfg);

/// Assigns each coarsened graph to its nearest pattern by kernel distance
/// and scores cluster cohesion/separation with pairwise kernel distances.
/// Singleton clusters contribute 0.
double eval_silhouette(const ModelState& model, const GraphDataset& dataset,
                       const std::vector<int>& indices, const TrainConfig& cfg);

/// One JSON record plus one DOT file per pattern.
void export_patterns(const ModelState& model, const std::string& out_dir);

struct PatternRecord {
    int pattern_id = 0;
    int class_id = 0;
    Tensor adjacency;
    Tensor features;
    std::vector<std::pair<int, int>> edges;  // binarized at 0.5
};
PatternRecord read_pattern_record(const std::string& path);

struct MetricReport {
    double accuracy = 0;
    double macro_f1 = 0;
    double explanation_accuracy = 0;
    std::optional<double> consistency;  // synthetic datasets only
    double silhouette = 0;
};

MetricReport evaluate(const ModelState& model, const GraphDataset& dataset, const SplitSpec& split,
                      const TrainConfig& cfg);
void write_metric_report(const MetricReport& report, const std::string& path);

}  // namespace gip
