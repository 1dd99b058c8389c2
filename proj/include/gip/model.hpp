#pragma once

#include <functional>
#include <map>

#include "gip/config.hpp"
#include "gip/graph.hpp"
#include "gip/patterns.hpp"

namespace gip {

/// Training aborted on a non-finite loss.
struct DivergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Every trainable tensor of the pipeline.
struct ModelState {
    std::vector<GcnParams> encoders;    // one per compression block
    std::vector<MlpParams> assign_mlps; // one per compression block
    MlpParams topology_mlp;
    PatternBankParams bank;
    Tensor fc_weight;  // T x C
    Tensor fc_bias;    // 1 x C

    int num_classes = 0;
    int feature_dim = 0;

    /// Fixed-order (name, tensor) enumeration; optimizer state and
    /// checkpoints index into it.
    std::vector<std::pair<std::string, Tensor*>> parameters();
    std::vector<std::pair<std::string, const Tensor*>> parameters() const;
};

struct ModelBinding {
    std::vector<CompressionBlockBinding> blocks;
    MlpBinding topology_mlp;
    PatternBankBinding bank;
    Value fc_weight, fc_bias;
    std::vector<Value> bound_params;  // parallel to ModelState::parameters()
};

ModelBinding bind_model(Tape& tape, const ModelState& model, bool trainable);

/// Seeded construction: architecture dims from config + dataset, pattern
/// features from class centroids of coarsened training graphs (or pure
/// noise with pattern_random_init).
ModelState init_model(const GraphDataset& dataset, const std::vector<int>& train_indices,
                      const TrainConfig& cfg);

struct ForwardOutput {
    Value probs;  // 1 x C
    std::vector<Value> sims;
    std::vector<Value> distances;
    CoarsenedGraph coarse;
    Value loss_clu, loss_bal;
    Value loss_ce;  // valid only when the graph carries a label
};

ForwardOutput forward(Tape& tape, const ModelBinding& binding, const AttributedGraph& graph,
                      const TrainConfig& cfg);

/// Loss components of one batch, plus the combined objective
/// L = CE + beta1 (a1 clu + a2 bal) + beta2 (a3 mul + a4 div).
struct LossBreakdown {
    double ce = 0, clu = 0, bal = 0, mul = 0, div = 0, total = 0;
    std::map<std::string, double> as_map() const;
};

/// Whole-batch objective on a single tape. Returns the scalar ready for
/// backward() plus the component values.
std::pair<Value, LossBreakdown> total_loss(Tape& tape, const ModelBinding& binding,
                                           const std::vector<const AttributedGraph*>& batch,
                                           const TrainConfig& cfg);

struct EpochStats {
    int epoch = 0;
    LossBreakdown loss;
    double val_accuracy = 0;
};

struct TrainResult {
    ModelState model;
    std::vector<EpochStats> history;
    int best_epoch = 0;
    double best_val_accuracy = 0;
};

/// Mini-batch training with the adaptive-moment optimizer; batch members run
/// on independent tapes (optionally in parallel) and their gradients merge
/// by summation in batch order, so results are reproducible for any thread
/// count. Keeps the best-validation snapshot; early stopping after
/// `patience` epochs without improvement.
TrainResult train(const GraphDataset& dataset, const SplitSpec& split, const TrainConfig& cfg);

struct Prediction {
    int label = 0;
    std::vector<double> probs;
    std::vector<double> sims;
};

Prediction predict(const ModelState& model, const AttributedGraph& graph, const TrainConfig& cfg);

/// Adaptive-moment optimizer (decay adam_beta1/adam_beta2, epsilon adam_eps).
class Adam {
public:
    Adam(double lr, double beta1, double beta2, double eps) : lr_(lr), b1_(beta1), b2_(beta2), eps_(eps) {}
    void step(std::vector<std::pair<std::string, Tensor*>>& params, const std::vector<Tensor>& grads);

private:
    double lr_, b1_, b2_, eps_;
    int t_ = 0;
    std::vector<Tensor> m_, v_;
};

/// Deterministic parallel map: fn(i) for i in [0, n), results merged by the
/// caller in index order regardless of scheduling.
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

}  // namespace gip
