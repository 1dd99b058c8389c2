#include "gip/patterns.hpp"

namespace gip {

Value generate_pattern_adjacency(Tape& tape, Value pattern_features, const MlpBinding& topology_mlp) {
    const int n = pattern_features.rows();
    if (n < 2) throw ShapeError("pattern adjacency: need at least 2 nodes");

    // gather matrices turning X (n x d) into all ordered pairs [X_i; X_j]
    Tensor left(n * n, n), right(n * n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            left.at(i * n + j, i) = 1.0;
            right.at(i * n + j, j) = 1.0;
        }
    Value lhs = tape.matmul(tape.constant(std::move(left)), pattern_features);
    Value rhs = tape.matmul(tape.constant(std::move(right)), pattern_features);
    Value raw = mlp_forward(tape, tape.concat_cols(lhs, rhs), topology_mlp);  // n^2 x 1
    if (raw.cols() != 1) throw ShapeError("pattern adjacency: topology MLP must output one column");
    Value scores = tape.reshape(raw, n, n);
    Value sym = tape.mul_scalar(tape.add(scores, tape.transpose(scores)), 0.5);
    Value soft = tape.sigmoid(sym);
    Tensor hollow = Tensor::ones(n, n);
    for (int i = 0; i < n; ++i) hollow.at(i, i) = 0.0;
    return tape.mul(soft, tape.constant(std::move(hollow)));
}

PatternBankBinding bind_patterns(Tape& tape, const PatternBankParams& bank,
                                 const MlpBinding& topology_mlp, bool trainable) {
    PatternBankBinding b;
    b.class_of = bank.class_of;
    for (const auto& x : bank.features) {
        Value xv = trainable ? tape.param(x) : tape.constant(x);
        b.patterns.push_back(GraphValue{xv, generate_pattern_adjacency(tape, xv, topology_mlp)});
    }
    return b;
}

std::vector<Value> pattern_similarities(Tape& tape, const GraphValue& coarse,
                                        const PatternBankBinding& bank, const KernelConfig& cfg) {
    std::vector<Value> sims;
    sims.reserve(bank.size());
    for (const auto& p : bank.patterns) sims.push_back(rw_kernel(tape, coarse, p, cfg));
    return sims;
}

Value multi_similarity_term(Tape& tape, const std::vector<Value>& distances, int label,
                            const std::vector<int>& class_of, const PatternConfig& cfg) {
    cfg.validate();
    if (distances.size() != class_of.size())
        throw ShapeError("multi_similarity: " + std::to_string(distances.size()) + " distances vs " +
                         std::to_string(class_of.size()) + " patterns");
    Value pos, neg;
    for (size_t i = 0; i < distances.size(); ++i) {
        if (class_of[i] == label)
            pos = pos.valid() ? tape.concat_cols(pos, distances[i]) : distances[i];
        else
            neg = neg.valid() ? tape.concat_cols(neg, distances[i]) : distances[i];
    }
    Value term;
    if (pos.valid()) {
        Value t = tape.mul_scalar(
            tape.log1p_sum_exp(tape.mul_scalar(tape.add_scalar(pos, -cfg.margin), cfg.gamma1)),
            1.0 / cfg.gamma1);
        term = t;
    }
    if (neg.valid()) {
        Value t = tape.mul_scalar(
            tape.log1p_sum_exp(tape.mul_scalar(tape.add_scalar(neg, -cfg.margin), -cfg.gamma2)),
            1.0 / cfg.gamma2);
        term = term.valid() ? tape.add(term, t) : t;
    }
    if (!term.valid()) term = tape.constant_scalar(0.0);
    return term;
}

Value multi_similarity_loss(Tape& tape, const std::vector<std::vector<Value>>& distances,
                            const std::vector<int>& labels, const std::vector<int>& class_of,
                            const PatternConfig& cfg) {
    if (distances.empty()) throw ShapeError("multi_similarity: empty batch");
    if (distances.size() != labels.size())
        throw ShapeError("multi_similarity: batch size vs labels mismatch");
    Value acc;
    for (size_t m = 0; m < distances.size(); ++m) {
        Value term = multi_similarity_term(tape, distances[m], labels[m], class_of, cfg);
        acc = acc.valid() ? tape.add(acc, term) : term;
    }
    return tape.mul_scalar(acc, 1.0 / static_cast<double>(distances.size()));
}

Value diversity_loss(Tape& tape, const PatternBankBinding& bank, const KernelConfig& kernel_cfg,
                     const PatternConfig& cfg) {
    cfg.validate();
    const int t = bank.size();
    std::vector<Value> self(t);
    if (!cfg.diversity_raw_kernel) {
        for (int i = 0; i < t; ++i) {
            self[i] = rw_kernel(tape, bank.patterns[i], bank.patterns[i], kernel_cfg);
            if (self[i].item() <= 0.0)
                throw ZeroSelfKernelError("diversity_loss: pattern " + std::to_string(i) +
                                          " has non-positive self-kernel");
        }
    }
    Value acc;
    for (int i = 0; i < t; ++i)
        for (int j = i + 1; j < t; ++j) {
            if (bank.class_of[i] != bank.class_of[j]) continue;
            Value sim = rw_kernel(tape, bank.patterns[i], bank.patterns[j], kernel_cfg);
            if (!cfg.diversity_raw_kernel)
                sim = tape.div(sim, tape.sqrt(tape.mul(self[i], self[j])));
            Value hinge = tape.max_with_scalar(tape.add_scalar(sim, -cfg.delta2), 0.0);
            acc = acc.valid() ? tape.add(acc, hinge) : hinge;
        }
    if (!acc.valid()) acc = tape.constant_scalar(0.0);
    return acc;
}

}  // namespace gip
