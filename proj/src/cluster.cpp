#include "gip/cluster.hpp"

#include <cmath>

namespace gip {

Value assign_clusters(Tape& tape, Value embeddings, const MlpBinding& assign_mlp, int k) {
    const int n = embeddings.rows();
    if (k < 2) throw ShapeError("assign_clusters: K must be >= 2");
    if (k > n)
        throw ShapeError("assign_clusters: K=" + std::to_string(k) + " exceeds N=" + std::to_string(n));
    Value logits = mlp_forward(tape, embeddings, assign_mlp);
    if (logits.cols() < k)
        throw ShapeError("assign_clusters: head width " + std::to_string(logits.cols()) +
                         " below K=" + std::to_string(k));
    if (logits.cols() > k) logits = tape.slice(logits, 0, n, 0, k);
    return tape.row_softmax(logits);
}

Value cluster_loss(Tape& tape, Value assignment, Value adjacency) {
    const int n = adjacency.rows();
    const int k = assignment.cols();
    Value ones_col = tape.constant(Tensor::ones(n, 1));
    Value deg = tape.matmul(adjacency, ones_col);                          // N x 1
    Value deg_tiled = tape.matmul(deg, tape.constant(Tensor::ones(1, k)));  // N x K
    Value sds = tape.matmul(tape.transpose(tape.mul(assignment, deg_tiled)), assignment);  // S^T D S
    Value sas = tape.matmul(tape.transpose(assignment), tape.matmul(adjacency, assignment));
    Value cut = tape.diag_part(tape.sub(sds, sas));  // diag of S^T L S
    Value vol = tape.add_scalar(tape.diag_part(sds), 1e-9);
    return tape.mul_scalar(tape.sum(tape.div(cut, vol)), 1.0 / k);
}

Value balance_loss(Tape& tape, Value assignment) {
    const int n = assignment.rows();
    const int k = assignment.cols();
    Value col_sums = tape.matmul(tape.constant(Tensor::ones(1, n)), assignment);  // 1 x K
    Value norm = tape.frobenius_norm(col_sums);
    return tape.add_scalar(tape.mul_scalar(norm, std::sqrt(static_cast<double>(k)) / n), -1.0);
}

std::pair<Value, Value> coarsen_block(Tape& tape, Value embeddings, Value adjacency, Value assignment) {
    if (assignment.rows() != embeddings.rows() || assignment.rows() != adjacency.rows())
        throw ShapeError("coarsen_block: S " + assignment.val().shape_str() + " vs Z " +
                         embeddings.val().shape_str() + " vs A " + adjacency.val().shape_str());
    Value st = tape.transpose(assignment);
    Value x = tape.matmul(st, embeddings);
    Value a = tape.matmul(st, tape.matmul(adjacency, assignment));
    return {x, a};
}

Value filter_edges(Tape& tape, Value adjacency, double delta1) {
    const Tensor& a = adjacency.val();
    const int n = a.rows();
    Tensor mask(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) mask.at(i, j) = (i != j && a.at(i, j) > delta1) ? 1.0 : 0.0;
    return tape.mul(adjacency, tape.constant(std::move(mask)));
}

CoarsenedGraph compress(Tape& tape, Value features, Value adjacency,
                        const std::vector<CompressionBlockBinding>& blocks,
                        const CompressionConfig& cfg) {
    cfg.validate();
    if (static_cast<int>(blocks.size()) != cfg.num_blocks)
        throw ShapeError("compress: expected " + std::to_string(cfg.num_blocks) + " blocks, got " +
                         std::to_string(blocks.size()));
    if (features.rows() < 2) throw ShapeError("compress: graph needs at least 2 nodes");

    CoarsenedGraph out;
    Value x = features;
    Value a = adjacency;
    for (int l = 0; l < cfg.num_blocks; ++l) {
        const int n = x.rows();
        const int k = std::min(cfg.clusters_for(n), n);
        Value a_norm = normalize_adjacency_t(tape, a);
        Value z = gcn_forward(tape, x, a_norm, blocks[l].encoder);
        Value s = assign_clusters(tape, z, blocks[l].assign_mlp, k);
        Value l_clu = cluster_loss(tape, s, a);
        Value l_bal = balance_loss(tape, s);
        out.loss_clu = l == 0 ? l_clu : tape.add(out.loss_clu, l_clu);
        out.loss_bal = l == 0 ? l_bal : tape.add(out.loss_bal, l_bal);
        out.assignments.push_back(s);
        auto [cx, ca] = coarsen_block(tape, z, a, s);
        x = cx;
        a = ca;
    }

    const double max_off = [&] {
        const Tensor& t = a.val();
        double m = 0.0;
        for (int i = 0; i < t.rows(); ++i)
            for (int j = 0; j < t.cols(); ++j)
                if (i != j) m = std::max(m, t.at(i, j));
        return m;
    }();
    out.adjacency = filter_edges(tape, a, cfg.delta1_rel * max_off);
    out.features = cfg.normalize_cluster_features ? row_l2_normalize(tape, x) : x;
    return out;
}

}  // namespace gip
