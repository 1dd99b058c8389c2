#include "gip/model.hpp"

#include <atomic>
#include <cmath>
#include <functional>
#include <mutex>
#include <thread>

#include "gip/rng.hpp"

namespace gip {

std::vector<std::pair<std::string, Tensor*>> ModelState::parameters() {
    std::vector<std::pair<std::string, Tensor*>> out;
    for (size_t l = 0; l < encoders.size(); ++l)
        for (size_t i = 0; i < encoders[l].weights.size(); ++i)
            out.emplace_back("enc." + std::to_string(l) + ".w" + std::to_string(i),
                             &encoders[l].weights[i]);
    for (size_t l = 0; l < assign_mlps.size(); ++l)
        for (size_t i = 0; i < assign_mlps[l].layers.size(); ++i) {
            out.emplace_back("assign." + std::to_string(l) + ".w" + std::to_string(i),
                             &assign_mlps[l].layers[i].weight);
            out.emplace_back("assign." + std::to_string(l) + ".b" + std::to_string(i),
                             &assign_mlps[l].layers[i].bias);
        }
    for (size_t i = 0; i < topology_mlp.layers.size(); ++i) {
        out.emplace_back("topo.w" + std::to_string(i), &topology_mlp.layers[i].weight);
        out.emplace_back("topo.b" + std::to_string(i), &topology_mlp.layers[i].bias);
    }
    for (size_t t = 0; t < bank.features.size(); ++t)
        out.emplace_back("pattern." + std::to_string(t), &bank.features[t]);
    out.emplace_back("fc.w", &fc_weight);
    out.emplace_back("fc.b", &fc_bias);
    return out;
}

std::vector<std::pair<std::string, const Tensor*>> ModelState::parameters() const {
    std::vector<std::pair<std::string, const Tensor*>> out;
    for (auto& [name, tensor] : const_cast<ModelState*>(this)->parameters())
        out.emplace_back(name, tensor);
    return out;
}

ModelBinding bind_model(Tape& tape, const ModelState& model, bool trainable) {
    ModelBinding b;
    for (size_t l = 0; l < model.encoders.size(); ++l) {
        CompressionBlockBinding block;
        block.encoder = bind(tape, model.encoders[l], trainable);
        block.assign_mlp = bind(tape, model.assign_mlps[l], trainable);
        b.blocks.push_back(std::move(block));
    }
    b.topology_mlp = bind(tape, model.topology_mlp, trainable);
    b.bank = bind_patterns(tape, model.bank, b.topology_mlp, trainable);
    b.fc_weight = trainable ? tape.param(model.fc_weight) : tape.constant(model.fc_weight);
    b.fc_bias = trainable ? tape.param(model.fc_bias) : tape.constant(model.fc_bias);

    // parallel to ModelState::parameters()
    for (const auto& block : b.blocks)
        for (const auto& w : block.encoder.weights) b.bound_params.push_back(w);
    for (const auto& block : b.blocks)
        for (const auto& layer : block.assign_mlp.layers) {
            b.bound_params.push_back(layer.weight);
            b.bound_params.push_back(layer.bias);
        }
    for (const auto& layer : b.topology_mlp.layers) {
        b.bound_params.push_back(layer.weight);
        b.bound_params.push_back(layer.bias);
    }
    for (const auto& p : b.bank.patterns) b.bound_params.push_back(p.features);
    b.bound_params.push_back(b.fc_weight);
    b.bound_params.push_back(b.fc_bias);
    return b;
}

namespace {

std::vector<int> encoder_dims(int in_dim, const TrainConfig& cfg) {
    std::vector<int> dims{in_dim};
    for (int i = 0; i < cfg.enc_layers - 1; ++i) dims.push_back(cfg.enc_hidden);
    dims.push_back(cfg.embed_dim);
    return dims;
}

}  // namespace

ModelState init_model(const GraphDataset& dataset, const std::vector<int>& train_indices,
                      const TrainConfig& cfg) {
    cfg.validate();
    if (train_indices.empty()) throw DataError("init_model: empty training set");
    Rng rng(cfg.seed);

    ModelState model;
    model.num_classes = dataset.num_classes;
    model.feature_dim = dataset.feature_dim;

    // per-block cluster-head widths: the largest K any training graph needs
    const int L = cfg.compression.num_blocks;
    std::vector<int> kmax(L, 2);
    double size_sum = 0.0;
    for (int gi : train_indices) {
        int n = dataset.graphs[gi].num_nodes();
        size_sum += n;
        for (int l = 0; l < L; ++l) {
            const int k = std::min(cfg.compression.clusters_for(n), std::max(2, n));
            kmax[l] = std::max(kmax[l], k);
            n = k;
        }
    }

    for (int l = 0; l < L; ++l) {
        const int in_dim = l == 0 ? dataset.feature_dim : cfg.embed_dim;
        model.encoders.push_back(GcnParams::glorot(encoder_dims(in_dim, cfg), rng));
        model.assign_mlps.push_back(
            MlpParams::glorot({cfg.embed_dim, cfg.mlp1_hidden, kmax[l]}, rng));
    }
    model.topology_mlp = MlpParams::glorot({2 * cfg.embed_dim, cfg.mlp2_hidden, 1}, rng);

    int pattern_nodes = cfg.patterns.nodes;
    if (pattern_nodes <= 0) {
        int n = std::max(2, static_cast<int>(std::lround(size_sum / train_indices.size())));
        for (int l = 0; l < L; ++l) n = std::min(cfg.compression.clusters_for(n), std::max(2, n));
        pattern_nodes = n;
    }

    // class centroids of coarsened features under the freshly seeded encoder
    std::vector<Tensor> centroid(dataset.num_classes, Tensor(1, cfg.embed_dim));
    if (!cfg.patterns.random_init) {
        std::vector<int> counts(dataset.num_classes, 0);
        for (int gi : train_indices) {
            const auto& g = dataset.graphs[gi];
            Tape tape;
            std::vector<CompressionBlockBinding> blocks;
            for (int l = 0; l < L; ++l)
                blocks.push_back(CompressionBlockBinding{bind(tape, model.encoders[l], false),
                                                         bind(tape, model.assign_mlps[l], false)});
            CoarsenedGraph cg = compress(tape, tape.constant(g.features), tape.constant(g.adjacency),
                                         blocks, cfg.compression);
            const Tensor& x = cg.features.val();
            Tensor& acc = centroid[*g.label];
            for (int i = 0; i < x.rows(); ++i)
                for (int j = 0; j < x.cols(); ++j) acc.at(0, j) += x.at(i, j) / x.rows();
            counts[*g.label] += 1;
        }
        for (int c = 0; c < dataset.num_classes; ++c) {
            if (counts[c] == 0) throw DataError("init_model: class " + std::to_string(c) +
                                                " missing from training split");
            for (double& v : centroid[c].data()) v /= counts[c];
        }
    }

    for (int c = 0; c < dataset.num_classes; ++c)
        for (int p = 0; p < cfg.patterns.per_class; ++p) {
            Tensor x(pattern_nodes, cfg.embed_dim);
            for (int i = 0; i < pattern_nodes; ++i)
                for (int j = 0; j < cfg.embed_dim; ++j) {
                    const double base = cfg.patterns.random_init ? 0.0 : centroid[c].at(0, j);
                    x.at(i, j) = base + rng.normal(0.0, cfg.patterns.init_noise);
                }
            model.bank.features.push_back(std::move(x));
            model.bank.class_of.push_back(c);
        }

    const int T = model.bank.size();
    model.fc_weight = Tensor(T, dataset.num_classes);
    model.fc_bias = Tensor(1, dataset.num_classes);
    return model;
}

ForwardOutput forward(Tape& tape, const ModelBinding& binding, const AttributedGraph& graph,
                      const TrainConfig& cfg) {
    ForwardOutput out;
    out.coarse = compress(tape, tape.constant(graph.features), tape.constant(graph.adjacency),
                          binding.blocks, cfg.compression);
    out.loss_clu = out.coarse.loss_clu;
    out.loss_bal = out.coarse.loss_bal;

    const GraphValue cg{out.coarse.features, out.coarse.adjacency};
    out.sims = pattern_similarities(tape, cg, binding.bank, cfg.kernel);

    Value self_cg = rw_kernel(tape, cg, cg, cfg.kernel);
    for (int t = 0; t < binding.bank.size(); ++t) {
        Value self_p = rw_kernel(tape, binding.bank.patterns[t], binding.bank.patterns[t], cfg.kernel);
        Value gap = tape.sub(tape.mul_scalar(tape.add(self_cg, self_p), 0.5), out.sims[t]);
        out.distances.push_back(tape.sqrt(tape.max_with_scalar(gap, 0.0)));
    }

    Value sims_row;
    for (const Value& s : out.sims) sims_row = sims_row.valid() ? tape.concat_cols(sims_row, s) : s;
    Value logits = tape.add(tape.matmul(sims_row, binding.fc_weight), binding.fc_bias);
    out.probs = tape.row_softmax(logits);

    if (graph.label) {
        const int y = *graph.label;
        if (y < 0 || y >= out.probs.cols())
            throw DataError("forward: label " + std::to_string(y) + " outside 0.." +
                            std::to_string(out.probs.cols() - 1));
        out.loss_ce = tape.mul_scalar(tape.log(tape.slice(out.probs, 0, 1, y, y + 1)), -1.0);
    }
    return out;
}

std::map<std::string, double> LossBreakdown::as_map() const {
    return {{"ce", ce}, {"clu", clu}, {"bal", bal}, {"mul", mul}, {"div", div}, {"total", total}};
}

std::pair<Value, LossBreakdown> total_loss(Tape& tape, const ModelBinding& binding,
                                           const std::vector<const AttributedGraph*>& batch,
                                           const TrainConfig& cfg) {
    if (batch.empty()) throw DataError("total_loss: empty batch");
    const double inv_m = 1.0 / static_cast<double>(batch.size());

    Value ce, clu, bal, mul;
    for (const AttributedGraph* g : batch) {
        if (!g->label) throw DataError("total_loss: unlabeled graph in batch");
        ForwardOutput fo = forward(tape, binding, *g, cfg);
        Value term = multi_similarity_term(tape, fo.distances, *g->label, binding.bank.class_of,
                                           cfg.patterns);
        ce = ce.valid() ? tape.add(ce, fo.loss_ce) : fo.loss_ce;
        clu = clu.valid() ? tape.add(clu, fo.loss_clu) : fo.loss_clu;
        bal = bal.valid() ? tape.add(bal, fo.loss_bal) : fo.loss_bal;
        mul = mul.valid() ? tape.add(mul, term) : term;
    }
    ce = tape.mul_scalar(ce, inv_m);
    clu = tape.mul_scalar(clu, inv_m);
    bal = tape.mul_scalar(bal, inv_m);
    mul = tape.mul_scalar(mul, inv_m);
    Value div = diversity_loss(tape, binding.bank, cfg.kernel, cfg.patterns);

    Value total = tape.add(
        ce, tape.add(tape.mul_scalar(tape.add(tape.mul_scalar(clu, cfg.alpha1),
                                              tape.mul_scalar(bal, cfg.alpha2)),
                                     cfg.beta1),
                     tape.mul_scalar(tape.add(tape.mul_scalar(mul, cfg.alpha3),
                                              tape.mul_scalar(div, cfg.alpha4)),
                                     cfg.beta2)));
    LossBreakdown breakdown;
    breakdown.ce = ce.item();
    breakdown.clu = clu.item();
    breakdown.bal = bal.item();
    breakdown.mul = mul.item();
    breakdown.div = div.item();
    breakdown.total = total.item();
    return {total, breakdown};
}

void Adam::step(std::vector<std::pair<std::string, Tensor*>>& params, const std::vector<Tensor>& grads) {
    if (params.size() != grads.size()) throw ShapeError("Adam: parameter/gradient count mismatch");
    if (m_.empty()) {
        for (auto& [name, p] : params) {
            m_.emplace_back(p->rows(), p->cols());
            v_.emplace_back(p->rows(), p->cols());
        }
    }
    t_ += 1;
    const double bc1 = 1.0 - std::pow(b1_, t_);
    const double bc2 = 1.0 - std::pow(b2_, t_);
    for (size_t i = 0; i < params.size(); ++i) {
        Tensor& p = *params[i].second;
        const Tensor& g = grads[i];
        if (!g.same_shape(p)) throw ShapeError("Adam: gradient shape mismatch for " + params[i].first);
        for (int j = 0; j < p.size(); ++j) {
            m_[i][j] = b1_ * m_[i][j] + (1.0 - b1_) * g[j];
            v_[i][j] = b2_ * v_[i][j] + (1.0 - b2_) * g[j] * g[j];
            const double mhat = m_[i][j] / bc1;
            const double vhat = v_[i][j] / bc2;
            p[j] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
        }
    }
}

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
    threads = std::max(1, std::min(threads, n));
    if (threads == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (;;) {
                const int i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

namespace {

double accuracy_on(const ModelState& model, const GraphDataset& dataset, const std::vector<int>& idx,
                   const TrainConfig& cfg) {
    if (idx.empty()) return 0.0;
    std::vector<int> hits(idx.size(), 0);
    parallel_for(static_cast<int>(idx.size()), cfg.resolved_threads(), [&](int i) {
        const auto& g = dataset.graphs[idx[i]];
        hits[i] = predict(model, g, cfg).label == *g.label ? 1 : 0;
    });
    int correct = 0;
    for (int h : hits) correct += h;
    return static_cast<double>(correct) / static_cast<double>(idx.size());
}

}  // namespace

TrainResult train(const GraphDataset& dataset, const SplitSpec& split, const TrainConfig& cfg) {
    cfg.validate();
    dataset.validate();
    if (split.train.empty()) throw DataError("train: empty training split");

    TrainResult result;
    result.model = init_model(dataset, split.train, cfg);
    auto params = result.model.parameters();
    const size_t n_params = params.size();
    Adam optimizer(cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);

    Rng shuffle_rng(cfg.seed ^ 0x5DEECE66Dull);
    const int threads = cfg.resolved_threads();
    const double beta1a1 = cfg.beta1 * cfg.alpha1;
    const double beta1a2 = cfg.beta1 * cfg.alpha2;
    const double beta2a3 = cfg.beta2 * cfg.alpha3;
    const double beta2a4 = cfg.beta2 * cfg.alpha4;

    ModelState best_model = result.model;
    int best_epoch = -1;
    double best_val = -1.0;
    int stall = 0;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::vector<int> order = split.train;
        shuffle_rng.shuffle(order);

        double ce_sum = 0, clu_sum = 0, bal_sum = 0, mul_sum = 0, div_sum = 0;
        int n_batches = 0;

        for (size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const int m = static_cast<int>(std::min(order.size() - start,
                                                    static_cast<size_t>(cfg.batch_size)));
            const double inv_m = 1.0 / m;
            std::vector<std::vector<Tensor>> slot_grads(m + 1);
            std::vector<std::array<double, 4>> slot_losses(m);  // ce, clu, bal, mul
            double div_value = 0.0;

            try {
                parallel_for(m, threads, [&](int i) {
                    const auto& g = dataset.graphs[order[start + i]];
                    Tape tape;
                    ModelBinding binding = bind_model(tape, result.model, true);
                    ForwardOutput fo = forward(tape, binding, g, cfg);
                    Value ms = multi_similarity_term(tape, fo.distances, *g.label,
                                                     binding.bank.class_of, cfg.patterns);
                    Value partial = fo.loss_ce;
                    if (beta1a1 > 0) partial = tape.add(partial, tape.mul_scalar(fo.loss_clu, beta1a1));
                    if (beta1a2 > 0) partial = tape.add(partial, tape.mul_scalar(fo.loss_bal, beta1a2));
                    if (beta2a3 > 0) partial = tape.add(partial, tape.mul_scalar(ms, beta2a3));
                    partial = tape.mul_scalar(partial, inv_m);
                    tape.backward(partial);
                    auto& grads = slot_grads[i];
                    grads.reserve(n_params);
                    for (const Value& v : binding.bound_params) grads.push_back(tape.grad(v));
                    slot_losses[i] = {fo.loss_ce.item(), fo.loss_clu.item(), fo.loss_bal.item(),
                                      ms.item()};
                });

                {
                    Tape tape;
                    ModelBinding binding = bind_model(tape, result.model, true);
                    Value div = diversity_loss(tape, binding.bank, cfg.kernel, cfg.patterns);
                    div_value = div.item();
                    if (beta2a4 > 0) {
                        tape.backward(tape.mul_scalar(div, beta2a4));
                        auto& grads = slot_grads[m];
                        grads.reserve(n_params);
                        for (const Value& v : binding.bound_params) grads.push_back(tape.grad(v));
                    }
                }
            } catch (const NonFiniteError& e) {
                throw DivergenceError("training diverged at epoch " + std::to_string(epoch) +
                                      ", batch " + std::to_string(n_batches) + ": " + e.what());
            }

            // deterministic merge in batch order
            std::vector<Tensor> merged;
            merged.reserve(n_params);
            for (size_t p = 0; p < n_params; ++p)
                merged.emplace_back(params[p].second->rows(), params[p].second->cols());
            for (int slot = 0; slot <= m; ++slot) {
                if (slot_grads[slot].empty()) continue;
                for (size_t p = 0; p < n_params; ++p) {
                    Tensor& acc = merged[p];
                    const Tensor& g = slot_grads[slot][p];
                    for (int j = 0; j < acc.size(); ++j) acc[j] += g[j];
                }
            }
            optimizer.step(params, merged);

            for (int i = 0; i < m; ++i) {
                ce_sum += slot_losses[i][0];
                clu_sum += slot_losses[i][1];
                bal_sum += slot_losses[i][2];
                mul_sum += slot_losses[i][3];
            }
            div_sum += div_value;
            n_batches += 1;
        }

        EpochStats stats;
        stats.epoch = epoch;
        const double n_train = static_cast<double>(order.size());
        stats.loss.ce = ce_sum / n_train;
        stats.loss.clu = clu_sum / n_train;
        stats.loss.bal = bal_sum / n_train;
        stats.loss.mul = mul_sum / n_train;
        stats.loss.div = div_sum / std::max(1, n_batches);
        stats.loss.total = stats.loss.ce + cfg.beta1 * (cfg.alpha1 * stats.loss.clu + cfg.alpha2 * stats.loss.bal) +
                           cfg.beta2 * (cfg.alpha3 * stats.loss.mul + cfg.alpha4 * stats.loss.div);
        stats.val_accuracy = accuracy_on(result.model, dataset, split.val, cfg);
        result.history.push_back(stats);

        if (stats.val_accuracy > best_val) {
            best_val = stats.val_accuracy;
            best_epoch = epoch;
            best_model = result.model;
            stall = 0;
        } else if (++stall >= cfg.patience) {
            break;
        }
    }

    result.model = std::move(best_model);
    result.best_epoch = best_epoch;
    result.best_val_accuracy = best_val;
    return result;
}

Prediction predict(const ModelState& model, const AttributedGraph& graph, const TrainConfig& cfg) {
    Tape tape;
    ModelBinding binding = bind_model(tape, model, false);
    AttributedGraph unlabeled = graph;
    unlabeled.label.reset();  // CE not needed for prediction
    ForwardOutput fo = forward(tape, binding, unlabeled, cfg);
    Prediction pred;
    const Tensor& probs = fo.probs.val();
    pred.probs.assign(probs.data().begin(), probs.data().end());
    for (const Value& s : fo.sims) pred.sims.push_back(s.item());
    pred.label = 0;
    for (int c = 1; c < probs.cols(); ++c)
        if (probs.at(0, c) > probs.at(0, pred.label)) pred.label = c;  // ties keep the lowest id
    return pred;
}

}  // namespace gip
