#pragma once

#include <map>
#include <string>

#include "gip/cluster.hpp"
#include "gip/kernel.hpp"
#include "gip/patterns.hpp"

namespace gip {

/// Every knob of the training pipeline. Defaults are the library-wide
/// fallbacks; the per-dataset files under configs/ override them.
struct TrainConfig {
    uint64_t seed = 0;
    int epochs = 500;
    int batch_size = 64;
    double learning_rate = 0.001;
    int patience = 50;  // early stopping on validation accuracy

    // loss mixing
    double alpha1 = 0.3, alpha2 = 0.2;  // cluster / balance
    double alpha3 = 0.2, alpha4 = 0.2;  // multi-similarity / diversity
    double beta1 = 0.5, beta2 = 0.4;    // module weights

    // adaptive-moment optimizer
    double adam_beta1 = 0.9, adam_beta2 = 0.999, adam_eps = 1e-8;

    // architecture
    int enc_layers = 3;
    int enc_hidden = 64;
    int embed_dim = 64;   // d'
    int mlp1_hidden = 64;
    int mlp2_hidden = 32;

    CompressionConfig compression;
    KernelConfig kernel;
    PatternConfig patterns;

    // data handling
    int degree_onehot_cap = 64;
    double train_ratio = 0.8, val_ratio = 0.1, test_ratio = 0.1;

    // explanation-accuracy probe
    uint64_t probe_seed = 1234;
    int probe_epochs = 200;
    double probe_lr = 0.01;
    int probe_hidden = 32;

    int threads = 0;  // 0 = use GIP_THREADS env var or hardware default

    void validate() const;

    /// All keys in serialization order with current values.
    std::map<std::string, std::string> to_map() const;
    /// Set one key; throws DataError on unknown keys or bad values.
    void set(const std::string& key, const std::string& value);

    static TrainConfig from_file(const std::string& path);
    void apply_overrides(const std::vector<std::string>& key_value_pairs);
    void write_file(const std::string& path) const;
    std::string to_text() const;
    static TrainConfig from_text(const std::string& text);

    int resolved_threads() const;
};

}  // namespace gip
