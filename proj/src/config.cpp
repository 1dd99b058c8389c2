#include "gip/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>
#include <vector>

#include "gip/graph.hpp"

namespace gip {

namespace {

std::string fmt(double v) {
    std::ostringstream ss;
    ss.precision(17);
    ss << v;
    return ss.str();
}

double to_double(const std::string& key, const std::string& v) {
    try {
        size_t pos;
        double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw DataError("config: bad numeric value for " + key + ": '" + v + "'");
    }
}

long to_long(const std::string& key, const std::string& v) {
    try {
        size_t pos;
        long d = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw DataError("config: bad integer value for " + key + ": '" + v + "'");
    }
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw DataError("config: bad boolean value for " + key + ": '" + v + "'");
}

std::string decay_to_string(const std::vector<double>& decay) {
    if (decay.empty()) return "none";
    std::string out;
    for (size_t i = 0; i < decay.size(); ++i) out += (i ? "," : "") + fmt(decay[i]);
    return out;
}

std::vector<double> decay_from_string(const std::string& v) {
    if (v == "none" || v.empty()) return {};
    std::vector<double> out;
    std::stringstream ss(v);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(to_double("kernel_decay", tok));
    return out;
}

}  // namespace

void TrainConfig::validate() const {
    if (epochs < 1) throw DataError("config: epochs must be >= 1");
    if (batch_size < 1) throw DataError("config: batch_size must be >= 1");
    if (learning_rate <= 0.0) throw DataError("config: learning_rate must be positive");
    if (alpha1 < 0 || alpha2 < 0 || alpha3 < 0 || alpha4 < 0 || beta1 < 0 || beta2 < 0)
        throw DataError("config: loss weights must be >= 0");
    if (kernel.max_steps < 0) throw DataError("config: kernel_steps must be >= 0");
    compression.validate();
    patterns.validate();
}

std::map<std::string, std::string> TrainConfig::to_map() const {
    std::map<std::string, std::string> m;
    m["seed"] = std::to_string(seed);
    m["epochs"] = std::to_string(epochs);
    m["batch_size"] = std::to_string(batch_size);
    m["learning_rate"] = fmt(learning_rate);
    m["patience"] = std::to_string(patience);
    m["alpha1"] = fmt(alpha1);
    m["alpha2"] = fmt(alpha2);
    m["alpha3"] = fmt(alpha3);
    m["alpha4"] = fmt(alpha4);
    m["beta1"] = fmt(beta1);
    m["beta2"] = fmt(beta2);
    m["adam_beta1"] = fmt(adam_beta1);
    m["adam_beta2"] = fmt(adam_beta2);
    m["adam_eps"] = fmt(adam_eps);
    m["enc_layers"] = std::to_string(enc_layers);
    m["enc_hidden"] = std::to_string(enc_hidden);
    m["embed_dim"] = std::to_string(embed_dim);
    m["mlp1_hidden"] = std::to_string(mlp1_hidden);
    m["mlp2_hidden"] = std::to_string(mlp2_hidden);
    m["num_blocks"] = std::to_string(compression.num_blocks);
    m["ratio"] = fmt(compression.ratio);
    m["delta1_rel"] = fmt(compression.delta1_rel);
    m["normalize_cluster_features"] = compression.normalize_cluster_features ? "true" : "false";
    m["kernel_steps"] = std::to_string(kernel.max_steps);
    m["kernel_decay"] = decay_to_string(kernel.step_decay);
    m["patterns_per_class"] = std::to_string(patterns.per_class);
    m["pattern_nodes"] = std::to_string(patterns.nodes);
    m["pattern_random_init"] = patterns.random_init ? "true" : "false";
    m["pattern_noise"] = fmt(patterns.init_noise);
    m["gamma1"] = fmt(patterns.gamma1);
    m["gamma2"] = fmt(patterns.gamma2);
    m["margin"] = fmt(patterns.margin);
    m["delta2"] = fmt(patterns.delta2);
    m["diversity_raw_kernel"] = patterns.diversity_raw_kernel ? "true" : "false";
    m["degree_onehot_cap"] = std::to_string(degree_onehot_cap);
    m["train_ratio"] = fmt(train_ratio);
    m["val_ratio"] = fmt(val_ratio);
    m["test_ratio"] = fmt(test_ratio);
    m["probe_seed"] = std::to_string(probe_seed);
    m["probe_epochs"] = std::to_string(probe_epochs);
    m["probe_lr"] = fmt(probe_lr);
    m["probe_hidden"] = std::to_string(probe_hidden);
    m["threads"] = std::to_string(threads);
    return m;
}

void TrainConfig::set(const std::string& key, const std::string& v) {
    if (key == "seed") seed = static_cast<uint64_t>(to_long(key, v));
    else if (key == "epochs") epochs = static_cast<int>(to_long(key, v));
    else if (key == "batch_size") batch_size = static_cast<int>(to_long(key, v));
    else if (key == "learning_rate") learning_rate = to_double(key, v);
    else if (key == "patience") patience = static_cast<int>(to_long(key, v));
    else if (key == "alpha1") alpha1 = to_double(key, v);
    else if (key == "alpha2") alpha2 = to_double(key, v);
    else if (key == "alpha3") alpha3 = to_double(key, v);
    else if (key == "alpha4") alpha4 = to_double(key, v);
    else if (key == "beta1") beta1 = to_double(key, v);
    else if (key == "beta2") beta2 = to_double(key, v);
    else if (key == "adam_beta1") adam_beta1 = to_double(key, v);
    else if (key == "adam_beta2") adam_beta2 = to_double(key, v);
    else if (key == "adam_eps") adam_eps = to_double(key, v);
    else if (key == "enc_layers") enc_layers = static_cast<int>(to_long(key, v));
    else if (key == "enc_hidden") enc_hidden = static_cast<int>(to_long(key, v));
    else if (key == "embed_dim") embed_dim = static_cast<int>(to_long(key, v));
    else if (key == "mlp1_hidden") mlp1_hidden = static_cast<int>(to_long(key, v));
    else if (key == "mlp2_hidden") mlp2_hidden = static_cast<int>(to_long(key, v));
    else if (key == "num_blocks") compression.num_blocks = static_cast<int>(to_long(key, v));
    else if (key == "ratio") compression.ratio = to_double(key, v);
    else if (key == "delta1_rel") compression.delta1_rel = to_double(key, v);
    else if (key == "normalize_cluster_features") compression.normalize_cluster_features = to_bool(key, v);
    else if (key == "kernel_steps") kernel.max_steps = static_cast<int>(to_long(key, v));
    else if (key == "kernel_decay") kernel.step_decay = decay_from_string(v);
    else if (key == "patterns_per_class") patterns.per_class = static_cast<int>(to_long(key, v));
    else if (key == "pattern_nodes") patterns.nodes = static_cast<int>(to_long(key, v));
    else if (key == "pattern_random_init") patterns.random_init = to_bool(key, v);
    else if (key == "pattern_noise") patterns.init_noise = to_double(key, v);
    else if (key == "gamma1") patterns.gamma1 = to_double(key, v);
    else if (key == "gamma2") patterns.gamma2 = to_double(key, v);
    else if (key == "margin") patterns.margin = to_double(key, v);
    else if (key == "delta2") patterns.delta2 = to_double(key, v);
    else if (key == "diversity_raw_kernel") patterns.diversity_raw_kernel = to_bool(key, v);
    else if (key == "degree_onehot_cap") degree_onehot_cap = static_cast<int>(to_long(key, v));
    else if (key == "train_ratio") train_ratio = to_double(key, v);
    else if (key == "val_ratio") val_ratio = to_double(key, v);
    else if (key == "test_ratio") test_ratio = to_double(key, v);
    else if (key == "probe_seed") probe_seed = static_cast<uint64_t>(to_long(key, v));
    else if (key == "probe_epochs") probe_epochs = static_cast<int>(to_long(key, v));
    else if (key == "probe_lr") probe_lr = to_double(key, v);
    else if (key == "probe_hidden") probe_hidden = static_cast<int>(to_long(key, v));
    else if (key == "threads") threads = static_cast<int>(to_long(key, v));
    else throw DataError("config: unknown key '" + key + "'");
}

namespace {

void apply_line(TrainConfig& cfg, const std::string& raw, const std::string& where) {
    std::string line = raw;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto strip = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return std::string();
        const auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
    };
    line = strip(line);
    if (line.empty()) return;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw DataError("config: bad line in " + where + ": '" + raw + "'");
    cfg.set(strip(line.substr(0, eq)), strip(line.substr(eq + 1)));
}

}  // namespace

TrainConfig TrainConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("config: cannot open " + path);
    TrainConfig cfg;
    std::string line;
    while (std::getline(in, line)) apply_line(cfg, line, path);
    cfg.validate();
    return cfg;
}

TrainConfig TrainConfig::from_text(const std::string& text) {
    TrainConfig cfg;
    std::stringstream ss(text);
    std::string line;
    while (std::getline(ss, line)) apply_line(cfg, line, "<text>");
    cfg.validate();
    return cfg;
}

void TrainConfig::apply_overrides(const std::vector<std::string>& key_value_pairs) {
    for (const auto& kv : key_value_pairs) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw DataError("override must be key=value: '" + kv + "'");
        set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    validate();
}

std::string TrainConfig::to_text() const {
    std::string out;
    for (const auto& [k, v] : to_map()) out += k + " = " + v + "\n";
    return out;
}

void TrainConfig::write_file(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("config: cannot write " + path);
    out << to_text();
}

int TrainConfig::resolved_threads() const {
    if (threads > 0) return threads;
    if (const char* env = std::getenv("GIP_THREADS")) {
        const int t = std::atoi(env);
        if (t > 0) return t;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(std::min(hw, 8u));
}

}  // namespace gip
