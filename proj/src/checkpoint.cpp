#include "gip/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <map>

namespace gip {

namespace {

constexpr char kMagic[8] = {'G', 'I', 'P', 'C', 'K', 'P', 'T', '\x01'};
constexpr uint32_t kVersion = 1;

void write_u32(std::ofstream& out, uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); }
void write_u64(std::ofstream& out, uint64_t v) { out.write(reinterpret_cast<const char*>(&v), 8); }

uint32_t read_u32(std::ifstream& in) {
    uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 4);
    if (!in) throw DataError("checkpoint: truncated file");
    return v;
}

uint64_t read_u64(std::ifstream& in) {
    uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 8);
    if (!in) throw DataError("checkpoint: truncated file");
    return v;
}

void write_tensor(std::ofstream& out, const std::string& name, const Tensor& t) {
    write_u32(out, static_cast<uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u32(out, static_cast<uint32_t>(t.rows()));
    write_u32(out, static_cast<uint32_t>(t.cols()));
    out.write(reinterpret_cast<const char*>(t.data().data()),
              static_cast<std::streamsize>(t.size() * sizeof(double)));
}

}  // namespace

void save_checkpoint(const ModelState& model, const std::string& config_text, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("checkpoint: cannot write " + path);
    out.write(kMagic, 8);
    write_u32(out, kVersion);
    write_u32(out, static_cast<uint32_t>(model.num_classes));
    write_u32(out, static_cast<uint32_t>(model.feature_dim));
    write_u64(out, config_text.size());
    out.write(config_text.data(), static_cast<std::streamsize>(config_text.size()));
    const auto params = model.parameters();
    write_u32(out, static_cast<uint32_t>(params.size()));
    for (const auto& [name, tensor] : params) write_tensor(out, name, *tensor);
    if (!out) throw DataError("checkpoint: write failed for " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("checkpoint: cannot open " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0)
        throw DataError("checkpoint: bad magic in " + path);
    if (read_u32(in) != kVersion) throw DataError("checkpoint: unsupported version");

    LoadedCheckpoint loaded;
    loaded.model.num_classes = static_cast<int>(read_u32(in));
    loaded.model.feature_dim = static_cast<int>(read_u32(in));
    const uint64_t cfg_len = read_u64(in);
    loaded.config_text.resize(cfg_len);
    in.read(loaded.config_text.data(), static_cast<std::streamsize>(cfg_len));
    if (!in) throw DataError("checkpoint: truncated config");
    loaded.config = TrainConfig::from_text(loaded.config_text);

    const uint32_t count = read_u32(in);
    std::map<std::string, Tensor> tensors;
    for (uint32_t i = 0; i < count; ++i) {
        const uint32_t name_len = read_u32(in);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        const int rows = static_cast<int>(read_u32(in));
        const int cols = static_cast<int>(read_u32(in));
        Tensor t(rows, cols);
        in.read(reinterpret_cast<char*>(t.data().data()),
                static_cast<std::streamsize>(t.size() * sizeof(double)));
        if (!in) throw DataError("checkpoint: truncated tensor " + name);
        tensors.emplace(name, std::move(t));
    }

    // rebuild structure from names and shapes
    ModelState& model = loaded.model;
    const int L = loaded.config.compression.num_blocks;
    model.encoders.resize(L);
    model.assign_mlps.resize(L);
    for (int l = 0; l < L; ++l) {
        for (int i = 0;; ++i) {
            auto it = tensors.find("enc." + std::to_string(l) + ".w" + std::to_string(i));
            if (it == tensors.end()) break;
            model.encoders[l].weights.push_back(it->second);
        }
        if (model.encoders[l].weights.empty())
            throw DataError("checkpoint: missing encoder block " + std::to_string(l));
        for (int i = 0;; ++i) {
            auto wit = tensors.find("assign." + std::to_string(l) + ".w" + std::to_string(i));
            auto bit = tensors.find("assign." + std::to_string(l) + ".b" + std::to_string(i));
            if (wit == tensors.end()) break;
            if (bit == tensors.end()) throw DataError("checkpoint: assign layer missing bias");
            MlpParams::Layer layer;
            layer.weight = wit->second;
            layer.bias = bit->second;
            model.assign_mlps[l].layers.push_back(std::move(layer));
        }
        for (size_t i = 0; i + 1 < model.assign_mlps[l].layers.size(); ++i)
            model.assign_mlps[l].layers[i].act = Activation::Relu;
    }
    for (int i = 0;; ++i) {
        auto wit = tensors.find("topo.w" + std::to_string(i));
        auto bit = tensors.find("topo.b" + std::to_string(i));
        if (wit == tensors.end()) break;
        if (bit == tensors.end()) throw DataError("checkpoint: topology layer missing bias");
        MlpParams::Layer layer;
        layer.weight = wit->second;
        layer.bias = bit->second;
        model.topology_mlp.layers.push_back(std::move(layer));
    }
    for (size_t i = 0; i + 1 < model.topology_mlp.layers.size(); ++i)
        model.topology_mlp.layers[i].act = Activation::Relu;
    for (int t = 0;; ++t) {
        auto it = tensors.find("pattern." + std::to_string(t));
        if (it == tensors.end()) break;
        model.bank.features.push_back(it->second);
    }
    const int T = model.bank.size();
    if (T == 0 || T % model.num_classes != 0)
        throw DataError("checkpoint: pattern count not divisible by class count");
    const int per_class = T / model.num_classes;
    for (int t = 0; t < T; ++t) model.bank.class_of.push_back(t / per_class);
    auto fw = tensors.find("fc.w");
    auto fb = tensors.find("fc.b");
    if (fw == tensors.end() || fb == tensors.end()) throw DataError("checkpoint: missing classifier");
    model.fc_weight = fw->second;
    model.fc_bias = fb->second;
    return loaded;
}

}  // namespace gip
