#include "gip/tu_io.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace gip {

namespace {

std::vector<std::string> read_lines(const fs::path& path, bool mandatory) {
    std::ifstream in(path);
    if (!in) {
        if (mandatory) throw DataError("missing mandatory file: " + path.string());
        return {};
    }
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        if (!line.empty()) lines.push_back(line);
    }
    return lines;
}

long parse_int(const std::string& s, const std::string& what) {
    size_t pos = 0;
    long v;
    try {
        v = std::stol(s, &pos);
    } catch (const std::exception&) {
        throw DataError("non-integer " + what + ": '" + s + "'");
    }
    while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t')) ++pos;
    if (pos != s.size()) throw DataError("non-integer " + what + ": '" + s + "'");
    return v;
}

std::vector<double> parse_csv_doubles(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            out.push_back(std::stod(tok));
        } catch (const std::exception&) {
            throw DataError("bad numeric field: '" + tok + "'");
        }
    }
    return out;
}

}  // namespace

GraphDataset parse_tu_dataset(const std::string& directory, const std::string& name,
                              int degree_onehot_cap) {
    const fs::path dir(directory);
    const auto indicator = read_lines(dir / (name + "_graph_indicator.txt"), true);
    const auto labels = read_lines(dir / (name + "_graph_labels.txt"), true);
    const auto edges_raw = read_lines(dir / (name + "_A.txt"), true);
    const auto node_labels_raw = read_lines(dir / (name + "_node_labels.txt"), false);
    const auto node_attrs_raw = read_lines(dir / (name + "_node_attributes.txt"), false);

    const int num_nodes = static_cast<int>(indicator.size());
    const int num_graphs = static_cast<int>(labels.size());
    if (num_graphs == 0) throw DataError(name + ": empty graph label file");

    // node -> graph (0-based), plus each graph's node range
    std::vector<int> graph_of(num_nodes);
    std::vector<int> first_node(num_graphs, -1), node_count(num_graphs, 0);
    for (int i = 0; i < num_nodes; ++i) {
        const long g = parse_int(indicator[i], "graph indicator") - 1;
        if (g < 0 || g >= num_graphs)
            throw DataError(name + ": node " + std::to_string(i + 1) + " assigned to graph " +
                            std::to_string(g + 1) + " of " + std::to_string(num_graphs));
        graph_of[i] = static_cast<int>(g);
        if (first_node[g] < 0) first_node[g] = i;
        node_count[g] += 1;
    }
    for (int g = 0; g < num_graphs; ++g)
        if (node_count[g] == 0) throw DataError(name + ": graph " + std::to_string(g + 1) + " has no nodes");

    // contiguous class remap in sorted label order
    std::map<long, int> class_of;
    std::vector<long> raw_label(num_graphs);
    for (int g = 0; g < num_graphs; ++g) {
        raw_label[g] = parse_int(labels[g], "graph label");
        class_of[raw_label[g]] = 0;
    }
    int next_class = 0;
    for (auto& [raw, mapped] : class_of) mapped = next_class++;

    // features: one-hot node labels, then appended attributes, else degree one-hot
    std::vector<int> node_label(num_nodes, 0);
    int num_node_labels = 0;
    if (!node_labels_raw.empty()) {
        if (static_cast<int>(node_labels_raw.size()) != num_nodes)
            throw DataError(name + ": node label count " + std::to_string(node_labels_raw.size()) +
                            " != node count " + std::to_string(num_nodes));
        std::map<long, int> label_map;
        std::vector<long> raw(num_nodes);
        for (int i = 0; i < num_nodes; ++i) {
            raw[i] = parse_int(node_labels_raw[i], "node label");
            label_map[raw[i]] = 0;
        }
        int next = 0;
        for (auto& [k, v] : label_map) v = next++;
        for (int i = 0; i < num_nodes; ++i) node_label[i] = label_map[raw[i]];
        num_node_labels = next;
    }

    std::vector<std::vector<double>> node_attr(num_nodes);
    int num_attrs = 0;
    if (!node_attrs_raw.empty()) {
        if (static_cast<int>(node_attrs_raw.size()) != num_nodes)
            throw DataError(name + ": node attribute count mismatch");
        for (int i = 0; i < num_nodes; ++i) {
            node_attr[i] = parse_csv_doubles(node_attrs_raw[i]);
            if (i == 0)
                num_attrs = static_cast<int>(node_attr[i].size());
            else if (static_cast<int>(node_attr[i].size()) != num_attrs)
                throw DataError(name + ": ragged node attributes at node " + std::to_string(i + 1));
        }
    }

    // adjacency
    std::vector<std::vector<std::pair<int, int>>> edges(num_graphs);
    for (const auto& line : edges_raw) {
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw DataError(name + ": bad edge line '" + line + "'");
        const long u = parse_int(line.substr(0, comma), "edge endpoint") - 1;
        const long v = parse_int(line.substr(comma + 1), "edge endpoint") - 1;
        if (u < 0 || v < 0 || u >= num_nodes || v >= num_nodes)
            throw DataError(name + ": edge endpoint outside any graph: '" + line + "'");
        if (graph_of[u] != graph_of[v])
            throw DataError(name + ": edge '" + line + "' crosses graphs");
        if (u == v) continue;  // drop self-loops
        edges[graph_of[u]].emplace_back(static_cast<int>(u), static_cast<int>(v));
    }

    const bool use_degree_features = num_node_labels == 0 && num_attrs == 0;

    GraphDataset ds;
    ds.name = name;
    ds.num_classes = next_class;
    ds.graphs.resize(num_graphs);

    int feature_dim = num_node_labels + num_attrs;
    int max_degree_bucket = 0;
    std::vector<std::vector<int>> deg_local(num_graphs);
    if (use_degree_features) {
        for (int g = 0; g < num_graphs; ++g) {
            deg_local[g].assign(node_count[g], 0);
            Tensor adj(node_count[g], node_count[g]);
            for (auto [u, v] : edges[g]) adj.at(u - first_node[g], v - first_node[g]) = 1.0;
            for (int i = 0; i < node_count[g]; ++i) {
                int d = 0;
                for (int j = 0; j < node_count[g]; ++j)
                    if (adj.at(i, j) > 0.0 || adj.at(j, i) > 0.0) ++d;
                deg_local[g][i] = std::min(d, degree_onehot_cap);
                max_degree_bucket = std::max(max_degree_bucket, deg_local[g][i]);
            }
        }
        feature_dim = max_degree_bucket + 1;
    }

    ds.feature_dim = feature_dim;
    for (int g = 0; g < num_graphs; ++g) {
        auto& graph = ds.graphs[g];
        const int n = node_count[g];
        graph.features = Tensor(n, feature_dim);
        graph.adjacency = Tensor(n, n);
        graph.label = class_of[raw_label[g]];
        for (auto [u, v] : edges[g]) {
            const int lu = u - first_node[g], lv = v - first_node[g];
            graph.adjacency.at(lu, lv) = 1.0;
            graph.adjacency.at(lv, lu) = 1.0;
        }
        for (int i = 0; i < n; ++i) {
            const int global = first_node[g] + i;
            if (use_degree_features) {
                graph.features.at(i, deg_local[g][i]) = 1.0;
            } else {
                if (num_node_labels > 0) graph.features.at(i, node_label[global]) = 1.0;
                for (int a = 0; a < num_attrs; ++a)
                    graph.features.at(i, num_node_labels + a) = node_attr[global][a];
            }
        }
        graph.validate();
    }

    // optional generator ground truth
    const fs::path meta = dir / (name + "_supergraph.json");
    if (fs::exists(meta)) {
        std::ifstream in(meta);
        json j;
        try {
            in >> j;
        } catch (const json::exception& e) {
            throw DataError(name + ": bad supergraph metadata: " + e.what());
        }
        if (static_cast<int>(j.at("graphs").size()) != num_graphs)
            throw DataError(name + ": supergraph metadata count mismatch");
        ds.super_graphs.resize(num_graphs);
        for (int g = 0; g < num_graphs; ++g) {
            const auto& rec = j.at("graphs").at(g);
            auto& sg = ds.super_graphs[g];
            sg.layout = rec.at("layout").get<std::string>();
            sg.community_of = rec.at("communities").get<std::vector<int>>();
            for (const auto& e : rec.at("super_edges"))
                sg.super_edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
            sg.num_communities = rec.at("num_communities").get<int>();
        }
    }
    ds.validate();
    return ds;
}

void write_tu_dataset(const GraphDataset& dataset, const std::string& directory) {
    const fs::path dir(directory);
    fs::create_directories(dir);
    const std::string& name = dataset.name;

    std::ofstream fa(dir / (name + "_A.txt"));
    std::ofstream fi(dir / (name + "_graph_indicator.txt"));
    std::ofstream fl(dir / (name + "_graph_labels.txt"));
    std::ofstream fx(dir / (name + "_node_attributes.txt"));
    if (!fa || !fi || !fl || !fx) throw DataError("cannot write dataset to " + directory);
    fx.precision(17);

    int offset = 1;  // TU files are 1-based
    for (size_t g = 0; g < dataset.graphs.size(); ++g) {
        const auto& graph = dataset.graphs[g];
        fl << *graph.label << "\n";
        const int n = graph.num_nodes();
        for (int i = 0; i < n; ++i) {
            fi << (g + 1) << "\n";
            for (int j = 0; j < n; ++j)
                if (graph.adjacency.at(i, j) > 0.0) fa << (offset + i) << ", " << (offset + j) << "\n";
            for (int a = 0; a < graph.feature_dim(); ++a)
                fx << (a ? "," : "") << graph.features.at(i, a);
            fx << "\n";
        }
        offset += n;
    }

    if (dataset.has_ground_truth()) {
        json j;
        j["name"] = name;
        j["graphs"] = json::array();
        for (const auto& sg : dataset.super_graphs) {
            json rec;
            rec["layout"] = sg.layout;
            rec["communities"] = sg.community_of;
            rec["num_communities"] = sg.num_communities;
            rec["super_edges"] = json::array();
            for (auto [a, b] : sg.super_edges) rec["super_edges"].push_back({a, b});
            j["graphs"].push_back(std::move(rec));
        }
        std::ofstream fm(dir / (name + "_supergraph.json"));
        fm << j.dump(1) << "\n";
    }
}

AttributedGraph read_graph_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open graph file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw DataError(path + ": " + e.what());
    }
    const auto& feats = j.at("features");
    const int n = static_cast<int>(feats.size());
    if (n == 0) throw DataError(path + ": empty feature matrix");
    const int d = static_cast<int>(feats.at(0).size());
    AttributedGraph g;
    g.features = Tensor(n, d);
    for (int i = 0; i < n; ++i) {
        if (static_cast<int>(feats.at(i).size()) != d) throw DataError(path + ": ragged features");
        for (int k = 0; k < d; ++k) g.features.at(i, k) = feats.at(i).at(k).get<double>();
    }
    g.adjacency = Tensor(n, n);
    if (j.contains("edges")) {
        for (const auto& e : j.at("edges")) {
            const int u = e.at(0).get<int>(), v = e.at(1).get<int>();
            const double w = e.size() > 2 ? e.at(2).get<double>() : 1.0;
            if (u < 0 || v < 0 || u >= n || v >= n) throw DataError(path + ": edge endpoint out of range");
            g.adjacency.at(u, v) = w;
            g.adjacency.at(v, u) = w;
        }
    } else if (j.contains("adjacency")) {
        const auto& adj = j.at("adjacency");
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < n; ++k) g.adjacency.at(i, k) = adj.at(i).at(k).get<double>();
    }
    if (j.contains("label")) g.label = j.at("label").get<int>();
    g.validate(false);
    return g;
}

void write_graph_json(const AttributedGraph& graph, const std::string& path) {
    json j;
    j["features"] = json::array();
    for (int i = 0; i < graph.num_nodes(); ++i) {
        json row = json::array();
        for (int k = 0; k < graph.feature_dim(); ++k) row.push_back(graph.features.at(i, k));
        j["features"].push_back(std::move(row));
    }
    j["edges"] = json::array();
    for (int i = 0; i < graph.num_nodes(); ++i)
        for (int k = i + 1; k < graph.num_nodes(); ++k)
            if (graph.adjacency.at(i, k) != 0.0) j["edges"].push_back({i, k, graph.adjacency.at(i, k)});
    if (graph.label) j["label"] = *graph.label;
    std::ofstream out(path);
    if (!out) throw DataError("cannot write graph file: " + path);
    out << j.dump(1) << "\n";
}

}  // namespace gip
