#pragma once

#include <string>

#include "gip/graph.hpp"

namespace gip {

/// Reads a dataset in the TU plain-text layout from `directory`:
/// `<name>_A.txt` (1-based comma-separated edge pairs),
/// `<name>_graph_indicator.txt`, `<name>_graph_labels.txt`, with optional
/// `<name>_node_labels.txt` and `<name>_node_attributes.txt`.
///
/// Node labels are one-hot encoded; node attributes are appended after them.
/// Datasets with neither get a capped degree one-hot. Graph labels are
/// remapped to contiguous 0..C-1 in sorted order. If a
/// `<name>_supergraph.json` sidecar is present (written by the generators)
/// the ground-truth metadata is loaded too.
GraphDataset parse_tu_dataset(const std::string& directory, const std::string& name,
                              int degree_onehot_cap = 64);

/// Writes `dataset` back out in the same TU layout (edges in both
/// directions, node features as `_node_attributes.txt`) plus the
/// `_supergraph.json` sidecar when ground truth is present.
void write_tu_dataset(const GraphDataset& dataset, const std::string& directory);

/// Single-graph JSON file ({"features": [[..]], "edges": [[i,j,w?], ..]})
/// used by the kernel debug command.
AttributedGraph read_graph_json(const std::string& path);
void write_graph_json(const AttributedGraph& graph, const std::string& path);

}  // namespace gip
