#pragma once

#include <rsm/graph.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace rsm {

/// Files of a dataset bundle.
///
/// edges:    one edge per line, `u v [w]` separated by whitespace or commas
/// features: CSV with header `node,f1,...`, one row per node (optional)
/// labels:   `node label` per line; unlisted nodes are unlabeled
/// classes:  one class name per line, fixing class order (optional; default
///           is the sorted set of names in the labels file)
///
/// Lines starting with `%` or `#` and blank lines are skipped everywhere.
struct DatasetPaths {
    std::filesystem::path edges;
    std::optional<std::filesystem::path> features;
    std::filesystem::path labels;
    std::optional<std::filesystem::path> classes;

    /// edges.txt, features.csv, labels.txt, classes.txt inside `dir`; the
    /// optional files are set only when present.
    static DatasetPaths bundle(const std::filesystem::path &dir);
};

/// The same four files held in memory.
struct DatasetTexts {
    std::string edges;
    std::optional<std::string> features;
    std::string labels;
    std::optional<std::string> classes;
};

struct LoadReport {
    std::size_t nodes = 0;
    std::size_t edges = 0;
    std::size_t self_loops = 0;        // dropped
    std::size_t duplicate_edges = 0;   // repeated (u, v) lines merged by summing weights
    std::size_t symmetrized_pairs = 0; // pairs listed in both directions, kept at the larger weight
    std::size_t skipped_lines = 0;     // comments and blanks
    std::vector<std::string> warnings;
};

struct Dataset {
    AttributedGraph graph;
    LoadReport report;
};

/// Node ids follow the names: numerically when every name is a
/// non-negative integer, otherwise by first appearance (edges, then features).
Dataset load_dataset(const DatasetPaths &paths);
Dataset load_dataset(const DatasetTexts &texts);

/// Writes all four files of a bundle. Dead nodes are skipped.
void save_dataset(const AttributedGraph &g, const std::filesystem::path &dir);

} // namespace rsm
