#include <rsm/io.hpp>

#include <rsm/error.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <unordered_map>

namespace rsm {

namespace {

struct Line {
    std::size_t number;
    std::vector<std::string> fields;
};

std::vector<std::string> split(const std::string &s, bool commas_only) {
    std::vector<std::string> out;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty())
            out.push_back(std::move(cur));
        cur.clear();
    };
    for (char ch : s) {
        const bool sep = ch == ',' || (!commas_only && (ch == ' ' || ch == '\t'));
        if (sep) {
            if (commas_only) {
                out.push_back(cur);
                cur.clear();
            } else {
                flush();
            }
        } else if (ch != '\r' && !(commas_only && (ch == ' ' || ch == '\t'))) {
            cur.push_back(ch);
        }
    }
    if (commas_only)
        out.push_back(cur);
    else
        flush();
    return out;
}

struct Source {
    std::string name;
    std::unique_ptr<std::istream> stream;

    std::string string() const { return name; }
};

Source open_file(const std::filesystem::path &path) {
    auto in = std::make_unique<std::ifstream>(path);
    if (!*in)
        throw Error(ErrorCode::not_found, "cannot open " + path.string());
    return {path.string(), std::move(in)};
}

Source open_text(std::string name, const std::string &text) {
    return {std::move(name), std::make_unique<std::istringstream>(text)};
}

std::vector<Line> read_lines(const Source &source, bool commas_only, std::size_t &skipped) {
    auto &in = *source.stream;
    std::vector<Line> out;
    std::string text;
    std::size_t number = 0;
    while (std::getline(in, text)) {
        ++number;
        const auto first = text.find_first_not_of(" \t\r");
        if (first == std::string::npos || text[first] == '%' || text[first] == '#') {
            ++skipped;
            continue;
        }
        out.push_back({number, split(text, commas_only)});
    }
    return out;
}

double parse_double(const std::string &s, const Source &file, std::size_t line) {
    char *end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v))
        throw ParseError(file.string(), line, "'" + s + "' is not a number");
    return v;
}

bool is_index(const std::string &s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

std::uint64_t index_value(const std::string &s) {
    std::uint64_t v = 0;
    std::from_chars(s.data(), s.data() + s.size(), v);
    return v;
}

/// Orders names numerically when all are indices, else keeps `order`.
std::vector<std::string> canonical_order(std::vector<std::string> order) {
    if (!order.empty() && std::all_of(order.begin(), order.end(), is_index))
        std::stable_sort(order.begin(), order.end(), [](const std::string &a, const std::string &b) {
            return index_value(a) < index_value(b);
        });
    return order;
}

std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

} // namespace

DatasetPaths DatasetPaths::bundle(const std::filesystem::path &dir) {
    DatasetPaths p;
    p.edges = dir / "edges.txt";
    p.labels = dir / "labels.txt";
    if (std::filesystem::exists(dir / "features.csv"))
        p.features = dir / "features.csv";
    if (std::filesystem::exists(dir / "classes.txt"))
        p.classes = dir / "classes.txt";
    return p;
}

namespace {

struct Sources {
    Source edges;
    std::optional<Source> features;
    Source labels;
    std::optional<Source> classes;
};

Dataset load_sources(const Sources &paths) {
    Dataset out;
    auto &report = out.report;

    // Node names in first-appearance order.
    std::vector<std::string> seen;
    std::unordered_map<std::string, std::size_t> seen_index;
    auto note = [&](const std::string &name) {
        if (seen_index.emplace(name, seen.size()).second)
            seen.push_back(name);
    };

    struct RawEdge {
        std::string u, v;
        double w;
    };
    std::vector<RawEdge> raw_edges;
    for (const auto &line : read_lines(paths.edges, false, report.skipped_lines)) {
        if (line.fields.size() < 2 || line.fields.size() > 3)
            throw ParseError(paths.edges.string(), line.number, "expected 'u v [w]'");
        const double w = line.fields.size() == 3 ? parse_double(line.fields[2], paths.edges, line.number) : 1.0;
        if (!(w > 0.0))
            throw ParseError(paths.edges.string(), line.number, "edge weight must be positive");
        note(line.fields[0]);
        note(line.fields[1]);
        if (line.fields[0] == line.fields[1]) {
            ++report.self_loops;
            report.warnings.push_back(paths.edges.string() + ":" + std::to_string(line.number) +
                                      ": self-loop on '" + line.fields[0] + "' dropped");
            continue;
        }
        raw_edges.push_back({line.fields[0], line.fields[1], w});
    }

    std::vector<Line> feature_lines;
    std::size_t d = 0;
    if (paths.features) {
        feature_lines = read_lines(*paths.features, true, report.skipped_lines);
        if (feature_lines.empty())
            throw ParseError(paths.features->string(), 1, "missing header 'node,f1,...'");
        d = feature_lines.front().fields.size() - 1;
        for (std::size_t i = 1; i < feature_lines.size(); ++i) {
            const auto &line = feature_lines[i];
            if (line.fields.size() != d + 1)
                throw ParseError(paths.features->string(), line.number,
                                 "expected " + std::to_string(d + 1) + " fields, found " +
                                     std::to_string(line.fields.size()));
            if (line.fields[0].empty())
                throw ParseError(paths.features->string(), line.number, "empty node name");
            note(line.fields[0]);
        }
    }

    const auto names = canonical_order(seen);
    std::unordered_map<std::string, NodeId> id;
    for (std::size_t i = 0; i < names.size(); ++i)
        id.emplace(names[i], static_cast<NodeId>(i));

    // Labels and classes.
    const auto label_lines = read_lines(paths.labels, false, report.skipped_lines);
    std::vector<std::string> classes;
    if (paths.classes) {
        for (const auto &line : read_lines(*paths.classes, false, report.skipped_lines)) {
            if (line.fields.size() != 1)
                throw ParseError(paths.classes->string(), line.number, "expected one class name");
            if (std::find(classes.begin(), classes.end(), line.fields[0]) != classes.end())
                throw ParseError(paths.classes->string(), line.number, "duplicate class '" + line.fields[0] + "'");
            classes.push_back(line.fields[0]);
        }
    } else {
        std::set<std::string> names_set;
        for (const auto &line : label_lines)
            if (line.fields.size() == 2)
                names_set.insert(line.fields[1]);
        classes = canonical_order({names_set.begin(), names_set.end()});
    }

    AttributedGraph g(names.size(), d, classes.size());
    for (std::size_t i = 0; i < names.size(); ++i)
        g.set_node_name(static_cast<NodeId>(i), names[i]);
    g.set_class_names(classes);

    std::map<std::pair<NodeId, NodeId>, double> directed;
    for (const auto &e : raw_edges) {
        auto [it, inserted] = directed.emplace(std::make_pair(id.at(e.u), id.at(e.v)), e.w);
        if (!inserted) {
            it->second += e.w;
            ++report.duplicate_edges;
        }
    }
    for (const auto &[key, w] : directed) {
        const auto [u, v] = key;
        const auto back = directed.find({v, u});
        if (back != directed.end()) {
            if (u > v)
                continue;
            ++report.symmetrized_pairs;
            g.add_edge(u, v, std::max(w, back->second));
        } else {
            g.add_edge(u, v, w);
        }
    }

    if (paths.features) {
        std::vector<char> has_row(names.size(), 0);
        std::vector<double> row(d);
        for (std::size_t i = 1; i < feature_lines.size(); ++i) {
            const auto &line = feature_lines[i];
            const NodeId v = id.at(line.fields[0]);
            if (has_row[v])
                throw ParseError(paths.features->string(), line.number,
                                 "second feature row for '" + line.fields[0] + "'");
            has_row[v] = 1;
            for (std::size_t c = 0; c < d; ++c)
                row[c] = parse_double(line.fields[c + 1], *paths.features, line.number);
            g.set_features(v, row);
        }
        for (std::size_t v = 0; v < names.size(); ++v)
            if (!has_row[v])
                throw Error(ErrorCode::alignment, "no feature row for node '" + names[v] + "'");
    }

    std::vector<char> labeled(names.size(), 0);
    for (const auto &line : label_lines) {
        if (line.fields.size() != 2)
            throw ParseError(paths.labels.string(), line.number, "expected 'node label'");
        const auto node = id.find(line.fields[0]);
        if (node == id.end())
            throw Error(ErrorCode::reference, paths.labels.string() + ":" + std::to_string(line.number) +
                                                  ": unknown node '" + line.fields[0] + "'");
        const auto cls = std::find(classes.begin(), classes.end(), line.fields[1]);
        if (cls == classes.end())
            throw Error(ErrorCode::reference, paths.labels.string() + ":" + std::to_string(line.number) +
                                                  ": unknown class '" + line.fields[1] + "'");
        const auto c = static_cast<ClassId>(cls - classes.begin());
        if (labeled[node->second] && g.label(node->second) != c)
            throw ParseError(paths.labels.string(), line.number, "conflicting label for '" + line.fields[0] + "'");
        labeled[node->second] = 1;
        g.set_label(node->second, c);
    }

    report.nodes = g.node_count();
    report.edges = g.edge_count();
    out.graph = std::move(g);
    return out;
}

} // namespace

Dataset load_dataset(const DatasetPaths &paths) {
    Sources src{open_file(paths.edges), std::nullopt, open_file(paths.labels), std::nullopt};
    if (paths.features)
        src.features = open_file(*paths.features);
    if (paths.classes)
        src.classes = open_file(*paths.classes);
    return load_sources(src);
}

Dataset load_dataset(const DatasetTexts &texts) {
    Sources src{open_text("edges", texts.edges), std::nullopt, open_text("labels", texts.labels), std::nullopt};
    if (texts.features)
        src.features = open_text("features", *texts.features);
    if (texts.classes)
        src.classes = open_text("classes", *texts.classes);
    return load_sources(src);
}

void save_dataset(const AttributedGraph &g, const std::filesystem::path &dir) {
    std::filesystem::create_directories(dir);
    auto open = [&](const char *name) {
        std::ofstream out(dir / name);
        if (!out)
            throw Error(ErrorCode::not_found, "cannot write " + (dir / name).string());
        return out;
    };
    auto name = [&](NodeId v) { return g.node_name(v).empty() ? std::to_string(v) : g.node_name(v); };
    const auto live = g.live_nodes();

    auto edges = open("edges.txt");
    for (NodeId u : live)
        for (const auto &nb : g.neighbors(u))
            if (u < nb.id)
                edges << name(u) << ' ' << name(nb.id) << ' ' << format_double(nb.weight) << '\n';

    auto features = open("features.csv");
    features << "node";
    for (std::size_t c = 0; c < g.feature_dim(); ++c)
        features << ",f" << c + 1;
    features << '\n';
    for (NodeId v : live) {
        features << name(v);
        for (double x : g.features(v))
            features << ',' << format_double(x);
        features << '\n';
    }

    auto labels = open("labels.txt");
    for (NodeId v : live)
        if (g.is_labeled(v))
            labels << name(v) << ' ' << g.class_names()[static_cast<std::size_t>(g.label(v))] << '\n';

    auto classes = open("classes.txt");
    for (const auto &c : g.class_names())
        classes << c << '\n';
}

} // namespace rsm
