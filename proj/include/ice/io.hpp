#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <system_error>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "ice/dataset.hpp"
#include "ice/ensemble.hpp"
#include "ice/error.hpp"
#include "ice/tree.hpp"

namespace ice {

// ---------------------------------------------------------------------------
// small shared helpers
// ---------------------------------------------------------------------------

namespace detail {

// Shortest decimal that parses back to the same double.
inline std::string render_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string trim(const std::string& s) {
    std::size_t begin = 0, end = s.size();
    while (begin < end && (s[begin] == ' ' || s[begin] == '\t' || s[begin] == '\r'))
        ++begin;
    while (end > begin && (s[end - 1] == ' ' || s[end - 1] == '\t' || s[end - 1] == '\r'))
        --end;
    return s.substr(begin, end - begin);
}

inline std::vector<std::string> split_line(const std::string& line, char delimiter) {
    std::vector<std::string> cells;
    std::string cell;
    for (char ch : line) {
        if (ch == delimiter) {
            cells.push_back(trim(cell));
            cell.clear();
        } else {
            cell.push_back(ch);
        }
    }
    cells.push_back(trim(cell));
    return cells;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require_input(in.good(), "cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    require_input(out.good(), "cannot open file for writing: " + path);
    out << content;
    require_input(out.good(), "failed writing file: " + path);
}

} // namespace detail

/// FNV-1a over the sample count, feature names, and the raw IEEE-754 bits of
/// every feature value. Ties a serialized tree to the exact dataset it was
/// built from.
inline std::uint64_t dataset_fingerprint(const Dataset& ds) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    const auto feed = [&h](const void* data, std::size_t len) {
        const auto* bytes = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < len; ++i) {
            h ^= bytes[i];
            h *= 0x100000001b3ULL;
        }
    };
    const std::uint64_t n = ds.n(), m = ds.m();
    feed(&n, sizeof n);
    feed(&m, sizeof m);
    for (const auto& name : ds.feature_names()) feed(name.data(), name.size() + 1);
    feed(ds.raw_values().data(), ds.raw_values().size() * sizeof(double));
    return h;
}

inline std::string fingerprint_hex(const Dataset& ds) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(dataset_fingerprint(ds)));
    return buf;
}

// ---------------------------------------------------------------------------
// dataset files: delimited text, mandatory header, optional label column
// ---------------------------------------------------------------------------

struct DataFileSpec {
    std::string path;
    std::optional<std::string> label_column;
    char delimiter = ',';
    std::set<std::string> missing_markers = {"", "?", "NA"};
};

struct LoadedDataset {
    Dataset dataset;
    std::size_t dropped_rows = 0; // rows discarded for carrying a missing marker
};

inline LoadedDataset load_dataset(const DataFileSpec& spec) {
    const std::string content = detail::read_file(spec.path);
    std::istringstream in(content);
    std::string line;
    detail::require_input(static_cast<bool>(std::getline(in, line)),
                          spec.path + ": empty file");
    const auto header = detail::split_line(line, spec.delimiter);
    {
        std::set<std::string> seen;
        for (const auto& name : header)
            detail::require_input(seen.insert(name).second,
                                  spec.path + ": duplicate column name '" + name + "'");
    }

    std::size_t label_index = header.size();
    if (spec.label_column) {
        for (std::size_t j = 0; j < header.size(); ++j)
            if (header[j] == *spec.label_column) label_index = j;
        detail::require_input(label_index < header.size(),
                              spec.path + ": no column named '" + *spec.label_column + "'");
    }

    std::vector<std::string> feature_names;
    for (std::size_t j = 0; j < header.size(); ++j)
        if (j != label_index) feature_names.push_back(header[j]);
    detail::require_input(!feature_names.empty(), spec.path + ": no feature columns");

    std::vector<std::vector<double>> columns(feature_names.size());
    std::vector<std::string> raw_labels;
    std::size_t dropped = 0;
    std::size_t row_number = 1; // header was row 1
    while (std::getline(in, line)) {
        ++row_number;
        if (detail::trim(line).empty()) continue;
        const auto cells = detail::split_line(line, spec.delimiter);
        detail::require_input(cells.size() == header.size(),
                              spec.path + ": row " + std::to_string(row_number) + " has " +
                                  std::to_string(cells.size()) + " cells, expected " +
                                  std::to_string(header.size()));
        bool missing = false;
        for (const auto& cell : cells)
            if (spec.missing_markers.count(cell)) { missing = true; break; }
        if (missing) {
            ++dropped;
            continue;
        }
        std::size_t out_col = 0;
        for (std::size_t j = 0; j < cells.size(); ++j) {
            if (j == label_index) {
                raw_labels.push_back(cells[j]);
                continue;
            }
            double value = 0.0;
            const auto& cell = cells[j];
            const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), value);
            detail::require_input(res.ec == std::errc() && res.ptr == cell.data() + cell.size(),
                                  spec.path + ": row " + std::to_string(row_number) +
                                      ", column '" + header[j] + "': cannot parse '" + cell +
                                      "' as a number");
            detail::require_input(std::isfinite(value),
                                  spec.path + ": row " + std::to_string(row_number) +
                                      ", column '" + header[j] + "': non-finite value");
            columns[out_col++].push_back(value);
        }
    }
    const std::size_t n = columns.front().size();
    detail::require_input(n > 0, spec.path + ": empty dataset (no usable rows)");

    std::vector<double> values;
    values.reserve(n * columns.size());
    for (auto& col : columns) values.insert(values.end(), col.begin(), col.end());

    std::vector<std::int32_t> labels;
    std::vector<std::string> label_names;
    if (spec.label_column) {
        labels.reserve(n);
        for (const auto& raw : raw_labels) {
            std::size_t id = label_names.size();
            for (std::size_t c = 0; c < label_names.size(); ++c)
                if (label_names[c] == raw) { id = c; break; }
            if (id == label_names.size()) label_names.push_back(raw);
            labels.push_back(static_cast<std::int32_t>(id));
        }
    }

    return LoadedDataset{Dataset(std::move(feature_names), std::move(values), n,
                                 std::move(labels), std::move(label_names)),
                         dropped};
}

inline void save_dataset(const Dataset& ds, const std::string& path, char delimiter = ',') {
    std::ostringstream out;
    for (std::size_t j = 0; j < ds.m(); ++j) {
        if (j) out << delimiter;
        out << ds.feature_names()[j];
    }
    if (ds.has_labels()) out << delimiter << "label";
    out << '\n';
    for (std::size_t i = 0; i < ds.n(); ++i) {
        for (std::size_t j = 0; j < ds.m(); ++j) {
            if (j) out << delimiter;
            out << detail::render_double(ds.value(i, j));
        }
        if (ds.has_labels())
            out << delimiter << ds.label_names()[static_cast<std::size_t>(ds.labels()[i])];
        out << '\n';
    }
    detail::write_file(path, out.str());
}

// ---------------------------------------------------------------------------
// ensemble files: one header line, then n rows x c columns of labels
// ---------------------------------------------------------------------------

struct EnsembleFile {
    Ensemble ensemble;
    std::string metadata; // free-form key=value tail of the header line
};

inline void save_ensemble(const Ensemble& ensemble, const std::string& path,
                          const std::string& metadata = "") {
    std::ostringstream out;
    out << "#ice-ensemble c=" << ensemble.c() << " n=" << ensemble.n();
    if (!metadata.empty()) out << ' ' << metadata;
    out << '\n';
    for (std::size_t i = 0; i < ensemble.n(); ++i) {
        for (std::size_t t = 0; t < ensemble.c(); ++t) {
            if (t) out << ',';
            out << ensemble.partition(t)[i];
        }
        out << '\n';
    }
    detail::write_file(path, out.str());
}

inline EnsembleFile load_ensemble(const std::string& path,
                                  std::optional<std::size_t> expected_n = std::nullopt) {
    const std::string content = detail::read_file(path);
    std::istringstream in(content);
    std::string line;
    detail::require_input(static_cast<bool>(std::getline(in, line)) &&
                              line.rfind("#ice-ensemble", 0) == 0,
                          path + ": missing #ice-ensemble header");
    std::size_t c = 0, n = 0;
    std::string metadata;
    {
        const auto parse_count = [&](const std::string& text) {
            std::size_t value = 0;
            const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
            detail::require_input(res.ec == std::errc() &&
                                      res.ptr == text.data() + text.size(),
                                  path + ": bad count '" + text + "' in header");
            return value;
        };
        std::istringstream head(line.substr(std::string("#ice-ensemble").size()));
        std::string token;
        while (head >> token) {
            if (token.rfind("c=", 0) == 0) c = parse_count(token.substr(2));
            else if (token.rfind("n=", 0) == 0) n = parse_count(token.substr(2));
            else metadata += (metadata.empty() ? "" : " ") + token;
        }
    }
    detail::require_input(c >= 1 && n >= 1, path + ": header must carry c and n");

    std::vector<std::vector<std::int32_t>> partitions(c);
    for (auto& p : partitions) p.reserve(n);
    std::size_t rows = 0;
    std::size_t row_number = 1;
    while (std::getline(in, line)) {
        ++row_number;
        if (detail::trim(line).empty()) continue;
        const auto cells = detail::split_line(line, ',');
        detail::require_input(cells.size() == c,
                              path + ": row " + std::to_string(row_number) + " has " +
                                  std::to_string(cells.size()) + " columns, expected " +
                                  std::to_string(c));
        for (std::size_t t = 0; t < c; ++t) {
            std::int32_t label = 0;
            const auto& cell = cells[t];
            const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), label);
            detail::require_input(res.ec == std::errc() && res.ptr == cell.data() + cell.size(),
                                  path + ": row " + std::to_string(row_number) +
                                      ": cannot parse '" + cell + "' as an integer label");
            partitions[t].push_back(label);
        }
        ++rows;
    }
    detail::require_input(rows == n, path + ": expected " + std::to_string(n) +
                                         " rows, found " + std::to_string(rows));
    if (expected_n)
        detail::require_input(rows == *expected_n,
                              path + ": ensemble has " + std::to_string(rows) +
                                  " rows but the dataset has " + std::to_string(*expected_n));
    return EnsembleFile{Ensemble(std::move(partitions)), metadata};
}

// ---------------------------------------------------------------------------
// tree documents: versioned JSON, plus dot / text renderings
// ---------------------------------------------------------------------------

struct TreeDocumentNode {
    std::int32_t id = -1;
    std::int32_t depth = 0;
    std::int32_t count = 0;
    bool leaf = true;
    // internal-node fields
    std::int32_t feature = -1;
    std::string feature_name;
    double threshold = 0.0;
    double statistic = 0.0;
    std::int64_t dof = 0;
    double log_p = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    // leaf field
    std::int32_t cluster = -1;
};

struct TreeDocument {
    int version = 1;
    std::size_t n = 0;
    std::size_t m = 0;
    std::vector<std::string> feature_names;
    std::string content_hash;
    std::size_t k_target = 1;
    std::size_t min_side = 5;
    bool early_stop = false;
    std::size_t leaves = 0;
    std::string provenance; // free-form build context (seeds, bases file, ...)
    std::vector<TreeDocumentNode> nodes;
    std::vector<ExpansionRecord> trace;
};

inline TreeDocument make_document(const Tree& tree, const Dataset& ds,
                                  std::size_t min_side = 5,
                                  std::string provenance = "") {
    TreeDocument doc;
    doc.n = ds.n();
    doc.m = ds.m();
    doc.feature_names = ds.feature_names();
    doc.content_hash = fingerprint_hex(ds);
    doc.k_target = tree.k_target();
    doc.min_side = min_side;
    doc.early_stop = tree.early_stop();
    doc.leaves = tree.leaf_count();
    doc.provenance = std::move(provenance);
    doc.nodes.reserve(tree.node_count());
    for (std::size_t i = 0; i < tree.node_count(); ++i) {
        const auto& node = tree.node(static_cast<std::int32_t>(i));
        TreeDocumentNode out;
        out.id = node.id;
        out.depth = node.depth;
        out.count = static_cast<std::int32_t>(node.subset.size());
        out.leaf = node.is_leaf();
        if (node.is_leaf()) {
            out.cluster = node.leaf_cluster;
        } else {
            out.feature = node.split->feature;
            out.feature_name = ds.feature_names()[static_cast<std::size_t>(node.split->feature)];
            out.threshold = node.split->threshold;
            out.statistic = node.split->statistic;
            out.dof = node.split->dof;
            out.log_p = node.split->log_p;
            out.left = node.left;
            out.right = node.right;
        }
        doc.nodes.push_back(std::move(out));
    }
    doc.trace = tree.expansion_trace();
    return doc;
}

inline std::string document_to_json(const TreeDocument& doc) {
    nlohmann::ordered_json j;
    j["format"] = "ice-tree";
    j["version"] = doc.version;
    j["dataset"] = {{"n", doc.n},
                    {"m", doc.m},
                    {"feature_names", doc.feature_names},
                    {"content_hash", doc.content_hash}};
    j["build"] = {{"k_target", doc.k_target},
                  {"min_side", doc.min_side},
                  {"early_stop", doc.early_stop},
                  {"leaves", doc.leaves},
                  {"provenance", doc.provenance}};
    j["nodes"] = nlohmann::ordered_json::array();
    for (const auto& node : doc.nodes) {
        nlohmann::ordered_json nj;
        nj["id"] = node.id;
        nj["depth"] = node.depth;
        nj["count"] = node.count;
        if (node.leaf) {
            nj["kind"] = "leaf";
            nj["cluster"] = node.cluster;
        } else {
            nj["kind"] = "internal";
            nj["feature"] = node.feature;
            nj["feature_name"] = node.feature_name;
            nj["threshold"] = node.threshold;
            nj["statistic"] = node.statistic;
            nj["dof"] = node.dof;
            nj["log_p"] = node.log_p;
            nj["left"] = node.left;
            nj["right"] = node.right;
        }
        j["nodes"].push_back(std::move(nj));
    }
    j["trace"] = nlohmann::ordered_json::array();
    for (const auto& rec : doc.trace)
        j["trace"].push_back({{"node", rec.node_id},
                              {"feature", rec.feature},
                              {"threshold", rec.threshold},
                              {"statistic", rec.statistic},
                              {"dof", rec.dof},
                              {"log_p", rec.log_p}});
    return j.dump(2) + "\n";
}

inline TreeDocument document_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw input_error(std::string("tree document: invalid JSON: ") + e.what());
    }
    try {
        detail::require_input(j.at("format") == "ice-tree", "tree document: wrong format tag");
        TreeDocument doc;
        doc.version = j.at("version").get<int>();
        detail::require_input(doc.version == 1, "tree document: unsupported version");
        const auto& dsj = j.at("dataset");
        doc.n = dsj.at("n").get<std::size_t>();
        doc.m = dsj.at("m").get<std::size_t>();
        doc.feature_names = dsj.at("feature_names").get<std::vector<std::string>>();
        doc.content_hash = dsj.at("content_hash").get<std::string>();
        const auto& bj = j.at("build");
        doc.k_target = bj.at("k_target").get<std::size_t>();
        doc.min_side = bj.at("min_side").get<std::size_t>();
        doc.early_stop = bj.at("early_stop").get<bool>();
        doc.leaves = bj.at("leaves").get<std::size_t>();
        doc.provenance = bj.value("provenance", std::string());
        for (const auto& nj : j.at("nodes")) {
            TreeDocumentNode node;
            node.id = nj.at("id").get<std::int32_t>();
            node.depth = nj.at("depth").get<std::int32_t>();
            node.count = nj.at("count").get<std::int32_t>();
            node.leaf = nj.at("kind") == "leaf";
            if (node.leaf) {
                node.cluster = nj.at("cluster").get<std::int32_t>();
            } else {
                node.feature = nj.at("feature").get<std::int32_t>();
                node.feature_name = nj.at("feature_name").get<std::string>();
                node.threshold = nj.at("threshold").get<double>();
                node.statistic = nj.at("statistic").get<double>();
                node.dof = nj.at("dof").get<std::int64_t>();
                node.log_p = nj.at("log_p").get<double>();
                node.left = nj.at("left").get<std::int32_t>();
                node.right = nj.at("right").get<std::int32_t>();
            }
            doc.nodes.push_back(std::move(node));
        }
        for (const auto& tj : j.at("trace")) {
            ExpansionRecord rec;
            rec.node_id = tj.at("node").get<std::int32_t>();
            rec.feature = tj.at("feature").get<std::int32_t>();
            rec.threshold = tj.at("threshold").get<double>();
            rec.statistic = tj.at("statistic").get<double>();
            rec.dof = tj.at("dof").get<std::int64_t>();
            rec.log_p = tj.at("log_p").get<double>();
            doc.trace.push_back(rec);
        }
        return doc;
    } catch (const nlohmann::json::exception& e) {
        throw input_error(std::string("tree document: missing or mistyped field: ") + e.what());
    }
}

/// Rebuilds a full Tree from a document by routing the dataset's samples
/// through the stored predicates. Rejects any dataset whose shape, feature
/// names, or content hash differ from the one the tree was built on.
inline Tree instantiate(const TreeDocument& doc, const Dataset& ds) {
    detail::require_input(doc.n == ds.n() && doc.m == ds.m() &&
                              doc.feature_names == ds.feature_names() &&
                              doc.content_hash == fingerprint_hex(ds),
                          "tree document: dataset fingerprint mismatch");
    detail::require_input(!doc.nodes.empty(), "tree document: no nodes");

    std::vector<TreeNode> nodes(doc.nodes.size());
    for (const auto& dn : doc.nodes) {
        detail::require_input(dn.id >= 0 &&
                                  static_cast<std::size_t>(dn.id) < nodes.size() &&
                                  nodes[static_cast<std::size_t>(dn.id)].id < 0,
                              "tree document: node ids must be dense and unique");
        auto& node = nodes[static_cast<std::size_t>(dn.id)];
        node.id = dn.id;
        node.depth = dn.depth;
        if (dn.leaf) {
            node.leaf_cluster = dn.cluster;
        } else {
            detail::require_input(dn.feature >= 0 &&
                                      static_cast<std::size_t>(dn.feature) < ds.m(),
                                  "tree document: feature index out of range");
            node.split = CandidateSplit{dn.feature, dn.threshold, dn.statistic,
                                        dn.dof, dn.log_p};
            node.left = dn.left;
            node.right = dn.right;
        }
    }

    std::vector<std::int32_t> stored_counts(nodes.size(), -1);
    for (const auto& dn : doc.nodes)
        stored_counts[static_cast<std::size_t>(dn.id)] = dn.count;

    // every node except the root must be referenced as a child exactly once
    std::vector<int> referenced(nodes.size(), 0);
    for (const auto& node : nodes) {
        if (node.is_leaf()) continue;
        detail::require_input(node.left > node.id && node.right > node.id &&
                                  node.left != node.right &&
                                  static_cast<std::size_t>(node.left) < nodes.size() &&
                                  static_cast<std::size_t>(node.right) < nodes.size(),
                              "tree document: child ids must follow their parent");
        ++referenced[static_cast<std::size_t>(node.left)];
        ++referenced[static_cast<std::size_t>(node.right)];
    }
    detail::require_input(referenced[0] == 0, "tree document: root cannot be a child");
    for (std::size_t i = 1; i < nodes.size(); ++i)
        detail::require_input(referenced[i] == 1,
                              "tree document: every non-root node needs exactly one parent");

    nodes.front().subset = NodeSubset::full(ds.n());
    for (auto& node : nodes) {
        if (node.is_leaf()) continue;
        auto [left, right] = apply_split(ds, node.subset,
                                         static_cast<std::size_t>(node.split->feature),
                                         node.split->threshold);
        nodes[static_cast<std::size_t>(node.left)].subset = std::move(left);
        nodes[static_cast<std::size_t>(node.right)].subset = std::move(right);
    }
    for (std::size_t i = 0; i < nodes.size(); ++i)
        detail::require_input(nodes[i].subset.size() ==
                                  static_cast<std::size_t>(stored_counts[i]),
                              "tree document: stored sample counts disagree with routing");

    try {
        return Tree(std::move(nodes), doc.k_target, doc.early_stop, doc.trace);
    } catch (const contract_error& e) {
        // structural breakage in a loaded document is the caller's input problem
        throw input_error(std::string("tree document: ") + e.what());
    }
}

enum class TreeFormat { structured, dot, text };

inline std::string to_dot(const TreeDocument& doc) {
    std::ostringstream out;
    out << "digraph ice_tree {\n"
        << "  node [shape=box, style=rounded];\n";
    for (const auto& node : doc.nodes) {
        if (node.leaf)
            out << "  n" << node.id << " [label=\"cluster " << node.cluster
                << "\\n#samples=" << node.count << "\", style=\"rounded,filled\","
                << " fillcolor=lightgray];\n";
        else
            out << "  n" << node.id << " [label=\"" << node.feature_name << " ≤ "
                << detail::render_double(node.threshold) << "\"];\n";
    }
    for (const auto& node : doc.nodes)
        if (!node.leaf)
            out << "  n" << node.id << " -> n" << node.left << " [label=\"yes\"];\n"
                << "  n" << node.id << " -> n" << node.right << " [label=\"no\"];\n";
    out << "}\n";
    return out.str();
}

inline std::string to_text(const TreeDocument& doc) {
    std::ostringstream out;
    const std::function<void(std::int32_t, int)> walk = [&](std::int32_t id, int indent) {
        const auto& node = doc.nodes[static_cast<std::size_t>(id)];
        out << std::string(static_cast<std::size_t>(indent) * 2, ' ');
        if (node.leaf) {
            out << "leaf cluster=" << node.cluster << " n=" << node.count << "\n";
        } else {
            out << node.feature_name << " ≤ " << detail::render_double(node.threshold)
                << "  [stat=" << detail::render_double(node.statistic)
                << " dof=" << node.dof
                << " log_p=" << detail::render_double(node.log_p) << "]\n";
            walk(node.left, indent + 1);
            walk(node.right, indent + 1);
        }
    };
    walk(0, 0);
    return out.str();
}

/// One-stop exporter over an already-built document.
inline std::string export_tree(const TreeDocument& doc, TreeFormat format) {
    switch (format) {
        case TreeFormat::structured: return document_to_json(doc);
        case TreeFormat::dot: return to_dot(doc);
        case TreeFormat::text: return to_text(doc);
    }
    throw input_error("export_tree: unknown format");
}

} // namespace ice
