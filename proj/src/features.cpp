#include <rsm/error.hpp>
#include <rsm/features.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace rsm {

std::string_view to_string(FeatureFamily f) noexcept {
    switch (f) {
    case FeatureFamily::raw: return "raw";
    case FeatureFamily::topology: return "topology";
    case FeatureFamily::relational_class: return "relational-class";
    case FeatureFamily::relational_attr: return "relational-attr";
    case FeatureFamily::meta: return "meta";
    }
    return "unknown";
}

std::string_view to_string(Normalization n) noexcept {
    switch (n) {
    case Normalization::none: return "none";
    case Normalization::minmax_column: return "minmax";
    case Normalization::l1_row: return "l1";
    }
    return "unknown";
}

std::string_view to_string(Aggregation a) noexcept {
    switch (a) {
    case Aggregation::mean: return "mean";
    case Aggregation::sum: return "sum";
    case Aggregation::max: return "max";
    }
    return "unknown";
}

Normalization parse_normalization(std::string_view s) {
    if (s == "none")
        return Normalization::none;
    if (s == "minmax")
        return Normalization::minmax_column;
    if (s == "l1")
        return Normalization::l1_row;
    throw Error(ErrorCode::parameter, "unknown normalization '" + std::string(s) + "'");
}

Aggregation parse_aggregation(std::string_view s) {
    if (s == "mean")
        return Aggregation::mean;
    if (s == "sum")
        return Aggregation::sum;
    if (s == "max")
        return Aggregation::max;
    throw Error(ErrorCode::parameter, "unknown aggregation '" + std::string(s) + "'");
}

FeatureMatrix::FeatureMatrix(Matrix values, std::vector<ColumnDescriptor> columns, Normalization state)
    : values_(std::move(values)), columns_(std::move(columns)), state_(state) {
    if (columns_.size() != values_.cols())
        throw Error(ErrorCode::dimension, "column descriptors do not match matrix width");
}

void FeatureMatrix::append(const FeatureMatrix &block) {
    if (block.rows() != rows())
        throw Error(ErrorCode::alignment, "feature block has " + std::to_string(block.rows()) + " rows, expected " +
                                              std::to_string(rows()));
    values_.append_columns(block.values_);
    columns_.insert(columns_.end(), block.columns_.begin(), block.columns_.end());
}

// -- normalization -----------------------------------------------------------

ColumnScaling fit_minmax(const Matrix &m, std::span<const NodeId> rows) {
    const std::size_t d = m.cols();
    ColumnScaling s;
    s.lo.assign(d, std::numeric_limits<double>::infinity());
    std::vector<double> hi(d, -std::numeric_limits<double>::infinity());
    for (NodeId r : rows) {
        auto row = m.row(r);
        for (std::size_t c = 0; c < d; ++c) {
            s.lo[c] = std::min(s.lo[c], row[c]);
            hi[c] = std::max(hi[c], row[c]);
        }
    }
    s.span.assign(d, 0.0);
    for (std::size_t c = 0; c < d; ++c) {
        if (rows.empty()) {
            s.lo[c] = 0.0;
            continue;
        }
        s.span[c] = hi[c] - s.lo[c];
    }
    return s;
}

void ColumnScaling::apply(std::span<double> row) const {
    for (std::size_t c = 0; c < row.size(); ++c)
        row[c] = span[c] > 0.0 ? (row[c] - lo[c]) / span[c] : 0.0;
}

void ColumnScaling::apply(Matrix &m, std::span<const NodeId> rows) const {
    if (lo.size() != m.cols())
        throw Error(ErrorCode::dimension, "scaling width does not match matrix width");
    for (NodeId r : rows)
        apply(m.row(r));
}

namespace {

void zero_inactive(Matrix &m, std::span<const NodeId> rows) {
    std::vector<char> active(m.rows(), 0);
    for (NodeId r : rows)
        active[r] = 1;
    for (std::size_t r = 0; r < m.rows(); ++r)
        if (!active[r]) {
            auto row = m.row(r);
            std::fill(row.begin(), row.end(), 0.0);
        }
}

std::vector<NodeId> all_rows(std::size_t n) {
    std::vector<NodeId> rows(n);
    std::iota(rows.begin(), rows.end(), NodeId{0});
    return rows;
}

} // namespace

void normalize_rows(FeatureMatrix &f, Normalization scheme, std::span<const NodeId> rows) {
    auto &m = f.values();
    switch (scheme) {
    case Normalization::none:
        break;
    case Normalization::minmax_column: {
        const auto scaling = fit_minmax(m, rows);
        scaling.apply(m, rows);
        zero_inactive(m, rows);
        break;
    }
    case Normalization::l1_row:
        for (NodeId r : rows) {
            auto row = m.row(r);
            double total = 0.0;
            for (double x : row)
                total += std::abs(x);
            if (total > 0.0)
                for (double &x : row)
                    x /= total;
        }
        zero_inactive(m, rows);
        break;
    }
    f.set_normalization(scheme);
}

FeatureMatrix normalize(FeatureMatrix f, Normalization scheme) {
    const auto rows = all_rows(f.rows());
    normalize_rows(f, scheme, rows);
    return f;
}

// -- relational features -----------------------------------------------------

namespace {

class Aggregator {
public:
    Aggregator(Aggregation agg, std::size_t width) : agg_(agg), acc_(width) {}

    void reset() {
        std::fill(acc_.begin(), acc_.end(), agg_ == Aggregation::max ? -std::numeric_limits<double>::infinity() : 0.0);
        count_ = 0;
    }
    void add(std::span<const double> x) {
        for (std::size_t c = 0; c < acc_.size(); ++c)
            acc_[c] = agg_ == Aggregation::max ? std::max(acc_[c], x[c]) : acc_[c] + x[c];
        ++count_;
    }
    void write(std::span<double> out) const {
        for (std::size_t c = 0; c < acc_.size(); ++c) {
            if (count_ == 0)
                out[c] = 0.0;
            else if (agg_ == Aggregation::mean)
                out[c] = acc_[c] / static_cast<double>(count_);
            else
                out[c] = acc_[c];
        }
    }

private:
    Aggregation agg_;
    std::vector<double> acc_;
    std::size_t count_ = 0;
};

} // namespace

FeatureMatrix relational_class_features(const AttributedGraph &g, const NodePartition &part, const Matrix &estimates,
                                        int hops, Aggregation agg) {
    const std::size_t k = g.class_count();
    if (estimates.cols() != k || estimates.rows() < g.capacity())
        throw Error(ErrorCode::alignment, "estimate matrix must be capacity x k");
    std::vector<ColumnDescriptor> cols;
    for (std::size_t c = 0; c < k; ++c)
        cols.push_back({"nbr_class_" + std::to_string(c), FeatureFamily::relational_class});
    for (std::size_t c = 0; c < k; ++c)
        cols.push_back({"nbr_label_count_" + std::to_string(c), FeatureFamily::relational_class});

    Matrix m(g.capacity(), 2 * k);
    BallFinder finder(g);
    Aggregator acc(agg, k);
    std::vector<double> onehot(k, 0.0);
    for (NodeId v = 0; v < g.capacity(); ++v) {
        if (!g.alive(v))
            continue;
        acc.reset();
        auto row = m.row(v);
        for (NodeId u : finder.find(v, hops)) {
            const ClassId y = part.label(u);
            if (y != kUnlabeled) {
                std::fill(onehot.begin(), onehot.end(), 0.0);
                onehot[static_cast<std::size_t>(y)] = 1.0;
                acc.add(onehot);
                row[k + static_cast<std::size_t>(y)] += 1.0;
            } else {
                acc.add(estimates.row(u));
            }
        }
        acc.write(row.subspan(0, k));
    }
    return FeatureMatrix(std::move(m), std::move(cols));
}

FeatureMatrix relational_attr_features(const AttributedGraph &g, int hops, Aggregation agg) {
    const std::size_t d = g.feature_dim();
    std::vector<ColumnDescriptor> cols;
    for (std::size_t c = 0; c < d; ++c)
        cols.push_back({"nbr_attr_" + std::to_string(c), FeatureFamily::relational_attr});
    Matrix m(g.capacity(), d);
    if (d == 0)
        return FeatureMatrix(std::move(m), std::move(cols));
    BallFinder finder(g);
    Aggregator acc(agg, d);
    for (NodeId v = 0; v < g.capacity(); ++v) {
        if (!g.alive(v))
            continue;
        acc.reset();
        for (NodeId u : finder.find(v, hops))
            acc.add(g.features(u));
        acc.write(m.row(v));
    }
    return FeatureMatrix(std::move(m), std::move(cols));
}

// -- meta features -------------------------------------------------------------

FeatureMatrix append_meta_features(FeatureMatrix f, const MetaBlocks &blocks, unsigned which,
                                   std::span<const NodeId> rows) {
    if (which == meta_none)
        return f;
    auto add_block = [&](const Matrix *block, const char *prefix) {
        if (block == nullptr)
            throw Error(ErrorCode::parameter, std::string("meta block '") + prefix + "' requested but not supplied");
        if (block->rows() != f.rows())
            throw Error(ErrorCode::alignment, std::string("meta block '") + prefix + "' is not row-aligned");
        std::vector<ColumnDescriptor> cols;
        for (std::size_t c = 0; c < block->cols(); ++c)
            cols.push_back({std::string(prefix) + std::to_string(c), FeatureFamily::meta});
        f.append(FeatureMatrix(*block, std::move(cols)));
    };
    if (which & meta_estimates)
        add_block(blocks.estimates, "meta_p_");
    if (which & meta_relational_weights)
        add_block(blocks.relational_weights, "meta_wr_");
    if (which & meta_iid_weights)
        add_block(blocks.iid_weights, "meta_wi_");
    if (which & meta_certainty) {
        if (blocks.certainty.size() != f.rows())
            throw Error(ErrorCode::alignment, "certainty vector is not row-aligned");
        Matrix c(f.rows(), 1);
        for (std::size_t r = 0; r < f.rows(); ++r)
            c(r, 0) = blocks.certainty[r];
        f.append(FeatureMatrix(std::move(c), {{"meta_certainty", FeatureFamily::meta}}));
    }
    normalize_rows(f, f.normalization(), rows);
    return f;
}

FeatureMatrix append_meta_features(FeatureMatrix f, const MetaBlocks &blocks, unsigned which) {
    const auto rows = all_rows(f.rows());
    return append_meta_features(std::move(f), blocks, which, rows);
}

} // namespace rsm
