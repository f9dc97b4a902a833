#include <rsm/error.hpp>
#include <rsm/similarity.hpp>

#include <array>
#include <limits>
#include <cmath>
#include <string>

namespace rsm {

std::string_view to_string(KernelKind k) noexcept {
    switch (k) {
    case KernelKind::rbf: return "rbf";
    case KernelKind::polynomial: return "polynomial";
    case KernelKind::dot: return "dot";
    }
    return "unknown";
}

KernelKind parse_kernel(std::string_view s) {
    if (s == "rbf")
        return KernelKind::rbf;
    if (s == "polynomial" || s == "poly")
        return KernelKind::polynomial;
    if (s == "dot" || s == "linear")
        return KernelKind::dot;
    throw Error(ErrorCode::parameter, "unknown kernel '" + std::string(s) + "'");
}

void KernelSpec::validate() const {
    if (kind == KernelKind::rbf && !(sigma > 0.0 && std::isfinite(sigma)))
        throw Error(ErrorCode::parameter, "rbf sigma must be positive, got " + std::to_string(sigma));
    if (kind == KernelKind::polynomial) {
        if (degree < 1)
            throw Error(ErrorCode::parameter, "polynomial degree must be at least 1");
        if (!(offset >= 0.0))
            throw Error(ErrorCode::parameter, "polynomial offset must be non-negative");
    }
}

double similarity_unchecked(const KernelSpec &spec, std::span<const double> x, std::span<const double> z) noexcept {
    switch (spec.kind) {
    case KernelKind::rbf: {
        double dist2 = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double diff = x[i] - z[i];
            dist2 += diff * diff;
        }
        return std::exp(-dist2 / (2.0 * spec.sigma * spec.sigma));
    }
    case KernelKind::polynomial: {
        double dot = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i)
            dot += x[i] * z[i];
        return std::pow(dot + spec.offset, spec.degree);
    }
    case KernelKind::dot: {
        double dot = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i)
            dot += x[i] * z[i];
        return dot;
    }
    }
    return 0.0;
}

double similarity(const KernelSpec &spec, std::span<const double> x, std::span<const double> z) {
    if (x.size() != z.size())
        throw Error(ErrorCode::dimension,
                    "vectors of length " + std::to_string(x.size()) + " and " + std::to_string(z.size()));
    spec.validate();
    return similarity_unchecked(spec, x, z);
}

SparseVector to_sparse(std::span<const double> dense) {
    SparseVector out;
    for (std::size_t i = 0; i < dense.size(); ++i)
        if (dense[i] != 0.0) {
            out.indices.push_back(static_cast<std::uint32_t>(i));
            out.values.push_back(dense[i]);
        }
    return out;
}

namespace {

void check_sparse(const SparseVector &v) {
    if (v.indices.size() != v.values.size())
        throw Error(ErrorCode::format, "sparse vector has mismatched index/value lengths");
    for (std::size_t i = 1; i < v.indices.size(); ++i)
        if (v.indices[i] <= v.indices[i - 1])
            throw Error(ErrorCode::format, "sparse indices must be strictly increasing");
}

/// Open-addressing table from index to position in the hashed operand.
/// Sized to a power of two at least twice the entry count, so probes stay short.
class IndexTable {
public:
    explicit IndexTable(const SparseVector &v) {
        std::size_t cap = 4;
        while (cap < 2 * v.indices.size())
            cap <<= 1;
        mask_ = cap - 1;
        slots_.assign(cap, kEmpty);
        for (std::uint32_t pos = 0; pos < v.indices.size(); ++pos) {
            std::size_t h = hash(v.indices[pos]);
            while (slots_[h] != kEmpty)
                h = (h + 1) & mask_;
            slots_[h] = pos;
        }
        keys_ = &v.indices;
    }

    /// Position of `index` in the hashed vector, or -1.
    long find(std::uint32_t index) const {
        std::size_t h = hash(index);
        while (slots_[h] != kEmpty) {
            if ((*keys_)[slots_[h]] == index)
                return static_cast<long>(slots_[h]);
            h = (h + 1) & mask_;
        }
        return -1;
    }

private:
    static constexpr std::uint32_t kEmpty = 0xffffffffu;
    std::size_t hash(std::uint32_t key) const { return (static_cast<std::size_t>(key) * 0x9E3779B1u) & mask_; }

    std::vector<std::uint32_t> slots_;
    const std::vector<std::uint32_t> *keys_ = nullptr;
    std::size_t mask_ = 0;
};

} // namespace

double similarity_sparse(const KernelSpec &spec, const SparseVector &x, const SparseVector &z) {
    check_sparse(x);
    check_sparse(z);
    spec.validate();
    const bool x_small = x.indices.size() <= z.indices.size();
    const SparseVector &small = x_small ? x : z;
    const SparseVector &large = x_small ? z : x;
    const IndexTable table(small);

    if (spec.kind == KernelKind::rbf) {
        std::vector<char> matched(small.indices.size(), 0);
        double dist2 = 0.0;
        for (std::size_t i = 0; i < large.indices.size(); ++i) {
            const long pos = table.find(large.indices[i]);
            double diff = large.values[i];
            if (pos >= 0) {
                diff -= small.values[static_cast<std::size_t>(pos)];
                matched[static_cast<std::size_t>(pos)] = 1;
            }
            dist2 += diff * diff;
        }
        for (std::size_t j = 0; j < small.indices.size(); ++j)
            if (!matched[j])
                dist2 += small.values[j] * small.values[j];
        return std::exp(-dist2 / (2.0 * spec.sigma * spec.sigma));
    }

    double dot = 0.0;
    for (std::size_t i = 0; i < large.indices.size(); ++i) {
        const long pos = table.find(large.indices[i]);
        if (pos >= 0)
            dot += large.values[i] * small.values[static_cast<std::size_t>(pos)];
    }
    if (spec.kind == KernelKind::polynomial)
        return std::pow(dot + spec.offset, spec.degree);
    return dot;
}

Matrix class_centroids(const Matrix &features, std::span<const NodeId> rows, std::span<const ClassId> labels,
                       std::size_t class_count) {
    Matrix centroids(class_count, features.cols());
    std::vector<std::size_t> counts(class_count, 0);
    for (NodeId r : rows) {
        const ClassId y = labels[r];
        if (y == kUnlabeled)
            continue;
        auto c = centroids.row(static_cast<std::size_t>(y));
        auto x = features.row(r);
        for (std::size_t j = 0; j < c.size(); ++j)
            c[j] += x[j];
        ++counts[static_cast<std::size_t>(y)];
    }
    for (std::size_t k = 0; k < class_count; ++k) {
        if (counts[k] == 0)
            throw Error(ErrorCode::missing_class, "class " + std::to_string(k) + " has no training rows");
        for (double &x : centroids.row(k))
            x /= static_cast<double>(counts[k]);
    }
    return centroids;
}

ClassId classify_centroid(const KernelSpec &spec, const Matrix &centroids, std::span<const double> z) {
    ClassId best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < centroids.rows(); ++k) {
        const double s = similarity(spec, centroids.row(k), z);
        if (s > best_score) {
            best_score = s;
            best = static_cast<ClassId>(k);
        }
    }
    return best;
}

std::span<const double> default_sigma_grid() noexcept {
    static constexpr std::array<double, 6> grid{0.05, 0.1, 0.2, 0.3, 0.5, 1.0};
    return grid;
}

} // namespace rsm
