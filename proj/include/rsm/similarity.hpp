#pragma once

#include <rsm/graph.hpp>
#include <rsm/matrix.hpp>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace rsm {

enum class KernelKind { rbf, polynomial, dot };

std::string_view to_string(KernelKind k) noexcept;
KernelKind parse_kernel(std::string_view s);

struct KernelSpec {
    KernelKind kind = KernelKind::rbf;
    double sigma = 0.3;  // rbf radius
    int degree = 2;      // polynomial
    double offset = 1.0; // polynomial

    /// Throws ErrorCode::parameter on sigma <= 0, degree < 1 or offset < 0.
    void validate() const;

    friend bool operator==(const KernelSpec &, const KernelSpec &) = default;
};

/// rbf: exp(-|x-z|^2 / (2 sigma^2)); polynomial: (x.z + c)^q; dot: x.z.
double similarity(const KernelSpec &spec, std::span<const double> x, std::span<const double> z);

/// Same kernel without argument checks, for inner loops that have already
/// validated the spec and the widths.
double similarity_unchecked(const KernelSpec &spec, std::span<const double> x, std::span<const double> z) noexcept;

struct SparseVector {
    std::vector<std::uint32_t> indices; // strictly increasing
    std::vector<double> values;
};

SparseVector to_sparse(std::span<const double> dense);

/// Kernel on sparse vectors. Only nonzero entries are touched: the shorter
/// operand is hashed and the longer one probes it.
double similarity_sparse(const KernelSpec &spec, const SparseVector &x, const SparseVector &z);

/// Per-class mean rows over `rows` (labels indexed by node id). k x d.
Matrix class_centroids(const Matrix &features, std::span<const NodeId> rows, std::span<const ClassId> labels,
                       std::size_t class_count);

/// Nearest-centroid decision: argmax_k S(centroid_k, z), lowest index on ties.
ClassId classify_centroid(const KernelSpec &spec, const Matrix &centroids, std::span<const double> z);

/// The grid searched for sigma when none is fixed.
std::span<const double> default_sigma_grid() noexcept;

} // namespace rsm
