#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "likewatch/datastore.hpp"

namespace lw::analysis {

using Id = std::uint64_t;

// Sparse binary tweet x user matrix. Rows are tweets (ascending tweet_id),
// columns are users (ascending user_id). Every column has at least one
// nonzero: users only enter through observed liker lists.
struct LikeMatrix {
  std::size_t n = 0;  // tweets
  std::size_t m = 0;  // users
  std::vector<Id> row_ids;
  std::vector<Id> col_ids;
  std::vector<std::vector<std::uint32_t>> cols;  // sorted row indices per column

  std::size_t col_size(std::size_t j) const { return cols[j].size(); }
};

LikeMatrix build_matrix(const data::Dataset& dataset);

// Bins are sets of column indices with identical like profiles.
struct BinList {
  std::vector<std::vector<std::uint32_t>> bins;  // discovery order

  // size-descending canonical order for reporting, ties by smallest member
  std::vector<std::size_t> report_order() const;
};

// Hash-based exact-profile partition (near-linear).
BinList bin_users(const LikeMatrix& matrix);

// Literal sequential procedure: compare against one user per existing bin,
// larger bins first, first perfect match wins, new bins appended at the end.
// Oracle for bin_users; quadratic, intended for m up to a few thousand.
BinList bin_users_naive(const LikeMatrix& matrix);

enum class Measure { cosine, jaccard, hamming };

double similarity(const LikeMatrix& matrix, std::size_t i, std::size_t j, Measure measure);

// P(B) = c^(|B|-1): the charitable probability that a bin of identical
// profiles arose without coordination.
double coordination_probability(std::uint64_t bin_size, double c);

struct HistogramRow {
  std::uint64_t size;
  std::uint64_t bin_count;
  std::uint64_t user_count;  // size * bin_count
};

std::vector<HistogramRow> bin_size_histogram(const BinList& bins, std::uint64_t min_size);

struct CorrelationMatrix {
  std::vector<std::size_t> included;  // column indices kept
  std::vector<std::size_t> excluded;  // zero-variance columns
  std::size_t dim = 0;
  std::vector<double> values;  // dim x dim, row-major

  double at(std::size_t a, std::size_t b) const { return values[a * dim + b]; }
};

// Dense m x m Pearson correlation of binary columns; small m only.
CorrelationMatrix correlation_matrix(const LikeMatrix& matrix, std::size_t dense_cap = 2000);

struct Embedding {
  // per included user: coordinates lambda_k * u_k(i) for k = 1,2
  std::vector<std::size_t> included;  // column indices, aligned with xs/ys
  std::vector<double> xs, ys;
  std::vector<std::size_t> excluded;   // zero-variance columns
  double eigenvalues[2] = {0, 0};
  int iterations = 0;
};

// Top-2 eigenpairs of the user-user correlation matrix, computed matrix-free
// from the column-standardized like matrix by block orthogonal iteration.
Embedding svd_embed(const LikeMatrix& matrix, double residual_tol = 1e-10,
                    int max_iterations = 10000);

// ---- file outputs ----------------------------------------------------

void write_bins_csv(const LikeMatrix& matrix, const BinList& bins, double c,
                    const std::filesystem::path& path);
void write_histogram_csv(const std::vector<HistogramRow>& rows,
                         const std::filesystem::path& path);
void write_embedding_csv(const LikeMatrix& matrix, const BinList& bins,
                         const Embedding& emb, const std::filesystem::path& path);
void write_embedding_svg(const LikeMatrix& matrix, const BinList& bins,
                         const Embedding& emb, const std::filesystem::path& path);

}  // namespace lw::analysis
