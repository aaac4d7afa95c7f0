#include "likewatch/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <unordered_map>

#include "likewatch/errors.hpp"
#include "likewatch/fsutil.hpp"

namespace lw::analysis {

namespace fs = std::filesystem;

// ------------------------------------------------------------------ matrix

LikeMatrix build_matrix(const data::Dataset& dataset) {
  LikeMatrix mx;
  for (const auto& [id, t] : dataset.tweets) mx.row_ids.push_back(id);  // ascending
  std::unordered_map<Id, std::uint32_t> row_of;
  for (std::uint32_t i = 0; i < mx.row_ids.size(); ++i) row_of[mx.row_ids[i]] = i;

  std::map<Id, std::vector<std::uint32_t>> by_user;
  for (const auto& [id, t] : dataset.tweets)
    for (const auto& l : t.likers) by_user[l.user_id].push_back(row_of[id]);

  if (by_user.empty()) throw NumericError("empty dataset: no liking users observed");

  mx.n = mx.row_ids.size();
  for (auto& [user, rows] : by_user) {
    std::sort(rows.begin(), rows.end());
    mx.col_ids.push_back(user);
    mx.cols.push_back(std::move(rows));
  }
  mx.m = mx.col_ids.size();
  return mx;
}

// ----------------------------------------------------------------- binning

std::vector<std::size_t> BinList::report_order() const {
  std::vector<std::size_t> order(bins.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (bins[a].size() != bins[b].size()) return bins[a].size() > bins[b].size();
    return bins[a].front() < bins[b].front();
  });
  return order;
}

namespace {

std::uint64_t profile_hash(const std::vector<std::uint32_t>& rows) {
  std::uint64_t h = 14695981039346656037ull;
  for (std::uint32_t r : rows) {
    h ^= r;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

BinList bin_users(const LikeMatrix& matrix) {
  BinList out;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> by_hash;
  for (std::uint32_t j = 0; j < matrix.m; ++j) {
    const auto& col = matrix.cols[j];
    std::uint64_t h = profile_hash(col);
    auto& candidates = by_hash[h];
    bool placed = false;
    for (std::size_t b : candidates) {
      // hash collision guard: confirm full equality with a representative
      if (matrix.cols[out.bins[b].front()] == col) {
        out.bins[b].push_back(j);
        placed = true;
        break;
      }
    }
    if (!placed) {
      candidates.push_back(out.bins.size());
      out.bins.push_back({j});
    }
  }
  return out;
}

BinList bin_users_naive(const LikeMatrix& matrix) {
  BinList out;
  std::vector<std::size_t> scan;  // reused scratch
  for (std::uint32_t j = 0; j < matrix.m; ++j) {
    scan.resize(out.bins.size());
    std::iota(scan.begin(), scan.end(), 0);
    // larger bins first; among equal sizes keep list order
    std::stable_sort(scan.begin(), scan.end(), [&](std::size_t a, std::size_t b) {
      return out.bins[a].size() > out.bins[b].size();
    });
    bool placed = false;
    for (std::size_t b : scan) {
      if (matrix.cols[out.bins[b].front()] == matrix.cols[j]) {
        out.bins[b].push_back(j);
        placed = true;
        break;
      }
    }
    if (!placed) out.bins.push_back({j});
  }
  return out;
}

// -------------------------------------------------------------- similarity

namespace {

std::size_t intersection_size(const std::vector<std::uint32_t>& a,
                              const std::vector<std::uint32_t>& b) {
  std::size_t n = 0, i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] < b[j])
      ++i;
    else if (a[i] > b[j])
      ++j;
    else {
      ++n;
      ++i;
      ++j;
    }
  }
  return n;
}

}  // namespace

double similarity(const LikeMatrix& matrix, std::size_t i, std::size_t j, Measure measure) {
  if (i >= matrix.m || j >= matrix.m) throw ConfigError("column index out of range");
  const auto& a = matrix.cols[i];
  const auto& b = matrix.cols[j];
  double inter = static_cast<double>(intersection_size(a, b));
  switch (measure) {
    case Measure::cosine:
      return inter / std::sqrt(static_cast<double>(a.size()) * static_cast<double>(b.size()));
    case Measure::jaccard:
      return inter / (static_cast<double>(a.size()) + static_cast<double>(b.size()) - inter);
    case Measure::hamming:
      return static_cast<double>(a.size()) + static_cast<double>(b.size()) - 2.0 * inter;
  }
  throw ConfigError("unknown measure");
}

double coordination_probability(std::uint64_t bin_size, double c) {
  if (bin_size < 1) throw ConfigError("bin_size must be >= 1");
  if (!(c > 0.0 && c <= 1.0)) throw ConfigError("c must be in (0, 1]");
  return std::pow(c, static_cast<double>(bin_size - 1));
}

std::vector<HistogramRow> bin_size_histogram(const BinList& bins, std::uint64_t min_size) {
  if (min_size < 1) throw ConfigError("min_size must be >= 1");
  std::map<std::uint64_t, std::uint64_t> counts;
  for (const auto& b : bins.bins) {
    std::uint64_t sz = b.size();
    if (sz >= min_size) counts[sz] += 1;
  }
  std::vector<HistogramRow> rows;
  for (const auto& [size, count] : counts) rows.push_back({size, count, size * count});
  return rows;
}

// ------------------------------------------------------------- correlation

CorrelationMatrix correlation_matrix(const LikeMatrix& matrix, std::size_t dense_cap) {
  if (matrix.m > dense_cap)
    throw NumericError("m = " + std::to_string(matrix.m) + " exceeds dense cap " +
                       std::to_string(dense_cap) + "; use the matrix-free svd_embed path");
  if (matrix.n < 2) throw NumericError("correlation needs at least 2 tweets");
  CorrelationMatrix cm;
  double n = static_cast<double>(matrix.n);
  for (std::size_t j = 0; j < matrix.m; ++j) {
    std::size_t s = matrix.col_size(j);
    if (s == 0 || s == matrix.n)
      cm.excluded.push_back(j);  // constant column, correlation undefined
    else
      cm.included.push_back(j);
  }
  cm.dim = cm.included.size();
  cm.values.assign(cm.dim * cm.dim, 0.0);
  for (std::size_t a = 0; a < cm.dim; ++a) {
    const auto& ca = matrix.cols[cm.included[a]];
    double sa = static_cast<double>(ca.size());
    cm.values[a * cm.dim + a] = 1.0;
    for (std::size_t b = a + 1; b < cm.dim; ++b) {
      const auto& cb = matrix.cols[cm.included[b]];
      double sb = static_cast<double>(cb.size());
      double k = static_cast<double>(intersection_size(ca, cb));
      double r = (n * k - sa * sb) / std::sqrt((n * sa - sa * sa) * (n * sb - sb * sb));
      cm.values[a * cm.dim + b] = r;
      cm.values[b * cm.dim + a] = r;
    }
  }
  return cm;
}

// --------------------------------------------------------------- embedding

namespace {

// Jacobi eigenvalue sweep for tiny symmetric matrices (the Rayleigh-Ritz
// projection), eigenvalues descending.
void small_symmetric_eig(std::vector<double>& a, std::size_t p,
                         std::vector<double>& eigvals, std::vector<double>& eigvecs) {
  eigvecs.assign(p * p, 0.0);
  for (std::size_t i = 0; i < p; ++i) eigvecs[i * p + i] = 1.0;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0;
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = i + 1; j < p; ++j) off += a[i * p + j] * a[i * p + j];
    if (off < 1e-30) break;
    for (std::size_t i = 0; i < p; ++i) {
      for (std::size_t j = i + 1; j < p; ++j) {
        double apq = a[i * p + j];
        if (std::abs(apq) < 1e-300) continue;
        double app = a[i * p + i], aqq = a[j * p + j];
        double theta = 0.5 * (aqq - app) / apq;
        double t = (theta >= 0 ? 1.0 : -1.0) /
                   (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;
        for (std::size_t k = 0; k < p; ++k) {
          double aik = a[i * p + k], ajk = a[j * p + k];
          a[i * p + k] = c * aik - s * ajk;
          a[j * p + k] = s * aik + c * ajk;
        }
        for (std::size_t k = 0; k < p; ++k) {
          double aki = a[k * p + i], akj = a[k * p + j];
          a[k * p + i] = c * aki - s * akj;
          a[k * p + j] = s * aki + c * akj;
        }
        for (std::size_t k = 0; k < p; ++k) {
          double vki = eigvecs[k * p + i], vkj = eigvecs[k * p + j];
          eigvecs[k * p + i] = c * vki - s * vkj;
          eigvecs[k * p + j] = s * vki + c * vkj;
        }
      }
    }
  }
  eigvals.resize(p);
  std::vector<std::size_t> order(p);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> diag(p);
  for (std::size_t i = 0; i < p; ++i) diag[i] = a[i * p + i];
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return diag[x] > diag[y];
  });
  std::vector<double> v2(p * p);
  for (std::size_t i = 0; i < p; ++i) {
    eigvals[i] = diag[order[i]];
    for (std::size_t k = 0; k < p; ++k) v2[k * p + i] = eigvecs[k * p + order[i]];
  }
  eigvecs.swap(v2);
}

// Applies the user-user correlation operator X = Z^T Z / (n-1) without
// forming it, where Z is the column-standardized like matrix restricted to
// the included columns.
struct CorrelationOperator {
  const LikeMatrix& mx;
  const std::vector<std::size_t>& cols;  // included column indices
  std::vector<double> mean, inv_sd;
  double n;

  CorrelationOperator(const LikeMatrix& m, const std::vector<std::size_t>& included)
      : mx(m), cols(included), n(static_cast<double>(m.n)) {
    mean.resize(cols.size());
    inv_sd.resize(cols.size());
    for (std::size_t a = 0; a < cols.size(); ++a) {
      double s = static_cast<double>(mx.col_size(cols[a]));
      mean[a] = s / n;
      double var = (s - s * s / n) / (n - 1.0);
      inv_sd[a] = 1.0 / std::sqrt(var);
    }
  }

  void apply(const double* v, double* out) const {
    std::size_t d = cols.size();
    // a = Z v over tweet space
    std::vector<double> a(mx.n, 0.0);
    double shift = 0;
    for (std::size_t j = 0; j < d; ++j) {
      double w = v[j] * inv_sd[j];
      shift += mean[j] * w;
      for (std::uint32_t r : mx.cols[cols[j]]) a[r] += w;
    }
    double asum = 0;
    for (std::size_t r = 0; r < mx.n; ++r) {
      a[r] -= shift;
      asum += a[r];
    }
    // out = Z^T a / (n-1)
    for (std::size_t j = 0; j < d; ++j) {
      double dot = 0;
      for (std::uint32_t r : mx.cols[cols[j]]) dot += a[r];
      out[j] = (dot - mean[j] * asum) * inv_sd[j] / (n - 1.0);
    }
  }
};

double vec_norm(const std::vector<double>& x) {
  double n = 0;
  for (double v : x) n += v * v;
  return std::sqrt(n);
}

// one modified-Gram-Schmidt pass of v[i] against v[0..i)
void project_out(std::vector<double>& x, const std::vector<std::vector<double>>& v,
                 std::size_t i) {
  for (std::size_t k = 0; k < i; ++k) {
    double dot = 0;
    for (std::size_t r = 0; r < x.size(); ++r) dot += x[r] * v[k][r];
    for (std::size_t r = 0; r < x.size(); ++r) x[r] -= dot * v[k][r];
  }
}

void orthonormalize(std::vector<std::vector<double>>& v) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    for (int attempt = 0;; ++attempt) {
      double before = std::max(vec_norm(v[i]), 1e-300);
      project_out(v[i], v, i);
      // "twice is enough": a large norm drop means the projection itself
      // carried rounding error of the same size as the remainder
      if (vec_norm(v[i]) < 0.5 * before) project_out(v[i], v, i);
      double norm = vec_norm(v[i]);
      if (norm > 1e-10 * before || attempt >= 4) {
        if (norm < 1e-300) norm = 1.0;  // fully degenerate basis: keep zeros
        for (double& x : v[i]) x /= norm;
        break;
      }
      // the direction was (numerically) inside span(v[0..i)); normalizing
      // the cancellation noise would wreck orthogonality, so re-seed
      std::uint64_t s = 88172645463325252ull + 1315423911ull * (i + 1) +
                        2654435761ull * static_cast<std::uint64_t>(attempt);
      for (double& x : v[i]) {
        s ^= s << 13;
        s ^= s >> 7;
        s ^= s << 17;
        x = static_cast<double>(s % 1000) / 1000.0 - 0.5;
      }
    }
  }
}

}  // namespace

Embedding svd_embed(const LikeMatrix& matrix, double residual_tol, int max_iterations) {
  if (matrix.n < 2) throw NumericError("embedding needs at least 2 tweets");
  Embedding emb;
  for (std::size_t j = 0; j < matrix.m; ++j) {
    std::size_t s = matrix.col_size(j);
    if (s == 0 || s == matrix.n)
      emb.excluded.push_back(j);
    else
      emb.included.push_back(j);
  }
  std::size_t d = emb.included.size();
  if (d < 2) throw NumericError("fewer than 2 users with column variance");

  CorrelationOperator op(matrix, emb.included);

  const std::size_t q = 2;
  const std::size_t p = std::min<std::size_t>(d, q + 2);  // oversampled block
  std::vector<std::vector<double>> v(p, std::vector<double>(d));
  std::uint64_t s = 2463534242ull;
  for (auto& vec : v)
    for (double& x : vec) {
      s ^= s << 13;
      s ^= s >> 7;
      s ^= s << 17;
      x = static_cast<double>(s % 2000) / 1000.0 - 1.0;
    }
  orthonormalize(v);

  std::vector<std::vector<double>> xv(p, std::vector<double>(d));
  std::vector<double> ritz_vals;
  std::vector<double> ritz_vecs;
  std::vector<std::vector<double>> y(q, std::vector<double>(d));
  double lambda[2] = {0, 0};

  int it = 0;
  bool converged = false;
  double worst_residual = 0;
  for (it = 1; it <= max_iterations; ++it) {
    for (std::size_t i = 0; i < p; ++i) op.apply(v[i].data(), xv[i].data());
    // Rayleigh-Ritz on the current block
    std::vector<double> t(p * p);
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t k = 0; k < p; ++k) {
        double dot = 0;
        for (std::size_t r = 0; r < d; ++r) dot += v[i][r] * xv[k][r];
        t[i * p + k] = dot;
      }
    // symmetrize against round-off
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t k = i + 1; k < p; ++k) {
        double avg = 0.5 * (t[i * p + k] + t[k * p + i]);
        t[i * p + k] = avg;
        t[k * p + i] = avg;
      }
    small_symmetric_eig(t, p, ritz_vals, ritz_vecs);

    // top-q ritz vectors in user space
    for (std::size_t i = 0; i < q; ++i) {
      std::fill(y[i].begin(), y[i].end(), 0.0);
      for (std::size_t k = 0; k < p; ++k) {
        double w = ritz_vecs[k * p + i];
        for (std::size_t r = 0; r < d; ++r) y[i][r] += w * v[k][r];
      }
    }

    // residual check: ||X y - theta y||
    worst_residual = 0;
    std::vector<double> xy(d);
    for (std::size_t i = 0; i < q; ++i) {
      op.apply(y[i].data(), xy.data());
      double res = 0;
      for (std::size_t r = 0; r < d; ++r) {
        double e = xy[r] - ritz_vals[i] * y[i][r];
        res += e * e;
      }
      worst_residual = std::max(worst_residual, std::sqrt(res));
    }
    double scale = std::max(1.0, std::abs(ritz_vals[0]));
    if (worst_residual <= residual_tol * scale) {
      lambda[0] = ritz_vals[0];
      lambda[1] = ritz_vals[1];
      converged = true;
      break;
    }

    // next subspace = orthonormalized X V
    v.swap(xv);
    orthonormalize(v);
  }
  if (!converged)
    throw NumericError("eigeniteration did not converge; residual " +
                       std::to_string(worst_residual) + " after " +
                       std::to_string(max_iterations) + " iterations");

  // sign convention: largest-magnitude coordinate of each component positive
  for (std::size_t i = 0; i < q; ++i) {
    std::size_t arg = 0;
    for (std::size_t r = 1; r < d; ++r)
      if (std::abs(y[i][r]) > std::abs(y[i][arg])) arg = r;
    if (y[i][arg] < 0)
      for (double& x : y[i]) x = -x;
  }

  emb.eigenvalues[0] = lambda[0];
  emb.eigenvalues[1] = lambda[1];
  emb.iterations = it;
  emb.xs.resize(d);
  emb.ys.resize(d);
  for (std::size_t r = 0; r < d; ++r) {
    emb.xs[r] = lambda[0] * y[0][r];
    emb.ys[r] = lambda[1] * y[1][r];
  }
  return emb;
}

// ----------------------------------------------------------------- outputs

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::size_t> bin_of_columns(const LikeMatrix& matrix, const BinList& bins) {
  // bin id = rank in canonical report order
  std::vector<std::size_t> bin_id(matrix.m, 0);
  auto order = bins.report_order();
  for (std::size_t rank = 0; rank < order.size(); ++rank)
    for (std::uint32_t col : bins.bins[order[rank]]) bin_id[col] = rank;
  return bin_id;
}

}  // namespace

void write_bins_csv(const LikeMatrix& matrix, const BinList& bins, double c,
                    const fs::path& path) {
  std::string out = "bin_id,size,p_b,member_user_ids\n";
  auto order = bins.report_order();
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    const auto& bin = bins.bins[order[rank]];
    out += std::to_string(rank) + "," + std::to_string(bin.size()) + "," +
           fmt_double(coordination_probability(bin.size(), c)) + ",";
    for (std::size_t i = 0; i < bin.size(); ++i) {
      if (i) out += ' ';
      out += std::to_string(matrix.col_ids[bin[i]]);
    }
    out += '\n';
  }
  atomic_write(path, out);
}

void write_histogram_csv(const std::vector<HistogramRow>& rows, const fs::path& path) {
  std::string out = "size,bin_count,user_count\n";
  for (const auto& r : rows)
    out += std::to_string(r.size) + "," + std::to_string(r.bin_count) + "," +
           std::to_string(r.user_count) + "\n";
  atomic_write(path, out);
}

void write_embedding_csv(const LikeMatrix& matrix, const BinList& bins,
                         const Embedding& emb, const fs::path& path) {
  auto bin_id = bin_of_columns(matrix, bins);
  std::vector<int> excluded(matrix.m, 0);
  for (std::size_t j : emb.excluded) excluded[j] = 1;
  std::vector<std::pair<double, double>> coord(matrix.m, {0, 0});
  for (std::size_t i = 0; i < emb.included.size(); ++i)
    coord[emb.included[i]] = {emb.xs[i], emb.ys[i]};

  std::string out = "user_id,x,y,bin_id,excluded_flag\n";
  for (std::size_t j = 0; j < matrix.m; ++j) {
    out += std::to_string(matrix.col_ids[j]) + ",";
    if (excluded[j])
      out += ",,";
    else
      out += fmt_double(coord[j].first) + "," + fmt_double(coord[j].second) + ",";
    out += std::to_string(bin_id[j]) + "," + std::to_string(excluded[j]) + "\n";
  }
  atomic_write(path, out);
}

void write_embedding_svg(const LikeMatrix& matrix, const BinList& bins,
                         const Embedding& emb, const fs::path& path) {
  auto bin_id = bin_of_columns(matrix, bins);
  std::vector<std::size_t> bin_sizes(bins.bins.size());
  auto order = bins.report_order();
  for (std::size_t rank = 0; rank < order.size(); ++rank)
    bin_sizes[rank] = bins.bins[order[rank]].size();

  double min_x = 0, max_x = 0, min_y = 0, max_y = 0;
  for (std::size_t i = 0; i < emb.xs.size(); ++i) {
    min_x = std::min(min_x, emb.xs[i]);
    max_x = std::max(max_x, emb.xs[i]);
    min_y = std::min(min_y, emb.ys[i]);
    max_y = std::max(max_y, emb.ys[i]);
  }
  double span_x = std::max(1e-12, max_x - min_x);
  double span_y = std::max(1e-12, max_y - min_y);
  const double w = 800, h = 800, pad = 40;

  std::string out =
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"800\">\n"
      "<rect width=\"800\" height=\"800\" fill=\"white\"/>\n";
  for (std::size_t i = 0; i < emb.included.size(); ++i) {
    double px = pad + (emb.xs[i] - min_x) / span_x * (w - 2 * pad);
    double py = h - pad - (emb.ys[i] - min_y) / span_y * (h - 2 * pad);
    bool large = bin_sizes[bin_id[emb.included[i]]] >= 50;
    out += "<circle cx=\"" + fmt_double(px) + "\" cy=\"" + fmt_double(py) +
           "\" r=\"2\" fill=\"" + (large ? "blue" : "gray") + "\" fill-opacity=\"0.5\"/>\n";
  }
  out += "</svg>\n";
  atomic_write(path, out);
}

}  // namespace lw::analysis
