#include <algorithm>
#include <numeric>

#include "chromaeeg/error.hpp"
#include "families.hpp"

namespace chromaeeg::models::detail {

KnnModel fit_knn(const KnnParams& p, const Matrix& x, std::span<const int> y) {
  if (p.k < 1) throw Error(ErrorKind::InvalidArgument, "k must be at least 1");
  KnnModel m;
  m.k = p.k;
  m.x = x;
  m.y.assign(y.begin(), y.end());
  return m;
}

Matrix knn_scores(const KnnModel& m, const Matrix& x, int n_classes) {
  const std::size_t n = m.x.rows();
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(m.k), n);
  Matrix scores(x.rows(), static_cast<std::size_t>(n_classes), 0.0);
  std::vector<double> dist(n);
  std::vector<std::size_t> idx(n);

  // Equidistant neighbours are ordered by their coordinates and then label, not
  // by their position in the training set, so row order never matters.
  auto closer = [&](std::size_t a, std::size_t b) {
    if (dist[a] != dist[b]) return dist[a] < dist[b];
    const auto ra = m.x.row(a);
    const auto rb = m.x.row(b);
    const auto cmp = std::lexicographical_compare_three_way(ra.begin(), ra.end(), rb.begin(), rb.end());
    if (cmp != 0) return cmp < 0;
    return m.y[a] < m.y[b];
  };

  for (std::size_t q = 0; q < x.rows(); ++q) {
    const auto query = x.row(q);
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = m.x.row(i);
      double d = 0.0;
      for (std::size_t c = 0; c < row.size(); ++c) {
        const double diff = row[c] - query[c];
        d += diff * diff;
      }
      dist[i] = d;
    }
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(), closer);
    auto out = scores.row(q);
    for (std::size_t j = 0; j < k; ++j) out[static_cast<std::size_t>(m.y[idx[j]])] += 1.0 / static_cast<double>(k);
  }
  return scores;
}

}  // namespace chromaeeg::models::detail
