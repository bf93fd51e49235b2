#include <algorithm>

#include "fuseval/error.hpp"
#include "params.hpp"

namespace fuseval::detail {

KnnParams train_knn(const Matrix& x, const std::vector<int>& y,
                    const TrainConfig& cfg, TrainMeta& meta) {
  if (cfg.knn_k == 0) raise(ErrorKind::Argument, "knn needs k >= 1");
  KnnParams p;
  p.x = x;
  p.y = y;
  p.k = std::min(cfg.knn_k, x.rows());  // k > n degenerates to k = n
  meta.epochs_run = 0;
  meta.final_valid_loss = 0.0;
  return p;
}

std::vector<double> predict_knn(const KnnParams& p, const Matrix& x) {
  const std::size_t n = p.x.rows();
  const std::size_t d = p.x.cols();
  std::vector<double> out;
  out.reserve(x.rows());
  std::vector<std::pair<double, std::size_t>> dist(n);
  for (std::size_t q = 0; q < x.rows(); ++q) {
    auto query = x.row(q);
    for (std::size_t i = 0; i < n; ++i) {
      auto row = p.x.row(i);
      double d2 = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double diff = query[j] - row[j];
        d2 += diff * diff;
      }
      dist[i] = {d2, i};  // pair order breaks distance ties by input index
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(p.k),
                      dist.end());
    double positives = 0.0;
    for (std::size_t i = 0; i < p.k; ++i)
      positives += static_cast<double>(p.y[dist[i].second]);
    out.push_back(positives / static_cast<double>(p.k));
  }
  return out;
}

}  // namespace fuseval::detail
