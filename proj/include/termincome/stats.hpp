#pragma once

#include <Eigen/Core>
#include <cmath>
#include <functional>
#include <thread>
#include <vector>

namespace termincome {

/// Sample mean with its standard error.
struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
};

/// Pairwise (cascade) summation; deterministic for a fixed element order.
double pairwise_sum(const double* data, Eigen::Index n);
inline double pairwise_sum(const Eigen::ArrayXd& v) { return pairwise_sum(v.data(), v.size()); }

/// Mean and standard error of per-path values. With antithetic sampling the
/// independent unit is the consecutive pair (2k, 2k+1), so the spread is
/// computed over pair averages.
MeanSe mean_se(const Eigen::ArrayXd& per_path, bool antithetic);

/// Runs fn(begin, end) over fixed contiguous index blocks, distributed over a
/// small thread pool. Blocks are fixed regardless of thread count, so any
/// block-indexed output is identical under any scheduling.
void parallel_blocks(Eigen::Index n, Eigen::Index block,
                     const std::function<void(Eigen::Index, Eigen::Index)>& fn);

}  // namespace termincome
