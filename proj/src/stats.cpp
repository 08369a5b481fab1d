#include "termincome/stats.hpp"

#include <atomic>

namespace termincome {

double pairwise_sum(const double* data, Eigen::Index n) {
    if (n <= 8) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) s += data[i];
        return s;
    }
    const Eigen::Index half = n / 2;
    return pairwise_sum(data, half) + pairwise_sum(data + half, n - half);
}

MeanSe mean_se(const Eigen::ArrayXd& per_path, bool antithetic) {
    Eigen::ArrayXd units;
    if (antithetic && per_path.size() >= 2) {
        const Eigen::Index m = per_path.size() / 2;
        units.resize(m);
        for (Eigen::Index k = 0; k < m; ++k)
            units[k] = 0.5 * (per_path[2 * k] + per_path[2 * k + 1]);
    } else {
        units = per_path;
    }
    const Eigen::Index m = units.size();
    MeanSe out;
    out.mean = pairwise_sum(units) / static_cast<double>(m);
    if (m < 2) return out;
    Eigen::ArrayXd sq = (units - out.mean).square();
    const double var = pairwise_sum(sq) / static_cast<double>(m - 1);
    out.se = std::sqrt(var / static_cast<double>(m));
    return out;
}

void parallel_blocks(Eigen::Index n, Eigen::Index block,
                     const std::function<void(Eigen::Index, Eigen::Index)>& fn) {
    const Eigen::Index n_blocks = (n + block - 1) / block;
    unsigned hw = std::thread::hardware_concurrency();
    if (hw < 2 || n_blocks < 2) {
        for (Eigen::Index b = 0; b < n_blocks; ++b)
            fn(b * block, std::min(n, (b + 1) * block));
        return;
    }
    std::atomic<Eigen::Index> next{0};
    auto worker = [&] {
        for (;;) {
            const Eigen::Index b = next.fetch_add(1);
            if (b >= n_blocks) return;
            fn(b * block, std::min(n, (b + 1) * block));
        }
    };
    std::vector<std::thread> pool;
    const unsigned workers = std::min<unsigned>(hw, 8);
    pool.reserve(workers);
    for (unsigned t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
}

}  // namespace termincome
