#pragma once

#include <random>
#include <vector>

#include "rollstab/grid.hpp"
#include "rollstab/rollout.hpp"
#include "rollstab/time.hpp"

namespace testing {

inline std::vector<double> normal_draws(std::size_t n, std::uint64_t seed, double mu = 0.0, double sigma = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(mu, sigma);
    std::vector<double> out(n);
    for (auto& x : out) x = nd(rng);
    return out;
}

inline rollstab::RolloutSeries random_rollout(const rollstab::GridSpec& g, std::size_t n_time, std::uint64_t seed,
                                              std::vector<std::string> vars = {"t2m"}) {
    rollstab::RolloutSeries r(g, std::move(vars), rollstab::parse_iso8601("2021-01-01"), rollstab::kSixHours, n_time);
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> nd(0.0f, 1.0f);
    for (auto& x : r.data()) x = nd(rng);
    return r;
}

}  // namespace testing
