#pragma once

// Shared helpers for the test suite: repo paths, random chain generators and
// the exact-binomial band used by the statistical checks.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "assurekit/chain.hpp"
#include "assurekit/check.hpp"
#include "assurekit/rng.hpp"

namespace testsupport {

inline std::filesystem::path repo_root() {
    const char* root = std::getenv("ASSUREKIT_ROOT");
    return root ? std::filesystem::path(root) : std::filesystem::path(".");
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Random terminating chain whose transient part is acyclic, so the
/// brute-force oracle sees finitely many paths. Absorbing states carry
/// explicit self-loops.
inline assurekit::Chain random_dag_chain(assurekit::Rng& rng, std::size_t max_states) {
    using namespace assurekit;
    std::size_t n = 2 + rng.below(max_states - 1);
    Chain chain;
    chain.initial = 0;
    chain.states.resize(n);
    chain.rows.resize(n);
    chain.absorbing.assign(n, 0);
    for (std::size_t s = 0; s < n; ++s) {
        chain.states[s] = {static_cast<std::int64_t>(s)};
        bool absorbing = s + 1 == n || (s > 0 && rng.bernoulli(0.25));
        if (absorbing) {
            chain.rows[s] = {{static_cast<std::uint32_t>(s), 1.0}};
            chain.absorbing[s] = 1;
            continue;
        }
        std::size_t fan = 1 + rng.below(3);
        std::vector<double> weights;
        std::vector<std::uint32_t> targets;
        for (std::size_t k = 0; k < fan; ++k) {
            auto t = static_cast<std::uint32_t>(s + 1 + rng.below(n - s - 1));
            if (std::find(targets.begin(), targets.end(), t) == targets.end()) {
                targets.push_back(t);
                weights.push_back(0.05 + rng.uniform01());
            }
        }
        double total = 0.0;
        for (double w : weights) total += w;
        for (std::size_t k = 0; k < targets.size(); ++k)
            chain.rows[s].push_back({targets[k], weights[k] / total});
        // renormalise the last entry so the row sums to 1 exactly
        double sum = 0.0;
        for (std::size_t k = 0; k + 1 < chain.rows[s].size(); ++k) sum += chain.rows[s][k].prob;
        chain.rows[s].back().prob = 1.0 - sum;
    }
    return chain;
}

/// Random terminating chain that may have transient self-loops and back
/// edges inside the transient part (still drains into absorbing states).
inline assurekit::Chain random_cyclic_chain(assurekit::Rng& rng, std::size_t n_states) {
    using namespace assurekit;
    Chain chain;
    chain.initial = 0;
    chain.states.resize(n_states);
    chain.rows.resize(n_states);
    chain.absorbing.assign(n_states, 0);
    std::size_t n_absorbing = 1 + rng.below(2);
    for (std::size_t s = 0; s < n_states; ++s) {
        chain.states[s] = {static_cast<std::int64_t>(s)};
        if (s + n_absorbing >= n_states) {
            chain.rows[s] = {{static_cast<std::uint32_t>(s), 1.0}};
            chain.absorbing[s] = 1;
            continue;
        }
        std::size_t fan = 2 + rng.below(3);
        std::vector<std::uint32_t> targets;
        std::vector<double> weights;
        // at least some forward mass keeps every state draining
        targets.push_back(static_cast<std::uint32_t>(s + 1 + rng.below(n_states - s - 1)));
        weights.push_back(0.4 + rng.uniform01());
        for (std::size_t k = 1; k < fan; ++k) {
            auto t = static_cast<std::uint32_t>(rng.below(n_states));
            if (std::find(targets.begin(), targets.end(), t) == targets.end()) {
                targets.push_back(t);
                weights.push_back(0.05 + 0.4 * rng.uniform01());
            }
        }
        double total = 0.0;
        for (double w : weights) total += w;
        double sum = 0.0;
        for (std::size_t k = 0; k < targets.size(); ++k) {
            double p = weights[k] / total;
            chain.rows[s].push_back({targets[k], p});
            sum += p;
        }
        chain.rows[s].back().prob += 1.0 - sum;
    }
    return chain;
}

/// Central band [lo, hi] of Binomial(n, p) holding at least `mass`
/// probability; the statistical tests assert observed counts fall inside.
inline std::pair<std::int64_t, std::int64_t> binomial_band(std::int64_t n, double p,
                                                           double mass = 0.99) {
    if (p <= 0.0) return {0, 0};
    if (p >= 1.0) return {n, n};
    double tail = (1.0 - mass) / 2.0;
    auto log_pmf = [&](std::int64_t k) {
        return std::lgamma(double(n + 1)) - std::lgamma(double(k + 1)) -
               std::lgamma(double(n - k + 1)) + k * std::log(p) + (n - k) * std::log1p(-p);
    };
    std::int64_t lo = 0;
    double cdf = 0.0;
    for (std::int64_t k = 0; k <= n; ++k) {
        cdf += std::exp(log_pmf(k));
        if (cdf > tail) {
            lo = k;
            break;
        }
    }
    std::int64_t hi = n;
    double ccdf = 0.0;
    for (std::int64_t k = n; k >= 0; --k) {
        ccdf += std::exp(log_pmf(k));
        if (ccdf > tail) {
            hi = k;
            break;
        }
    }
    return {lo, hi};
}

}  // namespace testsupport
