#include "gdla/prng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace gdla {

double Xoshiro256ss::gaussian() {
    if (have_cached_) {
        have_cached_ = false;
        return cached_;
    }
    const double u1 = 1.0 - uniform01();  // (0, 1], keeps the log finite
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    cached_ = r * std::sin(theta);
    have_cached_ = true;
    return r * std::cos(theta);
}

Tensor random_gaussian(std::vector<std::size_t> dims, Xoshiro256ss& rng) {
    Tensor t(std::move(dims));
    for (double& v : t.data) v = rng.gaussian();
    return t;
}

Tensor random_fanin(std::vector<std::size_t> dims, std::size_t fan_in,
                    Xoshiro256ss& rng) {
    if (fan_in == 0) throw std::invalid_argument("random_fanin: fan_in must be positive");
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Tensor t(std::move(dims));
    for (double& v : t.data) v = rng.uniform(-bound, bound);
    return t;
}

}  // namespace gdla
