#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "boruta/data.hpp"
#include "boruta/rng.hpp"

namespace boruta {

enum class SyntheticVariant { Direct, Biased, Multicollinear };

struct SyntheticSpec {
    std::size_t n_samples = 10000;
    std::uint64_t seed = 0;
    SyntheticVariant variant = SyntheticVariant::Direct;
    double noise_sigma1 = 0.00001;
    double noise_sigma2 = 0.01;
    double bias_fraction = 0.99;
    double bias_value = -1.0;

    void validate() const {
        if (n_samples < 1) throw DataError("n_samples must be >= 1");
        if (noise_sigma1 < 0 || noise_sigma2 < 0)
            throw DataError("noise sigmas must be >= 0");
        if (bias_fraction < 0 || bias_fraction > 1)
            throw DataError("bias_fraction must lie in [0, 1]");
    }
};

inline constexpr std::size_t kSyntheticFeatures = 50;

// 1-based indices of the features that drive the target.
inline constexpr std::array<std::size_t, 10> kInformativeFeatures = {
    27, 49, 31, 46, 14, 40, 18, 20, 26, 33};

namespace detail {

// Target as a function of one row of features (0-based column access).
inline double synthetic_target(const double* x) {
    auto f = [&](std::size_t one_based) { return x[one_based - 1]; };
    return 5.0 * f(27) * f(27) * f(27) + 4.0 * f(49) * f(49) +
           5.0 * f(31) * f(46) + 2.0 * f(14) - 2.5 * f(40) +
           3.5 * std::cbrt(f(18)) + std::exp(f(20)) +
           2.0 * std::sin(3.14 * f(26)) + 5.0 * std::cos(3.14 * f(33));
}

}  // namespace detail

// Deterministic generator for the three synthetic regimes. All variants
// share the base feature draw and target, so non-overwritten columns are
// bitwise identical across variants for the same seed.
inline DataMatrix generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    const std::size_t n = spec.n_samples;
    const std::size_t p = kSyntheticFeatures;

    DataMatrix d;
    d.task = Task::regression();
    d.X = Matrix(n, p);
    d.target.resize(n);
    for (std::size_t j = 0; j < p; ++j)
        d.feature_names.push_back("feature-" + std::to_string(j + 1));

    Rng features(derive_seed(spec.seed, 0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < p; ++j) d.X.at(i, j) = features.uniform();

    Rng noise1(derive_seed(spec.seed, 1));
    for (std::size_t i = 0; i < n; ++i)
        d.target[i] = detail::synthetic_target(d.X.row(i)) +
                      noise1.normal(0.0, spec.noise_sigma1);

    if (spec.variant == SyntheticVariant::Biased) {
        // exactly floor(bias_fraction * n) rows, chosen without replacement;
        // the target keeps the original values, only the column is destroyed
        Rng pick(derive_seed(spec.seed, 2));
        auto order = pick.permutation(n);
        std::size_t count =
            static_cast<std::size_t>(std::floor(spec.bias_fraction * n));
        for (std::size_t i = 0; i < count; ++i)
            d.X.at(order[i], 19) = spec.bias_value;  // feature-20
    } else if (spec.variant == SyntheticVariant::Multicollinear) {
        Rng noise2(derive_seed(spec.seed, 3));
        for (std::size_t i = 0; i < n; ++i) {
            const double* x = d.X.row(i);
            auto f = [&](std::size_t ob) { return x[ob - 1]; };
            double c13 = 0.1 * f(14) + 0.2 * f(40) + 0.3 * f(7) + 0.4 * f(42);
            double c5 = 0.4 * f(31) + 0.2 * f(46) + 0.3 * f(47) + 0.1 * f(48);
            double c38 = 0.1 * f(18) + 0.3 * f(49) + 0.2 * f(16) + 0.4 * f(10);
            double c9 = 0.4 * f(27) + 0.3 * f(26) + 0.2 * f(17) + 0.1 * f(25);
            double c4 = 0.2 * f(33) + 0.4 * f(20) + 0.1 * f(35) + 0.3 * f(32);
            d.X.at(i, 12) = c13 + noise2.normal(0.0, spec.noise_sigma2);
            d.X.at(i, 4) = c5 + noise2.normal(0.0, spec.noise_sigma2);
            d.X.at(i, 37) = c38 + noise2.normal(0.0, spec.noise_sigma2);
            d.X.at(i, 8) = c9 + noise2.normal(0.0, spec.noise_sigma2);
            d.X.at(i, 3) = c4 + noise2.normal(0.0, spec.noise_sigma2);
        }
    }
    return d;
}

}  // namespace boruta
