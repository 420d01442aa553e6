#pragma once

// Monte Carlo cross-check of the grid coverage bookkeeping: sample surface
// points area-uniformly over the creamed bands and query the cleaned
// predicate on the final grid. Agreement validates the view bucketing and
// the exact cell-area weighting independently of the report's arithmetic.

#include <algorithm>
#include <array>
#include <cstdint>
#include <random>
#include <vector>

#include "errors.hpp"
#include "limb.hpp"
#include "sensor.hpp"

namespace capserv {

struct OracleReport {
    std::array<double, 3> view_pct = {0.0, 0.0, 0.0};
    double total_pct = 0.0;
    std::array<long, 3> view_samples = {0, 0, 0};
    long samples = 0;
};

inline OracleReport mc_coverage(const SurfaceGrid& before, const SurfaceGrid& after,
                                std::uint64_t seed, long n_samples = 200000,
                                const ViewPartition& views = {}) {
    if (before.n_axial != after.n_axial || before.n_circ != after.n_circ)
        throw ValidationError("mc_coverage requires grids of identical shape");
    if (n_samples < 100000) throw ValidationError("oracle needs at least 1e5 samples");
    views.validate();

    // Row selection weighted by exact creamed row area; rings cream whole
    // rows so the angle is uniform.
    std::vector<double> row_cdf(static_cast<size_t>(before.n_axial), 0.0);
    double total = 0.0;
    for (int i = 0; i < before.n_axial; ++i) {
        double row = 0.0;
        for (int j = 0; j < before.n_circ; ++j)
            if (before.at(i, j).cream_mass > 0.0) row += before.at(i, j).area;
        total += row;
        row_cdf[static_cast<size_t>(i)] = total;
    }
    if (total <= 0.0) throw UndefinedCoverageError("no creamed cells; coverage is undefined");

    std::mt19937_64 rng(seed);
    OracleReport rep;
    std::array<long, 3> cleaned = {0, 0, 0};
    long total_cleaned = 0;
    for (long s = 0; s < n_samples; ++s) {
        const double pick = unit_double(rng) * total;
        const auto it = std::lower_bound(row_cdf.begin(), row_cdf.end(), pick);
        const int i = static_cast<int>(it - row_cdf.begin());
        const double phi = -kPi + 2.0 * kPi * unit_double(rng);
        const int j = before.circ_index(phi);
        const auto& b = before.at(i, j);
        if (b.cream_mass <= 0.0) continue;  // partly creamed row, point missed the band
        const int v = views.view_of(phi);
        ++rep.view_samples[static_cast<size_t>(v)];
        ++rep.samples;
        if (after.at(i, j).cream_mass < kCleanedFraction * b.cream_mass) {
            ++cleaned[static_cast<size_t>(v)];
            ++total_cleaned;
        }
    }
    for (int v = 0; v < 3; ++v)
        rep.view_pct[static_cast<size_t>(v)] =
            rep.view_samples[static_cast<size_t>(v)] > 0
                ? 100.0 * cleaned[static_cast<size_t>(v)] / rep.view_samples[static_cast<size_t>(v)]
                : 0.0;
    rep.total_pct = rep.samples > 0 ? 100.0 * total_cleaned / rep.samples : 0.0;
    return rep;
}

}  // namespace capserv
