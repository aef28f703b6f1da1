#pragma once

// Exhaustive threshold sweep over raw score counts, no interpolation.

#include "irisnas/metrics.hpp"

namespace irisnas::testing {

struct SweepPoint {
    double threshold = 0.0;
    double far = 0.0;
    double frr = 0.0;
};

/// Every distinct score and every midpoint between neighbours, plus one
/// threshold below all scores.
std::vector<SweepPoint> exhaustive_sweep(const ScoreSet& s);

/// (FAR + FRR) / 2 at the threshold minimizing |FAR - FRR|.
double oracle_eer(const ScoreSet& s);

/// Smallest FRR over thresholds with FAR <= target.
double oracle_frr_at_far(const ScoreSet& s, double far_target);

}  // namespace irisnas::testing
