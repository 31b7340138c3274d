#pragma once

#include <span>
#include <string>
#include <vector>

#include "kslab/profile.hpp"
#include "kslab/solver.hpp"

namespace kslab {

struct SignCount {
    std::size_t count = 0;
    std::size_t ambiguous = 0;
};

// Sign changes among entries with |v| > tol * max|v|; skipped entries are ambiguous.
SignCount count_sign_changes(std::span<const double> values, double tol);

// Same with a per-entry scale: entry i is ambiguous when |v_i| <= tol * scale_i.
// Infinite entries always carry their sign.
SignCount count_sign_changes(std::span<const double> values, std::span<const double> scale, double tol);

struct IntersectionCount {
    SignCount sign;
    bool tail_one_signed = true;  // no sign change over the outer 20% of the nodes
};

// psi(r, t) = phi(r / sqrt(T-t)) / (T-t) against w(r, t); the local scale is max(|w|, |psi|).
std::vector<double> rescaled_profile(const SelfSimilarProfile& p, std::span<const double> radii, double t, double T);

IntersectionCount intersection_count(const Snapshot& snap, const SelfSimilarProfile& p, double T, double tol);

// Zero number of wA - wB on a common grid.
IntersectionCount difference_count(const RadialField& a, const RadialField& b, double tol);

struct ZeroCountEntry {
    double t = 0.0;
    std::size_t count = 0;
    std::size_t ambiguous = 0;
    bool tail_one_signed = true;
};

struct ZeroCountSeries {
    std::vector<ZeroCountEntry> entries;
    bool pass = true;            // counts nonincreasing in t
    std::size_t increases = 0;   // number of strict increases
    std::size_t ambiguous_total = 0;
    bool tails_one_signed = true;
};

// Verdict over an already computed series.
ZeroCountSeries judge(std::vector<ZeroCountEntry> entries);

// Solution against a rescaled profile, over the snapshots with t < T.
ZeroCountSeries monotonicity_report(const BlowupRun& run, const SelfSimilarProfile& p, double T, double tol);

// Solution against solution at matched snapshot times.
ZeroCountSeries monotonicity_report(const BlowupRun& a, const BlowupRun& b, double tol);

}  // namespace kslab
