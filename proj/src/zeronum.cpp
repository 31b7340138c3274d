#include "kslab/zeronum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace kslab {

namespace {

int sign_of(double v) { return v > 0.0 ? 1 : -1; }

bool one_signed_tail(std::span<const double> values, std::span<const double> scale, double tol) {
    const std::size_t n = values.size();
    const std::size_t start = n - std::max<std::size_t>(1, n / 5);
    const SignCount tail = count_sign_changes(values.subspan(start), scale.subspan(start), tol);
    return tail.count == 0;
}

}  // namespace

SignCount count_sign_changes(std::span<const double> values, double tol) {
    double scale = 0.0;
    for (double v : values)
        if (std::isfinite(v)) scale = std::max(scale, std::abs(v));
    const std::vector<double> s(values.size(), scale);
    return count_sign_changes(values, s, tol);
}

SignCount count_sign_changes(std::span<const double> values, std::span<const double> scale, double tol) {
    if (tol < 0.0) throw Error(ErrorCode::InvalidArgument, "tol must be nonnegative");
    SignCount out;
    int last = 0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double v = values[i];
        const bool definite = std::isinf(v) || (std::isfinite(scale[i]) && std::abs(v) > tol * scale[i]);
        if (!definite || std::isnan(v)) {
            ++out.ambiguous;
            continue;
        }
        const int s = sign_of(v);
        if (last != 0 && s != last) ++out.count;
        last = s;
    }
    return out;
}

std::vector<double> rescaled_profile(const SelfSimilarProfile& p, std::span<const double> radii, double t, double T) {
    if (!(t < T)) throw Error(ErrorCode::InvalidFrame, "snapshot time must precede T");
    const double gap = T - t;
    const double root = std::sqrt(gap);
    std::vector<double> psi(radii.size());
    for (std::size_t i = 0; i < radii.size(); ++i) psi[i] = p.value(radii[i] / root) / gap;
    return psi;
}

IntersectionCount intersection_count(const Snapshot& snap, const SelfSimilarProfile& p, double T, double tol) {
    const auto radii = snap.w.grid().nodes();
    const std::vector<double> psi = rescaled_profile(p, radii, snap.t, T);
    std::vector<double> diff(radii.size()), scale(radii.size());
    for (std::size_t i = 0; i < radii.size(); ++i) {
        diff[i] = snap.w[i] - psi[i];
        scale[i] = std::max(std::abs(snap.w[i]), std::abs(psi[i]));
    }
    IntersectionCount out;
    out.sign = count_sign_changes(diff, scale, tol);
    out.tail_one_signed = one_signed_tail(diff, scale, tol);
    return out;
}

IntersectionCount difference_count(const RadialField& a, const RadialField& b, double tol) {
    if (!(a.grid() == b.grid())) throw Error(ErrorCode::IncompatibleRuns, "fields live on different grids");
    std::vector<double> diff(a.size()), scale(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff[i] = a[i] - b[i];
        scale[i] = std::max(std::abs(a[i]), std::abs(b[i]));
    }
    IntersectionCount out;
    out.sign = count_sign_changes(diff, scale, tol);
    out.tail_one_signed = one_signed_tail(diff, scale, tol);
    return out;
}

ZeroCountSeries judge(std::vector<ZeroCountEntry> entries) {
    ZeroCountSeries s;
    s.entries = std::move(entries);
    for (std::size_t k = 0; k < s.entries.size(); ++k) {
        s.ambiguous_total += s.entries[k].ambiguous;
        s.tails_one_signed = s.tails_one_signed && s.entries[k].tail_one_signed;
        if (k > 0 && s.entries[k].count > s.entries[k - 1].count) ++s.increases;
    }
    s.pass = s.increases == 0;
    return s;
}

ZeroCountSeries monotonicity_report(const BlowupRun& run, const SelfSimilarProfile& p, double T, double tol) {
    std::vector<ZeroCountEntry> entries;
    for (const Snapshot& snap : run.snapshots) {
        if (!(snap.t < T)) continue;
        const IntersectionCount c = intersection_count(snap, p, T, tol);
        entries.push_back({snap.t, c.sign.count, c.sign.ambiguous, c.tail_one_signed});
    }
    return judge(std::move(entries));
}

ZeroCountSeries monotonicity_report(const BlowupRun& a, const BlowupRun& b, double tol) {
    std::vector<ZeroCountEntry> entries;
    std::size_t j = 0;
    for (const Snapshot& sa : a.snapshots) {
        while (j < b.snapshots.size() && b.snapshots[j].t < sa.t) ++j;
        if (j == b.snapshots.size()) break;
        if (b.snapshots[j].t != sa.t) continue;
        const IntersectionCount c = difference_count(sa.w, b.snapshots[j].w, tol);
        entries.push_back({sa.t, c.sign.count, c.sign.ambiguous, c.tail_one_signed});
    }
    if (entries.empty()) throw Error(ErrorCode::IncompatibleRuns, "runs share no snapshot times");
    return judge(std::move(entries));
}

}  // namespace kslab
