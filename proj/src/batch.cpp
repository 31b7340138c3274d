#include "kslab/batch.hpp"

#include <omp.h>

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <string_view>
#include <string>

namespace kslab {

namespace {

ProfileOutcome profile_one(double m, Dimension dim, const ProfileOptions& opt) {
    ProfileOutcome out;
    try {
        out.profile = build_profile(TailCoefficient(m), dim, opt);
    } catch (const Error& e) {
        out.error = e.code();
        out.message = e.what();
    }
    return out;
}

}  // namespace

int resolve_threads(int requested) {
    int n = requested > 0 ? requested : omp_get_max_threads();
    if (const char* env = std::getenv("KSLAB_THREADS"); env && *env) {
        const std::string_view text(env);
        int cap = 0;
        const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), cap);
        if (ec != std::errc() || end != text.data() + text.size() || cap < 1)
            throw Error(ErrorCode::InvalidArgument, std::string("KSLAB_THREADS must be a positive integer, got '") +
                                                        env + "'");
        n = std::min(n, cap);
    }
    return std::max(n, 1);
}

RunOutcome run_job(const RunJob& job) {
    RunOutcome out;
    try {
        validate(job.config);
        const RadialField w0 = w_from_u(build_initial(job.initial, job.config.grid), job.config.dim);
        out.run = run(job.config, w0);
        if (out.run->termination == Termination::BlowupDetected) {
            try {
                out.estimate = estimate_blowup_time(out.run->supnorm_history);
            } catch (const Error& e) {
                out.message = e.what();
            }
        }
    } catch (const Error& e) {
        out.error = e.code();
        out.message = e.what();
    }
    return out;
}

std::vector<RunOutcome> run_batch_serial(std::span<const RunJob> jobs) {
    std::vector<RunOutcome> out;
    out.reserve(jobs.size());
    for (const RunJob& j : jobs) out.push_back(run_job(j));
    return out;
}

std::vector<RunOutcome> run_batch(std::span<const RunJob> jobs, int threads) {
    std::vector<RunOutcome> out(jobs.size());
    const int n = static_cast<int>(jobs.size());
    const int t = std::max(1, std::min(threads, n));
#pragma omp parallel for schedule(dynamic, 1) num_threads(t)
    for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = run_job(jobs[static_cast<std::size_t>(i)]);
    return out;
}

std::vector<ProfileOutcome> profile_batch_serial(std::span<const double> ms, Dimension dim,
                                                 const ProfileOptions& opt) {
    std::vector<ProfileOutcome> out;
    out.reserve(ms.size());
    for (double m : ms) out.push_back(profile_one(m, dim, opt));
    return out;
}

std::vector<ProfileOutcome> profile_batch(std::span<const double> ms, Dimension dim, const ProfileOptions& opt,
                                          int threads) {
    std::vector<ProfileOutcome> out(ms.size());
    const int n = static_cast<int>(ms.size());
    const int t = std::max(1, std::min(threads, n));
#pragma omp parallel for schedule(dynamic, 1) num_threads(t)
    for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = profile_one(ms[static_cast<std::size_t>(i)], dim, opt);
    return out;
}

}  // namespace kslab
