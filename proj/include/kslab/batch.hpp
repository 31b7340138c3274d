#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kslab/profile.hpp"
#include "kslab/solver.hpp"

// Independent runs and profiles distributed over OpenMP threads. Each item
// is computed exactly as the serial path would compute it, so results do not
// depend on the thread count.
namespace kslab {

// requested <= 0 means "all available"; KSLAB_THREADS, when set and nonempty, caps the result.
// Errors: KSLAB_THREADS not a positive integer -> InvalidArgument.
int resolve_threads(int requested = 0);

struct RunJob {
    SolverConfig config;
    InitialData initial;
};

struct RunOutcome {
    std::optional<BlowupRun> run;
    std::optional<BlowupEstimate> estimate;
    std::optional<ErrorCode> error;
    std::string message;
};

struct ProfileOutcome {
    std::optional<SelfSimilarProfile> profile;
    std::optional<ErrorCode> error;
    std::string message;
};

RunOutcome run_job(const RunJob& job);

std::vector<RunOutcome> run_batch(std::span<const RunJob> jobs, int threads);
std::vector<RunOutcome> run_batch_serial(std::span<const RunJob> jobs);

std::vector<ProfileOutcome> profile_batch(std::span<const double> ms, Dimension dim, const ProfileOptions& opt,
                                          int threads);
std::vector<ProfileOutcome> profile_batch_serial(std::span<const double> ms, Dimension dim,
                                                 const ProfileOptions& opt);

}  // namespace kslab
