#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "codeknow/errors.hpp"
#include "codeknow/gitminer.hpp"

namespace codeknow {

/// Linear Degree-of-Expertise model weights. `numDays` and `size` weights
/// are stored as positive magnitudes and subtracted.
struct DoeCoefficients {
    double intercept = 5.28223;
    double adds = 0.23173;
    double firstAuthorship = 0.36151;
    double numDays = 0.19421;
    double size = 0.28761;

    bool operator==(const DoeCoefficients&) const = default;
};

inline constexpr double kDefaultExpertThreshold = 0.75;
inline constexpr std::int64_t kSecondsPerDay = 86400;

/// DOE(d, f) = a + b·ln(1+adds) + c·fa − e·ln(1+numDays) − g·ln(size)
inline double computeDoe(std::int64_t adds, bool fa, std::int64_t numDays, std::int64_t size,
                         const DoeCoefficients& k = {})
{
    if (size < 1)
        throw DomainError("DOE is undefined for files with size < 1");
    if (adds < 0 || numDays < 0)
        throw DomainError("DOE requires adds >= 0 and numDays >= 0");
    return k.intercept + k.adds * std::log1p(static_cast<double>(adds)) +
           k.firstAuthorship * (fa ? 1.0 : 0.0) -
           k.numDays * std::log1p(static_cast<double>(numDays)) -
           k.size * std::log(static_cast<double>(size));
}

/// Whole days between a commit and the reference timestamp, floored, never negative.
inline std::int64_t daysBetween(std::int64_t lastCommitTs, std::int64_t referenceTs)
{
    auto delta = referenceTs - lastCommitTs;
    return delta <= 0 ? 0 : delta / kSecondsPerDay;
}

struct DoeEntry {
    std::string developerId;
    std::string path;
    double doe = 0.0;
    double normalizedDoe = 0.0;

    bool operator==(const DoeEntry&) const = default;
};

struct FileKnowledge {
    std::string path;
    std::vector<DoeEntry> entries; // sorted by developerId
    std::set<std::string> experts;
    double importanceScore = 0.0;
};

/// Developers whose normalized DOE reaches `threshold`. Non-positive DOE
/// never qualifies unless no entry of the file is positive, in which case
/// the developers tied at the maximum are returned so the set is never empty.
inline std::set<std::string> classifyExperts(std::span<const DoeEntry> entries, double threshold)
{
    std::set<std::string> experts;
    if (entries.empty())
        return experts;
    for (const auto& e : entries)
        if (e.doe > 0.0 && e.normalizedDoe >= threshold)
            experts.insert(e.developerId);
    if (experts.empty()) {
        double best = std::max_element(entries.begin(), entries.end(), [](auto& a, auto& b) {
                          return a.doe < b.doe;
                      })->doe;
        for (const auto& e : entries)
            if (e.doe == best)
                experts.insert(e.developerId);
    }
    return experts;
}

/// Fills normalizedDoe = doe / max(doe) for positive values, 0 otherwise.
inline void normalize(std::vector<DoeEntry>& entries)
{
    double best = 0.0;
    for (const auto& e : entries)
        best = std::max(best, e.doe);
    for (auto& e : entries)
        e.normalizedDoe = (best > 0.0 && e.doe > 0.0) ? e.doe / best : 0.0;
}

/// Scores every contributor of one file; `facts` must all refer to `file`.
inline FileKnowledge scoreFile(const FileRecord& file, std::span<const ContributionFact> facts,
                               std::int64_t referenceTs, double threshold = kDefaultExpertThreshold,
                               const DoeCoefficients& coeffs = {})
{
    FileKnowledge knowledge{file.path, {}, {}, 0.0};
    for (const auto& f : facts) {
        double doe = computeDoe(f.adds, f.firstAuthorship, daysBetween(f.lastCommitTs, referenceTs),
                                file.loc, coeffs);
        knowledge.entries.push_back({f.developerId, file.path, doe, 0.0});
    }
    std::sort(knowledge.entries.begin(), knowledge.entries.end(),
              [](const DoeEntry& a, const DoeEntry& b) { return a.developerId < b.developerId; });
    normalize(knowledge.entries);
    for (const auto& e : knowledge.entries)
        knowledge.importanceScore += e.doe;
    knowledge.experts = classifyExperts(knowledge.entries, threshold);
    return knowledge;
}

/// Scores all files of a mining result, in file order.
inline std::vector<FileKnowledge> scoreFiles(const std::vector<FileRecord>& files,
                                             const std::vector<ContributionFact>& facts,
                                             std::int64_t referenceTs,
                                             double threshold = kDefaultExpertThreshold,
                                             const DoeCoefficients& coeffs = {})
{
    std::map<std::string, std::vector<ContributionFact>> byPath;
    for (const auto& f : facts)
        byPath[f.path].push_back(f);
    std::vector<FileKnowledge> out;
    out.reserve(files.size());
    for (const auto& file : files)
        out.push_back(scoreFile(file, byPath[file.path], referenceTs, threshold, coeffs));
    return out;
}

} // namespace codeknow
