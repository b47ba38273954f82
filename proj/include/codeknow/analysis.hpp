#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "codeknow/doe.hpp"
#include "codeknow/gitminer.hpp"
#include "codeknow/truckfactor.hpp"

namespace codeknow {

/// Knobs of one analysis. Snapshotted into every result.
struct AnalysisConfig {
    double expertThreshold = kDefaultExpertThreshold;
    DoeCoefficients coefficients;
    std::vector<std::string> exclude;
    std::size_t topFilesLimit = kDefaultTopFilesLimit;
    AliasOverrides aliases;

    bool operator==(const AnalysisConfig&) const = default;

    void validate() const
    {
        if (!(expertThreshold > 0.0 && expertThreshold <= 1.0))
            throw ValidationError("expert threshold must be in (0, 1]");
        if (topFilesLimit == 0)
            throw ValidationError("topFiles limit must be positive");
    }
};

/// Processing phases, in order. Also the persisted job stages.
enum class Stage { Initialized, Cloning, ExtractingHistory, ComputingDoe, ComputingTruckFactor, Finished, Failed };

inline const char* stageName(Stage s)
{
    switch (s) {
    case Stage::Initialized: return "Initialized";
    case Stage::Cloning: return "Cloning";
    case Stage::ExtractingHistory: return "ExtractingHistory";
    case Stage::ComputingDoe: return "ComputingDoe";
    case Stage::ComputingTruckFactor: return "ComputingTruckFactor";
    case Stage::Finished: return "Finished";
    case Stage::Failed: return "Failed";
    }
    return "Failed";
}

inline Stage parseStage(std::string_view name)
{
    for (auto s : {Stage::Initialized, Stage::Cloning, Stage::ExtractingHistory, Stage::ComputingDoe,
                   Stage::ComputingTruckFactor, Stage::Finished, Stage::Failed})
        if (name == stageName(s))
            return s;
    throw ValidationError("unknown stage " + std::string(name));
}

struct DeveloperSummary {
    DeveloperIdentity identity;
    std::int64_t lastCommitTs = 0;
    bool active = false;

    bool operator==(const DeveloperSummary&) const = default;
};

/// A self-contained analysis result.
struct RepositoryVersion {
    std::string versionId;
    std::string repoUrl;
    std::string branch;
    RepoSummary summary;
    KnowledgeNode root;
    std::vector<DeveloperSummary> developers;
    AnalysisConfig config;

    bool operator==(const RepositoryVersion&) const = default;
};

using ProgressFn = std::function<void(Stage)>;

/// DOE scoring and tree construction over already-mined facts.
inline RepositoryVersion assembleResult(const MiningResult& mined, const AnalysisConfig& config,
                                        const ProgressFn& progress = {})
{
    if (progress)
        progress(Stage::ComputingDoe);
    auto referenceTs = mined.summary.referenceTs;
    auto knowledge = scoreFiles(mined.files, mined.facts, referenceTs, config.expertThreshold,
                                config.coefficients);

    if (progress)
        progress(Stage::ComputingTruckFactor);
    RepositoryVersion version;
    version.summary = mined.summary;
    version.config = config;
    version.root = buildKnowledgeTree(knowledge, mined.developers, mined.facts, referenceTs,
                                      TreeOptions{".", config.topFilesLimit});
    auto last = lastActivity(mined.facts);
    for (const auto& d : mined.developers) {
        auto ts = last.at(d.canonicalId);
        version.developers.push_back({d, ts, ts >= referenceTs - kActiveWindowSeconds});
    }
    return version;
}

/// Clone, mine, score and build the knowledge tree synchronously.
/// `progress` is invoked before each phase.
inline RepositoryVersion analyzeRepository(const RepoSource& source, const fs::path& workdir,
                                           const AnalysisConfig& config, const ProgressFn& progress = {})
{
    config.validate();
    if (progress)
        progress(Stage::Cloning);
    auto checkout = cloneRepository(source, workdir);
    if (progress)
        progress(Stage::ExtractingHistory);
    auto mined = mine(checkout, MiningOptions{config.exclude, config.aliases});
    if (mined.files.empty())
        throw MiningError("no analyzable files at " + checkout.headCommit);
    auto version = assembleResult(mined, config, progress);
    version.repoUrl = source.url;
    version.branch = source.branch.value_or(checkout.branch);
    return version;
}

} // namespace codeknow
