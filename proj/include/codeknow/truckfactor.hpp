#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "codeknow/doe.hpp"
#include "codeknow/errors.hpp"
#include "codeknow/identity.hpp"

namespace codeknow {

struct CoverageStep {
    int step = 0;
    double coverage = 0.0;

    bool operator==(const CoverageStep&) const = default;
};

struct TruckFactorResult {
    int value = 0;
    std::vector<std::string> removedDevelopers; // removal order
    std::vector<CoverageStep> coverageTrace;

    bool operator==(const TruckFactorResult&) const = default;
};

struct TfDeveloper {
    std::string developerId;
    std::string name;
    std::string email;
    std::int64_t authoredFileCount = 0;
    std::vector<std::string> authoredFiles;
    bool active = false;

    bool operator==(const TfDeveloper&) const = default;
};

struct TopFile {
    std::string path;
    double importanceScore = 0.0;
    std::int64_t activeAuthorCount = 0;

    bool operator==(const TopFile&) const = default;
};

enum class NodeKind { Directory, File };

struct KnowledgeNode {
    std::string name;
    std::string path; // repository-relative; empty for the root
    NodeKind kind = NodeKind::Directory;
    std::vector<KnowledgeNode> children;
    std::int64_t fileCount = 0;
    TruckFactorResult truckFactor;
    std::vector<TfDeveloper> tfDevelopers;
    std::vector<TopFile> topFiles;
    // file nodes only
    double importanceScore = 0.0;
    std::vector<DoeEntry> entries;
    std::set<std::string> experts;

    bool operator==(const KnowledgeNode&) const = default;

    /// Node at a repository-relative path ("" or "." is the root), or nullptr.
    const KnowledgeNode* find(std::string_view sub) const
    {
        while (sub.starts_with("./"))
            sub.remove_prefix(2);
        while (sub.starts_with('/'))
            sub.remove_prefix(1);
        while (sub.ends_with('/'))
            sub.remove_suffix(1);
        if (sub.empty() || sub == ".")
            return this;
        const KnowledgeNode* node = this;
        while (!sub.empty()) {
            auto slash = sub.find('/');
            auto head = sub.substr(0, slash);
            auto it = std::find_if(node->children.begin(), node->children.end(),
                                   [&](const KnowledgeNode& c) { return c.name == head; });
            if (it == node->children.end())
                return nullptr;
            node = &*it;
            sub = slash == std::string_view::npos ? std::string_view{} : sub.substr(slash + 1);
        }
        return node;
    }
};

inline constexpr std::int64_t kActiveWindowSeconds = 365 * 86400;
inline constexpr std::size_t kDefaultTopFilesLimit = 50;

namespace detail {

using FileSet = std::vector<const FileKnowledge*>;

inline double coverageOf(const FileSet& files, const std::set<std::string>& removed)
{
    if (files.empty())
        return 0.0;
    std::size_t covered = 0;
    for (const auto* f : files)
        for (const auto& e : f->experts)
            if (!removed.count(e)) {
                ++covered;
                break;
            }
    return static_cast<double>(covered) / static_cast<double>(files.size());
}

inline std::string selectTopAuthorOf(const FileSet& files, const std::set<std::string>& removed)
{
    struct Score {
        std::size_t files = 0;
        double doe = 0.0;
    };
    std::map<std::string, Score> scores;
    for (const auto* f : files)
        for (const auto& e : f->experts)
            if (!removed.count(e))
                ++scores[e].files;
    if (scores.empty())
        throw NoExpertsLeft("no remaining expert");
    for (const auto* f : files)
        for (const auto& entry : f->entries)
            if (auto it = scores.find(entry.developerId); it != scores.end())
                it->second.doe += entry.doe;

    // map order gives the smallest id first, so only strictly better candidates replace it
    auto best = scores.begin();
    for (auto it = std::next(scores.begin()); it != scores.end(); ++it) {
        const auto& s = it->second;
        const auto& b = best->second;
        if (s.files > b.files || (s.files == b.files && s.doe > b.doe))
            best = it;
    }
    return best->first;
}

inline TruckFactorResult truckFactorOf(FileSet files)
{
    // path order keeps floating-point DOE sums, and so tie-breaks, order independent
    std::sort(files.begin(), files.end(),
              [](const FileKnowledge* a, const FileKnowledge* b) { return a->path < b->path; });
    TruckFactorResult result;
    std::set<std::string> remaining;
    for (const auto* f : files)
        remaining.insert(f->experts.begin(), f->experts.end());
    std::set<std::string> removed;

    int step = 0;
    bool stopped = false;
    while (!remaining.empty()) {
        double cov = coverageOf(files, removed);
        result.coverageTrace.push_back({step++, cov});
        if (cov <= 0.5) {
            stopped = true;
            break;
        }
        auto top = selectTopAuthorOf(files, removed);
        removed.insert(top);
        remaining.erase(top);
        result.removedDevelopers.push_back(top);
        ++result.value;
    }
    if (!stopped)
        result.coverageTrace.push_back({step, coverageOf(files, removed)});
    return result;
}

inline FileSet asSet(std::span<const FileKnowledge> files)
{
    FileSet set;
    for (const auto& f : files)
        set.push_back(&f);
    return set;
}

} // namespace detail

/// Fraction of files that keep at least one expert outside `removed`.
inline double coverage(std::span<const FileKnowledge> files, const std::set<std::string>& removed)
{
    return detail::coverageOf(detail::asSet(files), removed);
}

/// The non-removed developer who is expert on the most files. Ties go to the
/// higher DOE sum over `files`, then to the smaller id.
inline std::string selectTopAuthor(std::span<const FileKnowledge> files,
                                   const std::set<std::string>& removed)
{
    return detail::selectTopAuthorOf(detail::asSet(files), removed);
}

/// Greedy Truck Factor: keep removing the top author while coverage > 0.5.
inline TruckFactorResult computeTruckFactor(std::span<const FileKnowledge> files)
{
    return detail::truckFactorOf(detail::asSet(files));
}

/// Most recent commit time per developer over all their facts.
inline std::map<std::string, std::int64_t> lastActivity(std::span<const ContributionFact> facts)
{
    std::map<std::string, std::int64_t> last;
    for (const auto& f : facts) {
        auto [it, inserted] = last.emplace(f.developerId, f.lastCommitTs);
        if (!inserted)
            it->second = std::max(it->second, f.lastCommitTs);
    }
    return last;
}

/// Active iff the developer's latest commit is within 365 days of referenceTs (inclusive).
inline bool isActive(const std::string& developerId, std::span<const ContributionFact> facts,
                     std::int64_t referenceTs)
{
    auto last = lastActivity(facts);
    auto it = last.find(developerId);
    return it != last.end() && it->second >= referenceTs - kActiveWindowSeconds;
}

struct TreeOptions {
    std::string rootName = ".";
    std::size_t topFilesLimit = kDefaultTopFilesLimit;
};

namespace detail {

struct TreeBuilder {
    std::map<std::string, const DeveloperIdentity*> devs;
    std::map<std::string, std::int64_t> lastTs;
    std::int64_t referenceTs = 0;
    std::size_t topFilesLimit = kDefaultTopFilesLimit;

    bool active(const std::string& id) const
    {
        auto it = lastTs.find(id);
        return it != lastTs.end() && it->second >= referenceTs - kActiveWindowSeconds;
    }

    struct Draft {
        std::map<std::string, Draft> dirs;
        std::map<std::string, const FileKnowledge*> files;
    };

    void finish(KnowledgeNode& node, const FileSet& subtree) const
    {
        node.fileCount = static_cast<std::int64_t>(subtree.size());
        node.truckFactor = truckFactorOf(subtree);

        for (const auto& id : node.truckFactor.removedDevelopers) {
            TfDeveloper dev;
            dev.developerId = id;
            if (auto it = devs.find(id); it != devs.end() && it->second) {
                dev.name = it->second->displayName;
                dev.email = it->second->email;
            }
            for (const auto* f : subtree)
                if (f->experts.count(id))
                    dev.authoredFiles.push_back(f->path);
            std::sort(dev.authoredFiles.begin(), dev.authoredFiles.end());
            dev.authoredFileCount = static_cast<std::int64_t>(dev.authoredFiles.size());
            dev.active = active(id);
            node.tfDevelopers.push_back(std::move(dev));
        }
        std::stable_sort(node.tfDevelopers.begin(), node.tfDevelopers.end(),
                         [](const TfDeveloper& a, const TfDeveloper& b) {
                             return a.authoredFileCount > b.authoredFileCount;
                         });

        if (node.kind == NodeKind::Directory) {
            for (const auto* f : subtree) {
                std::int64_t activeAuthors = 0;
                for (const auto& e : f->experts)
                    activeAuthors += active(e) ? 1 : 0;
                node.topFiles.push_back({f->path, f->importanceScore, activeAuthors});
            }
            std::sort(node.topFiles.begin(), node.topFiles.end(), [](const TopFile& a, const TopFile& b) {
                if (a.importanceScore != b.importanceScore)
                    return a.importanceScore > b.importanceScore;
                return a.path < b.path;
            });
            if (node.topFiles.size() > topFilesLimit)
                node.topFiles.resize(topFilesLimit);
        }
    }

    KnowledgeNode build(const std::string& name, const std::string& path, const Draft& draft,
                        FileSet& subtree) const
    {
        KnowledgeNode node;
        node.name = name;
        node.path = path;
        node.kind = NodeKind::Directory;
        auto prefix = path.empty() ? std::string{} : path + "/";
        for (const auto& [childName, childDraft] : draft.dirs) {
            FileSet childFiles;
            node.children.push_back(build(childName, prefix + childName, childDraft, childFiles));
            subtree.insert(subtree.end(), childFiles.begin(), childFiles.end());
        }
        for (const auto& [childName, file] : draft.files) {
            KnowledgeNode leaf;
            leaf.name = childName;
            leaf.path = file->path;
            leaf.kind = NodeKind::File;
            leaf.importanceScore = file->importanceScore;
            leaf.entries = file->entries;
            leaf.experts = file->experts;
            finish(leaf, FileSet{file});
            node.children.push_back(std::move(leaf));
            subtree.push_back(file);
        }
        finish(node, subtree);
        return node;
    }
};

} // namespace detail

/// Directory tree of the analyzed files with a Truck Factor for every node.
/// Directories precede files among siblings; both are ordered by name.
inline KnowledgeNode buildKnowledgeTree(std::span<const FileKnowledge> files,
                                        std::span<const DeveloperIdentity> developers,
                                        std::span<const ContributionFact> facts,
                                        std::int64_t referenceTs, const TreeOptions& options = {})
{
    detail::TreeBuilder builder;
    for (const auto& d : developers)
        builder.devs[d.canonicalId] = &d;
    builder.lastTs = lastActivity(facts);
    builder.referenceTs = referenceTs;
    builder.topFilesLimit = options.topFilesLimit;

    detail::TreeBuilder::Draft root;
    for (const auto& f : files) {
        auto* draft = &root;
        std::string_view rest = f.path;
        for (auto slash = rest.find('/'); slash != std::string_view::npos; slash = rest.find('/')) {
            draft = &draft->dirs[std::string(rest.substr(0, slash))];
            rest.remove_prefix(slash + 1);
        }
        draft->files[std::string(rest)] = &f;
    }
    detail::FileSet all;
    return builder.build(options.rootName, "", root, all);
}

} // namespace codeknow
