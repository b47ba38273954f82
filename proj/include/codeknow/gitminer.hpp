#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <fnmatch.h>
#include <spdlog/spdlog.h>

#include "codeknow/errors.hpp"
#include "codeknow/identity.hpp"
#include "codeknow/process.hpp"

namespace codeknow {

namespace fs = std::filesystem;

/// Where to fetch a repository from. An absent branch means the remote's
/// default branch.
struct RepoSource {
    std::string url;
    std::optional<std::string> branch;

    RepoSource(std::string u, std::optional<std::string> b = std::nullopt)
        : url(std::move(u)), branch(std::move(b))
    {
        if (url.empty())
            throw ValidationError("repository url must not be empty");
        if (branch && branch->empty())
            branch.reset();
    }
};

/// A local working tree checked out at the analyzed version.
struct Checkout {
    fs::path dir;
    std::string headCommit;
    std::string branch;
};

struct FileRecord {
    std::string path;
    std::int64_t loc = 0;
    std::string creatorId;
    std::vector<std::string> renamedFrom; // newest first

    bool operator==(const FileRecord&) const = default;
};

struct ContributionFact {
    std::string developerId;
    std::string path;
    std::int64_t adds = 0;
    bool firstAuthorship = false;
    std::int64_t lastCommitTs = 0;

    bool operator==(const ContributionFact&) const = default;
};

struct RepoSummary {
    std::string headCommit;
    std::int64_t referenceTs = 0;
    std::int64_t developerCount = 0;
    std::int64_t commitCount = 0;
    std::int64_t fileCount = 0;

    bool operator==(const RepoSummary&) const = default;
};

/// One path change of a non-merge commit against its parent.
struct FileChange {
    char status = 'M'; // A, M, D, R, T
    std::string path;
    std::string oldPath; // set for renames
    std::int64_t adds = 0;
};

struct CommitRecord {
    std::string hash;
    RawAuthor author;
    std::int64_t authorTs = 0;
    std::vector<FileChange> changes;
};

/// Non-merge history reachable from HEAD, newest first in topological order.
using History = std::vector<CommitRecord>;

struct MiningOptions {
    std::vector<std::string> exclude; // fnmatch(3) patterns against repo-relative paths
    AliasOverrides aliases;
};

namespace detail {

inline std::map<std::string, std::string> hermeticGitEnv()
{
    return {{"GIT_CONFIG_NOSYSTEM", "1"},
            {"GIT_CONFIG_GLOBAL", "/dev/null"},
            {"GIT_TERMINAL_PROMPT", "0"},
            {"LC_ALL", "C"}};
}

inline ProcessResult git(const fs::path& dir, std::vector<std::string> args)
{
    std::vector<std::string> argv{"git", "-C", dir.string()};
    argv.insert(argv.end(), args.begin(), args.end());
    return runProcess(argv, hermeticGitEnv());
}

inline std::string firstLine(const std::string& s)
{
    return s.substr(0, s.find('\n'));
}

inline std::int64_t toInt(std::string_view s)
{
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size())
        throw CorruptHistory("unexpected number in git output: '" + std::string(s) + "'");
    return v;
}

inline std::vector<std::string_view> splitNul(std::string_view s)
{
    std::vector<std::string_view> parts;
    size_t start = 0;
    while (start < s.size()) {
        auto end = s.find('\0', start);
        if (end == std::string_view::npos)
            end = s.size();
        parts.push_back(s.substr(start, end - start));
        start = end + 1;
    }
    return parts;
}

} // namespace detail

inline constexpr const char* kLogFormat = "--format=%x01%H%x02%an%x02%ae%x02%at";

/// Parses `git log -z --raw --numstat` output produced with kLogFormat.
inline History parseLog(std::string_view out)
{
    History history;
    size_t pos = out.find('\x01');
    while (pos != std::string_view::npos) {
        auto next = out.find('\x01', pos + 1);
        auto record = out.substr(pos + 1, next == std::string_view::npos ? std::string_view::npos
                                                                          : next - pos - 1);
        pos = next;

        auto tokens = detail::splitNul(record);
        if (tokens.empty())
            throw CorruptHistory("empty commit record");
        CommitRecord commit;
        {
            std::string_view header = tokens[0];
            std::vector<std::string_view> fields;
            size_t s = 0;
            for (size_t e; (e = header.find('\x02', s)) != std::string_view::npos; s = e + 1)
                fields.push_back(header.substr(s, e - s));
            fields.push_back(header.substr(s));
            if (fields.size() != 4)
                throw CorruptHistory("malformed commit header");
            commit.hash = std::string(fields[0]);
            commit.author = {std::string(fields[1]), std::string(fields[2])};
            commit.authorTs = detail::toInt(fields[3]);
        }

        std::map<std::string, size_t> byPath;
        for (size_t i = 1; i < tokens.size(); ++i) {
            auto tok = tokens[i];
            while (!tok.empty() && tok.front() == '\n')
                tok.remove_prefix(1);
            if (tok.empty())
                continue;
            if (tok.front() == ':') {
                // ":old_mode new_mode old_sha new_sha STATUS"
                auto sp = tok.rfind(' ');
                if (sp == std::string_view::npos || i + 1 >= tokens.size())
                    throw CorruptHistory("malformed raw diff entry in " + commit.hash);
                FileChange change;
                change.status = tok[sp + 1];
                if (change.status == 'R' || change.status == 'C') {
                    if (i + 2 >= tokens.size())
                        throw CorruptHistory("truncated rename entry in " + commit.hash);
                    change.oldPath = std::string(tokens[++i]);
                    change.path = std::string(tokens[++i]);
                    if (change.status == 'C') {
                        change.status = 'A';
                        change.oldPath.clear();
                    }
                } else {
                    change.path = std::string(tokens[++i]);
                }
                byPath[change.path] = commit.changes.size();
                commit.changes.push_back(std::move(change));
            } else {
                // "adds\tdels\tpath" or "adds\tdels\t" followed by old, new
                auto t1 = tok.find('\t');
                auto t2 = t1 == std::string_view::npos ? t1 : tok.find('\t', t1 + 1);
                if (t2 == std::string_view::npos)
                    throw CorruptHistory("malformed numstat entry in " + commit.hash);
                auto addsField = tok.substr(0, t1);
                std::string path(tok.substr(t2 + 1));
                if (path.empty()) {
                    if (i + 2 >= tokens.size())
                        throw CorruptHistory("truncated numstat rename in " + commit.hash);
                    ++i;
                    path = std::string(tokens[++i]);
                }
                std::int64_t adds = addsField == "-" ? 0 : detail::toInt(addsField);
                auto it = byPath.find(path);
                if (it == byPath.end())
                    throw CorruptHistory("numstat path without raw entry: " + path);
                commit.changes[it->second].adds = adds;
            }
        }
        history.push_back(std::move(commit));
    }
    return history;
}

/// Clones `source` into `workdir`/repo and checks out the requested branch tip.
inline Checkout cloneRepository(const RepoSource& source, const fs::path& workdir)
{
    auto remote = runProcess({"git", "ls-remote", "--", source.url},
                             detail::hermeticGitEnv());
    if (!remote.ok())
        throw UnreachableRemote("cannot reach repository " + source.url + ": " +
                                detail::firstLine(remote.err));
    if (source.branch) {
        auto needle = "\trefs/heads/" + *source.branch + "\n";
        if ((remote.out + "\n").find(needle) == std::string::npos)
            throw UnknownBranch("branch '" + *source.branch + "' not found in " + source.url);
    }

    std::error_code ec;
    fs::create_directories(workdir, ec);
    auto target = workdir / "repo";
    if (ec || (fs::exists(target) && !fs::is_empty(target)))
        throw CloneFailure("workdir not usable: " + target.string());

    std::vector<std::string> argv{"git", "clone", "--quiet", "--no-tags", "--single-branch"};
    if (source.branch) {
        argv.push_back("--branch");
        argv.push_back(*source.branch);
    }
    argv.push_back("--");
    argv.push_back(source.url);
    argv.push_back(target.string());
    auto cloned = runProcess(argv, detail::hermeticGitEnv());
    if (!cloned.ok())
        throw CloneFailure("git clone failed: " + detail::firstLine(cloned.err));

    auto shallow = detail::git(target, {"rev-parse", "--is-shallow-repository"});
    if (detail::firstLine(shallow.out) == "true")
        throw MiningError("shallow clones are not supported; full history is required");

    auto head = detail::git(target, {"rev-parse", "--verify", "--quiet", "HEAD^{commit}"});
    if (!head.ok())
        throw MiningError("repository has no commits");
    auto branch = detail::git(target, {"symbolic-ref", "--short", "--quiet", "HEAD"});
    return Checkout{target, detail::firstLine(head.out),
                    branch.ok() ? detail::firstLine(branch.out) : std::string{}};
}

/// Reads the non-merge history of the checkout with 50% rename detection.
inline History readHistory(const Checkout& checkout)
{
    auto log = detail::git(checkout.dir, {"log", "--topo-order", "--no-merges", "--no-color",
                                          "--no-ext-diff", "--no-textconv", "-M50%", "--raw",
                                          "--numstat", "-z", kLogFormat, "HEAD"});
    if (!log.ok())
        throw CorruptHistory("git log failed: " + detail::firstLine(log.err));
    return parseLog(log.out);
}

/// Raw authors of the history, newest first, without duplicates.
inline std::vector<RawAuthor> collectAuthors(const History& history)
{
    std::vector<RawAuthor> authors;
    std::set<RawAuthor> seen;
    for (const auto& c : history)
        if (seen.insert(c.author).second)
            authors.push_back(c.author);
    return authors;
}

/// Newline-terminated lines plus a final unterminated line.
inline std::int64_t countLines(std::string_view content)
{
    auto n = static_cast<std::int64_t>(std::count(content.begin(), content.end(), '\n'));
    if (!content.empty() && content.back() != '\n')
        ++n;
    return n;
}

inline bool looksBinary(std::string_view content)
{
    return content.substr(0, 8000).find('\0') != std::string_view::npos;
}

inline bool isExcluded(const std::string& path, const std::vector<std::string>& patterns)
{
    return std::any_of(patterns.begin(), patterns.end(), [&](const std::string& p) {
        return fnmatch(p.c_str(), path.c_str(), 0) == 0;
    });
}

/// Paths and LOC of the regular, non-empty, non-binary, non-excluded files at HEAD.
inline std::map<std::string, std::int64_t> admittedFiles(const Checkout& checkout,
                                                         const std::vector<std::string>& exclude)
{
    auto ls = detail::git(checkout.dir, {"ls-files", "-z", "-s"});
    if (!ls.ok())
        throw CorruptHistory("git ls-files failed: " + detail::firstLine(ls.err));
    std::map<std::string, std::int64_t> files;
    for (auto entry : detail::splitNul(ls.out)) {
        auto tab = entry.find('\t');
        if (tab == std::string_view::npos)
            continue;
        auto mode = entry.substr(0, entry.find(' '));
        std::string path(entry.substr(tab + 1));
        if (mode != "100644" && mode != "100755")
            continue;
        if (isExcluded(path, exclude))
            continue;
        std::ifstream in(checkout.dir / path, std::ios::binary);
        if (!in) {
            spdlog::warn("skipping unreadable file {}", path);
            continue;
        }
        std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        if (content.empty() || looksBinary(content))
            continue;
        files.emplace(std::move(path), countLines(content));
    }
    return files;
}

namespace detail {

struct Lineage {
    std::map<std::string, ContributionFact> facts; // by developerId
    std::vector<std::string> renamedFrom;
    std::optional<std::string> creator;
    std::string oldestToucher;
};

/// Walks history newest to oldest, following each HEAD path back through its
/// renames until the commit that added it.
inline std::map<std::string, Lineage> traceLineages(const History& history,
                                                    const std::map<std::string, std::int64_t>& files,
                                                    const IdentityMap& identities)
{
    std::map<std::string, Lineage> lineages;
    std::map<std::string, std::string> tracked; // historical path -> HEAD path
    for (const auto& [path, loc] : files) {
        lineages[path];
        tracked[path] = path;
    }

    for (const auto& commit : history) {
        const auto& dev = identities.canonicalId(commit.author);
        for (const auto& change : commit.changes) {
            auto it = tracked.find(change.path);
            if (it == tracked.end())
                continue;
            auto headPath = it->second;
            auto& lin = lineages[headPath];
            if (change.status == 'D')
                continue;
            auto& fact = lin.facts[dev];
            if (fact.developerId.empty()) {
                fact.developerId = dev;
                fact.path = headPath;
                fact.lastCommitTs = commit.authorTs;
            }
            fact.adds += change.adds;
            fact.lastCommitTs = std::max(fact.lastCommitTs, commit.authorTs);
            lin.oldestToucher = dev;

            if (change.status == 'A') {
                lin.creator = dev;
                tracked.erase(it);
            } else if (change.status == 'R') {
                tracked.erase(it);
                tracked[change.oldPath] = headPath;
                lin.renamedFrom.push_back(change.oldPath);
            }
        }
    }
    return lineages;
}

} // namespace detail

/// Everything mined from one checkout.
struct MiningResult {
    std::vector<FileRecord> files;           // sorted by path
    std::vector<ContributionFact> facts;     // sorted by (path, developerId)
    std::vector<DeveloperIdentity> developers; // developers with at least one fact
    IdentityMap identities;
    RepoSummary summary;
};

/// Analyzed files of the checkout with creator and rename chain resolved.
/// Files that no non-merge commit ever touched are dropped with a warning.
inline std::vector<FileRecord> enumerateFiles(const Checkout& checkout, const History& history,
                                              const IdentityMap& identities,
                                              const std::vector<std::string>& exclude = {})
{
    auto files = admittedFiles(checkout, exclude);
    auto lineages = detail::traceLineages(history, files, identities);
    std::vector<FileRecord> records;
    for (const auto& [path, loc] : files) {
        const auto& lin = lineages.at(path);
        if (lin.facts.empty()) {
            spdlog::warn("skipping {}: no non-merge commit introduces it", path);
            continue;
        }
        records.push_back({path, loc, lin.creator.value_or(lin.oldestToucher), lin.renamedFrom});
    }
    return records;
}

/// One fact per (developer, analyzed file) with at least one touching commit.
inline std::vector<ContributionFact> extractContributionFacts(const History& history,
                                                              const IdentityMap& identities,
                                                              const std::vector<FileRecord>& files,
                                                              std::int64_t referenceTs)
{
    std::map<std::string, std::int64_t> admitted;
    std::map<std::string, std::string> creators;
    for (const auto& f : files) {
        admitted[f.path] = f.loc;
        creators[f.path] = f.creatorId;
    }
    auto lineages = detail::traceLineages(history, admitted, identities);
    std::vector<ContributionFact> facts;
    for (const auto& [path, lin] : lineages) {
        for (auto [dev, fact] : lin.facts) {
            fact.firstAuthorship = dev == creators.at(path);
            fact.lastCommitTs = std::min(fact.lastCommitTs, referenceTs);
            facts.push_back(std::move(fact));
        }
    }
    return facts;
}

inline std::int64_t headAuthorTs(const Checkout& checkout)
{
    auto r = detail::git(checkout.dir, {"log", "-1", "--format=%at", checkout.headCommit});
    if (!r.ok())
        throw CorruptHistory("cannot read head commit: " + detail::firstLine(r.err));
    return detail::toInt(detail::firstLine(r.out));
}

inline RepoSummary summarize(const Checkout& checkout, const std::vector<FileRecord>& files,
                             const std::vector<ContributionFact>& facts)
{
    auto count = detail::git(checkout.dir, {"rev-list", "--count", checkout.headCommit});
    if (!count.ok())
        throw CorruptHistory("git rev-list failed: " + detail::firstLine(count.err));
    std::set<std::string> devs;
    for (const auto& f : facts)
        devs.insert(f.developerId);
    return RepoSummary{checkout.headCommit, headAuthorTs(checkout),
                       static_cast<std::int64_t>(devs.size()),
                       detail::toInt(detail::firstLine(count.out)),
                       static_cast<std::int64_t>(files.size())};
}

/// Full mining pass over a checkout. Output is a deterministic function of
/// the checkout and options.
inline MiningResult mine(const Checkout& checkout, const MiningOptions& options = {})
{
    auto history = readHistory(checkout);
    if (history.empty())
        throw MiningError("repository has no non-merge commits");
    auto identities = resolveIdentities(collectAuthors(history), options.aliases);
    auto files = enumerateFiles(checkout, history, identities, options.exclude);
    auto referenceTs = headAuthorTs(checkout);
    auto facts = extractContributionFacts(history, identities, files, referenceTs);
    auto summary = summarize(checkout, files, facts);

    std::set<std::string> active;
    for (const auto& f : facts)
        active.insert(f.developerId);
    std::vector<DeveloperIdentity> developers;
    for (const auto& d : identities.identities())
        if (active.count(d.canonicalId))
            developers.push_back(d);
    return MiningResult{std::move(files), std::move(facts), std::move(developers),
                        std::move(identities), summary};
}

} // namespace codeknow
