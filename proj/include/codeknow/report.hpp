#pragma once

#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "codeknow/analysis.hpp"

namespace codeknow {

using nlohmann::json;

inline constexpr const char* kSchemaVersion = "1";

/// Reports carry reals at 5 decimal places.
inline double roundReal(double x)
{
    return std::round(x * 1e5) / 1e5;
}

inline const char* kindName(NodeKind k)
{
    return k == NodeKind::File ? "file" : "directory";
}

inline json nodeToJson(const KnowledgeNode& node)
{
    json j;
    j["name"] = node.name;
    j["path"] = node.path;
    j["kind"] = kindName(node.kind);
    j["fileCount"] = node.fileCount;
    j["truckFactor"] = node.truckFactor.value;
    j["removalOrder"] = node.truckFactor.removedDevelopers;
    j["coverageTrace"] = json::array();
    for (const auto& s : node.truckFactor.coverageTrace)
        j["coverageTrace"].push_back({{"step", s.step}, {"coverage", roundReal(s.coverage)}});
    j["tfDevelopers"] = json::array();
    for (const auto& d : node.tfDevelopers)
        j["tfDevelopers"].push_back({{"id", d.developerId},
                                     {"name", d.name},
                                     {"email", d.email},
                                     {"authoredFileCount", d.authoredFileCount},
                                     {"authoredFiles", d.authoredFiles},
                                     {"active", d.active}});
    j["topFiles"] = json::array();
    for (const auto& f : node.topFiles)
        j["topFiles"].push_back({{"path", f.path},
                                 {"importanceScore", roundReal(f.importanceScore)},
                                 {"activeAuthorCount", f.activeAuthorCount}});
    j["children"] = json::array();
    for (const auto& c : node.children)
        j["children"].push_back(nodeToJson(c));
    if (node.kind == NodeKind::File) {
        j["importanceScore"] = roundReal(node.importanceScore);
        j["experts"] = node.experts;
        j["doe"] = json::array();
        for (const auto& e : node.entries)
            j["doe"].push_back({{"developerId", e.developerId},
                                {"doe", roundReal(e.doe)},
                                {"normalizedDoe", roundReal(e.normalizedDoe)}});
    }
    return j;
}

inline KnowledgeNode nodeFromJson(const json& j)
{
    KnowledgeNode node;
    node.name = j.at("name").get<std::string>();
    node.path = j.at("path").get<std::string>();
    node.kind = j.at("kind").get<std::string>() == "file" ? NodeKind::File : NodeKind::Directory;
    node.fileCount = j.at("fileCount").get<std::int64_t>();
    node.truckFactor.value = j.at("truckFactor").get<int>();
    node.truckFactor.removedDevelopers = j.at("removalOrder").get<std::vector<std::string>>();
    for (const auto& s : j.at("coverageTrace"))
        node.truckFactor.coverageTrace.push_back({s.at("step").get<int>(), s.at("coverage").get<double>()});
    for (const auto& d : j.at("tfDevelopers"))
        node.tfDevelopers.push_back({d.at("id").get<std::string>(), d.at("name").get<std::string>(),
                                     d.at("email").get<std::string>(),
                                     d.at("authoredFileCount").get<std::int64_t>(),
                                     d.at("authoredFiles").get<std::vector<std::string>>(),
                                     d.at("active").get<bool>()});
    for (const auto& f : j.at("topFiles"))
        node.topFiles.push_back({f.at("path").get<std::string>(), f.at("importanceScore").get<double>(),
                                 f.at("activeAuthorCount").get<std::int64_t>()});
    for (const auto& c : j.at("children"))
        node.children.push_back(nodeFromJson(c));
    if (node.kind == NodeKind::File) {
        node.importanceScore = j.at("importanceScore").get<double>();
        node.experts = j.at("experts").get<std::set<std::string>>();
        for (const auto& e : j.at("doe"))
            node.entries.push_back({e.at("developerId").get<std::string>(), node.path,
                                    e.at("doe").get<double>(), e.at("normalizedDoe").get<double>()});
    }
    return node;
}

inline json configToJson(const AnalysisConfig& c)
{
    return {{"expertThreshold", c.expertThreshold},
            {"coefficients",
             {{"intercept", c.coefficients.intercept},
              {"adds", c.coefficients.adds},
              {"firstAuthorship", c.coefficients.firstAuthorship},
              {"numDays", c.coefficients.numDays},
              {"size", c.coefficients.size}}},
            {"exclude", c.exclude},
            {"topFilesLimit", c.topFilesLimit},
            {"aliases", c.aliases}};
}

/// Reads an analysis configuration; absent keys keep their defaults.
inline AnalysisConfig configFromJson(const json& j)
{
    AnalysisConfig c;
    c.expertThreshold = j.value("expertThreshold", c.expertThreshold);
    if (j.contains("coefficients")) {
        const auto& k = j.at("coefficients");
        c.coefficients.intercept = k.value("intercept", c.coefficients.intercept);
        c.coefficients.adds = k.value("adds", c.coefficients.adds);
        c.coefficients.firstAuthorship = k.value("firstAuthorship", c.coefficients.firstAuthorship);
        c.coefficients.numDays = k.value("numDays", c.coefficients.numDays);
        c.coefficients.size = k.value("size", c.coefficients.size);
    }
    c.exclude = j.value("exclude", c.exclude);
    c.topFilesLimit = j.value("topFilesLimit", c.topFilesLimit);
    c.aliases = j.value("aliases", c.aliases);
    return c;
}

/// JSON projection of a RepositoryVersion. Keys are emitted sorted, so
/// `dump()` is byte-reproducible.
inline json toReport(const RepositoryVersion& v)
{
    json j;
    j["schemaVersion"] = kSchemaVersion;
    j["repository"] = {{"url", v.repoUrl}, {"branch", v.branch}};
    j["summary"] = {{"headCommit", v.summary.headCommit},
                    {"referenceTs", v.summary.referenceTs},
                    {"developers", v.summary.developerCount},
                    {"commits", v.summary.commitCount},
                    {"files", v.summary.fileCount},
                    {"truckFactor", v.root.truckFactor.value}};
    j["tree"] = nodeToJson(v.root);
    j["developers"] = json::array();
    for (const auto& d : v.developers) {
        json aliases = json::array();
        for (const auto& a : d.identity.aliases)
            aliases.push_back({{"name", a.name}, {"email", a.email}});
        j["developers"].push_back({{"id", d.identity.canonicalId},
                                   {"name", d.identity.displayName},
                                   {"email", d.identity.email},
                                   {"aliases", aliases},
                                   {"lastCommitTs", d.lastCommitTs},
                                   {"active", d.active}});
    }
    j["config"] = configToJson(v.config);
    return j;
}

inline RepositoryVersion fromReport(const json& j)
{
    if (j.at("schemaVersion") != kSchemaVersion)
        throw ValidationError("unsupported report schema version");
    RepositoryVersion v;
    v.repoUrl = j.at("repository").at("url").get<std::string>();
    v.branch = j.at("repository").at("branch").get<std::string>();
    const auto& s = j.at("summary");
    v.summary = {s.at("headCommit").get<std::string>(), s.at("referenceTs").get<std::int64_t>(),
                 s.at("developers").get<std::int64_t>(), s.at("commits").get<std::int64_t>(),
                 s.at("files").get<std::int64_t>()};
    v.root = nodeFromJson(j.at("tree"));
    for (const auto& d : j.at("developers")) {
        DeveloperSummary ds;
        ds.identity.canonicalId = d.at("id").get<std::string>();
        ds.identity.displayName = d.at("name").get<std::string>();
        ds.identity.email = d.at("email").get<std::string>();
        for (const auto& a : d.at("aliases"))
            ds.identity.aliases.insert({a.at("name").get<std::string>(), a.at("email").get<std::string>()});
        ds.lastCommitTs = d.at("lastCommitTs").get<std::int64_t>();
        ds.active = d.at("active").get<bool>();
        v.developers.push_back(std::move(ds));
    }
    v.config = configFromJson(j.at("config"));
    return v;
}

/// Serialized report, two-space indented with a trailing newline.
inline std::string dumpReport(const RepositoryVersion& v)
{
    return toReport(v).dump(2) + "\n";
}

inline void renderTree(std::ostream& out, const KnowledgeNode& node, int depth = 0)
{
    out << std::string(static_cast<std::size_t>(depth) * 2, ' ') << node.name << " [TF="
        << node.truckFactor.value << "]";
    if (node.kind == NodeKind::File) {
        char buf[64];
        std::snprintf(buf, sizeof buf, " (importance=%.5f)", node.importanceScore);
        out << buf;
    }
    out << '\n';
    for (const auto& c : node.children)
        renderTree(out, c, depth + 1);
}

inline std::string renderTree(const KnowledgeNode& node)
{
    std::ostringstream out;
    renderTree(out, node);
    return out.str();
}

} // namespace codeknow
