#pragma once

#include <cstdlib>
#include <fstream>
#include <string>

#include "codeknow/pipeline.hpp"

namespace codeknow {

struct ServiceConfig {
    PipelineConfig pipeline;
    std::string host = "127.0.0.1";
    int port = 8080;
    std::string corsOrigin = "*";
};

/// Reads a JSON configuration document. Recognised keys: storePath,
/// workdirRoot, workers, tokenLifetimeSeconds, host, port, corsOrigin and
/// an "analysis" object (expertThreshold, coefficients, exclude,
/// topFilesLimit, aliases, aliasFile).
inline ServiceConfig serviceConfigFromJson(const json& j)
{
    ServiceConfig c;
    auto& p = c.pipeline;
    p.storePath = j.value("storePath", p.storePath);
    if (j.contains("workdirRoot"))
        p.workdirRoot = j.at("workdirRoot").get<std::string>();
    p.workers = j.value("workers", p.workers);
    p.tokenLifetimeSeconds = j.value("tokenLifetimeSeconds", p.tokenLifetimeSeconds);
    if (j.contains("analysis")) {
        const auto& a = j.at("analysis");
        p.analysis = configFromJson(a);
        if (a.contains("aliasFile")) {
            auto extra = loadAliasOverrides(a.at("aliasFile").get<std::string>());
            p.analysis.aliases.insert(extra.begin(), extra.end());
        }
    }
    c.host = j.value("host", c.host);
    c.port = j.value("port", c.port);
    c.corsOrigin = j.value("corsOrigin", c.corsOrigin);
    return c;
}

inline json readJsonFile(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ValidationError("cannot read configuration file " + path);
    auto j = json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        throw ValidationError("configuration file " + path + " is not a JSON object");
    return j;
}

/// Applies CODEKNOW_STORE, CODEKNOW_WORKDIR, CODEKNOW_WORKERS, CODEKNOW_HOST
/// and CODEKNOW_PORT on top of `c`.
inline void applyEnvironment(ServiceConfig& c)
{
    if (const char* v = std::getenv("CODEKNOW_STORE"))
        c.pipeline.storePath = v;
    if (const char* v = std::getenv("CODEKNOW_WORKDIR"))
        c.pipeline.workdirRoot = v;
    if (const char* v = std::getenv("CODEKNOW_WORKERS"))
        c.pipeline.workers = static_cast<unsigned>(std::stoul(v));
    if (const char* v = std::getenv("CODEKNOW_HOST"))
        c.host = v;
    if (const char* v = std::getenv("CODEKNOW_PORT"))
        c.port = std::stoi(v);
}

} // namespace codeknow
