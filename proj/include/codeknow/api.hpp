#pragma once

#include <string>

#include <httplib.h>

#include "codeknow/pipeline.hpp"

namespace codeknow {

inline constexpr const char* kStartProcessPath =
    "/git-repository-version-process/start-git-repository-version-process";
inline constexpr const char* kUserProcessesPath = "/git-repository-version-process/user/";
inline constexpr const char* kRepositoryVersionPath = "/git-repository-version/";

struct ApiOptions {
    std::string corsOrigin = "*";
};

/// Public fields of a job, as listed to its owner.
inline json jobSummary(const AnalysisJob& job)
{
    auto j = jobToJson(job);
    j.erase("userId");
    j.erase("seq");
    j.erase("stageHistory");
    return j;
}

namespace detail {

inline void sendJson(httplib::Response& res, int status, const json& body)
{
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

inline void sendError(httplib::Response& res, int status, const std::string& message)
{
    sendJson(res, status, {{"error", message}});
}

inline std::optional<json> parseBody(const httplib::Request& req)
{
    auto body = json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.is_object())
        return std::nullopt;
    return body;
}

inline std::optional<std::string> bearerToken(const httplib::Request& req)
{
    auto header = req.get_header_value("Authorization");
    constexpr std::string_view prefix = "Bearer ";
    if (header.size() <= prefix.size() || header.compare(0, prefix.size(), prefix) != 0)
        return std::nullopt;
    return header.substr(prefix.size());
}

} // namespace detail

/// Registers every endpoint on `server`. The pipeline must outlive it.
inline void mountRoutes(httplib::Server& server, Pipeline& pipeline, const ApiOptions& options = {})
{
    using httplib::Request;
    using httplib::Response;

    auto authenticated = [&pipeline](const Request& req, Response& res) -> std::optional<std::string> {
        auto token = detail::bearerToken(req);
        if (!token) {
            detail::sendError(res, 401, "missing bearer token");
            return std::nullopt;
        }
        try {
            return pipeline.userForToken(*token);
        } catch (const AuthError& e) {
            detail::sendError(res, 401, e.what());
            return std::nullopt;
        }
    };

    server.set_post_routing_handler([origin = options.corsOrigin](const Request&, Response& res) {
        if (!origin.empty()) {
            res.set_header("Access-Control-Allow-Origin", origin);
            res.set_header("Access-Control-Allow-Headers", "Authorization, Content-Type");
            res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
        }
    });
    server.Options(R"(.*)", [](const Request&, Response& res) { res.status = 204; });

    server.Post("/auth/register", [&pipeline](const Request& req, Response& res) {
        auto body = detail::parseBody(req);
        if (!body || !body->contains("username") || !body->contains("password") ||
            !(*body)["username"].is_string() || !(*body)["password"].is_string())
            return detail::sendError(res, 400, "expected {username, password}");
        try {
            auto id = pipeline.registerUser((*body)["username"], (*body)["password"]);
            detail::sendJson(res, 201, {{"userId", id}});
        } catch (const DuplicateUsername& e) {
            detail::sendError(res, 409, e.what());
        } catch (const ValidationError& e) {
            detail::sendError(res, 400, e.what());
        }
    });

    server.Post("/auth/login", [&pipeline](const Request& req, Response& res) {
        auto body = detail::parseBody(req);
        if (!body || !body->contains("username") || !body->contains("password") ||
            !(*body)["username"].is_string() || !(*body)["password"].is_string())
            return detail::sendError(res, 400, "expected {username, password}");
        try {
            auto s = pipeline.authenticate((*body)["username"], (*body)["password"]);
            detail::sendJson(res, 200, {{"token", s.token}, {"expiresAt", s.expiresAt}, {"userId", s.userId}});
        } catch (const InvalidCredentials& e) {
            detail::sendError(res, 401, e.what());
        }
    });

    server.Post(kStartProcessPath, [&pipeline, authenticated](const Request& req, Response& res) {
        auto user = authenticated(req, res);
        if (!user)
            return;
        auto body = detail::parseBody(req);
        if (!body || !body->contains("url") || !(*body)["url"].is_string() ||
            (*body)["url"].get<std::string>().empty())
            return detail::sendError(res, 400, "expected {url, branch?}");
        std::optional<std::string> branch;
        if (body->contains("branch") && !(*body)["branch"].is_null()) {
            if (!(*body)["branch"].is_string())
                return detail::sendError(res, 400, "branch must be a string");
            branch = (*body)["branch"].get<std::string>();
        }
        try {
            auto jobId = pipeline.startAnalysis(*user, (*body)["url"], branch);
            detail::sendJson(res, 202, {{"jobId", jobId}});
        } catch (const ValidationError& e) {
            detail::sendError(res, 400, e.what());
        } catch (const AuthError& e) {
            detail::sendError(res, 401, e.what());
        }
    });

    server.Get(std::string(kUserProcessesPath) + R"(([^/]+))",
               [&pipeline, authenticated](const Request& req, Response& res) {
                   auto user = authenticated(req, res);
                   if (!user)
                       return;
                   if (req.matches[1] != *user)
                       return detail::sendError(res, 403, "jobs of another user");
                   json list = json::array();
                   for (const auto& job : pipeline.listJobs(*user))
                       list.push_back(jobSummary(job));
                   detail::sendJson(res, 200, list);
               });

    server.Get(std::string(kRepositoryVersionPath) + R"(([^/]+))",
               [&pipeline, authenticated](const Request& req, Response& res) {
                   if (!authenticated(req, res))
                       return;
                   try {
                       res.status = 200;
                       res.set_content(pipeline.getReport(req.matches[1]).dump(2) + "\n", "application/json");
                   } catch (const NotFound& e) {
                       detail::sendError(res, 404, e.what());
                   } catch (const NotReady& e) {
                       detail::sendError(res, 409, e.what());
                   }
               });

    server.set_exception_handler([](const Request&, Response& res, std::exception_ptr ep) {
        try {
            std::rethrow_exception(ep);
        } catch (const std::exception& e) {
            detail::sendError(res, 500, e.what());
        } catch (...) {
            detail::sendError(res, 500, "internal error");
        }
    });
}

} // namespace codeknow
