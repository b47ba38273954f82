#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <sodium.h>
#include <spdlog/spdlog.h>

#include "codeknow/analysis.hpp"
#include "codeknow/report.hpp"
#include "codeknow/store.hpp"

namespace codeknow {

struct AnalysisJob {
    std::string jobId;
    std::string userId;
    std::string repoUrl;
    std::optional<std::string> branch;
    Stage stage = Stage::Initialized;
    std::vector<Stage> stageHistory;
    std::int64_t startedAt = 0; // epoch milliseconds
    std::optional<std::int64_t> finishedAt;
    std::optional<std::string> error;
    std::optional<std::string> resultId;
    std::int64_t seq = 0;
};

/// Human-facing label of a stage, as shown in job tables.
inline const char* stageLabel(Stage s)
{
    switch (s) {
    case Stage::Initialized: return "Process Initialized";
    case Stage::Cloning: return "Cloning Repository";
    case Stage::ExtractingHistory: return "Extracting History";
    case Stage::ComputingDoe: return "Computing Expertise";
    case Stage::ComputingTruckFactor: return "Computing Truck Factor";
    case Stage::Finished: return "Process Finished";
    case Stage::Failed: return "Process Failed";
    }
    return "";
}

inline json jobToJson(const AnalysisJob& job)
{
    json j{{"jobId", job.jobId},
           {"userId", job.userId},
           {"url", job.repoUrl},
           {"branch", job.branch ? json(*job.branch) : json(nullptr)},
           {"stage", stageName(job.stage)},
           {"stageLabel", stageLabel(job.stage)},
           {"startedAt", job.startedAt},
           {"finishedAt", job.finishedAt ? json(*job.finishedAt) : json(nullptr)},
           {"error", job.error ? json(*job.error) : json(nullptr)},
           {"resultId", job.resultId ? json(*job.resultId) : json(nullptr)},
           {"seq", job.seq}};
    j["stageHistory"] = json::array();
    for (auto s : job.stageHistory)
        j["stageHistory"].push_back(stageName(s));
    return j;
}

inline AnalysisJob jobFromJson(const json& j)
{
    auto opt = [&](const char* key) -> std::optional<std::string> {
        if (!j.contains(key) || j.at(key).is_null())
            return std::nullopt;
        return j.at(key).get<std::string>();
    };
    AnalysisJob job;
    job.jobId = j.at("jobId").get<std::string>();
    job.userId = j.at("userId").get<std::string>();
    job.repoUrl = j.at("url").get<std::string>();
    job.branch = opt("branch");
    job.stage = parseStage(j.at("stage").get<std::string>());
    for (const auto& s : j.at("stageHistory"))
        job.stageHistory.push_back(parseStage(s.get<std::string>()));
    job.startedAt = j.at("startedAt").get<std::int64_t>();
    if (!j.at("finishedAt").is_null())
        job.finishedAt = j.at("finishedAt").get<std::int64_t>();
    job.error = opt("error");
    job.resultId = opt("resultId");
    job.seq = j.at("seq").get<std::int64_t>();
    return job;
}

struct Session {
    std::string token;
    std::string userId;
    std::int64_t expiresAt = 0; // epoch seconds
};

struct PipelineConfig {
    std::string storePath = "codeknow.db";
    fs::path workdirRoot = fs::temp_directory_path() / "codeknow-work";
    unsigned workers = 2;
    std::int64_t tokenLifetimeSeconds = 24 * 3600;
    AnalysisConfig analysis;
};

using Analyzer = std::function<RepositoryVersion(const RepoSource&, const fs::path& workdir,
                                                 const AnalysisConfig&, const ProgressFn&)>;

namespace detail {

inline std::string randomId(std::size_t bytes = 16)
{
    std::vector<unsigned char> raw(bytes);
    randombytes_buf(raw.data(), raw.size());
    std::string hex(bytes * 2 + 1, '\0');
    sodium_bin2hex(hex.data(), hex.size(), raw.data(), raw.size());
    hex.pop_back();
    return hex;
}

inline std::int64_t nowMillis()
{
    using namespace std::chrono;
    return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

/// Job error text: the failure kind followed by its message.
inline std::string describeFailure(const std::exception& e)
{
    const char* kind = "Error";
    if (dynamic_cast<const UnreachableRemote*>(&e))
        kind = "UnreachableRemote (clone failed)";
    else if (dynamic_cast<const UnknownBranch*>(&e))
        kind = "UnknownBranch";
    else if (dynamic_cast<const CloneFailure*>(&e))
        kind = "CloneFailure";
    else if (dynamic_cast<const CorruptHistory*>(&e))
        kind = "CorruptHistory";
    else if (dynamic_cast<const MiningError*>(&e))
        kind = "MiningError";
    else if (dynamic_cast<const ValidationError*>(&e))
        kind = "ValidationError";
    return std::string(kind) + ": " + e.what();
}

} // namespace detail

/// Asynchronous clone-and-analyze service core: users, sessions, a FIFO job
/// queue drained by a fixed pool of workers, and durable results.
class Pipeline {
public:
    explicit Pipeline(PipelineConfig config, Analyzer analyzer = analyzeRepository)
        : config_(std::move(config)), analyzer_(std::move(analyzer)), store_(config_.storePath)
    {
        if (sodium_init() < 0)
            throw std::runtime_error("libsodium initialisation failed");
        config_.analysis.validate();
        recoverInterrupted();
        seq_ = store_.maxJobSeq();
        for (unsigned i = 0; i < std::max(1u, config_.workers); ++i)
            workers_.emplace_back([this] { workerLoop(); });
    }

    Pipeline(const Pipeline&) = delete;
    Pipeline& operator=(const Pipeline&) = delete;

    ~Pipeline()
    {
        {
            std::lock_guard lock(mu_);
            stopping_ = true;
        }
        queueCv_.notify_all();
        for (auto& t : workers_)
            t.join();
    }

    const PipelineConfig& config() const { return config_; }

    std::string registerUser(const std::string& username, const std::string& credential)
    {
        if (username.empty())
            throw ValidationError("username must not be empty");
        if (credential.size() < 8)
            throw ValidationError("credential must be at least 8 characters");
        char hash[crypto_pwhash_STRBYTES];
        if (crypto_pwhash_str(hash, credential.data(), credential.size(), crypto_pwhash_OPSLIMIT_INTERACTIVE,
                              crypto_pwhash_MEMLIMIT_INTERACTIVE) != 0)
            throw std::runtime_error("password hashing failed");
        auto id = detail::randomId();
        json doc{{"userId", id}, {"username", username}, {"credentialHash", hash},
                 {"createdAt", detail::nowMillis()}};
        if (!store_.insertUser(id, username, doc.dump()))
            throw DuplicateUsername("username already taken: " + username);
        return id;
    }

    Session authenticate(const std::string& username, const std::string& credential)
    {
        auto user = store_.findUserByName(username);
        if (!user)
            throw InvalidCredentials("invalid username or password");
        auto hash = json::parse(user->second).at("credentialHash").get<std::string>();
        if (crypto_pwhash_str_verify(hash.c_str(), credential.data(), credential.size()) != 0)
            throw InvalidCredentials("invalid username or password");
        Session s{detail::randomId(32), user->first,
                  detail::nowMillis() / 1000 + config_.tokenLifetimeSeconds};
        std::lock_guard lock(mu_);
        sessions_[s.token] = s;
        return s;
    }

    /// userId behind a live token; throws AuthError otherwise.
    std::string userForToken(const std::string& token)
    {
        std::lock_guard lock(mu_);
        auto it = sessions_.find(token);
        if (it == sessions_.end())
            throw AuthError("unknown session");
        if (it->second.expiresAt <= detail::nowMillis() / 1000) {
            sessions_.erase(it);
            throw AuthError("session expired");
        }
        return it->second.userId;
    }

    bool userExists(const std::string& userId) { return store_.findUser(userId).has_value(); }

    /// Queues a new job and returns its id without waiting for any work.
    std::string startAnalysis(const std::string& userId, const std::string& repoUrl,
                              std::optional<std::string> branch = std::nullopt)
    {
        if (repoUrl.empty())
            throw ValidationError("repository url must not be empty");
        if (!userExists(userId))
            throw AuthError("unknown user " + userId);
        if (branch && branch->empty())
            branch.reset();

        AnalysisJob job;
        job.jobId = detail::randomId();
        job.userId = userId;
        job.repoUrl = repoUrl;
        job.branch = std::move(branch);
        job.stage = Stage::Initialized;
        job.stageHistory = {Stage::Initialized};
        job.startedAt = detail::nowMillis();
        {
            std::lock_guard lock(mu_);
            job.seq = ++seq_;
            persist(job);
            queue_.push_back(job.jobId);
        }
        queueCv_.notify_one();
        return job.jobId;
    }

    std::vector<AnalysisJob> listJobs(const std::string& userId)
    {
        if (!userExists(userId))
            throw AuthError("unknown user " + userId);
        std::vector<AnalysisJob> jobs;
        for (const auto& doc : store_.jobsOf(userId))
            jobs.push_back(jobFromJson(json::parse(doc)));
        std::stable_sort(jobs.begin(), jobs.end(), [](const AnalysisJob& a, const AnalysisJob& b) {
            return a.startedAt != b.startedAt ? a.startedAt > b.startedAt : a.seq > b.seq;
        });
        return jobs;
    }

    std::optional<AnalysisJob> getJob(const std::string& jobId)
    {
        auto doc = store_.findJob(jobId);
        if (!doc)
            return std::nullopt;
        return jobFromJson(json::parse(*doc));
    }

    /// Persisted report document for a result id. A job id is accepted too:
    /// it resolves to the job's result once Finished and is NotReady before.
    json getReport(const std::string& id)
    {
        if (auto doc = store_.findResult(id))
            return json::parse(*doc);
        if (auto job = getJob(id)) {
            if (job->stage == Stage::Finished && job->resultId)
                if (auto doc = store_.findResult(*job->resultId))
                    return json::parse(*doc);
            throw NotReady("analysis " + id + " is at stage " + stageName(job->stage));
        }
        throw NotFound("no analysis result " + id);
    }

    RepositoryVersion getResult(const std::string& id)
    {
        auto report = getReport(id);
        auto version = fromReport(report);
        version.versionId = id;
        if (auto job = getJob(id); job && job->resultId)
            version.versionId = *job->resultId;
        return version;
    }

    /// Blocks until the job reaches Finished or Failed, or the timeout passes.
    std::optional<AnalysisJob> waitForJob(const std::string& jobId,
                                          std::chrono::milliseconds timeout = std::chrono::seconds(60))
    {
        std::unique_lock lock(mu_);
        auto deadline = std::chrono::steady_clock::now() + timeout;
        while (true) {
            lock.unlock();
            auto job = getJob(jobId);
            lock.lock();
            if (!job || job->stage == Stage::Finished || job->stage == Stage::Failed)
                return job;
            if (std::chrono::steady_clock::now() >= deadline) {
                lock.unlock();
                return getJob(jobId);
            }
            doneCv_.wait_for(lock, std::chrono::milliseconds(50));
        }
    }

private:
    void persist(const AnalysisJob& job) { store_.putJob(job.jobId, job.userId, job.seq, jobToJson(job).dump()); }

    void recoverInterrupted()
    {
        for (const auto& doc : store_.allJobs()) {
            auto job = jobFromJson(json::parse(doc));
            if (job.stage == Stage::Finished || job.stage == Stage::Failed)
                continue;
            job.stage = Stage::Failed;
            job.stageHistory.push_back(Stage::Failed);
            job.error = "interrupted";
            job.finishedAt = detail::nowMillis();
            persist(job);
            spdlog::warn("job {} was interrupted and is marked failed", job.jobId);
        }
    }

    void setStage(AnalysisJob& job, Stage stage)
    {
        job.stage = stage;
        job.stageHistory.push_back(stage);
        persist(job);
    }

    void workerLoop()
    {
        while (true) {
            std::string jobId;
            {
                std::unique_lock lock(mu_);
                queueCv_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
                if (stopping_)
                    return;
                jobId = queue_.front();
                queue_.pop_front();
            }
            run(jobId);
            doneCv_.notify_all();
        }
    }

    void run(const std::string& jobId)
    {
        auto loaded = getJob(jobId);
        if (!loaded)
            return;
        auto job = *loaded;
        auto workdir = config_.workdirRoot / job.jobId;
        try {
            auto version = analyzer_(RepoSource(job.repoUrl, job.branch), workdir, config_.analysis,
                                     [&](Stage s) { setStage(job, s); });
            version.versionId = detail::randomId();
            store_.putResult(version.versionId, toReport(version).dump());
            job.resultId = version.versionId;
            job.finishedAt = std::max(detail::nowMillis(), job.startedAt);
            setStage(job, Stage::Finished);
        } catch (const std::exception& e) {
            spdlog::error("job {} failed: {}", job.jobId, e.what());
            job.error = detail::describeFailure(e);
            job.finishedAt = std::max(detail::nowMillis(), job.startedAt);
            setStage(job, Stage::Failed);
        }
        std::error_code ec;
        fs::remove_all(workdir, ec);
    }

    PipelineConfig config_;
    Analyzer analyzer_;
    Store store_;

    std::mutex mu_;
    std::condition_variable queueCv_;
    std::condition_variable doneCv_;
    std::deque<std::string> queue_;
    std::map<std::string, Session> sessions_;
    std::int64_t seq_ = 0;
    bool stopping_ = false;
    std::vector<std::thread> workers_;
};

} // namespace codeknow
