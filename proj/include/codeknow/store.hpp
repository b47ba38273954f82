#pragma once

#include <cstdint>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <sqlite3.h>

namespace codeknow {

class StoreError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Durable document store with three keyspaces: users, jobs and results.
/// Each record is an opaque text document; jobs and users carry an owner /
/// unique-name column for lookup. All calls are serialized on one connection.
class Store {
public:
    explicit Store(const std::string& path)
    {
        if (sqlite3_open_v2(path.c_str(), &db_, SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_FULLMUTEX,
                            nullptr) != SQLITE_OK) {
            std::string msg = db_ ? sqlite3_errmsg(db_) : "out of memory";
            sqlite3_close(db_);
            throw StoreError("cannot open store " + path + ": " + msg);
        }
        sqlite3_busy_timeout(db_, 5000);
        exec("PRAGMA journal_mode=WAL");
        exec("CREATE TABLE IF NOT EXISTS users (id TEXT PRIMARY KEY, username TEXT UNIQUE NOT NULL, doc TEXT NOT NULL)");
        exec("CREATE TABLE IF NOT EXISTS jobs (id TEXT PRIMARY KEY, user_id TEXT NOT NULL, seq INTEGER NOT NULL, doc TEXT NOT NULL)");
        exec("CREATE INDEX IF NOT EXISTS jobs_by_user ON jobs(user_id, seq)");
        exec("CREATE TABLE IF NOT EXISTS results (id TEXT PRIMARY KEY, doc TEXT NOT NULL)");
    }

    Store(const Store&) = delete;
    Store& operator=(const Store&) = delete;
    ~Store() { sqlite3_close(db_); }

    /// False if the username is taken.
    bool insertUser(const std::string& id, const std::string& username, const std::string& doc)
    {
        std::lock_guard lock(mu_);
        Statement st(db_, "INSERT INTO users (id, username, doc) VALUES (?, ?, ?)");
        st.bind(1, id).bind(2, username).bind(3, doc);
        int rc = st.step();
        if (rc == SQLITE_CONSTRAINT)
            return false;
        check(rc, SQLITE_DONE);
        return true;
    }

    std::optional<std::pair<std::string, std::string>> findUserByName(const std::string& username)
    {
        std::lock_guard lock(mu_);
        Statement st(db_, "SELECT id, doc FROM users WHERE username = ?");
        st.bind(1, username);
        if (st.step() != SQLITE_ROW)
            return std::nullopt;
        return std::make_pair(st.text(0), st.text(1));
    }

    std::optional<std::string> findUser(const std::string& id) { return get("users", id); }

    void putJob(const std::string& id, const std::string& userId, std::int64_t seq, const std::string& doc)
    {
        std::lock_guard lock(mu_);
        Statement st(db_, "INSERT OR REPLACE INTO jobs (id, user_id, seq, doc) VALUES (?, ?, ?, ?)");
        st.bind(1, id).bind(2, userId).bind(3, seq).bind(4, doc);
        check(st.step(), SQLITE_DONE);
    }

    std::optional<std::string> findJob(const std::string& id) { return get("jobs", id); }

    /// Job documents of a user, newest submission first.
    std::vector<std::string> jobsOf(const std::string& userId)
    {
        std::lock_guard lock(mu_);
        Statement st(db_, "SELECT doc FROM jobs WHERE user_id = ? ORDER BY seq DESC");
        st.bind(1, userId);
        std::vector<std::string> docs;
        while (st.step() == SQLITE_ROW)
            docs.push_back(st.text(0));
        return docs;
    }

    std::vector<std::string> allJobs()
    {
        std::lock_guard lock(mu_);
        Statement st(db_, "SELECT doc FROM jobs ORDER BY seq");
        std::vector<std::string> docs;
        while (st.step() == SQLITE_ROW)
            docs.push_back(st.text(0));
        return docs;
    }

    std::int64_t maxJobSeq()
    {
        std::lock_guard lock(mu_);
        Statement st(db_, "SELECT COALESCE(MAX(seq), 0) FROM jobs");
        st.step();
        return sqlite3_column_int64(st.get(), 0);
    }

    /// Results are write-once; a second write for the same id fails.
    void putResult(const std::string& id, const std::string& doc)
    {
        std::lock_guard lock(mu_);
        Statement st(db_, "INSERT INTO results (id, doc) VALUES (?, ?)");
        st.bind(1, id).bind(2, doc);
        check(st.step(), SQLITE_DONE);
    }

    std::optional<std::string> findResult(const std::string& id) { return get("results", id); }

private:
    class Statement {
    public:
        Statement(sqlite3* db, const char* sql) : db_(db)
        {
            if (sqlite3_prepare_v2(db, sql, -1, &st_, nullptr) != SQLITE_OK)
                throw StoreError(std::string("prepare failed: ") + sqlite3_errmsg(db));
        }
        Statement(const Statement&) = delete;
        Statement& operator=(const Statement&) = delete;
        ~Statement() { sqlite3_finalize(st_); }

        Statement& bind(int i, const std::string& v)
        {
            sqlite3_bind_text(st_, i, v.data(), static_cast<int>(v.size()), SQLITE_TRANSIENT);
            return *this;
        }
        Statement& bind(int i, std::int64_t v)
        {
            sqlite3_bind_int64(st_, i, v);
            return *this;
        }
        int step()
        {
            int rc = sqlite3_step(st_);
            return (rc & 0xff) == SQLITE_CONSTRAINT ? SQLITE_CONSTRAINT : rc;
        }
        std::string text(int col)
        {
            auto* p = reinterpret_cast<const char*>(sqlite3_column_text(st_, col));
            return p ? std::string(p, static_cast<size_t>(sqlite3_column_bytes(st_, col))) : std::string{};
        }
        sqlite3_stmt* get() { return st_; }

    private:
        sqlite3* db_;
        sqlite3_stmt* st_ = nullptr;
    };

    std::optional<std::string> get(const std::string& table, const std::string& id)
    {
        std::lock_guard lock(mu_);
        Statement st(db_, ("SELECT doc FROM " + table + " WHERE id = ?").c_str());
        st.bind(1, id);
        if (st.step() != SQLITE_ROW)
            return std::nullopt;
        return st.text(0);
    }

    void exec(const char* sql)
    {
        char* err = nullptr;
        if (sqlite3_exec(db_, sql, nullptr, nullptr, &err) != SQLITE_OK) {
            std::string msg = err ? err : "unknown error";
            sqlite3_free(err);
            throw StoreError(msg);
        }
    }

    void check(int rc, int expected)
    {
        if (rc != expected)
            throw StoreError(std::string("store write failed: ") + sqlite3_errmsg(db_));
    }

    sqlite3* db_ = nullptr;
    std::mutex mu_;
};

} // namespace codeknow
