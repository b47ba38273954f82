#pragma once

// Scripted git repositories for tests. Every commit gets explicit author and
// committer identities and dates, so hashes are reproducible.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <stdlib.h>

#include "codeknow/process.hpp"

namespace fixture {

namespace fs = std::filesystem;

class TempDir {
public:
    TempDir()
    {
        std::string tmpl = (fs::temp_directory_path() / "codeknow-test-XXXXXX").string();
        if (!mkdtemp(tmpl.data()))
            throw std::runtime_error("mkdtemp failed");
        path_ = tmpl;
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    ~TempDir()
    {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

struct Author {
    std::string name;
    std::string email;
};

inline constexpr std::int64_t kDay = 86400;

class ScriptedRepo {
public:
    explicit ScriptedRepo(fs::path dir, const std::string& initialBranch = "main") : dir_(std::move(dir))
    {
        fs::create_directories(dir_);
        git({"init", "--quiet", "--initial-branch=" + initialBranch});
    }

    const fs::path& dir() const { return dir_; }

    void write(const std::string& path, const std::string& content)
    {
        fs::create_directories((dir_ / path).parent_path());
        std::ofstream(dir_ / path, std::ios::binary) << content;
    }

    void append(const std::string& path, const std::string& content)
    {
        std::ofstream(dir_ / path, std::ios::binary | std::ios::app) << content;
    }

    void move(const std::string& from, const std::string& to) { git({"mv", from, to}); }
    void remove(const std::string& path) { git({"rm", "--quiet", path}); }

    std::string commit(const Author& who, std::int64_t ts, const std::string& message = "change")
    {
        git({"add", "--all"});
        run({"git", "-C", dir_.string(), "commit", "--quiet", "--allow-empty", "-m", message}, who, ts);
        return head();
    }

    /// Starts a --no-ff merge that stops before committing; finish with commit().
    void mergeNoCommit(const std::string& branch, const Author& who, std::int64_t ts)
    {
        run({"git", "-C", dir_.string(), "merge", "--quiet", "--no-ff", "--no-commit", branch}, who, ts);
    }

    void git(std::vector<std::string> args)
    {
        std::vector<std::string> argv{"git", "-C", dir_.string()};
        argv.insert(argv.end(), args.begin(), args.end());
        run(argv, {"Fixture", "fixture@example.com"}, 0);
    }

    std::string head()
    {
        auto r = codeknow::runProcess({"git", "-C", dir_.string(), "rev-parse", "HEAD"}, env({}, 0));
        return r.out.substr(0, r.out.find('\n'));
    }

private:
    static std::map<std::string, std::string> env(const Author& who, std::int64_t ts)
    {
        std::map<std::string, std::string> e{{"GIT_CONFIG_NOSYSTEM", "1"},
                                             {"GIT_CONFIG_GLOBAL", "/dev/null"},
                                             {"GIT_AUTHOR_NAME", who.name},
                                             {"GIT_AUTHOR_EMAIL", who.email},
                                             {"GIT_COMMITTER_NAME", who.name},
                                             {"GIT_COMMITTER_EMAIL", who.email}};
        if (ts > 0) {
            auto date = "@" + std::to_string(ts) + " +0000";
            e["GIT_AUTHOR_DATE"] = date;
            e["GIT_COMMITTER_DATE"] = date;
        }
        return e;
    }

    void run(const std::vector<std::string>& argv, const Author& who, std::int64_t ts)
    {
        auto r = codeknow::runProcess(argv, env(who, ts));
        if (!r.ok())
            throw std::runtime_error("fixture command failed: " + argv[3] + ": " + r.err);
    }

    fs::path dir_;
};

inline std::string lines(const std::string& stem, int from, int to)
{
    std::string s;
    for (int i = from; i <= to; ++i)
        s += stem + " line " + std::to_string(i) + "\n";
    return s;
}

// The standard fixture: three developers (one with two aliases), ten commits
// including a pure rename, a feature branch joined by a --no-ff merge that
// adds a line of its own, and a binary file.
inline constexpr std::int64_t kReferenceTs = 1700000000;

inline const Author kAlice{"Alice", "alice@example.com"};
inline const Author kAliceAlias{"Alice Smith", "ALICE@Example.com"};
inline const Author kBob{"Bob", "bob@example.com"};
inline const Author kCarol{"Carol", "carol@example.com"};

inline std::string buildStandardFixture(const fs::path& dir)
{
    const auto T = kReferenceTs;
    ScriptedRepo repo(dir);

    repo.write("src/core.txt", lines("core", 1, 10));
    repo.write("README.md", lines("readme", 1, 4));
    repo.write("assets/logo.png", std::string("\x89PNG\r\n\x1a\n\0\0\0\rIHDR", 16));
    repo.commit(kCarol, T - 500 * kDay, "initial import");

    repo.write("src/util.txt", lines("util", 1, 6));
    repo.append("src/core.txt", lines("core", 11, 15));
    repo.commit(kBob, T - 450 * kDay, "add util");

    repo.write("docs/guide.txt", lines("guide", 1, 8));
    repo.commit(kCarol, T - 420 * kDay, "add guide");

    repo.move("docs/guide.txt", "docs/manual.txt");
    repo.commit(kCarol, T - 400 * kDay, "rename guide");

    repo.write("src/util.txt", lines("util", 2, 6) + lines("util", 7, 10));
    repo.commit(kAliceAlias, T - 380 * kDay, "rework util");

    repo.write("README.md", lines("readme", 1, 3));
    repo.commit(kBob, T - 365 * kDay, "trim readme");

    repo.git({"checkout", "--quiet", "-b", "feature"});
    repo.write("lib/extra.txt", lines("extra", 1, 5));
    repo.append("src/core.txt", lines("core", 16, 17));
    repo.commit(kAlice, T - 30 * kDay, "feature work");

    repo.git({"checkout", "--quiet", "main"});
    repo.write("src/new.txt", lines("new", 1, 3));
    repo.commit(kAlice, T - 20 * kDay, "add new");

    repo.append("docs/manual.txt", lines("manual", 1, 2));
    repo.commit(kAlice, T - 10 * kDay, "extend manual");

    repo.mergeNoCommit("feature", kAlice, T);
    repo.append("lib/extra.txt", "added by the merge itself\n");
    return repo.commit(kAlice, T, "merge feature");
}

} // namespace fixture
