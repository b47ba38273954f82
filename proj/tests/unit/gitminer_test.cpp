#include <gtest/gtest.h>

#include "codeknow/gitminer.hpp"
#include "support/fixture.hpp"
#include "support/fixture_expected.hpp"

using namespace codeknow;
using fixture::kDay;
using fixture::ScriptedRepo;
using fixture::TempDir;

namespace {

const fixture::Author kAnn{"Ann", "ann@example.com"};
const fixture::Author kBen{"Ben", "ben@example.com"};
constexpr std::int64_t T0 = 1'600'000'000;

Checkout cloneOf(const fs::path& src, const fs::path& work, std::optional<std::string> branch = "main")
{
    return cloneRepository(RepoSource(src.string(), std::move(branch)), work);
}

const ContributionFact* factFor(const std::vector<ContributionFact>& facts, const std::string& dev,
                                const std::string& path)
{
    for (const auto& f : facts)
        if (f.developerId == dev && f.path == path)
            return &f;
    return nullptr;
}

} // namespace

TEST(ParseLog, ReadsRawAndNumstatRecords)
{
    auto z = [](std::string s) { return s + '\0'; };
    std::string out = "\x01" "abc\x02" "Ann\x02" "ann@x\x02" "100";
    out += z("") + z("\n:100644 100644 1111 2222 M") + z("src/a.txt");
    out += z(":000000 100644 0000 3333 A") + z("b.txt");
    out += z(":100644 100644 4444 4444 R100") + z("old.txt") + z("new.txt");
    out += z("3\t1\tsrc/a.txt") + z("7\t0\tb.txt") + z("0\t0\t") + z("old.txt") + z("new.txt");
    out += "\x01" "def\x02" "Ben\x02\x02" "50";
    out += z("") + z("\n:100644 100644 5555 6666 M") + z("bin.dat") + z("-\t-\tbin.dat");

    auto history = parseLog(out);
    ASSERT_EQ(history.size(), 2u);
    const auto& c = history[0];
    EXPECT_EQ(c.hash, "abc");
    EXPECT_EQ(c.author, (RawAuthor{"Ann", "ann@x"}));
    EXPECT_EQ(c.authorTs, 100);
    ASSERT_EQ(c.changes.size(), 3u);
    EXPECT_EQ(c.changes[0].path, "src/a.txt");
    EXPECT_EQ(c.changes[0].adds, 3);
    EXPECT_EQ(c.changes[1].status, 'A');
    EXPECT_EQ(c.changes[1].adds, 7);
    EXPECT_EQ(c.changes[2].status, 'R');
    EXPECT_EQ(c.changes[2].oldPath, "old.txt");
    EXPECT_EQ(c.changes[2].path, "new.txt");
    EXPECT_EQ(history[1].author.email, "");
    ASSERT_EQ(history[1].changes.size(), 1u);
    EXPECT_EQ(history[1].changes[0].adds, 0);
}

TEST(ParseLog, RejectsMalformedHeader)
{
    EXPECT_THROW(parseLog("\x01" "abc" "\x02" "Ann"), CorruptHistory);
}

TEST(CountLines, CountsUnterminatedLastLine)
{
    EXPECT_EQ(countLines(""), 0);
    EXPECT_EQ(countLines("a"), 1);
    EXPECT_EQ(countLines("a\n"), 1);
    EXPECT_EQ(countLines("a\nb"), 2);
    EXPECT_EQ(countLines("\n\n"), 2);
}

TEST(LooksBinary, DetectsNulBytes)
{
    EXPECT_FALSE(looksBinary("plain text\n"));
    EXPECT_TRUE(looksBinary(std::string("ab\0cd", 5)));
}

TEST(IsExcluded, MatchesGlobPatterns)
{
    std::vector<std::string> patterns{"vendor/*", "*.min.js"};
    EXPECT_TRUE(isExcluded("vendor/lib/x.c", patterns));
    EXPECT_TRUE(isExcluded("web/app.min.js", patterns));
    EXPECT_FALSE(isExcluded("src/vendor.c", patterns));
}

TEST(CloneRepository, LocalBranch)
{
    TempDir tmp;
    ScriptedRepo repo(tmp.path() / "src");
    repo.write("f.txt", "x\n");
    auto tip = repo.commit(kAnn, T0);
    auto checkout = cloneOf(repo.dir(), tmp.path() / "work");
    EXPECT_EQ(checkout.headCommit, tip);
    EXPECT_EQ(checkout.branch, "main");
    EXPECT_TRUE(fs::exists(checkout.dir / "f.txt"));
}

TEST(CloneRepository, SelectsRequestedBranch)
{
    TempDir tmp;
    ScriptedRepo repo(tmp.path() / "src");
    repo.write("f.txt", "x\n");
    repo.commit(kAnn, T0);
    repo.git({"checkout", "--quiet", "-b", "topic"});
    repo.write("g.txt", "y\n");
    auto topicTip = repo.commit(kAnn, T0 + 10);
    repo.git({"checkout", "--quiet", "main"});
    auto checkout = cloneOf(repo.dir(), tmp.path() / "work", "topic");
    EXPECT_EQ(checkout.headCommit, topicTip);
    EXPECT_EQ(checkout.branch, "topic");
}

TEST(CloneRepository, UnknownBranch)
{
    TempDir tmp;
    ScriptedRepo repo(tmp.path() / "src");
    repo.write("f.txt", "x\n");
    repo.commit(kAnn, T0);
    EXPECT_THROW(cloneOf(repo.dir(), tmp.path() / "work", "nope"), UnknownBranch);
}

TEST(CloneRepository, DefaultBranchWhenOmitted)
{
    TempDir tmp;
    ScriptedRepo repo(tmp.path() / "src", "trunk");
    repo.write("f.txt", "x\n");
    auto tip = repo.commit(kAnn, T0);
    auto checkout = cloneOf(repo.dir(), tmp.path() / "work", std::nullopt);
    EXPECT_EQ(checkout.headCommit, tip);
    EXPECT_EQ(checkout.branch, "trunk");
}

TEST(CloneRepository, UnreachableRemote)
{
    TempDir tmp;
    EXPECT_THROW(cloneOf(tmp.path() / "missing", tmp.path() / "work"), UnreachableRemote);
}

TEST(CloneRepository, EmptyRepositoryIsAMiningError)
{
    TempDir tmp;
    ScriptedRepo repo(tmp.path() / "src");
    EXPECT_THROW(cloneOf(repo.dir(), tmp.path() / "work", std::nullopt), MiningError);
}

TEST(CloneRepository, ShallowSourceIsRejected)
{
    TempDir tmp;
    ScriptedRepo repo(tmp.path() / "src");
    for (int i = 0; i < 3; ++i) {
        repo.write("f.txt", fixture::lines("f", 1, i + 1));
        repo.commit(kAnn, T0 + i);
    }
    auto shallow = tmp.path() / "shallow";
    auto r = runProcess({"git", "clone", "--quiet", "--depth", "1", "file://" + repo.dir().string(), shallow.string()});
    ASSERT_TRUE(r.ok()) << r.err;
    EXPECT_THROW(cloneOf(shallow, tmp.path() / "work"), MiningError);
}

TEST(RepoSource, RejectsEmptyUrl)
{
    EXPECT_THROW(RepoSource(""), ValidationError);
    EXPECT_FALSE(RepoSource("x", "").branch.has_value());
}

TEST(EnumerateFiles, SkipsBinaryAndEmptyFiles)
{
    TempDir tmp;
    ScriptedRepo repo(tmp.path() / "src");
    repo.write("a.txt", "1\n2\n");
    repo.write("b/c.txt", "1\n");
    repo.write("d.md", "x");
    repo.write("img.png", std::string("\x89PNG\0\0\0", 8));
    repo.write("empty.txt", "");
    repo.commit(kAnn, T0);
    auto checkout = cloneOf(repo.dir(), tmp.path() / "work");
    auto history = readHistory(checkout);
    auto ids = resolveIdentities(collectAuthors(history));
    auto files = enumerateFiles(checkout, history, ids);
    ASSERT_EQ(files.size(), 3u);
    EXPECT_EQ(files[0], (FileRecord{"a.txt", 2, "ann@example.com", {}}));
    EXPECT_EQ(files[1].path, "b/c.txt");
    EXPECT_EQ(files[2].path, "d.md");
    EXPECT_EQ(files[2].loc, 1);

    auto excluded = enumerateFiles(checkout, history, ids, {"b/*"});
    EXPECT_EQ(excluded.size(), 2u);
}

TEST(EnumerateFiles, RenameKeepsCreator)
{
    TempDir tmp;
    ScriptedRepo repo(tmp.path() / "src");
    repo.write("a.txt", fixture::lines("a", 1, 10));
    repo.commit(kAnn, T0);
    repo.move("a.txt", "b.txt");
    repo.commit(kBen, T0 + kDay);
    auto checkout = cloneOf(repo.dir(), tmp.path() / "work");
    auto mined = mine(checkout);
    ASSERT_EQ(mined.files.size(), 1u);
    EXPECT_EQ(mined.files[0], (FileRecord{"b.txt", 10, "ann@example.com", {"a.txt"}}));
    // the pure rename adds no lines
    const auto* ben = factFor(mined.facts, "ben@example.com", "b.txt");
    ASSERT_NE(ben, nullptr);
    EXPECT_EQ(ben->adds, 0);
    EXPECT_FALSE(ben->firstAuthorship);
}

TEST(ExtractContributionFacts, AddsAndFirstAuthorship)
{
    TempDir tmp;
    ScriptedRepo repo(tmp.path() / "src");
    repo.write("f.txt", fixture::lines("f", 1, 10));
    repo.commit(kAnn, T0);
    repo.append("f.txt", fixture::lines("f", 11, 15));
    repo.commit(kBen, T0 + kDay);
    repo.write("f.txt", fixture::lines("f", 1, 12));
    repo.commit({"Cy", "cy@example.com"}, T0 + 2 * kDay);
    auto mined = mine(cloneOf(repo.dir(), tmp.path() / "work"));
    EXPECT_EQ(mined.facts, (std::vector<ContributionFact>{
                               {"ann@example.com", "f.txt", 10, true, T0},
                               {"ben@example.com", "f.txt", 5, false, T0 + kDay},
                               {"cy@example.com", "f.txt", 0, false, T0 + 2 * kDay},
                           }));
}

TEST(Summarize, CountsDevelopersCommitsFiles)
{
    TempDir tmp;
    ScriptedRepo repo(tmp.path() / "src");
    for (int i = 0; i < 7; ++i) {
        repo.write("f" + std::to_string(i % 3) + ".txt", fixture::lines("v", 1, i + 1));
        repo.commit(i % 2 ? kBen : kAnn, T0 + i * kDay);
    }
    auto mined = mine(cloneOf(repo.dir(), tmp.path() / "work"));
    EXPECT_EQ(mined.summary.developerCount, 2);
    EXPECT_EQ(mined.summary.commitCount, 7);
    EXPECT_EQ(mined.summary.fileCount, 3);
    EXPECT_EQ(mined.summary.referenceTs, T0 + 6 * kDay);
}

TEST(Summarize, DeveloperOfExcludedFilesOnlyIsNotCounted)
{
    TempDir tmp;
    ScriptedRepo repo(tmp.path() / "src");
    repo.write("src/a.txt", "a\n");
    repo.commit(kAnn, T0);
    repo.write("vendor/v.txt", "v\n");
    repo.commit(kBen, T0 + 1);
    auto mined = mine(cloneOf(repo.dir(), tmp.path() / "work"), MiningOptions{{"vendor/*"}, {}});
    EXPECT_EQ(mined.summary.developerCount, 1);
    ASSERT_EQ(mined.developers.size(), 1u);
    EXPECT_EQ(mined.developers[0].canonicalId, "ann@example.com");
}

class StandardFixture : public ::testing::Test {
protected:
    static void SetUpTestSuite()
    {
        tmp_ = new TempDir;
        head_ = fixture::buildStandardFixture(tmp_->path() / "src");
    }
    static void TearDownTestSuite()
    {
        delete tmp_;
        tmp_ = nullptr;
    }

    MiningResult mineFresh(const std::string& workName)
    {
        return mine(cloneOf(tmp_->path() / "src", tmp_->path() / workName));
    }

    static inline TempDir* tmp_ = nullptr;
    static inline std::string head_;
};

TEST_F(StandardFixture, FactsMatchScript)
{
    auto mined = mineFresh("w1");
    std::vector<ContributionFact> want;
    for (const auto& f : expected::kFacts)
        want.push_back({f.dev, f.path, f.adds, f.fa, fixture::kReferenceTs - f.daysBefore * kDay});
    EXPECT_EQ(mined.facts, want);

    ASSERT_EQ(mined.files.size(), expected::kLoc.size());
    for (const auto& f : mined.files)
        EXPECT_EQ(f.loc, expected::kLoc.at(f.path)) << f.path;
    EXPECT_EQ(mined.files[1].renamedFrom, std::vector<std::string>{"docs/guide.txt"});
    EXPECT_EQ(mined.files[1].creatorId, expected::kCarol);
}

TEST_F(StandardFixture, SummaryAndAliases)
{
    auto mined = mineFresh("w2");
    EXPECT_EQ(mined.summary.headCommit, head_);
    EXPECT_EQ(mined.summary.referenceTs, fixture::kReferenceTs);
    EXPECT_EQ(mined.summary.developerCount, 3);
    EXPECT_EQ(mined.summary.commitCount, expected::kCommits);
    EXPECT_EQ(mined.summary.fileCount, 6);
    const auto* alice = mined.identities.find(expected::kAlice);
    ASSERT_NE(alice, nullptr);
    EXPECT_EQ(alice->aliases.size(), 2u);
    EXPECT_EQ(alice->displayName, "Alice");
}

TEST_F(StandardFixture, MiningIsDeterministic)
{
    auto a = mineFresh("w3");
    auto b = mineFresh("w4");
    EXPECT_EQ(a.files, b.files);
    EXPECT_EQ(a.facts, b.facts);
    EXPECT_EQ(a.developers, b.developers);
    EXPECT_EQ(a.summary, b.summary);
}
