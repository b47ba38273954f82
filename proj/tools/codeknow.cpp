// codeknow: offline analysis and the HTTP service entry point.

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "codeknow/api.hpp"
#include "codeknow/codeknow.hpp"

namespace {

using namespace codeknow;

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct TempDir {
    fs::path path;
    TempDir()
    {
        std::string tmpl = (fs::temp_directory_path() / "codeknow-XXXXXX").string();
        if (!mkdtemp(tmpl.data()))
            throw CloneFailure("cannot create temporary directory");
        path = tmpl;
    }
    ~TempDir()
    {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

struct AnalyzeArgs {
    std::string source;
    std::string branch;
    std::optional<double> threshold;
    std::vector<std::string> exclude;
    std::string configPath;
    std::string aliasFile;
};

void addAnalysisOptions(CLI::App* cmd, AnalyzeArgs& a)
{
    cmd->add_option("source", a.source, "Repository URL or local path")->required();
    cmd->add_option("-b,--branch", a.branch, "Branch to analyze (default: remote default branch)");
    cmd->add_option("--threshold", a.threshold, "Normalized DOE cutoff for experts, in (0, 1]");
    cmd->add_option("--exclude", a.exclude, "Glob of paths to leave out (repeatable)");
    cmd->add_option("--config", a.configPath, "JSON configuration file");
    cmd->add_option("--alias-file", a.aliasFile, "Identity merge rules, 'canonical <- alias' per line");
}

/// Resolves flags into an analysis config; throws ValidationError on bad input.
AnalysisConfig analysisConfig(const AnalyzeArgs& a)
{
    AnalysisConfig config;
    if (!a.configPath.empty())
        config = serviceConfigFromJson(readJsonFile(a.configPath)).pipeline.analysis;
    if (a.threshold)
        config.expertThreshold = *a.threshold;
    config.exclude.insert(config.exclude.end(), a.exclude.begin(), a.exclude.end());
    if (!a.aliasFile.empty()) {
        auto extra = loadAliasOverrides(a.aliasFile);
        config.aliases.insert(extra.begin(), extra.end());
    }
    config.validate();
    return config;
}

RepositoryVersion runAnalysis(const AnalyzeArgs& a, const AnalysisConfig& config)
{
    TempDir workdir;
    std::optional<std::string> branch;
    if (!a.branch.empty())
        branch = a.branch;
    return analyzeRepository(RepoSource(a.source, branch), workdir.path, config,
                             [](Stage s) { std::cerr << "[codeknow] " << stageLabel(s) << "\n"; });
}

int serve(const std::string& configPath)
{
    ServiceConfig config;
    if (!configPath.empty())
        config = serviceConfigFromJson(readJsonFile(configPath));
    applyEnvironment(config);

    Pipeline pipeline(config.pipeline);
    httplib::Server server;
    mountRoutes(server, pipeline, ApiOptions{config.corsOrigin});
    spdlog::info("listening on {}:{}", config.host, config.port);
    if (!server.listen(config.host, config.port)) {
        spdlog::error("cannot listen on {}:{}", config.host, config.port);
        return kExitFailure;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Developer knowledge concentration and Truck Factor analysis"};
    app.require_subcommand(1);

    AnalyzeArgs analyzeArgs;
    std::string format = "tree";
    std::string output;
    auto* analyze = app.add_subcommand("analyze", "Analyze a repository and print its knowledge tree");
    addAnalysisOptions(analyze, analyzeArgs);
    analyze->add_option("--format", format, "Output format")->check(CLI::IsMember({"json", "tree"}));
    analyze->add_option("-o,--output", output, "Write output to a file instead of stdout");

    AnalyzeArgs tfArgs;
    std::string subpath;
    auto* tf = app.add_subcommand("tf", "Print the Truck Factor of one directory or file");
    addAnalysisOptions(tf, tfArgs);
    tf->add_option("--path", subpath, "Repository-relative path ('.' for the whole repository)")->required();

    std::string serveConfig;
    auto* serveCmd = app.add_subcommand("serve", "Run the HTTP service");
    serveCmd->add_option("--config", serveConfig, "JSON configuration file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*serveCmd)
            return serve(serveConfig);

        auto& args = *analyze ? analyzeArgs : tfArgs;
        AnalysisConfig config;
        try {
            config = analysisConfig(args);
        } catch (const ValidationError& e) {
            std::cerr << "error: " << e.what() << "\n";
            return kExitUsage;
        }

        auto version = runAnalysis(args, config);

        if (*tf) {
            const auto* node = version.root.find(subpath);
            if (!node) {
                std::cerr << "error: no analyzed file or directory at '" << subpath << "'\n";
                return kExitFailure;
            }
            std::cout << subpath << ": TF=" << node->truckFactor.value << "\n";
            int rank = 0;
            for (const auto& id : node->truckFactor.removedDevelopers) {
                const DeveloperSummary* dev = nullptr;
                for (const auto& d : version.developers)
                    if (d.identity.canonicalId == id)
                        dev = &d;
                std::cout << "  " << ++rank << ". " << (dev ? dev->identity.displayName : id) << " <"
                          << (dev ? dev->identity.email : "") << ">\n";
            }
            return 0;
        }

        std::string text = format == "json" ? dumpReport(version) : renderTree(version.root);
        if (output.empty()) {
            std::cout << text;
        } else {
            std::ofstream out(output, std::ios::binary);
            out << text;
            if (!out) {
                std::cerr << "error: cannot write " << output << "\n";
                return kExitFailure;
            }
        }
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    }
}
