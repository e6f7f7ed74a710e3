#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <string>
#include <vector>

#include "mh/scenario.hpp"

namespace fs = std::filesystem;
using mh::scenario::json;
using mh::scenario::RunOutput;

namespace {

struct CommonOpts {
    std::uint64_t seed = 0;
    bool seed_set = false;
    int workers = 1;
    std::string out_dir = "mh-out";
    std::string format = "json";
};

int resolve_workers(int cli_workers, bool cli_set) {
    if (cli_set) return std::max(1, cli_workers);
    if (const char* env = std::getenv("MH_WORKERS")) {
        int w = std::atoi(env);
        if (w >= 1) return w;
    }
    return 1;
}

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in.good()) throw mh::Error(mh::errc::schema_error, "cannot open " + path);
    return json::parse(in);
}

void write_outputs(const RunOutput& out, const std::string& id, const CommonOpts& opts,
                   long long wall_ms) {
    fs::create_directories(opts.out_dir);
    {
        std::ofstream v(fs::path(opts.out_dir) / (id + ".verdict.json"));
        v << out.verdict.dump(2) << "\n";
    }
    {
        // Wall-clock data lives outside the verdict so reruns stay
        // byte-identical.
        json meta;
        meta["scenario"] = id;
        meta["wall_ms"] = wall_ms;
        std::ofstream m(fs::path(opts.out_dir) / (id + ".meta.json"));
        m << meta.dump(2) << "\n";
    }
    for (const auto& [name, content] : out.artifacts) {
        std::ofstream a(fs::path(opts.out_dir) / (id + "." + name), std::ios::binary);
        a.write(content.data(), static_cast<std::streamsize>(content.size()));
    }
}

RunOutput run_one(const json& sc, const CommonOpts& opts, int workers) {
    std::optional<std::uint64_t> seed;
    if (opts.seed_set) seed = opts.seed;
    return mh::scenario::run_scenario(sc, seed, workers);
}

std::string outcome_word(const RunOutput& out) {
    if (out.error) return "ERROR";
    if (!out.ok) return "UNEXPECTED";
    return out.violation ? "VIOLATION(expected)" : "PASS";
}

int cmd_run(const std::string& file, const CommonOpts& opts) {
    json sc;
    try {
        sc = load_json_file(file);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    auto t0 = std::chrono::steady_clock::now();
    RunOutput out = run_one(sc, opts, opts.workers);
    auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                  std::chrono::steady_clock::now() - t0)
                  .count();
    std::string id = sc.is_object() && sc.contains("id") ? sc["id"].get<std::string>() : "unknown";
    write_outputs(out, id, opts, ms);
    std::cout << id << ": " << outcome_word(out) << "\n";
    if (out.error) std::cerr << "error: " << out.error_message << "\n";
    return out.exit_code();
}

int cmd_suite(const std::string& dir, const CommonOpts& opts) {
    std::vector<std::string> files;
    if (fs::exists(dir))
        for (const auto& entry : fs::directory_iterator(dir))
            if (entry.path().extension() == ".json") files.push_back(entry.path().string());
    std::sort(files.begin(), files.end());

    struct Item {
        std::string file;
        std::string id;
        RunOutput out;
        long long ms = 0;
    };
    std::vector<Item> items(files.size());
    for (std::size_t k = 0; k < files.size(); ++k) items[k].file = files[k];

    auto work = [&](std::size_t k, int inner_workers) {
        auto t0 = std::chrono::steady_clock::now();
        try {
            json sc = load_json_file(items[k].file);
            items[k].id = sc.is_object() && sc.contains("id") ? sc["id"].get<std::string>()
                                                              : fs::path(items[k].file).stem().string();
            items[k].out = run_one(sc, opts, inner_workers);
        } catch (const std::exception& e) {
            items[k].id = fs::path(items[k].file).stem().string();
            items[k].out.error = true;
            items[k].out.ok = false;
            items[k].out.error_message = e.what();
            items[k].out.verdict = json{{"scenario", items[k].id}, {"error", e.what()}};
        }
        items[k].ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
    };

    if (opts.workers > 1) {
        std::vector<std::future<void>> futs;
        std::size_t next = 0;
        while (next < items.size() || !futs.empty()) {
            while (static_cast<int>(futs.size()) < opts.workers && next < items.size()) {
                std::size_t k = next++;
                futs.push_back(std::async(std::launch::async, work, k, 1));
            }
            futs.front().get();
            futs.erase(futs.begin());
        }
    } else {
        for (std::size_t k = 0; k < items.size(); ++k) work(k, 1);
    }

    // Deterministic merge by scenario id.
    std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) { return a.id < b.id; });

    json aggregate;
    aggregate["suite"] = dir;
    aggregate["count"] = items.size();
    json rows = json::array();
    bool any_error = false, all_ok = true;
    for (auto& item : items) {
        write_outputs(item.out, item.id, opts, item.ms);
        std::cout << item.id << ": " << outcome_word(item.out) << "\n";
        rows.push_back({{"scenario", item.id},
                        {"ok", item.out.ok},
                        {"error", item.out.error},
                        {"exit", item.out.exit_code()}});
        any_error = any_error || item.out.error;
        all_ok = all_ok && item.out.ok;
    }
    aggregate["scenarios"] = rows;
    aggregate["all_ok"] = all_ok;
    fs::create_directories(opts.out_dir);
    std::ofstream agg(fs::path(opts.out_dir) / "aggregate.json");
    agg << aggregate.dump(2) << "\n";

    if (opts.format == "csv") {
        std::ofstream csv(fs::path(opts.out_dir) / "aggregate.csv");
        csv << "scenario,ok,error,exit\n";
        for (const auto& r : rows)
            csv << r["scenario"].get<std::string>() << "," << (r["ok"].get<bool>() ? 1 : 0) << ","
                << (r["error"].get<bool>() ? 1 : 0) << "," << r["exit"].get<int>() << "\n";
    }

    if (any_error) return 1;
    return all_ok ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Scenario-driven numerical laboratory for maximum-principle sets,"
                 " barriers, varifold measures, and forced level-set flow"};
    app.require_subcommand(1);

    CommonOpts opts;
    bool workers_set = false;
    int workers_cli = 1;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--seed", opts.seed, "Seed override for randomized probes")
            ->each([&](const std::string&) { opts.seed_set = true; });
        cmd->add_option("--workers", workers_cli, "Worker cap (env MH_WORKERS as fallback)")
            ->each([&](const std::string&) { workers_set = true; });
        cmd->add_option("--out", opts.out_dir, "Output directory for reports");
        cmd->add_option("--format", opts.format, "Report format: json|csv")
            ->check(CLI::IsMember({"json", "csv"}));
    };

    std::string run_file, suite_dir;
    CLI::App* run = app.add_subcommand("run", "Run one scenario file");
    run->add_option("file", run_file, "Scenario JSON file")->required();
    add_common(run);

    CLI::App* suite = app.add_subcommand("suite", "Run every scenario in a directory");
    suite->add_option("dir", suite_dir, "Directory of scenario JSON files")->required();
    add_common(suite);

    CLI::App* fixtures = app.add_subcommand("fixtures", "Fixture registry");
    CLI::App* fixtures_list = fixtures->add_subcommand("list", "List bundled fixtures");

    CLI11_PARSE(app, argc, argv);

    opts.workers = resolve_workers(workers_cli, workers_set);

    if (run->parsed()) return cmd_run(run_file, opts);
    if (suite->parsed()) return cmd_suite(suite_dir, opts);
    if (fixtures->parsed() && fixtures_list->parsed()) {
        for (const auto& name : mh::scenario::fixture_names()) std::cout << name << "\n";
        return 0;
    }
    return 0;
}
