// pulselabel: operator CLI for the ingestion service, simulator and reports.

#include "pulselabel/activity.hpp"
#include "pulselabel/analytics.hpp"
#include "pulselabel/config.hpp"
#include "pulselabel/errors.hpp"
#include "pulselabel/http_api.hpp"
#include "pulselabel/replay.hpp"
#include "pulselabel/service.hpp"
#include "pulselabel/simulator.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <pthread.h>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pulselabel;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct Globals {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir = "out";
    std::string data_dir;
};

ServiceConfig resolve_config(const Globals& g) {
    std::optional<fs::path> file;
    if (!g.config_path.empty()) {
        if (!fs::exists(g.config_path)) throw std::runtime_error("config file not found: " + g.config_path);
        file = g.config_path;
    }
    auto cfg = load_config(file);
    if (g.seed) cfg.engine.seed = *g.seed;
    if (!g.data_dir.empty()) cfg.data_dir = g.data_dir;
    if (cfg.data_dir.empty()) cfg.data_dir = (fs::path(g.out_dir) / "data").string();
    return cfg;
}

void print_header(const std::string& command, const ServiceConfig& cfg) {
    std::cerr << "# pulselabel " << command << " seed=" << cfg.engine.seed
              << " config=" << to_json(cfg).dump() << '\n';
}

void require_file(const std::string& path) {
    if (!fs::exists(path)) throw std::runtime_error("file not found: " + path);
}

store::Snapshot load_snapshot(const ServiceConfig& cfg) {
    if (!fs::exists(cfg.data_dir)) throw std::runtime_error("no samples: " + cfg.data_dir + " does not exist");
    store::Store st{fs::path(cfg.data_dir)};
    auto snap = st.snapshot();
    if (snap.samples.empty()) throw std::runtime_error("no samples in " + cfg.data_dir);
    return snap;
}

std::vector<std::string> report_subjects(const store::Snapshot& snap, const std::string& subject) {
    if (!subject.empty()) return {subject};
    return snap.subjects();
}

int cmd_serve(const ServiceConfig& cfg, const std::string& host, int port) {
    // Block termination signals in every thread; the main thread waits for them.
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);

    service::Service svc(cfg, service::load_or_train_model(cfg));
    http::ApiServer server(svc);
    const int bound = server.start(host, port);
    std::cout << json{{"listening", host + ":" + std::to_string(bound)},
                      {"restore", {{"subjects_from_checkpoint", svc.restore_report().subjects_from_checkpoint},
                                   {"samples_replayed", svc.restore_report().samples_replayed},
                                   {"queries_recovered", svc.restore_report().queries_recovered}}}}
                     .dump()
              << std::endl;
    int sig = 0;
    sigwait(&set, &sig);
    server.stop();
    svc.checkpoint_all();
    return 0;
}

int cmd_simulate(const ServiceConfig& cfg, std::size_t subjects, double days,
                 const std::string& output) {
    sim::DatasetOptions o;
    o.subjects = subjects;
    o.days = days;
    o.seed = cfg.engine.seed;
    o.period_s = cfg.period_s;
    o.window_s = cfg.window_s;
    const auto cohort = sim::make_cohort(o);
    const auto n = sim::write_dataset(cohort, output);
    std::cout << json{{"dataset", output}, {"subjects", subjects}, {"samples", n}}.dump() << '\n';
    return 0;
}

int cmd_replay(const ServiceConfig& cfg, const std::string& input, double speed, bool sort,
               std::size_t abort_after) {
    require_file(input);
    auto clock = std::make_shared<service::ManualClock>();
    service::Service svc(cfg, service::load_or_train_model(cfg), clock);
    replay::ReplayOptions opts;
    opts.speed = speed;
    opts.sort = sort;
    if (abort_after > 0) {
        // Test hook: die abruptly, as a crash would, after N samples.
        opts.after_sample = [abort_after](std::size_t n) {
            if (n >= abort_after) std::raise(SIGKILL);
        };
    }
    const auto report = replay::run(svc, *clock, input, opts);
    svc.checkpoint_all();
    json out = replay::to_json(report);
    out["data_dir"] = cfg.data_dir;
    const auto& rr = svc.restore_report();
    out["restore"] = {{"subjects_from_checkpoint", rr.subjects_from_checkpoint},
                      {"samples_replayed", rr.samples_replayed},
                      {"labels_replayed", rr.labels_replayed},
                      {"decision_mismatches", rr.decision_mismatches},
                      {"queries_recovered", rr.queries_recovered}};
    std::cout << out.dump() << '\n';
    return 0;
}

std::vector<activity::LabeledRow> corpus(const ServiceConfig& cfg, const std::string& csv,
                                         std::size_t subjects, double days, std::size_t windows) {
    if (!csv.empty()) {
        require_file(csv);
        return activity::read_labeled_csv(csv);
    }
    sim::DatasetOptions o;
    o.subjects = subjects;
    o.days = days;
    o.seed = cfg.engine.seed;
    return activity::simulated_corpus(sim::make_cohort(o), windows);
}

int cmd_train(const ServiceConfig& cfg, const std::string& csv, std::size_t subjects,
              std::size_t windows, const std::string& output) {
    auto rows = corpus(cfg, csv, subjects, 1.0, windows);
    const std::size_t n = rows.size();
    const auto model = activity::train_activity_model(std::move(rows), {}, cfg.engine.seed);
    activity::save_model(model, output);
    std::cout << json{{"model", output}, {"rows", n}, {"digest", model.digest()}}.dump() << '\n';
    return 0;
}

int cmd_eval(const ServiceConfig& cfg, const Globals& g, const std::string& csv,
             std::size_t subjects, std::size_t windows, std::size_t k) {
    const auto rows = corpus(cfg, csv, subjects, 1.0, windows);
    const auto rep = activity::evaluate_leave_k_out(rows, k, {}, cfg.engine.seed);
    const auto path = fs::path(g.out_dir) / "activity_eval.csv";
    fs::create_directories(path.parent_path());
    std::ofstream out(path);
    out << "held_out,rows,accuracy\n";
    for (const auto& f : rep.folds) {
        std::string ids;
        for (const auto& s : f.held_out) ids += (ids.empty() ? "" : "+") + s;
        out << ids << ',' << f.rows << ',' << f.accuracy << '\n';
    }
    std::cout << json{{"folds", rep.folds.size()}, {"k", k}, {"mean_accuracy", rep.mean_accuracy},
                      {"csv", path.string()}}
                     .dump()
              << '\n';
    return 0;
}

int cmd_report(const ServiceConfig& cfg, const Globals& g, const std::string& kind,
               const std::string& subject, const std::string& group_by, double d,
               std::optional<std::size_t> min_count) {
    const auto snap = load_snapshot(cfg);
    const fs::path out_dir = g.out_dir;
    json summary{{"report", kind}};
    if (kind == "coverage") {
        // One file; rows for every requested subject.
        const auto path = out_dir / "fig3_coverage.csv";
        fs::create_directories(out_dir);
        std::ofstream out(path);
        out.precision(10);
        out << "subject_id,labels,F\n";
        json finals = json::object();
        for (const auto& s : report_subjects(snap, subject)) {
            const auto curve = analytics::coverage_curve(snap, s, d, cfg.engine.n_initial);
            for (const auto& p : curve) out << s << ',' << p.labels << ',' << p.f << '\n';
            finals[s] = {{"labels", curve.size()}, {"final_F", curve.empty() ? 1.0 : curve.back().f}};
        }
        summary["csv"] = path.string();
        summary["subjects"] = finals;
    } else if (kind == "temporal") {
        const auto g_by = analytics::group_by_from_string(group_by);
        if (!g_by) throw ValidationError("--group-by", "expected all, activity or stress");
        std::vector<analytics::TemporalProfile> profiles;
        json skipped = json::array();
        for (const auto& s : report_subjects(snap, subject)) {
            auto r = analytics::temporal_profile(snap, s, *g_by);
            for (auto& p : r.profiles) profiles.push_back(std::move(p));
            for (auto& k : r.skipped) {
                std::cerr << "notice: " << s << " group " << k << " skipped\n";
                skipped.push_back(s + ": " + k);
            }
        }
        summary["csv"] = analytics::write_temporal_csv(out_dir, profiles, *g_by).string();
        summary["skipped"] = skipped;
    } else if (kind == "quality") {
        const auto r = analytics::quality_by_activity(snap, min_count.value_or(cfg.min_group_count));
        for (const auto& [label, n] : r.omitted) {
            std::cerr << "notice: " << activity::to_string(label) << " omitted (" << n
                      << " samples)\n";
        }
        summary["csv"] = analytics::write_quality_csv(out_dir, r).string();
        summary["activities"] = r.rows.size();
    } else {
        const auto s = analytics::response_stats(snap);
        summary["cdf_csv"] = analytics::write_response_cdf_csv(out_dir, s).string();
        summary["rate_csv"] = analytics::write_response_rate_csv(out_dir, s).string();
        summary["queries"] = snap.queries.size();
        summary["responses"] = s.all.answered;
    }
    std::cout << summary.dump() << '\n';
    return 0;
}

int cmd_checkpoint(const ServiceConfig& cfg) {
    if (!fs::exists(cfg.data_dir)) throw std::runtime_error("data directory not found: " + cfg.data_dir);
    service::Service svc(cfg, nullptr);
    svc.checkpoint_all();
    const auto& rr = svc.restore_report();
    std::cout << json{{"subjects", svc.subjects().size()},
                      {"subjects_from_checkpoint", rr.subjects_from_checkpoint},
                      {"samples_replayed", rr.samples_replayed},
                      {"labels_replayed", rr.labels_replayed},
                      {"decision_mismatches", rr.decision_mismatches},
                      {"queries_recovered", rr.queries_recovered}}
                     .dump()
              << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"pulselabel: PPG ingestion, adaptive EMA labeling and reports"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config_path, "JSON config file");
    app.add_option("--seed", g.seed, "Seed (overrides the config)");
    app.add_option("--out-dir", g.out_dir, "Directory for outputs")->capture_default_str();
    app.add_option("--data-dir", g.data_dir, "Service data directory (default <out-dir>/data)");

    auto* serve = app.add_subcommand("serve", "Run the HTTP service");
    std::string host;
    int port = -1;
    serve->add_option("--host", host, "Bind address (default from config)");
    serve->add_option("--port", port, "Port, 0 for any (default from config)");

    auto* simulate = app.add_subcommand("simulate", "Write a simulated replay dataset");
    std::size_t subjects = 4;
    double days = 3.0;
    std::string output;
    simulate->add_option("--subjects", subjects)->capture_default_str()->check(CLI::PositiveNumber);
    simulate->add_option("--days", days)->capture_default_str()->check(CLI::PositiveNumber);
    simulate->add_option("--output", output, "Dataset path (default <out-dir>/sim.ds)");

    auto* rep = app.add_subcommand("replay", "Feed a dataset through the service");
    std::string input;
    double speed = 0.0;
    bool sort = false;
    std::size_t abort_after = 0;
    rep->add_option("--input", input)->required();
    rep->add_option("--speed", speed, "Pacing factor; 0 = unpaced")->capture_default_str()->check(CLI::NonNegativeNumber);
    rep->add_flag("--sort", sort, "Reorder out-of-order samples");
    rep->add_option("--abort-after", abort_after)->group("");

    auto* train = app.add_subcommand("train-activity", "Train and save the activity model");
    std::string csv;
    std::size_t windows = 10;
    train->add_option("--csv", csv, "Labeled feature CSV (default: simulator corpus)");
    train->add_option("--subjects", subjects)->capture_default_str();
    train->add_option("--windows", windows, "Windows per context per subject")->capture_default_str();
    train->add_option("--output", output, "Model path (default <out-dir>/activity_model.json)");

    auto* eval = app.add_subcommand("eval-activity", "Leave-k-subjects-out evaluation");
    std::size_t k = 2;
    eval->add_option("--csv", csv, "Labeled feature CSV (default: simulator corpus)");
    eval->add_option("--subjects", subjects)->capture_default_str();
    eval->add_option("--windows", windows)->capture_default_str();
    eval->add_option("-k", k, "Subjects held out per fold")->capture_default_str()->check(CLI::PositiveNumber);

    auto* report = app.add_subcommand("report", "Write an analytics report as CSV");
    std::string kind, subject, group_by = "activity";
    double d = -1.0;
    std::optional<std::size_t> min_count;
    report->add_option("kind", kind)->required()->check(
        CLI::IsMember({"coverage", "temporal", "quality", "response"}));
    report->add_option("--subject", subject, "Subject id (default: all)");
    report->add_option("--group-by", group_by, "temporal: all | activity | stress")->capture_default_str();
    report->add_option("--D", d, "coverage distance (default from config)");
    report->add_option("--min-count", min_count, "quality: minimum samples per activity");

    auto* checkpoint = app.add_subcommand("checkpoint", "Restore from the store and write checkpoints");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        auto cfg = resolve_config(g);
        const std::string name = app.get_subcommands().front()->get_name();
        print_header(name, cfg);
        if (serve->parsed()) {
            return cmd_serve(cfg, host.empty() ? cfg.host : host, port < 0 ? cfg.port : port);
        }
        if (simulate->parsed()) {
            return cmd_simulate(cfg, subjects, days,
                                output.empty() ? (fs::path(g.out_dir) / "sim.ds").string() : output);
        }
        if (rep->parsed()) return cmd_replay(cfg, input, speed, sort, abort_after);
        if (train->parsed()) {
            return cmd_train(cfg, csv, subjects, windows,
                             output.empty() ? (fs::path(g.out_dir) / "activity_model.json").string()
                                            : output);
        }
        if (eval->parsed()) return cmd_eval(cfg, g, csv, subjects, windows, k);
        if (report->parsed()) {
            return cmd_report(cfg, g, kind, subject, group_by, d > 0 ? d : cfg.coverage_d, min_count);
        }
        if (checkpoint->parsed()) return cmd_checkpoint(cfg);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitUsage;
}
