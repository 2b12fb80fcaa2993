// omem: experiment harness around the streaming object-memory engine.
// Subcommands: generate | run | query | evaluate | sweep.
// Exit codes: 0 success, 1 usage/config error, 2 invariant-audit failure.

#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "omem/config.hpp"
#include "omem/pipeline.hpp"
#include "omem/serialize.hpp"
#include "omem/svg.hpp"

namespace {

using omem::json;

struct AuditFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

omem::ExperimentConfig load_config(const std::string& path,
                                   const std::vector<std::string>& overrides) {
    omem::ExperimentConfig config =
        path.empty() ? omem::ExperimentConfig{} : omem::load_config_file(path);
    for (const std::string& kv : overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("--set expects key=value, got: " + kv);
        omem::apply_config_value(config, kv.substr(0, eq), kv.substr(eq + 1));
    }
    config.validate();
    return config;
}

void require_clean(const std::vector<std::string>& issues, const std::string& what) {
    if (issues.empty()) return;
    std::string message = what + " failed:";
    for (const auto& issue : issues) message += "\n  " + issue;
    throw AuditFailure(message);
}

int cmd_generate(const std::string& config_path, const std::vector<std::string>& overrides,
                 const std::string& out_world, const std::string& out_queries,
                 const std::string& out_gt) {
    const omem::ExperimentConfig config = load_config(config_path, overrides);
    const omem::World world =
        omem::generate_world(config.world, omem::fnv1a64_mix(config.seed, 0x70));
    require_clean(world.audit(), "world invariant audit");
    omem::write_json_file(out_world, omem::world_to_json(world));
    if (!out_queries.empty() || !out_gt.empty()) {
        const auto queries = omem::sample_queries(world, config.query_count,
                                                  omem::fnv1a64_mix(config.seed, 0x71),
                                                  config.noise.feature_sigma);
        if (!out_queries.empty()) omem::write_json_file(out_queries, omem::queries_to_json(queries));
        if (!out_gt.empty()) omem::write_json_file(out_gt, omem::ground_truth_to_json(queries));
    }
    std::cout << "world: " << world.objects.size() << " objects over " << world.frames()
              << " frames -> " << out_world << "\n";
    return 0;
}

int cmd_run(const std::string& config_path, const std::vector<std::string>& overrides,
            const std::string& world_path, const std::string& out_memory,
            const std::string& out_steps, const std::string& out_report,
            const std::string& queries_path, const std::string& out_results) {
    const omem::ExperimentConfig config = load_config(config_path, overrides);
    omem::World world = world_path.empty()
                            ? omem::generate_world(config.world, omem::fnv1a64_mix(config.seed, 0x70))
                            : omem::world_from_json(omem::read_json_file(world_path));
    require_clean(world.audit(), "world invariant audit");

    std::vector<omem::QueryInput> queries;
    if (!queries_path.empty())
        queries = omem::queries_from_json(omem::read_json_file(queries_path));

    omem::PopulationRun run = omem::run_population(std::move(world), config, queries);
    require_clean(run.audit_issues, "memory invariant audit");

    if (!out_memory.empty()) omem::write_json_file(out_memory, omem::memory_to_json(run.memory));
    if (!out_steps.empty()) omem::write_text_file(out_steps, omem::step_reports_to_jsonl(run.report));
    if (!out_report.empty()) {
        json report = omem::population_report_to_json(run.report);
        report["config"] = omem::experiment_config_to_json(config);
        omem::write_json_file(out_report, report);
    }
    if (!out_results.empty()) {
        std::vector<std::int64_t> ids;
        ids.reserve(queries.size());
        for (const auto& q : queries) ids.push_back(q.query_id);
        omem::write_json_file(out_results, omem::results_to_json(ids, run.results));
    }
    std::cout << "processed " << run.report.frames_processed << " frames, "
              << run.report.objects_created << " objects, final size " << run.memory.size_bytes()
              << " bytes\n";
    return 0;
}

int cmd_query(const std::string& memory_path, const std::string& queries_path,
              const std::string& out_results, double threshold) {
    const omem::ObjectMemory memory =
        omem::memory_from_json(omem::read_json_file(memory_path));
    const auto queries = omem::queries_from_json(omem::read_json_file(queries_path));
    const omem::MemorySnapshot snapshot = memory.snapshot();
    const omem::IdentityEmbedder embedder;
    const omem::CosineUnitSimilarity similarity;

    std::vector<std::int64_t> ids;
    std::vector<omem::RetrievalResult> results;
    for (const auto& q : queries) {
        ids.push_back(q.query_id);
        results.push_back(omem::localize(q.content, snapshot, embedder, similarity, threshold));
    }
    omem::write_json_file(out_results, omem::results_to_json(ids, results));
    std::cout << "answered " << results.size() << " queries\n";
    return 0;
}

std::vector<omem::QueryEvaluation> join_results(const json& results_json, const json& gt_json) {
    std::map<std::int64_t, omem::RetrievalResult> by_id;
    for (const auto& row : omem::results_from_json(results_json)) by_id[row.query_id] = row.result;
    std::vector<omem::QueryEvaluation> evals;
    for (const auto& g : gt_json.at("ground_truth")) {
        omem::QueryEvaluation eval{g.at("query_id").get<std::int64_t>(), {}, 0.0,
                                   omem::track_from_json(g.at("track"))};
        auto it = by_id.find(eval.query_id);
        if (it != by_id.end()) {
            eval.prediction = it->second.track;
            eval.score = it->second.score;
        }
        evals.push_back(std::move(eval));
    }
    return evals;
}

json evaluate_files(const std::string& results_path, const std::string& gt_path,
                    std::uint64_t size_bytes) {
    const json results_json = omem::read_json_file(results_path);
    const auto evals = join_results(results_json, omem::read_json_file(gt_path));
    if (evals.empty()) throw std::invalid_argument("evaluate: ground truth file has no queries");
    std::vector<omem::RetrievalResult> results;
    for (const auto& row : omem::results_from_json(results_json)) results.push_back(row.result);
    return json(omem::evaluate_run(evals, size_bytes, results));
}

int cmd_evaluate(const std::string& results_path, const std::string& gt_path,
                 const std::string& memory_path, std::uint64_t size_bytes,
                 const std::string& manifest_path, const std::string& out_report,
                 const std::string& out_svg) {
    if (!manifest_path.empty()) {
        // Aggregated mode: a manifest lists labelled points (for example
        // stream fractions), each with its own results/gt files.
        const json manifest = omem::read_json_file(manifest_path);
        json combined = json::array();
        std::vector<omem::ChartSeries> success{{"success", {}}};
        std::vector<omem::ChartSeries> size{{"size MB", {}}};
        std::vector<omem::ChartSeries> time{{"mean ops", {}}};
        for (const auto& point : manifest.at("points")) {
            const json report =
                evaluate_files(point.at("results").get<std::string>(),
                               point.at("gt").get<std::string>(),
                               point.value("size_bytes", std::uint64_t{0}));
            const double x = point.at("x").get<double>();
            success[0].points.emplace_back(x, report.at("success").get<double>());
            size[0].points.emplace_back(
                x, report.at("mean_size_bytes").get<double>() / 1.0e6);
            time[0].points.emplace_back(x, report.at("mean_retrieval_ops").get<double>());
            combined.push_back({{"label", point.value("label", std::to_string(x))},
                                {"x", x},
                                {"report", report}});
        }
        omem::write_json_file(out_report, {{"points", combined}});
        if (!out_svg.empty()) {
            std::string svg = omem::render_line_chart("success vs stream", "fraction", "success",
                                                      success);
            svg += omem::render_line_chart("memory vs stream", "fraction", "MB", size);
            svg += omem::render_line_chart("retrieval ops vs stream", "fraction", "ops", time);
            omem::write_text_file(out_svg, svg);
        }
        std::cout << "aggregated " << combined.size() << " points -> " << out_report << "\n";
        return 0;
    }

    std::uint64_t size = size_bytes;
    if (!memory_path.empty())
        size = omem::read_json_file(memory_path).at("size_bytes").get<std::uint64_t>();
    const json report = evaluate_files(results_path, gt_path, size);
    omem::write_json_file(out_report, report);
    std::cout << "success " << report.at("success").get<double>() << ", tAP25 "
              << report.at("tap25").get<double>() << ", stAP25 "
              << report.at("stap25").get<double>() << "\n";
    return 0;
}

int cmd_sweep(const std::string& config_path, const std::vector<std::string>& overrides,
              const std::string& axis, const std::vector<double>& values, unsigned seeds,
              const std::string& out_prefix, const std::string& out_svg) {
    if (values.empty()) throw std::invalid_argument("sweep: no values given");
    if (seeds == 0) throw std::invalid_argument("sweep: need at least one seed");
    const omem::ExperimentConfig base = load_config(config_path, overrides);

    std::string csv = "axis,value,seed,tap25,stap25,success,size_bytes,mean_ops,over_cap\n";
    json table = json::array();
    std::vector<omem::ChartSeries> chart{{"success", {}}};
    for (const double value : values) {
        double mean_success = 0.0, mean_tap = 0.0, mean_stap = 0.0, mean_ops = 0.0;
        double mean_size = 0.0;
        bool any_over_cap = false;
        for (unsigned s = 0; s < seeds; ++s) {
            omem::ExperimentConfig cfg = base;
            std::string value_str = json(value).dump();
            if (axis == "population.budget_bytes")
                value_str = std::to_string(static_cast<std::uint64_t>(value));
            omem::apply_config_value(cfg, axis, value_str);
            cfg.seed = base.seed + s;
            cfg.validate();
            const omem::ExperimentArtifacts artifacts = omem::run_experiment(cfg);
            require_clean(artifacts.audit_issues, "memory invariant audit");
            const omem::MetricsReport& m = artifacts.metrics;
            csv += axis + "," + json(value).dump() + "," + std::to_string(cfg.seed) + "," +
                   json(m.tap25).dump() + "," + json(m.stap25).dump() + "," +
                   json(m.success).dump() + "," + std::to_string(m.mean_size_bytes) + "," +
                   json(m.mean_retrieval_ops).dump() + "," +
                   (artifacts.population.any_over_cap ? "1" : "0") + "\n";
            mean_success += m.success;
            mean_tap += m.tap25;
            mean_stap += m.stap25;
            mean_ops += m.mean_retrieval_ops;
            mean_size += static_cast<double>(m.mean_size_bytes);
            any_over_cap = any_over_cap || artifacts.population.any_over_cap;
        }
        const double n = static_cast<double>(seeds);
        table.push_back({{"axis", axis},
                         {"value", value},
                         {"seeds", seeds},
                         {"mean_success", mean_success / n},
                         {"mean_tap25", mean_tap / n},
                         {"mean_stap25", mean_stap / n},
                         {"mean_retrieval_ops", mean_ops / n},
                         {"mean_size_bytes", mean_size / n},
                         {"any_over_cap", any_over_cap}});
        chart[0].points.emplace_back(value, mean_success / n);
    }
    omem::write_text_file(out_prefix + ".csv", csv);
    omem::write_json_file(out_prefix + ".json",
                          {{"config", omem::experiment_config_to_json(base)}, {"rows", table}});
    if (!out_svg.empty())
        omem::write_text_file(out_svg,
                              omem::render_line_chart("sweep: " + axis, axis, "success", chart));
    std::cout << "swept " << values.size() << " values x " << seeds << " seeds -> " << out_prefix
              << ".{csv,json}\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"streaming object-memory engine for online visual query localization"};
    app.require_subcommand(1);

    std::string config_path, world_path, memory_path, queries_path, gt_path, results_path;
    std::string manifest_path;
    std::string out_world, out_queries, out_gt, out_memory, out_steps, out_report, out_results;
    std::string out_svg, axis, out_prefix;
    std::vector<std::string> overrides;
    std::vector<double> values;
    double threshold = 0.5;
    std::uint64_t size_bytes = 0;
    unsigned seeds = 1;

    CLI::App* generate = app.add_subcommand("generate", "generate a synthetic world fixture");
    generate->add_option("--config", config_path, "experiment config file");
    generate->add_option("--set", overrides, "override config values (key=value)");
    generate->add_option("--out", out_world, "world output path")->required();
    generate->add_option("--queries-out", out_queries, "sampled queries output path");
    generate->add_option("--gt-out", out_gt, "ground-truth tracks output path");

    CLI::App* run = app.add_subcommand("run", "populate a memory from a stream, once");
    run->add_option("--config", config_path, "experiment config file");
    run->add_option("--set", overrides, "override config values (key=value)");
    run->add_option("--world", world_path, "world fixture (default: generate from config)");
    run->add_option("--out-memory", out_memory, "memory dump output path");
    run->add_option("--out-steps", out_steps, "per-frame step reports (JSON lines)");
    run->add_option("--out-report", out_report, "population summary output path");
    run->add_option("--queries", queries_path, "queries to answer at their stream times");
    run->add_option("--out-results", out_results, "retrieval results output path");

    CLI::App* query = app.add_subcommand("query", "answer queries against a memory dump");
    query->add_option("--memory", memory_path, "memory dump")->required();
    query->add_option("--queries", queries_path, "queries file")->required();
    query->add_option("--out", out_results, "results output path")->required();
    query->add_option("--threshold", threshold, "match threshold (default 0.5)");

    CLI::App* evaluate = app.add_subcommand("evaluate", "score results against ground truth");
    evaluate->add_option("--results", results_path, "retrieval results file");
    evaluate->add_option("--gt", gt_path, "ground-truth tracks file");
    evaluate->add_option("--memory", memory_path, "memory dump (for the size column)");
    evaluate->add_option("--size-bytes", size_bytes, "memory size when no dump is given");
    evaluate->add_option("--manifest", manifest_path, "aggregate labelled points (curve mode)");
    evaluate->add_option("--out", out_report, "report output path")->required();
    evaluate->add_option("--svg", out_svg, "render curves to this SVG (manifest mode)");

    CLI::App* sweep = app.add_subcommand("sweep", "one full pipeline run per axis value");
    sweep->add_option("--config", config_path, "experiment config file");
    sweep->add_option("--set", overrides, "override config values (key=value)");
    sweep->add_option("--axis", axis, "config key to sweep")->required();
    sweep->add_option("--values", values, "axis values")->required()->delimiter(',');
    sweep->add_option("--seeds", seeds, "seeds per value (averaged)");
    sweep->add_option("--out-prefix", out_prefix, "output prefix for .csv/.json")->required();
    sweep->add_option("--svg", out_svg, "render the success curve to this SVG");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (generate->parsed())
            return cmd_generate(config_path, overrides, out_world, out_queries, out_gt);
        if (run->parsed())
            return cmd_run(config_path, overrides, world_path, out_memory, out_steps, out_report,
                           queries_path, out_results);
        if (query->parsed()) return cmd_query(memory_path, queries_path, out_results, threshold);
        if (evaluate->parsed())
            return cmd_evaluate(results_path, gt_path, memory_path, size_bytes, manifest_path,
                                out_report, out_svg);
        if (sweep->parsed())
            return cmd_sweep(config_path, overrides, axis, values, seeds, out_prefix, out_svg);
    } catch (const AuditFailure& e) {
        std::cerr << "audit failure: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
