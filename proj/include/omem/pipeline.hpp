#pragma once

#include <map>
#include <memory>
#include <stdexcept>
#include <vector>

#include "omem/components.hpp"
#include "omem/config.hpp"
#include "omem/digest.hpp"
#include "omem/memory.hpp"
#include "omem/metrics.hpp"
#include "omem/population.hpp"
#include "omem/retrieval.hpp"
#include "omem/world.hpp"

namespace omem {

/// Everything a single experiment produces. `results` is parallel to
/// `queries`.
struct ExperimentArtifacts {
    World world;
    PopulationReport population;
    std::vector<QuerySample> queries;
    std::vector<RetrievalResult> results;
    std::vector<QueryEvaluation> evals;
    MetricsReport metrics;
    ObjectMemory memory{ByteCosts{}};
    std::vector<std::string> audit_issues;  // memory audit + stream single-pass audit
};

/// Population outcome plus the answers to externally scheduled queries.
struct PopulationRun {
    World world;  // possibly truncated to the configured fraction
    ObjectMemory memory{ByteCosts{}};
    PopulationReport report;
    std::vector<RetrievalResult> results;  // parallel to the query inputs
    std::vector<std::string> audit_issues;
};

namespace detail {

inline std::unique_ptr<ObjectTracker> make_tracker(const ExperimentConfig& cfg, std::uint64_t seed) {
    if (cfg.tracker == ComponentKind::oracle) return std::make_unique<OracleTracker>();
    return std::make_unique<NoisyTracker>(cfg.noise, seed);
}

inline std::unique_ptr<ObjectDiscoverer> make_discoverer(const ExperimentConfig& cfg,
                                                         std::uint64_t seed) {
    if (cfg.discoverer == ComponentKind::oracle) return std::make_unique<OracleDiscoverer>();
    return std::make_unique<NoisyDiscoverer>(cfg.noise, seed, cfg.world.appearance_dim);
}

}  // namespace detail

/// Populates a memory from the world's stream, answering each query at its
/// own timestamp from a snapshot of the memory as it stood right after
/// that frame was absorbed. The stream is consumed exactly once; queries
/// see only snapshots, never the world.
inline PopulationRun run_population(World world, const ExperimentConfig& cfg,
                                    const std::vector<QueryInput>& queries) {
    cfg.validate();
    PopulationRun run;

    if (cfg.fraction < 1.0) {
        const auto limit = std::max<FrameIndex>(
            1, static_cast<FrameIndex>(static_cast<double>(world.frames()) * cfg.fraction));
        world = world.truncated(limit);
    }
    run.world = std::move(world);

    std::map<FrameIndex, std::vector<std::size_t>> due;  // query time -> query indexes
    for (std::size_t i = 0; i < queries.size(); ++i) due[queries[i].t].push_back(i);
    run.results.resize(queries.size());

    auto tracker = detail::make_tracker(cfg, fnv1a64_mix(cfg.seed, 0x72));
    auto discoverer = detail::make_discoverer(cfg, fnv1a64_mix(cfg.seed, 0x73));
    run.memory = ObjectMemory(cfg.costs);
    PopulationEngine engine(cfg.population);

    const IdentityEmbedder embedder;
    const CosineUnitSimilarity similarity;
    WorldStream stream = run.world.stream();
    const StepHook hook = [&](FrameIndex t, const ObjectMemory& memory) {
        auto it = due.find(t);
        if (it == due.end()) return;
        const MemorySnapshot snapshot = memory.snapshot();
        for (std::size_t idx : it->second) {
            run.results[idx] =
                localize(queries[idx].content, snapshot, embedder, similarity, cfg.match_threshold);
        }
    };
    run.report = engine.run(run.memory, stream, *tracker, *discoverer, hook);

    run.audit_issues = run.memory.audit();
    for (std::size_t t = 0; t < stream.access_counts().size(); ++t) {
        if (stream.access_counts()[t] != 1)
            run.audit_issues.push_back("stream frame " + std::to_string(t) + " accessed " +
                                       std::to_string(stream.access_counts()[t]) + " times");
    }
    return run;
}

/// Full experiment over a given world: sample queries, populate, answer,
/// evaluate.
inline ExperimentArtifacts run_experiment_on(World world, const ExperimentConfig& cfg) {
    cfg.validate();
    World prepared = std::move(world);
    if (cfg.fraction < 1.0) {
        const auto limit = std::max<FrameIndex>(
            1, static_cast<FrameIndex>(static_cast<double>(prepared.frames()) * cfg.fraction));
        prepared = prepared.truncated(limit);
    }

    ExperimentArtifacts artifacts;
    artifacts.queries = sample_queries(prepared, cfg.query_count, fnv1a64_mix(cfg.seed, 0x71),
                                       cfg.noise.feature_sigma);
    std::vector<QueryInput> inputs;
    inputs.reserve(artifacts.queries.size());
    for (const auto& q : artifacts.queries) inputs.push_back({q.query_id, q.t, q.content});

    ExperimentConfig inner = cfg;
    inner.fraction = 1.0;  // already truncated here
    PopulationRun run = run_population(std::move(prepared), inner, inputs);
    artifacts.world = std::move(run.world);
    artifacts.memory = std::move(run.memory);
    artifacts.population = run.report;
    artifacts.results = std::move(run.results);
    artifacts.audit_issues = std::move(run.audit_issues);

    for (std::size_t i = 0; i < artifacts.queries.size(); ++i) {
        QueryEvaluation eval{artifacts.queries[i].query_id, {}, 0.0,
                             artifacts.queries[i].ground_truth};
        eval.prediction = artifacts.results[i].track;
        eval.score = artifacts.results[i].score;
        artifacts.evals.push_back(std::move(eval));
    }
    if (!artifacts.evals.empty()) {
        artifacts.metrics =
            evaluate_run(artifacts.evals, artifacts.memory.size_bytes(), artifacts.results);
    } else {
        artifacts.metrics.mean_size_bytes = artifacts.memory.size_bytes();
    }
    return artifacts;
}

/// Generates the world from the config and runs the experiment on it.
inline ExperimentArtifacts run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    return run_experiment_on(generate_world(cfg.world, fnv1a64_mix(cfg.seed, 0x70)), cfg);
}

}  // namespace omem
