#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "slfv/ancestry.hpp"
#include "slfv/bridge.hpp"
#include "slfv/config.hpp"
#include "slfv/environment.hpp"
#include "slfv/experiments.hpp"
#include "slfv/lookdown.hpp"

namespace {

using namespace slfv;

struct CommonOptions {
    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_given = false;
    std::string out_dir = "out";
    int workers = 1;
    int replicates = -1; // -1: value from the config file
    bool raw = false;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
    cmd->add_option("--config", opts.config_path, "run configuration file")->required();
    cmd->add_option("--seed", opts.seed, "master seed (overrides the config)")
        ->each([&opts](const std::string&) { opts.seed_given = true; });
    cmd->add_option("--out", opts.out_dir, "output directory");
    cmd->add_option("--workers", opts.workers, "replicate-level worker threads");
    cmd->add_option("--replicates", opts.replicates, "replicate count override");
    cmd->add_flag("--raw", opts.raw, "also write per-replicate values as CSV");
}

std::uint64_t master_seed(const CommonOptions& opts, const RunConfig& config) {
    if (opts.seed_given) {
        config.get_string("seed", ""); // mark as consumed either way
        return opts.seed;
    }
    return static_cast<std::uint64_t>(config.get_double("seed", 1));
}

void write_file(const std::string& dir, const std::string& name, const std::string& content) {
    std::filesystem::create_directories(dir);
    std::ofstream out(dir + "/" + name, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + dir + "/" + name);
    out << content;
}

// Marks every schema key as seen, so commands can share one config file and
// reject_unknown still catches typos.
void touch_known_keys(const RunConfig& config) {
    static const char* keys[] = {
        "domain_kind", "domain_dimension", "domain_side_lengths",
        "model_kind", "event_rate_per_volume_time", "radius_law", "impact_law",
        "offspring_weights", "gaussian_impact_max", "gaussian_theta_sq", "gaussian_alpha",
        "gaussian_truncation_radii",
        "mutation_kind", "mutation_type_count", "mutation_rate_per_time", "mutation_target",
        "mutation_generator",
        "kernel_kind", "kernel_distribution", "kernel_grid", "kernel_cell_distributions",
        "sample_points", "type_weights", "horizon_time", "truncation_level", "replicates",
        "environments", "alpha", "readout_epsilon", "annealed",
        "window_t0", "window_t1", "marked",
        "intensities", "readout_epsilon_refine", "test_function_box", "test_function_shape", "test_function_weights",
        "bridge_x", "bridge_s", "bridge_t", "seed",
    };
    for (const char* key : keys) config.get_string(key, "");
}

Environment environment_for(const RunConfig& config, const Domain& dom, const EventModel& model,
                            SeedKey key, double default_t1) {
    const TimeWindow window{config.get_double("window_t0", 0.0),
                            config.get_double("window_t1", default_t1)};
    return generate_environment(model, window, dom, key);
}

int emit_report(const ExperimentReport& report, const CommonOptions& opts) {
    write_file(opts.out_dir, report.experiment + "-report.json", report.to_json());
    write_file(opts.out_dir, report.experiment + "-report.txt", report.to_text());
    if (opts.raw) write_file(opts.out_dir, report.experiment + "-raw.csv", report.raw_csv());
    std::cout << report.to_text();
    return report.pass() ? 0 : 1;
}

int run_gen_env(const CommonOptions& opts) {
    const RunConfig config = RunConfig::from_file(opts.config_path);
    const Domain dom = domain_from_config(config);
    const EventModel model = model_from_config(config);
    const SeedKey key(master_seed(opts, config));
    Environment env =
        environment_for(config, dom, model, key, config.get_double("horizon_time", 1.0));
    if (config.get_int("marked", 0) != 0) env = extend_with_parents(env, key);
    touch_known_keys(config);
    config.reject_unknown();
    write_file(opts.out_dir, "environment.txt", environment_to_string(env));
    std::cout << "environment: " << env.events().size() << " events, hash "
              << environment_hash(env) << "\n";
    return 0;
}

int run_forward(const CommonOptions& opts) {
    const RunConfig config = RunConfig::from_file(opts.config_path);
    const Domain dom = domain_from_config(config);
    const EventModel model = model_from_config(config);
    const MutationModel mutation = mutation_from_config(config);
    const TypeKernel kernel = kernel_from_config(config);
    const double horizon = config.get_double("horizon_time", 1.0);
    const double truncation = config.get_double("truncation_level", 100.0);
    const SeedKey key(master_seed(opts, config));
    touch_known_keys(config);
    config.reject_unknown();

    const Environment env = environment_for(config, dom, model, key.child("omega"), horizon);
    LookdownState state = init_state(dom, truncation, kernel, key.child("state"));

    std::string events_jsonl;
    EvolveOptions options;
    options.on_event = [&](const LookdownState&, const Event& e,
                           const LookdownEventRecord& rec) {
        nlohmann::ordered_json j;
        j["t"] = e.t;
        j["event_id"] = rec.event_id;
        j["affected"] = rec.lookdowns.size();
        events_jsonl += j.dump() + "\n";
    };
    evolve(state, env, env.window().t0, env.window().t1, mutation, key.child("evolve"), options);

    write_file(opts.out_dir, "environment.txt", environment_to_string(env));
    write_file(opts.out_dir, "forward-events.jsonl", events_jsonl);
    write_file(opts.out_dir, "forward-final.csv", state_to_csv(state, dom));
    std::cout << "forward: " << state.particles.size() << " particles through "
              << env.events().size() << " events\n";
    return 0;
}

int run_backward(const CommonOptions& opts) {
    const RunConfig config = RunConfig::from_file(opts.config_path);
    const Domain dom = domain_from_config(config);
    const EventModel model = model_from_config(config);
    const std::vector<Point> points = config.get_points("sample_points");
    const double horizon = config.get_double("horizon_time", 1.0);
    const SeedKey key(master_seed(opts, config));
    touch_known_keys(config);
    config.reject_unknown();

    const Environment env = environment_for(config, dom, model, key.child("omega"), horizon);
    const MarkedPartition result =
        run_quenched(MarkedPartition::singletons(points), env, env.window().t1, horizon,
                     key.child("coalescent"));
    write_file(opts.out_dir, "environment.txt", environment_to_string(env));
    write_file(opts.out_dir, "backward-trajectory.jsonl", trajectory_to_jsonl(result));
    std::cout << "backward: " << result.block_count() << " ancestors after horizon " << horizon
              << " (" << result.history.size() << " state changes)\n";
    return 0;
}

int run_skeleton(const CommonOptions& opts) {
    const RunConfig config = RunConfig::from_file(opts.config_path);
    const Domain dom = domain_from_config(config);
    const EventModel model = model_from_config(config);
    const SeedKey key(master_seed(opts, config));
    touch_known_keys(config);
    config.reject_unknown();

    Environment env =
        environment_for(config, dom, model, key, config.get_double("horizon_time", 1.0));
    env = extend_with_parents(env, key);
    const ParentalSkeleton skeleton = build_parental_skeleton(env, key);

    std::string jsonl;
    for (std::size_t i = 0; i < skeleton.parent_of.size(); ++i) {
        nlohmann::ordered_json j;
        j["event_id"] = i;
        j["parent"] = skeleton.parent_of[i];
        jsonl += j.dump() + "\n";
    }
    write_file(opts.out_dir, "environment.txt", environment_to_string(env));
    write_file(opts.out_dir, "skeleton.jsonl", jsonl);
    int roots = 0;
    for (int p : skeleton.parent_of) roots += p < 0;
    std::cout << "skeleton: " << skeleton.parent_of.size() << " events, " << roots << " roots\n";
    return 0;
}

int run_bridge(const CommonOptions& opts) {
    const RunConfig config = RunConfig::from_file(opts.config_path);
    const Domain dom = domain_from_config(config);
    const EventModel model = model_from_config(config);
    const std::vector<Point> xs = config.get_points("bridge_x");
    const double horizon = config.get_double("horizon_time", 1.0);
    const double s = config.get_double("bridge_s", 0.0);
    const double t = config.get_double("bridge_t", horizon);
    const SeedKey key(master_seed(opts, config));
    touch_known_keys(config);
    config.reject_unknown();

    Environment env = environment_for(config, dom, model, key, horizon);
    env = extend_with_parents(env, key);
    const Bridge bridge = build_bridge(env, xs.at(0), s, t);

    nlohmann::ordered_json j;
    j["p0"] = bridge.slope;
    nlohmann::ordered_json jumps = nlohmann::ordered_json::array();
    for (const Bridge::Jump& jump : bridge.jumps)
        jumps.push_back({{"l", jump.label}, {"p", jump.mass}});
    j["jumps"] = jumps;
    write_file(opts.out_dir, "bridge.json", j.dump(2) + "\n");
    std::cout << "bridge: p0 = " << bridge.slope << ", " << bridge.jumps.size() << " jumps\n";
    return 0;
}

int run_duality(const CommonOptions& opts) {
    const RunConfig config = RunConfig::from_file(opts.config_path);
    DualityConfig dc;
    dc.dom = domain_from_config(config);
    dc.model = model_from_config(config);
    dc.mutation = mutation_from_config(config);
    dc.kernel = kernel_from_config(config);
    dc.sample_points = config.get_points("sample_points");
    dc.type_weights = config.get_vectors("type_weights");
    dc.horizon = config.get_double("horizon_time", 1.0);
    dc.truncation = config.get_double("truncation_level", 2000.0);
    dc.readout_epsilon = config.get_double("readout_epsilon", 0.05);
    dc.refine_epsilon = config.get_int("readout_epsilon_refine", 0) != 0;
    dc.environments = config.get_int("environments", 100);
    dc.replicates = opts.replicates > 0 ? opts.replicates : config.get_int("replicates", 100);
    dc.annealed = config.get_int("annealed", 0) != 0;
    dc.workers = opts.workers;
    const SeedKey key(master_seed(opts, config));
    touch_known_keys(config);
    config.reject_unknown();
    return emit_report(duality_check(dc, key), opts);
}

int run_cdi(const CommonOptions& opts) {
    const RunConfig config = RunConfig::from_file(opts.config_path);
    CdiConfig cc;
    cc.dom = domain_from_config(config);
    cc.model = model_from_config(config);
    cc.horizon = config.get_double("horizon_time", 1.0);
    if (config.has("intensities")) cc.intensities = config.get_doubles("intensities");
    cc.replicates = opts.replicates > 0 ? opts.replicates : config.get_int("replicates", 100);
    cc.workers = opts.workers;
    const SeedKey key(master_seed(opts, config));
    touch_known_keys(config);
    config.reject_unknown();
    return emit_report(cdi_experiment(cc, key), opts);
}

int run_variation(const CommonOptions& opts) {
    const RunConfig config = RunConfig::from_file(opts.config_path);
    VariationConfig vc;
    vc.dom = domain_from_config(config);
    vc.model = model_from_config(config);
    vc.kernel = kernel_from_config(config);
    vc.f = test_function_from_config(config, vc.kernel.type_count);
    vc.truncation = config.get_double("truncation_level", 100.0);
    vc.horizon = config.get_double("horizon_time", 1.0);
    vc.replicates = opts.replicates > 0 ? opts.replicates : config.get_int("replicates", 100);
    vc.workers = opts.workers;
    const SeedKey key(master_seed(opts, config));
    touch_known_keys(config);
    config.reject_unknown();
    return emit_report(variation_bound_check(vc, key), opts);
}

int run_lookdown_vs_coalescent(const CommonOptions& opts) {
    const RunConfig config = RunConfig::from_file(opts.config_path);
    LookdownVsCoalescentConfig lc;
    lc.dom = domain_from_config(config);
    lc.model = model_from_config(config);
    lc.sample_points = config.get_points("sample_points");
    lc.horizon = config.get_double("horizon_time", 1.0);
    lc.truncation = config.get_double("truncation_level", 20.0);
    lc.readout_epsilon = config.get_double("readout_epsilon", 0.5);
    lc.replicates = opts.replicates > 0 ? opts.replicates : config.get_int("replicates", 10000);
    lc.alpha = config.get_double("alpha", 0.01);
    lc.workers = opts.workers;
    const SeedKey key(master_seed(opts, config));
    touch_known_keys(config);
    config.reject_unknown();
    return emit_report(lookdown_vs_coalescent_check(lc, key), opts);
}

int run_validate(const CommonOptions& opts) {
    const RunConfig config = RunConfig::from_file(opts.config_path);
    const Domain dom = domain_from_config(config);
    const EventModel model = model_from_config(config);
    model.validate(dom);
    mutation_from_config(config);
    if (config.has("kernel_kind")) kernel_from_config(config);
    if (config.has("sample_points")) config.get_points("sample_points");
    if (config.has("test_function_box"))
        test_function_from_config(config, kernel_from_config(config).type_count);
    touch_known_keys(config);
    config.reject_unknown();
    std::cout << "config ok\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"spatial Lambda-Fleming-Viot simulation laboratory"};
    app.require_subcommand(1);

    CommonOptions opts;
    int (*handler)(const CommonOptions&) = nullptr;

    const auto add = [&](const char* name, const char* desc,
                         int (*fn)(const CommonOptions&)) {
        CLI::App* cmd = app.add_subcommand(name, desc);
        add_common(cmd, opts);
        cmd->callback([&handler, fn]() { handler = fn; });
        return cmd;
    };

    add("gen-env", "generate a Poisson event environment", run_gen_env);
    add("forward", "run the lookdown particle system", run_forward);
    add("backward", "run the quenched spatial coalescent", run_backward);
    add("skeleton", "build the parental skeleton of a marked environment", run_skeleton);
    add("bridge", "build the one-site bridge of a labeled environment", run_bridge);
    add("duality", "forward/backward duality experiment", run_duality);
    add("cdi", "coming-down-from-infinity experiment", run_cdi);
    add("variation", "finite-variation bound experiment", run_variation);
    add("lookdown-vs-coalescent", "genealogy equality experiment", run_lookdown_vs_coalescent);
    add("validate-config", "validate a configuration file", run_validate);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        return handler ? handler(opts) : 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
