#include "slfv/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <chrono>
#include <cmath>
#include <map>
#include <stdexcept>
#include <thread>

#include "slfv/stats.hpp"

namespace slfv {

namespace {

class Timer {
  public:
    Timer() : start_(std::chrono::steady_clock::now()) {}
    [[nodiscard]] double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

  private:
    std::chrono::steady_clock::time_point start_;
};

// ---------------------------------------------------------------------------
// Genealogical forest reconstruction from a coalescent trajectory.

struct Forest {
    struct Instance {
        double begin_h = 0.0;
        double end_h = 0.0;
        std::vector<int> children;
        int label = -1; // sample label for leaf instances
    };
    std::vector<Instance> instances;
    std::vector<int> root_of_block; // per final block, its root instance
};

Forest build_forest(const MarkedPartition& result, int k, double horizon) {
    Forest forest;
    std::vector<int> current(static_cast<std::size_t>(k));
    for (int j = 0; j < k; ++j) {
        forest.instances.push_back({0.0, horizon, {}, j});
        current[static_cast<std::size_t>(j)] = j;
    }
    for (const MergeRecord& rec : result.history) {
        const int fused = static_cast<int>(forest.instances.size());
        Forest::Instance inst;
        inst.begin_h = rec.h;
        inst.end_h = horizon;
        for (const auto& labels : rec.merged) {
            const int child = current[static_cast<std::size_t>(labels.front())];
            inst.children.push_back(child);
            forest.instances[static_cast<std::size_t>(child)].end_h = rec.h;
        }
        forest.instances.push_back(std::move(inst));
        for (const auto& labels : rec.merged)
            for (int l : labels) current[static_cast<std::size_t>(l)] = fused;
    }
    for (const AncestorBlock& block : result.blocks)
        forest.root_of_block.push_back(current[static_cast<std::size_t>(block.labels.front())]);
    return forest;
}

// Draws ancestor types from the kernel and runs the mutation process forward
// along the recorded forest; returns the type of each sample.
std::vector<TypeIndex> backward_sample_types(const MarkedPartition& result, int k, double horizon,
                                             const TypeKernel& kernel, const Domain& dom,
                                             const MutationModel& mutation, SeedKey seed) {
    const Forest forest = build_forest(result, k, horizon);
    std::vector<int> forest_parent(forest.instances.size(), -1);
    for (std::size_t i = 0; i < forest.instances.size(); ++i)
        for (int child : forest.instances[i].children)
            forest_parent[static_cast<std::size_t>(child)] = static_cast<int>(i);

    std::vector<TypeIndex> sample_types(static_cast<std::size_t>(k), 0);
    for (std::size_t b = 0; b < result.blocks.size(); ++b) {
        const int root = forest.root_of_block[b];
        Rng rho_rng(seed.child("rho").child(b));
        const TypeIndex root_type = kernel.sample_at(result.blocks[b].location, dom, rho_rng);

        // Flatten the subtree into a MutationTree (parents before children).
        MutationTree tree;
        std::vector<int> instance_of_node;
        std::vector<int> node_of_instance(forest.instances.size(), -1);
        std::vector<int> stack{root};
        while (!stack.empty()) {
            const int inst = stack.back();
            stack.pop_back();
            const Forest::Instance& fi = forest.instances[static_cast<std::size_t>(inst)];
            MutationTree::Node node;
            node.branch = fi.end_h - fi.begin_h;
            node.parent = inst == root
                              ? -1
                              : node_of_instance[static_cast<std::size_t>(
                                    forest_parent[static_cast<std::size_t>(inst)])];
            node_of_instance[static_cast<std::size_t>(inst)] =
                static_cast<int>(tree.nodes.size());
            tree.nodes.push_back(node);
            instance_of_node.push_back(inst);
            for (int child : fi.children) stack.push_back(child);
        }

        const std::vector<TypeIndex> leaf_types =
            run_along_tree(tree, root_type, mutation, seed.child("tree").child(b));
        const std::vector<int> leaves = tree.leaves();
        for (std::size_t l = 0; l < leaves.size(); ++l) {
            const int inst = instance_of_node[static_cast<std::size_t>(leaves[l])];
            const int label = forest.instances[static_cast<std::size_t>(inst)].label;
            sample_types[static_cast<std::size_t>(label)] = leaf_types[l];
        }
    }
    return sample_types;
}

double product_of_weights(const std::vector<std::vector<double>>& weights,
                          const std::vector<TypeIndex>& types) {
    double value = 1.0;
    for (std::size_t j = 0; j < weights.size(); ++j)
        value *= weights[j][static_cast<std::size_t>(types[j])];
    return value;
}

// First coalescence among the tracked samples: backward time plus the
// bitmask of sample indices that fused.
struct FirstMerge {
    double h = 0.0;
    unsigned mask = 0;
};

std::optional<FirstMerge> coalescent_first_merge(const MarkedPartition& result) {
    for (std::size_t i = 0; i < result.history.size(); ++i) {
        const MergeRecord& rec = result.history[i];
        std::size_t labels = 0;
        for (const auto& set : rec.merged) labels += set.size();
        if (labels < 2) continue;
        FirstMerge fm;
        fm.h = rec.h;
        for (std::size_t j = i; j < result.history.size() && result.history[j].h == rec.h; ++j) {
            std::size_t lj = 0;
            for (const auto& set : result.history[j].merged) lj += set.size();
            if (lj < 2) continue;
            for (const auto& set : result.history[j].merged)
                for (int l : set) fm.mask |= 1u << static_cast<unsigned>(l);
        }
        return fm;
    }
    return std::nullopt;
}

std::optional<FirstMerge> lookdown_first_merge(const std::vector<LookdownEventRecord>& records,
                                               const std::vector<int>& particles,
                                               double t_sample) {
    std::vector<int> rep = particles;
    for (auto it = records.rbegin(); it != records.rend(); ++it) {
        for (const auto& [particle, parent] : it->lookdowns) {
            for (int& r : rep)
                if (r == particle) r = parent;
        }
        unsigned mask = 0;
        for (std::size_t a = 0; a < rep.size(); ++a)
            for (std::size_t b = a + 1; b < rep.size(); ++b)
                if (rep[a] == rep[b]) mask |= (1u << a) | (1u << b);
        if (mask != 0) return FirstMerge{t_sample - it->t, mask};
    }
    return std::nullopt;
}

} // namespace

void parallel_replicates(int count, int workers, const std::function<void(int)>& fn) {
    if (workers <= 1 || count <= 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    const int n_threads = std::min(workers, count);
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int w = 0; w < n_threads; ++w) {
        pool.emplace_back([&]() {
            for (;;) {
                const int i = next.fetch_add(1);
                if (i >= count || failed.load()) return;
                try {
                    fn(i);
                } catch (...) {
                    const std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                    failed.store(true);
                    return;
                }
            }
        });
    }
    for (std::thread& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

WeightedPointMeasure WeightedPointMeasure::from_state(const LookdownState& state, double cutoff) {
    WeightedPointMeasure m;
    m.weight = 1.0 / cutoff;
    for (const LookdownParticle& p : state.particles)
        if (p.level <= cutoff) m.atoms.push_back({p.location, p.type});
    return m;
}

double measure_distance(const WeightedPointMeasure& a, const WeightedPointMeasure& b,
                        int basis_size, const Domain& dom, int type_count) {
    double dist = 0.0;
    double term_weight = 0.5;
    int term = 0;
    for (int level = 0; term < basis_size; ++level) {
        const int per_axis = 1 << level;
        const int n_cells = dom.dimension == 2 ? per_axis * per_axis : per_axis;
        std::vector<double> mass_a(static_cast<std::size_t>(n_cells) *
                                       static_cast<std::size_t>(type_count),
                                   0.0);
        std::vector<double> mass_b(mass_a.size(), 0.0);
        const auto bin = [&](const WeightedPointMeasure& m, std::vector<double>& mass) {
            for (const auto& atom : m.atoms) {
                int cell = 0;
                for (int i = 0; i < dom.dimension; ++i) {
                    const int c = std::min(
                        per_axis - 1,
                        static_cast<int>(std::floor(atom.x[i] /
                                                    dom.side[static_cast<std::size_t>(i)] *
                                                    per_axis)));
                    cell = cell * per_axis + c;
                }
                mass[static_cast<std::size_t>(cell) * static_cast<std::size_t>(type_count) +
                     static_cast<std::size_t>(atom.type)] += m.weight;
            }
        };
        bin(a, mass_a);
        bin(b, mass_b);
        for (std::size_t i = 0; i < mass_a.size() && term < basis_size; ++i, ++term) {
            dist += term_weight * std::abs(mass_a[i] - mass_b[i]);
            term_weight *= 0.5;
        }
    }
    return dist;
}

// ---------------------------------------------------------------------------

ExperimentReport duality_check(const DualityConfig& config, SeedKey seed) {
    Timer timer;
    const int k = static_cast<int>(config.sample_points.size());
    if (k < 1 || config.type_weights.size() != config.sample_points.size())
        throw std::invalid_argument("duality_check: sample points and weights mismatch");
    config.model.validate(config.dom);

    const double epsilon =
        config.refine_epsilon
            ? config.readout_epsilon * std::sqrt(2000.0 / config.truncation)
            : config.readout_epsilon;

    ExperimentReport report;
    report.experiment = config.annealed ? "duality-annealed" : "duality-quenched";
    report.seed = seed.raw();
    report.add_parameter("k", k);
    report.add_parameter("horizon", config.horizon);
    report.add_parameter("truncation", config.truncation);
    report.add_parameter("readout_epsilon", epsilon);
    report.add_parameter("environments", config.environments);
    report.add_parameter("replicates_per_environment", config.replicates);
    report.add_parameter("mutation_enabled", config.mutation.enabled() ? 1 : 0);
    report.add_parameter("z_limit", 3.0);

    const TimeWindow window{0.0, config.horizon};

    if (!config.annealed) {
        const int n_env = config.environments;
        std::vector<double> forward_mean(static_cast<std::size_t>(n_env), 0.0);
        std::vector<double> backward_mean(static_cast<std::size_t>(n_env), 0.0);
        std::vector<std::uint64_t> hashes(static_cast<std::size_t>(n_env), 0);

        parallel_replicates(n_env, config.workers, [&](int i) {
            const SeedKey env_seed = seed.child("omega").child(static_cast<std::uint64_t>(i));
            const Environment master =
                generate_environment(config.model, window, config.dom, env_seed);
            // Both arms re-read the serialized environment.
            const std::string bytes = environment_to_string(master);
            const Environment fw_env = environment_from_string(bytes);
            const Environment bw_env = environment_from_string(bytes);
            if (environment_hash(fw_env) != environment_hash(bw_env))
                throw std::logic_error("duality_check: environment hash mismatch");
            hashes[static_cast<std::size_t>(i)] = environment_hash(fw_env);

            const SeedKey fw_root = seed.child("forward").child(static_cast<std::uint64_t>(i));
            const SeedKey bw_root = seed.child("backward").child(static_cast<std::uint64_t>(i));
            double fw_sum = 0.0;
            double bw_sum = 0.0;
            for (int r = 0; r < config.replicates; ++r) {
                const SeedKey fk = fw_root.child(static_cast<std::uint64_t>(r));
                LookdownState state =
                    init_state(config.dom, config.truncation, config.kernel, fk);
                evolve(state, fw_env, 0.0, config.horizon, config.mutation, fk.child("evolve"));
                const std::vector<int> idx =
                    nearest_particles(state, config.sample_points, epsilon, config.dom);
                std::vector<TypeIndex> types;
                for (int j : idx)
                    types.push_back(state.particles[static_cast<std::size_t>(j)].type);
                fw_sum += product_of_weights(config.type_weights, types);

                const SeedKey bk = bw_root.child(static_cast<std::uint64_t>(r));
                const MarkedPartition result =
                    run_quenched(MarkedPartition::singletons(config.sample_points), bw_env,
                                 config.horizon, config.horizon, bk.child("coalesce"));
                const std::vector<TypeIndex> btypes =
                    backward_sample_types(result, k, config.horizon, config.kernel, config.dom,
                                          config.mutation, bk.child("types"));
                bw_sum += product_of_weights(config.type_weights, btypes);
            }
            forward_mean[static_cast<std::size_t>(i)] = fw_sum / config.replicates;
            backward_mean[static_cast<std::size_t>(i)] = bw_sum / config.replicates;
        });

        std::uint64_t hash_acc = 0;
        for (std::uint64_t h : hashes) hash_acc ^= h;
        report.add_parameter("omega_hash_xor", std::to_string(hash_acc));

        std::vector<double> diff(static_cast<std::size_t>(n_env));
        for (int i = 0; i < n_env; ++i)
            diff[static_cast<std::size_t>(i)] = forward_mean[static_cast<std::size_t>(i)] -
                                                backward_mean[static_cast<std::size_t>(i)];
        const stats::MeanSe fw = stats::mean_se(forward_mean);
        const stats::MeanSe bw = stats::mean_se(backward_mean);
        const stats::MeanSe d = stats::mean_se(diff);
        CheckResult check =
            make_z_check("forward minus backward (paired over omegas)", d.mean, d.se, 0.0);
        check.note = "forward=" + std::to_string(fw.mean) + " backward=" + std::to_string(bw.mean);
        report.checks.push_back(check);
        report.raw.push_back({"forward_mean_per_omega", forward_mean});
        report.raw.push_back({"backward_mean_per_omega", backward_mean});
    } else {
        const int total = config.environments * config.replicates;
        std::vector<double> fw_vals(static_cast<std::size_t>(total), 0.0);
        std::vector<double> bw_vals(static_cast<std::size_t>(total), 0.0);
        parallel_replicates(total, config.workers, [&](int r) {
            const SeedKey fk = seed.child("annealed-forward").child(static_cast<std::uint64_t>(r));
            const Environment env =
                generate_environment(config.model, window, config.dom, fk.child("omega"));
            LookdownState state = init_state(config.dom, config.truncation, config.kernel, fk);
            evolve(state, env, 0.0, config.horizon, config.mutation, fk.child("evolve"));
            const std::vector<int> idx =
                nearest_particles(state, config.sample_points, epsilon, config.dom);
            std::vector<TypeIndex> types;
            for (int j : idx) types.push_back(state.particles[static_cast<std::size_t>(j)].type);
            fw_vals[static_cast<std::size_t>(r)] =
                product_of_weights(config.type_weights, types);

            const SeedKey bk = seed.child("annealed-backward").child(static_cast<std::uint64_t>(r));
            const MarkedPartition result =
                run_annealed(MarkedPartition::singletons(config.sample_points), config.model,
                             config.dom, config.horizon, bk.child("coalesce"));
            const std::vector<TypeIndex> btypes =
                backward_sample_types(result, k, config.horizon, config.kernel, config.dom,
                                      config.mutation, bk.child("types"));
            bw_vals[static_cast<std::size_t>(r)] =
                product_of_weights(config.type_weights, btypes);
        });
        const stats::MeanSe fw = stats::mean_se(fw_vals);
        const stats::MeanSe bw = stats::mean_se(bw_vals);
        CheckResult check = make_z_check("forward minus backward (independent omegas)",
                                         fw.mean - bw.mean,
                                         std::sqrt(fw.se * fw.se + bw.se * bw.se), 0.0);
        check.note = "forward=" + std::to_string(fw.mean) + " backward=" + std::to_string(bw.mean);
        report.checks.push_back(check);
        report.raw.push_back({"forward_per_replicate", fw_vals});
        report.raw.push_back({"backward_per_replicate", bw_vals});
    }

    report.runtime_seconds = timer.seconds();
    return report;
}

ExperimentReport cdi_experiment(const CdiConfig& config, SeedKey seed) {
    Timer timer;
    config.model.validate(config.dom);
    if (config.model.kind != ModelKind::gaussian && config.model.impact.can_be_one())
        throw std::invalid_argument("cdi_experiment: the impact law must never put mass on u=1");

    Point centre;
    for (int i = 0; i < config.dom.dimension; ++i)
        centre[i] = 0.5 * config.dom.side[static_cast<std::size_t>(i)];
    const double unit_ball_volume = ball_volume(centre, 1.0, config.dom);
    const double rate = jump_rate(centre, config.model, config.dom);
    const double oracle = std::exp(-rate * config.horizon);

    ExperimentReport report;
    report.experiment = "cdi";
    report.seed = seed.raw();
    report.add_parameter("horizon", config.horizon);
    report.add_parameter("replicates_per_intensity", config.replicates);
    report.add_parameter("jump_rate", rate);
    report.add_parameter("untouched_oracle", oracle);
    report.add_parameter("z_limit", 3.0);

    const int n_c = static_cast<int>(config.intensities.size());
    const int total = n_c * config.replicates;
    std::vector<double> untouched(static_cast<std::size_t>(total), 0.0);
    std::vector<double> ancestors(static_cast<std::size_t>(total), 0.0);

    parallel_replicates(total, config.workers, [&](int idx) {
        const int ci = idx / config.replicates;
        const int r = idx % config.replicates;
        const double c = config.intensities[static_cast<std::size_t>(ci)];
        const SeedKey key = seed.child("cdi")
                                .child(static_cast<std::uint64_t>(ci))
                                .child(static_cast<std::uint64_t>(r));
        Rng init_rng(key.child("init"));
        const std::uint64_t count = init_rng.poisson(c * unit_ball_volume);
        std::vector<Point> points;
        points.reserve(count);
        for (std::uint64_t i = 0; i < count; ++i)
            points.push_back(sample_uniform_ball(centre, 1.0, config.dom, init_rng));

        const MarkedPartition result =
            run_annealed(MarkedPartition::singletons(points), config.model, config.dom,
                         config.horizon, key.child("run"));

        std::vector<bool> touched(points.size(), false);
        for (const MergeRecord& rec : result.history)
            for (const auto& set : rec.merged)
                for (int l : set) touched[static_cast<std::size_t>(l)] = true;
        std::size_t untouched_count = 0;
        for (bool t : touched)
            if (!t) ++untouched_count;
        untouched[static_cast<std::size_t>(idx)] =
            points.empty() ? 1.0
                           : static_cast<double>(untouched_count) /
                                 static_cast<double>(points.size());
        ancestors[static_cast<std::size_t>(idx)] = result.block_count();
    });

    const stats::MeanSe frac = stats::mean_se(untouched);
    report.checks.push_back(
        make_z_check("untouched lineage fraction vs exp(-J t)", frac.mean, frac.se, oracle));

    std::vector<double> mean_ancestors;
    bool monotone = true;
    for (int ci = 0; ci < n_c; ++ci) {
        std::span<const double> slice(ancestors.data() +
                                          static_cast<std::size_t>(ci * config.replicates),
                                      static_cast<std::size_t>(config.replicates));
        const std::string tag =
            std::to_string(config.intensities[static_cast<std::size_t>(ci)]);
        report.raw.push_back({"ancestors_c" + tag,
                              std::vector<double>(slice.begin(), slice.end())});
        std::span<const double> ufrac(untouched.data() +
                                          static_cast<std::size_t>(ci * config.replicates),
                                      static_cast<std::size_t>(config.replicates));
        report.raw.push_back({"untouched_fraction_c" + tag,
                              std::vector<double>(ufrac.begin(), ufrac.end())});
        mean_ancestors.push_back(stats::mean_se(slice).mean);
        if (ci > 0 && !(mean_ancestors[static_cast<std::size_t>(ci)] >
                        mean_ancestors[static_cast<std::size_t>(ci - 1)]))
            monotone = false;
    }
    CheckResult mono;
    mono.name = "ancestor count strictly increasing across the intensity ladder";
    mono.kind = "monotone";
    mono.pass = monotone;
    for (std::size_t i = 0; i < mean_ancestors.size(); ++i) {
        mono.note += (i ? ", " : "N_t(c): ") + std::to_string(mean_ancestors[i]);
    }
    mono.estimate = mean_ancestors.back();
    report.checks.push_back(mono);

    report.runtime_seconds = timer.seconds();
    return report;
}

ExperimentReport variation_bound_check(const VariationConfig& config, SeedKey seed) {
    Timer timer;
    config.model.validate(config.dom);
    if (config.f.k() != 1)
        throw std::invalid_argument("variation_bound_check: test function must have k=1");
    config.f.validate(config.kernel.type_count);

    const double sup = config.f.sup_norm(0);
    const BoxFactor& box = config.f.factors[0];

    ExperimentReport report;
    report.experiment = "variation-bound";
    report.seed = seed.raw();
    report.add_parameter("horizon", config.horizon);
    report.add_parameter("truncation", config.truncation);
    report.add_parameter("replicates", config.replicates);
    report.add_parameter("sup_norm", sup);

    const TimeWindow window{0.0, config.horizon};
    std::vector<double> ratio(static_cast<std::size_t>(config.replicates), 0.0);
    std::vector<double> holds(static_cast<std::size_t>(config.replicates), 0.0);
    std::vector<double> event_counts(static_cast<std::size_t>(config.replicates), 0.0);

    parallel_replicates(config.replicates, config.workers, [&](int r) {
        const SeedKey key = seed.child("variation").child(static_cast<std::uint64_t>(r));
        const Environment env =
            generate_environment(config.model, window, config.dom, key.child("omega"));
        LookdownState state = init_state(config.dom, config.truncation, config.kernel, key);

        // Incremental <M^n, f>: per-particle contributions updated from the
        // lookdown records of each event.
        const double n = state.truncation;
        std::vector<double> contribution(state.particles.size(), 0.0);
        for (std::size_t j = 0; j < state.particles.size(); ++j) {
            const LookdownParticle& p = state.particles[j];
            contribution[j] = box(p.location, 2) *
                              config.f.type_weights[0][static_cast<std::size_t>(p.type)] / n;
        }
        double total_variation = 0.0;
        EvolveOptions options;
        options.on_event = [&](const LookdownState& s, const Event&,
                               const LookdownEventRecord& rec) {
            double delta = 0.0;
            for (const auto& [particle, parent] : rec.lookdowns) {
                (void)parent;
                const auto uj = static_cast<std::size_t>(particle);
                const LookdownParticle& p = s.particles[uj];
                const double now =
                    box(p.location, 2) *
                    config.f.type_weights[0][static_cast<std::size_t>(p.type)] / n;
                delta += now - contribution[uj];
                contribution[uj] = now;
            }
            total_variation += std::abs(delta);
        };
        evolve(state, env, 0.0, config.horizon, MutationModel::none(config.kernel.type_count),
               key.child("evolve"), options);

        double upsilon = 0.0;
        for (const Event& e : env.events()) {
            if (point_box_distance(e.z, box.lo, box.hi, config.dom) > e.r) continue;
            upsilon += e.u * ball_box_volume(e.z, e.r, box.lo, box.hi, config.dom);
        }
        const double bound = 2.0 * sup * upsilon;
        ratio[static_cast<std::size_t>(r)] = bound > 0.0 ? total_variation / bound
                                                         : (total_variation > 0.0 ? 2.0 : 0.0);
        holds[static_cast<std::size_t>(r)] =
            total_variation <= bound * (1.0 + 1e-12) + 1e-12 ? 1.0 : 0.0;
        event_counts[static_cast<std::size_t>(r)] = static_cast<double>(env.events().size());
    });

    int violations = 0;
    double max_ratio = 0.0;
    for (std::size_t r = 0; r < ratio.size(); ++r) {
        max_ratio = std::max(max_ratio, ratio[r]);
        if (holds[r] == 0.0) ++violations;
    }
    report.raw.push_back({"tv_over_bound", ratio});
    CheckResult check;
    check.name = "total variation <= 2||f|| Upsilon_T in every replicate";
    check.kind = "bound";
    check.estimate = max_ratio;
    check.oracle = 1.0;
    check.statistic = static_cast<double>(violations);
    check.threshold = 0.0;
    check.pass = violations == 0;
    check.note = "violations=" + std::to_string(violations) +
                 "/" + std::to_string(config.replicates) +
                 ", mean events=" + std::to_string(stats::mean_se(event_counts).mean);
    report.checks.push_back(check);

    report.runtime_seconds = timer.seconds();
    return report;
}

ExperimentReport lookdown_vs_coalescent_check(const LookdownVsCoalescentConfig& config,
                                              SeedKey seed) {
    Timer timer;
    config.model.validate(config.dom);
    const int k = static_cast<int>(config.sample_points.size());
    if (k < 2 || k > 3)
        throw std::invalid_argument("lookdown_vs_coalescent_check: k must be 2 or 3");

    ExperimentReport report;
    report.experiment = "lookdown-vs-coalescent";
    report.seed = seed.raw();
    report.add_parameter("k", k);
    report.add_parameter("horizon", config.horizon);
    report.add_parameter("truncation", config.truncation);
    report.add_parameter("replicate_pairs", config.replicates);
    report.add_parameter("alpha", config.alpha);

    const TimeWindow window{0.0, config.horizon};
    const TypeKernel kernel = TypeKernel::uniform({1.0});

    std::vector<double> ld_time(static_cast<std::size_t>(config.replicates), -1.0);
    std::vector<double> co_time(static_cast<std::size_t>(config.replicates), -1.0);
    std::vector<double> ld_mask(static_cast<std::size_t>(config.replicates), 0.0);
    std::vector<double> co_mask(static_cast<std::size_t>(config.replicates), 0.0);

    parallel_replicates(config.replicates, config.workers, [&](int r) {
        const SeedKey key = seed.child("pair").child(static_cast<std::uint64_t>(r));
        const Environment env =
            generate_environment(config.model, window, config.dom, key.child("omega"));

        LookdownState state = init_state(config.dom, config.truncation, kernel, key.child("ld"));
        const EvolveResult run = evolve(state, env, 0.0, config.horizon,
                                        MutationModel::none(1), key.child("evolve"));
        const std::vector<int> idx = nearest_particles(state, config.sample_points,
                                                       config.readout_epsilon, config.dom);
        const auto ld = lookdown_first_merge(run.records, idx, config.horizon);
        if (ld) {
            ld_time[static_cast<std::size_t>(r)] = ld->h;
            ld_mask[static_cast<std::size_t>(r)] = ld->mask;
        }

        // The coalescent starts from the positions the lookdown sample
        // actually occupies at the sampling time.
        std::vector<Point> start;
        for (int j : idx) start.push_back(state.particles[static_cast<std::size_t>(j)].location);
        const MarkedPartition result =
            run_quenched(MarkedPartition::singletons(start), env, config.horizon, config.horizon,
                         key.child("quenched"));
        const auto co = coalescent_first_merge(result);
        if (co) {
            co_time[static_cast<std::size_t>(r)] = co->h;
            co_mask[static_cast<std::size_t>(r)] = co->mask;
        }
    });

    std::vector<double> ld_merged, co_merged, ld_cats, co_cats;
    for (int r = 0; r < config.replicates; ++r) {
        if (ld_time[static_cast<std::size_t>(r)] >= 0.0) {
            ld_merged.push_back(ld_time[static_cast<std::size_t>(r)]);
            ld_cats.push_back(ld_mask[static_cast<std::size_t>(r)]);
        }
        if (co_time[static_cast<std::size_t>(r)] >= 0.0) {
            co_merged.push_back(co_time[static_cast<std::size_t>(r)]);
            co_cats.push_back(co_mask[static_cast<std::size_t>(r)]);
        }
    }

    report.raw.push_back({"lookdown_merge_times", ld_merged});
    report.raw.push_back({"coalescent_merge_times", co_merged});
    const double p1 = static_cast<double>(ld_merged.size()) / config.replicates;
    const double p2 = static_cast<double>(co_merged.size()) / config.replicates;
    const double pooled = 0.5 * (p1 + p2);
    const double prop_se =
        std::sqrt(std::max(pooled * (1.0 - pooled) * 2.0 / config.replicates, 1e-300));
    report.checks.push_back(
        make_z_check("merge proportion: lookdown vs coalescent", p1 - p2, prop_se, 0.0));

    const double ks_p = stats::ks_two_sample_pvalue(ld_merged, co_merged);
    report.checks.push_back(
        make_pvalue_check("first-merge time two-sample KS", "ks", ks_p, config.alpha));

    if (k == 3) {
        const double cat_p = stats::count_homogeneity_pvalue(ld_cats, co_cats);
        report.checks.push_back(
            make_pvalue_check("merged-set identity homogeneity", "chi2", cat_p, config.alpha));
    }

    report.runtime_seconds = timer.seconds();
    return report;
}

ExperimentReport convergence_diagnostic(const ConvergenceConfig& config, SeedKey seed) {
    Timer timer;
    config.model.validate(config.dom);

    ExperimentReport report;
    report.experiment = "convergence-diagnostic";
    report.seed = seed.raw();
    report.add_parameter("horizon", config.horizon);
    report.add_parameter("replicates", config.replicates);
    report.add_parameter("basis_size", config.basis_size);

    const TimeWindow window{0.0, config.horizon};
    const Environment env =
        generate_environment(config.model, window, config.dom, seed.child("omega"));

    const int n_levels = static_cast<int>(config.truncations.size());
    const int total = n_levels * config.replicates;
    std::vector<double> dists(static_cast<std::size_t>(total), 0.0);

    parallel_replicates(total, config.workers, [&](int idx) {
        const int ni = idx / config.replicates;
        const int r = idx % config.replicates;
        const double n = config.truncations[static_cast<std::size_t>(ni)];
        const SeedKey key = seed.child("conv")
                                .child(static_cast<std::uint64_t>(ni))
                                .child(static_cast<std::uint64_t>(r));
        LookdownState state = init_state(config.dom, 2.0 * n, config.kernel, key);
        evolve(state, env, 0.0, config.horizon,
               MutationModel::none(config.kernel.type_count), key.child("evolve"));
        const WeightedPointMeasure coarse = WeightedPointMeasure::from_state(state, n);
        const WeightedPointMeasure fine = WeightedPointMeasure::from_state(state, 2.0 * n);
        dists[static_cast<std::size_t>(idx)] =
            measure_distance(coarse, fine, config.basis_size, config.dom,
                             config.kernel.type_count);
    });

    std::vector<double> means;
    bool decreasing = true;
    std::string note;
    for (int ni = 0; ni < n_levels; ++ni) {
        std::span<const double> slice(dists.data() +
                                          static_cast<std::size_t>(ni * config.replicates),
                                      static_cast<std::size_t>(config.replicates));
        report.raw.push_back(
            {"distance_n" + std::to_string(config.truncations[static_cast<std::size_t>(ni)]),
             std::vector<double>(slice.begin(), slice.end())});
        means.push_back(stats::mean_se(slice).mean);
        note += (ni ? ", " : "d(M^n, M^2n): ") + std::to_string(means.back());
        if (ni > 0 && !(means[static_cast<std::size_t>(ni)] <
                        means[static_cast<std::size_t>(ni - 1)]))
            decreasing = false;
    }
    CheckResult check;
    check.name = "measure distance strictly decreasing along the truncation ladder";
    check.kind = "monotone";
    check.pass = decreasing;
    check.estimate = means.back();
    check.note = note;
    report.checks.push_back(check);

    report.runtime_seconds = timer.seconds();
    return report;
}

} // namespace slfv
