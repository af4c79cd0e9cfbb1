#include "slfv/mutation.hpp"

#include <cmath>
#include <stdexcept>

namespace slfv {

MutationModel MutationModel::none(int type_count) {
    if (type_count < 1 || type_count > 256)
        throw std::invalid_argument("mutation: type count must be in [1,256]");
    MutationModel m;
    m.type_count_ = type_count;
    m.q_.assign(static_cast<std::size_t>(type_count) * static_cast<std::size_t>(type_count),
                0.0);
    return m;
}

MutationModel MutationModel::from_generator(int type_count, std::vector<double> q) {
    MutationModel m = none(type_count);
    const auto n = static_cast<std::size_t>(type_count);
    if (q.size() != n * n) throw std::invalid_argument("mutation: generator size mismatch");

    double rate = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (i != j && q[i * n + j] < 0.0)
                throw std::invalid_argument("mutation: off-diagonal rates must be >= 0");
            row += q[i * n + j];
        }
        if (std::abs(row) > 1e-12)
            throw std::invalid_argument("mutation: generator rows must sum to zero");
        rate = std::max(rate, -q[i * n + i]);
    }
    m.q_ = std::move(q);
    m.uniformization_rate_ = rate;
    if (rate > 0.0) {
        m.jump_.assign(n * n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                m.jump_[i * n + j] = (i == j ? 1.0 : 0.0) + m.q_[i * n + j] / rate;
    }
    return m;
}

MutationModel MutationModel::parent_independent(double rate, std::vector<double> target) {
    if (!(rate >= 0.0)) throw std::invalid_argument("mutation: rate must be >= 0");
    const int q = static_cast<int>(target.size());
    double total = 0.0;
    for (double p : target) {
        if (p < 0.0) throw std::invalid_argument("mutation: target distribution");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw std::invalid_argument("mutation: target distribution must sum to 1");
    const auto n = static_cast<std::size_t>(q);
    std::vector<double> gen(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) gen[i * n + j] = rate * (target[j] - (i == j));
    return from_generator(q, std::move(gen));
}

MutationModel MutationModel::two_type_flip(double rate) {
    return from_generator(2, {-rate, rate, rate, -rate});
}

std::vector<double> MutationModel::transition_matrix(double dt) const {
    const auto n = static_cast<std::size_t>(type_count_);
    std::vector<double> p(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) p[i * n + i] = 1.0;
    if (!enabled() || dt <= 0.0) return p;

    // exp(dt Q) = sum_k Poisson(rate*dt; k) * J^k, truncated when the
    // remaining Poisson mass is negligible.
    const double lambda = uniformization_rate_ * dt;
    std::vector<double> term = p; // J^0
    std::vector<double> out(n * n, 0.0);
    double weight = std::exp(-lambda);
    double tail = 1.0;
    for (int k = 0;; ++k) {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += weight * term[i];
        tail -= weight;
        if (tail < 1e-15 || k > 10000) break;
        std::vector<double> next(n * n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t l = 0; l < n; ++l) {
                const double t_il = term[i * n + l];
                if (t_il == 0.0) continue;
                for (std::size_t j = 0; j < n; ++j) next[i * n + j] += t_il * jump_[l * n + j];
            }
        term = std::move(next);
        weight *= lambda / static_cast<double>(k + 1);
    }
    return out;
}

TypeIndex MutationModel::evolve(TypeIndex type, double dt, Rng& rng) const {
    if (type < 0 || type >= type_count_) throw std::invalid_argument("mutation: type out of range");
    if (!enabled() || dt <= 0.0) return type;
    const auto n = static_cast<std::size_t>(type_count_);
    const std::uint64_t jumps = rng.poisson(uniformization_rate_ * dt);
    for (std::uint64_t k = 0; k < jumps; ++k) {
        type = static_cast<TypeIndex>(
            rng.discrete(jump_.data() + static_cast<std::size_t>(type) * n, n));
    }
    return type;
}

TypeIndex evolve_type(TypeIndex type, double dt, const MutationModel& model, SeedKey seed) {
    Rng rng(seed);
    return model.evolve(type, dt, rng);
}

void MutationTree::validate() const {
    if (nodes.empty()) throw std::invalid_argument("mutation tree: empty");
    if (nodes[0].parent != -1) throw std::invalid_argument("mutation tree: node 0 must be root");
    for (std::size_t i = 1; i < nodes.size(); ++i) {
        if (nodes[i].parent < 0 || nodes[i].parent >= static_cast<int>(i))
            throw std::invalid_argument("mutation tree: parents must precede children");
    }
    for (const Node& node : nodes) {
        if (!(node.branch >= 0.0))
            throw std::invalid_argument("mutation tree: branch durations must be >= 0");
    }
}

std::vector<int> MutationTree::leaves() const {
    std::vector<bool> has_child(nodes.size(), false);
    for (std::size_t i = 1; i < nodes.size(); ++i)
        has_child[static_cast<std::size_t>(nodes[i].parent)] = true;
    std::vector<int> out;
    for (std::size_t i = 0; i < nodes.size(); ++i)
        if (!has_child[i]) out.push_back(static_cast<int>(i));
    return out;
}

std::vector<TypeIndex> run_along_tree(const MutationTree& tree, TypeIndex root_type,
                                      const MutationModel& model, SeedKey seed) {
    tree.validate();
    std::vector<TypeIndex> type_at(tree.nodes.size());
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
        const TypeIndex from =
            tree.nodes[i].parent < 0 ? root_type
                                     : type_at[static_cast<std::size_t>(tree.nodes[i].parent)];
        Rng rng(seed.child(i));
        type_at[i] = model.evolve(from, tree.nodes[i].branch, rng);
    }
    std::vector<TypeIndex> out;
    for (int leaf : tree.leaves()) out.push_back(type_at[static_cast<std::size_t>(leaf)]);
    return out;
}

} // namespace slfv
