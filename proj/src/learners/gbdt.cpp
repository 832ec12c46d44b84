#include "steatosis/learners/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "steatosis/random.hpp"

namespace steatosis {

BoostParams boost_params(Family family, const Hyperparams& p) {
    BoostParams b;
    if (family == Family::GBLeafwise) {
        b.growth = Growth::leafwise;
        b.n_estimators = static_cast<int>(param_int(p, "n_estimators", 100));
        b.learning_rate = param_double(p, "learning_rate", 0.1);
        b.num_leaves = static_cast<int>(param_int(p, "num_leaves", 31));
        b.max_depth = -1;
        b.min_child_samples = static_cast<int>(param_int(p, "min_child_samples", 20));
        b.min_child_weight = param_double(p, "min_child_weight", 1e-3);
        b.subsample = param_double(p, "subsample", 1.0);
        b.colsample_bytree = param_double(p, "colsample_bytree", 1.0);
        b.reg_alpha = param_double(p, "reg_alpha", 0.0);
        b.reg_lambda = param_double(p, "reg_lambda", 0.0);
        b.gamma = 0.0;
    } else {
        b.growth = Growth::depthwise;
        b.n_estimators = static_cast<int>(param_int(p, "n_estimators", 100));
        b.learning_rate = param_double(p, "learning_rate", 0.3);
        b.max_depth = static_cast<int>(param_int(p, "max_depth", 6));
        b.min_child_samples = 1;
        b.min_child_weight = param_double(p, "min_child_weight", 1.0);
        b.subsample = param_double(p, "subsample", 1.0);
        b.colsample_bytree = param_double(p, "colsample_bytree", 1.0);
        b.gamma = param_double(p, "gamma", 0.0);
        b.reg_alpha = param_double(p, "reg_alpha", 0.0);
        b.reg_lambda = param_double(p, "reg_lambda", 1.0);
    }
    b.max_bins = static_cast<int>(param_int(p, "max_bins", 64));
    return b;
}

double BoostTree::predict(std::span<const double> x) const {
    std::size_t i = 0;
    while (feature[i] >= 0)
        i = static_cast<std::size_t>(x[static_cast<std::size_t>(feature[i])] <= threshold[i] ? left[i] : right[i]);
    return value[i];
}

std::size_t BoostTree::leaf_count() const {
    return static_cast<std::size_t>(std::count(feature.begin(), feature.end(), -1));
}

BoostModel::BoostModel(std::vector<double> init, std::vector<BoostTree> trees, int class_count)
    : init_(std::move(init)), trees_(std::move(trees)) {
    if (init_.size() != static_cast<std::size_t>(class_count) || trees_.size() % init_.size() != 0)
        throw std::invalid_argument("boosting: inconsistent model shape");
}

void BoostModel::raw_scores(std::span<const double> x, std::span<double> out) const {
    const std::size_t K = init_.size();
    std::copy(init_.begin(), init_.end(), out.begin());
    for (std::size_t t = 0; t < trees_.size(); ++t) out[t % K] += trees_[t].predict(x);
}

namespace {

void softmax(std::span<double> v) {
    const double mx = *std::max_element(v.begin(), v.end());
    double sum = 0.0;
    for (auto& e : v) sum += e = std::exp(e - mx);
    for (auto& e : v) e /= sum;
}

// Per-feature split candidates learned from the training values.
struct Binning {
    std::vector<std::vector<double>> edges;  // ascending thresholds
    std::vector<std::uint16_t> codes;        // rows x features
    std::size_t cols = 0;

    std::uint16_t code(std::size_t r, std::size_t f) const { return codes[r * cols + f]; }
    std::size_t bins(std::size_t f) const { return edges[f].size() + 1; }
};

Binning make_binning(const Matrix& X, int max_bins) {
    Binning b;
    b.cols = X.cols();
    b.edges.resize(X.cols());
    const std::size_t n = X.rows();
    std::vector<double> v(n);
    for (std::size_t f = 0; f < X.cols(); ++f) {
        for (std::size_t r = 0; r < n; ++r) v[r] = X(r, f);
        std::sort(v.begin(), v.end());
        std::vector<double> distinct;
        std::unique_copy(v.begin(), v.end(), std::back_inserter(distinct));
        auto& e = b.edges[f];
        auto midpoint = [](double a, double c) {
            double m = 0.5 * (a + c);
            return m < c ? m : a;
        };
        if (distinct.size() <= static_cast<std::size_t>(max_bins)) {
            for (std::size_t i = 0; i + 1 < distinct.size(); ++i) e.push_back(midpoint(distinct[i], distinct[i + 1]));
        } else {
            for (int q = 1; q < max_bins; ++q) {
                const double at = v[static_cast<std::size_t>(q) * n / static_cast<std::size_t>(max_bins)];
                auto next = std::upper_bound(distinct.begin(), distinct.end(), at);
                if (next == distinct.end()) break;
                const double edge = midpoint(at, *next);
                if (e.empty() || edge > e.back()) e.push_back(edge);
            }
        }
    }
    b.codes.resize(n * X.cols());
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t f = 0; f < X.cols(); ++f) {
            const auto& e = b.edges[f];
            b.codes[r * b.cols + f] =
                static_cast<std::uint16_t>(std::lower_bound(e.begin(), e.end(), X(r, f)) - e.begin());
        }
    return b;
}

double l1_threshold(double g, double alpha) {
    if (g > alpha) return g - alpha;
    if (g < -alpha) return g + alpha;
    return 0.0;
}

struct SplitChoice {
    double gain = -std::numeric_limits<double>::infinity();
    int feature = -1;
    std::size_t bin = 0;
};

struct GrowNode {
    int id;
    std::vector<std::size_t> rows;
    int depth;
    double G, H;
    SplitChoice split;
};

class TreeGrower {
public:
    TreeGrower(const BoostParams& p, const Binning& bins, std::span<const double> g, std::span<const double> h,
               std::vector<std::size_t> features)
        : p_(p), bins_(bins), g_(g), h_(h), features_(std::move(features)) {}

    BoostTree grow(std::vector<std::size_t> rows) {
        tree_ = BoostTree{};
        GrowNode root = make_node(std::move(rows), 0);
        if (p_.growth == Growth::depthwise) grow_depthwise(std::move(root));
        else grow_leafwise(std::move(root));
        return std::move(tree_);
    }

private:
    double score(double G, double H) const {
        const double t = l1_threshold(G, p_.reg_alpha);
        return t * t / (H + p_.reg_lambda);
    }

    double leaf_value(double G, double H) const {
        const double denom = H + p_.reg_lambda;
        return denom > 0 ? -l1_threshold(G, p_.reg_alpha) / denom * p_.learning_rate : 0.0;
    }

    GrowNode make_node(std::vector<std::size_t> rows, int depth) {
        GrowNode node{static_cast<int>(tree_.feature.size()), std::move(rows), depth, 0.0, 0.0, {}};
        for (auto r : node.rows) {
            node.G += g_[r];
            node.H += h_[r];
        }
        tree_.feature.push_back(-1);
        tree_.threshold.push_back(0.0);
        tree_.left.push_back(-1);
        tree_.right.push_back(-1);
        tree_.value.push_back(leaf_value(node.G, node.H));
        node.split = find_split(node);
        return node;
    }

    SplitChoice find_split(const GrowNode& node) const {
        SplitChoice best;
        const auto n = node.rows.size();
        if (n < 2 * static_cast<std::size_t>(std::max(1, p_.min_child_samples))) return best;
        if (p_.growth == Growth::depthwise && node.depth >= p_.max_depth) return best;
        const double parent = score(node.G, node.H);
        std::vector<double> hg, hh;
        std::vector<std::size_t> hc;
        for (auto f : features_) {
            const std::size_t B = bins_.bins(f);
            if (B < 2) continue;
            hg.assign(B, 0.0);
            hh.assign(B, 0.0);
            hc.assign(B, 0);
            for (auto r : node.rows) {
                const auto b = bins_.code(r, f);
                hg[b] += g_[r];
                hh[b] += h_[r];
                ++hc[b];
            }
            double GL = 0.0, HL = 0.0;
            std::size_t CL = 0;
            for (std::size_t b = 0; b + 1 < B; ++b) {
                GL += hg[b];
                HL += hh[b];
                CL += hc[b];
                if (hc[b] == 0 && b > 0) continue;
                const std::size_t CR = n - CL;
                if (CL < static_cast<std::size_t>(p_.min_child_samples) || CR < static_cast<std::size_t>(p_.min_child_samples))
                    continue;
                const double GR = node.G - GL, HR = node.H - HL;
                if (HL < p_.min_child_weight || HR < p_.min_child_weight) continue;
                const double gain = 0.5 * (score(GL, HL) + score(GR, HR) - parent) - p_.gamma;
                if (gain > best.gain) best = {gain, static_cast<int>(f), b};
            }
        }
        return best;
    }

    bool splittable(const GrowNode& node) const { return node.split.feature >= 0 && node.split.gain > 1e-12; }

    std::pair<GrowNode, GrowNode> split(GrowNode& node) {
        const auto f = static_cast<std::size_t>(node.split.feature);
        std::vector<std::size_t> lrows, rrows;
        for (auto r : node.rows) (bins_.code(r, f) <= node.split.bin ? lrows : rrows).push_back(r);
        const auto id = static_cast<std::size_t>(node.id);
        tree_.feature[id] = node.split.feature;
        tree_.threshold[id] = bins_.edges[f][node.split.bin];
        GrowNode l = make_node(std::move(lrows), node.depth + 1);
        GrowNode r = make_node(std::move(rrows), node.depth + 1);
        tree_.left[id] = l.id;
        tree_.right[id] = r.id;
        tree_.value[id] = 0.0;
        return {std::move(l), std::move(r)};
    }

    void grow_depthwise(GrowNode root) {
        std::vector<GrowNode> level;
        level.push_back(std::move(root));
        while (!level.empty()) {
            std::vector<GrowNode> next;
            for (auto& node : level) {
                if (!splittable(node)) continue;
                auto [l, r] = split(node);
                next.push_back(std::move(l));
                next.push_back(std::move(r));
            }
            level = std::move(next);
        }
    }

    void grow_leafwise(GrowNode root) {
        std::vector<GrowNode> leaves;
        leaves.push_back(std::move(root));
        while (static_cast<int>(leaves.size()) < p_.num_leaves) {
            std::ptrdiff_t best = -1;
            for (std::size_t i = 0; i < leaves.size(); ++i) {
                if (!splittable(leaves[i])) continue;
                if (best < 0 || leaves[i].split.gain > leaves[static_cast<std::size_t>(best)].split.gain ||
                    (leaves[i].split.gain == leaves[static_cast<std::size_t>(best)].split.gain &&
                     leaves[i].id < leaves[static_cast<std::size_t>(best)].id))
                    best = static_cast<std::ptrdiff_t>(i);
            }
            if (best < 0) break;
            GrowNode node = std::move(leaves[static_cast<std::size_t>(best)]);
            leaves.erase(leaves.begin() + best);
            auto [l, r] = split(node);
            leaves.push_back(std::move(l));
            leaves.push_back(std::move(r));
        }
    }

    const BoostParams& p_;
    const Binning& bins_;
    std::span<const double> g_, h_;
    std::vector<std::size_t> features_;
    BoostTree tree_;
};

double mean_log_loss(const Matrix& F, std::span<const int> y) {
    double loss = 0.0;
    std::vector<double> p(F.cols());
    for (std::size_t i = 0; i < F.rows(); ++i) {
        std::copy(F.row(i).begin(), F.row(i).end(), p.begin());
        softmax(p);
        loss -= std::log(std::max(p[static_cast<std::size_t>(y[i])], 1e-300));
    }
    return loss / static_cast<double>(F.rows());
}

std::vector<std::size_t> sample_indices(std::size_t n, double fraction, Rng& rng) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    if (fraction >= 1.0) return idx;
    const auto m = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n))));
    for (std::size_t i = 0; i < m; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, n - 1);
        std::swap(idx[i], idx[pick(rng)]);
    }
    idx.resize(m);
    std::sort(idx.begin(), idx.end());
    return idx;
}

}  // namespace

void BoostModel::predict_proba(std::span<const double> x, std::span<double> out) const {
    raw_scores(x, out);
    softmax(out);
}

nlohmann::json BoostModel::state() const {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& t : trees_)
        trees.push_back({{"feature", t.feature}, {"threshold", t.threshold}, {"left", t.left}, {"right", t.right},
                         {"value", t.value}});
    return {{"init", init_}, {"trees", trees}};
}

std::shared_ptr<const Model> BoostModel::load(const nlohmann::json& j) {
    auto init = j.at("init").get<std::vector<double>>();
    std::vector<BoostTree> trees;
    for (const auto& t : j.at("trees")) {
        BoostTree bt{t.at("feature").get<std::vector<int>>(), t.at("threshold").get<std::vector<double>>(),
                     t.at("left").get<std::vector<int>>(), t.at("right").get<std::vector<int>>(),
                     t.at("value").get<std::vector<double>>()};
        const auto n = bt.feature.size();
        if (n == 0 || bt.threshold.size() != n || bt.left.size() != n || bt.right.size() != n || bt.value.size() != n)
            throw std::invalid_argument("boosting: inconsistent tree");
        for (std::size_t i = 0; i < n; ++i)
            if (bt.feature[i] >= 0 && (bt.left[i] <= static_cast<int>(i) || bt.right[i] <= static_cast<int>(i) ||
                                       bt.left[i] >= static_cast<int>(n) || bt.right[i] >= static_cast<int>(n)))
                throw std::invalid_argument("boosting: bad child index");
        trees.push_back(std::move(bt));
    }
    const auto K = static_cast<int>(init.size());
    return std::make_shared<BoostModel>(std::move(init), std::move(trees), K);
}

BoostFit fit_boosting(const BoostParams& p, const Matrix& X, std::span<const int> y, int class_count,
                      std::uint64_t seed, bool record_loss) {
    const std::size_t n = X.rows();
    const auto K = static_cast<std::size_t>(class_count);
    const Binning bins = make_binning(X, std::clamp(p.max_bins, 2, 65535));

    std::vector<double> init(K);
    std::vector<std::size_t> counts(K, 0);
    for (int label : y) ++counts[static_cast<std::size_t>(label)];
    for (std::size_t k = 0; k < K; ++k)
        init[k] = std::log((static_cast<double>(counts[k]) + 1.0) / (static_cast<double>(n) + static_cast<double>(K)));

    Matrix F(n, K);
    for (std::size_t i = 0; i < n; ++i) std::copy(init.begin(), init.end(), F.row(i).begin());

    BoostFit out;
    if (record_loss) out.train_loss.push_back(mean_log_loss(F, y));

    const double hess_scale = K > 1 ? static_cast<double>(K) / (static_cast<double>(K) - 1.0) : 1.0;
    std::vector<BoostTree> trees;
    trees.reserve(static_cast<std::size_t>(p.n_estimators) * K);
    std::vector<double> prob(K);
    std::vector<double> g(n * K), h(n * K);
    std::vector<double> gk(n), hk(n);

    for (int round = 0; round < p.n_estimators; ++round) {
        for (std::size_t i = 0; i < n; ++i) {
            std::copy(F.row(i).begin(), F.row(i).end(), prob.begin());
            softmax(prob);
            for (std::size_t k = 0; k < K; ++k) {
                const double pk = prob[k];
                g[i * K + k] = pk - (static_cast<std::size_t>(y[i]) == k ? 1.0 : 0.0);
                h[i * K + k] = std::max(hess_scale * pk * (1.0 - pk), 1e-16);
            }
        }
        Rng row_rng = make_rng(seed, "boost-rows", static_cast<std::uint64_t>(round));
        auto rows = sample_indices(n, p.subsample, row_rng);
        for (std::size_t k = 0; k < K; ++k) {
            Rng col_rng = make_rng(seed, "boost-cols", static_cast<std::uint64_t>(round) * K + k);
            auto features = sample_indices(X.cols(), p.colsample_bytree, col_rng);
            for (std::size_t i = 0; i < n; ++i) {
                gk[i] = g[i * K + k];
                hk[i] = h[i * K + k];
            }
            TreeGrower grower(p, bins, gk, hk, std::move(features));
            BoostTree tree = grower.grow(rows);
            for (std::size_t i = 0; i < n; ++i) F(i, k) += tree.predict(X.row(i));
            trees.push_back(std::move(tree));
        }
        if (record_loss) out.train_loss.push_back(mean_log_loss(F, y));
    }
    out.model = std::make_shared<BoostModel>(std::move(init), std::move(trees), class_count);
    return out;
}

}  // namespace steatosis
