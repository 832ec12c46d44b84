#include <benchmark/benchmark.h>

#include "steatosis/ingest.hpp"
#include "steatosis/kernels.hpp"
#include "steatosis/learners/forest.hpp"
#include "steatosis/learners/knn.hpp"
#include "steatosis/random.hpp"
#include "steatosis/synth.hpp"
#include "steatosis/tuning.hpp"

using namespace steatosis;

namespace {

const TierDataset& tier1() {
    static const TierDataset d = [] {
        const auto records = generate_cohort(synth_preset("incremental-signal"));
        auto part = partition_tiers(records);
        TierDataset t = part[Tier::one];
        t.X = apply_scaler(fit_scaler(t.X), t.X);
        return t;
    }();
    return d;
}

Exec exec_of(const benchmark::State& state) { return state.range(0) ? Exec::parallel : Exec::serial; }

void BM_Gram(benchmark::State& state) {
    const KernelParams k{KernelType::rbf, 1.0 / 12, 0.0, 3};
    for (auto _ : state) benchmark::DoNotOptimize(gram_matrix(tier1().X, k, exec_of(state)));
}

void BM_GramReference(benchmark::State& state) {
    const KernelParams k{KernelType::rbf, 1.0 / 12, 0.0, 3};
    for (auto _ : state) benchmark::DoNotOptimize(gram_matrix_reference(tier1().X, k));
}

void BM_KnnBatch(benchmark::State& state) {
    const auto& d = tier1();
    const auto model = KnnModel::fit({{"n_neighbors", std::int64_t{5}}}, d.X, d.y, kClassCount);
    const auto* knn = dynamic_cast<const KnnModel*>(model.get());
    for (auto _ : state) benchmark::DoNotOptimize(knn->predict_proba_batch(d.X, exec_of(state)));
}

void BM_ForestFit(benchmark::State& state) {
    const auto& d = tier1();
    const Hyperparams p{{"n_estimators", std::int64_t{100}}, {"max_features", std::string("sqrt")}};
    for (auto _ : state) benchmark::DoNotOptimize(ForestModel::fit(p, d.X, d.y, kClassCount, 7, exec_of(state)));
}

void BM_CrossValidate(benchmark::State& state) {
    const auto& d = tier1();
    const ClassifierSpec spec{Family::KNN, {{"n_neighbors", std::int64_t{7}}}};
    CvOptions o;
    o.k = 10;
    o.seed = 3;
    o.exec = exec_of(state);
    for (auto _ : state) benchmark::DoNotOptimize(cross_validate(spec, d.X, d.y, o));
}

}  // namespace

BENCHMARK(BM_Gram)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GramReference)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_KnnBatch)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ForestFit)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CrossValidate)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
