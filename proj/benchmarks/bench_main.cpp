#include <benchmark/benchmark.h>

#include <vector>

#include "nhdp/generative.hpp"
#include "nhdp/global_inference.hpp"
#include "nhdp/local_inference.hpp"
#include "nhdp/specfun.hpp"

using namespace nhdp;

namespace {

void BM_Digamma(benchmark::State& state) {
  double x = 0.37;
  for (auto _ : state) {
    benchmark::DoNotOptimize(digamma(x));
    x += 1e-3;
    if (x > 50.0) x = 0.37;
  }
}
BENCHMARK(BM_Digamma);

void BM_ExpectLogDirichlet(benchmark::State& state) {
  std::vector<double> lambda(static_cast<std::size_t>(state.range(0)), 0.5);
  std::vector<double> out(lambda.size());
  for (auto _ : state) {
    expect_log_dirichlet(lambda, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ExpectLogDirichlet)->Arg(1000)->Arg(10000);

struct Fixture {
  GlobalModel model;
  std::vector<BowDocument> docs;

  Fixture(Truncation trunc, int vocab, int words) {
    const Hyperparameters h;
    const TruncatedTree tree(std::move(trunc));
    Rng rng(3);
    const auto truth = sample_global_tree(h, tree, vocab, rng);
    model = make_prior_model(tree, h, vocab);
    for (int i = 0; i < tree.size(); ++i) {
      for (int w = 0; w < vocab; ++w) model.topic(i)[static_cast<std::size_t>(w)] += 50.0 * truth.topics[static_cast<std::size_t>(i)][static_cast<std::size_t>(w)];
    }
    for (int d = 0; d < 64; ++d) docs.push_back(sample_document(truth, h, words, rng, d).document);
  }
};

void BM_RunLocal(benchmark::State& state) {
  const bool large = state.range(0) != 0;
  const Fixture f(large ? Truncation{{20, 10, 5}} : Truncation{{3, 3, 3}}, 1000, 150);
  const ModelExpectations ex(f.model);
  const LocalConfig cfg;
  std::size_t d = 0;
  for (auto _ : state) {
    auto s = run_local(f.docs[d++ % f.docs.size()], ex, cfg);
    benchmark::DoNotOptimize(s.nu.data());
  }
}
BENCHMARK(BM_RunLocal)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

void BM_ModelExpectations(benchmark::State& state) {
  const Fixture f(Truncation{{20, 10, 5}}, 1000, 10);
  for (auto _ : state) {
    const ModelExpectations ex(f.model);
    benchmark::DoNotOptimize(ex.elog_theta.data());
  }
}
BENCHMARK(BM_ModelExpectations)->Unit(benchmark::kMillisecond);

void BM_AccumulateStats(benchmark::State& state) {
  const Fixture f(Truncation{{3, 3, 3}}, 1000, 150);
  const ModelExpectations ex(f.model);
  std::vector<DocumentState> states;
  for (const auto& doc : f.docs) states.push_back(run_local(doc, ex, LocalConfig{}));
  for (auto _ : state) {
    auto stats = accumulate_stats(states, f.docs, 10000, f.model);
    benchmark::DoNotOptimize(stats.lambda_hat.data());
  }
}
BENCHMARK(BM_AccumulateStats)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
