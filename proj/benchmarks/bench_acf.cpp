#include <benchmark/benchmark.h>

#include "pvgate/acf/acf.hpp"

using namespace pvgate;

namespace {

acf::Config mid_config() {
  std::string text;
  for (int g = 0; g < 10; ++g) {
    text += "UAG(ops" + std::to_string(g) + "){";
    for (int u = 0; u < 8; ++u) {
      if (u) text += ",";
      text += "user" + std::to_string(g * 8 + u);
    }
    text += "}\n";
  }
  for (int a = 0; a < 20; ++a) {
    text += "ASG(asg" + std::to_string(a) + "){ RULE(1,READ) RULE(1,WRITE){UAG(ops" +
            std::to_string(a % 10) + ")} }\n";
  }
  return acf::parse_acf(text);
}

void BM_Evaluate(benchmark::State& state) {
  const auto cfg = mid_config();
  const proto::Identity who{"user42", "console1"};
  for (auto _ : state) {
    auto d = acf::evaluate(cfg, "asg7", who, acf::Level::Write);
    benchmark::DoNotOptimize(d.allow);
  }
}
BENCHMARK(BM_Evaluate);

void BM_EvaluateDeny(benchmark::State& state) {
  const auto cfg = mid_config();
  const proto::Identity who{"stranger", "offsite"};
  for (auto _ : state) {
    auto d = acf::evaluate(cfg, "asg7", who, acf::Level::Write);
    benchmark::DoNotOptimize(d.allow);
  }
}
BENCHMARK(BM_EvaluateDeny);

void BM_ParseRender(benchmark::State& state) {
  const auto cfg = mid_config();
  const auto text = acf::render_acf(cfg);
  for (auto _ : state) {
    auto back = acf::parse_acf(text);
    benchmark::DoNotOptimize(back.asgs.size());
  }
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * text.size()));
}
BENCHMARK(BM_ParseRender);

void BM_MergeTwo(benchmark::State& state) {
  const auto a = mid_config();
  const auto b = mid_config();
  for (auto _ : state) {
    auto merged = acf::merge_acf({a, b}, acf::MergeMode::Union);
    benchmark::DoNotOptimize(merged.asgs.size());
  }
}
BENCHMARK(BM_MergeTwo);

}  // namespace
