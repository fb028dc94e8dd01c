#include <benchmark/benchmark.h>

#include "pvgate/proto/frame.hpp"
#include "pvgate/proto/messages.hpp"

using namespace pvgate;

namespace {

void BM_EncodeFrame(benchmark::State& state) {
  proto::Frame f(proto::Command::Event, 42,
                 proto::value_payload(proto::ChannelValue::make_double(3.14, {}, 12345)));
  std::vector<std::uint8_t> out;
  for (auto _ : state) {
    out.clear();
    proto::encode_frame(f, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * out.size()));
}
BENCHMARK(BM_EncodeFrame);

void BM_DecodeFrame(benchmark::State& state) {
  const auto wire = proto::encode_frame(
      proto::Frame(proto::Command::Event, 42,
                   proto::value_payload(proto::ChannelValue::make_double(3.14, {}, 12345))));
  for (auto _ : state) {
    auto r = proto::decode_frame(wire);
    benchmark::DoNotOptimize(r.frame.cid);
  }
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * wire.size()));
}
BENCHMARK(BM_DecodeFrame);

void BM_StreamReader(benchmark::State& state) {
  std::vector<std::uint8_t> wire;
  for (int i = 0; i < 100; ++i) {
    proto::encode_frame(proto::Frame(proto::Command::Event, static_cast<std::uint32_t>(i),
                                     proto::value_payload(proto::ChannelValue::make_double(
                                         static_cast<double>(i)))),
                        wire);
  }
  for (auto _ : state) {
    proto::FrameReader reader;
    reader.feed(wire);
    proto::Frame f;
    int n = 0;
    while (reader.next(f) == proto::FrameDecodeStatus::Ok) ++n;
    benchmark::DoNotOptimize(n);
  }
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * wire.size()));
}
BENCHMARK(BM_StreamReader);

void BM_ValueRoundTrip(benchmark::State& state) {
  const auto v = proto::ChannelValue::make_double(2.718281828, proto::Severity::Minor, 99);
  for (auto _ : state) {
    auto r = proto::decode_value(proto::encode_value(v));
    benchmark::DoNotOptimize(r.value.severity);
  }
}
BENCHMARK(BM_ValueRoundTrip);

}  // namespace
