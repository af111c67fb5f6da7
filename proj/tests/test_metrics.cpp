#include <gtest/gtest.h>

#include <random>

#include "mecorch/metrics.hpp"

using namespace mecorch;

namespace {

TraceRow row(const char* host, double t, double cpu, double mem, double storage) {
  return TraceRow{std::string(host), t, cpu, mem, storage};
}

MetricsStore integer_store(const HostId& h, int n) {
  MetricsStore store;
  for (int t = 0; t < n; ++t) store.append({h, static_cast<double>(t), 0.01 * t, 0.2, 0.3});
  return store;
}

}  // namespace

TEST(Ingest, EmptyInputGivesEmptyStore) {
  std::vector<TraceRow> rows;
  EXPECT_TRUE(ingest_trace(rows).empty());
}

TEST(Ingest, SingleRecordIsRetrievable) {
  std::vector<TraceRow> rows{row("h2", 0.0, 0.30, 0.40, 0.10)};
  auto store = ingest_trace(rows);
  auto s = store.at(HostId{"h2"}, 0.0);
  ASSERT_TRUE(s.has_value());
  EXPECT_EQ(s->cpu, 0.30);
  EXPECT_EQ(s->mem, 0.40);
  EXPECT_EQ(s->storage, 0.10);
}

TEST(Ingest, DuplicateTimestampNamesSecondRecord) {
  std::vector<TraceRow> rows{row("h2", 5.0, 0.1, 0.1, 0.1), row("h2", 5.0, 0.2, 0.2, 0.2)};
  try {
    ingest_trace(rows);
    FAIL() << "expected IngestError";
  } catch (const IngestError& e) {
    EXPECT_EQ(e.index(), 1u);
    EXPECT_NE(std::string(e.what()).find("duplicate"), std::string::npos);
  }
}

TEST(Ingest, MalformedRecordsAreRejectedByIndex) {
  std::vector<TraceRow> rows{row("h1", 0.0, 0.1, 0.1, 0.1), row("h1", 1.0, 1.5, 0.1, 0.1)};
  try {
    ingest_trace(rows);
    FAIL();
  } catch (const IngestError& e) {
    EXPECT_EQ(e.index(), 1u);
  }
  TraceRow missing = row("h1", 0.0, 0.1, 0.1, 0.1);
  missing.mem.reset();
  EXPECT_THROW(ingest_trace(std::vector<TraceRow>{missing}), IngestError);
  TraceRow nan_row = row("h1", 0.0, std::nan(""), 0.1, 0.1);
  EXPECT_THROW(ingest_trace(std::vector<TraceRow>{nan_row}), IngestError);
}

TEST(Ingest, SortsByTimestamp) {
  std::vector<TraceRow> rows{row("a", 2.0, 0.2, 0, 0), row("a", 1.0, 0.1, 0, 0), row("b", 0.0, 0.5, 0, 0)};
  auto store = ingest_trace(rows);
  auto s = store.samples(HostId{"a"});
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].timestamp, 1.0);
  EXPECT_EQ(s[1].timestamp, 2.0);
}

TEST(TraceCsv, ParseReportsUnparsableFieldAsMissing) {
  auto rows = parse_trace_csv("host_id,timestamp,cpu,mem,storage\nh1,0,abc,0.1,0.1\n");
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_FALSE(rows[0].cpu.has_value());
  EXPECT_THROW(parse_trace_csv("host,t\n"), InputError);
}

TEST(TraceCsv, RoundTripIsByteIdentical) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 25; ++trial) {
    MetricsStore store;
    const int hosts = 1 + trial % 4;
    for (int h = 0; h < hosts; ++h) {
      HostId id{"h" + std::to_string(h)};
      double t = 0.0;
      for (int k = 0; k < 20; ++k) {
        t += 0.1 + u(rng);
        store.append({id, t, u(rng), u(rng), u(rng)});
      }
    }
    const auto text = write_trace_csv(store);
    const auto again = write_trace_csv(ingest_trace(parse_trace_csv(text)));
    ASSERT_EQ(text, again);
  }
}

TEST(Window, ReturnsMostRecentSamples) {
  HostId h{"h"};
  auto store = integer_store(h, 10);
  auto w = store.window(h, 9.0, 4);
  ASSERT_EQ(w.size(), 4u);
  EXPECT_EQ(w.samples.front().timestamp, 6.0);
  EXPECT_EQ(w.samples.back().timestamp, 9.0);
}

TEST(Window, InsufficientHistoryCarriesAvailableCount) {
  HostId h{"h"};
  auto store = integer_store(h, 10);
  try {
    store.window(h, 9.0, 20);
    FAIL();
  } catch (const NotEnoughData& e) {
    EXPECT_EQ(e.available(), 10u);
  }
}

TEST(Window, EndTimeBetweenSamples) {
  HostId h{"h"};
  auto store = integer_store(h, 10);
  auto w = store.window(h, 5.5, 3);
  ASSERT_EQ(w.size(), 3u);
  EXPECT_EQ(w.samples[0].timestamp, 3.0);
  EXPECT_EQ(w.samples[2].timestamp, 5.0);
}

TEST(Window, NeverPartial) {
  HostId h{"h"};
  auto store = integer_store(h, 12);
  for (int end = 0; end < 12; ++end) {
    for (std::size_t len = 1; len <= 14; ++len) {
      try {
        EXPECT_EQ(store.window(h, end, len).size(), len);
      } catch (const NotEnoughData& e) {
        EXPECT_LT(e.available(), len);
      }
    }
  }
}

TEST(Profile, StepShape) {
  auto samples = generate_profile(HostId{"h2"}, LoadProfile::step(0.3, 0.9, 200), 1.0, 400.0, 1);
  ASSERT_EQ(samples.size(), 401u);
  for (const auto& s : samples) EXPECT_EQ(s.cpu, s.timestamp < 200 ? 0.3 : 0.9);
}

TEST(Profile, ConstantZero) {
  for (const auto& s : generate_profile(HostId{"h"}, LoadProfile::constant(0.0), 0.5, 10.0, 3)) {
    EXPECT_EQ(s.cpu, 0.0);
    EXPECT_EQ(s.mem, 0.0);
    EXPECT_EQ(s.storage, 0.0);
  }
}

TEST(Profile, NoisyIsSeedDeterministic) {
  auto p = LoadProfile::noisy(LoadProfile::constant(0.5), 0.05);
  auto a = generate_profile(HostId{"h"}, p, 1.0, 100.0, 42);
  auto b = generate_profile(HostId{"h"}, p, 1.0, 100.0, 42);
  auto c = generate_profile(HostId{"h"}, p, 1.0, 100.0, 43);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
}

TEST(Profile, RampInterpolates) {
  auto s = generate_profile(HostId{"h"}, LoadProfile::ramp(0.2, 0.6, 10, 20), 1.0, 30.0, 1);
  EXPECT_DOUBLE_EQ(s[5].cpu, 0.2);
  EXPECT_DOUBLE_EQ(s[15].cpu, 0.4);
  EXPECT_DOUBLE_EQ(s[25].cpu, 0.6);
}

TEST(Profile, ParameterErrors) {
  auto p = LoadProfile::constant(0.5);
  EXPECT_THROW(generate_profile(HostId{"h"}, p, 0.0, 10.0, 1), ParameterError);
  EXPECT_THROW(generate_profile(HostId{"h"}, p, -1.0, 10.0, 1), ParameterError);
  EXPECT_THROW(generate_profile(HostId{"h"}, p, 2.0, 1.0, 1), ParameterError);
  EXPECT_THROW(generate_profile(HostId{"h"}, LoadProfile::ramp(0.1, 0.2, 5, 5), 1.0, 10.0, 1), ParameterError);
}

// Any profile and seed yields samples that satisfy the sample invariants and
// the documented count.
TEST(Profile, RandomProfilesSatisfyInvariants) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> lvl(0.0, 1.0);
  std::uniform_real_distribution<double> time(0.0, 300.0);
  for (int trial = 0; trial < 200; ++trial) {
    LoadProfile base;
    switch (trial % 3) {
      case 0: base = LoadProfile::constant(lvl(rng)); break;
      case 1: base = LoadProfile::step(lvl(rng), lvl(rng), time(rng)); break;
      default: {
        double a = time(rng);
        base = LoadProfile::ramp(lvl(rng), lvl(rng), a, a + 1.0 + time(rng));
      }
    }
    auto p = trial % 2 ? LoadProfile::noisy(base, 0.3 * lvl(rng)) : base;
    const double tick = 0.25 + lvl(rng);
    const double duration = tick + time(rng);
    auto samples = generate_profile(HostId{"h"}, p, tick, duration, rng());
    ASSERT_EQ(samples.size(), static_cast<std::size_t>(std::floor(duration / tick + 1e-9)) + 1);
    for (std::size_t k = 0; k < samples.size(); ++k) {
      ASSERT_TRUE(is_valid(samples[k]));
      if (k > 0) {
        ASSERT_GT(samples[k].timestamp, samples[k - 1].timestamp);
      }
    }
  }
}
