#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "core/error.hpp"
#include "encoding/encoding.hpp"
#include "helpers.hpp"

using namespace schedsyn;
using core::Activity;
using encoding::ContinuousEncoding;
using encoding::ContinuousToken;
using encoding::Vocab;
using schedsyn::testing::make_schedule;

namespace {

int count_tokens(const encoding::DiscreteEncoding& e, Activity a) {
  int n = 0;
  for (const auto t : e.tokens) n += (t == static_cast<uint8_t>(a));
  return n;
}

}  // namespace

TEST_CASE("encode_discrete on bin-aligned boundaries") {
  const auto s =
      make_schedule({{Activity::Home, 480}, {Activity::Work, 540}, {Activity::Home, 420}});
  const auto e = encoding::encode_discrete(s, 10);
  REQUIRE(e.length() == 144);
  CHECK(count_tokens(e, Activity::Home) == 48 + 42);
  CHECK(count_tokens(e, Activity::Work) == 54);
  for (int b = 0; b < 48; ++b) CHECK(e.tokens[b] == static_cast<uint8_t>(Activity::Home));
  for (int b = 48; b < 102; ++b) CHECK(e.tokens[b] == static_cast<uint8_t>(Activity::Work));
}

TEST_CASE("encode_discrete majority rule within a bin") {
  // Bin 48 covers minutes 480-490: home holds 4 of them, work 6.
  const auto s = make_schedule({{Activity::Home, 484}, {Activity::Work, 956}});
  const auto e = encoding::encode_discrete(s, 10);
  CHECK(e.tokens[48] == static_cast<uint8_t>(Activity::Work));
}

TEST_CASE("encode_discrete breaks ties towards the earliest activity") {
  const auto s = make_schedule({{Activity::Home, 485}, {Activity::Work, 955}});
  const auto e = encoding::encode_discrete(s, 10);
  CHECK(e.tokens[48] == static_cast<uint8_t>(Activity::Home));
}

TEST_CASE("decode_discrete merges runs") {
  encoding::DiscreteEncoding all_home;
  all_home.step_min = 10;
  all_home.tokens.assign(144, static_cast<uint8_t>(Activity::Home));
  CHECK(encoding::decode_discrete(all_home) == make_schedule({{Activity::Home, 1440}}));

  encoding::DiscreteEncoding mixed;
  mixed.step_min = 10;
  for (int i = 0; i < 48; ++i) mixed.tokens.push_back(static_cast<uint8_t>(Activity::Home));
  for (int i = 0; i < 54; ++i) mixed.tokens.push_back(static_cast<uint8_t>(Activity::Work));
  for (int i = 0; i < 42; ++i) mixed.tokens.push_back(static_cast<uint8_t>(Activity::Home));
  CHECK(encoding::decode_discrete(mixed) ==
        make_schedule({{Activity::Home, 480}, {Activity::Work, 540}, {Activity::Home, 420}}));

  encoding::DiscreteEncoding alternating;
  alternating.step_min = 10;
  for (int i = 0; i < 72; ++i) {
    alternating.tokens.push_back(static_cast<uint8_t>(Activity::Home));
    alternating.tokens.push_back(static_cast<uint8_t>(Activity::Work));
  }
  const auto s = encoding::decode_discrete(alternating);
  CHECK(s.entries.size() == 144);
  for (const auto& e : s.entries) CHECK(e.duration_min == 10);
}

TEST_CASE("discrete round-trip on aligned schedules without equal neighbours") {
  rng::Sequence rng(23);
  for (int trial = 0; trial < 500; ++trial) {
    const auto s = schedsyn::testing::random_schedule(rng, 15, true, 10, true);
    const auto back = encoding::decode_discrete(encoding::encode_discrete(s, 10));
    CHECK(back == s);
  }
}

TEST_CASE("decode_discrete never emits consecutive equal types") {
  rng::Sequence rng(29);
  for (int trial = 0; trial < 500; ++trial) {
    encoding::DiscreteEncoding e;
    e.step_min = 10;
    for (int i = 0; i < 144; ++i) {
      e.tokens.push_back(static_cast<uint8_t>(rng.below(core::kActivityCount)));
    }
    const auto s = encoding::decode_discrete(e);
    for (size_t i = 1; i < s.entries.size(); ++i) {
      CHECK(s.entries[i].activity != s.entries[i - 1].activity);
    }
    CHECK(core::validate(s).ok);
  }
}

TEST_CASE("encode_continuous frames the sequence") {
  const auto s =
      make_schedule({{Activity::Home, 480}, {Activity::Work, 540}, {Activity::Home, 420}});
  const auto e = encoding::encode_continuous(s);
  REQUIRE(e.tokens.size() == ContinuousEncoding::kMaxLen);
  CHECK(e.tokens[0].symbol == Vocab::kSos);
  CHECK(e.tokens[0].duration == 0.0);
  CHECK(e.tokens[1].symbol == static_cast<int>(Activity::Home));
  CHECK(e.tokens[1].duration == doctest::Approx(480.0 / 1440).epsilon(1e-12));
  CHECK(e.tokens[2].duration == doctest::Approx(0.375).epsilon(1e-12));
  CHECK(e.tokens[3].duration == doctest::Approx(420.0 / 1440).epsilon(1e-12));
  for (size_t i = 4; i < e.tokens.size(); ++i) {
    CHECK(e.tokens[i].symbol == Vocab::kEos);
    CHECK(e.tokens[i].duration == 0.0);
  }
}

TEST_CASE("encode_continuous of a single full-day activity") {
  const auto e = encoding::encode_continuous(make_schedule({{Activity::Home, 1440}}));
  CHECK(e.tokens[1].symbol == static_cast<int>(Activity::Home));
  CHECK(e.tokens[1].duration == 1.0);
  CHECK(e.tokens[2].symbol == Vocab::kEos);
}

TEST_CASE("encode_continuous rejects 16-activity schedules") {
  core::Schedule s;
  for (int i = 0; i < 16; ++i) s.entries.push_back({static_cast<Activity>(i % 8), 90});
  CHECK_THROWS_AS(encoding::encode_continuous(s), DataError);
}

TEST_CASE("decode_continuous renormalises durations") {
  std::vector<ContinuousToken> raw{{Vocab::kSos, 0.0},
                                   {static_cast<int>(Activity::Home), 0.4},
                                   {static_cast<int>(Activity::Work), 0.4},
                                   {Vocab::kEos, 0.0},
                                   {static_cast<int>(Activity::Shop), 0.9}};
  CHECK(encoding::decode_continuous(raw) ==
        make_schedule({{Activity::Home, 720}, {Activity::Work, 720}}));

  std::vector<ContinuousToken> uneven{{Vocab::kSos, 0.0},
                                      {static_cast<int>(Activity::Home), 0.2},
                                      {static_cast<int>(Activity::Shop), 0.1},
                                      {static_cast<int>(Activity::Home), 0.1},
                                      {Vocab::kEos, 0.0}};
  CHECK(encoding::decode_continuous(uneven) == make_schedule({{Activity::Home, 720},
                                                              {Activity::Shop, 360},
                                                              {Activity::Home, 360}}));
}

TEST_CASE("decode_continuous flags degenerate output") {
  std::vector<ContinuousToken> empty{{Vocab::kSos, 0.0}, {Vocab::kEos, 0.0}};
  CHECK_THROWS_AS(encoding::decode_continuous(empty), DataError);
}

TEST_CASE("continuous round-trip is exact for schedules up to 15 activities") {
  rng::Sequence rng(31);
  for (int trial = 0; trial < 10000; ++trial) {
    const auto s = schedsyn::testing::random_schedule(rng, 15);
    const auto back = encoding::decode_continuous(encoding::encode_continuous(s).tokens);
    CHECK(back == s);
  }
}
