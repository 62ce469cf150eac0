#include "oracle/grammar.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "core/error.hpp"
#include "core/ini.hpp"
#include "core/rng.hpp"

namespace schedsyn::oracle {

using core::Activity;
using core::Schedule;
using core::ScheduleSample;

void GrammarSpec::check() const {
  if (templates.empty()) throw DataError("grammar: no templates");
  double total = 0.0;
  for (const auto& t : templates) {
    if (t.weight < 0.0) throw DataError("grammar: negative weight for '" + t.name + "'");
    total += t.weight;
    if (t.slots.empty()) throw DataError("grammar: template '" + t.name + "' has no slots");
    Schedule proto;
    for (const auto& slot : t.slots) {
      if (slot.mean_min <= 0.0 || slot.sd_min < 0.0) {
        throw DataError("grammar: bad slot parameters in '" + t.name + "'");
      }
      proto.entries.push_back({slot.activity, 1});
    }
    if (!core::is_home_based(proto)) {
      throw DataError("grammar: template '" + t.name + "' is not home-based");
    }
    if (core::has_forbidden_consecutive(proto)) {
      throw DataError("grammar: template '" + t.name + "' has consecutive home/work/education");
    }
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw DataError("grammar: template weights sum to " + std::to_string(total));
  }
}

GrammarSpec GrammarSpec::parse(std::istream& in, const std::string& origin) {
  GrammarSpec spec;
  for (const auto& section : core::parse_ini(in, origin)) {
    if (section.name.rfind("template", 0) != 0) continue;
    TemplateSpec tmpl;
    tmpl.name = core::ini_trim(section.name.substr(8));
    tmpl.weight = std::stod(section.get("weight"));
    std::stringstream slots(section.get("slots"));
    std::string token;
    while (std::getline(slots, token, ',')) {
      const std::string t = core::ini_trim(token);
      const size_t c1 = t.find(':');
      const size_t c2 = t.find(':', c1 + 1);
      if (c1 == std::string::npos || c2 == std::string::npos) {
        throw DataError(origin + ": slot must be act:mean:sd, got '" + t + "'");
      }
      const auto act = core::activity_from_label(t.substr(0, c1));
      if (!act) throw DataError(origin + ": unknown activity in slot '" + t + "'");
      tmpl.slots.push_back(
          {*act, std::stod(t.substr(c1 + 1, c2 - c1 - 1)), std::stod(t.substr(c2 + 1))});
    }
    spec.templates.push_back(std::move(tmpl));
  }
  spec.check();
  return spec;
}

GrammarSpec GrammarSpec::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open grammar spec '" + path + "'");
  return parse(in, path);
}

GrammarSpec GrammarSpec::builtin_default() {
  // short escorts, long work, a rare seven-activity day
  const char* text = R"(
[template stay_home]
weight=0.14
slots=home:1440:0

[template work_day]
weight=0.38
slots=home:450:45,work:525:60,home:465:60

[template work_shop_day]
weight=0.07
slots=home:435:40,work:480:50,home:120:30,shop:60:20,home:345:50

[template education_day]
weight=0.10
slots=home:480:40,education:390:45,home:570:55

[template two_errands]
weight=0.16
slots=home:540:60,other:120:40,home:180:45,other:150:45,home:450:60

[template escort_runs]
weight=0.09
slots=home:480:30,escort:30:10,home:390:45,escort:35:10,home:505:50

[template medical_visit]
weight=0.03
slots=home:570:60,medical:75:25,home:795:70

[template busy_day]
weight=0.03
slots=home:510:45,other:90:30,home:150:40,other:105:30,home:135:40,other:120:35,home:330:55
)";
  std::istringstream in(text);
  return parse(in, "<builtin>");
}

namespace {

Schedule realise(const std::vector<SlotSpec>& slots, rng::Sequence& rng, bool uniform_durations) {
  std::vector<std::pair<Activity, double>> fractions;
  fractions.reserve(slots.size());
  double total = 0.0;
  for (const auto& slot : slots) {
    double minutes;
    if (uniform_durations) {
      minutes = 1.0 + rng.uniform01() * 1439.0;
    } else if (slot.sd_min == 0.0) {
      minutes = slot.mean_min;
    } else {
      // truncation keeps every slot at least five minutes before rescaling
      minutes = std::max(5.0, slot.mean_min + slot.sd_min * rng.normal01());
    }
    fractions.push_back({slot.activity, minutes});
    total += minutes;
  }
  for (auto& [act, m] : fractions) m /= total;
  return core::round_to_minutes(fractions);
}

ScheduleSample draw_impl(const GrammarSpec& spec, uint64_t n, uint64_t seed, bool uniform_pick,
                         bool uniform_durations, const char* source) {
  spec.check();
  ScheduleSample sample;
  sample.kind = core::SampleKind::Real;
  sample.seed = seed;
  sample.source = source;
  sample.schedules.reserve(n);
  for (uint64_t i = 0; i < n; ++i) {
    rng::Sequence rng(rng::key(seed, rng::Stream::Oracle, i));
    size_t pick = 0;
    if (uniform_pick) {
      pick = static_cast<size_t>(rng.below(spec.templates.size()));
    } else {
      const double u = rng.uniform01();
      double acc = 0.0;
      for (size_t t = 0; t < spec.templates.size(); ++t) {
        acc += spec.templates[t].weight;
        if (u < acc || t + 1 == spec.templates.size()) {
          pick = t;
          break;
        }
      }
    }
    sample.schedules.push_back(realise(spec.templates[pick].slots, rng, uniform_durations));
  }
  return sample;
}

}  // namespace

ScheduleSample draw_sample(const GrammarSpec& spec, uint64_t n, uint64_t seed) {
  return draw_impl(spec, n, seed, false, false, "oracle");
}

ScheduleSample draw_uniform_null(const GrammarSpec& spec, uint64_t n, uint64_t seed) {
  ScheduleSample sample = draw_impl(spec, n, seed, true, true, "uniform-null");
  sample.kind = core::SampleKind::Synthetic;
  return sample;
}

double brute_force_emd(std::span<const double> p, std::span<const double> q, double spacing) {
  const size_t n = std::max(p.size(), q.size());
  // exact 1-D optimal transport: pair mass greedily from the left
  std::vector<double> supply(n, 0.0), demand(n, 0.0);
  for (size_t i = 0; i < p.size(); ++i) supply[i] = p[i];
  for (size_t i = 0; i < q.size(); ++i) demand[i] = q[i];
  double cost = 0.0;
  size_t i = 0, j = 0;
  while (i < n && j < n) {
    if (supply[i] <= 1e-15) {
      ++i;
      continue;
    }
    if (demand[j] <= 1e-15) {
      ++j;
      continue;
    }
    const double moved = std::min(supply[i], demand[j]);
    cost += moved * std::abs(static_cast<double>(i) - static_cast<double>(j)) * spacing;
    supply[i] -= moved;
    demand[j] -= moved;
  }
  return cost;
}

eval::EvalReport resample_baseline(const ScheduleSample& sample, uint64_t seed) {
  if (sample.schedules.size() < 1000) {
    throw DataError("resample_baseline: need at least 1000 schedules, have " +
                    std::to_string(sample.schedules.size()));
  }
  std::vector<size_t> order(sample.schedules.size());
  std::iota(order.begin(), order.end(), 0);
  rng::Sequence rng(rng::key(seed, rng::Stream::Baseline));
  rng::shuffle(order, rng);

  ScheduleSample half_a, half_b;
  half_a.source = sample.source + "/half-a";
  half_b.source = sample.source + "/half-b";
  half_b.kind = core::SampleKind::Synthetic;
  const size_t mid = order.size() / 2;
  for (size_t i = 0; i < order.size(); ++i) {
    (i < mid ? half_a : half_b).schedules.push_back(sample.schedules[order[i]]);
  }
  return eval::evaluate(half_a, half_b, half_a);
}

}  // namespace schedsyn::oracle
