#include "eval/report.hpp"

#include <array>
#include <filesystem>
#include <fstream>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "core/error.hpp"
#include "core/sample_io.hpp"
#include "eval/plots.hpp"

namespace schedsyn::eval {

using core::ScheduleSample;

double weighted_summary(std::span<const double> distances, std::span<const double> weights) {
  if (distances.size() != weights.size()) {
    throw DataError("weighted_summary: size mismatch");
  }
  double num = 0.0, den = 0.0;
  for (size_t i = 0; i < distances.size(); ++i) {
    num += distances[i] * weights[i];
    den += weights[i];
  }
  return den > 0.0 ? num / den : 0.0;
}

double domain_mean(std::span<const double> distribution_summaries) {
  if (distribution_summaries.empty()) return 0.0;
  double acc = 0.0;
  for (const double d : distribution_summaries) acc += d;
  return acc / static_cast<double>(distribution_summaries.size());
}

double combine_creativity(double homogeneity, double conservatism) {
  return 0.5 * (homogeneity + conservatism);
}

namespace {

TimeDistribution empty_time_at_zero() {
  TimeDistribution d;
  d.mass.assign(TimeDistribution::kBins, 0.0);
  d.mass[0] = 1.0;
  return d;
}

BivariateTimeDistribution empty_bivariate_at_zero() {
  BivariateTimeDistribution d;
  d.mass.assign(static_cast<size_t>(BivariateTimeDistribution::kBins) *
                    BivariateTimeDistribution::kBins,
                0.0);
  d.mass[0] = 1.0;
  return d;
}

struct SummaryBuilder {
  EvalReport& report;
  std::vector<double> distances;
  std::vector<double> weights;

  void add_row(SegmentRow row) {
    distances.push_back(row.distance);
    weights.push_back(row.weight);
    report.rows.push_back(std::move(row));
  }

  double close(const std::string& domain, const std::string& distribution,
               const std::string& unit) {
    const double summary = weighted_summary(distances, weights);
    report.distributions.push_back({domain, distribution, summary, unit});
    distances.clear();
    weights.clear();
    return summary;
  }
};

std::string schedule_key(const core::Schedule& s) { return core::format_schedule(s); }

}  // namespace

ValidityStats invalidity(const ScheduleSample& synthetic, const ScheduleSample& training) {
  std::unordered_set<std::string> seen;
  seen.reserve(training.schedules.size() * 2);
  for (const auto& s : training.schedules) seen.insert(schedule_key(s));

  ValidityStats stats;
  stats.degenerate = synthetic.degenerate_count;
  uint64_t not_home = 0, forbidden = 0, either = 0, novel = 0;
  for (const auto& s : synthetic.schedules) {
    if (seen.count(schedule_key(s))) continue;  // quality is reported on novel schedules only
    ++novel;
    const bool nh = !core::is_home_based(s);
    const bool fc = core::has_forbidden_consecutive(s);
    not_home += nh;
    forbidden += fc;
    either += nh || fc;
  }
  // degenerate decoder outputs are invalid by definition and have no home
  // anchor; they cannot exhibit forbidden runs
  novel += stats.degenerate;
  not_home += stats.degenerate;
  either += stats.degenerate;

  stats.novel = novel;
  if (novel > 0) {
    stats.not_home_based = static_cast<double>(not_home) / static_cast<double>(novel);
    stats.forbidden_consecutive = static_cast<double>(forbidden) / static_cast<double>(novel);
    stats.invalid = static_cast<double>(either) / static_cast<double>(novel);
  }
  return stats;
}

CreativityStats creativity(const ScheduleSample& synthetic, const ScheduleSample& training) {
  CreativityStats stats;
  if (synthetic.schedules.empty()) return stats;

  std::unordered_map<std::string, uint64_t> multiplicity;
  multiplicity.reserve(synthetic.schedules.size() * 2);
  std::vector<const std::string*> keys;
  keys.reserve(synthetic.schedules.size());
  for (const auto& s : synthetic.schedules) {
    const auto [it, unused] = multiplicity.try_emplace(schedule_key(s), 0);
    ++it->second;
    keys.push_back(&it->first);
  }
  std::unordered_set<std::string> seen;
  seen.reserve(training.schedules.size() * 2);
  for (const auto& s : training.schedules) seen.insert(schedule_key(s));

  uint64_t repeated = 0, conservative = 0;
  for (const auto* key : keys) {
    repeated += multiplicity[*key] > 1;
    conservative += seen.count(*key) > 0;
  }
  const double n = static_cast<double>(synthetic.schedules.size());
  stats.homogeneity = static_cast<double>(repeated) / n;
  stats.conservatism = static_cast<double>(conservative) / n;
  stats.creativity = combine_creativity(stats.homogeneity, stats.conservatism);
  return stats;
}

EvalReport evaluate(const ScheduleSample& real, const ScheduleSample& synthetic,
                    const ScheduleSample& training) {
  const SampleMarginals mr = extract_marginals(real);
  const SampleMarginals ms = extract_marginals(synthetic);

  EvalReport report;
  report.real_count = real.schedules.size();
  report.syn_count = synthetic.schedules.size() + synthetic.degenerate_count;
  SummaryBuilder build{report, {}, {}};

  const auto weight_of = [](double real_freq, double syn_freq) {
    // synthetic inventions of unseen segments are penalised at their own
    // frequency
    return real_freq > 0.0 ? real_freq : syn_freq;
  };

  // participations: lengths, single, pair
  build.add_row({"participations", "lengths", "all", mr.lengths.mean, ms.lengths.mean,
                 emd(mr.lengths, ms.lengths), 1.0, "rate EMD"});
  const double d_lengths = build.close("participations", "lengths", "rate EMD");

  for (int a = 0; a < core::kActivityCount; ++a) {
    const auto& p = mr.participation[static_cast<size_t>(a)];
    const auto& q = ms.participation[static_cast<size_t>(a)];
    build.add_row({"participations", "participation",
                   std::string(core::activity_label(static_cast<core::Activity>(a))), p.mean,
                   q.mean, emd(p, q), weight_of(p.frequency, q.frequency), "rate EMD"});
  }
  const double d_particip = build.close("participations", "participation", "rate EMD");

  for (const auto& [key, p] : mr.pair_participation) {
    const auto& q = ms.pair_participation.at(key);
    build.add_row({"participations", "pair_participation", segment_label(key), p.mean, q.mean,
                   emd(p, q), weight_of(p.frequency, q.frequency), "rate EMD"});
  }
  const double d_pairs = build.close("participations", "pair_participation", "rate EMD");

  // transitions: 2-, 3-, 4-grams over the union of observed grams
  std::array<double, 3> d_grams{};
  for (int n = 2; n <= 4; ++n) {
    const auto& pr = mr.ngrams[n - 2];
    const auto& ps = ms.ngrams[n - 2];
    std::set<Gram> keys;
    for (const auto& [k, v] : pr) keys.insert(k);
    for (const auto& [k, v] : ps) keys.insert(k);
    const std::string name = std::to_string(n) + "gram";
    for (const auto& key : keys) {
      const auto itr = pr.find(key);
      const auto its = ps.find(key);
      const RateDistribution& p =
          itr != pr.end() ? itr->second : RateDistribution::point_at_zero(mr.schedule_count);
      const RateDistribution& q =
          its != ps.end() ? its->second : RateDistribution::point_at_zero(ms.schedule_count);
      build.add_row({"transitions", name, segment_label(key), p.mean, q.mean, emd(p, q),
                     weight_of(p.frequency, q.frequency), "rate EMD"});
    }
    d_grams[static_cast<size_t>(n - 2)] = build.close("transitions", name, "rate EMD");
  }

  // timing: enumerated start times and durations
  const auto timing_family = [&](const std::map<EnumeratedActivity, TimeDistribution>& fr,
                                 const std::map<EnumeratedActivity, TimeDistribution>& fs,
                                 const std::string& name) {
    std::set<EnumeratedActivity> keys;
    for (const auto& [k, v] : fr) keys.insert(k);
    for (const auto& [k, v] : fs) keys.insert(k);
    const TimeDistribution absent = empty_time_at_zero();
    for (const auto& key : keys) {
      const auto itr = fr.find(key);
      const auto its = fs.find(key);
      const TimeDistribution& p = itr != fr.end() ? itr->second : absent;
      const TimeDistribution& q = its != fs.end() ? its->second : absent;
      build.add_row({"timing", name, segment_label(key), p.mean, q.mean, emd(p, q),
                     weight_of(p.frequency, q.frequency), "days EMD"});
    }
    return build.close("timing", name, "days EMD");
  };
  const double d_starts = timing_family(mr.start_times, ms.start_times, "start_times");
  const double d_durs = timing_family(mr.durations, ms.durations, "durations");

  const auto bivariate_family =
      [&](const std::array<BivariateTimeDistribution, core::kActivityCount>& fr,
          const std::array<BivariateTimeDistribution, core::kActivityCount>& fs,
          const std::string& name, bool consecutive) {
        const BivariateTimeDistribution absent = empty_bivariate_at_zero();
        for (int a = 0; a < core::kActivityCount; ++a) {
          const auto& p0 = fr[static_cast<size_t>(a)];
          const auto& q0 = fs[static_cast<size_t>(a)];
          const bool p_empty = p0.frequency == 0.0;
          const bool q_empty = q0.frequency == 0.0;
          if (p_empty && q_empty) continue;
          const auto& p = p_empty ? absent : p0;
          const auto& q = q_empty ? absent : q0;
          std::string segment{core::activity_label(static_cast<core::Activity>(a))};
          if (consecutive) segment += '-';
          build.add_row({"timing", name, segment, p.mean_sum, q.mean_sum, l1_bivariate(p, q),
                         weight_of(p0.frequency, q0.frequency), "days L1"});
        }
        return build.close("timing", name, "days L1");
      };
  const double d_startdur =
      bivariate_family(mr.start_durations, ms.start_durations, "start_durations", false);
  const double d_consec = bivariate_family(mr.consecutive_durations, ms.consecutive_durations,
                                           "consecutive_durations", true);

  const std::array<double, 3> particip_domain{d_lengths, d_particip, d_pairs};
  report.participations = domain_mean(particip_domain);
  report.transitions = domain_mean(d_grams);
  const std::array<double, 4> timing_domain{d_starts, d_durs, d_startdur, d_consec};
  report.timing = domain_mean(timing_domain);

  report.validity = invalidity(synthetic, training);
  report.creativity = creativity(synthetic, training);
  return report;
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

void write_report_csv(const EvalReport& report, std::ostream& out) {
  out << "domain,distribution,segment,description_real,description_syn,distance,unit\n";
  for (const auto& row : report.rows) {
    out << row.domain << ',' << row.distribution << ',' << row.segment << ','
        << fmt(row.description_real) << ',' << fmt(row.description_syn) << ','
        << fmt(row.distance) << ',' << row.unit << '\n';
  }
}

void write_summary_csv(const EvalReport& report, std::ostream& out) {
  out << "section,metric,value,unit\n";
  for (const auto& d : report.distributions) {
    out << d.domain << ',' << d.distribution << ',' << fmt(d.distance) << ',' << d.unit << '\n';
  }
  out << "participations,domain," << fmt(report.participations) << ",rate EMD\n";
  out << "transitions,domain," << fmt(report.transitions) << ",rate EMD\n";
  out << "timing,domain," << fmt(report.timing) << ",days\n";
  out << "validity,not_home_based," << fmt(report.validity.not_home_based) << ",prob\n";
  out << "validity,consecutive," << fmt(report.validity.forbidden_consecutive) << ",prob\n";
  out << "validity,invalid," << fmt(report.validity.invalid) << ",prob\n";
  out << "creativity,homogeneity," << fmt(report.creativity.homogeneity) << ",prob\n";
  out << "creativity,conservatism," << fmt(report.creativity.conservatism) << ",prob\n";
  out << "creativity,creativity," << fmt(report.creativity.creativity) << ",prob\n";
}

void write_eval_outputs(const EvalReport& report, const ScheduleSample& real,
                        const ScheduleSample& synthetic, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  {
    std::ofstream out(out_dir + "/report.csv");
    if (!out) throw DataError("cannot write " + out_dir + "/report.csv");
    write_report_csv(report, out);
  }
  {
    std::ofstream out(out_dir + "/summary.csv");
    if (!out) throw DataError("cannot write " + out_dir + "/summary.csv");
    write_summary_csv(report, out);
  }
  write_activity_frequency_svg(real, synthetic, out_dir + "/activity_frequencies.svg");
  write_sequence_frequency_svg(real, synthetic, out_dir + "/sequence_frequencies.svg");
}

}  // namespace schedsyn::eval
