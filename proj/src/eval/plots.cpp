#include "eval/plots.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <map>
#include <vector>

#include "core/error.hpp"

namespace schedsyn::eval {

using core::Activity;
using core::ScheduleSample;

namespace {

constexpr std::array<const char*, core::kActivityCount> kColors = {
    "#4c78a8", "#f58518", "#54a24b", "#e45756",
    "#72b7b2", "#eeca3b", "#b279a2", "#9d755d"};

constexpr int kTimeBins = 144;  // 10-minute aggregation bins

// share of schedules in each activity per time bin
std::array<std::vector<double>, core::kActivityCount> activity_shares(
    const ScheduleSample& sample) {
  std::array<std::vector<double>, core::kActivityCount> shares;
  for (auto& s : shares) s.assign(kTimeBins, 0.0);
  if (sample.schedules.empty()) return shares;
  for (const auto& sched : sample.schedules) {
    int minute = 0;
    for (const auto& entry : sched.entries) {
      const int from = minute;
      const int to = minute + entry.duration_min;
      // attribute each covered 10-minute bin by majority is overkill here;
      // fractional occupancy keeps the figure smooth
      for (int bin = from / 10; bin <= (to - 1) / 10 && bin < kTimeBins; ++bin) {
        const int bin_start = bin * 10;
        const int overlap = std::min(to, bin_start + 10) - std::max(from, bin_start);
        if (overlap > 0) {
          shares[static_cast<size_t>(entry.activity)][static_cast<size_t>(bin)] +=
              overlap / 10.0;
        }
      }
      minute = to;
    }
  }
  const double n = static_cast<double>(sample.schedules.size());
  for (auto& s : shares) {
    for (auto& v : s) v /= n;
  }
  return shares;
}

std::string poly_points(const std::vector<double>& ys, double x0, double y0, double width,
                        double height) {
  std::string pts;
  for (size_t i = 0; i < ys.size(); ++i) {
    const double x = x0 + width * static_cast<double>(i) / static_cast<double>(ys.size() - 1);
    const double y = y0 + height * (1.0 - std::min(1.0, ys[i]));
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.1f,%.1f ", x, y);
    pts += buf;
  }
  return pts;
}

void panel(std::ofstream& out, const ScheduleSample& sample, const char* title, double x0,
           double y0, double w, double h) {
  const auto shares = activity_shares(sample);
  out << "<text x=\"" << x0 << "\" y=\"" << y0 - 8 << "\" font-size=\"14\">" << title
      << "</text>\n";
  out << "<rect x=\"" << x0 << "\" y=\"" << y0 << "\" width=\"" << w << "\" height=\"" << h
      << "\" fill=\"none\" stroke=\"#999\"/>\n";
  for (int a = 0; a < core::kActivityCount; ++a) {
    out << "<polyline fill=\"none\" stroke=\"" << kColors[static_cast<size_t>(a)]
        << "\" stroke-width=\"1.5\" points=\""
        << poly_points(shares[static_cast<size_t>(a)], x0, y0, w, h) << "\"/>\n";
  }
  for (int hr = 0; hr <= 24; hr += 6) {
    const double x = x0 + w * hr / 24.0;
    out << "<text x=\"" << x << "\" y=\"" << y0 + h + 14 << "\" font-size=\"10\" "
        << "text-anchor=\"middle\">" << hr << ":00</text>\n";
  }
}

std::string sequence_key(const core::Schedule& s) {
  std::string key;
  for (size_t i = 0; i < s.entries.size(); ++i) {
    if (i) key += '-';
    key += core::activity_label(s.entries[i].activity);
  }
  return key;
}

}  // namespace

void write_activity_frequency_svg(const ScheduleSample& real, const ScheduleSample& synthetic,
                                  const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  const double w = 760, panel_h = 180;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"860\" height=\"520\" "
         "font-family=\"sans-serif\">\n";
  panel(out, real, "Real sample: activity participation by 10-minute bin", 40, 30, w, panel_h);
  panel(out, synthetic, "Synthetic sample", 40, 280, w, panel_h);
  for (int a = 0; a < core::kActivityCount; ++a) {
    const double y = 40 + 18 * a;
    out << "<rect x=\"810\" y=\"" << y << "\" width=\"12\" height=\"12\" fill=\""
        << kColors[static_cast<size_t>(a)] << "\"/>\n"
        << "<text x=\"826\" y=\"" << y + 10 << "\" font-size=\"10\">"
        << core::activity_label(static_cast<Activity>(a)) << "</text>\n";
  }
  out << "</svg>\n";
}

void write_sequence_frequency_svg(const ScheduleSample& real, const ScheduleSample& synthetic,
                                  const std::string& path, int top_k) {
  std::map<std::string, std::pair<uint64_t, uint64_t>> counts;
  for (const auto& s : real.schedules) ++counts[sequence_key(s)].first;
  for (const auto& s : synthetic.schedules) ++counts[sequence_key(s)].second;

  std::vector<std::pair<std::string, std::pair<uint64_t, uint64_t>>> rows(counts.begin(),
                                                                          counts.end());
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    return a.second.first + a.second.second > b.second.first + b.second.second;
  });
  if (static_cast<int>(rows.size()) > top_k) rows.resize(static_cast<size_t>(top_k));

  const double nr = std::max<double>(1.0, static_cast<double>(real.schedules.size()));
  const double ns = std::max<double>(1.0, static_cast<double>(synthetic.schedules.size()));
  double max_share = 1e-9;
  for (const auto& [key, c] : rows) {
    max_share = std::max({max_share, c.first / nr, c.second / ns});
  }

  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  const double bar_w = 420, row_h = 22;
  const double height = 80 + row_h * static_cast<double>(rows.size());
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"860\" height=\"" << height
      << "\" font-family=\"sans-serif\">\n"
      << "<text x=\"20\" y=\"24\" font-size=\"14\">Most frequent whole-day sequences "
         "(share of sample)</text>\n"
      << "<rect x=\"20\" y=\"36\" width=\"12\" height=\"12\" fill=\"#4c78a8\"/>"
      << "<text x=\"38\" y=\"46\" font-size=\"11\">real</text>\n"
      << "<rect x=\"80\" y=\"36\" width=\"12\" height=\"12\" fill=\"#f58518\"/>"
      << "<text x=\"98\" y=\"46\" font-size=\"11\">synthetic</text>\n";
  double y = 64;
  for (const auto& [key, c] : rows) {
    const double real_w = bar_w * (c.first / nr) / max_share;
    const double syn_w = bar_w * (c.second / ns) / max_share;
    out << "<text x=\"20\" y=\"" << y + 13 << "\" font-size=\"10\">" << key << "</text>\n"
        << "<rect x=\"420\" y=\"" << y << "\" width=\"" << real_w
        << "\" height=\"8\" fill=\"#4c78a8\"/>\n"
        << "<rect x=\"420\" y=\"" << y + 9 << "\" width=\"" << syn_w
        << "\" height=\"8\" fill=\"#f58518\"/>\n";
    y += row_h;
  }
  out << "</svg>\n";
}

}  // namespace schedsyn::eval
