#include "core/sample_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "core/error.hpp"

namespace schedsyn::core {

namespace {

int parse_int(std::string_view text, const std::string& context) {
  int value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw DataError(context + ": bad integer '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace

std::string format_schedule(const Schedule& s) {
  std::string out;
  for (size_t i = 0; i < s.entries.size(); ++i) {
    if (i) out += ',';
    out += activity_label(s.entries[i].activity);
    out += ':';
    out += std::to_string(s.entries[i].duration_min);
  }
  return out;
}

Schedule parse_schedule(std::string_view body, const std::string& context) {
  Schedule s;
  size_t pos = 0;
  while (pos < body.size()) {
    size_t comma = body.find(',', pos);
    if (comma == std::string_view::npos) comma = body.size();
    const std::string_view token = body.substr(pos, comma - pos);
    const size_t colon = token.find(':');
    if (colon == std::string_view::npos) {
      throw DataError(context + ": expected act:minutes, got '" + std::string(token) + "'");
    }
    const auto act = activity_from_label(token.substr(0, colon));
    if (!act) {
      throw DataError(context + ": unknown activity '" +
                      std::string(token.substr(0, colon)) + "'");
    }
    s.entries.push_back({*act, parse_int(token.substr(colon + 1), context)});
    pos = comma + 1;
  }
  if (const Verdict v = validate(s); !v.ok) {
    throw DataError(context + ": " + v.violation);
  }
  return s;
}

void save_sample(const ScheduleSample& sample, std::ostream& out) {
  out << "# kind=" << (sample.kind == SampleKind::Real ? "real" : "synthetic") << '\n';
  if (sample.seed) out << "# seed=" << *sample.seed << '\n';
  if (!sample.source.empty()) out << "# source=" << sample.source << '\n';
  if (sample.degenerate_count) out << "# degenerate=" << sample.degenerate_count << '\n';
  for (size_t i = 0; i < sample.schedules.size(); ++i) {
    if (i < sample.ids.size() && !sample.ids[i].empty()) {
      out << sample.ids[i];
    } else {
      out << 's' << i;
    }
    out << ';' << format_schedule(sample.schedules[i]) << '\n';
  }
}

void save_sample(const ScheduleSample& sample, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  save_sample(sample, out);
}

ScheduleSample load_sample(std::istream& in, const std::string& origin) {
  ScheduleSample sample;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string context = origin + ":" + std::to_string(lineno);
    if (line[0] == '#') {
      const std::string_view header = std::string_view(line).substr(1);
      const size_t eq = header.find('=');
      if (eq == std::string_view::npos) continue;
      std::string k(header.substr(0, eq));
      std::erase(k, ' ');
      const std::string v{header.substr(eq + 1)};
      if (k == "kind") {
        sample.kind = (v == "synthetic") ? SampleKind::Synthetic : SampleKind::Real;
      } else if (k == "seed") {
        sample.seed = std::stoull(v);
      } else if (k == "source") {
        sample.source = v;
      } else if (k == "degenerate") {
        sample.degenerate_count = std::stoull(v);
      }
      continue;
    }
    const size_t semi = line.find(';');
    if (semi == std::string::npos) {
      throw DataError(context + ": missing ';' separator");
    }
    sample.ids.push_back(line.substr(0, semi));
    sample.schedules.push_back(
        parse_schedule(std::string_view(line).substr(semi + 1), context));
  }
  return sample;
}

ScheduleSample load_sample(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open sample file '" + path + "'");
  return load_sample(in, path);
}

}  // namespace schedsyn::core
