#pragma once

#include <iosfwd>
#include <string>

#include "core/schedule.hpp"

namespace schedsyn::core {

// Line-oriented sample format, one schedule per line:
//   id;act0:dur0,act1:dur1,...
// with durations in integer minutes. Optional leading comment headers carry
// provenance: `# kind=`, `# seed=`, `# source=`, `# degenerate=`.

void save_sample(const ScheduleSample& sample, std::ostream& out);
void save_sample(const ScheduleSample& sample, const std::string& path);

ScheduleSample load_sample(std::istream& in, const std::string& origin = "<stream>");
ScheduleSample load_sample(const std::string& path);

std::string format_schedule(const Schedule& s);
Schedule parse_schedule(std::string_view body, const std::string& context);

}  // namespace schedsyn::core
