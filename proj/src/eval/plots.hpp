#pragma once

#include <string>

#include "core/schedule.hpp"

namespace schedsyn::eval {

// Aggregate activity participation per 10-minute bin, real above synthetic.
void write_activity_frequency_svg(const core::ScheduleSample& real,
                                  const core::ScheduleSample& synthetic,
                                  const std::string& path);

// Relative frequencies of the most common whole activity-type sequences.
void write_sequence_frequency_svg(const core::ScheduleSample& real,
                                  const core::ScheduleSample& synthetic,
                                  const std::string& path, int top_k = 20);

}  // namespace schedsyn::eval
