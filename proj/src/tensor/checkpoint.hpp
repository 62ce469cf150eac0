#pragma once

#include <iosfwd>
#include <string>

#include "tensor/adam.hpp"

namespace schedsyn::tensor {

// Flat binary checkpoint: 8-byte magic, u32 version, u32 tensor count, a name
// table of (name, flags, shape) records, then each tensor's float payload in
// record order. Little-endian throughout.

void save_checkpoint(const ParamStore& params, std::ostream& out);
ParamStore load_checkpoint(std::istream& in, const std::string& origin = "<stream>");

void save_checkpoint(const ParamStore& params, const std::string& path);
ParamStore load_checkpoint_file(const std::string& path);

}  // namespace schedsyn::tensor
