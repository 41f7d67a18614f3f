#pragma once

#include <string_view>

namespace ilens {

std::string_view version();

}  // namespace ilens
