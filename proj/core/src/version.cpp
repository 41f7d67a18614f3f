#include "induction_lens/version.hpp"

namespace ilens {

std::string_view version() { return INDUCTION_LENS_VERSION; }

}  // namespace ilens
