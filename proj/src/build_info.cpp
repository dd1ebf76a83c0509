#include "aoi_edge/errors.hpp"

#ifndef AOI_EDGE_BUILD_ID
#define AOI_EDGE_BUILD_ID "aoi_edge-unknown"
#endif

namespace aoi_edge {

const char* build_id() noexcept { return AOI_EDGE_BUILD_ID; }

}  // namespace aoi_edge
