#pragma once

namespace edgelab {

#ifndef EDGELAB_GIT_VERSION
#define EDGELAB_GIT_VERSION "0.1.0"
#endif

inline const char* version_string() { return "edge-lab " EDGELAB_GIT_VERSION; }

}  // namespace edgelab
