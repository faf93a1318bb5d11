#pragma once

#ifndef FQHCB_VERSION
#define FQHCB_VERSION "0.1.0"
#endif

namespace fqhcb {
inline constexpr const char* kVersion = FQHCB_VERSION;
}  // namespace fqhcb
