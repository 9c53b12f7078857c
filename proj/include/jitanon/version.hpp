#pragma once

namespace jitanon {

inline constexpr const char* kVersion = "0.1.0";

/// Identifier written into run metadata so downstream consumers can tell
/// which draw procedure produced an anonymized file.
inline constexpr const char* kPrngAlgorithmId =
    "fnv1a64+splitmix64(top53)/box-muller/marsaglia-tsang";

}  // namespace jitanon
