#pragma once

#include <cstdint>
#include <string>

namespace advkit {

// FNV-1a over bytes. Fingerprints pin configs to checkpoints and run
// manifests; they are identity checks, not cryptographic hashes.
inline uint64_t fnv1a(const std::string& bytes, uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string fingerprint_hex(const std::string& bytes) {
  static const char* digits = "0123456789abcdef";
  uint64_t h = fnv1a(bytes);
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = digits[h & 0xf];
    h >>= 4;
  }
  return out;
}

}  // namespace advkit
