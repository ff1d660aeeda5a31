#include "hindpaint/hash.hpp"

#include <cstdio>

#include "hindpaint/error.hpp"

namespace hindpaint {

std::string hex_digest(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::uint64_t parse_hex_digest(std::string_view s) {
  if (s.size() != 16) throw IntegrityError("malformed digest: " + std::string(s));
  std::uint64_t v = 0;
  for (char c : s) {
    v <<= 4;
    if (c >= '0' && c <= '9') {
      v |= static_cast<std::uint64_t>(c - '0');
    } else if (c >= 'a' && c <= 'f') {
      v |= static_cast<std::uint64_t>(c - 'a' + 10);
    } else {
      throw IntegrityError("malformed digest: " + std::string(s));
    }
  }
  return v;
}

}  // namespace hindpaint
