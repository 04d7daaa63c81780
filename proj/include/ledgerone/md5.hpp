#pragma once

#include <string>
#include <string_view>

namespace ledgerone {

/// MD5 digest as a 32-character lowercase hex string.
std::string md5_hex(std::string_view data);

}  // namespace ledgerone
