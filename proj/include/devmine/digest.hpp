#pragma once

#include <string>
#include <string_view>

namespace devmine {

// Lowercase 32-char hex MD5 of the input bytes.
std::string md5_hex(std::string_view data);

}  // namespace devmine
