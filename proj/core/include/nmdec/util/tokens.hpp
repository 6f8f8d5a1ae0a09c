#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace nmdec {

using Token = std::string;
using TokenSeq = std::vector<Token>;

// Splits on ASCII whitespace.
TokenSeq split_ws(std::string_view text);
std::string join(const TokenSeq& tokens, std::string_view sep = " ");

// True for canonical decimal integers: optional '-', no leading zeros.
bool is_number(std::string_view token);
std::optional<int32_t> parse_int32(std::string_view token);

bool is_identifier(std::string_view token);

}  // namespace nmdec
