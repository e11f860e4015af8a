#pragma once

#include <filesystem>
#include <string>

#include "hcjoin/types.hpp"

namespace hcj {

// Binary relation layout: "HCRL" | u16 version | u16 flags | u32 arity | u64 rows | rows * arity u64 values.
// All integers little-endian.
inline constexpr char kBinaryMagic[4] = {'H', 'C', 'R', 'L'};
inline constexpr std::uint16_t kBinaryVersion = 1;
inline constexpr std::uint16_t kFlagDeduplicated = 0x1;
inline constexpr std::size_t kBinaryHeaderSize = 20;

/**
 * Reads comma-separated unsigned integers, one row per line (LF or CRLF, no header).
 * The result is sorted and deduplicated. With `symmetrize` and arity 2, the mirrored
 * row (b,a) is added for every (a,b).
 */
Relation load_csv(const std::filesystem::path& path, std::size_t arity, bool symmetrize = false);

Relation parse_csv(const std::string& text, std::size_t arity, bool symmetrize = false, std::string name = "csv");

Relation load_binary(const std::filesystem::path& path);

void write_binary(const Relation& relation, const std::filesystem::path& path);

// Writes rows as comma-separated lines.
void write_csv(const Relation& relation, const std::filesystem::path& path);

// Adds (b,a) for every binary row (a,b); the result is sorted and deduplicated.
void symmetrize_edges(Relation& relation);

// Loads by extension: ".csv" (needs arity), anything else is parsed as the binary format.
Relation load_relation(const std::filesystem::path& path, std::size_t arity_hint, bool symmetrize);

}  // namespace hcj
