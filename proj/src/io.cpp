#include "hcjoin/io.hpp"

#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

namespace hcj {

namespace {

template <typename T>
void put_le(std::string& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((value >> (8 * i)) & 0xff));
}

template <typename T>
T get_le(const unsigned char* in) {
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) value |= static_cast<T>(in[i]) << (8 * i);
  return value;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace

Relation parse_csv(const std::string& text, std::size_t arity, bool symmetrize, std::string name) {
  if (arity == 0) throw SchemaError("arity must be at least 1");
  Relation rel;
  rel.name = std::move(name);
  rel.arity = arity;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string_view line(text.data() + pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;

    std::size_t fields = 0;
    const char* cursor = line.data();
    const char* const stop = line.data() + line.size();
    while (true) {
      while (cursor < stop && *cursor == ' ') ++cursor;
      Value v = 0;
      const auto [ptr, ec] = std::from_chars(cursor, stop, v);
      if (ec != std::errc{} || ptr == cursor) throw ParseError("expected an unsigned integer", line_no);
      cursor = ptr;
      while (cursor < stop && *cursor == ' ') ++cursor;
      if (fields == arity) throw SchemaError("line " + std::to_string(line_no) + " has more than " + std::to_string(arity) + " fields");
      rel.data.push_back(v);
      ++fields;
      if (cursor == stop) break;
      if (*cursor != ',') throw ParseError("unexpected character '" + std::string(1, *cursor) + "'", line_no);
      ++cursor;
    }
    if (fields != arity) {
      throw SchemaError("line " + std::to_string(line_no) + " has " + std::to_string(fields) + " fields, expected " +
                        std::to_string(arity));
    }
  }

  if (symmetrize && arity == 2) {
    symmetrize_edges(rel);
  } else {
    rel.sort_and_deduplicate();
  }
  return rel;
}

Relation load_csv(const std::filesystem::path& path, std::size_t arity, bool symmetrize) {
  return parse_csv(read_file(path), arity, symmetrize, path.stem().string());
}

Relation load_binary(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  if (bytes.size() < kBinaryHeaderSize) throw FormatError("'" + path.string() + "' is truncated");
  const auto* raw = reinterpret_cast<const unsigned char*>(bytes.data());
  if (std::memcmp(raw, kBinaryMagic, 4) != 0) throw FormatError("'" + path.string() + "' has a bad magic number");
  const auto version = get_le<std::uint16_t>(raw + 4);
  if (version != kBinaryVersion) throw FormatError("unsupported binary version " + std::to_string(version));
  const auto flags = get_le<std::uint16_t>(raw + 6);
  const auto arity = get_le<std::uint32_t>(raw + 8);
  const auto rows = get_le<std::uint64_t>(raw + 12);
  if (arity == 0) throw FormatError("'" + path.string() + "' declares arity 0");
  const auto values = rows * arity;
  if (values > (bytes.size() - kBinaryHeaderSize) / 8 || bytes.size() != kBinaryHeaderSize + values * 8) {
    throw FormatError("'" + path.string() + "' is truncated or has trailing bytes");
  }

  Relation rel;
  rel.name = path.stem().string();
  rel.arity = arity;
  rel.deduplicated = (flags & kFlagDeduplicated) != 0;
  rel.data.resize(values);
  for (std::uint64_t i = 0; i < values; ++i) rel.data[i] = get_le<std::uint64_t>(raw + kBinaryHeaderSize + 8 * i);
  return rel;
}

void write_binary(const Relation& relation, const std::filesystem::path& path) {
  relation.validate();
  std::string out;
  out.reserve(kBinaryHeaderSize + relation.data.size() * 8);
  out.append(kBinaryMagic, 4);
  put_le<std::uint16_t>(out, kBinaryVersion);
  put_le<std::uint16_t>(out, relation.deduplicated ? kFlagDeduplicated : 0);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(relation.arity));
  put_le<std::uint64_t>(out, relation.size());
  for (const auto v : relation.data) put_le<std::uint64_t>(out, v);

  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw IoError("cannot write '" + path.string() + "'");
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) throw IoError("write to '" + path.string() + "' failed");
}

void write_csv(const Relation& relation, const std::filesystem::path& path) {
  std::ofstream file(path, std::ios::trunc);
  if (!file) throw IoError("cannot write '" + path.string() + "'");
  for (std::size_t i = 0; i < relation.size(); ++i) {
    const auto row = relation.row(i);
    for (std::size_t c = 0; c < row.size(); ++c) file << (c ? "," : "") << row[c];
    file << '\n';
  }
}

void symmetrize_edges(Relation& relation) {
  if (relation.arity != 2) throw SchemaError("only binary relations can be symmetrized");
  const auto n = relation.size();
  relation.data.reserve(relation.data.size() * 2);
  for (std::size_t i = 0; i < n; ++i) {
    const auto a = relation.data[2 * i];
    const auto b = relation.data[2 * i + 1];
    relation.data.push_back(b);
    relation.data.push_back(a);
  }
  relation.sort_and_deduplicate();
}

Relation load_relation(const std::filesystem::path& path, std::size_t arity_hint, bool symmetrize) {
  if (path.extension() == ".csv") return load_csv(path, arity_hint, symmetrize);
  auto rel = load_binary(path);
  if (symmetrize && rel.arity == 2) {
    symmetrize_edges(rel);
  } else if (!rel.deduplicated) {
    rel.sort_and_deduplicate();
  }
  return rel;
}

}  // namespace hcj
