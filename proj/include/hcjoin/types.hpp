#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hcj {

// Dictionary-encoded domain element.
using Value = std::uint64_t;

// Index into Query::variables.
using VarId = std::uint32_t;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/**
 * A row-major relation of fixed arity. Rows are stored contiguously; row i occupies
 * data[i * arity, (i + 1) * arity).
 */
struct Relation {
  std::string name;
  std::size_t arity = 0;
  std::vector<Value> data;
  bool deduplicated = false;

  std::size_t size() const { return arity == 0 ? 0 : data.size() / arity; }
  bool empty() const { return data.empty(); }

  std::span<const Value> row(std::size_t i) const { return {data.data() + i * arity, arity}; }

  // Throws SchemaError if data is not a whole number of rows.
  void validate() const;

  // Sorts rows lexicographically and removes duplicates.
  void sort_and_deduplicate();
};

struct Atom {
  std::string relation;
  std::vector<VarId> vars;

  bool contains(VarId v) const;
  // Column position of v, or arity if absent.
  std::size_t column_of(VarId v) const;

  bool operator==(const Atom&) const = default;
};

struct Query {
  // Head variables in declaration order; VarId indexes into this list.
  std::vector<std::string> variables;
  std::vector<Atom> atoms;

  std::size_t num_variables() const { return variables.size(); }
  std::size_t num_atoms() const { return atoms.size(); }

  // Atom indices containing v.
  std::vector<std::size_t> atoms_with(VarId v) const;
  VarId variable_id(const std::string& name) const;

  // Throws ConfigError if a variable occurs in no atom, an atom repeats a variable,
  // or the query is empty.
  void validate() const;

  std::string to_string() const;

  bool operator==(const Query&) const = default;
};

/**
 * Physical relations by name plus the atom-to-relation mapping. Several atoms may share
 * one physical relation.
 */
struct Catalog {
  std::map<std::string, std::shared_ptr<const Relation>> relations;
  std::vector<std::string> atom_relations;

  const Relation& relation_for_atom(std::size_t atom) const;
  const Relation& relation(const std::string& name) const;

  static Catalog for_query(const Query& query, std::map<std::string, std::shared_ptr<const Relation>> relations);
};

// Returns the rows of `rel` as vectors, for tests and small outputs.
std::vector<std::vector<Value>> rows_of(const Relation& rel);

Relation make_relation(std::string name, std::size_t arity, const std::vector<std::vector<Value>>& rows,
                       bool deduplicate = true);

bool is_power_of_two(std::uint64_t x);
unsigned log2_exact(std::uint64_t power_of_two);

}  // namespace hcj
