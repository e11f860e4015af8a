#include "hcjoin/types.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "hcjoin/rows.hpp"

namespace hcj {

void Relation::validate() const {
  if (arity == 0) throw SchemaError("relation '" + name + "' has arity 0");
  if (data.size() % arity != 0) {
    throw SchemaError("relation '" + name + "' data length is not a multiple of its arity");
  }
}

void Relation::sort_and_deduplicate() {
  const auto order = identity_order(arity);
  sort_rows(data, arity, order);
  std::size_t out = 0;
  for (std::size_t i = 0; i < size(); ++i) {
    if (out > 0 && row_equal(data.data() + (out - 1) * arity, data.data() + i * arity, arity)) continue;
    if (out != i) std::copy_n(data.data() + i * arity, arity, data.data() + out * arity);
    ++out;
  }
  data.resize(out * arity);
  deduplicated = true;
}

bool Atom::contains(VarId v) const { return std::find(vars.begin(), vars.end(), v) != vars.end(); }

std::size_t Atom::column_of(VarId v) const {
  return static_cast<std::size_t>(std::find(vars.begin(), vars.end(), v) - vars.begin());
}

std::vector<std::size_t> Query::atoms_with(VarId v) const {
  std::vector<std::size_t> result;
  for (std::size_t a = 0; a < atoms.size(); ++a) {
    if (atoms[a].contains(v)) result.push_back(a);
  }
  return result;
}

VarId Query::variable_id(const std::string& name) const {
  const auto it = std::find(variables.begin(), variables.end(), name);
  if (it == variables.end()) throw ConfigError("unknown variable '" + name + "'");
  return static_cast<VarId>(it - variables.begin());
}

void Query::validate() const {
  if (atoms.empty()) throw ConfigError("query has no atoms");
  if (variables.empty()) throw ConfigError("query has no variables");
  std::vector<bool> seen(variables.size(), false);
  for (const auto& atom : atoms) {
    if (atom.vars.empty()) throw ConfigError("atom '" + atom.relation + "' has no variables");
    std::set<VarId> in_atom;
    for (const auto v : atom.vars) {
      if (v >= variables.size()) throw ConfigError("atom '" + atom.relation + "' references an unknown variable");
      if (!in_atom.insert(v).second) {
        throw ConfigError("variable '" + variables[v] + "' repeats within atom '" + atom.relation + "'");
      }
      seen[v] = true;
    }
  }
  for (std::size_t v = 0; v < variables.size(); ++v) {
    if (!seen[v]) throw ConfigError("variable '" + variables[v] + "' occurs in no atom");
  }
}

std::string Query::to_string() const {
  std::ostringstream out;
  out << "Q(";
  for (std::size_t v = 0; v < variables.size(); ++v) out << (v ? "," : "") << variables[v];
  out << ") :- ";
  for (std::size_t a = 0; a < atoms.size(); ++a) {
    out << (a ? ", " : "") << atoms[a].relation << "(";
    for (std::size_t c = 0; c < atoms[a].vars.size(); ++c) out << (c ? "," : "") << variables[atoms[a].vars[c]];
    out << ")";
  }
  out << ".";
  return out.str();
}

const Relation& Catalog::relation_for_atom(std::size_t atom) const { return relation(atom_relations.at(atom)); }

const Relation& Catalog::relation(const std::string& name) const {
  const auto it = relations.find(name);
  if (it == relations.end() || !it->second) throw ConfigError("unknown relation '" + name + "'");
  return *it->second;
}

Catalog Catalog::for_query(const Query& query, std::map<std::string, std::shared_ptr<const Relation>> relations) {
  Catalog catalog;
  catalog.relations = std::move(relations);
  for (const auto& atom : query.atoms) {
    const auto& rel = catalog.relation(atom.relation);
    if (rel.arity != atom.vars.size()) {
      throw SchemaError("atom '" + atom.relation + "' has " + std::to_string(atom.vars.size()) +
                        " variables but the relation has arity " + std::to_string(rel.arity));
    }
    catalog.atom_relations.push_back(atom.relation);
  }
  return catalog;
}

std::vector<std::vector<Value>> rows_of(const Relation& rel) {
  std::vector<std::vector<Value>> rows;
  rows.reserve(rel.size());
  for (std::size_t i = 0; i < rel.size(); ++i) {
    const auto r = rel.row(i);
    rows.emplace_back(r.begin(), r.end());
  }
  return rows;
}

Relation make_relation(std::string name, std::size_t arity, const std::vector<std::vector<Value>>& rows,
                       bool deduplicate) {
  Relation rel;
  rel.name = std::move(name);
  rel.arity = arity;
  rel.data.reserve(rows.size() * arity);
  for (const auto& r : rows) {
    if (r.size() != arity) throw SchemaError("row width does not match arity of '" + rel.name + "'");
    rel.data.insert(rel.data.end(), r.begin(), r.end());
  }
  if (deduplicate) rel.sort_and_deduplicate();
  return rel;
}

bool is_power_of_two(std::uint64_t x) { return x != 0 && (x & (x - 1)) == 0; }

unsigned log2_exact(std::uint64_t power_of_two) {
  unsigned bits = 0;
  while (power_of_two > 1) {
    power_of_two >>= 1;
    ++bits;
  }
  return bits;
}

}  // namespace hcj
