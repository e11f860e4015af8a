#include "hcjoin/oracle.hpp"

#include <algorithm>

namespace hcj {

namespace {

struct Backtracker {
  const Query& query;
  const Catalog& catalog;
  std::uint64_t step_limit;
  std::uint64_t steps = 0;
  Binding binding;
  std::vector<bool> bound;
  std::vector<Binding> out;

  void visit(std::size_t atom_index) {
    if (atom_index == query.num_atoms()) {
      out.push_back(binding);
      return;
    }
    const auto& atom = query.atoms[atom_index];
    const auto& relation = catalog.relation_for_atom(atom_index);
    for (std::size_t i = 0; i < relation.size(); ++i) {
      if (++steps > step_limit) throw ConfigError("oracle step limit exceeded");
      const auto row = relation.row(i);
      bool consistent = true;
      for (std::size_t c = 0; c < atom.vars.size() && consistent; ++c) {
        const auto v = atom.vars[c];
        if (bound[v] && binding[v] != row[c]) consistent = false;
      }
      if (!consistent) continue;

      std::vector<VarId> newly_bound;
      for (std::size_t c = 0; c < atom.vars.size(); ++c) {
        const auto v = atom.vars[c];
        if (!bound[v]) {
          bound[v] = true;
          binding[v] = row[c];
          newly_bound.push_back(v);
        }
      }
      visit(atom_index + 1);
      for (const auto v : newly_bound) bound[v] = false;
    }
  }
};

}  // namespace

std::vector<Binding> evaluate(const Query& query, const Catalog& catalog, std::uint64_t step_limit) {
  query.validate();
  Backtracker b{query, catalog, step_limit, 0, Binding(query.num_variables(), 0),
                std::vector<bool>(query.num_variables(), false), {}};
  b.visit(0);
  std::sort(b.out.begin(), b.out.end());
  b.out.erase(std::unique(b.out.begin(), b.out.end()), b.out.end());
  return b.out;
}

}  // namespace hcj
