#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "fsh/enh.hpp"

namespace fsh {

// Parse/typecheck errors carry the 1-based position of the offending token.
struct FmlError : std::runtime_error {
  int line = 0, col = 0;
  FmlError(const std::string& msg, int l, int c)
      : std::runtime_error(msg + " at " + std::to_string(l) + ":" +
                           std::to_string(c)),
        line(l),
        col(c) {}
};

// Registry the formulas refer to by identifier.  Identifiers are alphanumeric;
// maps and immersions share one namespace with the other kinds.
struct FmlContext {
  std::uint32_t p = kDefaultPrime;
  std::map<std::string, std::shared_ptr<const FinSpace>> sites;
  std::map<std::string, ContinuousMap> maps;
  std::map<std::string, LocallyClosedImmersion> immersions;
  std::map<std::string, SheafComplex> objects;
  std::map<std::string, SheafChainMap> two_cells;  // named g for ud:g

  // Name of a registered site equal to the given space, "pt" for the
  // one-point space, "?" otherwise.
  std::string site_name(const FinSpace& x) const;
};

// Object of the formula multicategory: a site with an optional opposite mark.
struct ObjectTerm {
  std::string site;
  bool op = false;
  bool operator==(const ObjectTerm& o) const = default;
};

// One-morphism syntax tree.  The node kinds mirror FunctorExpr; `name` holds
// the identifier of the bound map/immersion/object.
struct OneNode {
  FunctorExpr::Kind kind = FunctorExpr::Kind::Slot;
  std::size_t slot = 0;
  std::string name;
  std::vector<OneNode> args;
  int line = 0, col = 0;
  bool operator==(const OneNode& o) const;
};
struct OneMorphTerm {
  OneNode root;
  bool operator==(const OneMorphTerm& o) const { return root == o.root; }
};

// Two-morphism syntax tree over row tokens, ud cells, object comparisons,
// inverses, vertical composites, scalars and whiskering contexts.
struct TwoNode {
  enum class Kind { Row, Ud, Cmp, Inv, VComp, Scale, Sum, Whisker };
  Kind kind = Kind::Row;
  std::string name;                // row label or ud cell name
  std::vector<std::string> binds;  // names after "@"
  std::uint32_t scalar = 1;
  std::vector<TwoNode> args;
  std::vector<OneNode> context;    // whisker functor / cmp generator
  int line = 0, col = 0;
  bool operator==(const TwoNode& o) const;
};
struct TwoMorphTerm {
  TwoNode root;
  bool operator==(const TwoMorphTerm& o) const { return root == o.root; }
};

using Formula = std::variant<OneMorphTerm, TwoMorphTerm>;

// Concrete syntax lives in docs/grammar.ebnf (normative).
Formula parse_formula(const std::string& text, const FmlContext& ctx);
std::string print_formula(const OneMorphTerm& t);
std::string print_formula(const TwoMorphTerm& t);

struct OneTyping {
  std::vector<ObjectTerm> sources;  // per slot; site "?" when unconstrained
  ObjectTerm target;
};
OneTyping typecheck(const OneMorphTerm& t, const FmlContext& ctx);
// Validates bindings, arities, variance and formal inverses; throws FmlError.
void typecheck(const TwoMorphTerm& t, const FmlContext& ctx);

// Resolve identifiers and lower to a functor expression.
FunctorExpr to_functor_expr(const OneMorphTerm& t, const FmlContext& ctx);

// Every token either marked ~ unconditionally or with its side condition
// certified on the bound objects (h-flat: automatic over a field;
// h-injective: is_fibrant; ud g: quasi-isomorphism; proper: closed subset).
// `inputs` supply the slot objects needed by the conditional comparisons.
bool is_formally_invertible(const TwoMorphTerm& t, const FmlContext& ctx,
                            const std::vector<SheafComplex>& inputs = {});

// Interpretation of 1-morphisms.
Fib interpret_one(const OneMorphTerm& t, const FmlContext& ctx,
                  const std::vector<Fib>& inputs);
SheafComplex interpret_one_derived(const OneMorphTerm& t, const FmlContext& ctx,
                                   const std::vector<SheafComplex>& inputs);

// Interpretation of 2-morphisms: a k-linear combination of zig-zags.  Row and
// comparison tokens consume the given raw inputs (rows through i).
struct LinearZigZag {
  std::vector<std::pair<std::uint32_t, ZigZag>> terms;
};
LinearZigZag interpret_two(const TwoMorphTerm& t, const FmlContext& ctx,
                           const std::vector<SheafComplex>& inputs);
// Derived-level representative: the scalar combination of the roof
// reductions.  All summands must be parallel.
SheafChainMap reduce_two(const LinearZigZag& z);

}  // namespace fsh
