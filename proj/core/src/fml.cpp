#include "fsh/fml.hpp"

#include <algorithm>
#include <cstdint>
#include <limits>

namespace fsh {

namespace {

constexpr std::size_t kAutoSlot = std::numeric_limits<std::size_t>::max();

std::uint32_t mulmod(std::uint32_t a, std::uint32_t b, std::uint32_t p) {
  return static_cast<std::uint32_t>(
      (static_cast<std::uint64_t>(a) * b) % p);
}

std::uint32_t invmod(std::uint32_t a, std::uint32_t p) {
  // p prime; a^{p-2}
  std::uint32_t r = 1, base = a % p, e = p - 2;
  while (e) {
    if (e & 1) r = mulmod(r, base, p);
    base = mulmod(base, base, p);
    e >>= 1;
  }
  return r;
}

// --- lexer ---------------------------------------------------------------------

struct Tok {
  enum class K {
    End, LPar, RPar, Comma, At, Plus, Star, Dot, VDot, Compose,
    TensorSym, GammaSym, Slot, Number, Ident, MapGen, RowTok, ObjTok, UdTok,
  };
  K kind = K::End;
  std::string text;    // ident / label / name
  std::string suffix;  // for MapGen: ^* _* _! ^! ^-1
  long num = -1;       // Number value or explicit slot index
  int line = 1, col = 1;
};

struct Lexer {
  const std::string& s;
  std::size_t pos = 0;
  int line = 1, col = 1;

  explicit Lexer(const std::string& text) : s(text) {}

  bool starts(const char* u) const {
    return s.compare(pos, std::string::traits_type::length(u), u) == 0;
  }
  void advance(std::size_t k) {
    for (std::size_t i = 0; i < k; ++i) {
      char c = s[pos++];
      if (c == '\n') {
        ++line;
        col = 1;
      } else if ((c & 0xC0) != 0x80) {  // skip UTF-8 continuation bytes
        ++col;
      }
    }
  }
  [[noreturn]] void fail(const std::string& msg) const {
    throw FmlError(msg, line, col);
  }

  std::string lex_ident() {
    std::size_t b = pos;
    while (pos < s.size() && (std::isalnum(static_cast<unsigned char>(s[pos]))))
      ++pos;
    std::string r = s.substr(b, pos - b);
    col += static_cast<int>(pos - b);
    return r;
  }

  std::vector<Tok> run() {
    std::vector<Tok> out;
    while (true) {
      while (pos < s.size() &&
             std::isspace(static_cast<unsigned char>(s[pos])))
        advance(1);
      Tok t;
      t.line = line;
      t.col = col;
      if (pos >= s.size()) {
        t.kind = Tok::K::End;
        out.push_back(t);
        return out;
      }
      char c = s[pos];
      if (starts("\xE2\x88\x98")) {  // compose ring
        t.kind = Tok::K::Compose;
        advance(3);
      } else if (starts("\xC2\xB7")) {  // middle dot
        t.kind = Tok::K::VDot;
        advance(2);
      } else if (starts("\xE2\x8A\x97")) {  // circled times
        t.kind = Tok::K::TensorSym;
        advance(3);
      } else if (starts("\xCE\x93")) {  // capital Gamma
        t.kind = Tok::K::GammaSym;
        advance(2);
      } else if (c == '(') {
        t.kind = Tok::K::LPar;
        advance(1);
      } else if (c == ')') {
        t.kind = Tok::K::RPar;
        advance(1);
      } else if (c == ',') {
        t.kind = Tok::K::Comma;
        advance(1);
      } else if (c == '@') {
        t.kind = Tok::K::At;
        advance(1);
      } else if (c == '+') {
        t.kind = Tok::K::Plus;
        advance(1);
      } else if (c == '*') {
        t.kind = Tok::K::Star;
        advance(1);
      } else if (c == '.') {
        t.kind = Tok::K::Dot;
        advance(1);
      } else if (c == '-') {
        advance(1);
        t.kind = Tok::K::Slot;
        if (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
          long v = 0;
          while (pos < s.size() &&
                 std::isdigit(static_cast<unsigned char>(s[pos]))) {
            v = v * 10 + (s[pos] - '0');
            advance(1);
          }
          t.num = v;
        }
      } else if (std::isdigit(static_cast<unsigned char>(c))) {
        long v = 0;
        while (pos < s.size() &&
               std::isdigit(static_cast<unsigned char>(s[pos]))) {
          v = v * 10 + (s[pos] - '0');
          advance(1);
        }
        t.kind = Tok::K::Number;
        t.num = v;
      } else if (std::isalpha(static_cast<unsigned char>(c))) {
        std::string id = lex_ident();
        if ((id == "row" || id == "obj" || id == "ud") && pos < s.size() &&
            s[pos] == ':') {
          advance(1);
          if (id == "row") {
            std::size_t b = pos;
            while (pos < s.size() &&
                   !std::isspace(static_cast<unsigned char>(s[pos])) &&
                   s[pos] != '@' && s[pos] != ')' && s[pos] != ',' &&
                   s[pos] != '(')
              advance(1);
            if (pos == b) fail("expected a row label after 'row:'");
            t.kind = Tok::K::RowTok;
            t.text = s.substr(b, pos - b);
          } else {
            if (pos >= s.size() ||
                !std::isalpha(static_cast<unsigned char>(s[pos])))
              fail("expected an identifier after '" + id + ":'");
            t.kind = id == "obj" ? Tok::K::ObjTok : Tok::K::UdTok;
            t.text = lex_ident();
          }
        } else if (starts("^-1")) {
          t.kind = Tok::K::MapGen;
          t.text = id;
          t.suffix = "^-1";
          advance(3);
        } else if (starts("^*") || starts("^!") || starts("_*") ||
                   starts("_!")) {
          t.kind = Tok::K::MapGen;
          t.text = id;
          t.suffix = s.substr(pos, 2);
          advance(2);
        } else {
          t.kind = Tok::K::Ident;
          t.text = id;
        }
      } else {
        fail(std::string("unexpected character '") + c + "'");
      }
      out.push_back(t);
    }
  }
};

// --- parser --------------------------------------------------------------------

struct Parser {
  std::vector<Tok> ts;
  std::size_t i = 0;
  const FmlContext& ctx;

  const Tok& cur() const { return ts[i]; }
  const Tok& peek(std::size_t k = 1) const {
    return ts[std::min(i + k, ts.size() - 1)];
  }
  Tok eat() { return ts[i++]; }
  [[noreturn]] void fail(const std::string& msg, const Tok& t) const {
    throw FmlError(msg, t.line, t.col);
  }
  void expect(Tok::K k, const char* what) {
    if (cur().kind != k) fail(std::string("expected ") + what, cur());
    ++i;
  }

  bool map_known(const std::string& name) const {
    return ctx.maps.count(name) || ctx.immersions.count(name);
  }

  OneNode one_leaf(FunctorExpr::Kind kind, const Tok& t) const {
    OneNode n;
    n.kind = kind;
    n.line = t.line;
    n.col = t.col;
    return n;
  }

  OneNode parse_slot(const Tok& t) const {
    OneNode n = one_leaf(FunctorExpr::Kind::Slot, t);
    n.slot = t.num >= 0 ? static_cast<std::size_t>(t.num) : kAutoSlot;
    return n;
  }

  OneNode parse_one_primary() {
    using K = FunctorExpr::Kind;
    Tok t = eat();
    switch (t.kind) {
      case Tok::K::LPar: {
        if (cur().kind == Tok::K::Slot && peek().kind == Tok::K::RPar) {
          Tok st = eat();
          ++i;  // RPar
          return parse_slot(st);
        }
        OneNode n = parse_one();
        expect(Tok::K::RPar, "')'");
        return n;
      }
      case Tok::K::Slot:
        return parse_slot(t);
      case Tok::K::ObjTok: {
        if (!ctx.objects.count(t.text))
          fail("unknown identifier '" + t.text + "'", t);
        OneNode n = one_leaf(K::Object, t);
        n.name = t.text;
        return n;
      }
      case Tok::K::TensorSym:
        return parse_binary(K::Tensor, t);
      case Tok::K::GammaSym:
        return parse_unary(K::Gamma, t);
      case Tok::K::Ident: {
        if (t.text == "tensor") return parse_binary(K::Tensor, t);
        if (t.text == "Hom") return parse_binary(K::SHom, t);
        if (t.text == "HomG") return parse_binary(K::HomGlob, t);
        if (t.text == "Gamma") return parse_unary(K::Gamma, t);
        fail("unknown identifier '" + t.text + "'", t);
      }
      case Tok::K::MapGen: {
        K kind;
        if (t.suffix == "^*")
          kind = K::Pull;
        else if (t.suffix == "_*")
          kind = K::Push;
        else if (t.suffix == "_!")
          kind = K::Shriek;
        else if (t.suffix == "^!")
          kind = K::UShriek;
        else
          kind = K::PullInv;
        if (kind == K::Shriek || kind == K::UShriek) {
          if (!ctx.immersions.count(t.text)) {
            if (ctx.maps.count(t.text))
              fail("unsupported: '" + t.text + t.suffix +
                       "' requires a locally closed immersion",
                   t);
            fail("unknown identifier '" + t.text + "'", t);
          }
        } else if (!map_known(t.text)) {
          fail("unknown identifier '" + t.text + "'", t);
        }
        OneNode n = one_leaf(kind, t);
        n.name = t.text;
        if (cur().kind == Tok::K::LPar) {
          ++i;
          n.args.push_back(parse_one());
          expect(Tok::K::RPar, "')'");
        } else {
          n.args.push_back(parse_slot(Tok{Tok::K::Slot, "", "", -1, t.line,
                                          t.col}));
        }
        return n;
      }
      default:
        fail("expected a 1-morphism term", t);
    }
  }

  OneNode parse_binary(FunctorExpr::Kind kind, const Tok& t) {
    OneNode n = one_leaf(kind, t);
    expect(Tok::K::LPar, "'('");
    n.args.push_back(parse_one());
    expect(Tok::K::Comma, "','");
    n.args.push_back(parse_one());
    expect(Tok::K::RPar, "')'");
    return n;
  }

  OneNode parse_unary(FunctorExpr::Kind kind, const Tok& t) {
    OneNode n = one_leaf(kind, t);
    expect(Tok::K::LPar, "'('");
    n.args.push_back(parse_one());
    expect(Tok::K::RPar, "')'");
    return n;
  }

  static void slot_leaves(OneNode& n, std::vector<OneNode*>& out) {
    if (n.kind == FunctorExpr::Kind::Slot) {
      out.push_back(&n);
      return;
    }
    for (auto& a : n.args) slot_leaves(a, out);
  }

  OneNode parse_one() {
    OneNode n = parse_one_primary();
    while (cur().kind == Tok::K::Compose || cur().kind == Tok::K::Dot) {
      Tok op = eat();
      OneNode rhs = parse_one_primary();
      std::vector<OneNode*> slots;
      slot_leaves(n, slots);
      if (slots.size() != 1)
        fail("composition needs exactly one slot on the left", op);
      *slots[0] = std::move(rhs);
    }
    return n;
  }

  // Assign positions to slots: either all explicit or all positional.
  static void number_slots(OneNode& root) {
    std::vector<OneNode*> slots;
    slot_leaves(root, slots);
    bool any_auto = false, any_explicit = false;
    for (auto* s : slots) (s->slot == kAutoSlot ? any_auto : any_explicit) = true;
    if (any_auto && any_explicit)
      throw FmlError("mixed numbered and positional slots", root.line,
                     root.col);
    if (any_auto)
      for (std::size_t k = 0; k < slots.size(); ++k) slots[k]->slot = k;
  }

  // --- two-morphisms ---

  TwoNode two_leaf(TwoNode::Kind kind, const Tok& t) const {
    TwoNode n;
    n.kind = kind;
    n.line = t.line;
    n.col = t.col;
    return n;
  }

  TwoNode parse_two_atom() {
    Tok t = eat();
    switch (t.kind) {
      case Tok::K::LPar: {
        TwoNode n = parse_two();
        expect(Tok::K::RPar, "')'");
        return n;
      }
      case Tok::K::RowTok: {
        TwoNode n = two_leaf(TwoNode::Kind::Row, t);
        n.name = t.text == "proj-fml" ? "projection-fml" : t.text;
        const auto& ids = row_ids();
        if (std::find(ids.begin(), ids.end(), n.name) == ids.end())
          fail("unknown row '" + t.text + "'", t);
        if (cur().kind == Tok::K::At) {
          ++i;
          while (true) {
            if (cur().kind != Tok::K::Ident)
              fail("expected a binding identifier", cur());
            Tok b = eat();
            if (!map_known(b.text))
              fail("unknown identifier '" + b.text + "'", b);
            n.binds.push_back(b.text);
            if (cur().kind != Tok::K::Comma) break;
            ++i;
          }
        }
        return n;
      }
      case Tok::K::UdTok: {
        if (!ctx.two_cells.count(t.text))
          fail("unknown identifier '" + t.text + "'", t);
        TwoNode n = two_leaf(TwoNode::Kind::Ud, t);
        n.name = t.text;
        return n;
      }
      case Tok::K::Ident: {
        if (t.text == "inv") {
          TwoNode n = two_leaf(TwoNode::Kind::Inv, t);
          expect(Tok::K::LPar, "'('");
          n.args.push_back(parse_two());
          expect(Tok::K::RPar, "')'");
          return n;
        }
        if (t.text == "cmp") {
          TwoNode n = two_leaf(TwoNode::Kind::Cmp, t);
          expect(Tok::K::LPar, "'('");
          OneNode g = parse_one();
          number_slots(g);
          n.context.push_back(std::move(g));
          expect(Tok::K::RPar, "')'");
          return n;
        }
        if (t.text == "whisker") {
          TwoNode n = two_leaf(TwoNode::Kind::Whisker, t);
          expect(Tok::K::LPar, "'('");
          OneNode c = parse_one();
          number_slots(c);
          n.context.push_back(std::move(c));
          expect(Tok::K::Comma, "','");
          n.args.push_back(parse_two());
          expect(Tok::K::RPar, "')'");
          return n;
        }
        fail("unknown identifier '" + t.text + "'", t);
      }
      default:
        fail("expected a 2-morphism term", t);
    }
  }

  TwoNode parse_two_factor() {
    if (cur().kind == Tok::K::Number) {
      Tok t = eat();
      expect(Tok::K::Star, "'*'");
      TwoNode n = two_leaf(TwoNode::Kind::Scale, t);
      n.scalar = static_cast<std::uint32_t>(t.num % ctx.p);
      n.args.push_back(parse_two_factor());
      return n;
    }
    return parse_two_atom();
  }

  TwoNode parse_two_vcomp() {
    TwoNode first = parse_two_factor();
    if (cur().kind != Tok::K::VDot && cur().kind != Tok::K::Dot) return first;
    TwoNode n = two_leaf(TwoNode::Kind::VComp, ts[i]);
    n.args.push_back(std::move(first));
    while (cur().kind == Tok::K::VDot || cur().kind == Tok::K::Dot) {
      ++i;
      n.args.push_back(parse_two_factor());
    }
    return n;
  }

  TwoNode parse_two() {
    TwoNode first = parse_two_vcomp();
    if (cur().kind != Tok::K::Plus) return first;
    TwoNode n = two_leaf(TwoNode::Kind::Sum, ts[i]);
    n.args.push_back(std::move(first));
    while (cur().kind == Tok::K::Plus) {
      ++i;
      n.args.push_back(parse_two_vcomp());
    }
    return n;
  }
};

bool looks_two_morphic(const std::vector<Tok>& ts) {
  for (const auto& t : ts) {
    if (t.kind == Tok::K::RowTok || t.kind == Tok::K::UdTok) return true;
    if (t.kind == Tok::K::Ident &&
        (t.text == "inv" || t.text == "whisker" || t.text == "cmp"))
      return true;
  }
  return false;
}

}  // namespace

bool OneNode::operator==(const OneNode& o) const {
  return kind == o.kind && slot == o.slot && name == o.name && args == o.args;
}

bool TwoNode::operator==(const TwoNode& o) const {
  return kind == o.kind && name == o.name && binds == o.binds &&
         scalar == o.scalar && args == o.args && context == o.context;
}

std::string FmlContext::site_name(const FinSpace& x) const {
  for (const auto& [name, sp] : sites)
    if (*sp == x) return name;
  return x.size() == 1 ? "pt" : "?";
}

Formula parse_formula(const std::string& text, const FmlContext& ctx) {
  Lexer lx(text);
  Parser p{lx.run(), 0, ctx};
  if (looks_two_morphic(p.ts)) {
    TwoNode n = p.parse_two();
    if (p.cur().kind != Tok::K::End)
      throw FmlError("unexpected trailing input", p.cur().line, p.cur().col);
    return TwoMorphTerm{std::move(n)};
  }
  OneNode n = p.parse_one();
  if (p.cur().kind != Tok::K::End)
    throw FmlError("unexpected trailing input", p.cur().line, p.cur().col);
  Parser::number_slots(n);
  return OneMorphTerm{std::move(n)};
}

// --- printing ------------------------------------------------------------------

namespace {

std::string print_one(const OneNode& n) {
  using K = FunctorExpr::Kind;
  switch (n.kind) {
    case K::Slot:
      return "(-" + std::to_string(n.slot) + ")";
    case K::Object:
      return "obj:" + n.name;
    case K::Tensor:
      return "\xE2\x8A\x97(" + print_one(n.args[0]) + ", " +
             print_one(n.args[1]) + ")";
    case K::SHom:
      return "Hom(" + print_one(n.args[0]) + ", " + print_one(n.args[1]) + ")";
    case K::HomGlob:
      return "HomG(" + print_one(n.args[0]) + ", " + print_one(n.args[1]) +
             ")";
    case K::Gamma:
      return "\xCE\x93(" + print_one(n.args[0]) + ")";
    case K::Pull:
      return n.name + "^*(" + print_one(n.args[0]) + ")";
    case K::PullInv:
      return n.name + "^-1(" + print_one(n.args[0]) + ")";
    case K::Push:
      return n.name + "_*(" + print_one(n.args[0]) + ")";
    case K::Shriek:
      return n.name + "_!(" + print_one(n.args[0]) + ")";
    case K::UShriek:
      return n.name + "^!(" + print_one(n.args[0]) + ")";
  }
  return "";
}

std::string print_two(const TwoNode& n);

std::string print_two_wrapped(const TwoNode& n, bool wrap_vcomp) {
  bool wrap = n.kind == TwoNode::Kind::Sum ||
              (wrap_vcomp && n.kind == TwoNode::Kind::VComp);
  std::string s = print_two(n);
  return wrap ? "(" + s + ")" : s;
}

std::string print_two(const TwoNode& n) {
  switch (n.kind) {
    case TwoNode::Kind::Row: {
      std::string s = "row:" + n.name;
      if (!n.binds.empty()) {
        s += " @ ";
        for (std::size_t k = 0; k < n.binds.size(); ++k)
          s += (k ? "," : "") + n.binds[k];
      }
      return s;
    }
    case TwoNode::Kind::Ud:
      return "ud:" + n.name;
    case TwoNode::Kind::Cmp:
      return "cmp(" + print_one(n.context[0]) + ")";
    case TwoNode::Kind::Inv:
      return "inv(" + print_two(n.args[0]) + ")";
    case TwoNode::Kind::Whisker:
      return "whisker(" + print_one(n.context[0]) + ", " +
             print_two(n.args[0]) + ")";
    case TwoNode::Kind::Scale:
      return std::to_string(n.scalar) + " * " +
             print_two_wrapped(n.args[0], true);
    case TwoNode::Kind::VComp: {
      std::string s;
      for (std::size_t k = 0; k < n.args.size(); ++k)
        s += (k ? " \xC2\xB7 " : "") + print_two_wrapped(n.args[k], false);
      return s;
    }
    case TwoNode::Kind::Sum: {
      std::string s;
      for (std::size_t k = 0; k < n.args.size(); ++k)
        s += (k ? " + " : "") + print_two(n.args[k]);
      return s;
    }
  }
  return "";
}

}  // namespace

std::string print_formula(const OneMorphTerm& t) { return print_one(t.root); }
std::string print_formula(const TwoMorphTerm& t) { return print_two(t.root); }

// --- one-morphism typing and lowering --------------------------------------------

namespace {

const ContinuousMap& lookup_map(const FmlContext& ctx, const std::string& name,
                                int line, int col) {
  if (auto it = ctx.maps.find(name); it != ctx.maps.end()) return it->second;
  if (auto it = ctx.immersions.find(name); it != ctx.immersions.end())
    return it->second.inclusion;
  throw FmlError("unregistered map '" + name + "'", line, col);
}

const LocallyClosedImmersion& lookup_imm(const FmlContext& ctx,
                                         const std::string& name, int line,
                                         int col) {
  if (auto it = ctx.immersions.find(name); it != ctx.immersions.end())
    return it->second;
  if (ctx.maps.count(name))
    throw FmlError("unsupported: '" + name +
                       "' is not a locally closed immersion",
                   line, col);
  throw FmlError("unregistered map '" + name + "'", line, col);
}

struct SiteSolver {
  const FmlContext& ctx;
  std::map<std::size_t, std::string> slot_site;

  std::string obj_site(const OneNode& n) const {
    auto it = ctx.objects.find(n.name);
    if (it == ctx.objects.end())
      throw FmlError("unregistered object '" + n.name + "'", n.line, n.col);
    return ctx.site_name(*it->second.ctx().space);
  }

  // The site a subterm evaluates on, "?" when not yet determined.
  std::string target(const OneNode& n) const {
    using K = FunctorExpr::Kind;
    switch (n.kind) {
      case K::Slot: {
        auto it = slot_site.find(n.slot);
        return it == slot_site.end() ? "?" : it->second;
      }
      case K::Object:
        return obj_site(n);
      case K::Tensor:
      case K::SHom: {
        std::string a = target(n.args[0]);
        return a != "?" ? a : target(n.args[1]);
      }
      case K::HomGlob:
      case K::Gamma:
        return "pt";
      case K::Pull:
      case K::PullInv:
        return ctx.site_name(*lookup_map(ctx, n.name, n.line, n.col).src);
      case K::Push:
        return ctx.site_name(*lookup_map(ctx, n.name, n.line, n.col).tgt);
      case K::Shriek:
        return ctx.site_name(*lookup_imm(ctx, n.name, n.line, n.col).ambient);
      case K::UShriek:
        return ctx.site_name(
            *lookup_imm(ctx, n.name, n.line, n.col).sub_space);
    }
    return "?";
  }

  void bind(const OneNode& n, const std::string& expected) {
    using K = FunctorExpr::Kind;
    switch (n.kind) {
      case K::Slot: {
        if (expected.empty() || expected == "?") return;
        auto [it, fresh] = slot_site.emplace(n.slot, expected);
        if (!fresh && it->second != expected)
          throw FmlError("site mismatch for slot " + std::to_string(n.slot) +
                             ": " + it->second + " vs " + expected,
                         n.line, n.col);
        return;
      }
      case K::Object: {
        std::string s = obj_site(n);
        if (!expected.empty() && expected != "?" && s != "?" && s != expected)
          throw FmlError("site mismatch: object '" + n.name + "' lives on " +
                             s + ", expected " + expected,
                         n.line, n.col);
        return;
      }
      case K::Tensor:
      case K::SHom: {
        std::string eff = expected;
        if (eff.empty() || eff == "?") eff = target(n.args[0]);
        if (eff.empty() || eff == "?") eff = target(n.args[1]);
        bind(n.args[0], eff);
        bind(n.args[1], eff);
        return;
      }
      case K::HomGlob: {
        std::string eff = target(n.args[0]);
        if (eff.empty() || eff == "?") eff = target(n.args[1]);
        bind(n.args[0], eff);
        bind(n.args[1], eff);
        return;
      }
      case K::Gamma:
        bind(n.args[0], "");
        return;
      case K::Pull:
      case K::PullInv:
        bind(n.args[0],
             ctx.site_name(*lookup_map(ctx, n.name, n.line, n.col).tgt));
        return;
      case K::Push:
        bind(n.args[0],
             ctx.site_name(*lookup_map(ctx, n.name, n.line, n.col).src));
        return;
      case K::Shriek:
        bind(n.args[0],
             ctx.site_name(*lookup_imm(ctx, n.name, n.line, n.col).sub_space));
        return;
      case K::UShriek:
        bind(n.args[0],
             ctx.site_name(*lookup_imm(ctx, n.name, n.line, n.col).ambient));
        return;
    }
  }
};

// Collects the variance of every slot; mixed occurrences are an error.
void variances(const OneNode& n, int sign, std::map<std::size_t, int>& out) {
  using K = FunctorExpr::Kind;
  if (n.kind == K::Slot) {
    auto [it, fresh] = out.emplace(n.slot, sign);
    if (!fresh && it->second != sign)
      throw FmlError("variance mismatch for slot " + std::to_string(n.slot),
                     n.line, n.col);
    return;
  }
  if (n.kind == K::SHom || n.kind == K::HomGlob) {
    variances(n.args[0], -sign, out);
    variances(n.args[1], sign, out);
    return;
  }
  for (const auto& a : n.args) variances(a, sign, out);
}

std::size_t one_arity(const OneNode& n) {
  using K = FunctorExpr::Kind;
  if (n.kind == K::Slot) return n.slot + 1;
  std::size_t m = 0;
  for (const auto& a : n.args) m = std::max(m, one_arity(a));
  return m;
}

std::size_t one_slot_count(const OneNode& n) {
  if (n.kind == FunctorExpr::Kind::Slot) return 1;
  std::size_t m = 0;
  for (const auto& a : n.args) m += one_slot_count(a);
  return m;
}

}  // namespace

OneTyping typecheck(const OneMorphTerm& t, const FmlContext& ctx) {
  std::map<std::size_t, int> var;
  variances(t.root, +1, var);
  SiteSolver solver{ctx, {}};
  solver.bind(t.root, "");
  OneTyping ty;
  ty.sources.resize(one_arity(t.root), ObjectTerm{"?", false});
  for (auto& [slot, sign] : var) {
    auto it = solver.slot_site.find(slot);
    ty.sources[slot] =
        ObjectTerm{it == solver.slot_site.end() ? "?" : it->second, sign < 0};
  }
  ty.target = ObjectTerm{solver.target(t.root), false};
  return ty;
}

FunctorExpr to_functor_expr(const OneMorphTerm& t, const FmlContext& ctx) {
  using K = FunctorExpr::Kind;
  const OneNode& n = t.root;
  auto sub = [&](std::size_t k) {
    return to_functor_expr(OneMorphTerm{n.args[k]}, ctx);
  };
  switch (n.kind) {
    case K::Slot:
      return fe_slot(n.slot);
    case K::Object: {
      auto it = ctx.objects.find(n.name);
      if (it == ctx.objects.end())
        throw FmlError("unregistered object '" + n.name + "'", n.line, n.col);
      return fe_object(it->second);
    }
    case K::Tensor:
      return fe_tensor(sub(0), sub(1));
    case K::SHom:
      return fe_shom(sub(0), sub(1));
    case K::HomGlob:
      return fe_hom_glob(sub(0), sub(1));
    case K::Gamma:
      return fe_gamma(sub(0));
    case K::Pull:
      return fe_pull(lookup_map(ctx, n.name, n.line, n.col), sub(0));
    case K::PullInv:
      return fe_pullinv(lookup_map(ctx, n.name, n.line, n.col), sub(0));
    case K::Push:
      return fe_push(lookup_map(ctx, n.name, n.line, n.col), sub(0));
    case K::Shriek:
      return fe_shriek(lookup_imm(ctx, n.name, n.line, n.col), sub(0));
    case K::UShriek:
      return fe_ushriek(lookup_imm(ctx, n.name, n.line, n.col), sub(0));
  }
  throw FmlError("malformed term", n.line, n.col);
}

// --- two-morphism typing -----------------------------------------------------------

namespace {

// Number of names expected after "@" for each row.
std::size_t row_bind_arity(const std::string& row) {
  if (row == "alphabeta_!" || row == "alphabeta^!") return 3;
  if (row == "proper-base-change") return 4;
  if (row == "alphabeta_*" || row == "alphabeta^*") return 2;
  static const std::vector<std::string> unary = {
      "aa-id", "id-aa", "ul-alpha*-otimes", "pull-push-sheafHom",
      "ulalpha*-inv", "alpha_!-to-alpha_*-not-proper",
      "alpha_!-to-alpha_*-proper", "a_!a^!-id", "id-a^!a_!", "projection-fml",
      "!-adjunction-sheafHom", "upper-!-sheafHom", "id_*", "id^*", "id_!",
      "id^!"};
  if (std::find(unary.begin(), unary.end(), row) != unary.end()) return 1;
  return 0;
}

bool row_bind_is_immersion(const std::string& row, std::size_t k) {
  if (row == "proper-base-change") return k < 2;
  if (row == "alphabeta_!" || row == "alphabeta^!") return true;
  static const std::vector<std::string> jrows = {
      "alpha_!-to-alpha_*-not-proper", "alpha_!-to-alpha_*-proper",
      "a_!a^!-id", "id-a^!a_!", "projection-fml", "!-adjunction-sheafHom",
      "upper-!-sheafHom", "id_!", "id^!"};
  return std::find(jrows.begin(), jrows.end(), row) != jrows.end();
}

// Tri-state formal invertibility used while typechecking, where the slot
// objects are not yet known: -1 no, 0 unknown, +1 yes.
int invertible3(const TwoNode& n, const FmlContext& ctx) {
  switch (n.kind) {
    case TwoNode::Kind::Row: {
      if (n.name == "alpha_!-to-alpha_*-proper") {
        if (n.binds.empty()) return 0;
        const auto& j = lookup_imm(ctx, n.binds[0], n.line, n.col);
        return j.ambient->is_closed(j.subset) ? 1 : -1;
      }
      return row_is_two_iso(n.name) ? 1 : -1;
    }
    case TwoNode::Kind::Ud: {
      auto it = ctx.two_cells.find(n.name);
      if (it == ctx.two_cells.end()) return 0;
      return sheaf_is_quasi_iso(it->second) ? 1 : -1;
    }
    case TwoNode::Kind::Cmp: {
      using K = FunctorExpr::Kind;
      switch (n.context[0].kind) {
        case K::Tensor:
        case K::Pull:
        case K::PullInv:
        case K::Gamma:
        case K::UShriek:
        case K::Slot:
        case K::Object:
          return 1;
        default:
          return 0;  // side condition depends on the bound objects
      }
    }
    case TwoNode::Kind::Inv:
    case TwoNode::Kind::Whisker:
      return invertible3(n.args[0], ctx);
    case TwoNode::Kind::Scale:
      if (n.scalar % ctx.p == 0) return -1;
      return invertible3(n.args[0], ctx);
    case TwoNode::Kind::VComp: {
      int acc = 1;
      for (const auto& a : n.args) acc = std::min(acc, invertible3(a, ctx));
      return acc;
    }
    case TwoNode::Kind::Sum:
      return n.args.size() == 1 ? invertible3(n.args[0], ctx) : 0;
  }
  return 0;
}

void typecheck_two(const TwoNode& n, const FmlContext& ctx) {
  switch (n.kind) {
    case TwoNode::Kind::Row: {
      const auto& ids = row_ids();
      if (std::find(ids.begin(), ids.end(), n.name) == ids.end())
        throw FmlError("unknown row '" + n.name + "'", n.line, n.col);
      std::size_t want = row_bind_arity(n.name);
      if (n.binds.size() != want)
        throw FmlError("row '" + n.name + "' expects " +
                           std::to_string(want) + " binding(s), got " +
                           std::to_string(n.binds.size()),
                       n.line, n.col);
      for (std::size_t k = 0; k < n.binds.size(); ++k) {
        if (row_bind_is_immersion(n.name, k))
          lookup_imm(ctx, n.binds[k], n.line, n.col);
        else
          lookup_map(ctx, n.binds[k], n.line, n.col);
      }
      return;
    }
    case TwoNode::Kind::Ud:
      if (!ctx.two_cells.count(n.name))
        throw FmlError("unregistered 2-cell '" + n.name + "'", n.line, n.col);
      return;
    case TwoNode::Kind::Cmp: {
      const OneNode& g = n.context[0];
      bool gen_ok = g.kind != FunctorExpr::Kind::Slot &&
                    g.kind != FunctorExpr::Kind::Object;
      for (const auto& a : g.args)
        gen_ok = gen_ok && a.kind == FunctorExpr::Kind::Slot;
      if (!gen_ok)
        throw FmlError("cmp expects a generator applied to slots", g.line,
                       g.col);
      typecheck(OneMorphTerm{g}, ctx);
      return;
    }
    case TwoNode::Kind::Inv:
      typecheck_two(n.args[0], ctx);
      if (invertible3(n.args[0], ctx) < 0)
        throw FmlError("inverse of a non-invertible token", n.line, n.col);
      return;
    case TwoNode::Kind::Whisker: {
      if (one_slot_count(n.context[0]) != 1)
        throw FmlError("whisker context needs exactly one slot",
                       n.context[0].line, n.context[0].col);
      typecheck(OneMorphTerm{n.context[0]}, ctx);
      typecheck_two(n.args[0], ctx);
      return;
    }
    case TwoNode::Kind::Scale:
    case TwoNode::Kind::VComp:
    case TwoNode::Kind::Sum:
      for (const auto& a : n.args) typecheck_two(a, ctx);
      return;
  }
}

}  // namespace

void typecheck(const TwoMorphTerm& t, const FmlContext& ctx) {
  typecheck_two(t.root, ctx);
}

// --- invertibility ----------------------------------------------------------------

namespace {

bool invertible_with_inputs(const TwoNode& n, const FmlContext& ctx,
                            const std::vector<SheafComplex>& inputs) {
  switch (n.kind) {
    case TwoNode::Kind::Cmp: {
      using K = FunctorExpr::Kind;
      const OneNode& g = n.context[0];
      switch (g.kind) {
        case K::Tensor:
        case K::Pull:
        case K::PullInv:
        case K::Gamma:
        case K::UShriek:
        case K::Slot:
        case K::Object:
          return true;
        case K::SHom:
        case K::HomGlob: {
          // h-injective second operand
          std::size_t s = g.args[1].slot;
          return s < inputs.size() && is_fibrant(inputs[s]);
        }
        case K::Push:
        case K::Shriek: {
          std::size_t s = g.args[0].slot;
          return s < inputs.size() && is_fibrant(inputs[s]);
        }
      }
      return false;
    }
    case TwoNode::Kind::Inv:
    case TwoNode::Kind::Whisker:
      return invertible_with_inputs(n.args[0], ctx, inputs);
    case TwoNode::Kind::Scale:
      return n.scalar % ctx.p != 0 &&
             invertible_with_inputs(n.args[0], ctx, inputs);
    case TwoNode::Kind::VComp: {
      for (const auto& a : n.args)
        if (!invertible_with_inputs(a, ctx, inputs)) return false;
      return true;
    }
    case TwoNode::Kind::Sum:
      return n.args.size() == 1 &&
             invertible_with_inputs(n.args[0], ctx, inputs);
    default:
      return invertible3(n, ctx) == 1;
  }
}

}  // namespace

bool is_formally_invertible(const TwoMorphTerm& t, const FmlContext& ctx,
                            const std::vector<SheafComplex>& inputs) {
  return invertible_with_inputs(t.root, ctx, inputs);
}

// --- interpretation ---------------------------------------------------------------

Fib interpret_one(const OneMorphTerm& t, const FmlContext& ctx,
                  const std::vector<Fib>& inputs) {
  return eval_underlined(to_functor_expr(t, ctx), inputs);
}

SheafComplex interpret_one_derived(const OneMorphTerm& t, const FmlContext& ctx,
                                   const std::vector<SheafComplex>& inputs) {
  return eval_derived(to_functor_expr(t, ctx), inputs);
}

namespace {

RowBindings make_row_bindings(const TwoNode& n, const FmlContext& ctx,
                              const std::vector<Fib>& fibs) {
  RowBindings rb;
  rb.inputs = fibs;
  const std::string& row = n.name;
  auto imm = [&](std::size_t k) -> const LocallyClosedImmersion& {
    return lookup_imm(ctx, n.binds.at(k), n.line, n.col);
  };
  auto map = [&](std::size_t k) -> const ContinuousMap& {
    return lookup_map(ctx, n.binds.at(k), n.line, n.col);
  };
  if (row == "proper-base-change") {
    rb.j = imm(0);
    rb.j2 = imm(1);
    rb.beta = map(2);
    rb.alpha = map(3);
    return rb;
  }
  if (row == "alphabeta_!" || row == "alphabeta^!") {
    rb.j = imm(0);
    rb.j2 = imm(1);
    rb.j12 = imm(2);
    return rb;
  }
  std::size_t want = row_bind_arity(row);
  if (n.binds.size() != want)
    throw FmlError("row '" + row + "' expects " + std::to_string(want) +
                       " binding(s)",
                   n.line, n.col);
  if (want >= 1) {
    if (row_bind_is_immersion(row, 0))
      rb.j = imm(0);
    else
      rb.alpha = map(0);
  }
  if (want >= 2) rb.beta = map(1);
  return rb;
}

ZigZag cmp_zigzag(const TwoNode& n, const FmlContext& ctx,
                  const std::vector<SheafComplex>& inputs) {
  using K = FunctorExpr::Kind;
  FunctorExpr expr = to_functor_expr(OneMorphTerm{n.context[0]}, ctx);
  OmegaResult r = omega_compare(expr, inputs);
  // Orientation follows the defining list: tensor and pull comparisons start
  // at the underlined composite, the rest at the underlined object of the
  // derived value; identity comparisons are degenerate either way.
  bool src_is_underlined = expr.kind == K::Tensor || expr.kind == K::Pull ||
                           expr.kind == K::UShriek;
  const SheafComplex& ul =
      r.from_derived ? r.comparison.tgt() : r.comparison.src();
  const SheafComplex& der =
      r.from_derived ? r.comparison.src() : r.comparison.tgt();
  const SheafComplex& src = src_is_underlined ? ul : der;
  const SheafComplex& tgt = src_is_underlined ? der : ul;
  bool forward = r.comparison.src() == src;
  ZigZag z = zig_identity(Fib{src, nullptr}, "cmp(" + print_one(n.context[0]) + ")");
  zig_push(z, Fib{tgt, nullptr}, r.comparison, forward);
  z.two_iso_expected = r.ok;
  return z;
}

LinearZigZag interp_two(const TwoNode& n, const FmlContext& ctx,
                        const std::vector<SheafComplex>& inputs,
                        const std::vector<Fib>& fibs) {
  switch (n.kind) {
    case TwoNode::Kind::Row:
      return {{{1, generator_zigzag(n.name, make_row_bindings(n, ctx, fibs))}}};
    case TwoNode::Kind::Ud: {
      const SheafChainMap& g = ctx.two_cells.at(n.name);
      Fib a = fib_i(g.src());
      Fib b = fib_i(g.tgt());
      ZigZag z = zig_identity(a, "ud:" + n.name);
      zig_push(z, b, i_map(a, b, g), true);
      z.two_iso_expected = z.legs.back().qiso;
      return {{{1, z}}};
    }
    case TwoNode::Kind::Cmp:
      return {{{1, cmp_zigzag(n, ctx, inputs)}}};
    case TwoNode::Kind::Inv: {
      LinearZigZag sub = interp_two(n.args[0], ctx, inputs, fibs);
      if (sub.terms.size() != 1)
        throw FmlError("inv: cannot invert a linear combination", n.line,
                       n.col);
      return {{{invmod(sub.terms[0].first, ctx.p),
                zig_reverse(sub.terms[0].second)}}};
    }
    case TwoNode::Kind::Scale: {
      LinearZigZag sub = interp_two(n.args[0], ctx, inputs, fibs);
      for (auto& [c, z] : sub.terms) c = mulmod(c, n.scalar, ctx.p);
      return sub;
    }
    case TwoNode::Kind::VComp: {
      // args written left to right; the rightmost acts first
      LinearZigZag acc = interp_two(n.args.back(), ctx, inputs, fibs);
      for (std::size_t k = n.args.size() - 1; k-- > 0;) {
        LinearZigZag next = interp_two(n.args[k], ctx, inputs, fibs);
        LinearZigZag prod;
        for (const auto& [ca, za] : acc.terms)
          for (const auto& [cb, zb] : next.terms)
            prod.terms.emplace_back(mulmod(ca, cb, ctx.p), zig_concat(za, zb));
        acc = std::move(prod);
      }
      return acc;
    }
    case TwoNode::Kind::Sum: {
      LinearZigZag acc;
      for (const auto& a : n.args) {
        LinearZigZag sub = interp_two(a, ctx, inputs, fibs);
        for (auto& t : sub.terms) acc.terms.push_back(std::move(t));
      }
      return acc;
    }
    case TwoNode::Kind::Whisker: {
      FunctorExpr expr = to_functor_expr(OneMorphTerm{n.context[0]}, ctx);
      LinearZigZag sub = interp_two(n.args[0], ctx, inputs, fibs);
      for (auto& [c, z] : sub.terms) z = whisker_zigzag(expr, z);
      return sub;
    }
  }
  throw FmlError("malformed 2-morphism", n.line, n.col);
}

}  // namespace

LinearZigZag interpret_two(const TwoMorphTerm& t, const FmlContext& ctx,
                           const std::vector<SheafComplex>& inputs) {
  std::vector<Fib> fibs;
  fibs.reserve(inputs.size());
  for (const auto& f : inputs) fibs.push_back(fib_i(f));
  return interp_two(t.root, ctx, inputs, fibs);
}

SheafChainMap reduce_two(const LinearZigZag& z) {
  if (z.terms.empty())
    throw std::invalid_argument("reduce_two: empty combination");
  SheafChainMap acc = reduce_roof(z.terms[0].second).scaled(z.terms[0].first);
  for (std::size_t k = 1; k < z.terms.size(); ++k)
    acc = acc + reduce_roof(z.terms[k].second).scaled(z.terms[k].first);
  return acc;
}

}  // namespace fsh
