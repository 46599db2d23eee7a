#include <stdexcept>

#include "fsh/enh.hpp"

namespace fsh {

namespace {

const SheafComplex& arg_input(const FunctorExpr& e, std::size_t i,
                              const std::vector<SheafComplex>& inputs) {
  const FunctorExpr& a = e.args.at(i);
  if (a.kind != FunctorExpr::Kind::Slot)
    throw std::invalid_argument("omega_compare: expected a generator applied to slots");
  return inputs.at(a.slot);
}

OmegaResult finish(SheafChainMap cmp, bool from_derived) {
  OmegaResult r;
  r.ok = sheaf_is_quasi_iso(cmp);
  r.comparison = std::move(cmp);
  r.from_derived = from_derived;
  return r;
}

OmegaResult identity_omega(const SheafComplex& value) {
  return finish(SheafGradedMap::identity(value), true);
}

}  // namespace

OmegaResult omega_compare(const FunctorExpr& e,
                          const std::vector<SheafComplex>& inputs) {
  using K = FunctorExpr::Kind;
  switch (e.kind) {
    case K::Slot:
      return identity_omega(i_complex(inputs.at(e.slot)).output);
    case K::Object:
      return identity_omega(i_complex(*e.obj).output);
    case K::Push: {
      auto rr = i_complex(arg_input(e, 0, inputs));
      return identity_omega(i_complex(pushforward(*e.map, rr.output)).output);
    }
    case K::Gamma: {
      auto rr = i_complex(arg_input(e, 0, inputs));
      return identity_omega(i_complex(gamma_sheaf(rr.output)).output);
    }
    case K::Pull:
    case K::PullInv: {
      const SheafComplex& in = arg_input(e, 0, inputs);
      auto rr = i_complex(in);
      Fib der = fib_i(pullback(*e.map, in));
      Fib ul = fib_i(pullback(*e.map, rr.output));
      return finish(i_map(der, ul, pullback_map(*e.map, rr.iota)), true);
    }
    case K::Tensor: {
      const SheafComplex& a = arg_input(e, 0, inputs);
      const SheafComplex& b = arg_input(e, 1, inputs);
      auto ra = i_complex(a);
      auto rb = i_complex(b);
      Fib der = fib_i(sheaf_tensor(a, b));
      Fib ul = fib_i(sheaf_tensor(ra.output, rb.output));
      return finish(i_map(der, ul, sheaf_tensor_map(ra.iota, rb.iota)), true);
    }
    case K::SHom: {
      const SheafComplex& a = arg_input(e, 0, inputs);
      const SheafComplex& b = arg_input(e, 1, inputs);
      auto ra = i_complex(a);
      auto rb = i_complex(b);
      SheafHomResult ul_h = sheaf_hom(ra.output, rb.output);
      SheafHomResult der_h = sheaf_hom(a, rb.output);
      SheafChainMap contra =
          sheaf_hom_map(ra.output, rb.output, ul_h, a, rb.output, der_h, ra.iota,
                        SheafGradedMap::identity(rb.output));
      Fib ul = fib_i(ul_h.sheaf);
      Fib der = fib_i(der_h.sheaf);
      return finish(i_map(ul, der, contra), false);
    }
    case K::HomGlob: {
      const SheafComplex& a = arg_input(e, 0, inputs);
      const SheafComplex& b = arg_input(e, 1, inputs);
      auto ra = i_complex(a);
      auto rb = i_complex(b);
      SheafHomResult ul_h = sheaf_hom(ra.output, rb.output);
      SheafHomResult der_h = sheaf_hom(a, rb.output);
      SheafChainMap contra =
          sheaf_hom_map(ra.output, rb.output, ul_h, a, rb.output, der_h, ra.iota,
                        SheafGradedMap::identity(rb.output));
      return finish(gamma_map(contra), false);
    }
    case K::Shriek: {
      const SheafComplex& in = arg_input(e, 0, inputs);
      auto rr = i_complex(in);
      Fib der = fib_i(lower_shriek(*e.imm, in));
      Fib ul = fib_i(lower_shriek(*e.imm, rr.output));
      return finish(i_map(der, ul, lower_shriek_map(*e.imm, rr.iota)), true);
    }
    case K::UShriek: {
      const SheafComplex& in = arg_input(e, 0, inputs);
      auto rr = i_complex(in);
      Fib ider = fib_i(upper_shriek_adjoint(*e.imm, rr.output).sheaf);
      return finish(ider.res->iota, false);
    }
  }
  throw std::logic_error("omega_compare: bad kind");
}

}  // namespace fsh
