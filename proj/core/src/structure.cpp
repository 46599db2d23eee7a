#include <stdexcept>

#include "fsh/complex_ops.hpp"

namespace fsh {

SemisimpleDecomposition decompose_semisimple(const Complex& a) {
  std::uint32_t p = a.modulus();
  std::map<int, Matrix> Z, C, Bb, H;
  for (int n = a.lo(); n <= a.hi(); ++n) {
    std::size_t dn = a.dim(n);
    Matrix z = kernel(a.diff(n));
    Matrix id = Matrix::identity(dn, p);
    Matrix c = id.select_cols(extend_basis(z, id));
    Matrix bb = (Bb.count(n)) ? Bb[n] : Matrix(dn, 0, p);
    Matrix h = z.select_cols(extend_basis(bb, z));
    Z[n] = z;
    C[n] = c;
    Bb[n] = bb;
    H[n] = h;
    if (c.cols() > 0) Bb[n + 1] = a.diff(n) * c;
  }
  Complex S(p), T(p);
  for (int n = a.lo(); n <= a.hi(); ++n) {
    S.set_dim(n, H.count(n) ? H[n].cols() : 0);
    std::size_t bn = Bb.count(n) ? Bb[n].cols() : 0;
    T.set_dim(n, bn);
  }
  Complex model = direct_sum(S, icone(T)).total;
  ChainMap inv(model, a);
  for (int n = a.lo(); n <= a.hi(); ++n) {
    // model layout per degree: [S^n | T^n | T^(n+1)]
    Matrix bb = Bb.count(n) ? Bb[n] : Matrix(a.dim(n), 0, p);
    inv.set_map(n, Matrix::hstack(Matrix::hstack(H[n], bb), C[n]));
  }
  ChainMap iso(a, model);
  for (int n = a.lo(); n <= a.hi(); ++n) {
    if (a.dim(n) == 0) continue;
    iso.set_map(n, inverse(inv.map(n)).value());
  }
  inv.validate_chain_map();
  iso.validate_chain_map();
  return {S, T, model, iso, inv};
}

namespace {

// Columns of `inv` belonging to the icone block of a semisimple decomposition,
// split at the T^n / T^(n+1) boundary.
Matrix icone_cols(const SemisimpleDecomposition& dec, int n) {
  std::size_t h = dec.S.dim(n);
  return dec.inverse.map(n).col_slice(h, h + dec.T.dim(n) + dec.T.dim(n + 1));
}

struct Piece {
  Complex ms, mt;
  ChainMap mono;               // ms -> mt
  std::map<int, Matrix> ua;    // columns in A per degree
  std::map<int, Matrix> ub;    // columns in B per degree
  MonoSummand tag;
};

}  // namespace

MonoClassification classify_mono(const ChainMap& m) {
  m.validate_chain_map();
  const Complex& a = m.src();
  const Complex& b = m.tgt();
  std::uint32_t p = a.modulus();
  for (int n = a.lo(); n <= a.hi(); ++n)
    if (rank(m.map(n)) != a.dim(n))
      throw std::invalid_argument("classify_mono: not componentwise injective");

  // Step 1: split iCone(T_A) off the source.
  SemisimpleDecomposition decA = decompose_semisimple(a);
  Complex JA = icone(decA.T);
  ChainMap eJ(JA, a);  // inclusion of the icone part
  ChainMap inclS(decA.S, a);
  for (int n = a.lo(); n <= a.hi(); ++n) {
    eJ.set_map(n, icone_cols(decA, n));
    inclS.set_map(n, decA.inverse.map(n).col_slice(0, decA.S.dim(n)));
  }
  ChainMap mJ = GradedMap::compose(m, eJ);

  ChainMap r(b, JA);
  if (!JA.is_zero_object() || !b.is_zero_object()) {
    std::vector<GradedUnknown> un{{b, JA, 0}};
    GradedEquation chain;
    chain.terms.push_back({0, [](const GradedMap& x) { return hom_diff(x); }});
    chain.rhs = GradedMap(b, JA, 1);
    GradedEquation retract;
    retract.terms.push_back({0, [&mJ](const GradedMap& x) { return GradedMap::compose(x, mJ); }});
    retract.rhs = GradedMap::identity(JA);
    auto sol = solve_graded(un, {chain, retract});
    if (!sol) throw std::logic_error("classify_mono: icone retraction must exist");
    r = (*sol)[0];
  }

  // Correct the semisimple inclusion so m maps it into ker r.
  ChainMap ctilde = GradedMap::compose(r, GradedMap::compose(m, inclS));
  ChainMap repsp = inclS - GradedMap::compose(eJ, ctilde);
  ChainMap mS = GradedMap::compose(m, repsp);

  // K = ker r with induced differential; m1 : S_A -> K.
  Complex K(p);
  std::map<int, Matrix> KB;
  for (int n = b.lo(); n <= b.hi(); ++n) {
    KB[n] = kernel(r.map(n));
    K.set_dim(n, KB[n].cols());
  }
  for (int n = b.lo(); n < b.hi(); ++n) {
    if (K.dim(n) == 0) continue;
    Matrix img = b.diff(n) * KB[n];
    Matrix kb1 = KB.count(n + 1) ? KB[n + 1] : Matrix(b.dim(n + 1), 0, p);
    K.set_diff(n, solve(kb1, img).value());
  }
  ChainMap m1(decA.S, K);
  for (int n = a.lo(); n <= a.hi(); ++n) {
    if (decA.S.dim(n) == 0) continue;
    m1.set_map(n, solve(KB[n], mS.map(n)).value());
  }

  // Step 2: split iCone(T_G) off the cokernel and lift it.
  Complex G(p);
  std::map<int, Matrix> Gc, Q;
  for (int n = K.lo(); n <= K.hi(); ++n) {
    std::size_t kn = K.dim(n);
    Matrix id = Matrix::identity(kn, p);
    Gc[n] = id.select_cols(extend_basis(m1.map(n), id));
    G.set_dim(n, Gc[n].cols());
    Matrix u = Matrix::hstack(m1.map(n), Gc[n]);
    Q[n] = kn ? inverse(u).value().row_slice(m1.map(n).cols(), kn) : Matrix(0, 0, p);
  }
  ChainMap q(K, G);
  for (int n = K.lo(); n <= K.hi(); ++n)
    if (K.dim(n)) q.set_map(n, Q[n]);
  for (int n = G.lo(); n < G.hi(); ++n) {
    if (G.dim(n) == 0) continue;
    G.set_diff(n, q.map(n + 1) * (K.diff(n) * Gc[n]));
  }
  q = ChainMap(K, G);
  for (int n = K.lo(); n <= K.hi(); ++n)
    if (K.dim(n)) q.set_map(n, Q[n]);
  q.validate_chain_map();

  SemisimpleDecomposition decG = decompose_semisimple(G);
  Complex JG = icone(decG.T);
  ChainMap eG(JG, G);
  for (int n = G.lo(); n <= G.hi(); ++n) eG.set_map(n, icone_cols(decG, n));

  ChainMap s(JG, K);
  if (!JG.is_zero_object()) {
    std::vector<GradedUnknown> un{{JG, K, 0}};
    GradedEquation chain;
    chain.terms.push_back({0, [](const GradedMap& x) { return hom_diff(x); }});
    chain.rhs = GradedMap(JG, K, 1);
    GradedEquation sect;
    sect.terms.push_back({0, [&q](const GradedMap& x) { return GradedMap::compose(q, x); }});
    sect.rhs = eG;
    auto sol = solve_graded(un, {chain, sect});
    if (!sol) throw std::logic_error("classify_mono: icone section must exist");
    s = (*sol)[0];
  }

  // P = preimage of the semisimple part of G; contains m1(S_A).
  ChainMap prJ(G, JG);
  for (int n = G.lo(); n <= G.hi(); ++n) {
    std::size_t h = decG.S.dim(n);
    std::size_t w = decG.T.dim(n) + decG.T.dim(n + 1);
    if (G.dim(n)) prJ.set_map(n, decG.iso.map(n).row_slice(h, h + w));
  }
  Complex P(p);
  std::map<int, Matrix> PB;
  for (int n = K.lo(); n <= K.hi(); ++n) {
    PB[n] = kernel(prJ.map(n) * q.map(n));
    P.set_dim(n, PB[n].cols());
  }
  for (int n = K.lo(); n < K.hi(); ++n) {
    if (P.dim(n) == 0) continue;
    Matrix pb1 = PB.count(n + 1) ? PB[n + 1] : Matrix(K.dim(n + 1), 0, p);
    P.set_diff(n, solve(pb1, K.diff(n) * PB[n]).value());
  }
  ChainMap m2(decA.S, P);
  for (int n = a.lo(); n <= a.hi(); ++n) {
    if (decA.S.dim(n) == 0) continue;
    m2.set_map(n, solve(PB[n], m1.map(n)).value());
  }

  // Step 3: semisimple source into P. Split P^n = m2(W) (+) m2(SS) (+) C (+) U
  // with d(C^n) = m2(W^(n+1)) an isomorphism onto its image and d(U) = 0.
  std::map<int, Matrix> V, W, Csub, U, SS;
  for (int n = P.lo(); n <= P.hi(); ++n) {
    std::size_t pn = P.dim(n);
    Matrix id = Matrix::identity(pn, p);
    V[n] = id.select_cols(extend_basis(m2.map(n), id));
    Matrix dv = P.diff(n) * V[n];
    Matrix w = solve(m2.map(n + 1), dv).value();  // coords in S_A^(n+1)
    auto rw = rref(w);
    Csub[n] = V[n].select_cols(rw.pivots);
    W[n + 1] = w.select_cols(rw.pivots);
    U[n] = V[n] * kernel(w);
  }
  for (int n = decA.S.lo(); n <= decA.S.hi(); ++n) {
    std::size_t h = decA.S.dim(n);
    Matrix wb = W.count(n) ? W[n] : Matrix(h, 0, p);
    Matrix id = Matrix::identity(h, p);
    SS[n] = id.select_cols(extend_basis(wb, id));
  }

  // Embedding of P into B.
  auto embP = [&](int n) { return KB[n] * PB[n]; };

  // Assemble the canonical model piece by piece.
  std::vector<Piece> pieces;
  auto add_point_piece = [&](MonoType type, int deg, const Matrix& acols,
                             const Matrix& bcols) {
    Piece pc;
    pc.mt = Complex::point(deg, bcols.cols(), p);
    if (type == MonoType::IdS) {
      pc.ms = pc.mt;
      pc.mono = GradedMap::identity(pc.ms);
      pc.ua[deg] = acols;
    } else {
      pc.ms = Complex(p);
      pc.mono = ChainMap(pc.ms, pc.mt);
    }
    pc.ub[deg] = bcols;
    pc.tag = {type, -deg, bcols.cols()};
    pieces.push_back(std::move(pc));
  };

  // IdS summands
  for (int n = decA.S.lo(); n <= decA.S.hi(); ++n) {
    if (!SS.count(n) || SS[n].cols() == 0) continue;
    add_point_piece(MonoType::IdS, n, repsp.map(n) * SS[n],
                    embP(n) * (m2.map(n) * SS[n]));
  }
  // IdICone summands (from the source)
  for (int n = decA.T.lo(); n <= decA.T.hi(); ++n) {
    std::size_t t = decA.T.dim(n);
    if (t == 0) continue;
    Piece pc;
    pc.ms = icone(Complex::point(n, t, p));
    pc.mt = pc.ms;
    pc.mono = GradedMap::identity(pc.ms);
    pc.ua[n] = eJ.map(n).col_slice(0, t);
    pc.ua[n - 1] = eJ.map(n - 1).col_slice(decA.T.dim(n - 1), decA.T.dim(n - 1) + t);
    pc.ub[n] = m.map(n) * pc.ua[n];
    pc.ub[n - 1] = m.map(n - 1) * pc.ua[n - 1];
    pc.tag = {MonoType::IdICone, -n, t};
    pieces.push_back(std::move(pc));
  }
  // KToICone summands: k@(n+1) into an icone with top degree n+1.
  for (int n = P.lo(); n <= P.hi(); ++n) {
    if (!Csub.count(n) || Csub[n].cols() == 0) continue;
    std::size_t c = Csub[n].cols();
    Piece pc;
    pc.ms = Complex::point(n + 1, c, p);
    pc.mt = icone(Complex::point(n + 1, c, p));
    pc.mono = ChainMap(pc.ms, pc.mt);
    pc.mono.set_map(n + 1, Matrix::identity(c, p));
    pc.ua[n + 1] = repsp.map(n + 1) * W[n + 1];
    pc.ub[n] = embP(n) * Csub[n];
    pc.ub[n + 1] = embP(n + 1) * (m2.map(n + 1) * W[n + 1]);
    pc.tag = {MonoType::KToICone, -(n + 1), c};
    pieces.push_back(std::move(pc));
  }
  // ZeroToK summands
  for (int n = P.lo(); n <= P.hi(); ++n) {
    if (!U.count(n) || U[n].cols() == 0) continue;
    add_point_piece(MonoType::ZeroToK, n, Matrix(), embP(n) * U[n]);
  }
  // ZeroToICone summands (from the lifted cokernel icones)
  for (int n = decG.T.lo(); n <= decG.T.hi(); ++n) {
    std::size_t t = decG.T.dim(n);
    if (t == 0) continue;
    Piece pc;
    pc.ms = Complex(p);
    pc.mt = icone(Complex::point(n, t, p));
    pc.mono = ChainMap(pc.ms, pc.mt);
    pc.ub[n] = KB[n] * s.map(n).col_slice(0, t);
    pc.ub[n - 1] =
        KB[n - 1] * s.map(n - 1).col_slice(decG.T.dim(n - 1), decG.T.dim(n - 1) + t);
    pc.tag = {MonoType::ZeroToICone, -n, t};
    pieces.push_back(std::move(pc));
  }

  // Fold the pieces into one model with block-diagonal structure.
  MonoClassification out;
  out.model_src = Complex(p);
  out.model_tgt = Complex(p);
  int lo = std::min(a.is_zero_object() ? 0 : a.lo(), b.is_zero_object() ? 0 : b.lo());
  int hi = std::max(a.is_zero_object() ? -1 : a.hi(), b.is_zero_object() ? -1 : b.hi());
  for (int n = lo; n <= hi; ++n) {
    std::size_t ds = 0, dt = 0;
    for (auto& pc : pieces) {
      ds += pc.ms.dim(n);
      dt += pc.mt.dim(n);
    }
    out.model_src.set_dim(n, ds);
    out.model_tgt.set_dim(n, dt);
  }
  auto place = [&](Matrix& big, std::size_t r0, std::size_t c0, const Matrix& blk) {
    for (std::size_t r = 0; r < blk.rows(); ++r)
      for (std::size_t c = 0; c < blk.cols(); ++c)
        if (blk.at(r, c)) big.at(r0 + r, c0 + c) = blk.at(r, c);
  };
  for (int n = lo; n < hi; ++n) {
    Matrix ds(out.model_src.dim(n + 1), out.model_src.dim(n), p);
    Matrix dt(out.model_tgt.dim(n + 1), out.model_tgt.dim(n), p);
    std::size_t rs = 0, cs = 0, rt = 0, ct = 0;
    for (auto& pc : pieces) {
      place(ds, rs, cs, pc.ms.diff(n));
      place(dt, rt, ct, pc.mt.diff(n));
      rs += pc.ms.dim(n + 1);
      cs += pc.ms.dim(n);
      rt += pc.mt.dim(n + 1);
      ct += pc.mt.dim(n);
    }
    out.model_src.set_diff(n, ds);
    out.model_tgt.set_diff(n, dt);
  }
  out.model_mono = ChainMap(out.model_src, out.model_tgt);
  out.src_iso = ChainMap(out.model_src, a);
  out.tgt_iso = ChainMap(out.model_tgt, b);
  for (int n = lo; n <= hi; ++n) {
    Matrix mm(out.model_tgt.dim(n), out.model_src.dim(n), p);
    Matrix ua(a.dim(n), out.model_src.dim(n), p);
    Matrix ub(b.dim(n), out.model_tgt.dim(n), p);
    std::size_t cs = 0, ct = 0;
    for (auto& pc : pieces) {
      place(mm, ct, cs, pc.mono.map(n));
      if (pc.ua.count(n)) place(ua, 0, cs, pc.ua[n]);
      if (pc.ub.count(n)) place(ub, 0, ct, pc.ub[n]);
      cs += pc.ms.dim(n);
      ct += pc.mt.dim(n);
    }
    out.model_mono.set_map(n, mm);
    out.src_iso.set_map(n, ua);
    out.tgt_iso.set_map(n, ub);
  }
  for (auto& pc : pieces) out.summands.push_back(pc.tag);

  // Internal consistency: the witnesses must be exact isomorphisms that
  // intertwine m with the model mono.
  out.model_mono.validate_chain_map();
  out.src_iso.validate_chain_map();
  out.tgt_iso.validate_chain_map();
  for (int n = lo; n <= hi; ++n) {
    if (rank(out.src_iso.map(n)) != a.dim(n) || out.model_src.dim(n) != a.dim(n))
      throw std::logic_error("classify_mono: source witness is not an isomorphism");
    if (rank(out.tgt_iso.map(n)) != b.dim(n) || out.model_tgt.dim(n) != b.dim(n))
      throw std::logic_error("classify_mono: target witness is not an isomorphism");
  }
  if (!(GradedMap::compose(m, out.src_iso) == GradedMap::compose(out.tgt_iso, out.model_mono)))
    throw std::logic_error("classify_mono: witnesses do not intertwine the mono");
  return out;
}

}  // namespace fsh
