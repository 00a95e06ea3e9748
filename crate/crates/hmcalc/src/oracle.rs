//! Independent bracket-calculus engine, used for differential testing.
//!
//! Classes are kept in bracket form: a term is either a polyblock (blocks
//! and a base class at the current family level) or a node class with a
//! payload living one boundary level down. The discriminant acts by the
//! recursive rules
//!
//!   `Gamma . F^n_j[y] = -Q^n_j[y] - F^n_j[e^n_{j+1} . y]`
//!   `Gamma . Q^n_j[y] = -Q^n_j[e^n_j . y]`
//!   e^n_j = -Gamma_boundary - (n-j+1) i(theta_x) - j i(theta_y)
//!           + C(n-j+1,2) psi_x + C(j,2) psi_y
//!
//! together with the classical pair/diagonal action and boundary creation on
//! polyblocks. The boundary discriminant uses omega' = omega| - theta_x -
//! theta_y computed from the configured restriction, so both engines consume
//! identical data. Flattening to the standard model applies the product
//! transfer with its r-coefficient corrections; it shares no traversal code
//! with the operator module.

use std::sync::Arc;

use num_traits::{One, Zero};

use crate::algebra::ClassExpr;
use crate::error::{HmError, Result};
use crate::family::{FamilyLevel, FamilyModel, NodeData};
use crate::rational::{binom2, rat_int, Rat};
use crate::rtable::RTable;
use crate::taut::{normalize, NodeFactor, NodeKind, RawMonomial, TautElement, TautMonomial};

#[derive(Debug, Clone)]
pub enum Bracket {
    Poly {
        blocks: Vec<(u32, ClassExpr)>,
        base: ClassExpr,
    },
    Node {
        kind: NodeKind,
        n: u32,
        j: u32,
        node: String,
        payload: Box<BracketSum>,
    },
}

#[derive(Debug, Clone, Default)]
pub struct BracketSum {
    pub terms: Vec<(Rat, Bracket)>,
}

impl BracketSum {
    pub fn zero() -> BracketSum {
        BracketSum::default()
    }

    pub fn single(c: Rat, b: Bracket) -> BracketSum {
        BracketSum {
            terms: vec![(c, b)],
        }
    }

    pub fn push(&mut self, c: Rat, b: Bracket) {
        if !c.is_zero() {
            self.terms.push((c, b));
        }
    }

    pub fn extend(&mut self, other: BracketSum) {
        self.terms.extend(other.terms);
    }

    pub fn scaled(mut self, c: &Rat) -> BracketSum {
        for (v, _) in &mut self.terms {
            *v *= c;
        }
        self
    }
}

/// Family level at the end of a chain of node data.
fn level_of<'a>(family: &'a FamilyModel, chain: &'a [Arc<NodeData>]) -> &'a FamilyLevel {
    match chain.last() {
        Some(n) => &n.boundary,
        None => &family.root,
    }
}

/// Relative dualizing class at the end of a chain, via omega adjustment.
fn omega_at(family: &FamilyModel, chain: &[Arc<NodeData>]) -> Result<ClassExpr> {
    let mut omega = family.root.omega.clone();
    for nd in chain {
        omega = nd
            .restrict
            .apply(&omega)?
            .add(&nd.theta_x.scale(&rat_int(-1)))?
            .add(&nd.theta_y.scale(&rat_int(-1)))?;
    }
    Ok(omega)
}

fn chain_ids(chain: &[Arc<NodeData>]) -> Vec<String> {
    chain.iter().map(|n| n.id.clone()).collect()
}

/// Multiply every term by a class of the current level's base ring.
fn mult_base_at(
    family: &FamilyModel,
    chain: &[Arc<NodeData>],
    x: &BracketSum,
    beta: &ClassExpr,
) -> Result<BracketSum> {
    let mut out = BracketSum::zero();
    for (c, br) in &x.terms {
        match br {
            Bracket::Poly { blocks, base } => {
                let nb = base.mul(beta)?;
                if !nb.is_zero() {
                    out.push(
                        c.clone(),
                        Bracket::Poly {
                            blocks: blocks.clone(),
                            base: nb,
                        },
                    );
                }
            }
            Bracket::Node {
                kind,
                n,
                j,
                node,
                payload,
            } => {
                let nd = family.node_for(level_of(family, chain), &chain_ids(chain), node)?;
                let mut deeper = chain.to_vec();
                deeper.push(nd.clone());
                let beta_down = nd.base_pullback.apply(beta)?;
                let inner = mult_base_at(family, &deeper, payload, &beta_down)?;
                if !inner.terms.is_empty() {
                    out.push(
                        c.clone(),
                        Bracket::Node {
                            kind: *kind,
                            n: *n,
                            j: *j,
                            node: node.clone(),
                            payload: Box::new(inner),
                        },
                    );
                }
            }
        }
    }
    Ok(out)
}

/// Interior multiplication by a class of the current level's total ring.
fn interior_at(
    family: &FamilyModel,
    chain: &[Arc<NodeData>],
    alpha: &ClassExpr,
    x: &BracketSum,
) -> Result<BracketSum> {
    let mut out = BracketSum::zero();
    for (c, br) in &x.terms {
        match br {
            Bracket::Poly { blocks, base } => {
                for (i, (n, cls)) in blocks.iter().enumerate() {
                    let prod = alpha.mul(cls)?;
                    if prod.is_zero() {
                        continue;
                    }
                    let mut nb = blocks.clone();
                    nb[i] = (*n, prod);
                    out.push(
                        c * rat_int(*n as i64),
                        Bracket::Poly {
                            blocks: nb,
                            base: base.clone(),
                        },
                    );
                }
            }
            Bracket::Node {
                kind,
                n,
                j,
                node,
                payload,
            } => {
                let nd = family.node_for(level_of(family, chain), &chain_ids(chain), node)?;
                let mut deeper = chain.to_vec();
                deeper.push(nd.clone());
                let alpha_down = nd.restrict.apply(alpha)?;
                let inner = interior_at(family, &deeper, &alpha_down, payload)?;
                if !inner.terms.is_empty() {
                    out.push(
                        c.clone(),
                        Bracket::Node {
                            kind: *kind,
                            n: *n,
                            j: *j,
                            node: node.clone(),
                            payload: Box::new(inner),
                        },
                    );
                }
                let pulled = nd.pullback.apply(&nd.restrict.apply(alpha)?)?;
                if !pulled.is_zero() {
                    let scaled = mult_base_at(family, &deeper, payload, &pulled)?;
                    if !scaled.terms.is_empty() {
                        out.push(
                            c.clone(),
                            Bracket::Node {
                                kind: *kind,
                                n: *n,
                                j: *j,
                                node: node.clone(),
                                payload: Box::new(scaled),
                            },
                        );
                    }
                }
            }
        }
    }
    Ok(out)
}

/// e^n_j(theta) applied to a payload at the boundary of `nd`.
fn e_at(
    family: &FamilyModel,
    chain: &[Arc<NodeData>],
    nd: &Arc<NodeData>,
    n: u32,
    j: u32,
    payload: &BracketSum,
) -> Result<BracketSum> {
    let mut deeper = chain.to_vec();
    deeper.push(nd.clone());
    let mut out = gamma_at(family, &deeper, payload)?.scaled(&rat_int(-1));
    out.extend(
        interior_at(family, &deeper, &nd.theta_x, payload)?.scaled(&rat_int(-((n - j + 1) as i64))),
    );
    out.extend(interior_at(family, &deeper, &nd.theta_y, payload)?.scaled(&rat_int(-(j as i64))));
    let psi = nd
        .psi_x
        .scale(&binom2(n - j + 1))
        .add(&nd.psi_y.scale(&binom2(j)))?;
    if !psi.is_zero() {
        out.extend(mult_base_at(family, &deeper, payload, &psi)?);
    }
    Ok(out)
}

/// Public entry for the e-operator at a top-level node.
pub fn e_apply(
    family: &FamilyModel,
    theta: &str,
    n: u32,
    j: u32,
    payload: &BracketSum,
) -> Result<BracketSum> {
    if j == 0 || j > n {
        return Err(HmError::Validation(format!(
            "e^{n}_{j}: index must satisfy 1 <= j <= n"
        )));
    }
    let nd = family.node_for(&family.root, &[], theta)?;
    e_at(family, &[], &nd, n, j, payload)
}

/// The discriminant in bracket coordinates at the end of a chain.
fn gamma_at(family: &FamilyModel, chain: &[Arc<NodeData>], x: &BracketSum) -> Result<BracketSum> {
    let omega = omega_at(family, chain)?;
    let level = level_of(family, chain);
    let ids = chain_ids(chain);
    let mut out = BracketSum::zero();
    for (c, br) in &x.terms {
        match br {
            Bracket::Poly { blocks, base } => {
                // Classical pair rule.
                for i in 0..blocks.len() {
                    for k in (i + 1)..blocks.len() {
                        let (ni, ci) = &blocks[i];
                        let (nk, ck) = &blocks[k];
                        let prod = ci.mul(ck)?;
                        if prod.is_zero() {
                            continue;
                        }
                        let mut nb: Vec<(u32, ClassExpr)> = Vec::new();
                        for (p, blk) in blocks.iter().enumerate() {
                            if p != i && p != k {
                                nb.push(blk.clone());
                            }
                        }
                        nb.push((ni + nk, prod));
                        out.push(
                            c * rat_int((ni * nk) as i64),
                            Bracket::Poly {
                                blocks: nb,
                                base: base.clone(),
                            },
                        );
                    }
                }
                // Diagonal omega terms.
                for (i, (n, cls)) in blocks.iter().enumerate() {
                    let coef = binom2(*n);
                    if coef.is_zero() {
                        continue;
                    }
                    let prod = omega.mul(cls)?;
                    if prod.is_zero() {
                        continue;
                    }
                    let mut nb = blocks.clone();
                    nb[i] = (*n, prod);
                    out.push(
                        -(c * coef),
                        Bracket::Poly {
                            blocks: nb,
                            base: base.clone(),
                        },
                    );
                }
                // Boundary creation at every node still available here.
                for (i, (n, cls)) in blocks.iter().enumerate() {
                    if *n < 2 {
                        continue;
                    }
                    for new_id in &family.top_node_ids {
                        if ids.iter().any(|d| d == new_id) {
                            continue;
                        }
                        let nd = family.node_for(level, &ids, new_id)?;
                        let pulled = nd.pullback.apply(&nd.restrict.apply(cls)?)?;
                        if pulled.is_zero() {
                            continue;
                        }
                        let new_base = nd.base_pullback.apply(base)?.mul(&pulled)?;
                        if new_base.is_zero() {
                            continue;
                        }
                        let mut rest: Vec<(u32, ClassExpr)> = Vec::new();
                        for (p, (np, cp)) in blocks.iter().enumerate() {
                            if p == i {
                                continue;
                            }
                            rest.push((*np, nd.restrict.apply(cp)?));
                        }
                        for j in 1..*n {
                            let coeff = c * Rat::new(
                                (j as i64 * (*n - j) as i64 * *n as i64).into(),
                                2.into(),
                            );
                            out.push(
                                coeff,
                                Bracket::Node {
                                    kind: NodeKind::Phi,
                                    n: *n,
                                    j,
                                    node: new_id.clone(),
                                    payload: Box::new(BracketSum::single(
                                        Rat::one(),
                                        Bracket::Poly {
                                            blocks: rest.clone(),
                                            base: new_base.clone(),
                                        },
                                    )),
                                },
                            );
                        }
                    }
                }
            }
            Bracket::Node {
                kind,
                n,
                j,
                node,
                payload,
            } => {
                if !(1 <= *j && *j < *n) {
                    continue; // trivial node class
                }
                let nd = family.node_for(level, &ids, node)?;
                match kind {
                    NodeKind::Phi => {
                        // Gamma.F[y] = -Q[y] - F[e^n_{j+1}.y]
                        out.push(
                            -c.clone(),
                            Bracket::Node {
                                kind: NodeKind::Chi,
                                n: *n,
                                j: *j,
                                node: node.clone(),
                                payload: payload.clone(),
                            },
                        );
                        let inner = e_at(family, chain, &nd, *n, j + 1, payload)?;
                        out.push(
                            -c.clone(),
                            Bracket::Node {
                                kind: NodeKind::Phi,
                                n: *n,
                                j: *j,
                                node: node.clone(),
                                payload: Box::new(inner),
                            },
                        );
                    }
                    NodeKind::Chi => {
                        // Gamma.Q[y] = -Q[e^n_j.y]
                        let inner = e_at(family, chain, &nd, *n, *j, payload)?;
                        out.push(
                            -c.clone(),
                            Bracket::Node {
                                kind: NodeKind::Chi,
                                n: *n,
                                j: *j,
                                node: node.clone(),
                                payload: Box::new(inner),
                            },
                        );
                    }
                }
            }
        }
    }
    Ok(out)
}

/// The discriminant on bracket classes of the family itself.
pub fn gamma_bracket(family: &FamilyModel, x: &BracketSum) -> Result<BracketSum> {
    gamma_at(family, &[], x)
}

/// One collected path: node wrappers from outermost to innermost, then the
/// terminal polyblock.
struct Path {
    coeff: Rat,
    factors: Vec<NodeFactor>,
    blocks: Vec<(u32, ClassExpr)>,
    base: ClassExpr,
}

fn collect_paths(
    family: &FamilyModel,
    chain: &mut Vec<Arc<NodeData>>,
    factors: &mut Vec<NodeFactor>,
    coeff: &Rat,
    x: &BracketSum,
    out: &mut Vec<Path>,
) -> Result<()> {
    for (c, br) in &x.terms {
        match br {
            Bracket::Poly { blocks, base } => {
                out.push(Path {
                    coeff: coeff * c,
                    factors: factors.clone(),
                    blocks: blocks.clone(),
                    base: base.clone(),
                });
            }
            Bracket::Node {
                kind,
                n,
                j,
                node,
                payload,
            } => {
                if !(1 <= *j && *j < *n) {
                    continue; // trivial node class
                }
                if chain.iter().any(|d| d.id == *node) {
                    continue; // repeated node, zero by the distinct-node rule
                }
                let nd = family.node_for(level_of(family, chain), &chain_ids(chain), node)?;
                chain.push(nd);
                factors.push(NodeFactor {
                    node: node.clone(),
                    kind: *kind,
                    n: *n,
                    j: *j,
                });
                collect_paths(family, chain, factors, &(coeff * c), payload, out)?;
                chain.pop();
                factors.pop();
            }
        }
    }
    Ok(())
}

/// Flatten one path by the product transfer: the direct monomial minus the
/// r-weighted corrections, one chi factor and one block consumed per
/// correction term, in a single pass.
///
/// A single pass (rather than re-correcting the corrected terms) is what
/// makes the bracket-to-product conversion exactly one application of
/// (I - S); iterating would disagree with the nilpotent change of variable
/// on classes carrying several section factors.
fn flatten_path(
    family: &FamilyModel,
    rt: &RTable,
    factors: &[NodeFactor],
    blocks: &[(u32, ClassExpr)],
    base: &ClassExpr,
    coeff: &Rat,
) -> Result<TautElement> {
    let raw = RawMonomial {
        scalar: coeff.clone(),
        factors: factors.to_vec(),
        blocks: blocks.to_vec(),
        base: Some(base.clone()),
    };
    let mut out = normalize(family, &raw)?;

    let ids: Vec<String> = {
        let mut v: Vec<String> = factors.iter().map(|f| f.node.clone()).collect();
        v.sort();
        v
    };
    let stratum = family.stratum(&ids)?;
    for (fi, f) in factors.iter().enumerate() {
        if f.kind != NodeKind::Chi {
            continue;
        }
        let node = stratum.node(&f.node)?;
        for (bi, (m, cls)) in blocks.iter().enumerate() {
            let pulled = node.pullback.apply(&stratum.localize(cls)?)?;
            if pulled.is_zero() {
                continue;
            }
            let new_base = base.mul(&pulled)?;
            if new_base.is_zero() {
                continue;
            }
            let mut rest: Vec<(u32, ClassExpr)> = blocks.to_vec();
            rest.remove(bi);
            for (k, r) in rt.transfer_row(f.n, f.j, *m)? {
                let mut nf = factors.to_vec();
                nf[fi] = NodeFactor {
                    node: f.node.clone(),
                    kind: NodeKind::Phi,
                    n: f.n + m,
                    j: k,
                };
                let corr = normalize(
                    family,
                    &RawMonomial {
                        scalar: coeff * &r,
                        factors: nf,
                        blocks: rest.clone(),
                        base: Some(new_base.clone()),
                    },
                )?;
                out = out.sub(&corr);
            }
        }
    }
    Ok(out)
}

/// Convert a bracket class to the standard model.
pub fn to_flat(family: &FamilyModel, rt: &RTable, x: &BracketSum) -> Result<TautElement> {
    let mut paths = Vec::new();
    collect_paths(
        family,
        &mut Vec::new(),
        &mut Vec::new(),
        &Rat::one(),
        x,
        &mut paths,
    )?;
    let mut out = TautElement::zero();
    for p in &paths {
        out = out.add(&flatten_path(
            family, rt, &p.factors, &p.blocks, &p.base, &p.coeff,
        )?);
    }
    Ok(out)
}

/// Inverse of `to_flat` on canonical monomials: nest the node factors in
/// canonical order and add back the r-weighted corrections. The all-plus
/// recursion is the full Neumann expansion (I - S)^{-1}, the exact inverse
/// of the single correction pass in `flatten_path`.
pub fn unflatten(family: &FamilyModel, m: &TautMonomial) -> Result<BracketSum> {
    let stratum = family.stratum(&m.stratum_ids())?;
    let blocks: Vec<(u32, ClassExpr)> = m
        .blocks
        .iter()
        .map(|b| {
            Ok((
                b.n,
                ClassExpr::basis(&stratum.fiber, stratum.fiber.sym_index(&b.sym)?),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let base = crate::taut::base_class(&stratum, &m.base)?;
    unflatten_parts(family, &m.factors, &blocks, &base, &Rat::one())
}

fn unflatten_parts(
    family: &FamilyModel,
    factors: &[NodeFactor],
    blocks: &[(u32, ClassExpr)],
    base: &ClassExpr,
    coeff: &Rat,
) -> Result<BracketSum> {
    // Direct nesting: wrappers in canonical factor order, terminal polyblock.
    let terminal = Bracket::Poly {
        blocks: blocks.to_vec(),
        base: base.clone(),
    };
    let nested = factors
        .iter()
        .rev()
        .fold(terminal, |inner, f| Bracket::Node {
            kind: f.kind,
            n: f.n,
            j: f.j,
            node: f.node.clone(),
            payload: Box::new(BracketSum::single(Rat::one(), inner)),
        });
    let mut out = BracketSum::single(coeff.clone(), nested);

    let ids: Vec<String> = {
        let mut v: Vec<String> = factors.iter().map(|f| f.node.clone()).collect();
        v.sort();
        v
    };
    let stratum = family.stratum(&ids)?;
    let rt_needed: u32 =
        factors.iter().map(|f| f.n).sum::<u32>() + blocks.iter().map(|(n, _)| n).sum::<u32>();
    let rt = RTable::with_lmax(rt_needed.max(2))?;
    for (fi, f) in factors.iter().enumerate() {
        if f.kind != NodeKind::Chi {
            continue;
        }
        let node = stratum.node(&f.node)?;
        for (bi, (mw, cls)) in blocks.iter().enumerate() {
            let pulled = node.pullback.apply(&stratum.localize(cls)?)?;
            if pulled.is_zero() {
                continue;
            }
            let new_base = base.mul(&pulled)?;
            if new_base.is_zero() {
                continue;
            }
            let mut rest: Vec<(u32, ClassExpr)> = blocks.to_vec();
            rest.remove(bi);
            for (k, r) in rt.transfer_row(f.n, f.j, *mw)? {
                let mut nf = factors.to_vec();
                nf[fi] = NodeFactor {
                    node: f.node.clone(),
                    kind: NodeKind::Phi,
                    n: f.n + mw,
                    j: k,
                };
                let corr = unflatten_parts(family, &nf, &rest, &new_base, &(coeff * &r))?;
                out.extend(corr);
            }
        }
    }
    Ok(out)
}

/// Integral of a bracket class: scroll-rooted terms vanish outright, the rest
/// integrate through the flat form.
pub fn oracle_integrate(family: &FamilyModel, rt: &RTable, x: &BracketSum) -> Result<Rat> {
    let mut total = Rat::zero();
    for (c, br) in &x.terms {
        if contains_phi(br) {
            continue;
        }
        let flat = to_flat(family, rt, &BracketSum::single(c.clone(), br.clone()))?;
        total += crate::evolve::integrate_element(family, &flat)?;
    }
    Ok(total)
}

fn contains_phi(b: &Bracket) -> bool {
    match b {
        Bracket::Poly { .. } => false,
        Bracket::Node { kind, payload, .. } => {
            *kind == NodeKind::Phi || payload.terms.iter().any(|(_, t)| contains_phi(t))
        }
    }
}

/// Bracket form of a polyblock over the family itself.
pub fn polyblock(family: &FamilyModel, blocks: Vec<(u32, ClassExpr)>) -> Bracket {
    Bracket::Poly {
        blocks,
        base: ClassExpr::unit(family.base()),
    }
}
