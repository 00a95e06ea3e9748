//! Operator machinery on the standard model: the classical discriminant
//! part, interior multiplications, the node-transfer operator S and its
//! Neumann inverse, the first-order node operators, and the conjugated
//! discriminant.
//!
//! Every operator here is Q-linear and weight-preserving except the
//! block-star operator, which raises weight by its block size.

use std::sync::Arc;

use num_traits::{One, Zero};

use crate::algebra::ClassExpr;
use crate::error::{HmError, Result};
use crate::family::{FamilyModel, Stratum};
use crate::rational::{binom2, rat_int, Rat};
use crate::rtable::RTable;
use crate::taut::{normalize, Block, NodeFactor, NodeKind, RawMonomial, TautElement, TautMonomial};

type OpFn<'f> = Box<dyn Fn(&TautElement) -> Result<TautElement> + 'f>;

/// A Q-linear operator with a descriptive tag, for property tests and suites.
pub struct LinearOp<'f> {
    pub tag: String,
    func: OpFn<'f>,
}

impl<'f> LinearOp<'f> {
    pub fn new<F>(tag: &str, f: F) -> LinearOp<'f>
    where
        F: Fn(&TautElement) -> Result<TautElement> + 'f,
    {
        LinearOp {
            tag: tag.to_string(),
            func: Box::new(f),
        }
    }

    pub fn apply(&self, x: &TautElement) -> Result<TautElement> {
        (self.func)(x)
    }
}

fn stratum_of(family: &FamilyModel, m: &TautMonomial) -> Result<Arc<Stratum>> {
    family.stratum(&m.stratum_ids())
}

/// Rebuild a monomial with the block at `pos` replaced by weight `new_n` and
/// coefficient class `cls`, scaled by `coeff`.
fn replace_block(
    stratum: &Stratum,
    m: &TautMonomial,
    pos: usize,
    new_n: u32,
    cls: &ClassExpr,
    coeff: &Rat,
) -> TautElement {
    let mut out = TautElement::zero();
    for (&i, c) in &cls.terms {
        let mut blocks = m.blocks.clone();
        blocks[pos] = Block {
            n: new_n,
            sym: stratum.fiber.sym(i).to_string(),
        };
        out.add_term(
            TautMonomial::build(m.factors.clone(), blocks, m.base.clone(), stratum),
            coeff * c,
        );
    }
    out
}

/// Rebuild a monomial with blocks at `pos1 < pos2` merged into one block of
/// weight `new_n` with coefficient class `cls`.
fn merge_blocks(
    stratum: &Stratum,
    m: &TautMonomial,
    pos1: usize,
    pos2: usize,
    new_n: u32,
    cls: &ClassExpr,
    coeff: &Rat,
) -> TautElement {
    let mut out = TautElement::zero();
    for (&i, c) in &cls.terms {
        let mut blocks = m.blocks.clone();
        blocks.remove(pos2);
        blocks.remove(pos1);
        blocks.push(Block {
            n: new_n,
            sym: stratum.fiber.sym(i).to_string(),
        });
        out.add_term(
            TautMonomial::build(m.factors.clone(), blocks, m.base.clone(), stratum),
            coeff * c,
        );
    }
    out
}

/// Multiply the base class by `factor` (a class of the stratum base ring).
fn mult_base(
    stratum: &Stratum,
    m: &TautMonomial,
    factor: &ClassExpr,
    coeff: &Rat,
) -> Result<TautElement> {
    let base = crate::taut::base_class(stratum, &m.base)?.mul(factor)?;
    let mut out = TautElement::zero();
    for (&i, c) in &base.terms {
        let sym = if i == stratum.base.unit_index() {
            None
        } else {
            Some(stratum.base.sym(i).to_string())
        };
        out.add_term(
            TautMonomial::build(m.factors.clone(), m.blocks.clone(), sym, stratum),
            coeff * c,
        );
    }
    Ok(out)
}

fn fiber_basis(stratum: &Stratum, sym: &str) -> Result<ClassExpr> {
    Ok(ClassExpr::basis(
        &stratum.fiber,
        stratum.fiber.sym_index(sym)?,
    ))
}

/// Classical part of the discriminant: over each unordered pair of block
/// positions contribute n n' t_{n+n'}[a a'] in place of the pair, minus the
/// diagonal terms C(n,2) t_n[omega_s a], where omega_s is the restriction of
/// the family's omega to the monomial's stratum. Node factors are constants.
pub fn gamma0(family: &FamilyModel, x: &TautElement) -> Result<TautElement> {
    x.map_terms(|m, c| {
        let stratum = stratum_of(family, m)?;
        let mut out = TautElement::zero();
        for i in 0..m.blocks.len() {
            for j in (i + 1)..m.blocks.len() {
                let (bi, bj) = (&m.blocks[i], &m.blocks[j]);
                let prod = fiber_basis(&stratum, &bi.sym)?.mul(&fiber_basis(&stratum, &bj.sym)?)?;
                let coeff = c * rat_int((bi.n * bj.n) as i64);
                out = out.add(&merge_blocks(&stratum, m, i, j, bi.n + bj.n, &prod, &coeff));
            }
        }
        for (i, b) in m.blocks.iter().enumerate() {
            let coef2 = binom2(b.n);
            if coef2.is_zero() {
                continue;
            }
            let prod = stratum.omega.mul(&fiber_basis(&stratum, &b.sym)?)?;
            out = out.add(&replace_block(&stratum, m, i, b.n, &prod, &(-c * coef2)));
        }
        Ok(out)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeltaKind {
    First,
    Second,
}

/// The derivations delta(a) = sum n t_n a d/dt_n and
/// delta2(a) = sum C(n,2) t_n a d/dt_n.
pub fn delta_op(
    family: &FamilyModel,
    kind: DeltaKind,
    alpha: &ClassExpr,
    x: &TautElement,
) -> Result<TautElement> {
    x.map_terms(|m, c| {
        let stratum = stratum_of(family, m)?;
        let local = stratum.localize(alpha)?;
        let mut out = TautElement::zero();
        for (i, b) in m.blocks.iter().enumerate() {
            let factor = match kind {
                DeltaKind::First => rat_int(b.n as i64),
                DeltaKind::Second => binom2(b.n),
            };
            if factor.is_zero() {
                continue;
            }
            let prod = local.mul(&fiber_basis(&stratum, &b.sym)?)?;
            out = out.add(&replace_block(&stratum, m, i, b.n, &prod, &(c * factor)));
        }
        Ok(out)
    })
}

/// The first-order node operator
/// delta^n_j(theta) = -(n-j+1) delta(theta_x) - j delta(theta_y)
///                    + C(n-j+1,2) psi_x(theta) + C(j,2) psi_y(theta).
pub fn delta_nj(
    family: &FamilyModel,
    theta: &str,
    n: u32,
    j: u32,
    x: &TautElement,
) -> Result<TautElement> {
    if j == 0 || j > n {
        return Err(HmError::Validation(format!(
            "delta^{n}_{j}: index must satisfy 1 <= j <= n"
        )));
    }
    x.map_terms(|m, c| {
        let stratum = stratum_of(family, m)?;
        let node = stratum.node(theta)?;
        let mut out = TautElement::zero();
        let coefs = [
            (rat_int(-((n - j + 1) as i64)), &node.theta_x),
            (rat_int(-(j as i64)), &node.theta_y),
        ];
        for (factor, theta_cls) in coefs {
            for (i, b) in m.blocks.iter().enumerate() {
                let prod = theta_cls.mul(&fiber_basis(&stratum, &b.sym)?)?;
                let coeff = c * &factor * rat_int(b.n as i64);
                out = out.add(&replace_block(&stratum, m, i, b.n, &prod, &coeff));
            }
        }
        let psi = node
            .psi_x
            .scale(&binom2(n - j + 1))
            .add(&node.psi_y.scale(&binom2(j)))?;
        if !psi.is_zero() {
            out = out.add(&mult_base(&stratum, m, &psi, c)?);
        }
        Ok(out)
    })
}

/// Interior multiplication by a class of the total-space ring: a derivation
/// over blocks with factor n, plus the section pullback term at every node
/// factor.
pub fn interior_mult(
    family: &FamilyModel,
    alpha: &ClassExpr,
    x: &TautElement,
) -> Result<TautElement> {
    x.map_terms(|m, c| {
        let stratum = stratum_of(family, m)?;
        let local = stratum.localize(alpha)?;
        let mut out = TautElement::zero();
        for (i, b) in m.blocks.iter().enumerate() {
            let prod = local.mul(&fiber_basis(&stratum, &b.sym)?)?;
            out = out.add(&replace_block(
                &stratum,
                m,
                i,
                b.n,
                &prod,
                &(c * rat_int(b.n as i64)),
            ));
        }
        for f in &m.factors {
            let node = stratum.node(&f.node)?;
            let pulled = node.pullback.apply(&local)?;
            if !pulled.is_zero() {
                out = out.add(&mult_base(&stratum, m, &pulled, c)?);
            }
        }
        Ok(out)
    })
}

/// The transfer operator S: each `(chi^n_j(theta), t_m[s])` pair contributes
/// theta*(s) times chi replaced by sum_k r(n,j)^k_{n+m} phi^{n+m}_k(theta),
/// with the block removed.
pub fn s_apply(family: &FamilyModel, rt: &RTable, x: &TautElement) -> Result<TautElement> {
    x.map_terms(|m, c| {
        let stratum = stratum_of(family, m)?;
        let mut out = TautElement::zero();
        for (fi, f) in m.factors.iter().enumerate() {
            if f.kind != NodeKind::Chi {
                continue;
            }
            let node = stratum.node(&f.node)?;
            for (bi, b) in m.blocks.iter().enumerate() {
                let pulled = node.pullback.apply(&fiber_basis(&stratum, &b.sym)?)?;
                if pulled.is_zero() {
                    continue;
                }
                let row = rt.transfer_row(f.n, f.j, b.n)?;
                for (k, r) in &row {
                    let mut factors = m.factors.clone();
                    factors[fi] = NodeFactor {
                        node: f.node.clone(),
                        kind: NodeKind::Phi,
                        n: f.n + b.n,
                        j: *k,
                    };
                    let mut blocks = m.blocks.clone();
                    blocks.remove(bi);
                    let stripped = TautMonomial::build(factors, blocks, m.base.clone(), &stratum);
                    for (mm, cc) in mult_base(&stratum, &stripped, &pulled, &(c * r))?.terms {
                        out.add_term(mm, cc);
                    }
                }
            }
        }
        Ok(out)
    })
}

/// Neumann sum (I - S)^{-1} = I + S + S^2 + ...; terminates because S
/// strictly decreases the chi-count.
pub fn neumann_invert(family: &FamilyModel, rt: &RTable, x: &TautElement) -> Result<TautElement> {
    let mut acc = x.clone();
    let mut cur = x.clone();
    let bound = x.terms.keys().map(|m| m.chi_count()).max().unwrap_or(0);
    for _ in 0..=bound {
        cur = s_apply(family, rt, &cur)?;
        if cur.is_zero() {
            return Ok(acc);
        }
        acc = acc.add(&cur);
    }
    if !s_apply(family, rt, &cur)?.is_zero() {
        return Err(HmError::Validation(
            "S failed to vanish within the chi-count bound".into(),
        ));
    }
    Ok(acc)
}

/// (I - S) x.
pub fn i_minus_s(family: &FamilyModel, rt: &RTable, x: &TautElement) -> Result<TautElement> {
    Ok(x.sub(&s_apply(family, rt, x)?))
}

/// The conjugated discriminant operator.
///
/// Per monomial, four parts: the classical part with stratum-restricted
/// omega; node creation out of every block of weight at least 2; the phi to
/// chi conversion; and for every node factor the first-order correction
/// -(delta^n_{j+1 or j}(theta) - delta2(theta_x + theta_y)) on the rest.
pub fn gamma_tilde(family: &FamilyModel, x: &TautElement) -> Result<TautElement> {
    x.map_terms(|m, c| {
        let stratum = stratum_of(family, m)?;
        let single = TautElement::from_monomial(m.clone(), c.clone());
        let mut out = gamma0(family, &single)?;

        // Node creation: consume a block t_n[a], emit phi^n_j at a new node.
        for (bi, b) in m.blocks.iter().enumerate() {
            if b.n < 2 {
                continue;
            }
            for creation in &stratum.creations {
                let maps = creation.maps.as_ref().map_err(|e| {
                    HmError::Unconfigured(format!(
                        "node creation at {} from stratum ({}) unavailable: {e}",
                        creation.node,
                        stratum.nodes.join(",")
                    ))
                })?;
                family.creation_target(maps)?;
                let consumed = fiber_basis(&stratum, &b.sym)?;
                let pulled = maps.pullback_new.apply(&consumed)?;
                if pulled.is_zero() {
                    continue;
                }
                let old_base = crate::taut::base_class(&stratum, &m.base)?;
                let new_base = maps.extend_base.apply(&old_base)?.mul(&pulled)?;
                if new_base.is_zero() {
                    continue;
                }
                let mut rest_blocks: Vec<(u32, ClassExpr)> = Vec::new();
                for (oi, ob) in m.blocks.iter().enumerate() {
                    if oi == bi {
                        continue;
                    }
                    rest_blocks.push((
                        ob.n,
                        maps.extend_fiber.apply(&fiber_basis(&stratum, &ob.sym)?)?,
                    ));
                }
                for j in 1..b.n {
                    let coeff =
                        c * Rat::new((j as i64 * (b.n - j) as i64 * b.n as i64).into(), 2.into());
                    let mut factors = m.factors.clone();
                    factors.push(NodeFactor {
                        node: creation.node.clone(),
                        kind: NodeKind::Phi,
                        n: b.n,
                        j,
                    });
                    let raw = RawMonomial {
                        scalar: coeff,
                        factors,
                        blocks: rest_blocks.clone(),
                        base: Some(new_base.clone()),
                    };
                    out = out.add(&normalize(family, &raw)?);
                }
            }
        }

        // phi -> chi conversion and first-order corrections.
        for (fi, f) in m.factors.iter().enumerate() {
            if f.kind == NodeKind::Phi {
                let mut factors = m.factors.clone();
                factors[fi] = NodeFactor {
                    kind: NodeKind::Chi,
                    ..f.clone()
                };
                out.add_term(
                    TautMonomial::build(factors, m.blocks.clone(), m.base.clone(), &stratum),
                    -c.clone(),
                );
            }
            let dj = match f.kind {
                NodeKind::Phi => f.j + 1,
                NodeKind::Chi => f.j,
            };
            out = out.add(&delta_nj(family, &f.node, f.n, dj, &single)?.scale(&-Rat::one()));
            let node = stratum.node(&f.node)?;
            let theta_sum = node.theta_x.add(&node.theta_y)?;
            out = out.add(&delta_op(family, DeltaKind::Second, &theta_sum, &single)?);
        }
        Ok(out)
    })
}

/// Star-multiplication by a block `t_m[s]` in conjugated coordinates:
/// `t_m[s] x` plus, for each chi^n_j(theta) factor, theta*(s) times chi
/// replaced by the transfer row sum_k r(n,j)^k_{n+m} phi^{n+m}_k(theta).
pub fn tilde_star_block(
    family: &FamilyModel,
    rt: &RTable,
    m_blk: u32,
    s: &ClassExpr,
    x: &TautElement,
) -> Result<TautElement> {
    if m_blk == 0 {
        return Err(HmError::Validation("block weight must be positive".into()));
    }
    x.map_terms(|m, c| {
        let stratum = stratum_of(family, m)?;
        let local = stratum.localize(s)?;
        let mut raw_blocks: Vec<(u32, ClassExpr)> = m
            .blocks
            .iter()
            .map(|b| Ok((b.n, fiber_basis(&stratum, &b.sym)?)))
            .collect::<Result<Vec<_>>>()?;
        raw_blocks.push((m_blk, local.clone()));
        let raw = RawMonomial {
            scalar: c.clone(),
            factors: m.factors.clone(),
            blocks: raw_blocks,
            base: Some(crate::taut::base_class(&stratum, &m.base)?),
        };
        let mut out = normalize(family, &raw)?;

        for (fi, f) in m.factors.iter().enumerate() {
            if f.kind != NodeKind::Chi {
                continue;
            }
            let node = stratum.node(&f.node)?;
            let pulled = node.pullback.apply(&local)?;
            if pulled.is_zero() {
                continue;
            }
            let row = rt.transfer_row(f.n, f.j, m_blk)?;
            for (k, r) in &row {
                let mut factors = m.factors.clone();
                factors[fi] = NodeFactor {
                    node: f.node.clone(),
                    kind: NodeKind::Phi,
                    n: f.n + m_blk,
                    j: *k,
                };
                let stripped =
                    TautMonomial::build(factors, m.blocks.clone(), m.base.clone(), &stratum);
                for (mm, cc) in mult_base(&stratum, &stripped, &pulled, &(c * r))?.terms {
                    out.add_term(mm, cc);
                }
            }
        }
        Ok(out)
    })
}

/// Named operator constructors for property suites.
pub fn gamma_tilde_op(family: &FamilyModel) -> LinearOp<'_> {
    LinearOp::new("gamma_tilde", move |x| gamma_tilde(family, x))
}

pub fn gamma0_op(family: &FamilyModel) -> LinearOp<'_> {
    LinearOp::new("gamma0", move |x| gamma0(family, x))
}

pub fn s_op<'f>(family: &'f FamilyModel, rt: &'f RTable) -> LinearOp<'f> {
    LinearOp::new("S", move |x| s_apply(family, rt, x))
}
