//! Generated multi-node stratum data.
//!
//! When a configuration does not nest a node below another explicitly, the
//! pair stratum is synthesized from the two single-node declarations: the
//! base ring is the plain tensor product of the two boundary base rings, and
//! the fiber ring is the tensor product of the two boundary total rings over
//! the family's total ring (computed by exact row reduction on the relation
//! ideal). Section pullbacks on the synthesized fiber are only defined where
//! degree reasoning forces them (unit to unit, everything above the target's
//! top degree to zero, the slot of the pulled-back node through its configured
//! map); anything else stays unconfigured and errors when an operation needs
//! it, with a message asking for explicit nesting.
//!
//! Only depth-two synthesis is supported; deeper strata must be configured.

use std::collections::BTreeMap;

use num_traits::Zero;

use crate::algebra::{Algebra, ClassExpr, LinearMap, SparseVec};
use crate::error::{HmError, Result};
use crate::family::{FamilyLevel, FamilyModel, NodeData};
use crate::rational::{rat_int, Rat};

/// Sparse exact RREF over a flat column space, tracking pivot columns.
struct Rref {
    /// Rows in reduced echelon form, keyed by their pivot column.
    rows: BTreeMap<usize, BTreeMap<usize, Rat>>,
}

impl Rref {
    fn new() -> Rref {
        Rref {
            rows: BTreeMap::new(),
        }
    }

    fn reduce(&self, mut v: BTreeMap<usize, Rat>) -> BTreeMap<usize, Rat> {
        for (&piv, row) in &self.rows {
            if let Some(c) = v.get(&piv).cloned() {
                if c.is_zero() {
                    v.remove(&piv);
                    continue;
                }
                for (&j, rc) in row {
                    let entry = v.entry(j).or_insert_with(Rat::zero);
                    *entry -= &c * rc;
                    if entry.is_zero() {
                        v.remove(&j);
                    }
                }
                v.remove(&piv);
            }
        }
        v
    }

    fn insert(&mut self, v: BTreeMap<usize, Rat>) {
        let mut v = self.reduce(v);
        let Some((&piv, lead)) = v.iter().next() else {
            return;
        };
        let lead = lead.clone();
        for c in v.values_mut() {
            *c /= &lead;
        }
        v.remove(&piv);
        // Back-substitute into existing rows so every pivot column is unique.
        for row in self.rows.values_mut() {
            if let Some(c) = row.remove(&piv) {
                for (&j, rc) in &v {
                    let entry = row.entry(j).or_insert_with(Rat::zero);
                    *entry += &c * rc;
                    if entry.is_zero() {
                        row.remove(&j);
                    }
                }
            }
        }
        self.rows.insert(piv, v);
    }

    fn is_pivot(&self, col: usize) -> bool {
        self.rows.contains_key(&col)
    }
}

fn pair_sym(a: &str, b: &str) -> String {
    format!("{a}|{b}")
}

/// Plain tensor product of two base rings, with the product functional.
fn tensor_base(name: String, lo: &Algebra, hi: &Algebra) -> Result<Algebra> {
    let mut basis = Vec::new();
    for i in 0..lo.dim() {
        for j in 0..hi.dim() {
            basis.push((pair_sym(lo.sym(i), hi.sym(j)), lo.deg(i) + hi.deg(j)));
        }
    }
    let expand = |v: &SparseVec, w: &SparseVec| -> Vec<(Rat, String)> {
        let mut out = Vec::new();
        for (&i, a) in v {
            for (&j, b) in w {
                out.push((a * b, pair_sym(lo.sym(i), hi.sym(j))));
            }
        }
        out
    };
    let mut mult = Vec::new();
    for i1 in 0..lo.dim() {
        for j1 in 0..hi.dim() {
            for i2 in 0..lo.dim() {
                for j2 in 0..hi.dim() {
                    let val = expand(&lo.mul_basis(i1, i2), &hi.mul_basis(j1, j2));
                    mult.push((
                        (
                            pair_sym(lo.sym(i1), hi.sym(j1)),
                            pair_sym(lo.sym(i2), hi.sym(j2)),
                        ),
                        val,
                    ));
                }
            }
        }
    }
    let unit = pair_sym(lo.sym(lo.unit_index()), hi.sym(hi.unit_index()));
    let integral = if lo.has_integral() && hi.has_integral() {
        let mut m = BTreeMap::new();
        for i in 0..lo.dim() {
            for j in 0..hi.dim() {
                let v = lo.integral_basis(i) * hi.integral_basis(j);
                if !v.is_zero() {
                    m.insert(pair_sym(lo.sym(i), hi.sym(j)), v);
                }
            }
        }
        Some(m)
    } else {
        None
    };
    Algebra::new(name, basis, mult, unit, BTreeMap::new(), integral)
}

struct FiberQuotient {
    algebra: Algebra,
    /// Flat pure-tensor index (i * hi_dim + j) of each kept basis symbol.
    kept: Vec<usize>,
    rref: Rref,
}

/// Express a pure-tensor combination in the kept quotient basis.
fn project(
    rref: &Rref,
    kept: &[usize],
    alg: &std::sync::Arc<Algebra>,
    v: BTreeMap<usize, Rat>,
) -> ClassExpr {
    let reduced = rref.reduce(v);
    let mut terms = SparseVec::new();
    for (flat, c) in reduced {
        let pos = kept
            .iter()
            .position(|&k| k == flat)
            .expect("reduced vector supported on kept columns");
        terms.insert(pos, c);
    }
    ClassExpr::from_terms(alg, terms)
}

/// Tensor product of the two boundary total rings over the ambient total ring.
fn tensor_fiber(
    name: String,
    ambient: &Algebra,
    lo: &NodeData,
    hi: &NodeData,
) -> Result<FiberQuotient> {
    let flo = &lo.boundary.total;
    let fhi = &hi.boundary.total;
    let (dl, dh) = (flo.dim(), fhi.dim());
    let flat = |i: usize, j: usize| i * dh + j;

    let mut rref = Rref::new();
    for a in 0..ambient.dim() {
        if a == ambient.unit_index() {
            continue;
        }
        let ra = lo.restrict.image_of(a)?;
        let rb = hi.restrict.image_of(a)?;
        for i in 0..dl {
            for j in 0..dh {
                // restrict_lo(a)*x (x) y  -  x (x) restrict_hi(a)*y
                let mut v: BTreeMap<usize, Rat> = BTreeMap::new();
                for (&k, c) in &ClassExpr::basis(flo, i).mul(ra)?.terms {
                    let e = v.entry(flat(k, j)).or_insert_with(Rat::zero);
                    *e += c;
                }
                for (&k, c) in &ClassExpr::basis(fhi, j).mul(rb)?.terms {
                    let e = v.entry(flat(i, k)).or_insert_with(Rat::zero);
                    *e -= c;
                }
                v.retain(|_, c| !c.is_zero());
                rref.insert(v);
            }
        }
    }

    let mut kept = Vec::new();
    for i in 0..dl {
        for j in 0..dh {
            if !rref.is_pivot(flat(i, j)) {
                kept.push(flat(i, j));
            }
        }
    }
    let unit_flat = flat(flo.unit_index(), fhi.unit_index());
    if !kept.contains(&unit_flat) {
        return Err(HmError::Validation(format!(
            "synthesized fiber {name}: unit was eliminated by the relation ideal"
        )));
    }

    let sym_of = |f: usize| pair_sym(flo.sym(f / dh), fhi.sym(f % dh));
    let deg_of = |f: usize| flo.deg(f / dh) + fhi.deg(f % dh);
    let basis: Vec<(String, u32)> = kept.iter().map(|&f| (sym_of(f), deg_of(f))).collect();

    // Multiplication table on kept representatives, reduced mod the ideal.
    let mut mult = Vec::new();
    for (p, &f1) in kept.iter().enumerate() {
        for &f2 in kept.iter().skip(p) {
            let (i1, j1) = (f1 / dh, f1 % dh);
            let (i2, j2) = (f2 / dh, f2 % dh);
            let mut v: BTreeMap<usize, Rat> = BTreeMap::new();
            for (&k1, c1) in &flo.mul_basis(i1, i2) {
                for (&k2, c2) in &fhi.mul_basis(j1, j2) {
                    let e = v.entry(flat(k1, k2)).or_insert_with(Rat::zero);
                    *e += c1 * c2;
                }
            }
            v.retain(|_, c| !c.is_zero());
            let reduced = rref.reduce(v);
            let val: Vec<(Rat, String)> =
                reduced.into_iter().map(|(f, c)| (c, sym_of(f))).collect();
            mult.push(((sym_of(f1), sym_of(f2)), val));
        }
    }

    let algebra = Algebra::new(name, basis, mult, sym_of(unit_flat), BTreeMap::new(), None)?;
    Ok(FiberQuotient {
        algebra,
        kept,
        rref,
    })
}

/// Build node data for `new_id` below the depth-one chain `(under_id)`.
pub fn synthesize_nested(family: &FamilyModel, under_id: &str, new_id: &str) -> Result<NodeData> {
    let under = family
        .root
        .configured_node(under_id)
        .ok_or_else(|| HmError::Unconfigured(format!("unknown node id {under_id:?}")))?
        .clone();
    let new_top = family
        .root
        .configured_node(new_id)
        .ok_or_else(|| HmError::Unconfigured(format!("unknown node id {new_id:?}")))?
        .clone();

    // Canonical slot order is by sorted node id, independent of which chain
    // triggered the synthesis.
    let (lo, hi) = if under_id < new_id {
        (under.clone(), new_top.clone())
    } else {
        (new_top.clone(), under.clone())
    };
    let set_name = {
        let mut ids = [lo.id.clone(), hi.id.clone()];
        ids.sort();
        ids.join(",")
    };

    let base = family.intern(tensor_base(
        format!("gen:A_B({set_name})"),
        &lo.boundary.base,
        &hi.boundary.base,
    )?)?;
    let FiberQuotient {
        algebra: fiber_alg,
        kept,
        rref,
    } = tensor_fiber(format!("gen:A({set_name})"), &family.root.total, &lo, &hi)?;
    let fiber = family.intern(fiber_alg)?;

    let (flo, fhi) = (&lo.boundary.total, &hi.boundary.total);
    let (blo, bhi) = (&lo.boundary.base, &hi.boundary.base);
    let dh = fhi.dim();
    let flat = |i: usize, j: usize| i * dh + j;
    let new_in_lo_slot = new_id == lo.id;

    // Slot insertion of a single-node fiber class into the quotient.
    let embed_lo = |x: &ClassExpr| -> ClassExpr {
        let mut v = BTreeMap::new();
        for (&i, c) in &x.terms {
            v.insert(flat(i, fhi.unit_index()), c.clone());
        }
        project(&rref, &kept, &fiber, v)
    };
    let embed_hi = |y: &ClassExpr| -> ClassExpr {
        let mut v = BTreeMap::new();
        for (&j, c) in &y.terms {
            v.insert(flat(flo.unit_index(), j), c.clone());
        }
        project(&rref, &kept, &fiber, v)
    };
    let embed_base_lo = |x: &ClassExpr| -> Result<ClassExpr> {
        let mut out = ClassExpr::zero(&base);
        for (&i, c) in &x.terms {
            let sym = pair_sym(blo.sym(i), bhi.sym(bhi.unit_index()));
            out = out.add(&ClassExpr::basis(&base, base.sym_index(&sym)?).scale(c))?;
        }
        Ok(out)
    };
    let embed_base_hi = |y: &ClassExpr| -> Result<ClassExpr> {
        let mut out = ClassExpr::zero(&base);
        for (&j, c) in &y.terms {
            let sym = pair_sym(blo.sym(blo.unit_index()), bhi.sym(j));
            out = out.add(&ClassExpr::basis(&base, base.sym_index(&sym)?).scale(c))?;
        }
        Ok(out)
    };

    // Restriction from the existing chain's fiber onto the synthesized fiber.
    let from_fiber = &under.boundary.total;
    let mut restrict = LinearMap::new(from_fiber, &fiber, "gen restrict");
    for i in 0..from_fiber.dim() {
        let x = ClassExpr::basis(from_fiber, i);
        restrict.set(
            i,
            if new_in_lo_slot {
                embed_hi(&x)
            } else {
                embed_lo(&x)
            },
        );
    }

    let mut base_pullback = LinearMap::new(&under.boundary.base, &base, "gen base pullback");
    for i in 0..under.boundary.base.dim() {
        let x = ClassExpr::basis(&under.boundary.base, i);
        base_pullback.set(
            i,
            if new_in_lo_slot {
                embed_base_hi(&x)?
            } else {
                embed_base_lo(&x)?
            },
        );
    }

    let theta_x = if new_in_lo_slot {
        embed_lo(&new_top.theta_x)
    } else {
        embed_hi(&new_top.theta_x)
    };
    let theta_y = if new_in_lo_slot {
        embed_lo(&new_top.theta_y)
    } else {
        embed_hi(&new_top.theta_y)
    };
    let psi_x = if new_in_lo_slot {
        embed_base_lo(&new_top.psi_x)?
    } else {
        embed_base_hi(&new_top.psi_x)?
    };
    let psi_y = if new_in_lo_slot {
        embed_base_lo(&new_top.psi_y)?
    } else {
        embed_base_hi(&new_top.psi_y)?
    };

    // Section pullbacks on the quotient basis: route each slot through the
    // configured single-node pullback where the other slot is forced by
    // degree, leave the rest unconfigured.
    let slot_pull = |own: &NodeData, own_is_lo: bool| -> Result<LinearMap> {
        let tag = format!("gen pullback {} (A({set_name}))", own.id);
        let mut m = LinearMap::new(&fiber, &base, &tag);
        for (pos, &f) in kept.iter().enumerate() {
            let (i, j) = (f / dh, f % dh);
            let (own_idx, other_idx, other_alg, other_base) = if own_is_lo {
                (i, j, fhi.clone(), bhi.clone())
            } else {
                (j, i, flo.clone(), blo.clone())
            };
            let own_part = own.pullback.image_of(own_idx)?.clone();
            // Other slot: unit passes through, classes above the other base's
            // top degree die, anything else is unconfigured.
            let other_img: Option<ClassExpr> = if other_idx == other_alg.unit_index() {
                Some(ClassExpr::unit(&other_base))
            } else if other_alg.deg(other_idx) > other_base.top_degree() {
                Some(ClassExpr::zero(&other_base))
            } else {
                None
            };
            if let Some(other_part) = other_img {
                let img = if own_is_lo {
                    tensor_pair_class(&base, &own_part, &other_part)?
                } else {
                    tensor_pair_class(&base, &other_part, &own_part)?
                };
                m.set(pos, img);
            }
        }
        Ok(m)
    };

    let (pullback, anc_pull) = if new_in_lo_slot {
        (slot_pull(&new_top, true)?, slot_pull(&under, false)?)
    } else {
        (slot_pull(&new_top, false)?, slot_pull(&under, true)?)
    };

    let restrict_parent_omega = restrict.apply(&under.boundary.omega)?;
    let omega_new = restrict_parent_omega
        .add(&theta_x.scale(&rat_int(-1)))?
        .add(&theta_y.scale(&rat_int(-1)))?;

    let mut ancestor_pullbacks = BTreeMap::new();
    ancestor_pullbacks.insert(under.id.clone(), anc_pull);

    let nd = NodeData {
        id: new_id.to_string(),
        base_codim: new_top.base_codim,
        psi_x,
        psi_y,
        theta_x,
        theta_y,
        restrict,
        pullback,
        base_pullback,
        ancestor_pullbacks,
        boundary: FamilyLevel {
            base,
            total: fiber,
            omega: omega_new,
            nodes: Vec::new(),
        },
    };

    // Validate the synthesized data like configured data.
    nd.restrict.validate_degree_preserving()?;
    nd.restrict.validate_multiplicative()?;
    nd.pullback.validate_degree_preserving()?;
    let composite = nd
        .restrict
        .then(&nd.pullback)
        .and_then(|m| m.apply(&under.boundary.omega));
    match composite {
        Ok(v) if v.is_zero() => {}
        Ok(_) => {
            return Err(HmError::Validation(format!(
                "synthesized node {new_id} below {under_id}: pullback(omega) != 0"
            )))
        }
        Err(e) => {
            return Err(HmError::Validation(format!(
                "synthesis of node {new_id} below {under_id} is underdetermined ({e}); \
                 configure the nesting explicitly"
            )))
        }
    }
    Ok(nd)
}

/// Basis-level tensor of two classes inside a synthesized base ring.
fn tensor_pair_class(
    base: &std::sync::Arc<Algebra>,
    lo_part: &ClassExpr,
    hi_part: &ClassExpr,
) -> Result<ClassExpr> {
    let mut out = ClassExpr::zero(base);
    for (&i, a) in &lo_part.terms {
        for (&j, b) in &hi_part.terms {
            let sym = pair_sym(lo_part.algebra.sym(i), hi_part.algebra.sym(j));
            out = out.add(&ClassExpr::basis(base, base.sym_index(&sym)?).scale(&(a * b)))?;
        }
    }
    Ok(out)
}
