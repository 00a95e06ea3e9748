//! Property suites behind the `check` command and the acceptance tests.
//!
//! Each suite returns a report with a pass flag, a case count and, on
//! failure, the smallest counterexample monomial in canonical text form
//! (enumeration runs in increasing canonical order, so the first failure is
//! minimal).

use num_traits::{One, Zero};

use crate::error::Result;
use crate::evolve;
use crate::family::FamilyModel;
use crate::fixtures;
use crate::ops;
use crate::oracle;
use crate::rational::{rat_int, Rat};
use crate::rtable::RTable;
use crate::taut::{render_canonical, Block, NodeFactor, NodeKind, TautElement, TautMonomial};

#[derive(Debug)]
pub struct SuiteReport {
    pub suite: String,
    pub fixture: String,
    pub passed: bool,
    pub cases: usize,
    pub detail: String,
}

impl SuiteReport {
    fn pass(suite: &str, fixture: &str, cases: usize) -> SuiteReport {
        SuiteReport {
            suite: suite.to_string(),
            fixture: fixture.to_string(),
            passed: true,
            cases,
            detail: String::new(),
        }
    }

    fn fail(suite: &str, fixture: &str, cases: usize, detail: String) -> SuiteReport {
        SuiteReport {
            suite: suite.to_string(),
            fixture: fixture.to_string(),
            passed: false,
            cases,
            detail,
        }
    }
}

/// Every canonical monomial over `family` with total weight <= max_weight and
/// at most max_depth node factors, in increasing canonical order.
pub fn enumerate_monomials(
    family: &FamilyModel,
    max_weight: u32,
    max_depth: usize,
) -> Result<Vec<TautMonomial>> {
    let mut out = Vec::new();
    let ids = family.top_node_ids.clone();
    for subset in subsets(&ids, max_depth.min(ids.len())) {
        let stratum = match family.stratum(&subset) {
            Ok(s) => s,
            Err(_) => continue, // stratum not constructible; nothing lives there
        };
        // Factor assignments: per node a kind and (n, j) with n >= 2.
        let mut assignments: Vec<Vec<NodeFactor>> = vec![Vec::new()];
        for id in &subset {
            let mut next = Vec::new();
            for prefix in &assignments {
                let used: u32 = prefix.iter().map(|f| f.n).sum();
                for kind in [NodeKind::Phi, NodeKind::Chi] {
                    for n in 2..=max_weight.saturating_sub(used) {
                        for j in 1..n {
                            let mut p = prefix.clone();
                            p.push(NodeFactor {
                                node: id.clone(),
                                kind,
                                n,
                                j,
                            });
                            next.push(p);
                        }
                    }
                }
            }
            assignments = next;
        }
        let base_syms: Vec<Option<String>> = {
            let mut v = vec![None];
            for i in 0..stratum.base.dim() {
                if i != stratum.base.unit_index() {
                    v.push(Some(stratum.base.sym(i).to_string()));
                }
            }
            v
        };
        for factors in assignments {
            let used: u32 = factors.iter().map(|f| f.n).sum();
            for blocks in block_multisets(&stratum, max_weight - used) {
                for base in &base_syms {
                    out.push(TautMonomial::build(
                        factors.clone(),
                        blocks.clone(),
                        base.clone(),
                        &stratum,
                    ));
                }
            }
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}

fn subsets(ids: &[String], max_size: usize) -> Vec<Vec<String>> {
    let mut out = vec![Vec::new()];
    for id in ids {
        let mut extra = Vec::new();
        for s in &out {
            if s.len() < max_size {
                let mut t = s.clone();
                t.push(id.clone());
                extra.push(t);
            }
        }
        out.extend(extra);
    }
    out
}

/// Non-decreasing block sequences (n, sym index) of total weight <= budget.
fn block_multisets(stratum: &crate::family::Stratum, budget: u32) -> Vec<Vec<Block>> {
    fn go(
        stratum: &crate::family::Stratum,
        budget: u32,
        min_n: u32,
        min_sym: usize,
        cur: &mut Vec<Block>,
        out: &mut Vec<Vec<Block>>,
    ) {
        out.push(cur.clone());
        for n in min_n..=budget {
            let sym_start = if n == min_n { min_sym } else { 0 };
            for s in sym_start..stratum.fiber.dim() {
                cur.push(Block {
                    n,
                    sym: stratum.fiber.sym(s).to_string(),
                });
                go(stratum, budget - n, n, s, cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(stratum, budget, 1, 0, &mut Vec::new(), &mut out);
    out
}

/// Deterministic xorshift generator for the randomized identities.
pub struct Rng(u64);

impl Rng {
    pub fn new(seed: u64) -> Rng {
        Rng(seed.max(1))
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.0;
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        self.0 = x;
        x
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }

    pub fn small_rat(&mut self) -> Rat {
        let n = (self.next_u64() % 9) as i64 - 4;
        let d = (self.next_u64() % 3) as i64 + 1;
        Rat::new(n.into(), d.into())
    }
}

/// Random classical (pure-block, empty-stratum) element.
pub fn random_classical(family: &FamilyModel, rng: &mut Rng, max_blocks: usize) -> TautElement {
    let stratum = family.stratum(&[]).expect("empty stratum");
    let mut out = TautElement::zero();
    let terms = 1 + rng.below(2);
    for _ in 0..terms {
        let nblocks = rng.below(max_blocks + 1);
        let mut blocks = Vec::new();
        for _ in 0..nblocks {
            blocks.push(Block {
                n: 1 + rng.below(3) as u32,
                sym: stratum
                    .fiber
                    .sym(rng.below(stratum.fiber.dim()))
                    .to_string(),
            });
        }
        let mut c = rng.small_rat();
        if c.is_zero() {
            c = Rat::one();
        }
        out.add_term(TautMonomial::build(Vec::new(), blocks, None, &stratum), c);
    }
    out
}

fn fixtures_for_suite() -> Result<Vec<(String, FamilyModel)>> {
    Ok(vec![
        ("CFG-S(2,1)".to_string(), fixtures::cfg_s(2, 1)?),
        ("CFG-N1".to_string(), fixtures::cfg_n1()?),
        ("CFG-N2".to_string(), fixtures::cfg_n2()?),
    ])
}

/// r-table suite: base cases for n <= 6, the hand-recursion spot values, and
/// vanishing outside the support.
pub fn suite_rtable() -> Result<Vec<SuiteReport>> {
    let t = RTable::with_lmax(8)?;
    let mut cases = 0;
    for n in 2..=6u32 {
        for j in 1..n {
            cases += 1;
            if t.get(n, j, j, n + 1) != rat_int(1) {
                return Ok(vec![SuiteReport::fail(
                    "rtable",
                    "-",
                    cases,
                    format!("r({n},{j})^{j}_{} != 1", n + 1),
                )]);
            }
        }
    }
    let spot = [
        ((2, 1, 1, 4), Rat::new(1.into(), 1.into())),
        ((2, 1, 2, 4), Rat::new(2.into(), 3.into())),
        ((3, 2, 1, 4), Rat::zero()),
        ((2, 1, 5, 6), Rat::zero()),
        ((4, 2, 1, 5), Rat::zero()),
    ];
    for ((n, j, k, l), expected) in spot {
        cases += 1;
        if t.get(n, j, k, l) != expected {
            return Ok(vec![SuiteReport::fail(
                "rtable",
                "-",
                cases,
                format!("r({n},{j})^{k}_{l} unexpected"),
            )]);
        }
    }
    Ok(vec![SuiteReport::pass("rtable", "-", cases)])
}

/// Dual-path suite: the conjugated operator against the bracket engine on
/// every canonical monomial within the bounds.
pub fn suite_dualpath(weight: u32, depth: usize) -> Result<Vec<SuiteReport>> {
    let mut reports = Vec::new();
    let rt = RTable::with_lmax(weight + 2)?;
    let plan: Vec<(String, FamilyModel, u32)> = vec![
        ("CFG-S(2,1)".to_string(), fixtures::cfg_s(2, 1)?, weight),
        ("CFG-N1".to_string(), fixtures::cfg_n1()?, weight),
        ("CFG-N2".to_string(), fixtures::cfg_n2()?, weight.min(5)),
        ("CFG-GEN2".to_string(), fixtures::cfg_gen2()?, weight.min(5)),
    ];
    for (name, family, w) in &plan {
        let monomials = enumerate_monomials(family, *w, depth)?;
        let mut cases = 0;
        let mut failure: Option<String> = None;
        for m in &monomials {
            cases += 1;
            let x = TautElement::from_monomial(m.clone(), Rat::one());
            let via_ops = ops::i_minus_s(
                family,
                &rt,
                &ops::gamma_tilde(family, &ops::neumann_invert(family, &rt, &x)?)?,
            )?;
            let bracket = oracle::unflatten(family, m)?;
            let via_oracle =
                oracle::to_flat(family, &rt, &oracle::gamma_bracket(family, &bracket)?)?;
            if via_ops != via_oracle {
                failure = Some(format!(
                    "monomial {}: operators gave {}, bracket engine gave {}",
                    render_canonical(&x),
                    render_canonical(&via_ops),
                    render_canonical(&via_oracle)
                ));
                break;
            }
        }
        reports.push(match failure {
            None => SuiteReport::pass("dualpath", name, cases),
            Some(d) => SuiteReport::fail("dualpath", name, cases, d),
        });
    }
    Ok(reports)
}

/// Classical suite: the second-order identity for the classical part on
/// randomized pure-block triples, plus the hand-derived monomial numbers.
pub fn suite_classical(triples: usize) -> Result<Vec<SuiteReport>> {
    let mut reports = Vec::new();
    for (name, family) in fixtures_for_suite()? {
        let mut rng = Rng::new(0x5eed_0001);
        let mut cases = 0;
        let mut failure: Option<String> = None;
        for _ in 0..triples {
            let f = random_classical(&family, &mut rng, 2);
            let g = random_classical(&family, &mut rng, 2);
            let h = random_classical(&family, &mut rng, 2);
            cases += 1;
            if let Some(d) = second_order_defect(&family, &f, &g, &h)? {
                failure = Some(d);
                break;
            }
        }
        reports.push(match failure {
            None => SuiteReport::pass("classical", &name, cases),
            Some(d) => SuiteReport::fail("classical", &name, cases, d),
        });
    }

    // Hand-derived values on the smooth family.
    let rt = RTable::with_lmax(4)?;
    let word_g = evolve::parse_word("star:1:one;star:1:one;gamma;gamma")?;
    let mut cases = 0;
    let mut failure = None;
    for g in [0i64, 1, 2] {
        let family = fixtures::cfg_s(g, 1)?;
        let v = evolve::monomial_number(&family, &rt, &word_g, evolve::EvalOpts::default())?;
        cases += 1;
        if v != rat_int(2 - 2 * g) {
            failure = Some(format!("genus {g}: expected {}, got {v}", 2 - 2 * g));
            break;
        }
    }
    let word_d = evolve::parse_word("star:1:L;star:1:L")?;
    for d in [1i64, 2, 3] {
        if failure.is_some() {
            break;
        }
        let family = fixtures::cfg_s(0, d)?;
        let v = evolve::monomial_number(&family, &rt, &word_d, evolve::EvalOpts::default())?;
        cases += 1;
        if v != rat_int(d * d) {
            failure = Some(format!("degree {d}: expected {}, got {v}", d * d));
            break;
        }
    }
    reports.push(match failure {
        None => SuiteReport::pass("classical", "CFG-S sweep", cases),
        Some(d) => SuiteReport::fail("classical", "CFG-S sweep", cases, d),
    });
    Ok(reports)
}

/// Gamma0(fgh) = Gamma0(fg)h + Gamma0(fh)g + Gamma0(gh)f
///             - Gamma0(f)gh - Gamma0(g)fh - Gamma0(h)fg.
fn second_order_defect(
    family: &FamilyModel,
    f: &TautElement,
    g: &TautElement,
    h: &TautElement,
) -> Result<Option<String>> {
    let star = |a: &TautElement, b: &TautElement| crate::taut::star(family, a, b);
    let g0 = |a: &TautElement| ops::gamma0(family, a);
    let fg = star(f, g)?;
    let fh = star(f, h)?;
    let gh = star(g, h)?;
    let fgh = star(&fg, h)?;
    let lhs = g0(&fgh)?;
    let rhs = star(&g0(&fg)?, h)?
        .add(&star(&g0(&fh)?, g)?)
        .add(&star(&g0(&gh)?, f)?)
        .sub(&star(&g0(f)?, &gh)?)
        .sub(&star(&g0(g)?, &fh)?)
        .sub(&star(&g0(h)?, &fg)?);
    if lhs != rhs {
        Ok(Some(format!(
            "second-order identity fails: f={}, g={}, h={}",
            render_canonical(f),
            render_canonical(g),
            render_canonical(h)
        )))
    } else {
        Ok(None)
    }
}

/// Nilpotency suite: S kills every monomial within chi-count + 1 steps, the
/// dimension bound S^{b+1} = 0 holds, and (I-S) inverts the Neumann sum.
pub fn suite_nilpotency(weight: u32, depth: usize) -> Result<Vec<SuiteReport>> {
    let mut reports = Vec::new();
    let rt = RTable::with_lmax(weight + 2)?;
    let plan: Vec<(String, FamilyModel, u32)> = vec![
        ("CFG-N1".to_string(), fixtures::cfg_n1()?, weight),
        ("CFG-N2".to_string(), fixtures::cfg_n2()?, weight.min(5)),
        ("CFG-GEN2".to_string(), fixtures::cfg_gen2()?, weight.min(5)),
    ];
    for (name, family, w) in &plan {
        let monomials = enumerate_monomials(family, *w, depth)?;
        let mut cases = 0;
        let mut failure: Option<String> = None;
        for m in &monomials {
            cases += 1;
            let x = TautElement::from_monomial(m.clone(), Rat::one());
            // S^{c+1} = 0 with c the chi-count.
            let mut cur = x.clone();
            for _ in 0..=m.chi_count() {
                cur = ops::s_apply(family, &rt, &cur)?;
            }
            if !cur.is_zero() {
                failure = Some(format!(
                    "S^{} does not kill {}",
                    m.chi_count() + 1,
                    render_canonical(&x)
                ));
                break;
            }
            // Dimension bound S^{b+1} = 0.
            let mut cur = x.clone();
            for _ in 0..=family.base_dim {
                cur = ops::s_apply(family, &rt, &cur)?;
            }
            if !cur.is_zero() {
                failure = Some(format!(
                    "S^{} (dimension bound) does not kill {}",
                    family.base_dim + 1,
                    render_canonical(&x)
                ));
                break;
            }
            // (I-S) inverts the Neumann sum.
            let inv = ops::neumann_invert(family, &rt, &x)?;
            let back = ops::i_minus_s(family, &rt, &inv)?;
            if back != x {
                failure = Some(format!("(I-S) Neumann != id on {}", render_canonical(&x)));
                break;
            }
            // Every S-image term carries a scroll factor, so its integral is 0.
            let image = ops::s_apply(family, &rt, &x)?;
            if !evolve::s_image_has_phi(&image)
                || !evolve::integrate_element(family, &image)?.is_zero()
            {
                failure = Some(format!(
                    "S image of {} escapes the scroll sector",
                    render_canonical(&x)
                ));
                break;
            }
        }
        reports.push(match failure {
            None => SuiteReport::pass("nilpotency", name, cases),
            Some(d) => SuiteReport::fail("nilpotency", name, cases, d),
        });
    }
    Ok(reports)
}

/// Run suites by name ("all" runs every suite).
pub fn run_suites(name: &str, weight: u32, depth: usize) -> Result<Vec<SuiteReport>> {
    let mut out = Vec::new();
    if name == "all" || name == "rtable" {
        out.extend(suite_rtable()?);
    }
    if name == "all" || name == "dualpath" {
        out.extend(suite_dualpath(weight, depth)?);
    }
    if name == "all" || name == "classical" {
        out.extend(suite_classical(100)?);
    }
    if name == "all" || name == "nilpotency" {
        out.extend(suite_nilpotency(weight, depth)?);
    }
    if out.is_empty() {
        return Err(crate::error::HmError::Parse(format!(
            "unknown suite {name:?}: expected all|rtable|dualpath|classical|nilpotency"
        )));
    }
    Ok(out)
}
