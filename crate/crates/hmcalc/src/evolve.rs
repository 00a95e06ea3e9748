//! Word evaluation and the generating series.
//!
//! A word is a left-to-right sequence of steps: `Gamma` applies the
//! conjugated discriminant, `Star(m, s)` star-multiplies by the block
//! `t_m[s]`. Evaluation starts from 1. The series stores the coefficients of
//! gamma^k mu_1^{a_1} ... mu_r^{a_r}: the mu-directions are filled in first
//! at gamma = 0, then every slice is evolved in gamma; the coefficient at
//! (k, a) is the corresponding word value divided by k! prod a_i!.
//!
//! Integration maps an element to an exact rational: any monomial carrying a
//! phi factor integrates to zero; otherwise the block classes integrate over
//! the stratum's total space, the base class over the stratum base, and the
//! scalar passes through. Applying this directly to conjugated coordinates
//! is valid because every S-image carries a phi factor.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_traits::{One, Zero};

use crate::algebra::ClassExpr;
use crate::error::{HmError, Result};
use crate::family::FamilyModel;
use crate::ops;
use crate::rational::{rat_int, Rat};
use crate::rtable::RTable;
use crate::taut::{render_canonical, NodeKind, TautElement};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WordStep {
    Gamma,
    /// Star-multiplication by `t_m[class]`; the class is named (a distinguished
    /// class or basis symbol of the total ring).
    Star {
        m: u32,
        class: String,
    },
}

/// Parse the word syntax: semicolon-separated `gamma` and `star:m:class`.
pub fn parse_word(text: &str) -> Result<Vec<WordStep>> {
    let mut out = Vec::new();
    for part in text.split(';') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        if part == "gamma" {
            out.push(WordStep::Gamma);
        } else if let Some(rest) = part.strip_prefix("star:") {
            let (m, class) = rest.split_once(':').ok_or_else(|| {
                HmError::Parse(format!("bad word step {part:?}, expected star:m:class"))
            })?;
            let m: u32 = m
                .parse()
                .map_err(|_| HmError::Parse(format!("bad block weight in {part:?}")))?;
            if m == 0 {
                return Err(HmError::Parse(format!(
                    "bad word step {part:?}: block weight must be positive"
                )));
            }
            out.push(WordStep::Star {
                m,
                class: class.to_string(),
            });
        } else {
            return Err(HmError::Parse(format!(
                "unknown word step {part:?}, expected gamma or star:m:class"
            )));
        }
    }
    Ok(out)
}

pub fn render_word(word: &[WordStep]) -> String {
    word.iter()
        .map(|s| match s {
            WordStep::Gamma => "gamma".to_string(),
            WordStep::Star { m, class } => format!("star:{m}:{class}"),
        })
        .collect::<Vec<_>>()
        .join(";")
}

/// Smallest r-table level bound sufficient for a word.
pub fn required_lmax(word: &[WordStep]) -> u32 {
    let total: u32 = word
        .iter()
        .map(|s| match s {
            WordStep::Gamma => 0,
            WordStep::Star { m, .. } => *m,
        })
        .sum();
    total.max(2)
}

/// Evaluation options; `max_terms` guards against element blowup.
#[derive(Debug, Clone, Copy, Default)]
pub struct EvalOpts {
    pub max_terms: Option<usize>,
}

impl EvalOpts {
    fn check(&self, x: &TautElement) -> Result<()> {
        if let Some(cap) = self.max_terms {
            if x.len() > cap {
                return Err(HmError::TermGuard {
                    terms: x.len(),
                    cap,
                });
            }
        }
        Ok(())
    }
}

/// Evaluate a word left to right starting from 1.
pub fn eval_word(
    family: &FamilyModel,
    rt: &RTable,
    word: &[WordStep],
    opts: EvalOpts,
) -> Result<TautElement> {
    let mut cur = TautElement::one();
    for step in word {
        cur = match step {
            WordStep::Gamma => ops::gamma_tilde(family, &cur)?,
            WordStep::Star { m, class } => {
                let cls = family.distinguished(class)?;
                ops::tilde_star_block(family, rt, *m, &cls, &cur)?
            }
        };
        opts.check(&cur)?;
    }
    Ok(cur)
}

/// Truncated generating series in gamma and mu_1..mu_r.
#[derive(Debug)]
pub struct GSeries {
    pub class_names: Vec<String>,
    pub gamma_order: u32,
    pub mu_orders: Vec<u32>,
    coeffs: BTreeMap<(u32, Vec<u32>), TautElement>,
}

impl GSeries {
    pub fn coefficient(&self, k: u32, a: &[u32]) -> Result<&TautElement> {
        if a.len() != self.mu_orders.len()
            || k > self.gamma_order
            || a.iter().zip(&self.mu_orders).any(|(ai, mi)| ai > mi)
        {
            return Err(HmError::OutOfRange(format!(
                "series index ({k}; {}) outside truncation ({}; {})",
                a.iter()
                    .map(|x| x.to_string())
                    .collect::<Vec<_>>()
                    .join(","),
                self.gamma_order,
                self.mu_orders
                    .iter()
                    .map(|x| x.to_string())
                    .collect::<Vec<_>>()
                    .join(","),
            )));
        }
        Ok(&self.coeffs[&(k, a.to_vec())])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(u32, Vec<u32>), &TautElement)> {
        self.coeffs.iter()
    }

    /// JSON dump: map "k|a1,a2,..." -> canonical element text.
    pub fn to_json(&self) -> serde_json::Value {
        let mut map = serde_json::Map::new();
        for ((k, a), v) in &self.coeffs {
            let key = format!(
                "{k}|{}",
                a.iter()
                    .map(|x| x.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            );
            map.insert(key, serde_json::Value::String(render_canonical(v)));
        }
        serde_json::Value::Object(map)
    }
}

fn multi_indices(orders: &[u32]) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::new()];
    for &o in orders {
        let mut next = Vec::new();
        for prefix in &out {
            for v in 0..=o {
                let mut p = prefix.clone();
                p.push(v);
                next.push(p);
            }
        }
        out = next;
    }
    out
}

/// Compute the series: mu-directions first at gamma = 0, then the gamma
/// evolution of every slice. The coefficient at (0, ..., 0) is 1.
pub fn g_series(
    family: &FamilyModel,
    rt: &RTable,
    classes: &[(String, ClassExpr)],
    gamma_order: u32,
    mu_orders: &[u32],
    opts: EvalOpts,
) -> Result<GSeries> {
    if classes.len() != mu_orders.len() {
        return Err(HmError::Validation(format!(
            "{} classes but {} mu orders",
            classes.len(),
            mu_orders.len()
        )));
    }
    let mut coeffs: BTreeMap<(u32, Vec<u32>), TautElement> = BTreeMap::new();
    for a in multi_indices(mu_orders) {
        let slice0 = if a.iter().all(|&x| x == 0) {
            TautElement::one()
        } else {
            // Step down in the last nonzero direction:
            // coeff(0, a) = t_1[alpha_i] coeff(0, a - e_i) / a_i.
            let i = a.iter().rposition(|&x| x > 0).expect("nonzero index");
            let mut prev = a.clone();
            prev[i] -= 1;
            let below = coeffs
                .get(&(0, prev))
                .expect("slices are filled in lexicographic order");
            ops::tilde_star_block(family, rt, 1, &classes[i].1, below)?
                .scale(&(Rat::one() / rat_int(a[i] as i64)))
        };
        opts.check(&slice0)?;
        coeffs.insert((0, a.clone()), slice0);
        for k in 1..=gamma_order {
            let prev = &coeffs[&(k - 1, a.clone())];
            let next = ops::gamma_tilde(family, prev)?.scale(&(Rat::one() / rat_int(k as i64)));
            opts.check(&next)?;
            coeffs.insert((k, a.clone()), next);
        }
    }
    Ok(GSeries {
        class_names: classes.iter().map(|(n, _)| n.clone()).collect(),
        gamma_order,
        mu_orders: mu_orders.to_vec(),
        coeffs,
    })
}

/// Exact rational integral of an element (valid directly in conjugated
/// coordinates because the integral annihilates every S-image).
pub fn integrate_element(family: &FamilyModel, x: &TautElement) -> Result<Rat> {
    let mut total = Rat::zero();
    for (m, c) in &x.terms {
        if m.has_phi() {
            continue;
        }
        let stratum = family.stratum(&m.stratum_ids())?;
        let mut v = c.clone();
        for b in &m.blocks {
            let cls = ClassExpr::basis(&stratum.fiber, stratum.fiber.sym_index(&b.sym)?);
            v *= cls.integrate();
            if v.is_zero() {
                break;
            }
        }
        if v.is_zero() {
            continue;
        }
        if let Some(base_sym) = &m.base {
            if !stratum.base.has_integral() {
                return Err(HmError::Unconfigured(format!(
                    "stratum ({}) base ring {} has no integral functional but the \
                     monomial carries base class {base_sym}",
                    stratum.nodes.join(","),
                    stratum.base.name
                )));
            }
            let cls = ClassExpr::basis(&stratum.base, stratum.base.sym_index(base_sym)?);
            v *= cls.integrate();
        }
        total += v;
    }
    Ok(total)
}

/// Evaluate a word and integrate.
pub fn monomial_number(
    family: &FamilyModel,
    rt: &RTable,
    word: &[WordStep],
    opts: EvalOpts,
) -> Result<Rat> {
    let x = eval_word(family, rt, word, opts)?;
    integrate_element(family, &x)
}

/// Expected-dimension diagnostic: true when the element has scroll-free
/// monomials but every one of them sits off top degree (some block or base
/// class is not a top-degree class), so the integral vanishes for dimension
/// reasons rather than by cancellation. The CLI prints a warning next to a
/// zero result in that case.
pub fn off_top_degree(family: &FamilyModel, x: &TautElement) -> bool {
    let mut saw_phi_free = false;
    for m in x.terms.keys() {
        if m.has_phi() {
            continue;
        }
        saw_phi_free = true;
        let Ok(stratum) = family.stratum(&m.stratum_ids()) else {
            return false;
        };
        let blocks_top = m.blocks.iter().all(|b| {
            stratum
                .fiber
                .sym_index(&b.sym)
                .map(|i| stratum.fiber.deg(i) == stratum.fiber.top_degree())
                .unwrap_or(false)
        });
        let base_top = match &m.base {
            None => true,
            Some(s) => stratum
                .base
                .sym_index(s)
                .map(|i| stratum.base.deg(i) == stratum.base.top_degree())
                .unwrap_or(false),
        };
        if blocks_top && base_top {
            // At least one dimensionally matched monomial: a zero integral
            // is not a dimension mismatch.
            return false;
        }
    }
    saw_phi_free
}

/// Dot-product of a user-supplied linear combination table with monomial
/// values: each line is "coeff <tab-or-space> word". Blank lines and lines
/// starting with '#' are skipped.
pub fn combination_number(family: &FamilyModel, table_text: &str, opts: EvalOpts) -> Result<Rat> {
    let mut total = Rat::zero();
    for line in table_text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (coeff, word_text) = line.split_once(char::is_whitespace).ok_or_else(|| {
            HmError::Parse(format!("combination line {line:?}: expected 'coeff word'"))
        })?;
        let c = crate::rational::parse_rat(coeff)?;
        let word = parse_word(word_text.trim())?;
        let rt = RTable::with_lmax(required_lmax(&word))?;
        total += c * monomial_number(family, &rt, &word, opts)?;
    }
    Ok(total)
}

/// Structural check that the integral annihilates S-images: every monomial
/// produced by S carries a phi factor.
pub fn s_image_has_phi(x: &TautElement) -> bool {
    x.terms
        .keys()
        .all(|m| m.factors.iter().any(|f| f.kind == NodeKind::Phi))
}

/// Series key rendering used by the CLI JSON output.
pub fn series_key(k: u32, a: &[u32]) -> String {
    let mut s = String::new();
    let _ = write!(s, "{k}|");
    let _ = write!(
        s,
        "{}",
        a.iter()
            .map(|x| x.to_string())
            .collect::<Vec<_>>()
            .join(",")
    );
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::ops;
    use crate::rational::rat;
    use crate::taut::parse_element;

    fn el(family: &FamilyModel, text: &str) -> TautElement {
        parse_element(family, text).unwrap()
    }

    #[test]
    fn word_parsing() {
        let w = parse_word("star:1:L;star:2:one;gamma").unwrap();
        assert_eq!(w.len(), 3);
        assert_eq!(render_word(&w), "star:1:L;star:2:one;gamma");
        assert!(parse_word("star:0:L").is_err());
        assert!(parse_word("wiggle").is_err());
        assert!(parse_word("star:1").is_err());
        assert_eq!(required_lmax(&w), 3);
        assert_eq!(required_lmax(&[WordStep::Gamma]), 2);
    }

    #[test]
    fn eval_word_examples() {
        let rt = RTable::with_lmax(8).unwrap();
        let opts = EvalOpts::default();
        // Empty word is 1; a bare gamma annihilates it.
        let f = fixtures::cfg_s(0, 1).unwrap();
        assert_eq!(eval_word(&f, &rt, &[], opts).unwrap(), TautElement::one());
        assert!(eval_word(&f, &rt, &parse_word("gamma").unwrap(), opts)
            .unwrap()
            .is_zero());
        // Two points then gamma on the smooth family.
        let w = parse_word("star:1:one;star:1:one;gamma").unwrap();
        assert_eq!(eval_word(&f, &rt, &w, opts).unwrap(), el(&f, "t2[one]"));
        // Two gammas on the one-node family reach the boundary.
        let fn1 = fixtures::cfg_n1().unwrap();
        let w2 = parse_word("star:1:one;star:1:one;gamma;gamma").unwrap();
        assert_eq!(
            eval_word(&fn1, &rt, &w2, opts).unwrap(),
            el(&fn1, "-4 t2[x] + phi[2,1;theta]")
        );
    }

    #[test]
    fn term_guard_trips() {
        let f = fixtures::cfg_n1().unwrap();
        let rt = RTable::with_lmax(8).unwrap();
        let w = parse_word("star:1:L;star:1:L;star:1:L").unwrap();
        let opts = EvalOpts { max_terms: Some(1) };
        assert!(matches!(
            eval_word(&f, &rt, &w, opts),
            Err(HmError::TermGuard { .. })
        ));
    }

    #[test]
    fn series_initial_values() {
        let f = fixtures::cfg_n1().unwrap();
        let rt = RTable::with_lmax(8).unwrap();
        let classes = vec![
            ("L".to_string(), f.distinguished("L").unwrap()),
            ("one".to_string(), f.distinguished("one").unwrap()),
        ];
        let s = g_series(&f, &rt, &classes, 1, &[1, 1], EvalOpts::default()).unwrap();
        assert_eq!(s.coefficient(0, &[0, 0]).unwrap(), &TautElement::one());
        // First mu-coefficient is t_1[alpha_i].
        assert_eq!(
            s.coefficient(0, &[1, 0]).unwrap(),
            &el(&f, "2 t1[f] + t1[x]")
        );
        assert_eq!(s.coefficient(0, &[0, 1]).unwrap(), &el(&f, "t1[one]"));
        // gamma directions annihilate 1.
        assert!(s.coefficient(1, &[0, 0]).unwrap().is_zero());
        // Out-of-range access errors.
        assert!(s.coefficient(2, &[0, 0]).is_err());
        assert!(s.coefficient(0, &[0, 2]).is_err());
        assert!(s.coefficient(0, &[0]).is_err());
    }

    #[test]
    fn series_matches_words_with_factorials() {
        let f = fixtures::cfg_n1().unwrap();
        let rt = RTable::with_lmax(8).unwrap();
        let classes = vec![
            ("L".to_string(), f.distinguished("L").unwrap()),
            ("one".to_string(), f.distinguished("one").unwrap()),
        ];
        let s = g_series(&f, &rt, &classes, 2, &[2, 2], EvalOpts::default()).unwrap();
        for ((k, a), coeff) in s.iter() {
            let mut word = Vec::new();
            for _ in 0..a[0] {
                word.push(WordStep::Star {
                    m: 1,
                    class: "L".to_string(),
                });
            }
            for _ in 0..a[1] {
                word.push(WordStep::Star {
                    m: 1,
                    class: "one".to_string(),
                });
            }
            for _ in 0..*k {
                word.push(WordStep::Gamma);
            }
            let direct = eval_word(&f, &rt, &word, EvalOpts::default()).unwrap();
            let fact = |n: u32| (1..=n.max(1)).map(|v| v as i64).product::<i64>();
            let scale = rat_int(fact(*k) * fact(a[0]) * fact(a[1]));
            assert_eq!(
                coeff.scale(&scale),
                direct,
                "series/word mismatch at ({k}; {a:?})"
            );
            // Weight of the coefficient equals the total mu order.
            for m in coeff.terms.keys() {
                assert_eq!(m.weight(), a.iter().sum::<u32>());
            }
        }
    }

    #[test]
    fn integrate_examples() {
        let f = fixtures::cfg_s(0, 1).unwrap();
        // t_1[pt]^2 integrates to 1.
        assert_eq!(
            integrate_element(&f, &el(&f, "t1[pt] t1[pt]")).unwrap(),
            rat_int(1)
        );
        // Off top degree: zero.
        assert_eq!(
            integrate_element(&f, &el(&f, "t1[one] t1[pt]")).unwrap(),
            rat_int(0)
        );
        let fn1 = fixtures::cfg_n1().unwrap();
        // Any phi factor kills the term.
        assert_eq!(
            integrate_element(&fn1, &el(&fn1, "phi[3,1;theta] t1[p]")).unwrap(),
            rat_int(0)
        );
        // chi terms integrate over the boundary: chi^2_1 t_1[p] -> 1.
        assert_eq!(
            integrate_element(&fn1, &el(&fn1, "chi[2,1;theta] t1[p]")).unwrap(),
            rat_int(1)
        );
        // Base classes integrate over the stratum base: h has integral 1.
        assert_eq!(
            integrate_element(&fn1, &el(&fn1, "h t2[fx]")).unwrap(),
            rat_int(1)
        );
        assert_eq!(
            integrate_element(&fn1, &el(&fn1, "h t2[x]")).unwrap(),
            rat_int(0)
        );
    }

    #[test]
    fn integral_annihilates_s_images() {
        let f = fixtures::cfg_n1().unwrap();
        let rt = RTable::with_lmax(8).unwrap();
        for text in [
            "chi[2,1;theta] t1[one]",
            "chi[2,1;theta] t2[one] t1[p]",
            "chi[4,2;theta] t1[one] t1[one]",
        ] {
            let x = el(&f, text);
            let img = s_img(&f, &rt, &x);
            assert!(s_image_has_phi(&img));
            assert_eq!(integrate_element(&f, &img).unwrap(), rat_int(0));
            // integrate (I-S) = integrate.
            let ims = ops::i_minus_s(&f, &rt, &x).unwrap();
            assert_eq!(
                integrate_element(&f, &ims).unwrap(),
                integrate_element(&f, &x).unwrap()
            );
        }
    }

    fn s_img(f: &FamilyModel, rt: &RTable, x: &TautElement) -> TautElement {
        ops::s_apply(f, rt, x).unwrap()
    }

    #[test]
    fn monomial_numbers() {
        let rt = RTable::with_lmax(4).unwrap();
        let w = parse_word("star:1:one;star:1:one;gamma;gamma").unwrap();
        for g in [0i64, 1, 2] {
            let f = fixtures::cfg_s(g, 1).unwrap();
            assert_eq!(
                monomial_number(&f, &rt, &w, EvalOpts::default()).unwrap(),
                rat_int(2 - 2 * g)
            );
        }
        let wd = parse_word("star:1:L;star:1:L").unwrap();
        for d in [1i64, 2, 3] {
            let f = fixtures::cfg_s(0, d).unwrap();
            assert_eq!(
                monomial_number(&f, &rt, &wd, EvalOpts::default()).unwrap(),
                rat_int(d * d)
            );
        }
    }

    #[test]
    fn combination_table() {
        let f = fixtures::cfg_s(0, 2).unwrap();
        let table = "\
# Chern-number style combination
1 star:1:L;star:1:L
-1/2 star:1:one;star:1:one;gamma;gamma
";
        // 4 - (1/2) * 2 = 3.
        assert_eq!(
            combination_number(&f, table, EvalOpts::default()).unwrap(),
            rat_int(3)
        );
        assert!(combination_number(&f, "nonsense", EvalOpts::default()).is_err());
    }

    #[test]
    fn mixed_mu_steps_commute() {
        let f = fixtures::cfg_n1().unwrap();
        let rt = RTable::with_lmax(8).unwrap();
        let w1 = parse_word("star:1:L;star:1:one;gamma;star:2:L").unwrap();
        let w2 = parse_word("star:1:one;star:1:L;gamma;star:2:L").unwrap();
        assert_eq!(
            eval_word(&f, &rt, &w1, EvalOpts::default()).unwrap(),
            eval_word(&f, &rt, &w2, EvalOpts::default()).unwrap()
        );
    }

    #[test]
    fn base_integral_requires_functional() {
        // A family whose base ring has no integral rejects base-class
        // monomials.
        let text = fixtures::cfg_s_text(0, 1).replace(
            r#""integral": {"one": "1"}
  },
  "algebra_A""#,
            r#""distinguished": {}
  },
  "algebra_A""#,
        );
        let f = crate::config::load_family(&text).unwrap();
        assert!(!f.base().has_integral());
        // The empty-base monomial is fine (scalar path).
        assert_eq!(
            integrate_element(&f, &el(&f, "t1[pt]")).unwrap(),
            rat_int(1)
        );
    }

    #[test]
    fn rational_scale_coeffs() {
        let f = fixtures::cfg_s(0, 1).unwrap();
        let x = el(&f, "2/3 t1[pt]");
        assert_eq!(integrate_element(&f, &x).unwrap(), rat(2, 3));
    }
}
