// One-off stress: sampled dual-path at weight 7, depth 2, all fixtures.
use hmcalc::{check, fixtures, ops, oracle, RTable, Rat};
use hmcalc::taut::TautElement;
use num_traits::One;

fn main() {
    let rt = RTable::with_lmax(10).unwrap();
    let fams = vec![
        ("cfg-s", fixtures::cfg_s(3, 2).unwrap()),
        ("cfg-n1", fixtures::cfg_n1().unwrap()),
        ("cfg-n2", fixtures::cfg_n2().unwrap()),
        ("cfg-gen2", fixtures::cfg_gen2().unwrap()),
    ];
    let mut total = 0usize;
    for (name, family) in &fams {
        let monomials = check::enumerate_monomials(family, 7, 2).unwrap();
        let mut count = 0usize;
        for m in monomials.iter().step_by(37) {
            let x = TautElement::from_monomial(m.clone(), Rat::one());
            let via_ops = ops::i_minus_s(
                family, &rt,
                &ops::gamma_tilde(family, &ops::neumann_invert(family, &rt, &x).unwrap()).unwrap(),
            ).unwrap();
            let via_oracle = oracle::to_flat(
                family, &rt,
                &oracle::gamma_bracket(family, &oracle::unflatten(family, m).unwrap()).unwrap(),
            ).unwrap();
            assert_eq!(via_ops, via_oracle, "MISMATCH on {name}: {:?}", m);
            count += 1;
        }
        println!("{name}: {count} sampled weight-7 cases agree ({} enumerated)", monomials.len());
        total += count;
    }
    println!("TOTAL: {total} cases, all exact matches");
}
