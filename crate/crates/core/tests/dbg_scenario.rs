use floerforge_core::towers::scenario::*;
use floerforge_core::towers::swf::translated_window_pair;
use floerforge_core::towers::Scenario;
use floerforge_core::equivariant::Theory;

#[test]
#[ignore]
fn dbg_translated() {
    let scen = Scenario::builtin("s1xs2_nonexact").unwrap();
    match translated_window_pair(&scen, 1) {
        Ok(v) => eprintln!("ok: {v}"),
        Err(e) => eprintln!("ERR: {e}"),
    }
    // tables of both sides
    let table_of = |scen: &Scenario, k_lo: i64, k_hi: i64| {
        let mut wc = WindowComputation::build_indices(scen, k_lo, k_hi, true).unwrap();
        let bound = Bound::Cut2(wc.cut2.as_ref().unwrap().level(k_lo));
        let top = wc.cut1.level(k_hi);
        let pos = wc.theory_of(bound, top, Theory::Ordinary).unwrap();
        wc.reported_module(pos, Theory::Ordinary)
    };
    let ta = table_of(&scen, -1, 0);
    eprintln!("A table:\n{ta}");
    let mut tr = scen.clone();
    tr.model.s += 1.0;
    tr.model.lambda_cut -= 1.0;
    tr.model.mu_cut -= 1.0;
    let tb = table_of(&tr, 0, 1);
    eprintln!("B table:\n{tb}");
}
