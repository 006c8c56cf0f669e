//! Exploratory harness for the shipped scenarios (kept as ignored tests).

use floerforge_core::equivariant::Theory;
use floerforge_core::towers::{assemble_swf, Scenario};

#[test]
#[ignore]
fn explore_s1xs2_exact() {
    let scen = Scenario::builtin("s1xs2_exact").unwrap();
    match assemble_swf(&scen, &[Theory::Ordinary]) {
        Ok(rep) => {
            for a in &rep.assemblies {
                eprintln!("{}: table =\n{}", a.theory, a.table);
                eprintln!("stabilized={} pro={}", a.colimit_stabilized, a.pro_symbolic);
            }
            eprintln!("periodicity: {:?}", rep.periodicity);
        }
        Err(e) => eprintln!("ERR: {e}"),
    }
}

#[test]
#[ignore]
fn explore_default_exact() {
    let scen = Scenario::builtin("default_exact").unwrap();
    match assemble_swf(&scen, &[Theory::Ordinary]) {
        Ok(rep) => {
            for a in &rep.assemblies {
                eprintln!("{}: table =\n{}", a.theory, a.table);
            }
            eprintln!("periodicity: {:?}", rep.periodicity);
        }
        Err(e) => eprintln!("ERR: {e}"),
    }
}

#[test]
#[ignore]
fn explore_s1xs2_nonexact() {
    let scen = Scenario::builtin("s1xs2_nonexact").unwrap();
    match assemble_swf(&scen, &[Theory::Ordinary, Theory::Borel, Theory::Tate]) {
        Ok(rep) => {
            for a in &rep.assemblies {
                eprintln!("{}: stabilized={} table =\n{}", a.theory, a.colimit_stabilized, a.table);
            }
            eprintln!("periodicity: {:?}", rep.periodicity);
        }
        Err(e) => eprintln!("ERR: {e}"),
    }
}

#[test]
#[ignore]
fn explore_compare_j() {
    let scen = Scenario::builtin("s1xs2_nonexact").unwrap();
    match floerforge_core::towers::compare_j(&scen) {
        Ok(rep) => {
            eprintln!("ordinary_iso {} borel_iso {} wedge_vanishes {}", rep.ordinary_iso, rep.borel_iso, rep.wedge_vanishes);
            eprintln!("wedge table:\n{}", rep.wedge_table);
            eprintln!("attractor table:\n{}", rep.attractor_table);
            eprintln!("total table:\n{}", rep.total_table);
            eprintln!("wedge periodicity: {:?}", rep.wedge_periodicity);
        }
        Err(e) => eprintln!("ERR: {e}"),
    }
}
