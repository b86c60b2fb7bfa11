//! Quick invariant checks that need no published tables.

use std::sync::Arc;

use num_bigint::BigInt;
use serde_json::json;

use bsunit::groupring::{fitting_ideal, stickelberger, AbelianGroup, GroupRingElt, MinusAlgebra};
use bsunit::measure::MeasureHandle;
use bsunit::padic::hensel_sqrt;
use bsunit::pipeline::{class_zetas, UnitConfig};
use bsunit::shintani::Residue;

type Check = (&'static str, fn() -> Result<bool, String>);

fn big(v: &[i64]) -> Vec<BigInt> {
    v.iter().map(|&x| BigInt::from(x)).collect()
}

fn ring_axioms() -> Result<bool, String> {
    let g = Arc::new(AbelianGroup::cyclic_product(&[2, 3]));
    let e = |v: &[i64]| GroupRingElt::from_coeffs(g.clone(), big(v), None);
    let (x, y, z) = (e(&[1, -2, 0, 3, 1, 1]), e(&[0, 1, 4, -1, 2, 0]), e(&[2, 0, 0, 1, -3, 5]));
    Ok(x.mul(&y).mul(&z) == x.mul(&y.mul(&z))
        && x.mul(&y.add(&z)) == x.mul(&y).add(&x.mul(&z))
        && x.mul(&y) == y.mul(&x))
}

fn minus_projection() -> Result<bool, String> {
    let g = Arc::new(AbelianGroup::cyclic_product(&[2, 3]));
    let r = MinusAlgebra::new(g.clone(), 3, 3, 4).map_err(|e| e.to_string())?;
    let c1 = GroupRingElt::from_coeffs(g, big(&[1, 0, 0, 1, 0, 0]), None);
    Ok(r.project(&c1).iter().all(|x| x == &BigInt::from(0)))
}

fn fitting_of_identity() -> Result<bool, String> {
    let g = Arc::new(AbelianGroup::cyclic_product(&[2, 3]));
    let r = MinusAlgebra::new(g, 3, 3, 2).map_err(|e| e.to_string())?;
    let zero = vec![BigInt::from(0); r.rank()];
    let id = vec![vec![r.one(), zero.clone()], vec![zero, r.one()]];
    Ok(fitting_ideal(&r, &id).map_err(|e| e.to_string())? == r.one())
}

fn padic_roundtrips() -> Result<bool, String> {
    let ctx = hensel_sqrt(3, 30, 221).map_err(|e| e.to_string())?;
    let x = ctx.from_pair(&BigInt::from(6), &BigInt::from(3), 30);
    let back = ctx.log(&ctx.exp(&x).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let u = ctx.from_pair(&BigInt::from(2), &BigInt::from(1), 30);
    let t = ctx.teichmuller(&u).map_err(|e| e.to_string())?;
    let t8 = ctx.pow(&t, 8).map_err(|e| e.to_string())?;
    Ok(ctx.agree(&back, &x, 29) && ctx.agree(&t8, &ctx.one(), 30) && ctx.agree(&t, &u, 1))
}

fn stickelberger_parity() -> Result<bool, String> {
    let cfg = UnitConfig::new(221, 3, 5);
    let (field, group) = cfg.setup().map_err(|e| e.to_string())?;
    let zetas = class_zetas(&field, &group, &cfg).map_err(|e| e.to_string())?;
    let theta = stickelberger(&group, &zetas).map_err(|e| e.to_string())?;
    Ok(theta.augmentation() == BigInt::from(0) && theta.act(group.conj_class) == theta.neg())
}

fn measure_additivity() -> Result<bool, String> {
    let cfg = UnitConfig::new(221, 3, 5);
    let (field, group) = cfg.setup().map_err(|e| e.to_string())?;
    let h = MeasureHandle::new(&field, &cfg.query(&group.reps[1])).map_err(|e| e.to_string())?;
    let t1 = h.level_table(1).map_err(|e| e.to_string())?;
    let t2 = h.level_table(2).map_err(|e| e.to_string())?;
    let ok = Residue::all(3, 1)
        .iter()
        .all(|r| r.children(3).iter().map(|c| t2.get(c)).sum::<i64>() == t1.get(r));
    Ok(ok && t1.total() == t2.total())
}

const CHECKS: &[Check] = &[
    ("group ring axioms", ring_axioms),
    ("minus projection kills c + 1", minus_projection),
    ("fitting ideal of the identity", fitting_of_identity),
    ("teichmuller, log and exp", padic_roundtrips),
    ("stickelberger zero sum and parity", stickelberger_parity),
    ("measure additivity", measure_additivity),
];

pub fn run(json_out: bool) -> bool {
    let results: Vec<(&str, Result<bool, String>)> = CHECKS.iter().map(|(n, f)| (*n, f())).collect();
    let passed = results.iter().all(|(_, r)| matches!(r, Ok(true)));
    if json_out {
        let checks: Vec<_> = results
            .iter()
            .map(|(n, r)| match r {
                Ok(ok) => json!({"name": n, "ok": ok}),
                Err(e) => json!({"name": n, "ok": false, "error": e}),
            })
            .collect();
        let report = json!({"schema": super::SCHEMA, "command": "selftest", "checks": checks, "passed": passed});
        println!("{}", serde_json::to_string_pretty(&report).unwrap());
    } else {
        for (n, r) in &results {
            let status = if matches!(r, Ok(true)) { "ok" } else { "FAILED" };
            println!("{status:>6}  {n}");
        }
    }
    passed
}
