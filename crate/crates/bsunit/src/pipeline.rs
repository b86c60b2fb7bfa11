//! End-to-end computation of the conjugates and minimal polynomial of the unit.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::measure::MeasureHandle;
use crate::padic::{Branch, PadicCtx, PadicElt};
use crate::quadfield::{make_field, narrow_class_group, Ideal, NarrowClassGroup, QuadField};
use crate::recognize::{minimal_polynomial, MinPolyResult, DEFAULT_GUARD};
use crate::shintani::{Smoothing, ZetaQuery};

/// Default target precision in base-`p` digits.
pub const DEFAULT_PRECISION: u32 = 100;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnitConfig {
    pub d: i64,
    pub p: u64,
    pub ell: u64,
    pub precision: u32,
    pub smoothing: Smoothing,
    pub extra_t: Vec<u64>,
    pub branch: Branch,
    pub guard: u32,
    pub ell_prime: usize,
}

impl UnitConfig {
    pub fn new(d: i64, p: u64, ell: u64) -> Self {
        UnitConfig {
            d,
            p,
            ell,
            precision: DEFAULT_PRECISION,
            smoothing: Smoothing::Inverse,
            extra_t: vec![],
            branch: Branch::Plus,
            guard: DEFAULT_GUARD,
            ell_prime: 0,
        }
    }

    /// The integer every class representative must be coprime to.
    pub fn avoid(&self) -> i64 {
        (self.p * self.ell) as i64 * self.extra_t.iter().product::<u64>() as i64
    }

    /// Validated field and class group for this configuration.
    pub fn setup(&self) -> Result<(QuadField, NarrowClassGroup)> {
        let field = make_field(self.d)?;
        if self.p == 2 || !crate::quadfield::is_prime(self.p) {
            return Err(Error::NotOddPrime(self.p));
        }
        if !field.is_inert(self.p)? {
            return Err(Error::NotInert { d: self.d, p: self.p });
        }
        if self.ell == self.p {
            return Err(Error::Invalid("smoothing prime equals p".into()));
        }
        field.degree_one_prime_at(self.ell, self.ell_prime)?;
        let group = narrow_class_group(&field, self.avoid());
        Ok((field, group))
    }

    pub fn query(&self, rep: &Ideal) -> ZetaQuery {
        let mut q = ZetaQuery::new(rep.clone(), self.p, self.ell);
        q.smoothing = self.smoothing;
        q.extra_t = self.extra_t.clone();
        q.ell_prime = self.ell_prime;
        q
    }
}

#[derive(Clone, Debug)]
pub struct ClassConjugate {
    pub class_index: usize,
    pub rep: Ideal,
    pub zeta0: i64,
    pub value: PadicElt,
}

#[derive(Clone, Debug)]
pub struct UnitComputation {
    pub field: QuadField,
    pub group: NarrowClassGroup,
    pub ctx: PadicCtx,
    pub work_precision: u32,
    pub conjugates: Vec<ClassConjugate>,
    pub minpoly: MinPolyResult,
}

/// Working precision `M + 2 max|zeta| + 16`.
pub fn work_precision(m: u32, zetas: &[i64]) -> u32 {
    m + 2 * zetas.iter().map(|z| z.unsigned_abs() as u32).max().unwrap_or(0) + 16
}

/// The smoothed zeta values at `s = 0` of every class, in class order.
pub fn class_zetas(field: &QuadField, group: &NarrowClassGroup, cfg: &UnitConfig) -> Result<Vec<i64>> {
    group
        .reps
        .iter()
        .map(|r| {
            let h = MeasureHandle::new(field, &cfg.query(r))?;
            let z = h.total_mass()?;
            i64::try_from(z).map_err(|_| Error::Invalid("zeta value out of range".into()))
        })
        .collect()
}

/// Conjugates of the unit at the given working precision.
pub fn conjugates(
    field: &QuadField,
    group: &NarrowClassGroup,
    cfg: &UnitConfig,
    ctx: &PadicCtx,
) -> Result<Vec<ClassConjugate>> {
    group
        .reps
        .par_iter()
        .enumerate()
        .map(|(i, rep)| {
            let h = MeasureHandle::new(field, &cfg.query(rep))?;
            let c = h.brumer_stark_conjugate(ctx)?;
            Ok(ClassConjugate { class_index: i, rep: rep.clone(), zeta0: c.zeta0, value: c.value })
        })
        .collect()
}

pub fn compute_unit(cfg: &UnitConfig) -> Result<UnitComputation> {
    let (field, group) = cfg.setup()?;
    let zetas = class_zetas(&field, &group, cfg)?;
    let work = work_precision(cfg.precision, &zetas);
    let ctx = PadicCtx::new(cfg.p, work, cfg.d, cfg.branch)?;
    let conj = conjugates(&field, &group, cfg, &ctx)?;
    let values: Vec<PadicElt> = conj.iter().map(|c| c.value.clone()).collect();
    let minpoly = minimal_polynomial(&field, &ctx, &values, cfg.guard)?;
    Ok(UnitComputation { field, group, ctx, work_precision: work, conjugates: conj, minpoly })
}
