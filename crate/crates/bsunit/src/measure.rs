//! The integer-valued measure on `O_p` attached to a narrow class, its moments, and the
//! multiplicative integral giving a conjugate of the Brumer-Stark unit.
//!
//! `nu(U)` is the smoothed Shintani count of `alpha` in the domain lying in `U`, and
//! `int_U x^j d nu` is the regularized sum of `alpha^j`. On a unimodular piece both have
//! closed forms in Bernoulli polynomials, which is all this module evaluates.

use std::collections::HashMap;
use std::sync::RwLock;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::padic::{log_p, split_p, PadicCtx, PadicElt};
use crate::quadfield::{Ideal, QElt, QuadField};
use crate::shintani::{
    bernoulli_numbers, piece_shift, rat_mod, reduce_mod, reg_count, reg_moments, shintani_domain,
    smoothed_terms, unimodular_pieces, ConePiece, Residue, ShintaniCone, Smoothing, ZetaQuery,
    DEFAULT_LEVEL_BOUND,
};

/// Levels accepted by the brute-force Riemann product.
pub const RIEMANN_LEVEL_BOUND: u32 = 4;

/// Moment orders accepted by the exact moment routines.
pub const MAX_MOMENT_ORDER: u32 = 120;

/// The measure `nu(b, D)` for one class representative and one smoothing setup.
#[derive(Debug)]
pub struct MeasureHandle {
    field: QuadField,
    query: ZetaQuery,
    level_bound: u32,
    /// `(weight, pieces)` for each smoothed lattice.
    pieces: Vec<(i64, Vec<ConePiece>)>,
    memo: RwLock<HashMap<Residue, BigInt>>,
}

/// A conjugate `p^zeta0 * int x d nu` together with its exponent.
#[derive(Clone, Debug)]
pub struct Conjugate {
    pub zeta0: i64,
    pub value: PadicElt,
}

/// Exact measures of every residue class at one level, indexed by `c0 * p^n + c1`.
#[derive(Clone, Debug)]
pub struct LevelTable {
    pub n: u32,
    pub p: u64,
    pub values: Vec<i64>,
}

impl LevelTable {
    pub fn get(&self, r: &Residue) -> i64 {
        let m = self.p.pow(self.n);
        self.values[(r.c0 * m + r.c1) as usize]
    }

    pub fn total(&self) -> i64 {
        self.values.iter().sum()
    }
}

impl MeasureHandle {
    /// `query` fixes the class, `p`, `ell` and smoothing; its congruence and `k` are ignored.
    pub fn new(field: &QuadField, query: &ZetaQuery) -> Result<Self> {
        Self::with_domain(field, query, &shintani_domain(field))
    }

    /// As [`MeasureHandle::new`] on an explicit list of cones tiling the domain.
    pub fn with_domain(field: &QuadField, query: &ZetaQuery, domain: &[ShintaniCone]) -> Result<Self> {
        if !field.is_inert(query.p)? {
            return Err(Error::NotInert { d: field.d(), p: query.p });
        }
        if !query.class_rep.is_coprime_to((query.p * query.ell) as i64) {
            return Err(Error::NotCoprime(query.p * query.ell));
        }
        if query.smoothing == Smoothing::Direct {
            // with alpha in b^{-1} q^{-1} the counting measure is not integral; rescaled by
            // ell it is the inverse smoothing at the conjugate prime
            return Err(Error::Invalid("the measure needs inverse smoothing".into()));
        }
        let mut q = query.clone();
        q.congruence = None;
        q.k = 0;
        let terms = smoothed_terms(field, &q)?;
        let mut pieces = Vec::new();
        for t in &terms {
            let mut ps = Vec::new();
            for cone in domain {
                ps.extend(unimodular_pieces(&t.lattice, cone)?);
            }
            pieces.push((t.weight, ps));
        }
        Ok(MeasureHandle {
            field: field.clone(),
            query: q,
            level_bound: DEFAULT_LEVEL_BOUND,
            pieces,
            memo: RwLock::new(HashMap::new()),
        })
    }

    pub fn field(&self) -> &QuadField {
        &self.field
    }

    pub fn query(&self) -> &ZetaQuery {
        &self.query
    }

    pub fn p(&self) -> u64 {
        self.query.p
    }

    pub fn class_rep(&self) -> &Ideal {
        &self.query.class_rep
    }

    pub fn piece_count(&self) -> usize {
        self.pieces.iter().map(|(_, v)| v.len()).sum()
    }

    fn check_level(&self, n: u32) -> Result<()> {
        if n > self.level_bound {
            return Err(Error::LevelTooDeep { level: n, bound: self.level_bound });
        }
        Ok(())
    }

    /// Shift parameters `(x1, x2)` and scaled generators of a piece restricted to `r`.
    fn restricted(&self, piece: &ConePiece, r: &Residue) -> (BigRational, BigRational, QElt, QElt) {
        let p = self.query.p;
        if r.n == 0 {
            return (BigRational::one(), BigRational::zero(), piece.a.clone(), piece.b.clone());
        }
        let (c1, c2) = piece_shift(&self.field, piece, r, p);
        let pm = BigInt::from(p).pow(r.n);
        let pr = BigRational::from_integer(pm.clone());
        (
            BigRational::new(c1, pm.clone()),
            BigRational::new(c2, pm),
            piece.a.scale(&pr),
            piece.b.scale(&pr),
        )
    }

    /// `nu(r + p^n O_p)`, exactly.
    pub fn measure_of(&self, r: &Residue) -> Result<BigInt> {
        if let Some(v) = self.memo.read().unwrap().get(r) {
            return Ok(v.clone());
        }
        let s = self.measure_rational(r)?;
        if !s.is_integer() {
            return Err(Error::Integrality(format!("measure of {r:?} is {s}")));
        }
        let v = s.to_integer();
        self.memo.write().unwrap().insert(*r, v.clone());
        Ok(v)
    }

    /// As [`MeasureHandle::measure_of`] without the integrality requirement (unsmoothed
    /// measures take rational values).
    pub fn measure_rational(&self, r: &Residue) -> Result<BigRational> {
        self.check_level(r.n)?;
        let mut s = BigRational::zero();
        for (w, ps) in &self.pieces {
            for piece in ps {
                let (x1, x2, v1, v2) = self.restricted(piece, r);
                s += reg_count(&self.field, &x1, &x2, &v1, &v2) * BigInt::from(*w);
            }
        }
        Ok(s)
    }

    /// Total mass `nu(O_p)`, which is the smoothed partial zeta value at `s = 0`.
    pub fn total_mass(&self) -> Result<BigInt> {
        self.measure_of(&Residue::new(0, 0, 0))
    }

    /// `int_{r + p^n O} x^k d nu` as an exact field element.
    pub fn moment(&self, r: &Residue, k: u32) -> Result<QElt> {
        Ok(self.moments(r, k)?.swap_remove(k as usize))
    }

    /// Moments of orders `0..=kmax` on one open set.
    pub fn moments(&self, r: &Residue, kmax: u32) -> Result<Vec<QElt>> {
        self.check_level(r.n)?;
        if kmax > MAX_MOMENT_ORDER {
            return Err(Error::Invalid(format!("moment order {kmax} above {MAX_MOMENT_ORDER}")));
        }
        let mut out = vec![QElt::zero(); kmax as usize + 1];
        for (w, ps) in &self.pieces {
            for piece in ps {
                let (x1, x2, v1, v2) = self.restricted(piece, r);
                let m = reg_moments(&self.field, &x1, &x2, &v1, &v2, kmax as usize);
                for (o, v) in out.iter_mut().zip(m) {
                    *o = o.add(&v.scale_int(*w));
                }
            }
        }
        Ok(out)
    }

    /// `int_{r + p^n O} (x - r)^k d nu`, where `r` is read as `c0 + c1 sqrt(D)`.
    pub fn centered_moment(&self, r: &Residue, k: u32) -> Result<QElt> {
        let m = self.moments(r, k)?;
        let c = self.field.from_sqrt_basis(
            &BigRational::from_integer(r.c0.into()),
            &BigRational::from_integer(r.c1.into()),
        );
        let negc = c.neg();
        let mut s = QElt::zero();
        for (j, mj) in m.iter().enumerate() {
            let b = crate::shintani::binomial(k as u64, j as u64);
            let t = self.field.mul(mj, &self.field.pow(&negc, k - j as u32));
            s = s.add(&t.scale(&BigRational::from_integer(b)));
        }
        Ok(s)
    }

    /// Measures of all `p^{2n}` residue classes at level `n`.
    ///
    /// Each piece contributes a separable rational function of its shift `(c1, c2)`; the sums
    /// are accumulated modulo a large prime and lifted, then checked against the total mass.
    pub fn level_table(&self, n: u32) -> Result<LevelTable> {
        self.check_level(n)?;
        let p = self.query.p;
        let pm = p.pow(n);
        let size = (pm * pm) as usize;
        let mut acc = vec![0u64; size];
        let pmb = BigInt::from(pm);
        let pi = pm as i128;
        for (w, ps) in &self.pieces {
            for piece in ps {
                let t21 = self.field.trace(&self.field.div(&piece.b, &piece.a));
                let t12 = self.field.trace(&self.field.div(&piece.a, &piece.b));
                let tden = t21.denom().lcm(t12.denom());
                let k1 = mq_big(&(&tden * BigInt::from(6)));
                let k2 = mq_big(&(t21.numer() * (&tden / t21.denom())));
                let k3 = mq_big(&(t12.numer() * (&tden / t12.denom())));
                let den = mq_big(&(&tden * BigInt::from(24) * BigInt::from(pm) * BigInt::from(pm)));
                let inv = mq_mul(mq_inv(den), mq_i128(*w as i128));
                let quad = |c: i128| mq_i128(6 * c * c - 6 * c * pi + pi * pi);
                // value(c1, c2) = x[c1] * y[c2] + z[c2] + v[c1]
                let x: Vec<u64> = (0..=pm).map(|c| mq_mul(mq_mul(k1, mq_i128(2 * c as i128 - pi)), inv)).collect();
                let y: Vec<u64> = (0..pm).map(|c| mq_i128(2 * c as i128 - pi)).collect();
                let z: Vec<u64> = (0..pm).map(|c| mq_mul(mq_mul(k2, quad(c as i128)), inv)).collect();
                let v: Vec<u64> = (0..=pm).map(|c| mq_mul(mq_mul(k3, quad(c as i128)), inv)).collect();
                let (a0, a1) = reduce_mod(&self.field, &piece.a, &pmb);
                let (b0, b1) = reduce_mod(&self.field, &piece.b, &pmb);
                let (a0, a1, b0, b1) = (to_u64(&a0), to_u64(&a1), to_u64(&b0), to_u64(&b1));
                for c1 in 1..=pm {
                    let mut r0 = (c1 % pm) * a0 % pm;
                    let mut r1 = (c1 % pm) * a1 % pm;
                    let xc = x[c1 as usize];
                    let vc = v[c1 as usize];
                    for c2 in 0..pm {
                        let idx = (r0 * pm + r1) as usize;
                        let val = mq_add(mq_add(mq_mul(xc, y[c2 as usize]), z[c2 as usize]), vc);
                        acc[idx] = mq_add(acc[idx], val);
                        r0 += b0;
                        if r0 >= pm {
                            r0 -= pm;
                        }
                        r1 += b1;
                        if r1 >= pm {
                            r1 -= pm;
                        }
                    }
                }
            }
        }
        let mut values = Vec::with_capacity(size);
        for a in acc {
            let v = mq_lift(a);
            if v.unsigned_abs() > 1 << 40 {
                return Err(Error::Integrality(format!("level {n} measure did not lift to an integer")));
            }
            values.push(v);
        }
        let table = LevelTable { n, p, values };
        let total = self.total_mass()?;
        if BigInt::from(table.total()) != total {
            return Err(Error::Integrality(format!(
                "level {n} table sums to {} instead of {total}",
                table.total()
            )));
        }
        Ok(table)
    }

    /// `prod a^{nu(a + p^N O)}` over unit residues `a` modulo `p^N`, as an element of precision `N`.
    pub fn riemann_oracle(&self, ctx: &PadicCtx, n: u32) -> Result<PadicElt> {
        if n == 0 || n > RIEMANN_LEVEL_BOUND {
            return Err(Error::LevelTooDeep { level: n, bound: RIEMANN_LEVEL_BOUND });
        }
        let table = self.level_table(n)?;
        let p = self.query.p;
        let pm = p.pow(n);
        let order = ((p * p - 1) * pm * pm / (p * p)) as i64;
        let d = ctx.d().rem_euclid(pm as i64) as u64;
        let sign = ctx.branch().sign();
        let mut acc = (1u64, 0u64);
        for c0 in 0..pm {
            for c1 in 0..pm {
                if c0 % p == 0 && c1 % p == 0 {
                    continue;
                }
                let e = table.values[(c0 * pm + c1) as usize].rem_euclid(order) as u64;
                if e == 0 {
                    continue;
                }
                let b1 = if sign > 0 { c1 } else { (pm - c1) % pm };
                let f = small_pow((c0, b1), e, d, pm);
                acc = small_mul(acc, f, d, pm);
            }
        }
        Ok(ctx.from_pair(&BigInt::from(acc.0), &BigInt::from(acc.1), n as i64))
    }

    /// `int_{a + pO} x^j d nu` for every unit residue `a` modulo `p` and `j <= jmax`, modulo
    /// `p^prec`, in the coordinates of `ctx`'s branch. Indexed like [`Residue::all`] at level 1
    /// (non-unit entries are empty).
    pub fn padic_moments(&self, ctx: &PadicCtx, jmax: usize, prec: u32) -> Result<Vec<Vec<(BigInt, BigInt)>>> {
        let p = self.query.p;
        let lmax = log_p(jmax as u64 + 2, p);
        let work = prec + 2 * lmax + 2;
        let kern = Kernel::new(ctx, p, jmax, work, lmax);
        let residues = Residue::all(p, 1);
        let sign = ctx.branch().sign();
        let field = &self.field;
        let per_residue: Vec<Result<Vec<(BigInt, BigInt)>>> = residues
            .par_iter()
            .map(|r| {
                if !r.is_unit(p) {
                    return Ok(vec![]);
                }
                let mut tot = vec![(BigInt::zero(), BigInt::zero()); jmax + 1];
                for (w, ps) in &self.pieces {
                    for piece in ps {
                        let (c1, c2) = piece_shift(field, piece, r, p);
                        let a = kern.embed(field, &piece.a, sign);
                        let b = kern.embed(field, &piece.b, sign);
                        let s = kern.piece(&a, &b, to_u64(&c1) as usize, to_u64(&c2) as usize);
                        let wb = BigInt::from(*w);
                        for (t, v) in tot.iter_mut().zip(s) {
                            t.0 += &v.0 * &wb;
                            t.1 += &v.1 * &wb;
                        }
                    }
                }
                // the sum of all pieces is p-integral: strip the scaling p^(2L+2)
                let shift = BigInt::from(p).pow(2 * lmax + 2);
                let out_m = BigInt::from(p).pow(prec);
                tot.into_iter()
                    .map(|(x, y)| {
                        let x = x.mod_floor(&kern.m);
                        let y = y.mod_floor(&kern.m);
                        if !(x.is_multiple_of(&shift) && y.is_multiple_of(&shift)) {
                            return Err(Error::Integrality(format!("moment at {r:?} is not integral")));
                        }
                        Ok(((x / &shift).mod_floor(&out_m), (y / &shift).mod_floor(&out_m)))
                    })
                    .collect()
            })
            .collect();
        per_residue.into_iter().collect()
    }

    /// Number of moments needed so that `int (x/omega(a) - 1)^k / k` is below `p^prec` beyond.
    pub fn moment_cutoff(p: u64, prec: u32) -> usize {
        let mut k: u64 = 1;
        loop {
            // all orders above k have valuation at least (k + 1) - log_p(k + 1) >= prec
            let next = k + 1;
            if next as i64 - log_p(next, p) as i64 >= prec as i64 {
                return k as usize;
            }
            k += 1;
        }
    }

    /// The multiplicative integral `x int_{O_p^*} x d nu` to relative precision `ctx.prec()`.
    pub fn mult_integral(&self, ctx: &PadicCtx) -> Result<PadicElt> {
        let p = self.query.p;
        let target = ctx.prec() as u32;
        let kmax = Self::moment_cutoff(p, target + 1);
        let lk = log_p(kmax as u64 + 1, p);
        let prec = target + lk + 2;
        let moments = self.padic_moments(ctx, kmax, prec)?;
        let level1 = self.level_table(1)?;
        let m = BigInt::from(p).pow(prec);
        let fctx = ctx.with_prec(prec);
        let binom = pascal(kmax, &m);
        let residues = Residue::all(p, 1);
        let sign = ctx.branch().sign();
        let mut omega_part = fctx.one();
        let mut log_sum = (BigInt::zero(), BigInt::zero());
        let out_prec = prec - lk;
        let out_m = BigInt::from(p).pow(out_prec);
        for (r, mj) in residues.iter().zip(&moments) {
            if !r.is_unit(p) {
                continue;
            }
            let a = fctx.from_pair(&BigInt::from(r.c0), &BigInt::from(sign * r.c1 as i64), prec as i64);
            let om = fctx.teichmuller(&a)?;
            let nu = level1.get(r);
            omega_part = fctx.mul(&omega_part, &fctx.pow(&om, nu)?);
            let oinv = fctx.inv(&om)?;
            let oinv = fctx.residue(&oinv, prec as i64);
            // z_j = omega^{-j} M_j
            let mut z = Vec::with_capacity(kmax + 1);
            let mut op = (BigInt::one(), BigInt::zero());
            for mjj in mj.iter() {
                z.push(pair_mul(&op, mjj, ctx.d(), &m));
                op = pair_mul(&op, &oinv, ctx.d(), &m);
            }
            for k in 1..=kmax {
                // y_k = int (x/omega - 1)^k d nu
                let mut s = (BigInt::zero(), BigInt::zero());
                for (j, zj) in z.iter().enumerate().take(k + 1) {
                    let c = &binom[k][j];
                    if (k - j) % 2 == 0 {
                        s.0 += c * &zj.0;
                        s.1 += c * &zj.1;
                    } else {
                        s.0 -= c * &zj.0;
                        s.1 -= c * &zj.1;
                    }
                }
                let (s0, s1) = (s.0.mod_floor(&m), s.1.mod_floor(&m));
                let (e, u) = split_p(&BigInt::from(k), p);
                let pe = BigInt::from(p).pow(e);
                if !(s0.is_multiple_of(&pe) && s1.is_multiple_of(&pe)) {
                    return Err(Error::Integrality(format!("log term {k} is not divisible by {k}")));
                }
                let uinv = u.extended_gcd(&out_m).x;
                let mut t0 = (s0 / &pe * &uinv).mod_floor(&out_m);
                let mut t1 = (s1 / &pe * &uinv).mod_floor(&out_m);
                if k % 2 == 0 {
                    t0 = -t0;
                    t1 = -t1;
                }
                log_sum.0 += t0;
                log_sum.1 += t1;
            }
        }
        let l = fctx.from_pair(&log_sum.0, &log_sum.1, out_prec as i64);
        if !l.is_zero() && l.val < 1 {
            return Err(Error::Integrality("additive integral is not in pO".into()));
        }
        let e = fctx.exp(&l)?;
        let res = fctx.mul(&omega_part, &e);
        Ok(ctx.cap(&res, target as i64))
    }

    /// `p^{zeta(b, 0)} * x int x d nu`.
    pub fn brumer_stark_conjugate(&self, ctx: &PadicCtx) -> Result<Conjugate> {
        let z = self.total_mass()?;
        let zeta0 = z
            .to_i64()
            .ok_or_else(|| Error::Invalid("zeta value out of range".into()))?;
        let u = self.mult_integral(ctx)?;
        Ok(Conjugate { zeta0, value: ctx.shift(&u, zeta0) })
    }
}

// ----- fixed-point kernel for level-one moments --------------------------------------------

/// Precomputed Bernoulli data for all shifts at level one, scaled to integers modulo `p^work`.
struct Kernel {
    p: u64,
    d: i64,
    m: BigInt,
    jmax: usize,
    /// `p^L`, the scaling of each Bernoulli quotient.
    pl: BigInt,
    /// `hs[c][i] = p^L * Bt_{i+1}(c) / (i+1)`.
    hs: Vec<Vec<BigInt>>,
    /// `g[c][j] = p^L * Bt_{j+2}(c) / (2(j+1)(j+2))`.
    g: Vec<Vec<BigInt>>,
    /// `t[c][j][i] = C(j,i) * hs[c][j-i]`.
    t: Vec<Vec<Vec<BigInt>>>,
}

impl Kernel {
    fn new(ctx: &PadicCtx, p: u64, jmax: usize, work: u32, lmax: u32) -> Self {
        let m = BigInt::from(p).pow(work);
        let pb = BigInt::from(p);
        let bern = bernoulli_numbers(jmax + 2);
        // B_m p^m reduced mod p^work
        let bp: Vec<BigInt> = bern
            .iter()
            .enumerate()
            .map(|(i, b)| rat_mod(&(b * BigRational::from_integer(pb.pow(i as u32))), &m))
            .collect();
        let binom = pascal(jmax + 2, &m);
        let pl = pb.pow(lmax);
        let scaled_div = |x: &BigInt, n: u64| -> BigInt {
            let (e, u) = split_p(&BigInt::from(n), p);
            let uinv = u.extended_gcd(&m).x;
            (x * pb.pow(lmax - e) * uinv).mod_floor(&m)
        };
        let mut hs = Vec::new();
        let mut g = Vec::new();
        for c in 0..=p {
            let cb = BigInt::from(c);
            let mut cp = vec![BigInt::one()];
            for i in 0..jmax + 2 {
                let next = &cp[i] * &cb;
                cp.push(next);
            }
            let bt: Vec<BigInt> = (0..=jmax + 2)
                .map(|l| {
                    let mut s = BigInt::zero();
                    for (k, bk) in bp.iter().enumerate().take(l + 1) {
                        s += &binom[l][k] * bk * &cp[l - k];
                    }
                    s.mod_floor(&m)
                })
                .collect();
            hs.push((0..=jmax).map(|i| scaled_div(&bt[i + 1], i as u64 + 1)).collect::<Vec<_>>());
            g.push(
                (0..=jmax)
                    .map(|j| scaled_div(&bt[j + 2], 2 * (j as u64 + 1) * (j as u64 + 2)))
                    .collect::<Vec<_>>(),
            );
        }
        let t = hs
            .iter()
            .map(|h| {
                (0..=jmax)
                    .map(|j| (0..=j).map(|i| (&binom[j][i] * &h[j - i]).mod_floor(&m)).collect())
                    .collect()
            })
            .collect();
        Kernel { p, d: ctx.d(), m, jmax, pl, hs, g, t }
    }

    fn embed(&self, field: &QuadField, a: &QElt, sign: i64) -> (BigInt, BigInt) {
        let (c0, c1) = reduce_mod(field, a, &self.m);
        if sign > 0 {
            (c0, c1)
        } else {
            (c0, (-c1).mod_floor(&self.m))
        }
    }

    fn mul(&self, a: &(BigInt, BigInt), b: &(BigInt, BigInt)) -> (BigInt, BigInt) {
        pair_mul(a, b, self.d, &self.m)
    }

    fn inv(&self, a: &(BigInt, BigInt)) -> (BigInt, BigInt) {
        let n = (&a.0 * &a.0 - &a.1 * &a.1 * self.d).mod_floor(&self.m);
        let ni = n.extended_gcd(&self.m).x;
        ((&a.0 * &ni).mod_floor(&self.m), (-&a.1 * &ni).mod_floor(&self.m))
    }

    fn conj(&self, a: &(BigInt, BigInt)) -> (BigInt, BigInt) {
        (a.0.clone(), (-&a.1).mod_floor(&self.m))
    }

    /// `p^{2L+2}` times the regularized moments `0..=jmax` of one piece with shift `(c1, c2)`.
    fn piece(&self, a: &(BigInt, BigInt), b: &(BigInt, BigInt), c1: usize, c2: usize) -> Vec<(BigInt, BigInt)> {
        debug_assert!(c1 <= self.p as usize && c2 < self.p as usize);
        let m = &self.m;
        let jmax = self.jmax;
        let binv = self.inv(b);
        let ainv = self.inv(a);
        let t = self.mul(a, &binv);
        // u_i = hs[c1][i] t^i
        let mut u = Vec::with_capacity(jmax + 1);
        let mut tp = (BigInt::one(), BigInt::zero());
        for i in 0..=jmax {
            let h = &self.hs[c1][i];
            u.push(((&tp.0 * h).mod_floor(m), (&tp.1 * h).mod_floor(m)));
            tp = self.mul(&tp, &t);
        }
        let ac = self.conj(a);
        let bc = self.conj(b);
        let sub = |x: &(BigInt, BigInt), y: &(BigInt, BigInt)| ((&x.0 - &y.0).mod_floor(m), (&x.1 - &y.1).mod_floor(m));
        let d02 = sub(b, &self.mul(&self.mul(a, &bc), &self.inv(&ac)));
        let d20 = sub(a, &self.mul(&self.mul(b, &ac), &self.inv(&bc)));
        let tc2 = &self.t[c2];
        let mut out = Vec::with_capacity(jmax + 1);
        let mut bj = (BigInt::one(), BigInt::zero());
        let mut aj1 = a.clone();
        let mut bj1 = b.clone();
        let mut d02p = d02.clone();
        let mut d20p = d20.clone();
        for j in 0..=jmax {
            let row = &tc2[j];
            let (mut s0, mut s1) = (BigInt::zero(), BigInt::zero());
            for i in 0..=j {
                s0 += &row[i] * &u[i].0;
                s1 += &row[i] * &u[i].1;
            }
            let first = self.mul(&bj, &(s0.mod_floor(m), s1.mod_floor(m)));
            let w02 = self.mul(&sub(&(&bj1.0 * 2, &bj1.1 * 2), &d02p), &ainv);
            let w20 = self.mul(&sub(&(&aj1.0 * 2, &aj1.1 * 2), &d20p), &binv);
            let g2 = &self.g[c2][j] * &self.pl;
            let g1 = &self.g[c1][j] * &self.pl;
            let r0 = &first.0 + &w02.0 * &g2 + &w20.0 * &g1;
            let r1 = &first.1 + &w02.1 * &g2 + &w20.1 * &g1;
            out.push((r0.mod_floor(m), r1.mod_floor(m)));
            bj = self.mul(&bj, b);
            aj1 = self.mul(&aj1, a);
            bj1 = self.mul(&bj1, b);
            d02p = self.mul(&d02p, &d02);
            d20p = self.mul(&d20p, &d20);
        }
        out
    }
}

fn pair_mul(a: &(BigInt, BigInt), b: &(BigInt, BigInt), d: i64, m: &BigInt) -> (BigInt, BigInt) {
    let c0 = &a.0 * &b.0 + &a.1 * &b.1 * d;
    let c1 = &a.0 * &b.1 + &a.1 * &b.0;
    (c0.mod_floor(m), c1.mod_floor(m))
}

/// Rows `0..=n` of Pascal's triangle modulo `m`.
fn pascal(n: usize, m: &BigInt) -> Vec<Vec<BigInt>> {
    let mut rows: Vec<Vec<BigInt>> = vec![vec![BigInt::one()]];
    for i in 1..=n {
        let prev = &rows[i - 1];
        let mut row = vec![BigInt::one(); i + 1];
        for j in 1..i {
            row[j] = (&prev[j - 1] + &prev[j]).mod_floor(m);
        }
        rows.push(row);
    }
    rows
}

fn to_u64(x: &BigInt) -> u64 {
    x.to_u64().expect("residue out of range")
}

// ----- arithmetic modulo the Mersenne prime 2^61 - 1 ----------------------------------------

const MQ: u64 = (1 << 61) - 1;

fn mq_mul(a: u64, b: u64) -> u64 {
    let x = a as u128 * b as u128;
    let lo = (x as u64) & MQ;
    let hi = (x >> 61) as u64;
    let s = lo + hi;
    if s >= MQ {
        s - MQ
    } else {
        s
    }
}

fn mq_add(a: u64, b: u64) -> u64 {
    let s = a + b;
    if s >= MQ {
        s - MQ
    } else {
        s
    }
}

fn mq_i128(x: i128) -> u64 {
    x.rem_euclid(MQ as i128) as u64
}

fn mq_big(x: &BigInt) -> u64 {
    x.mod_floor(&BigInt::from(MQ)).to_u64().unwrap()
}

fn mq_inv(a: u64) -> u64 {
    assert!(a != 0, "denominator divisible by the working prime");
    let mut r = 1u64;
    let mut b = a;
    let mut e = MQ - 2;
    while e > 0 {
        if e & 1 == 1 {
            r = mq_mul(r, b);
        }
        b = mq_mul(b, b);
        e >>= 1;
    }
    r
}

fn mq_lift(a: u64) -> i64 {
    if a > MQ / 2 {
        -((MQ - a) as i64)
    } else {
        a as i64
    }
}

// ----- small arithmetic in (Z/p^N)[w] -------------------------------------------------------

fn small_mul(a: (u64, u64), b: (u64, u64), d: u64, m: u64) -> (u64, u64) {
    let m1 = m as u128;
    let c0 = (a.0 as u128 * b.0 as u128 + (a.1 as u128 * b.1 as u128 % m1) * d as u128) % m1;
    let c1 = (a.0 as u128 * b.1 as u128 + a.1 as u128 * b.0 as u128) % m1;
    (c0 as u64, c1 as u64)
}

fn small_pow(mut b: (u64, u64), mut e: u64, d: u64, m: u64) -> (u64, u64) {
    let mut r = (1 % m, 0);
    while e > 0 {
        if e & 1 == 1 {
            r = small_mul(r, b, d, m);
        }
        b = small_mul(b, b, d, m);
        e >>= 1;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::padic::Branch;
    use crate::quadfield::{make_field, narrow_class_group};
    use crate::shintani::partial_zeta;

    fn handle(d: i64, p: u64, ell: u64, class: usize) -> MeasureHandle {
        let f = make_field(d).unwrap();
        let g = narrow_class_group(&f, (p * ell) as i64);
        MeasureHandle::new(&f, &ZetaQuery::new(g.reps[class].clone(), p, ell)).unwrap()
    }

    #[test]
    fn level_table_matches_exact_measure() {
        let h = handle(221, 3, 5, 1);
        let t = h.level_table(2).unwrap();
        for r in Residue::all(3, 2).iter().step_by(7) {
            assert_eq!(BigInt::from(t.get(r)), h.measure_of(r).unwrap());
        }
        let q = h.query().clone().with_congruence(Residue::new(1, 1, 2));
        assert_eq!(
            partial_zeta(h.field(), &q).unwrap(),
            BigRational::from_integer(h.measure_of(&Residue::new(1, 1, 2)).unwrap())
        );
    }

    #[test]
    fn zeroth_moment_is_measure() {
        let h = handle(221, 3, 5, 2);
        let r = Residue::new(1, 2, 1);
        let m = h.moment(&r, 0).unwrap();
        assert_eq!(m, QElt::new(BigRational::from_integer(h.measure_of(&r).unwrap()), BigRational::zero()));
    }

    #[test]
    fn padic_moments_match_exact_moments() {
        let h = handle(221, 3, 5, 1);
        let ctx = PadicCtx::new(3, 30, 221, Branch::Plus).unwrap();
        let pm = h.padic_moments(&ctx, 5, 20).unwrap();
        let m = BigInt::from(3).pow(20);
        for (idx, r) in Residue::all(3, 1).iter().enumerate() {
            if !r.is_unit(3) {
                continue;
            }
            let exact = h.moments(r, 5).unwrap();
            for j in 0..=5 {
                let (u, v) = h.field().to_sqrt_basis(&exact[j]);
                assert_eq!(pm[idx][j], (rat_mod(&u, &m), rat_mod(&v, &m)), "r={r:?} j={j}");
            }
        }
    }

    #[test]
    fn integral_agrees_with_riemann_products() {
        let h = handle(221, 3, 5, 1);
        let ctx = PadicCtx::new(3, 20, 221, Branch::Plus).unwrap();
        let u = h.mult_integral(&ctx).unwrap();
        assert_eq!(u.val, 0);
        for n in 1..=3 {
            let r = h.riemann_oracle(&ctx, n).unwrap();
            assert!(ctx.agree(&u, &r, n as i64), "level {n}");
        }
    }
}
