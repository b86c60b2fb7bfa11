//! Arithmetic in the unramified quadratic extension `Q_p(w)`, `w^2 = D`, of `Q_p` for an odd
//! prime `p` inert in `Q(sqrt(D))`.
//!
//! An element is `p^val * (c0 + c1 w)` with the mantissa known modulo `p^(prec - val)`, so
//! `prec` is the absolute precision. Unless the element is zero, `p` does not divide both
//! `c0` and `c1`. Precision is tracked conservatively through every operation.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::quadfield::{is_prime, QElt, QuadField};

/// Which square root of `D` the embedding `F -> F_p` sends `sqrt(D)` to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    pub fn sign(&self) -> i64 {
        match self {
            Branch::Plus => 1,
            Branch::Minus => -1,
        }
    }

    pub fn flip(&self) -> Branch {
        match self {
            Branch::Plus => Branch::Minus,
            Branch::Minus => Branch::Plus,
        }
    }
}

/// Context for `Q_p(w)` at a fixed default precision.
#[derive(Clone, Debug)]
pub struct PadicCtx {
    p: u64,
    prec: i64,
    d: i64,
    branch: Branch,
    pb: BigInt,
    powers: Vec<BigInt>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PadicElt {
    pub val: i64,
    pub c0: BigInt,
    pub c1: BigInt,
    pub prec: i64,
}

impl PadicElt {
    pub fn is_zero(&self) -> bool {
        self.c0.is_zero() && self.c1.is_zero()
    }

    pub fn valuation(&self) -> i64 {
        self.val
    }

    pub fn rel_prec(&self) -> i64 {
        self.prec - self.val
    }

    pub fn is_unit(&self) -> bool {
        !self.is_zero() && self.val == 0
    }
}

impl fmt::Display for PadicElt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p^{} * ({} + {}*w) + O(p^{})", self.val, self.c0, self.c1, self.prec)
    }
}

/// Legendre symbol of `a` modulo an odd prime `p`.
pub fn legendre(a: i64, p: u64) -> i32 {
    let a = a.rem_euclid(p as i64) as u64;
    if a == 0 {
        return 0;
    }
    let mut r = 1u128;
    let mut b = a as u128;
    let mut e = (p - 1) / 2;
    let m = p as u128;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % m;
        }
        b = b * b % m;
        e >>= 1;
    }
    if r == 1 {
        1
    } else {
        -1
    }
}

/// Builds the context for `Q_p(sqrt(D))` at precision `m`. The generator `w` is the Hensel lift
/// of the smallest residue-field square root of `D` in the representation `F_p[w]/(w^2 - D)`,
/// which is `w` itself.
pub fn hensel_sqrt(p: u64, m: u32, d: i64) -> Result<PadicCtx> {
    PadicCtx::new(p, m, d, Branch::Plus)
}

impl PadicCtx {
    pub fn new(p: u64, m: u32, d: i64, branch: Branch) -> Result<Self> {
        if p == 2 || !is_prime(p) {
            return Err(Error::NotOddPrime(p));
        }
        match legendre(d, p) {
            -1 => {}
            0 => return Err(Error::Ramified { d, p }),
            _ => return Err(Error::NotInert { d, p }),
        }
        let pb = BigInt::from(p);
        let mut powers = vec![BigInt::one()];
        for i in 0..(2 * m as usize + 64) {
            let next = &powers[i] * &pb;
            powers.push(next);
        }
        Ok(PadicCtx { p, prec: m as i64, d, branch, pb, powers })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn prec(&self) -> i64 {
        self.prec
    }

    pub fn d(&self) -> i64 {
        self.d
    }

    pub fn branch(&self) -> Branch {
        self.branch
    }

    /// Same field and precision with the other square root of `D`.
    pub fn flipped(&self) -> PadicCtx {
        let mut c = self.clone();
        c.branch = self.branch.flip();
        c
    }

    /// Same field and branch at another default precision.
    pub fn with_prec(&self, m: u32) -> PadicCtx {
        PadicCtx::new(self.p, m, self.d, self.branch).unwrap()
    }

    pub fn ppow(&self, k: i64) -> BigInt {
        assert!(k >= 0);
        let k = k as usize;
        if k < self.powers.len() {
            self.powers[k].clone()
        } else {
            self.pb.pow(k as u32)
        }
    }

    /// The generator `w` with `w^2 = D`.
    pub fn w(&self) -> PadicElt {
        self.normalize(0, BigInt::zero(), BigInt::one(), self.prec)
    }

    pub fn zero_at(&self, prec: i64) -> PadicElt {
        PadicElt { val: prec, c0: BigInt::zero(), c1: BigInt::zero(), prec }
    }

    pub fn zero(&self) -> PadicElt {
        self.zero_at(self.prec)
    }

    pub fn one(&self) -> PadicElt {
        self.from_int(&BigInt::one())
    }

    /// Reduces and strips common factors of `p` from a mantissa.
    pub fn normalize(&self, mut val: i64, c0: BigInt, c1: BigInt, prec: i64) -> PadicElt {
        if prec <= val {
            return self.zero_at(prec);
        }
        let m = self.ppow(prec - val);
        let mut c0 = c0.mod_floor(&m);
        let mut c1 = c1.mod_floor(&m);
        if c0.is_zero() && c1.is_zero() {
            return self.zero_at(prec);
        }
        loop {
            let (q0, r0) = c0.div_rem(&self.pb);
            if !r0.is_zero() {
                break;
            }
            let (q1, r1) = c1.div_rem(&self.pb);
            if !r1.is_zero() {
                break;
            }
            c0 = q0;
            c1 = q1;
            val += 1;
        }
        PadicElt { val, c0, c1, prec }
    }

    pub fn from_int(&self, n: &BigInt) -> PadicElt {
        self.from_pair(n, &BigInt::zero(), self.prec)
    }

    pub fn from_i64(&self, n: i64) -> PadicElt {
        self.from_int(&BigInt::from(n))
    }

    /// `c0 + c1 w` with integer coordinates, at absolute precision `prec`.
    pub fn from_pair(&self, c0: &BigInt, c1: &BigInt, prec: i64) -> PadicElt {
        self.normalize(0, c0.clone(), c1.clone(), prec)
    }

    pub fn from_rational(&self, r: &BigRational) -> PadicElt {
        self.from_rational_pair(r, &BigRational::zero(), self.prec)
    }

    /// `u + v w` with rational coordinates, at absolute precision `prec`.
    pub fn from_rational_pair(&self, u: &BigRational, v: &BigRational, prec: i64) -> PadicElt {
        let den = u.denom().lcm(v.denom());
        let (e, unit) = split_p(&den, self.p);
        let a = (u * BigRational::from_integer(den.clone())).to_integer();
        let b = (v * BigRational::from_integer(den)).to_integer();
        let num = self.normalize(0, a, b, prec + e as i64);
        let m = self.ppow((prec + e as i64 - num.val).max(1));
        let inv = unit.mod_floor(&m).extended_gcd(&m).x;
        let scaled = PadicElt {
            val: num.val,
            c0: &num.c0 * &inv,
            c1: &num.c1 * &inv,
            prec: num.prec,
        };
        let s = self.normalize(scaled.val, scaled.c0, scaled.c1, scaled.prec);
        self.shift(&s, -(e as i64))
    }

    /// Image of a field element under the embedding selected by the branch.
    pub fn from_qelt(&self, field: &QuadField, a: &QElt) -> PadicElt {
        self.from_qelt_prec(field, a, self.prec)
    }

    pub fn from_qelt_prec(&self, field: &QuadField, a: &QElt, prec: i64) -> PadicElt {
        let (u, v) = field.to_sqrt_basis(a);
        let v = v * BigInt::from(self.branch.sign());
        self.from_rational_pair(&u, &v, prec)
    }

    /// Multiplication by `p^k`.
    pub fn shift(&self, a: &PadicElt, k: i64) -> PadicElt {
        PadicElt { val: a.val + k, c0: a.c0.clone(), c1: a.c1.clone(), prec: a.prec + k }
    }

    pub fn cap(&self, a: &PadicElt, prec: i64) -> PadicElt {
        if prec >= a.prec {
            return a.clone();
        }
        self.normalize(a.val, a.c0.clone(), a.c1.clone(), prec)
    }

    pub fn add(&self, a: &PadicElt, b: &PadicElt) -> PadicElt {
        let prec = a.prec.min(b.prec);
        if a.is_zero() {
            return self.cap(b, prec);
        }
        if b.is_zero() {
            return self.cap(a, prec);
        }
        let v = a.val.min(b.val);
        let sa = self.ppow(a.val - v);
        let sb = self.ppow(b.val - v);
        self.normalize(v, &a.c0 * &sa + &b.c0 * &sb, &a.c1 * &sa + &b.c1 * &sb, prec)
    }

    pub fn neg(&self, a: &PadicElt) -> PadicElt {
        self.normalize(a.val, -a.c0.clone(), -a.c1.clone(), a.prec)
    }

    pub fn sub(&self, a: &PadicElt, b: &PadicElt) -> PadicElt {
        self.add(a, &self.neg(b))
    }

    pub fn mul(&self, a: &PadicElt, b: &PadicElt) -> PadicElt {
        let prec = (a.prec + b.val).min(b.prec + a.val);
        if a.is_zero() || b.is_zero() {
            return self.zero_at(prec);
        }
        let c0 = &a.c0 * &b.c0 + &a.c1 * &b.c1 * self.d;
        let c1 = &a.c0 * &b.c1 + &a.c1 * &b.c0;
        self.normalize(a.val + b.val, c0, c1, prec)
    }

    pub fn mul_int(&self, a: &PadicElt, n: &BigInt) -> PadicElt {
        if n.is_zero() {
            return self.zero_at(a.prec);
        }
        let (e, u) = split_p(n, self.p);
        self.normalize(a.val + e as i64, &a.c0 * &u, &a.c1 * &u, a.prec + e as i64)
    }

    pub fn square(&self, a: &PadicElt) -> PadicElt {
        self.mul(a, a)
    }

    pub fn conj(&self, a: &PadicElt) -> PadicElt {
        self.normalize(a.val, a.c0.clone(), -a.c1.clone(), a.prec)
    }

    pub fn inv(&self, a: &PadicElt) -> Result<PadicElt> {
        if a.is_zero() {
            return Err(Error::DomainError("inverse of zero"));
        }
        let r = a.rel_prec();
        let m = self.ppow(r);
        let n = (&a.c0 * &a.c0 - &a.c1 * &a.c1 * self.d).mod_floor(&m);
        let ninv = n.extended_gcd(&m).x;
        Ok(self.normalize(-a.val, &a.c0 * &ninv, -&a.c1 * &ninv, -a.val + r))
    }

    pub fn div(&self, a: &PadicElt, b: &PadicElt) -> Result<PadicElt> {
        Ok(self.mul(a, &self.inv(b)?))
    }

    pub fn pow(&self, a: &PadicElt, e: i64) -> Result<PadicElt> {
        let base = if e < 0 { self.inv(a)? } else { a.clone() };
        let mut e = e.unsigned_abs();
        let mut r: Option<PadicElt> = None;
        let mut b = base;
        while e > 0 {
            if e & 1 == 1 {
                r = Some(match r {
                    None => b.clone(),
                    Some(r) => self.mul(&r, &b),
                });
            }
            e >>= 1;
            if e > 0 {
                b = self.mul(&b, &b);
            }
        }
        Ok(r.unwrap_or_else(|| self.one()))
    }

    /// `N_{F_p/Q_p}(a) = a * conj(a)`.
    pub fn norm(&self, a: &PadicElt) -> PadicElt {
        self.mul(a, &self.conj(a))
    }

    /// True if `a` and `b` agree modulo `p^k`.
    pub fn agree(&self, a: &PadicElt, b: &PadicElt, k: i64) -> bool {
        let d = self.sub(a, b);
        d.prec >= k && (d.is_zero() || d.val >= k)
    }

    /// Coordinates of a p-integral element modulo `p^k` (requires `val >= 0`, `prec >= k`).
    pub fn residue(&self, a: &PadicElt, k: i64) -> (BigInt, BigInt) {
        assert!(a.val >= 0 && a.prec >= k);
        if a.is_zero() {
            return (BigInt::zero(), BigInt::zero());
        }
        let m = self.ppow(k);
        let s = self.ppow(a.val);
        ((&a.c0 * &s).mod_floor(&m), (&a.c1 * &s).mod_floor(&m))
    }

    /// Teichmuller representative of a unit.
    pub fn teichmuller(&self, a: &PadicElt) -> Result<PadicElt> {
        if !a.is_unit() {
            return Err(Error::NotUnit);
        }
        let q = (self.p * self.p) as i64;
        let mut y = a.clone();
        for _ in 0..a.prec {
            y = self.pow(&y, q)?;
        }
        Ok(y)
    }

    /// Iwasawa logarithm: `log(p^v u) = log(u)`, with `log(u) = log(u^(p^2-1))/(p^2-1)`.
    pub fn log(&self, a: &PadicElt) -> Result<PadicElt> {
        if a.is_zero() {
            return Err(Error::DomainError("log of zero"));
        }
        let u = PadicElt { val: 0, c0: a.c0.clone(), c1: a.c1.clone(), prec: a.rel_prec() };
        let q1 = (self.p * self.p - 1) as i64;
        let y = self.pow(&u, q1)?;
        let z = self.sub(&y, &self.one());
        let l = self.log1p(&z)?;
        let inv = self.inv(&self.from_i64(q1))?;
        Ok(self.mul(&l, &inv))
    }

    /// `log(1 + z)` for `val(z) >= 1`.
    pub fn log1p(&self, z: &PadicElt) -> Result<PadicElt> {
        let prec = z.prec;
        if z.is_zero() {
            return Ok(self.zero_at(prec));
        }
        if z.val < 1 {
            return Err(Error::DomainError("log1p needs positive valuation"));
        }
        let mut acc = self.zero_at(prec);
        let mut zn = z.clone();
        let mut n: i64 = 1;
        loop {
            // term valuation is at least n*val(z) - log_p(n)
            let vn = vp_u64(n as u64, self.p) as i64;
            if n * z.val - (log_p(n as u64, self.p) as i64) >= prec && n > 1 {
                break;
            }
            let mut term = self.mul(&zn, &self.inv(&self.from_pair(&BigInt::from(n), &BigInt::zero(), prec + vn + 1))?);
            if n % 2 == 0 {
                term = self.neg(&term);
            }
            acc = self.add(&acc, &term);
            zn = self.mul(&zn, z);
            n += 1;
        }
        Ok(self.cap(&acc, prec))
    }

    /// `exp(y)` for `val(y) >= 1`.
    pub fn exp(&self, y: &PadicElt) -> Result<PadicElt> {
        let prec = y.prec;
        if y.is_zero() {
            return Ok(self.from_pair(&BigInt::one(), &BigInt::zero(), prec));
        }
        if y.val < 1 {
            return Err(Error::DomainError("exp needs positive valuation"));
        }
        let p = self.p as i64;
        let mut acc = self.from_pair(&BigInt::one(), &BigInt::zero(), prec);
        let mut term = self.from_pair(&BigInt::one(), &BigInt::zero(), prec + 4 * prec);
        let mut n: i64 = 1;
        loop {
            if n * y.val - (n - 1) / (p - 1) > prec + 1 {
                break;
            }
            let nn = self.from_pair(&BigInt::from(n), &BigInt::zero(), prec * 8 + 64);
            term = self.div(&self.mul(&term, y), &nn)?;
            acc = self.add(&acc, &term);
            n += 1;
        }
        Ok(self.cap(&acc, prec))
    }

    /// Square root by Newton iteration from the smallest residue root.
    pub fn sqrt(&self, a: &PadicElt) -> Result<PadicElt> {
        if a.is_zero() {
            return Ok(a.clone());
        }
        if a.val % 2 != 0 {
            return Err(Error::DomainError("odd valuation has no square root"));
        }
        let u = PadicElt { val: 0, c0: a.c0.clone(), c1: a.c1.clone(), prec: a.rel_prec() };
        let p = self.p;
        let pb = BigInt::from(p);
        let (t0, t1) = (u.c0.mod_floor(&pb), u.c1.mod_floor(&pb));
        let mut root = None;
        'search: for x0 in 0..p {
            for x1 in 0..p {
                let (x0b, x1b) = (BigInt::from(x0), BigInt::from(x1));
                let s0 = (&x0b * &x0b + &x1b * &x1b * self.d).mod_floor(&pb);
                let s1 = (BigInt::from(2) * &x0b * &x1b).mod_floor(&pb);
                if s0 == t0 && s1 == t1 {
                    root = Some((x0b, x1b));
                    break 'search;
                }
            }
        }
        let Some((x0, x1)) = root else {
            return Err(Error::DomainError("not a square"));
        };
        let prec = u.prec;
        let mut r = self.from_pair(&x0, &x1, prec);
        let half = self.inv(&self.from_pair(&BigInt::from(2), &BigInt::zero(), prec))?;
        let mut k = 1;
        while k < prec + 1 {
            let q = self.div(&u, &r)?;
            r = self.mul(&self.add(&r, &q), &half);
            r = self.cap(&r, prec);
            k *= 2;
        }
        Ok(self.shift(&r, a.val / 2))
    }
}

/// `(e, u)` with `n = p^e * u`, `p` not dividing `u`.
pub fn split_p(n: &BigInt, p: u64) -> (u32, BigInt) {
    let pb = BigInt::from(p);
    let mut n = n.clone();
    let mut e = 0;
    if n.is_zero() {
        return (0, n);
    }
    loop {
        let (q, r) = n.div_rem(&pb);
        if !r.is_zero() {
            break;
        }
        n = q;
        e += 1;
    }
    (e, n)
}

/// p-adic valuation of a nonzero rational.
pub fn vp_rational(r: &BigRational, p: u64) -> Option<i64> {
    if r.is_zero() {
        return None;
    }
    let (a, _) = split_p(r.numer(), p);
    let (b, _) = split_p(r.denom(), p);
    Some(a as i64 - b as i64)
}

pub fn vp_u64(mut n: u64, p: u64) -> u32 {
    let mut e = 0;
    while n > 0 && n % p == 0 {
        n /= p;
        e += 1;
    }
    e
}

/// `floor(log_p(n))` for `n >= 1`.
pub fn log_p(n: u64, p: u64) -> u32 {
    let mut e = 0;
    let mut m = p;
    while m <= n {
        e += 1;
        m = m.saturating_mul(p);
    }
    e
}

impl PadicElt {
    /// Text form `(val, c0, c1, prec)` with decimal strings.
    pub fn to_strings(&self) -> (i64, String, String, i64) {
        (self.val, self.c0.to_string(), self.c1.to_string(), self.prec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> PadicCtx {
        hensel_sqrt(3, 40, 221).unwrap()
    }

    #[test]
    fn generator_squares_to_d() {
        let c = hensel_sqrt(3, 10, 221).unwrap();
        let w = c.w();
        assert!(c.agree(&c.mul(&w, &w), &c.from_i64(221), 10));
        assert_eq!(hensel_sqrt(5, 10, 221).unwrap_err(), Error::NotInert { d: 221, p: 5 });
        let c1 = hensel_sqrt(3, 1, 221).unwrap();
        let w = c1.w();
        assert_eq!(c1.residue(&c1.mul(&w, &w), 1), (BigInt::from(221 % 3), BigInt::zero()));
    }

    #[test]
    fn inverse_and_division() {
        let c = ctx();
        let a = c.from_pair(&BigInt::from(7), &BigInt::from(-2), 40);
        let b = c.inv(&a).unwrap();
        assert!(c.agree(&c.mul(&a, &b), &c.one(), 40));
        let x = c.from_rational(&BigRational::new(5.into(), 27.into()));
        assert_eq!(x.val, -3);
        let y = c.mul(&x, &c.from_i64(27));
        assert!(c.agree(&y, &c.from_i64(5), 30));
    }

    #[test]
    fn teichmuller_properties() {
        let c = ctx();
        let a = c.from_pair(&BigInt::from(4), &BigInt::from(5), 40);
        let t = c.teichmuller(&a).unwrap();
        assert!(c.agree(&c.pow(&t, 8).unwrap(), &c.one(), 40));
        assert!(c.agree(&t, &a, 1));
        assert!(c.agree(&c.teichmuller(&c.one()).unwrap(), &c.one(), 40));
        assert_eq!(c.teichmuller(&c.from_i64(3)).unwrap_err(), Error::NotUnit);
    }

    #[test]
    fn log_exp_roundtrip() {
        let c = ctx();
        let x = c.from_i64(4); // 1 + p
        let l = c.log(&x).unwrap();
        let e = c.exp(&l).unwrap();
        assert!(c.agree(&e, &x, 39));
        assert!(c.log(&c.one()).unwrap().is_zero());
        let u = c.from_pair(&BigInt::from(2), &BigInt::from(1), 40);
        let l1 = c.log(&c.mul(&u, &u)).unwrap();
        let l2 = c.log(&u).unwrap();
        assert!(c.agree(&l1, &c.add(&l2, &l2), 38));
    }

    #[test]
    fn square_roots() {
        let c = ctx();
        let a = c.from_pair(&BigInt::from(11), &BigInt::from(4), 40);
        let s = c.sqrt(&c.mul(&a, &a)).unwrap();
        assert!(c.agree(&c.mul(&s, &s), &c.mul(&a, &a), 39));
    }

    #[test]
    fn conjugation_commutes_with_log() {
        let c = ctx();
        let u = c.from_pair(&BigInt::from(5), &BigInt::from(7), 40);
        let l1 = c.conj(&c.log(&u).unwrap());
        let l2 = c.log(&c.conj(&u)).unwrap();
        assert!(c.agree(&l1, &l2, 38));
    }
}
