//! Recognition of the minimal polynomial over `F` from the p-adic conjugates.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::padic::{PadicCtx, PadicElt};
use crate::quadfield::QuadField;

/// Default number of guard digits kept free when lifting residues.
pub const DEFAULT_GUARD: u32 = 10;

/// A coefficient `(a + b*omega) / p^k`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Coeff {
    pub a: BigInt,
    pub b: BigInt,
    pub k: u32,
}

impl Coeff {
    pub fn one() -> Self {
        Coeff { a: BigInt::one(), b: BigInt::zero(), k: 0 }
    }

    /// The coefficient as `u + v sqrt(D)`.
    pub fn to_sqrt_basis(&self, field: &QuadField, p: u64) -> (BigRational, BigRational) {
        let den: BigInt = BigInt::from(p).pow(self.k) * 2;
        let u = BigRational::new(&self.a * 2 + &self.b * field.delta(), den.clone());
        let v = BigRational::new(self.b.clone(), den);
        (u, v)
    }

    /// `u + v sqrt(D)` in the form `(a + b omega)/p^k` with `k` minimal, if its denominator is
    /// a power of `p`.
    pub fn from_sqrt_basis(field: &QuadField, p: u64, u: &BigRational, v: &BigRational) -> Option<Coeff> {
        let x = u - v * BigInt::from(field.delta());
        let y = v * BigInt::from(2);
        let pb = BigInt::from(p);
        let mut scale = BigInt::one();
        for k in 0..10_000u32 {
            let (a, b) = (&x * &scale, &y * &scale);
            if a.is_integer() && b.is_integer() {
                return Some(Coeff { a: a.to_integer(), b: b.to_integer(), k });
            }
            let mut den = a.denom().lcm(b.denom());
            while den.is_multiple_of(&pb) {
                den /= &pb;
            }
            if !den.is_one() {
                return None;
            }
            scale *= &pb;
        }
        None
    }

    /// Text form such as `-423812/3^13 + 71680/3^15*sqrt(221)`.
    pub fn display(&self, field: &QuadField, p: u64) -> String {
        let (u, v) = self.to_sqrt_basis(field, p);
        let d = field.d();
        match (u.is_zero(), v.is_zero()) {
            (true, true) => "0".into(),
            (false, true) => fmt_rational(&u, p),
            (true, false) => format!("{}*sqrt({d})", fmt_rational(&v, p)),
            (false, false) => {
                let sign = if v.is_negative() { "-" } else { "+" };
                format!("{} {sign} {}*sqrt({d})", fmt_rational(&u, p), fmt_rational(&v.abs(), p))
            }
        }
    }
}

/// `n/d` with the denominator written as a product of prime powers.
fn fmt_rational(r: &BigRational, p: u64) -> String {
    if r.is_integer() {
        return r.numer().to_string();
    }
    let mut d = r.denom().clone();
    let mut parts = Vec::new();
    for q in [2u64, p] {
        let qb = BigInt::from(q);
        let mut e = 0;
        while d.is_multiple_of(&qb) {
            d /= &qb;
            e += 1;
        }
        match e {
            0 => {}
            1 => parts.push(q.to_string()),
            _ => parts.push(format!("{q}^{e}")),
        }
    }
    if !d.is_one() {
        parts.push(d.to_string());
    }
    let den = if parts.len() == 1 { parts.remove(0) } else { format!("({})", parts.join("*")) };
    format!("{}/{den}", r.numer())
}

/// Minimal polynomial `sum coeffs[i] X^i` of the unit over `F`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MinPolyResult {
    pub degree: usize,
    /// `coeffs[i]` multiplies `X^i`.
    pub coeffs: Vec<Coeff>,
    /// Smallest absolute precision among the symmetric functions.
    pub precision: i64,
    /// Smallest number of unused digits over all recognized coefficients (after the guard).
    pub headroom: i64,
}

impl MinPolyResult {
    pub fn display(&self, field: &QuadField, p: u64) -> Vec<String> {
        self.coeffs.iter().map(|c| c.display(field, p)).collect()
    }

    pub fn is_palindromic(&self) -> bool {
        let n = self.degree;
        (0..=n).all(|i| self.coeffs[i] == self.coeffs[n - i])
    }
}

impl fmt::Display for MinPolyResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .rev()
            .map(|(i, c)| format!("({} + {}w)/p^{} X^{i}", c.a, c.b, c.k))
            .collect();
        write!(f, "{}", terms.join(" + "))
    }
}

/// Coefficients of `prod (X - v_i)`, lowest degree first.
pub fn poly_from_roots(ctx: &PadicCtx, values: &[PadicElt]) -> Vec<PadicElt> {
    let big = values.iter().map(|v| v.prec).max().unwrap_or(0) + 1000;
    let one = ctx.from_pair(&BigInt::one(), &BigInt::zero(), big);
    let mut poly = vec![one];
    for v in values {
        let mut next = vec![ctx.zero_at(big); poly.len() + 1];
        for (i, c) in poly.iter().enumerate() {
            next[i + 1] = ctx.add(&next[i + 1], c);
            next[i] = ctx.sub(&next[i], &ctx.mul(c, v));
        }
        poly = next;
    }
    poly
}

/// `e_1, ..., e_n` of the values.
pub fn elementary_symmetric(ctx: &PadicCtx, values: &[PadicElt]) -> Vec<PadicElt> {
    let n = values.len();
    let poly = poly_from_roots(ctx, values);
    (1..=n)
        .map(|k| {
            let c = &poly[n - k];
            if k % 2 == 1 {
                ctx.neg(c)
            } else {
                c.clone()
            }
        })
        .collect()
}

fn balanced(x: &BigInt, m: &BigInt) -> BigInt {
    let r = x.mod_floor(m);
    if &r * 2 > *m {
        r - m
    } else {
        r
    }
}

fn digits(x: &BigInt, p: u64) -> i64 {
    let mut n = x.abs();
    let pb = BigInt::from(p);
    let mut e = 0;
    while !n.is_zero() {
        n /= &pb;
        e += 1;
    }
    e
}

/// Recognizes `c` as `(a + b omega)/p^k` with `k <= max_k` minimal, by balanced lifts.
/// Returns the coefficient and the number of spare digits beyond the guard.
pub fn recognize_coeff_with_headroom(
    field: &QuadField,
    ctx: &PadicCtx,
    c: &PadicElt,
    max_k: u32,
    guard: u32,
) -> Result<(Coeff, i64)> {
    let k = if c.is_zero() { 0 } else { (-c.val).max(0) };
    if k > max_k as i64 {
        return Err(Error::NoPurePDenominator);
    }
    let x = ctx.shift(c, k);
    let mrec = x.prec;
    if mrec <= guard as i64 {
        return Err(Error::InsufficientPrecision(format!("only {mrec} digits available")));
    }
    let m = ctx.ppow(mrec);
    let (c0, c1) = ctx.residue(&x, mrec);
    let s = ctx.branch().sign();
    // c0 + c1 w with w = s sqrt(D) = s (2 omega - delta)
    let a = balanced(&(&c0 - &c1 * (s * field.delta())), &m);
    let b = balanced(&(&c1 * (2 * s)), &m);
    let used = digits(&a, ctx.p()).max(digits(&b, ctx.p()));
    let spare = mrec - guard as i64 - used;
    if spare < 0 {
        return Err(Error::InsufficientPrecision(format!(
            "coefficient needs {used} digits of {mrec} with {guard} guard digits"
        )));
    }
    let pb = BigInt::from(ctx.p());
    if k > 0 && a.is_multiple_of(&pb) && b.is_multiple_of(&pb) {
        return Err(Error::NoPurePDenominator);
    }
    Ok((Coeff { a, b, k: k as u32 }, spare))
}

pub fn recognize_coeff(field: &QuadField, ctx: &PadicCtx, c: &PadicElt, max_k: u32) -> Result<Coeff> {
    recognize_coeff_with_headroom(field, ctx, c, max_k, DEFAULT_GUARD).map(|r| r.0)
}

/// Embeds `(a + b omega)/p^k` at absolute precision `prec`.
pub fn embed_coeff(field: &QuadField, ctx: &PadicCtx, c: &Coeff, prec: i64) -> PadicElt {
    let (u, v) = c.to_sqrt_basis(field, ctx.p());
    let v = v * BigInt::from(ctx.branch().sign());
    ctx.from_rational_pair(&u, &v, prec)
}

/// Minimal polynomial of the unit from all of its conjugates.
pub fn minimal_polynomial(
    field: &QuadField,
    ctx: &PadicCtx,
    conjugates: &[PadicElt],
    guard: u32,
) -> Result<MinPolyResult> {
    if conjugates.is_empty() {
        return Err(Error::Invalid("no conjugates".into()));
    }
    let poly = poly_from_roots(ctx, conjugates);
    let n = conjugates.len();
    let max_k = conjugates.iter().map(|v| (-v.val).max(0)).sum::<i64>() as u32;
    let mut coeffs = Vec::with_capacity(n + 1);
    let mut headroom = i64::MAX;
    let precision = poly.iter().map(|c| c.prec).min().unwrap();
    for c in &poly {
        let (r, spare) = recognize_coeff_with_headroom(field, ctx, c, max_k, guard)?;
        let back = embed_coeff(field, ctx, &r, c.prec);
        if !ctx.agree(&back, c, c.prec) {
            return Err(Error::InsufficientPrecision("re-embedding disagrees".into()));
        }
        headroom = headroom.min(spare);
        coeffs.push(r);
    }
    let res = MinPolyResult { degree: n, coeffs, precision, headroom };
    if res.coeffs[0] != Coeff::one() || res.coeffs[n] != Coeff::one() {
        return Err(Error::PalindromyFailure(format!("constant term {:?}", res.coeffs[0])));
    }
    if !res.is_palindromic() {
        return Err(Error::PalindromyFailure(res.to_string()));
    }
    Ok(res)
}

/// Looks for a root of unity `zeta` in `F_p` such that the polynomial with roots `zeta v_i`
/// (coefficients `zeta^{n-i} c_i`) has the given coefficients; `None` entries are unconstrained.
/// Candidates are tried in the order `1, -1`, then the remaining Teichmuller representatives.
/// Returns the exponent `k` with `zeta = g^k` for the fixed generator `g` of `mu_{p^2-1}`, and `zeta`.
pub fn twist_to_match(
    field: &QuadField,
    ctx: &PadicCtx,
    ours: &MinPolyResult,
    target: &[Option<Coeff>],
) -> Result<Option<(usize, PadicElt)>> {
    let n = ours.degree;
    if target.len() != n + 1 {
        return Err(Error::Invalid("target has the wrong degree".into()));
    }
    let p = ctx.p();
    let q1 = (p * p - 1) as usize;
    let prec = ctx.prec();
    let check = prec / 2;
    let g = crate::groupring::root_of_unity(ctx, q1)?;
    let mine: Vec<PadicElt> = ours.coeffs.iter().map(|c| embed_coeff(field, ctx, c, prec)).collect();
    let theirs: Vec<Option<PadicElt>> =
        target.iter().map(|t| t.as_ref().map(|c| embed_coeff(field, ctx, c, prec))).collect();
    let mut order = vec![0, q1 / 2];
    order.extend((1..q1).filter(|&k| k != q1 / 2));
    for k in order {
        let zeta = ctx.pow(&g, k as i64)?;
        let ok = (0..=n).all(|i| match &theirs[i] {
            None => true,
            Some(t) => {
                let twisted = ctx.mul(&ctx.pow(&zeta, (n - i) as i64).unwrap(), &mine[i]);
                ctx.agree(&twisted, t, check)
            }
        });
        if ok {
            return Ok(Some((k, zeta)));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::padic::Branch;
    use crate::quadfield::{make_field, QElt};

    #[test]
    fn recognizes_simple_coefficients() {
        let f = make_field(221).unwrap();
        let ctx = PadicCtx::new(3, 30, 221, Branch::Plus).unwrap();
        let x = f.div(&QElt::from_ints(3, 1), &QElt::from_ints(9, 0));
        let c = ctx.from_qelt(&f, &x);
        assert_eq!(
            recognize_coeff(&f, &ctx, &c, 5).unwrap(),
            Coeff { a: 3.into(), b: 1.into(), k: 2 }
        );
        assert_eq!(recognize_coeff(&f, &ctx, &ctx.one(), 5).unwrap(), Coeff::one());
        let minus = ctx.flipped();
        let c = minus.from_qelt(&f, &x);
        assert_eq!(recognize_coeff(&f, &minus, &c, 5).unwrap().b, BigInt::from(1));
    }

    #[test]
    fn symmetric_functions_of_a_pair() {
        let ctx = PadicCtx::new(3, 30, 221, Branch::Plus).unwrap();
        let v = ctx.from_pair(&BigInt::from(5), &BigInt::from(2), 30);
        let vi = ctx.inv(&v).unwrap();
        let e = elementary_symmetric(&ctx, &[v.clone(), vi.clone()]);
        assert!(ctx.agree(&e[0], &ctx.add(&v, &vi), 30));
        assert!(ctx.agree(&e[1], &ctx.one(), 30));
        let e1 = elementary_symmetric(&ctx, &[v.clone()]);
        assert!(ctx.agree(&e1[0], &v, 30));
    }

    #[test]
    fn twist_finds_minus_one() {
        let f = make_field(221).unwrap();
        let ctx = PadicCtx::new(3, 40, 221, Branch::Plus).unwrap();
        let c = |a: i64, b: i64, k: u32| Coeff { a: a.into(), b: b.into(), k };
        let ours = MinPolyResult {
            degree: 2,
            coeffs: vec![Coeff::one(), c(5, 2, 1), Coeff::one()],
            precision: 40,
            headroom: 0,
        };
        let same = vec![None, Some(c(5, 2, 1)), None];
        assert_eq!(twist_to_match(&f, &ctx, &ours, &same).unwrap().unwrap().0, 0);
        let negated = vec![Some(Coeff::one()), Some(c(-5, -2, 1)), None];
        assert_eq!(twist_to_match(&f, &ctx, &ours, &negated).unwrap().unwrap().0, 4);
        let other = vec![None, Some(c(7, 2, 1)), None];
        assert!(twist_to_match(&f, &ctx, &ours, &other).unwrap().is_none());
    }

    #[test]
    fn displays_in_sqrt_basis() {
        let f = make_field(221).unwrap();
        // -423812/3^13 + 71680/3^15 sqrt(221): a = u - v*delta/..., b = 2v
        let c = Coeff { a: BigInt::from(-423812 * 9 - 71680), b: BigInt::from(2 * 71680), k: 15 };
        assert_eq!(c.display(&f, 3), "-423812/3^13 + 71680/3^15*sqrt(221)");
        let (u, v) = c.to_sqrt_basis(&f, 3);
        assert_eq!(Coeff::from_sqrt_basis(&f, 3, &u, &v), Some(c));
        let half = BigRational::new(1.into(), 2.into());
        assert_eq!(Coeff::from_sqrt_basis(&f, 3, &half, &half), Some(Coeff { a: BigInt::zero(), b: 1.into(), k: 0 }));
        assert_eq!(Coeff::from_sqrt_basis(&f, 3, &BigRational::new(1.into(), 5.into()), &half), None);
    }
}
