//! Real quadratic fields `Q(sqrt(D))`: exact elements, ideals in Hermite normal form,
//! the totally positive fundamental unit and the narrow class group.
//!
//! Elements are written `x + y*omega` with `omega = (delta + sqrt(D))/2`, `delta = D mod 4`,
//! so that `omega^2 = delta*omega + c0` with `c0 = (D - delta)/4`.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::linalg;

/// An element `x + y*omega` of `F` with rational coordinates.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QElt {
    pub x: BigRational,
    pub y: BigRational,
}

impl QElt {
    pub fn new(x: BigRational, y: BigRational) -> Self {
        QElt { x, y }
    }

    pub fn from_ints(x: i64, y: i64) -> Self {
        QElt::new(BigRational::from_integer(x.into()), BigRational::from_integer(y.into()))
    }

    pub fn from_big(x: BigInt, y: BigInt) -> Self {
        QElt::new(BigRational::from_integer(x), BigRational::from_integer(y))
    }

    pub fn zero() -> Self {
        QElt::from_ints(0, 0)
    }

    pub fn one() -> Self {
        QElt::from_ints(1, 0)
    }

    pub fn is_zero(&self) -> bool {
        self.x.is_zero() && self.y.is_zero()
    }

    pub fn add(&self, o: &QElt) -> QElt {
        QElt::new(&self.x + &o.x, &self.y + &o.y)
    }

    pub fn sub(&self, o: &QElt) -> QElt {
        QElt::new(&self.x - &o.x, &self.y - &o.y)
    }

    pub fn neg(&self) -> QElt {
        QElt::new(-&self.x, -&self.y)
    }

    pub fn scale(&self, r: &BigRational) -> QElt {
        QElt::new(&self.x * r, &self.y * r)
    }

    pub fn scale_int(&self, n: i64) -> QElt {
        self.scale(&BigRational::from_integer(n.into()))
    }

    /// Least common denominator of both coordinates.
    pub fn denominator(&self) -> BigInt {
        self.x.denom().lcm(self.y.denom())
    }

    pub fn is_integral(&self) -> bool {
        self.x.is_integer() && self.y.is_integer()
    }
}

/// A real quadratic field with its totally positive fundamental unit.
#[derive(Clone, Debug)]
pub struct QuadField {
    d: i64,
    delta: i64,
    c0: i64,
    eps_plus: QElt,
}

impl fmt::Display for QuadField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Q(sqrt({}))", self.d)
    }
}

pub fn is_squarefree(n: i64) -> bool {
    let n = n.abs();
    let mut k = 2i64;
    while k * k <= n {
        if n % (k * k) == 0 {
            return false;
        }
        k += 1;
    }
    true
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut k = 2u64;
    while k * k <= n {
        if n % k == 0 {
            return false;
        }
        k += 1;
    }
    true
}

pub fn is_fundamental(d: i64) -> bool {
    match d.rem_euclid(4) {
        1 => d != 1 && is_squarefree(d),
        0 => {
            let m = d / 4;
            matches!(m.rem_euclid(4), 2 | 3) && is_squarefree(m)
        }
        _ => false,
    }
}

/// Builds `Q(sqrt(D))` for a real fundamental discriminant `D`.
pub fn make_field(d: i64) -> Result<QuadField> {
    if d <= 0 {
        return Err(Error::NotReal(d));
    }
    if !is_fundamental(d) {
        return Err(Error::NotFundamental(d));
    }
    let delta = d.rem_euclid(4);
    let c0 = (d - delta) / 4;
    let mut f = QuadField { d, delta, c0, eps_plus: QElt::one() };
    f.eps_plus = f.compute_eps_plus();
    Ok(f)
}

fn isqrt(n: i64) -> i64 {
    let mut r = (n as f64).sqrt() as i64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

fn is_square_big(n: &BigInt) -> Option<BigInt> {
    if n.is_negative() {
        return None;
    }
    let r = n.sqrt();
    if &r * &r == *n {
        Some(r)
    } else {
        None
    }
}

impl QuadField {
    pub fn d(&self) -> i64 {
        self.d
    }

    /// `D mod 4`, the trace of `omega`.
    pub fn delta(&self) -> i64 {
        self.delta
    }

    /// `omega^2 = delta*omega + c0`.
    pub fn c0(&self) -> i64 {
        self.c0
    }

    pub fn eps_plus(&self) -> &QElt {
        &self.eps_plus
    }

    pub fn mul(&self, a: &QElt, b: &QElt) -> QElt {
        let yy = &a.y * &b.y;
        let x = &a.x * &b.x + &yy * BigInt::from(self.c0);
        let y = &a.x * &b.y + &a.y * &b.x + &yy * BigInt::from(self.delta);
        QElt::new(x, y)
    }

    pub fn conj(&self, a: &QElt) -> QElt {
        // omega' = delta - omega
        QElt::new(&a.x + &a.y * BigInt::from(self.delta), -&a.y)
    }

    pub fn norm(&self, a: &QElt) -> BigRational {
        &a.x * &a.x + &a.x * &a.y * BigInt::from(self.delta) - &a.y * &a.y * BigInt::from(self.c0)
    }

    pub fn trace(&self, a: &QElt) -> BigRational {
        &a.x * BigInt::from(2) + &a.y * BigInt::from(self.delta)
    }

    pub fn inv(&self, a: &QElt) -> QElt {
        let n = self.norm(a);
        self.conj(a).scale(&n.recip())
    }

    pub fn div(&self, a: &QElt, b: &QElt) -> QElt {
        self.mul(a, &self.inv(b))
    }

    pub fn pow(&self, a: &QElt, e: u32) -> QElt {
        let mut r = QElt::one();
        let mut b = a.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                r = self.mul(&r, &b);
            }
            b = self.mul(&b, &b);
            e >>= 1;
        }
        r
    }

    /// `sqrt(D)` as an element.
    pub fn sqrt_d(&self) -> QElt {
        QElt::from_ints(-self.delta, 2)
    }

    /// Coordinates over `(1, sqrt(D))`.
    pub fn to_sqrt_basis(&self, a: &QElt) -> (BigRational, BigRational) {
        let two = BigRational::from_integer(2.into());
        (&a.x + &a.y * BigInt::from(self.delta) / &two, &a.y / &two)
    }

    pub fn from_sqrt_basis(&self, u: &BigRational, v: &BigRational) -> QElt {
        // u + v sqrt(D) = u + v (2 omega - delta)
        QElt::new(u - v * BigInt::from(self.delta), v * BigInt::from(2))
    }

    /// The two real embeddings, in floating point, for diagnostics and ordering only.
    pub fn embed_f64(&self, a: &QElt) -> (f64, f64) {
        let s = (self.d as f64).sqrt();
        let x = a.x.to_f64().unwrap_or(f64::NAN);
        let y = a.y.to_f64().unwrap_or(f64::NAN);
        let w1 = (self.delta as f64 + s) / 2.0;
        let w2 = (self.delta as f64 - s) / 2.0;
        (x + y * w1, x + y * w2)
    }

    /// Exact total positivity: positive trace and positive norm.
    pub fn is_totally_positive(&self, a: &QElt) -> bool {
        self.norm(a).is_positive() && self.trace(a).is_positive()
    }

    /// Exact sign of the first embedding `x + y*(delta + sqrt(D))/2`.
    pub fn sign_first(&self, a: &QElt) -> i32 {
        // 2x + y*delta + y*sqrt(D)
        let u = &a.x * BigInt::from(2) + &a.y * BigInt::from(self.delta);
        sign_of_sum_sqrt(&u, &a.y, self.d)
    }

    fn compute_eps_plus(&self) -> QElt {
        let (t, u) = fundamental_unit_tu(self.d);
        // (t + u sqrt(D))/2 = (t - u delta)/2 + u omega
        let x = BigRational::new(&t - &u * BigInt::from(self.delta), BigInt::from(2));
        let eps = QElt::new(x, BigRational::from_integer(u));
        if self.norm(&eps).is_negative() {
            self.mul(&eps, &eps)
        } else {
            eps
        }
    }

    /// Inertness of an odd prime `p` (Kronecker symbol `(D|p) = -1`).
    pub fn is_inert(&self, p: u64) -> Result<bool> {
        if p == 2 || !is_prime(p) {
            return Err(Error::NotOddPrime(p));
        }
        match self.splitting(p) {
            Splitting::Ramified => Err(Error::Ramified { d: self.d, p }),
            Splitting::Inert => Ok(true),
            Splitting::Split => Ok(false),
        }
    }

    /// Splitting type of a rational prime, from the roots of `x^2 - delta*x - c0`.
    pub fn splitting(&self, q: u64) -> Splitting {
        match self.omega_roots(q).len() {
            0 => Splitting::Inert,
            1 => Splitting::Ramified,
            _ => Splitting::Split,
        }
    }

    /// Residues `b` in `[0, q)` with `q | N(b + omega)`.
    fn omega_roots(&self, q: u64) -> Vec<i64> {
        let q = q as i64;
        (0..q)
            .filter(|&b| (b * b + self.delta * b - self.c0).rem_euclid(q) == 0)
            .collect()
    }

    /// The prime ideals above a rational prime, ordered by residue.
    pub fn primes_above(&self, q: u64) -> Vec<Ideal> {
        match self.splitting(q) {
            Splitting::Inert => vec![Ideal::new(q as i64, 0, q as i64)],
            _ => self
                .omega_roots(q)
                .into_iter()
                .map(|b| Ideal::new(q as i64, b, 1))
                .collect(),
        }
    }

    /// First prime ideal of degree one above `ell`.
    pub fn degree_one_prime(&self, ell: u64) -> Result<Ideal> {
        self.degree_one_prime_at(ell, 0)
    }

    /// The `index`-th prime of degree one above `ell`. For odd split `ell` the primes are
    /// `(ell, sqrt(D) - s)` ordered by the square root `s` of `D` modulo `ell` in `[1, ell)`.
    pub fn degree_one_prime_at(&self, ell: u64, index: usize) -> Result<Ideal> {
        if !is_prime(ell) {
            return Err(Error::Invalid(format!("{ell} is not prime")));
        }
        let primes = match self.splitting(ell) {
            Splitting::Inert => return Err(Error::UnsupportedSmoothing { d: self.d, ell }),
            Splitting::Split if ell != 2 => {
                let l = ell as i64;
                (1..l)
                    .filter(|s| (s * s - self.d).rem_euclid(l) == 0)
                    .map(|s| {
                        // sqrt(D) - s = -(s + delta) + 2 omega
                        self.ideal_from_gens(&[
                            (BigInt::from(l), BigInt::zero()),
                            (BigInt::from(-s - self.delta), BigInt::from(2)),
                        ])
                    })
                    .collect()
            }
            _ => self.primes_above(ell),
        };
        primes
            .get(index)
            .cloned()
            .ok_or_else(|| Error::Invalid(format!("no prime number {index} above {ell}")))
    }

    // ----- ideals ---------------------------------------------------------------------

    pub fn ideal_from_gens(&self, gens: &[(BigInt, BigInt)]) -> Ideal {
        let rows: linalg::Matrix = gens.iter().map(|(x, y)| vec![x.clone(), y.clone()]).collect();
        // generate the O_F-module: include omega * g
        let mut all = rows.clone();
        for r in rows.iter() {
            let w = self.mul(
                &QElt::from_big(r[0].clone(), r[1].clone()),
                &QElt::from_ints(0, 1),
            );
            all.push(vec![w.x.to_integer(), w.y.to_integer()]);
        }
        // reorder columns so the echelon form is (c, b ; 0, a) in (omega, 1) order
        let swapped: linalg::Matrix = all.iter().map(|r| vec![r[1].clone(), r[0].clone()]).collect();
        let h = linalg::hnf_rows(&swapped, 2);
        assert_eq!(h.len(), 2, "ideal generators must span a rank-2 lattice");
        let c = h[0][0].to_i64().expect("ideal too large");
        let a = h[1][1].to_i64().expect("ideal too large");
        let b = h[0][1].mod_floor(&h[1][1]).to_i64().unwrap();
        Ideal::new(a, b, c)
    }

    pub fn ideal_mul(&self, i: &Ideal, j: &Ideal) -> Ideal {
        let mut gens = Vec::new();
        for u in i.basis() {
            for v in j.basis() {
                let w = self.mul(&u, &v);
                gens.push((w.x.to_integer(), w.y.to_integer()));
            }
        }
        self.ideal_from_gens(&gens)
    }

    pub fn ideal_conj(&self, i: &Ideal) -> Ideal {
        let gens: Vec<_> = i
            .basis()
            .iter()
            .map(|u| {
                let w = self.conj(u);
                (w.x.to_integer(), w.y.to_integer())
            })
            .collect();
        self.ideal_from_gens(&gens)
    }

    pub fn principal_ideal(&self, a: &QElt) -> Ideal {
        assert!(a.is_integral(), "principal ideal of a non-integral element");
        let w = self.mul(a, &QElt::from_ints(0, 1));
        self.ideal_from_gens(&[
            (a.x.to_integer(), a.y.to_integer()),
            (w.x.to_integer(), w.y.to_integer()),
        ])
    }

    pub fn ideal_contains(&self, i: &Ideal, a: &QElt) -> bool {
        if !a.is_integral() {
            return false;
        }
        let x = a.x.to_integer();
        let y = a.y.to_integer();
        // a = u*A + v*(B + C omega)
        if !(&y % BigInt::from(i.c)).is_zero() {
            return false;
        }
        let v = &y / BigInt::from(i.c);
        (x - v * BigInt::from(i.b)).mod_floor(&BigInt::from(i.a)).is_zero()
    }
}

/// Sign of `u + v*sqrt(d)` for rational `u, v`.
pub fn sign_of_sum_sqrt(u: &BigRational, v: &BigRational, d: i64) -> i32 {
    let su = if u.is_zero() { 0 } else if u.is_positive() { 1 } else { -1 };
    let sv = if v.is_zero() { 0 } else if v.is_positive() { 1 } else { -1 };
    if su == sv || sv == 0 {
        return su;
    }
    if su == 0 {
        return sv;
    }
    // opposite signs: compare u^2 with d v^2
    let lhs = u * u;
    let rhs = v * v * BigInt::from(d);
    if lhs > rhs {
        su
    } else {
        sv
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Splitting {
    Split,
    Inert,
    Ramified,
}

/// Smallest `(t, u)` with `u > 0` and `t^2 - D u^2 = +-4`.
pub fn fundamental_unit_tu(d: i64) -> (BigInt, BigInt) {
    if d <= 64 {
        let mut u: i64 = 1;
        loop {
            for s in [-4i64, 4] {
                if let Some(t) = is_square_big(&BigInt::from(d * u * u + s)) {
                    return (t, BigInt::from(u));
                }
            }
            u += 1;
        }
    }
    // continued fraction of sqrt(D); candidates come from convergents with norm +-1 or +-4
    let a0 = isqrt(d);
    let (mut m, mut den, mut a) = (0i64, 1i64, a0);
    let (mut h_prev, mut h) = (BigInt::one(), BigInt::from(a0));
    let (mut k_prev, mut k) = (BigInt::zero(), BigInt::one());
    let mut best: Option<(BigInt, BigInt)> = None;
    let mut period_ends = 0;
    let big_d = BigInt::from(d);
    loop {
        let n = &h * &h - &big_d * &k * &k;
        let cand = match n.to_i64() {
            Some(1) | Some(-1) => Some((&h * 2, &k * 2)),
            Some(4) | Some(-4) => Some((h.clone(), k.clone())),
            _ => None,
        };
        if let Some((t, u)) = cand {
            if best.as_ref().map_or(true, |(_, bu)| u < *bu) {
                best = Some((t, u));
            }
        }
        m = den * a - m;
        den = (d - m * m) / den;
        a = (a0 + m) / den;
        if den == 1 {
            period_ends += 1;
            if period_ends == 2 {
                break;
            }
        }
        let h_new = BigInt::from(a) * &h + &h_prev;
        let k_new = BigInt::from(a) * &k + &k_prev;
        h_prev = std::mem::replace(&mut h, h_new);
        k_prev = std::mem::replace(&mut k, k_new);
    }
    best.expect("continued fraction always yields a unit within two periods")
}

/// An integral ideal in Hermite normal form: Z-basis `a`, `b + c*omega`, with `c | a`, `c | b`,
/// `0 <= b < a`. The norm is `a*c`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Ideal {
    pub a: i64,
    pub b: i64,
    pub c: i64,
}

impl Ideal {
    pub fn new(a: i64, b: i64, c: i64) -> Self {
        Ideal { a, b, c }
    }

    pub fn unit() -> Self {
        Ideal::new(1, 0, 1)
    }

    pub fn norm(&self) -> i64 {
        self.a * self.c
    }

    pub fn basis(&self) -> [QElt; 2] {
        [QElt::from_ints(self.a, 0), QElt::from_ints(self.b, self.c)]
    }

    /// The largest rational integer dividing the ideal.
    pub fn content(&self) -> i64 {
        self.c
    }

    pub fn is_coprime_to(&self, n: i64) -> bool {
        self.norm().gcd(&n) == 1
    }
}

impl fmt::Display for Ideal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.c == 1 {
            write!(f, "[{}, {} + w]", self.a, self.b)
        } else {
            write!(f, "[{}, {} + {}w]", self.a, self.b, self.c)
        }
    }
}

// ----- binary quadratic forms ---------------------------------------------------------

/// A form `a x^2 + b xy + c y^2` of discriminant `D`.
pub type Form = (i64, i64, i64);

fn rfun(b: i64, a: i64, d: i64) -> i64 {
    let s = isqrt(d);
    let aa = a.abs();
    if aa > s {
        let mut r = b.rem_euclid(2 * aa);
        if r > aa {
            r -= 2 * aa;
        }
        r
    } else {
        s - (s - b).rem_euclid(2 * aa)
    }
}

fn rho(f: Form, d: i64) -> Form {
    let (_, b, c) = f;
    let r = rfun(-b, c, d);
    (c, r, (r * r - d) / (4 * c))
}

fn is_reduced(f: Form, d: i64) -> bool {
    let (a, b, _) = f;
    let aa = a.abs();
    if b <= 0 || b * b >= d {
        return false;
    }
    // |sqrt(D) - 2|a|| < b  <=>  2|a| - b < sqrt(D) < 2|a| + b
    let lo = 2 * aa - b;
    let hi = 2 * aa + b;
    (lo < 0 || lo * lo < d) && d < hi * hi
}

fn reduce(mut f: Form, d: i64) -> Form {
    let mut n = 0;
    while !is_reduced(f, d) {
        f = rho(f, d);
        n += 1;
        assert!(n < 100_000, "form reduction did not terminate");
    }
    f
}

fn cycle(f: Form, d: i64) -> Vec<Form> {
    let f = reduce(f, d);
    let mut out = vec![f];
    let mut g = rho(f, d);
    while g != f {
        out.push(g);
        g = rho(g, d);
    }
    out
}

fn all_reduced(d: i64) -> Vec<Form> {
    let mut out = Vec::new();
    let s = isqrt(d);
    for b in 1..=s {
        if (b * b - d).rem_euclid(4) != 0 {
            continue;
        }
        let n = (d - b * b) / 4;
        for a in 1..=n {
            if n % a != 0 {
                continue;
            }
            for sa in [a, -a] {
                let f = (sa, b, -n / sa);
                if is_reduced(f, d) {
                    out.push(f);
                }
            }
        }
    }
    out.sort();
    out
}

/// The narrow class group with one prime representative per class.
#[derive(Clone, Debug)]
pub struct NarrowClassGroup {
    /// Class number `h+`.
    pub order: usize,
    /// Invariant factors, largest first.
    pub structure: Vec<usize>,
    /// `reps[i]` is a prime ideal in class `i`; class 0 is the identity.
    pub reps: Vec<Ideal>,
    /// `compose[i][j]` is the index of the product class.
    pub compose: Vec<Vec<usize>>,
    /// Index of the class of principal ideals with a generator of negative norm.
    pub conj_class: usize,
    cycles: Vec<Vec<Form>>,
    cycle_to_index: Vec<usize>,
    d: i64,
}

impl NarrowClassGroup {
    fn cycle_of(&self, f: Form) -> usize {
        let g = reduce(f, self.d);
        self.cycles
            .iter()
            .position(|c| c.contains(&g))
            .expect("every reduced form lies on a cycle")
    }

    /// Narrow class index of an integral ideal.
    pub fn class_of(&self, field: &QuadField, i: &Ideal) -> usize {
        self.cycle_to_index[self.cycle_of(ideal_form(field, i))]
    }

    pub fn inverse(&self, i: usize) -> usize {
        (0..self.order).find(|&j| self.compose[i][j] == 0).unwrap()
    }
}

/// The form attached to the primitive part `[a, (-B + sqrt(D))/2]` of an ideal.
pub fn ideal_form(field: &QuadField, i: &Ideal) -> Form {
    let a = i.a / i.c;
    let b = i.b / i.c;
    let bb = -(2 * b + field.delta());
    (a, bb, (bb * bb - field.d()) / (4 * a))
}

/// Narrow class group with representatives chosen as the smallest-norm prime ideals in each
/// class that are coprime to `avoid` (ties broken by residue).
pub fn narrow_class_group(field: &QuadField, avoid: i64) -> NarrowClassGroup {
    let d = field.d();
    let mut rem = all_reduced(d);
    let mut cycles = Vec::new();
    while let Some(&f) = rem.first() {
        let cy = cycle(f, d);
        rem.retain(|g| !cy.contains(g));
        cycles.push(cy);
    }
    let h = cycles.len();
    let mut g = NarrowClassGroup {
        order: h,
        structure: vec![],
        reps: vec![],
        compose: vec![],
        conj_class: 0,
        cycles,
        cycle_to_index: vec![usize::MAX; h],
        d,
    };
    // representatives by increasing norm
    let mut rep_by_cycle: Vec<Option<Ideal>> = vec![None; h];
    let mut found = 0;
    let mut q = 2u64;
    while found < h {
        if is_prime(q) && (avoid % q as i64 != 0) {
            let mut ps = field.primes_above(q);
            ps.sort_by_key(|p| (p.norm(), p.b));
            for p in ps {
                let cy = g.cycle_of(ideal_form(field, &p));
                if rep_by_cycle[cy].is_none() {
                    rep_by_cycle[cy] = Some(p);
                    found += 1;
                }
            }
        }
        q += 1;
    }
    let id_cycle = g.cycle_of(ideal_form(field, &Ideal::unit()));
    let mut order: Vec<usize> = (0..h).filter(|&c| c != id_cycle).collect();
    order.sort_by_key(|&c| {
        let r = rep_by_cycle[c].as_ref().unwrap();
        (r.norm(), r.b)
    });
    order.insert(0, id_cycle);
    for (idx, &c) in order.iter().enumerate() {
        g.cycle_to_index[c] = idx;
    }
    g.reps = order.iter().map(|&c| rep_by_cycle[c].clone().unwrap()).collect();
    let mut table = vec![vec![0usize; h]; h];
    for i in 0..h {
        for j in 0..h {
            let prod = field.ideal_mul(&g.reps[i], &g.reps[j]);
            table[i][j] = g.class_of(field, &prod);
        }
    }
    g.compose = table;
    g.conj_class = g.class_of(field, &field.principal_ideal(&field.sqrt_d()));
    g.structure = group_structure(&g.compose);
    g
}

/// Invariant factors of a finite abelian group given by its multiplication table.
pub fn group_structure(table: &[Vec<usize>]) -> Vec<usize> {
    let h = table.len();
    let mut rows: Vec<Vec<i64>> = Vec::new();
    for i in 0..h {
        for j in i..h {
            let mut r = vec![0i64; h];
            r[i] += 1;
            r[j] += 1;
            r[table[i][j]] -= 1;
            rows.push(r);
        }
    }
    let mut id = vec![0i64; h];
    id[0] = 1;
    rows.push(id);
    let diag = linalg::smith_diagonal(&linalg::to_big(&rows));
    let mut s: Vec<usize> = diag
        .iter()
        .filter_map(|x| x.to_usize())
        .filter(|&x| x > 1)
        .collect();
    s.sort_unstable_by(|a, b| b.cmp(a));
    s
}
