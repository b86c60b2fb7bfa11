//! Shintani cone decomposition and exact partial zeta values at nonpositive integers.
//!
//! A half-open cone `{t1*g1 + t2*g2 : t1 > 0, t2 >= 0}` meets a lattice in a union of
//! unimodular pieces `{m1*A + m2*B : m1 >= 1, m2 >= 0}`. On each piece a polynomial weight
//! `alpha^a * alpha'^b` has a regularized sum (the value at `s = 0` of the Dirichlet series
//! twisted by `N(alpha)^{-s}`) given by products of Bernoulli polynomials.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::quadfield::{Ideal, QElt, QuadField};

/// Counts piece evaluations; used to check cache behaviour.
pub static PIECE_EVALUATIONS: AtomicU64 = AtomicU64::new(0);

/// Default bound on congruence levels.
pub const DEFAULT_LEVEL_BOUND: u32 = 6;

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(n.into())
}

// ----- Bernoulli numbers and polynomials --------------------------------------------------

static BERNOULLI: Mutex<Vec<BigRational>> = Mutex::new(Vec::new());

/// Bernoulli numbers `B_0..=B_n` with `B_1 = -1/2`.
pub fn bernoulli_numbers(n: usize) -> Vec<BigRational> {
    let mut cache = BERNOULLI.lock().unwrap();
    if cache.is_empty() {
        cache.push(BigRational::one());
    }
    while cache.len() <= n {
        let m = cache.len();
        let mut s = BigRational::zero();
        let mut binom = BigInt::one();
        for k in 0..m {
            s += &cache[k] * &binom;
            binom = binom * BigInt::from(m + 1 - k) / BigInt::from(k + 1);
        }
        cache.push(-s / rat(m as i64 + 1));
    }
    cache[..=n].to_vec()
}

pub fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let mut r = BigInt::one();
    for i in 0..k {
        r = r * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    r
}

/// `B_k(x)`.
pub fn bernoulli_poly(k: usize, x: &BigRational) -> BigRational {
    let b = bernoulli_numbers(k);
    let mut s = BigRational::zero();
    let mut xp = BigRational::one();
    // Horner-free evaluation: sum_j C(k,j) B_j x^(k-j), accumulate from j = k down
    for j in (0..=k).rev() {
        s += &b[j] * BigRational::from_integer(binomial(k as u64, j as u64)) * &xp;
        xp *= x;
    }
    s
}

// ----- cones and lattices ----------------------------------------------------------------

/// A two-dimensional cone with rays through `gens[0]` and `gens[1]`. `closure[i]` says whether
/// the ray through `gens[i]` belongs to the cone.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShintaniCone {
    pub gens: [QElt; 2],
    pub closure: [bool; 2],
}

/// The Shintani domain `C(1, eps)`: ray through 1 included, ray through `eps` excluded.
pub fn shintani_domain(field: &QuadField) -> Vec<ShintaniCone> {
    vec![ShintaniCone {
        gens: [QElt::one(), field.eps_plus().clone()],
        closure: [true, false],
    }]
}

/// Splits a half-open cone along an interior ray; the new ray goes to the second piece.
pub fn subdivide(field: &QuadField, cone: &ShintaniCone, ray: &QElt) -> Result<[ShintaniCone; 2]> {
    if !field.is_totally_positive(ray) {
        return Err(Error::Invalid("subdivision ray must be totally positive".into()));
    }
    if cone.closure != [true, false] {
        return Err(Error::UnsupportedClosure);
    }
    Ok([
        ShintaniCone { gens: [cone.gens[0].clone(), ray.clone()], closure: [true, false] },
        ShintaniCone { gens: [ray.clone(), cone.gens[1].clone()], closure: [true, false] },
    ])
}

/// Reduces a totally positive element into the Shintani domain: returns `t` with
/// `x * eps^t` in the domain.
pub fn domain_exponent(field: &QuadField, x: &QElt) -> i64 {
    // x = t1 + t2 eps with t1 > 0, t2 >= 0  <=>  x lies between the rays, 1 inclusive
    let eps = field.eps_plus();
    let in_domain = |y: &QElt| {
        let (t1, t2) = cone_coords(field, &QElt::one(), eps, y);
        t1.is_positive() && !t2.is_negative()
    };
    let (e1, e2) = field.embed_f64(x);
    let (u1, _) = field.embed_f64(eps);
    let guess = -((e1 / e2).ln() / (2.0 * u1.ln())).floor() as i64;
    for d in 0..64i64 {
        for t in [guess + d, guess - d - 1] {
            let y = if t >= 0 {
                field.mul(x, &field.pow(eps, t as u32))
            } else {
                field.mul(x, &field.pow(&field.inv(eps), (-t) as u32))
            };
            if in_domain(&y) {
                return t;
            }
        }
    }
    panic!("no unit translate in the Shintani domain");
}

/// Coordinates `(t1, t2)` with `y = t1*g1 + t2*g2`.
pub fn cone_coords(field: &QuadField, g1: &QElt, g2: &QElt, y: &QElt) -> (BigRational, BigRational) {
    let _ = field;
    let det = &g1.x * &g2.y - &g1.y * &g2.x;
    let t1 = (&y.x * &g2.y - &y.y * &g2.x) / &det;
    let t2 = (&g1.x * &y.y - &g1.y * &y.x) / &det;
    (t1, t2)
}

/// The fractional lattice `ideal / den`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lattice {
    pub ideal: Ideal,
    pub den: i64,
}

impl Lattice {
    pub fn basis(&self) -> [QElt; 2] {
        let d = BigRational::new(BigInt::one(), self.den.into());
        let [a, b] = self.ideal.basis();
        [a.scale(&d), b.scale(&d)]
    }

    /// Rational coordinates of `y` in the lattice basis.
    pub fn coords(&self, y: &QElt) -> (BigRational, BigRational) {
        let yd = y.scale_int(self.den);
        let v = &yd.y / rat(self.ideal.c);
        let u = (&yd.x - &v * rat(self.ideal.b)) / rat(self.ideal.a);
        (u, v)
    }

    pub fn vector(&self, u: &BigInt, v: &BigInt) -> QElt {
        let [a, b] = self.basis();
        a.scale(&BigRational::from_integer(u.clone()))
            .add(&b.scale(&BigRational::from_integer(v.clone())))
    }

    /// Primitive lattice vector on the ray through `g`, as integer coordinates.
    pub fn primitive_on_ray(&self, g: &QElt) -> (BigInt, BigInt) {
        let (u, v) = self.coords(g);
        let l = u.denom().lcm(v.denom());
        let ui = (&u * BigRational::from_integer(l.clone())).to_integer();
        let vi = (&v * BigRational::from_integer(l)).to_integer();
        let g = ui.gcd(&vi);
        (ui / &g, vi / &g)
    }
}

/// A unimodular half-open cone `{m1*a + m2*b : m1 >= 1, m2 >= 0}` of its lattice.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConePiece {
    pub a: QElt,
    pub b: QElt,
}

/// Decomposes a half-open cone into lattice-unimodular pieces (Hirzebruch-Jung).
pub fn unimodular_pieces(lattice: &Lattice, cone: &ShintaniCone) -> Result<Vec<ConePiece>> {
    let (g1, g2) = match cone.closure {
        [true, false] => (&cone.gens[0], &cone.gens[1]),
        _ => return Err(Error::UnsupportedClosure),
    };
    let (a0, b0) = lattice.primitive_on_ray(g1);
    let (t0, t1) = lattice.primitive_on_ray(g2);
    // complete (a0, b0) to a basis: a0*v - b0*u = 1
    let eg = a0.extended_gcd(&b0);
    debug_assert!(eg.gcd.is_one());
    let mut f1 = (a0.clone(), b0.clone());
    let mut f2 = (-eg.y.clone(), eg.x.clone());
    // express target in (f1, f2): T = m f1 + k f2
    let det = &f1.0 * &f2.1 - &f1.1 * &f2.0;
    debug_assert!(det.is_one());
    let mut k = &f1.0 * &t1 - &f1.1 * &t0;
    let mut m = &t0 * &f2.1 - &t1 * &f2.0;
    if k.is_negative() {
        f2 = (-f2.0, -f2.1);
        k = -k;
    }
    if k.is_zero() {
        return Err(Error::Invalid("degenerate cone".into()));
    }
    let mut pieces = Vec::new();
    let vec_of = |c: &(BigInt, BigInt)| lattice.vector(&c.0, &c.1);
    loop {
        if k.is_one() {
            pieces.push(ConePiece { a: vec_of(&f1), b: vec_of(&(t0.clone(), t1.clone())) });
            break;
        }
        let c = m.div_ceil(&k);
        let a1 = (&c * &f1.0 + &f2.0, &c * &f1.1 + &f2.1);
        pieces.push(ConePiece { a: vec_of(&f1), b: vec_of(&a1) });
        let new_f2 = (-f1.0.clone(), -f1.1.clone());
        f1 = a1;
        f2 = new_f2;
        let new_k = &k * &c - &m;
        m = std::mem::replace(&mut k, new_k);
    }
    Ok(pieces)
}

// ----- regularized sums on a piece ---------------------------------------------------------

/// Power series of `(c0 + c1 w)^e` up to `w^deg`, for `e >= -1`.
fn ser_pow(field: &QuadField, c0: &QElt, c1: &QElt, e: i64, deg: usize) -> Vec<QElt> {
    if e >= 0 {
        (0..=deg)
            .map(|i| {
                if i as i64 > e {
                    QElt::zero()
                } else {
                    field
                        .mul(&field.pow(c0, (e - i as i64) as u32), &field.pow(c1, i as u32))
                        .scale(&BigRational::from_integer(binomial(e as u64, i as u64)))
                }
            })
            .collect()
    } else {
        let inv = field.inv(c0);
        let r = field.mul(c1, &inv).neg();
        let mut out = Vec::with_capacity(deg + 1);
        let mut cur = inv;
        for _ in 0..=deg {
            out.push(cur.clone());
            cur = field.mul(&cur, &r);
        }
        out
    }
}

fn coeff_of_product(field: &QuadField, f: &[QElt], g: &[QElt], k: usize) -> QElt {
    let mut s = QElt::zero();
    for i in 0..=k {
        s = s.add(&field.mul(&f[i], &g[k - i]));
    }
    s
}

fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, i| acc * BigInt::from(i))
}

/// Regularized sum of `alpha^a alpha'^b` over `(x1 + m1) v1 + (x2 + m2) v2`, `m >= 0`.
pub fn reg_general(
    field: &QuadField,
    x1: &BigRational,
    x2: &BigRational,
    v1: &QElt,
    v2: &QElt,
    a: usize,
    b: usize,
) -> QElt {
    PIECE_EVALUATIONS.fetch_add(1, Ordering::Relaxed);
    let n = a + b;
    let v1c = field.conj(v1);
    let v2c = field.conj(v2);
    let mut tot = QElt::zero();
    for l1 in 0..=n + 2 {
        let l2 = n + 2 - l1;
        let c = bernoulli_poly(l1, x1) * bernoulli_poly(l2, x2)
            / BigRational::from_integer(factorial(l1) * factorial(l2));
        let f = ser_pow(field, v1, &v1c, l1 as i64 - 1, b);
        let g = ser_pow(field, v2, &v2c, l2 as i64 - 1, b);
        let r1 = coeff_of_product(field, &f, &g, b);
        let f = ser_pow(field, &v1c, v1, l1 as i64 - 1, a);
        let g = ser_pow(field, &v2c, v2, l2 as i64 - 1, a);
        let r2 = coeff_of_product(field, &f, &g, a);
        tot = tot.add(&r1.add(&r2).scale(&c));
    }
    tot.scale(&BigRational::new(factorial(a) * factorial(b), BigInt::from(2)))
}

/// The `s = 0` value on a piece: `B1(x1)B1(x2) + (B2(x2) tr(v2/v1) + B2(x1) tr(v1/v2))/4`.
pub fn reg_count(
    field: &QuadField,
    x1: &BigRational,
    x2: &BigRational,
    v1: &QElt,
    v2: &QElt,
) -> BigRational {
    PIECE_EVALUATIONS.fetch_add(1, Ordering::Relaxed);
    let t21 = field.trace(&field.div(v2, v1));
    let t12 = field.trace(&field.div(v1, v2));
    let b1 = |x: &BigRational| x - BigRational::new(1.into(), 2.into());
    let b2 = |x: &BigRational| x * x - x + BigRational::new(1.into(), 6.into());
    b1(x1) * b1(x2) + (b2(x2) * t21 + b2(x1) * t12) / rat(4)
}

/// Regularized sums of `alpha^j` for `j = 0..=jmax` on one piece.
pub fn reg_moments(
    field: &QuadField,
    x1: &BigRational,
    x2: &BigRational,
    v1: &QElt,
    v2: &QElt,
    jmax: usize,
) -> Vec<QElt> {
    PIECE_EVALUATIONS.fetch_add(1, Ordering::Relaxed);
    let h = |x: &BigRational, i: usize| bernoulli_poly(i + 1, x) / rat(i as i64 + 1);
    let h1: Vec<BigRational> = (0..=jmax).map(|i| h(x1, i)).collect();
    let h2: Vec<BigRational> = (0..=jmax).map(|i| h(x2, i)).collect();
    let mut p1 = vec![QElt::one()];
    let mut p2 = vec![QElt::one()];
    for i in 0..=jmax {
        p1.push(field.mul(&p1[i], v1));
        p2.push(field.mul(&p2[i], v2));
    }
    let v1c = field.conj(v1);
    let v2c = field.conj(v2);
    let d02 = v2.sub(&field.div(&field.mul(v1, &v2c), &v1c));
    let d20 = v1.sub(&field.div(&field.mul(v2, &v1c), &v2c));
    let inv1 = field.inv(v1);
    let inv2 = field.inv(v2);
    let mut out = Vec::with_capacity(jmax + 1);
    let (mut d02p, mut d20p) = (d02.clone(), d20.clone());
    for j in 0..=jmax {
        let mut s = QElt::zero();
        for i in 0..=j {
            let c = BigRational::from_integer(binomial(j as u64, i as u64)) * &h1[i] * &h2[j - i];
            s = s.add(&field.mul(&p1[i], &p2[j - i]).scale(&c));
        }
        let w02 = field.mul(&p2[j + 1].scale_int(2).sub(&d02p), &inv1);
        let w20 = field.mul(&p1[j + 1].scale_int(2).sub(&d20p), &inv2);
        let c = BigRational::new(BigInt::one(), BigInt::from(2 * (j + 1) * (j + 2)));
        s = s
            .add(&w02.scale(&(bernoulli_poly(j + 2, x2) * &c)))
            .add(&w20.scale(&(bernoulli_poly(j + 2, x1) * &c)));
        out.push(s);
        d02p = field.mul(&d02p, &d02);
        d20p = field.mul(&d20p, &d20);
    }
    out
}

// ----- smoothing -------------------------------------------------------------------------

/// Which group-ring factor smooths the zeta function at the prime `q` above `ell`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Smoothing {
    /// `1 - ell^{1-s} sigma_q^{-1}`: lattice `b^{-1} q`, weight `-ell`.
    Inverse,
    /// `1 - ell^{1-s} sigma_q`: lattice `b^{-1} q^{-1}`, weight `-ell^{1-2s}`.
    Direct,
    /// No smoothing; values are rational.
    None,
}

impl Smoothing {
    pub fn name(&self) -> &'static str {
        match self {
            Smoothing::Inverse => "inverse",
            Smoothing::Direct => "direct",
            Smoothing::None => "none",
        }
    }
}

/// One lattice of the smoothed sum: `weight * mult^k` at `s = -k`.
#[derive(Clone, Debug)]
pub struct SmoothedTerm {
    pub lattice: Lattice,
    pub weight: i64,
    pub mult: i64,
}

/// The lattices `b^{-1} * prod(q in S)` over subsets `S` of the smoothing set.
pub fn smoothed_terms(field: &QuadField, query: &ZetaQuery) -> Result<Vec<SmoothedTerm>> {
    let (b, ell, smoothing, extra_t) = (&query.class_rep, query.ell, query.smoothing, &query.extra_t);
    let q = field.degree_one_prime_at(ell, query.ell_prime)?;
    if !b.is_coprime_to(ell as i64) {
        return Err(Error::NotCoprime(ell));
    }
    let nb = b.norm();
    let bconj = field.ideal_conj(b);
    // each T prime contributes (ideal to multiply by, extra denominator, weight, mult)
    let mut factors: Vec<(Ideal, i64, i64, i64)> = Vec::new();
    match smoothing {
        Smoothing::Inverse => factors.push((q.clone(), 1, -(ell as i64), 1)),
        Smoothing::Direct => {
            let e = ell as i64;
            factors.push((field.ideal_conj(&q), e, -e, e * e))
        }
        Smoothing::None => {}
    }
    for &t in extra_t {
        if !crate::quadfield::is_prime(t) || t == ell {
            return Err(Error::Invalid(format!("bad extra smoothing prime {t}")));
        }
        if field.splitting(t) != crate::quadfield::Splitting::Inert {
            return Err(Error::Invalid(format!("extra smoothing prime {t} must be inert")));
        }
        if !b.is_coprime_to(t as i64) {
            return Err(Error::NotCoprime(t));
        }
        let t = t as i64;
        factors.push((Ideal::new(t, 0, t), 1, -t * t, 1));
    }
    let mut out = Vec::new();
    for mask in 0u32..(1 << factors.len()) {
        let mut ideal = bconj.clone();
        let mut den = nb;
        let mut weight = 1i64;
        let mut mult = 1i64;
        for (i, (f, d, w, m)) in factors.iter().enumerate() {
            if mask & (1 << i) != 0 {
                ideal = field.ideal_mul(&ideal, f);
                den *= d;
                weight *= w;
                mult *= m;
            }
        }
        // strip common rational factors so that den is minimal
        let g = ideal.c.gcd(&den);
        let ideal = if g > 1 {
            Ideal::new(ideal.a / g, ideal.b / g, ideal.c / g)
        } else {
            ideal
        };
        out.push(SmoothedTerm { lattice: Lattice { ideal, den: den / g }, weight, mult });
    }
    Ok(out)
}

// ----- residues ----------------------------------------------------------------------------

/// A residue class `c0 + c1*w mod p^n` of `O_p`, where `w^2 = D`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Residue {
    pub n: u32,
    pub c0: u64,
    pub c1: u64,
}

impl Residue {
    pub fn new(n: u32, c0: u64, c1: u64) -> Self {
        Residue { n, c0, c1 }
    }

    /// All residues modulo `p^n`, in lexicographic order `(c0, c1)`.
    pub fn all(p: u64, n: u32) -> Vec<Residue> {
        let m = p.pow(n);
        let mut v = Vec::with_capacity((m * m) as usize);
        for c0 in 0..m {
            for c1 in 0..m {
                v.push(Residue::new(n, c0, c1));
            }
        }
        v
    }

    pub fn is_unit(&self, p: u64) -> bool {
        self.n == 0 || self.c0 % p != 0 || self.c1 % p != 0
    }

    /// The `p^2` lifts of this residue modulo `p^{n+1}`.
    pub fn children(&self, p: u64) -> Vec<Residue> {
        let m = p.pow(self.n);
        let mut v = Vec::new();
        for i in 0..p {
            for j in 0..p {
                v.push(Residue::new(self.n + 1, self.c0 + i * m, self.c1 + j * m));
            }
        }
        v
    }

    pub fn parent(&self, p: u64) -> Residue {
        let m = p.pow(self.n - 1);
        Residue::new(self.n - 1, self.c0 % m, self.c1 % m)
    }
}

/// Image of a p-integral element in `(Z/m)[w]`, as `(c0, c1)`.
pub fn reduce_mod(field: &QuadField, a: &QElt, m: &BigInt) -> (BigInt, BigInt) {
    // x + y omega = (x + y delta/2) + (y/2) w
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let c0 = &a.x + &a.y * BigInt::from(field.delta()) * &half;
    let c1 = &a.y * &half;
    (rat_mod(&c0, m), rat_mod(&c1, m))
}

/// A p-integral rational reduced modulo `m`.
pub fn rat_mod(r: &BigRational, m: &BigInt) -> BigInt {
    let inv = mod_inverse(r.denom(), m).expect("denominator not invertible");
    (r.numer() * inv).mod_floor(m)
}

pub fn mod_inverse(a: &BigInt, m: &BigInt) -> Option<BigInt> {
    let e = a.mod_floor(m).extended_gcd(m);
    if e.gcd.is_one() {
        Some(e.x.mod_floor(m))
    } else {
        None
    }
}

/// For a unimodular piece `(a, b)`, the unique `(c1, c2)` with `c1 in [1, P]`, `c2 in [0, P)` and
/// `c1*a + c2*b = r mod P`.
pub fn piece_shift(field: &QuadField, piece: &ConePiece, r: &Residue, p: u64) -> (BigInt, BigInt) {
    let m = BigInt::from(p).pow(r.n);
    let (a0, a1) = reduce_mod(field, &piece.a, &m);
    let (b0, b1) = reduce_mod(field, &piece.b, &m);
    let det = (&a0 * &b1 - &a1 * &b0).mod_floor(&m);
    let dinv = mod_inverse(&det, &m).expect("piece is not a local basis");
    let r0 = BigInt::from(r.c0);
    let r1 = BigInt::from(r.c1);
    let mut c1 = ((&r0 * &b1 - &r1 * &b0) * &dinv).mod_floor(&m);
    let c2 = ((&a0 * &r1 - &a1 * &r0) * &dinv).mod_floor(&m);
    if c1.is_zero() {
        c1 = m.clone();
    }
    (c1, c2)
}

// ----- zeta queries ----------------------------------------------------------------------

/// How the cone is cut into lattice pieces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ConeMethod {
    /// Hirzebruch-Jung unimodular pieces (one shift point per residue).
    Unimodular,
    /// The cone itself with its full fundamental parallelepiped of shift points.
    Parallelepiped,
}

/// A smoothed partial zeta value request.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ZetaQuery {
    pub class_rep: Ideal,
    pub p: u64,
    pub ell: u64,
    pub congruence: Option<Residue>,
    /// Evaluate at `s = -k`.
    pub k: u32,
    pub smoothing: Smoothing,
    pub extra_t: Vec<u64>,
    /// Which prime above a split `ell` is smoothed at, see [`QuadField::degree_one_prime_at`].
    pub ell_prime: usize,
}

impl ZetaQuery {
    pub fn new(class_rep: Ideal, p: u64, ell: u64) -> Self {
        ZetaQuery {
            class_rep,
            p,
            ell,
            congruence: None,
            k: 0,
            smoothing: Smoothing::Inverse,
            extra_t: vec![],
            ell_prime: 0,
        }
    }

    pub fn with_congruence(mut self, r: Residue) -> Self {
        self.congruence = Some(r);
        self
    }

    pub fn at(mut self, k: u32) -> Self {
        self.k = k;
        self
    }

    /// Canonical text key (used by the persistent cache).
    pub fn key(&self, d: i64) -> String {
        let c = match &self.congruence {
            None => "-".to_string(),
            Some(r) => format!("{}:{}:{}", r.n, r.c0, r.c1),
        };
        let t: Vec<String> = self.extra_t.iter().map(|x| x.to_string()).collect();
        format!(
            "D={d};b={},{},{};p={};l={}.{};r={c};k={};sm={};t={}",
            self.class_rep.a,
            self.class_rep.b,
            self.class_rep.c,
            self.p,
            self.ell,
            self.ell_prime,
            self.k,
            self.smoothing.name(),
            t.join(",")
        )
    }
}

/// Lattice points of the parallelepiped `{x1 g1 + x2 g2 : x1 in (0,1], x2 in [0,1)}`.
pub fn parallelepiped_points(
    lattice: &Lattice,
    g1: &QElt,
    g2: &QElt,
) -> Vec<(BigRational, BigRational)> {
    let (a, b) = lattice.coords(g1);
    let (c, d) = lattice.coords(g2);
    let (a, b, c, d) = (a.to_integer(), b.to_integer(), c.to_integer(), d.to_integer());
    let det = &a * &d - &b * &c;
    // coset representatives of Z^2 / <(a,b),(c,d)> from a triangular basis
    let eg = a.extended_gcd(&c);
    let h11 = eg.gcd.abs();
    let h22 = (&det / &eg.gcd).abs();
    let mut out = Vec::new();
    let detr = BigRational::from_integer(det.clone());
    let mut i = BigInt::zero();
    while i < h11 {
        let mut j = BigInt::zero();
        while j < h22 {
            // (i, j) = x1 (a,b) + x2 (c,d)
            let x1 = BigRational::from_integer(&i * &d - &j * &c) / &detr;
            let x2 = BigRational::from_integer(&a * &j - &b * &i) / &detr;
            let x1 = &x1 - x1.ceil() + BigRational::one();
            let x2 = &x2 - x2.floor();
            out.push((x1, x2));
            j += 1;
        }
        i += 1;
    }
    out
}

fn check_query(field: &QuadField, q: &ZetaQuery, level_bound: u32) -> Result<()> {
    let _ = field;
    if !q.class_rep.is_coprime_to((q.p * q.ell) as i64) {
        return Err(Error::NotCoprime(q.p * q.ell));
    }
    if let Some(r) = &q.congruence {
        if r.n > level_bound {
            return Err(Error::LevelTooDeep { level: r.n, bound: level_bound });
        }
    }
    Ok(())
}

fn piece_value(
    field: &QuadField,
    x1: &BigRational,
    x2: &BigRational,
    v1: &QElt,
    v2: &QElt,
    k: u32,
) -> BigRational {
    if k == 0 {
        reg_count(field, x1, x2, v1, v2)
    } else {
        let r = reg_general(field, x1, x2, v1, v2, k as usize, k as usize);
        assert!(r.y.is_zero(), "norm-power sums must be rational");
        r.x
    }
}

/// The smoothed partial zeta value `zeta_{S,T}(b, -k)`, optionally restricted to
/// `alpha = r mod p^n`.
pub fn partial_zeta(field: &QuadField, q: &ZetaQuery) -> Result<BigRational> {
    partial_zeta_with(field, q, ConeMethod::Unimodular, None, DEFAULT_LEVEL_BOUND)
}

/// As [`partial_zeta`], with explicit cone method, optional custom domain and level bound.
pub fn partial_zeta_with(
    field: &QuadField,
    q: &ZetaQuery,
    method: ConeMethod,
    domain: Option<&[ShintaniCone]>,
    level_bound: u32,
) -> Result<BigRational> {
    check_query(field, q, level_bound)?;
    let default_domain = shintani_domain(field);
    let domain = domain.unwrap_or(&default_domain);
    let terms = smoothed_terms(field, q)?;
    let mut total = BigRational::zero();
    for term in &terms {
        let mut s = BigRational::zero();
        for cone in domain {
            s += match method {
                ConeMethod::Unimodular => sum_unimodular(field, &term.lattice, cone, q)?,
                ConeMethod::Parallelepiped => sum_parallelepiped(field, &term.lattice, cone, q)?,
            };
        }
        let w = BigInt::from(term.weight) * BigInt::from(term.mult).pow(q.k);
        total += s * BigRational::from_integer(w);
    }
    let nb = BigInt::from(q.class_rep.norm()).pow(q.k);
    Ok(total * BigRational::from_integer(nb))
}

fn sum_unimodular(
    field: &QuadField,
    lattice: &Lattice,
    cone: &ShintaniCone,
    q: &ZetaQuery,
) -> Result<BigRational> {
    let mut s = BigRational::zero();
    for piece in unimodular_pieces(lattice, cone)? {
        let (x1, x2, pm) = match &q.congruence {
            None => (BigRational::one(), BigRational::zero(), BigInt::one()),
            Some(r) => {
                let (c1, c2) = piece_shift(field, &piece, r, q.p);
                let pm = BigInt::from(q.p).pow(r.n);
                (
                    BigRational::new(c1, pm.clone()),
                    BigRational::new(c2, pm.clone()),
                    pm,
                )
            }
        };
        let pr = BigRational::from_integer(pm);
        let v1 = piece.a.scale(&pr);
        let v2 = piece.b.scale(&pr);
        s += piece_value(field, &x1, &x2, &v1, &v2, q.k);
    }
    Ok(s)
}

fn sum_parallelepiped(
    field: &QuadField,
    lattice: &Lattice,
    cone: &ShintaniCone,
    q: &ZetaQuery,
) -> Result<BigRational> {
    if cone.closure != [true, false] {
        return Err(Error::UnsupportedClosure);
    }
    let (a, b) = lattice.primitive_on_ray(&cone.gens[0]);
    let (c, d) = lattice.primitive_on_ray(&cone.gens[1]);
    let g1 = lattice.vector(&a, &b);
    let g2 = lattice.vector(&c, &d);
    let base = parallelepiped_points(lattice, &g1, &g2);
    let (n, pm) = match &q.congruence {
        None => (0, 1u64),
        Some(r) => (r.n, q.p.pow(r.n)),
    };
    let pmr = rat(pm as i64);
    let v1 = g1.scale(&pmr);
    let v2 = g2.scale(&pmr);
    let mb = BigInt::from(pm);
    let mut s = BigRational::zero();
    for (x1, x2) in &base {
        for s1 in 0..pm {
            for s2 in 0..pm {
                let y1 = (x1 + rat(s1 as i64)) / &pmr;
                let y2 = (x2 + rat(s2 as i64)) / &pmr;
                if let Some(r) = &q.congruence {
                    let pt = v1.scale(&y1).add(&v2.scale(&y2));
                    let (r0, r1) = reduce_mod(field, &pt, &mb);
                    if r0 != BigInt::from(r.c0) || r1 != BigInt::from(r.c1) {
                        continue;
                    }
                }
                s += piece_value(field, &y1, &y2, &v1, &v2, q.k);
            }
        }
    }
    let _ = n;
    Ok(s)
}

/// Nonnegative rational as integer, if it is one.
pub fn as_integer(r: &BigRational) -> Option<BigInt> {
    if r.is_integer() {
        Some(r.to_integer())
    } else {
        None
    }
}

pub fn to_i64(r: &BigRational) -> Option<i64> {
    as_integer(r).and_then(|n| n.to_i64())
}
