//! Group rings of finite abelian groups, their minus parts modulo `p^M`, and the
//! Stickelberger elements built from the partial zeta values.

use std::collections::HashMap;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{hnf_rows, Matrix};
use crate::measure::MeasureHandle;
use crate::padic::{PadicCtx, PadicElt};
use crate::pipeline::{ClassConjugate, UnitConfig};
use crate::quadfield::{NarrowClassGroup, QuadField};
use crate::shintani::{Residue, Smoothing};

/// A finite abelian group given by its multiplication table; element 0 is the identity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AbelianGroup {
    table: Vec<Vec<usize>>,
    inverse: Vec<usize>,
}

impl AbelianGroup {
    pub fn from_table(table: Vec<Vec<usize>>) -> Result<Self> {
        let n = table.len();
        if n == 0 || table.iter().any(|r| r.len() != n) {
            return Err(Error::Invalid("group table must be square and nonempty".into()));
        }
        for (a, row) in table.iter().enumerate() {
            if row[0] != a || table[0][a] != a {
                return Err(Error::Invalid("element 0 must be the identity".into()));
            }
            let mut seen = vec![false; n];
            for (b, &x) in row.iter().enumerate() {
                if x >= n || seen[x] || table[b][a] != x {
                    return Err(Error::Invalid("table is not a commutative latin square".into()));
                }
                seen[x] = true;
            }
        }
        let inverse = (0..n).map(|a| table[a].iter().position(|&x| x == 0).unwrap()).collect();
        Ok(AbelianGroup { table, inverse })
    }

    /// `Z/n_1 x ... x Z/n_k`, elements numbered in mixed radix with the first factor slowest.
    pub fn cyclic_product(orders: &[usize]) -> Self {
        let n: usize = orders.iter().product();
        let digits = |mut x: usize| {
            let mut d = vec![0; orders.len()];
            for i in (0..orders.len()).rev() {
                d[i] = x % orders[i];
                x /= orders[i];
            }
            d
        };
        let index = |d: &[usize]| d.iter().zip(orders).fold(0, |acc, (x, o)| acc * o + x);
        let table = (0..n)
            .map(|a| {
                let da = digits(a);
                (0..n)
                    .map(|b| {
                        let db = digits(b);
                        let s: Vec<usize> = (0..orders.len()).map(|i| (da[i] + db[i]) % orders[i]).collect();
                        index(&s)
                    })
                    .collect()
            })
            .collect();
        AbelianGroup::from_table(table).expect("product table is valid")
    }

    pub fn order(&self) -> usize {
        self.table.len()
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.table[a][b]
    }

    pub fn inv(&self, a: usize) -> usize {
        self.inverse[a]
    }

    pub fn pow(&self, a: usize, k: usize) -> usize {
        (0..k).fold(0, |x, _| self.mul(x, a))
    }

    pub fn elt_order(&self, a: usize) -> usize {
        let mut x = a;
        let mut k = 1;
        while x != 0 {
            x = self.mul(x, a);
            k += 1;
        }
        k
    }

    pub fn exponent(&self) -> usize {
        (0..self.order()).map(|a| self.elt_order(a)).fold(1, |e, o| e.lcm(&o))
    }

    /// All characters, each as exponents `chi(g)` in `Z/exponent`.
    pub fn characters(&self) -> Vec<Vec<usize>> {
        let n = self.order();
        let e = self.exponent();
        let mut gens = Vec::new();
        let mut sub = vec![false; n];
        sub[0] = true;
        while sub.iter().any(|&x| !x) {
            let g = (0..n).filter(|&a| !sub[a]).max_by_key(|&a| self.elt_order(a)).unwrap();
            gens.push(g);
            loop {
                let mut grew = false;
                for a in 0..n {
                    if sub[a] && !sub[self.mul(a, g)] {
                        sub[self.mul(a, g)] = true;
                        grew = true;
                    }
                }
                if !grew {
                    break;
                }
            }
        }
        let k = gens.len();
        let mut out: Vec<Vec<usize>> = Vec::new();
        let mut vals = vec![0usize; k];
        'assign: loop {
            if let Some(chi) = self.extend(&gens, &vals, e) {
                if !out.contains(&chi) {
                    out.push(chi);
                }
            }
            for v in vals.iter_mut() {
                *v += 1;
                if *v < e {
                    continue 'assign;
                }
                *v = 0;
            }
            break;
        }
        out.sort();
        out
    }

    fn extend(&self, gens: &[usize], vals: &[usize], e: usize) -> Option<Vec<usize>> {
        let n = self.order();
        let mut chi = vec![usize::MAX; n];
        chi[0] = 0;
        let mut queue = vec![0];
        while let Some(x) = queue.pop() {
            for (g, v) in gens.iter().zip(vals) {
                let y = self.mul(x, *g);
                let c = (chi[x] + v) % e;
                if chi[y] == usize::MAX {
                    chi[y] = c;
                    queue.push(y);
                } else if chi[y] != c {
                    return None;
                }
            }
        }
        Some(chi)
    }
}

/// An element `sum c_g [g]` of `Z[G]` or `Z/n[G]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupRingElt {
    group: Arc<AbelianGroup>,
    pub coeffs: Vec<BigInt>,
    modulus: Option<BigInt>,
}

impl GroupRingElt {
    pub fn zero(group: Arc<AbelianGroup>, modulus: Option<BigInt>) -> Self {
        let coeffs = vec![BigInt::zero(); group.order()];
        GroupRingElt { group, coeffs, modulus }
    }

    pub fn basis(group: Arc<AbelianGroup>, g: usize, modulus: Option<BigInt>) -> Self {
        let mut x = GroupRingElt::zero(group, modulus);
        x.coeffs[g] = BigInt::one();
        x.reduced()
    }

    pub fn from_coeffs(group: Arc<AbelianGroup>, coeffs: Vec<BigInt>, modulus: Option<BigInt>) -> Self {
        assert_eq!(coeffs.len(), group.order());
        GroupRingElt { group, coeffs, modulus }.reduced()
    }

    pub fn group(&self) -> &Arc<AbelianGroup> {
        &self.group
    }

    pub fn modulus(&self) -> Option<&BigInt> {
        self.modulus.as_ref()
    }

    fn reduced(mut self) -> Self {
        if let Some(m) = &self.modulus {
            for c in self.coeffs.iter_mut() {
                *c = c.mod_floor(m);
            }
        }
        self
    }

    fn same(&self, o: &GroupRingElt) {
        assert!(self.group == o.group && self.modulus == o.modulus, "group ring mismatch");
    }

    pub fn add(&self, o: &GroupRingElt) -> GroupRingElt {
        self.same(o);
        let coeffs = self.coeffs.iter().zip(&o.coeffs).map(|(a, b)| a + b).collect();
        GroupRingElt { coeffs, ..self.clone() }.reduced()
    }

    pub fn neg(&self) -> GroupRingElt {
        GroupRingElt { coeffs: self.coeffs.iter().map(|a| -a).collect(), ..self.clone() }.reduced()
    }

    pub fn sub(&self, o: &GroupRingElt) -> GroupRingElt {
        self.add(&o.neg())
    }

    pub fn scale(&self, k: &BigInt) -> GroupRingElt {
        GroupRingElt { coeffs: self.coeffs.iter().map(|a| a * k).collect(), ..self.clone() }.reduced()
    }

    pub fn mul(&self, o: &GroupRingElt) -> GroupRingElt {
        self.same(o);
        let mut coeffs = vec![BigInt::zero(); self.group.order()];
        for (a, x) in self.coeffs.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (b, y) in o.coeffs.iter().enumerate() {
                coeffs[self.group.mul(a, b)] += x * y;
            }
        }
        GroupRingElt { coeffs, ..self.clone() }.reduced()
    }

    /// Multiplication by `[g]`.
    pub fn act(&self, g: usize) -> GroupRingElt {
        let mut coeffs = vec![BigInt::zero(); self.group.order()];
        for (a, x) in self.coeffs.iter().enumerate() {
            coeffs[self.group.mul(a, g)] = x.clone();
        }
        GroupRingElt { coeffs, ..self.clone() }
    }

    /// `[g] -> [g^{-1}]`.
    pub fn involution(&self) -> GroupRingElt {
        let mut coeffs = vec![BigInt::zero(); self.group.order()];
        for (a, x) in self.coeffs.iter().enumerate() {
            coeffs[self.group.inv(a)] = x.clone();
        }
        GroupRingElt { coeffs, ..self.clone() }
    }

    pub fn augmentation(&self) -> BigInt {
        let s: BigInt = self.coeffs.iter().sum();
        match &self.modulus {
            Some(m) => s.mod_floor(m),
            None => s,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    /// Reduction into `Z/m[G]`; `m` must divide the current modulus.
    pub fn reduce_mod(&self, m: &BigInt) -> GroupRingElt {
        if let Some(old) = &self.modulus {
            assert!(old.is_multiple_of(m), "modulus {m} does not divide {old}");
        }
        GroupRingElt { modulus: Some(m.clone()), ..self.clone() }.reduced()
    }

    /// `chi(x) = sum c_g zeta^{chi(g)}` for a character given by exponents.
    pub fn character_value(&self, ctx: &PadicCtx, zeta: &PadicElt, chi: &[usize], prec: i64) -> PadicElt {
        let e = self.group.exponent();
        let powers: Vec<PadicElt> = (0..e as i64).map(|k| ctx.pow(zeta, k).unwrap()).collect();
        let mut acc = ctx.zero_at(prec);
        for (g, c) in self.coeffs.iter().enumerate() {
            if !c.is_zero() {
                acc = ctx.add(&acc, &ctx.mul_int(&powers[chi[g]], c));
            }
        }
        ctx.cap(&acc, prec)
    }
}

/// `R = Z/p^M[G]/(c + 1)` for an element `c` of order 2, in the basis of coset representatives.
#[derive(Clone, Debug)]
pub struct MinusAlgebra {
    group: Arc<AbelianGroup>,
    c: usize,
    p: u64,
    m: u32,
    modulus: BigInt,
    reps: Vec<usize>,
    /// `g -> (index of its coset representative, whether [g] = -[rep])`.
    proj: Vec<(usize, bool)>,
}

impl MinusAlgebra {
    pub fn new(group: Arc<AbelianGroup>, c: usize, p: u64, m: u32) -> Result<Self> {
        if m == 0 {
            return Err(Error::ModulusTooSmall);
        }
        if c >= group.order() || group.elt_order(c) != 2 {
            return Err(Error::Invalid("the complex conjugation must have order 2".into()));
        }
        let n = group.order();
        let mut proj = vec![(usize::MAX, false); n];
        let mut reps = Vec::new();
        for g in 0..n {
            if proj[g].0 == usize::MAX {
                proj[g] = (reps.len(), false);
                proj[group.mul(g, c)] = (reps.len(), true);
                reps.push(g);
            }
        }
        let modulus = BigInt::from(p).pow(m);
        Ok(MinusAlgebra { group, c, p, m, modulus, reps, proj })
    }

    pub fn rank(&self) -> usize {
        self.reps.len()
    }

    pub fn modulus(&self) -> &BigInt {
        &self.modulus
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn precision(&self) -> u32 {
        self.m
    }

    pub fn group(&self) -> &Arc<AbelianGroup> {
        &self.group
    }

    pub fn conjugation(&self) -> usize {
        self.c
    }

    fn reduce(&self, v: Vec<BigInt>) -> Vec<BigInt> {
        v.into_iter().map(|x| x.mod_floor(&self.modulus)).collect()
    }

    /// Image of `[g]`.
    pub fn basis(&self, g: usize) -> Vec<BigInt> {
        let mut v = vec![BigInt::zero(); self.rank()];
        let (i, neg) = self.proj[g];
        v[i] = if neg { -BigInt::one() } else { BigInt::one() };
        self.reduce(v)
    }

    pub fn one(&self) -> Vec<BigInt> {
        self.basis(0)
    }

    pub fn project(&self, x: &GroupRingElt) -> Vec<BigInt> {
        assert!(**x.group() == *self.group);
        let mut v = vec![BigInt::zero(); self.rank()];
        for (g, c) in x.coeffs.iter().enumerate() {
            let (i, neg) = self.proj[g];
            if neg {
                v[i] -= c;
            } else {
                v[i] += c;
            }
        }
        self.reduce(v)
    }

    pub fn add(&self, a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
        self.reduce(a.iter().zip(b).map(|(x, y)| x + y).collect())
    }

    pub fn sub(&self, a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
        self.reduce(a.iter().zip(b).map(|(x, y)| x - y).collect())
    }

    pub fn mul(&self, a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
        let mut v = vec![BigInt::zero(); self.rank()];
        for (i, x) in a.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (j, y) in b.iter().enumerate() {
                let (k, neg) = self.proj[self.group.mul(self.reps[i], self.reps[j])];
                if neg {
                    v[k] -= x * y;
                } else {
                    v[k] += x * y;
                }
            }
        }
        self.reduce(v)
    }

    /// Matrix of multiplication by `a` (row `j` is `a * e_j`).
    fn mult_matrix(&self, a: &[BigInt]) -> Matrix {
        (0..self.rank()).map(|j| self.mul(a, &self.basis(self.reps[j]))).collect()
    }

    pub fn is_unit(&self, a: &[BigInt]) -> bool {
        let d = crate::linalg::det(&self.mult_matrix(a));
        !d.is_multiple_of(&BigInt::from(self.p))
    }

    /// Determinant of a square matrix over `R`, by cofactor expansion.
    pub fn det(&self, mat: &[Vec<Vec<BigInt>>]) -> Result<Vec<BigInt>> {
        let n = mat.len();
        if let Some(r) = mat.iter().find(|r| r.len() != n) {
            return Err(Error::NonSquare(n, r.len()));
        }
        if n == 0 {
            return Ok(self.one());
        }
        if n == 1 {
            return Ok(self.reduce(mat[0][0].clone()));
        }
        let mut acc = vec![BigInt::zero(); self.rank()];
        for j in 0..n {
            if mat[0][j].iter().all(|x| x.is_zero()) {
                continue;
            }
            let minor: Vec<Vec<Vec<BigInt>>> = mat[1..]
                .iter()
                .map(|r| r.iter().enumerate().filter(|&(k, _)| k != j).map(|(_, x)| x.clone()).collect())
                .collect();
            let term = self.mul(&mat[0][j], &self.det(&minor)?);
            acc = if j % 2 == 0 { self.add(&acc, &term) } else { self.sub(&acc, &term) };
        }
        Ok(acc)
    }

    /// Image under the map induced by a surjection `G -> G'` sending `c` to the conjugation of `target`.
    pub fn push(&self, target: &MinusAlgebra, map: &[usize], a: &[BigInt]) -> Vec<BigInt> {
        let mut v = vec![BigInt::zero(); target.rank()];
        for (i, x) in a.iter().enumerate() {
            v = target.add(&v, &target.basis(map[self.reps[i]]).iter().map(|y| y * x).collect::<Vec<_>>());
        }
        target.reduce(v)
    }

    fn check_map(&self, target: &MinusAlgebra, map: &[usize]) -> Result<()> {
        let g = &self.group;
        let ok = map.len() == g.order()
            && map[0] == 0
            && map[self.c] == target.c
            && (0..g.order()).all(|a| (0..g.order()).all(|b| map[g.mul(a, b)] == target.group.mul(map[a], map[b])))
            && (0..target.group.order()).all(|x| map.contains(&x));
        if ok && target.m == self.m && target.p == self.p {
            Ok(())
        } else {
            Err(Error::Invalid("not a surjection of minus algebras".into()))
        }
    }

    /// Generators `g (h - 1)` of the relative augmentation ideal of `G -> G'`.
    pub fn relative_augmentation(&self, map: &[usize]) -> Vec<Vec<BigInt>> {
        let kernel: Vec<usize> = (0..self.group.order()).filter(|&h| map[h] == 0).collect();
        let mut gens = Vec::new();
        for &g in &self.reps {
            for &h in &kernel {
                if h != 0 {
                    gens.push(self.sub(&self.basis(self.group.mul(g, h)), &self.basis(g)));
                }
            }
        }
        gens
    }

    /// Hermite basis of the submodule spanned by `gens` (together with `p^M R`).
    pub fn span(&self, gens: &[Vec<BigInt>]) -> Matrix {
        let n = self.rank();
        let mut rows: Matrix = gens.to_vec();
        rows.extend(self.modulus_rows(n, 0, n));
        hnf_rows(&rows, n)
    }

    fn modulus_rows(&self, width: usize, from: usize, to: usize) -> Matrix {
        (from..to)
            .map(|i| {
                let mut r = vec![BigInt::zero(); width];
                r[i] = self.modulus.clone();
                r
            })
            .collect()
    }
}

/// Principal generator of the Fitting ideal of the module presented by `mat`.
pub fn fitting_ideal(alg: &MinusAlgebra, mat: &[Vec<Vec<BigInt>>]) -> Result<Vec<BigInt>> {
    alg.det(mat)
}

/// The quotient `R[L]/(theta_h L - theta_l, L I, L^2, I^2)` and the kernel of `R -> R_L`.
#[derive(Clone, Debug)]
pub struct RlPresentation {
    pub theta_h: Vec<BigInt>,
    pub theta_l: Vec<BigInt>,
    /// Relations on `(L-part in R', R-part)` coordinates, `p^M` rows included.
    pub relations: Matrix,
    /// Hermite basis of the kernel of `R -> R_L`.
    pub kernel: Matrix,
    /// Hermite basis of `I^2 + p^M R`.
    pub i_squared: Matrix,
}

impl RlPresentation {
    pub fn kernel_is_i_squared(&self) -> bool {
        self.kernel == self.i_squared
    }

    pub fn kernel_contains_i_squared(&self) -> bool {
        self.i_squared.iter().all(|v| lattice_contains(&self.kernel, v))
    }

    /// `[kernel : I^2 + p^M R]`.
    pub fn index_over_i_squared(&self) -> BigInt {
        diag_product(&self.i_squared) / diag_product(&self.kernel)
    }
}

fn pivot(row: &[BigInt]) -> Option<usize> {
    row.iter().position(|x| !x.is_zero())
}

fn diag_product(h: &Matrix) -> BigInt {
    h.iter().map(|r| r[pivot(r).unwrap()].clone()).product()
}

/// Membership in a lattice given by a Hermite basis.
pub fn lattice_contains(h: &Matrix, v: &[BigInt]) -> bool {
    let mut v = v.to_vec();
    for r in h {
        let c = pivot(r).unwrap();
        if let Some(vc) = pivot(&v) {
            if vc < c {
                return false;
            }
        }
        let (q, rem) = v[c].div_rem(&r[c]);
        if !rem.is_zero() {
            return false;
        }
        for (x, y) in v.iter_mut().zip(r) {
            *x -= &q * y;
        }
    }
    v.iter().all(|x| x.is_zero())
}

/// Presentation of `R_L` for `G -> G'` (`map`) with `theta_h` in `small` and `theta_l` in `big`.
///
/// `L I = 0` is built in by letting the `L`-summand be a module over `R' = R/I`; `L^2 = 0` by
/// omitting the `L^2` summand.
pub fn rl_quotient(
    big: &MinusAlgebra,
    small: &MinusAlgebra,
    map: &[usize],
    theta_h: &[BigInt],
    theta_l: &[BigInt],
) -> Result<RlPresentation> {
    big.check_map(small, map)?;
    let nb = small.rank();
    let n = big.rank();
    let width = nb + n;
    let igens = big.relative_augmentation(map);
    debug_assert!(igens.iter().all(|i| big.push(small, map, i).iter().all(|x| x.is_zero())));
    let mut i2 = Vec::new();
    for a in &igens {
        for b in &igens {
            i2.push(big.mul(a, b));
        }
    }
    let mut rows: Matrix = Vec::new();
    for x in &i2 {
        let mut r = vec![BigInt::zero(); nb];
        r.extend(x.iter().cloned());
        rows.push(r);
    }
    for &g in &big.reps {
        let e = big.basis(g);
        let mut r = small.mul(&big.push(small, map, &e), theta_h);
        r.extend(big.reduce(big.mul(&e, theta_l).into_iter().map(|x| -x).collect()));
        rows.push(r);
    }
    rows.extend(big.modulus_rows(width, 0, width));
    let h = hnf_rows(&rows, width);
    let kernel: Matrix = h
        .iter()
        .filter(|r| pivot(r).unwrap() >= nb)
        .map(|r| r[nb..].to_vec())
        .collect();
    Ok(RlPresentation {
        theta_h: theta_h.to_vec(),
        theta_l: theta_l.to_vec(),
        relations: rows,
        kernel,
        i_squared: big.span(&i2),
    })
}

/// The narrow class group as an abstract group, classes indexed as in `group`.
pub fn class_group(group: &NarrowClassGroup) -> Result<Arc<AbelianGroup>> {
    Ok(Arc::new(AbelianGroup::from_table(group.compose.clone())?))
}

/// `sum_b zeta(b, 0) [b]^{-1}` over `Z`.
pub fn stickelberger(group: &NarrowClassGroup, zetas: &[i64]) -> Result<GroupRingElt> {
    let g = class_group(group)?;
    let mut coeffs = vec![BigInt::zero(); g.order()];
    for (b, z) in zetas.iter().enumerate() {
        coeffs[g.inv(b)] = BigInt::from(*z);
    }
    Ok(GroupRingElt::from_coeffs(g, coeffs, None))
}

/// Derivative of the Stickelberger element along the cyclotomic tower, modulo `p^m`:
/// `-sum_b (sum_r nu_b(r) log_p N(r)) [b]^{-1}` with `r` over unit residues modulo `p^{m+1}`.
///
/// The classes of the ray class group are modeled as pairs (narrow class, unit residue) and
/// the cyclotomic character by the norm of the residue; the norm of the class representative
/// drops out because the measure of the units is zero.
pub fn theta_derivative(cfg: &UnitConfig, m: u32) -> Result<GroupRingElt> {
    if m == 0 {
        return Err(Error::ModulusTooSmall);
    }
    if cfg.smoothing != Smoothing::Inverse {
        return Err(Error::Invalid("the derivative needs the integral (inverse) smoothing".into()));
    }
    let (field, group) = cfg.setup()?;
    let p = cfg.p;
    let pm = BigInt::from(p).pow(m);
    let level = m + 1;
    let ctx = PadicCtx::new(p, level, cfg.d, cfg.branch)?;
    let logs = norm_logs(&ctx, level, m)?;
    let coeffs: Vec<BigInt> = group
        .reps
        .par_iter()
        .map(|rep| class_derivative(&field, cfg, rep, level, &logs, &pm))
        .collect::<Result<_>>()?;
    let g = class_group(&group)?;
    let mut out = vec![BigInt::zero(); g.order()];
    for (b, c) in coeffs.into_iter().enumerate() {
        out[g.inv(b)] = c;
    }
    Ok(GroupRingElt::from_coeffs(g, out, Some(pm)))
}

/// `log_p(n)` modulo `p^m` for every unit `n` modulo `p^level`.
fn norm_logs(ctx: &PadicCtx, level: u32, m: u32) -> Result<HashMap<u64, BigInt>> {
    let q = ctx.p().pow(level);
    let mut out = HashMap::new();
    for n in 1..q {
        if n % ctx.p() == 0 {
            continue;
        }
        let l = ctx.log(&ctx.from_pair(&BigInt::from(n), &BigInt::zero(), level as i64))?;
        out.insert(n, ctx.residue(&l, m as i64).0);
    }
    Ok(out)
}

fn class_derivative(
    field: &QuadField,
    cfg: &UnitConfig,
    rep: &crate::quadfield::Ideal,
    level: u32,
    logs: &HashMap<u64, BigInt>,
    pm: &BigInt,
) -> Result<BigInt> {
    let p = cfg.p;
    let q = p.pow(level);
    let qd = (cfg.d.rem_euclid(q as i64)) as u128;
    let h = MeasureHandle::new(field, &cfg.query(rep))?;
    let norm = |r: &Residue| {
        let (a, b) = (r.c0 as u128, r.c1 as u128);
        let q = q as u128;
        ((a * a % q + q - qd * (b * b % q) % q) % q) as u64
    };
    let table = h.level_table(level)?;
    let mut acc = BigInt::zero();
    for r in Residue::all(p, level).into_iter().filter(|r| r.is_unit(p)) {
        let v = table.get(&r);
        if v != 0 {
            acc += BigInt::from(v) * &logs[&norm(&r)];
        }
    }
    Ok((-acc).mod_floor(pm))
}

/// `Gal(L/F) = G x Z/p` for `L` the first layer of the cyclotomic tower over the narrow
/// Hilbert class field, with `Theta_L` read off from the level-2 measures.
#[derive(Clone, Debug)]
pub struct FirstLayer {
    /// Element `(b, k)` has index `b p + k`.
    pub group: Arc<AbelianGroup>,
    /// The projection onto the class group.
    pub map: Vec<usize>,
    /// The image of the complex conjugation.
    pub conj: usize,
    pub theta_l: GroupRingElt,
}

/// Builds [`FirstLayer`]; a unit residue `r` lies over `k` in `Z/p` when
/// `log_p N(r) = k log_p(1 + p)` modulo `p^2`.
pub fn first_layer(cfg: &UnitConfig) -> Result<FirstLayer> {
    let (field, classes) = cfg.setup()?;
    let g = class_group(&classes)?;
    let p = cfg.p;
    let pu = p as usize;
    let h = g.order();
    let n = h * pu;
    let table = (0..n)
        .map(|x| (0..n).map(|y| g.mul(x / pu, y / pu) * pu + (x % pu + y % pu) % pu).collect())
        .collect();
    let group = Arc::new(AbelianGroup::from_table(table)?);
    let map: Vec<usize> = (0..n).map(|x| x / pu).collect();
    let ctx = PadicCtx::new(p, 2, cfg.d, cfg.branch)?;
    let logs = norm_logs(&ctx, 2, 2)?;
    let pb = BigInt::from(p);
    let l1 = (&logs[&(p + 1)] / &pb).mod_floor(&pb);
    let l1inv = l1.modpow(&BigInt::from(p - 2), &pb);
    let q = p * p;
    let qd = cfg.d.rem_euclid(q as i64) as u64;
    let mut coeffs = vec![BigInt::zero(); n];
    for (b, rep) in classes.reps.iter().enumerate() {
        let table = MeasureHandle::new(&field, &cfg.query(rep))?.level_table(2)?;
        for r in Residue::all(p, 2).into_iter().filter(|r| r.is_unit(p)) {
            let nr = (r.c0 * r.c0 % q + q - qd * (r.c1 * r.c1 % q) % q) % q;
            let k = ((&logs[&nr] / &pb) * &l1inv).mod_floor(&pb).to_usize().unwrap();
            let idx = g.inv(b) * pu + (pu - k) % pu;
            coeffs[idx] += table.get(&r);
        }
    }
    Ok(FirstLayer {
        map,
        conj: classes.conj_class * pu,
        theta_l: GroupRingElt::from_coeffs(group.clone(), coeffs, None),
        group,
    })
}

/// A primitive `e`-th root of unity in `F_p`, as a Teichmuller lift.
pub fn root_of_unity(ctx: &PadicCtx, e: usize) -> Result<PadicElt> {
    let p = ctx.p();
    let q1 = (p * p - 1) as usize;
    if q1 % e != 0 {
        return Err(Error::Invalid(format!("no primitive {e}-th root of unity in the residue field")));
    }
    let primes: Vec<usize> = (2..=q1).filter(|&r| q1 % r == 0 && (2..r).all(|s| r % s != 0)).collect();
    for a in 0..p {
        for b in 1..p {
            let x = ctx.from_pair(&BigInt::from(a), &BigInt::from(b), ctx.prec());
            let one = ctx.one();
            let generates = primes.iter().all(|r| !ctx.agree(&ctx.pow(&x, (q1 / r) as i64).unwrap(), &one, 1));
            if generates {
                let t = ctx.teichmuller(&x)?;
                return ctx.pow(&t, (q1 / e) as i64);
            }
        }
    }
    Err(Error::Invalid("residue field has no generator".into()))
}

/// One odd character's side of the rank-one comparison.
#[derive(Clone, Debug)]
pub struct CharacterReport {
    /// `chi(g)` as exponents of a fixed root of unity of order `exponent`.
    pub chi: Vec<usize>,
    /// Valuation of `chi(theta')`, capped at the precision.
    pub theta_valuation: i64,
    /// Valuation of `chi(theta') + sum_b chi(b)^{-1} log_p N(u_b)`, capped at the precision.
    pub residual_valuation: i64,
}

#[derive(Clone, Debug)]
pub struct GrossCheck {
    pub m: u32,
    pub theta: GroupRingElt,
    /// `sum_b log_p N(u_b) [b]^{-1}` modulo `p^m`.
    pub log_side: GroupRingElt,
    pub characters: Vec<CharacterReport>,
}

impl GrossCheck {
    pub fn min_residual(&self) -> i64 {
        self.characters.iter().map(|c| c.residual_valuation).min().unwrap_or(self.m as i64)
    }
}

/// Odd characters of `group` (those with `chi(c) = -1`).
pub fn odd_characters(g: &AbelianGroup, c: usize) -> Vec<Vec<usize>> {
    let e = g.exponent();
    g.characters().into_iter().filter(|chi| 2 * chi[c] == e).collect()
}

fn capped_valuation(x: &PadicElt, cap: i64) -> i64 {
    if x.is_zero() {
        cap
    } else {
        x.val.min(cap)
    }
}

/// Compares `theta'` with the logarithms of the norms of the conjugates, character by character.
pub fn gross_stark_check(cfg: &UnitConfig, m: u32, conjugates: &[ClassConjugate]) -> Result<GrossCheck> {
    let (_, group) = cfg.setup()?;
    let theta = theta_derivative(cfg, m)?;
    let g = theta.group().clone();
    if conjugates.len() != g.order() {
        return Err(Error::Invalid("one conjugate per class is needed".into()));
    }
    let prec = m as i64;
    let ctx = PadicCtx::new(cfg.p, m + 2, cfg.d, cfg.branch)?;
    let mut logs = vec![BigInt::zero(); g.order()];
    for c in conjugates {
        let wide = PadicCtx::new(cfg.p, c.value.prec.max(1) as u32, cfg.d, cfg.branch)?;
        let l = wide.log(&wide.norm(&c.value))?;
        if l.prec < prec {
            return Err(Error::InsufficientPrecision("conjugate known to too few digits".into()));
        }
        logs[g.inv(c.class_index)] = wide.residue(&l, prec).0;
    }
    let log_side = GroupRingElt::from_coeffs(g.clone(), logs, theta.modulus().cloned());
    let total = theta.add(&log_side);
    let zeta = root_of_unity(&ctx, g.exponent())?;
    let characters = odd_characters(&g, group.conj_class)
        .into_iter()
        .map(|chi| CharacterReport {
            theta_valuation: capped_valuation(&theta.character_value(&ctx, &zeta, &chi, prec), prec),
            residual_valuation: capped_valuation(&total.character_value(&ctx, &zeta, &chi, prec), prec),
            chi,
        })
        .collect();
    Ok(GrossCheck { m, theta, log_side, characters })
}
