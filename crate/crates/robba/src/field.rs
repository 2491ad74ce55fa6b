//! Exact arithmetic in O_K and K for K = Q_p or a totally ramified extension
//! of Q_p cut out by an Eisenstein polynomial, with absolute-precision tracking.
//!
//! An element is stored as a numerator in the pi-power basis together with a
//! nonnegative shift t, representing (sum a_i pi^i) * pi^(-t). Coordinates are
//! reduced canonically: coordinate i is kept modulo p^ceil((P - i)/e) where P
//! is the numerator precision in pi-units. Canonical form keeps shift = 0
//! unless the element has negative valuation (then the numerator is a unit).
//!
//! Valuations are rationals in units of val(p) = 1, so val(pi) = 1/e. An
//! element whose residue vanishes at precision P is "indistinguishable from
//! zero at precision P"; it is never asserted to be zero.

use std::fmt;
use std::sync::Arc;

use num::rational::Rational64;

use crate::error::{Error, Result};

/// Deterministic Miller-Rabin for u64.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for q in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == q {
            return true;
        }
        if n % q == 0 {
            return false;
        }
    }
    let mut d = n - 1;
    let mut s = 0u32;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    let mul = |a: u64, b: u64| ((a as u128 * b as u128) % n as u128) as u64;
    let powmod = |mut b: u64, mut e: u64| {
        let mut acc = 1u64;
        b %= n;
        while e > 0 {
            if e & 1 == 1 {
                acc = mul(acc, b);
            }
            b = mul(b, b);
            e >>= 1;
        }
        acc
    };
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = powmod(a, d);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul(x, x);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn modinv_u64(a: u64, m: u64) -> Option<u64> {
    let (mut old_r, mut r) = (a as i128, m as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        let tmp = old_r - q * r;
        old_r = r;
        r = tmp;
        let tmp = old_s - q * s;
        old_s = s;
        s = tmp;
    }
    if old_r != 1 {
        return None;
    }
    Some(old_s.rem_euclid(m as i128) as u64)
}

fn vp_u64(mut a: u64, p: u64) -> u32 {
    debug_assert!(a != 0);
    let mut v = 0;
    while a % p == 0 {
        a /= p;
        v += 1;
    }
    v
}

struct FieldInner {
    p: u64,
    e: usize,
    /// Monic Eisenstein polynomial c_0 + c_1 T + ... + T^e; for e = 1 this is
    /// the implicit T - p.
    eis: Vec<i64>,
    /// Largest exponent m with p^m representable for modular products.
    mmax: u32,
    p_pows: Vec<u64>,
    /// red_rows[t] = coordinates of T^(e+t) reduced mod (eis, p^mmax), t < e-1.
    red_rows: Vec<Vec<u64>>,
    /// Coordinates of pi^(e-1) * v^(-1) where pi^e = p*v; multiplying by this
    /// and then dividing every coordinate by p is exact division by pi.
    pi_div: Vec<u64>,
    max_prec: i64,
}

/// A p-adic coefficient field: Q_p, or the totally ramified extension defined
/// by a monic Eisenstein polynomial.
#[derive(Clone)]
pub struct Field(Arc<FieldInner>);

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
            || (self.0.p == other.0.p && self.0.e == other.0.e && self.0.eis == other.0.eis)
    }
}
impl Eq for Field {}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.e == 1 {
            write!(f, "Q_{}", self.0.p)
        } else {
            write!(f, "Q_{}[pi]/{:?}", self.0.p, self.0.eis)
        }
    }
}

impl Field {
    /// Build a field descriptor. `eisenstein` lists c_0..c_e of a monic
    /// polynomial; pass `None` for Q_p itself (then pi = p).
    pub fn new(p: u64, eisenstein: Option<Vec<i64>>) -> Result<Field> {
        if !is_prime_u64(p) {
            return Err(Error::NotPrime(p));
        }
        let eis: Vec<i64> = match eisenstein {
            None => vec![-(p as i64), 1],
            Some(c) => {
                if c.len() < 3 {
                    return Err(Error::NotEisenstein(
                        "polynomial must have degree at least 2 (omit it for Q_p)".into(),
                    ));
                }
                if *c.last().unwrap() != 1 {
                    return Err(Error::NotEisenstein("polynomial is not monic".into()));
                }
                let c0 = c[0];
                if c0 == 0 {
                    return Err(Error::NotEisenstein("constant term is zero".into()));
                }
                let c0a = c0.unsigned_abs();
                if c0a % p != 0 || (c0a / p) % p == 0 {
                    return Err(Error::NotEisenstein(
                        "constant term does not have valuation exactly 1".into(),
                    ));
                }
                for (i, &ci) in c.iter().enumerate().take(c.len() - 1).skip(1) {
                    if ci.unsigned_abs() % p != 0 {
                        return Err(Error::NotEisenstein(format!(
                            "coefficient of T^{i} is a unit"
                        )));
                    }
                }
                c
            }
        };
        let e = eis.len() - 1;
        let mut mmax = 0u32;
        let mut acc: u128 = 1;
        while acc * p as u128 <= (1u128 << 62) {
            acc *= p as u128;
            mmax += 1;
        }
        if mmax < 4 {
            return Err(Error::Invalid(format!("prime {p} too large for residues")));
        }
        let p_pows: Vec<u64> = (0..=mmax).map(|k| (p as u128).pow(k) as u64).collect();
        let pm = p_pows[mmax as usize];

        // T^(e+t) mod (eis, p^mmax) for t = 0..e-2.
        let mut red_rows: Vec<Vec<u64>> = Vec::new();
        if e > 1 {
            let row0: Vec<u64> = (0..e)
                .map(|i| (-(eis[i] as i128)).rem_euclid(pm as i128) as u64)
                .collect();
            red_rows.push(row0);
            for t in 1..e - 1 {
                let prev = red_rows[t - 1].clone();
                let mut row = vec![0u64; e];
                for i in 0..e - 1 {
                    row[i + 1] = prev[i];
                }
                let top = prev[e - 1]; // coefficient of T^e, fold through row 0
                for i in 0..e {
                    row[i] = ((row[i] as u128 + top as u128 * red_rows[0][i] as u128)
                        % pm as u128) as u64;
                }
                red_rows.push(row);
            }
        }

        let inner = FieldInner {
            p,
            e,
            eis,
            mmax,
            p_pows,
            red_rows,
            pi_div: Vec::new(),
            max_prec: e as i64 * (mmax as i64 - 2),
        };
        let mut field = Field(Arc::new(inner));

        // pi^(e-1) * v^(-1) where v = -(c_0/p + (c_1/p) pi + ...), a unit.
        let pi_div = if e == 1 {
            vec![1u64]
        } else {
            let inner = &field.0;
            let v: Vec<u64> = (0..e)
                .map(|i| {
                    (-(inner.eis[i] as i128 / inner.p as i128)).rem_euclid(pm as i128) as u64
                })
                .collect();
            let vinv = field.invert_unit_coords(&v, inner.max_prec)?;
            let mut pie = vec![0u64; e];
            pie[e - 1] = 1;
            field.mul_coords(&pie, &vinv, mmax)
        };
        Arc::get_mut(&mut field.0).unwrap().pi_div = pi_div;
        Ok(field)
    }

    pub fn p(&self) -> u64 {
        self.0.p
    }

    /// Ramification index e; val(pi) = 1/e with val(p) = 1.
    pub fn ramification(&self) -> usize {
        self.0.e
    }

    /// The defining Eisenstein polynomial c_0..c_e, or None for Q_p.
    pub fn eisenstein(&self) -> Option<&[i64]> {
        if self.0.e == 1 {
            None
        } else {
            Some(&self.0.eis)
        }
    }

    /// Largest supported numerator precision, in pi-units.
    pub fn max_prec(&self) -> i64 {
        self.0.max_prec
    }

    fn check_prec(&self, prec: i64) -> Result<()> {
        if prec <= 0 {
            return Err(Error::PrecisionExhausted);
        }
        if prec > self.0.max_prec {
            return Err(Error::PrecisionUnsupported {
                p: self.0.p,
                requested: prec,
                limit: self.0.max_prec,
            });
        }
        Ok(())
    }

    /// Exponent m_i: coordinate i of an element known mod pi^prec is defined
    /// modulo p^(m_i).
    fn mexp(&self, prec: i64, i: usize) -> u32 {
        let e = self.0.e as i64;
        let d = prec - i as i64;
        if d <= 0 {
            0
        } else {
            ((d + e - 1) / e) as u32
        }
    }

    fn mwork(&self, prec: i64) -> u32 {
        let e = self.0.e as i64;
        let m = (prec + e - 1) / e + 2;
        (m as u32).min(self.0.mmax)
    }

    fn reduce_coords(&self, coords: &mut [u64], prec: i64) {
        for (i, c) in coords.iter_mut().enumerate() {
            let m = self.mexp(prec, i);
            *c %= self.0.p_pows[m as usize];
        }
    }

    /// Schoolbook product in the pi-power basis, reduced by the Eisenstein
    /// relation, all modulo p^mwork.
    fn mul_coords(&self, a: &[u64], b: &[u64], mwork: u32) -> Vec<u64> {
        let e = self.0.e;
        let pm = self.0.p_pows[mwork as usize] as u128;
        if e == 1 {
            return vec![((a[0] as u128 * b[0] as u128) % pm) as u64];
        }
        let mut full = vec![0u128; 2 * e - 1];
        for (i, &ai) in a.iter().enumerate() {
            if ai == 0 {
                continue;
            }
            for (j, &bj) in b.iter().enumerate() {
                full[i + j] = (full[i + j] + (ai as u128 * bj as u128) % pm) % pm;
            }
        }
        let mut out: Vec<u128> = full[..e].to_vec();
        for t in 0..e - 1 {
            let c = full[e + t] % pm;
            if c == 0 {
                continue;
            }
            let row = &self.0.red_rows[t];
            for i in 0..e {
                out[i] = (out[i] + c * (row[i] as u128 % pm)) % pm;
            }
        }
        out.into_iter().map(|x| x as u64).collect()
    }

    fn add_coords(&self, a: &[u64], b: &[u64], mwork: u32) -> Vec<u64> {
        let pm = self.0.p_pows[mwork as usize] as u128;
        a.iter()
            .zip(b)
            .map(|(&x, &y)| ((x as u128 + y as u128) % pm) as u64)
            .collect()
    }

    fn neg_coords(&self, a: &[u64], mwork: u32) -> Vec<u64> {
        let pm = self.0.p_pows[mwork as usize];
        a.iter()
            .map(|&x| if x == 0 { 0 } else { pm - x % pm })
            .collect()
    }

    /// Valuation in pi-units of a reduced coordinate vector, None if zero.
    fn val_coords(&self, coords: &[u64]) -> Option<i64> {
        let mut best: Option<i64> = None;
        for (i, &c) in coords.iter().enumerate() {
            if c != 0 {
                let v = self.0.e as i64 * vp_u64(c, self.0.p) as i64 + i as i64;
                best = Some(best.map_or(v, |b: i64| b.min(v)));
            }
        }
        best
    }

    /// Newton inversion of a unit coordinate vector, modulo pi^prec.
    fn invert_unit_coords(&self, u: &[u64], prec: i64) -> Result<Vec<u64>> {
        let p = self.0.p;
        let z0 = modinv_u64(u[0] % p, p).ok_or(Error::DivisionByIndistinguishableZero)?;
        let mut z = vec![0u64; self.0.e];
        z[0] = z0;
        let mwork = self.mwork(prec);
        let pm = self.0.p_pows[mwork as usize] as u128;
        let mut t: i64 = 1;
        while t < prec {
            t = (2 * t).min(prec);
            // z <- z (2 - u z)
            let uz = self.mul_coords(u, &z, mwork);
            let mut corr = self.neg_coords(&uz, mwork);
            corr[0] = ((corr[0] as u128 + 2) % pm) as u64;
            z = self.mul_coords(&z, &corr, mwork);
        }
        let mut z = z;
        self.reduce_coords(&mut z, prec);
        Ok(z)
    }

    /// Exact division of a numerator by pi: requires val >= 1.
    fn div_pi_coords(&self, coords: &[u64], mwork: u32) -> Result<Vec<u64>> {
        let p = self.0.p;
        let w = if self.0.e == 1 {
            coords.to_vec()
        } else {
            self.mul_coords(coords, &self.0.pi_div, mwork)
        };
        let mut out = Vec::with_capacity(w.len());
        for &x in &w {
            if x % p != 0 {
                return Err(Error::Invalid("inexact division by pi".into()));
            }
            out.push(x / p);
        }
        Ok(out)
    }

    // ---- element constructors ----

    pub fn zero(&self, abs_prec: i64) -> Result<FieldElement> {
        self.check_prec(abs_prec)?;
        Ok(FieldElement {
            field: self.clone(),
            coords: vec![0; self.0.e],
            num_prec: abs_prec,
            shift: 0,
        })
    }

    pub fn one(&self, abs_prec: i64) -> Result<FieldElement> {
        self.from_i128(1, abs_prec)
    }

    pub fn pi(&self, abs_prec: i64) -> Result<FieldElement> {
        self.check_prec(abs_prec)?;
        let mut coords = vec![0u64; self.0.e];
        if self.0.e == 1 {
            coords[0] = self.0.p;
        } else {
            coords[1] = 1;
        }
        let mut el = FieldElement {
            field: self.clone(),
            coords,
            num_prec: abs_prec,
            shift: 0,
        };
        el.reduce_inplace();
        Ok(el)
    }

    pub fn from_i128(&self, n: i128, abs_prec: i64) -> Result<FieldElement> {
        self.check_prec(abs_prec)?;
        let m = self.mexp(abs_prec, 0);
        let pm = self.0.p_pows[m as usize] as i128;
        let mut coords = vec![0u64; self.0.e];
        coords[0] = n.rem_euclid(pm) as u64;
        Ok(FieldElement {
            field: self.clone(),
            coords,
            num_prec: abs_prec,
            shift: 0,
        })
    }

    /// Exact ingestion of a rational with denominator prime to p.
    pub fn from_ratio(&self, num: i128, den: i128, abs_prec: i64) -> Result<FieldElement> {
        if den == 0 {
            return Err(Error::Invalid("zero denominator".into()));
        }
        if den.unsigned_abs() % self.0.p as u128 == 0 {
            return Err(Error::Invalid(format!(
                "denominator {den} is not prime to p = {}",
                self.0.p
            )));
        }
        let n = self.from_i128(num, abs_prec)?;
        let d = self.from_i128(den, abs_prec)?;
        n.div(&d)
    }

    pub fn random<R: rand::Rng>(&self, rng: &mut R, abs_prec: i64) -> Result<FieldElement> {
        self.check_prec(abs_prec)?;
        let coords: Vec<u64> = (0..self.0.e)
            .map(|i| {
                let m = self.mexp(abs_prec, i);
                rng.gen_range(0..self.0.p_pows[m as usize])
            })
            .collect();
        let mut el = FieldElement {
            field: self.clone(),
            coords,
            num_prec: abs_prec,
            shift: 0,
        };
        el.canonicalize();
        Ok(el)
    }
}

/// Certified knowledge about a valuation, in units of val(p) = 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Valuation {
    Exact(Rational64),
    AtLeast(Rational64),
}

impl Valuation {
    pub fn lower_bound(&self) -> Rational64 {
        match self {
            Valuation::Exact(q) | Valuation::AtLeast(q) => *q,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Valuation::Exact(_))
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Valuation::Exact(q) => write!(f, "{}/{}", q.numer(), q.denom()),
            Valuation::AtLeast(q) => write!(f, ">={}/{}", q.numer(), q.denom()),
        }
    }
}

/// An element of O_K or K known modulo a power of the uniformizer.
#[derive(Clone)]
pub struct FieldElement {
    field: Field,
    coords: Vec<u64>,
    /// Numerator precision in pi-units.
    num_prec: i64,
    /// The element is numerator * pi^(-shift), shift >= 0.
    shift: i64,
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.coords)?;
        if self.shift > 0 {
            write!(f, "/pi^{}", self.shift)?;
        }
        write!(f, " mod pi^{}", self.abs_prec())
    }
}

impl FieldElement {
    pub fn field(&self) -> &Field {
        &self.field
    }

    /// Absolute precision in pi-units: the element is known mod pi^abs_prec.
    pub fn abs_prec(&self) -> i64 {
        self.num_prec - self.shift
    }

    /// Canonical pi-basis residues of the numerator (shift = 0 for integral
    /// elements).
    pub fn residues(&self) -> &[u64] {
        &self.coords
    }

    pub fn pi_shift(&self) -> i64 {
        self.shift
    }

    fn reduce_inplace(&mut self) {
        let f = self.field.clone();
        f.reduce_coords(&mut self.coords, self.num_prec);
    }

    /// Restore canonical form: fold an indistinguishable-zero numerator, and
    /// divide out pi from numerator/shift while both are positive.
    fn canonicalize(&mut self) {
        self.reduce_inplace();
        match self.field.val_coords(&self.coords) {
            None => {
                self.num_prec -= self.shift;
                self.shift = 0;
            }
            Some(v) => {
                let t = v.min(self.shift);
                if t > 0 {
                    let mwork = self.field.mwork(self.num_prec);
                    let mut c = self.coords.clone();
                    for _ in 0..t {
                        c = self.field.div_pi_coords(&c, mwork).expect("exact pi division");
                    }
                    self.coords = c;
                    self.num_prec -= t;
                    self.shift -= t;
                    self.reduce_inplace();
                }
            }
        }
    }

    /// Valuation in pi-units: Ok(v) when exact, Err(bound) when the element is
    /// indistinguishable from zero at pi^bound.
    pub fn val_pi(&self) -> std::result::Result<i64, i64> {
        match self.field.val_coords(&self.coords) {
            Some(v) => Ok(v - self.shift),
            None => Err(self.abs_prec()),
        }
    }

    fn val_pi_lower(&self) -> i64 {
        match self.val_pi() {
            Ok(v) | Err(v) => v,
        }
    }

    /// Valuation in units of val(p) = 1.
    pub fn valuation(&self) -> Valuation {
        let e = self.field.0.e as i64;
        match self.val_pi() {
            Ok(v) => Valuation::Exact(Rational64::new(v, e)),
            Err(b) => Valuation::AtLeast(Rational64::new(b, e)),
        }
    }

    pub fn is_zero_at_prec(&self) -> bool {
        self.val_pi().is_err()
    }

    pub fn is_integral(&self) -> bool {
        self.shift == 0
    }

    /// Reduce to a lower absolute precision.
    pub fn with_abs_prec(&self, target: i64) -> Result<FieldElement> {
        let t = target.min(self.abs_prec());
        self.field.check_prec(t)?;
        let mut el = self.clone();
        el.num_prec = t + el.shift;
        el.canonicalize();
        Ok(el)
    }

    fn same_field(&self, other: &FieldElement) -> Result<()> {
        if self.field != other.field {
            return Err(Error::FieldMismatch);
        }
        Ok(())
    }

    /// Multiply the numerator by pi^k (k >= 0), exact.
    fn numerator_times_pi(&self, k: i64) -> FieldElement {
        if k == 0 {
            return self.clone();
        }
        let f = &self.field;
        let new_prec = (self.num_prec + k).min(f.0.max_prec);
        let mwork = f.mwork(new_prec);
        let mut c = self.coords.clone();
        let pi = {
            let mut v = vec![0u64; f.0.e];
            if f.0.e == 1 {
                v[0] = f.0.p;
            } else {
                v[1] = 1;
            }
            v
        };
        for _ in 0..k {
            c = f.mul_coords(&c, &pi, mwork);
        }
        let mut el = FieldElement {
            field: f.clone(),
            coords: c,
            num_prec: new_prec,
            shift: self.shift,
        };
        el.reduce_inplace();
        el
    }

    /// Multiply by pi^k for signed k.
    pub fn mul_pi_pow(&self, k: i64) -> Result<FieldElement> {
        let mut el = if k >= 0 {
            self.numerator_times_pi(k)
        } else {
            FieldElement {
                shift: self.shift - k,
                ..self.clone()
            }
        };
        el.canonicalize();
        el.field.check_prec(el.abs_prec())?;
        Ok(el)
    }

    pub fn add(&self, other: &FieldElement) -> Result<FieldElement> {
        self.same_field(other)?;
        let t = self.shift.max(other.shift);
        let a = self.numerator_times_pi(t - self.shift);
        let b = other.numerator_times_pi(t - other.shift);
        let prec = a.num_prec.min(b.num_prec);
        self.field.check_prec(prec - t)?;
        let mwork = self.field.mwork(prec);
        let coords = self.field.add_coords(&a.coords, &b.coords, mwork);
        let mut el = FieldElement {
            field: self.field.clone(),
            coords,
            num_prec: prec,
            shift: t,
        };
        el.canonicalize();
        Ok(el)
    }

    pub fn neg(&self) -> FieldElement {
        let mwork = self.field.mwork(self.num_prec);
        let mut el = FieldElement {
            field: self.field.clone(),
            coords: self.field.neg_coords(&self.coords, mwork),
            num_prec: self.num_prec,
            shift: self.shift,
        };
        el.reduce_inplace();
        el
    }

    pub fn sub(&self, other: &FieldElement) -> Result<FieldElement> {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &FieldElement) -> Result<FieldElement> {
        self.same_field(other)?;
        let v1 = self.val_pi_lower() + self.shift; // numerator valuation bound
        let v2 = other.val_pi_lower() + other.shift;
        let prec = (self.num_prec + v2).min(other.num_prec + v1);
        let prec = prec.min(self.field.0.max_prec + self.shift + other.shift);
        self.field.check_prec(prec - self.shift - other.shift)?;
        let mwork = self.field.mwork(prec);
        let coords = self.field.mul_coords(&self.coords, &other.coords, mwork);
        let mut el = FieldElement {
            field: self.field.clone(),
            coords,
            num_prec: prec,
            shift: self.shift + other.shift,
        };
        el.canonicalize();
        Ok(el)
    }

    pub fn mul_i64(&self, scalar: i64) -> Result<FieldElement> {
        let s = self.field.from_i128(scalar as i128, self.field.0.max_prec)?;
        self.mul(&s)
    }

    pub fn inv(&self) -> Result<FieldElement> {
        let k = match self.val_pi() {
            Ok(v) => v,
            Err(_) => return Err(Error::DivisionByIndistinguishableZero),
        };
        let kn = k + self.shift; // numerator valuation, exact
        let mwork = self.field.mwork(self.num_prec);
        let mut u = self.coords.clone();
        for _ in 0..kn {
            u = self.field.div_pi_coords(&u, mwork)?;
        }
        let uprec = self.num_prec - kn;
        self.field.check_prec(uprec)?;
        let mut uu = u;
        self.field.reduce_coords(&mut uu, uprec);
        let zi = self.field.invert_unit_coords(&uu, uprec)?;
        // result = u^(-1) * pi^(shift - kn)
        let mut el = FieldElement {
            field: self.field.clone(),
            coords: zi,
            num_prec: uprec,
            shift: 0,
        };
        let el2 = el.mul_pi_pow(self.shift - kn)?;
        el = el2;
        self.field.check_prec(el.abs_prec())?;
        Ok(el)
    }

    pub fn div(&self, other: &FieldElement) -> Result<FieldElement> {
        self.mul(&other.inv()?)
    }

    pub fn pow_u64(&self, mut n: u64) -> Result<FieldElement> {
        let mut acc = self.field.one(self.field.0.max_prec.min(self.num_prec))?;
        let mut base = self.clone();
        if n == 0 {
            return acc.with_abs_prec(self.abs_prec());
        }
        loop {
            if n & 1 == 1 {
                acc = acc.mul(&base)?;
            }
            n >>= 1;
            if n == 0 {
                break;
            }
            base = base.mul(&base)?;
        }
        Ok(acc)
    }

    /// True when self and other agree modulo pi^min(abs precisions).
    pub fn equiv(&self, other: &FieldElement) -> Result<bool> {
        Ok(self.sub(other)?.is_zero_at_prec())
    }

    /// Residue-field digit of an integral element: image in O_K/m_K = F_p.
    pub fn digit0(&self) -> Result<u64> {
        if self.shift != 0 {
            return Err(Error::NotIntegral);
        }
        Ok(self.coords[0] % self.field.0.p)
    }

    /// Exact division by pi^k when the valuation allows it.
    pub fn div_pi_exact(&self, k: i64) -> Result<FieldElement> {
        self.mul_pi_pow(-k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q3() -> Field {
        Field::new(3, None).unwrap()
    }

    #[test]
    fn make_field_base_and_ramified() {
        let f = q3();
        assert_eq!(f.ramification(), 1);
        let f2 = Field::new(3, Some(vec![-3, 0, 1])).unwrap();
        assert_eq!(f2.ramification(), 2);
        let pi = f2.pi(10).unwrap();
        assert_eq!(pi.valuation(), Valuation::Exact(Rational64::new(1, 2)));
    }

    #[test]
    fn make_field_rejects_non_eisenstein() {
        assert!(matches!(
            Field::new(3, Some(vec![-1, 0, 1])),
            Err(Error::NotEisenstein(_))
        ));
        assert!(matches!(
            Field::new(3, Some(vec![-9, 0, 1])),
            Err(Error::NotEisenstein(_))
        ));
        assert!(matches!(
            Field::new(3, Some(vec![-3, 1, 1])),
            Err(Error::NotEisenstein(_))
        ));
        assert!(matches!(Field::new(4, None), Err(Error::NotPrime(4))));
    }

    #[test]
    fn geometric_inverse() {
        // 1/(1-3) mod 3^4 = 40
        let f = q3();
        let x = f.from_i128(-2, 4).unwrap();
        let y = x.inv().unwrap();
        assert_eq!(y.residues(), &[40]);
        assert_eq!(y.abs_prec(), 4);
    }

    #[test]
    fn mul_valuations() {
        let f = q3();
        let three = f.from_i128(3, 6).unwrap();
        let nine = three.mul(&three).unwrap();
        assert_eq!(nine.valuation(), Valuation::Exact(Rational64::from(2)));
        assert_eq!(nine.residues(), &[9]);
    }

    #[test]
    fn inv_of_zero_fails() {
        let f = q3();
        let z = f.zero(4).unwrap();
        assert!(matches!(z.inv(), Err(Error::DivisionByIndistinguishableZero)));
    }

    #[test]
    fn valuation_examples() {
        let f = q3();
        assert_eq!(
            f.from_i128(3, 8).unwrap().valuation(),
            Valuation::Exact(Rational64::from(1))
        );
        assert_eq!(
            f.zero(10).unwrap().valuation(),
            Valuation::AtLeast(Rational64::from(10))
        );
        // In Q_3(zeta_3), pi = eps - 1 is a root of T^2 + 3T + 3.
        let k = Field::new(3, Some(vec![3, 3, 1])).unwrap();
        assert_eq!(
            k.pi(12).unwrap().valuation(),
            Valuation::Exact(Rational64::new(1, 2))
        );
    }

    #[test]
    fn negative_valuation_round_trip() {
        let f = q3();
        let third = f.from_i128(1, 8).unwrap().div(&f.from_i128(3, 8).unwrap()).unwrap();
        assert_eq!(third.valuation(), Valuation::Exact(Rational64::from(-1)));
        let back = third.mul(&f.from_i128(3, 8).unwrap()).unwrap();
        assert!(back.sub(&f.one(6).unwrap()).unwrap().is_zero_at_prec());
    }

    #[test]
    fn ramified_arithmetic_consistency() {
        let k = Field::new(3, Some(vec![3, 3, 1])).unwrap();
        let pi = k.pi(12).unwrap();
        // pi^2 = -3 pi - 3
        let lhs = pi.mul(&pi).unwrap();
        let rhs = pi
            .mul_i64(-3)
            .unwrap()
            .add(&k.from_i128(-3, 12).unwrap())
            .unwrap();
        assert!(lhs.equiv(&rhs).unwrap());
        // eps = 1 + pi satisfies eps^3 = 1
        let eps = k.one(12).unwrap().add(&pi).unwrap();
        let e3 = eps.pow_u64(3).unwrap();
        assert!(e3.sub(&k.one(10).unwrap()).unwrap().is_zero_at_prec());
    }

    #[test]
    fn inv_inv_round_trip() {
        let f = q3();
        let x = f.from_i128(7, 12).unwrap();
        let y = x.inv().unwrap().inv().unwrap();
        assert!(x.with_abs_prec(y.abs_prec()).unwrap().equiv(&y).unwrap());
    }

    proptest! {
        #[test]
        fn ring_axioms_q3(a in -400i128..400, b in -400i128..400, c in -400i128..400) {
            let f = q3();
            let m = 9;
            let x = f.from_i128(a, m).unwrap();
            let y = f.from_i128(b, m).unwrap();
            let z = f.from_i128(c, m).unwrap();
            let assoc_l = x.add(&y).unwrap().add(&z).unwrap();
            let assoc_r = x.add(&y.add(&z).unwrap()).unwrap();
            prop_assert!(assoc_l.equiv(&assoc_r).unwrap());
            let distr_l = x.mul(&y.add(&z).unwrap()).unwrap();
            let distr_r = x.mul(&y).unwrap().add(&x.mul(&z).unwrap()).unwrap();
            prop_assert!(distr_l.equiv(&distr_r).unwrap());
        }

        #[test]
        fn ring_axioms_ramified(a in -200i128..200, b in -200i128..200, c in -200i128..200) {
            let k = Field::new(3, Some(vec![3, 3, 1])).unwrap();
            let m = 10;
            let pi = k.pi(m).unwrap();
            let x = k.from_i128(a, m).unwrap().add(&pi.mul_i64(b as i64).unwrap()).unwrap();
            let y = k.from_i128(b, m).unwrap().add(&pi.mul_i64(c as i64).unwrap()).unwrap();
            let z = k.from_i128(c, m).unwrap().add(&pi.mul_i64(a as i64).unwrap()).unwrap();
            let l = x.mul(&y).unwrap().mul(&z).unwrap();
            let r = x.mul(&y.mul(&z).unwrap()).unwrap();
            prop_assert!(l.equiv(&r).unwrap());
        }

        #[test]
        fn valuation_multiplicative(a in 1i128..3000, b in 1i128..3000) {
            let f = q3();
            let x = f.from_i128(a, 14).unwrap();
            let y = f.from_i128(b, 14).unwrap();
            if let (Valuation::Exact(va), Valuation::Exact(vb)) = (x.valuation(), y.valuation()) {
                let xy = x.mul(&y).unwrap();
                if let Valuation::Exact(v) = xy.valuation() {
                    prop_assert_eq!(v, va + vb);
                }
            }
        }
    }
}
