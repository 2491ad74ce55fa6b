//! Truncated Laurent series over a p-adic field, with honest window and
//! modulus propagation.
//!
//! A series is known on an exponent window [lo, hi): stored coefficients all
//! carry absolute precision `modulus` (pi-units), absent in-window exponents
//! are indistinguishable from zero at that modulus. What is known outside the
//! window is recorded separately:
//!
//! - below lo: `LoTail::Zero` (exactly zero: a genuine Laurent polynomial /
//!   power series), `LoTail::Clean` (every coefficient is = 0 mod pi^modulus;
//!   operator images with infinite principal parts of high valuation use
//!   this), or `LoTail::Unknown`;
//! - above hi: `HiTail::Zero`, `HiTail::Integral` (coefficients lie in O_K),
//!   or `HiTail::Unknown`.
//!
//! Multiplication windows follow the conservative intersection rule: the
//! output is certified on [f.lo + g.lo, min(f.lo + g.hi, g.lo + f.hi)), with
//! each bound relaxed to infinity when the corresponding tail is exactly zero.

use std::collections::BTreeMap;

use num::rational::Rational64;
use num::Zero as _;

use crate::error::{Error, Result};
use crate::field::{Field, FieldElement, Valuation};
use crate::hensel::Poly;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LoTail {
    Zero,
    Clean,
    Unknown,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HiTail {
    Zero,
    Integral,
    Unknown,
}

/// A Laurent series known on an exponent window modulo pi^modulus.
#[derive(Clone, Debug)]
pub struct Series {
    field: Field,
    lo: i64,
    hi: i64,
    modulus: i64,
    lo_tail: LoTail,
    hi_tail: HiTail,
    coeffs: BTreeMap<i64, FieldElement>,
}

/// Result of a Gauss-valuation query val_v(f) = min_n val(f_n) + n v.
///
/// `value` is the minimum over everything the window certifies; `exact` means
/// the true Gauss valuation equals it, `certified` means the true valuation is
/// at least it. Convention throughout: radius r = p^(-v), so v >= 0 addresses
/// the closed unit disk.
#[derive(Clone, Copy, Debug)]
pub struct GaussValue {
    pub v: Rational64,
    pub value: Option<Rational64>,
    pub exact: bool,
    pub certified: bool,
}

impl Series {
    // ---- constructors ----

    pub fn zero(field: &Field, lo: i64, hi: i64, modulus: i64) -> Result<Series> {
        if modulus <= 0 {
            return Err(Error::PrecisionExhausted);
        }
        if lo > hi {
            return Err(Error::Invalid("window lower bound exceeds upper".into()));
        }
        Ok(Series {
            field: field.clone(),
            lo,
            hi,
            modulus,
            lo_tail: LoTail::Zero,
            hi_tail: HiTail::Zero,
            coeffs: BTreeMap::new(),
        })
    }

    /// Finitely supported series (a Laurent polynomial): both tails exactly
    /// zero, window the support hull.
    pub fn from_terms(
        field: &Field,
        terms: Vec<(i64, FieldElement)>,
        modulus: i64,
    ) -> Result<Series> {
        let mut s = Series::zero(field, 0, 1, modulus)?;
        if let (Some(lo), Some(hi)) = (
            terms.iter().map(|(n, _)| *n).min(),
            terms.iter().map(|(n, _)| *n).max(),
        ) {
            s.lo = lo;
            s.hi = hi + 1;
        }
        for (n, c) in terms {
            let prev = s.coeffs.insert(n, c.with_abs_prec(modulus)?);
            if prev.is_some() {
                return Err(Error::Invalid(format!("duplicate exponent {n}")));
            }
        }
        s.prune();
        Ok(s)
    }

    pub fn constant(field: &Field, c: &FieldElement, modulus: i64) -> Result<Series> {
        Series::from_terms(field, vec![(0, c.clone())], modulus)
    }

    pub fn one(field: &Field, modulus: i64) -> Result<Series> {
        Series::constant(field, &field.one(modulus)?, modulus)
    }

    /// c * X^n.
    pub fn monomial(field: &Field, c: &FieldElement, n: i64, modulus: i64) -> Result<Series> {
        Series::from_terms(field, vec![(n, c.clone())], modulus)
    }

    pub fn x_pow(field: &Field, n: i64, modulus: i64) -> Result<Series> {
        Series::monomial(field, &field.one(modulus)?, n, modulus)
    }

    /// Build from small integer coefficients c_0..c_k at exponents 0..k.
    pub fn from_i128_coeffs(field: &Field, coeffs: &[i128], modulus: i64) -> Result<Series> {
        let mut terms = Vec::new();
        for (n, &c) in coeffs.iter().enumerate() {
            terms.push((n as i64, field.from_i128(c, modulus)?));
        }
        Series::from_terms(field, terms, modulus)
    }

    // ---- accessors ----

    pub fn field(&self) -> &Field {
        &self.field
    }
    pub fn lo(&self) -> i64 {
        self.lo
    }
    pub fn hi(&self) -> i64 {
        self.hi
    }
    pub fn modulus(&self) -> i64 {
        self.modulus
    }
    pub fn lo_tail(&self) -> LoTail {
        self.lo_tail
    }
    pub fn hi_tail(&self) -> HiTail {
        self.hi_tail
    }
    pub fn terms(&self) -> impl Iterator<Item = (i64, &FieldElement)> {
        self.coeffs.iter().map(|(n, c)| (*n, c))
    }
    pub fn support_len(&self) -> usize {
        self.coeffs.len()
    }

    /// Coefficient at exponent n; None when outside the certified window or
    /// indistinguishable from zero (for `LoTail::Zero`/`HiTail::Zero` the
    /// region beyond the window is exactly zero and reported as None too).
    pub fn coeff(&self, n: i64) -> Option<&FieldElement> {
        self.coeffs.get(&n)
    }

    /// True when exponent n carries certified knowledge.
    pub fn knows(&self, n: i64) -> bool {
        (n >= self.lo || self.lo_tail != LoTail::Unknown)
            && (n < self.hi || self.hi_tail == HiTail::Zero)
    }

    pub fn is_zero_at_modulus(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// All stored coefficients integral and the high tail integral or zero.
    pub fn is_integral(&self) -> bool {
        self.hi_tail != HiTail::Unknown
            && self.coeffs.values().all(|c| c.is_integral())
    }

    /// Minimal valuation lower bound (pi-units) over stored coefficients,
    /// capped at 0; used in modulus propagation.
    fn neg_val_floor(&self) -> i64 {
        self.coeffs
            .values()
            .map(|c| match c.val_pi() {
                Ok(v) => v,
                Err(b) => b,
            })
            .fold(0i64, |acc, v| acc.min(v))
    }

    fn prune(&mut self) {
        self.coeffs.retain(|_, c| !c.is_zero_at_prec());
    }

    pub fn set_tails(&mut self, lo_tail: LoTail, hi_tail: HiTail) {
        self.lo_tail = lo_tail;
        self.hi_tail = hi_tail;
    }

    /// Extend the window downward. The caller asserts that the newly covered
    /// exponents are indistinguishable from zero at the modulus.
    pub(crate) fn widen_lo(&mut self, new_lo: i64) {
        if new_lo < self.lo {
            self.lo = new_lo;
        }
    }

    /// Explicit window override for truncations parsed from external data.
    pub fn with_window(&self, lo: i64, hi: i64) -> Result<Series> {
        if lo > hi {
            return Err(Error::Invalid("window lower bound exceeds upper".into()));
        }
        if self.coeffs.keys().any(|n| *n < lo || *n >= hi) {
            return Err(Error::Invalid("stored term outside the window".into()));
        }
        let mut out = self.clone();
        out.lo = lo;
        out.hi = hi;
        Ok(out)
    }

    /// Lower the modulus.
    pub fn with_modulus(&self, m: i64) -> Result<Series> {
        let m = m.min(self.modulus);
        if m <= 0 {
            return Err(Error::PrecisionExhausted);
        }
        let mut out = self.clone();
        out.modulus = m;
        for c in out.coeffs.values_mut() {
            *c = c.with_abs_prec(m)?;
        }
        out.prune();
        Ok(out)
    }

    /// Restrict the window. Dropping stored terms below the new lower bound
    /// makes the low tail unknown; cropping from above is always sound.
    pub fn crop(&self, lo: i64, hi: i64) -> Result<Series> {
        let nlo = lo.max(self.lo);
        let nhi = if self.hi_tail == HiTail::Zero {
            hi
        } else {
            hi.min(self.hi)
        };
        if nlo > nhi {
            return Err(Error::EmptyWindow);
        }
        let mut out = self.clone();
        let dropped_low = out.coeffs.iter().any(|(n, _)| *n < nlo);
        out.coeffs.retain(|n, _| *n >= nlo && *n < nhi);
        if dropped_low {
            out.lo_tail = LoTail::Unknown;
        } else if nlo > self.lo {
            // The skipped region held only indistinguishable-from-zero
            // coefficients, which is exactly the Clean guarantee.
            out.lo_tail = match self.lo_tail {
                LoTail::Unknown => LoTail::Unknown,
                _ => LoTail::Clean,
            };
        }
        if nhi < self.hi || (self.hi_tail != HiTail::Zero && nhi == self.hi) {
            if self.hi_tail == HiTail::Zero && nhi >= self.hi {
                // unchanged
            } else if self.is_integral() {
                out.hi_tail = HiTail::Integral;
            } else {
                out.hi_tail = HiTail::Unknown;
            }
        }
        out.lo = nlo;
        out.hi = nhi;
        Ok(out)
    }

    fn same_field(&self, other: &Series) -> Result<()> {
        if self.field != other.field {
            return Err(Error::FieldMismatch);
        }
        Ok(())
    }

    // ---- ring operations ----

    pub fn neg(&self) -> Series {
        let mut out = self.clone();
        for c in out.coeffs.values_mut() {
            *c = c.neg();
        }
        out
    }

    pub fn add(&self, other: &Series) -> Result<Series> {
        self.same_field(other)?;
        let modulus = self.modulus.min(other.modulus);
        // Knowledge floor: an unknown low tail hides everything below its lo.
        let floor = |s: &Series| {
            if s.lo_tail == LoTail::Unknown {
                s.lo
            } else {
                i64::MIN / 4
            }
        };
        let lo = floor(self).max(floor(other)).max(self.lo.min(other.lo));
        let ehi = |s: &Series| {
            if s.hi_tail == HiTail::Zero {
                i64::MAX / 4
            } else {
                s.hi
            }
        };
        let hi_eff = ehi(self).min(ehi(other));
        let (hi, hi_tail) = if hi_eff == i64::MAX / 4 {
            (self.hi.max(other.hi).max(lo), HiTail::Zero)
        } else {
            let t = match (self.hi_tail, other.hi_tail) {
                (HiTail::Unknown, _) | (_, HiTail::Unknown) => HiTail::Unknown,
                _ => {
                    if self.is_integral() && other.is_integral() {
                        HiTail::Integral
                    } else {
                        HiTail::Unknown
                    }
                }
            };
            (hi_eff.max(lo), t)
        };
        let lo_tail = match (self.lo_tail, other.lo_tail) {
            (LoTail::Zero, LoTail::Zero) => LoTail::Zero,
            (LoTail::Unknown, _) | (_, LoTail::Unknown) => LoTail::Unknown,
            _ => LoTail::Clean,
        };
        let mut coeffs: BTreeMap<i64, FieldElement> = BTreeMap::new();
        for (n, c) in self.coeffs.iter().chain(other.coeffs.iter()) {
            if *n < lo || *n >= hi {
                continue;
            }
            let c = c.with_abs_prec(modulus)?;
            match coeffs.remove(n) {
                None => {
                    coeffs.insert(*n, c);
                }
                Some(prev) => {
                    coeffs.insert(*n, prev.add(&c)?);
                }
            }
        }
        let mut out = Series {
            field: self.field.clone(),
            lo,
            hi,
            modulus,
            lo_tail,
            hi_tail,
            coeffs,
        };
        out.prune();
        Ok(out)
    }

    pub fn sub(&self, other: &Series) -> Result<Series> {
        self.add(&other.neg())
    }

    pub fn scalar_mul(&self, c: &FieldElement) -> Result<Series> {
        if c.is_zero_at_prec() {
            let m = self.modulus.min(c.abs_prec() + self.neg_val_floor());
            let mut out = Series::zero(&self.field, self.lo, self.hi, m.max(1))?;
            if m <= 0 {
                return Err(Error::PrecisionExhausted);
            }
            out.lo_tail = if self.lo_tail == LoTail::Zero {
                LoTail::Zero
            } else {
                LoTail::Clean
            };
            out.hi_tail = self.hi_tail;
            return Ok(out);
        }
        let vc = match c.val_pi() {
            Ok(v) => v,
            Err(b) => b,
        };
        let mut modulus = self.modulus + vc.min(0);
        let mut coeffs = BTreeMap::new();
        for (n, a) in &self.coeffs {
            let prod = a.mul(c)?;
            modulus = modulus.min(prod.abs_prec());
            coeffs.insert(*n, prod);
        }
        if modulus <= 0 {
            return Err(Error::PrecisionExhausted);
        }
        let hi_tail = match self.hi_tail {
            HiTail::Zero => HiTail::Zero,
            HiTail::Integral if vc >= 0 && c.is_integral() => HiTail::Integral,
            HiTail::Integral => HiTail::Unknown,
            HiTail::Unknown => HiTail::Unknown,
        };
        let mut out = Series {
            field: self.field.clone(),
            lo: self.lo,
            hi: self.hi,
            modulus,
            lo_tail: self.lo_tail,
            hi_tail,
            coeffs,
        };
        for v in out.coeffs.values_mut() {
            *v = v.with_abs_prec(modulus)?;
        }
        out.prune();
        Ok(out)
    }

    pub fn mul(&self, other: &Series) -> Result<Series> {
        self.same_field(other)?;
        if self.lo_tail == LoTail::Unknown || other.lo_tail == LoTail::Unknown {
            return Err(Error::Invalid(
                "cannot multiply series with unknown low tail".into(),
            ));
        }
        let lo = self.lo.saturating_add(other.lo);
        let pol1 = if self.hi_tail == HiTail::Zero {
            i64::MAX / 4
        } else {
            self.hi.saturating_add(other.lo)
        };
        let pol2 = if other.hi_tail == HiTail::Zero {
            i64::MAX / 4
        } else {
            other.hi.saturating_add(self.lo)
        };
        let hi = pol1.min(pol2).min(
            (self.hi - 1)
                .saturating_add(other.hi - 1)
                .saturating_add(1),
        );
        if hi <= lo {
            return Err(Error::EmptyWindow);
        }
        let vf = self.neg_val_floor();
        let vg = other.neg_val_floor();
        let mut modulus = (self.modulus + vg.min(0)).min(other.modulus + vf.min(0));
        let mut coeffs: BTreeMap<i64, FieldElement> = BTreeMap::new();
        for (i, a) in &self.coeffs {
            for (j, b) in &other.coeffs {
                let x = i + j;
                if x < lo || x >= hi {
                    continue;
                }
                let prod = a.mul(b)?;
                match coeffs.remove(&x) {
                    None => {
                        coeffs.insert(x, prod);
                    }
                    Some(prev) => {
                        coeffs.insert(x, prev.add(&prod)?);
                    }
                }
            }
        }
        for c in coeffs.values() {
            modulus = modulus.min(c.abs_prec());
        }
        if modulus <= 0 {
            return Err(Error::PrecisionExhausted);
        }
        let hi_tail = if self.hi_tail == HiTail::Zero && other.hi_tail == HiTail::Zero {
            HiTail::Zero
        } else if self.is_integral() && other.is_integral() {
            HiTail::Integral
        } else {
            HiTail::Unknown
        };
        let lo_tail = if self.lo_tail == LoTail::Zero && other.lo_tail == LoTail::Zero {
            LoTail::Zero
        } else {
            LoTail::Clean
        };
        let mut out = Series {
            field: self.field.clone(),
            lo,
            hi,
            modulus,
            lo_tail,
            hi_tail,
            coeffs,
        };
        for v in out.coeffs.values_mut() {
            *v = v.with_abs_prec(modulus)?;
        }
        out.prune();
        Ok(out)
    }

    /// Translate exponents by k (multiply by X^k).
    pub fn shift_x(&self, k: i64) -> Series {
        let mut out = self.clone();
        out.lo += k;
        out.hi += k;
        out.coeffs = self.coeffs.iter().map(|(n, c)| (n + k, c.clone())).collect();
        out
    }

    /// Termwise derivative; the window shifts down by one.
    pub fn derivative(&self) -> Result<Series> {
        let mut coeffs = BTreeMap::new();
        for (n, c) in &self.coeffs {
            if *n == 0 {
                continue;
            }
            coeffs.insert(n - 1, c.mul_i64(*n)?.with_abs_prec(self.modulus)?);
        }
        let mut out = Series {
            field: self.field.clone(),
            lo: self.lo - 1,
            hi: (self.hi - 1).max(self.lo - 1),
            modulus: self.modulus,
            lo_tail: self.lo_tail,
            hi_tail: self.hi_tail,
            coeffs,
        };
        out.prune();
        Ok(out)
    }

    // ---- composition ----

    /// f(s) for a power series f (lo >= 0) and s with constant term
    /// indistinguishable from zero or of positive valuation. `cap_hi` crops
    /// intermediate windows to [0, cap_hi), which is sound X-adically since
    /// ord(s) >= 1 after removing the constant term.
    pub fn compose(&self, s: &Series, cap_hi: Option<i64>) -> Result<Series> {
        self.same_field(s)?;
        if self.lo < 0 {
            return Err(Error::Invalid("compose requires a power series".into()));
        }
        match s.coeff(0) {
            None => self.compose_zero_center(s, cap_hi),
            Some(c) => match c.val_pi() {
                Ok(0) => Err(Error::NonConvergentComposition),
                Ok(_) => self.compose_small_center(s, cap_hi),
                Err(_) => self.compose_zero_center(s, cap_hi),
            },
        }
    }

    /// Horner evaluation when s(0) = 0 at the working modulus.
    fn compose_zero_center(&self, s: &Series, cap_hi: Option<i64>) -> Result<Series> {
        let modulus = self.modulus.min(s.modulus);
        let mut s_plus = s.clone();
        s_plus.coeffs.remove(&0);
        s_plus.lo = s_plus.lo.max(1);
        if s_plus.hi < s_plus.lo {
            s_plus.hi = s_plus.lo;
        }
        let top = match self.coeffs.keys().next_back() {
            None => {
                // Everything in the window is 0 at the modulus.
                let mut out = Series::zero(&self.field, 0, self.hi.max(1), modulus)?;
                out.hi_tail = if self.hi_tail == HiTail::Zero {
                    HiTail::Zero
                } else {
                    self.hi_tail
                };
                return Ok(out);
            }
            Some(&t) => t,
        };
        let mut acc = Series::zero(&self.field, 0, 1, modulus)?;
        let mut first = true;
        for k in (0..=top).rev() {
            if !first {
                acc = acc.mul(&s_plus)?;
                if let Some(cap) = cap_hi {
                    if acc.hi > cap {
                        acc = acc.crop(acc.lo, cap)?;
                        if acc.hi_tail == HiTail::Zero {
                            acc.hi_tail = if acc.is_integral() {
                                HiTail::Integral
                            } else {
                                HiTail::Unknown
                            };
                        }
                    }
                }
            }
            first = false;
            if let Some(c) = self.coeffs.get(&k) {
                acc = acc.add(&Series::constant(&self.field, c, modulus)?)?;
            }
        }
        // An unknown tail of f only pollutes exponents >= f.hi because
        // ord(s_plus) >= 1.
        if self.hi_tail != HiTail::Zero {
            let hi = acc.hi.min(self.hi);
            acc = acc.crop(acc.lo, hi.max(acc.lo))?;
            acc.hi_tail = if self.is_integral() && s.is_integral() {
                HiTail::Integral
            } else {
                HiTail::Unknown
            };
        }
        Ok(acc)
    }

    /// Composition with s = c + s_plus where val(c) > 0: binomial re-expansion
    /// around the center, pi-adically convergent.
    fn compose_small_center(&self, s: &Series, cap_hi: Option<i64>) -> Result<Series> {
        let modulus = self.modulus.min(s.modulus);
        let c = s.coeff(0).expect("constant term present").clone();
        let v0 = c.val_pi().expect("positive valuation center");
        debug_assert!(v0 > 0);
        let mut s_plus = s.clone();
        s_plus.coeffs.remove(&0);
        s_plus.lo = s_plus.lo.max(1);

        let top = self.coeffs.keys().next_back().copied().unwrap_or(0);
        // a_j = sum_k f_k binom(k, j) c^(k-j), exact over the stored support.
        let field = &self.field;
        let work = field.max_prec().min(modulus + v0 * (top + 1));
        let mut c_pows = Vec::with_capacity((top + 1) as usize);
        let mut acc_pow = field.one(work)?;
        for _ in 0..=top {
            c_pows.push(acc_pow.clone());
            acc_pow = acc_pow.mul(&c)?;
        }
        let binoms = binomial_table(field, top as usize, work)?;
        let mut a: Vec<FieldElement> = Vec::new();
        for j in 0..=top {
            let mut sum = field.zero(work)?;
            for (k, fk) in self.coeffs.range(j..) {
                let term = fk
                    .mul(&binoms[*k as usize][j as usize])?
                    .mul(&c_pows[(*k - j) as usize])?;
                sum = sum.add(&term)?;
            }
            // An unknown f-tail contributes val >= (f.hi - j) * v0 here.
            if self.hi_tail != HiTail::Zero {
                let cert = modulus.min((self.hi - j) * v0);
                if cert <= 0 {
                    return Err(Error::ModulusExhausted(format!(
                        "center composition loses all precision at X^{j}"
                    )));
                }
                sum = sum.with_abs_prec(cert)?;
            }
            a.push(sum);
        }
        // Horner in s_plus.
        let mut out = Series::zero(field, 0, 1, modulus)?;
        let mut out_modulus = modulus;
        let mut first = true;
        for j in (0..=top).rev() {
            if !first {
                out = out.mul(&s_plus)?;
                if let Some(cap) = cap_hi {
                    if out.hi > cap {
                        out = out.crop(out.lo, cap)?;
                        if out.hi_tail == HiTail::Zero {
                            out.hi_tail = HiTail::Unknown;
                        }
                    }
                }
            }
            first = false;
            out_modulus = out_modulus.min(a[j as usize].abs_prec());
            if !a[j as usize].is_zero_at_prec() {
                let cst = Series::constant(field, &a[j as usize], a[j as usize].abs_prec())?;
                out = out.add(&cst)?;
            }
        }
        out = out.with_modulus(out_modulus.min(out.modulus))?;
        Ok(out)
    }

    /// Evaluate at a point of positive valuation (power series only).
    pub fn eval_at(&self, x: &FieldElement) -> Result<FieldElement> {
        if self.lo < 0 {
            return Err(Error::Invalid("evaluation requires a power series".into()));
        }
        let vx = match x.val_pi() {
            Ok(v) if v > 0 => v,
            Ok(_) => return Err(Error::NonConvergentComposition),
            Err(b) => b,
        };
        let field = &self.field;
        let mut acc = field.zero(field.max_prec())?;
        let mut prev: Option<i64> = None;
        for (n, c) in self.coeffs.iter().rev() {
            if let Some(p) = prev {
                acc = acc.mul(&x.pow_u64((p - n) as u64)?)?;
            }
            acc = acc.add(c)?;
            prev = Some(*n);
        }
        if let Some(p) = prev {
            if p > 0 {
                acc = acc.mul(&x.pow_u64(p as u64)?)?;
            }
        }
        let mut cert = self.modulus;
        if self.hi_tail != HiTail::Zero {
            cert = cert.min(self.hi * vx);
        }
        if cert <= 0 {
            return Err(Error::PrecisionExhausted);
        }
        acc.with_abs_prec(cert.min(acc.abs_prec()))
    }

    /// View the stored part of a power series as a dense polynomial; whatever
    /// lives beyond the window is the caller's concern.
    pub fn to_poly(&self) -> Result<Poly> {
        if self.lo < 0 {
            return Err(Error::Invalid(
                "only power series convert to polynomials".into(),
            ));
        }
        let top = self.coeffs.keys().next_back().copied().unwrap_or(-1);
        let mut coeffs = Vec::new();
        for n in 0..=top {
            coeffs.push(match self.coeffs.get(&n) {
                Some(c) => c.clone(),
                None => self.field.zero(self.modulus)?,
            });
        }
        Ok(Poly::new(coeffs))
    }

    // ---- metric data ----

    /// Gauss valuation val_v(f) = min_n (val f_n + n v) for v >= 0.
    pub fn gauss_valuation(&self, v: Rational64) -> GaussValue {
        debug_assert!(v >= Rational64::zero());
        let mut candidates: Vec<Rational64> = Vec::new();
        let mut attained: Option<Rational64> = None;
        for (n, c) in &self.coeffs {
            if let Valuation::Exact(val) = c.valuation() {
                let t = val + Rational64::from(*n) * v;
                attained = Some(match attained {
                    None => t,
                    Some(a) => a.min(t),
                });
            }
        }
        let m_rat = Rational64::from(self.modulus)
            / Rational64::from(self.field.ramification() as i64);
        // In-window absent exponents are 0 mod pi^modulus.
        let mut absent_bound: Option<Rational64> = None;
        for n in self.lo..self.hi {
            if !self.coeffs.contains_key(&n) {
                absent_bound = Some(m_rat + Rational64::from(n) * v);
                break; // v >= 0: the smallest absent exponent minimizes
            }
        }
        let mut certified = true;
        match self.hi_tail {
            HiTail::Zero => {}
            HiTail::Integral => candidates.push(Rational64::from(self.hi) * v),
            HiTail::Unknown => certified = false,
        }
        match self.lo_tail {
            LoTail::Zero => {}
            LoTail::Clean => {
                if v.is_zero() {
                    candidates.push(m_rat);
                } else {
                    certified = false;
                }
            }
            LoTail::Unknown => certified = false,
        }
        if let Some(b) = absent_bound {
            candidates.push(b);
        }
        let tail_min = candidates.iter().copied().fold(None, |acc: Option<Rational64>, t| {
            Some(acc.map_or(t, |a| a.min(t)))
        });
        let value = match (attained, tail_min) {
            (Some(a), Some(t)) => Some(a.min(t)),
            (Some(a), None) => Some(a),
            (None, t) => t,
        };
        let exact = certified
            && match (attained, tail_min) {
                (Some(a), Some(t)) => {
                    // Integral-tail ties cannot drag the minimum lower, but a
                    // bound coming from unknown residues must exceed strictly.
                    let strict_needed = absent_bound.is_some()
                        && absent_bound.unwrap() == t
                        && a >= t;
                    a <= t && !strict_needed
                }
                (Some(_), None) => true,
                (None, _) => false,
            };
        GaussValue {
            v,
            value,
            exact,
            certified: certified && value.is_some(),
        }
    }

    /// Stored points (n, val a_n) for Newton polygon construction.
    pub fn newton_points(&self) -> Vec<(i64, Rational64)> {
        self.coeffs
            .iter()
            .filter_map(|(n, c)| match c.valuation() {
                Valuation::Exact(v) => Some((*n, v)),
                Valuation::AtLeast(_) => None,
            })
            .collect()
    }

    /// Minimal certified residual valuation: Exact for a surviving
    /// coefficient, AtLeast(modulus) when everything vanished.
    pub fn deficiency(&self) -> Valuation {
        let e = self.field.ramification() as i64;
        let mut best: Option<Rational64> = None;
        for c in self.coeffs.values() {
            if let Valuation::Exact(v) = c.valuation() {
                best = Some(best.map_or(v, |b| b.min(v)));
            }
        }
        match best {
            Some(v) => Valuation::Exact(v),
            None => Valuation::AtLeast(Rational64::new(self.modulus, e)),
        }
    }

    /// Compare on the intersection of certified windows; returns the residual.
    pub fn residual(&self, other: &Series) -> Result<Series> {
        self.sub(other)
    }
}

/// Pascal-triangle binomial table binom(n, k) for n <= nmax, exact modulo the
/// working precision (no division).
pub fn binomial_table(field: &Field, nmax: usize, prec: i64) -> Result<Vec<Vec<FieldElement>>> {
    let one = field.one(prec)?;
    let zero = field.zero(prec)?;
    let mut rows: Vec<Vec<FieldElement>> = Vec::with_capacity(nmax + 1);
    rows.push(vec![one.clone()]);
    for n in 1..=nmax {
        let prev = &rows[n - 1];
        let mut row = Vec::with_capacity(n + 1);
        row.push(one.clone());
        for k in 1..n {
            row.push(prev[k - 1].add(&prev[k])?);
        }
        row.push(one.clone());
        rows.push(row);
    }
    let _ = zero;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q3() -> Field {
        Field::new(3, None).unwrap()
    }

    #[test]
    fn polynomial_products() {
        let f = q3();
        let a = Series::from_i128_coeffs(&f, &[1, 1], 10).unwrap(); // 1 + X
        let b = Series::from_i128_coeffs(&f, &[1, -1], 10).unwrap(); // 1 - X
        let p = a.mul(&b).unwrap();
        assert_eq!(p.coeff(0).unwrap().residues(), &[1]);
        assert!(p.coeff(1).is_none());
        assert_eq!(
            p.coeff(2).unwrap().valuation(),
            Valuation::Exact(Rational64::from(0))
        );
        assert_eq!(p.hi_tail(), HiTail::Zero);
    }

    #[test]
    fn laurent_window_rule() {
        let f = q3();
        // (X^-1 + 1)(X^-1 - 1) on windows [-1, 2) -> X^-2 - 1 on [-2, 1)
        let mk = |c0: i128| {
            let mut s = Series::from_terms(
                &f,
                vec![
                    (-1, f.from_i128(1, 10).unwrap()),
                    (0, f.from_i128(c0, 10).unwrap()),
                ],
                10,
            )
            .unwrap();
            s.lo = -1;
            s.hi = 2;
            s.set_tails(LoTail::Zero, HiTail::Unknown);
            s
        };
        let p = mk(1).mul(&mk(-1)).unwrap();
        assert_eq!(p.lo(), -2);
        assert_eq!(p.hi(), 1);
        assert_eq!(p.coeff(-2).unwrap().residues(), &[1]);
        assert!(p.coeff(-1).is_none());
        assert_eq!(p.coeff(0).unwrap().residues()[0], 3u64.pow(10) - 1);
    }

    #[test]
    fn x_inverse_times_x() {
        let f = q3();
        let a = Series::x_pow(&f, -1, 10).unwrap();
        let b = Series::x_pow(&f, 1, 10).unwrap();
        let p = a.mul(&b).unwrap();
        assert_eq!(p.coeff(0).unwrap().residues(), &[1]);
        assert_eq!(p.lo(), 0);
    }

    #[test]
    fn compose_simple() {
        let f = q3();
        let x2 = Series::from_i128_coeffs(&f, &[0, 0, 1], 10).unwrap();
        let s = Series::from_i128_coeffs(&f, &[0, 1, 1], 10).unwrap();
        let c = x2.compose(&s, None).unwrap();
        // (X + X^2)^2 = X^2 + 2X^3 + X^4
        assert_eq!(c.coeff(2).unwrap().residues(), &[1]);
        assert_eq!(c.coeff(3).unwrap().residues(), &[2]);
        assert_eq!(c.coeff(4).unwrap().residues(), &[1]);
        assert!(c.coeff(5).is_none());
    }

    #[test]
    fn compose_rejects_unit_center() {
        let f = q3();
        let a = Series::from_i128_coeffs(&f, &[1, 1], 10).unwrap();
        assert!(matches!(
            a.compose(&a, None),
            Err(Error::NonConvergentComposition)
        ));
    }

    #[test]
    fn log_frobenius_identity() {
        // log((1+X)^3 - 1 pullback: f((1+X)^3-1) = 3 f(X) for the truncated
        // p-adic logarithm, checked termwise on the window [0, 6).
        let f = q3();
        let m = 8;
        let mut terms = Vec::new();
        for n in 1i64..6 {
            let c = f
                .one(m + 2)
                .unwrap()
                .mul_i64(if n % 2 == 1 { 1 } else { -1 })
                .unwrap()
                .div(&f.from_i128(n as i128, m + 2).unwrap())
                .unwrap();
            terms.push((n, c));
        }
        let mut logx = Series::from_terms(&f, terms, m).unwrap();
        logx.lo = 0;
        logx.hi = 6;
        logx.set_tails(LoTail::Zero, HiTail::Unknown);
        let s = Series::from_i128_coeffs(&f, &[0, 3, 3, 1], m).unwrap();
        let lhs = logx.compose(&s, Some(6)).unwrap();
        let rhs = logx.scalar_mul(&f.from_i128(3, m).unwrap()).unwrap();
        let res = lhs.sub(&rhs.crop(0, lhs.hi()).unwrap()).unwrap();
        assert!(res.is_zero_at_modulus(), "residual {:?}", res);
    }

    #[test]
    fn derivative_examples() {
        let f = q3();
        let x2 = Series::from_i128_coeffs(&f, &[0, 0, 1], 10).unwrap();
        let d = x2.derivative().unwrap();
        assert_eq!(d.coeff(1).unwrap().residues(), &[2]);
        let xinv = Series::x_pow(&f, -1, 10).unwrap();
        let d = xinv.derivative().unwrap();
        assert_eq!(d.coeff(-2).unwrap().residues()[0], 3u64.pow(10) - 1);
        let c = Series::one(&f, 10).unwrap();
        assert!(c.derivative().unwrap().is_zero_at_modulus());
    }

    #[test]
    fn gauss_examples() {
        let f = q3();
        // X^-1 + 3 at v = 1/2: min(0 - 1/2, 1) = -1/2, exact
        let s = Series::from_terms(
            &f,
            vec![
                (-1, f.from_i128(1, 10).unwrap()),
                (0, f.from_i128(3, 10).unwrap()),
            ],
            10,
        )
        .unwrap();
        let g = s.gauss_valuation(Rational64::new(1, 2));
        assert_eq!(g.value, Some(Rational64::new(-1, 2)));
        assert!(g.exact);

        // all-ones with integral tail at v = 0: value 0, exact
        let mut ones = Series::from_i128_coeffs(&f, &[1, 1, 1, 1, 1], 10).unwrap();
        ones.set_tails(LoTail::Zero, HiTail::Integral);
        let g = ones.gauss_valuation(Rational64::from(0));
        assert_eq!(g.value, Some(Rational64::from(0)));
        assert!(g.exact);
        // and at v > 0 the minimum sits at n = 0
        let g = ones.gauss_valuation(Rational64::new(1, 3));
        assert_eq!(g.value, Some(Rational64::from(0)));
        assert!(g.exact);
    }

    #[test]
    fn gauss_multiplicative_on_polynomials() {
        use rand::{Rng, SeedableRng};
        let f = q3();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..40 {
            let mut ta = Vec::new();
            let mut tb = Vec::new();
            for n in 0..6i64 {
                if rng.gen_bool(0.7) {
                    ta.push((n - 2, f.random(&mut rng, 12).unwrap()));
                }
                if rng.gen_bool(0.7) {
                    tb.push((n, f.random(&mut rng, 12).unwrap()));
                }
            }
            if ta.is_empty() || tb.is_empty() {
                continue;
            }
            let a = Series::from_terms(&f, ta, 12).unwrap();
            let b = Series::from_terms(&f, tb, 12).unwrap();
            let v = Rational64::new(rng.gen_range(0..4), rng.gen_range(1..4));
            let ga = a.gauss_valuation(v);
            let gb = b.gauss_valuation(v);
            let gp = a.mul(&b).unwrap().gauss_valuation(v);
            if ga.exact && gb.exact && gp.exact {
                assert_eq!(gp.value.unwrap(), ga.value.unwrap() + gb.value.unwrap());
            }
        }
    }

    #[test]
    fn gauss_log_convexity() {
        use rand::{Rng, SeedableRng};
        let f = q3();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..40 {
            let mut t = Vec::new();
            for n in -3..5i64 {
                if rng.gen_bool(0.6) {
                    t.push((n, f.random(&mut rng, 12).unwrap()));
                }
            }
            if t.is_empty() {
                continue;
            }
            let a = Series::from_terms(&f, t, 12).unwrap();
            let v1 = Rational64::new(1, 4);
            let v2 = Rational64::new(1, 2);
            let v3 = Rational64::from(1);
            // v2 = t v1 + (1-t) v3 with t = 2/3
            let g1 = a.gauss_valuation(v1);
            let g2 = a.gauss_valuation(v2);
            let g3 = a.gauss_valuation(v3);
            if g1.exact && g2.exact && g3.exact {
                let t = Rational64::new(2, 3);
                let bound = t * g1.value.unwrap() + (Rational64::from(1) - t) * g3.value.unwrap();
                assert!(g2.value.unwrap() >= bound);
            }
        }
    }
}
