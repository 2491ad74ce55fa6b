//! Validated finite-height substitution maps and the operator phi.
//!
//! A finite-height map is an integral s with s(0) = 0 whose reduction mod pi
//! has order d >= 2: s = s_1 X + ... with s_1, ..., s_(d-1) in m_K and s_d a
//! unit. Validation caches the Weierstrass degree, s'(0), the piecewise-linear
//! radius map lambda*(v) = min_k (val s_k + k v), and the zero radius rho(s).

use num::rational::Rational64;
use num::Zero as _;

use crate::error::{Error, Result};
use crate::field::{Field, FieldElement, Valuation};
use crate::hensel::hensel_root;
use crate::newton::{rho_valuation, wideg};
use crate::series::{binomial_table, HiTail, LoTail, Series};

/// A validated substitution series with cached invariants.
#[derive(Clone, Debug)]
pub struct FiniteHeightMap {
    s: Series,
    d: i64,
    s_prime_0: FieldElement,
    /// Lines (slope k, intercept val(s_k)) with exact valuations, k <= d, in
    /// units of val(p) = 1. lambda*(v) is their lower envelope.
    lines: Vec<(i64, Rational64)>,
    /// v-coordinates where the envelope changes line, increasing.
    breakpoints: Vec<Rational64>,
    rho_v: Option<Rational64>,
}

impl FiniteHeightMap {
    pub fn s(&self) -> &Series {
        &self.s
    }
    pub fn field(&self) -> &Field {
        self.s.field()
    }
    pub fn degree(&self) -> i64 {
        self.d
    }
    pub fn s_prime_0(&self) -> &FieldElement {
        &self.s_prime_0
    }
    pub fn modulus(&self) -> i64 {
        self.s.modulus()
    }
    /// Valuation exponent of rho(s): rho = p^(-v); None when the only disk
    /// zero of s is 0 itself.
    pub fn rho_v(&self) -> Option<Rational64> {
        self.rho_v
    }
    pub fn unit_coeff(&self) -> &FieldElement {
        self.s.coeff(self.d).expect("validated unit coefficient")
    }

    /// lambda*(v) = min_k (val(s_k) + k v) evaluated from the cached exact
    /// lines. Certified for v up to about modulus/(d-1); coefficients
    /// indistinguishable from zero are treated as zero here.
    pub fn lambda_star(&self, v: Rational64) -> Rational64 {
        self.lines
            .iter()
            .map(|(k, c)| *c + Rational64::from(*k) * v)
            .min()
            .expect("validated map has at least the unit line")
    }

    pub fn first_breakpoint(&self) -> Option<Rational64> {
        self.breakpoints.first().copied()
    }

    pub fn last_breakpoint(&self) -> Option<Rational64> {
        self.breakpoints.last().copied()
    }
}

/// Check integrality, s(0) = 0, and d = wideg(s) >= 2, and cache the radius
/// data.
pub fn validate_finite_height(s: &Series) -> Result<FiniteHeightMap> {
    if s.lo() < 0 || s.lo_tail() != LoTail::Zero || s.terms().any(|(_, c)| !c.is_integral()) {
        return Err(Error::NotIntegral);
    }
    if s.coeff(0).is_some() {
        return Err(Error::ConstantTermNotZero);
    }
    let d = wideg(s)?;
    if d < 2 {
        return Err(Error::HeightOne);
    }
    if s.hi() < d + 1 && s.hi_tail() != HiTail::Zero {
        return Err(Error::Invalid(format!("window must include [0, {})", d + 1)));
    }
    let field = s.field();
    let s_prime_0 = match s.coeff(1) {
        Some(c) => c.clone(),
        None => field.zero(s.modulus())?,
    };
    let mut lines = Vec::new();
    for (k, c) in s.terms() {
        if k > d {
            break;
        }
        if let Valuation::Exact(v) = c.valuation() {
            lines.push((k, v));
        }
    }
    debug_assert!(lines.iter().any(|(k, v)| *k == d && v.is_zero()));
    let breakpoints = envelope_breakpoints(&lines);
    let rho_v = rho_valuation(s)?;
    Ok(FiniteHeightMap {
        s: s.clone(),
        d,
        s_prime_0,
        lines,
        breakpoints,
        rho_v,
    })
}

/// Breakpoints of the lower envelope of the lines y = c + k v on v >= 0.
fn envelope_breakpoints(lines: &[(i64, Rational64)]) -> Vec<Rational64> {
    let mut breaks = Vec::new();
    let mut cur = *lines
        .iter()
        .min_by(|a, b| (a.1, -a.0).cmp(&(b.1, -b.0)))
        .expect("nonempty");
    let mut v_cur = Rational64::zero();
    loop {
        let mut next: Option<(Rational64, (i64, Rational64))> = None;
        for &(k, c) in lines {
            if k >= cur.0 {
                continue;
            }
            let v = (c - cur.1) / Rational64::from(cur.0 - k);
            if v < v_cur {
                continue;
            }
            match next {
                None => next = Some((v, (k, c))),
                Some((bv, (bk, _))) => {
                    if v < bv || (v == bv && k < bk) {
                        next = Some((v, (k, c)));
                    }
                }
            }
        }
        match next {
            None => break,
            Some((v, line)) => {
                if breaks.last() != Some(&v) {
                    breaks.push(v);
                }
                v_cur = v;
                cur = line;
            }
        }
    }
    breaks
}

/// phi(h) = h(s) for a power series h.
pub fn phi_power(m: &FiniteHeightMap, h: &Series, cap_hi: Option<i64>) -> Result<Series> {
    if h.lo() < 0 {
        return Err(Error::Invalid("phi_power requires a power series".into()));
    }
    h.compose(m.s(), cap_hi)
}

/// phi(h) for a Laurent series, via s = s_d X^d (1 + g) and the binomial
/// expansion of (1 + g)^(-n). Convergence is pi-adic coefficientwise because
/// every negative-exponent coefficient of g has positive valuation.
///
/// `request` is the output window; the default covers
/// [d h.lo - L, d (h.hi - 1) + 1) where the extension L is chosen so that the
/// true coefficients below the window vanish at the working modulus.
pub fn phi_laurent(m: &FiniteHeightMap, h: &Series, request: Option<(i64, i64)>) -> Result<Series> {
    if h.lo_tail() == LoTail::Unknown {
        return Err(Error::Invalid(
            "phi_laurent needs a certified low tail".into(),
        ));
    }
    let field = m.field();
    let modulus = h.modulus().min(m.modulus());
    let d = m.degree();

    if h.lo() >= 0 {
        let out = phi_power(m, h, request.map(|r| r.1))?;
        return match request {
            None => Ok(out),
            Some((lo, hi)) => out.crop(lo, hi),
        };
    }

    let n_max = -h.lo();
    // g = s / (s_d X^d) - 1, integral with m_K coefficients below exponent 0.
    let sd_inv = m.unit_coeff().inv()?;
    let mut g = m.s().scalar_mul(&sd_inv)?.shift_x(-d);
    let one = Series::one(field, g.modulus())?;
    g = g.sub(&one)?;
    let v_neg: Option<i64> = g
        .terms()
        .filter(|(n, _)| *n < 0)
        .filter_map(|(_, c)| c.val_pi().ok())
        .min();

    let ext = match v_neg {
        Some(v) => {
            debug_assert!(v > 0);
            (d - 1) * ((modulus + v - 1) / v)
        }
        None => 0,
    };
    let (req_lo, req_hi) = request.unwrap_or((d * h.lo() - ext, d * (h.hi() - 1) + 1));
    if req_lo >= req_hi {
        return Err(Error::EmptyWindow);
    }

    // Depth bound: a coefficient of g^k at exponent y picks at least
    // (k - y)/d negative-exponent factors, each of valuation >= v_neg.
    let y_max = (req_hi - 1) + d * n_max;
    let has_pos = g.terms().any(|(n, _)| n > 0);
    let k_max = match v_neg {
        None => y_max.max(0),
        Some(v) => {
            let a = (modulus + v - 1) / v;
            if has_pos {
                y_max.max(0) + a * d
            } else {
                a
            }
        }
    };

    // c_k = sum_n h_(-n) s_d^(-n) binom(-n, k) X^(-d n) with
    // binom(-n, k) = (-1)^k binom(n + k - 1, k).
    let btab = binomial_table(field, (n_max + k_max) as usize, modulus)?;
    let mut sd_inv_pows = Vec::with_capacity(n_max as usize + 1);
    let mut acc_p = field.one(field.max_prec().min(modulus + 4 * d))?;
    for _ in 0..=n_max {
        sd_inv_pows.push(acc_p.clone());
        acc_p = acc_p.mul(&sd_inv)?;
    }
    let neg_terms: Vec<(i64, FieldElement)> = h
        .terms()
        .filter(|(n, _)| *n < 0)
        .map(|(n, c)| (n, c.clone()))
        .collect();

    let mut total: Option<Series> = None;
    let mut gp = Series::one(field, modulus)?;
    let mut exhausted = false;
    for k in 0..=k_max {
        if k > 0 {
            gp = match gp.mul(&g) {
                Ok(x) => x,
                Err(Error::EmptyWindow) => {
                    exhausted = true;
                    break;
                }
                Err(e) => return Err(e),
            };
            if gp.is_zero_at_modulus() && gp.hi_tail() == HiTail::Zero {
                break;
            }
        }
        let mut ck_terms = Vec::new();
        for (nn, hn) in &neg_terms {
            let n = -nn;
            let b = &btab[(n + k - 1) as usize][k as usize];
            let mut coef = hn.mul(&sd_inv_pows[n as usize])?.mul(b)?;
            if k % 2 == 1 {
                coef = coef.neg();
            }
            if !coef.is_zero_at_prec() {
                ck_terms.push((-d * n, coef));
            }
        }
        if ck_terms.is_empty() {
            continue;
        }
        let ck = Series::from_terms(field, ck_terms, modulus)?;
        let term = ck.mul(&gp)?;
        total = Some(match total {
            None => term,
            Some(t) => t.add(&term)?,
        });
    }
    if exhausted {
        return Err(Error::ModulusExhausted(
            "binomial tail exceeds the certified window of s".into(),
        ));
    }

    let mut out = match total {
        Some(t) => t.with_modulus(modulus)?,
        None => Series::zero(field, req_lo, req_hi, modulus)?,
    };
    if out.lo() > req_lo {
        out.widen_lo(req_lo);
    }
    out = out.crop(req_lo, req_hi)?;

    if h.hi() > 0 {
        let pos = h.crop(0, h.hi())?;
        if !(pos.is_zero_at_modulus() && pos.hi_tail() == HiTail::Zero) {
            let pos_img = phi_power(m, &pos, Some(req_hi))?;
            out = out.add(&pos_img)?;
            out = out.crop(req_lo.max(out.lo()), req_hi)?;
        }
    }
    if out.modulus() < modulus {
        return Err(Error::ModulusExhausted(format!(
            "achieved pi^{} of requested pi^{}",
            out.modulus(),
            modulus
        )));
    }
    Ok(out)
}

/// s composed with itself n times, truncated to [0, cap_hi).
pub fn iterate(m: &FiniteHeightMap, n: u32, cap_hi: Option<i64>) -> Result<Series> {
    if n == 0 {
        return Err(Error::Invalid("iterate requires n >= 1".into()));
    }
    let mut acc = m.s().clone();
    if let Some(cap) = cap_hi {
        acc = acc.crop(0, cap)?;
    }
    for _ in 1..n {
        acc = acc.compose(m.s(), cap_hi)?;
    }
    Ok(acc)
}

/// Find the fixed point a with s(a) = a and val(a) = val(s(0)), then
/// conjugate: s_a(X) = s(X + a) - a is finite height with s_a(0) = 0.
pub fn fixed_point_and_conjugate(s: &Series) -> Result<(FieldElement, FiniteHeightMap)> {
    if s.lo() < 0 || s.lo_tail() != LoTail::Zero || s.terms().any(|(_, c)| !c.is_integral()) {
        return Err(Error::NotIntegral);
    }
    let d = wideg(s)?;
    if d < 2 {
        return Err(Error::HeightOne);
    }
    let field = s.field();
    let modulus = s.modulus();
    let s0 = match s.coeff(0) {
        None => {
            let a = field.zero(modulus)?;
            return Ok((a, validate_finite_height(s)?));
        }
        Some(c) => c.clone(),
    };
    let v0 = match s0.val_pi() {
        Ok(v) if v > 0 => v,
        Ok(_) => {
            return Err(Error::Invalid(
                "constant term is a unit: no fixed point in the maximal ideal".into(),
            ))
        }
        Err(_) => unreachable!("stored coefficients are nonzero at the modulus"),
    };

    // The Newton polygon of s(X) - X starts with a length-1 segment of slope
    // -val(s(0)): exactly one root of that valuation. Seed it as c pi^v0 and
    // take the smallest residue that passes.
    let x = Series::x_pow(field, 1, modulus)?;
    let f_series = s.sub(&x)?;
    let f = f_series.to_poly()?;
    let pi_v = field.pi(modulus)?.pow_u64(v0 as u64)?;
    let mut seed = None;
    for c in 1..field.p() {
        let cand = pi_v.mul_i64(c as i64)?;
        let fv = f.eval(&cand)?;
        let ok = match fv.val_pi() {
            Ok(v) => v >= v0 + 1,
            Err(_) => true,
        };
        if ok {
            seed = Some(cand);
            break;
        }
    }
    let seed = seed.ok_or(Error::HenselCriterionFails)?;
    let a = hensel_root(&f, &seed)?;

    let inner = Series::from_terms(
        field,
        vec![(0, a.clone()), (1, field.one(modulus)?)],
        modulus,
    )?;
    let conj = s.compose(&inner, None)?;
    let a_series = Series::constant(field, &a, conj.modulus())?;
    let s_a = conj.sub(&a_series)?;
    let map = validate_finite_height(&s_a)?;
    Ok((a, map))
}
