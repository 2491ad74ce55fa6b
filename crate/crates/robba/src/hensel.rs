//! Dense polynomials over O_K and Hensel root refinement.

use crate::error::{Error, Result};
use crate::field::{Field, FieldElement};

/// A dense polynomial c_0 + c_1 T + ... over a p-adic field.
#[derive(Clone, Debug)]
pub struct Poly {
    pub coeffs: Vec<FieldElement>,
}

impl Poly {
    pub fn new(coeffs: Vec<FieldElement>) -> Poly {
        Poly { coeffs }
    }

    pub fn from_i128(field: &Field, coeffs: &[i128], prec: i64) -> Result<Poly> {
        let coeffs = coeffs
            .iter()
            .map(|&c| field.from_i128(c, prec))
            .collect::<Result<Vec<_>>>()?;
        Ok(Poly { coeffs })
    }

    pub fn eval(&self, x: &FieldElement) -> Result<FieldElement> {
        let field = x.field();
        let mut acc = field.zero(field.max_prec())?;
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(x)?.add(c)?;
        }
        Ok(acc)
    }

    pub fn derivative(&self) -> Result<Poly> {
        let mut coeffs = Vec::new();
        for (k, c) in self.coeffs.iter().enumerate().skip(1) {
            coeffs.push(c.mul_i64(k as i64)?);
        }
        Ok(Poly { coeffs })
    }
}

/// Newton refinement of an approximate root. Requires the Hensel criterion
/// val f(x0) > 2 val f'(x0) at the available precision; converges
/// quadratically and stops once f(x) is indistinguishable from zero.
pub fn hensel_root(f: &Poly, x0: &FieldElement) -> Result<FieldElement> {
    let fx = f.eval(x0)?;
    let df = f.derivative()?;
    let dfx = df.eval(x0)?;
    let vf = match fx.val_pi() {
        Ok(v) => v,
        // Already a root at the available precision.
        Err(_) => return Ok(x0.clone()),
    };
    let vdf = match dfx.val_pi() {
        Ok(v) => v,
        Err(_) => return Err(Error::HenselCriterionFails),
    };
    if vf <= 2 * vdf {
        return Err(Error::HenselCriterionFails);
    }
    let mut x = x0.clone();
    for _ in 0..64 {
        let fx = f.eval(&x)?;
        if fx.is_zero_at_prec() {
            return Ok(x);
        }
        let dfx = df.eval(&x)?;
        let step = fx.div(&dfx)?;
        let next = x.sub(&step)?;
        if next.sub(&x)?.is_zero_at_prec() {
            return Ok(next);
        }
        x = next;
    }
    // Valuation of f(x) stopped improving before reaching the precision:
    // cannot happen when the criterion holds.
    Err(Error::HenselCriterionFails)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_of_minus_two() {
        // T^2 + 2 over Z_3, seed 1. Exhaustive search of squares mod 9 gives
        // the expected residue: 4^2 = 16 = -2 mod 9, and no other residue
        // congruent to 1 mod 3 works.
        let f3 = Field::new(3, None).unwrap();
        let f = Poly::from_i128(&f3, &[2, 0, 1], 12).unwrap();
        let mut expected_mod9 = None;
        for a in 0..9i128 {
            if a % 3 == 1 && (a * a + 2) % 9 == 0 {
                expected_mod9 = Some(a);
            }
        }
        assert_eq!(expected_mod9, Some(4));
        let x0 = f3.from_i128(1, 12).unwrap();
        let r = hensel_root(&f, &x0).unwrap();
        assert_eq!(r.residues()[0] % 9, 4);
        assert!(f.eval(&r).unwrap().is_zero_at_prec());
    }

    #[test]
    fn fixed_point_polynomial_root() {
        // T^2 + 2T + 3 over Z_3, seed 0: exhaustive search mod 9 certifies 3.
        let f3 = Field::new(3, None).unwrap();
        let f = Poly::from_i128(&f3, &[3, 2, 1], 12).unwrap();
        let mut expected = None;
        for a in 0..9i128 {
            if a % 3 == 0 && (a * a + 2 * a + 3) % 9 == 0 {
                expected = Some(a);
            }
        }
        assert_eq!(expected, Some(3));
        let x0 = f3.from_i128(0, 12).unwrap();
        let r = hensel_root(&f, &x0).unwrap();
        assert_eq!(r.residues()[0] % 9, 3);
        assert!(f.eval(&r).unwrap().is_zero_at_prec());
    }

    #[test]
    fn criterion_failure() {
        // T^2 - 3 at x0 = 0: f'(0) = 0.
        let f3 = Field::new(3, None).unwrap();
        let f = Poly::from_i128(&f3, &[-3, 0, 1], 12).unwrap();
        let x0 = f3.from_i128(0, 12).unwrap();
        assert!(matches!(hensel_root(&f, &x0), Err(Error::HenselCriterionFails)));
    }
}
